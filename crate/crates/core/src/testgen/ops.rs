use rand::Rng;

use super::{Generator, TestCase};

/// Single-point crossover with the cut after `c` statements of `p1` and `d`
/// of `p2`. Both cuts must lie after the constructor.
pub fn crossover_at(p1: &TestCase, p2: &TestCase, c: usize, d: usize, max_statements: usize) -> (TestCase, TestCase) {
    debug_assert!((1..=p1.len()).contains(&c) && (1..=p2.len()).contains(&d));
    let join = |head: &TestCase, h: usize, tail: &TestCase, t: usize| {
        let mut statements: Vec<_> = head.statements[..h].iter().chain(&tail.statements[t..]).cloned().collect();
        statements.truncate(max_statements);
        TestCase { statements }
    };
    (join(p1, c, p2, d), join(p2, d, p1, c))
}

/// Crossover with independent cut points, constrained so that both
/// children keep at least two statements.
pub fn crossover<R: Rng + ?Sized>(p1: &TestCase, p2: &TestCase, max_statements: usize, rng: &mut R) -> (TestCase, TestCase) {
    if p1 == p2 {
        return (p1.clone(), p2.clone());
    }
    let (n1, n2) = (p1.len(), p2.len());
    let c = rng.gen_range(1..=n1);
    // |c1| = c + n2 - d >= 2 and |c2| = d + n1 - c >= 2.
    let lo = 1.max((c + 2).saturating_sub(n1));
    let hi = n2.min(c + n2 - 2);
    let d = rng.gen_range(lo..=hi);
    crossover_at(p1, p2, c, d, max_statements)
}

/// Remove, change and insert, each firing with probability `1/len` per
/// position. The constructor is never removed and the length stays within
/// `[2, max_statements]`.
pub fn mutate<R: Rng + ?Sized>(t: &TestCase, gen: &Generator<'_>, rng: &mut R) -> TestCase {
    let mut out = t.clone();
    let n = t.len();
    let p = 1.0 / n as f64;
    for i in (1..n).rev() {
        if out.len() > 2 && rng.gen_bool(p) {
            out.statements.remove(i);
        }
    }
    for s in out.statements.iter_mut() {
        if rng.gen_bool(p) {
            gen.change(s, rng);
        }
    }
    for _ in 0..n {
        if out.len() < gen.config.max_statements && rng.gen_bool(p) {
            let at = rng.gen_range(1..=out.len());
            out.statements.insert(at, gen.random_statement(rng));
        }
    }
    out
}
