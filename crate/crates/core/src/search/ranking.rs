//! Preference sorting, Pareto fronts and sub-vector distance.

use std::cmp::Ordering;

use rand::Rng;

use crate::cdg::BranchId;
use crate::fitness::{DistanceVector, Fitness};

/// Objective values of one member restricted to `targets`.
pub fn project(v: &DistanceVector, targets: &[BranchId]) -> Vec<Fitness> {
    targets.iter().map(|&b| v.get(b)).collect()
}

/// `a` dominates `b`: no worse anywhere and strictly better somewhere.
pub fn dominates(a: &[Fitness], b: &[Fitness]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Greater => return false,
            Ordering::Less => strictly = true,
            Ordering::Equal => {}
        }
    }
    strictly
}

/// Splits `members` (indices into `vectors`) into the preferred front and
/// the rest. For each target the minimizer of its objective is preferred,
/// ties going to the shorter test case and then to the earlier member.
pub fn preference_sort(
    members: &[usize],
    vectors: &[DistanceVector],
    lengths: &[usize],
    targets: &[BranchId],
) -> (Vec<usize>, Vec<usize>) {
    let mut preferred = vec![false; vectors.len()];
    for &b in targets {
        let best = members
            .iter()
            .copied()
            .min_by_key(|&m| (vectors[m].get(b), lengths[m], m));
        if let Some(m) = best {
            preferred[m] = true;
        }
    }
    members.iter().partition(|&&m| preferred[m])
}

/// Fast nondominated sorting over `members`, fronts in ascending member order.
pub fn nondominated_sort(members: &[usize], vectors: &[DistanceVector], targets: &[BranchId]) -> Vec<Vec<usize>> {
    let proj: Vec<Vec<Fitness>> = members.iter().map(|&m| project(&vectors[m], targets)).collect();
    let n = members.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&proj[i], &proj[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&proj[j], &proj[i]) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current.iter().map(|&i| members[i]).collect());
        current = next;
    }
    fronts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("vectors of length {0} and {1} cannot be compared")]
pub struct LengthMismatch(pub usize, pub usize);

/// Number of components where `v1` is strictly worse than `v2`.
pub fn subvector_distance(v1: &[Fitness], v2: &[Fitness]) -> Result<usize, LengthMismatch> {
    if v1.len() != v2.len() {
        return Err(LengthMismatch(v1.len(), v2.len()));
    }
    Ok(v1.iter().zip(v2).filter(|(a, b)| a > b).count())
}

/// Orders `front` greedily: each step takes the member whose largest
/// sub-vector distance to anything already selected is smallest. Returns
/// `(member, score)` pairs in pick order.
pub fn diversity_order(
    front: &[usize],
    selected: &[usize],
    vectors: &[DistanceVector],
    targets: &[BranchId],
) -> Vec<(usize, usize)> {
    let proj = |m: usize| project(&vectors[m], targets);
    let mut chosen: Vec<Vec<Fitness>> = selected.iter().map(|&m| proj(m)).collect();
    let mut pending: Vec<(usize, Vec<Fitness>, usize)> = front.iter().map(|&m| (m, proj(m), 0)).collect();
    for (_, v, score) in pending.iter_mut() {
        *score = chosen.iter().map(|c| subvector_distance(v, c).unwrap_or(0)).max().unwrap_or(0);
    }
    let mut out = Vec::with_capacity(front.len());
    while !pending.is_empty() {
        let pick = (0..pending.len())
            .min_by_key(|&i| (pending[i].2, pending[i].0))
            .expect("non-empty");
        let (m, v, score) = pending.swap_remove(pick);
        for (_, w, s) in pending.iter_mut() {
            *s = (*s).max(subvector_distance(w, &v).unwrap_or(0));
        }
        chosen.push(v);
        out.push((m, score));
    }
    out
}

/// Tournament over `(front, score)` ranks; lower wins, ties to the lower index.
pub fn tournament<R: Rng + ?Sized>(ranks: &[(usize, usize)], size: usize, rng: &mut R) -> usize {
    (0..size.max(1))
        .map(|_| rng.gen_range(0..ranks.len()))
        .min_by_key(|&i| (ranks[i], i))
        .expect("tournament size is positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::{normalize, NormalizedDistance};
    use crate::U512;

    fn fit(x: u64) -> Fitness {
        Fitness {
            level: 0,
            distance: normalize(U512::from(x)),
        }
    }

    fn vec_of(xs: &[u64]) -> DistanceVector {
        DistanceVector(xs.iter().map(|&x| fit(x)).collect())
    }

    #[test]
    fn subvector_examples() {
        let v = |xs: &[u64]| xs.iter().map(|&x| fit(x)).collect::<Vec<_>>();
        assert_eq!(subvector_distance(&v(&[1, 1]), &v(&[1, 1])), Ok(0));
        assert_eq!(subvector_distance(&v(&[1, 1]), &v(&[0, 0])), Ok(2));
        assert_eq!(subvector_distance(&v(&[0, 2, 1]), &v(&[1, 1, 1])), Ok(1));
        assert_eq!(subvector_distance(&v(&[0]), &v(&[0, 1])), Err(LengthMismatch(1, 2)));
    }

    #[test]
    fn preference_prefers_shorter_on_ties() {
        let vectors = vec![vec_of(&[3]), vec_of(&[3])];
        let (f0, rest) = preference_sort(&[0, 1], &vectors, &[5, 3], &[0]);
        assert_eq!((f0, rest), (vec![1], vec![0]));
    }

    #[test]
    fn preference_dominating_case_alone() {
        let vectors = vec![vec_of(&[1, 1, 1]), vec_of(&[0, 0, 0]), vec_of(&[2, 0, 3])];
        let (f0, _) = preference_sort(&[0, 1, 2], &vectors, &[3, 3, 3], &[0, 1, 2]);
        assert_eq!(f0, vec![1]);
    }

    #[test]
    fn fronts_of_simple_vectors() {
        let vectors = vec![vec_of(&[0, 1]), vec_of(&[1, 0]), vec_of(&[0, 0]), vec_of(&[2, 2])];
        let fronts = nondominated_sort(&[0, 1, 2, 3], &vectors, &[0, 1]);
        assert_eq!(fronts, vec![vec![2], vec![0, 1], vec![3]]);
        let unreached = Fitness {
            level: 2,
            distance: NormalizedDistance::ONE,
        };
        assert!(dominates(&[fit(7)], &[unreached]));
    }

    #[test]
    fn diversity_prefers_least_dominated() {
        let vectors = vec![vec_of(&[0, 0]), vec_of(&[5, 5]), vec_of(&[0, 5])];
        let order = diversity_order(&[1, 2], &[0], &vectors, &[0, 1]);
        assert_eq!(order[0].0, 2);
        assert_eq!(order, vec![(2, 1), (1, 2)]);
    }
}
