//! Branch distance for relational predicates.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::cdg::Polarity;
use crate::cfg::PredicateKind;
use crate::types::SIGN_BIT;
use crate::{U256, U512};

/// Distance added to unsatisfied strict relations so that a zero distance
/// always means the branch is taken.
pub const K: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Relation {
    pub fn negate(self) -> Self {
        match self {
            Relation::Lt => Relation::Ge,
            Relation::Ge => Relation::Lt,
            Relation::Gt => Relation::Le,
            Relation::Le => Relation::Gt,
            Relation::Eq => Relation::Ne,
            Relation::Ne => Relation::Eq,
        }
    }

    pub fn holds(self, a: U256, b: U256) -> bool {
        match self {
            Relation::Lt => a < b,
            Relation::Le => a <= b,
            Relation::Gt => a > b,
            Relation::Ge => a >= b,
            Relation::Eq => a == b,
            Relation::Ne => a != b,
        }
    }
}

/// The relation that must hold between `a` and `b` for the branch of the
/// given polarity to be followed.
pub fn effective_relation(kind: PredicateKind, negations: u32, polarity: Polarity) -> Relation {
    let base = match kind {
        PredicateKind::Lt | PredicateKind::Slt => Relation::Lt,
        PredicateKind::Gt | PredicateKind::Sgt => Relation::Gt,
        PredicateKind::Eq | PredicateKind::IsZero => Relation::Eq,
    };
    let flip = (negations % 2 == 1) ^ (polarity == Polarity::Fallthrough);
    if flip {
        base.negate()
    } else {
        base
    }
}

/// Signed operands are biased so unsigned order matches two's-complement order.
fn order_key(kind: PredicateKind, v: U256) -> U256 {
    if kind.is_signed() {
        v ^ SIGN_BIT
    } else {
        v
    }
}

/// Objective value of a predicate observation; zero iff the branch is taken.
pub fn korel_f(kind: PredicateKind, negations: u32, polarity: Polarity, a: U256, b: U256) -> U512 {
    let rel = effective_relation(kind, negations, polarity);
    let (a, b) = (order_key(kind, a), order_key(kind, b));
    if rel.holds(a, b) {
        return U512::zero();
    }
    let diff = |x: U256, y: U256| U512::from(x) - U512::from(y);
    let k = U512::from(K);
    match rel {
        Relation::Gt => diff(b, a) + k,
        Relation::Ge => diff(b, a),
        Relation::Lt => diff(a, b) + k,
        Relation::Le => diff(a, b),
        Relation::Eq => {
            if a > b {
                diff(a, b)
            } else {
                diff(b, a)
            }
        }
        Relation::Ne => k,
    }
}

/// `f / (f + 1)`, held as the objective value `f` itself.
///
/// The map is strictly increasing, so ordering by `f` is ordering by the
/// normalized value with no rounding at any operand width. `ONE` is the
/// limit for an unreached objective and exceeds every finite `f`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NormalizedDistance(U512);

impl NormalizedDistance {
    pub const ZERO: Self = NormalizedDistance(U512::zero());
    pub const ONE: Self = NormalizedDistance(U512::MAX);

    /// Distance used when a branch is reached but no operands are known.
    pub fn half() -> Self {
        normalize(U512::one())
    }

    /// The underlying objective value `f`.
    pub fn raw(self) -> U512 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn as_f64(self) -> f64 {
        if self == Self::ONE {
            return 1.0;
        }
        let f = u512_to_f64(self.0);
        f / (f + 1.0)
    }
}

fn u512_to_f64(v: U512) -> f64 {
    let bits = v.bits();
    if bits <= 64 {
        return v.low_u64() as f64;
    }
    let shift = bits - 64;
    (v >> shift).low_u64() as f64 * 2f64.powi(shift as i32)
}

impl fmt::Debug for NormalizedDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.as_f64())
    }
}

impl Serialize for NormalizedDistance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

/// Maps `f >= 0` into `[0, 1)`, strictly increasing for every `f < U512::MAX`.
pub fn normalize(f: U512) -> NormalizedDistance {
    NormalizedDistance(f.min(U512::MAX - U512::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(x: u64) -> U256 {
        U256::from(x)
    }

    #[test]
    fn gt_unsatisfied_adds_offset() {
        let f = korel_f(PredicateKind::Gt, 0, Polarity::Taken, u(3), u(5));
        assert_eq!(f, U512::from(3));
    }

    #[test]
    fn eq_satisfied_is_zero() {
        assert!(korel_f(PredicateKind::Eq, 0, Polarity::Taken, u(7), u(7)).is_zero());
    }

    #[test]
    fn ne_on_equal_operands_is_k() {
        assert_eq!(korel_f(PredicateKind::Eq, 1, Polarity::Taken, u(4), u(4)), U512::from(K));
        assert_eq!(korel_f(PredicateKind::Eq, 0, Polarity::Fallthrough, u(4), u(4)), U512::from(K));
    }

    #[test]
    fn signed_minus_one_is_less_than_zero() {
        assert!(korel_f(PredicateKind::Slt, 0, Polarity::Taken, U256::MAX, u(0)).is_zero());
        assert_eq!(korel_f(PredicateKind::Slt, 0, Polarity::Fallthrough, U256::MAX, u(0)), U512::from(1));
    }

    #[test]
    fn boundary_values_do_not_overflow() {
        let f = korel_f(PredicateKind::Gt, 0, Polarity::Taken, u(0), U256::MAX);
        assert_eq!(f, U512::from(U256::MAX) + U512::one());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(U512::zero()), NormalizedDistance::ZERO);
        let two_thirds = normalize(U512::from(2)).as_f64();
        assert!((two_thirds - 2.0 / 3.0).abs() < 1e-12);
        let big = normalize(U512::exp10(30));
        assert!(big < NormalizedDistance::ONE);
        assert!(big > normalize(U512::exp10(29)));
        assert!((NormalizedDistance::half().as_f64() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_strictly_monotone_near_the_top() {
        let top = U512::from(U256::MAX) + U512::one();
        assert!(normalize(top) > normalize(top - U512::one()));
    }
}
