//! Effect size and rank-sum test for comparing run distributions.

use std::cmp::Ordering;

use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("rank-sum test needs at least 3 observations per sample")]
    TooFewObservations,
}

/// Vargha–Delaney Â12: probability that a draw from `xs` beats one from
/// `ys`, ties counting half.
pub fn vargha_delaney_a12(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut wins = 0.0;
    for x in xs {
        for y in ys {
            match x.partial_cmp(y) {
                Some(Ordering::Greater) => wins += 1.0,
                Some(Ordering::Equal) => wins += 0.5,
                _ => {}
            }
        }
    }
    Ok(wins / (xs.len() * ys.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EffectSize {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectSize {
    /// Magnitude from the cuts 0.56, 0.64 and 0.71, applied symmetrically
    /// around 0.5.
    pub fn of(a12: f64) -> Self {
        let a = a12.max(1.0 - a12);
        if a >= 0.71 {
            EffectSize::Large
        } else if a >= 0.64 {
            EffectSize::Medium
        } else if a >= 0.56 {
            EffectSize::Small
        } else {
            EffectSize::Negligible
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EffectSize::Negligible => "negligible",
            EffectSize::Small => "small",
            EffectSize::Medium => "medium",
            EffectSize::Large => "large",
        }
    }
}

/// Midranks (1-based) of the pooled sample, plus the tie groups' sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon rank-sum (Mann–Whitney U) p-value from the normal
/// approximation with tie correction and continuity correction.
pub fn wilcoxon_rank_sum(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.len() < 3 || ys.len() < 3 {
        return Err(StatsError::TooFewObservations);
    }
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r1: f64 = ranks[..xs.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let u2 = n1 * n2 - u1;
    let u = u1.max(u2);
    let n = n1 + n2;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / (n * (n - 1.0));
    let sigma = (n1 * n2 / 12.0 * ((n + 1.0) - tie_term)).sqrt();
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let z = (u - n1 * n2 / 2.0 - 0.5) / sigma;
    let p = erfc(z / std::f64::consts::SQRT_2);
    Ok(p.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a12_examples() {
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), Ok(0.0));
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0], &[1.0, 2.0]), Ok(0.5));
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0], &[1.0, 3.0]), Ok(0.375));
        assert_eq!(vargha_delaney_a12(&[], &[1.0]), Err(StatsError::EmptySample));
    }

    #[test]
    fn effect_labels() {
        assert_eq!(EffectSize::of(0.5), EffectSize::Negligible);
        assert_eq!(EffectSize::of(0.6), EffectSize::Small);
        assert_eq!(EffectSize::of(0.3), EffectSize::Medium);
        assert_eq!(EffectSize::of(1.0), EffectSize::Large);
    }

    #[test]
    fn rank_sum_examples() {
        let same = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(wilcoxon_rank_sum(&same, &same), Ok(1.0));
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = (11..=20).map(f64::from).collect();
        assert!(wilcoxon_rank_sum(&xs, &ys).unwrap() < 0.001);
        assert_eq!(wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0, 5.0]), Err(StatsError::TooFewObservations));
        assert_eq!(wilcoxon_rank_sum(&[1.0; 3], &[1.0; 3]), Ok(1.0));
    }
}
