//! Per-branch objectives: branch distance, approach level, trace evaluation
//! and the archive of shortest covering test cases.

mod korel;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::cdg::{BranchId, Cdg, OffsetClass, Polarity, TraceMismatch};
use crate::chain::ExecutionTrace;
use crate::testgen::TestCase;

pub use korel::{effective_relation, korel_f, normalize, NormalizedDistance, Relation, K};

/// `al + d` for one branch, compared lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Fitness {
    pub level: u32,
    pub distance: NormalizedDistance,
}

impl Fitness {
    pub const COVERED: Fitness = Fitness {
        level: 0,
        distance: NormalizedDistance::ZERO,
    };

    pub fn is_covered(&self) -> bool {
        *self == Self::COVERED
    }

    pub fn as_f64(&self) -> f64 {
        self.level as f64 + self.distance.as_f64()
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level.cmp(&other.level).then(self.distance.cmp(&other.distance))
    }
}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One fitness per branch, indexed by branch id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct DistanceVector(pub Vec<Fitness>);

impl DistanceVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, branch: BranchId) -> Fitness {
        self.0[branch]
    }

    pub fn covered(&self) -> impl Iterator<Item = BranchId> + '_ {
        self.0.iter().enumerate().filter(|(_, f)| f.is_covered()).map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub vector: DistanceVector,
    pub traversed: Vec<bool>,
}

/// Folds traces of one test case into per-branch scores.
pub struct EvalAccumulator<'a> {
    cdg: &'a Cdg,
    reached: Vec<Option<NormalizedDistance>>,
    traversed: Vec<bool>,
}

impl<'a> EvalAccumulator<'a> {
    pub fn new(cdg: &'a Cdg) -> Self {
        let k = cdg.branch_count();
        EvalAccumulator {
            cdg,
            reached: vec![None; k],
            traversed: vec![false; k],
        }
    }

    /// Scores every JUMPI of a branching node the trace executes. Only
    /// runtime-code traces belong here; constructor traces run other code.
    pub fn absorb(&mut self, trace: &ExecutionTrace) -> Result<(), TraceMismatch> {
        let offs = &trace.executed_offsets;
        let obs = &trace.predicate_observations;
        let mut j = 0;
        for (i, &off) in offs.iter().enumerate() {
            let off = off as usize;
            if self.cdg.classify(off) == OffsetClass::Unknown {
                return Err(TraceMismatch { offset: off });
            }
            let Some(site) = self.cdg.site(off) else { continue };
            while j < obs.len() && obs[j].step < i {
                j += 1;
            }
            let operands = site.predicate.and_then(|p| {
                obs[..j]
                    .iter()
                    .rev()
                    .take_while(|o| o.step + site.block_len >= i)
                    .find(|o| o.comparison_offset == p.comparison_offset)
                    .map(|o| (p, o.a, o.b))
            });
            let followed = offs.get(i + 1).map(|&n| {
                if n as usize == off + 1 {
                    Polarity::Fallthrough
                } else {
                    Polarity::Taken
                }
            });
            for pol in [Polarity::Taken, Polarity::Fallthrough] {
                let b = site.branches[pol.index()];
                let d = if followed == Some(pol) {
                    self.traversed[b] = true;
                    NormalizedDistance::ZERO
                } else {
                    match operands {
                        Some((p, a, bb)) => {
                            let d = normalize(korel_f(p.kind, p.negations, pol, a, bb));
                            if d.is_zero() {
                                NormalizedDistance::half()
                            } else {
                                d
                            }
                        }
                        None => NormalizedDistance::half(),
                    }
                };
                let slot = &mut self.reached[b];
                *slot = Some(slot.map_or(d, |cur| cur.min(d)));
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Evaluation {
        let vector = (0..self.cdg.branch_count())
            .map(|b| {
                if self.traversed[b] {
                    Fitness::COVERED
                } else if let Some(d) = self.reached[b] {
                    Fitness { level: 0, distance: d }
                } else {
                    approach(self.cdg, b, &self.reached)
                }
            })
            .collect();
        Evaluation {
            vector: DistanceVector(vector),
            traversed: self.traversed,
        }
    }
}

/// Walks the control-parent chain to the nearest reached ancestor, counting
/// unreached sources; a chain that ends unreached counts the method entry too.
fn approach(cdg: &Cdg, branch: BranchId, reached: &[Option<NormalizedDistance>]) -> Fitness {
    let mut level = 1;
    let mut parent = cdg.branches[branch].control_parent;
    while let Some(p) = parent {
        if let Some(d) = reached[p] {
            return Fitness { level, distance: d };
        }
        level += 1;
        parent = cdg.branches[p].control_parent;
    }
    Fitness {
        level,
        distance: NormalizedDistance::ONE,
    }
}

/// Approach level of a branch given which branches were traversed: 0 when
/// its source was reached, otherwise the count of unsatisfied ancestors.
pub fn approach_level(cdg: &Cdg, branch: BranchId, reached: &[bool]) -> u32 {
    if reached[branch] {
        return 0;
    }
    let marks: Vec<Option<NormalizedDistance>> =
        reached.iter().map(|&r| r.then_some(NormalizedDistance::ZERO)).collect();
    approach(cdg, branch, &marks).level
}

/// Distance vector of a test case from the traces of its runtime calls.
pub fn evaluate_test_case(traces: &[ExecutionTrace], cdg: &Cdg) -> Result<Evaluation, TraceMismatch> {
    let mut acc = EvalAccumulator::new(cdg);
    for t in traces {
        acc.absorb(t)?;
    }
    Ok(acc.finish())
}

/// Shortest known covering test case per branch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Archive {
    best: BTreeMap<BranchId, TestCase>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `case` for each branch it covers when the slot is empty or
    /// the case is strictly shorter. Returns the branches that changed.
    pub fn update(&mut self, case: &TestCase, vector: &DistanceVector) -> Vec<BranchId> {
        let mut changed = Vec::new();
        for b in vector.covered() {
            let better = self.best.get(&b).is_none_or(|cur| case.len() < cur.len());
            if better {
                self.best.insert(b, case.clone());
                changed.push(b);
            }
        }
        changed
    }

    pub fn get(&self, branch: BranchId) -> Option<&TestCase> {
        self.best.get(&branch)
    }

    pub fn covers(&self, branch: BranchId) -> bool {
        self.best.contains_key(&branch)
    }

    pub fn covered_count(&self) -> usize {
        self.best.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BranchId, &TestCase)> {
        self.best.iter().map(|(&b, t)| (b, t))
    }

    /// Sum of archived test lengths.
    pub fn total_length(&self) -> usize {
        self.best.values().map(TestCase::len).sum()
    }
}
