use std::collections::BTreeSet;

use crate::cdg::{BranchId, Cdg};
use crate::fitness::Archive;

/// Objectives under optimization and those already covered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TargetSet {
    pub active: BTreeSet<BranchId>,
    pub covered: BTreeSet<BranchId>,
}

impl TargetSet {
    /// Branches without a control parent.
    pub fn initial(cdg: &Cdg) -> Self {
        let mut t = TargetSet::default();
        update_targets(&mut t, &Archive::new(), cdg);
        t
    }

    pub fn active_vec(&self) -> Vec<BranchId> {
        self.active.iter().copied().collect()
    }
}

/// Moves archived branches to `covered` and activates every uncovered
/// branch whose control parent is covered or absent.
pub fn update_targets(targets: &mut TargetSet, archive: &Archive, cdg: &Cdg) {
    targets.covered.extend(archive.iter().map(|(b, _)| b));
    targets.active = (0..cdg.branch_count())
        .filter(|b| !targets.covered.contains(b))
        .filter(|&b| cdg.branches[b].control_parent.is_none_or(|p| targets.covered.contains(&p)))
        .collect();
}
