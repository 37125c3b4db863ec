//! Control dependence from post-dominators.

use super::dominators::immediate_post_dominators;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlDependence {
    pub ipdom: Vec<Option<usize>>,
    /// `deps[n]` lists the edges `(s, t)` that node `n` is control-dependent on.
    pub deps: Vec<Vec<(usize, usize)>>,
    /// Nodes that cannot reach the exit.
    pub disconnected: Vec<usize>,
}

/// Node `n` depends on edge `s -> t` iff `n` post-dominates `t` (reflexively)
/// and does not strictly post-dominate `s`. Only edges leaving nodes with two
/// or more successors are considered.
pub fn control_dependencies(succ: &[Vec<usize>], exit: usize) -> ControlDependence {
    let ipdom = immediate_post_dominators(succ, exit);
    let n = succ.len();
    let disconnected: Vec<usize> = (0..n).filter(|&v| v != exit && ipdom[v].is_none()).collect();
    let mut deps = vec![Vec::new(); n];
    for (s, ss) in succ.iter().enumerate() {
        if ss.len() < 2 || ipdom[s].is_none() {
            continue;
        }
        let stop = ipdom[s];
        for &t in ss {
            let mut runner = Some(t);
            while let Some(r) = runner {
                if Some(r) == stop || (r != exit && ipdom[r].is_none()) {
                    break;
                }
                if !deps[r].contains(&(s, t)) {
                    deps[r].push((s, t));
                }
                runner = ipdom[r];
            }
        }
    }
    ControlDependence {
        ipdom,
        deps,
        disconnected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn if_then_else() {
        // 0 -> {1, 2} -> 3 -> exit 4
        let succ = vec![vec![1, 2], vec![3], vec![3], vec![4], vec![]];
        let cd = control_dependencies(&succ, 4);
        assert_eq!(cd.deps[1], vec![(0, 1)]);
        assert_eq!(cd.deps[2], vec![(0, 2)]);
        assert!(cd.deps[3].is_empty());
        assert!(cd.disconnected.is_empty());
    }

    #[test]
    fn nested_if() {
        // 0 -> {1, 4}; 1 -> {2, 3}; 2 -> 3; 3 -> 4; 4 -> exit 5
        let succ = vec![vec![1, 4], vec![2, 3], vec![3], vec![4], vec![5], vec![]];
        let cd = control_dependencies(&succ, 5);
        assert_eq!(cd.deps[1], vec![(0, 1)]);
        assert_eq!(cd.deps[2], vec![(1, 2)]);
        assert_eq!(cd.deps[3], vec![(0, 1)]);
    }

    #[test]
    fn loop_header_depends_on_itself() {
        // 0 -> 1; 1 -> {2, 3}; 2 -> 1; 3 -> exit 4
        let succ = vec![vec![1], vec![2, 3], vec![1], vec![4], vec![]];
        let cd = control_dependencies(&succ, 4);
        assert_eq!(cd.deps[1], vec![(1, 2)]);
        assert_eq!(cd.deps[2], vec![(1, 2)]);
    }

    #[test]
    fn infinite_loop_is_disconnected() {
        let succ = vec![vec![1, 2], vec![1], vec![3], vec![]];
        let cd = control_dependencies(&succ, 3);
        assert_eq!(cd.disconnected, vec![1]);
        assert!(cd.deps[1].is_empty());
    }
}
