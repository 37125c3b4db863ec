//! Lengauer–Tarjan immediate dominators with path compression.

const NONE: usize = usize::MAX;

/// Immediate dominator of every node reachable from `root`; `None` for the
/// root itself and for unreachable nodes.
pub fn immediate_dominators(succ: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let n = succ.len();
    let mut pred = vec![Vec::new(); n];
    for (v, ss) in succ.iter().enumerate() {
        for &w in ss {
            pred[w].push(v);
        }
    }

    // semi[v] holds the DFS number until it is replaced by the semidominator's.
    let mut semi = vec![NONE; n];
    let mut vertex = Vec::with_capacity(n);
    let mut parent = vec![NONE; n];
    semi[root] = 0;
    vertex.push(root);
    let mut stack = vec![(root, 0usize)];
    while let Some(top) = stack.last_mut() {
        let (v, i) = *top;
        if i < succ[v].len() {
            top.1 += 1;
            let w = succ[v][i];
            if semi[w] == NONE {
                parent[w] = v;
                semi[w] = vertex.len();
                vertex.push(w);
                stack.push((w, 0));
            }
        } else {
            stack.pop();
        }
    }

    let mut ancestor = vec![NONE; n];
    let mut label: Vec<usize> = (0..n).collect();
    let mut bucket = vec![Vec::new(); n];
    let mut idom = vec![NONE; n];

    for i in (1..vertex.len()).rev() {
        let w = vertex[i];
        for &v in &pred[w] {
            if semi[v] == NONE {
                continue;
            }
            let u = eval(v, &mut ancestor, &mut label, &semi);
            if semi[u] < semi[w] {
                semi[w] = semi[u];
            }
        }
        bucket[vertex[semi[w]]].push(w);
        let p = parent[w];
        ancestor[w] = p;
        for v in std::mem::take(&mut bucket[p]) {
            let u = eval(v, &mut ancestor, &mut label, &semi);
            idom[v] = if semi[u] < semi[v] { u } else { p };
        }
    }
    for &w in vertex.iter().skip(1) {
        if idom[w] != vertex[semi[w]] {
            idom[w] = idom[idom[w]];
        }
    }

    idom.into_iter()
        .enumerate()
        .map(|(v, d)| (v != root && d != NONE).then_some(d))
        .collect()
}

fn eval(v: usize, ancestor: &mut [usize], label: &mut [usize], semi: &[usize]) -> usize {
    if ancestor[v] == NONE {
        return v;
    }
    let mut path = Vec::new();
    let mut x = v;
    while ancestor[ancestor[x]] != NONE {
        path.push(x);
        x = ancestor[x];
    }
    for &x in path.iter().rev() {
        let a = ancestor[x];
        if semi[label[a]] < semi[label[x]] {
            label[x] = label[a];
        }
        ancestor[x] = ancestor[a];
    }
    label[v]
}

/// Immediate post-dominators: dominators of the reversed graph from `exit`.
pub fn immediate_post_dominators(succ: &[Vec<usize>], exit: usize) -> Vec<Option<usize>> {
    let mut rev = vec![Vec::new(); succ.len()];
    for (v, ss) in succ.iter().enumerate() {
        for &w in ss {
            rev[w].push(v);
        }
    }
    immediate_dominators(&rev, exit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond() {
        let succ = vec![vec![1, 2], vec![3], vec![3], vec![]];
        assert_eq!(immediate_dominators(&succ, 0), vec![None, Some(0), Some(0), Some(0)]);
        assert_eq!(
            immediate_post_dominators(&succ, 3),
            vec![Some(3), Some(3), Some(3), None]
        );
    }

    #[test]
    fn loop_with_exit() {
        // 0 -> 1 -> 2 -> 1, 1 -> 3
        let succ = vec![vec![1], vec![2, 3], vec![1], vec![]];
        assert_eq!(immediate_dominators(&succ, 0), vec![None, Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn unreachable_has_none() {
        let succ = vec![vec![1], vec![], vec![1]];
        assert_eq!(immediate_dominators(&succ, 0), vec![None, Some(0), None]);
    }

    #[test]
    fn classic_example() {
        // Classic Lengauer-Tarjan example graph, R=0 A=1 B=2 C=3 D=4
        // E=5 F=6 G=7 H=8 I=9 J=10 K=11 L=12.
        let succ = vec![
            vec![1, 2, 3],
            vec![4],
            vec![1, 4, 5],
            vec![6, 7],
            vec![12],
            vec![8],
            vec![9],
            vec![9, 10],
            vec![5, 11],
            vec![11],
            vec![9],
            vec![0, 9],
            vec![8],
        ];
        let idom = immediate_dominators(&succ, 0);
        let expect = [None, Some(0), Some(0), Some(0), Some(0), Some(0), Some(3), Some(3), Some(0), Some(0), Some(7), Some(0), Some(4)];
        assert_eq!(idom, expect.to_vec());
    }
}
