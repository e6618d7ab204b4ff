//! Generalized Büchi non-emptiness on an explicit graph: is there an infinite
//! path from an initial state visiting every goal set infinitely often?

/// Strongly connected components (iterative Tarjan). Returns the component id
/// of every node; ids are assigned in reverse topological order.
pub fn scc(n: usize, succ: &[Vec<u32>]) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let mut index = vec![NONE; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != NONE {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = call.len().checked_sub(1) {
            let (v, edge) = call[top];
            if edge < succ[v].len() {
                let w = succ[v][edge] as usize;
                call[top].1 += 1;
                if index[w] == NONE {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// True iff some path from an `init` node reaches a cycle that visits every
/// set in `goals`. An empty goal list only requires some cycle.
pub fn fair_lasso_exists(succ: &[Vec<u32>], init: &[bool], goals: &[Vec<bool>]) -> bool {
    let n = succ.len();
    // forward reachability from initial nodes
    let mut reach = init.to_vec();
    let mut work: Vec<usize> = (0..n).filter(|&s| init[s]).collect();
    while let Some(s) = work.pop() {
        for &t in &succ[s] {
            let t = t as usize;
            if !reach[t] {
                reach[t] = true;
                work.push(t);
            }
        }
    }
    let restricted: Vec<Vec<u32>> = (0..n)
        .map(|s| if reach[s] { succ[s].iter().copied().filter(|&t| reach[t as usize]).collect() } else { vec![] })
        .collect();
    let comp = scc(n, &restricted);
    let n_comp = comp.iter().filter(|&&c| c != usize::MAX).map(|&c| c + 1).max().unwrap_or(0);
    let mut nontrivial = vec![false; n_comp];
    let mut hits = vec![vec![false; goals.len()]; n_comp];
    for s in 0..n {
        if !reach[s] {
            continue;
        }
        let c = comp[s];
        if restricted[s].iter().any(|&t| comp[t as usize] == c) {
            nontrivial[c] = true;
        }
        for (g, set) in goals.iter().enumerate() {
            if set[s] {
                hits[c][g] = true;
            }
        }
    }
    (0..n_comp).any(|c| nontrivial[c] && hits[c].iter().all(|&h| h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_fair_cycles() {
        // 0 -> 1 -> 2 -> 1, 0 -> 3 (dead end)
        let succ = vec![vec![1, 3], vec![2], vec![1], vec![]];
        let init = vec![true, false, false, false];
        assert!(fair_lasso_exists(&succ, &init, &[]));
        assert!(fair_lasso_exists(&succ, &init, &[vec![false, false, true, false]]));
        assert!(!fair_lasso_exists(&succ, &init, &[vec![true, false, false, false]]));
        assert!(!fair_lasso_exists(&succ, &init, &[vec![false, false, false, true]]));
        let none = vec![false; 4];
        assert!(!fair_lasso_exists(&succ, &none, &[]));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        assert!(fair_lasso_exists(&[vec![0]], &[true], &[vec![true]]));
        assert!(!fair_lasso_exists(&[vec![]], &[true], &[]));
    }
}
