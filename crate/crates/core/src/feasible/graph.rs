use nalgebra::DMatrix;

use crate::{Error, Result};

/// Adjacency lists of the directed graph with an edge `i -> j` for every
/// nonzero off-diagonal entry `(i, j)`.
fn adjacency(a: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    (0..n).map(|i| (0..n).filter(|&j| j != i && a[(i, j)] != 0.0).collect()).collect()
}

fn reverse(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (i, out) in adj.iter().enumerate() {
        for &j in out {
            rev[j].push(i);
        }
    }
    rev
}

/// Nodes reachable from `start`, in order of first visit.
fn reachable(adj: &[Vec<usize>], start: usize, seen: &mut [bool]) -> Vec<usize> {
    let mut order = Vec::new();
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        order.push(u);
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    order
}

/// Strong connectivity test by two reachability passes from node 0, one on
/// the graph and one on its reverse.
pub fn check_irreducible(a0: &DMatrix<f64>) -> bool {
    let n = a0.nrows();
    if n <= 1 {
        return true;
    }
    let adj = adjacency(a0);
    let mut seen = vec![false; n];
    if reachable(&adj, 0, &mut seen).len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    reachable(&reverse(&adj), 0, &mut seen).len() == n
}

/// Strongly connected components (Kosaraju), each sorted, listed in order of
/// their smallest node. Node ids are 0-based.
pub fn strongly_connected_components(a0: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = a0.nrows();
    let adj = adjacency(a0);

    // First pass: iterative DFS recording finishing order.
    let mut finished = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (u, next) = *top;
            if let Some(&v) = adj[u].get(next) {
                top.1 += 1;
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                finished.push(u);
                stack.pop();
            }
        }
    }

    // Second pass on the reverse graph in decreasing finishing time.
    let rev = reverse(&adj);
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for &root in finished.iter().rev() {
        if !seen[root] {
            let mut comp = reachable(&rev, root, &mut seen);
            comp.sort_unstable();
            components.push(comp);
        }
    }
    components.sort_by_key(|c| c[0]);
    components
}

/// [`check_irreducible`] as a hard precondition, reporting the components.
pub fn require_irreducible(a0: &DMatrix<f64>) -> Result<()> {
    if check_irreducible(a0) {
        Ok(())
    } else {
        Err(Error::Reducible { components: strongly_connected_components(a0) })
    }
}
