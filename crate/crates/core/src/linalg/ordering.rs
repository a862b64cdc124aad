use std::collections::VecDeque;

/// Reverse Cuthill–McKee ordering of a symmetric adjacency structure.
///
/// Returns `perm` with `perm[new] = old`. Each connected component is started
/// from a pseudo-peripheral node; ties are broken by degree, then index, so the
/// result is deterministic.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adj, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let ecc = level.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
    (level, ecc)
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut node = seed;
    let (mut level, mut ecc) = bfs_levels(adj, node);
    for _ in 0..8 {
        // lowest-degree node of the last level
        let candidate = (0..adj.len())
            .filter(|&v| level[v] == ecc)
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap_or(node);
        let (l2, e2) = bfs_levels(adj, candidate);
        if e2 <= ecc {
            break;
        }
        node = candidate;
        level = l2;
        ecc = e2;
    }
    node
}

/// Maximum `|i - j|` over the edges of `adj` in the permuted numbering.
pub fn bandwidth(adj: &[Vec<usize>], perm: &[usize]) -> usize {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    adj.iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
        .map(|(i, j)| inv[i].abs_diff(inv[j]))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_gets_unit_bandwidth() {
        // a path labelled in scrambled order
        let labels = [3usize, 0, 4, 1, 5, 2];
        let mut adj = vec![Vec::new(); 6];
        for w in labels.windows(2) {
            adj[w[0]].push(w[1]);
            adj[w[1]].push(w[0]);
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut sorted = perm.clone();
        sorted.sort();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
        assert_eq!(bandwidth(&adj, &perm), 1);
    }

    #[test]
    fn handles_disconnected_components() {
        let adj = vec![vec![1], vec![0], vec![], vec![4], vec![3]];
        let perm = reverse_cuthill_mckee(&adj);
        assert_eq!(perm.len(), 5);
        assert_eq!(bandwidth(&adj, &perm), 1);
    }
}
