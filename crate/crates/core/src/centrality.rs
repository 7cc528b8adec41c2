//! Rumor centrality and the BFS likelihood heuristic for loopy graphs.
//!
//! On a tree with `N` nodes, `R(v) = N! / Π_u T^v_u`, where `T^v_u` is the
//! size of the subtree under `u` when the tree hangs from `v`. Values are kept
//! as natural logarithms because `N!` overflows quickly.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::diffusion::Snapshot;
use crate::error::{invalid_input, Error, Result};
use crate::graph::NodeId;

/// Subtree sizes of a tree hung from `root` (local indices).
#[derive(Clone, Debug)]
pub struct SubtreeSizes {
    pub root: usize,
    pub sizes: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    /// Preorder; every parent precedes its children.
    pub order: Vec<usize>,
}

pub fn subtree_sizes(adj: &[Vec<usize>], root: usize) -> SubtreeSizes {
    let n = adj.len();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(u) = stack.pop() {
        order.push(u);
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(u);
                stack.push(w);
            }
        }
    }
    let mut sizes = vec![1usize; n];
    for &u in order.iter().rev() {
        if let Some(p) = parent[u] {
            sizes[p] += sizes[u];
        }
    }
    SubtreeSizes {
        root,
        sizes,
        parent,
        order,
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn check_tree(adj: &[Vec<usize>]) -> Result<()> {
    let n = adj.len();
    if n == 0 {
        return Err(invalid_input("empty tree"));
    }
    let twice: usize = adj.iter().map(Vec::len).sum();
    if twice != 2 * (n - 1) {
        return Err(invalid_input(format!(
            "infected subgraph has {} edges on {n} nodes, not a tree",
            twice / 2
        )));
    }
    if subtree_sizes(adj, 0).order.len() != n {
        return Err(invalid_input("infected subgraph is disconnected"));
    }
    Ok(())
}

/// `log R(v)` for every node of a tree given in local indices, in O(N).
pub fn tree_log_rumor_centralities(adj: &[Vec<usize>]) -> Result<Vec<f64>> {
    check_tree(adj)?;
    let n = adj.len();
    let st = subtree_sizes(adj, 0);
    let mut log_r = vec![0.0; n];
    log_r[0] = ln_factorial(n) - st.sizes.iter().map(|&s| (s as f64).ln()).sum::<f64>();
    for &u in st.order.iter().skip(1) {
        let p = st.parent[u].expect("non-root has a parent");
        let t = st.sizes[u] as f64;
        log_r[u] = log_r[p] + t.ln() - (n as f64 - t).ln();
    }
    Ok(log_r)
}

/// Direct evaluation `log N! − Σ_u log T^root_u`, one root at a time.
pub fn tree_log_rumor_centrality_at(adj: &[Vec<usize>], root: usize) -> f64 {
    let st = subtree_sizes(adj, root);
    ln_factorial(adj.len()) - st.sizes.iter().map(|&s| (s as f64).ln()).sum::<f64>()
}

/// Counts the orderings of the tree's nodes that start at `root` and list
/// every node after its parent. Exponential; limited to 10 nodes.
pub fn brute_force_rumor_centrality(adj: &[Vec<usize>], root: usize) -> Result<u64> {
    let n = adj.len();
    if n > 10 {
        return Err(Error::TooLarge(n));
    }
    check_tree(adj)?;
    fn count(adj: &[Vec<usize>], used: u32, full: u32, memo: &mut HashMap<u32, u64>) -> u64 {
        if used == full {
            return 1;
        }
        if let Some(&c) = memo.get(&used) {
            return c;
        }
        let mut total = 0;
        for (v, list) in adj.iter().enumerate() {
            let bit = 1u32 << v;
            if used & bit == 0 && list.iter().any(|&w| used & (1 << w) != 0) {
                total += count(adj, used | bit, full, memo);
            }
        }
        memo.insert(used, total);
        total
    }
    let full = (1u32 << n) - 1;
    Ok(count(adj, 1 << root, full, &mut HashMap::new()))
}

/// Log-likelihood scores over the infected nodes with the selected center.
#[derive(Clone, Debug, Serialize)]
pub struct CentralityTable {
    nodes: Vec<NodeId>,
    log_scores: Vec<f64>,
    center: NodeId,
    #[serde(skip)]
    index: HashMap<NodeId, usize>,
}

const TIE_EPS: f64 = 1e-9;

fn beats(a: f64, b: f64) -> bool {
    a > b + TIE_EPS * b.abs().max(1.0)
}

impl CentralityTable {
    pub fn new(nodes: Vec<NodeId>, log_scores: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), log_scores.len());
        assert!(!nodes.is_empty(), "empty centrality table");
        let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut table = CentralityTable {
            center: nodes[0],
            nodes,
            log_scores,
            index,
        };
        table.center = table
            .argmax_within(table.nodes.clone())
            .expect("non-empty table");
        table
    }

    /// The maximizing node; ties (within 1e-9 relative) go to the lowest id.
    pub fn center(&self) -> NodeId {
        self.center
    }

    pub fn score(&self, v: NodeId) -> Option<f64> {
        self.index.get(&v).map(|&i| self.log_scores[i])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.nodes.iter().copied().zip(self.log_scores.iter().copied())
    }

    /// Nodes by descending score, ties by ascending id.
    pub fn ranked(&self) -> Vec<(NodeId, f64)> {
        let mut out: Vec<_> = self.iter().collect();
        out.sort_by(|a, b| {
            if beats(a.1, b.1) {
                std::cmp::Ordering::Less
            } else if beats(b.1, a.1) {
                std::cmp::Ordering::Greater
            } else {
                a.0.cmp(&b.0)
            }
        });
        out
    }

    /// Highest-scoring node among `candidates`, lowest id on ties. Nodes
    /// missing from the table are ignored.
    pub fn argmax_within(&self, candidates: impl IntoIterator<Item = NodeId>) -> Option<NodeId> {
        let mut sorted: Vec<(NodeId, f64)> = candidates
            .into_iter()
            .filter_map(|v| self.score(v).map(|s| (v, s)))
            .collect();
        sorted.sort_by_key(|&(v, _)| v);
        let mut best: Option<(NodeId, f64)> = None;
        for (v, s) in sorted {
            match best {
                Some((_, bs)) if !beats(s, bs) => {}
                _ => best = Some((v, s)),
            }
        }
        best.map(|(v, _)| v)
    }
}

/// Rumor centrality of every infected node. The infected subgraph must be
/// a tree.
pub fn log_rumor_centralities(snapshot: &Snapshot) -> Result<CentralityTable> {
    let log_r = tree_log_rumor_centralities(snapshot.local_adjacency())?;
    Ok(CentralityTable::new(snapshot.infected().to_vec(), log_r))
}

/// BFS heuristic for graphs with cycles: for each infected `v`, the score is
/// `log P(σ_v | v) + log R(v, T_b(v))`, where `T_b(v)` is the BFS tree of the
/// infected subgraph from `v` and `σ_v` its discovery order. `P(σ | v)` is
/// the SI probability of infecting in that order: the product over steps of
/// (edges from the infected prefix into the next node) / (all boundary edges
/// of the prefix in the underlying graph).
pub fn general_graph_scores(snapshot: &Snapshot) -> Result<CentralityTable> {
    let adj = snapshot.local_adjacency();
    let n = adj.len();
    if subtree_sizes(adj, 0).order.len() != n {
        return Err(invalid_input("infected subgraph is disconnected"));
    }
    let graph = snapshot.graph();
    let degrees: Vec<usize> = snapshot.infected().iter().map(|&v| graph.degree(v)).collect();
    let ln_nf = ln_factorial(n);
    let mut pos = vec![usize::MAX; n];
    let mut scores = Vec::with_capacity(n);
    for root in 0..n {
        let (order, parent) = bfs_tree(adj, root);
        for (k, &u) in order.iter().enumerate() {
            pos[u] = k;
        }
        let mut sizes = vec![1usize; n];
        for &u in order.iter().rev() {
            if let Some(p) = parent[u] {
                sizes[p] += sizes[u];
            }
        }
        let log_r = ln_nf - sizes.iter().map(|&s| (s as f64).ln()).sum::<f64>();

        let mut log_p = 0.0;
        let mut boundary = degrees[root];
        for (k, &u) in order.iter().enumerate().skip(1) {
            let into = adj[u].iter().filter(|&&w| pos[w] < k).count();
            log_p += (into as f64).ln() - (boundary as f64).ln();
            boundary = boundary - into + (degrees[u] - into);
        }
        scores.push(log_p + log_r);
    }
    Ok(CentralityTable::new(snapshot.infected().to_vec(), scores))
}

/// BFS over local adjacency; neighbors are visited in ascending node id.
pub(crate) fn bfs_tree(adj: &[Vec<usize>], root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(u);
                queue.push_back(w);
            }
        }
    }
    (order, parent)
}

/// Likelihood used by the estimators: exact rumor centrality when the
/// infected subgraph is a tree, the BFS heuristic otherwise.
pub fn likelihood_table(snapshot: &Snapshot) -> Result<CentralityTable> {
    if snapshot.infected_is_tree() {
        log_rumor_centralities(snapshot)
    } else {
        general_graph_scores(snapshot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj_from(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    #[test]
    fn path_of_three() {
        let adj = adj_from(3, &[(0, 1), (1, 2)]);
        let r: Vec<f64> = tree_log_rumor_centralities(&adj)
            .unwrap()
            .iter()
            .map(|x| x.exp())
            .collect();
        assert!((r[0] - 1.0).abs() < 1e-12);
        assert!((r[1] - 2.0).abs() < 1e-12);
        assert!((r[2] - 1.0).abs() < 1e-12);
        assert_eq!(brute_force_rumor_centrality(&adj, 1).unwrap(), 2);
        assert_eq!(brute_force_rumor_centrality(&adj, 0).unwrap(), 1);
    }

    #[test]
    fn star_with_three_leaves() {
        let adj = adj_from(4, &[(0, 1), (0, 2), (0, 3)]);
        let r = tree_log_rumor_centralities(&adj).unwrap();
        assert!((r[0].exp() - 6.0).abs() < 1e-12);
        for leaf in &r[1..] {
            assert!((leaf.exp() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node() {
        let r = tree_log_rumor_centralities(&[vec![]]).unwrap();
        assert_eq!(r, vec![0.0]);
        assert_eq!(brute_force_rumor_centrality(&[vec![]], 0).unwrap(), 1);
    }

    #[test]
    fn rejects_non_trees() {
        let tri = adj_from(3, &[(0, 1), (1, 2), (2, 0)]);
        assert!(matches!(
            tree_log_rumor_centralities(&tri),
            Err(Error::InvalidInput(_))
        ));
        let big = adj_from(11, &(1..11).map(|i| (i - 1, i)).collect::<Vec<_>>());
        assert!(matches!(
            brute_force_rumor_centrality(&big, 0),
            Err(Error::TooLarge(11))
        ));
    }

    #[test]
    fn leaf_of_path_is_forced() {
        for n in 1..=10 {
            let adj = adj_from(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>());
            assert_eq!(brute_force_rumor_centrality(&adj, 0).unwrap(), 1);
        }
    }

    #[test]
    fn argmax_ties_go_to_lowest_id() {
        let t = CentralityTable::new(
            vec![NodeId(5), NodeId(2), NodeId(9)],
            vec![1.0, 1.0, 0.5],
        );
        assert_eq!(t.center(), NodeId(2));
        assert_eq!(t.argmax_within([NodeId(9), NodeId(5)]), Some(NodeId(5)));
        assert_eq!(t.argmax_within([NodeId(77)]), None);
        let ranked = t.ranked();
        assert_eq!(ranked[0].0, NodeId(2));
        assert_eq!(ranked[2].0, NodeId(9));
    }

    #[test]
    fn shifting_scores_keeps_argmax() {
        let scores = vec![0.3, 2.5, 1.7, 2.4];
        let nodes: Vec<NodeId> = (0..4).map(NodeId).collect();
        let a = CentralityTable::new(nodes.clone(), scores.clone());
        let b = CentralityTable::new(nodes, scores.iter().map(|s| s + 123.0).collect());
        assert_eq!(a.center(), b.center());
    }
}
