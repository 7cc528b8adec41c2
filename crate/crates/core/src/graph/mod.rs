//! Graph representations used by the diffusion and query layers.
//!
//! Two shapes are supported: a finite simple undirected graph with dense
//! node ids, and an infinite `d`-regular tree that is materialized lazily as
//! neighbors are requested.

mod edge_list;
mod generators;

use std::borrow::Cow;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};

pub use edge_list::{load_edge_list, parse_edge_list, EdgeListStats};
pub use generators::{
    make_erdos_renyi, make_galton_watson, make_galton_watson_with, make_regular_tree,
    make_scale_free, OffspringLaw, GALTON_WATSON_MAX_ATTEMPTS,
};

/// Dense node identifier.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32 range"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGraph {
    adj: Vec<Vec<NodeId>>,
    edges: usize,
}

impl FiniteGraph {
    /// Builds a simple graph on `n` nodes. Self-loops and duplicate edges are
    /// dropped; the edge direction is ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(invalid_param(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                continue;
            }
            adj[u].push(NodeId::from_index(v));
            adj[v].push(NodeId::from_index(u));
        }
        let mut twice = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Ok(FiniteGraph {
            adj,
            edges: twice / 2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v.index()]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v.index()].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adj.is_empty() {
            0.0
        } else {
            2.0 * self.edges as f64 / self.adj.len() as f64
        }
    }

    /// Edge list with `u < v`, in ascending order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edges);
        for (u, list) in self.adj.iter().enumerate() {
            let u = NodeId::from_index(u);
            out.extend(list.iter().filter(|&&v| u < v).map(|&v| (u, v)));
        }
        out
    }

    /// Connected components, each sorted ascending; components ordered by
    /// their smallest node.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(NodeId::from_index(u));
                for &w in &self.adj[u] {
                    if !seen[w.index()] {
                        seen[w.index()] = true;
                        queue.push_back(w.index());
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.adj.is_empty() || self.components().len() == 1
    }

    pub fn is_tree(&self) -> bool {
        !self.adj.is_empty() && self.edges + 1 == self.adj.len() && self.is_connected()
    }

    /// Induced subgraph on `nodes`, renumbered densely in the given order.
    pub fn induced(&self, nodes: &[NodeId]) -> FiniteGraph {
        let mut map = vec![usize::MAX; self.adj.len()];
        for (i, v) in nodes.iter().enumerate() {
            map[v.index()] = i;
        }
        let edges = nodes.iter().enumerate().flat_map(|(i, v)| {
            let map = &map;
            self.adj[v.index()]
                .iter()
                .filter(|&w| map[w.index()] != usize::MAX)
                .map(move |w| (i, map[w.index()]))
        });
        FiniteGraph::from_edges(nodes.len(), edges).expect("induced edges are in range")
    }

    /// Largest connected component, renumbered densely preserving the
    /// relative order of the original ids. Ties go to the component with
    /// the smallest node.
    pub fn largest_component(&self) -> FiniteGraph {
        let comps = self.components();
        match comps.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0]))) {
            Some(best) if best.len() < self.adj.len() => self.induced(best),
            _ => self.clone(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj.iter().enumerate().all(|(u, list)| {
            let u = NodeId::from_index(u);
            list.windows(2).all(|w| w[0] < w[1])
                && list
                    .iter()
                    .all(|&v| v != u && self.adj[v.index()].binary_search(&u).is_ok())
        })
    }
}

#[derive(Debug, Default)]
struct TreeState {
    parent: Vec<Option<NodeId>>,
    /// First id of the contiguous block of children, once materialized.
    first_child: Vec<Option<u32>>,
}

/// Infinite `d`-regular tree rooted at node 0. Children of a node receive
/// consecutive ids the first time the node's neighborhood is requested.
#[derive(Debug)]
pub struct RegularTree {
    degree: usize,
    state: RwLock<TreeState>,
}

impl RegularTree {
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 3 {
            return Err(invalid_param(format!(
                "regular tree degree must be at least 3, got {degree}"
            )));
        }
        Ok(RegularTree {
            degree,
            state: RwLock::new(TreeState {
                parent: vec![None],
                first_child: vec![None],
            }),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn materialized(&self) -> usize {
        self.state.read().unwrap().parent.len()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.state.read().unwrap().parent[v.index()]
    }

    fn child_count(&self, v: NodeId) -> usize {
        if v.0 == 0 {
            self.degree
        } else {
            self.degree - 1
        }
    }

    pub fn neighbors(&self, v: NodeId) -> Vec<NodeId> {
        let kids = self.child_count(v);
        {
            let st = self.state.read().unwrap();
            assert!(v.index() < st.parent.len(), "node {v} not materialized");
            if let Some(first) = st.first_child[v.index()] {
                return Self::collect(st.parent[v.index()], first, kids);
            }
        }
        let mut st = self.state.write().unwrap();
        let first = match st.first_child[v.index()] {
            Some(first) => first,
            None => {
                let first = u32::try_from(st.parent.len()).expect("tree exceeds u32 ids");
                for _ in 0..kids {
                    st.parent.push(Some(v));
                    st.first_child.push(None);
                }
                st.first_child[v.index()] = Some(first);
                first
            }
        };
        Self::collect(st.parent[v.index()], first, kids)
    }

    fn collect(parent: Option<NodeId>, first: u32, kids: usize) -> Vec<NodeId> {
        parent
            .into_iter()
            .chain((first..first + kids as u32).map(NodeId))
            .collect()
    }
}

/// Either a finite graph or a lazily grown regular tree.
#[derive(Debug)]
pub enum Graph {
    Finite(FiniteGraph),
    RegularTree(RegularTree),
}

impl Graph {
    pub fn neighbors(&self, v: NodeId) -> Cow<'_, [NodeId]> {
        match self {
            Graph::Finite(g) => Cow::Borrowed(g.neighbors(v)),
            Graph::RegularTree(t) => Cow::Owned(t.neighbors(v)),
        }
    }

    pub fn degree(&self, v: NodeId) -> usize {
        match self {
            Graph::Finite(g) => g.degree(v),
            Graph::RegularTree(t) => t.degree(),
        }
    }

    pub fn max_degree(&self) -> usize {
        match self {
            Graph::Finite(g) => g.max_degree(),
            Graph::RegularTree(t) => t.degree(),
        }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        match self {
            Graph::Finite(g) => v.index() < g.node_count(),
            Graph::RegularTree(t) => v.index() < t.materialized(),
        }
    }

    /// Node count of a finite graph; `None` for the infinite tree.
    pub fn node_count(&self) -> Option<usize> {
        match self {
            Graph::Finite(g) => Some(g.node_count()),
            Graph::RegularTree(_) => None,
        }
    }

    pub fn is_tree(&self) -> bool {
        match self {
            Graph::Finite(g) => g.is_tree(),
            Graph::RegularTree(_) => true,
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteGraph> {
        match self {
            Graph::Finite(g) => Some(g),
            Graph::RegularTree(_) => None,
        }
    }
}

impl From<FiniteGraph> for Graph {
    fn from(g: FiniteGraph) -> Self {
        Graph::Finite(g)
    }
}

impl From<RegularTree> for Graph {
    fn from(t: RegularTree) -> Self {
        Graph::RegularTree(t)
    }
}

/// Graph family descriptor used by the experiment harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    RegularTree { d: usize },
    GaltonWatson { d_max: usize },
    ErdosRenyi { n: usize, avg_degree: f64 },
    ScaleFree { n: usize, edge_node_ratio: f64 },
    EdgeList { path: String },
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphSpec::RegularTree { d } if d < 3 => {
                Err(invalid_param(format!("regular tree needs d >= 3, got {d}")))
            }
            GraphSpec::GaltonWatson { d_max } if d_max < 2 => {
                Err(invalid_param(format!("galton-watson needs d_max >= 2, got {d_max}")))
            }
            GraphSpec::ErdosRenyi { n, avg_degree } => {
                if n < 2 || !(avg_degree > 0.0 && avg_degree <= (n - 1) as f64) {
                    Err(invalid_param(format!(
                        "erdos-renyi needs n >= 2 and 0 < avg_degree <= n-1, got n={n}, avg={avg_degree}"
                    )))
                } else {
                    Ok(())
                }
            }
            GraphSpec::ScaleFree { n, edge_node_ratio } => {
                if n < 3 || edge_node_ratio.is_nan() || edge_node_ratio <= 0.0 {
                    Err(invalid_param(format!(
                        "scale-free needs n >= 3 and a positive ratio, got n={n}, ratio={edge_node_ratio}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// True when every instance is a random draw (regenerated per trial).
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            GraphSpec::GaltonWatson { .. } | GraphSpec::ErdosRenyi { .. } | GraphSpec::ScaleFree { .. }
        )
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::RegularTree { d } => write!(f, "regular:{d}"),
            GraphSpec::GaltonWatson { d_max } => write!(f, "gw:{d_max}"),
            GraphSpec::ErdosRenyi { n, avg_degree } => write!(f, "er:{n}:{avg_degree}"),
            GraphSpec::ScaleFree { n, edge_node_ratio } => write!(f, "sf:{n}:{edge_node_ratio}"),
            GraphSpec::EdgeList { path } => write!(f, "edgelist:{path}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    /// Parses `regular:D`, `gw:DMAX`, `er:N:AVG`, `sf:N:RATIO` or
    /// `edgelist:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid_param(format!("unrecognized graph spec '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(bad)
        };
        let int = |i: usize| -> Result<usize> {
            parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(bad)
        };
        let spec = match kind {
            "regular" => GraphSpec::RegularTree { d: int(0)? },
            "gw" => GraphSpec::GaltonWatson { d_max: int(0)? },
            "er" => GraphSpec::ErdosRenyi {
                n: int(0)?,
                avg_degree: num(1)?,
            },
            "sf" => GraphSpec::ScaleFree {
                n: int(0)?,
                edge_node_ratio: num(1)?,
            },
            "edgelist" => GraphSpec::EdgeList {
                path: rest.to_string(),
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_tree_root_has_d_children() {
        let t = RegularTree::new(3).unwrap();
        let n = t.neighbors(NodeId(0));
        assert_eq!(n, vec![NodeId(1), NodeId(2), NodeId(3)]);
        // stable on repeated access
        assert_eq!(t.neighbors(NodeId(0)), n);
        assert_eq!(t.materialized(), 4);
    }

    #[test]
    fn regular_tree_nodes_have_degree_d() {
        let t = RegularTree::new(3).unwrap();
        for v in t.neighbors(NodeId(0)) {
            let nb = t.neighbors(v);
            assert_eq!(nb.len(), 3);
            assert_eq!(nb[0], NodeId(0));
            for w in nb {
                assert!(t.neighbors(w).contains(&v));
            }
        }
    }

    #[test]
    fn regular_tree_depth_two_count() {
        let t = RegularTree::new(4).unwrap();
        let mut seen = std::collections::BTreeSet::from([NodeId(0)]);
        let mut frontier = vec![NodeId(0)];
        for _ in 0..2 {
            let mut next = Vec::new();
            for v in frontier {
                for w in t.neighbors(v) {
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        assert_eq!(seen.len(), 1 + 4 + 12);
    }

    #[test]
    fn regular_tree_rejects_small_degree() {
        assert!(matches!(RegularTree::new(2), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn finite_graph_drops_loops_and_duplicates() {
        let g = FiniteGraph::from_edges(3, [(0, 1), (1, 0), (1, 1), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_symmetric());
        assert!(g.is_tree());
    }

    #[test]
    fn largest_component_renumbers() {
        let g = FiniteGraph::from_edges(6, [(0, 1), (3, 4), (4, 5)]).unwrap();
        let lcc = g.largest_component();
        assert_eq!(lcc.node_count(), 3);
        assert_eq!(lcc.edge_count(), 2);
        assert!(lcc.is_connected());
    }

    #[test]
    fn graph_spec_round_trip() {
        for s in ["regular:3", "gw:10", "er:2000:4", "sf:2000:1.5", "edgelist:data/fb.txt"] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("regular:2".parse::<GraphSpec>().is_err());
        assert!("ring:5".parse::<GraphSpec>().is_err());
    }
}
