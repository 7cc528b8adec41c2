//! Susceptible-infected spread with unit-rate exponential edge delays.
//!
//! By memorylessness, the next infection in the exponential race is carried
//! by a boundary edge chosen uniformly at random, so the simulation steps
//! through infections directly instead of keeping an event queue.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::graph::{FiniteGraph, Graph, NodeId};

/// The infected subgraph `G_N` at observation time, together with the
/// ground truth (source and who-infected-whom).
#[derive(Debug, Clone)]
pub struct Snapshot {
    graph: Arc<Graph>,
    source: NodeId,
    infected: Vec<NodeId>,
    parent: HashMap<NodeId, NodeId>,
    local: HashMap<NodeId, usize>,
    local_adj: Vec<Vec<usize>>,
    induced_edges: usize,
}

/// Serialized form of a snapshot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub source: NodeId,
    pub infected_order: Vec<NodeId>,
    /// `(parent, child)` pairs in infection order of the child.
    pub parent_pairs: Vec<(NodeId, NodeId)>,
}

impl Snapshot {
    fn build(
        graph: Arc<Graph>,
        infected: Vec<NodeId>,
        parent: HashMap<NodeId, NodeId>,
    ) -> Result<Self> {
        let Some(&source) = infected.first() else {
            return Err(invalid_input("snapshot has no infected nodes"));
        };
        let mut local = HashMap::with_capacity(infected.len());
        for (i, &v) in infected.iter().enumerate() {
            if !graph.contains(v) {
                return Err(invalid_input(format!("node {v} is not in the graph")));
            }
            if local.insert(v, i).is_some() {
                return Err(invalid_input(format!("node {v} infected twice")));
            }
        }
        for (i, &v) in infected.iter().enumerate().skip(1) {
            let p = parent
                .get(&v)
                .ok_or_else(|| invalid_input(format!("node {v} has no parent")))?;
            match local.get(p) {
                Some(&j) if j < i => {}
                _ => {
                    return Err(invalid_input(format!(
                        "parent {p} of {v} is not infected before it"
                    )))
                }
            }
            if !graph.neighbors(v).contains(p) {
                return Err(invalid_input(format!("parent {p} is not adjacent to {v}")));
            }
        }
        if parent.contains_key(&source) || parent.len() + 1 != infected.len() {
            return Err(invalid_input("parent map does not match the infected set"));
        }
        let mut local_adj = Vec::with_capacity(infected.len());
        let mut twice = 0;
        for &v in &infected {
            let list: Vec<usize> = graph
                .neighbors(v)
                .iter()
                .filter_map(|w| local.get(w).copied())
                .collect();
            twice += list.len();
            local_adj.push(list);
        }
        Ok(Snapshot {
            graph,
            source,
            infected,
            parent,
            local,
            local_adj,
            induced_edges: twice / 2,
        })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    /// Infected nodes in infection order; `infected()[0]` is the source.
    pub fn infected(&self) -> &[NodeId] {
        &self.infected
    }

    pub fn len(&self) -> usize {
        self.infected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infected.is_empty()
    }

    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        self.parent.get(&v).copied()
    }

    pub fn is_infected(&self, v: NodeId) -> bool {
        self.local.contains_key(&v)
    }

    /// Position of `v` in infection order.
    pub fn local_index(&self, v: NodeId) -> Option<usize> {
        self.local.get(&v).copied()
    }

    pub fn node(&self, i: usize) -> NodeId {
        self.infected[i]
    }

    /// Adjacency of the induced infected subgraph, in local indices. Each
    /// list is ordered by ascending global node id.
    pub fn local_adjacency(&self) -> &[Vec<usize>] {
        &self.local_adj
    }

    /// Whether the induced infected subgraph is itself a tree.
    pub fn infected_is_tree(&self) -> bool {
        self.induced_edges + 1 == self.infected.len()
    }

    pub fn to_record(&self) -> SnapshotRecord {
        SnapshotRecord {
            source: self.source,
            infected_order: self.infected.clone(),
            parent_pairs: self
                .infected
                .iter()
                .skip(1)
                .map(|v| (self.parent[v], *v))
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    /// Rebuilds a snapshot. Without an underlying graph, the infected tree
    /// spanned by the parent pairs stands in for it.
    pub fn from_record(record: &SnapshotRecord, graph: Option<Arc<Graph>>) -> Result<Self> {
        if record.infected_order.first() != Some(&record.source) {
            return Err(invalid_input("first infected node must be the source"));
        }
        let parent: HashMap<NodeId, NodeId> =
            record.parent_pairs.iter().map(|&(p, c)| (c, p)).collect();
        if parent.len() != record.parent_pairs.len() {
            return Err(invalid_input("a node has more than one parent"));
        }
        let graph = match graph {
            Some(g) => g,
            None => {
                let n = record
                    .infected_order
                    .iter()
                    .map(|v| v.index() + 1)
                    .max()
                    .unwrap_or(0);
                let edges = record.parent_pairs.iter().map(|(p, c)| (p.index(), c.index()));
                Arc::new(Graph::Finite(FiniteGraph::from_edges(n, edges)?))
            }
        };
        Snapshot::build(graph, record.infected_order.clone(), parent)
    }

    pub fn from_json(text: &str, graph: Option<Arc<Graph>>) -> Result<Self> {
        let record: SnapshotRecord = serde_json::from_str(text)?;
        Snapshot::from_record(&record, graph)
    }
}

/// Runs SI spread from `source` until exactly `n_target` nodes are infected.
pub fn simulate_si<R: Rng + ?Sized>(
    graph: Arc<Graph>,
    source: NodeId,
    n_target: usize,
    rng: &mut R,
) -> Result<Snapshot> {
    if n_target == 0 {
        return Err(invalid_param("n_target must be at least 1"));
    }
    if !graph.contains(source) {
        return Err(invalid_param(format!("source {source} is not in the graph")));
    }
    let mut infected = Vec::with_capacity(n_target);
    let mut in_set: HashMap<NodeId, ()> = HashMap::with_capacity(n_target);
    let mut parent = HashMap::with_capacity(n_target);
    // (infected endpoint, susceptible endpoint); entries whose far end got
    // infected meanwhile are dropped lazily when drawn
    let mut boundary: Vec<(NodeId, NodeId)> = Vec::new();

    infected.push(source);
    in_set.insert(source, ());
    boundary.extend(graph.neighbors(source).iter().map(|&w| (source, w)));

    while infected.len() < n_target {
        if boundary.is_empty() {
            return Err(Error::InfeasibleTarget {
                requested: n_target,
                reachable: infected.len(),
            });
        }
        let i = rng.random_range(0..boundary.len());
        let (from, to) = boundary.swap_remove(i);
        if in_set.contains_key(&to) {
            continue;
        }
        in_set.insert(to, ());
        infected.push(to);
        parent.insert(to, from);
        boundary.extend(
            graph
                .neighbors(to)
                .iter()
                .filter(|w| !in_set.contains_key(w))
                .map(|&w| (to, w)),
        );
    }
    Snapshot::build(graph, infected, parent)
}

/// Exact probability that the `k`-th infected node sits `l` hops from the
/// source on an infinite `d`-regular tree:
///
/// `G(k-2, k-l-1) · d(d-1)^(l-1) / Π_{j=1}^{k-1} (2 + j(d-2))`
///
/// where `G(a, b)` is the degree-`b` elementary symmetric polynomial of
/// `x_i = 1 + i(d-2)`, `i = 1..=a`. The recurrence is run with every factor
/// divided by its boundary size so large `k` does not overflow.
pub fn distance_distribution(d: usize, k: usize, l: usize) -> Result<f64> {
    if d < 3 || k < 2 {
        return Err(invalid_param(format!("need d >= 3 and k >= 2, got d={d}, k={k}")));
    }
    if l < 1 || l > k - 1 {
        return Ok(0.0);
    }
    let a = k - 2;
    let b = k - l - 1;
    let dm2 = (d - 2) as f64;
    // e[j] = Σ_{|I|=j, I ⊆ {1..i}} Π_{t∈I} x_t / Π_{t=1}^{i} c_t
    let mut e = vec![0.0f64; b + 1];
    e[0] = 1.0;
    for i in 1..=a {
        let x = 1.0 + i as f64 * dm2;
        let c = 2.0 + i as f64 * dm2;
        for j in (0..=b.min(i)).rev() {
            let take = if j > 0 { e[j - 1] * x } else { 0.0 };
            e[j] = (e[j] + take) / c;
        }
    }
    let last = 2.0 + (k - 1) as f64 * dm2;
    let log_p = e[b].ln() + (d as f64).ln() + (l - 1) as f64 * ((d - 1) as f64).ln() - last.ln();
    Ok(log_p.exp())
}
