//! Majority-vote querying estimators: non-adaptive (batch) and adaptive
//! (walk) variants.

mod mvad;
mod mvna;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::centrality::CentralityTable;
use crate::diffusion::Snapshot;
use crate::error::{invalid_param, Result};
use crate::graph::NodeId;

pub use crate::budget::{choose_r_star, BoundKind, Scheme};
pub use mvad::{run_mvad, run_mvad_with};
pub use mvna::{run_mvna, run_mvna_with};

/// How the non-adaptive candidate set is ordered before truncation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateOrder {
    /// Rumor center first, then by hop distance from it (ties by node id).
    #[default]
    Hop,
    /// By decreasing likelihood (ties by node id).
    Centrality,
}

impl std::str::FromStr for CandidateOrder {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hop" => Ok(CandidateOrder::Hop),
            "centrality" => Ok(CandidateOrder::Centrality),
            _ => Err(invalid_param(format!("unknown candidate order '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaConfig {
    pub budget: u64,
    pub r: u64,
    pub order: CandidateOrder,
    /// When false, direction answers are ignored and `S_D` stays empty, so
    /// the pick relies on identity answers alone.
    #[serde(default = "default_true")]
    pub use_directions: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdConfig {
    pub budget: u64,
    pub r: u64,
}

fn check_budget(budget: u64, r: u64) -> Result<u32> {
    if r < 1 || r > budget {
        return Err(invalid_param(format!(
            "repetition count must satisfy 1 <= r <= K, got r={r}, K={budget}"
        )));
    }
    u32::try_from(r).map_err(|_| invalid_param(format!("repetition count {r} too large")))
}

impl NaConfig {
    pub fn new(budget: u64, r: u64) -> Result<Self> {
        check_budget(budget, r)?;
        Ok(NaConfig {
            budget,
            r,
            order: CandidateOrder::Hop,
            use_directions: true,
        })
    }
}

impl AdConfig {
    pub fn new(budget: u64, r: u64) -> Result<Self> {
        check_budget(budget, r)?;
        Ok(AdConfig { budget, r })
    }
}

/// Result of one estimator run. NA-only and AD-only fields are left empty
/// by the other scheme.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimationOutcome {
    pub estimate: NodeId,
    pub s_i: BTreeSet<NodeId>,
    pub s_d: BTreeSet<NodeId>,
    /// Visits per respondent (AD).
    pub eta: BTreeMap<NodeId, u32>,
    /// Respondents in visiting order (AD).
    pub walk: Vec<NodeId>,
    /// Candidate set in query order (NA).
    pub candidates: Vec<NodeId>,
    /// Majority-voted predecessor of each candidate (NA).
    pub predecessor_edges: BTreeMap<NodeId, NodeId>,
    /// Descendant count `|E(v)|` in the predecessor graph (NA).
    pub e_counts: BTreeMap<NodeId, usize>,
    pub budget_used: u64,
    /// Budget left unspent because it is smaller than `r`.
    pub budget_discarded: u64,
}

/// Candidate list for non-adaptive querying. Returns the list and whether
/// `size` had to be clamped to the number of infected nodes.
pub fn select_candidates_na(
    snapshot: &Snapshot,
    likelihood: &CentralityTable,
    size: usize,
    order: CandidateOrder,
) -> (Vec<NodeId>, bool) {
    let n = snapshot.len();
    let clamped = size > n;
    let size = size.min(n);
    let mut nodes: Vec<NodeId> = match order {
        CandidateOrder::Hop => {
            let adj = snapshot.local_adjacency();
            let root = snapshot
                .local_index(likelihood.center())
                .expect("center is infected");
            let mut dist = vec![usize::MAX; n];
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
            let mut keyed: Vec<(usize, NodeId)> = (0..n)
                .filter(|&i| dist[i] != usize::MAX)
                .map(|i| (dist[i], snapshot.node(i)))
                .collect();
            keyed.sort_unstable();
            keyed.into_iter().map(|(_, v)| v).collect()
        }
        CandidateOrder::Centrality => likelihood.ranked().into_iter().map(|(v, _)| v).collect(),
    };
    nodes.truncate(size);
    (nodes, clamped)
}

/// Most-voted option; ties broken uniformly at random. `None` when there
/// are no votes.
pub(crate) fn majority<R: Rng + ?Sized>(
    votes: impl IntoIterator<Item = (NodeId, u32)>,
    rng: &mut R,
) -> Option<NodeId> {
    let mut best = 0;
    let mut tied = Vec::new();
    for (v, c) in votes {
        if c == 0 {
            continue;
        }
        if c > best {
            best = c;
            tied.clear();
        }
        if c == best {
            tied.push(v);
        }
    }
    match tied.len() {
        0 => None,
        1 => Some(tied[0]),
        n => Some(tied[rng.random_range(0..n)]),
    }
}

/// Final selection: the most likely node of `S_I ∩ S_D`; if that is empty,
/// of `S_I` (when identity answers are perfect and `identity_first`) or of
/// `S_I ∪ S_D`; then `S_D`; then `fallback`.
pub(crate) fn final_pick(
    likelihood: &CentralityTable,
    s_i: &BTreeSet<NodeId>,
    s_d: &BTreeSet<NodeId>,
    identity_first: bool,
    fallback: &[NodeId],
) -> NodeId {
    let inter: Vec<NodeId> = s_i.intersection(s_d).copied().collect();
    let mut chain: Vec<Vec<NodeId>> = vec![inter];
    if identity_first {
        chain.push(s_i.iter().copied().collect());
    } else {
        chain.push(s_i.union(s_d).copied().collect());
    }
    chain.push(s_d.iter().copied().collect());
    chain.push(fallback.to_vec());
    chain
        .into_iter()
        .find_map(|set| likelihood.argmax_within(set))
        .unwrap_or_else(|| likelihood.center())
}

/// All keys attaining the maximum value.
pub(crate) fn argmax_set<V: Ord + Copy>(values: &BTreeMap<NodeId, V>) -> BTreeSet<NodeId> {
    let Some(max) = values.values().max().copied() else {
        return BTreeSet::new();
    };
    values
        .iter()
        .filter(|(_, &v)| v == max)
        .map(|(&k, _)| k)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::log_rumor_centralities;
    use crate::diffusion::simulate_si;
    use crate::graph::{FiniteGraph, Graph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn path_snapshot() -> Snapshot {
        let g = Arc::new(Graph::Finite(
            FiniteGraph::from_edges(5, (1..5).map(|i| (i - 1, i))).unwrap(),
        ));
        simulate_si(g, NodeId(0), 5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn candidates_on_path() {
        let snap = path_snapshot();
        let table = log_rumor_centralities(&snap).unwrap();
        assert_eq!(table.center(), NodeId(2));
        for order in [CandidateOrder::Hop, CandidateOrder::Centrality] {
            let (c, clamped) = select_candidates_na(&snap, &table, 1, order);
            assert_eq!(c, vec![NodeId(2)]);
            assert!(!clamped);
        }
        let (c, _) = select_candidates_na(&snap, &table, 3, CandidateOrder::Hop);
        assert_eq!(c, vec![NodeId(2), NodeId(1), NodeId(3)]);
        let (mut c, clamped) = select_candidates_na(&snap, &table, 9, CandidateOrder::Hop);
        assert!(clamped);
        c.sort();
        assert_eq!(c, (0..5).map(NodeId).collect::<Vec<_>>());
    }

    #[test]
    fn majority_ties_are_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = BTreeSet::new();
        for _ in 0..200 {
            seen.insert(majority([(NodeId(1), 2), (NodeId(2), 2), (NodeId(3), 1)], &mut rng).unwrap());
        }
        assert_eq!(seen, BTreeSet::from([NodeId(1), NodeId(2)]));
        assert_eq!(majority([(NodeId(1), 0)], &mut rng), None);
    }

    #[test]
    fn config_validation() {
        assert!(NaConfig::new(10, 0).is_err());
        assert!(NaConfig::new(10, 11).is_err());
        assert!(AdConfig::new(10, 10).is_ok());
    }
}
