use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;

use super::{argmax_set, check_budget, final_pick, majority, select_candidates_na, EstimationOutcome, NaConfig};
use crate::centrality::{bfs_tree, likelihood_table, CentralityTable};
use crate::diffusion::Snapshot;
use crate::error::Result;
use crate::graph::NodeId;
use crate::respondent::{query_rounds, TruthModel};

/// Non-adaptive majority-vote estimator. Queries `⌊K/r⌋` candidates `r`
/// times each, filters by identity majority (`S_I`) and by descendant count
/// in the predecessor graph (`S_D`), then picks the most likely node.
pub fn run_mvna<R: Rng + ?Sized>(
    snapshot: &Snapshot,
    config: &NaConfig,
    model: &TruthModel,
    rng: &mut R,
) -> Result<EstimationOutcome> {
    let likelihood = likelihood_table(snapshot)?;
    run_mvna_with(snapshot, &likelihood, config, model, rng)
}

pub fn run_mvna_with<R: Rng + ?Sized>(
    snapshot: &Snapshot,
    likelihood: &CentralityTable,
    config: &NaConfig,
    model: &TruthModel,
    rng: &mut R,
) -> Result<EstimationOutcome> {
    let r = check_budget(config.budget, config.r)?;
    let size = (config.budget / config.r) as usize;
    let (candidates, _) = select_candidates_na(snapshot, likelihood, size, config.order);

    let mut s_i = BTreeSet::new();
    let mut predecessor = BTreeMap::new();
    for &v in &candidates {
        let record = query_rounds(v, snapshot, r, model, rng)?;
        if record.says_source() {
            s_i.insert(v);
        }
        if !config.use_directions {
            continue;
        }
        let pred = match majority(record.designations.iter().map(|(&w, &c)| (w, c)), rng) {
            Some(w) => w,
            None => {
                // no direction answers: every neighbor is tied at zero
                let nb = snapshot.graph().neighbors(v);
                nb[rng.random_range(0..nb.len())]
            }
        };
        predecessor.insert(v, pred);
    }

    let e_counts = if config.use_directions {
        descendant_counts(snapshot, &candidates, &predecessor)
    } else {
        BTreeMap::new()
    };
    let s_d = argmax_set(&e_counts);
    let estimate = final_pick(likelihood, &s_i, &s_d, model.perfect_identity(), &candidates);
    let used = config.r * candidates.len() as u64;
    Ok(EstimationOutcome {
        estimate,
        s_i,
        s_d,
        candidates,
        predecessor_edges: predecessor,
        e_counts,
        budget_used: used,
        budget_discarded: config.budget - used,
        ..Default::default()
    })
}

/// `|E(v)|`: nodes reachable from `v` along predecessor edges `w → u`,
/// excluding `v`. When the infected subgraph has cycles, only edges that
/// agree with the BFS tree rooted at `v` are followed.
fn descendant_counts(
    snapshot: &Snapshot,
    candidates: &[NodeId],
    predecessor: &BTreeMap<NodeId, NodeId>,
) -> BTreeMap<NodeId, usize> {
    let mut children: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for (&u, &w) in predecessor {
        children.entry(w).or_default().push(u);
    }
    let tree = snapshot.infected_is_tree();
    let mut out = BTreeMap::new();
    let mut visited: HashMap<NodeId, ()> = HashMap::new();
    let mut stack = Vec::new();
    for &v in candidates {
        let bfs_parent = if tree {
            None
        } else {
            let root = snapshot.local_index(v).expect("candidate is infected");
            Some(bfs_tree(snapshot.local_adjacency(), root).1)
        };
        let follows = |w: NodeId, u: NodeId| match &bfs_parent {
            None => true,
            Some(parent) => {
                let (Some(wi), Some(ui)) = (snapshot.local_index(w), snapshot.local_index(u)) else {
                    return false;
                };
                parent[ui] == Some(wi)
            }
        };
        visited.clear();
        visited.insert(v, ());
        stack.clear();
        stack.push(v);
        while let Some(w) = stack.pop() {
            for &u in children.get(&w).map(Vec::as_slice).unwrap_or(&[]) {
                if !visited.contains_key(&u) && follows(w, u) {
                    visited.insert(u, ());
                    stack.push(u);
                }
            }
        }
        out.insert(v, visited.len() - 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::simulate_si;
    use crate::estimators::CandidateOrder;
    use crate::graph::{Graph, RegularTree};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn tree_snapshot(n: usize, seed: u64) -> Snapshot {
        let g = Arc::new(Graph::RegularTree(RegularTree::new(3).unwrap()));
        simulate_si(g, NodeId(0), n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn perfect_answers_find_the_source() {
        let perfect = TruthModel::new(1.0, 1.0).unwrap();
        for seed in 0..30 {
            let snap = tree_snapshot(100, seed);
            let table = likelihood_table(&snap).unwrap();
            let (order, _) = select_candidates_na(&snap, &table, 100, CandidateOrder::Hop);
            let pos = order.iter().position(|&v| v == snap.source()).unwrap() as u64;
            let r = 2;
            let config = NaConfig::new(r * (pos + 1), r).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let out = run_mvna_with(&snap, &table, &config, &perfect, &mut rng).unwrap();
            assert_eq!(out.estimate, snap.source());
            assert_eq!(out.s_i, BTreeSet::from([snap.source()]));
        }
    }

    #[test]
    fn bookkeeping_invariants() {
        let snap = tree_snapshot(200, 4);
        let model = TruthModel::new(0.7, 0.6).unwrap();
        let config = NaConfig::new(101, 4).unwrap();
        let out = run_mvna(&snap, &config, &model, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.candidates.len(), 25);
        assert_eq!(out.budget_used, 100);
        assert_eq!(out.budget_discarded, 1);
        assert_eq!(out.predecessor_edges.len(), 25);
        assert_eq!(out.e_counts.len(), 25);
        assert!(out.e_counts.values().all(|&e| e < 25));
        assert!(snap.is_infected(out.estimate));
        assert!(!out.s_d.is_empty());
    }

    #[test]
    fn predecessor_cycles_terminate() {
        let snap = tree_snapshot(10, 2);
        let a = snap.infected()[0];
        let b = snap.infected()[1];
        let preds = BTreeMap::from([(a, b), (b, a)]);
        let e = descendant_counts(&snap, &[a, b], &preds);
        assert_eq!(e[&a], 1);
        assert_eq!(e[&b], 1);
    }

    #[test]
    fn seeded_runs_repeat() {
        let snap = tree_snapshot(150, 8);
        let model = TruthModel::new(0.75, 0.6).unwrap();
        let config = NaConfig::new(90, 3).unwrap();
        let a = run_mvna(&snap, &config, &model, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = run_mvna(&snap, &config, &model, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}
