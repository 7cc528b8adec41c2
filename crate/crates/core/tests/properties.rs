use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqs_core::centrality::{
    brute_force_rumor_centrality, tree_log_rumor_centralities, tree_log_rumor_centrality_at,
};
use rqs_core::diffusion::{simulate_si, Snapshot};
use rqs_core::estimators::{run_mvad, run_mvna, AdConfig, NaConfig};
use rqs_core::graph::{
    make_erdos_renyi, make_galton_watson, make_scale_free, FiniteGraph, Graph, NodeId, RegularTree,
};
use rqs_core::respondent::{query_rounds, TruthModel};

/// Tree from a parent list where `parents[i]` picks the parent of node
/// `i + 1` among `0..=i`.
fn tree_from_choices(parents: &[u32]) -> Vec<Vec<usize>> {
    let n = parents.len() + 1;
    let mut adj = vec![Vec::new(); n];
    for (i, &c) in parents.iter().enumerate() {
        let child = i + 1;
        let parent = c as usize % child;
        adj[child].push(parent);
        adj[parent].push(child);
    }
    adj
}

/// Independent count of valid infection orderings by plain enumeration.
fn enumerate_orderings(adj: &[Vec<usize>], root: usize) -> u64 {
    fn go(adj: &[Vec<usize>], infected: &mut Vec<bool>, left: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        for v in 0..adj.len() {
            if !infected[v] && adj[v].iter().any(|&w| infected[w]) {
                infected[v] = true;
                total += go(adj, infected, left - 1);
                infected[v] = false;
            }
        }
        total
    }
    let mut infected = vec![false; adj.len()];
    infected[root] = true;
    go(adj, &mut infected, adj.len() - 1)
}

fn tree_snapshot(d: usize, n: usize, seed: u64) -> Snapshot {
    let g = Arc::new(Graph::RegularTree(RegularTree::new(d).unwrap()));
    simulate_si(g, NodeId(0), n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rerooting_matches_direct_evaluation(parents in prop::collection::vec(any::<u32>(), 0..200)) {
        let adj = tree_from_choices(&parents);
        let all = tree_log_rumor_centralities(&adj).unwrap();
        for (v, &lr) in all.iter().enumerate() {
            let direct = tree_log_rumor_centrality_at(&adj, v);
            prop_assert!((lr - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn brute_force_matches_enumeration(parents in prop::collection::vec(any::<u32>(), 0..7)) {
        let adj = tree_from_choices(&parents);
        for v in 0..adj.len() {
            prop_assert_eq!(brute_force_rumor_centrality(&adj, v).unwrap(), enumerate_orderings(&adj, v));
        }
    }

    #[test]
    fn generated_graphs_are_symmetric(seed in any::<u64>(), n in 20usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graphs: Vec<FiniteGraph> = vec![
            make_galton_watson(5, n, &mut rng).unwrap(),
            make_erdos_renyi(n, 4.0, &mut rng).unwrap(),
            make_scale_free(n, 1.5, &mut rng).unwrap(),
        ];
        for g in graphs {
            prop_assert!(g.is_symmetric());
            prop_assert!(g.is_connected());
        }
    }

    #[test]
    fn regular_tree_adjacency_is_symmetric(d in 3usize..7, probes in prop::collection::vec(0u32..500, 1..40)) {
        let t = RegularTree::new(d).unwrap();
        for _ in 0..3 {
            for v in t.neighbors(NodeId(0)) {
                t.neighbors(v);
            }
        }
        let limit = t.materialized() as u32;
        for p in probes {
            let v = NodeId(p % limit);
            let nbrs = t.neighbors(v);
            prop_assert_eq!(nbrs.len(), d);
            for w in nbrs {
                prop_assert!(t.neighbors(w).contains(&v));
            }
        }
    }

    #[test]
    fn snapshots_form_a_parent_tree(seed in any::<u64>(), n in 1usize..300, d in 3usize..6) {
        let snap = tree_snapshot(d, n, seed);
        prop_assert_eq!(snap.len(), n);
        prop_assert_eq!(snap.infected()[0], snap.source());
        prop_assert!(snap.parent_of(snap.source()).is_none());
        for (i, &v) in snap.infected().iter().enumerate().skip(1) {
            let p = snap.parent_of(v).unwrap();
            let pos = snap.infected().iter().position(|&w| w == p).unwrap();
            prop_assert!(pos < i);
            prop_assert!(snap.graph().neighbors(v).contains(&p));
        }
        prop_assert!(snap.infected_is_tree());
    }

    #[test]
    fn answers_are_conserved(seed in any::<u64>(), r in 1u32..50, p in 0.51f64..=1.0, q in 0.0f64..=1.0) {
        let snap = tree_snapshot(3, 50, seed);
        let model = TruthModel::new(p, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for &v in &snap.infected()[..5] {
            let rec = query_rounds(v, &snap, r, &model, &mut rng).unwrap();
            prop_assert_eq!(rec.yes_count + rec.direction_answers(), r);
            for w in rec.designations.keys() {
                prop_assert!(snap.graph().neighbors(v).contains(w));
            }
        }
    }

    #[test]
    fn budget_is_never_exceeded(seed in any::<u64>(), k in 1u64..300, r in 1u64..10, p in 0.51f64..=1.0, q in 0.34f64..=1.0) {
        prop_assume!(r <= k);
        let snap = tree_snapshot(3, 100, seed);
        let model = TruthModel::new(p, q).unwrap();
        let na = run_mvna(&snap, &NaConfig::new(k, r).unwrap(), &model, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let ad = run_mvad(&snap, &AdConfig::new(k, r).unwrap(), &model, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for out in [&na, &ad] {
            prop_assert!(out.budget_used <= k);
            prop_assert_eq!(out.budget_used % r, 0);
            prop_assert!(snap.is_infected(out.estimate));
        }
        prop_assert_eq!(na.budget_used + na.budget_discarded, k);
    }

    #[test]
    fn seeded_pipeline_is_deterministic(seed in any::<u64>()) {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Arc::new(Graph::Finite(make_erdos_renyi(300, 4.0, &mut rng).unwrap()));
            let snap = simulate_si(g, NodeId(0), 60, &mut rng).unwrap();
            let model = TruthModel::new(0.7, 0.6).unwrap();
            let out = run_mvad(&snap, &AdConfig::new(40, 2).unwrap(), &model, &mut rng).unwrap();
            (snap.to_json().unwrap(), out)
        };
        prop_assert_eq!(run(), run());
    }
}
