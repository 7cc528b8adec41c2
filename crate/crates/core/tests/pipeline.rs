use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqs_core::centrality::{likelihood_table, log_rumor_centralities};
use rqs_core::diffusion::{simulate_si, Snapshot};
use rqs_core::estimators::{run_mvad, run_mvna, AdConfig, NaConfig};
use rqs_core::graph::{make_scale_free, parse_edge_list, Graph, GraphSpec, NodeId, RegularTree};
use rqs_core::harness::{run_experiment, write_json, ExperimentConfig, HarnessScheme, RMode, ResultRow};
use rqs_core::respondent::TruthModel;

#[test]
fn snapshot_survives_json_round_trip() {
    let g = Arc::new(Graph::RegularTree(RegularTree::new(4).unwrap()));
    let snap = simulate_si(g, NodeId(0), 120, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let json = snap.to_json().unwrap();
    let back = Snapshot::from_json(&json, None).unwrap();
    assert_eq!(back.infected(), snap.infected());
    assert_eq!(back.source(), snap.source());
    let a = log_rumor_centralities(&snap).unwrap();
    let b = log_rumor_centralities(&back).unwrap();
    assert_eq!(a.center(), b.center());
}

#[test]
fn loopy_graph_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = Arc::new(Graph::Finite(make_scale_free(800, 1.5, &mut rng).unwrap()));
    let snap = simulate_si(g, NodeId(5), 200, &mut rng).unwrap();
    assert!(!snap.infected_is_tree());
    let table = likelihood_table(&snap).unwrap();
    assert!(snap.is_infected(table.center()));
    let model = TruthModel::new(0.9, 0.9).unwrap();
    let na = run_mvna(&snap, &NaConfig::new(200, 2).unwrap(), &model, &mut rng).unwrap();
    let ad = run_mvad(&snap, &AdConfig::new(100, 2).unwrap(), &model, &mut rng).unwrap();
    assert!(snap.is_infected(na.estimate) && snap.is_infected(ad.estimate));
}

#[test]
fn edge_list_file_drives_an_experiment() {
    let dir = std::env::temp_dir().join(format!("rqs-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("grid.txt");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# 12x12 grid").unwrap();
    for i in 0..12u32 {
        for j in 0..12u32 {
            let v = 100 + i * 12 + j;
            if j + 1 < 12 {
                writeln!(f, "{v} {}", v + 1).unwrap();
            }
            if i + 1 < 12 {
                writeln!(f, "{v}\t{}", v + 12).unwrap();
            }
        }
    }
    drop(f);
    let (g, stats) = parse_edge_list(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!((stats.nodes, stats.edges), (144, 264));
    assert_eq!(g.node_count(), 144);

    let spec: GraphSpec = format!("edgelist:{}", path.display()).parse().unwrap();
    let mut c = ExperimentConfig::new(spec, HarnessScheme::Ad);
    c.n_infected = 50;
    c.trials = 30;
    c.budgets = vec![40];
    c.r_mode = RMode::Fixed(2);
    c.record_timing = false;
    let rows = run_experiment(c).unwrap();
    assert_eq!(rows[0].d, 4);
    assert!(rows[0].error.is_none());

    let mut buf = Vec::new();
    write_json(&rows, &mut buf).unwrap();
    let parsed: Vec<ResultRow> = serde_json::from_slice(&buf).unwrap();
    assert_eq!(parsed, rows);
    let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert!(value[0].get("K").is_some());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn random_families_run_through_the_harness() {
    for spec in ["gw:10", "er:2000:4", "sf:2000:1.5"] {
        for scheme in [HarnessScheme::Na, HarnessScheme::Ad, HarnessScheme::Rc] {
            let mut c = ExperimentConfig::new(spec.parse().unwrap(), scheme);
            c.n_infected = 100;
            c.trials = 10;
            c.budgets = vec![60];
            c.p = vec![0.8];
            c.q = vec![0.8];
            c.record_timing = false;
            let rows = run_experiment(c.clone()).unwrap();
            assert!(rows[0].error.is_none(), "{spec} {scheme}: {:?}", rows[0].error);
            c.fixed_graph = true;
            let fixed = run_experiment(c).unwrap();
            assert!(fixed[0].error.is_none());
        }
    }
}
