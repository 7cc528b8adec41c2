use std::path::PathBuf;
use std::process::{Command, Output};

fn rqs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rqs-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn rstar_prints_the_repetition_count() {
    let out = rqs(&["rstar", "--scheme", "na", "--kind", "sufficient", "--d", "3", "--p", "0.6667", "--q", "0.6667", "--k", "200"]);
    assert_eq!(stdout(&out).trim(), "3");
    let out = rqs(&["rstar", "--scheme", "ad", "--kind", "sufficient", "--d", "3", "--p", "0.6667", "--q", "0.6667", "--k", "200"]);
    assert_eq!(stdout(&out).trim(), "4");
}

#[test]
fn budget_prints_one_row() {
    let out = rqs(&["budget", "--scheme", "na", "--kind", "sufficient", "--delta", "0.02", "--d", "3", "--p", "0.75", "--q", "0.6"]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let value: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!((value - 1.24e4).abs() / 1.24e4 < 0.01, "{value}");
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate", "--graph", "regular:3", "--n", "400", "--scheme", "ad", "--k", "100", "--p", "0.8", "--q", "0.8",
        "--trials", "200", "--seed", "42", "--no-timing",
    ];
    let a = stdout(&rqs(&args));
    let b = stdout(&rqs(&args));
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(
        lines[0],
        "scheme,graph,d,n,K,r,p,q,trials,detections,p_hat,ci_lo,ci_hi,mean_budget,wall_time_ms"
    );
    let p_hat: f64 = lines[1].split(',').nth(10).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&p_hat));
}

#[test]
fn config_file_mirrors_flags() {
    let dir = scratch("config");
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        "graph = \"regular:3\"\nn = 100\nscheme = \"na\"\nk = [40, 80]\nr = 2\np = 0.9\nq = 0.7\ntrials = 20\nseed = 5\nno_timing = true\n",
    )
    .unwrap();
    let from_file = stdout(&rqs(&["simulate", "--config", cfg.to_str().unwrap()]));
    let from_flags = stdout(&rqs(&[
        "simulate", "--graph", "regular:3", "--n", "100", "--scheme", "na", "--k", "40,80", "--r", "2", "--p", "0.9",
        "--q", "0.7", "--trials", "20", "--seed", "5", "--no-timing",
    ]));
    assert_eq!(from_file, from_flags);
    assert_eq!(from_file.lines().count(), 3);

    // flags override the file
    let overridden = stdout(&rqs(&["simulate", "--config", cfg.to_str().unwrap(), "--k", "40"]));
    assert_eq!(overridden.lines().count(), 2);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn json_output_and_thread_env() {
    let dir = scratch("json");
    let path = dir.join("rows.json");
    let out = Command::new(env!("CARGO_BIN_EXE_rqs"))
        .args([
            "simulate", "--graph", "gw:10", "--n", "80", "--scheme", "ad", "--k", "50", "--r", "2", "--trials", "10",
            "--format", "json", "--output", path.to_str().unwrap(),
        ])
        .env("RQS_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"K\": 50") && text.contains("\"p_hat\""));

    let bad = Command::new(env!("CARGO_BIN_EXE_rqs"))
        .args(["simulate", "--graph", "regular:3", "--n", "20", "--trials", "2", "--k", "10", "--r", "1"])
        .env("RQS_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!bad.status.success());
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn snapshot_then_centrality() {
    let dir = scratch("snap");
    let path = dir.join("snap.json");
    stdout(&rqs(&["snapshot", "--graph", "regular:4", "--n", "30", "--seed", "3", "--output", path.to_str().unwrap()]));
    let text = stdout(&rqs(&["centrality", "--snapshot", path.to_str().unwrap(), "--top", "5"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rank,node,log_score");
    assert_eq!(lines.len(), 6);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn oracles_agree() {
    let text = stdout(&rqs(&["oracle", "centrality", "--edges", "0-1,1-2,1-3,3-4"]));
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let rc: f64 = cols[1].parse().unwrap();
        let bf: f64 = cols[2].parse().unwrap();
        assert!((rc - bf).abs() < 1e-6);
    }
    let text = stdout(&rqs(&["oracle", "distance", "--d", "3", "--k", "5"]));
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn bad_flags_fail_with_usage() {
    let out = rqs(&["rstar", "--scheme", "xx"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    for cmd in ["simulate", "budget", "rstar", "centrality", "oracle", "snapshot"] {
        assert!(rqs(&[cmd, "--help"]).status.success());
    }
}
