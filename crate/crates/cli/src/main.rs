mod config;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rqs_core::budget::{budget_threshold, choose_r_star, BoundKind, BudgetInputs, Scheme};
use rqs_core::centrality::{brute_force_rumor_centrality, likelihood_table, tree_log_rumor_centralities};
use rqs_core::diffusion::{distance_distribution, simulate_si, Snapshot};
use rqs_core::estimators::CandidateOrder;
use rqs_core::graph::{
    load_edge_list, make_erdos_renyi, make_galton_watson, make_scale_free, Graph, GraphSpec, NodeId,
    RegularTree,
};
use rqs_core::harness::{write_rows, ExperimentConfig, HarnessScheme, OutputFormat, RMode};

use config::FlatConfig;

#[derive(Parser)]
#[command(name = "rqs", version, about = "Rumor source detection with noisy queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo sweep and write one row per combination.
    Simulate(Box<SimulateArgs>),
    /// Evaluate a budget threshold and print it as a one-row CSV.
    Budget(BudgetArgs),
    /// Print the repetition count r* for a budget.
    Rstar(RstarArgs),
    /// Print the top-k likelihood table of a serialized snapshot as CSV.
    Centrality(CentralityArgs),
    /// Cross-check closed forms against brute force or Monte Carlo.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Simulate one diffusion and write the snapshot as JSON.
    Snapshot(SnapshotArgs),
}

const SIMULATE_KEYS: &[&str] = &[
    "graph", "n", "scheme", "k", "r", "p", "q", "trials", "seed", "order", "fixed-graph", "threads",
    "no-timing", "format", "output",
];

#[derive(Args)]
struct SimulateArgs {
    /// Flat TOML file whose keys mirror these flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// regular:D, gw:DMAX, er:N:AVG, sf:N:RATIO or edgelist:PATH
    #[arg(long)]
    graph: Option<String>,
    /// Infected nodes per snapshot [default: 400]
    #[arg(long)]
    n: Option<usize>,
    /// na, ad or rc (rumor center only) [default: na]
    #[arg(long)]
    scheme: Option<String>,
    /// Budget K, or a comma-separated sweep [default: 100]
    #[arg(long)]
    k: Option<String>,
    /// Repetition count: an integer, rstar, or rstar:{necessary,sufficient} [default: rstar]
    #[arg(long)]
    r: Option<String>,
    /// Identity truth probability (comma-separated sweep allowed) [default: 0.8]
    #[arg(long)]
    p: Option<String>,
    /// Direction truth probability (comma-separated sweep allowed) [default: 0.8]
    #[arg(long)]
    q: Option<String>,
    /// Trials per combination [default: 200]
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Candidate ordering for na: hop or centrality [default: hop]
    #[arg(long)]
    order: Option<String>,
    /// Draw one graph instance and reuse it for every trial.
    #[arg(long)]
    fixed_graph: bool,
    /// Worker threads [default: RQS_THREADS, else all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Write 0 for wall_time_ms so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// csv or json [default: csv]
    #[arg(long)]
    format: Option<String>,
    /// Output file [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    kind: BoundKind,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// Entropy of the infection ordering; necessary bounds solve for it when absent.
    #[arg(long)]
    ht: Option<f64>,
    /// Constant of the necessary bounds [default: 1]
    #[arg(long)]
    c: Option<f64>,
    /// Lower adaptivity-gap constant [default: 1]
    #[arg(long)]
    u1: Option<f64>,
    /// Upper adaptivity-gap constant [default: 1]
    #[arg(long)]
    u2: Option<f64>,
}

#[derive(Args)]
struct RstarArgs {
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    kind: BoundKind,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    k: u64,
}

#[derive(Args)]
struct CentralityArgs {
    /// Snapshot JSON as written by `rqs snapshot`.
    #[arg(long)]
    snapshot: PathBuf,
    /// Rows to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Hop-distance law between the source and the k-th infected node.
    Distance {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        /// Also estimate the law from this many simulated diffusions.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rumor centrality of every node of a small tree against brute force.
    Centrality {
        /// Tree edges, e.g. "0-1,1-2,1-3" (at most 10 nodes).
        #[arg(long)]
        edges: String,
    },
}

#[derive(Args)]
struct SnapshotArgs {
    #[arg(long)]
    graph: GraphSpec,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn out_writer(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| anyhow!("invalid value '{s}' for {what}"))
        })
        .collect()
}

/// Flag value, else config value, else default.
fn setting<T: FromStr>(flag: Option<T>, cfg: &FlatConfig, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(text) => text
            .parse()
            .map_err(|e| anyhow!("invalid value '{text}' for {key}: {e}")),
        None => Ok(default),
    }
}

fn switch(flag: bool, cfg: &FlatConfig, key: &str) -> Result<bool> {
    Ok(flag || setting(None, cfg, key, false)?)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => config::load(path, SIMULATE_KEYS)?,
        None => FlatConfig::new(),
    };
    let graph: GraphSpec = match args.graph.or_else(|| cfg.get("graph").cloned()) {
        Some(g) => g.parse()?,
        None => bail!("--graph is required (flag or config key)"),
    };
    let scheme: HarnessScheme = setting(args.scheme, &cfg, "scheme", "na".into())?.parse()?;
    let mut exp = ExperimentConfig::new(graph, scheme);
    exp.n_infected = setting(args.n, &cfg, "n", exp.n_infected)?;
    exp.budgets = parse_list(&setting(args.k, &cfg, "k", "100".into())?, "k")?;
    exp.r_mode = setting(args.r, &cfg, "r", "rstar".into())?.parse::<RMode>()?;
    exp.p = parse_list(&setting(args.p, &cfg, "p", "0.8".into())?, "p")?;
    exp.q = parse_list(&setting(args.q, &cfg, "q", "0.8".into())?, "q")?;
    exp.trials = setting(args.trials, &cfg, "trials", exp.trials)?;
    exp.master_seed = setting(args.seed, &cfg, "seed", 0)?;
    exp.candidate_order = setting(args.order, &cfg, "order", "hop".into())?.parse::<CandidateOrder>()?;
    exp.fixed_graph = switch(args.fixed_graph, &cfg, "fixed-graph")?;
    exp.threads = match args.threads {
        Some(t) => Some(t),
        None => cfg.get("threads").map(|t| t.parse()).transpose()?,
    };
    exp.record_timing = !switch(args.no_timing, &cfg, "no-timing")?;
    let format: OutputFormat = setting(args.format, &cfg, "format", "csv".into())?.parse()?;
    let output = args.output.or_else(|| cfg.get("output").map(PathBuf::from));

    let rows = rqs_core::harness::run_experiment(exp)?;
    let mut out = out_writer(output.as_ref())?;
    write_rows(&rows, format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn budget(args: BudgetArgs) -> Result<()> {
    let mut inputs = BudgetInputs::new(args.delta, args.d, args.p, args.q)?.with_constants(
        args.c.unwrap_or(1.0),
        args.u1.unwrap_or(1.0),
        args.u2.unwrap_or(1.0),
    );
    if let Some(h) = args.ht {
        inputs = inputs.with_h_t(h);
    }
    let value = budget_threshold(args.scheme, args.kind, &inputs)?.value();
    println!("scheme,kind,delta,d,p,q,threshold");
    println!(
        "{},{},{},{},{},{},{}",
        args.scheme, args.kind, args.delta, args.d, args.p, args.q, value
    );
    Ok(())
}

fn centrality(args: CentralityArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.snapshot)
        .with_context(|| format!("cannot read {}", args.snapshot.display()))?;
    let snapshot = Snapshot::from_json(&text, None)?;
    let table = likelihood_table(&snapshot)?;
    let mut out = io::stdout().lock();
    writeln!(out, "rank,node,log_score")?;
    for (i, (v, s)) in table.ranked().into_iter().take(args.top).enumerate() {
        writeln!(out, "{},{},{:.9}", i + 1, v, s)?;
    }
    Ok(())
}

fn oracle(cmd: OracleCommand) -> Result<()> {
    let mut out = io::stdout().lock();
    match cmd {
        OracleCommand::Distance { d, k, mc, seed } => {
            let empirical = match mc {
                Some(runs) => Some(distance_frequencies(d, k, runs, seed)?),
                None => None,
            };
            write!(out, "l,analytic")?;
            if empirical.is_some() {
                write!(out, ",empirical")?;
            }
            writeln!(out)?;
            for l in 1..k {
                write!(out, "{l},{:.12}", distance_distribution(d, k, l)?)?;
                if let Some(freq) = &empirical {
                    write!(out, ",{:.6}", freq[l])?;
                }
                writeln!(out)?;
            }
        }
        OracleCommand::Centrality { edges } => {
            let mut pairs = Vec::new();
            for e in edges.split(',') {
                let (a, b) = e
                    .trim()
                    .split_once('-')
                    .ok_or_else(|| anyhow!("edge '{e}' is not of the form u-v"))?;
                pairs.push((a.trim().parse::<usize>()?, b.trim().parse::<usize>()?));
            }
            let n = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1);
            let mut adj = vec![Vec::new(); n];
            for (a, b) in pairs {
                adj[a].push(b);
                adj[b].push(a);
            }
            let log_r = tree_log_rumor_centralities(&adj)?;
            writeln!(out, "node,rumor_centrality,brute_force")?;
            for (v, lr) in log_r.iter().enumerate() {
                let exact = brute_force_rumor_centrality(&adj, v)?;
                writeln!(out, "{v},{:.6},{exact}", lr.exp())?;
            }
        }
    }
    Ok(())
}

fn distance_frequencies(d: usize, k: usize, runs: usize, seed: u64) -> Result<Vec<f64>> {
    if k < 2 {
        bail!("k must be at least 2");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; k];
    for _ in 0..runs {
        let g = Arc::new(Graph::RegularTree(RegularTree::new(d)?));
        let snap = simulate_si(g, NodeId(0), k, &mut rng)?;
        let mut v = snap.infected()[k - 1];
        let mut hops = 0;
        while let Some(p) = snap.parent_of(v) {
            v = p;
            hops += 1;
        }
        counts[hops] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / runs.max(1) as f64).collect())
}

fn snapshot(args: SnapshotArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let graph = match &args.graph {
        GraphSpec::RegularTree { d } => Graph::RegularTree(RegularTree::new(*d)?),
        GraphSpec::GaltonWatson { d_max } => Graph::Finite(make_galton_watson(*d_max, 4 * args.n, &mut rng)?),
        GraphSpec::ErdosRenyi { n, avg_degree } => Graph::Finite(make_erdos_renyi(*n, *avg_degree, &mut rng)?),
        GraphSpec::ScaleFree { n, edge_node_ratio } => {
            Graph::Finite(make_scale_free(*n, *edge_node_ratio, &mut rng)?)
        }
        GraphSpec::EdgeList { path } => Graph::Finite(load_edge_list(BufReader::new(
            File::open(path).with_context(|| format!("cannot open {path}"))?,
        ))?),
    };
    let source = match graph.node_count() {
        Some(n) => NodeId::from_index(rng.random_range(0..n)),
        None => NodeId(0),
    };
    let snap = simulate_si(Arc::new(graph), source, args.n, &mut rng)?;
    let mut out = out_writer(args.output.as_ref())?;
    writeln!(out, "{}", snap.to_json()?)?;
    out.flush()?;
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            std::process::exit(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(*a),
        Command::Budget(a) => budget(a),
        Command::Rstar(a) => choose_r_star(a.scheme, a.kind, a.k, a.d, a.p, a.q)
            .map(|r| println!("{r}"))
            .map_err(Into::into),
        Command::Centrality(a) => centrality(a),
        Command::Oracle(c) => oracle(c),
        Command::Snapshot(a) => snapshot(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
