//! Seeded Monte Carlo experiment runner.
//!
//! Every trial draws its randomness from a stream seeded by
//! `(master_seed, combination index, trial index)`, so results do not
//! depend on the thread count or on scheduling.

mod output;
mod stats;

use std::fs::File;
use std::io::BufReader;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{choose_r_star, BoundKind, Scheme};
use crate::centrality::likelihood_table;
use crate::diffusion::simulate_si;
use crate::error::{invalid_param, Error, Result};
use crate::estimators::{run_mvad_with, run_mvna_with, AdConfig, CandidateOrder, NaConfig};
use crate::graph::{
    load_edge_list, make_erdos_renyi, make_galton_watson, make_scale_free, FiniteGraph, Graph,
    GraphSpec, NodeId, RegularTree,
};
use crate::respondent::TruthModel;

pub use output::{
    to_csv_string, write_csv, write_json, write_rows, OutputFormat, CSV_HEADER, ERROR_MARKER,
};
pub use stats::{binomial_se, trial_seed, wilson_interval, Z_95};

/// Environment variable overriding the default worker count.
pub const THREADS_ENV: &str = "RQS_THREADS";

/// Galton-Watson trees are grown to this multiple of the infection target.
const GW_SIZE_FACTOR: usize = 4;

/// Estimator run by the harness. `Rc` answers with the rumor center and
/// spends no budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarnessScheme {
    Na,
    Ad,
    Rc,
}

impl FromStr for HarnessScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "na" => Ok(HarnessScheme::Na),
            "ad" => Ok(HarnessScheme::Ad),
            "rc" => Ok(HarnessScheme::Rc),
            _ => Err(invalid_param(format!("unknown scheme '{s}' (expected na, ad or rc)"))),
        }
    }
}

impl std::fmt::Display for HarnessScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HarnessScheme::Na => "na",
            HarnessScheme::Ad => "ad",
            HarnessScheme::Rc => "rc",
        })
    }
}

impl From<Scheme> for HarnessScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Na => HarnessScheme::Na,
            Scheme::Ad => HarnessScheme::Ad,
        }
    }
}

/// How the repetition count is chosen for each combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RMode {
    Fixed(u64),
    RStar(BoundKind),
}

impl FromStr for RMode {
    type Err = Error;

    /// Accepts an integer, `rstar` (sufficient bound) or `rstar:KIND`.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(r) = s.parse::<u64>() {
            return Ok(RMode::Fixed(r));
        }
        match s.split_once(':') {
            Some(("rstar", kind)) => Ok(RMode::RStar(kind.parse()?)),
            None if s == "rstar" => Ok(RMode::RStar(BoundKind::Sufficient)),
            _ => Err(invalid_param(format!("unknown r mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for RMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RMode::Fixed(r) => write!(f, "{r}"),
            RMode::RStar(kind) => write!(f, "rstar:{kind}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub n_infected: usize,
    pub scheme: HarnessScheme,
    pub budgets: Vec<u64>,
    pub r_mode: RMode,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub candidate_order: CandidateOrder,
    /// Reuse one graph instance for every trial of a random family.
    pub fixed_graph: bool,
    /// Worker count; `None` defers to `RQS_THREADS`, then to the core count.
    pub threads: Option<usize>,
    /// When false, `wall_time_ms` is written as 0 so output is byte-stable.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, scheme: HarnessScheme) -> Self {
        ExperimentConfig {
            graph,
            n_infected: 400,
            scheme,
            budgets: vec![100],
            r_mode: RMode::RStar(BoundKind::Sufficient),
            p: vec![0.8],
            q: vec![0.8],
            trials: 200,
            master_seed: 0,
            candidate_order: CandidateOrder::Hop,
            fixed_graph: false,
            threads: None,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.trials < 1 {
            return Err(invalid_param("trials must be at least 1"));
        }
        if self.n_infected < 1 {
            return Err(invalid_param("n_infected must be at least 1"));
        }
        if self.budgets.is_empty() || self.p.is_empty() || self.q.is_empty() {
            return Err(invalid_param("budget, p and q sweeps must be non-empty"));
        }
        if self.threads == Some(0) {
            return Err(invalid_param("threads must be at least 1"));
        }
        for &p in &self.p {
            for &q in &self.q {
                match self.graph {
                    GraphSpec::RegularTree { d } => TruthModel::for_degree(p, q, d)?,
                    _ => TruthModel::new(p, q)?,
                };
            }
        }
        Ok(())
    }

    /// Parameter combinations in sweep order (budget outermost, then p,
    /// then q).
    pub fn combinations(&self) -> Vec<Combination> {
        let mut out = Vec::new();
        for &k in &self.budgets {
            for &p in &self.p {
                for &q in &self.q {
                    out.push(Combination { k, p, q });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub k: u64,
    pub p: f64,
    pub q: f64,
}

/// One aggregated row. Statistic fields are `None` when the combination
/// could not be run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: HarnessScheme,
    pub graph: String,
    pub d: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: u64,
    pub r: u64,
    pub p: f64,
    pub q: f64,
    pub trials: u64,
    pub detections: u64,
    pub p_hat: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub mean_budget: f64,
    pub wall_time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl ResultRow {
    /// Standard error of `p_hat`, or `None` for failed rows.
    pub fn standard_error(&self) -> Option<f64> {
        self.p_hat.map(|p| binomial_se(p, self.trials))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub source: NodeId,
    pub estimate: NodeId,
    pub detected: bool,
    pub budget_used: u64,
}

/// Graph material shared by all trials of an experiment.
enum GraphPlan {
    Tree(usize),
    Shared(Arc<Graph>),
    PerTrial,
}

/// Degree parameter used for r* and reported in the `d` column: the tree
/// degree, the Galton-Watson maximum degree, or the rounded mean degree
/// (at least 3) of a finite graph.
fn effective_degree(spec: &GraphSpec, shared: Option<&FiniteGraph>) -> usize {
    let from_mean = |m: f64| (m.round() as usize).max(3);
    match spec {
        GraphSpec::RegularTree { d } => *d,
        GraphSpec::GaltonWatson { d_max } => *d_max,
        GraphSpec::ErdosRenyi { avg_degree, .. } => from_mean(*avg_degree),
        GraphSpec::ScaleFree { edge_node_ratio, .. } => from_mean(2.0 * edge_node_ratio),
        GraphSpec::EdgeList { .. } => shared.map_or(3, |g| from_mean(g.mean_degree())),
    }
}

fn generate<R: Rng + ?Sized>(spec: &GraphSpec, n_infected: usize, rng: &mut R) -> Result<Graph> {
    Ok(match spec {
        GraphSpec::RegularTree { d } => Graph::RegularTree(RegularTree::new(*d)?),
        GraphSpec::GaltonWatson { d_max } => {
            Graph::Finite(make_galton_watson(*d_max, GW_SIZE_FACTOR * n_infected, rng)?)
        }
        GraphSpec::ErdosRenyi { n, avg_degree } => Graph::Finite(make_erdos_renyi(*n, *avg_degree, rng)?),
        GraphSpec::ScaleFree { n, edge_node_ratio } => {
            Graph::Finite(make_scale_free(*n, *edge_node_ratio, rng)?)
        }
        GraphSpec::EdgeList { path } => {
            Graph::Finite(load_edge_list(BufReader::new(File::open(path)?))?)
        }
    })
}

/// A fully prepared experiment: graph material loaded and per-combination
/// repetition counts resolved.
pub struct Experiment {
    config: ExperimentConfig,
    plan: GraphPlan,
    d: usize,
    combos: Vec<(Combination, Result<u64, String>)>,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let plan = match &config.graph {
            // a lazily grown tree assigns ids in visiting order, so every
            // trial gets its own instance
            GraphSpec::RegularTree { d } => GraphPlan::Tree(*d),
            GraphSpec::EdgeList { .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                GraphPlan::Shared(Arc::new(generate(&config.graph, config.n_infected, &mut rng)?))
            }
            spec if config.fixed_graph => {
                let seed = trial_seed(config.master_seed, u64::MAX, 0);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                GraphPlan::Shared(Arc::new(generate(spec, config.n_infected, &mut rng)?))
            }
            _ => GraphPlan::PerTrial,
        };
        let shared = match &plan {
            GraphPlan::Shared(g) => g.as_finite(),
            _ => None,
        };
        let d = effective_degree(&config.graph, shared);
        let combos = config
            .combinations()
            .into_iter()
            .map(|c| {
                let r = resolve_r(&config, d, &c).map_err(|e| e.to_string());
                (c, r)
            })
            .collect();
        Ok(Experiment {
            config,
            plan,
            d,
            combos,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn combinations(&self) -> impl Iterator<Item = &Combination> {
        self.combos.iter().map(|(c, _)| c)
    }

    /// Repetition count used for a combination.
    pub fn repetitions(&self, combination: usize) -> Result<u64> {
        match &self.combos[combination].1 {
            Ok(r) => Ok(*r),
            Err(msg) => Err(invalid_param(msg.clone())),
        }
    }

    /// Runs one trial in isolation; identical to what [`Experiment::run`]
    /// computes for the same indices.
    pub fn run_trial(&self, combination: usize, trial: u64) -> Result<TrialOutcome> {
        let (combo, _) = &self.combos[combination];
        let r = self.repetitions(combination)?;
        let seed = trial_seed(self.config.master_seed, combination as u64, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = match &self.plan {
            GraphPlan::Tree(d) => Arc::new(Graph::RegularTree(RegularTree::new(*d)?)),
            GraphPlan::Shared(g) => Arc::clone(g),
            GraphPlan::PerTrial => Arc::new(generate(&self.config.graph, self.config.n_infected, &mut rng)?),
        };
        let source = match graph.node_count() {
            None => NodeId(0),
            Some(n) => NodeId::from_index(rng.random_range(0..n)),
        };
        let snapshot = simulate_si(graph, source, self.config.n_infected, &mut rng)?;
        let likelihood = likelihood_table(&snapshot)?;
        let model = TruthModel::new(combo.p, combo.q)?;
        let (estimate, budget_used) = match self.config.scheme {
            HarnessScheme::Rc => (likelihood.center(), 0),
            HarnessScheme::Na => {
                let config = NaConfig {
                    budget: combo.k,
                    r,
                    order: self.config.candidate_order,
                    use_directions: true,
                };
                let out = run_mvna_with(&snapshot, &likelihood, &config, &model, &mut rng)?;
                (out.estimate, out.budget_used)
            }
            HarnessScheme::Ad => {
                let config = AdConfig { budget: combo.k, r };
                let out = run_mvad_with(&snapshot, &likelihood, &config, &model, &mut rng)?;
                (out.estimate, out.budget_used)
            }
        };
        Ok(TrialOutcome {
            source,
            estimate,
            detected: estimate == source,
            budget_used,
        })
    }

    fn run_row(&self, combination: usize) -> ResultRow {
        let (combo, r) = &self.combos[combination];
        let start = Instant::now();
        let mut row = ResultRow {
            scheme: self.config.scheme,
            graph: self.config.graph.to_string(),
            d: self.d,
            n: self.config.n_infected,
            k: combo.k,
            r: *r.as_ref().unwrap_or(&0),
            p: combo.p,
            q: combo.q,
            trials: self.config.trials,
            detections: 0,
            p_hat: None,
            ci_lo: None,
            ci_hi: None,
            mean_budget: 0.0,
            wall_time_ms: 0,
            error: None,
        };
        let outcomes: Result<Vec<TrialOutcome>> = (0..self.config.trials)
            .into_par_iter()
            .map(|t| self.run_trial(combination, t))
            .collect();
        match outcomes {
            Ok(outcomes) => {
                let detections = outcomes.iter().filter(|o| o.detected).count() as u64;
                let spent: u64 = outcomes.iter().map(|o| o.budget_used).sum();
                let (lo, hi) = wilson_interval(detections, row.trials, Z_95)
                    .expect("trials >= 1 and detections <= trials");
                row.detections = detections;
                row.p_hat = Some(detections as f64 / row.trials as f64);
                row.ci_lo = Some(lo);
                row.ci_hi = Some(hi);
                row.mean_budget = spent as f64 / row.trials as f64;
            }
            Err(e) => {
                log::warn!("combination {combination} ({combo:?}) failed: {e}");
                row.error = Some(e.to_string());
            }
        }
        if self.config.record_timing {
            row.wall_time_ms = start.elapsed().as_millis() as u64;
        }
        row
    }

    /// Runs every combination. Rows come back in sweep order.
    pub fn run(&self) -> Result<Vec<ResultRow>> {
        let threads = resolve_threads(self.config.threads)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| invalid_param(format!("cannot build thread pool: {e}")))?;
        log::debug!("running {} combinations on {threads} threads", self.combos.len());
        Ok(pool.install(|| (0..self.combos.len()).map(|i| self.run_row(i)).collect()))
    }
}

fn resolve_r(config: &ExperimentConfig, d: usize, c: &Combination) -> Result<u64> {
    let scheme = match config.scheme {
        HarnessScheme::Rc => return Ok(0),
        HarnessScheme::Na => Scheme::Na,
        HarnessScheme::Ad => Scheme::Ad,
    };
    let r = match config.r_mode {
        RMode::Fixed(r) => r,
        RMode::RStar(kind) => choose_r_star(scheme, kind, c.k, d, c.p, c.q)?,
    };
    if r < 1 || r > c.k {
        return Err(invalid_param(format!(
            "repetition count must satisfy 1 <= r <= K, got r={r}, K={}",
            c.k
        )));
    }
    Ok(r)
}

/// Worker count: explicit setting, else `RQS_THREADS`, else all cores.
pub fn resolve_threads(explicit: Option<usize>) -> Result<usize> {
    if let Some(n) = explicit {
        return Ok(n.max(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(invalid_param(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Prepares and runs an experiment.
pub fn run_experiment(config: ExperimentConfig) -> Result<Vec<ResultRow>> {
    Experiment::prepare(config)?.run()
}
