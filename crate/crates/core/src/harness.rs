//! Monte Carlo experiments, moment diagnostics and report export.
//!
//! Everything here runs in `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clique::{count_cliques, MaxCliqueSolver, DEFAULT_NODE_BUDGET};
use crate::distributions::{TruncatedWeight, WeightDistribution};
use crate::error::{invalid, Error, Result};
use crate::model::{
    check_assumptions_with_threshold, instance_from_weights, sample_graph, sample_truncated_weights, AssumptionReport,
    ScalingSchedule, DEFAULT_ASSUMPTION_THRESHOLD,
};
use crate::typical::{TypicalCliqueResult, TypicalProblem, DEFAULT_DELTA};
use crate::Scalar;

/// Largest graph a concentration experiment may request unless raised.
pub const DEFAULT_MAX_N: u64 = 1 << 20;
pub const DEFAULT_EPSILON: f64 = 0.49;
pub const DEFAULT_TRIALS: usize = 100;
/// Largest `n` for the first-moment diagnostic.
pub const FIRST_MOMENT_MAX_N: usize = 64;
/// Largest `n` for the second-moment diagnostic.
pub const SECOND_MOMENT_MAX_N: usize = 32;
/// Environment variable that overrides the worker count.
pub const THREADS_ENV: &str = "CLIQUE_LAB_THREADS";

const THRESHOLD_NOTE: &str =
    "two-point concentration is asymptotic with no rate; finite-n hit-rate thresholds are engineering choices";

fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}
fn default_threshold() -> f64 {
    DEFAULT_ASSUMPTION_THRESHOLD
}
fn default_max_n() -> u64 {
    DEFAULT_MAX_N
}
fn default_eta_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.25, 0.5]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(invalid("format", format!("expected csv or json, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dist: WeightDistribution<f64>,
    pub sched: ScalingSchedule<f64>,
    pub n_values: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_budget")]
    pub node_budget: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<ExportFormat>,
    #[serde(default = "default_threshold")]
    pub assumption_threshold: f64,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    #[serde(default = "default_max_n")]
    pub max_n: u64,
    /// Worker count; `None` uses all cores. `CLIQUE_LAB_THREADS` wins over both.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(dist: WeightDistribution<f64>, sched: ScalingSchedule<f64>, n_values: Vec<u64>) -> Self {
        ExperimentConfig {
            dist,
            sched,
            n_values,
            trials: DEFAULT_TRIALS,
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
            master_seed: 0,
            node_budget: DEFAULT_NODE_BUDGET,
            output_path: None,
            format: None,
            assumption_threshold: DEFAULT_ASSUMPTION_THRESHOLD,
            eta_grid: default_eta_grid(),
            max_n: DEFAULT_MAX_N,
            threads: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        self.sched.validate()?;
        if let ScalingSchedule::Power { exponent } = self.sched {
            if exponent > 0.5 {
                return Err(invalid("sched", format!("power exponent must be at most 1/2 for graphs, got {exponent}")));
            }
        }
        if self.trials < 1 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(invalid("epsilon", format!("must lie in (0, 1/2), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", format!("must be positive, got {}", self.delta)));
        }
        if self.node_budget < 1 {
            return Err(invalid("node_budget", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.assumption_threshold) {
            return Err(invalid(
                "assumption_threshold",
                format!("must lie in [0, 1], got {}", self.assumption_threshold),
            ));
        }
        if let Some(eta) = self.eta_grid.iter().find(|&&e| !(e > 0.0)) {
            return Err(invalid("eta_grid", format!("entries must be positive, got {eta}")));
        }
        if self.n_values.is_empty() {
            return Err(invalid("n_values", "must not be empty"));
        }
        for &n in &self.n_values {
            if n < 2 || n > self.max_n {
                return Err(invalid("n_values", format!("each n must lie in [2, {}], got {n}", self.max_n)));
            }
            if n > u32::MAX as u64 {
                return Err(invalid("n_values", format!("n = {n} exceeds the 32-bit vertex index range")));
            }
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        Ok(())
    }
}

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `t` at size `n`: `mix(mix(mix(master) ^ n) ^ t)`.
pub fn trial_seed(master: u64, n: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n) ^ trial)
}

/// Worker count from `CLIQUE_LAB_THREADS`, falling back to `configured`.
pub fn resolve_threads(configured: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(invalid("CLIQUE_LAB_THREADS", format!("expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(configured),
    }
}

fn in_pool<R: Send>(threads: Option<usize>, job: impl FnOnce() -> R + Send) -> Result<R> {
    match resolve_threads(threads)? {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| invalid("threads", e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    /// `None` when the clique search ran out of budget.
    pub omega: Option<usize>,
    pub hit: bool,
    pub nodes_explored: u64,
    pub elapsed_seconds: f64,
}

impl TrialOutcome {
    pub fn is_censored(&self) -> bool {
        self.omega.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: u64,
    pub omega_bar: f64,
    pub typical: TypicalCliqueResult<f64>,
    /// `floor(omega_bar - epsilon)`.
    pub interval_lo: i64,
    /// `floor(omega_bar + epsilon)`.
    pub interval_hi: i64,
    pub trials: Vec<TrialOutcome>,
    pub hits: usize,
    pub censored: usize,
    /// Set when some trial exceeded the node budget; those trials are then
    /// left out of the `hit_rate` denominator.
    pub budget_censored: bool,
    /// `None` when every trial was censored.
    pub hit_rate: Option<f64>,
    pub assumption: AssumptionReport<f64>,
}

impl ExperimentRecord {
    pub fn contains(&self, omega: usize) -> bool {
        let w = omega as i64;
        self.interval_lo <= w && w <= self.interval_hi
    }

    fn aggregate(&mut self) {
        self.hits = self.trials.iter().filter(|t| t.hit).count();
        self.censored = self.trials.iter().filter(|t| t.is_censored()).count();
        self.budget_censored = self.censored > 0;
        let denominator = self.trials.len() - self.censored;
        self.hit_rate = (denominator > 0).then(|| self.hits as f64 / denominator as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dist: WeightDistribution<f64>,
    pub sched: ScalingSchedule<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub master_seed: u64,
    pub node_budget: u64,
    pub threshold_note: String,
    pub records: Vec<ExperimentRecord>,
}

impl ExperimentReport {
    pub fn empty(cfg: &ExperimentConfig) -> Self {
        ExperimentReport {
            dist: cfg.dist,
            sched: cfg.sched,
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            master_seed: cfg.master_seed,
            node_budget: cfg.node_budget,
            threshold_note: THRESHOLD_NOTE.into(),
            records: Vec::new(),
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, n: u64, trial: u64, record: &ExperimentRecord) -> Result<TrialOutcome> {
    let seed = trial_seed(cfg.master_seed, n, trial);
    let instance = sample_graph(&cfg.dist, &cfg.sched, n as usize, seed)?;
    match MaxCliqueSolver::new(cfg.node_budget).solve(&instance.graph) {
        Ok(res) => Ok(TrialOutcome {
            trial,
            seed,
            omega: Some(res.size),
            hit: record.contains(res.size),
            nodes_explored: res.nodes_explored,
            elapsed_seconds: res.elapsed.as_secs_f64(),
        }),
        Err(Error::BudgetExceeded { budget }) => {
            Ok(TrialOutcome { trial, seed, omega: None, hit: false, nodes_explored: budget, elapsed_seconds: 0.0 })
        }
        Err(e) => Err(e),
    }
}

/// Samples `trials` graphs per `n`, solves each exactly and scores it
/// against `[floor(omega_bar - eps), floor(omega_bar + eps)]`.
pub fn run_concentration_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::empty(cfg);
    for &n in &cfg.n_values {
        let typical = TypicalProblem::new(&cfg.dist, &cfg.sched, n, cfg.delta)?.solve(f64::ROOT_TOL)?;
        let assumption = check_assumptions_with_threshold(
            &cfg.dist,
            &cfg.sched,
            n,
            cfg.delta,
            &cfg.eta_grid,
            cfg.assumption_threshold,
        )?;
        let omega_bar = typical.omega_bar;
        let mut record = ExperimentRecord {
            n,
            omega_bar,
            typical,
            interval_lo: (omega_bar - cfg.epsilon).floor() as i64,
            interval_hi: (omega_bar + cfg.epsilon).floor() as i64,
            trials: Vec::new(),
            hits: 0,
            censored: 0,
            budget_censored: false,
            hit_rate: None,
            assumption,
        };
        let outcomes: Vec<Result<TrialOutcome>> = in_pool(cfg.threads, || {
            (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(cfg, n, t, &record)).collect()
        })?;
        record.trials = outcomes.into_iter().collect::<Result<_>>()?;
        record.aggregate();
        report.records.push(record);
    }
    Ok(report)
}

/// `x` with 12 significant digits, in the shorter of fixed and scientific
/// notation, trailing zeros removed.
pub fn format_sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "dist",
    "sched",
    "n",
    "delta",
    "epsilon",
    "omega_bar",
    "interval_lo",
    "interval_hi",
    "trial",
    "seed",
    "omega",
    "hit",
];

/// One row per trial. A censored trial has `omega = censored`, `hit = false`.
pub fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let csv_err = |e: csv::Error| -> Error {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Io(std::io::Error::other(format!("{other:?}"))),
        }
    };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let dist = report.dist.to_string();
    let sched = report.sched.to_string();
    for rec in &report.records {
        for t in &rec.trials {
            let omega = t.omega.map_or_else(|| "censored".to_string(), |w| w.to_string());
            w.write_record([
                dist.as_str(),
                sched.as_str(),
                &rec.n.to_string(),
                &format_sig12(report.delta),
                &format_sig12(report.epsilon),
                &format_sig12(rec.omega_bar),
                &rec.interval_lo.to_string(),
                &rec.interval_hi.to_string(),
                &t.trial.to_string(),
                &t.seed.to_string(),
                &omega,
                if t.hit { "true" } else { "false" },
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mirrors the report structure; floats keep full precision so a re-import
/// reproduces every value bit for bit.
pub fn write_json<W: Write>(report: &ExperimentReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json_report(path: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

pub fn export_report(report: &ExperimentReport, format: ExportFormat, path: &Path) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        ExportFormat::Csv => write_csv(report, out),
        ExportFormat::Json => write_json(report, out),
    }
}

/// `E[N_r | T]`, `E[N_r^2 | T]` and derived quantities from the moment formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMoments {
    pub n: usize,
    pub r: usize,
    pub scaling: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `E[N_r^2] / E[N_r]^2`.
    pub ratio: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn truncated_for(
    dist: &WeightDistribution<f64>,
    sched: &ScalingSchedule<f64>,
    n: usize,
    delta: f64,
) -> Result<(TruncatedWeight<f64>, f64)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    let s = sched.value(n.max(2) as u64)?;
    Ok((TruncatedWeight::new(*dist, s / (1.0 + delta))?, s))
}

/// Closed-form moments of `N_r` given the truncation event.
///
/// With `M_k = E[(W~/s)^k]`, `E[N_r] = C(n,r) M_{r-1}^r` and
/// `E[N_r^2] = sum_k C(n,r) C(r,k) C(n-r,r-k) M_{r-1}^{2(r-k)} M_{2r-1-k}^k`,
/// where `k` counts shared vertices.
pub fn analytic_moments(
    dist: &WeightDistribution<f64>,
    sched: &ScalingSchedule<f64>,
    n: usize,
    r: usize,
    delta: f64,
) -> Result<AnalyticMoments> {
    if r < 1 || r > n {
        return Err(invalid("r", format!("must lie in [1, n = {n}], got {r}")));
    }
    let (tw, s) = truncated_for(dist, sched, n, delta)?;
    let ln_s = s.ln();
    let ln_m = |k: usize| -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        Ok(tw.ln_moment(k as f64)? - k as f64 * ln_s)
    };
    let lm_r = ln_m(r - 1)?;
    let c_nr = binomial(n, r);
    let mean = c_nr * (r as f64 * lm_r).exp();
    let mut second = 0.0;
    for k in 0..=r {
        let mut ln_term = 2.0 * (r - k) as f64 * lm_r;
        if k > 0 {
            ln_term += k as f64 * ln_m(2 * r - 1 - k)?;
        }
        second += c_nr * binomial(r, k) * binomial(n - r, r - k) * ln_term.exp();
    }
    Ok(AnalyticMoments {
        n,
        r,
        scaling: s,
        mean,
        second_moment: second,
        variance: second - mean * mean,
        ratio: second / (mean * mean),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDiagnostic {
    pub dist: String,
    pub sched: String,
    pub n: usize,
    pub r: usize,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub analytic: AnalyticMoments,
    /// The quantity compared: `E[N_r]` or `E[N_r^2]`.
    pub target: f64,
    pub mc_mean: f64,
    pub mc_variance: f64,
    pub std_error: f64,
    /// `(mc_mean - target) / std_error`; 0 when both the error and the
    /// spread vanish.
    pub z_score: f64,
}

fn clique_counts(
    dist: &WeightDistribution<f64>,
    sched: &ScalingSchedule<f64>,
    n: usize,
    r: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials < 2 {
        return Err(invalid("trials", "need at least 2 trials for a standard error"));
    }
    let (tw, s) = truncated_for(dist, sched, n, delta)?;
    let counts: Vec<Result<f64>> = in_pool(None, || {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let seed_t = trial_seed(seed, n as u64, t);
                let weights = sample_truncated_weights(&tw, n, seed_t);
                let g = instance_from_weights(weights, s, seed_t).graph;
                Ok(count_cliques(&g, r)?.to_f64().unwrap_or(f64::INFINITY))
            })
            .collect()
    })?;
    counts.into_iter().collect()
}

fn summarize(
    dist: &WeightDistribution<f64>,
    sched: &ScalingSchedule<f64>,
    analytic: AnalyticMoments,
    target: f64,
    samples: &[f64],
    delta: f64,
    seed: u64,
) -> MomentDiagnostic {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se = (var / m).sqrt();
    let diff = mean - target;
    let z = if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * target.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    MomentDiagnostic {
        dist: dist.to_string(),
        sched: sched.to_string(),
        n: analytic.n,
        r: analytic.r,
        delta,
        trials: samples.len(),
        seed,
        analytic,
        target,
        mc_mean: mean,
        mc_variance: var,
        std_error: se,
        z_score: z,
    }
}

/// Monte Carlo mean of `N_r` over graphs with truncated weights against
/// `E[N_r | T]`.
pub fn first_moment_diagnostic(
    dist: &WeightDistribution<f64>,
    sched: &ScalingSchedule<f64>,
    n: usize,
    r: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<MomentDiagnostic> {
    if n > FIRST_MOMENT_MAX_N {
        return Err(Error::SizeLimit { operation: "first_moment_diagnostic", n, limit: FIRST_MOMENT_MAX_N });
    }
    let analytic = analytic_moments(dist, sched, n, r, delta)?;
    let counts = clique_counts(dist, sched, n, r, delta, trials, seed)?;
    Ok(summarize(dist, sched, analytic, analytic.mean, &counts, delta, seed))
}

/// Monte Carlo mean of `N_r^2` against `E[N_r^2 | T]`.
pub fn second_moment_diagnostic(
    dist: &WeightDistribution<f64>,
    sched: &ScalingSchedule<f64>,
    n: usize,
    r: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<MomentDiagnostic> {
    if n > SECOND_MOMENT_MAX_N {
        return Err(Error::SizeLimit { operation: "second_moment_diagnostic", n, limit: SECOND_MOMENT_MAX_N });
    }
    let analytic = analytic_moments(dist, sched, n, r, delta)?;
    let squares: Vec<f64> = clique_counts(dist, sched, n, r, delta, trials, seed)?.into_iter().map(|c| c * c).collect();
    Ok(summarize(dist, sched, analytic, analytic.second_moment, &squares, delta, seed))
}
