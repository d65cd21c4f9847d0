//! `clique-lab` command-line driver.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cliquelab::clique::MaxCliqueSolver;
use cliquelab::harness::{
    export_report, first_moment_diagnostic, run_concentration_experiment, second_moment_diagnostic, trial_seed,
    ExperimentConfig, ExportFormat,
};
use cliquelab::model::{check_assumptions_with_threshold, sample_graph, Graph};
use cliquelab::predictors::{er_comparison, TableRow};
use cliquelab::typical::TypicalProblem;
use cliquelab::{Error, Scalar};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_REGIME: i32 = 2;

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Graph size; repeat to give several. Replaces `n_values`.
    #[arg(long = "n", global = true, value_parser = parse_count)]
    n: Vec<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Export path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Export format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the typical clique number at each n.
    SolveTypical,
    /// Compare closed-form predictions with the exact solver.
    Predict {
        /// degenerate, bernoulli, uniform, beta, gamma, half_normal, log_normal or all.
        #[arg(long, default_value = "all")]
        family: String,
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        /// Constant scaling for the bounded-support rows.
        #[arg(long, default_value_t = 2.0)]
        s: f64,
    },
    /// Run the two-point concentration experiment.
    Simulate,
    /// Exact maximum clique of a sampled graph or an edge-list file.
    Clique {
        /// Edge list (`n m` header, then `u v` lines) instead of sampling.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Node budget; defaults to the config value.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Probability that the maximum weight stays below the cutoff.
    CheckAssumptions,
    /// First- and second-moment diagnostics of the clique count.
    DiagnoseMoments {
        /// Clique size; repeat to give several.
        #[arg(long = "r", default_values_t = vec![2usize, 3])]
        r: Vec<usize>,
    },
}

/// Accepts plain integers and exact float forms such as `1e10`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. }
        | Error::OutsideRegime(_)
        | Error::Numerics(_)
        | Error::BracketFailure(_)
        | Error::IterationDivergence { .. }
        | Error::DegenerateBase { .. } => EXIT_REGIME,
        Error::InvalidParameter { .. }
        | Error::ZeroMass { .. }
        | Error::SizeLimit { .. }
        | Error::Io(_)
        | Error::Json(_) => EXIT_INVALID,
    }
}

fn load_config(common: &Common) -> cliquelab::Result<ExperimentConfig> {
    let path = common.config.as_ref().ok_or_else(|| Error::InvalidParameter {
        name: "config",
        reason: "this subcommand needs --config <json-path>".into(),
    })?;
    let mut cfg = ExperimentConfig::from_json_file(path)?;
    if !common.n.is_empty() {
        cfg.n_values = common.n.clone();
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(e) = common.epsilon {
        cfg.epsilon = e;
    }
    if let Some(d) = common.delta {
        cfg.delta = d;
    }
    if let Some(o) = &common.out {
        cfg.output_path = Some(o.clone());
    }
    if let Some(f) = &common.format {
        cfg.format = Some(f.parse()?);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn infer_format(explicit: Option<ExportFormat>, path: &Path) -> ExportFormat {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => ExportFormat::Json,
        _ => ExportFormat::Csv,
    })
}

/// JSON export for subcommands without a tabular file format.
fn write_json_out<S: serde::Serialize>(common: &Common, value: &S) -> cliquelab::Result<()> {
    let Some(path) = &common.out else {
        return Ok(());
    };
    if let Some(f) = &common.format {
        if f.parse::<ExportFormat>()? != ExportFormat::Json {
            return Err(Error::InvalidParameter { name: "format", reason: "this subcommand exports json only".into() });
        }
    }
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn solve_typical(common: &Common, out: &mut dyn Write) -> cliquelab::Result<()> {
    let cfg = load_config(common)?;
    writeln!(out, "{:>14} {:>14} {:>12} {:>12} {:>12} {:>6}", "n", "omega_bar", "beta_n", "b", "residual", "iters")?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let res = TypicalProblem::<f64>::new(&cfg.dist, &cfg.sched, n, cfg.delta)?.solve(f64::ROOT_TOL)?;
        writeln!(
            out,
            "{:>14} {:>14.8} {:>12.6} {:>12.6} {:>12.3e} {:>6}",
            n, res.omega_bar, res.beta_n, res.b, res.residual, res.iterations
        )?;
        rows.push(serde_json::json!({ "n": n, "result": res }));
    }
    write_json_out(common, &rows)
}

fn predict(common: &Common, family: &str, phi: f64, s: f64, out: &mut dyn Write) -> cliquelab::Result<()> {
    let family = family.to_ascii_lowercase();
    let known = ["all", "degenerate", "bernoulli", "uniform", "beta", "gamma", "half_normal", "log_normal"];
    if !known.contains(&family.as_str()) {
        return Err(Error::InvalidParameter { name: "family", reason: format!("unknown family `{family}`") });
    }
    let delta = common.delta.unwrap_or(cliquelab::typical::DEFAULT_DELTA);
    let n_values =
        if common.n.is_empty() { vec![10_000, 1_000_000, 100_000_000, 10_000_000_000] } else { common.n.clone() };
    let mut rows = TableRow::table1(s);
    for table in [2, 3] {
        rows.extend(TableRow::growing(table, phi, 2.0, 1.0, 1.0)?);
    }
    writeln!(
        out,
        "{:<18} {:>5} {:>14} {:<26} {:>12} {:>12} {:>8} {:>12}",
        "family", "table", "n", "schedule", "prediction", "exact", "ratio", "er"
    )?;
    let mut records = Vec::new();
    for row in rows.iter().filter(|r| family == "all" || r.family_name() == family) {
        for &n in &n_values {
            let exact = TypicalProblem::new(&row.dist, &row.sched, n, delta)?.solve(f64::ROOT_TOL)?.omega_bar;
            let er = er_comparison(n, &row.dist, &row.sched).ok();
            for p in row.predict(n)? {
                let er_text = er.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
                writeln!(
                    out,
                    "{:<18} {:>5} {:>14} {:<26} {:>12.4} {:>12.4} {:>8.4} {:>12}",
                    p.family.to_string(),
                    row.table,
                    n,
                    row.sched.to_string(),
                    p.value,
                    exact,
                    p.value / exact,
                    er_text
                )?;
                records.push(serde_json::json!({
                    "table": row.table, "n": n, "dist": row.dist, "sched": row.sched,
                    "prediction": p, "exact": exact, "ratio": p.value / exact, "er_comparison": er,
                }));
            }
        }
    }
    write_json_out(common, &records)
}

fn simulate(common: &Common, out: &mut dyn Write) -> cliquelab::Result<()> {
    let cfg = load_config(common)?;
    let report = run_concentration_experiment(&cfg)?;
    writeln!(out, "{} / {} / epsilon {} / delta {}", report.dist, report.sched, report.epsilon, report.delta)?;
    writeln!(
        out,
        "{:>10} {:>10} {:>9} {:>7} {:>8} {:>9} {:>10}",
        "n", "omega_bar", "interval", "trials", "hits", "censored", "hit_rate"
    )?;
    for rec in &report.records {
        let rate = rec.hit_rate.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"));
        writeln!(
            out,
            "{:>10} {:>10.4} {:>9} {:>7} {:>8} {:>9} {:>10}",
            rec.n,
            rec.omega_bar,
            format!("[{},{}]", rec.interval_lo, rec.interval_hi),
            rec.trials.len(),
            rec.hits,
            rec.censored,
            rate
        )?;
        if !rec.assumption.satisfied_estimate {
            writeln!(
                out,
                "warning: n = {}: P(max W <= cutoff) = {:.4} is below the threshold {}",
                rec.n, rec.assumption.prob_max_below, rec.assumption.threshold
            )?;
        }
    }
    writeln!(out, "note: {}", report.threshold_note)?;
    if let Some(path) = &cfg.output_path {
        export_report(&report, infer_format(cfg.format, path), path)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

fn clique(common: &Common, graph: Option<&Path>, budget: Option<u64>, out: &mut dyn Write) -> cliquelab::Result<()> {
    let mut instances: Vec<(String, Graph)> = Vec::new();
    let mut budget_used = budget.unwrap_or(cliquelab::clique::DEFAULT_NODE_BUDGET);
    if let Some(path) = graph {
        instances.push((path.display().to_string(), Graph::read_edge_list(BufReader::new(File::open(path)?))?));
    } else {
        let cfg = load_config(common)?;
        budget_used = budget.unwrap_or(cfg.node_budget);
        for &n in &cfg.n_values {
            let seed = trial_seed(cfg.master_seed, n, 0);
            let inst = sample_graph(&cfg.dist, &cfg.sched, n as usize, seed)?;
            instances.push((format!("n={n} seed={seed}"), inst.graph));
        }
    }
    let solver = MaxCliqueSolver::new(budget_used);
    let mut records = Vec::new();
    for (label, g) in &instances {
        let res = solver.solve(g)?;
        writeln!(
            out,
            "{label}: edges {} omega {} nodes {} elapsed {:.3}s",
            g.edge_count(),
            res.size,
            res.nodes_explored,
            res.elapsed.as_secs_f64()
        )?;
        writeln!(out, "  witness {:?}", res.witness)?;
        records.push(serde_json::json!({
            "instance": label, "omega": res.size, "witness": res.witness, "nodes_explored": res.nodes_explored,
        }));
    }
    write_json_out(common, &records)
}

fn check_assumptions(common: &Common, out: &mut dyn Write) -> cliquelab::Result<()> {
    let cfg = load_config(common)?;
    let mut reports = Vec::new();
    for &n in &cfg.n_values {
        let rep = check_assumptions_with_threshold(
            &cfg.dist,
            &cfg.sched,
            n,
            cfg.delta,
            &cfg.eta_grid,
            cfg.assumption_threshold,
        )?;
        writeln!(
            out,
            "n = {n}: s_n = {:.6}, cutoff = {:.6}, P(max W <= cutoff) = {:.6}, threshold {} -> {}",
            rep.scaling,
            rep.cutoff,
            rep.prob_max_below,
            rep.threshold,
            if rep.satisfied_estimate { "satisfied" } else { "NOT satisfied" }
        )?;
        for e in &rep.eta_sweep {
            writeln!(out, "  eta = {:<6} P(max W <= s_n/(1+eta)) = {:.6}", e.eta, e.prob_max_below)?;
        }
        reports.push(rep);
    }
    write_json_out(common, &reports)
}

fn diagnose_moments(common: &Common, rs: &[usize], out: &mut dyn Write) -> cliquelab::Result<()> {
    let cfg = load_config(common)?;
    let trials = common.trials.unwrap_or(cfg.trials).max(2);
    writeln!(
        out,
        "{:>4} {:>3} {:>7} {:>14} {:>14} {:>8} {:>14} {:>14}",
        "n", "r", "moment", "analytic", "monte_carlo", "z", "variance", "E[N^2]/E[N]^2"
    )?;
    let mut records = Vec::new();
    for &n in &cfg.n_values {
        for &r in rs {
            let n = n as usize;
            let first = first_moment_diagnostic(&cfg.dist, &cfg.sched, n, r, cfg.delta, trials, cfg.master_seed)?;
            let second = second_moment_diagnostic(&cfg.dist, &cfg.sched, n, r, cfg.delta, trials, cfg.master_seed)?;
            for (label, d) in [("first", &first), ("second", &second)] {
                writeln!(
                    out,
                    "{:>4} {:>3} {:>7} {:>14.6} {:>14.6} {:>8.3} {:>14.6} {:>14.6}",
                    n, r, label, d.target, d.mc_mean, d.z_score, d.analytic.variance, d.analytic.ratio
                )?;
            }
            records.push(serde_json::json!({ "first": first, "second": second }));
        }
    }
    write_json_out(common, &records)
}

fn run(command: &Command, common: &Common, out: &mut dyn Write) -> cliquelab::Result<()> {
    match command {
        Command::SolveTypical => solve_typical(common, out),
        Command::Predict { family, phi, s } => predict(common, family, *phi, *s, out),
        Command::Simulate => simulate(common, out),
        Command::Clique { graph, budget } => clique(common, graph.as_deref(), *budget, out),
        Command::CheckAssumptions => check_assumptions(common, out),
        Command::DiagnoseMoments { r } => diagnose_moments(common, r, out),
    }
}

#[derive(Debug, Parser)]
#[command(name = "clique-lab", version, about = "Typical clique numbers and exact clique experiments")]
struct Full {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn cli_main(argv: Vec<String>) -> i32 {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    cli_main_with_output(argv, &mut lock)
}

/// [`cli_main`] with the human-readable output sent to `out`.
pub fn cli_main_with_output(argv: Vec<String>, out: &mut dyn Write) -> i32 {
    let full = match Full::try_parse_from(&argv) {
        Ok(f) => f,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&full.command, &full.common, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
