//! Command-line front end for the ladmm library.
//!
//! Subcommands: `fit` (one model from CSV data), `tune` (HBIC selection of
//! the penalty levels), `simulate` (write a synthetic dataset), `bench`
//! (replicated scenario runs with metric averages as CSV), and `audit`
//! (partition-insensitivity check across shard counts).
//!
//! Exit codes: 0 success, 1 usage or data error, 2 solver hit the iteration
//! cap without converging.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ladmm::error::{Error, Result};
use ladmm::io;
use ladmm::linalg::{partition_rows, DesignMatrix};
use ladmm::loss::LossSpec;
use ladmm::parallel::{aggregate_eta, fit_parallel, run_equivalence_audit, ParallelConfig};
use ladmm::penalty::{PenaltyKind, PenaltySpec};
use ladmm::sim::{generate, metrics_default, ErrorDist, Scenario, ScenarioSpec};
use ladmm::solver::{fit_sequential, FitResult, SolverConfig, StopReason};
use ladmm::tune::{auto_grid, support, tune, CnRule, TuneGrid};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ladmm", version, about = "Linearized ADMM for nonconvex penalized regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model from CSV data and write the result as JSON
    Fit(FitArgs),
    /// Select (lambda1, lambda2) by HBIC over a grid
    Tune(TuneArgs),
    /// Generate a synthetic dataset (X.csv, y.csv, truth.json)
    Simulate(SimulateArgs),
    /// Run replicated scenario benchmarks and write metric averages as CSV
    Bench(BenchArgs),
    /// Verify that iterates are identical across shard counts at fixed eta
    Audit(AuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    SmoothQuantileC,
    SmoothQuantileKappa,
    Quantile,
    LeastSquares,
    Huber,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    Snet,
    Mnet,
    Cnet,
    ElasticNet,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    ArHetero,
    QuadraticHetero,
    ArBlock,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorDistArg {
    Normal,
    LogNormal,
}

#[derive(Args, Clone)]
struct ModelFlags {
    /// Loss function
    #[arg(long, value_enum, default_value = "least-squares")]
    loss: LossArg,
    /// Quantile level for quantile-type losses
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Smoothing width of the symmetric-width smooth quantile loss
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    /// Smoothing width of the Huberized smooth quantile loss
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    /// Huber loss corner
    #[arg(long, default_value_t = 1.345)]
    huber_delta: f64,
    /// Penalty family
    #[arg(long, value_enum, default_value = "snet")]
    penalty: PenaltyArg,
    /// Concavity parameter (defaults: snet 3.7, mnet 3.0, cnet 2.0)
    #[arg(long)]
    a: Option<f64>,
    /// Sparsity level
    #[arg(long)]
    lambda1: Option<f64>,
    /// Ridge level
    #[arg(long, default_value_t = 0.0)]
    lambda2: f64,
}

impl ModelFlags {
    fn loss_spec(&self) -> Result<LossSpec> {
        match self.loss {
            LossArg::SmoothQuantileC => LossSpec::smooth_quantile_c(self.tau, self.c),
            LossArg::SmoothQuantileKappa => LossSpec::smooth_quantile_kappa(self.tau, self.kappa),
            LossArg::Quantile => LossSpec::quantile(self.tau),
            LossArg::LeastSquares => Ok(LossSpec::least_squares()),
            LossArg::Huber => LossSpec::huber(self.huber_delta),
        }
    }

    fn penalty_kind(&self) -> PenaltyKind {
        match self.penalty {
            PenaltyArg::Snet => PenaltyKind::Snet,
            PenaltyArg::Mnet => PenaltyKind::Mnet,
            PenaltyArg::Cnet => PenaltyKind::Cnet,
            PenaltyArg::ElasticNet => PenaltyKind::ElasticNet,
        }
    }

    fn a_value(&self) -> f64 {
        self.a.unwrap_or(match self.penalty {
            PenaltyArg::Snet => 3.7,
            PenaltyArg::Mnet => 3.0,
            PenaltyArg::Cnet => 2.0,
            PenaltyArg::ElasticNet => 1.0,
        })
    }

    fn penalty_spec(&self) -> Result<PenaltySpec> {
        let lambda1 = self.lambda1.ok_or(Error::InvalidSpec {
            what: "arguments",
            why: "--lambda1 is required for this command".into(),
        })?;
        PenaltySpec::new(self.penalty_kind(), self.a_value(), lambda1, self.lambda2)
    }

    /// Penalty with a placeholder lambda1 for grid-based tuning.
    fn penalty_template(&self) -> Result<PenaltySpec> {
        PenaltySpec::new(self.penalty_kind(), self.a_value(), self.lambda1.unwrap_or(1.0), self.lambda2)
    }
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Augmented Lagrangian parameter (default: loss-dependent)
    #[arg(long)]
    mu: Option<f64>,
    /// Linearization constant (default: power-method estimate with headroom)
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Verify a pinned --eta against a fresh spectral estimate
    #[arg(long)]
    check_eta: bool,
}

impl SolverFlags {
    fn config(&self, trace: bool) -> SolverConfig {
        SolverConfig {
            mu: self.mu,
            eta: self.eta,
            max_iter: self.max_iter,
            tol: self.tol,
            record_trace: trace,
            check_eta: self.check_eta,
            ..Default::default()
        }
    }
}

#[derive(Args, Clone)]
struct DataFlags {
    /// Design matrix CSV (n rows, p columns)
    #[arg(long)]
    x: PathBuf,
    /// Response CSV (single column)
    #[arg(long)]
    y: PathBuf,
    /// Skip one header row in the input CSVs
    #[arg(long)]
    header: bool,
}

impl DataFlags {
    fn load(&self) -> Result<(DesignMatrix, Vec<f64>)> {
        let x = io::read_matrix_csv(&self.x, self.header)?;
        let y = io::read_vector_csv(&self.y, self.header)?;
        Ok((x, y))
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataFlags,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Number of row shards / logical workers
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Record per-iteration diagnostics in the output
    #[arg(long)]
    trace: bool,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataFlags,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Explicit lambda1 grid (comma separated); default: auto log grid
    #[arg(long, value_delimiter = ',')]
    lambda1_grid: Option<Vec<f64>>,
    /// lambda2 grid (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.1,1.0")]
    lambda2_grid: Vec<f64>,
    /// Override the default C_n = 6 log p in the HBIC penalty
    #[arg(long)]
    cn: Option<f64>,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV dump of the full HBIC path
    #[arg(long)]
    path_csv: Option<PathBuf>,
}

/// Scenario flags shared by `simulate` and `bench`. The quantile level tau
/// is deliberately not here: `simulate` takes its own --tau while `bench`
/// reuses the model's, so the simulated truth matches the fitted level.
#[derive(Args, Clone)]
struct ScenarioFlags {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Error distribution (default: the scenario's own)
    #[arg(long, value_enum)]
    error_dist: Option<ErrorDistArg>,
    /// Mean (normal) or log-scale location (log-normal) of the error
    #[arg(long, default_value_t = 0.0)]
    error_mean: f64,
    /// Standard deviation (normal) or log-scale sd (log-normal)
    #[arg(long)]
    error_sd: Option<f64>,
}

impl ScenarioFlags {
    fn spec(&self, tau: f64) -> Result<ScenarioSpec> {
        let scenario = match self.scenario {
            ScenarioArg::ArHetero => Scenario::ArHeteroscedastic,
            ScenarioArg::QuadraticHetero => Scenario::QuadraticHeteroscedastic,
            ScenarioArg::ArBlock => Scenario::ArBlockSignal,
        };
        let mut spec = ScenarioSpec::new(scenario, self.n, self.p, self.seed)?.with_tau(tau)?;
        if let Some(kind) = self.error_dist {
            let sd = self.error_sd.unwrap_or(1.0);
            let dist = match kind {
                ErrorDistArg::Normal => ErrorDist::Normal { mean: self.error_mean, sd },
                ErrorDistArg::LogNormal => ErrorDist::LogNormal { location: self.error_mean, scale: sd },
            };
            spec = spec.with_error_dist(dist)?;
        } else if let Some(sd) = self.error_sd {
            spec = spec.with_error_dist(ErrorDist::Normal { mean: self.error_mean, sd })?;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Quantile level defining the population x1 coefficient
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Directory for X.csv, y.csv, truth.json
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    sim: ScenarioFlags,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Replication count
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Shard count for parallel fits (1 = sequential)
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Tune lambda1 by HBIC per replicate instead of using --lambda1
    #[arg(long)]
    tune: bool,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataFlags,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Shard counts to compare (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
    m_list: Vec<usize>,
    /// Fixed iteration count for all runs
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ResolvedConfig {
    loss: LossSpec,
    penalty: PenaltySpec,
    mu: f64,
    eta: f64,
    max_iter: usize,
    tol: f64,
    workers: usize,
}

#[derive(Serialize)]
struct FitOutput {
    config: ResolvedConfig,
    iterations: usize,
    stop_reason: StopReason,
    beta: Vec<f64>,
    support: Vec<usize>,
    wall_time_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<ladmm::solver::TraceEntry>>,
}

fn fit_output(fit: FitResult, loss: LossSpec, penalty: PenaltySpec, flags: &SolverFlags, workers: usize, trace: bool) -> FitOutput {
    FitOutput {
        config: ResolvedConfig {
            loss,
            penalty,
            mu: fit.mu_used,
            eta: fit.eta_used,
            max_iter: flags.max_iter,
            tol: flags.tol,
            workers,
        },
        iterations: fit.iterations,
        stop_reason: fit.stop_reason,
        support: support(&fit.beta),
        wall_time_secs: fit.wall_time_secs,
        trace: if trace { Some(fit.trace) } else { None },
        beta: fit.beta,
    }
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode> {
    let (x, y) = args.data.load()?;
    let loss = args.model.loss_spec()?;
    let penalty = args.model.penalty_spec()?;
    let cfg = args.solver.config(args.trace);
    let fit = if args.workers <= 1 {
        fit_sequential(&x, &y, &loss, &penalty, &cfg)?
    } else {
        let partition = partition_rows(x.nrows(), args.workers, None)?;
        let pcfg = ParallelConfig { solver: cfg, ..Default::default() };
        fit_parallel(&x, &y, &loss, &penalty, &partition, &pcfg)?.result
    };
    let stop = fit.stop_reason;
    io::write_json(&args.out, &fit_output(fit, loss, penalty, &args.solver, args.workers, args.trace))?;
    Ok(if stop == StopReason::MaxIter { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

#[derive(Serialize)]
struct TuneOutput {
    config: ResolvedConfig,
    cn: f64,
    lambda1_grid: Vec<f64>,
    lambda2_grid: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
    hbic: f64,
    iterations: usize,
    stop_reason: StopReason,
    beta: Vec<f64>,
    support: Vec<usize>,
}

fn cmd_tune(args: TuneArgs) -> Result<ExitCode> {
    let (x, y) = args.data.load()?;
    let loss = args.model.loss_spec()?;
    let template = args.model.penalty_template()?;
    let cfg = args.solver.config(false);
    let grid = match &args.lambda1_grid {
        Some(values) => TuneGrid::new(values.clone(), args.lambda2_grid.clone())?,
        None => auto_grid(&x, &y, &loss, &template, &cfg, Some(args.lambda2_grid.clone()))?,
    };
    let rule = args.cn.map(CnRule::Custom).unwrap_or(CnRule::SixLogP);
    let res = tune(&x, &y, &loss, &template, &grid, &cfg, rule)?;
    if let Some(path) = &args.path_csv {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["lambda1", "lambda2", "hbic", "nonzero", "residual_loss_sum", "iterations"])?;
        for e in &res.path {
            wtr.serialize((e.lambda1, e.lambda2, e.hbic, e.nonzero, e.residual_loss_sum, e.iterations))?;
        }
        wtr.flush()?;
    }
    let out = TuneOutput {
        config: ResolvedConfig {
            loss,
            penalty: res.penalty,
            mu: res.fit.mu_used,
            eta: res.fit.eta_used,
            max_iter: args.solver.max_iter,
            tol: args.solver.tol,
            workers: 1,
        },
        cn: rule.value(x.ncols()),
        lambda1_grid: grid.lambda1.clone(),
        lambda2_grid: grid.lambda2.clone(),
        lambda1: res.lambda1,
        lambda2: res.lambda2,
        hbic: res.hbic,
        iterations: res.fit.iterations,
        stop_reason: res.fit.stop_reason,
        support: support(&res.fit.beta),
        beta: res.fit.beta,
    };
    io::write_json(&args.out, &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TruthFile {
    spec: ScenarioSpec,
    true_beta: Vec<f64>,
    true_support: Vec<usize>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let spec = args.scenario.spec(args.tau)?;
    let data = generate(&spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    io::write_matrix_csv(&args.out_dir.join("X.csv"), &data.x)?;
    io::write_vector_csv(&args.out_dir.join("y.csv"), &data.y)?;
    io::write_json(
        &args.out_dir.join("truth.json"),
        &TruthFile { spec, true_beta: data.true_beta, true_support: data.true_support },
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct BenchRow {
    scenario: String,
    n: usize,
    p: usize,
    m: usize,
    reps: usize,
    seed: u64,
    loss: String,
    tau: f64,
    penalty: String,
    a: f64,
    lambda1: f64,
    lambda2: f64,
    #[serde(rename = "P1")]
    p1: f64,
    #[serde(rename = "P2")]
    p2: f64,
    #[serde(rename = "FP")]
    fp: f64,
    #[serde(rename = "FN")]
    fn_: f64,
    #[serde(rename = "Nonzero")]
    nonzero: f64,
    #[serde(rename = "AE")]
    ae: f64,
    #[serde(rename = "Ite")]
    ite: f64,
    #[serde(rename = "Time")]
    time: f64,
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let loss = args.model.loss_spec()?;
    if args.reps == 0 {
        return Err(Error::InvalidSpec { what: "arguments", why: "--reps must be positive".into() });
    }
    let base = args.sim.spec(args.model.tau)?;
    let cfg = args.solver.config(false);
    let mut sums = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut lambda1_used = Vec::with_capacity(args.reps);
    for rep in 0..args.reps {
        let spec = ScenarioSpec { seed: base.seed + rep as u64, ..base };
        let data = generate(&spec)?;
        let (fit, l1) = if args.tune {
            let template = args.model.penalty_template()?;
            let grid = auto_grid(&data.x, &data.y, &loss, &template, &cfg, Some(vec![args.model.lambda2]))?;
            let res = tune(&data.x, &data.y, &loss, &template, &grid, &cfg, CnRule::SixLogP)?;
            (res.fit, res.lambda1)
        } else {
            let penalty = args.model.penalty_spec()?;
            let fit = if args.m <= 1 {
                fit_sequential(&data.x, &data.y, &loss, &penalty, &cfg)?
            } else {
                let partition = partition_rows(data.x.nrows(), args.m, None)?;
                fit_parallel(&data.x, &data.y, &loss, &penalty, &partition, &ParallelConfig { solver: cfg.clone(), ..Default::default() })?.result
            };
            (fit, args.model.lambda1.unwrap_or(f64::NAN))
        };
        let report = metrics_default(&fit.beta, &data);
        sums.0 += f64::from(u8::from(report.p1));
        sums.1 += f64::from(u8::from(report.p2));
        sums.2 += report.fp as f64;
        sums.3 += report.fn_ as f64;
        sums.4 += report.nonzero as f64;
        sums.5 += report.ae;
        sums.6 += fit.iterations as f64;
        sums.7 += fit.wall_time_secs;
        lambda1_used.push(l1);
    }
    let r = args.reps as f64;
    let mut wtr = csv::Writer::from_path(&args.out)?;
    wtr.serialize(BenchRow {
        scenario: format!("{:?}", base.scenario),
        n: base.n,
        p: base.p,
        m: args.m,
        reps: args.reps,
        seed: base.seed,
        loss: format!("{:?}", loss.kind()),
        tau: args.model.tau,
        penalty: format!("{:?}", args.model.penalty_kind()),
        a: args.model.a_value(),
        lambda1: lambda1_used.iter().sum::<f64>() / r,
        lambda2: args.model.lambda2,
        p1: 100.0 * sums.0 / r,
        p2: 100.0 * sums.1 / r,
        fp: sums.2 / r,
        fn_: sums.3 / r,
        nonzero: sums.4 / r,
        ae: sums.5 / r,
        ite: sums.6 / r,
        time: sums.7 / r,
    })?;
    wtr.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AuditOutput {
    loss: LossSpec,
    penalty: PenaltySpec,
    report: ladmm::parallel::AuditReport,
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode> {
    let (x, y) = args.data.load()?;
    let loss = args.model.loss_spec()?;
    let penalty = args.model.penalty_spec()?;
    if args.m_list.is_empty() {
        return Err(Error::InvalidSpec { what: "arguments", why: "--m-list must not be empty".into() });
    }
    let mut cfg = args.solver.config(false);
    let mu = cfg.mu.unwrap_or_else(|| ladmm::solver::resolve_mu(&loss, x.nrows()));
    cfg.mu = Some(mu);
    if cfg.eta.is_none() {
        // pin the most conservative default eta (largest shard count)
        let m_max = *args.m_list.iter().max().unwrap();
        let partition = partition_rows(x.nrows(), m_max, None)?;
        cfg.eta = Some(aggregate_eta(&x, &partition, mu, cfg.eta_safety));
    }
    let report = run_equivalence_audit(&x, &y, &loss, &penalty, &cfg, &args.m_list, args.iters)?;
    io::write_json(&args.out, &AuditOutput { loss, penalty, report })?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Audit(args) => cmd_audit(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
