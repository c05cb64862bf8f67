//! Command-line front end.
//!
//! Every command resolves a [`RunConfig`] from an optional JSON config file
//! and flags (flags win), runs one pipeline and writes its artifacts to the
//! output directory. Failures are reported as a [`CliError`] whose `code` is
//! stable across releases.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::column::{
    localizability_residual, reduce_column, synthesize_all, verify_achievability, ColumnErrorKind, LocalizedClm,
    SynthesisError, SynthesisOptions,
};
use crate::eval::{
    benchmark_sweep, fir_cost, fir_synthesize, gaussian_disturbance, h2_cost_lyapunov, impulse, localization_leak,
    simulate_closed_loop, stage_costs, write_sweep_csv, write_timing_csv, EvalError, FirOptions, HorizonSweep,
    SizeSweep, SweepConfig,
};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::netmodel::{
    adjacency_from_plant, chain_benchmark, d_hop_pattern, extended_pattern, validate_patterns, ChainParams,
    CommStrictness, CostWeights, NetModelError, Pattern, PatternRole, Plant, PlantFile, SCHEMA_VERSION,
};
use crate::realization::{communication_audit, DistributedController, RealizationError};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "LSLS_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "lsls",
    version,
    about = "Localized infinite-horizon H2 synthesis on networked plants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the localized controller and report its cost.
    Synthesize(CommonArgs),
    /// Simulate the distributed controller in closed loop.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of time steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Inject a unit impulse at this state instead of Gaussian noise.
        #[arg(long)]
        impulse: Option<usize>,
    },
    /// Compare against the FIR baseline at one horizon.
    CompareFir {
        #[command(flatten)]
        common: CommonArgs,
        /// FIR horizon T.
        #[arg(long = "T", visible_alias = "horizon")]
        horizon: Option<usize>,
    },
    /// Sweep FIR horizons or chain lengths.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Horizons, as `a:b` (inclusive) or a comma list.
        #[arg(long)]
        fir_horizons: Option<String>,
        /// Chain lengths, as `a:b` or a comma list; switches to a size sweep.
        #[arg(long)]
        sizes: Option<String>,
        /// FIR horizon used by size sweeps.
        #[arg(long = "T", visible_alias = "horizon")]
        horizon: Option<usize>,
        /// Timed repetitions per size.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Check patterns, stabilizability and per-column localizability.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Plant file (JSON) instead of the chain benchmark.
    #[arg(long)]
    pub plant: Option<PathBuf>,
    /// Chain length.
    #[arg(long)]
    pub chain: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Fraction of actuated chain nodes.
    #[arg(long)]
    pub density: Option<f64>,
    /// Localization radius in hops.
    #[arg(long)]
    pub d: Option<usize>,
    /// Communication radius in hops (default d + 1).
    #[arg(long)]
    pub comm_hops: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Require the extended pattern inside the communication pattern.
    #[arg(long)]
    pub strict_comm: bool,
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long)]
    pub dare_tol: Option<f64>,
    /// Worker threads for column solves.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

/// On-disk config. Every field is optional except `schema_version`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub plant_file: Option<PathBuf>,
    pub chain: Option<usize>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub density: Option<f64>,
    pub d: Option<usize>,
    pub comm_hops: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    pub fir_horizons: Option<String>,
    pub sizes: Option<String>,
    pub repeats: Option<usize>,
    pub steps: Option<usize>,
    pub impulse: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strictness: Option<CommStrictness>,
    pub rank_tol: Option<f64>,
    pub dare_tol: Option<f64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSource {
    Chain(ChainParams),
    File(PathBuf),
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plant: PlantSource,
    pub d: usize,
    pub comm_hops: usize,
    pub horizon: usize,
    pub horizons: Vec<usize>,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub steps: usize,
    pub impulse: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub strictness: CommStrictness,
    pub rank_tol: f64,
    pub dare_tol: Option<f64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl CliError {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    fn config(message: impl Into<String>) -> Self {
        CliError::new("config_invalid", message)
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::new("io_error", format!("{}: {}", path.display(), e))
    }

    /// 2 for configuration problems, 1 for pipeline failures.
    pub fn exit_code(&self) -> i32 {
        match self.code {
            "config_invalid" | "config_parse" => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&json!({ "error": self })).expect("error serializes")
    }
}

impl From<NetModelError> for CliError {
    fn from(e: NetModelError) -> Self {
        CliError::new("model_invalid", e.to_string())
    }
}

impl From<RealizationError> for CliError {
    fn from(e: RealizationError) -> Self {
        CliError::new("realization_failed", e.to_string())
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        let details = match &e {
            SynthesisError::Model(_) => Value::Null,
            SynthesisError::Patterns(report) => json!(report),
            SynthesisError::Columns(errs) => Value::Array(
                errs.iter()
                    .map(|c| {
                        let mut v = json!({ "column": c.column, "code": c.kind.code() });
                        if let ColumnErrorKind::NotLocalizable { residual } = c.kind {
                            v["residual"] = json!(residual);
                        }
                        v
                    })
                    .collect(),
            ),
        };
        CliError {
            code: e.code(),
            message: e.to_string(),
            details,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Synthesis(s) => s.into(),
            EvalError::FirInfeasible { horizon, ref columns } => CliError {
                code: e.code(),
                message: e.to_string(),
                details: json!({ "horizon": horizon, "columns": columns }),
            },
            EvalError::UnstableColumn { column, .. } | EvalError::FirColumn { column, .. } => CliError {
                code: e.code(),
                message: e.to_string(),
                details: json!({ "column": column }),
            },
            _ => CliError::new(e.code(), e.to_string()),
        }
    }
}

/// `a:b` (inclusive) or `a,b,c`.
pub fn parse_list(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::config(format!("cannot parse list {:?}", text));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = text.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: ConfigFile =
        serde_json::from_str(&text).map_err(|e| CliError::new("config_parse", format!("{}: {}", path.display(), e)))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::new(
            "config_parse",
            format!("unsupported schema_version {}", file.schema_version),
        ));
    }
    Ok(file)
}

impl RunConfig {
    /// Merges flags over the config file over defaults.
    pub fn resolve(args: &CommonArgs, extra: &ConfigFile) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => ConfigFile::default(),
        };
        let defaults = ChainParams::default();
        let chain = ChainParams {
            n: args.chain.or(file.chain).unwrap_or(defaults.n),
            alpha: args.alpha.or(file.alpha).unwrap_or(defaults.alpha),
            rho: args.rho.or(file.rho).unwrap_or(defaults.rho),
            density: args.density.or(file.density).unwrap_or(defaults.density),
        };
        let plant = match args.plant.clone().or(file.plant_file.clone()) {
            Some(p) => PlantSource::File(p),
            None => PlantSource::Chain(chain),
        };
        let d = args.d.or(file.d).unwrap_or(5);
        let horizons = match extra.fir_horizons.as_ref().or(file.fir_horizons.as_ref()) {
            Some(s) => parse_list(s)?,
            None => (6..=40).collect(),
        };
        let sizes = match extra.sizes.as_ref().or(file.sizes.as_ref()) {
            Some(s) => parse_list(s)?,
            None => Vec::new(),
        };
        let strictness = if args.strict_comm {
            CommStrictness::Extended
        } else {
            file.strictness.unwrap_or_default()
        };
        let cfg = RunConfig {
            plant,
            d,
            comm_hops: args.comm_hops.or(file.comm_hops).unwrap_or(d + 1),
            horizon: extra.horizon.or(file.horizon).unwrap_or(10),
            horizons,
            sizes,
            repeats: extra.repeats.or(file.repeats).unwrap_or(5),
            steps: extra.steps.or(file.steps).unwrap_or(200),
            impulse: extra.impulse.or(file.impulse),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("lsls-out")),
            strictness,
            rank_tol: args.rank_tol.or(file.rank_tol).unwrap_or(DEFAULT_RANK_TOL),
            dare_tol: args.dare_tol.or(file.dare_tol),
            workers: args.workers.or(file.workers),
        };
        if cfg.repeats == 0 {
            return Err(CliError::config("repeats must be positive"));
        }
        if cfg.workers == Some(0) {
            return Err(CliError::config("workers must be positive"));
        }
        Ok(cfg)
    }

    fn synthesis_options(&self) -> SynthesisOptions {
        let mut opts = SynthesisOptions {
            strictness: self.strictness,
            ..Default::default()
        };
        opts.deconstrain.rank_tol = self.rank_tol;
        if let Some(t) = self.dare_tol {
            opts.dare.tol = t;
        }
        opts
    }

    fn chain(&self) -> Result<ChainParams, CliError> {
        match &self.plant {
            PlantSource::Chain(c) => Ok(*c),
            PlantSource::File(_) => Err(CliError::config("sweeps run on the chain benchmark only")),
        }
    }
}

/// Plant, weights and `(loc, comm)` for a run.
pub struct Problem {
    pub plant: Plant,
    pub weights: CostWeights,
    pub loc: Pattern,
    pub comm: Pattern,
}

fn load_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let (plant, weights, loc, comm) = match &cfg.plant {
        PlantSource::Chain(c) => {
            let (plant, w) = chain_benchmark(c)?;
            (plant, w, None, None)
        }
        PlantSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file = PlantFile::parse(&text)?;
            let plant = Plant::try_from(&file.plant)?;
            let w = match &file.weights {
                Some(w) => CostWeights::try_from(w)?,
                None => CostWeights::identity(plant.num_states(), plant.num_inputs()),
            };
            let loc = file.localization.as_ref().map(Pattern::try_from).transpose()?;
            let comm = file.communication.as_ref().map(Pattern::try_from).transpose()?;
            (plant, w, loc, comm)
        }
    };
    let adj = adjacency_from_plant(&plant);
    let loc = loc
        .unwrap_or_else(|| d_hop_pattern(&adj, cfg.d))
        .with_role(PatternRole::Localization);
    let comm = comm
        .unwrap_or_else(|| d_hop_pattern(&adj, cfg.comm_hops))
        .with_role(PatternRole::Communication);
    Ok(Problem {
        plant,
        weights,
        loc,
        comm,
    })
}

fn synthesize(cfg: &RunConfig, p: &Problem) -> Result<LocalizedClm, CliError> {
    Ok(synthesize_all(
        &p.plant,
        &p.loc,
        &p.comm,
        &p.weights,
        &cfg.synthesis_options(),
    )?)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn create_file(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn cost_report(clm: &LocalizedClm) -> Result<Value, CliError> {
    let cost = h2_cost_lyapunov(clm, &clm.weights)?;
    let ach = verify_achievability(clm, 100, 1e-9);
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "num_states": clm.num_states(),
        "num_inputs": clm.num_inputs(),
        "h2_cost": cost.total,
        "per_column": cost.per_column,
        "riccati_cost": clm.riccati_cost(),
        "restricted_columns": clm.restricted_columns(),
        "achievability": ach,
    }))
}

fn cmd_synthesize(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let p = load_problem(cfg)?;
    let clm = synthesize(cfg, &p)?;
    let dc = DistributedController::new(&clm)?;
    let mut report = cost_report(&clm)?;
    report["communication_audit"] = json!(communication_audit(&dc, &p.comm));
    let files = [
        write_json(out, "controller.json", &dc.to_json())?,
        write_json(out, "clm.json", &clm.to_json())?,
        write_json(out, "cost.json", &report)?,
    ];
    Ok(json!({
        "command": "synthesize",
        "h2_cost": report["h2_cost"],
        "files": files,
    }))
}

fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let p = load_problem(cfg)?;
    let clm = synthesize(cfg, &p)?;
    let nx = p.plant.num_states();
    let w = match cfg.impulse {
        Some(j) if j >= nx => return Err(CliError::config(format!("impulse state {} out of range", j))),
        Some(j) => impulse(nx, j, cfg.steps),
        None => gaussian_disturbance(nx, cfg.steps, cfg.seed),
    };
    let mut dc = DistributedController::new(&clm)?;
    let traj = simulate_closed_loop(&p.plant, &mut dc, &w)?;
    let (path, file) = create_file(out, "trajectory.csv")?;
    traj.write_csv(file)?;
    let costs = stage_costs(&traj, &p.weights);
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "steps": cfg.steps,
        "seed": cfg.seed,
        "mean_stage_cost": if costs.is_empty() { 0.0 } else { costs.iter().sum::<f64>() / costs.len() as f64 },
        "h2_cost": h2_cost_lyapunov(&clm, &p.weights)?.total,
    });
    if let Some(j) = cfg.impulse {
        report["impulse"] = json!(j);
        report["localization_leak"] = json!(localization_leak(&traj, &p.loc, &p.plant, j));
    }
    let rep = write_json(out, "simulation.json", &report)?;
    Ok(json!({ "command": "simulate", "files": [path, rep] }))
}

fn cmd_compare_fir(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let p = load_problem(cfg)?;
    let clm = synthesize(cfg, &p)?;
    let ih = h2_cost_lyapunov(&clm, &p.weights)?.total;
    let fir = fir_synthesize(
        &p.plant,
        &p.loc,
        &p.comm,
        &p.weights,
        cfg.horizon,
        &FirOptions::default(),
    )?;
    let fc = fir_cost(&fir, &p.weights);
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "horizon": cfg.horizon,
        "ih_cost": ih,
        "fir_cost": fc,
        "relative_gap": (fc - ih) / ih,
        "fir_recursion_residual": fir.recursion_residual(&p.plant),
        "fir_variables": fir.columns.iter().map(|c| c.variables).collect::<Vec<_>>(),
        "fir_constraints": fir.columns.iter().map(|c| c.constraints).collect::<Vec<_>>(),
    });
    let path = write_json(out, "compare_fir.json", &report)?;
    Ok(json!({ "command": "compare-fir", "ih_cost": ih, "fir_cost": fc, "files": [path] }))
}

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let chain = cfg.chain()?;
    let sweep = if cfg.sizes.is_empty() {
        SweepConfig::Horizon(HorizonSweep {
            chain,
            d: cfg.d,
            horizons: cfg.horizons.clone(),
        })
    } else {
        SweepConfig::Size(SizeSweep {
            chain,
            d: cfg.d,
            sizes: cfg.sizes.clone(),
            fir_horizon: cfg.horizon,
            repeats: cfg.repeats,
        })
    };
    let table = benchmark_sweep(&sweep)?;
    let (sweep_path, f) = create_file(out, "sweep.csv")?;
    write_sweep_csv(&table.rows, f)?;
    let (timing_path, f) = create_file(out, "sweep_timing.csv")?;
    write_timing_csv(&table.timings, f)?;
    Ok(json!({
        "command": "sweep",
        "rows": table.rows.len(),
        "files": [sweep_path, timing_path],
    }))
}

fn cmd_validate(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let p = load_problem(cfg)?;
    let adj = adjacency_from_plant(&p.plant);
    let ext = extended_pattern(&adj, &p.loc);
    let patterns = validate_patterns(&p.loc, &p.comm, &ext, cfg.strictness)?;
    if !patterns.is_valid() {
        return Err(SynthesisError::Patterns(patterns).into());
    }
    p.weights.check_dims(&p.plant)?;
    p.plant.check_stabilizable(&p.weights)?;
    let mut columns = Vec::new();
    for j in 0..p.plant.num_states() {
        let cp = reduce_column(&p.plant, &p.loc, &ext, &p.comm, &p.weights, j).map_err(|kind| {
            CliError::from(SynthesisError::Columns(vec![crate::column::ColumnError {
                column: j,
                kind,
            }]))
        })?;
        columns.push(json!({
            "column": j,
            "support": cp.num_support(),
            "boundary": cp.num_boundary(),
            "inputs": cp.num_inputs(),
            "localizability_residual": localizability_residual(&cp, cfg.rank_tol),
        }));
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "valid": true,
        "warnings": patterns.warnings,
        "columns": columns,
    });
    let path = write_json(out, "validation.json", &report)?;
    Ok(json!({ "command": "validate", "valid": true, "files": [path] }))
}

fn init_workers(n: Option<usize>) {
    if let Some(n) = n {
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs one parsed command and returns its stdout summary.
pub fn run(cli: Cli) -> Result<Value, CliError> {
    let (common, extra) = match &cli.command {
        Command::Synthesize(c) | Command::Validate(c) => (c, ConfigFile::default()),
        Command::Simulate { common, steps, impulse } => (
            common,
            ConfigFile {
                steps: *steps,
                impulse: *impulse,
                ..Default::default()
            },
        ),
        Command::CompareFir { common, horizon } => (
            common,
            ConfigFile {
                horizon: *horizon,
                ..Default::default()
            },
        ),
        Command::Sweep {
            common,
            fir_horizons,
            sizes,
            horizon,
            repeats,
        } => (
            common,
            ConfigFile {
                fir_horizons: fir_horizons.clone(),
                sizes: sizes.clone(),
                horizon: *horizon,
                repeats: *repeats,
                ..Default::default()
            },
        ),
    };
    let cfg = RunConfig::resolve(common, &extra)?;
    init_workers(cfg.workers);
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let out = cfg.out.as_path();
    match cli.command {
        Command::Synthesize(_) => cmd_synthesize(&cfg, out),
        Command::Simulate { .. } => cmd_simulate(&cfg, out),
        Command::CompareFir { .. } => cmd_compare_fir(&cfg, out),
        Command::Sweep { .. } => cmd_sweep(&cfg, out),
        Command::Validate(_) => cmd_validate(&cfg, out),
    }
}

/// Parses `args`, runs, prints the summary or the error object, and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{}", e);
                return 0;
            }
            let err = CliError::new("config_parse", e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", summary);
            0
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}
