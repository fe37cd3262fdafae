//! Command-line front end. Exit codes: 0 success, 1 unknown or missing
//! subcommand, 2 invalid input, 3 runtime failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use oscillab_core::homogenize::{decompose, solve_on, Medium, ProblemSpec, Source};
use oscillab_core::limit::{aligned_delta, x_eps};
use oscillab_core::stats::Moments;
use oscillab_core::{CoefficientSampler, HermiteProcess, KernelSpec, MovingAverage, RankedFunction};
use serde::Serialize;

use crate::config::{read_json, ExperimentConfig, HermitePathConfig, KernelConfig, Mode, PhiConfig, PhiMethod};
use crate::lab::{covariance_decay_report, run_convergence, taqqu_variance_report, thread_pool};
use crate::manifest::RunManifest;
use crate::report::{write_json, write_table, Table};
use crate::LabError;

#[derive(Debug, Parser)]
#[command(name = "oscillab", version, about = "Oscillatory integrals and correctors in long-memory random media")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct IoArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiChoice {
    /// Bounded rank-m construction.
    Auto,
    /// Deterministic coefficient a ≡ a*.
    Constant,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Source term: const, linear or sin.
    #[arg(long = "f", default_value = "sin")]
    pub source: String,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, default_value_t = 0.8)]
    pub h0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "a-star", default_value_t = 1.0)]
    pub a_star: f64,
    #[arg(long, value_enum, default_value_t = PhiChoice::Auto)]
    pub phi: PhiChoice,
    #[arg(long = "samples-per-unit", default_value_t = 20.0)]
    pub samples_per_unit: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the long-memory Gaussian field g on a uniform grid.
    SimulatePath(IoArgs),
    /// Build Φ and report its Hermite data.
    BuildPhi(IoArgs),
    /// Sample a Hermite process path.
    HermitePath(IoArgs),
    /// Convergence of oscillatory integrals to the Hermite-process limit.
    Oscillatory(IoArgs),
    /// Convergence of the rescaled homogenization corrector.
    Corrector(IoArgs),
    /// Covariance decay of Φ(g).
    Covariance(IoArgs),
    /// Variance normalisation and finite-dimensional laws of the Taqqu integrals.
    Taqqu(IoArgs),
    /// Solve the heterogeneous and homogenized problems for one sample.
    Solve(SolveArgs),
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 1,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(files) => {
            if let Some(first) = files.first() {
                let dir = first.parent().unwrap_or(Path::new("."));
                println!("wrote {} files to {}", files.len(), dir.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn prepare(out: &Path) -> Result<(), LabError> {
    std::fs::create_dir_all(out).map_err(|e| LabError::Runtime(format!("cannot create {}: {e}", out.display())))
}

/// Runs one command and returns every file written, manifest last.
pub fn run(command: Command) -> Result<Vec<PathBuf>, LabError> {
    match command {
        Command::SimulatePath(io) => simulate_path(&io),
        Command::BuildPhi(io) => build_phi(&io),
        Command::HermitePath(io) => hermite_path(&io),
        Command::Oscillatory(io) => experiment(&io, Mode::Oscillatory, "oscillatory"),
        Command::Corrector(io) => experiment(&io, Mode::Corrector, "corrector"),
        Command::Covariance(io) => experiment(&io, Mode::Covariance, "covariance"),
        Command::Taqqu(io) => experiment(&io, Mode::TaqquFdd, "taqqu"),
        Command::Solve(args) => solve(&args),
    }
}

#[derive(Serialize)]
struct PathReport {
    m: u32,
    h0: f64,
    hurst: f64,
    delta: f64,
    n: usize,
    seed: u64,
    window: f64,
    tail_mass: f64,
    sample_mean: f64,
    sample_variance: f64,
}

fn simulate_path(io: &IoArgs) -> Result<Vec<PathBuf>, LabError> {
    let (cfg, bytes): (KernelConfig, _) = read_json(&io.config)?;
    let manifest = RunManifest::start("simulate-path", &bytes, cfg.seed);
    let kernel = cfg.kernel()?;
    if !(cfg.delta > 0.0) || cfg.n == 0 {
        return Err(LabError::Validation("delta must be positive and n at least 1".into()));
    }
    let ma = MovingAverage::new(&kernel, cfg.delta, cfg.window)?;
    let path = ma.path(cfg.n, cfg.seed);
    prepare(&io.out)?;
    let mut t = Table::new(&["x", "g"]);
    for (j, v) in path.values.iter().enumerate() {
        t.push(vec![path.x(j), *v]);
    }
    let mo = Moments::of(&path.values);
    let report = PathReport {
        m: kernel.m,
        h0: kernel.h0,
        hurst: kernel.h,
        delta: cfg.delta,
        n: cfg.n,
        seed: cfg.seed,
        window: path.window,
        tail_mass: path.tail_mass,
        sample_mean: mo.mean,
        sample_variance: mo.variance,
    };
    finish(io, manifest, &report, vec![("path".into(), t)])
}

#[derive(Serialize)]
struct PhiReport {
    description: String,
    rank: usize,
    leading_coefficient: f64,
    coefficients: Vec<f64>,
    l2_norm_sq: f64,
    sup_norm_bound: Option<f64>,
    a_star: f64,
    coefficient_bounds: Option<(f64, f64)>,
    vandermonde_nodes: Option<Vec<f64>>,
    vandermonde_weights: Option<Vec<f64>>,
    vandermonde_condition: Option<f64>,
}

fn phi_report(phi: &RankedFunction, sampler: Option<&CoefficientSampler>, a_star: f64) -> PhiReport {
    PhiReport {
        description: phi.description.clone(),
        rank: phi.rank(),
        leading_coefficient: phi.leading_coefficient(),
        coefficients: phi.expansion.coeffs.clone(),
        l2_norm_sq: phi.expansion.l2_norm_sq,
        sup_norm_bound: phi.sup_norm_bound,
        a_star,
        coefficient_bounds: sampler.map(|s| s.bounds),
        vandermonde_nodes: phi.vandermonde.as_ref().map(|v| v.nodes.clone()),
        vandermonde_weights: phi.vandermonde.as_ref().map(|v| v.b.clone()),
        vandermonde_condition: phi.vandermonde.as_ref().map(|v| v.condition),
    }
}

fn build_phi(io: &IoArgs) -> Result<Vec<PathBuf>, LabError> {
    let (cfg, bytes): (PhiConfig, _) = read_json(&io.config)?;
    let manifest = RunManifest::start("build-phi", &bytes, 0);
    let phi = cfg.build()?;
    let sampler = match cfg.method {
        PhiMethod::PureHermite => None,
        _ => Some(CoefficientSampler::new(phi.clone(), cfg.a_star)?),
    };
    prepare(&io.out)?;
    let mut t = Table::new(&["x", "phi", "a"]);
    for i in 0..=240 {
        let x = -6.0 + 0.05 * i as f64;
        let a = sampler.as_ref().map_or(f64::NAN, |s| s.a(x));
        t.push(vec![x, phi.eval(x), a]);
    }
    let report = phi_report(&phi, sampler.as_ref(), cfg.a_star);
    finish(io, manifest, &report, vec![("phi".into(), t)])
}

#[derive(Serialize)]
struct HermitePathReport {
    m: u32,
    h0: f64,
    hurst: f64,
    k: f64,
    t_max: f64,
    n_grid: usize,
    t_left: f64,
    omitted_mass: f64,
    noise_cells: usize,
    seed: u64,
}

fn hermite_path(io: &IoArgs) -> Result<Vec<PathBuf>, LabError> {
    let (cfg, bytes): (HermitePathConfig, _) = read_json(&io.config)?;
    let manifest = RunManifest::start("hermite-path", &bytes, cfg.seed);
    let core = cfg.to_core()?;
    let hp = HermiteProcess::new(core.clone())?;
    let path = hp.sample(core.seed);
    prepare(&io.out)?;
    let mut t = Table::new(&["t", "z"]);
    for (x, z) in path.times.iter().zip(&path.values) {
        t.push(vec![*x, *z]);
    }
    let report = HermitePathReport {
        m: core.m,
        h0: core.h0,
        hurst: core.h,
        k: core.k,
        t_max: core.t_max,
        n_grid: core.n_grid,
        t_left: core.t_left,
        omitted_mass: core.omitted_mass(),
        noise_cells: hp.noise_len(),
        seed: core.seed,
    };
    finish(io, manifest, &report, vec![("path".into(), t)])
}

fn experiment(io: &IoArgs, mode: Mode, command: &str) -> Result<Vec<PathBuf>, LabError> {
    let (mut cfg, bytes): (ExperimentConfig, _) = read_json(&io.config)?;
    match cfg.mode {
        None => cfg.mode = Some(mode),
        Some(m) if m == mode => {}
        Some(m) => {
            return Err(LabError::Validation(format!(
                "config has mode {} but the `{command}` command runs mode {}",
                m.name(),
                mode.name()
            )))
        }
    }
    cfg.validate()?;
    let manifest = RunManifest::start(command, &bytes, cfg.seed_base);
    let pool = thread_pool()?;
    match mode {
        Mode::Oscillatory | Mode::Corrector => {
            let r = run_convergence(&pool, &cfg)?;
            prepare(&io.out)?;
            finish(io, manifest, &r, r.tables())
        }
        Mode::Covariance => {
            let phi = cfg.phi_config().build()?;
            let kernel = cfg.kernel()?;
            let r = covariance_decay_report(&pool, &phi, &kernel, &cfg.lags, cfg.mc_paths, cfg.mc_length, cfg.delta, cfg.seed_base)?;
            prepare(&io.out)?;
            finish(io, manifest, &r, r.tables())
        }
        Mode::TaqquFdd => {
            let kernel = cfg.kernel()?;
            let r = taqqu_variance_report(
                &pool,
                &kernel,
                &cfg.ts,
                cfg.replicas,
                cfg.delta,
                cfg.seed_base,
                Some((cfg.z_grid, cfg.permutations)),
            )?;
            prepare(&io.out)?;
            finish(io, manifest, &r, r.tables())
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    epsilon: f64,
    delta: f64,
    cells: usize,
    a_star: f64,
    c_eps: f64,
    c_star: f64,
    x_eps: f64,
    sup_corrector: f64,
    rho_eps: f64,
    reconstruction_error: f64,
}

fn solve(args: &SolveArgs) -> Result<Vec<PathBuf>, LabError> {
    let bytes = serde_json::to_vec(args).map_err(|e| LabError::Runtime(format!("serialization failed: {e}")))?;
    let manifest = RunManifest::start("solve", &bytes, args.seed);
    if !(args.epsilon > 0.0 && args.epsilon < 1.0) {
        return Err(LabError::Validation("epsilon must lie in (0, 1)".into()));
    }
    if !(args.samples_per_unit >= 1.0) {
        return Err(LabError::Validation("samples-per-unit must be at least 1".into()));
    }
    let kernel = KernelSpec::default_for(args.m, args.h0)?;
    let phi_cfg = match args.phi {
        PhiChoice::Auto => PhiConfig::bounded_default(args.m as usize, args.a_star),
        PhiChoice::Constant => PhiConfig {
            method: PhiMethod::Constant,
            m: 0,
            a_star: args.a_star,
            nodes: None,
            psi: None,
        },
    };
    let sampler = phi_cfg.sampler()?;
    let spec = ProblemSpec::new(Source::by_name(&args.source)?, args.b, args.epsilon, sampler.clone(), 1000)?;
    let delta = aligned_delta(args.epsilon, args.samples_per_unit);
    let n = (1.0 / (args.epsilon * delta)).round() as usize;
    let path = MovingAverage::new(&kernel, delta, None)?.path(n, args.seed);
    let medium = Medium::from_path(&sampler, &path, args.epsilon)?;
    let pair = solve_on(&spec, &medium);
    let xe = x_eps(&kernel, args.epsilon);
    let dec = decompose(&spec, &medium, &pair, xe)?;
    let corr = pair.corrector();
    prepare(&args.out)?;
    let mut t = Table::new(&["x", "u_eps", "u_bar", "corrector", "U_eps"]);
    for (j, x) in pair.x.iter().enumerate() {
        t.push(vec![*x, pair.u_eps[j], pair.u_bar[j], corr[j], dec.rescaled[j]]);
    }
    let report = SolveReport {
        epsilon: args.epsilon,
        delta,
        cells: n,
        a_star: pair.a_star,
        c_eps: pair.c_eps,
        c_star: pair.c_star,
        x_eps: xe,
        sup_corrector: corr.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        rho_eps: dec.rho_eps,
        reconstruction_error: dec.reconstruction_error,
    };
    let io = IoArgs {
        config: PathBuf::new(),
        out: args.out.clone(),
    };
    finish(&io, manifest, &report, vec![("solution".into(), t)])
}

fn finish<T: Serialize>(
    io: &IoArgs,
    manifest: RunManifest,
    report: &T,
    tables: Vec<(String, Table)>,
) -> Result<Vec<PathBuf>, LabError> {
    let mut files = Vec::new();
    let json = io.out.join("report.json");
    write_json(&json, report)?;
    files.push(json);
    for (name, t) in &tables {
        files.extend(write_table(&io.out, name, t)?);
    }
    let m = manifest.finish(&io.out, &files)?;
    files.push(m);
    Ok(files)
}
