//! Subcommands and the exit-code contract: `0` success, `1` a verification
//! threshold failed (or the numerics broke down), `2` usage, configuration
//! or file errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use geofem_core::analysis::{compute_spectrum, convergence_study, infsup_study, poisson_sparsity_check};
use geofem_core::assembly::Operators;
use geofem_core::mesh::{generate_square_mesh, Mesh};
use geofem_core::model::{Model, StandingWave, State};
use geofem_core::spaces::{ElementPair, PairKind};
use geofem_core::Error as CoreError;

use crate::config::{apply_text, ConfigError, InitKind, MeshSource, RunConfig};
use crate::matrix_market::write_matrix_market;
use crate::meshfile::{load_mesh, write_mesh, MeshFileError};
use crate::report::{write_convergence, write_infsup, write_spectrum, DiagnosticsWriter};
use crate::vtk::write_vtk;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Thresholds applied by the verification subcommands.
pub const BALANCE_DRIFT_TOL: f64 = 1e-8;
pub const POISSON_TOL: f64 = 1e-10;
pub const INFSUP_MARGIN_TOL: f64 = 1e-10;
pub const INFSUP_MAX_SPREAD: f64 = 1.2;
pub const SPECTRUM_REAL_TOL: f64 = 1e-10;
pub const SPECTRUM_RESIDUAL_TOL: f64 = 1e-11;

/// Least observed elevation order accepted by `converge`.
pub fn expected_order(kind: PairKind) -> Option<f64> {
    match kind {
        PairKind::P0P1 => Some(0.8),
        PairKind::P1DgP2 => Some(1.8),
        PairKind::P2DgP3 => Some(2.7),
        PairKind::P1P1 => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    MeshFile { path: PathBuf, source: MeshFileError },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::ZeroPivot(_))
            | CliError::Core(CoreError::NotPositiveDefinite)
            | CliError::Core(CoreError::NoConvergence { .. })
            | CliError::Core(CoreError::Eigen(_)) => EXIT_VERIFICATION,
            _ => EXIT_USAGE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "geofem", version, about = "Mixed finite elements for the linear rotating shallow-water equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Configuration file plus per-key overrides; flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Element pair: P0-P1, P1DG-P2, P2DG-P3 or P1-P1
    #[arg(long)]
    pub pair: Option<String>,
    /// Subdivisions per side of the generated unit-square mesh
    #[arg(long)]
    pub n: Option<String>,
    /// Interior node perturbation as a fraction of the edge length, in [0, 0.3]
    #[arg(long)]
    pub perturb: Option<String>,
    #[arg(long)]
    pub mesh_seed: Option<String>,
    /// Read the mesh from a file instead of generating it
    #[arg(long)]
    pub mesh_file: Option<String>,
    /// Rossby number; f = 1/Ro
    #[arg(long)]
    pub ro: Option<String>,
    /// Froude number; g = 1/Fr^2
    #[arg(long)]
    pub fr: Option<String>,
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub dbar: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub nsteps: Option<String>,
    /// Seed of the random initial state
    #[arg(long)]
    pub seed: Option<String>,
    /// Initial state: balanced, projected, random or standing-wave
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
    /// Linear solver: direct or iterative
    #[arg(long)]
    pub solver: Option<String>,
    /// Relative tolerance of the iterative solver
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
    /// Steps between VTK snapshots (0 disables)
    #[arg(long)]
    pub snapshot_interval: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            apply_text(&mut cfg, &text)?;
        }
        let overrides = [
            ("pair", &self.pair),
            ("n", &self.n),
            ("perturb", &self.perturb),
            ("mesh_seed", &self.mesh_seed),
            ("mesh_file", &self.mesh_file),
            ("ro", &self.ro),
            ("fr", &self.fr),
            ("f", &self.f),
            ("g", &self.g),
            ("dbar", &self.dbar),
            ("dt", &self.dt),
            ("nsteps", &self.nsteps),
            ("seed", &self.seed),
            ("init", &self.init),
            ("output_dir", &self.output_dir),
            ("solver", &self.solver),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("snapshot_interval", &self.snapshot_interval),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|kind| ConfigError { line: 0, kind })?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a perturbed unit-square mesh
    MeshGen {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Destination file (standard output when absent)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate in time, writing diagnostics.csv and optional VTK snapshots
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Replicate the balanced steady-state experiment over several seeds
    BalanceTest {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = BALANCE_DRIFT_TOL)]
        threshold: f64,
    },
    /// Inf-sup constants over a refinement sweep
    Infsup {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        sizes: Vec<usize>,
    },
    /// Compare the composed pressure operator with the stiffness matrix
    PoissonCheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = POISSON_TOL)]
        threshold: f64,
    },
    /// Dense spectrum of the semi-discrete operator
    Spectrum {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Random balanced states used for the kernel residual
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
    /// Standing-wave convergence study with f = 0
    Converge {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        t_final: f64,
        /// Least acceptable elevation order (pair-specific default)
        #[arg(long)]
        min_order: Option<f64>,
    },
    /// Write M_u, M_eta, G, C and K in Matrix Market format
    ExportOps {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFICATION,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one subcommand; `Ok(false)` means a verification threshold failed.
pub fn execute(command: &Command) -> Result<bool, CliError> {
    match command {
        Command::MeshGen { cfg, output } => mesh_gen(&cfg.resolve()?, output.as_deref()),
        Command::Run { cfg } => run(&cfg.resolve()?),
        Command::BalanceTest { cfg, seeds, threshold } => balance_test(&cfg.resolve()?, *seeds, *threshold),
        Command::Infsup { cfg, sizes } => infsup(&cfg.resolve()?, sizes),
        Command::PoissonCheck { cfg, threshold } => poisson_check(&cfg.resolve()?, *threshold),
        Command::Spectrum { cfg, samples } => spectrum(&cfg.resolve()?, *samples),
        Command::Converge {
            cfg,
            sizes,
            t_final,
            min_order,
        } => converge(&cfg.resolve()?, sizes, *t_final, *min_order),
        Command::ExportOps { cfg } => export_ops(&cfg.resolve()?),
    }
}

pub fn build_mesh(cfg: &RunConfig) -> Result<Arc<Mesh>, CliError> {
    match &cfg.mesh {
        MeshSource::Generated { n, perturb, seed } => Ok(Arc::new(generate_square_mesh(*n, *perturb, *seed)?)),
        MeshSource::File(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let mesh = load_mesh(&text).map_err(|source| CliError::MeshFile {
                path: path.clone(),
                source,
            })?;
            Ok(Arc::new(mesh))
        }
    }
}

fn sweep_meshes(cfg: &RunConfig, sizes: &[usize]) -> Result<Vec<Arc<Mesh>>, CliError> {
    let MeshSource::Generated { perturb, seed, .. } = cfg.mesh else {
        return Err(CliError::Usage("refinement sweeps need a generated mesh, not mesh_file".into()));
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::Usage("--sizes needs positive subdivision counts".into()));
    }
    sizes
        .iter()
        .map(|&n| Ok(Arc::new(generate_square_mesh(n, perturb, seed)?)))
        .collect()
}

pub fn build_model(cfg: &RunConfig) -> Result<Model, CliError> {
    let pair = ElementPair::new(cfg.pair, build_mesh(cfg)?)?;
    Ok(Model::new(pair, cfg.model_params()?, cfg.solver_kind())?)
}

/// Initial state selected by `cfg.init`.
pub fn initial_state(model: &Model, cfg: &RunConfig, seed: u64) -> Result<State, CliError> {
    let projected = |m: &Model| -> Result<State, CliError> {
        let eta = m.random_eta(seed);
        let u = m.project_balanced(&eta)?;
        Ok(State::from_coeffs(&m.pair, u, eta)?)
    };
    match cfg.init {
        InitKind::Balanced if model.pair.is_embedding() => Ok(model.random_balanced_state(seed)?),
        InitKind::Balanced | InitKind::Projected => projected(model),
        InitKind::Random => Ok(model.random_state(seed)),
        InitKind::StandingWave => {
            let w = StandingWave {
                g: model.params.g,
                dbar: model.params.dbar,
            };
            let u = model.pair.v.interpolate(|x| w.u(x, 0.0));
            let eta = model.pair.h.interpolate(|x| w.eta(x, 0.0));
            Ok(State::from_coeffs(&model.pair, u, eta)?)
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn mesh_gen(cfg: &RunConfig, output: Option<&Path>) -> Result<bool, CliError> {
    let text = write_mesh(build_mesh(cfg)?.as_ref());
    match output {
        Some(path) => fs::write(path, text).map_err(io_err(path))?,
        None => io::stdout().write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(true)
}

fn run(cfg: &RunConfig) -> Result<bool, CliError> {
    let model = build_model(cfg)?;
    let initial = initial_state(&model, cfg, cfg.seed)?;
    create_dir(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("diagnostics.csv");
    let mut diag = DiagnosticsWriter::new(create_file(&csv_path)?)?;
    let mut failure: Option<CliError> = None;
    let last = cfg.nsteps;
    let (records, _) = model.run(&initial, cfg.nsteps, &mut |rec, state| {
        if failure.is_some() {
            return;
        }
        if let Err(e) = diag.write(rec) {
            failure = Some(e.into());
            return;
        }
        let k = cfg.snapshot_interval;
        if k > 0 && (rec.step % k == 0 || rec.step == last) {
            let path = cfg.output_dir.join(format!("snapshot_{:06}.vtk", rec.step));
            let title = format!("{} step {} time {:e}", model.pair.name(), rec.step, rec.time);
            let res = create_file(&path).and_then(|mut f| {
                write_vtk(&model.pair, state, &title, &mut f)
                    .and_then(|_| f.flush())
                    .map_err(io_err(&path))
            });
            if let Err(e) = res {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    diag.finish()?.flush().map_err(io_err(&csv_path))?;
    let (first, end) = (records[0], records[records.len() - 1]);
    println!(
        "{} ndof(u)={} ndof(eta)={} steps={} eta_drift={:e} u_drift={:e} energy_drift={:e} div_inf={:e}",
        model.pair.name(),
        model.pair.v.ndof(),
        model.pair.h.ndof(),
        cfg.nsteps,
        end.eta_drift,
        end.u_drift,
        ((end.energy - first.energy) / first.energy).abs(),
        end.div_inf
    );
    println!("wrote {}", csv_path.display());
    Ok(true)
}

fn balance_test(cfg: &RunConfig, seeds: u64, threshold: f64) -> Result<bool, CliError> {
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let model = build_model(cfg)?;
    create_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("balance.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(["seed", "eta_drift", "u_drift", "div_inf"])?;
    let mut worst = 0.0f64;
    for s in 0..seeds {
        let seed = cfg.seed + s;
        let init = initial_state(&model, cfg, seed)?;
        let (records, _) = model.run(&init, cfg.nsteps, &mut |_, _| {})?;
        let end = records[records.len() - 1];
        let drift = end.eta_drift.max(end.u_drift);
        worst = worst.max(drift);
        println!("seed {seed}: eta_drift={:e} u_drift={:e}", end.eta_drift, end.u_drift);
        w.write_record([seed.to_string(), format!("{:e}", end.eta_drift), format!("{:e}", end.u_drift), format!("{:e}", end.div_inf)])?;
    }
    w.flush().map_err(io_err(&path))?;
    let pass = worst <= threshold;
    println!(
        "{} max drift over {seeds} seeds: {worst:e} (threshold {threshold:e}) {}",
        model.pair.name(),
        verdict(pass)
    );
    Ok(pass)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn infsup(cfg: &RunConfig, sizes: &[usize]) -> Result<bool, CliError> {
    let meshes = sweep_meshes(cfg, sizes)?;
    let r = infsup_study(cfg.pair, &meshes)?;
    create_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("infsup.csv");
    write_infsup(&r, sizes, create_file(&path)?)?;
    for (k, n) in sizes.iter().enumerate() {
        println!(
            "{} n={n} h={:.4} beta={:.10} sqrt(lambda_min)={:.10} lambda_min={:.6}",
            r.pair,
            r.h[k],
            r.beta[k],
            r.lambda_min[k].sqrt(),
            r.lambda_min[k]
        );
    }
    let embedding = ElementPair::new(cfg.pair, meshes[0].clone())?.is_embedding();
    let margin_ok = r.min_margin() >= -INFSUP_MARGIN_TOL;
    let spread_ok = r.beta_spread() <= INFSUP_MAX_SPREAD;
    println!("margin min(beta - sqrt(lambda_min)) = {:e}, spread max/min beta = {:.6}", r.min_margin(), r.beta_spread());
    if !embedding {
        println!("{} lacks the embedding conditions; reported only", r.pair);
        return Ok(true);
    }
    let pass = margin_ok && spread_ok;
    println!("{}", verdict(pass));
    Ok(pass)
}

fn poisson_check(cfg: &RunConfig, threshold: f64) -> Result<bool, CliError> {
    let pair = ElementPair::new(cfg.pair, build_mesh(cfg)?)?;
    let ops = Operators::assemble(&pair)?;
    let c = poisson_sparsity_check(&pair, &ops)?;
    let pass = c.relative() <= threshold;
    println!(
        "{} |G^T M_u^-1 G - K|_max = {:e}, relative {:e} (threshold {threshold:e}) {}",
        pair.name(),
        c.discrepancy,
        c.relative(),
        verdict(pass)
    );
    Ok(pass)
}

fn spectrum(cfg: &RunConfig, samples: usize) -> Result<bool, CliError> {
    let model = build_model(cfg)?;
    let r = compute_spectrum(&model, samples)?;
    create_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("spectrum.csv");
    write_spectrum(&r, create_file(&path)?)?;
    let skew_ok = r.max_real <= SPECTRUM_REAL_TOL * r.max_abs;
    println!("{} modes={} max|Re mu|={:e} max|mu|={:e}", r.pair, r.omegas.len(), r.max_real, r.max_abs);
    println!("zero modes={} interior elevation dofs={}", r.zero_modes, r.interior_h_dofs);
    if let Some(w) = r.min_nonzero_frequency() {
        println!("smallest nonzero |omega| = {w:e} (f = {})", model.params.f);
    }
    let mut pass = skew_ok;
    if model.pair.is_embedding() && model.params.f > 0.0 {
        let kernel_ok = r.zero_modes >= r.interior_h_dofs;
        let residual_ok = r.balanced_residual <= SPECTRUM_RESIDUAL_TOL;
        println!("balanced residual |Bx|/(|B||x|) = {:e}", r.balanced_residual);
        pass &= kernel_ok && residual_ok;
    }
    println!("{}", verdict(pass));
    Ok(pass)
}

fn converge(cfg: &RunConfig, sizes: &[usize], t_final: f64, min_order: Option<f64>) -> Result<bool, CliError> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(CliError::Usage("--t-final must be positive".into()));
    }
    if sizes.len() < 2 {
        return Err(CliError::Usage("--sizes needs at least two meshes".into()));
    }
    let meshes = sweep_meshes(cfg, sizes)?;
    let p = cfg.model_params()?;
    let r = convergence_study(cfg.pair, &meshes, p.g, p.dbar, t_final)?;
    create_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("convergence.csv");
    write_convergence(&r, sizes, create_file(&path)?)?;
    for (k, n) in sizes.iter().enumerate() {
        println!("{} n={n} h={:.4} dt={:.3e} err_eta={:e} err_u={:e}", r.pair, r.h[k], r.dt[k], r.err_eta[k], r.err_u[k]);
    }
    println!("observed order: eta {:.3}, u {:.3}", r.order_eta, r.order_u);
    match min_order.or(expected_order(cfg.pair)) {
        Some(q) => {
            let pass = r.order_eta >= q;
            println!("required eta order {q} {}", verdict(pass));
            Ok(pass)
        }
        None => Ok(true),
    }
}

fn export_ops(cfg: &RunConfig) -> Result<bool, CliError> {
    let pair = ElementPair::new(cfg.pair, build_mesh(cfg)?)?;
    let ops = Operators::assemble(&pair)?;
    create_dir(&cfg.output_dir)?;
    let list = [
        ("mass_u", &ops.mass_u),
        ("mass_eta", &ops.mass_eta),
        ("gradient", &ops.gradient),
        ("coriolis", &ops.coriolis),
        ("stiffness", &ops.stiffness),
    ];
    for (name, op) in list {
        let path = cfg.output_dir.join(format!("{name}.mtx"));
        let mut f = create_file(&path)?;
        write_matrix_market(op, &format!("{name} for {}", pair.name()), &mut f)
            .and_then(|_| f.flush())
            .map_err(io_err(&path))?;
        println!("wrote {} ({}x{}, {} entries)", path.display(), op.nrows(), op.ncols(), op.nnz());
    }
    Ok(true)
}
