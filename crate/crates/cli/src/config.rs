//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a trailing comment. Keys are case-insensitive. Unknown keys are
//! rejected, and every error carries the offending line number.

use std::fmt;
use std::path::PathBuf;

use geofem_core::model::{params_from_ro_fr, ModelParams, SolverKind};
use geofem_core::spaces::PairKind;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generated { n: usize, perturb: f64, seed: u64 },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Pointwise balance for embedding pairs, projected balance otherwise.
    Balanced,
    Projected,
    /// Uniform random coefficients in `[-1, 1]` for both fields.
    Random,
    StandingWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Direct,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pair: PairKind,
    pub mesh: MeshSource,
    pub ro: f64,
    pub fr: f64,
    pub f: Option<f64>,
    pub g: Option<f64>,
    pub dbar: Option<f64>,
    pub dt: f64,
    pub nsteps: usize,
    pub seed: u64,
    pub init: InitKind,
    pub output_dir: PathBuf,
    pub solver: SolverChoice,
    pub tol: f64,
    pub max_iter: Option<usize>,
    /// Steps between VTK snapshots; `0` disables them.
    pub snapshot_interval: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pair: PairKind::P1DgP2,
            mesh: MeshSource::Generated { n: 8, perturb: 0.2, seed: 0 },
            ro: 0.1,
            fr: 1.0,
            f: None,
            g: None,
            dbar: None,
            dt: 0.01,
            nsteps: 1000,
            seed: 0,
            init: InitKind::Balanced,
            output_dir: PathBuf::from("./out"),
            solver: SolverChoice::Direct,
            tol: SolverKind::DEFAULT_TOL,
            max_iter: None,
            snapshot_interval: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "pair",
    "n",
    "perturb",
    "mesh_seed",
    "mesh_file",
    "ro",
    "fr",
    "f",
    "g",
    "dbar",
    "dt",
    "nsteps",
    "seed",
    "init",
    "output_dir",
    "solver",
    "tol",
    "max_iter",
    "snapshot_interval",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigErrorKind {
    #[error("expected `key = value`")]
    Syntax,
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("cannot parse `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("`{key}` {reason}")]
    Invalid { key: String, reason: String },
}

/// A configuration error. `line` is 1-based; `0` marks a command-line
/// override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "command line: {}", self.kind)
        } else {
            write!(f, "line {}: {}", self.line, self.kind)
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, reason: &str) -> ConfigErrorKind {
    ConfigErrorKind::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigErrorKind> {
    value.parse().map_err(|_| ConfigErrorKind::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn positive(key: &str, value: &str) -> Result<f64, ConfigErrorKind> {
    let v: f64 = parse(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, "must be positive"))
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment with validation.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigErrorKind> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "pair" => self.pair = parse(&key, value)?,
            "n" => {
                let n: usize = parse(&key, value)?;
                if n == 0 {
                    return Err(invalid(&key, "must be at least 1"));
                }
                *self.generated().0 = n;
            }
            "perturb" => {
                let p: f64 = parse(&key, value)?;
                if !(0.0..=geofem_core::mesh::MAX_PERTURB).contains(&p) {
                    return Err(invalid(&key, "must lie in [0, 0.3]"));
                }
                *self.generated().1 = p;
            }
            "mesh_seed" => *self.generated().2 = parse(&key, value)?,
            "mesh_file" => self.mesh = MeshSource::File(PathBuf::from(value)),
            "ro" => self.ro = positive(&key, value)?,
            "fr" => self.fr = positive(&key, value)?,
            "f" => {
                let f: f64 = parse(&key, value)?;
                if !(f >= 0.0 && f.is_finite()) {
                    return Err(invalid(&key, "must be non-negative"));
                }
                self.f = Some(f);
            }
            "g" => self.g = Some(positive(&key, value)?),
            "dbar" => self.dbar = Some(positive(&key, value)?),
            "dt" => self.dt = positive(&key, value)?,
            "nsteps" => {
                let n: usize = parse(&key, value)?;
                if n == 0 {
                    return Err(invalid(&key, "must be at least 1"));
                }
                self.nsteps = n;
            }
            "seed" => self.seed = parse(&key, value)?,
            "init" => {
                self.init = match value.to_ascii_lowercase().as_str() {
                    "balanced" => InitKind::Balanced,
                    "projected" => InitKind::Projected,
                    "random" => InitKind::Random,
                    "standing_wave" | "standing-wave" => InitKind::StandingWave,
                    _ => return Err(invalid(&key, "must be one of balanced, projected, random, standing-wave")),
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "solver" => {
                self.solver = match value.to_ascii_lowercase().as_str() {
                    "direct" => SolverChoice::Direct,
                    "iterative" => SolverChoice::Iterative,
                    _ => return Err(invalid(&key, "must be `direct` or `iterative`")),
                }
            }
            "tol" => self.tol = positive(&key, value)?,
            "max_iter" => {
                let n: usize = parse(&key, value)?;
                if n == 0 {
                    return Err(invalid(&key, "must be at least 1"));
                }
                self.max_iter = Some(n);
            }
            "snapshot_interval" => self.snapshot_interval = parse(&key, value)?,
            _ => return Err(ConfigErrorKind::UnknownKey(key)),
        }
        Ok(())
    }

    /// Generator parameters, switching a file source back to the default
    /// generator.
    fn generated(&mut self) -> (&mut usize, &mut f64, &mut u64) {
        if let MeshSource::File(_) = self.mesh {
            self.mesh = MeshSource::Generated { n: 8, perturb: 0.2, seed: 0 };
        }
        match &mut self.mesh {
            MeshSource::Generated { n, perturb, seed } => (n, perturb, seed),
            MeshSource::File(_) => unreachable!(),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        let base = params_from_ro_fr(self.ro, self.fr).map_err(|e| ConfigError {
            line: 0,
            kind: invalid("ro/fr", &e.to_string()),
        })?;
        Ok(ModelParams {
            f: self.f.unwrap_or(base.f),
            g: self.g.unwrap_or(base.g),
            dbar: self.dbar.unwrap_or(base.dbar),
            dt: self.dt,
            nsteps: self.nsteps,
        })
    }

    pub fn solver_kind(&self) -> SolverKind {
        match self.solver {
            SolverChoice::Direct => SolverKind::Direct,
            SolverChoice::Iterative => SolverKind::Iterative {
                tol: self.tol,
                max_iter: self.max_iter,
            },
        }
    }
}

/// Parses configuration text on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    apply_text(&mut cfg, text)?;
    Ok(cfg)
}

pub fn apply_text(cfg: &mut RunConfig, text: &str) -> Result<(), ConfigError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |kind| ConfigError { line: i + 1, kind };
        let (key, value) = line.split_once('=').ok_or_else(|| err(ConfigErrorKind::Syntax))?;
        if key.trim().is_empty() || value.trim().is_empty() {
            return Err(err(ConfigErrorKind::Syntax));
        }
        cfg.set(key, value).map_err(err)?;
    }
    Ok(())
}
