//! TOML run configuration.
//!
//! ```toml
//! [model]
//! b = 8.0          # field strength, >= 0
//! nu = 1.0         # charge per unit area, > 0
//! spin = false     # Zeeman-split Landau ladder
//!
//! [grid]
//! length = 16.0    # box [-length/2, length/2]
//! npoints = 641    # odd
//!
//! [profile]        # required; kind = gaussian | uniform | tabulated
//! kind = "gaussian"
//! center = 0.0
//! width = 1.0
//!
//! [solver]         # every key optional
//! nbands = 40
//! smoothing = 0.05
//! mixing_alpha = 0.3
//! mixing_depth = 8
//! max_iterations = 500
//! density_tol = 1e-10
//! residual_tol = 1e-8
//! initial = "neutral"   # or "random"
//! seed = 0
//! amplitude = 1.0
//!
//! [sweep]
//! b = [0.0, 0.5, 1.0, 2.0]
//! ```
//!
//! A tabulated profile names a two-column whitespace-separated file
//! (`x value`, `#` comments allowed), resolved relative to the config file.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::Error;
use crate::grid1d::Grid;
use crate::penalty::{FieldStrength, SmoothingParams, SpinMode};
use crate::scf::{InitialGuess, ScfConfig};
use crate::state::ChargeProfile;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub b: f64,
    pub nu: f64,
    #[serde(default)]
    pub spin: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub npoints: usize,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Gaussian {
        #[serde(default)]
        center: f64,
        width: f64,
    },
    Uniform {
        halfwidth: f64,
    },
    Tabulated {
        file: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    #[default]
    Neutral,
    Random,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub nbands: Option<usize>,
    /// Smoothing width `δ`; absent means the exact penalty.
    pub smoothing: Option<f64>,
    #[serde(default = "defaults::mixing_alpha")]
    pub mixing_alpha: f64,
    #[serde(default = "defaults::mixing_depth")]
    pub mixing_depth: usize,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "defaults::density_tol")]
    pub density_tol: f64,
    #[serde(default = "defaults::residual_tol")]
    pub residual_tol: f64,
    #[serde(default)]
    pub initial: InitialKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::amplitude")]
    pub amplitude: f64,
}

mod defaults {
    pub fn mixing_alpha() -> f64 {
        0.3
    }
    pub fn mixing_depth() -> usize {
        8
    }
    pub fn max_iterations() -> usize {
        500
    }
    pub fn density_tol() -> f64 {
        1e-10
    }
    pub fn residual_tol() -> f64 {
        1e-8
    }
    pub fn amplitude() -> f64 {
        1.0
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            nbands: None,
            smoothing: None,
            mixing_alpha: defaults::mixing_alpha(),
            mixing_depth: defaults::mixing_depth(),
            max_iterations: defaults::max_iterations(),
            density_tol: defaults::density_tol(),
            residual_tol: defaults::residual_tol(),
            initial: InitialKind::Neutral,
            seed: 0,
            amplitude: defaults::amplitude(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub b: Vec<f64>,
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, Error> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn grid(&self) -> Result<Grid, Error> {
        Grid::new(self.grid.length, self.grid.npoints).map_err(|e| invalid("grid", e))
    }

    pub fn profile(&self, grid: &Grid) -> Result<ChargeProfile, Error> {
        let nu = self.model.nu;
        let built = match &self.profile {
            ProfileSpec::Gaussian { center, width } => ChargeProfile::gaussian(grid, nu, *center, *width),
            ProfileSpec::Uniform { halfwidth } => ChargeProfile::uniform(grid, nu, *halfwidth),
            ProfileSpec::Tabulated { file } => {
                let path = self.base_dir.join(file);
                let (xs, values) = read_two_columns(&path)?;
                ChargeProfile::tabulated(grid, nu, &xs, &values)
            }
        };
        built.map_err(|e| invalid("profile", e))
    }

    /// Solver configuration at field `b` (the model's field when `None`).
    pub fn scf_config(&self, b: Option<f64>) -> Result<ScfConfig, Error> {
        let b = b.unwrap_or(self.model.b);
        let field = FieldStrength::new(b).map_err(|e| invalid("model.b", e))?;
        let grid = self.grid()?;
        let profile = self.profile(&grid)?;
        let s = &self.solver;
        let mut cfg = ScfConfig::new(field, profile);
        cfg.spin = SpinMode::from_flag(self.model.spin);
        cfg.nbands = s.nbands;
        cfg.smoothing = s
            .smoothing
            .map(SmoothingParams::new)
            .transpose()
            .map_err(|e| invalid("solver.smoothing", e))?;
        cfg.mixing_alpha = s.mixing_alpha;
        cfg.mixing_depth = s.mixing_depth;
        cfg.max_iterations = s.max_iterations;
        cfg.density_tol = s.density_tol;
        cfg.residual_tol = s.residual_tol;
        cfg.initial = match s.initial {
            InitialKind::Neutral => InitialGuess::Neutral,
            InitialKind::Random => InitialGuess::RandomPotential {
                seed: s.seed,
                amplitude: s.amplitude,
            },
        };
        cfg.validate().map_err(|e| invalid("solver", e))?;
        Ok(cfg)
    }
}

fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid("profile.file", format!("cannot read {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let parsed = match cols.as_slice() {
            [x, v] => x.parse::<f64>().ok().zip(v.parse::<f64>().ok()),
            _ => None,
        };
        let Some((x, v)) = parsed else {
            return Err(invalid(
                "profile.file",
                format!("{}:{}: expected two numbers", path.display(), lineno + 1),
            ));
        };
        xs.push(x);
        vs.push(v);
    }
    Ok((xs, vs))
}
