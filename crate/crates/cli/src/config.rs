//! The single JSON run document.

use std::path::{Path, PathBuf};

use choquard_core::bubbles::bubble_scale;
use choquard_core::{Error, Grading, ModelDoc, RadialGrid, Result, SampleSpec, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub r_max: f64,
    pub n_nodes: usize,
    pub grading: Grading,
}

impl GridBlock {
    pub fn build(&self, dimension: usize) -> Result<RadialGrid> {
        RadialGrid::new(dimension, self.r_max, self.n_nodes, self.grading)
    }

    fn geometric(r_max: f64, n_nodes: usize, first_spacing: f64) -> Self {
        GridBlock {
            r_max,
            n_nodes,
            grading: Grading::Geometric { first_spacing },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalChoice {
    Limit,
    Full,
}

/// Field whose ray t ↦ J(t·u) is traced by `energy-curve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Direction {
    /// amplitude·e^{−(r/width)²}
    Gaussian { amplitude: f64, width: f64 },
    /// One seeded random bump field.
    RandomBump,
    /// A ground-state CSV; defaults to `ground_state.csv` in the output directory.
    GroundState {
        #[serde(default)]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveBlock {
    pub functional: FunctionalChoice,
    pub direction: Direction,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for CurveBlock {
    fn default() -> Self {
        CurveBlock {
            functional: FunctionalChoice::Limit,
            direction: Direction::Gaussian {
                amplitude: 1.0,
                width: 1.0,
            },
            t_min: 1e-2,
            t_max: 1e2,
            points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiments {
    /// Bubble scales for the threshold experiment.
    pub eps_list: Vec<f64>,
    /// Cutoff exponent; `None` takes the regime-gate choice.
    pub tau: Option<f64>,
    /// Extra bubble scales run on ε-adapted grids against a same-grid c*_∞.
    pub adapted_eps: Vec<f64>,
    pub adapted_nodes: usize,
    /// Bubble scales and integrability exponents for the cut-off asymptotics table.
    pub prop22_eps: Vec<f64>,
    pub prop22_t: Vec<f64>,
    /// Offsets for the translated-competitor experiment.
    pub r_list: Vec<f64>,
    /// Offsets and weight rate for the localized-ratio table.
    pub lemma45_offsets: Vec<f64>,
    pub mu_hat: f64,
    pub decay_window: (f64, f64),
    pub samples: SampleSpec,
    pub curve: CurveBlock,
    /// Input for `translate`; defaults to `ground_state.csv` in the output directory.
    pub ground_state_path: Option<PathBuf>,
}

impl Default for Experiments {
    fn default() -> Self {
        Experiments {
            eps_list: vec![0.1, 0.05, 0.025],
            tau: None,
            adapted_eps: Vec::new(),
            adapted_nodes: 1024,
            prop22_eps: vec![0.2, 0.1, 0.05, 0.025],
            prop22_t: vec![2.0, 1.5, 1.0],
            r_list: vec![5.0, 8.0],
            lemma45_offsets: vec![2.0, 4.0, 6.0],
            mu_hat: 3.0,
            decay_window: (5.0, 20.0),
            samples: SampleSpec::default(),
            curve: CurveBlock::default(),
            ground_state_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelDoc,
    /// Grid for the ground state, translations and energy curves.
    #[serde(default = "default_grid")]
    pub grid: GridBlock,
    /// Grid for the unit bubble used by `constants`.
    #[serde(default = "default_constants_grid")]
    pub constants_grid: GridBlock,
    /// Grid for the cut-off bubbles of the threshold experiment.
    #[serde(default = "default_bubble_grid")]
    pub bubble_grid: GridBlock,
    /// Grid for the cut-off asymptotics table; must reach twice the cutoff radius √S.
    #[serde(default = "default_prop22_grid")]
    pub prop22_grid: GridBlock,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub experiments: Experiments,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Directory for cached kernel tables.
    #[serde(default)]
    pub kernel_cache: Option<PathBuf>,
}

fn default_grid() -> GridBlock {
    GridBlock::geometric(30.0, 2048, 1e-5)
}

fn default_constants_grid() -> GridBlock {
    GridBlock::geometric(60.0, 2048, 1e-4)
}

fn default_bubble_grid() -> GridBlock {
    GridBlock::geometric(1.0, 2048, 1e-5)
}

fn default_prop22_grid() -> GridBlock {
    GridBlock::geometric(9.0, 2048, 1e-4)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every block before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let (_, params) = self.model.build()?;
        let n = params.dimension;
        self.grid.build(n)?;
        self.constants_grid.build(n)?;
        self.bubble_grid.build(n)?;
        self.prop22_grid.build(n)?;
        self.solver.validate()?;
        let x = &self.experiments;
        if x.eps_list
            .iter()
            .chain(&x.adapted_eps)
            .any(|e| !(*e > 0.0 && e.is_finite()))
        {
            return Err(Error::Config("bubble scales must be positive".into()));
        }
        let radius = bubble_scale(n, 1.0);
        if self.prop22_grid.r_max < 2.0 * radius {
            return Err(Error::Config(format!(
                "prop22_grid.r_max must be at least 2√S = {:.4}",
                2.0 * radius
            )));
        }
        if x.prop22_eps.len() < 2 || x.prop22_eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::Config(
                "prop22_eps needs at least two scales in (0, 1)".into(),
            ));
        }
        if x.prop22_t.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Config("prop22_t exponents must be positive".into()));
        }
        if let Some(tau) = x.tau {
            if !(tau > 0.5 && tau < 1.0) {
                return Err(Error::Config(format!("tau = {tau} must lie in (1/2, 1)")));
            }
        }
        if x.r_list
            .iter()
            .chain(&x.lemma45_offsets)
            .any(|r| !(*r >= 0.0))
        {
            return Err(Error::Config("offsets must be non-negative".into()));
        }
        let (lo, hi) = x.decay_window;
        if !(lo >= 0.0 && lo < hi && hi <= 0.8 * self.grid.r_max) {
            return Err(Error::Config(format!(
                "decay window [{lo}, {hi}] must satisfy 0 ≤ lo < hi ≤ 0.8·r_max = {}",
                0.8 * self.grid.r_max
            )));
        }
        if !(x.mu_hat > 0.0) {
            return Err(Error::Config("mu_hat must be positive".into()));
        }
        if x.samples.points < 2 {
            return Err(Error::Config(
                "at least two sample points are needed".into(),
            ));
        }
        let c = &x.curve;
        if !(c.t_min > 0.0 && c.t_max > c.t_min && c.points >= 2) {
            return Err(Error::Config(
                "curve needs 0 < t_min < t_max and at least two points".into(),
            ));
        }
        Ok(())
    }
}
