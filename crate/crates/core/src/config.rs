//! JSON run configuration.
//!
//! ```json
//! {
//!   "family": {
//!     "kind": "conjugated",
//!     "base": { "kind": "chebyshev" },
//!     "motion": { "g": [1.0], "window": [-0.2, 0.2] }
//!   },
//!   "observable": { "kind": "polynomial", "coefficients": [0.0, 1.0] },
//!   "grid": { "min": -0.1, "max": 0.1, "count": 21 },
//!   "methods": ["zeta", "ulam", "oracle"],
//!   "truncation": 16,
//!   "ulam_bins": 4096,
//!   "safety": 0.9,
//!   "max_degree": 4,
//!   "diagnostics": { "critical_steps": 40, "max_period": 12, "lap_depth": 20 },
//!   "outputs": { "curve": "curve.csv", "report": "report.json" },
//!   "force": false
//! }
//! ```
//!
//! Only `family` is required. A direct family lists polynomial coefficients
//! in `x` for each power of `t`: `coefficients[j][k]` multiplies `t^j x^k`.
//! `observable.kind` is `polynomial` (coefficients in `x`) or
//! `log_abs_derivative`. Without `methods`, every applicable method runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsOptions, DEFAULT_CRITICAL_STEPS, DEFAULT_LAP_DEPTH, DEFAULT_PERIOD, DEFAULT_SAFETY};
use crate::error::{Error, Result};
use crate::family::{AnalyticMotion, MapDescriptor, Observable, Window};
use crate::poly::Polynomial;
use crate::response::{Grid, Method, SweepConfig};
use crate::ulam::DEFAULT_BINS;
use crate::zeta::DEFAULT_TRUNCATION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Chebyshev,
    Direct {
        coefficients: Vec<Vec<f64>>,
        #[serde(default)]
        window: Option<[f64; 2]>,
    },
    Conjugated {
        base: Box<FamilySpec>,
        motion: MotionSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    pub g: Vec<f64>,
    pub window: [f64; 2],
}

impl FamilySpec {
    pub fn build(&self) -> Result<MapDescriptor> {
        match self {
            FamilySpec::Chebyshev => Ok(MapDescriptor::chebyshev()),
            FamilySpec::Direct { coefficients, window } => {
                let w = match window {
                    Some([lo, hi]) => Window::new(*lo, *hi)?,
                    None => Window::point(0.0),
                };
                MapDescriptor::direct(coefficients.clone(), w)
            }
            FamilySpec::Conjugated { base, motion } => {
                let w = Window::new(motion.window[0], motion.window[1])?;
                let motion = AnalyticMotion::new(Polynomial::new(motion.g.clone()), w)?;
                MapDescriptor::conjugated(base.build()?, motion)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Polynomial { coefficients: Vec<f64> },
    LogAbsDerivative,
}

impl Default for ObservableSpec {
    fn default() -> Self {
        ObservableSpec::Polynomial { coefficients: vec![0.0, 0.0, 1.0] }
    }
}

impl ObservableSpec {
    pub fn build(&self) -> Result<Observable> {
        match self {
            ObservableSpec::Polynomial { coefficients } => Observable::polynomial(coefficients.clone()),
            ObservableSpec::LogAbsDerivative => Ok(Observable::LogAbsDerivative),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub critical_steps: usize,
    pub max_period: usize,
    pub lap_depth: usize,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            critical_steps: DEFAULT_CRITICAL_STEPS,
            max_period: DEFAULT_PERIOD,
            lap_depth: DEFAULT_LAP_DEPTH,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub curve: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn default_grid() -> Grid {
    Grid { min: -0.1, max: 0.1, count: 21 }
}
fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}
fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_safety() -> f64 {
    DEFAULT_SAFETY
}
fn default_degree() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilySpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default = "default_grid")]
    pub grid: Grid,
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_bins")]
    pub ulam_bins: usize,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_degree")]
    pub max_degree: usize,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub force: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// A configuration for the given family with every other field defaulted.
    pub fn for_family(family: FamilySpec) -> Self {
        Self::from_json(&serde_json::json!({ "family": family }).to_string()).expect("defaults are valid")
    }

    pub fn diagnostics_options(&self) -> DiagnosticsOptions {
        DiagnosticsOptions {
            critical_steps: self.diagnostics.critical_steps,
            max_period: self.diagnostics.max_period,
            lap_depth: self.diagnostics.lap_depth,
            safety: self.safety,
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let family = self.family.build()?;
        let methods = match &self.methods {
            Some(m) => m.clone(),
            None if family.is_conjugated() => vec![Method::Zeta, Method::Ulam, Method::Oracle],
            None => vec![Method::Zeta, Method::Ulam],
        };
        let cfg = SweepConfig {
            family,
            observable: self.observable.build()?,
            grid: self.grid,
            methods,
            truncation: self.truncation,
            ulam_bins: self.ulam_bins,
            max_degree: self.max_degree,
            diagnostics: self.diagnostics_options(),
            force: self.force,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
