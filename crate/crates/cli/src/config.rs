//! Experiment configuration files (TOML).
//!
//! ```toml
//! dim = 2
//! half_width = 3.141592653589793   # box [-L, L)^d
//! n = 16                           # Monte-Carlo grid
//! pde_n = 64                       # optional, n times a power of two
//! horizon = 0.1
//! steps = 16                       # time steps of the characteristics
//! samples = 10000
//! seed = 12
//! basis = "sinusoidal"             # or a list of [[modes]]
//! control = "const:0.5,-0.3"       # zero | const:a,b | flip:a,b@t
//! mollifier_cells = 4              # ε = 4 Δx of the PDE grid
//! checkpoints = [0.05]
//!
//! [velocity]
//! kind = "singular_vortex"
//!
//! [initial]
//! kind = "gaussian_stream"
//! amplitude = 1.0
//! center = [0.3, -0.2]
//! width = 0.7
//!
//! [tolerances]
//! tol_inv = 1e-2
//! allowance = 0.05
//! ```

use std::any::Any;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use stochvec::characteristics::TOL_INV;
use stochvec::fields::analytic::{gaussian_stream, SingularVortex, Zero};
use stochvec::fields::{AnalyticField, Grid, Mollifier, SharedField};
use stochvec::noise::{ModeSpec, NoiseBasis};
use stochvec::parabolic::Control;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde_n: Option<usize>,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde_dt_max: Option<f64>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeSpec>,
    #[serde(default = "default_control")]
    pub control: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier_cells: Option<f64>,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub velocity: FieldSpec,
    pub initial: FieldSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_half_width() -> f64 {
    PI
}

fn default_control() -> String {
    "zero".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol_inv")]
    pub tol_inv: f64,
    #[serde(default = "default_allowance")]
    pub allowance: f64,
}

fn default_tol_inv() -> f64 {
    TOL_INV
}

fn default_allowance() -> f64 {
    0.05
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_inv: default_tol_inv(),
            allowance: default_allowance(),
        }
    }
}

/// Analytic fields nameable in a config. `gaussian_stream` and
/// `singular_vortex` exist only for `dim = 2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    #[default]
    Zero,
    Shear {
        amplitude: f64,
        wavevector: Vec<f64>,
        direction: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    Cellular {
        amplitude: f64,
        wavenumbers: [f64; 2],
        #[serde(default)]
        phases: [f64; 2],
    },
    GaussianStream {
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    SingularVortex,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub control: Option<String>,
    pub allowance: Option<f64>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

fn as_dim<const D: usize>(f: Arc<dyn AnalyticField<2>>, field: &str) -> Result<SharedField<D>, CliError> {
    let any: Box<dyn Any> = Box::new(f);
    any.downcast::<SharedField<D>>()
        .map(|b| *b)
        .map_err(|_| invalid(field, "this kind needs dim = 2"))
}

impl FieldSpec {
    pub fn build<const D: usize>(&self, half_width: f64, field: &str) -> Result<SharedField<D>, CliError> {
        let mode = |m: ModeSpec| m.build::<D>().map_err(|e| invalid(field, e));
        match self {
            FieldSpec::Zero => Ok(Arc::new(Zero)),
            FieldSpec::Shear {
                amplitude,
                wavevector,
                direction,
                phase,
            } => mode(ModeSpec::Shear {
                amplitude: *amplitude,
                wavevector: wavevector.clone(),
                direction: direction.clone(),
                phase: *phase,
            }),
            FieldSpec::Cellular {
                amplitude,
                wavenumbers,
                phases,
            } => mode(ModeSpec::Cellular {
                amplitude: *amplitude,
                wavenumbers: *wavenumbers,
                phases: *phases,
            }),
            FieldSpec::GaussianStream {
                amplitude,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return Err(invalid(&format!("{field}.width"), "must be positive"));
                }
                as_dim::<D>(Arc::new(gaussian_stream(*amplitude, *center, *width)), field)
            }
            FieldSpec::SingularVortex => as_dim::<D>(Arc::new(SingularVortex::example(half_width)), field),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: Self =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(t) = o.horizon {
            self.horizon = t;
            self.checkpoints.retain(|&c| c <= t);
        }
        if let Some(m) = o.samples {
            self.samples = m;
        }
        if let Some(dt) = o.dt {
            let steps = self.horizon / dt;
            if !(dt > 0.0) || (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                return Err(invalid("dt", format!("{dt} must divide the horizon {}", self.horizon)));
            }
            self.steps = steps.round() as usize;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(c) = &o.control {
            self.control = c.clone();
        }
        if let Some(a) = o.allowance {
            self.tolerances.allowance = a;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !matches!(self.dim, 2 | 3) {
            return Err(invalid("dim", format!("must be 2 or 3, got {}", self.dim)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(invalid("half_width", "must be positive and finite"));
        }
        if self.n < 3 {
            return Err(invalid("n", "need at least 3 nodes per axis"));
        }
        if let Some(p) = self.pde_n {
            if p < self.n || p % self.n != 0 || !(p / self.n).is_power_of_two() {
                return Err(invalid("pde_n", format!("must be n = {} times a power of two, got {p}", self.n)));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "must be positive and finite"));
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        if let Some(dt) = self.pde_dt_max {
            if !(dt > 0.0) {
                return Err(invalid("pde_dt_max", "must be positive"));
            }
        }
        if self.samples < 2 {
            return Err(invalid("samples", "need at least 2 samples"));
        }
        match (&self.basis, self.modes.is_empty()) {
            (Some(_), false) => return Err(invalid("basis", "give either `basis` or `modes`, not both")),
            (None, true) => return Err(invalid("basis", "missing; set a preset or list [[modes]]")),
            (Some(name), true) => {
                ModeSpec::preset(name, self.dim).map_err(|e| invalid("basis", e))?;
            }
            (None, false) => {}
        }
        for (i, &c) in self.checkpoints.iter().enumerate() {
            if !(c > 0.0 && c <= self.horizon) {
                return Err(invalid(&format!("checkpoints[{i}]"), format!("{c} is outside (0, horizon]")));
            }
        }
        if let Some(c) = self.mollifier_cells {
            if !(c >= 1.0) {
                return Err(invalid("mollifier_cells", "must be at least 1"));
            }
        } else if self.velocity == FieldSpec::SingularVortex {
            return Err(invalid("mollifier_cells", "required when velocity is singular_vortex"));
        }
        if !(self.tolerances.tol_inv > 0.0) {
            return Err(invalid("tolerances.tol_inv", "must be positive"));
        }
        if !(self.tolerances.allowance >= 0.0) {
            return Err(invalid("tolerances.allowance", "must be nonnegative"));
        }
        let control = self.control()?;
        control.validate(self.mode_specs()?.len()).map_err(|e| invalid("control", e))?;
        Ok(())
    }

    pub fn control(&self) -> Result<Control, CliError> {
        self.control.parse().map_err(|e| invalid("control", e))
    }

    fn mode_specs(&self) -> Result<Vec<ModeSpec>, CliError> {
        match &self.basis {
            Some(name) => ModeSpec::preset(name, self.dim).map_err(|e| invalid("basis", e)),
            None => Ok(self.modes.clone()),
        }
    }

    pub fn basis<const D: usize>(&self) -> Result<NoiseBasis<D>, CliError> {
        let specs = self.mode_specs()?;
        let modes = specs
            .iter()
            .enumerate()
            .map(|(i, m)| m.build::<D>().map_err(|e| invalid(&format!("modes[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NoiseBasis::new(modes))
    }

    pub fn mc_grid<const D: usize>(&self) -> Grid<D> {
        Grid::new(self.n, self.half_width)
    }

    pub fn pde_grid<const D: usize>(&self) -> Grid<D> {
        Grid::new(self.pde_n.unwrap_or(self.n), self.half_width)
    }

    pub fn initial<const D: usize>(&self) -> Result<SharedField<D>, CliError> {
        self.initial.build(self.half_width, "initial")
    }

    /// The drift, mollified on the PDE grid when `mollifier_cells` is set.
    pub fn velocity<const D: usize>(&self) -> Result<SharedField<D>, CliError> {
        let raw = self.velocity.build::<D>(self.half_width, "velocity")?;
        match self.mollifier_cells {
            None => Ok(raw),
            Some(cells) => {
                let grid = self.pde_grid::<D>();
                let smoothed = Mollifier::new(cells * grid.dx())
                    .smoothed(raw.as_ref(), grid)
                    .map_err(|e| invalid("mollifier_cells", e))?;
                Ok(Arc::new(smoothed))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
dim = 2
n = 8
horizon = 0.1
steps = 4
samples = 10
basis = "constant"

[initial]
kind = "gaussian_stream"
amplitude = 1.0
center = [0.0, 0.0]
width = 0.6
"#;

    #[test]
    fn minimal_config_validates() {
        let c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.half_width, PI);
        assert_eq!(c.velocity, FieldSpec::Zero);
        assert!(c.control().unwrap().is_zero());
        assert!(c.initial::<3>().is_err());
        assert_eq!(c.basis::<2>().unwrap().len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let text = MINIMAL.replace("width = 0.6", "width = 0.6\nwidht = 1");
        let err = toml::from_str::<ExperimentConfig>(&text).unwrap_err().to_string();
        assert!(err.contains("widht") && err.contains("line"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        c.apply(&Overrides {
            horizon: Some(0.2),
            dt: Some(0.025),
            control: Some("const:1".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((c.horizon, c.steps), (0.2, 8));
        c.validate().unwrap();
        assert!(c
            .apply(&Overrides {
                dt: Some(0.03),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn singular_velocity_needs_a_mollifier() {
        let text = MINIMAL.replace("basis = \"constant\"", "basis = \"constant\"\n[velocity]\nkind = \"singular_vortex\"");
        let c: ExperimentConfig = toml::from_str(&text).unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("mollifier_cells"), "{err}");
    }
}
