//! Derivative-free and projected-gradient minimizers shared by the search modules.

mod gradient;
mod scalar;
mod simplex;

pub use gradient::{projected_gradient, GradientConfig, GradientRun};
pub use scalar::{golden_section, scalar_minimize, ScalarMinimum};
pub use simplex::{nelder_mead, stratified_starts, Minimum};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    /// Backtracking could not find a decrease.
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    /// Stop when the spread of simplex values falls below this.
    pub tolerance: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Per-dimension box `[lo, hi]`; `None` leaves the problem unconstrained.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tolerance: 1e-10,
            x_tolerance: 1e-9,
            restarts: 20,
            seed: 0,
            bounds: None,
        }
    }
}

impl OptimizerConfig {
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.x_tolerance > 0.0) {
            return validation("tolerances must be positive");
        }
        if self.max_iter == 0 {
            return validation("max_iter must be positive");
        }
        if let Some(b) = &self.bounds {
            if b.len() != dim {
                return validation(format!("{} bounds given for {dim} dimensions", b.len()));
            }
            if let Some((lo, hi)) = b
                .iter()
                .find(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
            {
                return validation(format!("invalid bound [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub(crate) fn clip(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (v, (lo, hi)) in x.iter_mut().zip(b) {
            *v = v.clamp(*lo, *hi);
        }
    }
}
