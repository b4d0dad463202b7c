//! Fidelity-preserving smoothing of bang-bang gate pulses and spectral
//! diagnostics.

mod constrained;
mod harmonic;
mod spectrum;
mod tanh;

pub use constrained::{
    constrained_smooth_optimize, fit_cosine, smoothness_cost, smoothness_gradient,
    ConstrainedConfig, CosineFit, InitialPulse, Objective, TraceRow,
};
pub use harmonic::{optimize_third_harmonic, third_harmonic_min_time};
pub use spectrum::{fourier_spectrum, perturbative_amplitude, SpectralLine};
pub use tanh::{default_pairs, optimize_tanh, tanh_at_time, tanh_min_time, tanh_protocol};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    gate_cost, segments_unitary, GateKind, ModelParams, Protocol, DEFAULT_STEPS_PER_PI,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Tanh,
    ThirdHarmonic,
    ConstrainedSmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SchemeOutput {
    Tanh {
        beta: f64,
        half_times: Vec<f64>,
    },
    ThirdHarmonic {
        omega: f64,
        ratio: f64,
    },
    ConstrainedSmooth {
        objective: f64,
        iterations: usize,
        trace: Vec<TraceRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRun {
    pub scheme: Scheme,
    #[serde(rename = "T")]
    pub duration: f64,
    pub params: ModelParams,
    pub gate: GateKind,
    pub protocol: Protocol,
    /// C_gate + 1 on the fine verification grid.
    pub cost_plus_one: f64,
    pub converged: bool,
    pub output: SchemeOutput,
}

impl SmoothingRun {
    pub fn accepted(&self, tol_fidelity: f64) -> bool {
        self.cost_plus_one <= tol_fidelity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub gate: GateKind,
    pub tol_fidelity: f64,
    /// Magnus grid density while optimizing; results are re-evaluated on
    /// the default grid.
    pub steps_per_pi: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Minimum-time scans: T/T_Rabi range, step and bisection resolution.
    pub t_range: (f64, f64),
    pub t_step: f64,
    pub t_resolution: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            gate: GateKind::X,
            tol_fidelity: 1e-6,
            steps_per_pi: 400,
            restarts: 6,
            max_iter: 2000,
            tolerance: 1e-12,
            seed: 0,
            t_range: (0.75, 1.2),
            t_step: 0.01,
            t_resolution: 1e-4,
        }
    }
}

/// C_gate + 1 with `steps_per_pi` Magnus steps per π of duration.
pub(crate) fn gate_excess(
    protocol: &Protocol,
    params: &ModelParams,
    gate: GateKind,
    steps_per_pi: usize,
) -> f64 {
    let segs = protocol.segments_with(protocol.reduction_steps(steps_per_pi));
    gate_cost(&segments_unitary(&segs, params.hz()), gate) + 1.0
}

pub(crate) fn verified_excess(protocol: &Protocol, params: &ModelParams, gate: GateKind) -> f64 {
    gate_excess(protocol, params, gate, DEFAULT_STEPS_PER_PI)
}

/// Smallest T (in units of T_Rabi, scanning `config.t_range`) at which
/// `run(T, warm)` reaches the fidelity tolerance, refined by bisection.
pub(crate) fn min_perfect_time<F>(
    params: &ModelParams,
    config: &SmoothingConfig,
    mut run: F,
) -> Result<SmoothingRun>
where
    F: FnMut(f64, Option<&SmoothingRun>) -> Result<SmoothingRun>,
{
    let t_rabi = params.rabi_time();
    let (lo, hi) = config.t_range;
    let mut prev: Option<(f64, SmoothingRun)> = None;
    let mut r = lo;
    while r <= hi + 1e-12 {
        let cur = run(r * t_rabi, prev.as_ref().map(|p| &p.1))?;
        if cur.accepted(config.tol_fidelity) {
            let mut below = prev.map_or(lo - config.t_step, |p| p.0);
            let (mut above, mut best) = (r, cur);
            while above - below > config.t_resolution {
                let mid = 0.5 * (below + above);
                let trial = run(mid * t_rabi, Some(&best))?;
                if trial.accepted(config.tol_fidelity) {
                    above = mid;
                    best = trial;
                } else {
                    below = mid;
                }
            }
            return Ok(best);
        }
        prev = Some((r, cur));
        r += config.t_step;
    }
    Err(Error::NotFound(format!(
        "no perfect gate for T/T_Rabi in [{lo}, {hi}]"
    )))
}
