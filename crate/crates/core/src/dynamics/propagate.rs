use serde::{Deserialize, Serialize};

use super::linalg::{segment_unitary, QubitState, Unitary2};
use super::protocol::{Protocol, Segment, DEFAULT_STEPS_PER_PI};
use super::ModelParams;
use crate::error::{domain, validation, Result};

/// Sampled states along [0, T].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QubitState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&QubitState> {
        self.states.last()
    }

    /// Largest departure of ‖ψ(t)‖ from its initial value.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.states.first().map(|s| s.norm()).unwrap_or(0.0);
        self.states
            .iter()
            .map(|s| (s.norm() - n0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub trajectory: Trajectory,
    pub total: Unitary2,
}

/// U(t, u) = exp(−i t ((ω₀/2)σz + uσx)).
pub fn constant_propagator(t: f64, u: f64, params: &ModelParams) -> Result<Unitary2> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("propagation time must be non-negative, got {t}"));
    }
    Ok(segment_unitary(t, u, params.hz()))
}

/// Ordered product U_N ⋯ U_2 U_1 over the segments.
pub fn segments_unitary(segments: &[Segment], hz: f64) -> Unitary2 {
    segments.iter().fold(Unitary2::identity(), |acc, s| {
        segment_unitary(s.dt, s.u, hz) * acc
    })
}

/// Evolve `initial` through `segments`, recording the state at each of the
/// (ascending) `sample_times`.
pub fn propagate_segments(
    segments: &[Segment],
    hz: f64,
    initial: &QubitState,
    sample_times: &[f64],
) -> Trajectory {
    let mut states = Vec::with_capacity(sample_times.len());
    let mut psi = *initial;
    let mut t0 = 0.0;
    let mut k = 0;
    for seg in segments {
        let t1 = t0 + seg.dt;
        while k < sample_times.len() && sample_times[k] < t1 {
            let local = (sample_times[k] - t0).max(0.0);
            states.push(segment_unitary(local, seg.u, hz).apply(&psi));
            k += 1;
        }
        psi = segment_unitary(seg.dt, seg.u, hz).apply(&psi);
        t0 = t1;
    }
    while states.len() < sample_times.len() {
        states.push(psi);
    }
    Trajectory {
        times: sample_times.to_vec(),
        states,
    }
}

pub(crate) fn uniform_times(duration: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|i| duration * i as f64 / last).collect()
}

/// Propagate with the default reduction grid for smooth variants.
pub fn propagate(
    protocol: &Protocol,
    params: &ModelParams,
    initial: &QubitState,
    n_samples: usize,
) -> Result<Propagation> {
    propagate_with(protocol, params, initial, n_samples, DEFAULT_STEPS_PER_PI)
}

/// Propagate with `steps_per_pi` reduction steps per unit of T/π for smooth
/// variants (ignored for piecewise-constant ones).
pub fn propagate_with(
    protocol: &Protocol,
    params: &ModelParams,
    initial: &QubitState,
    n_samples: usize,
    steps_per_pi: usize,
) -> Result<Propagation> {
    if n_samples < 2 {
        return validation(format!("need at least two samples, got {n_samples}"));
    }
    if steps_per_pi == 0 {
        return validation("reduction grid density must be positive");
    }
    let segments = protocol.segments_with(protocol.reduction_steps(steps_per_pi));
    let hz = params.hz();
    let times = uniform_times(protocol.duration(), n_samples);
    let trajectory = propagate_segments(&segments, hz, initial, &times);
    Ok(Propagation {
        trajectory,
        total: segments_unitary(&segments, hz),
    })
}
