//! Exact qubit dynamics for H(t) = (ω₀/2)σz + u(t)σx.

mod bloch;
mod cost;
mod linalg;
mod propagate;
mod protocol;

pub use bloch::{bloch_from_state, canonical_phase, state_from_bloch, wrap_phi, BlochPoint};
pub use cost::{gate_cost, rabi_protocol, state_prep_cost, GateKind};
pub use linalg::{segment_unitary, QubitState, Unitary2};
pub use propagate::{
    constant_propagator, propagate, propagate_segments, propagate_with, segments_unitary,
    Propagation, Trajectory,
};
pub use protocol::{
    magnus4_segments, BangLevel, BangSequence, OneParamBB, Parity, Protocol, ProtocolRecord,
    RabiPulse, SampledPulse, Segment, Sign, TanhPulse, ThirdHarmonic, AMPLITUDE_SLACK,
    DEFAULT_STEPS_PER_PI,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Qubit splitting ω₀ (H₀ = (ω₀/2)σz).
    pub omega0: f64,
    /// Control bound |u(t)| ≤ u_max.
    pub u_max: f64,
}

impl ModelParams {
    pub const DEFAULT_OMEGA0: f64 = 2.0;

    pub fn new(u_max: f64) -> Result<Self> {
        Self::with_omega0(Self::DEFAULT_OMEGA0, u_max)
    }

    pub fn with_omega0(omega0: f64, u_max: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return domain(format!("omega0 must be positive, got {omega0}"));
        }
        if !(u_max.is_finite() && u_max > 0.0) {
            return domain(format!("u_max must be positive, got {u_max}"));
        }
        Ok(Self { omega0, u_max })
    }

    /// Coefficient of σz in H.
    pub fn hz(&self) -> f64 {
        0.5 * self.omega0
    }

    /// Rabi π-pulse duration π/u_max.
    pub fn rabi_time(&self) -> f64 {
        std::f64::consts::PI / self.u_max
    }

    /// Ω = √(ω₀² + 4u_max²), the bang-segment frequency of the switching function.
    pub fn big_omega(&self) -> f64 {
        (self.omega0 * self.omega0 + 4.0 * self.u_max * self.u_max).sqrt()
    }
}
