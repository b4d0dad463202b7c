use serde::{Deserialize, Serialize};

use super::linalg::{QubitState, Unitary2};
use super::protocol::{Protocol, RabiPulse};
use super::ModelParams;
use crate::error::Result;

/// Which two-trajectory gate objective to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    X,
    Y,
    /// Population transfer |0⟩ ↔ |1⟩, phase-insensitive.
    Pt,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Pt => "pt",
        }
    }
}

impl std::str::FromStr for GateKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(GateKind::X),
            "y" => Ok(GateKind::Y),
            "pt" => Ok(GateKind::Pt),
            other => Err(crate::Error::Validation(format!(
                "unknown gate `{other}` (expected x, y or pt)"
            ))),
        }
    }
}

/// −|⟨target|U|init⟩|² ∈ [−1, 0].
pub fn state_prep_cost(total: &Unitary2, init: &QubitState, target: &QubitState) -> f64 {
    -target.inner(&total.apply(init)).norm_sqr()
}

/// Gate terminal cost in [−1, 0]; −1 exactly for the ideal gate up to global phase.
pub fn gate_cost(total: &Unitary2, kind: GateKind) -> f64 {
    let a = total.entry(1, 0);
    let b = total.entry(0, 1);
    match kind {
        GateKind::X => -0.25 * (a + b).norm_sqr(),
        GateKind::Y => -0.25 * (a - b).norm_sqr(),
        GateKind::Pt => -0.5 * (a.norm_sqr() + b.norm_sqr()),
    }
}

/// Resonant π-pulse of duration π/u_max, even about T/2.
pub fn rabi_protocol(params: &ModelParams) -> Result<Protocol> {
    let params = ModelParams::with_omega0(params.omega0, params.u_max)?;
    Ok(Protocol::Rabi(RabiPulse {
        u_max: params.u_max,
        omega0: params.omega0,
        duration: params.rabi_time(),
    }))
}
