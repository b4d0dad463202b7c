use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::linalg::QubitState;
use crate::error::{domain, Result};

/// Polar θ ∈ [0, π] and azimuth φ ∈ (−π, π] of |ψ⟩ = [cos θ/2, sin θ/2 e^{iφ}]ᵀ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub theta: f64,
    pub phi: f64,
}

impl BlochPoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return domain(format!("theta must lie in [0, pi], got {theta}"));
        }
        if !phi.is_finite() {
            return domain("phi must be finite");
        }
        Ok(Self {
            theta,
            phi: wrap_phi(phi),
        })
    }

    pub fn state(&self) -> QubitState {
        state_from_bloch(self)
    }
}

/// Map an angle into (−π, π].
pub fn wrap_phi(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Remove the global phase: c0 real ≥ 0, or c1 real > 0 when c0 vanishes.
pub fn canonical_phase(s: &QubitState) -> QubitState {
    let (a0, a1) = (s.c0.norm(), s.c1.norm());
    let reference = if a0 > 1e-300 { s.c0 } else { s.c1 };
    if reference.norm() == 0.0 {
        return *s;
    }
    let rot = reference.conj() / reference.norm();
    let out = s.scale(rot);
    if a0 > 1e-300 {
        QubitState::new(C64::new(out.c0.re, 0.0), out.c1)
    } else {
        QubitState::new(C64::new(0.0, 0.0), C64::new(a1, 0.0))
    }
}

pub fn bloch_from_state(s: &QubitState) -> Result<BlochPoint> {
    let Some(s) = s.normalized() else {
        return domain("cannot map the zero vector onto the Bloch sphere");
    };
    let (a0, a1) = (s.c0.norm(), s.c1.norm());
    let theta = 2.0 * a1.atan2(a0);
    let phi = if a1 < 1e-15 || a0 < 1e-15 {
        0.0
    } else {
        wrap_phi(s.c1.arg() - s.c0.arg())
    };
    Ok(BlochPoint { theta, phi })
}

pub fn state_from_bloch(b: &BlochPoint) -> QubitState {
    let (s, c) = (0.5 * b.theta).sin_cos();
    QubitState::new(C64::new(c, 0.0), C64::from_polar(s, b.phi))
}
