use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{BangSequence, ModelParams};
use crate::error::{domain, validation, Result};

/// ω_eff = Ω / (1 + (2/π) asin(4λ₀u_max / (AΩ²))), the zero frequency of a
/// bang-bang switching function.
pub fn omega_eff(lambda0_over_a: f64, params: &ModelParams) -> Result<f64> {
    let big = params.big_omega();
    let arg = 4.0 * lambda0_over_a * params.u_max / (big * big);
    if !(-1.0..=1.0).contains(&arg) {
        return domain(format!("asin argument {arg} lies outside [-1, 1]"));
    }
    Ok(big / (1.0 + 2.0 / PI * arg.asin()))
}

/// Piecewise cosine with alternating offsets: on the window of width
/// T̄ = π/ω_eff centred at c_k = T/2 + kT̄,
/// Φ(t) = (−1)^k (A cos(Ω(t − c_k)) + 4u_max λ₀/Ω²).
pub fn analytical_switching(
    a: f64,
    lambda0: f64,
    omega_eff: f64,
    duration: f64,
    params: &ModelParams,
    times: &[f64],
) -> Vec<f64> {
    let big = params.big_omega();
    let d = 4.0 * params.u_max * lambda0 / (big * big);
    let bar = PI / omega_eff;
    times
        .iter()
        .map(|&t| {
            let k = ((t - 0.5 * duration) / bar).round();
            let c = 0.5 * duration + k * bar;
            let s = if (k as i64).rem_euclid(2) == 0 {
                1.0
            } else {
                -1.0
            };
            s * (a * (big * (t - c)).cos() + d)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingFit {
    pub lambda0: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    /// From the frequency relation with the fitted λ₀/A; `None` when it is out of domain.
    pub omega_eff: Option<f64>,
    /// Largest fit residual on the middle bangs, relative to max|Φ| there.
    pub residual: f64,
}

/// Least-squares fit of the per-segment cosine model to a sampled Φ over the
/// middle bangs of `bangs`, with λ₀ = −mean(H_oc).
pub fn fit_switching(
    times: &[f64],
    phi: &[f64],
    hoc: &[f64],
    bangs: &BangSequence,
    params: &ModelParams,
) -> Result<SwitchingFit> {
    if times.len() != phi.len() || times.len() != hoc.len() || times.is_empty() {
        return validation("times, phi and hoc must have equal non-zero length");
    }
    let bounds = bangs.boundaries();
    if bounds.len() < 4 {
        return validation("need at least one middle bang to fit");
    }
    let lambda0 = -hoc.iter().sum::<f64>() / hoc.len() as f64;
    let big = params.big_omega();
    let d = 4.0 * params.u_max * lambda0 / (big * big);

    let mut rows = Vec::new();
    for k in 1..bounds.len() - 2 {
        let (a, b) = (bounds[k], bounds[k + 1]);
        let c = 0.5 * (a + b);
        let s = -bangs.levels()[k].value(1.0).signum();
        for (&t, &p) in times.iter().zip(phi) {
            if t > a && t < b {
                rows.push((s, (big * (t - c)).cos(), p));
            }
        }
    }
    if rows.is_empty() {
        return validation("no samples fall inside the middle bangs");
    }
    let num: f64 = rows.iter().map(|(s, c, p)| s * c * (p - s * d)).sum();
    let den: f64 = rows.iter().map(|(_, c, _)| c * c).sum();
    let amplitude = num / den;
    let peak = rows
        .iter()
        .fold(0.0f64, |m, r| m.max(r.2.abs()))
        .max(1e-300);
    let residual = rows
        .iter()
        .map(|(s, c, p)| (p - s * (amplitude * c + d)).abs())
        .fold(0.0, f64::max)
        / peak;
    let omega_eff = if amplitude != 0.0 {
        omega_eff(lambda0 / amplitude, params).ok()
    } else {
        None
    };
    Ok(SwitchingFit {
        lambda0,
        amplitude,
        omega_eff,
        residual,
    })
}
