use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelParams, Protocol, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    /// f_n = n / T.
    pub f: f64,
    pub amplitude: C64,
}

/// ∫₀ᵀ (u(t)/u_max) e^{−i2πf_n t} dt for n = 0..=n_max.
///
/// Piecewise-constant protocols are integrated exactly segment by segment;
/// smooth ones by composite Simpson on a grid fine enough for `n_max`.
pub fn fourier_spectrum(protocol: &Protocol, n_max: usize) -> Vec<SpectralLine> {
    let t = protocol.duration();
    let u_max = protocol.u_max();
    let pieces: Option<Vec<Segment>> = match protocol {
        Protocol::BangSequence(_) | Protocol::OneParamBb(_) | Protocol::Sampled(_) => {
            Some(protocol.segments())
        }
        _ => None,
    };
    let simpson_grid = |n: usize| -> Vec<(f64, f64)> {
        // even number of intervals, at least 32 per period of the top frequency
        let m = (2 * ((32 * n.max(1) + 4000) / 2)).max(8000);
        let h = t / m as f64;
        (0..=m)
            .map(|k| {
                let w = if k == 0 || k == m {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let s = k as f64 * h;
                (s, w * h / 3.0 * protocol.value_at(s) / u_max)
            })
            .collect()
    };
    let grid = if pieces.is_none() {
        simpson_grid(n_max)
    } else {
        Vec::new()
    };

    (0..=n_max)
        .map(|n| {
            let f = n as f64 / t;
            let w = 2.0 * PI * f;
            let amplitude = match &pieces {
                Some(segs) => {
                    let mut acc = C64::new(0.0, 0.0);
                    let mut a = 0.0;
                    for s in segs {
                        let b = a + s.dt;
                        let c = s.u / u_max;
                        acc += if n == 0 {
                            C64::new(c * s.dt, 0.0)
                        } else {
                            c * (C64::from_polar(1.0, -w * a) - C64::from_polar(1.0, -w * b))
                                / C64::new(0.0, w)
                        };
                        a = b;
                    }
                    acc
                }
                None => grid
                    .iter()
                    .map(|&(s, v)| v * C64::from_polar(1.0, -w * s))
                    .sum(),
            };
            SpectralLine { f, amplitude }
        })
        .collect()
}

/// (1 − e^{ixt}) / x written as −it·e^{ixt/2}·sinc(xt/2), finite at x = 0.
fn pair_term(x: f64, t: f64) -> C64 {
    let y = 0.5 * x * t;
    let sinc = if y.abs() < 1e-8 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    };
    C64::new(0.0, -t) * C64::from_polar(sinc, y)
}

/// First-order rotating-frame amplitude C̃₁(t) for u(t) = Σ_N V_N cos(Nωt),
/// starting from C̃₁(0) = 0, C̃₂(0) = 1. `harmonics[k]` is V_{k+1}.
pub fn perturbative_amplitude(harmonics: &[f64], omega: f64, t: f64, params: &ModelParams) -> C64 {
    let w0 = params.omega0;
    harmonics
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let nw = (k + 1) as f64 * omega;
            0.5 * v * (pair_term(w0 - nw, t) + pair_term(w0 + nw, t))
        })
        .sum()
}
