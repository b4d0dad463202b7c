use serde::{Deserialize, Serialize};

use super::{clip, Status};
use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientConfig {
    pub max_iter: usize,
    /// Stop when ‖P(x − ∇f) − x‖∞ falls below this.
    pub tolerance: f64,
    /// Stop as soon as f ≤ target.
    pub target: Option<f64>,
    /// First trial step before Barzilai-Borwein steps take over.
    pub initial_step: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Compare `grad` with central differences of `f` at x0 before iterating.
    pub check_gradient: bool,
}

impl Default for GradientConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tolerance: 1e-12,
            target: None,
            initial_step: 1.0,
            armijo: 1e-4,
            max_backtracks: 60,
            check_gradient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientRun {
    pub x: Vec<f64>,
    pub f: f64,
    /// f at every accepted iterate, starting with f(x0).
    pub trace: Vec<f64>,
    pub status: Status,
    pub iterations: usize,
}

fn check_gradient<F, G>(f: &mut F, grad: &mut G, x: &[f64]) -> Result<()>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let g = grad(x);
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        if (fd - g[i]).abs() > 1e-4 * scale {
            return validation(format!(
                "gradient component {i} is {} but finite differences give {fd}",
                g[i]
            ));
        }
    }
    Ok(())
}

/// Projected gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking along the projection arc.
pub fn projected_gradient<F, G>(
    mut f: F,
    mut grad: G,
    x0: &[f64],
    bounds: Option<&[(f64, f64)]>,
    config: &GradientConfig,
) -> Result<GradientRun>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    if let Some(b) = bounds {
        if b.len() != x0.len() || b.iter().any(|(lo, hi)| !(lo <= hi)) {
            return validation("bounds do not match the problem dimension");
        }
    }
    let mut x = x0.to_vec();
    clip(&mut x, bounds);
    if config.check_gradient {
        check_gradient(&mut f, &mut grad, &x)?;
    }
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::Optimization(format!(
            "objective is {fx} at the starting point"
        )));
    }
    let mut trace = vec![fx];
    let mut g = grad(&x);
    let mut step = config.initial_step;
    let mut status = Status::MaxIter;
    let mut iterations = 0;
    let reached = |v: f64| config.target.is_some_and(|t| v <= t);

    while iterations < config.max_iter {
        if reached(fx) {
            status = Status::Converged;
            break;
        }
        let mut unit: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
        clip(&mut unit, bounds);
        if unit
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            <= config.tolerance
        {
            status = Status::Converged;
            break;
        }
        iterations += 1;

        let mut accepted = None;
        let mut s = step;
        for _ in 0..=config.max_backtracks {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - s * b).collect();
            clip(&mut trial, bounds);
            let decrease: f64 = g
                .iter()
                .zip(trial.iter().zip(&x))
                .map(|(gi, (t, xi))| gi * (t - xi))
                .sum();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + config.armijo * decrease {
                accepted = Some((trial, ft));
                break;
            }
            s *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            status = Status::LineSearchFailed;
            break;
        };
        let gn = grad(&xn);
        let (mut sy, mut ss) = (0.0, 0.0);
        for i in 0..x.len() {
            let d = xn[i] - x[i];
            sy += d * (gn[i] - g[i]);
            ss += d * d;
        }
        step = if sy > 0.0 { ss / sy } else { 2.0 * s };
        x = xn;
        g = gn;
        fx = fnew;
        trace.push(fx);
    }
    if status == Status::MaxIter && reached(fx) {
        status = Status::Converged;
    }
    Ok(GradientRun {
        x,
        f: fx,
        trace,
        status,
        iterations,
    })
}
