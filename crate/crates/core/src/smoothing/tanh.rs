use std::f64::consts::PI;

use super::{
    gate_excess, min_perfect_time, verified_excess, Scheme, SchemeOutput, SmoothingConfig,
    SmoothingRun,
};
use crate::dynamics::{ModelParams, Protocol, TanhPulse};
use crate::error::{validation, Result};
use crate::optim::{nelder_mead, stratified_starts, OptimizerConfig};

/// Tanh-smoothed bang-bang pulse from its N free switching times.
pub fn tanh_protocol(
    half_times: &[f64],
    beta: f64,
    duration: f64,
    params: &ModelParams,
) -> Result<Protocol> {
    Ok(Protocol::Tanh(TanhPulse::new(
        params.u_max,
        beta,
        duration,
        half_times.to_vec(),
    )?))
}

/// Switch pairs from the resonance estimate 2N ≈ ω₀T/π.
pub fn default_pairs(duration: f64, params: &ModelParams) -> usize {
    ((params.omega0 * duration / (2.0 * PI)).round() as usize).max(1)
}

/// N switching times spaced by π/ω₀ and centred on T/2.
fn resonant_guess(pairs: usize, duration: f64, params: &ModelParams) -> Vec<f64> {
    let bar = (PI / params.omega0).min(duration / (2 * pairs) as f64);
    (0..pairs)
        .map(|i| 0.5 * duration - (pairs - i) as f64 * bar + 0.5 * bar)
        .collect()
}

/// Nelder-Mead over the N free switching times of a tanh pulse.
pub fn optimize_tanh(
    pairs: usize,
    beta: f64,
    duration: f64,
    params: &ModelParams,
    config: &SmoothingConfig,
    warm: Option<&[f64]>,
) -> Result<SmoothingRun> {
    if pairs == 0 {
        return validation("need at least one switch pair");
    }
    let half = 0.5 * duration;
    let opt = OptimizerConfig {
        max_iter: config.max_iter,
        tolerance: config.tolerance,
        x_tolerance: 1e-10 * duration,
        restarts: config.restarts,
        seed: config.seed ^ pairs as u64,
        bounds: Some(vec![(0.0, half); pairs]),
    };
    let mut starts = vec![resonant_guess(pairs, duration, params)];
    if let Some(w) = warm.filter(|w| w.len() == pairs) {
        starts.insert(0, w.iter().map(|t| t.clamp(0.0, half)).collect());
    }
    starts.extend(stratified_starts(
        opt.bounds.as_deref().unwrap_or(&[]),
        config.restarts,
        &opt,
    ));

    let objective = |x: &[f64]| match tanh_protocol(x, beta, duration, params) {
        Ok(p) => gate_excess(&p, params, config.gate, config.steps_per_pi),
        Err(_) => f64::INFINITY,
    };
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for x0 in starts {
        let m = nelder_mead(objective, &x0, &opt)?;
        if best.as_ref().map_or(true, |b| m.f < b.1) {
            let converged = m.converged();
            best = Some((m.x, m.f, converged));
        }
        if best
            .as_ref()
            .is_some_and(|b| b.1 <= 0.01 * config.tol_fidelity)
        {
            break;
        }
    }
    let (mut x, _, converged) = best.expect("at least one start");
    x.sort_by(f64::total_cmp);
    let protocol = tanh_protocol(&x, beta, duration, params)?;
    Ok(SmoothingRun {
        scheme: Scheme::Tanh,
        duration,
        params: *params,
        gate: config.gate,
        cost_plus_one: verified_excess(&protocol, params, config.gate),
        protocol,
        converged,
        output: SchemeOutput::Tanh {
            beta,
            half_times: x,
        },
    })
}

fn half_times(run: &SmoothingRun) -> Option<&[f64]> {
    match &run.output {
        SchemeOutput::Tanh { half_times, .. } => Some(half_times),
        _ => None,
    }
}

/// Best tanh pulse at T over N ∈ {N₀ − 1, N₀, N₀ + 1}, N₀ from the
/// resonance estimate.
fn best_tanh(
    beta: f64,
    duration: f64,
    params: &ModelParams,
    config: &SmoothingConfig,
    warm: Option<&SmoothingRun>,
) -> Result<SmoothingRun> {
    let n0 = default_pairs(duration, params);
    let mut best: Option<SmoothingRun> = None;
    for n in [n0, n0 + 1, n0.saturating_sub(1)] {
        if n == 0 {
            continue;
        }
        let w: Option<Vec<f64>> = warm.and_then(half_times).filter(|h| h.len() == n).map(|h| {
            h.iter()
                .map(|t| t * duration / warm.unwrap().duration)
                .collect()
        });
        let run = optimize_tanh(n, beta, duration, params, config, w.as_deref())?;
        if best
            .as_ref()
            .map_or(true, |b| run.cost_plus_one < b.cost_plus_one)
        {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one pair count"))
}

/// Best tanh pulse at a fixed T, switch-pair count chosen automatically.
pub fn tanh_at_time(
    beta: f64,
    duration: f64,
    params: &ModelParams,
    config: &SmoothingConfig,
) -> Result<SmoothingRun> {
    best_tanh(beta, duration, params, config, None)
}

/// Shortest duration at which a tanh pulse of smoothness β implements the gate.
pub fn tanh_min_time(
    beta: f64,
    params: &ModelParams,
    config: &SmoothingConfig,
) -> Result<SmoothingRun> {
    min_perfect_time(params, config, |t, warm| {
        best_tanh(beta, t, params, config, warm)
    })
}
