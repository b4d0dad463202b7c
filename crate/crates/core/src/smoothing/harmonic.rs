use super::{
    gate_excess, min_perfect_time, verified_excess, Scheme, SchemeOutput, SmoothingConfig,
    SmoothingRun,
};
use crate::dynamics::{ModelParams, Protocol, ThirdHarmonic};
use crate::error::Result;
use crate::optim::{nelder_mead, stratified_starts, OptimizerConfig};

fn pulse(x: &[f64], duration: f64, params: &ModelParams) -> Result<Protocol> {
    let ratio = x[1].clamp(ThirdHarmonic::RATIO_MIN, ThirdHarmonic::RATIO_MAX);
    Ok(Protocol::ThirdHarmonic(ThirdHarmonic::new(
        params.u_max,
        x[0],
        ratio,
        duration,
    )?))
}

/// Nelder-Mead over (ω, R) of the first-plus-third-harmonic pulse, with R
/// clipped to [−1/8, 1].
pub fn optimize_third_harmonic(
    duration: f64,
    params: &ModelParams,
    config: &SmoothingConfig,
    warm: Option<(f64, f64)>,
) -> Result<SmoothingRun> {
    let w0 = params.omega0;
    let opt = OptimizerConfig {
        max_iter: config.max_iter,
        tolerance: config.tolerance,
        x_tolerance: 1e-12,
        restarts: config.restarts,
        seed: config.seed,
        bounds: Some(vec![
            (0.8 * w0, 1.2 * w0),
            (ThirdHarmonic::RATIO_MIN, ThirdHarmonic::RATIO_MAX),
        ]),
    };
    let mut starts = vec![vec![w0, 0.0], vec![w0, -0.1]];
    if let Some((w, r)) = warm {
        starts.insert(0, vec![w, r]);
    }
    starts.extend(stratified_starts(
        opt.bounds.as_deref().unwrap_or(&[]),
        config.restarts,
        &opt,
    ));

    let objective = |x: &[f64]| match pulse(x, duration, params) {
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
    let (x, _, converged) = best.expect("at least one start");
    let protocol = pulse(&x, duration, params)?;
    let Protocol::ThirdHarmonic(h) = &protocol else {
        unreachable!()
    };
    let output = SchemeOutput::ThirdHarmonic {
        omega: h.omega,
        ratio: h.ratio,
    };
    Ok(SmoothingRun {
        scheme: Scheme::ThirdHarmonic,
        duration,
        params: *params,
        gate: config.gate,
        cost_plus_one: verified_excess(&protocol, params, config.gate),
        protocol,
        converged,
        output,
    })
}

/// Shortest perfect-gate duration of the first-plus-third-harmonic pulse.
pub fn third_harmonic_min_time(
    params: &ModelParams,
    config: &SmoothingConfig,
) -> Result<SmoothingRun> {
    min_perfect_time(params, config, |t, warm| {
        let w = warm.and_then(|r| match r.output {
            SchemeOutput::ThirdHarmonic { omega, ratio } => Some((omega, ratio)),
            _ => None,
        });
        optimize_third_harmonic(t, params, config, w)
    })
}
