//! Minimum-time X, Y and population-transfer gates with the one-parameter
//! bang-bang family u = ±u_max Sgn[cos(ω_eff(t − T/2))] (sine form for odd parity).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    gate_cost, propagate, rabi_protocol, segment_unitary, segments_unitary, GateKind, ModelParams,
    OneParamBB, Parity, Protocol, QubitState, Sign, Unitary2,
};
use crate::error::{validation, Error, Result};
use crate::optim::{golden_section, nelder_mead, scalar_minimize, OptimizerConfig};
use crate::pmp::{optimality_report, AuditConfig, CostKind, OptimalityReport, ReportSummary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateProblem {
    pub gate: GateKind,
    pub params: ModelParams,
}

impl GateProblem {
    pub fn new(gate: GateKind, params: ModelParams) -> Self {
        Self { gate, params }
    }

    /// Parities worth searching: X needs an even pulse, Y an odd one, PT either.
    pub fn parities(&self) -> &'static [Parity] {
        match self.gate {
            GateKind::X => &[Parity::Even],
            GateKind::Y => &[Parity::Odd],
            GateKind::Pt => &[Parity::Even, Parity::Odd],
        }
    }

    /// ω_eff search bracket [0.8 ω₀, 1.1 Ω].
    pub fn omega_bracket(&self) -> (f64, f64) {
        (0.8 * self.params.omega0, 1.1 * self.params.big_omega())
    }

    fn cost(&self, omega: f64, duration: f64, sign: Sign, parity: Parity) -> f64 {
        match OneParamBB::new(self.params.u_max, omega, duration, sign, parity) {
            Ok(bb) => gate_cost(
                &segments_unitary(&bb.to_bang_sequence().segments(), self.params.hz()),
                self.gate,
            ),
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XgateConfig {
    /// C + 1 at or below this counts as a complete gate.
    pub tol_fidelity: f64,
    /// Coarse T scan range and step, in units of T_Rabi.
    pub t_range: (f64, f64),
    pub t_step: f64,
    /// Minimum ω_eff scan density; raised to 8 points per 2π/T of bracket.
    pub omega_points: usize,
    pub omega_tol: f64,
    /// The audit runs at this fraction of T*.
    pub report_fraction: f64,
    pub audit: AuditConfig,
}

impl Default for XgateConfig {
    fn default() -> Self {
        Self {
            tol_fidelity: 1e-6,
            t_range: (0.5, 1.2),
            t_step: 0.01,
            omega_points: 400,
            omega_tol: 1e-12,
            report_fraction: 0.999,
            audit: AuditConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaOptimum {
    pub omega_eff: f64,
    pub cost: f64,
    pub sign: Sign,
    pub parity: Parity,
}

/// Build the one-parameter protocol; parity follows the gate (even for PT).
pub fn one_param_protocol(
    omega_eff: f64,
    duration: f64,
    problem: &GateProblem,
    sign: Sign,
) -> Result<Protocol> {
    let parity = problem.parities()[0];
    Ok(Protocol::OneParamBb(OneParamBB::new(
        problem.params.u_max,
        omega_eff,
        duration,
        sign,
        parity,
    )?))
}

fn scan_points(problem: &GateProblem, duration: f64, config: &XgateConfig) -> usize {
    let (lo, hi) = problem.omega_bracket();
    config
        .omega_points
        .max((8.0 * (hi - lo) * duration / PI).ceil() as usize)
}

fn optimize_parity(
    problem: &GateProblem,
    duration: f64,
    parity: Parity,
    config: &XgateConfig,
) -> Result<OmegaOptimum> {
    let m = scalar_minimize(
        |w| problem.cost(w, duration, Sign::Minus, parity),
        problem.omega_bracket(),
        scan_points(problem, duration, config),
        config.omega_tol,
    )?;
    let plus = problem.cost(m.x, duration, Sign::Plus, parity);
    let (sign, cost) = if plus < m.f {
        (Sign::Plus, plus)
    } else {
        (Sign::Minus, m.f)
    };
    Ok(OmegaOptimum {
        omega_eff: m.x,
        cost,
        sign,
        parity,
    })
}

/// Global minimization of the gate cost over ω_eff at fixed T: dense scan of
/// the bracket, golden refinement of every basin, both overall signs.
pub fn optimize_omega_eff(
    duration: f64,
    problem: &GateProblem,
    config: &XgateConfig,
) -> Result<OmegaOptimum> {
    if !(duration > 0.0 && duration.is_finite()) {
        return validation(format!("gate time must be positive, got {duration}"));
    }
    let mut best: Option<OmegaOptimum> = None;
    for &parity in problem.parities() {
        let o = optimize_parity(problem, duration, parity, config)?;
        if best.map_or(true, |b| o.cost < b.cost) {
            best = Some(o);
        }
    }
    Ok(best.expect("at least one parity"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSearchResult {
    pub gate: GateKind,
    pub u_max: f64,
    pub t_star: f64,
    pub t_rabi: f64,
    pub ratio: f64,
    pub omega_eff: f64,
    pub sign: Sign,
    pub parity: Parity,
    pub switch_count: usize,
    pub cost: f64,
    pub protocol: Protocol,
    pub optimality: Option<ReportSummary>,
    #[serde(skip)]
    pub report: Option<OptimalityReport>,
}

/// Refine a coarse (T, ω) minimum of C + 1 jointly; the gate is reached at
/// isolated points of the (T, ω) plane, so a 1-D scan in T only brackets them.
fn refine_joint(
    problem: &GateProblem,
    t0: f64,
    o: &OmegaOptimum,
    t_halfwidth: f64,
) -> Result<(f64, f64, f64)> {
    let w_halfwidth = 2.0 * PI / t0;
    let bounds = vec![
        (t0 - t_halfwidth, t0 + t_halfwidth),
        (o.omega_eff - w_halfwidth, o.omega_eff + w_halfwidth),
    ];
    let cfg = OptimizerConfig {
        max_iter: 4000,
        tolerance: 1e-15,
        x_tolerance: 1e-12,
        ..Default::default()
    }
    .with_bounds(bounds);
    let m = nelder_mead(
        |x| problem.cost(x[1], x[0], o.sign, o.parity) + 1.0,
        &[t0, o.omega_eff],
        &cfg,
    )?;
    Ok((m.x[0], m.x[1], m.f))
}

/// Smallest gate time reachable by the one-parameter family.
///
/// g(T) = min_ω (C + 1) is scanned on a coarse T grid; its local minima are
/// refined jointly in (T, ω) in increasing T, and the first one that reaches
/// `tol_fidelity` gives T*.
pub fn min_gate_time(problem: &GateProblem, config: &XgateConfig) -> Result<GateSearchResult> {
    let u_max = problem.params.u_max;
    if !(u_max > 0.0 && u_max <= 1.0) {
        return validation(format!("u_max must lie in (0, 1], got {u_max}"));
    }
    let t_rabi = problem.params.rabi_time();
    let (lo, hi) = config.t_range;
    let steps = ((hi - lo) / config.t_step).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (lo + i as f64 * config.t_step) * t_rabi)
        .collect();
    let coarse: Vec<OmegaOptimum> = grid
        .par_iter()
        .map(|&t| optimize_omega_eff(t, problem, config))
        .collect::<Result<_>>()?;
    let g: Vec<f64> = coarse.iter().map(|o| o.cost + 1.0).collect();

    let half = config.t_step * t_rabi;
    let mut found = None;
    for k in 0..g.len() {
        let left = k == 0 || g[k - 1] > g[k];
        let right = k + 1 == g.len() || g[k + 1] >= g[k];
        if !(left && right) {
            continue;
        }
        let (t, w, c) = refine_joint(problem, grid[k], &coarse[k], half)?;
        if c <= config.tol_fidelity {
            found = Some((
                t,
                OmegaOptimum {
                    omega_eff: w,
                    cost: c - 1.0,
                    ..coarse[k]
                },
            ));
            break;
        }
    }
    let Some((t_star, opt)) = found else {
        return Err(Error::NotFound(format!(
            "no complete gate below {hi} T_Rabi for u_max = {u_max}"
        )));
    };

    let sign = if problem.cost(opt.omega_eff, t_star, Sign::Plus, opt.parity) < opt.cost + 1e-15 {
        Sign::Plus
    } else {
        opt.sign
    };
    let bb = OneParamBB::new(u_max, opt.omega_eff, t_star, sign, opt.parity)?;
    let switch_count = bb.to_bang_sequence().switch_count();
    let protocol = Protocol::OneParamBb(bb);

    let t_audit = config.report_fraction * t_star;
    let (w_audit, _) = golden_section(
        |w| problem.cost(w, t_audit, sign, opt.parity),
        opt.omega_eff - PI / t_star,
        opt.omega_eff + PI / t_star,
        config.omega_tol,
    );
    let audit_protocol =
        Protocol::OneParamBb(OneParamBB::new(u_max, w_audit, t_audit, sign, opt.parity)?);
    let report = optimality_report(
        &audit_protocol,
        &problem.params,
        &CostKind::gate(problem.gate),
        &config.audit,
    )?;

    Ok(GateSearchResult {
        gate: problem.gate,
        u_max,
        t_star,
        t_rabi,
        ratio: t_star / t_rabi,
        omega_eff: opt.omega_eff,
        sign,
        parity: opt.parity,
        switch_count,
        cost: opt.cost,
        protocol,
        optimality: Some(report.summary()),
        report: Some(report),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticModel {
    pub u_max: f64,
    /// Number of periods t₀ = 2π/ω₀ at the first local minimum of C + 1.
    pub periods: usize,
    pub residual: f64,
    /// Ratio N t₀ / T_Rabi.
    pub ratio: f64,
    /// Nominal acceptance level 1e-3·u_max and whether the minimum reaches it.
    pub epsilon: f64,
    pub meets_epsilon: bool,
}

/// One-period bang-bang operator: U(t₀/4,+u)U(t₀/2,−u)U(t₀/4,+u) for X,
/// U(t₀/2,+u)U(t₀/2,−u) for Y.
pub fn period_operator(params: &ModelParams, gate: GateKind) -> Unitary2 {
    let t0 = 2.0 * PI / params.omega0;
    let (hz, u) = (params.hz(), params.u_max);
    match gate {
        GateKind::Y => segment_unitary(t0 / 2.0, u, hz) * segment_unitary(t0 / 2.0, -u, hz),
        _ => {
            segment_unitary(t0 / 4.0, u, hz)
                * segment_unitary(t0 / 2.0, -u, hz)
                * segment_unitary(t0 / 4.0, u, hz)
        }
    }
}

/// Count periods of the bang-bang operator needed to complete the gate.
pub fn asymptotic_ratio_model(
    params: &ModelParams,
    gate: GateKind,
    max_periods: usize,
) -> Result<AsymptoticModel> {
    if max_periods < 2 {
        return validation("need at least two periods to locate a minimum");
    }
    let step = period_operator(params, gate);
    let mut acc = Unitary2::identity();
    let mut values = Vec::with_capacity(max_periods);
    for _ in 0..max_periods {
        acc = step * acc;
        values.push(gate_cost(&acc, gate) + 1.0);
    }
    let idx = (0..values.len())
        .find(|&k| {
            (k == 0 || values[k - 1] > values[k])
                && (k + 1 < values.len() && values[k + 1] >= values[k])
        })
        .ok_or_else(|| {
            Error::NotFound(format!(
                "C + 1 has no local minimum within {max_periods} periods"
            ))
        })?;
    let periods = idx + 1;
    let t0 = 2.0 * PI / params.omega0;
    let epsilon = 1e-3 * params.u_max;
    Ok(AsymptoticModel {
        u_max: params.u_max,
        periods,
        residual: values[idx],
        ratio: periods as f64 * t0 / params.rabi_time(),
        epsilon,
        meets_epsilon: values[idx] <= epsilon,
    })
}

/// Full-dynamics C_X + 1 of the resonant Rabi pulse at each amplitude.
pub fn rabi_fidelity_curve(u_values: &[f64], omega0: f64) -> Result<Vec<(f64, f64)>> {
    u_values
        .par_iter()
        .map(|&u| {
            if !(u > 0.0 && u <= 0.5) {
                return validation(format!(
                    "Rabi curve amplitudes must lie in (0, 0.5], got {u}"
                ));
            }
            let params = ModelParams::with_omega0(omega0, u)?;
            let total = propagate(&rabi_protocol(&params)?, &params, &QubitState::zero(), 2)?.total;
            Ok((u, gate_cost(&total, GateKind::X) + 1.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64 as C64;

    use super::*;

    fn problem(u: f64) -> GateProblem {
        GateProblem::new(GateKind::X, ModelParams::new(u).unwrap())
    }

    #[test]
    fn sign_flip_is_degenerate() {
        for gate in [GateKind::X, GateKind::Y, GateKind::Pt] {
            let p = GateProblem::new(gate, ModelParams::new(0.3).unwrap());
            for (w, t) in [(1.9, 7.0), (2.05, 9.3), (2.2, 3.1)] {
                for parity in [Parity::Even, Parity::Odd] {
                    let a = p.cost(w, t, Sign::Plus, parity);
                    let b = p.cost(w, t, Sign::Minus, parity);
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn x_optima_are_transpose_symmetric() {
        // any even protocol gives U = Uᵀ
        let p = problem(0.4);
        let bb = OneParamBB::new(0.4, 2.01, 6.3, Sign::Minus, Parity::Even).unwrap();
        let u = segments_unitary(&bb.to_bang_sequence().segments(), p.params.hz());
        assert!(u.max_abs_diff(&u.transpose()) < 1e-12);
    }

    #[test]
    fn period_operator_small_amplitude() {
        let u = 1e-3;
        let params = ModelParams::new(u).unwrap();
        let op = period_operator(&params, GateKind::X);
        let (m1, off) = (C64::new(-1.0, 0.0), C64::new(0.0, 2.0 * u));
        let approx = Unitary2::from_rows([m1, off], [off, m1]);
        assert!(
            op.max_abs_diff(&approx) < 10.0 * u * u,
            "{}",
            op.max_abs_diff(&approx)
        );
    }

    #[test]
    fn asymptotic_period_count() {
        let m = asymptotic_ratio_model(&ModelParams::new(0.01).unwrap(), GateKind::X, 200).unwrap();
        assert!(m.periods == 78 || m.periods == 79, "{}", m.periods);
        assert!((m.ratio - PI / 4.0).abs() < 0.01 * PI / 4.0);
        let y = asymptotic_ratio_model(&ModelParams::new(0.01).unwrap(), GateKind::Y, 200).unwrap();
        assert!((y.ratio - PI / 4.0).abs() < 0.01 * PI / 4.0);
    }

    #[test]
    fn rabi_curve_rejects_out_of_range() {
        assert!(rabi_fidelity_curve(&[0.6], 2.0).is_err());
        let c = rabi_fidelity_curve(&[0.3], 2.0).unwrap();
        assert!(c[0].1 > 0.0);
    }

    #[test]
    fn omega_optimum_is_stable_under_denser_scan() {
        let p = problem(0.5);
        let t = 0.8 * p.params.rabi_time();
        let a = optimize_omega_eff(t, &p, &XgateConfig::default()).unwrap();
        let dense = XgateConfig {
            omega_points: 800,
            ..Default::default()
        };
        let b = optimize_omega_eff(t, &p, &dense).unwrap();
        assert!((a.omega_eff - b.omega_eff).abs() < 1e-8);
        assert!((a.cost - b.cost).abs() < 1e-12);
    }
}
