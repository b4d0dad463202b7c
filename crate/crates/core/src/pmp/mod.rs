//! Pontryagin machinery: adjoint fields, switching function Φ(t), the
//! control-Hamiltonian H_oc(t), and the bang-bang and Bloch-sphere geometry
//! built on them.

mod analytic;
mod geometry;
mod report;

pub use analytic::{analytical_switching, fit_switching, omega_eff, SwitchingFit};
pub use geometry::{alpha, bloch_velocity};
pub use report::{optimality_report, AuditConfig, OptimalityReport, ReportSummary, SegmentStat};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_segments, segment_unitary, segments_unitary, GateKind, ModelParams, Protocol,
    QubitState, Segment, Trajectory,
};
use crate::error::{validation, Result};

/// The terminal cost whose gradient seeds the adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    StatePrep {
        init: QubitState,
        target: QubitState,
    },
    Gate {
        gate: GateKind,
    },
}

impl CostKind {
    pub fn gate(gate: GateKind) -> Self {
        CostKind::Gate { gate }
    }

    /// Forward initial states, one per trajectory pair.
    pub fn initial_states(&self) -> Vec<QubitState> {
        match self {
            CostKind::StatePrep { init, .. } => vec![*init],
            CostKind::Gate { .. } => vec![QubitState::zero(), QubitState::one()],
        }
    }

    /// Terminal cost from the final forward states.
    pub fn cost(&self, finals: &[QubitState]) -> f64 {
        match self {
            CostKind::StatePrep { target, .. } => -target.inner(&finals[0]).norm_sqr(),
            CostKind::Gate { gate } => {
                let (a, b) = (finals[0].c1, finals[1].c0);
                match gate {
                    GateKind::X => -0.25 * (a + b).norm_sqr(),
                    GateKind::Y => -0.25 * (a - b).norm_sqr(),
                    GateKind::Pt => -0.5 * (a.norm_sqr() + b.norm_sqr()),
                }
            }
        }
    }

    /// |λ(T)⟩ = 2 δC/δ⟨ψ(T)| for each trajectory, so that δC = Re Σ ⟨λ|δψ⟩.
    pub fn terminal_adjoints(&self, finals: &[QubitState]) -> Vec<QubitState> {
        let zero = C64::new(0.0, 0.0);
        match self {
            CostKind::StatePrep { target, .. } => {
                vec![target.scale(-2.0 * target.inner(&finals[0]))]
            }
            CostKind::Gate { gate } => {
                let (a, b) = (finals[0].c1, finals[1].c0);
                let (l0, l1) = match gate {
                    GateKind::X => (-0.5 * (a + b), -0.5 * (a + b)),
                    GateKind::Y => (-0.5 * (a - b), 0.5 * (a - b)),
                    GateKind::Pt => (-a, -b),
                };
                vec![QubitState::new(zero, l0), QubitState::new(l1, zero)]
            }
        }
    }
}

fn uniform_grid(duration: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|i| duration * i as f64 / last).collect()
}

/// Forward trajectories on a uniform grid of `n_samples` points.
pub fn forward_trajectories(
    protocol: &Protocol,
    params: &ModelParams,
    cost: &CostKind,
    n_samples: usize,
) -> Result<Vec<Trajectory>> {
    if n_samples < 2 {
        return validation(format!("need at least two samples, got {n_samples}"));
    }
    let segments = protocol.segments();
    let times = uniform_grid(protocol.duration(), n_samples);
    Ok(cost
        .initial_states()
        .iter()
        .map(|s| propagate_segments(&segments, params.hz(), s, &times))
        .collect())
}

fn check_grid(protocol: &Protocol, cost: &CostKind, forward: &[Trajectory]) -> Result<usize> {
    if forward.len() != cost.initial_states().len() {
        return validation(format!(
            "cost needs {} forward trajectories, got {}",
            cost.initial_states().len(),
            forward.len()
        ));
    }
    let n = forward[0].len();
    if n < 2 {
        return validation("forward trajectory has fewer than two samples");
    }
    let expected = uniform_grid(protocol.duration(), n);
    let tol = 1e-12 * protocol.duration().max(1.0);
    for tr in forward {
        if tr.len() != n
            || tr.states.len() != n
            || tr
                .times
                .iter()
                .zip(&expected)
                .any(|(a, b)| (a - b).abs() > tol)
        {
            return validation("forward trajectories are not on the protocol's uniform grid");
        }
    }
    Ok(n)
}

/// Adjoint fields on the grid of `forward`.
///
/// λ obeys the same Schrödinger equation as ψ, so λ(t) = U(t,0) U(T,0)† λ(T).
pub fn adjoint_trajectory(
    protocol: &Protocol,
    params: &ModelParams,
    cost: &CostKind,
    forward: &[Trajectory],
) -> Result<Vec<Trajectory>> {
    check_grid(protocol, cost, forward)?;
    let segments = protocol.segments();
    let total = segments_unitary(&segments, params.hz());
    let finals: Vec<QubitState> = forward
        .iter()
        .map(|t| *t.last().expect("checked non-empty"))
        .collect();
    let back = total.dagger();
    Ok(cost
        .terminal_adjoints(&finals)
        .iter()
        .map(|l| propagate_segments(&segments, params.hz(), &back.apply(l), &forward[0].times))
        .collect())
}

fn check_pairs(forward: &[Trajectory], adjoint: &[Trajectory]) -> Result<()> {
    if forward.len() != adjoint.len() || forward.is_empty() {
        return validation("forward and adjoint trajectory counts differ");
    }
    for (f, a) in forward.iter().zip(adjoint) {
        if f.times != a.times {
            return validation("forward and adjoint grids differ");
        }
    }
    Ok(())
}

/// Re[−i⟨λ|M|ψ⟩] = Im⟨λ|M|ψ⟩ summed over pairs, at every sample.
fn bilinear(
    forward: &[Trajectory],
    adjoint: &[Trajectory],
    m: impl Fn(usize, &QubitState) -> QubitState,
) -> Vec<f64> {
    (0..forward[0].len())
        .map(|k| {
            forward
                .iter()
                .zip(adjoint)
                .map(|(f, a)| a.states[k].inner(&m(k, &f.states[k])).im)
                .sum()
        })
        .collect()
}

/// Φ(t) = Re[−i⟨λ(t)|σx|ψ(t)⟩], so that δC = ∫ Φ δu dt.
pub fn switching_function(forward: &[Trajectory], adjoint: &[Trajectory]) -> Result<Vec<f64>> {
    check_pairs(forward, adjoint)?;
    Ok(bilinear(forward, adjoint, |_, s| {
        QubitState::new(s.c1, s.c0)
    }))
}

/// H_oc(t) = Re[−i⟨λ(t)|H(t)|ψ(t)⟩] with u(t) read from `protocol`.
pub fn control_hamiltonian(
    forward: &[Trajectory],
    adjoint: &[Trajectory],
    protocol: &Protocol,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    check_pairs(forward, adjoint)?;
    let hz = params.hz();
    let times = &forward[0].times;
    Ok(bilinear(forward, adjoint, |k, s| {
        let u = protocol.value_at(times[k]);
        QubitState::new(s.c0 * hz + s.c1 * u, s.c0 * u - s.c1 * hz)
    }))
}

/// ∫₀^dt U(s)† σx U(s) ds for U(s) = exp(−is(hz σz + u σx)), as (bx, by, bz).
fn sigma_x_integral(dt: f64, u: f64, hz: f64) -> (f64, f64, f64) {
    let w = (hz * hz + u * u).sqrt();
    let (nx, nz) = (u / w, hz / w);
    let ic = (2.0 * w * dt).sin() / (2.0 * w);
    let is = (1.0 - (2.0 * w * dt).cos()) / (2.0 * w);
    (ic + nx * nx * (dt - ic), -nz * is, nx * nz * (dt - ic))
}

/// Terminal cost and its exact gradient with respect to every segment
/// amplitude: ∂C/∂u_j = ∫_{segment j} Φ dt.
pub fn cost_and_gradient(segments: &[Segment], hz: f64, cost: &CostKind) -> (f64, Vec<f64>) {
    let inits = cost.initial_states();
    let unitaries: Vec<_> = segments
        .iter()
        .map(|s| segment_unitary(s.dt, s.u, hz))
        .collect();
    let mut starts: Vec<Vec<QubitState>> = Vec::with_capacity(inits.len());
    let mut finals = Vec::with_capacity(inits.len());
    for init in &inits {
        let mut psi = *init;
        let mut path = Vec::with_capacity(segments.len());
        for u in &unitaries {
            path.push(psi);
            psi = u.apply(&psi);
        }
        starts.push(path);
        finals.push(psi);
    }
    let value = cost.cost(&finals);
    let mut lambdas = cost.terminal_adjoints(&finals);
    let mut grad = vec![0.0; segments.len()];
    for j in (0..segments.len()).rev() {
        let dag = unitaries[j].dagger();
        for l in lambdas.iter_mut() {
            *l = dag.apply(l);
        }
        let (bx, by, bz) = sigma_x_integral(segments[j].dt, segments[j].u, hz);
        let b01 = C64::new(bx, -by);
        let b10 = C64::new(bx, by);
        grad[j] = lambdas
            .iter()
            .zip(&starts)
            .map(|(l, path)| {
                let p = path[j];
                let bp = QubitState::new(p.c0 * bz + p.c1 * b01, p.c0 * b10 - p.c1 * bz);
                l.inner(&bp).im
            })
            .sum();
    }
    (value, grad)
}

/// Terminal cost of a segment list.
pub fn segments_cost(segments: &[Segment], hz: f64, cost: &CostKind) -> f64 {
    let total = segments_unitary(segments, hz);
    let finals: Vec<QubitState> = cost
        .initial_states()
        .iter()
        .map(|s| total.apply(s))
        .collect();
    cost.cost(&finals)
}
