use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{verified_excess, Scheme, SchemeOutput, SmoothingRun};
use crate::dynamics::{GateKind, ModelParams, Protocol, RabiPulse, SampledPulse};
use crate::error::{validation, Error, Result};
use crate::optim::{projected_gradient, scalar_minimize, GradientConfig};
use crate::pmp::{cost_and_gradient, segments_cost, CostKind};
use crate::xgate::{one_param_protocol, optimize_omega_eff, GateProblem, XgateConfig};

/// Penalty minimized on the perfect-gate set.
/// Serialized as its text form: `smooth`, `power` or `mixed:<w>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Objective {
    /// ½∫u̇² dt
    Smooth,
    /// ½∫u² dt
    Power,
    /// ½∫u̇² dt + w·½∫u² dt
    Mixed { weight: f64 },
}

impl Objective {
    fn weights(self) -> (f64, f64) {
        match self {
            Objective::Smooth => (1.0, 0.0),
            Objective::Power => (0.0, 1.0),
            Objective::Mixed { weight } => (1.0, weight),
        }
    }

    pub fn value(self, values: &[f64], dt: f64) -> f64 {
        let (a, b) = self.weights();
        let mut v = 0.0;
        if a != 0.0 {
            v += a * smooth_value(values, dt);
        }
        if b != 0.0 {
            v += b * 0.5 * values.iter().map(|u| u * u).sum::<f64>() * dt;
        }
        v
    }

    pub fn gradient(self, values: &[f64], dt: f64) -> Vec<f64> {
        let (a, b) = self.weights();
        let mut g = if a != 0.0 {
            smooth_grad(values, dt)
        } else {
            vec![0.0; values.len()]
        };
        if b != 0.0 {
            for (gi, u) in g.iter_mut().zip(values) {
                *gi += b * u * dt;
            }
        }
        g
    }

    /// Solve (I + du·A) x = u, A the (constant) Hessian of the penalty.
    fn implicit_step(self, values: &[f64], dt: f64, du: f64) -> Vec<f64> {
        let (a, b) = self.weights();
        let n = values.len();
        let off = -du * a / dt;
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let links = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
                1.0 + du * (a * links / dt + b * dt)
            })
            .collect();
        thomas(off, &diag, values)
    }
}

/// Symmetric tridiagonal solve with constant off-diagonal.
fn thomas(off: f64, diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut m = diag[0];
    c[0] = off / m;
    x[0] = rhs[0] / m;
    for i in 1..n {
        m = diag[i] - off * c[i - 1];
        c[i] = off / m;
        x[i] = (rhs[i] - off * x[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Smooth => write!(f, "smooth"),
            Objective::Power => write!(f, "power"),
            Objective::Mixed { weight } => write!(f, "mixed:{weight}"),
        }
    }
}

impl TryFrom<String> for Objective {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Objective> for String {
    fn from(o: Objective) -> String {
        o.to_string()
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(Objective::Smooth),
            "power" => Ok(Objective::Power),
            _ => {
                let w = s
                    .strip_prefix("mixed:")
                    .and_then(|w| w.parse::<f64>().ok())
                    .filter(|w| w.is_finite() && *w >= 0.0)
                    .ok_or_else(|| Error::Validation(format!("unknown objective `{s}`")))?;
                Ok(Objective::Mixed { weight: w })
            }
        }
    }
}

fn smooth_value(u: &[f64], dt: f64) -> f64 {
    0.5 * u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / dt
}

/// −ü·dt by second differences, with mirrored ghost points (u̇ = 0 at both ends).
fn smooth_grad(u: &[f64], dt: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { u[0] } else { u[i - 1] };
            let right = if i + 1 == n { u[n - 1] } else { u[i + 1] };
            (2.0 * u[i] - left - right) / dt
        })
        .collect()
}

fn check_grid(p: &SampledPulse) -> Result<()> {
    if p.values.len() < 3 {
        return validation(format!(
            "smoothness needs at least 3 samples, got {}",
            p.values.len()
        ));
    }
    Ok(())
}

/// ½∫u̇² dt by first differences.
pub fn smoothness_cost(p: &SampledPulse) -> Result<f64> {
    check_grid(p)?;
    Ok(smooth_value(&p.values, p.step()))
}

/// Exact gradient of [`smoothness_cost`] with respect to every sample.
pub fn smoothness_gradient(p: &SampledPulse) -> Result<Vec<f64>> {
    check_grid(p)?;
    Ok(smooth_grad(&p.values, p.step()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstrainedConfig {
    pub n_t: usize,
    pub gate: GateKind,
    pub objective: Objective,
    /// Largest change of the penalty step, as a fraction of u_max.
    pub step_fraction: f64,
    /// Stop once max|u⁽ⁿ⁺¹⁾ − u⁽ⁿ⁾| ≤ this fraction of u_max.
    pub tolerance_fraction: f64,
    pub max_outer: usize,
    /// Projection onto the perfect-gate set.
    pub projection: GradientConfig,
    /// A projection that ends above this C + 1 aborts the run.
    pub tol_fidelity: f64,
}

impl Default for ConstrainedConfig {
    fn default() -> Self {
        Self {
            n_t: 1000,
            gate: GateKind::X,
            objective: Objective::Smooth,
            step_fraction: 0.2,
            tolerance_fraction: 1.0 / 4000.0,
            max_outer: 5000,
            projection: GradientConfig {
                max_iter: 5000,
                target: Some(-1.0 + 1e-8),
                ..Default::default()
            },
            tol_fidelity: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    /// Penalty of the constraint-satisfying iterate.
    pub objective: f64,
    pub c_plus_one: f64,
}

/// Minimize the penalty over |u| ≤ u_max subject to C_gate = −1 by
/// alternating a projected-gradient solve of the gate condition with a
/// penalty descent step (backward Euler, so stable at any step size).
/// Returns the last constraint-satisfying iterate.
pub fn constrained_smooth_optimize(
    duration: f64,
    params: &ModelParams,
    initial: &Protocol,
    config: &ConstrainedConfig,
) -> Result<SmoothingRun> {
    if config.n_t < 3 {
        return validation(format!("N_t must be at least 3, got {}", config.n_t));
    }
    if (initial.duration() - duration).abs() > 1e-9 * duration {
        return validation("initial protocol duration differs from T");
    }
    let u_max = params.u_max;
    let n = config.n_t;
    let dt = duration / n as f64;
    let hz = params.hz();
    let cost = CostKind::gate(config.gate);
    let bounds = vec![(-u_max, u_max); n];
    let segs = |x: &[f64]| -> Vec<crate::dynamics::Segment> {
        x.iter()
            .map(|&u| crate::dynamics::Segment { dt, u })
            .collect()
    };

    let mut tilde = initial.to_sampled(n)?.values;
    let mut prev: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut current = Vec::new();
    for iter in 1..=config.max_outer {
        let run = projected_gradient(
            |x| segments_cost(&segs(x), hz, &cost),
            |x| cost_and_gradient(&segs(x), hz, &cost).1,
            &tilde,
            Some(&bounds),
            &config.projection,
        )?;
        if run.f + 1.0 > config.tol_fidelity {
            return Err(Error::Optimization(format!(
                "projection onto the perfect-gate set stalled at C + 1 = {:.3e} after {} steps (outer iteration {iter}); T may not exceed T*",
                run.f + 1.0,
                run.iterations
            )));
        }
        current = run.x;
        trace.push(TraceRow {
            iter,
            objective: config.objective.value(&current, dt),
            c_plus_one: run.f + 1.0,
        });
        if let Some(p) = &prev {
            let change = current
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change <= config.tolerance_fraction * u_max {
                converged = true;
                break;
            }
        }
        let g = config.objective.gradient(&current, dt);
        let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            converged = true;
            break;
        }
        // Step size from the explicit gradient, taken implicitly: the explicit
        // step is unstable once du exceeds dt/2 on the second-difference modes.
        let du = config.step_fraction * u_max / peak;
        tilde = config.objective.implicit_step(&current, dt, du);
        prev = Some(current.clone());
    }

    let objective = config.objective.value(&current, dt);
    let iterations = trace.len();
    let protocol = Protocol::Sampled(SampledPulse::new(u_max, duration, current)?);
    Ok(SmoothingRun {
        scheme: Scheme::ConstrainedSmooth,
        duration,
        params: *params,
        gate: config.gate,
        cost_plus_one: verified_excess(&protocol, params, config.gate),
        protocol,
        converged,
        output: SchemeOutput::ConstrainedSmooth {
            objective,
            iterations,
            trace,
        },
    })
}

/// Starting pulse for [`constrained_smooth_optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPulse {
    /// Best one-parameter bang-bang pulse at T.
    BangBang,
    /// u_max·cos(ω₀(t − T/2)) over [0, T].
    Rabi,
}

impl FromStr for InitialPulse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb" | "bang-bang" => Ok(InitialPulse::BangBang),
            "rabi" => Ok(InitialPulse::Rabi),
            _ => validation(format!("unknown initial pulse `{s}` (bb|rabi)")),
        }
    }
}

impl InitialPulse {
    pub fn protocol(self, duration: f64, params: &ModelParams, gate: GateKind) -> Result<Protocol> {
        match self {
            InitialPulse::Rabi => Ok(Protocol::Rabi(RabiPulse {
                u_max: params.u_max,
                omega0: params.omega0,
                duration,
            })),
            InitialPulse::BangBang => {
                let problem = GateProblem::new(gate, *params);
                let o = optimize_omega_eff(duration, &problem, &XgateConfig::default())?;
                one_param_protocol(o.omega_eff, duration, &problem, o.sign)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineFit {
    pub omega: f64,
    pub amplitude: f64,
    /// L² distance to ±u_max·cos(ω(t − T/2)) (sign of the fit), relative to
    /// u_max·√T.
    pub distance: f64,
}

/// Least-squares fit of A·cos(ω(t − T/2)) to a sampled pulse, ω searched in
/// `omega_range`.
pub fn fit_cosine(p: &SampledPulse, omega_range: (f64, f64)) -> Result<CosineFit> {
    let t = p.midpoints();
    let half = 0.5 * p.duration;
    let amp = |w: f64| {
        let (mut uc, mut cc) = (0.0, 0.0);
        for (s, u) in t.iter().zip(&p.values) {
            let c = (w * (s - half)).cos();
            uc += u * c;
            cc += c * c;
        }
        uc / cc
    };
    let residual = |w: f64| {
        let a = amp(w);
        t.iter()
            .zip(&p.values)
            .map(|(s, u)| (u - a * (w * (s - half)).cos()).powi(2))
            .sum::<f64>()
    };
    let best = scalar_minimize(residual, omega_range, 400, 1e-12)?;
    let dt = p.step();
    let sign = amp(best.x).signum();
    let d2: f64 = t
        .iter()
        .zip(&p.values)
        .map(|(s, u)| (u - sign * p.u_max * (best.x * (s - half)).cos()).powi(2))
        .sum::<f64>()
        * dt;
    Ok(CosineFit {
        omega: best.x,
        amplitude: amp(best.x),
        distance: d2.sqrt() / (p.u_max * p.duration.sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sampled(u_max: f64, t: f64, f: impl Fn(f64) -> f64, n: usize) -> SampledPulse {
        let dt = t / n as f64;
        SampledPulse::new(u_max, t, (0..n).map(|i| f((i as f64 + 0.5) * dt)).collect()).unwrap()
    }

    #[test]
    fn constant_pulse_is_perfectly_smooth() {
        let p = sampled(0.3, 4.0, |_| 0.17, 50);
        assert_eq!(smoothness_cost(&p).unwrap(), 0.0);
        assert!(smoothness_gradient(&p).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn cosine_matches_the_continuum_integral() {
        let (u, w, t) = (0.2, 1.995, 5.0 * std::f64::consts::PI);
        let p = sampled(u, t, |s| u * (w * s).cos(), 1000);
        let exact = 0.25 * u * u * w * w * t;
        assert!((smoothness_cost(&p).unwrap() / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn short_grids_are_rejected() {
        let p = sampled(0.3, 4.0, |_| 0.1, 2);
        assert!(smoothness_cost(&p).is_err());
    }

    #[test]
    fn objectives_parse() {
        assert_eq!("smooth".parse::<Objective>().unwrap(), Objective::Smooth);
        assert_eq!(
            "mixed:0.5".parse::<Objective>().unwrap(),
            Objective::Mixed { weight: 0.5 }
        );
        assert!("mixed:x".parse::<Objective>().is_err());
        assert_eq!(Objective::Mixed { weight: 0.25 }.to_string(), "mixed:0.25");
    }

    #[test]
    fn cosine_fit_recovers_frequency() {
        let t = 5.0 * std::f64::consts::PI;
        let p = sampled(0.2, t, |s| 0.2 * (1.97 * (s - t / 2.0)).cos(), 1000);
        let fit = fit_cosine(&p, (1.5, 2.5)).unwrap();
        assert!((fit.omega - 1.97).abs() < 1e-8);
        assert!(fit.distance < 1e-8);
    }

    proptest! {
        #[test]
        fn implicit_step_solves_the_backward_euler_system(
            values in prop::collection::vec(-0.3f64..0.3, 3..60),
            du in 1e-4f64..10.0,
            w in 0.0f64..3.0,
        ) {
            let dt = 0.05;
            for obj in [Objective::Smooth, Objective::Power, Objective::Mixed { weight: w }] {
                let x = obj.implicit_step(&values, dt, du);
                let g = obj.gradient(&x, dt);
                for i in 0..values.len() {
                    prop_assert!((x[i] + du * g[i] - values[i]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn penalty_gradients_match_finite_differences(
            values in prop::collection::vec(-0.3f64..0.3, 3..40),
            t in 0.5f64..20.0,
            w in 0.0f64..3.0,
        ) {
            let dt = t / values.len() as f64;
            for obj in [Objective::Smooth, Objective::Power, Objective::Mixed { weight: w }] {
                let g = obj.gradient(&values, dt);
                let scale = g.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
                let mut x = values.clone();
                for i in 0..values.len() {
                    let h = 1e-5;
                    x[i] = values[i] + h;
                    let up = obj.value(&x, dt);
                    x[i] = values[i] - h;
                    let down = obj.value(&x, dt);
                    x[i] = values[i];
                    let fd = (up - down) / (2.0 * h);
                    prop_assert!((fd - g[i]).abs() <= 1e-6 * scale.max(fd.abs()), "{obj}: {} vs {fd}", g[i]);
                }
            }
        }
    }
}
