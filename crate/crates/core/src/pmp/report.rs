use serde::{Deserialize, Serialize};

use super::analytic::{fit_switching, SwitchingFit};
use super::{
    adjoint_trajectory, control_hamiltonian, forward_trajectories, switching_function, CostKind,
};
use crate::dynamics::{bloch_from_state, BangLevel, BangSequence, ModelParams, Protocol};
use crate::error::{validation, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub n_samples: usize,
    /// u·Φ ≤ tol (after normalizing by u_max·max|Φ|) counts as sign-consistent.
    pub sign_tolerance: f64,
    /// Samples this many grid steps from a switch are left out of the sign test.
    pub switch_exclusion: usize,
    /// |θ − π/2| below this counts as sitting on the singular arc.
    pub singular_tolerance: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            n_samples: 4001,
            sign_tolerance: 1e-6,
            switch_exclusion: 2,
            singular_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStat {
    pub start: f64,
    pub end: f64,
    pub u: f64,
    pub mean: f64,
    pub max_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub cost: f64,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub hoc: Vec<f64>,
    /// H_oc statistics per constant-u piece; a single whole-interval entry for smooth pulses.
    pub segments: Vec<SegmentStat>,
    /// max over pieces of max_dev / (1 + |mean|).
    pub hoc_max_dev: f64,
    pub sign_fraction: f64,
    pub lambda0: f64,
    pub fit: Option<SwitchingFit>,
    pub singular_residence: f64,
    /// Largest |Φ̈ + Ω²Φ − 4uH_oc| inside bangs, from second differences, relative to max|Φ|.
    pub ode_residual: f64,
}

/// The JSON face of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub lambda0: f64,
    #[serde(rename = "A")]
    pub amplitude: Option<f64>,
    pub omega_eff: Option<f64>,
    pub hoc_max_dev: f64,
    pub sign_fraction: f64,
    pub singular_residence: f64,
}

impl OptimalityReport {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            lambda0: self.lambda0,
            amplitude: self.fit.map(|f| f.amplitude),
            omega_eff: self.fit.and_then(|f| f.omega_eff),
            hoc_max_dev: self.hoc_max_dev,
            sign_fraction: self.sign_fraction,
            singular_residence: self.singular_residence,
        }
    }

    pub fn max_abs_phi(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rows (t, Φ, H_oc).
    pub fn trace(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.times.len()).map(|k| [self.times[k], self.phi[k], self.hoc[k]])
    }
}

fn bang_sequence(protocol: &Protocol) -> Option<BangSequence> {
    match protocol {
        Protocol::BangSequence(b) => Some(b.clone()),
        Protocol::OneParamBb(p) => Some(p.to_bang_sequence()),
        _ => None,
    }
}

/// Boundaries of the constant-u pieces, or `None` for smooth pulses.
fn piece_boundaries(protocol: &Protocol) -> Option<Vec<f64>> {
    match protocol {
        Protocol::Sampled(s) => Some((0..=s.values.len()).map(|i| i as f64 * s.step()).collect()),
        other => bang_sequence(other).map(|b| b.boundaries()),
    }
}

fn switch_instants(protocol: &Protocol, times: &[f64]) -> Vec<f64> {
    if let Some(b) = bang_sequence(protocol) {
        let bounds = b.boundaries();
        return (1..bounds.len() - 1)
            .filter(|&k| b.levels()[k - 1] != b.levels()[k])
            .map(|k| bounds[k])
            .collect();
    }
    let u: Vec<f64> = times.iter().map(|&t| protocol.value_at(t)).collect();
    (1..times.len())
        .filter(|&k| u[k - 1].signum() != u[k].signum() || u[k - 1] == 0.0 || u[k] == 0.0)
        .map(|k| 0.5 * (times[k - 1] + times[k]))
        .collect()
}

/// Forward/adjoint audit of `protocol` against the first-order optimality conditions.
pub fn optimality_report(
    protocol: &Protocol,
    params: &ModelParams,
    cost: &CostKind,
    config: &AuditConfig,
) -> Result<OptimalityReport> {
    if config.n_samples < 3 {
        return validation("the audit grid needs at least three samples");
    }
    let fwd = forward_trajectories(protocol, params, cost, config.n_samples)?;
    let adj = adjoint_trajectory(protocol, params, cost, &fwd)?;
    let phi = switching_function(&fwd, &adj)?;
    let hoc = control_hamiltonian(&fwd, &adj, protocol, params)?;
    let times = fwd[0].times.clone();
    let n = times.len();
    let grid = times[1] - times[0];
    let u: Vec<f64> = times.iter().map(|&t| protocol.value_at(t)).collect();
    let finals: Vec<_> = fwd.iter().map(|t| *t.last().expect("non-empty")).collect();
    let cost_value = cost.cost(&finals);

    // pieces with interior samples; boundary samples are ambiguous
    let edge = 1e-9 * grid;
    let pieces: Vec<(f64, f64)> = match piece_boundaries(protocol) {
        Some(b) => b.windows(2).map(|w| (w[0], w[1])).collect(),
        None => vec![(0.0, protocol.duration())],
    };
    let mut segments = Vec::new();
    let mut interior = vec![false; n];
    for &(a, b) in &pieces {
        let idx: Vec<usize> = (0..n)
            .filter(|&k| times[k] > a + edge && times[k] < b - edge)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let mean = idx.iter().map(|&k| hoc[k]).sum::<f64>() / idx.len() as f64;
        let max_dev = idx
            .iter()
            .map(|&k| (hoc[k] - mean).abs())
            .fold(0.0, f64::max);
        for &k in &idx {
            interior[k] = true;
        }
        segments.push(SegmentStat {
            start: a,
            end: b,
            u: protocol.value_at(0.5 * (a + b)),
            mean,
            max_dev,
        });
    }
    let hoc_max_dev = segments
        .iter()
        .map(|s| s.max_dev / (1.0 + s.mean.abs()))
        .fold(0.0, f64::max);
    let used: Vec<usize> = (0..n).filter(|&k| interior[k]).collect();
    let lambda0 = if used.is_empty() {
        -hoc.iter().sum::<f64>() / n as f64
    } else {
        -used.iter().map(|&k| hoc[k]).sum::<f64>() / used.len() as f64
    };

    let peak = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let switches = switch_instants(protocol, &times);
    let window = config.switch_exclusion as f64 * grid;
    let candidates: Vec<usize> = (0..n)
        .filter(|&k| switches.iter().all(|&s| (times[k] - s).abs() > window))
        .collect();
    let sign_fraction = if peak == 0.0 || candidates.is_empty() {
        1.0
    } else {
        let ok = candidates
            .iter()
            .filter(|&&k| u[k] / params.u_max * phi[k] / peak <= config.sign_tolerance)
            .count();
        ok as f64 / candidates.len() as f64
    };

    let mut singular_residence = 0.0;
    for k in 0..n {
        if u[k].abs() <= 1e-12 {
            if let Ok(b) = bloch_from_state(&fwd[0].states[k]) {
                if (b.theta - std::f64::consts::FRAC_PI_2).abs() < config.singular_tolerance {
                    singular_residence += grid;
                }
            }
        }
    }

    let mut ode_residual: f64 = 0.0;
    if protocol.is_piecewise_constant() {
        for k in 1..n - 1 {
            let same = pieces
                .iter()
                .any(|&(a, b)| times[k - 1] > a + edge && times[k + 1] < b - edge);
            if !same {
                continue;
            }
            let big2 = params.omega0 * params.omega0 + 4.0 * u[k] * u[k];
            let dd = (phi[k + 1] - 2.0 * phi[k] + phi[k - 1]) / (grid * grid);
            ode_residual = ode_residual.max((dd + big2 * phi[k] - 4.0 * u[k] * hoc[k]).abs());
        }
        if peak > 0.0 {
            ode_residual /= peak;
        }
    }

    // the cosine model describes bang-bang switching only
    let fit = bang_sequence(protocol)
        .filter(|b| b.levels().iter().all(|l| *l != BangLevel::Off))
        .and_then(|b| fit_switching(&times, &phi, &hoc, &b, params).ok());

    Ok(OptimalityReport {
        cost: cost_value,
        times,
        phi,
        hoc,
        segments,
        hoc_max_dev,
        sign_fraction,
        lambda0,
        fit,
        singular_residence,
        ode_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{rabi_protocol, GateKind};

    #[test]
    fn hoc_is_constant_on_bangs() {
        let params = ModelParams::new(0.4).unwrap();
        let bb = BangSequence::new(
            0.4,
            6.0,
            vec![1.1, 2.9, 4.4],
            vec![
                BangLevel::Plus,
                BangLevel::Minus,
                BangLevel::Off,
                BangLevel::Plus,
            ],
        )
        .unwrap();
        let r = optimality_report(
            &Protocol::BangSequence(bb),
            &params,
            &CostKind::gate(GateKind::X),
            &AuditConfig::default(),
        )
        .unwrap();
        assert_eq!(r.segments.len(), 4);
        assert!(r.hoc_max_dev < 1e-12, "{}", r.hoc_max_dev);
        assert!(r.ode_residual < 1e-4, "{}", r.ode_residual);
    }

    #[test]
    fn rabi_pulse_is_not_sign_consistent() {
        let params = ModelParams::new(0.2).unwrap();
        let rabi = rabi_protocol(&params).unwrap();
        let r = optimality_report(
            &rabi,
            &params,
            &CostKind::gate(GateKind::X),
            &AuditConfig::default(),
        )
        .unwrap();
        assert!(r.sign_fraction < 1.0);
        assert_eq!(r.segments.len(), 1);
        assert!(r.fit.is_none());
        let json = serde_json::to_value(r.summary()).unwrap();
        for key in [
            "lambda0",
            "A",
            "omega_eff",
            "hoc_max_dev",
            "sign_fraction",
            "singular_residence",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
