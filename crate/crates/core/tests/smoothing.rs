use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use tocq::dynamics::{
    gate_cost, propagate, GateKind, ModelParams, Protocol, QubitState, SampledPulse, ThirdHarmonic,
};
use tocq::smoothing::{
    constrained_smooth_optimize, fourier_spectrum, smoothness_cost, tanh_protocol,
    ConstrainedConfig, InitialPulse, SchemeOutput,
};

/// Trapezoid rule on a very fine grid, independent of the library quadrature.
fn trapezoid_line(f: impl Fn(f64) -> f64, t: f64, n: usize, freq: f64) -> C64 {
    let m = 200_000;
    let h = t / m as f64;
    (0..=m)
        .map(|k| {
            let s = k as f64 * h;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            C64::from_polar(w * h * f(s), -2.0 * PI * freq * n as f64 * s)
        })
        .sum()
}

#[test]
fn third_harmonic_spectrum_matches_quadrature() {
    let pulse = ThirdHarmonic::new(0.3, 1.9, -0.1, 9.0).unwrap();
    let lines = fourier_spectrum(&Protocol::ThirdHarmonic(pulse.clone()), 12);
    for (n, line) in lines.iter().enumerate() {
        let oracle = trapezoid_line(|s| pulse.value_at(s) / 0.3, 9.0, n, 1.0 / 9.0);
        assert!(
            (line.amplitude - oracle).norm() < 1e-6,
            "n={n}: {} vs {oracle}",
            line.amplitude
        );
    }
}

#[test]
fn constrained_result_is_a_verified_gate() {
    let p = ModelParams::new(0.3).unwrap();
    let t = p.rabi_time();
    let cfg = ConstrainedConfig {
        n_t: 200,
        ..ConstrainedConfig::default()
    };
    let init = InitialPulse::BangBang.protocol(t, &p, GateKind::X).unwrap();
    let before = smoothness_cost(&init.to_sampled(200).unwrap()).unwrap();
    let run = constrained_smooth_optimize(t, &p, &init, &cfg).unwrap();
    let Protocol::Sampled(s) = &run.protocol else {
        panic!("sampled output")
    };
    assert!(s.values.iter().all(|v| v.abs() <= 0.3 + 1e-12));
    let total = propagate(&run.protocol, &p, &QubitState::zero(), 2)
        .unwrap()
        .total;
    assert!(gate_cost(&total, GateKind::X) + 1.0 <= 1e-6);
    let SchemeOutput::ConstrainedSmooth { objective, .. } = run.output else {
        panic!()
    };
    assert!(objective < 0.1 * before, "{objective} vs {before}");
}

#[test]
fn too_short_a_time_is_reported_as_infeasible() {
    let p = ModelParams::new(0.2).unwrap();
    let t = 0.6 * p.rabi_time();
    let cfg = ConstrainedConfig {
        n_t: 200,
        ..ConstrainedConfig::default()
    };
    let init = InitialPulse::Rabi.protocol(t, &p, GateKind::X).unwrap();
    assert!(constrained_smooth_optimize(t, &p, &init, &cfg).is_err());
}

proptest! {
    #[test]
    fn tanh_pulses_stay_within_bounds(
        times in prop::collection::vec(0.0f64..1.0, 1..6),
        beta in 0.5f64..20.0,
        u in 0.05f64..1.0,
    ) {
        let p = ModelParams::new(u).unwrap();
        let t = 20.0;
        let proto = tanh_protocol(&times.iter().map(|x| x * t).collect::<Vec<_>>(), beta, t, &p).unwrap();
        for k in 0..=400 {
            prop_assert!(proto.value_at(t * k as f64 / 400.0).abs() <= u * (1.0 + 1e-12));
        }
    }

    #[test]
    fn admissible_mixing_ratios_respect_the_bound(r in -0.125f64..=1.0, w in 0.5f64..3.0) {
        let pulse = ThirdHarmonic::new(0.4, w, r, 10.0).unwrap();
        for k in 0..=2000 {
            prop_assert!(pulse.value_at(10.0 * k as f64 / 2000.0).abs() <= 0.4 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn smoothness_cost_is_shift_invariant(values in prop::collection::vec(-1.0f64..1.0, 3..30), c in -0.5f64..0.5) {
        let a = SampledPulse::new(2.0, 5.0, values.clone()).unwrap();
        let b = SampledPulse::new(2.0, 5.0, values.iter().map(|v| v + c).collect()).unwrap();
        let (ca, cb) = (smoothness_cost(&a).unwrap(), smoothness_cost(&b).unwrap());
        prop_assert!((ca - cb).abs() <= 1e-9 * (1.0 + ca));
    }
}
