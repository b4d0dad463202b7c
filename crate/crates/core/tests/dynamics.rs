use num_complex::Complex64 as C64;
use proptest::prelude::*;
use tocq::dynamics::{
    gate_cost, propagate, segment_unitary, segments_unitary, BangLevel, BangSequence, GateKind,
    ModelParams, Protocol, QubitState, SampledPulse, Segment, Sign, TanhPulse, Unitary2,
};

type Col = [C64; 2];

fn rhs(psi: Col, u: f64, hz: f64) -> Col {
    let i = C64::new(0.0, 1.0);
    [
        -i * (psi[0] * hz + psi[1] * u),
        -i * (psi[0] * u - psi[1] * hz),
    ]
}

/// Classical RK4 for i dψ/dt = (hz σz + u(t) σx) ψ, used as an independent oracle.
fn rk4(mut psi: Col, t0: f64, t1: f64, steps: usize, hz: f64, u: &dyn Fn(f64) -> f64) -> Col {
    let h = (t1 - t0) / steps as f64;
    let add = |a: Col, b: Col, s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = rhs(psi, u(t), hz);
        let k2 = rhs(add(psi, k1, h / 2.0), u(t + h / 2.0), hz);
        let k3 = rhs(add(psi, k2, h / 2.0), u(t + h / 2.0), hz);
        let k4 = rhs(add(psi, k3, h), u(t + h), hz);
        psi = [
            psi[0] + (k1[0] + k2[0] * 2.0 + k3[0] * 2.0 + k4[0]) * (h / 6.0),
            psi[1] + (k1[1] + k2[1] * 2.0 + k3[1] * 2.0 + k4[1]) * (h / 6.0),
        ];
    }
    psi
}

fn columns(u: &Unitary2) -> [Col; 2] {
    [
        [u.entry(0, 0), u.entry(1, 0)],
        [u.entry(0, 1), u.entry(1, 1)],
    ]
}

fn col_diff(a: Col, b: Col) -> f64 {
    (a[0] - b[0]).norm().max((a[1] - b[1]).norm())
}

/// Integrate both basis columns piece by piece so RK4 never straddles a jump.
fn rk4_segments(segs: &[Segment], hz: f64) -> [Col; 2] {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut cols = [[one, zero], [zero, one]];
    for s in segs {
        for c in cols.iter_mut() {
            *c = rk4(*c, 0.0, s.dt, 400, hz, &|_| s.u);
        }
    }
    cols
}

#[test]
fn free_evolution_is_a_pure_phase() {
    let u = segment_unitary(0.7, 0.0, 1.0);
    assert!((u.entry(0, 0) - C64::from_polar(1.0, -0.7)).norm() < 1e-15);
    assert!((u.entry(1, 1) - C64::from_polar(1.0, 0.7)).norm() < 1e-15);
    assert_eq!(u.entry(0, 1), C64::new(0.0, 0.0));
}

#[test]
fn undriven_qubit_never_flips() {
    let p = ModelParams::new(0.3).unwrap();
    let off = BangSequence::constant(0.3, 5.0, BangLevel::Off).unwrap();
    let prop = propagate(&Protocol::BangSequence(off), &p, &QubitState::zero(), 11).unwrap();
    assert!((prop.total.entry(0, 0).norm() - 1.0).abs() < 1e-14);
    assert!(gate_cost(&prop.total, GateKind::X).abs() < 1e-28);
}

#[test]
fn tanh_pulse_matches_direct_integration() {
    let p = ModelParams::new(0.2).unwrap();
    let t = 0.85 * p.rabi_time();
    let pulse = TanhPulse::new(0.2, 4.0, t, vec![1.3, 3.9, 6.2]).unwrap();
    let proto = Protocol::Tanh(pulse.clone());
    let total = propagate(&proto, &p, &QubitState::zero(), 3).unwrap().total;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let f = |s: f64| pulse.value_at(s);
    let c0 = rk4([one, zero], 0.0, t, 40_000, p.hz(), &f);
    let c1 = rk4([zero, one], 0.0, t, 40_000, p.hz(), &f);
    let got = columns(&total);
    assert!(col_diff(got[0], c0) < 1e-7, "{}", col_diff(got[0], c0));
    assert!(col_diff(got[1], c1) < 1e-7);
}

#[test]
fn sampled_and_bang_forms_agree() {
    let seq = BangSequence::new(
        0.5,
        4.0,
        vec![1.0, 2.5],
        vec![
            BangLevel::bang(Sign::Plus),
            BangLevel::bang(Sign::Minus),
            BangLevel::bang(Sign::Plus),
        ],
    )
    .unwrap();
    let values: Vec<f64> = (0..8)
        .map(|i| seq.value_at((i as f64 + 0.5) * 0.5))
        .collect();
    let p = ModelParams::new(0.5).unwrap();
    let a = propagate(&Protocol::BangSequence(seq), &p, &QubitState::zero(), 2)
        .unwrap()
        .total;
    let b = propagate(
        &Protocol::Sampled(SampledPulse::new(0.5, 4.0, values).unwrap()),
        &p,
        &QubitState::zero(),
        2,
    )
    .unwrap()
    .total;
    assert!(a.max_abs_diff(&b) < 1e-13);
}

proptest! {
    #[test]
    fn closed_form_matches_integration(
        segs in prop::collection::vec((0.05f64..2.0, -1.0f64..1.0), 1..6),
        hz in 0.2f64..1.5,
    ) {
        let segs: Vec<Segment> = segs.into_iter().map(|(dt, u)| Segment { dt, u }).collect();
        let total = segments_unitary(&segs, hz);
        let oracle = rk4_segments(&segs, hz);
        let got = columns(&total);
        prop_assert!(col_diff(got[0], oracle[0]) < 1e-9);
        prop_assert!(col_diff(got[1], oracle[1]) < 1e-9);
    }

    #[test]
    fn propagation_preserves_norm_and_unitarity(
        values in prop::collection::vec(-0.4f64..0.4, 1..40),
        t in 0.5f64..30.0,
    ) {
        let p = ModelParams::new(0.4).unwrap();
        let proto = Protocol::Sampled(SampledPulse::new(0.4, t, values).unwrap());
        let init = QubitState::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let prop = propagate(&proto, &p, &init, 97).unwrap();
        prop_assert!(prop.trajectory.norm_drift() < 1e-12);
        prop_assert!(prop.total.unitarity_defect() < 1e-12);
        prop_assert!((prop.total.det().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gate_cost_is_bounded(values in prop::collection::vec(-1.0f64..1.0, 1..20), t in 0.1f64..10.0) {
        let p = ModelParams::new(1.0).unwrap();
        let proto = Protocol::Sampled(SampledPulse::new(1.0, t, values).unwrap());
        let total = propagate(&proto, &p, &QubitState::zero(), 2).unwrap().total;
        let c = gate_cost(&total, GateKind::X);
        prop_assert!((-1.0 - 1e-12..=1e-12).contains(&c));
    }
}
