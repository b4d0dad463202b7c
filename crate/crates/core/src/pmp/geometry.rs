use crate::dynamics::{BlochPoint, ModelParams};
use crate::error::{domain, Result};

const EDGE: f64 = 1e-12;

/// α = 2 cot θ / sin φ. Its sign labels the four quadrants cut out by the
/// equator and the φ ∈ {0, π} meridian; α = 0 is the singular arc.
pub fn alpha(b: &BlochPoint) -> Result<f64> {
    if b.theta.sin() < EDGE {
        return domain(format!(
            "on-boundary: alpha is undefined at the pole theta = {}",
            b.theta
        ));
    }
    let s = b.phi.sin();
    if s.abs() < EDGE {
        return domain(format!(
            "on-boundary: alpha diverges on the meridian phi = {}",
            b.phi
        ));
    }
    Ok(2.0 / b.theta.tan() / s)
}

/// (θ̇, φ̇) = (−2u sin φ, ω₀ − 2u cos φ cot θ).
pub fn bloch_velocity(b: &BlochPoint, u: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if b.theta.sin() < EDGE {
        return domain(format!(
            "azimuth is undefined at the pole theta = {}",
            b.theta
        ));
    }
    let (s, c) = b.phi.sin_cos();
    Ok((-2.0 * u * s, params.omega0 - 2.0 * u * c / b.theta.tan()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dynamics::{bloch_from_state, constant_propagator};

    #[test]
    fn equator_is_the_singular_arc() {
        for phi in [0.3, 1.2, -2.0, 2.9] {
            assert!(
                alpha(&BlochPoint::new(PI / 2.0, phi).unwrap())
                    .unwrap()
                    .abs()
                    < 1e-15
            );
        }
    }

    #[test]
    fn quadrant_signs() {
        assert!(alpha(&BlochPoint::new(0.3 * PI, 0.5 * PI).unwrap()).unwrap() > 0.0);
        assert!(alpha(&BlochPoint::new(0.7 * PI, 0.5 * PI).unwrap()).unwrap() < 0.0);
        assert!(alpha(&BlochPoint::new(0.3 * PI, -0.5 * PI).unwrap()).unwrap() < 0.0);
        assert!(alpha(&BlochPoint::new(0.7 * PI, -0.5 * PI).unwrap()).unwrap() > 0.0);
    }

    #[test]
    fn dividing_arcs_are_rejected() {
        assert!(alpha(&BlochPoint::new(1.0, 0.0).unwrap()).is_err());
        assert!(alpha(&BlochPoint::new(1.0, PI).unwrap()).is_err());
        assert!(alpha(&BlochPoint::new(0.0, 1.0).unwrap()).is_err());
        let params = ModelParams::new(0.5).unwrap();
        assert!(bloch_velocity(&BlochPoint::new(PI, 1.0).unwrap(), 0.5, &params).is_err());
    }

    #[test]
    fn free_precession_and_phi_zero() {
        let params = ModelParams::new(0.5).unwrap();
        let (th, ph) =
            bloch_velocity(&BlochPoint::new(PI / 2.0, 0.7).unwrap(), 0.0, &params).unwrap();
        assert_eq!((th, ph), (0.0, 2.0));
        let (th, _) = bloch_velocity(&BlochPoint::new(1.0, 0.0).unwrap(), 0.5, &params).unwrap();
        assert_eq!(th, 0.0);
    }

    fn flow(b: &BlochPoint, u: f64, t: f64, params: &ModelParams) -> BlochPoint {
        bloch_from_state(&constant_propagator(t, u, params).unwrap().apply(&b.state())).unwrap()
    }

    #[test]
    fn velocity_matches_propagated_state() {
        let params = ModelParams::new(0.4).unwrap();
        let h = 1e-5;
        for (theta, phi, u) in [(1.0, 0.4, 0.4), (2.2, -1.3, -0.4), (0.6, 2.5, 0.25)] {
            let b = BlochPoint::new(theta, phi).unwrap();
            let fwd = flow(&b, u, h, &params);
            let rev = bloch_from_state(
                &constant_propagator(h, u, &params)
                    .unwrap()
                    .dagger()
                    .apply(&b.state()),
            )
            .unwrap();
            let dth = (fwd.theta - rev.theta) / (2.0 * h);
            let dph = crate::dynamics::wrap_phi(fwd.phi - rev.phi) / (2.0 * h);
            let (eth, eph) = bloch_velocity(&b, u, &params).unwrap();
            assert!((dth - eth).abs() < 1e-6, "{dth} vs {eth}");
            assert!((dph - eph).abs() < 1e-6, "{dph} vs {eph}");
        }
    }

    #[test]
    fn alpha_lie_derivative_on_the_equator() {
        let params = ModelParams::new(0.3).unwrap();
        let u = -0.3;
        let h = 1e-5;
        let b = BlochPoint::new(PI / 2.0, 1.1).unwrap();
        let fwd = flow(&b, u, h, &params);
        let rev = bloch_from_state(
            &constant_propagator(h, u, &params)
                .unwrap()
                .dagger()
                .apply(&b.state()),
        )
        .unwrap();
        let rate = (alpha(&fwd).unwrap() - alpha(&rev).unwrap()) / (2.0 * h);
        assert!((rate + 4.0 * 0.3).abs() < 1e-6, "{rate}");
    }
}
