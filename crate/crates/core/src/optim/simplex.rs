use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{clip, OptimizerConfig, Status};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub status: Status,
    pub iterations: usize,
    pub evaluations: usize,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            return Err(Error::Optimization(format!(
                "objective returned NaN at {x:?}"
            )));
        }
        Ok(v)
    }
}

/// Bound-clipped Nelder-Mead with dimension-adaptive coefficients.
///
/// The initial simplex steps 5% of each bound range along each axis (or 5% of
/// |x0_i|, at least 2.5e-4, without bounds), stepping inward from a bound.
pub fn nelder_mead<F>(f: F, x0: &[f64], config: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    config.validate(n)?;
    if n == 0 {
        return Err(Error::Validation(
            "cannot minimize over zero dimensions".into(),
        ));
    }
    let bounds = config.bounds.as_deref();
    let mut obj = Counted { f, evals: 0 };

    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (
        1.0,
        1.0 + 2.0 / nf,
        0.75 - 0.5 / nf,
        (1.0 - 1.0 / nf).max(0.5),
    );

    let mut start = x0.to_vec();
    clip(&mut start, bounds);
    let mut simplex = vec![start.clone()];
    for i in 0..n {
        let mut v = start.clone();
        let step = match bounds {
            Some(b) => {
                let (lo, hi) = b[i];
                let s = 0.05 * (hi - lo);
                if v[i] + s <= hi {
                    s
                } else {
                    -s
                }
            }
            None => {
                if v[i] != 0.0 {
                    0.05 * v[i]
                } else {
                    2.5e-4
                }
            }
        };
        v[i] += step;
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(n + 1);
    for v in &simplex {
        values.push(obj.eval(v)?);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0;
    let mut status = Status::MaxIter;
    while iterations < config.max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let spread = values[worst] - values[best];
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= config.tolerance && diameter <= config.x_tolerance {
            status = Status::Converged;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[k]) {
                *c += x / nf;
            }
        }
        let along = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clip(&mut p, bounds);
            p
        };

        let xr = along(alpha);
        let fr = obj.eval(&xr)?;
        if fr < values[best] {
            let xe = along(alpha * gamma);
            let fe = obj.eval(&xe)?;
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let outside = fr < values[worst];
        let xc = if outside {
            along(alpha * rho)
        } else {
            along(-rho)
        };
        let fc = obj.eval(&xc)?;
        if (outside && fc <= fr) || (!outside && fc < values[worst]) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &k in &order[1..] {
            let mut p: Vec<f64> = anchor
                .iter()
                .zip(&simplex[k])
                .map(|(a, x)| a + sigma * (x - a))
                .collect();
            clip(&mut p, bounds);
            values[k] = obj.eval(&p)?;
            simplex[k] = p;
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    Ok(Minimum {
        x: simplex[best].clone(),
        f: values[best],
        status,
        iterations,
        evaluations: obj.evals,
    })
}

/// Latin-hypercube starting points inside `bounds`, reproducible from `seed`.
pub fn stratified_starts(
    bounds: &[(f64, f64)],
    count: usize,
    config: &OptimizerConfig,
) -> Vec<Vec<f64>> {
    let mut rng = config.rng();
    let mut columns: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let mut strata: Vec<f64> = (0..count)
                .map(|k| lo + (hi - lo) * (k as f64 + rng.gen::<f64>()) / count as f64)
                .collect();
            for i in (1..strata.len()).rev() {
                let j = rng.gen_range(0..=i);
                strata.swap(i, j);
            }
            strata
        })
        .collect();
    (0..count)
        .map(|k| columns.iter_mut().map(|c| c[k]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = nelder_mead(
            |x| x.iter().map(|v| (v - 1.0).powi(2)).sum(),
            &[0.0, 3.0, -2.0],
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert!(m.converged());
        assert!(m.x.iter().all(|v| (v - 1.0).abs() < 1e-6), "{:?}", m.x);
    }

    #[test]
    fn rosenbrock() {
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let cfg = OptimizerConfig {
            max_iter: 5000,
            ..Default::default()
        };
        let m = nelder_mead(rosen, &[-1.2, 1.0], &cfg).unwrap();
        assert!(m.f < 1e-8, "{}", m.f);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn optimum_on_bound_is_respected() {
        let cfg = OptimizerConfig::default().with_bounds(vec![(0.5, 2.0), (-1.0, 1.0)]);
        let m = nelder_mead(|x| x[0] * x[0] + (x[1] - 0.3).powi(2), &[1.5, 0.0], &cfg).unwrap();
        assert_eq!(m.x[0], 0.5);
        assert!((m.x[1] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn nan_aborts() {
        let r = nelder_mead(
            |x| if x[0] > 0.02 { f64::NAN } else { x[0] },
            &[0.0],
            &OptimizerConfig::default(),
        );
        assert!(matches!(r, Err(Error::Optimization(_))));
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[0] * x[1]).sin();
        let cfg = OptimizerConfig {
            seed: 7,
            ..Default::default()
        }
        .with_bounds(vec![(-2.0, 2.0), (-2.0, 2.0)]);
        let starts = stratified_starts(cfg.bounds.as_ref().unwrap(), 5, &cfg);
        assert_eq!(
            starts,
            stratified_starts(cfg.bounds.as_ref().unwrap(), 5, &cfg)
        );
        let a = nelder_mead(f, &starts[2], &cfg).unwrap();
        let b = nelder_mead(f, &starts[2], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stratified_starts_cover_every_stratum() {
        let cfg = OptimizerConfig {
            seed: 3,
            ..Default::default()
        };
        let starts = stratified_starts(&[(0.0, 1.0), (10.0, 20.0)], 8, &cfg);
        let mut bins: Vec<usize> = starts
            .iter()
            .map(|p| ((p[1] - 10.0) / 10.0 * 8.0) as usize)
            .collect();
        bins.sort();
        assert_eq!(bins, (0..8).collect::<Vec<_>>());
    }
}
