use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarMinimum {
    pub x: f64,
    pub f: f64,
    /// Refined local minima, one per scan basin, best first.
    pub basins: Vec<(f64, f64)>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on [a, b] down to an interval of width `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Global 1-D minimization: uniform scan with `points` samples, then golden
/// refinement of every local minimum of the scan.
pub fn scalar_minimize<F>(
    mut f: F,
    bracket: (f64, f64),
    points: usize,
    tol: f64,
) -> Result<ScalarMinimum>
where
    F: FnMut(f64) -> f64,
{
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return validation(format!("invalid bracket [{lo}, {hi}]"));
    }
    if points < 3 {
        return validation("scan needs at least three points");
    }
    if !(tol > 0.0) {
        return validation("tolerance must be positive");
    }
    let xs: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    if let Some(i) = vs.iter().position(|v| v.is_nan()) {
        return Err(Error::Optimization(format!(
            "objective returned NaN at x = {}",
            xs[i]
        )));
    }

    let mut basins = Vec::new();
    let mut i = 0;
    while i < points {
        // collapse runs of equal values so a flat bottom counts once
        let mut j = i;
        while j + 1 < points && vs[j + 1] == vs[i] {
            j += 1;
        }
        let left_ok = i == 0 || vs[i - 1] > vs[i];
        let right_ok = j + 1 == points || vs[j + 1] > vs[i];
        if left_ok && right_ok {
            let a = xs[i.saturating_sub(1)];
            let b = xs[(j + 1).min(points - 1)];
            let (x, v) = golden_section(&mut f, a, b, tol);
            basins.push(if v <= vs[i] { (x, v) } else { (xs[i], vs[i]) });
        }
        i = j + 1;
    }
    basins.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let (x, v) = basins[0];
    Ok(ScalarMinimum { x, f: v, basins })
}
