use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tocq::dynamics::{BangLevel, BangSequence, Protocol, SampledPulse};

use crate::Invalid;

/// Shortest round-trip of `x` at 12 significant digits, %g style.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Collects the files a run writes, relative to its output directory.
pub struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut body = header.join(",");
        body.push('\n');
        for r in rows {
            body.push_str(&r.join(","));
            body.push('\n');
        }
        self.write(name, &body)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(name, &body)
    }
}

pub fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|x| fmt_num(*x)).collect()
}

/// `t,u` rows: u holds from its t until the next row; the last row marks T.
pub fn pulse_rows(protocol: &Protocol, samples: usize) -> Vec<Vec<String>> {
    let t_end = protocol.duration();
    let mut pts: Vec<(f64, f64)> = match protocol {
        Protocol::BangSequence(b) => b
            .boundaries()
            .windows(2)
            .zip(b.levels())
            .map(|(w, l)| (w[0], l.value(b.u_max())))
            .collect(),
        Protocol::OneParamBb(p) => {
            let b = p.to_bang_sequence();
            b.boundaries()
                .windows(2)
                .zip(b.levels())
                .map(|(w, l)| (w[0], l.value(b.u_max())))
                .collect()
        }
        Protocol::Sampled(s) => s
            .values
            .iter()
            .enumerate()
            .map(|(i, u)| (i as f64 * s.step(), *u))
            .collect(),
        _ => (0..samples)
            .map(|i| {
                let t = t_end * i as f64 / samples as f64;
                (t, protocol.value_at(t))
            })
            .collect(),
    };
    let last = pts.last().map_or(0.0, |p| p.1);
    pts.push((t_end, last));
    pts.into_iter()
        .map(|(t, u)| vec![fmt_num(t), fmt_num(u)])
        .collect()
}

/// Parse a `t,u` pulse file. Rows with |u| ∈ {0, u_max} become an exact
/// bang sequence; uniform grids a sampled pulse; anything else is resampled
/// (sample-and-hold) onto a uniform grid ten times denser than the file.
pub fn read_pulse(path: &Path, u_max: Option<f64>) -> Result<(Protocol, f64)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Invalid(format!("{}: empty pulse file", path.display())))?;
    let cols: Vec<_> = header.split(',').map(str::trim).collect();
    if cols != ["t", "u"] {
        return Err(Invalid(format!(
            "{}: header must be `t,u`, got `{header}`",
            path.display()
        ))
        .into());
    }
    let mut t = Vec::new();
    let mut u = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let f: Vec<_> = line.split(',').map(str::trim).collect();
        if f.len() != 2 {
            return Err(Invalid(format!(
                "{}:{row}: expected 2 fields, got {}",
                path.display(),
                f.len()
            ))
            .into());
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Invalid(format!(
                        "{}:{row}: `{s}` is not a finite number",
                        path.display()
                    ))
                })
        };
        t.push(parse(f[0])?);
        u.push(parse(f[1])?);
    }
    if t.len() < 2 {
        return Err(Invalid(format!("{}: need at least two rows", path.display())).into());
    }
    if t[0] != 0.0 {
        return Err(Invalid(format!(
            "{}: first time must be 0, got {}",
            path.display(),
            t[0]
        ))
        .into());
    }
    if let Some(k) = t.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Invalid(format!(
            "{}:{}: times must increase strictly",
            path.display(),
            k + 3
        ))
        .into());
    }
    let held = &u[..u.len() - 1];
    let peak = held.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let u_max = u_max.unwrap_or(peak);
    if !(u_max > 0.0) {
        return Err(Invalid(format!(
            "{}: pulse is identically zero; pass --umax",
            path.display()
        ))
        .into());
    }
    if peak > u_max * (1.0 + 1e-9) {
        return Err(Invalid(format!(
            "{}: |u| = {peak} exceeds u_max = {u_max}",
            path.display()
        ))
        .into());
    }
    let duration = *t.last().unwrap();
    let held: Vec<f64> = held.iter().map(|v| v.clamp(-u_max, u_max)).collect();
    Ok((to_protocol(&t, &held, u_max, duration)?, u_max))
}

fn to_protocol(t: &[f64], held: &[f64], u_max: f64, duration: f64) -> Result<Protocol> {
    let tol = 1e-12 * u_max;
    let level = |v: f64| {
        if v.abs() <= tol {
            Some(BangLevel::Off)
        } else if (v - u_max).abs() <= tol {
            Some(BangLevel::Plus)
        } else if (v + u_max).abs() <= tol {
            Some(BangLevel::Minus)
        } else {
            None
        }
    };
    if let Some(levels) = held.iter().map(|v| level(*v)).collect::<Option<Vec<_>>>() {
        let mut switches = Vec::new();
        let mut merged = vec![levels[0]];
        for (i, l) in levels.iter().enumerate().skip(1) {
            if *l != *merged.last().unwrap() {
                switches.push(t[i]);
                merged.push(*l);
            }
        }
        return Ok(Protocol::BangSequence(BangSequence::new(
            u_max, duration, switches, merged,
        )?));
    }
    let n = held.len();
    let dt = duration / n as f64;
    let uniform = t
        .iter()
        .enumerate()
        .all(|(i, ti)| (ti - i as f64 * dt).abs() <= 1e-9 * duration);
    let values = if uniform {
        held.to_vec()
    } else {
        let m = 10 * n;
        let h = duration / m as f64;
        let mut k = 0;
        (0..m)
            .map(|j| {
                let s = (j as f64 + 0.5) * h;
                while k + 1 < n && t[k + 1] <= s {
                    k += 1;
                }
                held[k]
            })
            .collect()
    };
    Ok(Protocol::Sampled(SampledPulse::new(
        u_max, duration, values,
    )?))
}
