//! Control protocols u(t) on [0, T].
//!
//! Piecewise-constant variants (bang sequences, the one-parameter bang-bang
//! family, sampled pulses) propagate exactly. Smooth variants are reduced to a
//! uniform grid; each grid step becomes two constant sub-segments chosen so the
//! product reproduces a fourth-order Magnus step.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ModelParams;
use crate::error::{validation, Error, Result};

/// Slack allowed on |u(t)| ≤ u_max for floating-point round-off.
pub const AMPLITUDE_SLACK: f64 = 1e-12;

/// Default reduction density for smooth protocols: grid steps per unit of T/π.
pub const DEFAULT_STEPS_PER_PI: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Symmetry of a one-parameter bang-bang pulse about T/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Sgn cos(ω(t − T/2)): X gate.
    Even,
    /// Sgn sin(ω(t − T/2)): Y gate.
    Odd,
}

/// Admissible values of a bang sequence segment: ±u_max (bang) or 0 (singular).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BangLevel {
    Plus,
    Minus,
    Off,
}

impl BangLevel {
    pub fn value(self, u_max: f64) -> f64 {
        match self {
            BangLevel::Plus => u_max,
            BangLevel::Minus => -u_max,
            BangLevel::Off => 0.0,
        }
    }

    pub fn bang(sign: Sign) -> Self {
        match sign {
            Sign::Plus => BangLevel::Plus,
            Sign::Minus => BangLevel::Minus,
        }
    }
}

/// A constant-amplitude piece of a control: duration and amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub dt: f64,
    pub u: f64,
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration.is_finite() && duration > 0.0) {
        return validation(format!(
            "duration must be positive and finite, got {duration}"
        ));
    }
    Ok(())
}

fn check_u_max(u_max: f64) -> Result<()> {
    if !(u_max.is_finite() && u_max > 0.0) {
        return validation(format!("u_max must be positive and finite, got {u_max}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BangSequence {
    u_max: f64,
    duration: f64,
    switch_times: Vec<f64>,
    levels: Vec<BangLevel>,
}

impl BangSequence {
    /// `switch_times` are the interior instants t_1 < … < t_{N−1}; `levels`
    /// holds the N segment values.
    pub fn new(
        u_max: f64,
        duration: f64,
        switch_times: Vec<f64>,
        levels: Vec<BangLevel>,
    ) -> Result<Self> {
        check_u_max(u_max)?;
        check_duration(duration)?;
        if levels.len() != switch_times.len() + 1 {
            return validation(format!(
                "{} switching times need {} levels, got {}",
                switch_times.len(),
                switch_times.len() + 1,
                levels.len()
            ));
        }
        let mut prev = 0.0;
        for &t in &switch_times {
            if !(t.is_finite() && t > prev && t < duration) {
                return validation(format!(
                    "switching times must be strictly increasing inside (0, {duration}), got {switch_times:?}"
                ));
            }
            prev = t;
        }
        Ok(Self {
            u_max,
            duration,
            switch_times,
            levels,
        })
    }

    /// A single constant bang over the whole interval.
    pub fn constant(u_max: f64, duration: f64, level: BangLevel) -> Result<Self> {
        Self::new(u_max, duration, Vec::new(), vec![level])
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn levels(&self) -> &[BangLevel] {
        &self.levels
    }

    /// Number of interior instants where the value actually changes.
    pub fn switch_count(&self) -> usize {
        self.levels.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Boundaries t_0 = 0, t_1, …, t_N = T.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.switch_times.len() + 2);
        b.push(0.0);
        b.extend_from_slice(&self.switch_times);
        b.push(self.duration);
        b
    }

    pub fn durations(&self) -> Vec<f64> {
        self.boundaries().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.durations()
            .into_iter()
            .zip(&self.levels)
            .map(|(dt, l)| Segment {
                dt,
                u: l.value(self.u_max),
            })
            .collect()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.switch_times.partition_point(|&s| s <= t);
        self.levels[idx.min(self.levels.len() - 1)].value(self.u_max)
    }

    /// Flip every bang: σz conjugation of the evolution.
    pub fn negated(&self) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| match l {
                BangLevel::Plus => BangLevel::Minus,
                BangLevel::Minus => BangLevel::Plus,
                BangLevel::Off => BangLevel::Off,
            })
            .collect();
        Self {
            levels,
            ..self.clone()
        }
    }
}

/// The resonant Rabi drive u_max cos(ω₀(t − T/2)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiPulse {
    pub u_max: f64,
    pub omega0: f64,
    pub duration: f64,
}

impl RabiPulse {
    pub fn value_at(&self, t: f64) -> f64 {
        self.u_max * (self.omega0 * (t - 0.5 * self.duration)).cos()
    }
}

/// ±u_max · Sgn[cos(ω_eff(t − T/2))] (even) or the sine form (odd).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneParamBB {
    pub u_max: f64,
    pub omega_eff: f64,
    pub duration: f64,
    pub sign: Sign,
    pub parity: Parity,
}

impl OneParamBB {
    pub fn new(
        u_max: f64,
        omega_eff: f64,
        duration: f64,
        sign: Sign,
        parity: Parity,
    ) -> Result<Self> {
        check_u_max(u_max)?;
        check_duration(duration)?;
        if !(omega_eff.is_finite() && omega_eff > 0.0) {
            return validation(format!("omega_eff must be positive, got {omega_eff}"));
        }
        Ok(Self {
            u_max,
            omega_eff,
            duration,
            sign,
            parity,
        })
    }

    fn carrier(&self, t: f64) -> f64 {
        let x = self.omega_eff * (t - 0.5 * self.duration);
        match self.parity {
            Parity::Even => x.cos(),
            Parity::Odd => x.sin(),
        }
    }

    /// Zeros of the carrier strictly inside (0, T), in closed form.
    pub fn switch_times(&self) -> Vec<f64> {
        let half = 0.5 * self.duration;
        let spacing = PI / self.omega_eff;
        let offset = match self.parity {
            Parity::Even => 0.5,
            Parity::Odd => 0.0,
        };
        let kmax = (half / spacing).ceil() as i64 + 1;
        (-kmax..=kmax)
            .map(|k| half + (k as f64 + offset) * spacing)
            .filter(|&t| t > 0.0 && t < self.duration)
            .collect()
    }

    pub fn to_bang_sequence(&self) -> BangSequence {
        let switches = self.switch_times();
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(&switches);
        bounds.push(self.duration);
        let levels = bounds
            .windows(2)
            .map(|w| {
                let c = self.carrier(0.5 * (w[0] + w[1]));
                let s = if c >= 0.0 {
                    self.sign
                } else {
                    self.sign.flip()
                };
                BangLevel::bang(s)
            })
            .collect();
        BangSequence {
            u_max: self.u_max,
            duration: self.duration,
            switch_times: switches,
            levels,
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let c = self.carrier(t);
        let s = if c >= 0.0 { 1.0 } else { -1.0 };
        self.sign.value() * s * self.u_max
    }
}

/// u(t) = u_max[Σ_{i=1}^{2N} (−1)^{i+1} tanh(β(t − t_i)) − 1] with mirrored times
/// t_i = T − t_{2N+1−i}. Starts and ends at −u_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TanhPulse {
    pub u_max: f64,
    pub beta: f64,
    pub duration: f64,
    /// The N free switching times t_1 … t_N (first half).
    pub half_times: Vec<f64>,
}

impl TanhPulse {
    pub fn new(u_max: f64, beta: f64, duration: f64, half_times: Vec<f64>) -> Result<Self> {
        check_u_max(u_max)?;
        check_duration(duration)?;
        if !(beta.is_finite() && beta > 0.0) {
            return validation(format!("beta must be positive, got {beta}"));
        }
        if half_times.iter().any(|&t| !(0.0..=duration).contains(&t)) {
            return validation(format!("tanh switching times must lie in [0, {duration}]"));
        }
        Ok(Self {
            u_max,
            beta,
            duration,
            half_times,
        })
    }

    /// All 2N switching times, sorted.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut first: Vec<f64> = self
            .half_times
            .iter()
            .map(|&t| t.min(self.duration - t))
            .collect();
        first.sort_by(f64::total_cmp);
        let mut all = first.clone();
        all.extend(first.iter().rev().map(|&t| self.duration - t));
        all
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let times = self.switch_times();
        tanh_value(&times, self.beta, self.u_max, t)
    }
}

pub(crate) fn tanh_value(times: &[f64], beta: f64, u_max: f64, t: f64) -> f64 {
    let mut s = 0.0;
    for (i, &ti) in times.iter().enumerate() {
        let term = (beta * (t - ti)).tanh();
        if i % 2 == 0 {
            s += term;
        } else {
            s -= term;
        }
    }
    u_max * (s - 1.0)
}

/// u(t) = u_max[(1 − R) cos(ω(t − T/2)) + R cos(3ω(t − T/2))], −1/8 ≤ R ≤ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThirdHarmonic {
    pub u_max: f64,
    pub omega: f64,
    pub ratio: f64,
    pub duration: f64,
}

impl ThirdHarmonic {
    pub const RATIO_MIN: f64 = -0.125;
    pub const RATIO_MAX: f64 = 1.0;

    pub fn new(u_max: f64, omega: f64, ratio: f64, duration: f64) -> Result<Self> {
        check_u_max(u_max)?;
        check_duration(duration)?;
        if !(Self::RATIO_MIN..=Self::RATIO_MAX).contains(&ratio) {
            return validation(format!("mixing ratio must lie in [-1/8, 1], got {ratio}"));
        }
        Ok(Self {
            u_max,
            omega,
            ratio,
            duration,
        })
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let x = self.omega * (t - 0.5 * self.duration);
        self.u_max * ((1.0 - self.ratio) * x.cos() + self.ratio * (3.0 * x).cos())
    }
}

/// Piecewise-constant pulse on a uniform grid of N_t steps, Δt = T/N_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPulse {
    pub u_max: f64,
    pub duration: f64,
    pub values: Vec<f64>,
}

impl SampledPulse {
    pub fn new(u_max: f64, duration: f64, values: Vec<f64>) -> Result<Self> {
        check_u_max(u_max)?;
        check_duration(duration)?;
        if values.is_empty() {
            return validation("sampled pulse needs at least one value");
        }
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || v.abs() > u_max + AMPLITUDE_SLACK)
        {
            return validation(format!("sample {v} violates |u| <= u_max = {u_max}"));
        }
        Ok(Self {
            u_max,
            duration,
            values,
        })
    }

    pub fn step(&self) -> f64 {
        self.duration / self.values.len() as f64
    }

    /// Grid-step midpoints (i + ½)Δt.
    pub fn midpoints(&self) -> Vec<f64> {
        let dt = self.step();
        (0..self.values.len())
            .map(|i| (i as f64 + 0.5) * dt)
            .collect()
    }

    pub fn segments(&self) -> Vec<Segment> {
        let dt = self.step();
        self.values.iter().map(|&u| Segment { dt, u }).collect()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.values.len();
        let idx = ((t / self.step()).floor().max(0.0) as usize).min(n - 1);
        self.values[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Protocol {
    BangSequence(BangSequence),
    Rabi(RabiPulse),
    OneParamBb(OneParamBB),
    Tanh(TanhPulse),
    ThirdHarmonic(ThirdHarmonic),
    Sampled(SampledPulse),
}

impl Protocol {
    pub fn duration(&self) -> f64 {
        match self {
            Protocol::BangSequence(p) => p.duration,
            Protocol::Rabi(p) => p.duration,
            Protocol::OneParamBb(p) => p.duration,
            Protocol::Tanh(p) => p.duration,
            Protocol::ThirdHarmonic(p) => p.duration,
            Protocol::Sampled(p) => p.duration,
        }
    }

    pub fn u_max(&self) -> f64 {
        match self {
            Protocol::BangSequence(p) => p.u_max,
            Protocol::Rabi(p) => p.u_max,
            Protocol::OneParamBb(p) => p.u_max,
            Protocol::Tanh(p) => p.u_max,
            Protocol::ThirdHarmonic(p) => p.u_max,
            Protocol::Sampled(p) => p.u_max,
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Protocol::BangSequence(p) => p.value_at(t),
            Protocol::Rabi(p) => p.value_at(t),
            Protocol::OneParamBb(p) => p.value_at(t),
            Protocol::Tanh(p) => p.value_at(t),
            Protocol::ThirdHarmonic(p) => p.value_at(t),
            Protocol::Sampled(p) => p.value_at(t),
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(
            self,
            Protocol::BangSequence(_) | Protocol::OneParamBb(_) | Protocol::Sampled(_)
        )
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Protocol::BangSequence(_) => "bang_sequence",
            Protocol::Rabi(_) => "rabi",
            Protocol::OneParamBb(_) => "one_param_bb",
            Protocol::Tanh(_) => "tanh",
            Protocol::ThirdHarmonic(_) => "third_harmonic",
            Protocol::Sampled(_) => "sampled",
        }
    }

    /// Number of reduction grid steps used for smooth variants.
    pub fn reduction_steps(&self, steps_per_pi: usize) -> usize {
        ((steps_per_pi as f64 * self.duration() / PI).ceil() as usize).max(16)
    }

    /// Constant pieces whose ordered product is the evolution operator.
    ///
    /// Exact for piecewise-constant variants. Smooth variants use `steps`
    /// grid steps (see [`Protocol::reduction_steps`]), each split into two
    /// sub-segments with Gauss-point weighted amplitudes.
    pub fn segments_with(&self, steps: usize) -> Vec<Segment> {
        match self {
            Protocol::BangSequence(p) => p.segments(),
            Protocol::OneParamBb(p) => p.to_bang_sequence().segments(),
            Protocol::Sampled(p) => p.segments(),
            Protocol::Tanh(p) => {
                let times = p.switch_times();
                magnus4_segments(
                    |t| tanh_value(&times, p.beta, p.u_max, t),
                    p.duration,
                    steps,
                )
            }
            _ => magnus4_segments(|t| self.value_at(t), self.duration(), steps),
        }
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.segments_with(self.reduction_steps(DEFAULT_STEPS_PER_PI))
    }

    /// Midpoint samples on a uniform grid of `n` steps.
    pub fn to_sampled(&self, n: usize) -> Result<SampledPulse> {
        if n == 0 {
            return validation("sampling grid needs at least one step");
        }
        let dt = self.duration() / n as f64;
        let values = (0..n)
            .map(|i| {
                self.value_at((i as f64 + 0.5) * dt)
                    .clamp(-self.u_max(), self.u_max())
            })
            .collect();
        SampledPulse::new(self.u_max(), self.duration(), values)
    }

    /// Largest |u(t)| over `n + 1` equally spaced instants in [0, T].
    pub fn max_amplitude(&self, n: usize) -> f64 {
        let t = self.duration();
        (0..=n)
            .map(|i| self.value_at(t * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_amplitude(&self, params: &ModelParams) -> Result<()> {
        let peak = self.max_amplitude(4096);
        if peak > params.u_max + AMPLITUDE_SLACK {
            return Err(Error::Validation(format!(
                "|u| reaches {peak} > u_max = {}",
                params.u_max
            )));
        }
        Ok(())
    }

    /// JSON record `{variant, params, T, u_max}`.
    pub fn to_record(&self) -> ProtocolRecord {
        let params = match self {
            Protocol::BangSequence(p) => {
                json!({ "switch_times": p.switch_times, "levels": p.levels })
            }
            Protocol::Rabi(p) => json!({ "omega0": p.omega0 }),
            Protocol::OneParamBb(p) => {
                json!({ "omega_eff": p.omega_eff, "sign": p.sign, "parity": p.parity })
            }
            Protocol::Tanh(p) => json!({ "beta": p.beta, "half_times": p.half_times }),
            Protocol::ThirdHarmonic(p) => json!({ "omega": p.omega, "ratio": p.ratio }),
            Protocol::Sampled(p) => json!({ "values": p.values }),
        };
        ProtocolRecord {
            variant: self.variant_name().to_string(),
            params,
            duration: self.duration(),
            u_max: self.u_max(),
        }
    }

    pub fn from_record(rec: &ProtocolRecord) -> Result<Self> {
        let p = &rec.params;
        let field = |name: &str| -> Result<&serde_json::Value> {
            p.get(name)
                .ok_or_else(|| Error::Validation(format!("protocol params missing `{name}`")))
        };
        let num = |name: &str| -> Result<f64> {
            field(name)?
                .as_f64()
                .ok_or_else(|| Error::Validation(format!("`{name}` must be a number")))
        };
        fn parse<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
            serde_json::from_value(v.clone()).map_err(|e| Error::Validation(e.to_string()))
        }
        let (t, u_max) = (rec.duration, rec.u_max);
        Ok(match rec.variant.as_str() {
            "bang_sequence" => Protocol::BangSequence(BangSequence::new(
                u_max,
                t,
                parse(field("switch_times")?)?,
                parse(field("levels")?)?,
            )?),
            "rabi" => {
                check_u_max(u_max)?;
                check_duration(t)?;
                Protocol::Rabi(RabiPulse {
                    u_max,
                    omega0: num("omega0")?,
                    duration: t,
                })
            }
            "one_param_bb" => Protocol::OneParamBb(OneParamBB::new(
                u_max,
                num("omega_eff")?,
                t,
                parse(field("sign")?)?,
                parse(field("parity")?)?,
            )?),
            "tanh" => Protocol::Tanh(TanhPulse::new(
                u_max,
                num("beta")?,
                t,
                parse(field("half_times")?)?,
            )?),
            "third_harmonic" => {
                Protocol::ThirdHarmonic(ThirdHarmonic::new(u_max, num("omega")?, num("ratio")?, t)?)
            }
            "sampled" => Protocol::Sampled(SampledPulse::new(u_max, t, parse(field("values")?)?)?),
            other => return validation(format!("unknown protocol variant `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRecord {
    pub variant: String,
    pub params: serde_json::Value,
    #[serde(rename = "T")]
    pub duration: f64,
    pub u_max: f64,
}

/// Fourth-order commutator-free Magnus reduction of a smooth control.
///
/// Because H is affine in u, each exponential of a Gauss-point combination of
/// H is again a constant-u propagator over half a step.
pub fn magnus4_segments(f: impl Fn(f64) -> f64, duration: f64, steps: usize) -> Vec<Segment> {
    let s3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - s3 / 6.0, 0.5 + s3 / 6.0);
    let (a1, a2) = (0.25 + s3 / 6.0, 0.25 - s3 / 6.0);
    let h = duration / steps as f64;
    let mut out = Vec::with_capacity(2 * steps);
    for i in 0..steps {
        let t0 = i as f64 * h;
        let (u1, u2) = (f(t0 + c1 * h), f(t0 + c2 * h));
        out.push(Segment {
            dt: 0.5 * h,
            u: 2.0 * (a1 * u1 + a2 * u2),
        });
        out.push(Segment {
            dt: 0.5 * h,
            u: 2.0 * (a2 * u1 + a1 * u2),
        });
    }
    out
}
