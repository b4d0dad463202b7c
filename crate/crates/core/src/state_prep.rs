//! Time-optimal state preparation over bang-bang (BB-k) and
//! bang-singular-bang (BSB) structures.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    bloch_from_state, segment_unitary, BangLevel, BangSequence, BlochPoint, ModelParams, Protocol,
    QubitState, Sign,
};
use crate::error::{validation, Error, Result};
use crate::optim::{nelder_mead, stratified_starts, OptimizerConfig};
use crate::pmp::{optimality_report, AuditConfig, CostKind, OptimalityReport, ReportSummary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePrepProblem {
    pub init: BlochPoint,
    pub target: BlochPoint,
    pub params: ModelParams,
}

impl StatePrepProblem {
    pub fn new(init: BlochPoint, target: BlochPoint, params: ModelParams) -> Self {
        Self {
            init,
            target,
            params,
        }
    }

    pub fn cost_kind(&self) -> CostKind {
        CostKind::StatePrep {
            init: self.init.state(),
            target: self.target.state(),
        }
    }

    /// |θ̇| ≤ 2u_max, so no protocol is faster than |Δθ| / (2u_max).
    pub fn time_lower_bound(&self) -> f64 {
        (self.target.theta - self.init.theta).abs() / (2.0 * self.params.u_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum StructureKind {
    Bb {
        switches: usize,
    },
    /// bang, u = 0, bang; `last` is the sign of the closing bang.
    Bsb {
        last: Sign,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructureLabel {
    pub kind: StructureKind,
    pub first: Sign,
}

impl StructureLabel {
    pub fn bb(switches: usize, first: Sign) -> Self {
        Self {
            kind: StructureKind::Bb { switches },
            first,
        }
    }

    pub fn bsb(first: Sign, last: Sign) -> Self {
        Self {
            kind: StructureKind::Bsb { last },
            first,
        }
    }

    pub fn levels(&self) -> Vec<BangLevel> {
        match self.kind {
            StructureKind::Bb { switches } => {
                let mut s = self.first;
                (0..=switches)
                    .map(|_| {
                        let l = BangLevel::bang(s);
                        s = s.flip();
                        l
                    })
                    .collect()
            }
            StructureKind::Bsb { last } => vec![
                BangLevel::bang(self.first),
                BangLevel::Off,
                BangLevel::bang(last),
            ],
        }
    }

    pub fn free_times(&self) -> usize {
        self.levels().len() - 1
    }

    pub fn is_bsb(&self) -> bool {
        matches!(self.kind, StructureKind::Bsb { .. })
    }

    fn switch_rank(&self) -> usize {
        match self.kind {
            StructureKind::Bb { switches } => switches,
            StructureKind::Bsb { .. } => 2,
        }
    }

    fn id(&self) -> u64 {
        let base = match self.kind {
            StructureKind::Bb { switches } => switches as u64 * 4,
            StructureKind::Bsb { last } => 1_000_000 + if last == Sign::Plus { 0 } else { 1 },
        };
        base * 2 + if self.first == Sign::Plus { 0 } else { 1 }
    }

    /// Default candidates at time T: BB-k for k ≤ ⌈ω₀T/π⌉ + extra with both
    /// leading signs, plus the four BSB sign patterns.
    pub fn candidates(duration: f64, params: &ModelParams, extra: usize) -> Vec<StructureLabel> {
        let kmax = (params.omega0 * duration / PI).ceil() as usize + extra;
        let mut out = Vec::new();
        for k in 0..=kmax {
            for s in [Sign::Plus, Sign::Minus] {
                out.push(StructureLabel::bb(k, s));
            }
        }
        for a in [Sign::Plus, Sign::Minus] {
            for b in [Sign::Plus, Sign::Minus] {
                out.push(StructureLabel::bsb(a, b));
            }
        }
        out
    }
}

impl fmt::Display for StructureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StructureKind::Bb { switches } => write!(f, "BB-{switches}{}", self.first.symbol()),
            StructureKind::Bsb { last } => write!(f, "BSB{}{}", self.first.symbol(), last.symbol()),
        }
    }
}

fn parse_sign(c: char) -> Option<Sign> {
    match c {
        '+' => Some(Sign::Plus),
        '-' => Some(Sign::Minus),
        _ => None,
    }
}

impl FromStr for StructureLabel {
    type Err = Error;

    /// "BB-6+", "BB-2-" or "BSB+-"; case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Validation(format!(
                "bad structure label `{s}` (expected BB-<k><sign> or BSB<sign><sign>)"
            ))
        };
        let up = s.trim().to_ascii_uppercase();
        if let Some(rest) = up.strip_prefix("BSB") {
            let mut c = rest.chars();
            let (a, b) = (c.next().and_then(parse_sign), c.next().and_then(parse_sign));
            return match (a, b, c.next()) {
                (Some(a), Some(b), None) => Ok(StructureLabel::bsb(a, b)),
                _ => Err(bad()),
            };
        }
        let rest = up.strip_prefix("BB-").ok_or_else(bad)?;
        let sign = rest.chars().last().and_then(parse_sign).ok_or_else(bad)?;
        let k = rest[..rest.len() - 1].parse::<usize>().map_err(|_| bad())?;
        Ok(StructureLabel::bb(k, sign))
    }
}

/// C_SP after sorting and clamping the switching times into [0, T].
pub fn cost_of_switchings(
    times: &[f64],
    levels: &[BangLevel],
    duration: f64,
    problem: &StatePrepProblem,
) -> f64 {
    let mut t: Vec<f64> = times.iter().map(|v| v.clamp(0.0, duration)).collect();
    t.sort_by(f64::total_cmp);
    let (hz, u) = (problem.params.hz(), problem.params.u_max);
    let mut psi = problem.init.state();
    let mut prev = 0.0;
    for (k, level) in levels.iter().enumerate() {
        let end = if k < t.len() { t[k] } else { duration };
        psi = segment_unitary(end - prev, level.value(u), hz).apply(&psi);
        prev = end;
    }
    -problem.target.state().inner(&psi).norm_sqr()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatePrepConfig {
    pub tol_fidelity: f64,
    /// Nelder-Mead restarts at bisection points; the T scan uses `scan_restarts`.
    pub restarts: usize,
    pub scan_restarts: usize,
    pub max_iter: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// T scan step, upper limit (`None`: 2π/u_max) and bisection resolution.
    pub t_step: f64,
    pub t_max: Option<f64>,
    pub t_resolution: f64,
    /// Extra switchings beyond the resonance estimate ⌈ω₀T/π⌉.
    pub extra_switches: usize,
    /// Segments shorter than this fraction of T are ignored when labelling.
    pub segment_resolution: f64,
    pub report_fraction: f64,
    pub audit: AuditConfig,
}

impl Default for StatePrepConfig {
    fn default() -> Self {
        Self {
            tol_fidelity: 1e-6,
            restarts: 20,
            scan_restarts: 8,
            max_iter: 2000,
            tolerance: 1e-10,
            seed: 0,
            t_step: 0.02 * PI,
            t_max: None,
            t_resolution: 1e-5 * PI,
            extra_switches: 2,
            segment_resolution: 1e-3,
            report_fraction: 0.999,
            audit: AuditConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureOptimum {
    pub label: StructureLabel,
    pub duration: f64,
    pub times: Vec<f64>,
    pub cost: f64,
    /// False when the best restart stopped on the iteration cap.
    pub converged: bool,
    pub seed: u64,
}

impl StructureOptimum {
    /// The optimum as a bang sequence with empty segments removed.
    pub fn protocol(&self, u_max: f64) -> Result<BangSequence> {
        clean_sequence(u_max, self.duration, &self.times, &self.label.levels())
    }
}

fn mix_seed(root: u64, label: &StructureLabel, duration: f64) -> u64 {
    let mut h = root ^ 0x9E37_79B9_7F4A_7C15;
    for v in [label.id(), duration.to_bits()] {
        h ^= v
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(h << 6)
            .wrapping_add(h >> 2);
    }
    h
}

fn optimize_with(
    label: StructureLabel,
    duration: f64,
    problem: &StatePrepProblem,
    config: &StatePrepConfig,
    restarts: usize,
    warm: Option<&[f64]>,
) -> Result<StructureOptimum> {
    let levels = label.levels();
    let n = levels.len() - 1;
    let seed = mix_seed(config.seed, &label, duration);
    if n == 0 {
        let cost = cost_of_switchings(&[], &levels, duration, problem);
        return Ok(StructureOptimum {
            label,
            duration,
            times: vec![],
            cost,
            converged: true,
            seed,
        });
    }
    let opt = OptimizerConfig {
        max_iter: config.max_iter,
        tolerance: config.tolerance,
        x_tolerance: 1e-9 * duration,
        restarts,
        seed,
        bounds: Some(vec![(0.0, duration); n]),
    };
    let mut starts = stratified_starts(opt.bounds.as_deref().unwrap_or(&[]), restarts, &opt);
    if let Some(w) = warm.filter(|w| w.len() == n) {
        starts.insert(0, w.to_vec());
    }
    let mut best: Option<StructureOptimum> = None;
    for x0 in starts {
        let m = nelder_mead(
            |x| cost_of_switchings(x, &levels, duration, problem),
            &x0,
            &opt,
        )?;
        if best.as_ref().map_or(true, |b| m.f < b.cost) {
            let converged = m.converged();
            let mut times = m.x;
            times.sort_by(f64::total_cmp);
            best = Some(StructureOptimum {
                label,
                duration,
                times,
                cost: m.f,
                converged,
                seed,
            });
        }
    }
    Ok(best.expect("at least one start"))
}

/// Best of `config.restarts` Nelder-Mead runs from stratified switching times.
pub fn optimize_structure(
    label: StructureLabel,
    duration: f64,
    problem: &StatePrepProblem,
    config: &StatePrepConfig,
) -> Result<StructureOptimum> {
    if !(duration > 0.0 && duration.is_finite()) {
        return validation(format!("duration must be positive, got {duration}"));
    }
    optimize_with(label, duration, problem, config, config.restarts, None)
}

/// Durations of the segments of an optimum.
pub fn segment_durations(times: &[f64], duration: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend_from_slice(times);
    b.push(duration);
    b.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    #[serde(rename = "T_star")]
    pub t_star: f64,
    /// Structure after dropping unresolved segments.
    pub structure: StructureLabel,
    /// Structure that was optimized.
    pub searched: StructureLabel,
    pub switch_times: Vec<f64>,
    pub levels: Vec<BangLevel>,
    pub cost: f64,
    pub singular_duration: f64,
    /// Resolved (level, duration) pieces, equal neighbours merged.
    pub pieces: Vec<(BangLevel, f64)>,
    /// Largest |θ − π/2| during the u = 0 segment (BSB only).
    pub singular_offset: Option<f64>,
    pub seed: u64,
    pub optimality: Option<ReportSummary>,
    #[serde(skip)]
    pub report: Option<OptimalityReport>,
}

impl SearchResult {
    pub fn protocol(&self, u_max: f64) -> Result<BangSequence> {
        clean_sequence(u_max, self.t_star, &self.switch_times, &self.levels)
    }

    /// Durations of the bangs strictly between the first and the last one.
    pub fn middle_durations(&self) -> Vec<f64> {
        let d = &self.pieces;
        if d.len() < 3 {
            return vec![];
        }
        d[1..d.len() - 1].iter().map(|s| s.1).collect()
    }
}

/// Merge equal neighbours and drop segments shorter than `min_len`.
fn effective_segments(
    times: &[f64],
    levels: &[BangLevel],
    duration: f64,
    min_len: f64,
) -> Vec<(BangLevel, f64)> {
    let mut out: Vec<(BangLevel, f64)> = Vec::new();
    for (level, d) in levels.iter().zip(segment_durations(times, duration)) {
        if d <= min_len {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.0 == *level => last.1 += d,
            _ => out.push((*level, d)),
        }
    }
    out
}

fn clean_sequence(
    u_max: f64,
    duration: f64,
    times: &[f64],
    levels: &[BangLevel],
) -> Result<BangSequence> {
    let segs = effective_segments(times, levels, duration, 1e-12 * duration);
    let mut t = 0.0;
    let mut switches = Vec::new();
    for s in &segs[..segs.len() - 1] {
        t += s.1;
        switches.push(t);
    }
    BangSequence::new(
        u_max,
        duration,
        switches,
        segs.iter().map(|s| s.0).collect(),
    )
}

fn effective_label(
    times: &[f64],
    levels: &[BangLevel],
    duration: f64,
    resolution: f64,
) -> Option<StructureLabel> {
    let segs = effective_segments(times, levels, duration, resolution * duration);
    let sign_of = |l: BangLevel| {
        if l == BangLevel::Plus {
            Sign::Plus
        } else {
            Sign::Minus
        }
    };
    let first = sign_of(segs.first()?.0);
    if let Some(k) = segs.iter().position(|s| s.0 == BangLevel::Off) {
        if segs.len() == 3 && k == 1 {
            return Some(StructureLabel::bsb(first, sign_of(segs[2].0)));
        }
        return None;
    }
    Some(StructureLabel::bb(segs.len() - 1, first))
}

/// Largest |θ − π/2| along the u = 0 segment of a BSB optimum.
fn singular_offset(problem: &StatePrepProblem, opt: &StructureOptimum) -> Option<f64> {
    if !opt.label.is_bsb() {
        return None;
    }
    let (hz, u) = (problem.params.hz(), problem.params.u_max);
    let levels = opt.label.levels();
    let psi: QubitState =
        segment_unitary(opt.times[0], levels[0].value(u), hz).apply(&problem.init.state());
    // θ is frozen while u = 0, so the entry point decides
    bloch_from_state(&psi)
        .ok()
        .map(|b| (b.theta - FRAC_PI_2).abs())
}

/// A resolved u = 0 segment must lie on the singular arc θ = π/2; at the
/// fidelity threshold the entry point is only fixed to about √tol_fidelity.
fn on_equator(problem: &StatePrepProblem, o: &StructureOptimum, config: &StatePrepConfig) -> bool {
    let levels = o.label.levels();
    let resolved = levels
        .iter()
        .zip(segment_durations(&o.times, o.duration))
        .any(|(l, d)| *l == BangLevel::Off && d > config.segment_resolution * o.duration);
    !resolved || singular_offset(problem, o).is_some_and(|d| d <= config.tol_fidelity.sqrt())
}

fn succeeded(o: &StructureOptimum, config: &StatePrepConfig) -> bool {
    o.cost + 1.0 <= config.tol_fidelity
}

/// Smallest T at which `label` reaches the target, by bisection on (lo, hi].
fn bisect(
    label: StructureLabel,
    mut lo: f64,
    mut hi: StructureOptimum,
    problem: &StatePrepProblem,
    config: &StatePrepConfig,
) -> Result<StructureOptimum> {
    while hi.duration - lo > config.t_resolution {
        let mid = 0.5 * (lo + hi.duration);
        let warm: Vec<f64> = hi.times.iter().map(|t| t * mid / hi.duration).collect();
        let o = optimize_with(label, mid, problem, config, config.restarts, Some(&warm))?;
        if succeeded(&o, config) {
            hi = o;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Upward T scan over all candidate structures, bisection on the first
/// success, then selection of the smallest T* (ties go to fewer switchings).
pub fn find_time_optimal(
    problem: &StatePrepProblem,
    structures: Option<&[StructureLabel]>,
    config: &StatePrepConfig,
) -> Result<SearchResult> {
    if structures.is_some_and(|s| s.is_empty()) {
        return validation("candidate structure set is empty");
    }
    let t_max = config.t_max.unwrap_or(2.0 * PI / problem.params.u_max);
    let mut t = problem.time_lower_bound().max(config.t_step).min(t_max);
    let mut warm: std::collections::HashMap<StructureLabel, (f64, Vec<f64>)> = Default::default();
    let mut prev_t = 0.0;
    while prev_t < t_max {
        let labels = match structures {
            Some(s) => s.to_vec(),
            None => StructureLabel::candidates(t, &problem.params, config.extra_switches),
        };
        let results: Vec<StructureOptimum> = labels
            .par_iter()
            .map(|&l| {
                let w = warm
                    .get(&l)
                    .map(|(t0, x)| x.iter().map(|v| v * t / t0).collect::<Vec<f64>>());
                optimize_with(l, t, problem, config, config.scan_restarts, w.as_deref())
            })
            .collect::<Result<_>>()?;
        let hits: Vec<StructureOptimum> = results
            .iter()
            .filter(|o| succeeded(o, config))
            .cloned()
            .collect();
        if !hits.is_empty() {
            let refined: Vec<StructureOptimum> = hits
                .into_par_iter()
                .map(|h| bisect(h.label, prev_t, h, problem, config))
                .collect::<Result<_>>()?;
            return finish(problem, refined, config);
        }
        for o in results {
            warm.insert(o.label, (t, o.times));
        }
        prev_t = t;
        // the last scan point is t_max itself
        t = (t + config.t_step).min(t_max);
    }
    Err(Error::NotFound(format!(
        "no candidate structure reaches the target within T = {t_max}"
    )))
}

fn finish(
    problem: &StatePrepProblem,
    refined: Vec<StructureOptimum>,
    config: &StatePrepConfig,
) -> Result<SearchResult> {
    let tie = 2.0 * config.t_resolution;
    let best_t = refined
        .iter()
        .map(|o| o.duration)
        .fold(f64::INFINITY, f64::min);
    let t_audit = config.report_fraction * best_t;
    // T* alone cannot separate structures that reach the target within the
    // fidelity tolerance; the optimized cost just below T* can.
    let mut pool: Vec<(StructureOptimum, StructureLabel, StructureOptimum)> = refined
        .into_par_iter()
        .filter(|o| o.duration <= best_t + tie)
        .filter(|o| on_equator(problem, o, config))
        .map(|o| {
            let lvl = o.label.levels();
            let label = effective_label(&o.times, &lvl, o.duration, config.segment_resolution)
                .unwrap_or(o.label);
            let warm: Vec<f64> = o.times.iter().map(|t| t * t_audit / o.duration).collect();
            let below = optimize_with(
                o.label,
                t_audit,
                problem,
                config,
                config.restarts,
                Some(&warm),
            )?;
            Ok((o, label, below))
        })
        .collect::<Result<_>>()?;
    let floor = pool.iter().map(|c| c.2.cost).fold(f64::INFINITY, f64::min);
    let cost_tie = 1e-3 * (floor + 1.0).abs().max(1e-14);
    pool.retain(|c| c.2.cost <= floor + cost_tie);
    pool.sort_by(|a, b| {
        a.1.switch_rank()
            .cmp(&b.1.switch_rank())
            .then(a.0.label.switch_rank().cmp(&b.0.label.switch_rank()))
            .then(a.2.cost.total_cmp(&b.2.cost))
            .then(a.0.label.id().cmp(&b.0.label.id()))
    });
    let (opt, label, audit) = pool
        .into_iter()
        .next()
        .ok_or_else(|| Error::NotFound("no structure survived selection".into()))?;

    let levels = opt.label.levels();
    let pieces = effective_segments(
        &opt.times,
        &levels,
        opt.duration,
        config.segment_resolution * opt.duration,
    );
    let durations = segment_durations(&opt.times, opt.duration);
    let singular_duration: f64 = levels
        .iter()
        .zip(&durations)
        .filter(|(l, _)| **l == BangLevel::Off)
        .fold(0.0, |s, (_, d)| s + d);
    let report = clean_sequence(problem.params.u_max, t_audit, &audit.times, &levels)
        .and_then(|b| {
            optimality_report(
                &Protocol::BangSequence(b),
                &problem.params,
                &problem.cost_kind(),
                &config.audit,
            )
        })
        .ok();

    Ok(SearchResult {
        t_star: opt.duration,
        structure: label,
        searched: opt.label,
        switch_times: opt.times.clone(),
        levels,
        cost: opt.cost,
        singular_duration,
        pieces,
        singular_offset: singular_offset(problem, &opt),
        seed: opt.seed,
        optimality: report.as_ref().map(|r| r.summary()),
        report,
    })
}

fn bsb_labels() -> Vec<StructureLabel> {
    let s = [Sign::Plus, Sign::Minus];
    s.iter()
        .flat_map(|&a| s.iter().map(move |&b| StructureLabel::bsb(a, b)))
        .collect()
}

/// Whether a protocol with a resolved singular segment is time-optimal. Near
/// the transition a bang-bang protocol with a short middle bang reaches the
/// target about as fast, and a fidelity threshold only resolves T* to a
/// relative √tol_fidelity, so T* equal to that precision counts.
pub fn singular_is_optimal(problem: &StatePrepProblem, config: &StatePrepConfig) -> Result<bool> {
    let resolved = |r: &SearchResult| {
        r.structure.is_bsb() && r.singular_duration > config.segment_resolution * r.t_star
    };
    let global = find_time_optimal(problem, None, config)?;
    if resolved(&global) {
        return Ok(true);
    }
    let slack = config.tol_fidelity.sqrt();
    // bang-singular-bang solutions exist on short T windows; scan finely
    let fine = StatePrepConfig {
        t_step: config.t_step / 20.0,
        t_max: Some(global.t_star * (1.0 + slack)),
        ..config.clone()
    };
    match find_time_optimal(problem, Some(&bsb_labels()), &fine) {
        Ok(r) => Ok(resolved(&r) && r.t_star <= global.t_star * (1.0 + slack)),
        Err(Error::NotFound(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Amplitude below which no time-optimal protocol has a singular segment,
/// by bisection on u_max to within `tol`.
pub fn critical_amplitude(
    init: BlochPoint,
    target: BlochPoint,
    omega0: f64,
    bracket: (f64, f64),
    tol: f64,
    config: &StatePrepConfig,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let problem = |u: f64| -> Result<StatePrepProblem> {
        Ok(StatePrepProblem::new(
            init,
            target,
            ModelParams::with_omega0(omega0, u)?,
        ))
    };
    if !(lo < hi && tol > 0.0) {
        return validation(format!("invalid bracket [{lo}, {hi}] or tolerance {tol}"));
    }
    if !singular_is_optimal(&problem(hi)?, config)? {
        return validation(format!(
            "no singular segment in the optimum at u_max = {hi}"
        ));
    }
    if singular_is_optimal(&problem(lo)?, config)? {
        return validation(format!(
            "the optimum at u_max = {lo} still has a singular segment"
        ));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if singular_is_optimal(&problem(mid)?, config)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
