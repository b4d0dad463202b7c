use std::f64::consts::PI;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use tocq::dynamics::{bloch_from_state, propagate, BlochPoint, GateKind, ModelParams, Protocol};
use tocq::pmp::{optimality_report, CostKind};
use tocq::smoothing::{
    constrained_smooth_optimize, fit_cosine, fourier_spectrum, optimize_third_harmonic,
    tanh_at_time, tanh_min_time, third_harmonic_min_time, InitialPulse, SchemeOutput, SmoothingRun,
};
use tocq::state_prep::{critical_amplitude, find_time_optimal, StatePrepProblem};
use tocq::xgate::{min_gate_time, rabi_fidelity_curve, GateProblem};

use crate::config::task_seed;
use crate::io::{fmt_num, nums, pulse_rows, read_pulse};
use crate::{
    CostArg, Ctx, Endpoints, Invalid, SchemeArg, SmoothArgs, SpectrumArgs, StatePrepArgs,
    SweepArgs, SweepKind, VerifyArgs, XgateArgs,
};

mod repro;

pub use repro::repro;

const PULSE_SAMPLES: usize = 2000;

fn params(u_max: f64) -> Result<ModelParams> {
    Ok(ModelParams::new(u_max)?)
}

fn problem(e: &Endpoints, u_max: f64) -> Result<StatePrepProblem> {
    Ok(StatePrepProblem::new(
        BlochPoint::new(e.theta_init, e.phi_init)?,
        BlochPoint::new(e.theta_target, e.phi_target)?,
        params(u_max)?,
    ))
}

pub fn state_prep(ctx: &mut Ctx, a: &StatePrepArgs) -> Result<()> {
    let problem = problem(&a.endpoints, a.umax)?;
    if a.tmax.is_some() {
        ctx.cfg.state_prep.t_max = a.tmax;
    }
    let structures = (!a.structures.is_empty()).then_some(a.structures.as_slice());
    let r = ctx.pool(|| find_time_optimal(&problem, structures, &ctx.cfg.state_prep))??;
    let protocol = Protocol::BangSequence(r.protocol(a.umax)?);
    let traj = propagate(
        &protocol,
        &problem.params,
        &problem.init.state(),
        a.samples.max(2),
    )?
    .trajectory;
    let mut rows = Vec::with_capacity(traj.len());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let b = bloch_from_state(s)?;
        rows.push(nums(&[*t, protocol.value_at(*t), b.theta, b.phi]));
    }
    ctx.out.json("state_prep.json", &r)?;
    ctx.out
        .csv("trajectory.csv", &["t", "u", "theta", "phi"], &rows)?;
    ctx.out.csv(
        "pulse.csv",
        &["t", "u"],
        &pulse_rows(&protocol, PULSE_SAMPLES),
    )?;
    println!(
        "T* = {}π  structure {}  C = {}",
        fmt_num(r.t_star / PI),
        r.structure,
        fmt_num(r.cost)
    );
    Ok(())
}

#[derive(Serialize)]
struct GateRow {
    u_max: f64,
    t_star: f64,
    ratio: f64,
    omega_eff: f64,
    n_switch: usize,
}

fn gate_sweep(ctx: &Ctx, gate: GateKind, grid: &[f64]) -> Result<Vec<GateRow>> {
    let cfg = &ctx.cfg.xgate;
    let rows = ctx.pool(|| {
        grid.par_iter()
            .map(|&u| {
                let r = min_gate_time(&GateProblem::new(gate, params(u)?), cfg)?;
                Ok(GateRow {
                    u_max: u,
                    t_star: r.t_star,
                    ratio: r.ratio,
                    omega_eff: r.omega_eff,
                    n_switch: r.switch_count,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(rows)
}

fn write_gate_rows(ctx: &mut Ctx, name: &str, rows: &[GateRow]) -> Result<()> {
    let body: Vec<_> = rows
        .iter()
        .map(|r| {
            let mut v = nums(&[r.u_max, r.t_star, r.ratio, r.omega_eff]);
            v.push(r.n_switch.to_string());
            v
        })
        .collect();
    ctx.out.csv(
        name,
        &["u_max", "T_star", "ratio", "omega_eff", "n_switch"],
        &body,
    )?;
    Ok(())
}

pub fn xgate(ctx: &mut Ctx, a: &XgateArgs) -> Result<()> {
    let gate = GateKind::from(a.gate);
    if let Some(grid) = &a.sweep {
        let rows = gate_sweep(ctx, gate, &grid.points())?;
        return write_gate_rows(ctx, "xgate_sweep.csv", &rows);
    }
    let u = a.umax.expect("clap requires --umax without --sweep");
    let r = min_gate_time(&GateProblem::new(gate, params(u)?), &ctx.cfg.xgate)?;
    ctx.out.json("xgate.json", &r)?;
    ctx.out.csv(
        "pulse.csv",
        &["t", "u"],
        &pulse_rows(&r.protocol, PULSE_SAMPLES),
    )?;
    println!(
        "T*/T_Rabi = {}  omega_eff = {}  switches {}",
        fmt_num(r.ratio),
        fmt_num(r.omega_eff),
        r.switch_count
    );
    Ok(())
}

fn spectrum_rows(protocol: &Protocol, harmonics: usize) -> Vec<Vec<String>> {
    fourier_spectrum(protocol, harmonics)
        .iter()
        .map(|l| nums(&[l.f, l.amplitude.re, l.amplitude.im, l.amplitude.norm()]))
        .collect()
}

const SPECTRUM_HEADER: [&str; 4] = ["f", "re", "im", "abs"];

fn smoothing_run(ctx: &Ctx, a: &SmoothArgs, p: &ModelParams) -> Result<SmoothingRun> {
    let t = a.t_over_trabi.map(|r| r * p.rabi_time());
    if let Some(t) = t {
        if !(t > 0.0) {
            return Err(Invalid(format!(
                "--t-over-trabi must be positive, got {}",
                a.t_over_trabi.unwrap()
            ))
            .into());
        }
    }
    let sc = &ctx.cfg.smoothing;
    let run = match (a.scheme, t) {
        (SchemeArg::Tanh, Some(t)) => tanh_at_time(a.beta, t, p, sc)?,
        (SchemeArg::Tanh, None) => tanh_min_time(a.beta, p, sc)?,
        (SchemeArg::Third, Some(t)) => optimize_third_harmonic(t, p, sc, None)?,
        (SchemeArg::Third, None) => third_harmonic_min_time(p, sc)?,
        (SchemeArg::Constrained, t) => {
            let t = t.unwrap_or_else(|| p.rabi_time());
            let cc = &ctx.cfg.constrained;
            let init = InitialPulse::from(a.init).protocol(t, p, cc.gate)?;
            constrained_smooth_optimize(t, p, &init, cc)?
        }
    };
    Ok(run)
}

pub fn smooth(ctx: &mut Ctx, a: &SmoothArgs) -> Result<()> {
    let p = params(a.umax)?;
    if let Some(n) = a.nt {
        ctx.cfg.constrained.n_t = n;
    }
    if let Some(o) = a.objective {
        ctx.cfg.constrained.objective = o;
    }
    let run = smoothing_run(ctx, a, &p)?;
    ctx.out.json("smooth.json", &run)?;
    ctx.out.csv(
        "pulse.csv",
        &["t", "u"],
        &pulse_rows(&run.protocol, PULSE_SAMPLES),
    )?;
    ctx.out.csv(
        "spectrum.csv",
        &SPECTRUM_HEADER,
        &spectrum_rows(&run.protocol, a.harmonics),
    )?;
    if let SchemeOutput::ConstrainedSmooth { trace, .. } = &run.output {
        let rows: Vec<_> = trace
            .iter()
            .map(|r| {
                let mut v = vec![r.iter.to_string()];
                v.extend(nums(&[r.objective, r.c_plus_one]));
                v
            })
            .collect();
        ctx.out
            .csv("trace.csv", &["iter", "c_smooth", "c_x_plus_1"], &rows)?;
    }
    println!(
        "T/T_Rabi = {}  C+1 = {}  {}",
        fmt_num(run.duration / p.rabi_time()),
        fmt_num(run.cost_plus_one),
        if run.accepted(ctx.cfg.smoothing.tol_fidelity) {
            "perfect gate"
        } else {
            "gate not reached"
        }
    );
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    pulse: String,
    u_max: f64,
    duration: f64,
    protocol: &'a str,
    cost: f64,
    lambda0: f64,
    hoc_max_dev: f64,
    sign_fraction: f64,
    singular_residence: f64,
    omega_eff: Option<f64>,
    amplitude: Option<f64>,
    ode_residual: f64,
}

pub fn verify(ctx: &mut Ctx, a: &VerifyArgs) -> Result<()> {
    let (protocol, u_max) = read_pulse(&a.pulse, a.umax)?;
    let p = params(u_max)?;
    let (cost, audit) = match a.cost {
        CostArg::X => (CostKind::gate(GateKind::X), &ctx.cfg.xgate.audit),
        CostArg::Y => (CostKind::gate(GateKind::Y), &ctx.cfg.xgate.audit),
        CostArg::Pt => (CostKind::gate(GateKind::Pt), &ctx.cfg.xgate.audit),
        CostArg::Sp => (
            problem(&a.endpoints, u_max)?.cost_kind(),
            &ctx.cfg.state_prep.audit,
        ),
    };
    let rep = optimality_report(&protocol, &p, &cost, audit)?;
    let out = VerifyOutput {
        pulse: a.pulse.display().to_string(),
        u_max,
        duration: protocol.duration(),
        protocol: protocol.variant_name(),
        cost: rep.cost,
        lambda0: rep.lambda0,
        hoc_max_dev: rep.hoc_max_dev,
        sign_fraction: rep.sign_fraction,
        singular_residence: rep.singular_residence,
        omega_eff: rep.fit.and_then(|f| f.omega_eff),
        amplitude: rep.fit.map(|f| f.amplitude),
        ode_residual: rep.ode_residual,
    };
    let rows: Vec<_> = (0..rep.times.len())
        .map(|i| nums(&[rep.times[i], rep.phi[i], rep.hoc[i]]))
        .collect();
    ctx.out.json("report.json", &out)?;
    ctx.out.csv("audit.csv", &["t", "phi", "hoc"], &rows)?;
    println!(
        "cost = {}  sign fraction = {}  H_oc deviation = {}",
        fmt_num(rep.cost),
        fmt_num(rep.sign_fraction),
        fmt_num(rep.hoc_max_dev)
    );
    Ok(())
}

pub fn spectrum(ctx: &mut Ctx, a: &SpectrumArgs) -> Result<()> {
    let (protocol, _) = read_pulse(&a.pulse, a.umax)?;
    ctx.out.csv(
        "spectrum.csv",
        &SPECTRUM_HEADER,
        &spectrum_rows(&protocol, a.harmonics),
    )?;
    Ok(())
}

fn state_prep_sweep(
    ctx: &mut Ctx,
    e: &Endpoints,
    grid: &[f64],
    critical: Option<(f64, f64)>,
    prefix: &str,
) -> Result<()> {
    let base = ctx.cfg.state_prep.clone();
    let rows = ctx.pool(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, &u)| {
                let mut cfg = base.clone();
                cfg.seed = task_seed(base.seed, i);
                let r = find_time_optimal(&problem(e, u)?, None, &cfg)?;
                let mut v = nums(&[u, r.t_star, r.t_star / PI]);
                v.push(r.structure.to_string());
                v.extend(nums(&[r.singular_duration, r.cost]));
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    ctx.out.csv(
        &format!("{prefix}.csv"),
        &[
            "u_max",
            "T_star",
            "T_star_over_pi",
            "structure",
            "singular_duration",
            "cost",
        ],
        &rows,
    )?;
    if let Some(bracket) = critical {
        let init = BlochPoint::new(e.theta_init, e.phi_init)?;
        let target = BlochPoint::new(e.theta_target, e.phi_target)?;
        let uc = ctx.pool(|| {
            critical_amplitude(
                init,
                target,
                ModelParams::DEFAULT_OMEGA0,
                bracket,
                1e-3,
                &base,
            )
        })??;
        #[derive(Serialize)]
        struct Critical {
            theta_init: f64,
            phi_init: f64,
            theta_target: f64,
            phi_target: f64,
            u_c: f64,
        }
        let c = Critical {
            theta_init: e.theta_init,
            phi_init: e.phi_init,
            theta_target: e.theta_target,
            phi_target: e.phi_target,
            u_c: uc,
        };
        ctx.out.json(&format!("{prefix}_critical.json"), &c)?;
        println!("u_c = {}", fmt_num(uc));
    }
    Ok(())
}

fn min_time_sweep(
    ctx: &mut Ctx,
    scheme: SchemeArg,
    beta: f64,
    grid: &[f64],
    name: &str,
) -> Result<()> {
    let base = ctx.cfg.smoothing.clone();
    let rows = ctx.pool(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, &u)| {
                let p = params(u)?;
                let mut cfg = base.clone();
                cfg.seed = task_seed(base.seed, i);
                let run = match scheme {
                    SchemeArg::Tanh => tanh_min_time(beta, &p, &cfg)?,
                    _ => third_harmonic_min_time(&p, &cfg)?,
                };
                let mut v = nums(&[
                    u,
                    run.duration,
                    run.duration / p.rabi_time(),
                    run.cost_plus_one,
                ]);
                match &run.output {
                    SchemeOutput::Tanh { half_times, .. } => v.push(half_times.len().to_string()),
                    SchemeOutput::ThirdHarmonic { omega, ratio } => {
                        v.extend(nums(&[*omega, *ratio]))
                    }
                    SchemeOutput::ConstrainedSmooth { .. } => {}
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let header: &[&str] = match scheme {
        SchemeArg::Tanh => &["u_max", "T_star", "ratio", "c_x_plus_1", "pairs"],
        _ => &["u_max", "T_star", "ratio", "c_x_plus_1", "omega", "R"],
    };
    ctx.out.csv(name, header, &rows)?;
    Ok(())
}

fn constrained_sweep(
    ctx: &mut Ctx,
    u_max: f64,
    init: InitialPulse,
    grid: &[f64],
    name: &str,
) -> Result<()> {
    let p = params(u_max)?;
    let cc = ctx.cfg.constrained.clone();
    let rows = ctx.pool(|| {
        grid.par_iter()
            .map(|&r| {
                let t = r * p.rabi_time();
                let run = constrained_smooth_optimize(t, &p, &init.protocol(t, &p, cc.gate)?, &cc)?;
                let (objective, iterations) = match &run.output {
                    SchemeOutput::ConstrainedSmooth {
                        objective,
                        iterations,
                        ..
                    } => (*objective, *iterations),
                    _ => unreachable!("constrained run"),
                };
                let Protocol::Sampled(s) = &run.protocol else {
                    unreachable!("sampled output")
                };
                let fit = fit_cosine(s, (0.75 * p.omega0, 1.25 * p.omega0))?;
                let mut v = nums(&[r, objective, run.cost_plus_one]);
                v.push(iterations.to_string());
                v.push(run.converged.to_string());
                v.extend(nums(&[fit.omega, fit.distance]));
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    ctx.out.csv(
        name,
        &[
            "t_over_trabi",
            "c_smooth",
            "c_x_plus_1",
            "iterations",
            "converged",
            "fit_omega",
            "fit_distance",
        ],
        &rows,
    )?;
    Ok(())
}

fn rabi_sweep(ctx: &mut Ctx, grid: &[f64], name: &str) -> Result<()> {
    let curve = ctx.pool(|| rabi_fidelity_curve(grid, ModelParams::DEFAULT_OMEGA0))??;
    let rows: Vec<_> = curve.iter().map(|(u, c)| nums(&[*u, *c])).collect();
    ctx.out.csv(name, &["u_max", "c_x_plus_1"], &rows)?;
    Ok(())
}

pub fn sweep(ctx: &mut Ctx, a: &SweepArgs) -> Result<()> {
    let grid = a.grid.points();
    if a.critical.is_some() && a.kind != SweepKind::StatePrep {
        return Err(Invalid("--critical applies to the state-prep sweep only".into()).into());
    }
    match a.kind {
        SweepKind::Xgate => {
            let rows = gate_sweep(ctx, a.gate.into(), &grid)?;
            write_gate_rows(ctx, "xgate_sweep.csv", &rows)
        }
        SweepKind::StatePrep => {
            state_prep_sweep(ctx, &a.endpoints, &grid, a.critical, "state_prep_sweep")
        }
        SweepKind::Tanh => min_time_sweep(ctx, SchemeArg::Tanh, a.beta, &grid, "tanh_sweep.csv"),
        SweepKind::Third => min_time_sweep(ctx, SchemeArg::Third, a.beta, &grid, "third_sweep.csv"),
        SweepKind::Rabi => rabi_sweep(ctx, &grid, "rabi_sweep.csv"),
        SweepKind::Constrained => {
            constrained_sweep(ctx, a.umax, a.init.into(), &grid, "constrained_sweep.csv")
        }
    }
}
