use anyhow::Result;
use rayon::prelude::*;
use tocq::dynamics::{rabi_protocol, GateKind};
use tocq::smoothing::{tanh_at_time, tanh_min_time, InitialPulse};
use tocq::xgate::{min_gate_time, GateProblem};

use super::{
    constrained_sweep, gate_sweep, min_time_sweep, params, rabi_sweep, spectrum_rows,
    state_prep_sweep, write_gate_rows, PULSE_SAMPLES, SPECTRUM_HEADER,
};
use crate::config::{parse_angle, Grid};
use crate::io::{nums, pulse_rows};
use crate::{Ctx, Endpoints, ReproArgs, ReproTarget, SchemeArg};

const SPECTRUM_HARMONICS: usize = 60;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    Grid { lo, hi, n }.points()
}

fn endpoints(theta_init: &str) -> Endpoints {
    Endpoints {
        theta_init: parse_angle(theta_init).expect("literal angle"),
        phi_init: 0.0,
        theta_target: parse_angle("0.35pi").expect("literal angle"),
        phi_target: std::f64::consts::PI,
    }
}

fn rabi_curve(ctx: &mut Ctx) -> Result<()> {
    rabi_sweep(ctx, &grid(0.01, 0.5, 50), "rabi_curve.csv")?;
    let p = params(0.2)?;
    ctx.out.csv(
        "rabi_pulse_u0.2.csv",
        &["t", "u"],
        &pulse_rows(&rabi_protocol(&p)?, PULSE_SAMPLES),
    )?;
    Ok(())
}

fn gate_ratio(ctx: &mut Ctx) -> Result<()> {
    let mut us = vec![0.01];
    us.extend(grid(0.05, 0.5, 10));
    let rows = gate_sweep(ctx, GateKind::X, &us)?;
    write_gate_rows(ctx, "gate_ratio.csv", &rows)
}

fn plateaus(ctx: &mut Ctx) -> Result<()> {
    let us = grid(0.1, 1.0, 19);
    state_prep_sweep(
        ctx,
        &endpoints("0.7pi"),
        &us,
        Some((0.4, 0.9)),
        "state_prep_init0.7pi",
    )?;
    state_prep_sweep(
        ctx,
        &endpoints("0.65pi"),
        &us,
        Some((0.35, 0.75)),
        "state_prep_init0.65pi",
    )
}

fn tanh_scan(ctx: &mut Ctx) -> Result<()> {
    let us = grid(0.1, 0.5, 5);
    let ratios = grid(0.75, 1.0, 26);
    let tasks: Vec<(f64, f64)> = us
        .iter()
        .flat_map(|&u| ratios.iter().map(move |&r| (u, r)))
        .collect();
    let sc = ctx.cfg.smoothing.clone();
    let rows = ctx.pool(|| {
        tasks
            .par_iter()
            .map(|&(u, r)| {
                let p = params(u)?;
                let run = tanh_at_time(4.0, r * p.rabi_time(), &p, &sc)?;
                Ok(nums(&[u, r, run.cost_plus_one]))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    ctx.out.csv(
        "tanh_scan.csv",
        &["u_max", "t_over_trabi", "c_x_plus_1"],
        &rows,
    )?;
    min_time_sweep(ctx, SchemeArg::Tanh, 4.0, &us, "tanh_min_times.csv")
}

fn spectra(ctx: &mut Ctx) -> Result<()> {
    let p = params(0.2)?;
    let bb = min_gate_time(&GateProblem::new(GateKind::X, p), &ctx.cfg.xgate)?.protocol;
    let smooth = tanh_min_time(4.0, &p, &ctx.cfg.smoothing)?.protocol;
    ctx.out.csv(
        "pulse_bb_u0.2.csv",
        &["t", "u"],
        &pulse_rows(&bb, PULSE_SAMPLES),
    )?;
    ctx.out.csv(
        "pulse_tanh_u0.2.csv",
        &["t", "u"],
        &pulse_rows(&smooth, PULSE_SAMPLES),
    )?;
    ctx.out.csv(
        "spectrum_bb_u0.2.csv",
        &SPECTRUM_HEADER,
        &spectrum_rows(&bb, SPECTRUM_HARMONICS),
    )?;
    ctx.out.csv(
        "spectrum_tanh_u0.2.csv",
        &SPECTRUM_HEADER,
        &spectrum_rows(&smooth, SPECTRUM_HARMONICS),
    )?;
    Ok(())
}

fn smooth_cost(ctx: &mut Ctx) -> Result<()> {
    let ratios = grid(0.8, 1.2, 9);
    constrained_sweep(
        ctx,
        0.2,
        InitialPulse::BangBang,
        &ratios,
        "smooth_cost_init_bb.csv",
    )?;
    constrained_sweep(
        ctx,
        0.2,
        InitialPulse::Rabi,
        &ratios,
        "smooth_cost_init_rabi.csv",
    )
}

pub fn repro(ctx: &mut Ctx, a: &ReproArgs) -> Result<()> {
    let targets = match a.target {
        ReproTarget::All => vec![
            ReproTarget::RabiCurve,
            ReproTarget::GateRatio,
            ReproTarget::StatePrepPlateaus,
            ReproTarget::ThirdHarmonic,
            ReproTarget::TanhScan,
            ReproTarget::Spectra,
            ReproTarget::SmoothCost,
        ],
        t => vec![t],
    };
    for t in targets {
        match t {
            ReproTarget::RabiCurve => rabi_curve(ctx)?,
            ReproTarget::GateRatio => gate_ratio(ctx)?,
            ReproTarget::StatePrepPlateaus => plateaus(ctx)?,
            ReproTarget::ThirdHarmonic => min_time_sweep(
                ctx,
                SchemeArg::Third,
                0.0,
                &grid(0.05, 0.5, 10),
                "third_harmonic.csv",
            )?,
            ReproTarget::TanhScan => tanh_scan(ctx)?,
            ReproTarget::Spectra => spectra(ctx)?,
            ReproTarget::SmoothCost => smooth_cost(ctx)?,
            ReproTarget::All => unreachable!("expanded above"),
        }
    }
    Ok(())
}
