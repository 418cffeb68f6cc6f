//! Subcommand bodies: each runs one core analysis, writes
//! `<out_dir>/<subcommand>.csv`, and returns a one-line summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use clapp_core::{
    collector_current, find_instability_boundary, fit_exponential, largest_lyapunov,
    phase_projection, resonant_frequency, simulate, solve_equilibrium, stability_report, sweep_re,
    Component, EquilibriumPoint, IvSample, State, TankMode, Trajectory,
};

use crate::config::{RunConfig, Spacing};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Equilibrium solver tolerance used by every subcommand that needs the
/// operating point; matches the solver contract's relative tolerance.
const EQ_TOL: f64 = 1e-12;

fn csv_writer(out_dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

/// The shipped start state: the solved equilibrium kicked by +1 mV on
/// v_C1, the documented default for trajectory work.
fn default_start(cfg: &RunConfig) -> Result<(EquilibriumPoint, State)> {
    let eq = solve_equilibrium(&cfg.circuit, &cfg.bjt, EQ_TOL)?;
    let mut p0 = eq.state;
    p0.v_c1 += 1e-3;
    Ok((eq, p0))
}

fn run_trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    let (_, p0) = default_start(cfg)?;
    Ok(simulate(&cfg.circuit, &cfg.bjt, p0, &cfg.integrator)?)
}

pub fn fit(cfg: &RunConfig, out_dir: &Path, samples: Option<&Path>) -> Result<String> {
    let samples = match samples {
        Some(path) => read_iv_csv(path)?,
        None => synth_samples(cfg)?,
    };
    let (i_s, eta) = fit_exponential(&samples, cfg.bjt.v_t)?;
    let mut w = csv_writer(out_dir, "fit.csv")?;
    writeln!(w, "i_s,eta")?;
    writeln!(w, "{i_s:.16e},{eta:.16e}")?;
    Ok(format!(
        "fit: i_s = {i_s:.16e} A, eta = {eta:.16e} ({} samples)",
        samples.len()
    ))
}

/// Noiseless synthetic DC sweep of the configured device over forward
/// bias, for running `fit` without a measurement file.
fn synth_samples(cfg: &RunConfig) -> Result<Vec<IvSample>> {
    (0..41)
        .map(|k| {
            let v_be = 0.60 + 0.005 * k as f64;
            let i_dc = collector_current(&cfg.bjt, v_be)?;
            Ok(IvSample { v_be, i_dc })
        })
        .collect()
}

fn read_iv_csv(path: &Path) -> Result<Vec<IvSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Input(format!("cannot read samples file {}: {e}", path.display()))
    })?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (idx == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| {
            CliError::Input(format!("samples line {}: expected `v_be,i_dc`", idx + 1))
        })?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                CliError::Input(format!("samples line {}: `{s}` is not a number", idx + 1))
            })
        };
        out.push(IvSample {
            v_be: parse(a)?,
            i_dc: parse(b)?,
        });
    }
    Ok(out)
}

pub fn equilibrium(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let eq = solve_equilibrium(&cfg.circuit, &cfg.bjt, EQ_TOL)?;
    let s = eq.state;
    let mut w = csv_writer(out_dir, "equilibrium.csv")?;
    writeln!(w, "v_c1,v_c2,v_c3,i_l3,i_b_eq")?;
    writeln!(
        w,
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        s.v_c1, s.v_c2, s.v_c3, s.i_l3, eq.i_b_eq
    )?;
    Ok(format!(
        "equilibrium: v_c1 = {:.16e} V, v_c2 = {:.16e} V, v_c3 = {:.16e} V, i_b = {:.16e} A",
        s.v_c1, s.v_c2, s.v_c3, eq.i_b_eq
    ))
}

pub fn eigs(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let eq = solve_equilibrium(&cfg.circuit, &cfg.bjt, EQ_TOL)?;
    let rep = stability_report(&cfg.circuit, &cfg.bjt, &eq)?;
    let mut w = csv_writer(out_dir, "eigs.csv")?;
    writeln!(w, "re,im")?;
    for e in &rep.eigenvalues {
        writeln!(w, "{:.16e},{:.16e}", e.re, e.im)?;
    }
    let list = rep
        .eigenvalues
        .iter()
        .map(|e| format!("{:.16e}{:+.16e}i", e.re, e.im))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(format!(
        "eigs: {list}; max Re = {:.16e} 1/s; classification = {}",
        rep.max_real_part, rep.classification
    ))
}

pub fn simulate_cmd(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let traj = run_trajectory(cfg)?;
    let mut w = csv_writer(out_dir, "simulate.csv")?;
    traj.write_csv(&mut w)?;
    let last = traj.states.last().expect("trajectory has samples");
    Ok(format!(
        "simulate: {} samples over [{:.16e}, {:.16e}] s; {} steps accepted, {} rejected; final v_c1 = {:.16e} V",
        traj.times.len(),
        cfg.integrator.t_start,
        cfg.integrator.t_end,
        traj.stats.accepted,
        traj.stats.rejected,
        last.v_c1
    ))
}

pub fn phase(cfg: &RunConfig, out_dir: &Path, x: &str, y: &str) -> Result<String> {
    let cx = Component::from_str(x).map_err(|e| CliError::Input(format!("--x: {e}")))?;
    let cy = Component::from_str(y).map_err(|e| CliError::Input(format!("--y: {e}")))?;
    let traj = run_trajectory(cfg)?;
    let pairs = phase_projection(&traj, cx, cy)?;
    let mut w = csv_writer(out_dir, "phase.csv")?;
    writeln!(w, "{},{}", cx.name(), cy.name())?;
    for (a, b) in &pairs {
        writeln!(w, "{a:.16e},{b:.16e}")?;
    }
    Ok(format!(
        "phase: {} points of {} vs {}",
        pairs.len(),
        cx.name(),
        cy.name()
    ))
}

pub fn sweep(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let grid = build_grid(cfg);
    let result = sweep_re(&cfg.circuit, &cfg.bjt, &grid)?;
    let mut w = csv_writer(out_dir, "sweep.csv")?;
    result.write_csv(&mut w)?;
    Ok(format!(
        "sweep: {} points over [{:.16e}, {:.16e}] ohm ({}), {} sign changes, {} failed points",
        grid.len(),
        cfg.sweep_lo,
        cfg.sweep_hi,
        cfg.sweep_spacing.name(),
        result.sign_changes(),
        result.failures()
    ))
}

fn build_grid(cfg: &RunConfig) -> Vec<f64> {
    let n = cfg.sweep_count;
    if n == 1 {
        return vec![cfg.sweep_lo];
    }
    (0..n)
        .map(|k| {
            let f = k as f64 / (n - 1) as f64;
            match cfg.sweep_spacing {
                Spacing::Linear => cfg.sweep_lo + (cfg.sweep_hi - cfg.sweep_lo) * f,
                Spacing::Log => (cfg.sweep_lo.ln() + (cfg.sweep_hi / cfg.sweep_lo).ln() * f).exp(),
            }
        })
        .collect()
}

pub fn boundary(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let r_star = find_instability_boundary(
        &cfg.circuit,
        &cfg.bjt,
        cfg.boundary_lo,
        cfg.boundary_hi,
        cfg.boundary_tol,
    )?;
    let mut w = csv_writer(out_dir, "boundary.csv")?;
    writeln!(w, "r_e_star,bracket_lo,bracket_hi,tol")?;
    writeln!(
        w,
        "{r_star:.16e},{:.16e},{:.16e},{:.16e}",
        cfg.boundary_lo, cfg.boundary_hi, cfg.boundary_tol
    )?;
    Ok(format!(
        "boundary: R_E* = {r_star:.16e} ohm (bracket [{:.16e}, {:.16e}], tol {:.16e})",
        cfg.boundary_lo, cfg.boundary_hi, cfg.boundary_tol
    ))
}

pub fn lyapunov(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let (_, p0) = default_start(cfg)?;
    let est = largest_lyapunov(
        &cfg.circuit,
        &cfg.bjt,
        p0,
        cfg.lyapunov_horizon,
        cfg.lyapunov_renorm,
    )?;
    let mut w = csv_writer(out_dir, "lyapunov.csv")?;
    est.write_trace_csv(&mut w)?;
    Ok(format!(
        "lyapunov: lambda1 = {:.16e} 1/s over {:.16e} s ({} renormalizations)",
        est.lambda1, est.horizon, est.renorm_count
    ))
}

pub fn freq(cfg: &RunConfig, out_dir: &Path, mode: &str) -> Result<String> {
    let mode = TankMode::from_str(mode).map_err(|e| CliError::Input(format!("--mode: {e}")))?;
    let f = resonant_frequency(&cfg.circuit, mode);
    let name = match mode {
        TankMode::TwoCap => "two-cap",
        TankMode::ThreeCap => "three-cap",
    };
    let mut w = csv_writer(out_dir, "freq.csv")?;
    writeln!(w, "mode,f_hz")?;
    writeln!(w, "{name},{f:.16e}")?;
    Ok(format!("freq: {name} resonance = {f:.16e} Hz"))
}
