//! Parameter sweep of the leading eigenvalue over R_E, bisection for the
//! instability boundary, and trajectory-based estimation of the largest
//! Lyapunov exponent.
//!
//! The Lyapunov estimator is the variational (tangent-space) Benettin
//! method: the tangent delta evolves under the Jacobian along the
//! trajectory and is renormalized to unit length on a fixed interval;
//! the exponent is the time average of the accumulated log stretch. On a
//! linear system this converges to the maximum eigenvalue real part,
//! which the tests exploit as an oracle.

use crate::equilibrium::solve_equilibrium;
use crate::error::{Error, Result};
use crate::integrate::{integrate_core, StepStats};
use crate::model::{rhs, BjtParams, CircuitParams, State};
use crate::stability::{jacobian, stability_report, Classification};

/// Equilibrium solver tolerance used by sweep and boundary evaluations.
const EQ_TOL: f64 = 1e-12;

/// Successful evaluation at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEntry {
    pub max_real_part: f64,
    pub classification: Classification,
}

/// One grid point of a sweep; solver failures are recorded in place.
#[derive(Debug)]
pub struct SweepPoint {
    pub r_e: f64,
    pub outcome: Result<SweepEntry>,
}

/// Ordered sweep output, one entry per requested grid point.
#[derive(Debug)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Number of sign changes of max_real_part across consecutive
    /// successful grid points (zero crossings of the stability curve).
    pub fn sign_changes(&self) -> usize {
        let mut count = 0;
        let mut prev: Option<bool> = None;
        for p in &self.points {
            if let Ok(e) = &p.outcome {
                let unstable = e.max_real_part > 0.0;
                if let Some(prev_unstable) = prev {
                    if unstable != prev_unstable {
                        count += 1;
                    }
                }
                prev = Some(unstable);
            }
        }
        count
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }

    /// CSV export: `r_e,max_real_part,classification`. Failed points are
    /// skipped so every numeric field stays a finite double; callers
    /// report the failure count separately.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "r_e,max_real_part,classification")?;
        for p in &self.points {
            if let Ok(e) = &p.outcome {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{}",
                    p.r_e, e.max_real_part, e.classification
                )?;
            }
        }
        Ok(())
    }
}

fn max_real_at(circuit: &CircuitParams, bjt: &BjtParams, r_e: f64) -> Result<f64> {
    let c = circuit.with_r_e(r_e);
    c.validate()?;
    let eq = solve_equilibrium(&c, bjt, EQ_TOL)?;
    Ok(stability_report(&c, bjt, &eq)?.max_real_part)
}

/// Evaluates the leading eigenvalue real part over an R_E grid. The
/// equilibrium is re-solved at every point because the bias current
/// depends on R_E. Per-point failures land in the output without
/// aborting the rest of the sweep.
pub fn sweep_re(circuit: &CircuitParams, bjt: &BjtParams, r_e_grid: &[f64]) -> Result<SweepResult> {
    if r_e_grid.is_empty() {
        return Err(Error::InvalidParam {
            name: "r_e_grid",
            reason: "grid must be nonempty",
            value: 0.0,
        });
    }
    for r in r_e_grid {
        if !r.is_finite() || *r <= 0.0 {
            return Err(Error::InvalidParam {
                name: "r_e_grid",
                reason: "grid values must be finite and > 0",
                value: *r,
            });
        }
    }
    let points = r_e_grid
        .iter()
        .map(|&r_e| {
            let c = circuit.with_r_e(r_e);
            let outcome = c
                .validate()
                .and_then(|_| solve_equilibrium(&c, bjt, EQ_TOL))
                .and_then(|eq| stability_report(&c, bjt, &eq))
                .map(|rep| SweepEntry {
                    max_real_part: rep.max_real_part,
                    classification: rep.classification,
                });
            SweepPoint { r_e, outcome }
        })
        .collect();
    Ok(SweepResult { points })
}

/// Bisection on the sign of the leading eigenvalue real part over R_E.
/// Returns the midpoint of the final bracket once its width is <= `tol`.
pub fn find_instability_boundary(
    circuit: &CircuitParams,
    bjt: &BjtParams,
    r_e_lo: f64,
    r_e_hi: f64,
    tol: f64,
) -> Result<f64> {
    if !r_e_lo.is_finite() || r_e_lo <= 0.0 {
        return Err(Error::InvalidParam {
            name: "r_e_lo",
            reason: "must be finite and > 0",
            value: r_e_lo,
        });
    }
    if !r_e_hi.is_finite() || r_e_hi <= r_e_lo {
        return Err(Error::InvalidParam {
            name: "r_e_hi",
            reason: "must be finite and > r_e_lo",
            value: r_e_hi,
        });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParam {
            name: "tol",
            reason: "must be finite and > 0",
            value: tol,
        });
    }
    let f_lo = max_real_at(circuit, bjt, r_e_lo)?;
    let f_hi = max_real_at(circuit, bjt, r_e_hi)?;
    let unstable_lo = f_lo > 0.0;
    if unstable_lo == (f_hi > 0.0) {
        return Err(Error::NoSignChange {
            lo: r_e_lo,
            hi: r_e_hi,
            f_lo,
            f_hi,
        });
    }
    let (mut lo, mut hi) = (r_e_lo, r_e_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        if (max_real_at(circuit, bjt, mid)? > 0.0) == unstable_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One renormalization record: running exponent after `renorm_index`
/// renormalizations, at trajectory time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub renorm_index: usize,
    pub t: f64,
    pub lambda_running: f64,
}

/// Largest-Lyapunov-exponent estimate with its convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    /// Exponent in 1/seconds (time-average log stretch of the tangent).
    pub lambda1: f64,
    pub horizon: f64,
    pub renorm_count: usize,
    pub trace: Vec<TracePoint>,
}

impl LyapunovEstimate {
    /// CSV export: `renorm_index,t,lambda_running`.
    pub fn write_trace_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "renorm_index,t,lambda_running")?;
        for p in &self.trace {
            writeln!(
                w,
                "{},{:.16e},{:.16e}",
                p.renorm_index, p.t, p.lambda_running
            )?;
        }
        Ok(())
    }
}

/// Benettin estimate of the largest Lyapunov exponent.
///
/// Co-integrates the state with a tangent vector under the variational
/// equation, renormalizing the tangent to unit length every
/// `renorm_interval`. Requires `horizon >= 100 * renorm_interval` so the
/// estimate rests on a meaningful number of renormalizations. An
/// integration failure mid-run aborts with the partial trace attached.
pub fn largest_lyapunov(
    circuit: &CircuitParams,
    bjt: &BjtParams,
    p0: State,
    horizon: f64,
    renorm_interval: f64,
) -> Result<LyapunovEstimate> {
    circuit.validate()?;
    bjt.validate()?;
    if !p0.is_finite() {
        return Err(Error::NonFiniteInput { context: "p0" });
    }
    if !renorm_interval.is_finite() || renorm_interval <= 0.0 {
        return Err(Error::InvalidParam {
            name: "renorm_interval",
            reason: "must be finite and > 0",
            value: renorm_interval,
        });
    }
    if !horizon.is_finite() || horizon < 100.0 * renorm_interval {
        return Err(Error::InvalidParam {
            name: "horizon",
            reason: "must be finite and at least 100 renormalization intervals",
            value: horizon,
        });
    }

    // Unit tangent with equal weight on every component: projections on
    // all eigendirections are generically nonzero.
    let mut y = [
        p0.v_c1, p0.v_c2, p0.v_c3, p0.i_l3, //
        0.5, 0.5, 0.5, 0.5,
    ];
    let abs_tol = [1e-9, 1e-9, 1e-9, 1e-12, 1e-9, 1e-9, 1e-9, 1e-12];
    let rel_tol = 1e-9;
    let max_step = 1e-9;

    let mut aug_rhs = |_t: f64, y: &[f64; 8]| -> Result<[f64; 8]> {
        let p = State::new(y[0], y[1], y[2], y[3]);
        let f = rhs(circuit, bjt, &p)?.as_array();
        let j = jacobian(circuit, bjt, &p)?;
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&f);
        for r in 0..4 {
            let mut acc = 0.0;
            for c in 0..4 {
                acc += j[(r, c)] * y[4 + c];
            }
            out[4 + r] = acc;
        }
        Ok(out)
    };

    let n_full = ((horizon / renorm_interval) + 1e-9).floor() as usize;
    let rem = horizon - n_full as f64 * renorm_interval;
    let has_rem = rem > renorm_interval * 1e-9;

    let mut trace: Vec<TracePoint> = Vec::with_capacity(n_full + has_rem as usize);
    let mut stats = StepStats::default();
    let mut log_sum = 0.0;
    let mut h_next: f64 = 1e-12;
    let mut t = 0.0;

    let abort = |t: f64, cause: Error, trace: &mut Vec<TracePoint>| Error::LyapunovAborted {
        time: t,
        reason: Box::new(cause),
        trace: std::mem::take(trace),
    };

    for seg in 0..n_full + has_rem as usize {
        let t_next = if seg < n_full {
            (seg + 1) as f64 * renorm_interval
        } else {
            horizon
        };
        let (y_end, h_sugg) = integrate_core(
            &mut aug_rhs,
            t,
            t_next,
            y,
            rel_tol,
            &abs_tol,
            max_step,
            h_next.min(max_step).max(f64::MIN_POSITIVE),
            &mut stats,
            |_, _, _| {},
        )
        .map_err(|(t_fail, cause)| abort(t_fail, cause, &mut trace))?;
        y = y_end;
        h_next = h_sugg;
        t = t_next;

        let norm = (y[4] * y[4] + y[5] * y[5] + y[6] * y[6] + y[7] * y[7]).sqrt();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(abort(
                t,
                Error::NonFiniteInput {
                    context: "tangent norm",
                },
                &mut trace,
            ));
        }
        log_sum += norm.ln();
        for d in &mut y[4..8] {
            *d /= norm;
        }
        trace.push(TracePoint {
            renorm_index: seg + 1,
            t,
            lambda_running: log_sum / t,
        });
    }

    let last = trace.last().expect("horizon >= 100 intervals");
    Ok(LyapunovEstimate {
        lambda1: last.lambda_running,
        horizon,
        renorm_count: trace.len(),
        trace,
    })
}
