//! Equilibrium solving.
//!
//! Setting the right-hand side to zero reduces the four-dimensional system
//! to one scalar transcendental equation in the equilibrium base current:
//!
//! ```text
//! i_L3,eq = 0
//! v_C2,eq = (1 + beta) R_E i_B
//! v_C3,eq = (V_CC - i_B R1) R2 / (R1 + R2)      (Thevenin form)
//! v_C1,eq = v_C3,eq - v_C2,eq
//! g(i_B)  = i_B - (I_S/beta)(e^{eta v_C1,eq(i_B)/V_T} - 1) = 0
//! ```
//!
//! v_C1,eq is strictly decreasing in i_B and the exponential is strictly
//! increasing in v_C1, so g is strictly increasing and the root is unique.
//! The solver is a safeguarded Newton iteration on the bracket [0, i_B0],
//! where i_B0 is the closed-form current at which v_C1,eq crosses zero;
//! any Newton step leaving the bracket falls back to bisection.

use crate::error::{Error, Result};
use crate::model::{base_current, rhs, BjtParams, CircuitParams, State};

/// A solved equilibrium point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    /// The equilibrium state; `i_l3` is exactly zero.
    pub state: State,
    /// Equilibrium base current in amperes.
    pub i_b_eq: f64,
    /// Right-hand side evaluated at `state`, per component
    /// (V/s, V/s, V/s, A/s). Should be tiny but is reported, not assumed.
    pub residual: [f64; 4],
}

impl EquilibriumPoint {
    /// Max-norm of the residual, componentwise scaled by `scales`.
    pub fn scaled_residual_norm(&self, scales: &[f64; 4]) -> f64 {
        self.residual
            .iter()
            .zip(scales)
            .map(|(r, s)| (r / s).abs())
            .fold(0.0, f64::max)
    }
}

/// Thevenin voltage of the bias divider seen at the collector node for a
/// given base current: (V_CC - i_B R1) R2 / (R1 + R2).
///
/// This form gives exactly 7.0 V at i_B = 0 for the 12 V / 5 kOhm / 7 kOhm
/// network (the algebraically equal (V_CC/R1 - i_B)/G form does not round
/// exactly in binary).
fn thevenin(circuit: &CircuitParams, i_b: f64) -> f64 {
    (circuit.v_cc - i_b * circuit.r1) * circuit.r2 / (circuit.r1 + circuit.r2)
}

/// Equilibrium v_C1 as a function of the base current.
fn v_c1_of(circuit: &CircuitParams, bjt: &BjtParams, i_b: f64) -> f64 {
    thevenin(circuit, i_b) - (1.0 + bjt.beta) * circuit.r_e * i_b
}

/// Closed-form upper bracket endpoint: the base current at which the
/// equilibrium v_C1 reaches zero.
pub fn i_b_upper(circuit: &CircuitParams, bjt: &BjtParams) -> f64 {
    circuit.v_cc * circuit.r2
        / (circuit.r1 * circuit.r2 + (circuit.r1 + circuit.r2) * (1.0 + bjt.beta) * circuit.r_e)
}

/// Characteristic per-component scales of the right-hand side, used to make
/// residual tolerances dimensionless: {V_CC/(R1 C1), V_CC/(R1 C2), i_B0/C3,
/// V_CC/L3}.
pub fn residual_scales(circuit: &CircuitParams, bjt: &BjtParams) -> [f64; 4] {
    let drive = circuit.v_cc.abs().max(f64::MIN_POSITIVE) / circuit.r1;
    [
        drive / circuit.c1,
        drive / circuit.c2,
        i_b_upper(circuit, bjt).abs().max(f64::MIN_POSITIVE) / circuit.c3,
        circuit.v_cc.abs().max(f64::MIN_POSITIVE) / circuit.l3,
    ]
}

/// Solves for the unique equilibrium point.
///
/// `tol` is the relative tolerance on i_B,eq (default choice 1e-12); the
/// iteration cap is 200. Returns a convergence error carrying the best
/// iterate if the cap is exceeded.
pub fn solve_equilibrium(
    circuit: &CircuitParams,
    bjt: &BjtParams,
    tol: f64,
) -> Result<EquilibriumPoint> {
    circuit.validate()?;
    bjt.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParam {
            name: "tol",
            reason: "must be finite and > 0",
            value: tol,
        });
    }

    let g = |i_b: f64| -> Result<f64> { Ok(i_b - base_current(bjt, v_c1_of(circuit, bjt, i_b))?) };
    // g'(i_b) = 1 - (I_S/beta)(eta/V_T) v_c1'(i_b) e^{eta v_c1/V_T} with
    // constant v_c1' < 0, so g' >= 1 everywhere on the bracket.
    let dv =
        -(circuit.r1 * circuit.r2 / (circuit.r1 + circuit.r2) + (1.0 + bjt.beta) * circuit.r_e);
    let g_prime = |i_b: f64| -> Result<f64> {
        let v = v_c1_of(circuit, bjt, i_b);
        let x = bjt.eta * v / bjt.v_t;
        if x > bjt.exp_cap {
            return Err(Error::ExponentOverflow {
                exponent: x,
                cap: bjt.exp_cap,
            });
        }
        Ok(1.0 - bjt.i_s / bjt.beta * (bjt.eta / bjt.v_t) * dv * x.exp())
    };

    let hi = i_b_upper(circuit, bjt).max(0.0);
    let root = if hi == 0.0 {
        // Degenerate bracket (V_CC <= 0): i_B = 0 is the root when g(0) = 0.
        let g0 = g(0.0)?;
        if g0 == 0.0 {
            0.0
        } else {
            return Err(Error::NoSignChange {
                lo: 0.0,
                hi,
                f_lo: g0,
                f_hi: g0,
            });
        }
    } else {
        let g_lo = g(0.0)?;
        let g_hi = g(hi)?;
        if g_lo == 0.0 {
            0.0
        } else if g_lo > 0.0 || g_hi < 0.0 {
            return Err(Error::NoSignChange {
                lo: 0.0,
                hi,
                f_lo: g_lo,
                f_hi: g_hi,
            });
        } else {
            newton_bisect(&g, &g_prime, 0.0, hi, g_lo, g_hi, tol)?
        }
    };

    let v_c3 = thevenin(circuit, root);
    let v_c2 = (1.0 + bjt.beta) * circuit.r_e * root;
    let state = State::new(v_c3 - v_c2, v_c2, v_c3, 0.0);
    let residual = rhs(circuit, bjt, &state)?.as_array();
    Ok(EquilibriumPoint {
        state,
        i_b_eq: root,
        residual,
    })
}

/// Right-hand side evaluated at the equilibrium state, per component.
pub fn equilibrium_residual(
    circuit: &CircuitParams,
    bjt: &BjtParams,
    eq: &EquilibriumPoint,
) -> Result<[f64; 4]> {
    Ok(rhs(circuit, bjt, &eq.state)?.as_array())
}

/// Safeguarded Newton: keeps a sign-changing bracket at all times and
/// bisects whenever the Newton step leaves it or fails to shrink the
/// bracket fast enough.
fn newton_bisect(
    g: &dyn Fn(f64) -> Result<f64>,
    g_prime: &dyn Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    mut g_lo: f64,
    _g_hi: f64,
    tol: f64,
) -> Result<f64> {
    const MAX_ITER: usize = 200;
    let scale = hi;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let gx = g(x)?;
        if gx == 0.0 {
            return Ok(x);
        }
        if (gx < 0.0) == (g_lo < 0.0) {
            lo = x;
            g_lo = gx;
        } else {
            hi = x;
        }
        if hi - lo <= tol * scale {
            return Ok(0.5 * (lo + hi));
        }
        let dgx = g_prime(x)?;
        let newton = x - gx / dgx;
        // One-sided Newton convergence never closes the far bracket edge;
        // a vanishing update is the other legitimate stopping condition.
        if newton > lo && newton < hi {
            if (newton - x).abs() <= 0.5 * tol * scale {
                return Ok(newton);
            }
            x = newton;
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    let best = 0.5 * (lo + hi);
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        best,
        residual: g(best).unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
// Frozen oracle constants keep every digit the oracle printed.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn ref_bjt() -> BjtParams {
        BjtParams::new(47.1e-12, 100.0, 0.7894, 0.02585).unwrap()
    }

    fn ref_circuit() -> CircuitParams {
        CircuitParams::new(2e-12, 2e-12, 0.1e-12, 0.753e-9, 5e3, 7e3, 500.0, 12.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn dead_transistor_closed_form_is_exact() {
        // I_S = 0: i_B = 0, v_C2 = 0, and the divider gives exactly 7.0 V.
        let mut bjt = ref_bjt();
        bjt.i_s = 0.0;
        let eq = solve_equilibrium(&ref_circuit(), &bjt, 1e-12).unwrap();
        assert_eq!(eq.i_b_eq, 0.0);
        assert_eq!(eq.state.v_c2, 0.0);
        assert_eq!(eq.state.v_c3, 7.0);
        assert_eq!(eq.state.v_c1, 7.0);
        assert_eq!(eq.state.i_l3, 0.0);
    }

    #[test]
    fn zero_supply_gives_all_zero_equilibrium() {
        let mut c = ref_circuit();
        c.v_cc = 0.0;
        let eq = solve_equilibrium(&c, &ref_bjt(), 1e-12).unwrap();
        assert_eq!(eq.i_b_eq, 0.0);
        assert_eq!(eq.state.as_array(), [0.0; 4]);
        assert_eq!(eq.residual, [0.0; 4]);
    }

    #[test]
    fn reference_operating_point_matches_oracle() {
        // Frozen 50-digit bisection oracle values for the reference circuit.
        let eq = solve_equilibrium(&ref_circuit(), &ref_bjt(), 1e-14).unwrap();
        assert!(rel(eq.i_b_eq, 1.1918354571940703e-4) < 1e-12);
        assert!(rel(eq.state.v_c1, 0.63361226615500793) < 1e-11);
        assert!(rel(eq.state.v_c2, 6.0187690588300549) < 1e-12);
        assert!(rel(eq.state.v_c3, 6.6523813249850628) < 1e-12);
    }

    #[test]
    fn upper_bracket_value_matches_oracle() {
        assert!(rel(i_b_upper(&ref_circuit(), &ref_bjt()), 1.3104524180967239e-4) < 1e-14);
    }

    #[test]
    fn voltage_identity_holds() {
        let eq = solve_equilibrium(&ref_circuit(), &ref_bjt(), 1e-12).unwrap();
        assert!(rel(eq.state.v_c1 + eq.state.v_c2, eq.state.v_c3) < 1e-12);
    }

    #[test]
    fn residual_is_small_on_solver_scales() {
        let circuit = ref_circuit();
        let bjt = ref_bjt();
        let eq = solve_equilibrium(&circuit, &bjt, 1e-12).unwrap();
        let scales = residual_scales(&circuit, &bjt);
        assert!(eq.scaled_residual_norm(&scales) < 1e-9);
    }

    #[test]
    fn residual_reports_linear_inductor_row_exactly() {
        // Perturbing i_L3 by delta moves the third residual by exactly delta/C3.
        let circuit = ref_circuit();
        let bjt = ref_bjt();
        let mut eq = solve_equilibrium(&circuit, &bjt, 1e-12).unwrap();
        eq.state.i_l3 = 1e-6;
        let r = equilibrium_residual(&circuit, &bjt, &eq).unwrap();
        assert_eq!(r[2], 1e-6 / circuit.c3);
    }

    #[test]
    fn monotone_in_supply_voltage() {
        let bjt = ref_bjt();
        let mut prev = 0.0;
        for i in 1..=12 {
            let mut c = ref_circuit();
            c.v_cc = i as f64;
            let eq = solve_equilibrium(&c, &bjt, 1e-12).unwrap();
            assert!(eq.i_b_eq >= prev);
            prev = eq.i_b_eq;
        }
    }

    #[test]
    fn newton_and_pure_bisection_agree() {
        // The safeguarded solver must land on the same root a blind
        // bisection finds; checked across a parameter sweep.
        let bjt = ref_bjt();
        for re in [1.0, 10.0, 100.0, 500.0, 5000.0] {
            let c = ref_circuit().with_r_e(re);
            let eq = solve_equilibrium(&c, &bjt, 1e-14).unwrap();
            let mut lo = 0.0;
            let mut hi = i_b_upper(&c, &bjt);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let g = mid - base_current(&bjt, v_c1_of(&c, &bjt, mid)).unwrap();
                if g > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!(rel(eq.i_b_eq, 0.5 * (lo + hi)) < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_tolerance() {
        assert!(solve_equilibrium(&ref_circuit(), &ref_bjt(), 0.0).is_err());
        assert!(solve_equilibrium(&ref_circuit(), &ref_bjt(), f64::NAN).is_err());
    }
}
