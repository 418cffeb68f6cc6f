//! Jacobian construction, the exact linear-plus-nonlinear decomposition,
//! eigenvalue computation, and stability classification.
//!
//! The right-hand side splits exactly as
//!
//! ```text
//! dp/dt = J(p_eq) p + h(p)
//! ```
//!
//! where J is the analytic Jacobian evaluated at the equilibrium and h
//! carries the exponential remainder plus the linearization-compensation
//! term and the supply drive. The split is algebraically exact, not a
//! truncation, which the decomposition tests exploit.

use crate::equilibrium::EquilibriumPoint;
use crate::error::{Error, Result};
use crate::model::{base_current, BjtParams, CircuitParams, State};

pub use nalgebra::Complex;

/// Real 4x4 matrix (rows scale as state derivative per unit state).
pub type Matrix4 = nalgebra::Matrix4<f64>;

/// Stability classification of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Marginal,
    Unstable,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::Marginal => "marginal",
            Classification::Unstable => "unstable",
        })
    }
}

/// Eigenvalue analysis of the Jacobian at an equilibrium point.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Jacobian at the equilibrium state.
    pub jacobian: Matrix4,
    /// Eigenvalues in 1/seconds, sorted by descending real part, ties
    /// broken by descending imaginary part.
    pub eigenvalues: [Complex<f64>; 4],
    /// Real part of the leading eigenvalue.
    pub max_real_part: f64,
    /// Sign classification with a marginal zero-band.
    pub classification: Classification,
}

/// Default relative width of the marginal band: |max Re| below this
/// fraction of the spectral radius classifies as marginal.
pub const DEFAULT_ZERO_BAND_REL: f64 = 1e-3;

/// Derivative slope of the collector current, k = (eta I_S / V_T)
/// e^{eta v / V_T}, shared by the Jacobian and the compensation term.
fn current_slope(bjt: &BjtParams, v_be: f64) -> Result<f64> {
    if !v_be.is_finite() {
        return Err(Error::NonFiniteInput { context: "v_be" });
    }
    let x = bjt.eta * v_be / bjt.v_t;
    if x > bjt.exp_cap {
        return Err(Error::ExponentOverflow {
            exponent: x,
            cap: bjt.exp_cap,
        });
    }
    Ok(bjt.eta * bjt.i_s / bjt.v_t * x.exp())
}

/// Analytic Jacobian of the right-hand side at an arbitrary state.
///
/// Only the first column depends on the state (through v_C1); rows 3 and 4
/// are constant. Evaluated at the equilibrium it is the linearization used
/// for the eigenvalue analysis; evaluated along a trajectory it drives the
/// variational Lyapunov system.
pub fn jacobian(circuit: &CircuitParams, bjt: &BjtParams, p: &State) -> Result<Matrix4> {
    let g = circuit.bias_conductance();
    let k = current_slope(bjt, p.v_c1)?;
    Ok(Matrix4::new(
        -(g + k / bjt.beta) / circuit.c1,
        -g / circuit.c1,
        0.0,
        -1.0 / circuit.c1,
        -(g - k) / circuit.c2,
        -(g + 1.0 / circuit.r_e) / circuit.c2,
        0.0,
        -1.0 / circuit.c2,
        0.0,
        0.0,
        0.0,
        1.0 / circuit.c3,
        1.0 / circuit.l3,
        1.0 / circuit.l3,
        -1.0 / circuit.l3,
        0.0,
    ))
}

/// Nonlinear remainder h(p) of the exact decomposition
/// rhs(p) = jacobian(p_eq) p + h(p). Components 3 and 4 are identically
/// zero; components 1 and 2 hold the exponential remainder, the
/// compensation for the linearized device slope, and the supply drive.
pub fn nonlinearity(
    circuit: &CircuitParams,
    bjt: &BjtParams,
    p: &State,
    eq: &EquilibriumPoint,
) -> Result<State> {
    if !p.is_finite() {
        return Err(Error::NonFiniteInput { context: "state" });
    }
    let k_eq = current_slope(bjt, eq.state.v_c1)?;
    let i_b = base_current(bjt, p.v_c1)?;
    let bias = circuit.v_cc / circuit.r1;
    Ok(State::new(
        (-i_b + k_eq / bjt.beta * p.v_c1 + bias) / circuit.c1,
        (bjt.beta * i_b - k_eq * p.v_c1 + bias) / circuit.c2,
        0.0,
        0.0,
    ))
}

/// Parlett-Reinsch balancing: a diagonal similarity with power-of-two
/// scales (exact in floating point) that equalizes row and column norms.
/// The eigenvalues are unchanged; their computed accuracy improves when
/// entries span many orders of magnitude, as they do here (1e8 to 1e13).
fn balance(a: &mut Matrix4) {
    const RADIX: f64 = 2.0;
    const B2: f64 = RADIX * RADIX;
    loop {
        let mut converged = true;
        for i in 0..4 {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..4 {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= B2;
            }
            g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= B2;
            }
            if (c + r) / f < 0.95 * s {
                let inv = 1.0 / f;
                for j in 0..4 {
                    a[(i, j)] *= inv;
                }
                for j in 0..4 {
                    a[(j, i)] *= f;
                }
                converged = false;
            }
        }
        if converged {
            return;
        }
    }
}

/// Eigenvalues of a real 4x4 matrix, sorted by descending real part with
/// ties broken by descending imaginary part.
///
/// Method: power-of-two balancing followed by the implicit-shift QR
/// (Schur) iteration of a mature dense linear-algebra library. Complex
/// eigenvalues of the real input appear in conjugate pairs.
pub fn eigenvalues(m: &Matrix4) -> Result<[Complex<f64>; 4]> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput { context: "matrix" });
    }
    let mut balanced = *m;
    balance(&mut balanced);
    let schur = nalgebra::linalg::Schur::try_new(balanced, f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    let ev = schur.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    Ok(out)
}

/// Sign classification with a marginal band of `zero_band_rel` times the
/// spectral radius. The band takes precedence: a max real part inside it
/// is marginal even when strictly positive.
pub fn classify(max_real: f64, spectral_radius: f64, zero_band_rel: f64) -> Classification {
    if max_real.abs() <= zero_band_rel * spectral_radius {
        Classification::Marginal
    } else if max_real > 0.0 {
        Classification::Unstable
    } else {
        Classification::Stable
    }
}

/// Builds the full stability report at a solved equilibrium with the
/// default marginal band.
pub fn stability_report(
    circuit: &CircuitParams,
    bjt: &BjtParams,
    eq: &EquilibriumPoint,
) -> Result<StabilityReport> {
    stability_report_with_band(circuit, bjt, eq, DEFAULT_ZERO_BAND_REL)
}

/// Builds the stability report with an explicit marginal-band width.
pub fn stability_report_with_band(
    circuit: &CircuitParams,
    bjt: &BjtParams,
    eq: &EquilibriumPoint,
    zero_band_rel: f64,
) -> Result<StabilityReport> {
    let j = jacobian(circuit, bjt, &eq.state)?;
    let ev = eigenvalues(&j)?;
    let max_real_part = ev[0].re;
    let spectral_radius = ev.iter().map(|e| e.norm()).fold(0.0, f64::max);
    Ok(StabilityReport {
        jacobian: j,
        eigenvalues: ev,
        max_real_part,
        classification: classify(max_real_part, spectral_radius, zero_band_rel),
    })
}
