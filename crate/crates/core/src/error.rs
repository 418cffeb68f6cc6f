//! Error types shared by every analysis stage.
//!
//! Numeric routines return `Result` rather than silently saturating: an
//! exponential overflow inside an integrator step, for example, must be
//! distinguishable from genuine divergence of the trajectory.

use crate::chaos::TracePoint;
use crate::integrate::Trajectory;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated a type invariant (non-positive capacitance,
    /// zero thermal voltage, malformed tolerance, ...).
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParam {
        name: &'static str,
        reason: &'static str,
        value: f64,
    },

    /// An input state or sample contained NaN or infinity.
    #[error("non-finite input: {context}")]
    NonFiniteInput { context: &'static str },

    /// The exponent eta*v_be/v_t exceeded the configured cap.
    /// Saturating to infinity is forbidden; the caller decides how to react.
    #[error("exponent overflow: eta*v_be/v_t = {exponent:.3e} exceeds cap {cap:.3e}")]
    ExponentOverflow { exponent: f64, cap: f64 },

    /// Fewer usable samples than the fitter needs.
    #[error("too few usable samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    /// All sample abscissae coincide; the regression design is singular.
    #[error("degenerate fit: all {got} usable samples share v_be = {v_be}")]
    DegenerateFit { v_be: f64, got: usize },

    /// A bracketing root- or boundary-finder found no sign change.
    #[error("no sign change on [{lo:.6e}, {hi:.6e}]: f(lo) = {f_lo:.6e}, f(hi) = {f_hi:.6e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// An iterative solver hit its iteration cap.
    #[error("no convergence after {iterations} iterations: best = {best:.17e}, residual = {residual:.3e}")]
    NoConvergence {
        iterations: usize,
        best: f64,
        residual: f64,
    },

    /// The adaptive integrator reduced the step below the hard floor.
    #[error("step underflow at t = {time:.6e} s: step {step:.3e} s below floor {floor:.3e} s")]
    StepUnderflow { time: f64, step: f64, floor: f64 },

    /// The eigensolver failed to converge (not expected for 4x4 input).
    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    /// Integration stopped mid-run. Carries the partial trajectory up to the
    /// failure time and the underlying cause.
    #[error("integration aborted at t = {time:.6e} s: {reason}")]
    IntegrationAborted {
        time: f64,
        reason: Box<Error>,
        partial: Box<Trajectory>,
    },

    /// A Lyapunov run stopped mid-horizon. Carries the running-estimate
    /// trace accumulated before the failure.
    #[error("lyapunov estimation aborted at t = {time:.6e} s: {reason}")]
    LyapunovAborted {
        time: f64,
        reason: Box<Error>,
        trace: Vec<TracePoint>,
    },
}

impl Error {
    /// True for errors caused by caller-supplied values (exit code 1 at the
    /// CLI); false for numeric/convergence failures (exit code 2).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParam { .. }
                | Error::NonFiniteInput { .. }
                | Error::TooFewSamples { .. }
                | Error::DegenerateFit { .. }
                | Error::NoSignChange { .. }
        )
    }
}
