//! State-space model and analysis toolkit for a Clapp oscillator with an
//! exponential-law bipolar transistor.
//!
//! The crate covers the full chain from device data to chaos metrics:
//!
//! - [`model`]: parameters, state vector, device law, the four-dimensional
//!   right-hand side, resonant-frequency estimates, and exponential
//!   I-V fitting.
//! - [`equilibrium`]: reduction of the fixed-point condition to one scalar
//!   transcendental equation in the base current and its safeguarded
//!   Newton solution.
//! - [`stability`]: analytic Jacobian, the exact linear-plus-remainder
//!   decomposition of the right-hand side, eigenvalues, and the
//!   stable/marginal/unstable classification.
//! - [`integrate`]: adaptive Dormand-Prince 5(4) integration with dense
//!   output sampling and strict failure semantics.
//! - [`chaos`]: eigenvalue sweeps over the emitter resistance, bisection
//!   for the instability boundary, and the Benettin largest-Lyapunov
//!   estimator.
//!
//! All operations are pure functions over immutable parameter structs and
//! are safe to run concurrently. Numeric failure is always an explicit
//! [`Error`], never a NaN leaking through a result.

pub mod chaos;
pub mod equilibrium;
pub mod error;
pub mod integrate;
pub mod model;
pub mod stability;

pub use chaos::{
    find_instability_boundary, largest_lyapunov, sweep_re, LyapunovEstimate, SweepEntry,
    SweepPoint, SweepResult, TracePoint,
};
pub use equilibrium::{residual_scales, solve_equilibrium, EquilibriumPoint};
pub use error::{Error, Result};
pub use integrate::{
    phase_projection, simulate, IntegratorConfig, StepStats, Trajectory, STEP_FLOOR,
};
pub use model::{
    base_current, collector_current, fit_exponential, resonant_frequency, rhs, BjtParams,
    CircuitParams, Component, IvSample, State, TankMode,
};
pub use stability::{
    eigenvalues, jacobian, nonlinearity, stability_report, stability_report_with_band,
    Classification, Complex, Matrix4, StabilityReport,
};
