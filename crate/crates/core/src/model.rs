//! Device and circuit parameterization, the exponential BJT current laws,
//! the nonlinear state-space right-hand side, and the I-V exponential fitter.
//!
//! The device model is the large-signal exponential law
//!
//! ```text
//! i_C = I_S (e^{eta v_BE / V_T} - 1),    i_B = i_C / beta,    v_BE = v_C1
//! ```
//!
//! with the slope factor eta applied in every exponential so that the
//! analytic Jacobian and the nonlinear remainder decompose the right-hand
//! side exactly (see the stability module).

use crate::error::{Error, Result};

/// Large-signal BJT parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BjtParams {
    /// Saturation current I_S in amperes. Zero switches the device off and
    /// makes the circuit a passive linear network.
    pub i_s: f64,
    /// Forward current gain beta = i_C / i_B.
    pub beta: f64,
    /// Exponential slope factor eta (dimensionless).
    pub eta: f64,
    /// Thermal voltage V_T in volts.
    pub v_t: f64,
    /// Cap on the exponent eta*v_be/v_t; larger arguments raise
    /// [`Error::ExponentOverflow`] instead of producing infinity
    /// (e^x overflows f64 near x = 709.8).
    pub exp_cap: f64,
}

impl BjtParams {
    /// Default exponent cap, safely below the f64 overflow threshold.
    pub const DEFAULT_EXP_CAP: f64 = 700.0;

    /// Builds a parameter set with the default exponent cap and validates it.
    pub fn new(i_s: f64, beta: f64, eta: f64, v_t: f64) -> Result<Self> {
        let p = BjtParams {
            i_s,
            beta,
            eta,
            v_t,
            exp_cap: Self::DEFAULT_EXP_CAP,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the type invariants.
    pub fn validate(&self) -> Result<()> {
        check_finite_nonneg("i_s", self.i_s)?;
        check_finite_pos("beta", self.beta)?;
        check_finite_pos("eta", self.eta)?;
        check_finite_pos("v_t", self.v_t)?;
        check_finite_pos("exp_cap", self.exp_cap)?;
        Ok(())
    }
}

/// Circuit component values (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Divider capacitances in farads.
    pub c1: f64,
    pub c2: f64,
    /// Series tank capacitance in farads.
    pub c3: f64,
    /// Tank inductance in henries.
    pub l3: f64,
    /// Bias resistances in ohms.
    pub r1: f64,
    pub r2: f64,
    /// Emitter resistance in ohms (the chaos-boundary sweep parameter).
    pub r_e: f64,
    /// Supply voltage in volts.
    pub v_cc: f64,
}

impl CircuitParams {
    /// Builds and validates a parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c1: f64,
        c2: f64,
        c3: f64,
        l3: f64,
        r1: f64,
        r2: f64,
        r_e: f64,
        v_cc: f64,
    ) -> Result<Self> {
        let p = CircuitParams {
            c1,
            c2,
            c3,
            l3,
            r1,
            r2,
            r_e,
            v_cc,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the type invariants.
    pub fn validate(&self) -> Result<()> {
        check_finite_pos("c1", self.c1)?;
        check_finite_pos("c2", self.c2)?;
        check_finite_pos("c3", self.c3)?;
        check_finite_pos("l3", self.l3)?;
        check_finite_pos("r1", self.r1)?;
        check_finite_pos("r2", self.r2)?;
        check_finite_pos("r_e", self.r_e)?;
        if !self.v_cc.is_finite() {
            return Err(Error::InvalidParam {
                name: "v_cc",
                reason: "must be finite",
                value: self.v_cc,
            });
        }
        Ok(())
    }

    /// Parallel bias conductance 1/R1 + 1/R2 in siemens.
    pub fn bias_conductance(&self) -> f64 {
        1.0 / self.r1 + 1.0 / self.r2
    }

    /// Returns a copy with a different emitter resistance (sweep helper).
    pub fn with_r_e(&self, r_e: f64) -> Self {
        CircuitParams { r_e, ..*self }
    }
}

/// State vector p = [v_C1, v_C2, v_C3, i_L3]: three capacitor voltages in
/// volts and the inductor current in amperes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub v_c1: f64,
    pub v_c2: f64,
    pub v_c3: f64,
    pub i_l3: f64,
}

impl State {
    pub fn new(v_c1: f64, v_c2: f64, v_c3: f64, i_l3: f64) -> Self {
        State {
            v_c1,
            v_c2,
            v_c3,
            i_l3,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.v_c1, self.v_c2, self.v_c3, self.i_l3]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        State::new(a[0], a[1], a[2], a[3])
    }

    /// True when every component is a finite real number.
    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }

    /// Component accessor by identifier.
    pub fn component(&self, c: Component) -> f64 {
        match c {
            Component::VC1 => self.v_c1,
            Component::VC2 => self.v_c2,
            Component::VC3 => self.v_c3,
            Component::IL3 => self.i_l3,
        }
    }
}

impl From<[f64; 4]> for State {
    fn from(a: [f64; 4]) -> Self {
        State::from_array(a)
    }
}

impl From<State> for [f64; 4] {
    fn from(s: State) -> Self {
        s.as_array()
    }
}

/// Identifier for one state-vector component (phase projections, CLI).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    VC1,
    VC2,
    VC3,
    IL3,
}

impl Component {
    /// CSV/CLI name of the component.
    pub fn name(&self) -> &'static str {
        match self {
            Component::VC1 => "v_c1",
            Component::VC2 => "v_c2",
            Component::VC3 => "v_c3",
            Component::IL3 => "i_l3",
        }
    }
}

impl std::str::FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "v_c1" => Ok(Component::VC1),
            "v_c2" => Ok(Component::VC2),
            "v_c3" => Ok(Component::VC3),
            "i_l3" => Ok(Component::IL3),
            other => Err(format!(
                "unknown state component `{other}` (expected v_c1, v_c2, v_c3, or i_l3)"
            )),
        }
    }
}

/// One measured I-V point for the exponential fitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvSample {
    /// Base-emitter voltage in volts.
    pub v_be: f64,
    /// Measured DC collector current in amperes. Only strictly positive
    /// samples are usable (the fit runs in the log domain).
    pub i_dc: f64,
}

/// Checked exponent eta*v_be/v_t shared by every exponential evaluation.
fn exp_arg(bjt: &BjtParams, v_be: f64) -> Result<f64> {
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
    Ok(x)
}

/// Collector current i_C = I_S (e^{eta v_be / V_T} - 1).
///
/// Strictly increasing in `v_be`, lower-bounded by -I_S. Computed as
/// beta * base_current so that `base_current * beta == collector_current`
/// holds bitwise (shared evaluation path).
pub fn collector_current(bjt: &BjtParams, v_be: f64) -> Result<f64> {
    Ok(base_current(bjt, v_be)? * bjt.beta)
}

/// Base current i_B = i_C / beta = (I_S/beta)(e^{eta v_be / V_T} - 1).
///
/// `exp_m1` keeps the value exact near v_be = 0.
pub fn base_current(bjt: &BjtParams, v_be: f64) -> Result<f64> {
    let x = exp_arg(bjt, v_be)?;
    Ok(bjt.i_s / bjt.beta * x.exp_m1())
}

/// Nonlinear state-space right-hand side:
///
/// ```text
/// dv_C1/dt = (1/C1) (-(v_C1+v_C2)(1/R1+1/R2) - i_L3 - i_B     + V_CC/R1)
/// dv_C2/dt = (1/C2) (-(v_C1+v_C2)(1/R1+1/R2) - v_C2/R_E - i_L3 + beta i_B + V_CC/R1)
/// dv_C3/dt = i_L3 / C3
/// di_L3/dt = (v_C1 + v_C2 - v_C3) / L3
/// ```
///
/// with i_B = base_current(v_C1).
pub fn rhs(circuit: &CircuitParams, bjt: &BjtParams, p: &State) -> Result<State> {
    if !p.is_finite() {
        return Err(Error::NonFiniteInput { context: "state" });
    }
    let g = circuit.bias_conductance();
    let i_b = base_current(bjt, p.v_c1)?;
    let bias = circuit.v_cc / circuit.r1;
    let shunt = -(p.v_c1 + p.v_c2) * g;
    Ok(State::new(
        (shunt - p.i_l3 - i_b + bias) / circuit.c1,
        (shunt - p.v_c2 / circuit.r_e - p.i_l3 + bjt.beta * i_b + bias) / circuit.c2,
        p.i_l3 / circuit.c3,
        (p.v_c1 + p.v_c2 - p.v_c3) / circuit.l3,
    ))
}

/// Resonant-tank mode for [`resonant_frequency`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TankMode {
    /// Capacitive divider only: Cs = C1 C2 / (C1 + C2).
    TwoCap,
    /// Full series tank: Cs = 1 / (1/C1 + 1/C2 + 1/C3).
    ThreeCap,
}

impl std::str::FromStr for TankMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "two-cap" => Ok(TankMode::TwoCap),
            "three-cap" => Ok(TankMode::ThreeCap),
            other => Err(format!(
                "unknown tank mode `{other}` (expected two-cap or three-cap)"
            )),
        }
    }
}

/// Small-signal resonant frequency 1/(2 pi sqrt(L3 Cs)) in hertz.
///
/// The two-cap mode uses the capacitive-divider series combination; the
/// three-cap mode includes the series tank capacitor. The circuit values
/// used here resonate near 5.8 GHz in two-cap mode and near 19 GHz in
/// three-cap mode; both are reported because the distinction matters.
pub fn resonant_frequency(circuit: &CircuitParams, mode: TankMode) -> f64 {
    let cs = match mode {
        TankMode::TwoCap => circuit.c1 * circuit.c2 / (circuit.c1 + circuit.c2),
        TankMode::ThreeCap => 1.0 / (1.0 / circuit.c1 + 1.0 / circuit.c2 + 1.0 / circuit.c3),
    };
    1.0 / (2.0 * std::f64::consts::PI * (circuit.l3 * cs).sqrt())
}

/// Fits i_dc = i_s e^{eta v_be / v_t} by unweighted least squares on
/// ln(i_dc) = ln(i_s) + (eta/v_t) v_be.
///
/// Samples with i_dc <= 0 or non-finite fields are rejected (the log is
/// undefined there); at least two usable samples with distinct v_be must
/// remain. The -1 of the full current law is neglected, which is exact on
/// data generated from the fitted form and standard practice for diode
/// fits well above the thermal voltage.
pub fn fit_exponential(samples: &[IvSample], v_t: f64) -> Result<(f64, f64)> {
    check_finite_pos("v_t", v_t)?;
    let usable: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.v_be.is_finite() && s.i_dc.is_finite() && s.i_dc > 0.0)
        .map(|s| (s.v_be, s.i_dc.ln()))
        .collect();
    if usable.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let v_mean = usable.iter().map(|(v, _)| v).sum::<f64>() / n;
    let y_mean = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    // Centered normal equations: immune to the large common offset of v_be.
    let mut svv = 0.0;
    let mut svy = 0.0;
    for (v, y) in &usable {
        let dv = v - v_mean;
        svv += dv * dv;
        svy += dv * (y - y_mean);
    }
    if svv == 0.0 {
        return Err(Error::DegenerateFit {
            v_be: v_mean,
            got: usable.len(),
        });
    }
    let slope = svy / svv;
    let eta = slope * v_t;
    let i_s = (y_mean - slope * v_mean).exp();
    Ok((i_s, eta))
}

fn check_finite_pos(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidParam {
            name,
            reason: "must be finite and > 0",
            value,
        });
    }
    Ok(())
}

fn check_finite_nonneg(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::InvalidParam {
            name,
            reason: "must be finite and >= 0",
            value,
        });
    }
    Ok(())
}
