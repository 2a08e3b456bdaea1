//! Epidemiological parameters, compartment state, constant pre-history and the
//! right-hand side shared by the discrete-lag and continuous-kernel systems.
//!
//! Both systems have the same shape once the two delayed quantities are known:
//! the recovery return flow `G` (infected individuals weighted by the immunity
//! kernel) and the incidence leaving latency `H` (`beta * I * S` weighted by
//! the latency kernel). For the discrete model these are finite weighted sums
//! over lags; for the continuous model they are convolution integrals.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("infection fatality risk must be below 1 (got {0})")]
    FatalityRiskTooHigh(f64),
    #[error("susceptible balance denominator is not positive ({0})")]
    NonPositiveDenominator(f64),
    #[error("initial compartment {name} is negative ({value})")]
    NegativeCompartment { name: &'static str, value: f64 },
}

/// Contact rate `beta(t)`; constant unless a time profile is supplied.
#[derive(Clone)]
pub enum ContactRate {
    Constant(f64),
    Varying(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ContactRate {
    pub fn varying(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ContactRate::Varying(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            ContactRate::Constant(b) => *b,
            ContactRate::Varying(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ContactRate::Constant(_))
    }
}

impl fmt::Debug for ContactRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactRate::Constant(b) => write!(f, "Constant({b})"),
            ContactRate::Varying(_) => f.write_str("Varying(<fn>)"),
        }
    }
}

/// `mu = gamma * i_fr / (1 - i_fr)`.
pub fn derive_mu(gamma: f64, i_fr: f64) -> Result<f64, ModelError> {
    if i_fr >= 1.0 {
        return Err(ModelError::FatalityRiskTooHigh(i_fr));
    }
    if !(i_fr >= 0.0) {
        return Err(ModelError::InvalidParameter { name: "I_FR", value: i_fr, reason: "must lie in [0, 1)" });
    }
    Ok(gamma * i_fr / (1.0 - i_fr))
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub beta: ContactRate,
    /// Recovery rate (1/day).
    pub gamma: f64,
    /// Disease death rate (1/day).
    pub mu: f64,
    /// Fraction of recoveries that are only temporarily immune.
    pub p: f64,
    /// Infection fatality risk.
    pub i_fr: f64,
    /// Initial population.
    pub n0: f64,
}

impl ModelParams {
    /// Parameters with the death rate derived from the fatality risk.
    pub fn new(beta: ContactRate, gamma: f64, i_fr: f64, p: f64, n0: f64) -> Result<Self, ModelError> {
        let mu = derive_mu(gamma, i_fr)?;
        let params = ModelParams { beta, gamma, mu, p, i_fr, n0 };
        params.validate()?;
        Ok(params)
    }

    /// Population 1e7, beta = 0.5 / N, gamma = 0.1, I_FR = 0.425, p = 0.9.
    pub fn baseline() -> Self {
        let n0 = 1e7;
        ModelParams::new(ContactRate::Constant(0.5 / n0), 0.1, 0.425, 0.9, n0).expect("table values are valid")
    }

    /// Contact rate at time zero, used by the initial data and the pre-history.
    pub fn beta0(&self) -> f64 {
        self.beta.at(0.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let nonneg = |name, value: f64| {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, value, reason: "must be finite and non-negative" })
            }
        };
        nonneg("gamma", self.gamma)?;
        nonneg("mu", self.mu)?;
        nonneg("beta0", self.beta0())?;
        if !(0.0..=1.0).contains(&self.p) {
            return Err(ModelError::InvalidParameter { name: "p", value: self.p, reason: "must lie in [0, 1]" });
        }
        if self.i_fr >= 1.0 {
            return Err(ModelError::FatalityRiskTooHigh(self.i_fr));
        }
        if !(self.i_fr >= 0.0) {
            return Err(ModelError::InvalidParameter { name: "I_FR", value: self.i_fr, reason: "must lie in [0, 1)" });
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(ModelError::InvalidParameter { name: "N0", value: self.n0, reason: "must be positive" });
        }
        Ok(())
    }
}

/// Compartment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    S,
    L,
    I,
    RT,
    RP,
    D,
}

impl Compartment {
    pub const ALL: [Compartment; 6] =
        [Compartment::S, Compartment::L, Compartment::I, Compartment::RT, Compartment::RP, Compartment::D];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::L => "L",
            Compartment::I => "I",
            Compartment::RT => "RT",
            Compartment::RP => "RP",
            Compartment::D => "D",
        }
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Individuals in each of the six compartments (or their time derivatives).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompartmentState {
    pub s: f64,
    pub l: f64,
    pub i: f64,
    pub r_t: f64,
    pub r_p: f64,
    pub d: f64,
}

impl CompartmentState {
    pub fn from_array(a: [f64; 6]) -> Self {
        CompartmentState { s: a[0], l: a[1], i: a[2], r_t: a[3], r_p: a[4], d: a[5] }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.s, self.l, self.i, self.r_t, self.r_p, self.d]
    }

    pub fn get(&self, c: Compartment) -> f64 {
        self.to_array()[c.index()]
    }

    pub fn total(&self) -> f64 {
        self.s + self.l + self.i + self.r_t + self.r_p + self.d
    }
}

/// Constant pre-history: `S(t) = c_s` and `I(t) = c_i` for all `t <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryData {
    pub c_s: f64,
    pub c_i: f64,
}

/// User-facing seeding of an outbreak. `c_s = None` picks the susceptible
/// history that balances the population, i.e. `c_s = S(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seeding {
    pub c_i: f64,
    pub c_s: Option<f64>,
}

impl Seeding {
    pub fn balanced(c_i: f64) -> Self {
        Seeding { c_i, c_s: None }
    }

    pub fn baseline() -> Self {
        Seeding::balanced(10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    pub state: CompartmentState,
    pub history: HistoryData,
}

/// Initial compartments from the constant pre-history.
///
/// `psi_mean` is the mean latency and `phi_mean` the mean duration of
/// temporary immunity (for discrete runs, the comb first moments). With a
/// balanced seeding,
/// `S(0) = (N0 - c_i - c_i p gamma phi_mean - (1 - p) gamma c_i psi_mean) / (1 + beta0 c_i psi_mean)`;
/// with a fixed `c_s` the latent compartment uses `c_s` and `S(0)` closes the
/// population balance. `D(0) = 0` in both cases.
pub fn initial_conditions(
    params: &ModelParams,
    seeding: &Seeding,
    psi_mean: f64,
    phi_mean: f64,
) -> Result<InitialData, ModelError> {
    params.validate()?;
    for (name, value) in [("psi_mean", psi_mean), ("phi_mean", phi_mean)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ModelError::InvalidParameter { name, value, reason: "mean delay must be positive" });
        }
    }
    let c_i = seeding.c_i;
    if !(c_i >= 0.0 && c_i.is_finite()) {
        return Err(ModelError::InvalidParameter { name: "c_I", value: c_i, reason: "must be non-negative" });
    }
    let (beta0, gamma, p, n0) = (params.beta0(), params.gamma, params.p, params.n0);
    let r_t = c_i * p * gamma * phi_mean;
    let r_p = (1.0 - p) * gamma * c_i * psi_mean;
    let (s, l) = match seeding.c_s {
        None => {
            let denom = 1.0 + beta0 * c_i * psi_mean;
            if !(denom > 0.0) {
                return Err(ModelError::NonPositiveDenominator(denom));
            }
            let s = (n0 - c_i - r_t - r_p) / denom;
            (s, beta0 * c_i * s * psi_mean)
        }
        Some(c_s) => {
            if !(c_s > 0.0 && c_s.is_finite()) {
                return Err(ModelError::InvalidParameter { name: "c_S", value: c_s, reason: "must be positive" });
            }
            let l = beta0 * c_i * c_s * psi_mean;
            (n0 - l - c_i - r_t - r_p, l)
        }
    };
    let state = CompartmentState { s, l, i: c_i, r_t, r_p, d: 0.0 };
    for c in Compartment::ALL {
        let value = state.get(c);
        if value < 0.0 || !value.is_finite() {
            return Err(ModelError::NegativeCompartment { name: c.name(), value });
        }
    }
    let c_s = seeding.c_s.unwrap_or(s);
    Ok(InitialData { state, history: HistoryData { c_s, c_i } })
}

/// The two delayed quantities entering the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayedTerms {
    /// Infected individuals weighted by the immunity kernel (`G`).
    pub returning: f64,
    /// Past incidence `beta * I * S` weighted by the latency kernel (`H`).
    pub maturing: f64,
}

/// Time derivatives of the six compartments given the delayed quantities.
#[inline]
pub fn rhs_array(t: f64, y: &[f64; 6], delayed: DelayedTerms, params: &ModelParams) -> [f64; 6] {
    let [s, _, i, _, _, _] = *y;
    let incidence = params.beta.at(t) * i * s;
    let pg = params.p * params.gamma;
    [
        -incidence + pg * delayed.returning,
        incidence - delayed.maturing,
        delayed.maturing - (params.gamma + params.mu) * i,
        pg * i - pg * delayed.returning,
        (1.0 - params.p) * params.gamma * i,
        params.mu * i,
    ]
}

/// Right-hand side with the delayed quantities already convolved.
pub fn rhs_from_convolutions(
    t: f64,
    current: &CompartmentState,
    delayed: DelayedTerms,
    params: &ModelParams,
) -> CompartmentState {
    CompartmentState::from_array(rhs_array(t, &current.to_array(), delayed, params))
}

/// Right-hand side of the discrete-lag system.
///
/// `lagged_i[k]` is `I(t - rho_k)` with weight `omega[k]`; `lagged_inc[k]` is
/// `(beta I S)(t - tau_k)` with weight `varpi[k]`.
pub fn rhs_discrete(
    t: f64,
    current: &CompartmentState,
    lagged_i: &[f64],
    omega: &[f64],
    lagged_inc: &[f64],
    varpi: &[f64],
    params: &ModelParams,
) -> CompartmentState {
    debug_assert_eq!(lagged_i.len(), omega.len());
    debug_assert_eq!(lagged_inc.len(), varpi.len());
    let returning = lagged_i.iter().zip(omega).map(|(v, w)| v * w).sum();
    let maturing = lagged_inc.iter().zip(varpi).map(|(v, w)| v * w).sum();
    rhs_from_convolutions(t, current, DelayedTerms { returning, maturing }, params)
}
