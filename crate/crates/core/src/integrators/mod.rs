//! Method-of-steps solver for the discrete-lag model.
//!
//! The solver is fixed-step classical Runge-Kutta with cubic Hermite dense
//! output. Every lag is at least four steps long, so each stage reads history
//! that has already been accepted and no implicit iteration is needed.
//!
//! The constant pre-history makes `I'` jump at `t = 0`. That jump reappears
//! as a kink of the right-hand side at every lag, and as a jump in a higher
//! derivative at sums of lags. A step straddling a kink loses two orders of
//! accuracy, so the step schedule includes these times as knots (see
//! [`Breakpoints`]).

pub mod dense;
pub mod stepper;
mod trajectory;

use thiserror::Error;

use crate::kernels::{DiracComb, KernelError};
use crate::model::{self, Compartment, DelayedTerms, ModelError, ModelParams, Seeding};
pub use dense::DenseHistory;
pub use trajectory::{eval_history, AuxColumns, Trajectory};

/// Default integration step (days).
pub const DEFAULT_STEP: f64 = 0.01;

/// Largest tolerated `|N(t) - N(0)| / N(0)` along a run.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("step {step} must be positive and at most {max} (a quarter of the shortest lag)")]
    StepTooLarge { step: f64, max: f64 },
    #[error("step must be positive and finite (got {0})")]
    InvalidStep(f64),
    #[error("horizon must be positive and finite (got {0})")]
    InvalidHorizon(f64),
    #[error("delay comb `{0}` is empty or has no positive lag")]
    InvalidComb(&'static str),
    #[error("solution became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("population drifted by {drift:e} (relative) at t = {t}")]
    ConservationDrift { t: f64, drift: f64 },
    #[error("t = {t} lies beyond the stored trajectory (last knot {last})")]
    BeyondTrajectory { t: f64, last: f64 },
    #[error("kernel family `{0}` is not supported by this solver")]
    UnsupportedKernel(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub(crate) fn validate_horizon(t_end: f64, step: f64, shortest_lag: f64) -> Result<(), SolveError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SolveError::InvalidHorizon(t_end));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SolveError::InvalidStep(step));
    }
    let max = shortest_lag / 4.0;
    if step > max {
        return Err(SolveError::StepTooLarge { step, max });
    }
    Ok(())
}

/// Aborts when the six compartments stop summing to their initial total.
pub(crate) fn conservation_check(n0: f64) -> impl FnMut(f64, &[f64]) -> Result<(), SolveError> {
    move |t, y| {
        let drift = (y[..6].iter().sum::<f64>() - n0).abs() / n0;
        if drift > CONSERVATION_TOLERANCE {
            Err(SolveError::ConservationDrift { t, drift })
        } else {
            Ok(())
        }
    }
}

/// Which derivative discontinuities are inserted into the step schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Breakpoints {
    /// Plain uniform grid.
    None,
    /// Every lag (kinks of the right-hand side).
    Lags,
    /// Every lag, and every latency lag added to any lag (jumps of the third
    /// derivative).
    #[default]
    LagSums,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub step: f64,
    pub breakpoints: Breakpoints,
}

impl SolverOptions {
    pub fn with_step(step: f64) -> Self {
        SolverOptions { step, breakpoints: Breakpoints::default() }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_step(DEFAULT_STEP)
    }
}

/// Discontinuity times in `(0, t_end]` generated by a jump at `t = 0`.
///
/// Latency lags feed the incidence term, which every compartment sees, so
/// second-generation points are a latency lag plus any lag.
pub(crate) fn breakpoint_times(mode: Breakpoints, latency: &[f64], other: &[f64], t_end: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = match mode {
        Breakpoints::None => return Vec::new(),
        Breakpoints::Lags | Breakpoints::LagSums => latency.iter().chain(other).copied().collect(),
    };
    if mode == Breakpoints::LagSums {
        for &a in latency {
            pts.extend(latency.iter().chain(other).map(|&b| a + b));
        }
    }
    pts.retain(|&t| t <= t_end);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    pts
}

const S: usize = Compartment::S.index();
const I: usize = Compartment::I.index();

/// Solves the discrete-lag system on `[0, t_end]`.
///
/// `comb_rho` discretizes the immunity kernel (weights `omega`, lags `rho`)
/// and `comb_tau` the latency kernel (weights `varpi`, lags `tau`). The
/// initial data use the comb first moments in place of the kernel means.
pub fn solve_discrete(
    params: &ModelParams,
    seeding: &Seeding,
    comb_rho: &DiracComb,
    comb_tau: &DiracComb,
    t_end: f64,
    step: f64,
) -> Result<Trajectory, SolveError> {
    solve_discrete_with(params, seeding, comb_rho, comb_tau, t_end, &SolverOptions::with_step(step))
}

pub fn solve_discrete_with(
    params: &ModelParams,
    seeding: &Seeding,
    comb_rho: &DiracComb,
    comb_tau: &DiracComb,
    t_end: f64,
    options: &SolverOptions,
) -> Result<Trajectory, SolveError> {
    let step = options.step;
    params.validate()?;
    for (name, comb) in [("rho", comb_rho), ("tau", comb_tau)] {
        if comb.is_empty() || !(comb.min_node() > 0.0) {
            return Err(SolveError::InvalidComb(name));
        }
    }
    let shortest = comb_rho.min_node().min(comb_tau.min_node());
    validate_horizon(t_end, step, shortest)?;

    let init = model::initial_conditions(params, seeding, comb_tau.mean(), comb_rho.mean())?;
    let y0 = init.state.to_array();
    let mut pre = y0;
    pre[S] = init.history.c_s;
    pre[I] = init.history.c_i;

    let breakpoints = breakpoint_times(options.breakpoints, &comb_tau.nodes, &comb_rho.nodes, t_end);
    let schedule = stepper::step_schedule(t_end, step, breakpoints);

    let (rho, omega) = (&comb_rho.nodes, &comb_rho.weights);
    let (tau, varpi) = (&comb_tau.nodes, &comb_tau.weights);
    let beta = &params.beta;
    // Stage times never decrease, so each lag keeps its own panel cursor.
    // Stages sharing a time (k2/k3, and k4 with the next knot's derivative)
    // read the same history, so the delayed terms are summed once per time.
    let mut rho_cursor = vec![0usize; rho.len()];
    let mut tau_cursor = vec![0usize; tau.len()];
    let mut memo = (f64::NAN, DelayedTerms::default());
    let rhs = |t: f64, y: &[f64; 6], hist: &DenseHistory<6>| {
        if t != memo.0 {
            let mut returning = 0.0;
            for ((&r, &w), cur) in rho.iter().zip(omega).zip(&mut rho_cursor) {
                returning += w * hist.eval_from(cur, t - r, I);
            }
            let mut maturing = 0.0;
            for ((&d, &w), cur) in tau.iter().zip(varpi).zip(&mut tau_cursor) {
                // the pre-history incidence uses the contact rate at t = 0
                let u = t - d;
                let (i, s) = hist.eval_pair_from(cur, u, I, S);
                maturing += w * beta.at(u.max(0.0)) * i * s;
            }
            memo = (t, DelayedTerms { returning, maturing });
        }
        model::rhs_array(t, y, memo.1, params)
    };
    let mut conserve = conservation_check(init.state.total());
    let dense = stepper::integrate(y0, pre, &schedule, step, rhs, |t, y| conserve(t, y))?;
    Ok(Trajectory::new(dense, init.history, None))
}
