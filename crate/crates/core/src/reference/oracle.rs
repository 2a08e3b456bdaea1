use super::Kernels;
use crate::integrators::{
    breakpoint_times, conservation_check, stepper, validate_horizon, AuxColumns, DenseHistory, SolveError,
    SolverOptions, Trajectory,
};
use crate::model::{self, Compartment, DelayedTerms, ModelParams, Seeding};

const S: usize = Compartment::S.index();
const I: usize = Compartment::I.index();
const G: usize = 6;
const H: usize = 7;

/// Derivative of an exponentially weighted convolution: `rate * (lagged_input - current)`.
#[inline]
pub fn chain_rhs(lagged_input: f64, current: f64, rate: f64) -> f64 {
    rate * (lagged_input - current)
}

/// Solves the continuous-kernel system with `G` and `H` as extra state.
pub fn solve_chain_oracle(
    params: &ModelParams,
    seeding: &Seeding,
    kernels: &Kernels,
    t_end: f64,
    step: f64,
) -> Result<Trajectory, SolveError> {
    solve_chain_oracle_with(params, seeding, kernels, t_end, &SolverOptions::with_step(step))
}

pub fn solve_chain_oracle_with(
    params: &ModelParams,
    seeding: &Seeding,
    kernels: &Kernels,
    t_end: f64,
    options: &SolverOptions,
) -> Result<Trajectory, SolveError> {
    params.validate()?;
    let (phi, psi) = kernels.exponential()?;
    validate_horizon(t_end, options.step, phi.shift.min(psi.shift))?;

    let init = model::initial_conditions(params, seeding, psi.mean(), phi.mean())?;
    let hist0 = init.history;
    let (g0, h0) = (hist0.c_i, params.beta0() * hist0.c_i * hist0.c_s);
    let six = init.state.to_array();
    let y0: [f64; 8] = std::array::from_fn(|c| match c {
        G => g0,
        H => h0,
        _ => six[c],
    });
    let mut pre = y0;
    pre[S] = hist0.c_s;
    pre[I] = hist0.c_i;

    let breakpoints = breakpoint_times(options.breakpoints, &[psi.shift], &[phi.shift], t_end);
    let schedule = stepper::step_schedule(t_end, options.step, breakpoints);
    let beta = &params.beta;
    let rhs = |t: f64, y: &[f64; 8], hist: &DenseHistory<8>| {
        let lagged_i = hist.eval(t - phi.shift, I);
        let u = t - psi.shift;
        let (i, s) = hist.eval_pair(u, I, S);
        let lagged_inc = beta.at(u.max(0.0)) * i * s;
        let state: [f64; 6] = std::array::from_fn(|c| y[c]);
        let d = model::rhs_array(t, &state, DelayedTerms { returning: y[G], maturing: y[H] }, params);
        [d[0], d[1], d[2], d[3], d[4], d[5], chain_rhs(lagged_i, y[G], phi.rate), chain_rhs(lagged_inc, y[H], psi.rate)]
    };
    let mut conserve = conservation_check(init.state.total());
    let full = stepper::integrate(y0, pre, &schedule, options.step, rhs, |t, y| conserve(t, y))?;

    let first6 = |y: &[f64; 8]| -> [f64; 6] { std::array::from_fn(|c| y[c]) };
    let mut dense = DenseHistory::with_capacity(first6(full.prehistory()), options.step, full.len());
    for k in 0..full.len() {
        dense.push(full.times()[k], first6(full.value(k)), first6(full.deriv(k)));
    }
    let values = full.values().map(|y| [y[G], y[H]]).collect();
    Ok(Trajectory::new(dense, hist0, Some(AuxColumns { names: ["G", "H"], values })))
}
