use super::{ExpKernel, Kernels};
use crate::integrators::{
    breakpoint_times, conservation_check, stepper, validate_horizon, AuxColumns, DenseHistory, SolveError,
    SolverOptions, Trajectory,
};
use crate::model::{self, Compartment, DelayedTerms, ModelParams, Seeding};

const S: usize = Compartment::S.index();
const I: usize = Compartment::I.index();

/// Integrand samples of one convolution on the accepted knots: the value at
/// every knot and at every panel midpoint, plus the kernel decay across each
/// panel.
pub(crate) struct PanelCache {
    rate: f64,
    prehistory: f64,
    knot: Vec<f64>,
    mid: Vec<f64>,
    decay: Vec<f64>,
    half_decay: Vec<f64>,
}

impl PanelCache {
    pub fn new(kernel: ExpKernel, prehistory: f64) -> Self {
        PanelCache {
            rate: kernel.rate,
            prehistory,
            knot: Vec::new(),
            mid: Vec::new(),
            decay: Vec::new(),
            half_decay: Vec::new(),
        }
    }

    /// Samples `f` on knots accepted since the last call.
    pub fn sync(&mut self, times: &[f64], f: impl Fn(f64) -> f64) {
        for k in self.knot.len()..times.len() {
            self.knot.push(f(times[k]));
            if k > 0 {
                let (a, b) = (times[k - 1], times[k]);
                self.mid.push(f(0.5 * (a + b)));
                self.decay.push((-self.rate * (b - a)).exp());
                self.half_decay.push((-self.rate * 0.5 * (b - a)).exp());
            }
        }
    }

    /// `int_0^u f(x) l e^{-l (u - x)} dx + prehistory * e^{-l u}`, or the
    /// pre-history value for `u <= 0`. Composite Simpson with one panel per
    /// knot interval; the partial panel ending at `u` samples `f` directly.
    pub fn value(&self, u: f64, times: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        if u <= 0.0 {
            return self.prehistory;
        }
        let m = times.partition_point(|&x| x <= u) - 1;
        debug_assert!(m < self.knot.len(), "quadrature beyond the sampled knots");
        let lam = self.rate;
        let d = u - times[m];
        let (mut acc, mut e) = (0.0, 1.0);
        if d > 0.0 {
            e = (-lam * d).exp();
            let h = (-lam * 0.5 * d).exp();
            acc = d / 6.0 * (self.knot[m] * e + 4.0 * f(times[m] + 0.5 * d) * h + f(u));
        }
        for k in (0..m).rev() {
            let w = times[k + 1] - times[k];
            acc += e * w / 6.0
                * (self.knot[k] * self.decay[k] + 4.0 * self.mid[k] * self.half_decay[k] + self.knot[k + 1]);
            e *= self.decay[k];
        }
        lam * acc + self.prehistory * e
    }
}

/// Solves the continuous-kernel system with quadrature convolutions.
pub fn solve_reference(
    params: &ModelParams,
    seeding: &Seeding,
    kernels: &Kernels,
    t_end: f64,
    step: f64,
) -> Result<Trajectory, SolveError> {
    solve_reference_with(params, seeding, kernels, t_end, &SolverOptions::with_step(step))
}

pub fn solve_reference_with(
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
    let y0 = init.state.to_array();
    let mut pre = y0;
    pre[S] = init.history.c_s;
    pre[I] = init.history.c_i;
    let beta = &params.beta;
    let beta0 = params.beta0();

    let breakpoints = breakpoint_times(options.breakpoints, &[psi.shift], &[phi.shift], t_end);
    let schedule = stepper::step_schedule(t_end, options.step, breakpoints);

    let mut g_cache = PanelCache::new(phi, init.history.c_i);
    let mut h_cache = PanelCache::new(psi, beta0 * init.history.c_i * init.history.c_s);
    // Stages sharing a time (k2/k3, and k4 with the next knot's derivative)
    // see the same history, so the convolutions are computed once per time.
    let mut memo = (f64::NAN, DelayedTerms::default());
    let mut computed: Vec<(f64, [f64; 2])> = Vec::with_capacity(2 * schedule.len());
    let rhs = |t: f64, y: &[f64; 6], hist: &DenseHistory<6>| {
        if t != memo.0 {
            let inf = |u: f64| hist.eval(u, I);
            let inc = |u: f64| {
                let (i, s) = hist.eval_pair(u, I, S);
                beta.at(u.max(0.0)) * i * s
            };
            g_cache.sync(hist.times(), inf);
            h_cache.sync(hist.times(), inc);
            let g = g_cache.value(t - phi.shift, hist.times(), inf);
            let h = h_cache.value(t - psi.shift, hist.times(), inc);
            memo = (t, DelayedTerms { returning: g, maturing: h });
            computed.push((t, [g, h]));
        }
        model::rhs_array(t, y, memo.1, params)
    };
    let mut conserve = conservation_check(init.state.total());
    let dense = stepper::integrate(y0, pre, &schedule, options.step, rhs, |t, y| conserve(t, y))?;

    let mut values = Vec::with_capacity(dense.len());
    let mut it = computed.iter();
    for &t in dense.times() {
        let row = it.find(|(s, _)| *s == t).expect("convolutions are evaluated at every knot");
        values.push(row.1);
    }
    let aux = AuxColumns { names: ["G", "H"], values };
    Ok(Trajectory::new(dense, init.history, Some(aux)))
}
