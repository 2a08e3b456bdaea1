//! Delay-kernel densities and their discretization into weighted Dirac combs.
//!
//! A kernel is a probability density on a delay axis whose support starts at a
//! strictly positive delay. [`discretize`] splits `[support_lo, M]` into `j`
//! equal subintervals, assigns each subinterval its exact probability mass as a
//! weight and places the point mass at a node inside the subinterval. Mass
//! beyond `M` is not redistributed; it is reported as
//! [`DiracComb::truncation_mass`].

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

/// Tolerance on the total mass of a tabulated density after normalization.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("truncation point {truncation_point} must exceed the support start {support_lo}")]
    TruncationBelowSupport { truncation_point: f64, support_lo: f64 },
    #[error("the number of subintervals must be at least 1")]
    ZeroSubintervals,
    #[error("invalid kernel: {0}")]
    Invalid(String),
    #[error("tabulated abscissae must be strictly increasing (violated at index {index})")]
    NonMonotoneAbscissae { index: usize },
    #[error("{0} kernels have no closed-form tail bound; supply the truncation point explicitly")]
    NoClosedFormTail(&'static str),
    #[error("kernel has no finite first moment")]
    UndefinedMoment,
    #[error("tail bound and tolerance must be positive (got bound {bound}, epsilon {epsilon})")]
    InvalidTailBound { bound: f64, epsilon: f64 },
}

/// Where the point mass of each subinterval is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeRule {
    #[default]
    Midpoint,
    Left,
    Right,
}

impl NodeRule {
    pub const ALL: [NodeRule; 3] = [NodeRule::Midpoint, NodeRule::Left, NodeRule::Right];

    fn place(self, lo: f64, hi: f64) -> f64 {
        match self {
            NodeRule::Midpoint => 0.5 * (lo + hi),
            NodeRule::Left => lo,
            NodeRule::Right => hi,
        }
    }
}

impl fmt::Display for NodeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            NodeRule::Midpoint => "midpoint",
            NodeRule::Left => "left",
            NodeRule::Right => "right",
        })
    }
}

impl FromStr for NodeRule {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "midpoint" => Ok(NodeRule::Midpoint),
            "left" => Ok(NodeRule::Left),
            "right" => Ok(NodeRule::Right),
            other => {
                Err(KernelError::Invalid(format!("unknown node rule `{other}` (expected midpoint, left or right)")))
            }
        }
    }
}

/// Piecewise-linear density given by samples on a strictly increasing grid.
///
/// Samples are rescaled at construction so the density integrates to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, KernelError> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(KernelError::Invalid(format!(
                "tabulated kernel needs at least two samples and matching lengths (got {} abscissae, {} values)",
                xs.len(),
                ys.len()
            )));
        }
        if let Some(index) = (1..xs.len()).find(|&k| xs[k].partial_cmp(&xs[k - 1]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(KernelError::NonMonotoneAbscissae { index });
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(KernelError::Invalid("tabulated kernel has non-finite samples".into()));
        }
        if xs[0] <= 0.0 {
            return Err(KernelError::Invalid(format!(
                "tabulated support must start at a positive delay (got {})",
                xs[0]
            )));
        }
        if ys.iter().any(|&y| y < 0.0) {
            return Err(KernelError::Invalid("tabulated density has negative values".into()));
        }
        let mut tab = TabulatedDensity { xs, ys };
        let total = tab.integrate(tab.xs[0], *tab.xs.last().unwrap(), |_| 1.0);
        if total <= 0.0 {
            return Err(KernelError::Invalid("tabulated density has zero mass".into()));
        }
        tab.ys.iter_mut().for_each(|y| *y /= total);
        Ok(tab)
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn density(&self, x: f64) -> f64 {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if x < lo || x > hi {
            return 0.0;
        }
        let k = self.xs.partition_point(|&a| a <= x).clamp(1, self.xs.len() - 1) - 1;
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let s = (x - x0) / (x1 - x0);
        self.ys[k] + s * (self.ys[k + 1] - self.ys[k])
    }

    /// Composite Simpson of `g * density` over `[a, b]`, one panel per linear
    /// piece. Exact whenever `g` is a polynomial of degree two or less.
    fn integrate(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.xs.len() - 1 {
            let lo = self.xs[k].max(a);
            let hi = self.xs[k + 1].min(b);
            if hi <= lo {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            total += (hi - lo) / 6.0
                * (g(lo) * self.density(lo) + 4.0 * g(mid) * self.density(mid) + g(hi) * self.density(hi));
        }
        total
    }
}

/// A delay probability density with strictly positive support start.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelDensity {
    /// Constant density on `[lo, hi]`.
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `rate * exp(-rate * (x - shift))` for `x >= shift`, zero elsewhere.
    ShiftedExponential {
        shift: f64,
        rate: f64,
    },
    Tabulated(TabulatedDensity),
}

impl KernelDensity {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, KernelError> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(KernelError::Invalid(format!("uniform kernel needs 0 < lo < hi < inf (got [{lo}, {hi}])")));
        }
        Ok(KernelDensity::Uniform { lo, hi })
    }

    pub fn shifted_exponential(shift: f64, rate: f64) -> Result<Self, KernelError> {
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(KernelError::Invalid(format!(
                "shifted exponential needs a positive finite shift (got {shift})"
            )));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(KernelError::Invalid(format!("shifted exponential needs a positive finite rate (got {rate})")));
        }
        Ok(KernelDensity::ShiftedExponential { shift, rate })
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, KernelError> {
        TabulatedDensity::new(xs, ys).map(KernelDensity::Tabulated)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            KernelDensity::Uniform { .. } => "uniform",
            KernelDensity::ShiftedExponential { .. } => "shifted-exponential",
            KernelDensity::Tabulated(_) => "tabulated",
        }
    }

    pub fn support_lo(&self) -> f64 {
        match self {
            KernelDensity::Uniform { lo, .. } => *lo,
            KernelDensity::ShiftedExponential { shift, .. } => *shift,
            KernelDensity::Tabulated(t) => t.xs[0],
        }
    }

    /// Upper end of the support; `f64::INFINITY` for the exponential family.
    pub fn support_hi(&self) -> f64 {
        match self {
            KernelDensity::Uniform { hi, .. } => *hi,
            KernelDensity::ShiftedExponential { .. } => f64::INFINITY,
            KernelDensity::Tabulated(t) => *t.xs.last().unwrap(),
        }
    }

    /// Rate of the exponential family, `None` otherwise.
    pub fn rate(&self) -> Option<f64> {
        match self {
            KernelDensity::ShiftedExponential { rate, .. } => Some(*rate),
            _ => None,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            KernelDensity::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            KernelDensity::ShiftedExponential { shift, rate } => {
                if x >= *shift {
                    rate * (-rate * (x - shift)).exp()
                } else {
                    0.0
                }
            }
            KernelDensity::Tabulated(t) => t.density(x),
        }
    }

    /// Probability mass of `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            KernelDensity::Uniform { lo, hi } => {
                let len = b.min(*hi) - a.max(*lo);
                if len > 0.0 {
                    len / (hi - lo)
                } else {
                    0.0
                }
            }
            KernelDensity::ShiftedExponential { shift, rate } => {
                let a = a.max(*shift);
                if b <= a {
                    return 0.0;
                }
                // exp(-r(a-s)) - exp(-r(b-s)) without cancellation
                -(-rate * (a - shift)).exp() * (-rate * (b - a)).exp_m1()
            }
            KernelDensity::Tabulated(t) => t.integrate(a, b, |_| 1.0),
        }
    }

    /// Probability mass strictly beyond `m`.
    pub fn tail_mass(&self, m: f64) -> f64 {
        match self {
            KernelDensity::Uniform { hi, .. } => self.mass_between(m, *hi),
            KernelDensity::ShiftedExponential { shift, rate } => (-rate * (m.max(*shift) - shift)).exp(),
            KernelDensity::Tabulated(t) => t.integrate(m, *t.xs.last().unwrap(), |_| 1.0),
        }
    }

    /// Expectation of `g` against the density restricted to `[a, b]`, by
    /// composite Simpson with `panels` panels per smooth piece.
    pub fn expectation_on(&self, a: f64, b: f64, panels: usize, g: impl Fn(f64) -> f64) -> f64 {
        let simpson = |lo: f64, hi: f64| {
            let n = panels.max(2) + panels % 2;
            let h = (hi - lo) / n as f64;
            let f = |x: f64| g(x) * self.density(x);
            let mut sum = f(lo) + f(hi);
            for k in 1..n {
                let x = lo + k as f64 * h;
                sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            sum * h / 3.0
        };
        match self {
            KernelDensity::Tabulated(t) => (0..t.xs.len() - 1)
                .map(|k| (t.xs[k].max(a), t.xs[k + 1].min(b)))
                .filter(|(lo, hi)| hi > lo)
                .map(|(lo, hi)| simpson(lo, hi))
                .sum(),
            _ => {
                let lo = a.max(self.support_lo());
                let hi = b.min(self.support_hi());
                if hi > lo {
                    simpson(lo, hi)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Weighted point masses approximating a kernel on `[grid[0], grid[j]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracComb {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Breakpoints `d_0 < d_1 < ... < d_j`.
    pub grid: Vec<f64>,
    /// Kernel mass beyond the last breakpoint, dropped from the comb.
    pub truncation_mass: f64,
}

impl DiracComb {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Discrete first moment `sum(weight * node)`.
    pub fn mean(&self) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    pub fn min_node(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn integrate(&self, test_fn: impl Fn(f64) -> f64) -> f64 {
        comb_integrate(self, test_fn)
    }

    /// Two-column CSV with header `node,weight`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "node,weight")?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            writeln!(out, "{x},{w}")?;
        }
        Ok(())
    }
}

/// Equally spaced breakpoints `support_lo + i (M - support_lo) / j`, `i = 0..=j`.
pub fn build_grid(kernel: &KernelDensity, truncation_point: f64, j: usize) -> Result<Vec<f64>, KernelError> {
    let lo = kernel.support_lo();
    if !(truncation_point > lo) || !truncation_point.is_finite() {
        return Err(KernelError::TruncationBelowSupport { truncation_point, support_lo: lo });
    }
    if j == 0 {
        return Err(KernelError::ZeroSubintervals);
    }
    let width = truncation_point - lo;
    let mut grid: Vec<f64> = (0..=j).map(|i| lo + i as f64 * width / j as f64).collect();
    grid[j] = truncation_point;
    Ok(grid)
}

pub fn discretize(
    kernel: &KernelDensity,
    truncation_point: f64,
    j: usize,
    node_rule: NodeRule,
) -> Result<DiracComb, KernelError> {
    let grid = build_grid(kernel, truncation_point, j)?;
    let (nodes, weights) =
        grid.windows(2).map(|cell| (node_rule.place(cell[0], cell[1]), kernel.mass_between(cell[0], cell[1]))).unzip();
    Ok(DiracComb { nodes, weights, grid, truncation_mass: kernel.tail_mass(truncation_point) })
}

/// Integral of `test_fn` against the comb measure.
pub fn comb_integrate(comb: &DiracComb, test_fn: impl Fn(f64) -> f64) -> f64 {
    comb.nodes.iter().zip(&comb.weights).map(|(&x, &w)| test_fn(x) * w).sum()
}

/// Smallest truncation point `M` with `bound_h * tail_mass(M) <= epsilon` for
/// the shifted-exponential family: `M = shift + ln(bound_h / epsilon) / rate`,
/// never below the support start.
pub fn truncation_bound(kernel: &KernelDensity, bound_h: f64, epsilon: f64) -> Result<f64, KernelError> {
    let KernelDensity::ShiftedExponential { shift, rate } = kernel else {
        return Err(KernelError::NoClosedFormTail(kernel.family_name()));
    };
    if !(bound_h > 0.0 && epsilon > 0.0) {
        return Err(KernelError::InvalidTailBound { bound: bound_h, epsilon });
    }
    Ok(shift + (bound_h / epsilon).ln().max(0.0) / rate)
}

pub fn mean_delay(kernel: &KernelDensity) -> Result<f64, KernelError> {
    let mean = match kernel {
        KernelDensity::Uniform { lo, hi } => 0.5 * (lo + hi),
        KernelDensity::ShiftedExponential { shift, rate } => shift + 1.0 / rate,
        KernelDensity::Tabulated(t) => t.integrate(t.xs[0], *t.xs.last().unwrap(), |x| x),
    };
    if mean.is_finite() {
        Ok(mean)
    } else {
        Err(KernelError::UndefinedMoment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi() -> KernelDensity {
        KernelDensity::shifted_exponential(10.0, 0.1).unwrap()
    }

    #[test]
    fn grid_matches_formula() {
        let k = phi();
        assert_eq!(build_grid(&k, 86.0, 2).unwrap(), vec![10.0, 48.0, 86.0]);
        assert_eq!(build_grid(&k, 86.0, 1).unwrap(), vec![10.0, 86.0]);
        assert_eq!(build_grid(&k, 86.0, 4).unwrap(), vec![10.0, 29.0, 48.0, 67.0, 86.0]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        let k = phi();
        assert!(matches!(build_grid(&k, 10.0, 2), Err(KernelError::TruncationBelowSupport { .. })));
        assert!(matches!(build_grid(&k, 5.0, 2), Err(KernelError::TruncationBelowSupport { .. })));
        assert_eq!(build_grid(&k, 86.0, 0), Err(KernelError::ZeroSubintervals));
    }

    #[test]
    fn uniform_weights_are_equal() {
        let k = KernelDensity::uniform(10.0, 86.0).unwrap();
        for j in [1, 3, 8, 17] {
            let comb = discretize(&k, 86.0, j, NodeRule::Midpoint).unwrap();
            assert_eq!(comb.truncation_mass, 0.0);
            for w in &comb.weights {
                assert!((w - 1.0 / j as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exponential_single_cell() {
        let comb = discretize(&phi(), 86.0, 1, NodeRule::Midpoint).unwrap();
        let tail = (-7.6f64).exp();
        assert!((comb.weights[0] - (1.0 - tail)).abs() < 1e-15);
        assert!((comb.weights[0] - 0.99950).abs() < 5e-6);
        assert!((comb.truncation_mass - tail).abs() < 1e-18);
    }

    #[test]
    fn exponential_two_cells() {
        let comb = discretize(&phi(), 86.0, 2, NodeRule::Midpoint).unwrap();
        let (a, b) = ((-3.8f64).exp(), (-7.6f64).exp());
        assert!((comb.weights[0] - (1.0 - a)).abs() < 1e-15);
        assert!((comb.weights[1] - (a - b)).abs() < 1e-15);
        assert_eq!(comb.nodes, vec![29.0, 67.0]);
    }

    #[test]
    fn node_rules_place_nodes() {
        let k = phi();
        let left = discretize(&k, 86.0, 4, NodeRule::Left).unwrap();
        let right = discretize(&k, 86.0, 4, NodeRule::Right).unwrap();
        assert_eq!(left.nodes, vec![10.0, 29.0, 48.0, 67.0]);
        assert_eq!(right.nodes, vec![29.0, 48.0, 67.0, 86.0]);
    }

    #[test]
    fn comb_integrates_constant_and_mean() {
        let k = KernelDensity::uniform(10.0, 86.0).unwrap();
        let comb = discretize(&k, 86.0, 64, NodeRule::Midpoint).unwrap();
        assert!((comb_integrate(&comb, |_| 1.0) - 1.0).abs() < 1e-14);
        // midpoint rule is exact for linear test functions on a uniform density
        assert!((comb_integrate(&comb, |x| x) - 48.0).abs() < 1e-12);

        let wide = discretize(&phi(), 400.0, 4096, NodeRule::Midpoint).unwrap();
        assert!((comb_integrate(&wide, |x| x) - 20.0).abs() < 1e-3);
    }

    #[test]
    fn truncation_bound_values() {
        let m = truncation_bound(&phi(), 1e9, 1.0).unwrap();
        assert!((m - (10.0 + 10.0 * 1e9f64.ln())).abs() < 1e-12);
        assert!((m - 217.23).abs() < 5e-3);
        assert_eq!(truncation_bound(&phi(), 1.0, 1.0).unwrap(), 10.0);
        let psi = KernelDensity::shifted_exponential(5.0, 0.2).unwrap();
        assert!((truncation_bound(&psi, 1e9, 1.0).unwrap() - 108.6).abs() < 5e-2);
        // the bound certifies the tail
        assert!(1e9 * psi.tail_mass(truncation_bound(&psi, 1e9, 1.0).unwrap()) <= 1.0 + 1e-9);
    }

    #[test]
    fn truncation_bound_errors() {
        let u = KernelDensity::uniform(1.0, 2.0).unwrap();
        assert_eq!(truncation_bound(&u, 1e9, 1.0), Err(KernelError::NoClosedFormTail("uniform")));
        assert!(matches!(truncation_bound(&phi(), 0.0, 1.0), Err(KernelError::InvalidTailBound { .. })));
        assert!(matches!(truncation_bound(&phi(), 1.0, -1.0), Err(KernelError::InvalidTailBound { .. })));
    }

    #[test]
    fn mean_delay_values() {
        assert_eq!(mean_delay(&phi()).unwrap(), 20.0);
        let psi = KernelDensity::shifted_exponential(5.0, 0.2).unwrap();
        assert_eq!(mean_delay(&psi).unwrap(), 10.0);
        assert_eq!(mean_delay(&KernelDensity::uniform(10.0, 86.0).unwrap()).unwrap(), 48.0);
        let tri = KernelDensity::tabulated(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!((mean_delay(&tri).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tabulated_validation() {
        assert_eq!(
            KernelDensity::tabulated(vec![1.0, 3.0, 2.0], vec![1.0, 1.0, 1.0]),
            Err(KernelError::NonMonotoneAbscissae { index: 2 })
        );
        assert!(KernelDensity::tabulated(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(KernelDensity::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(KernelDensity::tabulated(vec![1.0, 2.0], vec![-1.0, 1.0]).is_err());
        assert!(KernelDensity::tabulated(vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn tabulated_is_normalized() {
        let k = KernelDensity::tabulated(vec![2.0, 4.0, 7.0, 9.0], vec![3.0, 5.0, 1.0, 0.5]).unwrap();
        assert!((k.mass_between(2.0, 9.0) - 1.0).abs() < MASS_TOLERANCE);
        let comb = discretize(&k, 8.0, 5, NodeRule::Midpoint).unwrap();
        assert!((comb.total_weight() + comb.truncation_mass - 1.0).abs() < MASS_TOLERANCE);
    }

    #[test]
    fn comb_csv() {
        let comb = discretize(&KernelDensity::uniform(1.0, 3.0).unwrap(), 3.0, 2, NodeRule::Midpoint).unwrap();
        let mut buf = Vec::new();
        comb.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "node,weight\n1.5,0.5\n2.5,0.5\n");
    }

    #[test]
    fn doubling_the_window_squares_the_tail() {
        let k = phi();
        for width in [1.0, 5.0, 17.5, 40.0] {
            let t1 = k.tail_mass(10.0 + width);
            let t2 = k.tail_mass(10.0 + 2.0 * width);
            assert!((t2 - t1 * t1).abs() <= 1e-15 * t1.max(1e-300));
        }
    }

    /// Independent reference: the exact integral of x^2 against the uniform density.
    fn uniform_second_moment(lo: f64, hi: f64) -> f64 {
        (hi.powi(3) - lo.powi(3)) / (3.0 * (hi - lo))
    }

    #[test]
    fn compact_support_comb_converges_with_midpoint_order() {
        let k = KernelDensity::uniform(10.0, 86.0).unwrap();
        let exact = uniform_second_moment(10.0, 86.0);
        let errs: Vec<f64> = (1..=8)
            .map(|p| {
                let comb = discretize(&k, 86.0, 1 << p, NodeRule::Midpoint).unwrap();
                (comb_integrate(&comb, |x| x * x) - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(errs[7] < 1e-4 * exact);
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9);
        }
    }

    proptest! {
        #[test]
        fn weights_and_tail_sum_to_one(
            shift in 0.1f64..50.0,
            rate in 0.01f64..2.0,
            extra in 0.1f64..300.0,
            j in 1usize..600,
        ) {
            let k = KernelDensity::shifted_exponential(shift, rate).unwrap();
            let comb = discretize(&k, shift + extra, j, NodeRule::Midpoint).unwrap();
            prop_assert!((comb.total_weight() + comb.truncation_mass - 1.0).abs() < 1e-12);
            prop_assert!((comb.truncation_mass - (-rate * extra).exp()).abs() <= 1e-15);
        }

        #[test]
        fn nodes_lie_in_their_cells(
            lo in 0.1f64..20.0,
            extra in 0.5f64..100.0,
            j in 1usize..200,
            rule in prop_oneof![Just(NodeRule::Midpoint), Just(NodeRule::Left), Just(NodeRule::Right)],
        ) {
            let k = KernelDensity::uniform(lo, lo + extra).unwrap();
            let comb = discretize(&k, lo + extra, j, rule).unwrap();
            prop_assert_eq!(comb.grid[0], lo);
            for i in 0..j {
                prop_assert!(comb.grid[i] < comb.grid[i + 1]);
                prop_assert!(comb.nodes[i] >= comb.grid[i] && comb.nodes[i] <= comb.grid[i + 1]);
                prop_assert!(comb.weights[i] >= 0.0);
            }
            prop_assert!((comb.total_weight() + comb.truncation_mass - 1.0).abs() < 1e-12);
        }
    }
}
