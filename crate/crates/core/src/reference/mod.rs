//! Continuous-kernel solutions for shifted-exponential kernels.
//!
//! Two independent formulations of the same dynamics:
//!
//! * [`solve_reference`] keeps the convolutions as integrals,
//!   `G(t) = int_sigma^t I(t - rho) l1 e^{-l1 (rho - sigma)} drho + c_I e^{-l1 (t - sigma)}`
//!   and the analogous `H(t)` over the past incidence, evaluated by composite
//!   Simpson on the solver's own knots. Every stage re-integrates the whole
//!   past, so the cost grows quadratically with the number of steps.
//! * [`solve_chain_oracle`] differentiates the convolutions instead:
//!   `G' = l1 (I(t - sigma) - G)` and `H' = l2 ([beta I S](t - theta) - H)`,
//!   giving an eight-equation system with two fixed lags.
//!
//! Both use the exact kernel means in the initial conditions and report `G`
//! and `H` at every knot as auxiliary columns.

mod oracle;
mod quadrature;

pub use oracle::{chain_rhs, solve_chain_oracle, solve_chain_oracle_with};
pub use quadrature::{solve_reference, solve_reference_with};

use crate::integrators::{SolveError, Trajectory};
use crate::kernels::KernelDensity;
use crate::model::{Compartment, ContactRate, HistoryData};
use quadrature::PanelCache;

/// Immunity (`phi`) and latency (`psi`) kernels of a continuous run.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernels {
    pub phi: KernelDensity,
    pub psi: KernelDensity,
}

impl Kernels {
    /// `phi`: shift 10 days, rate 0.1/day; `psi`: shift 5 days, rate 0.2/day.
    pub fn baseline() -> Self {
        Kernels {
            phi: KernelDensity::ShiftedExponential { shift: 10.0, rate: 0.1 },
            psi: KernelDensity::ShiftedExponential { shift: 5.0, rate: 0.2 },
        }
    }

    pub(crate) fn exponential(&self) -> Result<(ExpKernel, ExpKernel), SolveError> {
        Ok((ExpKernel::try_from(&self.phi)?, ExpKernel::try_from(&self.psi)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ExpKernel {
    pub shift: f64,
    pub rate: f64,
}

impl ExpKernel {
    pub fn mean(&self) -> f64 {
        self.shift + 1.0 / self.rate
    }
}

impl TryFrom<&KernelDensity> for ExpKernel {
    type Error = SolveError;

    fn try_from(k: &KernelDensity) -> Result<Self, SolveError> {
        match *k {
            KernelDensity::ShiftedExponential { shift, rate } => Ok(ExpKernel { shift, rate }),
            ref other => Err(SolveError::UnsupportedKernel(other.family_name())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    /// Returning flow from temporary immunity, convolving `I` with `phi`.
    G,
    /// Maturing latent flow, convolving `beta I S` with `psi`.
    H,
}

/// One convolution term: before `activation_time` (the kernel shift) it
/// equals `prehistory_value` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTerm {
    pub kind: TermKind,
    pub kernel: KernelDensity,
    pub prehistory_value: f64,
    pub activation_time: f64,
}

impl ConvolutionTerm {
    pub fn returning(phi: &KernelDensity, history: HistoryData) -> Result<Self, SolveError> {
        let k = ExpKernel::try_from(phi)?;
        Ok(ConvolutionTerm {
            kind: TermKind::G,
            kernel: phi.clone(),
            prehistory_value: history.c_i,
            activation_time: k.shift,
        })
    }

    pub fn maturing(psi: &KernelDensity, history: HistoryData, beta0: f64) -> Result<Self, SolveError> {
        let k = ExpKernel::try_from(psi)?;
        Ok(ConvolutionTerm {
            kind: TermKind::H,
            kernel: psi.clone(),
            prehistory_value: beta0 * history.c_i * history.c_s,
            activation_time: k.shift,
        })
    }

    /// Value at time `t` by quadrature over the stored trajectory.
    pub fn evaluate(&self, traj: &Trajectory, t: f64, beta: &ContactRate) -> Result<f64, SolveError> {
        let last = traj.last_time();
        if t > last || t.is_nan() {
            return Err(SolveError::BeyondTrajectory { t, last });
        }
        let k = ExpKernel::try_from(&self.kernel)?;
        let dense = traj.dense();
        let (s, i) = (Compartment::S.index(), Compartment::I.index());
        let mut cache = PanelCache::new(k, self.prehistory_value);
        match self.kind {
            TermKind::G => {
                let f = |u: f64| dense.eval(u, i);
                cache.sync(dense.times(), f);
                Ok(cache.value(t - k.shift, dense.times(), f))
            }
            TermKind::H => {
                let f = |u: f64| {
                    let (iu, su) = dense.eval_pair(u, i, s);
                    beta.at(u.max(0.0)) * iu * su
                };
                cache.sync(dense.times(), f);
                Ok(cache.value(t - k.shift, dense.times(), f))
            }
        }
    }
}

/// Returning flow `G(t)` of a stored trajectory under the immunity kernel.
pub fn eval_g(traj: &Trajectory, t: f64, phi: &KernelDensity) -> Result<f64, SolveError> {
    ConvolutionTerm::returning(phi, traj.prehistory())?.evaluate(traj, t, &ContactRate::Constant(0.0))
}

/// Maturing flow `H(t)` of a stored trajectory under the latency kernel.
pub fn eval_h(traj: &Trajectory, t: f64, psi: &KernelDensity, beta: &ContactRate) -> Result<f64, SolveError> {
    ConvolutionTerm::maturing(psi, traj.prehistory(), beta.at(0.0))?.evaluate(traj, t, beta)
}
