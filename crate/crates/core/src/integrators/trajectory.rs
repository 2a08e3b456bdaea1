use std::io::{self, Write};

use super::dense::DenseHistory;
use super::SolveError;
use crate::model::{Compartment, CompartmentState, HistoryData};

/// Auxiliary per-knot columns (the convolution values `G` and `H` of the
/// reference solvers).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxColumns {
    pub names: [&'static str; 2],
    pub values: Vec<[f64; 2]>,
}

/// Dense solution of the six compartments on `[0, t_end]` together with its
/// constant pre-history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dense: DenseHistory<6>,
    history: HistoryData,
    aux: Option<AuxColumns>,
}

impl Trajectory {
    pub(crate) fn new(dense: DenseHistory<6>, history: HistoryData, aux: Option<AuxColumns>) -> Self {
        debug_assert!(dense.times().first() == Some(&0.0));
        if let Some(aux) = &aux {
            assert_eq!(aux.values.len(), dense.len(), "one auxiliary row per knot");
        }
        Trajectory { dense, history, aux }
    }

    pub fn times(&self) -> &[f64] {
        self.dense.times()
    }

    pub fn len(&self) -> usize {
        self.dense.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        self.dense.last_time().unwrap_or(0.0)
    }

    pub fn prehistory(&self) -> HistoryData {
        self.history
    }

    pub fn aux(&self) -> Option<&AuxColumns> {
        self.aux.as_ref()
    }

    /// State stored at knot `k`.
    pub fn state(&self, k: usize) -> CompartmentState {
        CompartmentState::from_array(*self.dense.value(k))
    }

    /// Derivative stored at knot `k`.
    pub fn deriv(&self, k: usize) -> CompartmentState {
        CompartmentState::from_array(*self.dense.deriv(k))
    }

    pub fn initial_state(&self) -> CompartmentState {
        self.state(0)
    }

    pub fn final_state(&self) -> CompartmentState {
        self.state(self.len() - 1)
    }

    pub(crate) fn dense(&self) -> &DenseHistory<6> {
        &self.dense
    }

    /// Value of one compartment at any `t` up to the last knot; see
    /// [`eval_history`].
    pub fn eval(&self, t: f64, component: Compartment) -> Result<f64, SolveError> {
        eval_history(self, t, component)
    }

    pub fn state_at(&self, t: f64) -> Result<CompartmentState, SolveError> {
        self.check_range(t)?;
        Ok(CompartmentState::from_array(self.dense.eval_all(t)))
    }

    fn check_range(&self, t: f64) -> Result<(), SolveError> {
        let last = self.last_time();
        if t > last || t.is_nan() {
            Err(SolveError::BeyondTrajectory { t, last })
        } else {
            Ok(())
        }
    }

    /// Largest `|N(t_k) - N(0)| / N(0)` over the knots.
    pub fn max_relative_drift(&self) -> f64 {
        let n0 = self.initial_state().total();
        self.dense.values().map(|y| (y.iter().sum::<f64>() - n0).abs() / n0).fold(0.0, f64::max)
    }

    /// Knot time and value of the largest stored value of `component`.
    pub fn peak(&self, component: Compartment) -> (f64, f64) {
        let c = component.index();
        self.dense.values().zip(self.times()).map(|(y, &t)| (t, y[c])).fold((0.0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
    }

    /// CSV with header `t,S,L,I,RT,RP,D,N` (plus auxiliary columns when
    /// requested and present), one row every `stride` knots and always the
    /// final knot.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize, with_aux: bool) -> io::Result<()> {
        let stride = stride.max(1);
        let aux = self.aux.as_ref().filter(|_| with_aux);
        write!(out, "t,S,L,I,RT,RP,D,N")?;
        if let Some(aux) = aux {
            write!(out, ",{},{}", aux.names[0], aux.names[1])?;
        }
        writeln!(out)?;
        let last = self.len() - 1;
        for (k, (&t, y)) in self.times().iter().zip(self.dense.values()).enumerate() {
            if k % stride != 0 && k != last {
                continue;
            }
            let n: f64 = y.iter().sum();
            write!(out, "{t},{},{},{},{},{},{},{n}", y[0], y[1], y[2], y[3], y[4], y[5])?;
            if let Some(aux) = aux {
                write!(out, ",{},{}", aux.values[k][0], aux.values[k][1])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Value of `component` at time `t`.
///
/// For `t <= 0` the constant pre-history is returned (`c_s` for `S`, `c_i`
/// for `I`, the initial value for the other compartments). Inside the stored
/// range the cubic Hermite interpolant of the knot values and derivatives is
/// used; asking beyond the last knot is an error.
pub fn eval_history(traj: &Trajectory, t: f64, component: Compartment) -> Result<f64, SolveError> {
    traj.check_range(t)?;
    Ok(traj.dense.eval(t, component.index()))
}
