//! Fixed-step classical Runge-Kutta for delay systems (method of steps).

use super::dense::DenseHistory;
use super::SolveError;

/// Step times `0 = t_0 < t_1 < ... = t_end`: the uniform grid `k * step`
/// with every breakpoint in `(0, t_end)` inserted. Breakpoints closer than
/// `1e-9 * step` to a grid point replace it.
pub fn step_schedule(t_end: f64, step: f64, breakpoints: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let n = (t_end / step).floor() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let tol = 1e-9 * step;
    if t_end - pts[n] > tol {
        pts.push(t_end);
    } else {
        pts[n] = t_end;
    }
    let mut extra: Vec<f64> = breakpoints.into_iter().filter(|&b| b > tol && b < t_end - tol).collect();
    extra.sort_by(f64::total_cmp);
    // merge, letting a breakpoint replace any interior grid point within `tol`
    let mut merged = Vec::with_capacity(pts.len() + extra.len());
    let mut extra = extra.into_iter().peekable();
    for (k, &p) in pts.iter().enumerate() {
        while let Some(&b) = extra.peek() {
            if b >= p - tol {
                break;
            }
            push_distinct(&mut merged, b, tol);
            extra.next();
        }
        let interior = k > 0 && k + 1 < pts.len();
        match extra.peek() {
            Some(&b) if interior && (b - p).abs() <= tol => {
                push_distinct(&mut merged, b, tol);
                extra.next();
            }
            _ => push_distinct(&mut merged, p, tol),
        }
    }
    merged
}

/// Appends `x` unless it lies within `tol` of the last point.
fn push_distinct(pts: &mut Vec<f64>, x: f64, tol: f64) {
    match pts.last() {
        Some(&last) if x - last <= tol => {}
        _ => pts.push(x),
    }
}

/// Integrates `y' = rhs(t, y, history)` over `schedule` with classical RK4.
///
/// `rhs` may read the history only at times not later than the left end of
/// the current step; the caller guarantees this by keeping every lag longer
/// than the largest step. The derivative stored with each knot is reused as
/// the first stage of the next step. `check` runs on every accepted state.
pub fn integrate<const D: usize, F, C>(
    y0: [f64; D],
    prehistory: [f64; D],
    schedule: &[f64],
    bucket_width: f64,
    mut rhs: F,
    mut check: C,
) -> Result<DenseHistory<D>, SolveError>
where
    F: FnMut(f64, &[f64; D], &DenseHistory<D>) -> [f64; D],
    C: FnMut(f64, &[f64; D]) -> Result<(), SolveError>,
{
    let mut hist = DenseHistory::with_capacity(prehistory, bucket_width, schedule.len());
    let t0 = schedule[0];
    let mut y = y0;
    let mut dy = rhs(t0, &y, &hist);
    ensure_finite(t0, &y, &dy)?;
    check(t0, &y)?;
    hist.push(t0, y, dy);

    for w in schedule.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        let h = t_next - t;
        let t_mid = t + 0.5 * h;
        let k1 = dy;
        let k2 = rhs(t_mid, &axpy(&y, 0.5 * h, &k1), &hist);
        let k3 = rhs(t_mid, &axpy(&y, 0.5 * h, &k2), &hist);
        let k4 = rhs(t_next, &axpy(&y, h, &k3), &hist);
        y = std::array::from_fn(|c| y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]));
        dy = rhs(t_next, &y, &hist);
        ensure_finite(t_next, &y, &dy)?;
        check(t_next, &y)?;
        hist.push(t_next, y, dy);
    }
    Ok(hist)
}

#[inline]
fn axpy<const D: usize>(y: &[f64; D], a: f64, k: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|c| y[c] + a * k[c])
}

fn ensure_finite<const D: usize>(t: f64, y: &[f64; D], dy: &[f64; D]) -> Result<(), SolveError> {
    if y.iter().chain(dy).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SolveError::NonFinite { t })
    }
}
