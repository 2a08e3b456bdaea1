//! Convergence and timing experiments: discrete-lag runs against a
//! continuous-kernel reference.

use std::fmt::{self, Write as _};
use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::integrators::{self, SolveError, SolverOptions, Trajectory};
use crate::kernels::{discretize, DiracComb, KernelDensity, KernelError, NodeRule};
use crate::model::{Compartment, ModelParams, Seeding};
use crate::reference::{self, Kernels};

/// Default sampling step (days) of the sup-norm error.
pub const ERROR_GRID_STEP: f64 = 0.1;

/// A kernel together with the truncation point and node rule used to
/// discretize it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub density: KernelDensity,
    pub truncation: f64,
    pub node_rule: NodeRule,
}

impl KernelSpec {
    pub fn comb(&self, j: usize) -> Result<DiracComb, KernelError> {
        discretize(&self.density, self.truncation, j, self.node_rule)
    }
}

/// Everything needed to run any of the solvers on the same problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ModelParams,
    pub seeding: Seeding,
    /// Immunity kernel.
    pub phi: KernelSpec,
    /// Latency kernel.
    pub psi: KernelSpec,
    pub t_end: f64,
    pub solver: SolverOptions,
}

impl Scenario {
    /// Baseline parameters, exponential kernels truncated at 86 days, midpoint
    /// nodes, one year at the default step.
    pub fn baseline() -> Self {
        let kernels = Kernels::baseline();
        let spec = |density| KernelSpec { density, truncation: 86.0, node_rule: NodeRule::Midpoint };
        Scenario {
            params: ModelParams::baseline(),
            seeding: Seeding::baseline(),
            phi: spec(kernels.phi),
            psi: spec(kernels.psi),
            t_end: 365.0,
            solver: SolverOptions::default(),
        }
    }

    pub fn kernels(&self) -> Kernels {
        Kernels { phi: self.phi.density.clone(), psi: self.psi.density.clone() }
    }

    pub fn with_horizon(&self, t_end: f64) -> Self {
        Scenario { t_end, ..self.clone() }
    }

    pub fn with_step(&self, step: f64) -> Self {
        Scenario { solver: SolverOptions { step, ..self.solver }, ..self.clone() }
    }

    /// Discrete run with `n_tau` latency lags and `n_rho` immunity lags.
    pub fn solve_discrete(&self, n_tau: usize, n_rho: usize) -> Result<Trajectory, SolveError> {
        let rho = self.phi.comb(n_rho)?;
        let tau = self.psi.comb(n_tau)?;
        integrators::solve_discrete_with(&self.params, &self.seeding, &rho, &tau, self.t_end, &self.solver)
    }

    pub fn solve_reference(&self, kind: ReferenceKind) -> Result<Trajectory, SolveError> {
        let kernels = self.kernels();
        match kind {
            ReferenceKind::ChainOracle => {
                reference::solve_chain_oracle_with(&self.params, &self.seeding, &kernels, self.t_end, &self.solver)
            }
            ReferenceKind::Quadrature => {
                reference::solve_reference_with(&self.params, &self.seeding, &kernels, self.t_end, &self.solver)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceKind {
    #[default]
    ChainOracle,
    Quadrature,
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceKind::ChainOracle => "chain-oracle",
            ReferenceKind::Quadrature => "quadrature",
        })
    }
}

/// Sample times `lo, lo + step, ...` up to and including `hi`.
pub fn sample_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if hi - ts[n] > 1e-9 * step {
        ts.push(hi);
    }
    ts
}

/// Per-compartment `max |a(t) - b(t)|` over a grid on `window`.
pub fn sup_norm_error(
    a: &Trajectory,
    b: &Trajectory,
    window: (f64, f64),
    grid_step: f64,
) -> Result<[f64; 6], SolveError> {
    let mut err = [0.0; 6];
    for t in sample_grid(window.0, window.1, grid_step) {
        let (x, y) = (a.state_at(t)?.to_array(), b.state_at(t)?.to_array());
        for c in 0..6 {
            err[c] = f64::max(err[c], (x[c] - y[c]).abs());
        }
    }
    Ok(err)
}

/// Per-compartment `max |a(t)|` over a grid on `window`.
pub fn sup_norm(a: &Trajectory, window: (f64, f64), grid_step: f64) -> Result<[f64; 6], SolveError> {
    let mut peak = [0.0; 6];
    for t in sample_grid(window.0, window.1, grid_step) {
        let x = a.state_at(t)?.to_array();
        for c in 0..6 {
            peak[c] = f64::max(peak[c], x[c].abs());
        }
    }
    Ok(peak)
}

fn relative(err: &[f64; 6], scale: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|c| if scale[c] > 0.0 { err[c] / scale[c] } else { err[c] })
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEntry {
    pub n_tau: usize,
    pub n_rho: usize,
    pub sup_err: [f64; 6],
    /// `sup_err` divided by the peak of the reference compartment.
    pub rel_sup_err: [f64; 6],
    pub wall_ms: f64,
    /// Set when the discrete run failed; errors are then NaN.
    pub failure: Option<String>,
}

impl ErrorEntry {
    pub fn rel_err(&self, c: Compartment) -> f64 {
        self.rel_sup_err[c.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMeta {
    pub kind: ReferenceKind,
    pub step: f64,
    pub wall_ms: f64,
    pub peak: [f64; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub entries: Vec<ErrorEntry>,
    pub reference_meta: ReferenceMeta,
}

pub const REPORT_HEADER: &str = "n_tau,n_rho,err_S,err_L,err_I,err_RT,err_RP,err_D,rel_err_I,wall_ms";

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        for e in &self.entries {
            write!(out, "{},{}", e.n_tau, e.n_rho)?;
            for v in e.sup_err {
                write!(out, ",{v:e}")?;
            }
            writeln!(out, ",{:e},{:.3}", e.rel_err(Compartment::I), e.wall_ms)?;
        }
        Ok(())
    }

    /// Observed order of the error on `c` in the number of latency lags.
    pub fn observed_order(&self, c: Compartment) -> f64 {
        let ok: Vec<&ErrorEntry> = self.entries.iter().filter(|e| e.failure.is_none()).collect();
        let n: Vec<f64> = ok.iter().map(|e| e.n_tau as f64).collect();
        let err: Vec<f64> = ok.iter().map(|e| e.rel_err(c)).collect();
        -log_log_slope(&n, &err)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// One reference run and one discrete run per `(n_tau, n_rho)` pair; the
/// discrete runs execute in parallel. A failed discrete run is recorded in
/// its entry, a failed reference run aborts the sweep.
pub fn convergence_sweep(
    scenario: &Scenario,
    pairs: &[(usize, usize)],
    kind: ReferenceKind,
) -> Result<ConvergenceReport, SolveError> {
    Ok(sweep_with_runs(scenario, pairs, kind)?.report)
}

/// A sweep together with the trajectories it compared.
pub struct SweepRuns {
    pub report: ConvergenceReport,
    pub reference: Trajectory,
    /// Discrete runs in report order; `None` where the run failed.
    pub runs: Vec<Option<Trajectory>>,
}

pub fn sweep_with_runs(
    scenario: &Scenario,
    pairs: &[(usize, usize)],
    kind: ReferenceKind,
) -> Result<SweepRuns, SolveError> {
    let start = Instant::now();
    let reference = scenario.solve_reference(kind)?;
    let wall_ms = millis(start);
    let window = (0.0, scenario.t_end);
    let peak = sup_norm(&reference, window, ERROR_GRID_STEP)?;

    let mut results: Vec<(ErrorEntry, Option<Trajectory>)> = pairs
        .par_iter()
        .map(|&(n_tau, n_rho)| {
            let start = Instant::now();
            let result = scenario.solve_discrete(n_tau, n_rho).and_then(|traj| {
                let err = sup_norm_error(&traj, &reference, window, ERROR_GRID_STEP)?;
                Ok((traj, err))
            });
            let wall_ms = millis(start);
            match result {
                Ok((traj, sup_err)) => {
                    let rel_sup_err = relative(&sup_err, &peak);
                    (ErrorEntry { n_tau, n_rho, sup_err, rel_sup_err, wall_ms, failure: None }, Some(traj))
                }
                Err(e) => {
                    let nan = [f64::NAN; 6];
                    let failure = Some(e.to_string());
                    (ErrorEntry { n_tau, n_rho, sup_err: nan, rel_sup_err: nan, wall_ms, failure }, None)
                }
            }
        })
        .collect();
    results.sort_by_key(|(e, _)| (e.n_tau, e.n_rho));
    let (entries, runs) = results.into_iter().unzip();
    Ok(SweepRuns {
        report: ConvergenceReport {
            entries,
            reference_meta: ReferenceMeta { kind, step: scenario.solver.step, wall_ms, peak },
        },
        reference,
        runs,
    })
}

/// Successive step halvings of one discrete run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStudy {
    pub steps: Vec<f64>,
    /// `diffs[k]`: largest relative sup-norm change over the compartments
    /// between `steps[k]` and `steps[k + 1]`.
    pub diffs: Vec<f64>,
}

impl StepStudy {
    /// `log2` of successive difference ratios.
    pub fn pairwise_orders(&self) -> Vec<f64> {
        self.diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    /// Least-squares order over all differences.
    pub fn fitted_order(&self) -> f64 {
        log_log_slope(&self.steps[..self.diffs.len()], &self.diffs)
    }
}

/// Runs the discrete model at `coarsest, coarsest / 2, ...` (`levels` runs)
/// and records how much each halving changes the solution.
pub fn step_halving(
    scenario: &Scenario,
    n_tau: usize,
    n_rho: usize,
    coarsest: f64,
    levels: usize,
) -> Result<StepStudy, SolveError> {
    let steps: Vec<f64> = (0..levels).map(|k| coarsest / 2f64.powi(k as i32)).collect();
    let runs =
        steps.par_iter().map(|&h| scenario.with_step(h).solve_discrete(n_tau, n_rho)).collect::<Result<Vec<_>, _>>()?;
    let window = (0.0, scenario.t_end);
    let scale = sup_norm(runs.last().expect("at least one level"), window, ERROR_GRID_STEP)?;
    let diffs = runs
        .windows(2)
        .map(|w| {
            let e = relative(&sup_norm_error(&w[0], &w[1], window, ERROR_GRID_STEP)?, &scale);
            Ok(e.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    Ok(StepStudy { steps, diffs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Discrete { n_tau: usize, n_rho: usize },
    ChainOracle,
    Quadrature,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Discrete { n_tau, n_rho } => write!(f, "discrete-{n_tau}-{n_rho}"),
            SolverKind::ChainOracle => f.write_str("chain-oracle"),
            SolverKind::Quadrature => f.write_str("quadrature"),
        }
    }
}

impl SolverKind {
    pub fn run(&self, scenario: &Scenario) -> Result<Trajectory, SolveError> {
        match *self {
            SolverKind::Discrete { n_tau, n_rho } => scenario.solve_discrete(n_tau, n_rho),
            SolverKind::ChainOracle => scenario.solve_reference(ReferenceKind::ChainOracle),
            SolverKind::Quadrature => scenario.solve_reference(ReferenceKind::Quadrature),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub solver: SolverKind,
    pub t_end: f64,
    pub step: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn wall_ms(&self, solver: SolverKind, t_end: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.solver == solver && r.t_end == t_end).map(|r| r.wall_ms)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "solver,t_end,step,wall_ms")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{:.3}", r.solver, r.t_end, r.step, r.wall_ms)?;
        }
        Ok(())
    }
}

/// Best of `repeats` wall-clock runs after one discarded warm-up run.
pub fn time_solver(scenario: &Scenario, solver: SolverKind, repeats: usize) -> Result<f64, SolveError> {
    solver.run(scenario)?;
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        std::hint::black_box(solver.run(scenario)?);
        best = best.min(millis(start));
    }
    Ok(best)
}

/// Times every solver at every horizon, sequentially, at the scenario step.
pub fn benchmark(
    scenario: &Scenario,
    solvers: &[SolverKind],
    horizons: &[f64],
    repeats: usize,
) -> Result<TimingTable, SolveError> {
    let mut table = TimingTable::default();
    for &t_end in horizons {
        let sc = scenario.with_horizon(t_end);
        for &solver in solvers {
            let wall_ms = time_solver(&sc, solver, repeats)?;
            table.rows.push(TimingRow { solver, t_end, step: sc.solver.step, wall_ms });
        }
    }
    Ok(table)
}

/// Plain-text record of a run: what was run and from which configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub mode: String,
    pub config_sha256: String,
    pub tool_version: String,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(mode: &str, config_text: &str, artifacts: Vec<String>) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        let config_sha256 = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        RunManifest {
            mode: mode.to_string(),
            config_sha256,
            tool_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            artifacts,
        }
    }
}

impl fmt::Display for RunManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode = {}", self.mode)?;
        writeln!(f, "config_sha256 = {}", self.config_sha256)?;
        writeln!(f, "tool_version = {}", self.tool_version)?;
        writeln!(
            f,
            "determinism = fixed-step solvers, no random numbers: identical configs give identical results \
             (wall-clock columns excepted)"
        )?;
        for a in &self.artifacts {
            writeln!(f, "artifact = {a}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::DenseHistory;
    use crate::model::HistoryData;

    fn quick() -> Scenario {
        Scenario::baseline().with_horizon(60.0).with_step(0.05)
    }

    #[test]
    fn grid_covers_the_window() {
        assert_eq!(sample_grid(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(sample_grid(0.0, 1.1, 0.5), vec![0.0, 0.5, 1.0, 1.1]);
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let traj = quick().solve_discrete(4, 8).unwrap();
        assert_eq!(sup_norm_error(&traj, &traj, (0.0, 60.0), 0.1).unwrap(), [0.0; 6]);
    }

    #[test]
    fn constant_shift_shows_up_in_one_compartment() {
        let hist = HistoryData { c_s: 1.0, c_i: 1.0 };
        let build = |shift: f64| {
            let mut d = DenseHistory::new([1.0; 6], 0.5);
            for k in 0..=20 {
                let t = k as f64 * 0.5;
                d.push(t, [1.0 + t, 2.0, 3.0 + shift, 4.0, 5.0, 6.0], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
            }
            Trajectory::new(d, hist, None)
        };
        let err = sup_norm_error(&build(0.0), &build(2.5), (0.0, 10.0), 0.1).unwrap();
        assert_eq!(err, [0.0, 0.0, 2.5, 0.0, 0.0, 0.0]);
        assert!(matches!(
            sup_norm_error(&build(0.0), &build(0.0), (0.0, 11.0), 0.1),
            Err(SolveError::BeyondTrajectory { .. })
        ));
    }

    #[test]
    fn slope_of_a_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((log_log_slope(&x, &y) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_sorted_and_deterministic() {
        let sc = quick();
        let pairs = [(10, 20), (1, 2), (4, 8)];
        let a = convergence_sweep(&sc, &pairs, ReferenceKind::ChainOracle).unwrap();
        let order: Vec<_> = a.entries.iter().map(|e| (e.n_tau, e.n_rho)).collect();
        assert_eq!(order, vec![(1, 2), (4, 8), (10, 20)]);
        let b = convergence_sweep(&sc, &[(4, 8)], ReferenceKind::ChainOracle).unwrap();
        assert_eq!(a.entries[1].sup_err, b.entries[0].sup_err);
        assert!(a.entries.iter().all(|e| e.failure.is_none()));
    }

    #[test]
    fn failed_runs_are_annotated() {
        let report = convergence_sweep(&quick(), &[(0, 2), (1, 2)], ReferenceKind::ChainOracle).unwrap();
        assert!(report.entries[0].failure.is_some());
        assert!(report.entries[0].sup_err[0].is_nan());
        assert!(report.entries[1].failure.is_none());
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with(REPORT_HEADER));
    }

    #[test]
    fn manifest_hashes_the_config() {
        let m = RunManifest::new("converge", "", vec![]);
        assert_eq!(m.config_sha256, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert!(m.to_string().contains("mode = converge"));
    }
}
