//! Command-line front end: read a run configuration, dispatch one mode,
//! write CSV (and SVG) artifacts.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use crate::config::{Mode, RunConfig, BASELINE_CFG};
use crate::harness::{self, KernelSpec, ReferenceKind, RunManifest, Scenario, SolverKind};
use crate::integrators::Trajectory;
use crate::kernels::{comb_integrate, NodeRule};
use crate::model::Compartment;
use crate::plot::{LineChart, Series};

#[derive(Debug, Clone, Parser)]
#[command(name = "endemic-delay", version, about = "Endemic model with distributed delays")]
pub struct Cli {
    /// Run configuration (TOML); the bundled baseline configuration if omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `experiment.mode`.
    #[arg(long, value_enum, value_name = "NAME")]
    pub mode: Option<Mode>,
    /// Output directory; overrides `experiment.out`.
    #[arg(long, value_name = "DIR", env = "ENDEMIC_DELAY_OUT")]
    pub out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long)]
    pub quiet: bool,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    summary: Vec<String>,
}

impl Artifacts {
    fn new() -> Self {
        Artifacts { files: Vec::new(), summary: Vec::new() }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn note(&mut self, line: String) {
        self.summary.push(line);
    }
}

/// Writes `bytes` under a temporary name and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    fs::rename(&tmp, path)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?,
        None => BASELINE_CFG.to_string(),
    };
    let cfg = RunConfig::parse(&text)?;
    let mode = cli.mode.unwrap_or(cfg.experiment.mode);
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.experiment.out.clone());
    let scenario = cfg.scenario()?;

    let mut art = Artifacts::new();
    match mode {
        Mode::SimulateDiscrete => {
            let (n_tau, n_rho) = cfg.discrete_pair();
            let traj = scenario.solve_discrete(n_tau, n_rho)?;
            let name = format!("discrete ({n_tau}, {n_rho})");
            trajectory_artifacts(&mut art, "discrete", &name, &traj, cfg.solver.stride)?;
        }
        Mode::SimulateReference => {
            let traj = scenario.solve_reference(ReferenceKind::Quadrature)?;
            trajectory_artifacts(&mut art, "reference", "quadrature reference", &traj, cfg.solver.stride)?;
        }
        Mode::SimulateOracle => {
            let traj = scenario.solve_reference(ReferenceKind::ChainOracle)?;
            trajectory_artifacts(&mut art, "oracle", "chain oracle", &traj, cfg.solver.stride)?;
        }
        Mode::Converge => converge(&mut art, &cfg, &scenario)?,
        Mode::Bench => bench(&mut art, &cfg, &scenario)?,
        Mode::KernelCheck => kernel_check(&mut art, &cfg, &scenario)?,
    }

    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut names: Vec<String> = art.files.iter().map(|(n, _)| n.clone()).collect();
    let manifest = RunManifest::new(&mode.to_string(), &text, names.clone());
    art.add("manifest.txt", manifest.to_string().into_bytes());
    names.push("manifest.txt".into());
    let mut artifacts = Vec::new();
    for (name, bytes) in &art.files {
        let path = out_dir.join(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(path);
    }
    Ok(Outcome { mode, out_dir, artifacts, summary: art.summary })
}

/// Runs the CLI and maps errors to a failing exit status.
pub fn main(cli: Cli) -> ExitCode {
    match run(&cli) {
        Ok(outcome) => {
            if !cli.quiet {
                for line in &outcome.summary {
                    println!("{line}");
                }
                for path in &outcome.artifacts {
                    println!("wrote {}", path.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn sampled(traj: &Trajectory, c: Compartment, stride: usize) -> Vec<(f64, f64)> {
    let last = traj.len() - 1;
    (0..traj.len()).filter(|k| k % stride == 0 || *k == last).map(|k| (traj.times()[k], traj.state(k).get(c))).collect()
}

fn trajectory_artifacts(art: &mut Artifacts, stem: &str, title: &str, traj: &Trajectory, stride: usize) -> Result<()> {
    let mut csv = Vec::new();
    traj.write_csv(&mut csv, stride, true)?;
    art.add(&format!("trajectory_{stem}.csv"), csv);
    let chart = LineChart {
        title: format!("Compartments, {title}"),
        x_label: "t (days)".into(),
        y_label: "individuals".into(),
        series: Compartment::ALL.iter().map(|&c| Series::new(c.name(), sampled(traj, c, stride))).collect(),
        ..Default::default()
    };
    art.add(&format!("trajectory_{stem}.svg"), chart.to_svg().into_bytes());
    let (t_peak, i_peak) = traj.peak(Compartment::I);
    art.note(format!(
        "{title}: {} knots, peak I = {i_peak:.1} at t = {t_peak:.2}, max population drift {:.1e}",
        traj.len(),
        traj.max_relative_drift()
    ));
    Ok(())
}

fn converge(art: &mut Artifacts, cfg: &RunConfig, scenario: &Scenario) -> Result<()> {
    let kind = cfg.reference_kind()?;
    let sweep = harness::sweep_with_runs(scenario, &cfg.pairs(), kind)?;
    let report = &sweep.report;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    art.add("convergence.csv", csv);

    let ok: Vec<_> = report.entries.iter().filter(|e| e.failure.is_none()).collect();
    let errors = LineChart {
        title: format!("Sup-norm error against the {kind} reference"),
        x_label: "N_tau (N_rho = 2 N_tau)".into(),
        y_label: "relative sup-norm error".into(),
        log_x: true,
        log_y: true,
        series: Compartment::ALL
            .iter()
            .map(|&c| Series::new(c.name(), ok.iter().map(|e| (e.n_tau as f64, e.rel_err(c))).collect()))
            .collect(),
    };
    art.add("convergence_error.svg", errors.to_svg().into_bytes());

    let stride = cfg.solver.stride;
    let mut series = vec![Series::new(kind.to_string(), sampled(&sweep.reference, Compartment::I, stride))];
    for (e, run) in report.entries.iter().zip(&sweep.runs) {
        if let Some(traj) = run {
            let mut s = Series::new(format!("({}, {})", e.n_tau, e.n_rho), sampled(traj, Compartment::I, stride));
            s.dashed = true;
            series.push(s);
        }
    }
    let overlay = LineChart {
        title: "Infected individuals".into(),
        x_label: "t (days)".into(),
        y_label: "I".into(),
        series,
        ..Default::default()
    };
    art.add("convergence_I.svg", overlay.to_svg().into_bytes());

    for e in &report.entries {
        match &e.failure {
            None => art.note(format!(
                "({}, {}): relative sup-norm error on I {:.3e}",
                e.n_tau,
                e.n_rho,
                e.rel_err(Compartment::I)
            )),
            Some(f) => art.note(format!("({}, {}): failed: {f}", e.n_tau, e.n_rho)),
        }
    }
    if ok.len() >= 2 {
        art.note(format!("observed order on I: {:.2}", report.observed_order(Compartment::I)));
    }
    Ok(())
}

fn bench(art: &mut Artifacts, cfg: &RunConfig, scenario: &Scenario) -> Result<()> {
    let [n_tau, n_rho] = cfg.experiment.bench_pair;
    let solvers = [SolverKind::Discrete { n_tau, n_rho }, SolverKind::ChainOracle, SolverKind::Quadrature];
    let table = harness::benchmark(scenario, &solvers, &cfg.experiment.bench_horizons, cfg.experiment.bench_repeats)?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    art.add("timing.csv", csv);
    for r in &table.rows {
        art.note(format!("{} t_end = {}: {:.1} ms", r.solver, r.t_end, r.wall_ms));
    }
    Ok(())
}

type TestFn = (&'static str, fn(f64) -> f64);

const TEST_FUNCTIONS: [TestFn; 2] = [("rho^2", |x| x * x), ("exp(-rho/20)", |x| (-x / 20.0).exp())];

fn kernel_check(art: &mut Artifacts, cfg: &RunConfig, scenario: &Scenario) -> Result<()> {
    let (n_tau, n_rho) = cfg.discrete_pair();
    let mut table = String::from("kernel,node_rule,j,test_fn,comb_value,exact,rel_err\n");
    for (name, spec, j) in [("phi", &scenario.phi, n_rho), ("psi", &scenario.psi, n_tau)] {
        let comb = spec.comb(j)?;
        let mut csv = Vec::new();
        comb.write_csv(&mut csv)?;
        art.add(&format!("comb_{name}.csv"), csv);
        art.note(format!(
            "{name}: {} nodes, total weight {:.15}, truncation mass {:.3e}, mean {:.6}",
            comb.len(),
            comb.total_weight(),
            comb.truncation_mass,
            comb.mean()
        ));
        convergence_rows(&mut table, name, spec, &cfg.experiment.check_j)?;
    }
    art.add("comb_convergence.csv", table.into_bytes());
    Ok(())
}

fn convergence_rows(table: &mut String, name: &str, spec: &KernelSpec, js: &[usize]) -> Result<()> {
    use std::fmt::Write as _;
    let lo = spec.density.support_lo();
    for (label, g) in TEST_FUNCTIONS {
        let exact = spec.density.expectation_on(lo, spec.truncation, 20_000, g);
        for rule in NodeRule::ALL {
            let spec = KernelSpec { node_rule: rule, ..spec.clone() };
            for &j in js {
                let value = comb_integrate(&spec.comb(j)?, g);
                let rel = (value - exact).abs() / exact.abs();
                writeln!(table, "{name},{rule},{j},{label},{value:e},{exact:e},{rel:e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_atomic(&path, b"x\n").unwrap();
        write_atomic(&path, b"y\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"y\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["endemic-delay", "--mode", "kernel-check", "--out", "x", "--quiet"]).unwrap();
        assert_eq!(cli.mode, Some(Mode::KernelCheck));
        assert_eq!(cli.out, Some(PathBuf::from("x")));
        assert!(cli.quiet && cli.config.is_none());
        assert!(Cli::try_parse_from(["endemic-delay", "--mode", "fly"]).is_err());
    }
}
