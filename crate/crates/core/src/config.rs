//! Run configuration: a TOML file with `[model]`, `[kernel.phi]`,
//! `[kernel.psi]`, `[solver]` and `[experiment]` sections. Every key has a
//! default, so an empty file describes the baseline scenario.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::harness::{KernelSpec, ReferenceKind, Scenario};
use crate::integrators::{Breakpoints, SolverOptions};
use crate::kernels::{KernelDensity, NodeRule};
use crate::model::{ContactRate, ModelError, ModelParams, Seeding};

/// The bundled baseline configuration.
pub const BASELINE_CFG: &str = include_str!("../configs/table1.cfg");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { key: key.into(), reason: reason.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulateDiscrete,
    SimulateReference,
    SimulateOracle,
    #[default]
    Converge,
    Bench,
    KernelCheck,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SimulateDiscrete => "simulate-discrete",
            Mode::SimulateReference => "simulate-reference",
            Mode::SimulateOracle => "simulate-oracle",
            Mode::Converge => "converge",
            Mode::Bench => "bench",
            Mode::KernelCheck => "kernel-check",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub kernel: KernelBlocks,
    pub solver: SolverBlock,
    pub experiment: ExperimentBlock,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "N0")]
    pub n0: f64,
    pub beta0: f64,
    pub gamma: f64,
    #[serde(rename = "I_FR")]
    pub i_fr: f64,
    pub p: f64,
    /// Shift and rate of the immunity kernel when `[kernel.phi]` omits them.
    pub sigma: Option<f64>,
    pub lambda1: Option<f64>,
    /// Shift and rate of the latency kernel when `[kernel.psi]` omits them.
    pub theta: Option<f64>,
    pub lambda2: Option<f64>,
    #[serde(rename = "c_I")]
    pub c_i: f64,
    /// Constant susceptible pre-history; by default chosen so that the
    /// initial compartments sum to `N0`.
    #[serde(rename = "c_S")]
    pub c_s: Option<f64>,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            n0: 1e7,
            beta0: 0.5 / 1e7,
            gamma: 0.1,
            i_fr: 0.425,
            p: 0.9,
            sigma: None,
            lambda1: None,
            theta: None,
            lambda2: None,
            c_i: 10.0,
            c_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelBlocks {
    pub phi: KernelBlock,
    pub psi: KernelBlock,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelBlock {
    /// `shifted-exponential` (default), `uniform` or `tabulated`.
    pub family: Option<String>,
    /// Support start (shift) for the exponential and uniform families.
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    /// Support end of the uniform family.
    pub hi: Option<f64>,
    pub abscissae: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
    /// Truncation point; 86 days for the exponential family, the support
    /// end otherwise.
    #[serde(rename = "M")]
    pub m: Option<f64>,
    /// Number of lags of discrete runs.
    pub j: Option<usize>,
    pub node_rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub step: f64,
    pub t_end: f64,
    /// Write every `stride`-th knot to trajectory CSVs.
    pub stride: usize,
    /// `none`, `lags` or `lag-sums`.
    pub breakpoints: String,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock { step: 0.01, t_end: 365.0, stride: 10, breakpoints: "lag-sums".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBlock {
    pub mode: Mode,
    /// `(n_tau, n_rho)` pairs of the convergence sweep.
    pub pairs: Vec<[usize; 2]>,
    pub out: PathBuf,
    /// `chain-oracle` or `quadrature`.
    pub reference: String,
    pub bench_pair: [usize; 2],
    pub bench_horizons: Vec<f64>,
    pub bench_repeats: usize,
    /// Lag counts of the kernel-check convergence table.
    pub check_j: Vec<usize>,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        ExperimentBlock {
            mode: Mode::Converge,
            pairs: vec![[1, 2], [10, 20], [100, 200]],
            out: PathBuf::from("out"),
            reference: "chain-oracle".into(),
            bench_pair: [100, 200],
            bench_horizons: vec![365.0, 730.0],
            bench_repeats: 3,
            check_j: (1..=8).map(|k| 1 << k).collect(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ConfigError::Parse { path: ".".into(), message: e.message().to_string() })?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError::Parse { path: e.path().to_string(), message: e.inner().message().to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn baseline() -> Self {
        Self::parse(BASELINE_CFG).expect("bundled config is valid")
    }

    /// Checks every value against the solver preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario()?;
        self.reference_kind()?;
        let e = &self.experiment;
        if e.pairs.is_empty() {
            return Err(invalid("experiment.pairs", "needs at least one pair"));
        }
        for (name, pairs) in [("experiment.pairs", e.pairs.as_slice()), ("experiment.bench_pair", &[e.bench_pair][..])]
        {
            if pairs.iter().any(|p| p[0] == 0 || p[1] == 0) {
                return Err(invalid(name, "lag counts must be positive"));
            }
        }
        if e.bench_horizons.is_empty() || e.bench_horizons.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(invalid("experiment.bench_horizons", "horizons must be positive"));
        }
        if e.bench_repeats == 0 {
            return Err(invalid("experiment.bench_repeats", "must be at least 1"));
        }
        if e.check_j.is_empty() || e.check_j.contains(&0) {
            return Err(invalid("experiment.check_j", "lag counts must be positive"));
        }
        if self.solver.stride == 0 {
            return Err(invalid("solver.stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn reference_kind(&self) -> Result<ReferenceKind, ConfigError> {
        match self.experiment.reference.as_str() {
            "chain-oracle" => Ok(ReferenceKind::ChainOracle),
            "quadrature" => Ok(ReferenceKind::Quadrature),
            other => Err(invalid("experiment.reference", format!("unknown reference `{other}`"))),
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.experiment.pairs.iter().map(|p| (p[0], p[1])).collect()
    }

    /// `(n_tau, n_rho)` of single discrete runs.
    pub fn discrete_pair(&self) -> (usize, usize) {
        (self.kernel.psi.j.unwrap_or(100), self.kernel.phi.j.unwrap_or(200))
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let m = &self.model;
        let params = ModelParams::new(ContactRate::Constant(m.beta0), m.gamma, m.i_fr, m.p, m.n0)
            .map_err(|e| invalid(model_key(&e), e))?;
        if !(m.c_i >= 0.0 && m.c_i.is_finite()) {
            return Err(invalid("model.c_I", "must be non-negative"));
        }
        if let Some(c_s) = m.c_s {
            if !(c_s > 0.0 && c_s.is_finite()) {
                return Err(invalid("model.c_S", "must be positive"));
            }
        }
        let phi = kernel_spec("phi", &self.kernel.phi, (m.sigma, "sigma", 10.0), (m.lambda1, "lambda1", 0.1))?;
        let psi = kernel_spec("psi", &self.kernel.psi, (m.theta, "theta", 5.0), (m.lambda2, "lambda2", 0.2))?;

        let s = &self.solver;
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return Err(invalid("solver.t_end", "must be positive"));
        }
        let shortest = phi.density.support_lo().min(psi.density.support_lo());
        if !(s.step > 0.0 && s.step <= shortest / 4.0) {
            return Err(invalid(
                "solver.step",
                format!("must be positive and at most a quarter of the shortest lag ({})", shortest / 4.0),
            ));
        }
        let breakpoints = match s.breakpoints.as_str() {
            "none" => Breakpoints::None,
            "lags" => Breakpoints::Lags,
            "lag-sums" => Breakpoints::LagSums,
            other => return Err(invalid("solver.breakpoints", format!("unknown setting `{other}`"))),
        };
        let scenario = Scenario {
            params,
            seeding: Seeding { c_i: m.c_i, c_s: m.c_s },
            phi,
            psi,
            t_end: s.t_end,
            solver: SolverOptions { step: s.step, breakpoints },
        };
        // initial conditions must exist for the kernel means
        let phi_mean = crate::kernels::mean_delay(&scenario.phi.density).map_err(|e| invalid("kernel.phi", e))?;
        let psi_mean = crate::kernels::mean_delay(&scenario.psi.density).map_err(|e| invalid("kernel.psi", e))?;
        crate::model::initial_conditions(&scenario.params, &scenario.seeding, psi_mean, phi_mean)
            .map_err(|e| invalid("model", e))?;
        Ok(scenario)
    }
}

fn model_key(e: &ModelError) -> String {
    match e {
        ModelError::InvalidParameter { name: "mu", .. } => "model.gamma".into(),
        ModelError::InvalidParameter { name, .. } => format!("model.{name}"),
        ModelError::FatalityRiskTooHigh(_) => "model.I_FR".into(),
        _ => "model".into(),
    }
}

fn kernel_spec(
    name: &str,
    block: &KernelBlock,
    shift: (Option<f64>, &str, f64),
    rate: (Option<f64>, &str, f64),
) -> Result<KernelSpec, ConfigError> {
    let key = |k: &str| format!("kernel.{name}.{k}");
    let merged = |own: Option<f64>, (model, model_key, default): (Option<f64>, &str, f64), k: &str| match (own, model) {
        (Some(a), Some(b)) if a != b => Err(invalid(key(k), format!("conflicts with model.{model_key} = {b}"))),
        (a, b) => Ok(a.or(b).unwrap_or(default)),
    };
    let family = block.family.as_deref().unwrap_or("shifted-exponential");
    let density = match family {
        "shifted-exponential" => {
            let sigma = merged(block.sigma, shift, "sigma")?;
            let lambda = merged(block.lambda, rate, "lambda")?;
            KernelDensity::shifted_exponential(sigma, lambda).map_err(|e| invalid(key("lambda"), e))?
        }
        "uniform" => {
            let lo = block.sigma.ok_or_else(|| invalid(key("sigma"), "required for the uniform family"))?;
            let hi = block.hi.ok_or_else(|| invalid(key("hi"), "required for the uniform family"))?;
            KernelDensity::uniform(lo, hi).map_err(|e| invalid(key("hi"), e))?
        }
        "tabulated" => {
            let xs =
                block.abscissae.clone().ok_or_else(|| invalid(key("abscissae"), "required for tabulated kernels"))?;
            let ys = block.values.clone().ok_or_else(|| invalid(key("values"), "required for tabulated kernels"))?;
            KernelDensity::tabulated(xs, ys).map_err(|e| invalid(key("values"), e))?
        }
        other => return Err(invalid(key("family"), format!("unknown family `{other}`"))),
    };
    let truncation = match (block.m, density.support_hi()) {
        (Some(m), _) => m,
        (None, hi) if hi.is_finite() => hi,
        (None, _) => 86.0,
    };
    if !(truncation > density.support_lo() && truncation.is_finite()) {
        return Err(invalid(key("M"), format!("must exceed the support start {}", density.support_lo())));
    }
    let node_rule = match &block.node_rule {
        Some(r) => r.parse::<NodeRule>().map_err(|e| invalid(key("node_rule"), e))?,
        None => NodeRule::Midpoint,
    };
    if block.j == Some(0) {
        return Err(invalid(key("j"), "must be positive"));
    }
    Ok(KernelSpec { density, truncation, node_rule })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_baseline() {
        let cfg = RunConfig::baseline();
        let sc = cfg.scenario().unwrap();
        let t1 = Scenario::baseline();
        assert_eq!(sc.phi, t1.phi);
        assert_eq!(sc.psi, t1.psi);
        assert_eq!((sc.t_end, sc.solver), (t1.t_end, t1.solver));
        assert!((sc.params.mu - t1.params.mu).abs() < 1e-15);
        assert_eq!(cfg.pairs(), vec![(1, 2), (10, 20), (100, 200)]);
        assert_eq!(cfg.discrete_pair(), (100, 200));
    }

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.experiment.mode, Mode::Converge);
        assert_eq!(cfg.scenario().unwrap().phi, Scenario::baseline().phi);
    }

    #[test]
    fn errors_name_the_key() {
        let err = RunConfig::parse("[kernel.phi]\nlambda = \"fast\"\n").unwrap_err().to_string();
        assert!(err.contains("kernel.phi.lambda"), "{err}");
        let err = RunConfig::parse("[solver]\nstepp = 0.1\n").unwrap_err().to_string();
        assert!(err.contains("stepp"), "{err}");
        let err = RunConfig::parse("[solver]\nstep = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("solver.step"), "{err}");
        let err = RunConfig::parse("[model]\nI_FR = 1.5\n").unwrap_err().to_string();
        assert!(err.contains("model.I_FR"), "{err}");
        let err = RunConfig::parse("[model]\nsigma = 12\n[kernel.phi]\nsigma = 10\n").unwrap_err().to_string();
        assert!(err.contains("kernel.phi.sigma"), "{err}");
        let err = RunConfig::parse("[experiment]\nmode = \"fly\"\n").unwrap_err().to_string();
        assert!(err.contains("experiment.mode"), "{err}");
    }

    #[test]
    fn uniform_kernel_truncates_at_its_support_end() {
        let cfg = RunConfig::parse("[kernel.phi]\nfamily = \"uniform\"\nsigma = 10\nhi = 18\nj = 8\n").unwrap();
        let comb = cfg.scenario().unwrap().phi.comb(8).unwrap();
        assert!(comb.weights.iter().all(|&w| (w - 0.125).abs() < 1e-15));
    }
}
