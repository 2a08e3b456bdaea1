//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//! Run with `cargo test --release --test acceptance` for realistic timings.

use std::process::ExitCode;
use std::time::Instant;

use endemic_delay::harness::{
    benchmark, convergence_sweep, step_halving, sup_norm, sup_norm_error, ReferenceKind, Scenario, SolverKind,
    ERROR_GRID_STEP,
};
use endemic_delay::kernels::{comb_integrate, discretize, KernelDensity, NodeRule};
use endemic_delay::model::{derive_mu, initial_conditions, Compartment, ContactRate, ModelParams, Seeding};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

type Check = fn() -> Result<Verdict, Box<dyn std::error::Error>>;

fn rel_diff(a: &[f64; 6], scale: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|k| if scale[k] > 0.0 { a[k] / scale[k] } else { a[k] })
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn conservation() -> Result<Verdict, Box<dyn std::error::Error>> {
    let sc = Scenario::baseline();
    let mut detail = Vec::new();
    let mut pass = true;
    let runs: [(&str, Box<dyn Fn() -> _>); 3] = [
        ("discrete (100, 200)", Box::new(|| sc.solve_discrete(100, 200))),
        ("quadrature", Box::new(|| sc.solve_reference(ReferenceKind::Quadrature))),
        ("chain oracle", Box::new(|| sc.solve_reference(ReferenceKind::ChainOracle))),
    ];
    for (name, solve) in runs {
        let clock = Instant::now();
        let traj = solve()?;
        let secs = clock.elapsed().as_secs_f64();
        let drift = traj.max_relative_drift();
        pass &= drift < 1e-9 && secs < 60.0;
        detail.push(format!("{name} drift {drift:.1e} in {secs:.1} s"));
    }
    Ok(verdict(pass, detail.join(", ")))
}

fn mu_derivation() -> Result<Verdict, Box<dyn std::error::Error>> {
    let mu = derive_mu(0.1, 0.425)?;
    Ok(verdict((mu - 0.0739).abs() <= 5e-5, format!("mu = {mu:.6}")))
}

/// `int_a^b g(x) lambda e^{-lambda (x - shift)} dx` in closed form.
fn exp_moment(shift: f64, lambda: f64, a: f64, b: f64, g: TestFn) -> f64 {
    match g {
        TestFn::Square => {
            let anti = |x: f64| -(-lambda * (x - shift)).exp() * (x * x + 2.0 * x / lambda + 2.0 / (lambda * lambda));
            anti(b) - anti(a)
        }
        TestFn::Decay(c) => {
            let k = lambda + c;
            lambda * (lambda * shift).exp() / k * ((-k * a).exp() - (-k * b).exp())
        }
    }
}

#[derive(Clone, Copy)]
enum TestFn {
    Square,
    Decay(f64),
}

impl TestFn {
    fn eval(self, x: f64) -> f64 {
        match self {
            TestFn::Square => x * x,
            TestFn::Decay(c) => (-c * x).exp(),
        }
    }
}

fn comb_convergence() -> Result<Verdict, Box<dyn std::error::Error>> {
    let (sigma, lambda, m) = (10.0, 0.1, 86.0);
    let kernel = KernelDensity::shifted_exponential(sigma, lambda)?;
    let js: Vec<usize> = (1..=8).map(|k| 1 << k).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, g) in [("rho^2", TestFn::Square), ("exp(-rho/20)", TestFn::Decay(1.0 / 20.0))] {
        let exact = exp_moment(sigma, lambda, sigma, m, g);
        for rule in NodeRule::ALL {
            let errs = js
                .iter()
                .map(|&j| {
                    let comb = discretize(&kernel, m, j, rule)?;
                    Ok((comb_integrate(&comb, |x| g.eval(x)) - exact).abs() / exact.abs())
                })
                .collect::<Result<Vec<f64>, Box<dyn std::error::Error>>>()?;
            let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
            let last = *errs.last().unwrap();
            let ok = monotone && last < 1e-4;
            pass &= ok;
            detail.push(format!("{label}/{rule}: {}{last:.1e}", if monotone { "" } else { "non-monotone, " }));
        }
    }
    Ok(verdict(pass, format!("final errors at j=256: {}", detail.join("; "))))
}

fn oracle_equivalence() -> Result<Verdict, Box<dyn std::error::Error>> {
    let mut worst = Vec::new();
    for step in [0.01, 0.005] {
        let sc = Scenario::baseline().with_step(step);
        let quad = sc.solve_reference(ReferenceKind::Quadrature)?;
        let oracle = sc.solve_reference(ReferenceKind::ChainOracle)?;
        let window = (0.0, sc.t_end);
        let d = sup_norm_error(&quad, &oracle, window, ERROR_GRID_STEP)?;
        worst.push(rel_diff(&d, &sup_norm(&oracle, window, ERROR_GRID_STEP)?));
    }
    let below = worst[0].iter().all(|&e| e < 1e-3);
    let ratios: Vec<f64> = (0..6).map(|k| worst[0][k] / worst[1][k]).collect();
    let halving = ratios.iter().all(|&r| r >= 4.0);
    Ok(verdict(
        below && halving,
        format!(
            "max rel diff {:.1e} (h=0.01), {:.1e} (h=0.005); halving ratios {}",
            max(&worst[0]),
            max(&worst[1]),
            ratios.iter().map(|r| format!("{r:.1}")).collect::<Vec<_>>().join("/")
        ),
    ))
}

fn sweep_ordering() -> Result<Verdict, Box<dyn std::error::Error>> {
    let report = convergence_sweep(&Scenario::baseline(), &[(1, 2), (10, 20), (100, 200)], ReferenceKind::ChainOracle)?;
    if let Some(e) = report.entries.iter().find(|e| e.failure.is_some()) {
        return Ok(verdict(false, format!("({}, {}) failed", e.n_tau, e.n_rho)));
    }
    let err: Vec<f64> = report.entries.iter().map(|e| e.rel_err(Compartment::I)).collect();
    let decreasing = err.windows(2).all(|w| w[1] < w[0]);
    let ratio = err[0] / err[1];
    let pass = decreasing && ratio >= 5.0 && err[2] <= 0.01;
    Ok(verdict(
        pass,
        format!("rel err on I {:.3e} > {:.3e} > {:.3e}; first/second ratio {ratio:.2}", err[0], err[1], err[2]),
    ))
}

fn runtime_gap() -> Result<Verdict, Box<dyn std::error::Error>> {
    let discrete = SolverKind::Discrete { n_tau: 100, n_rho: 200 };
    let table = benchmark(&Scenario::baseline(), &[discrete, SolverKind::Quadrature], &[365.0, 730.0], 3)?;
    let ms = |s, t| table.wall_ms(s, t).expect("benchmarked");
    let gap = ms(SolverKind::Quadrature, 365.0) / ms(discrete, 365.0);
    let quad_exp = (ms(SolverKind::Quadrature, 730.0) / ms(SolverKind::Quadrature, 365.0)).log2();
    let disc_exp = (ms(discrete, 730.0) / ms(discrete, 365.0)).log2();
    let pass = gap >= 10.0 && quad_exp >= 1.5 && disc_exp <= 1.25;
    Ok(verdict(
        pass,
        format!(
            "quadrature/discrete {gap:.1}x at 365 d; doubling-horizon growth exponents quadrature {quad_exp:.2}, discrete {disc_exp:.2}"
        ),
    ))
}

fn integrator_order() -> Result<Verdict, Box<dyn std::error::Error>> {
    let study = step_halving(&Scenario::baseline(), 100, 200, 1.2, 6)?;
    let order = study.fitted_order();
    let pairwise: Vec<String> = study.pairwise_orders().iter().map(|o| format!("{o:.2}")).collect();
    Ok(verdict(order >= 3.5, format!("fitted order {order:.2}, pairwise [{}]", pairwise.join(", "))))
}

/// Gaussian elimination with partial pivoting.
fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> [f64; N] {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn initial_identity() -> Result<Verdict, Box<dyn std::error::Error>> {
    let (mut worst_sum, mut worst_s, mut cases) = (0.0f64, 0.0f64, 0);
    for n0 in [1e3, 1e5, 1e7, 3.3e8] {
        for beta_n in [0.05, 0.5, 2.0] {
            for gamma in [0.02, 0.1, 0.5] {
                for i_fr in [0.0, 0.01, 0.425] {
                    for p in [0.0, 0.5, 0.9, 1.0] {
                        for (c_i_frac, psi_mean, phi_mean) in [(1e-6, 10.0, 20.0), (1e-4, 3.0, 45.0), (1e-3, 7.5, 90.0)]
                        {
                            let beta0 = beta_n / n0;
                            let params = ModelParams::new(ContactRate::Constant(beta0), gamma, i_fr, p, n0)?;
                            let c_i = c_i_frac * n0;
                            let Ok(init) = initial_conditions(&params, &Seeding::balanced(c_i), psi_mean, phi_mean)
                            else {
                                continue;
                            };
                            cases += 1;
                            let st = init.state;
                            worst_sum = worst_sum.max((st.total() - n0).abs() / n0);
                            // unknowns S, L, I, RT, RP, D
                            let a = [
                                [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
                                [-beta0 * c_i * psi_mean, 1.0, 0.0, 0.0, 0.0, 0.0],
                                [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
                                [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                                [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                                [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
                            ];
                            let b = [n0, 0.0, c_i, c_i * p * gamma * phi_mean, (1.0 - p) * gamma * c_i * psi_mean, 0.0];
                            let x = solve_linear(a, b);
                            worst_s = worst_s.max((st.s - x[0]).abs() / x[0].abs());
                        }
                    }
                }
            }
        }
    }
    Ok(verdict(
        cases > 0 && worst_sum < 1e-9 && worst_s < 1e-12,
        format!("{cases} parameter sets: sum error {worst_sum:.1e}, S(0) vs linear solve {worst_s:.1e}"),
    ))
}

fn truncation_accounting() -> Result<Verdict, Box<dyn std::error::Error>> {
    let m = 86.0;
    let mut worst = 0.0f64;
    for (sigma, lambda) in [(10.0, 0.1), (5.0, 0.2)] {
        let kernel = KernelDensity::shifted_exponential(sigma, lambda)?;
        let tail = (-lambda * (m - sigma)).exp();
        for j in 1..=512 {
            let comb = discretize(&kernel, m, j, NodeRule::Midpoint)?;
            worst = worst.max((comb.weights.iter().sum::<f64>() + tail - 1.0).abs());
        }
    }
    Ok(verdict(worst < 1e-12, format!("max |sum(w) + tail - 1| = {worst:.1e} over j = 1..512")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("conservation", conservation),
        ("death-rate derivation", mu_derivation),
        ("comb integration convergence", comb_convergence),
        ("reference/oracle equivalence", oracle_equivalence),
        ("convergence sweep", sweep_ordering),
        ("runtime gap", runtime_gap),
        ("integrator order", integrator_order),
        ("initial-condition identity", initial_identity),
        ("truncation accounting", truncation_accounting),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let v = check().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!v.pass);
        println!("{tag} {} {name}: {} [{:.1} s]", k + 1, v.detail, clock.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
