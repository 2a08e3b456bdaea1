//! Wall-clock comparison of the three solvers over one and two years.
//! Run with `--release`.

use endemic_delay::harness::{benchmark, Scenario, SolverKind};

fn main() -> anyhow::Result<()> {
    let solvers = [SolverKind::Discrete { n_tau: 100, n_rho: 200 }, SolverKind::ChainOracle, SolverKind::Quadrature];
    let table = benchmark(&Scenario::baseline(), &solvers, &[365.0, 730.0], 1)?;
    table.write_csv(std::io::stdout().lock())?;
    for t_end in [365.0, 730.0] {
        let quad = table.wall_ms(SolverKind::Quadrature, t_end).unwrap_or(f64::NAN);
        let disc = table.wall_ms(solvers[0], t_end).unwrap_or(f64::NAN);
        println!("t_end {t_end}: quadrature / discrete = {:.1}", quad / disc);
    }
    Ok(())
}
