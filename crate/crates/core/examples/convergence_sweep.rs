//! Sup-norm error of the discrete model against the chain oracle as the
//! combs are refined with N_rho = 2 N_tau.

use endemic_delay::harness::{convergence_sweep, ReferenceKind, Scenario};
use endemic_delay::model::Compartment;

fn main() -> anyhow::Result<()> {
    let pairs: Vec<(usize, usize)> = [1, 2, 4, 8, 16, 32, 64, 128].iter().map(|&n| (n, 2 * n)).collect();
    let report = convergence_sweep(&Scenario::baseline(), &pairs, ReferenceKind::ChainOracle)?;
    report.write_csv(std::io::stdout().lock())?;
    println!("observed order on I: {:.2}", report.observed_order(Compartment::I));
    Ok(())
}
