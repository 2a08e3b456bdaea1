//! Compare the two continuous-kernel solvers: direct quadrature of the
//! convolution integrals and the auxiliary-ODE formulation.

use std::time::Instant;

use endemic_delay::harness::{sup_norm, sup_norm_error, ReferenceKind, Scenario, ERROR_GRID_STEP};
use endemic_delay::model::Compartment;

fn main() -> anyhow::Result<()> {
    let scenario = Scenario::baseline().with_horizon(180.0);
    let clock = Instant::now();
    let quad = scenario.solve_reference(ReferenceKind::Quadrature)?;
    let quad_ms = clock.elapsed().as_secs_f64() * 1e3;
    let clock = Instant::now();
    let oracle = scenario.solve_reference(ReferenceKind::ChainOracle)?;
    let oracle_ms = clock.elapsed().as_secs_f64() * 1e3;
    println!("quadrature {quad_ms:.0} ms, chain oracle {oracle_ms:.1} ms");

    let window = (0.0, scenario.t_end);
    let diff = sup_norm_error(&quad, &oracle, window, ERROR_GRID_STEP)?;
    let scale = sup_norm(&oracle, window, ERROR_GRID_STEP)?;
    for c in Compartment::ALL {
        let k = c.index();
        println!("{:<3} max |quad - oracle| = {:.3e} (relative {:.1e})", c.name(), diff[k], diff[k] / scale[k]);
    }
    Ok(())
}
