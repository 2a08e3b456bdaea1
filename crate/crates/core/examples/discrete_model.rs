//! One run of the discrete-kernel model with the default parameters.

use endemic_delay::harness::Scenario;
use endemic_delay::model::Compartment;

fn main() -> anyhow::Result<()> {
    let scenario = Scenario::baseline();
    let traj = scenario.solve_discrete(100, 200)?;
    let init = traj.initial_state();
    println!("initial state:");
    for c in Compartment::ALL {
        println!("  {:<3} {:>14.3}", c.name(), init.get(c));
    }
    let (t_peak, peak) = traj.peak(Compartment::I);
    println!("peak I = {peak:.0} on day {t_peak:.1}");
    for t in [0.0, 50.0, 100.0, 150.0, 200.0, 300.0, 365.0] {
        let s = traj.state_at(t)?;
        println!(
            "t = {t:>5}: S {:>10.0}  I {:>9.0}  D {:>9.0}",
            s.get(Compartment::S),
            s.get(Compartment::I),
            s.get(Compartment::D)
        );
    }
    println!("max relative population drift {:.1e}", traj.max_relative_drift());
    Ok(())
}
