//! A contact rate that drops by 40% between days 60 and 120, against the
//! constant-rate run.

use endemic_delay::harness::Scenario;
use endemic_delay::model::{Compartment, ContactRate, ModelParams};

fn main() -> anyhow::Result<()> {
    let base = Scenario::baseline();
    let b0 = base.params.beta0();
    let beta = ContactRate::varying(move |t| if (60.0..120.0).contains(&t) { 0.6 * b0 } else { b0 });
    let p = &base.params;
    let varying = Scenario { params: ModelParams::new(beta, p.gamma, p.i_fr, p.p, p.n0)?, ..base.clone() };

    let a = base.solve_discrete(100, 200)?;
    let b = varying.solve_discrete(100, 200)?;
    let (ta, ia) = a.peak(Compartment::I);
    let (tb, ib) = b.peak(Compartment::I);
    println!(
        "constant beta: peak I {ia:.0} on day {ta:.1}, deaths by day 365 {:.0}",
        a.final_state().get(Compartment::D)
    );
    println!(
        "reduced beta:  peak I {ib:.0} on day {tb:.1}, deaths by day 365 {:.0}",
        b.final_state().get(Compartment::D)
    );
    Ok(())
}
