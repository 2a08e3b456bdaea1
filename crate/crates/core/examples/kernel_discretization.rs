//! Discretize the immunity and latency kernels into Dirac combs and check
//! how well the combs reproduce two moments as the node count grows.

use endemic_delay::kernels::{comb_integrate, discretize, KernelDensity, NodeRule};

fn main() -> anyhow::Result<()> {
    let kernels = [
        ("phi", KernelDensity::shifted_exponential(10.0, 0.1)?),
        ("psi", KernelDensity::shifted_exponential(5.0, 0.2)?),
    ];
    let m = 86.0;
    for (name, k) in &kernels {
        let lo = k.support_lo();
        let exact = k.expectation_on(lo, m, 20_000, |x| x * x);
        println!("{name}: E[rho^2 on [{lo}, {m}]] = {exact:.6}");
        for rule in NodeRule::ALL {
            let errs: Vec<String> = [2, 8, 32, 128, 512]
                .iter()
                .map(|&j| {
                    let comb = discretize(k, m, j, rule).unwrap();
                    let e = (comb_integrate(&comb, |x| x * x) - exact).abs() / exact;
                    format!("j={j}: {e:.2e}")
                })
                .collect();
            println!("  {rule:<8} {}", errs.join("  "));
        }
        let comb = discretize(k, m, 4, NodeRule::Midpoint)?;
        println!("  j=4 midpoint nodes {:?}", comb.nodes);
        println!("  j=4 weights {:?} (tail {:.2e})", comb.weights, comb.truncation_mass);
    }
    Ok(())
}
