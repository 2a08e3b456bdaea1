use endemic_delay::config::RunConfig;
use endemic_delay::harness::{sup_norm, sup_norm_error, ReferenceKind, Scenario, ERROR_GRID_STEP};
use endemic_delay::integrators::{Breakpoints, SolverOptions};
use endemic_delay::model::Compartment;

fn short() -> Scenario {
    Scenario::baseline().with_horizon(120.0).with_step(0.05)
}

#[test]
fn refining_the_combs_approaches_the_continuous_model() {
    let sc = short();
    let oracle = sc.solve_reference(ReferenceKind::ChainOracle).unwrap();
    let window = (0.0, sc.t_end);
    let errs: Vec<f64> = [(4, 8), (16, 32), (64, 128)]
        .iter()
        .map(|&(a, b)| {
            let traj = sc.solve_discrete(a, b).unwrap();
            sup_norm_error(&traj, &oracle, window, ERROR_GRID_STEP).unwrap()[Compartment::I.index()]
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn breakpoint_modes_agree_at_fine_steps() {
    let sc = short().with_step(0.01);
    let runs: Vec<_> = [Breakpoints::None, Breakpoints::Lags, Breakpoints::LagSums]
        .into_iter()
        .map(|breakpoints| {
            let solver = SolverOptions { breakpoints, ..sc.solver };
            Scenario { solver, ..sc.clone() }.solve_discrete(20, 40).unwrap()
        })
        .collect();
    let scale = sup_norm(&runs[2], (0.0, sc.t_end), ERROR_GRID_STEP).unwrap();
    for other in &runs[..2] {
        let d = sup_norm_error(other, &runs[2], (0.0, sc.t_end), ERROR_GRID_STEP).unwrap();
        assert!(d.iter().zip(&scale).all(|(e, s)| e / s < 1e-4), "{d:?}");
    }
}

#[test]
fn configured_scenario_matches_the_builtin_one() {
    let cfg = RunConfig::parse("[solver]\nt_end = 40.0\nstep = 0.05\n").unwrap();
    let from_cfg = cfg.scenario().unwrap().solve_discrete(10, 20).unwrap();
    let builtin = Scenario::baseline().with_horizon(40.0).with_step(0.05).solve_discrete(10, 20).unwrap();
    assert_eq!(from_cfg.final_state(), builtin.final_state());
}
