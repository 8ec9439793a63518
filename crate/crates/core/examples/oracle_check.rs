//! Runs every registered policy through both the event-driven engine and the
//! fixed-step oracle and reports the largest completion-time gap.

use fairsched::prelude::*;

fn main() {
    let w = generate(&WorkloadParams {
        n_jobs: 30,
        shape: 0.5,
        sigma: 1.0,
        seed: 11,
        weight_model: "1:0.5,3:0.5".parse().unwrap(),
        ..Default::default()
    })
    .unwrap();

    for dt in [1e-3, 1e-4] {
        println!("dt = {dt:e}");
        for policy in PolicyName::all() {
            let exact = run(&w, &mut policy.build(&w).unwrap()).unwrap();
            let stepped = step_simulate(
                &w,
                &mut policy.build(&w).unwrap(),
                &OracleConfig { dt, max_time: None },
            )
            .unwrap();
            let gap = exact
                .records
                .iter()
                .zip(&stepped.records)
                .map(|(a, b)| (a.completion - b.completion).abs())
                .fold(0.0, f64::max);
            println!("  {policy:<9} max |dC| = {gap:.2e}");
        }
    }
}
