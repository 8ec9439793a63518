//! Compares every policy against PS on one generated workload: mean sojourn
//! time, makespan and how many jobs finish later than under PS.

use fairsched::prelude::*;

fn main() {
    let w = generate(&WorkloadParams {
        n_jobs: 2_000,
        shape: 0.5,
        sigma: 0.5,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let ps = run(&w, &mut ps_policy()).unwrap();

    println!("{:<10}{:>10}{:>10}{:>12}{:>14}", "policy", "mst", "mst/ps", "makespan", "later than ps");
    for policy in PolicyName::all() {
        let res = run(&w, &mut policy.build(&w).unwrap()).unwrap();
        let report = MetricsReport::new(&w, &res, Some(&ps)).unwrap();
        println!(
            "{:<10}{:>10.3}{:>10.3}{:>12.1}{:>14}",
            policy,
            report.mst,
            report.mst_normalized.unwrap(),
            report.makespan,
            report.dominance_violations.len()
        );
    }
}
