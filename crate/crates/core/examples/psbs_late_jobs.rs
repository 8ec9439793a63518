//! A long job whose size is badly underestimated, followed by a short one.
//! FSP keeps serving the late long job and the short one waits behind it;
//! PSBS shares the machine among late jobs and the short one gets out.
//!
//! The log lists arrivals and completions only. Under PSBS job 0 turns late
//! at t=1.5 and job 1 at t=2; from then on they split the machine.

use fairsched::prelude::*;

fn show(name: &str, w: &Workload, scheduler: &mut dyn Scheduler) {
    let cfg = EngineConfig {
        log_events: true,
        ..Default::default()
    };
    let res = run_with(w, scheduler, &cfg).unwrap();
    println!("{name}:");
    for e in res.events.as_deref().unwrap_or_default() {
        let shares: Vec<String> = e
            .allocation
            .entries()
            .iter()
            .map(|(id, s)| format!("job {id} x{s}"))
            .collect();
        println!("  t={:<5} {:?} of job {} -> serving [{}]", e.time, e.kind, e.job_id, shares.join(", "));
    }
    for r in &res.records {
        println!("  job {} completes at {}", r.job_id, r.completion);
    }
}

fn main() {
    let w = Workload::new(vec![
        JobSpec::exact(0, 0.0, 10.0).with_estimate(1.0),
        JobSpec::exact(1, 0.5, 1.0),
    ])
    .unwrap();

    show("fsp", &w, &mut fsp_policy());

    let mut psbs = psbs_policy();
    show("psbs", &w, &mut psbs);
    println!("psbs saw {} late jobs", psbs.late_jobs_seen());
}
