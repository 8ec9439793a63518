//! Generates a skewed workload with noisy estimates, prints a few summary
//! statistics and writes it as a trace to stdout.
//!
//! `cargo run --example generate_workload -- 0.25 2.0 > trace.csv`

use std::io;

use fairsched::metrics::pearson_correlation;
use fairsched::prelude::*;
use fairsched::workload::{error_correlation, write_trace};

fn main() {
    let mut args = std::env::args().skip(1);
    let shape: f64 = args.next().map_or(0.25, |s| s.parse().expect("shape"));
    let sigma: f64 = args.next().map_or(2.0, |s| s.parse().expect("sigma"));

    let params = WorkloadParams {
        n_jobs: 20_000,
        shape,
        sigma,
        seed: 7,
        ..Default::default()
    };
    let w = generate(&params).expect("valid parameters");

    let sizes = w.sizes();
    let total: f64 = sizes.iter().sum();
    let mut sorted = sizes.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted.iter().take(sizes.len() / 100).sum::<f64>() / total;
    let horizon = w.jobs().last().map_or(0.0, |j| j.release);

    eprintln!("jobs:                 {}", w.len());
    eprintln!("mean size:            {:.3}", total / sizes.len() as f64);
    eprintln!("largest 1% of jobs:   {:.1}% of the work", 100.0 * top);
    eprintln!("offered load:         {:.3}", total / horizon);
    eprintln!(
        "corr(size, estimate): {:.3} (population {:.3})",
        pearson_correlation(&sizes, &w.estimates()).unwrap(),
        error_correlation(shape, sigma)
    );

    write_trace(&w, io::stdout().lock()).expect("write trace");
}
