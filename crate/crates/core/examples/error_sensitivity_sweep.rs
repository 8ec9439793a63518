//! A small shape x sigma sweep printed as a table of median MST normalized
//! against PS, one table per policy. Pass `mean` to centre the estimation
//! error on the true size on average instead of in the median.
//!
//! `cargo run --release --example error_sensitivity_sweep -- mean`

use fairsched::cli::{run_sweep, SweepGrid};
use fairsched::prelude::*;

fn main() {
    let error_bias: ErrorBias = std::env::args()
        .nth(1)
        .map_or(Ok(ErrorBias::Median), |s| s.parse())
        .expect("`median` or `mean`");
    let grid = SweepGrid {
        shapes: vec![0.25, 0.5, 1.0, 2.0],
        sigmas: vec![0.0, 0.5, 1.0, 2.0],
        seeds: 3,
        master_seed: 1,
        n_jobs: 5_000,
        load: 0.9,
        error_bias,
        weight_model: WeightModel::Uniform,
        policies: ["srpt", "srpte", "fsp", "psbs"].iter().map(|p| p.parse().unwrap()).collect(),
    };
    let rows = run_sweep(&grid).unwrap();
    println!("{error_bias}-unbiased estimation errors");

    for policy in &grid.policies {
        println!("\n{policy} (rows: shape, columns: sigma)");
        print!("{:>7}", "");
        for sigma in &grid.sigmas {
            print!("{sigma:>8}");
        }
        println!();
        for &shape in &grid.shapes {
            print!("{shape:>7}");
            for &sigma in &grid.sigmas {
                let mut cell: Vec<f64> = rows
                    .iter()
                    .filter(|r| &r.policy == policy && r.shape == shape && r.sigma == sigma)
                    .map(|r| r.mst_norm_ps)
                    .collect();
                cell.sort_by(f64::total_cmp);
                print!("{:>8.3}", cell[cell.len() / 2]);
            }
            println!();
        }
    }
}
