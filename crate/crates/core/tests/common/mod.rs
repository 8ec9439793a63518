#![allow(dead_code)]

use fairsched::engine::{run_with, EngineConfig, SimulationResult};
use fairsched::schedulers::PolicyName;
use fairsched::workload::{JobSpec, Workload};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random small instance: releases in bursts (so simultaneous arrivals
/// happen), sizes spanning two orders of magnitude, weights in `[0.5, 4)`.
pub fn random_instance(seed: u64, max_jobs: usize) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_jobs);
    let mut t = 0.0;
    let jobs = (0..n)
        .map(|i| {
            if rng.random_bool(0.8) {
                t += rng.random_range(0.0..1.5);
            }
            let size = 10f64.powf(rng.random_range(-1.0..1.0));
            let weight = rng.random_range(0.5..4.0);
            JobSpec::exact(i as u64, t, size).with_weight(weight)
        })
        .collect();
    Workload::new(jobs).unwrap()
}

/// Same as [`random_instance`] but with log-normal estimation errors.
pub fn random_instance_with_errors(seed: u64, max_jobs: usize, sigma: f64) -> Workload {
    with_errors(&random_instance(seed, max_jobs), sigma, seed)
}

/// Replaces every estimate by `size * exp(sigma * Z)`.
pub fn with_errors(w: &Workload, sigma: f64, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD_EF01);
    let normal = rand_distr::StandardNormal;
    let jobs = w
        .jobs()
        .iter()
        .map(|j| {
            let z: f64 = rng.sample(normal);
            j.with_estimate(fairsched::workload::apply_error(j.size, sigma, z))
        })
        .collect();
    Workload::new(jobs).unwrap()
}

pub fn workload_strategy(max_jobs: usize) -> impl Strategy<Value = Workload> {
    prop::collection::vec((0.0..2.0f64, 0.05..5.0f64, 0.25..4.0f64, any::<bool>()), 1..=max_jobs)
        .prop_map(|rows| {
            let mut t = 0.0;
            let jobs = rows
                .into_iter()
                .enumerate()
                .map(|(i, (gap, size, weight, together))| {
                    if !together {
                        t += gap;
                    }
                    JobSpec::exact(i as u64, t, size).with_weight(weight)
                })
                .collect();
            Workload::new(jobs).unwrap()
        })
}

pub fn strict() -> EngineConfig {
    EngineConfig {
        require_work_conservation: true,
        ..Default::default()
    }
}

pub fn simulate(w: &Workload, policy: &PolicyName) -> SimulationResult {
    let mut s = policy.build(w).unwrap();
    run_with(w, &mut s, &strict()).unwrap()
}

pub fn max_abs_diff(a: &SimulationResult, b: &SimulationResult) -> f64 {
    assert_eq!(a.len(), b.len());
    a.records
        .iter()
        .zip(&b.records)
        .map(|(x, y)| {
            assert_eq!(x.job_id, y.job_id);
            (x.completion - y.completion).abs()
        })
        .fold(0.0, f64::max)
}
