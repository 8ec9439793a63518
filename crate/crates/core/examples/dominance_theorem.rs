//! Pri over a reference policy's completion order never finishes a job later
//! than the reference itself. Checks this on random instances for PS, DPS and
//! FIFO, and shows how much mean sojourn time the reordering saves.

use fairsched::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_workload(rng: &mut ChaCha8Rng) -> Workload {
    let n = rng.random_range(2..=25);
    let mut t = 0.0;
    let jobs = (0..n)
        .map(|i| {
            t += rng.random_range(0.0..1.0);
            let size = 10f64.powf(rng.random_range(-1.0..1.0));
            JobSpec::exact(i, t, size).with_weight(rng.random_range(0.5..4.0))
        })
        .collect();
    Workload::new(jobs).unwrap()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let instances: Vec<Workload> = (0..300).map(|_| random_workload(&mut rng)).collect();

    for reference in [PolicyName::Ps, PolicyName::Dps, PolicyName::Fifo] {
        let mut violations = 0;
        let mut ratio = 0.0;
        for w in &instances {
            let base = run(w, &mut reference.build(w).unwrap()).unwrap();
            let seq = CompletionSequence::new(base.completion_sequence.clone());
            let pri = run(w, &mut pri_policy(&seq)).unwrap();
            violations += dominance_violations(&pri, &base, 1e-9).unwrap().len();
            ratio += normalized_mst(&pri, &base).unwrap();
        }
        println!(
            "pri over {reference:<4}: {} instances, {violations} jobs finished late, mean MST ratio {:.3}",
            instances.len(),
            ratio / instances.len() as f64
        );
    }
}
