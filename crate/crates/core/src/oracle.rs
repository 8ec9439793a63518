//! Fixed-step fluid simulation, used to cross-check the event-driven engine.
//!
//! Time advances on a grid of spacing `dt`. Within a step the policy's
//! allocation is held and `share * elapsed` of true work drains from each
//! served job. The step is split only where the oracle can see something
//! happen: a release read from the trace, or a job whose remaining work
//! crosses zero. Anything the policy decides internally, such as a virtual
//! completion turning a job late, takes effect at the next query, so expect
//! first-order error in `dt` for policies that have such events.

use std::time::Instant;

use crate::engine::{CompletionRecord, Scheduler, SimError, SimulationResult, ALLOCATION_EPSILON, WORK_EPSILON};
use crate::workload::{JobId, Workload};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub dt: f64,
    /// Simulated-time horizon; `None` uses last release + 2 × total work + 1.
    pub max_time: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            dt: 1e-4,
            max_time: None,
        }
    }
}

struct Live {
    id: JobId,
    release: f64,
    size: f64,
    remaining: f64,
    service: f64,
}

impl Live {
    fn finished(&self) -> bool {
        self.remaining <= WORK_EPSILON * self.size.max(1.0)
    }
}

pub fn step_simulate<S: Scheduler + ?Sized>(
    workload: &Workload,
    scheduler: &mut S,
    config: &OracleConfig,
) -> Result<SimulationResult, SimError> {
    assert!(config.dt > 0.0, "oracle step must be positive");
    let started = Instant::now();
    let jobs = workload.jobs();
    let horizon = config.max_time.unwrap_or_else(|| {
        let last = jobs.last().map_or(0.0, |j| j.release);
        last + 2.0 * jobs.iter().map(|j| j.size).sum::<f64>() + 1.0
    });
    let policy = |time: f64| move |source| SimError::Policy { time, source };

    let mut live: Vec<Live> = Vec::new();
    let mut records = Vec::with_capacity(jobs.len());
    let mut next_job = 0;
    let mut segments = 0usize;
    // step grid anchored at `origin`; re-anchored after idle periods
    let mut origin = 0.0;
    let mut k = 0u64;
    let mut now = 0.0_f64;

    while records.len() < jobs.len() {
        if live.is_empty() && jobs[next_job].release > now {
            origin = jobs[next_job].release;
            k = 0;
            now = origin;
        }
        if now > horizon {
            return Err(SimError::Divergence {
                horizon,
                pending: jobs.len() - records.len(),
            });
        }
        while next_job < jobs.len() && jobs[next_job].release <= now {
            let job = &jobs[next_job];
            scheduler.notify_arrival(job, now).map_err(policy(now))?;
            live.push(Live {
                id: job.id,
                release: job.release,
                size: job.size,
                remaining: job.size,
                service: 0.0,
            });
            next_job += 1;
        }

        let step_end = origin + (k + 1) as f64 * config.dt;
        let alloc = scheduler.allocation(now).map_err(policy(now))?;
        if alloc.total() > 1.0 + ALLOCATION_EPSILON {
            return Err(SimError::PolicyViolation {
                time: now,
                reason: format!("shares sum to {}", alloc.total()),
            });
        }
        let mut served = Vec::with_capacity(alloc.entries().len());
        for &(id, share) in alloc.entries() {
            if share <= 0.0 {
                continue;
            }
            let pos = live.iter().position(|j| j.id == id).ok_or_else(|| SimError::PolicyViolation {
                time: now,
                reason: format!("job {id} is not pending"),
            })?;
            served.push((pos, share));
        }

        let mut end = step_end;
        if let Some(next) = jobs.get(next_job) {
            end = end.min(next.release);
        }
        let mut crossing = None;
        for &(pos, share) in &served {
            let job = &live[pos];
            if job.remaining - share * (end - now) <= 0.0 {
                let at = now + job.remaining / share;
                if crossing.is_none_or(|c| at < c) {
                    crossing = Some(at);
                }
            }
        }
        if let Some(at) = crossing {
            end = at.clamp(now, end);
        }
        let elapsed = end - now;
        for &(pos, share) in &served {
            let job = &mut live[pos];
            if crossing == Some(end) && job.remaining - share * elapsed <= WORK_EPSILON * job.size.max(1.0) {
                job.service += job.remaining;
                job.remaining = 0.0;
            } else {
                job.remaining -= share * elapsed;
                job.service += share * elapsed;
            }
        }
        now = end;
        if now >= step_end {
            k += 1;
        }
        segments += 1;

        let mut done: Vec<usize> = (0..live.len()).filter(|&i| live[i].finished()).collect();
        done.sort_by_key(|&i| live[i].id);
        let done_ids: Vec<JobId> = done.iter().map(|&i| live[i].id).collect();
        for id in done_ids {
            let pos = live.iter().position(|j| j.id == id).expect("live job");
            let job = live.swap_remove(pos);
            records.push(CompletionRecord {
                job_id: id,
                release: job.release,
                completion: now,
                sojourn: now - job.release,
                service: job.service,
            });
            scheduler.notify_real_completion(id, now).map_err(policy(now))?;
        }
    }

    Ok(SimulationResult::from_records(records, segments, started.elapsed(), None))
}
