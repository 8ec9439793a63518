//! Event-driven fluid simulation of one preemptive unit-rate machine.
//!
//! A [`Scheduler`] hands out fractions of the machine to pending jobs. The
//! allocation is constant between events, so the engine jumps from event to
//! event: the next release, the earliest real completion under the current
//! allocation, or an internal event the scheduler asks for. Remaining work is
//! always measured against true sizes; estimates only steer the policy.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::virtualtime::{ClockError, EVENT_EPSILON};
use crate::workload::{JobId, JobSpec, Workload};

/// Remaining work below this counts as done.
pub const WORK_EPSILON: f64 = 1e-12;

/// Tolerance on allocation totals.
pub const ALLOCATION_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error("job {0} is not part of the completion sequence")]
    NotInSequence(JobId),
    #[error("job {0} is not pending")]
    UnknownJob(JobId),
    #[error("job {0} arrived twice")]
    DuplicateArrival(JobId),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("policy violation at t={time}: {reason}")]
    PolicyViolation { time: f64, reason: String },
    #[error("no progress at t={time} with {pending} pending jobs")]
    Stalled { time: f64, pending: usize },
    #[error("allocation at t={time} sums to {total}, machine left idle")]
    NotWorkConserving { time: f64, total: f64 },
    #[error("scheduler error at t={time}: {source}")]
    Policy { time: f64, source: PolicyError },
    #[error("simulation was run without event logging")]
    NoEventLog,
    #[error("oracle passed its horizon of {horizon} with {pending} pending jobs")]
    Divergence { horizon: f64, pending: usize },
}

/// Machine shares at one instant: pending job → fraction in `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    entries: Vec<(JobId, f64)>,
}

impl Allocation {
    pub fn empty() -> Self {
        Allocation::default()
    }

    /// The whole machine to one job.
    pub fn single(id: JobId) -> Self {
        Allocation {
            entries: vec![(id, 1.0)],
        }
    }

    pub fn from_entries(entries: Vec<(JobId, f64)>) -> Self {
        Allocation { entries }
    }

    /// Shares proportional to the given weights.
    pub fn proportional<I>(weights: I) -> Self
    where
        I: IntoIterator<Item = (JobId, f64)>,
    {
        let entries: Vec<(JobId, f64)> = weights.into_iter().collect();
        let total: f64 = entries.iter().map(|e| e.1).sum();
        Allocation {
            entries: entries.into_iter().map(|(id, w)| (id, w / total)).collect(),
        }
    }

    pub fn entries(&self) -> &[(JobId, f64)] {
        &self.entries
    }

    pub fn get(&self, id: JobId) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == id)
            .map_or(0.0, |e| e.1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A preemptive single-machine policy driven by the engine.
///
/// Calls arrive with non-decreasing times. At each event instant the engine
/// reports real completions first, then arrivals, then asks for the
/// allocation and for the next internal event. The allocation must stay valid
/// until the next event.
pub trait Scheduler {
    fn name(&self) -> String;

    fn notify_arrival(&mut self, job: &JobSpec, t: f64) -> Result<(), PolicyError>;

    fn notify_real_completion(&mut self, id: JobId, t: f64) -> Result<(), PolicyError>;

    fn allocation(&mut self, t: f64) -> Result<Allocation, PolicyError>;

    /// Next instant after `t` at which the allocation may change without an
    /// arrival or completion.
    fn next_internal_event(&mut self, _t: f64) -> Result<Option<f64>, PolicyError> {
        Ok(None)
    }

    /// Jobs that ever exceeded their estimate (see PSBS); zero for policies
    /// without the notion.
    fn late_jobs_seen(&self) -> usize {
        0
    }
}

impl<S: Scheduler + ?Sized> Scheduler for Box<S> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn notify_arrival(&mut self, job: &JobSpec, t: f64) -> Result<(), PolicyError> {
        (**self).notify_arrival(job, t)
    }
    fn notify_real_completion(&mut self, id: JobId, t: f64) -> Result<(), PolicyError> {
        (**self).notify_real_completion(id, t)
    }
    fn allocation(&mut self, t: f64) -> Result<Allocation, PolicyError> {
        (**self).allocation(t)
    }
    fn next_internal_event(&mut self, t: f64) -> Result<Option<f64>, PolicyError> {
        (**self).next_internal_event(t)
    }
    fn late_jobs_seen(&self) -> usize {
        (**self).late_jobs_seen()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionRecord {
    pub job_id: JobId,
    pub release: f64,
    pub completion: f64,
    pub sojourn: f64,
    /// Service integrated over the run; equals the true size.
    pub service: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    Completion,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Arrival => "arrival",
            EventKind::Completion => "completion",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub job_id: JobId,
    /// Allocation in force right after this instant's events.
    pub allocation: Allocation,
}

#[derive(Debug, Clone, Default)]
pub struct SimulationResult {
    /// One record per job, sorted by id.
    pub records: Vec<CompletionRecord>,
    /// Job ids by completion time, ties by id.
    pub completion_sequence: Vec<JobId>,
    pub event_count: usize,
    pub wall_time: Duration,
    pub events: Option<Vec<EventRecord>>,
}

impl SimulationResult {
    pub(crate) fn from_records(
        mut records: Vec<CompletionRecord>,
        event_count: usize,
        wall_time: Duration,
        events: Option<Vec<EventRecord>>,
    ) -> Self {
        records.sort_by_key(|r| r.job_id);
        let mut order: Vec<&CompletionRecord> = records.iter().collect();
        order.sort_by(|a, b| a.completion.total_cmp(&b.completion).then(a.job_id.cmp(&b.job_id)));
        let completion_sequence = order.iter().map(|r| r.job_id).collect();
        SimulationResult {
            records,
            completion_sequence,
            event_count,
            wall_time,
            events,
        }
    }

    pub fn record(&self, id: JobId) -> Option<&CompletionRecord> {
        self.records
            .binary_search_by_key(&id, |r| r.job_id)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn completion(&self, id: JobId) -> Option<f64> {
        self.record(id).map(|r| r.completion)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineConfig {
    pub log_events: bool,
    /// Fail if a non-empty system is not given the whole machine.
    pub require_work_conservation: bool,
    /// Process simultaneous arrivals and completions in descending id order.
    pub reverse_ties: bool,
}

/// Runs `workload` under `scheduler` with the default configuration.
pub fn run<S: Scheduler + ?Sized>(
    workload: &Workload,
    scheduler: &mut S,
) -> Result<SimulationResult, SimError> {
    run_with(workload, scheduler, &EngineConfig::default())
}

struct Pending {
    remaining: f64,
    service: f64,
    release: f64,
}

/// Consecutive zero-length steps tolerated before declaring a stall.
const MAX_IDLE_STEPS: usize = 1_000;

pub fn run_with<S: Scheduler + ?Sized>(
    workload: &Workload,
    scheduler: &mut S,
    config: &EngineConfig,
) -> Result<SimulationResult, SimError> {
    let started = Instant::now();
    let jobs = workload.jobs();
    let mut next_job = 0;
    let mut pending: HashMap<JobId, Pending> = HashMap::new();
    let mut records = Vec::with_capacity(jobs.len());
    let mut events = config.log_events.then(Vec::new);
    let mut unsnapped = 0;
    let mut event_count = 0;
    let mut idle_steps = 0;
    let mut t = 0.0_f64;

    let policy = |time: f64| move |source: PolicyError| SimError::Policy { time, source };

    loop {
        // arrivals at the current instant (completions were handled at the end
        // of the previous step)
        let first = next_job;
        while next_job < jobs.len() && jobs[next_job].release <= t + EVENT_EPSILON {
            next_job += 1;
        }
        let mut arriving: Vec<&JobSpec> = jobs[first..next_job].iter().collect();
        if config.reverse_ties {
            arriving.reverse();
        }
        for job in arriving {
            pending.insert(
                job.id,
                Pending {
                    remaining: job.size,
                    service: 0.0,
                    release: job.release,
                },
            );
            scheduler.notify_arrival(job, t).map_err(policy(t))?;
            if let Some(log) = events.as_mut() {
                log.push(EventRecord {
                    time: t,
                    kind: EventKind::Arrival,
                    job_id: job.id,
                    allocation: Allocation::empty(),
                });
                unsnapped += 1;
            }
        }

        if next_job == jobs.len() && pending.is_empty() {
            if let Some(log) = events.as_mut() {
                snapshot(log, &mut unsnapped, &Allocation::empty());
            }
            break;
        }

        let alloc = scheduler.allocation(t).map_err(policy(t))?;
        validate(&alloc, &pending, t)?;
        if let Some(log) = events.as_mut() {
            snapshot(log, &mut unsnapped, &alloc);
        }
        let total = alloc.total();
        if config.require_work_conservation
            && !pending.is_empty()
            && (total - 1.0).abs() > ALLOCATION_EPSILON
        {
            return Err(SimError::NotWorkConserving { time: t, total });
        }

        let mut t_next = f64::INFINITY;
        for &(id, share) in alloc.entries() {
            if share > 0.0 {
                t_next = t_next.min(t + pending[&id].remaining / share);
            }
        }
        if let Some(job) = jobs.get(next_job) {
            t_next = t_next.min(job.release);
        }
        if let Some(internal) = scheduler.next_internal_event(t).map_err(policy(t))? {
            t_next = t_next.min(internal.max(t));
        }
        if !t_next.is_finite() {
            return Err(SimError::Stalled {
                time: t,
                pending: pending.len(),
            });
        }
        if t_next <= t {
            idle_steps += 1;
            if idle_steps > MAX_IDLE_STEPS {
                return Err(SimError::Stalled {
                    time: t,
                    pending: pending.len(),
                });
            }
        } else {
            idle_steps = 0;
        }

        let dt = t_next - t;
        let mut finished = Vec::new();
        for &(id, share) in alloc.entries() {
            if share <= 0.0 {
                continue;
            }
            let p = pending.get_mut(&id).expect("validated");
            let finish = t + p.remaining / share;
            if finish <= t_next + EVENT_EPSILON || p.remaining - share * dt <= WORK_EPSILON {
                p.service += p.remaining;
                p.remaining = 0.0;
                finished.push(id);
            } else {
                p.remaining -= share * dt;
                p.service += share * dt;
            }
        }
        t = t_next;
        event_count += 1;

        finished.sort_unstable();
        if config.reverse_ties {
            finished.reverse();
        }
        for id in finished {
            let p = pending.remove(&id).expect("finished job was pending");
            records.push(CompletionRecord {
                job_id: id,
                release: p.release,
                completion: t,
                sojourn: t - p.release,
                service: p.service,
            });
            scheduler.notify_real_completion(id, t).map_err(policy(t))?;
            if let Some(log) = events.as_mut() {
                log.push(EventRecord {
                    time: t,
                    kind: EventKind::Completion,
                    job_id: id,
                    allocation: Allocation::empty(),
                });
                unsnapped += 1;
            }
        }
    }

    Ok(SimulationResult::from_records(
        records,
        event_count,
        started.elapsed(),
        events,
    ))
}

fn snapshot(log: &mut [EventRecord], unsnapped: &mut usize, alloc: &Allocation) {
    let n = log.len();
    for e in &mut log[n - *unsnapped..] {
        e.allocation = alloc.clone();
    }
    *unsnapped = 0;
}

fn validate(alloc: &Allocation, pending: &HashMap<JobId, Pending>, time: f64) -> Result<(), SimError> {
    let violation = |reason: String| SimError::PolicyViolation { time, reason };
    let mut seen = Vec::with_capacity(alloc.entries().len());
    for &(id, share) in alloc.entries() {
        if !(share >= 0.0 && share.is_finite()) {
            return Err(violation(format!("job {id} has share {share}")));
        }
        if !pending.contains_key(&id) {
            return Err(violation(format!("job {id} is not pending")));
        }
        if seen.contains(&id) {
            return Err(violation(format!("job {id} allocated twice")));
        }
        seen.push(id);
    }
    let total = alloc.total();
    if total > 1.0 + ALLOCATION_EPSILON {
        return Err(violation(format!("shares sum to {total}")));
    }
    Ok(())
}

/// The event log of a run made with `log_events` set.
pub fn replay_events(result: &SimulationResult) -> Result<&[EventRecord], SimError> {
    result.events.as_deref().ok_or(SimError::NoEventLog)
}

/// Writes `time,kind,job_id` rows.
pub fn write_event_log<W: Write>(events: &[EventRecord], sink: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["time", "kind", "job_id"])?;
    for e in events {
        w.write_record([e.time.to_string(), e.kind.to_string(), e.job_id.to_string()])?;
    }
    w.flush()
}
