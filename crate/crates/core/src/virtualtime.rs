//! Weighted virtual time for simulating DPS (and PS, with unit weights).
//!
//! Virtual time `v` advances at rate `1 / W`, where `W` is the total weight
//! of the jobs still pending in the simulated schedule. A job arriving at
//! real time `t` with estimated size `s` and weight `w` receives the finish
//! tag `v(t) + s / w`; it completes in the simulation exactly when `v`
//! reaches that tag. Tags never change once assigned, so the order in which
//! pending jobs complete in the simulation is fixed at arrival and a binary
//! heap answers "who finishes next" in `O(log n)`.

use std::cell::Cell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::workload::JobId;

/// Two instants closer than this are the same event.
pub const EVENT_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("cannot move clock back from {now} to {requested}")]
    TimeReversal { now: f64, requested: f64 },
    #[error("job {0} already added to the virtual clock")]
    DuplicateJob(JobId),
    #[error("job {0} is unknown to the virtual clock")]
    UnknownJob(JobId),
    #[error("job {id}: estimate and weight must be finite and > 0")]
    InvalidJob { id: JobId },
}

thread_local! {
    static TAG_COMPARISONS: Cell<u64> = const { Cell::new(0) };
}

/// Finish-tag comparisons performed on this thread so far.
///
/// Take differences around a region of interest to measure its cost.
pub fn tag_comparisons() -> u64 {
    TAG_COMPARISONS.with(Cell::get)
}

/// Total order on `(tag, release, id)`; ties on the tag fall back to release
/// time, then id.
pub fn tag_order(a: (f64, f64, JobId), b: (f64, f64, JobId)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

#[derive(Debug, Clone, Copy)]
struct TagEntry {
    tag: f64,
    release: f64,
    id: JobId,
}

impl TagEntry {
    fn key(&self) -> (f64, f64, JobId) {
        (self.tag, self.release, self.id)
    }
}

impl Ord for TagEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        TAG_COMPARISONS.with(|c| c.set(c.get() + 1));
        tag_order(self.key(), other.key())
    }
}

impl PartialOrd for TagEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for TagEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for TagEntry {}

/// A job as seen by the simulated reference scheduler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualJob {
    pub id: JobId,
    pub finish_tag: f64,
    pub weight: f64,
    /// Real time at which the job entered the clock.
    pub release: f64,
    pub completed: bool,
}

/// A job finishing in the simulated schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualCompletion {
    pub id: JobId,
    /// Real instant at which `v` reached the job's tag.
    pub time: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VirtualClock {
    v_now: f64,
    last_real_time: f64,
    active_weight: f64,
    active: usize,
    queue: BinaryHeap<Reverse<TagEntry>>,
    jobs: HashMap<JobId, VirtualJob>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn v_now(&self) -> f64 {
        self.v_now
    }

    pub fn last_real_time(&self) -> f64 {
        self.last_real_time
    }

    pub fn active_weight(&self) -> f64 {
        self.active_weight
    }

    /// Number of jobs still pending in the simulation.
    pub fn active_len(&self) -> usize {
        self.active
    }

    pub fn job(&self, id: JobId) -> Option<&VirtualJob> {
        self.jobs.get(&id)
    }

    pub fn finish_tag(&self, id: JobId) -> Option<f64> {
        self.jobs.get(&id).map(|j| j.finish_tag)
    }

    pub fn is_virtually_complete(&self, id: JobId) -> Option<bool> {
        self.jobs.get(&id).map(|j| j.completed)
    }

    /// Moves the clock to real time `t`, returning the simulated completions
    /// that happen on the way, in order.
    ///
    /// Completions due within [`EVENT_EPSILON`] after `t` are reported as
    /// happening at `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<Vec<VirtualCompletion>, ClockError> {
        if t < self.last_real_time - EVENT_EPSILON || t.is_nan() {
            return Err(ClockError::TimeReversal {
                now: self.last_real_time,
                requested: t,
            });
        }
        let t = t.max(self.last_real_time);
        let mut done = Vec::new();
        while let Some(Reverse(head)) = self.queue.peek().copied() {
            let reach = self.last_real_time + (head.tag - self.v_now).max(0.0) * self.active_weight;
            if reach > t + EVENT_EPSILON {
                break;
            }
            self.queue.pop();
            let when = reach.clamp(self.last_real_time, t);
            self.v_now = self.v_now.max(head.tag);
            self.last_real_time = when;
            let job = self.jobs.get_mut(&head.id).expect("queued job is tracked");
            job.completed = true;
            self.active -= 1;
            if self.active == 0 {
                self.active_weight = 0.0;
            } else {
                self.active_weight -= job.weight;
            }
            done.push(VirtualCompletion {
                id: head.id,
                time: when,
            });
        }
        if self.active > 0 {
            self.v_now += (t - self.last_real_time) / self.active_weight;
        }
        self.last_real_time = t;
        Ok(done)
    }

    /// Adds a job at real time `t` and returns its finish tag.
    ///
    /// Completions up to `t` are processed first and discarded; call
    /// [`advance_to`](Self::advance_to) beforehand to observe them.
    pub fn on_arrival(
        &mut self,
        t: f64,
        id: JobId,
        estimate: f64,
        weight: f64,
    ) -> Result<f64, ClockError> {
        if !(estimate.is_finite() && estimate > 0.0 && weight.is_finite() && weight > 0.0) {
            return Err(ClockError::InvalidJob { id });
        }
        if self.jobs.contains_key(&id) {
            return Err(ClockError::DuplicateJob(id));
        }
        self.advance_to(t)?;
        let tag = self.v_now + estimate / weight;
        let release = self.last_real_time;
        self.jobs.insert(
            id,
            VirtualJob {
                id,
                finish_tag: tag,
                weight,
                release,
                completed: false,
            },
        );
        self.queue.push(Reverse(TagEntry {
            tag,
            release,
            id,
        }));
        self.active += 1;
        self.active_weight += weight;
        Ok(tag)
    }

    /// The next simulated completion and its real instant, assuming no
    /// further arrivals: `now + (min_tag - v) * W`, with `now` the time of the
    /// last advance.
    pub fn next_virtual_completion(&self) -> Option<(JobId, f64)> {
        self.queue.peek().map(|Reverse(head)| {
            let dt = (head.tag - self.v_now).max(0.0) * self.active_weight;
            (head.id, self.last_real_time + dt)
        })
    }

    /// The job among `ids` with the smallest finish tag, ties broken by
    /// release time and then id.
    pub fn peek_order<I>(&self, ids: I) -> Result<Option<JobId>, ClockError>
    where
        I: IntoIterator<Item = JobId>,
    {
        let mut best: Option<(f64, f64, JobId)> = None;
        for id in ids {
            let job = self.jobs.get(&id).ok_or(ClockError::UnknownJob(id))?;
            let key = (job.finish_tag, job.release, id);
            if best.is_none_or(|b| tag_order(key, b) == Ordering::Less) {
                best = Some(key);
            }
        }
        Ok(best.map(|b| b.2))
    }
}
