//! Scheduling policies.
//!
//! Sharing policies ([`Dps`], which covers PS) split the machine among all
//! pending jobs. The serial policies give the whole machine to one job,
//! chosen by a priority key that changes only at arrivals and completions:
//! arrival order ([`Fifo`]), remaining size ([`Srpt`]), position in a fixed
//! completion sequence ([`Pri`]), or finish tag in a simulated reference
//! schedule ([`Fsp`], [`Psbs`]).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use ordered_float::OrderedFloat;

use crate::engine::{self, Allocation, PolicyError, Scheduler, SimError};
use crate::virtualtime::VirtualClock;
use crate::workload::{JobId, JobSpec, Workload};

type F = OrderedFloat<f64>;

/// Priority key: smaller runs first; ties by release, then id.
type Key = (F, F, JobId);

/// Job ids in the order they complete under some schedule.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompletionSequence(Vec<JobId>);

impl CompletionSequence {
    pub fn new(ids: Vec<JobId>) -> Self {
        CompletionSequence(ids)
    }

    pub fn ids(&self) -> &[JobId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True if this is a permutation of the workload's ids.
    pub fn covers(&self, workload: &Workload) -> bool {
        let mine: HashSet<JobId> = self.0.iter().copied().collect();
        mine.len() == self.0.len()
            && mine.len() == workload.len()
            && workload.jobs().iter().all(|j| mine.contains(&j.id))
    }
}

impl fmt::Display for CompletionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", ids.join(", "))
    }
}

/// Processor sharing: `1/n` each (PS) or `w_i / Σw` (DPS).
#[derive(Debug, Clone, Default)]
pub struct Dps {
    weighted: bool,
    pending: BTreeMap<JobId, f64>,
}

pub fn ps_policy() -> Dps {
    Dps {
        weighted: false,
        pending: BTreeMap::new(),
    }
}

pub fn dps_policy() -> Dps {
    Dps {
        weighted: true,
        pending: BTreeMap::new(),
    }
}

impl Scheduler for Dps {
    fn name(&self) -> String {
        if self.weighted { "dps" } else { "ps" }.into()
    }

    fn notify_arrival(&mut self, job: &JobSpec, _t: f64) -> Result<(), PolicyError> {
        let weight = if self.weighted { job.weight } else { 1.0 };
        if self.pending.insert(job.id, weight).is_some() {
            return Err(PolicyError::DuplicateArrival(job.id));
        }
        Ok(())
    }

    fn notify_real_completion(&mut self, id: JobId, _t: f64) -> Result<(), PolicyError> {
        self.pending
            .remove(&id)
            .map(drop)
            .ok_or(PolicyError::UnknownJob(id))
    }

    fn allocation(&mut self, _t: f64) -> Result<Allocation, PolicyError> {
        Ok(Allocation::proportional(
            self.pending.iter().map(|(&id, &w)| (id, w)),
        ))
    }
}

/// Serial service of the pending job with the smallest key.
#[derive(Debug, Clone, Default)]
struct KeyQueue {
    queue: BTreeSet<Key>,
    keys: HashMap<JobId, Key>,
}

impl KeyQueue {
    fn insert(&mut self, id: JobId, key: Key) -> Result<(), PolicyError> {
        if self.keys.insert(id, key).is_some() {
            return Err(PolicyError::DuplicateArrival(id));
        }
        self.queue.insert(key);
        Ok(())
    }

    fn remove(&mut self, id: JobId) -> Option<Key> {
        let key = self.keys.remove(&id)?;
        self.queue.remove(&key);
        Some(key)
    }

    fn first(&self) -> Option<JobId> {
        self.queue.first().map(|k| k.2)
    }

    fn len(&self) -> usize {
        self.keys.len()
    }
}

fn key(primary: f64, release: f64, id: JobId) -> Key {
    (OrderedFloat(primary), OrderedFloat(release), id)
}

/// First come, first served (ties by id).
#[derive(Debug, Clone, Default)]
pub struct Fifo {
    queue: KeyQueue,
}

pub fn fifo_policy() -> Fifo {
    Fifo::default()
}

impl Scheduler for Fifo {
    fn name(&self) -> String {
        "fifo".into()
    }

    fn notify_arrival(&mut self, job: &JobSpec, _t: f64) -> Result<(), PolicyError> {
        self.queue.insert(job.id, key(job.release, job.release, job.id))
    }

    fn notify_real_completion(&mut self, id: JobId, _t: f64) -> Result<(), PolicyError> {
        self.queue.remove(id).map(drop).ok_or(PolicyError::UnknownJob(id))
    }

    fn allocation(&mut self, _t: f64) -> Result<Allocation, PolicyError> {
        Ok(self.queue.first().map_or_else(Allocation::empty, Allocation::single))
    }
}

/// Shortest remaining processing time, on true sizes or on estimates.
///
/// With estimates the remaining time is `estimate - attained` and may go
/// negative; it is never clamped, so an underestimated job that reaches its
/// estimate keeps the machine until it really completes.
#[derive(Debug, Clone, Default)]
pub struct Srpt {
    use_estimates: bool,
    waiting: KeyQueue,
    /// Running job, its remaining time at `since`, and its release.
    running: Option<(JobId, f64, f64, f64)>,
}

pub fn srpt_policy(use_estimates: bool) -> Srpt {
    Srpt {
        use_estimates,
        ..Default::default()
    }
}

impl Srpt {
    fn running_key(&self, t: f64) -> Option<Key> {
        self.running
            .map(|(id, remaining, since, release)| key(remaining - (t - since), release, id))
    }
}

impl Scheduler for Srpt {
    fn name(&self) -> String {
        if self.use_estimates { "srpte" } else { "srpt" }.into()
    }

    fn notify_arrival(&mut self, job: &JobSpec, _t: f64) -> Result<(), PolicyError> {
        if self.running.is_some_and(|r| r.0 == job.id) {
            return Err(PolicyError::DuplicateArrival(job.id));
        }
        let size = if self.use_estimates { job.estimate } else { job.size };
        self.waiting.insert(job.id, key(size, job.release, job.id))
    }

    fn notify_real_completion(&mut self, id: JobId, _t: f64) -> Result<(), PolicyError> {
        if self.running.is_some_and(|r| r.0 == id) {
            self.running = None;
            Ok(())
        } else {
            self.waiting.remove(id).map(drop).ok_or(PolicyError::UnknownJob(id))
        }
    }

    fn allocation(&mut self, t: f64) -> Result<Allocation, PolicyError> {
        let best_waiting = self.waiting.queue.first().copied();
        match (self.running_key(t), best_waiting) {
            (Some(run), Some(wait)) if wait < run => {
                self.waiting.insert(run.2, run)?;
                self.waiting.remove(wait.2);
                self.running = Some((wait.2, wait.0 .0, t, wait.1 .0));
            }
            (None, Some(wait)) => {
                self.waiting.remove(wait.2);
                self.running = Some((wait.2, wait.0 .0, t, wait.1 .0));
            }
            _ => {}
        }
        Ok(self.running.map_or_else(Allocation::empty, |r| Allocation::single(r.0)))
    }
}

/// Whole machine to the first pending job of a fixed completion sequence.
#[derive(Debug, Clone)]
pub struct Pri {
    label: String,
    rank: HashMap<JobId, usize>,
    pending: BTreeSet<(usize, JobId)>,
}

pub fn pri_policy(sequence: &CompletionSequence) -> Pri {
    Pri {
        label: "pri".into(),
        rank: sequence.ids().iter().enumerate().map(|(i, &id)| (id, i)).collect(),
        pending: BTreeSet::new(),
    }
}

impl Pri {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

impl Scheduler for Pri {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn notify_arrival(&mut self, job: &JobSpec, _t: f64) -> Result<(), PolicyError> {
        let rank = *self.rank.get(&job.id).ok_or(PolicyError::NotInSequence(job.id))?;
        if !self.pending.insert((rank, job.id)) {
            return Err(PolicyError::DuplicateArrival(job.id));
        }
        Ok(())
    }

    fn notify_real_completion(&mut self, id: JobId, _t: f64) -> Result<(), PolicyError> {
        let rank = *self.rank.get(&id).ok_or(PolicyError::NotInSequence(id))?;
        if self.pending.remove(&(rank, id)) {
            Ok(())
        } else {
            Err(PolicyError::UnknownJob(id))
        }
    }

    fn allocation(&mut self, _t: f64) -> Result<Allocation, PolicyError> {
        Ok(self
            .pending
            .first()
            .map_or_else(Allocation::empty, |&(_, id)| Allocation::single(id)))
    }
}

/// Completion order of `workload` under `reference`, ties by id.
pub fn pri_completion_sequence<S: Scheduler + ?Sized>(
    workload: &Workload,
    reference: &mut S,
) -> Result<CompletionSequence, SimError> {
    let result = engine::run(workload, reference)?;
    Ok(CompletionSequence(result.completion_sequence))
}

/// Fair Sojourn Protocol: serve the pending job that finishes first in a
/// simulated PS schedule over the estimated sizes.
///
/// Jobs whose simulated completion has passed keep their tag and are served
/// one at a time in tag order, as plain FSP does.
#[derive(Debug, Clone, Default)]
pub struct Fsp {
    clock: VirtualClock,
    pending: KeyQueue,
}

pub fn fsp_policy() -> Fsp {
    Fsp::default()
}

impl Scheduler for Fsp {
    fn name(&self) -> String {
        "fsp".into()
    }

    fn notify_arrival(&mut self, job: &JobSpec, t: f64) -> Result<(), PolicyError> {
        let tag = self.clock.on_arrival(t, job.id, job.estimate, 1.0)?;
        self.pending.insert(job.id, key(tag, t, job.id))
    }

    fn notify_real_completion(&mut self, id: JobId, t: f64) -> Result<(), PolicyError> {
        self.pending.remove(id).ok_or(PolicyError::UnknownJob(id))?;
        self.clock.advance_to(t)?;
        Ok(())
    }

    fn allocation(&mut self, t: f64) -> Result<Allocation, PolicyError> {
        self.clock.advance_to(t)?;
        Ok(self.pending.first().map_or_else(Allocation::empty, Allocation::single))
    }
}

/// PSBS: serial service in the completion order of a simulated DPS schedule
/// over estimated sizes and job weights.
///
/// A job still pending when its simulated completion passes is *late*. While
/// any job is late, the late jobs share the machine in proportion to their
/// weights and everything else waits. Jobs that really complete before their
/// simulated completion stay in the simulation until their tag is reached.
#[derive(Debug, Clone, Default)]
pub struct Psbs {
    clock: VirtualClock,
    /// Really pending, not late.
    eligible: KeyQueue,
    late: BTreeMap<JobId, f64>,
    /// Really complete, still pending in the simulation.
    lingering: HashSet<JobId>,
    late_seen: usize,
}

pub fn psbs_policy() -> Psbs {
    Psbs::default()
}

impl Psbs {
    fn sync(&mut self, t: f64) -> Result<(), PolicyError> {
        for done in self.clock.advance_to(t)? {
            if self.eligible.remove(done.id).is_some() {
                let weight = self.clock.job(done.id).map_or(1.0, |j| j.weight);
                self.late.insert(done.id, weight);
                self.late_seen += 1;
            } else {
                self.lingering.remove(&done.id);
            }
        }
        Ok(())
    }

    pub fn late_ids(&self) -> impl Iterator<Item = JobId> + '_ {
        self.late.keys().copied()
    }

    pub fn lingering_ids(&self) -> impl Iterator<Item = JobId> + '_ {
        self.lingering.iter().copied()
    }

    /// Jobs that are really pending, late or not.
    pub fn pending_len(&self) -> usize {
        self.eligible.len() + self.late.len()
    }

    pub fn clock(&self) -> &VirtualClock {
        &self.clock
    }
}

impl Scheduler for Psbs {
    fn name(&self) -> String {
        "psbs".into()
    }

    fn notify_arrival(&mut self, job: &JobSpec, t: f64) -> Result<(), PolicyError> {
        self.sync(t)?;
        let tag = self.clock.on_arrival(t, job.id, job.estimate, job.weight)?;
        self.eligible.insert(job.id, key(tag, t, job.id))
    }

    fn notify_real_completion(&mut self, id: JobId, t: f64) -> Result<(), PolicyError> {
        if self.late.remove(&id).is_none() {
            self.eligible.remove(id).ok_or(PolicyError::UnknownJob(id))?;
            self.lingering.insert(id);
        }
        self.sync(t)
    }

    fn allocation(&mut self, t: f64) -> Result<Allocation, PolicyError> {
        self.sync(t)?;
        if !self.late.is_empty() {
            return Ok(Allocation::proportional(
                self.late.iter().map(|(&id, &w)| (id, w)),
            ));
        }
        Ok(self.eligible.first().map_or_else(Allocation::empty, Allocation::single))
    }

    fn next_internal_event(&mut self, t: f64) -> Result<Option<f64>, PolicyError> {
        self.sync(t)?;
        Ok(self.clock.next_virtual_completion().map(|(_, at)| at))
    }

    fn late_jobs_seen(&self) -> usize {
        self.late_seen
    }
}

/// Policy names understood by [`PolicyName::parse`].
pub const POLICY_NAMES: [&str; 8] = ["ps", "dps", "fifo", "srpt", "srpte", "fsp", "psbs", "pri:<reference>"];

/// A registered policy, buildable for a given workload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyName {
    Ps,
    Dps,
    Fifo,
    Srpt,
    Srpte,
    Fsp,
    Psbs,
    /// Pri over the completion sequence of the inner policy.
    Pri(Box<PolicyName>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown policy `{0}`; registered: ps, dps, fifo, srpt, srpte, fsp, psbs, pri:<reference>")]
pub struct UnknownPolicy(pub String);

impl std::str::FromStr for PolicyName {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = s.trim().to_ascii_lowercase();
        Ok(match name.as_str() {
            "ps" => PolicyName::Ps,
            "dps" => PolicyName::Dps,
            "fifo" => PolicyName::Fifo,
            "srpt" => PolicyName::Srpt,
            "srpte" => PolicyName::Srpte,
            "fsp" => PolicyName::Fsp,
            "psbs" => PolicyName::Psbs,
            other => match other.strip_prefix("pri:") {
                Some(inner) => PolicyName::Pri(Box::new(
                    inner.parse().map_err(|_| UnknownPolicy(s.to_string()))?,
                )),
                None => return Err(UnknownPolicy(s.to_string())),
            },
        })
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolicyName::Ps => "ps",
            PolicyName::Dps => "dps",
            PolicyName::Fifo => "fifo",
            PolicyName::Srpt => "srpt",
            PolicyName::Srpte => "srpte",
            PolicyName::Fsp => "fsp",
            PolicyName::Psbs => "psbs",
            PolicyName::Pri(inner) => return f.pad(&format!("pri:{inner}")),
        };
        f.pad(name)
    }
}

impl PolicyName {
    /// A fresh scheduler for `workload`. `pri:` policies simulate their
    /// reference on the workload first.
    pub fn build(&self, workload: &Workload) -> Result<Box<dyn Scheduler + Send>, SimError> {
        Ok(match self {
            PolicyName::Ps => Box::new(ps_policy()),
            PolicyName::Dps => Box::new(dps_policy()),
            PolicyName::Fifo => Box::new(fifo_policy()),
            PolicyName::Srpt => Box::new(srpt_policy(false)),
            PolicyName::Srpte => Box::new(srpt_policy(true)),
            PolicyName::Fsp => Box::new(fsp_policy()),
            PolicyName::Psbs => Box::new(psbs_policy()),
            PolicyName::Pri(reference) => {
                let mut inner = reference.build(workload)?;
                let seq = pri_completion_sequence(workload, &mut inner)?;
                Box::new(pri_policy(&seq).with_label(self.to_string()))
            }
        })
    }

    /// Every concrete policy, plus Pri over PS, DPS and FIFO.
    pub fn all() -> Vec<PolicyName> {
        use PolicyName::*;
        vec![
            Ps,
            Dps,
            Fifo,
            Srpt,
            Srpte,
            Fsp,
            Psbs,
            Pri(Box::new(Ps)),
            Pri(Box::new(Dps)),
            Pri(Box::new(Fifo)),
        ]
    }
}
