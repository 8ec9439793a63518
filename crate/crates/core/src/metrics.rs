//! Sojourn statistics, dominance checks and size/estimate correlation.

use thiserror::Error;

use crate::engine::SimulationResult;
use crate::workload::{JobId, Workload};

/// Default slack for per-job completion comparisons.
pub const DOMINANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{0} is undefined for an empty result")]
    Empty(&'static str),
    #[error("baseline mean sojourn time is zero")]
    ZeroBaseline,
    #[error("results cover different job sets")]
    MismatchedJobs,
    #[error("correlation needs two equally long samples of at least two values")]
    BadSample,
}

pub fn mean_sojourn(result: &SimulationResult) -> Result<f64, MetricsError> {
    if result.is_empty() {
        return Err(MetricsError::Empty("mean sojourn time"));
    }
    Ok(result.records.iter().map(|r| r.sojourn).sum::<f64>() / result.len() as f64)
}

/// Mean sojourn time of `result` over that of `baseline`.
pub fn normalized_mst(result: &SimulationResult, baseline: &SimulationResult) -> Result<f64, MetricsError> {
    let base = mean_sojourn(baseline)?;
    if base == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(mean_sojourn(result)? / base)
}

pub fn makespan(result: &SimulationResult) -> Result<f64, MetricsError> {
    result
        .records
        .iter()
        .map(|r| r.completion)
        .max_by(f64::total_cmp)
        .ok_or(MetricsError::Empty("makespan"))
}

/// A job finishing later under the candidate than under the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub job_id: JobId,
    pub candidate: f64,
    pub reference: f64,
}

/// Jobs whose completion under `candidate` exceeds the one under `reference`
/// by more than `tol`. An empty list means the candidate dominates on this
/// instance.
pub fn dominance_violations(
    candidate: &SimulationResult,
    reference: &SimulationResult,
    tol: f64,
) -> Result<Vec<Violation>, MetricsError> {
    if candidate.len() != reference.len() {
        return Err(MetricsError::MismatchedJobs);
    }
    let mut out = Vec::new();
    for (c, r) in candidate.records.iter().zip(&reference.records) {
        if c.job_id != r.job_id {
            return Err(MetricsError::MismatchedJobs);
        }
        if c.completion > r.completion + tol {
            out.push(Violation {
                job_id: c.job_id,
                candidate: c.completion,
                reference: r.completion,
            });
        }
    }
    Ok(out)
}

pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(MetricsError::BadSample);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::BadSample);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation of `ln(size)` with `ln(estimate)`; diagnostic companion to the
/// raw-value correlation.
pub fn log_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    pearson_correlation(&lx, &ly)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobMetrics {
    pub job_id: JobId,
    pub sojourn: f64,
    /// Sojourn over true size.
    pub slowdown: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mst: f64,
    /// `mst` over the baseline's, when a baseline was given.
    pub mst_normalized: Option<f64>,
    pub makespan: f64,
    pub per_job: Vec<JobMetrics>,
    pub dominance_violations: Vec<Violation>,
}

impl MetricsReport {
    /// Summarizes `result` on `workload`; with a baseline, also normalizes and
    /// lists the jobs that finish later than under the baseline.
    pub fn new(
        workload: &Workload,
        result: &SimulationResult,
        baseline: Option<&SimulationResult>,
    ) -> Result<Self, MetricsError> {
        let mut per_job = Vec::with_capacity(result.len());
        for r in &result.records {
            let size = workload.get(r.job_id).ok_or(MetricsError::MismatchedJobs)?.size;
            per_job.push(JobMetrics {
                job_id: r.job_id,
                sojourn: r.sojourn,
                slowdown: r.sojourn / size,
            });
        }
        let (mst_normalized, dominance_violations) = match baseline {
            Some(b) => (
                Some(normalized_mst(result, b)?),
                dominance_violations(result, b, DOMINANCE_TOLERANCE)?,
            ),
            None => (None, Vec::new()),
        };
        Ok(MetricsReport {
            mst: mean_sojourn(result)?,
            mst_normalized,
            makespan: makespan(result)?,
            per_job,
            dominance_violations,
        })
    }

    pub fn dominates(&self) -> bool {
        self.dominance_violations.is_empty()
    }
}
