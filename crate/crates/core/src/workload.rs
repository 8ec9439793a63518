//! Synthetic workloads and trace files.
//!
//! Job sizes are Weibull with a chosen shape and mean, releases follow a
//! Poisson process whose rate is set by the target load, and size estimates
//! carry a multiplicative log-normal error `exp(sigma * Z)`. Every random
//! quantity comes from its own generator stream derived from the master seed,
//! so changing `sigma` leaves the sizes and releases untouched.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal, Weibull};
use statrs::function::gamma::gamma;
use thiserror::Error;

/// Job identifier, unique within a workload.
pub type JobId = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("job {id}: {reason}")]
    InvalidJob { id: JobId, reason: String },
    #[error("duplicate job id {0}")]
    DuplicateId(JobId),
}

fn param_err(name: &'static str, reason: impl Into<String>) -> WorkloadError {
    WorkloadError::Parameter {
        name,
        reason: reason.into(),
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// One job of a single-machine workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobSpec {
    pub id: JobId,
    pub release: f64,
    /// True service requirement; drives real completion.
    pub size: f64,
    /// Size as seen by size-based schedulers.
    pub estimate: f64,
    pub weight: f64,
}

impl JobSpec {
    /// Job with exact size knowledge and unit weight.
    pub fn exact(id: JobId, release: f64, size: f64) -> Self {
        JobSpec {
            id,
            release,
            size,
            estimate: size,
            weight: 1.0,
        }
    }

    pub fn with_estimate(mut self, estimate: f64) -> Self {
        self.estimate = estimate;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |reason: &str| WorkloadError::InvalidJob {
            id: self.id,
            reason: reason.to_string(),
        };
        if !(self.release.is_finite() && self.release >= 0.0) {
            return Err(bad("release must be finite and >= 0"));
        }
        if !(self.size.is_finite() && self.size > 0.0) {
            return Err(bad("size must be finite and > 0"));
        }
        if !(self.estimate.is_finite() && self.estimate > 0.0) {
            return Err(bad("estimate must be finite and > 0"));
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(bad("weight must be finite and > 0"));
        }
        Ok(())
    }
}

/// A validated job list ordered by `(release, id)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Workload {
    jobs: Vec<JobSpec>,
}

impl Workload {
    pub fn new(mut jobs: Vec<JobSpec>) -> Result<Self, WorkloadError> {
        let mut seen = HashSet::with_capacity(jobs.len());
        for job in &jobs {
            job.validate()?;
            if !seen.insert(job.id) {
                return Err(WorkloadError::DuplicateId(job.id));
            }
        }
        jobs.sort_by(|a, b| a.release.total_cmp(&b.release).then(a.id.cmp(&b.id)));
        Ok(Workload { jobs })
    }

    pub fn jobs(&self) -> &[JobSpec] {
        &self.jobs
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn get(&self, id: JobId) -> Option<&JobSpec> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.size).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.estimate).collect()
    }

    /// Copy of this workload with every estimate replaced by the true size.
    pub fn with_exact_estimates(&self) -> Workload {
        Workload {
            jobs: self.jobs.iter().map(|j| j.with_estimate(j.size)).collect(),
        }
    }

    /// Copy of this workload with every weight set to 1.
    pub fn with_unit_weights(&self) -> Workload {
        Workload {
            jobs: self.jobs.iter().map(|j| j.with_weight(1.0)).collect(),
        }
    }
}

/// How job weights are drawn.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum WeightModel {
    /// Every job has weight 1.
    #[default]
    Uniform,
    /// I.i.d. draws from `values` with the matching `probs`.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightModel::Uniform => f.write_str("uniform"),
            WeightModel::Discrete { values, probs } => {
                let parts: Vec<String> = values
                    .iter()
                    .zip(probs)
                    .map(|(v, p)| format!("{v}:{p}"))
                    .collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl std::str::FromStr for WeightModel {
    type Err = WorkloadError;

    /// `uniform`, or a comma-separated list of `value:probability` pairs
    /// (a bare `value` counts with probability 1).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(WeightModel::Uniform);
        }
        let mut values = Vec::new();
        let mut probs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (v, p) = match part.split_once(':') {
                Some((v, p)) => (v.trim(), p.trim()),
                None => (part, "1"),
            };
            let v: f64 = v
                .parse()
                .map_err(|_| param_err("weights", format!("bad weight value `{v}`")))?;
            let p: f64 = p
                .parse()
                .map_err(|_| param_err("weights", format!("bad probability `{p}`")))?;
            values.push(v);
            probs.push(p);
        }
        let model = WeightModel::Discrete { values, probs };
        model.validate()?;
        Ok(model)
    }
}

impl WeightModel {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        match self {
            WeightModel::Uniform => Ok(()),
            WeightModel::Discrete { values, probs } => {
                if values.is_empty() {
                    return Err(param_err("weights", "empty value set"));
                }
                if values.len() != probs.len() {
                    return Err(param_err("weights", "values and probabilities differ in length"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(param_err("weights", "weights must be finite and > 0"));
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || probs.iter().sum::<f64>() <= 0.0 {
                    return Err(param_err("weights", "probabilities must be >= 0 with a positive sum"));
                }
                Ok(())
            }
        }
    }
}

/// Where the log-normal error factor is centred.
///
/// `Median` keeps `exp(sigma * Z)` as is, so half the jobs are underestimated
/// but the mean estimate is `exp(sigma^2 / 2)` times the true size. `Mean`
/// divides by that factor so estimates are unbiased on average; the total
/// estimated work then matches the true work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorBias {
    #[default]
    Median,
    Mean,
}

impl ErrorBias {
    /// Constant factor applied to every `size * exp(sigma * Z)`.
    pub fn scale(self, sigma: f64) -> f64 {
        match self {
            ErrorBias::Median => 1.0,
            ErrorBias::Mean => (-sigma * sigma / 2.0).exp(),
        }
    }
}

impl fmt::Display for ErrorBias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorBias::Median => "median",
            ErrorBias::Mean => "mean",
        })
    }
}

impl std::str::FromStr for ErrorBias {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "median" => Ok(ErrorBias::Median),
            "mean" => Ok(ErrorBias::Mean),
            other => Err(param_err("error_bias", format!("expected `median` or `mean`, got `{other}`"))),
        }
    }
}

/// Knobs of the synthetic workload generator.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadParams {
    pub n_jobs: usize,
    /// Weibull shape; below 1 is heavy-tailed.
    pub shape: f64,
    pub mean_size: f64,
    /// Offered load, arrival rate times mean size.
    pub load: f64,
    /// Spread of the log-normal estimation error.
    pub sigma: f64,
    pub error_bias: ErrorBias,
    pub weight_model: WeightModel,
    pub seed: u64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            n_jobs: 10_000,
            shape: 1.0,
            mean_size: 1.0,
            load: 0.9,
            sigma: 0.0,
            error_bias: ErrorBias::Median,
            weight_model: WeightModel::Uniform,
            seed: 0,
        }
    }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.n_jobs == 0 {
            return Err(param_err("n_jobs", "must be positive"));
        }
        check_positive("shape", self.shape)?;
        check_positive("mean_size", self.mean_size)?;
        check_load(self.load)?;
        check_sigma(self.sigma)?;
        self.weight_model.validate()
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<(), WorkloadError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(param_err(name, format!("must be finite and > 0, got {x}")))
    }
}

fn check_load(load: f64) -> Result<(), WorkloadError> {
    if load > 0.0 && load < 1.0 {
        Ok(())
    } else {
        Err(param_err("load", format!("must lie in (0, 1), got {load}")))
    }
}

fn check_sigma(sigma: f64) -> Result<(), WorkloadError> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(param_err("sigma", format!("must be finite and >= 0, got {sigma}")))
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a path of integers by folding each
/// component through SplitMix64: `h = splitmix64(h ^ splitmix64(part))`.
pub fn mix_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |h, &part| splitmix64(h ^ splitmix64(part)))
}

/// Generator streams of [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Sizes = 1,
    Arrivals = 2,
    Errors = 3,
    Weights = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, &[stream as u64]))
}

/// Weibull scale giving the requested mean: `mean / Γ(1 + 1/shape)`.
pub fn weibull_scale_for_mean(shape: f64, mean: f64) -> Result<f64, WorkloadError> {
    check_positive("shape", shape)?;
    check_positive("mean", mean)?;
    Ok(mean / gamma(1.0 + 1.0 / shape))
}

pub fn gen_sizes<R: Rng + ?Sized>(
    n: usize,
    shape: f64,
    mean: f64,
    rng: &mut R,
) -> Result<Vec<f64>, WorkloadError> {
    let scale = weibull_scale_for_mean(shape, mean)?;
    let dist = Weibull::new(scale, shape).map_err(|e| param_err("shape", e.to_string()))?;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = dist.sample(rng);
        // a uniform draw of exactly 1 maps to 0
        if x > 0.0 && x.is_finite() {
            out.push(x);
        }
    }
    Ok(out)
}

/// Release times of a Poisson process with rate `load / mean_size`.
pub fn gen_arrivals<R: Rng + ?Sized>(
    n: usize,
    load: f64,
    mean_size: f64,
    rng: &mut R,
) -> Result<Vec<f64>, WorkloadError> {
    check_load(load)?;
    check_positive("mean_size", mean_size)?;
    let dist = Exp::new(load / mean_size).map_err(|e| param_err("load", e.to_string()))?;
    let mut t = 0.0;
    Ok((0..n)
        .map(|_| {
            t += dist.sample(rng);
            t
        })
        .collect())
}

/// `estimate_i = size_i * exp(sigma * Z_i)` with standard normal `Z_i`.
pub fn gen_estimates<R: Rng + ?Sized>(
    sizes: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>, WorkloadError> {
    check_sigma(sigma)?;
    if let Some(bad) = sizes.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(param_err("sizes", format!("sizes must be finite and > 0, got {bad}")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(sizes
        .iter()
        .map(|&s| {
            let z: f64 = normal.sample(rng);
            apply_error(s, sigma, z)
        })
        .collect())
}

/// Multiplicative log-normal error applied to one size for a given normal draw.
pub fn apply_error(size: f64, sigma: f64, z: f64) -> f64 {
    let e = size * (sigma * z).exp();
    // keep estimates strictly positive and finite even for extreme draws
    e.clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Population Pearson correlation between a Weibull(`shape`) size and its
/// estimate `size * c * exp(sigma * Z)`, for any constant `c`.
///
/// Sample correlations at heavy-tailed shapes scatter widely around this
/// value, since a handful of huge jobs dominate both moments.
pub fn error_correlation(shape: f64, sigma: f64) -> f64 {
    let m1 = gamma(1.0 + 1.0 / shape);
    let m2 = gamma(1.0 + 2.0 / shape);
    let var = m2 - m1 * m1;
    (var / (m2 * (sigma * sigma).exp() - m1 * m1)).sqrt()
}

pub fn gen_weights<R: Rng + ?Sized>(
    n: usize,
    model: &WeightModel,
    rng: &mut R,
) -> Result<Vec<f64>, WorkloadError> {
    model.validate()?;
    match model {
        WeightModel::Uniform => Ok(vec![1.0; n]),
        WeightModel::Discrete { values, probs } => {
            let index = WeightedIndex::new(probs).map_err(|e| param_err("weights", e.to_string()))?;
            Ok((0..n).map(|_| values[index.sample(rng)]).collect())
        }
    }
}

/// Builds a workload from `params`; a pure function of the parameters.
///
/// Jobs are numbered `0..n` in release order.
pub fn generate(params: &WorkloadParams) -> Result<Workload, WorkloadError> {
    params.validate()?;
    let n = params.n_jobs;
    let sizes = gen_sizes(
        n,
        params.shape,
        params.mean_size,
        &mut stream_rng(params.seed, Stream::Sizes),
    )?;
    let releases = gen_arrivals(
        n,
        params.load,
        params.mean_size,
        &mut stream_rng(params.seed, Stream::Arrivals),
    )?;
    let mut estimates = gen_estimates(
        &sizes,
        params.sigma,
        &mut stream_rng(params.seed, Stream::Errors),
    )?;
    if params.error_bias != ErrorBias::Median {
        let scale = params.error_bias.scale(params.sigma);
        for e in &mut estimates {
            *e = (*e * scale).clamp(f64::MIN_POSITIVE, f64::MAX);
        }
    }
    let weights = gen_weights(
        n,
        &params.weight_model,
        &mut stream_rng(params.seed, Stream::Weights),
    )?;
    let jobs = (0..n)
        .map(|i| JobSpec {
            id: i as JobId,
            release: releases[i],
            size: sizes[i],
            estimate: estimates[i],
            weight: weights[i],
        })
        .collect();
    Workload::new(jobs)
}

pub const TRACE_HEADER: [&str; 5] = ["id", "release", "size", "estimate", "weight"];

/// Writes `id,release,size,estimate,weight` rows.
///
/// Floats use the shortest decimal form that parses back to the same bits.
pub fn write_trace<W: Write>(workload: &Workload, sink: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRACE_HEADER).map_err(csv_io)?;
    for j in workload.jobs() {
        w.write_record([
            j.id.to_string(),
            j.release.to_string(),
            j.size.to_string(),
            j.estimate.to_string(),
            j.weight.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> TraceError {
    TraceError::Io(e.into())
}

pub fn read_trace<R: Read>(source: R) -> Result<Workload, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Ok(Workload::default()),
        Some(r) => r.map_err(|e| csv_parse(1, e))?,
    };
    if header.iter().ne(TRACE_HEADER) {
        return Err(TraceError::Parse {
            line: 1,
            message: format!("expected header `{}`", TRACE_HEADER.join(",")),
        });
    }
    let mut jobs = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in records.enumerate() {
        let fallback_line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_parse(fallback_line, e))?;
        let line = rec.position().map_or(fallback_line, |p| p.line());
        let err = |message: String| TraceError::Parse { line, message };
        if rec.len() != TRACE_HEADER.len() {
            return Err(err(format!("expected 5 fields, found {}", rec.len())));
        }
        let id: JobId = rec[0]
            .parse()
            .map_err(|_| err(format!("bad id `{}`", &rec[0])))?;
        let num = |k: usize| -> Result<f64, TraceError> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| err(format!("bad {} `{}`", TRACE_HEADER[k], &rec[k])))
        };
        let job = JobSpec {
            id,
            release: num(1)?,
            size: num(2)?,
            estimate: num(3)?,
            weight: num(4)?,
        };
        job.validate().map_err(|e| err(e.to_string()))?;
        if !seen.insert(id) {
            return Err(err(format!("duplicate job id {id}")));
        }
        jobs.push(job);
    }
    Workload::new(jobs).map_err(|e| TraceError::Parse {
        line: 0,
        message: e.to_string(),
    })
}

fn csv_parse(line: u64, e: csv::Error) -> TraceError {
    let line = e.position().map_or(line, |p| p.line());
    TraceError::Parse {
        line,
        message: e.to_string(),
    }
}
