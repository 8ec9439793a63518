//! Parameter sweeps over Weibull shape × error sigma × replication.
//!
//! Each cell `(shape, sigma, replication)` gets its own workload seed,
//! `mix_seed(master, [shape_index, sigma_index, replication])`, and every
//! policy of the cell runs on that same workload, PS included, so the
//! normalization compares like with like. Cells run in parallel; rows come
//! back in grid order.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, SimError};
use crate::metrics::{self, MetricsError};
use crate::schedulers::PolicyName;
use crate::workload::{generate, mix_seed, ErrorBias, WeightModel, WorkloadError, WorkloadParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub shapes: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Replications per `(shape, sigma)` pair.
    pub seeds: usize,
    pub master_seed: u64,
    pub n_jobs: usize,
    pub load: f64,
    pub error_bias: ErrorBias,
    pub weight_model: WeightModel,
    pub policies: Vec<PolicyName>,
}

/// Eight shapes log-spaced over `[0.125, 4]`.
pub fn default_shapes() -> Vec<f64> {
    (0..8).map(|i| 0.125 * 32f64.powf(i as f64 / 7.0)).collect()
}

/// `0, 0.25, ..., 3`.
pub fn default_sigmas() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.25).collect()
}

pub fn default_policies() -> Vec<PolicyName> {
    use PolicyName::*;
    vec![Ps, Srpt, Srpte, Fsp, Psbs]
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            shapes: default_shapes(),
            sigmas: default_sigmas(),
            seeds: 5,
            master_seed: 0,
            n_jobs: 10_000,
            load: 0.9,
            error_bias: ErrorBias::Median,
            weight_model: WeightModel::Uniform,
            policies: default_policies(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub shape: f64,
    pub sigma: f64,
    /// Workload seed of the cell; `generate --seed` reproduces it.
    pub seed: u64,
    pub policy: PolicyName,
    pub mst: f64,
    pub mst_norm_ps: f64,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("empty sweep axis: {0}")]
    EmptyAxis(&'static str),
    #[error("cell shape={shape} sigma={sigma} seed={seed}: {source}")]
    Workload {
        shape: f64,
        sigma: f64,
        seed: u64,
        source: WorkloadError,
    },
    #[error("cell shape={shape} sigma={sigma} seed={seed} policy={policy}: {source}")]
    Simulation {
        shape: f64,
        sigma: f64,
        seed: u64,
        policy: PolicyName,
        source: SimError,
    },
    #[error("cell shape={shape} sigma={sigma} seed={seed} policy={policy}: {source}")]
    Metrics {
        shape: f64,
        sigma: f64,
        seed: u64,
        policy: PolicyName,
        source: MetricsError,
    },
}

pub fn cell_seed(master: u64, shape_index: usize, sigma_index: usize, replication: usize) -> u64 {
    mix_seed(
        master,
        &[shape_index as u64, sigma_index as u64, replication as u64],
    )
}

struct Cell {
    shape: f64,
    sigma: f64,
    seed: u64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.shapes.is_empty() {
            return Err(SweepError::EmptyAxis("shapes"));
        }
        if self.sigmas.is_empty() {
            return Err(SweepError::EmptyAxis("sigmas"));
        }
        if self.seeds == 0 {
            return Err(SweepError::EmptyAxis("seeds"));
        }
        if self.policies.is_empty() {
            return Err(SweepError::EmptyAxis("policies"));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for (i, &shape) in self.shapes.iter().enumerate() {
            for (j, &sigma) in self.sigmas.iter().enumerate() {
                for rep in 0..self.seeds {
                    cells.push(Cell {
                        shape,
                        sigma,
                        seed: cell_seed(self.master_seed, i, j, rep),
                    });
                }
            }
        }
        cells
    }

    fn params(&self, cell: &Cell) -> WorkloadParams {
        WorkloadParams {
            n_jobs: self.n_jobs,
            shape: cell.shape,
            mean_size: 1.0,
            load: self.load,
            sigma: cell.sigma,
            error_bias: self.error_bias,
            weight_model: self.weight_model.clone(),
            seed: cell.seed,
        }
    }

    fn run_cell(&self, cell: &Cell) -> Result<Vec<SweepRow>, SweepError> {
        let workload = generate(&self.params(cell)).map_err(|source| SweepError::Workload {
            shape: cell.shape,
            sigma: cell.sigma,
            seed: cell.seed,
            source,
        })?;
        let sim_err = |policy: &PolicyName| {
            let policy = policy.clone();
            move |source| SweepError::Simulation {
                shape: cell.shape,
                sigma: cell.sigma,
                seed: cell.seed,
                policy,
                source,
            }
        };
        let metrics_err = |policy: &PolicyName| {
            let policy = policy.clone();
            move |source| SweepError::Metrics {
                shape: cell.shape,
                sigma: cell.sigma,
                seed: cell.seed,
                policy,
                source,
            }
        };
        let simulate = |policy: &PolicyName| {
            let mut scheduler = policy.build(&workload).map_err(sim_err(policy))?;
            engine::run(&workload, &mut scheduler).map_err(sim_err(policy))
        };
        let ps = PolicyName::Ps;
        let baseline = simulate(&ps)?;
        let ps_mst = metrics::mean_sojourn(&baseline).map_err(metrics_err(&ps))?;
        self.policies
            .iter()
            .map(|policy| {
                let mst = if *policy == ps {
                    ps_mst
                } else {
                    metrics::mean_sojourn(&simulate(policy)?).map_err(metrics_err(policy))?
                };
                Ok(SweepRow {
                    shape: cell.shape,
                    sigma: cell.sigma,
                    seed: cell.seed,
                    policy: policy.clone(),
                    mst,
                    mst_norm_ps: mst / ps_mst,
                })
            })
            .collect()
    }
}

/// Runs every cell of `grid`; rows are ordered by shape, sigma, replication,
/// then policy as listed in the grid.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<SweepRow>, SweepError> {
    grid.validate()?;
    let per_cell: Vec<Vec<SweepRow>> = grid
        .cells()
        .par_iter()
        .map(|cell| grid.run_cell(cell))
        .collect::<Result<_, _>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

pub const SWEEP_HEADER: [&str; 6] = ["shape", "sigma", "seed", "policy", "mst", "mst_norm_ps"];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], sink: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.shape.to_string(),
            r.sigma.to_string(),
            r.seed.to_string(),
            r.policy.to_string(),
            r.mst.to_string(),
            r.mst_norm_ps.to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(policies: Vec<PolicyName>) -> SweepGrid {
        SweepGrid {
            shapes: vec![1.0],
            sigmas: vec![0.0],
            seeds: 1,
            n_jobs: 200,
            policies,
            ..Default::default()
        }
    }

    #[test]
    fn default_axes() {
        let shapes = default_shapes();
        assert_eq!(shapes.len(), 8);
        assert!((shapes[0] - 0.125).abs() < 1e-12);
        assert!((shapes[7] - 4.0).abs() < 1e-12);
        let sigmas = default_sigmas();
        assert_eq!(sigmas.len(), 13);
        assert_eq!(sigmas[12], 3.0);
    }

    #[test]
    fn single_ps_cell_normalizes_to_one() {
        let rows = run_sweep(&tiny(vec![PolicyName::Ps])).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mst_norm_ps, 1.0);
        assert_eq!(rows[0].seed, cell_seed(0, 0, 0, 0));
    }

    #[test]
    fn rows_follow_grid_order() {
        let grid = SweepGrid {
            shapes: vec![0.5, 2.0],
            sigmas: vec![0.0, 1.0],
            seeds: 2,
            n_jobs: 100,
            policies: vec![PolicyName::Fsp, PolicyName::Ps],
            ..Default::default()
        };
        let rows = run_sweep(&grid).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2 * 2);
        let mut expected = Vec::new();
        for (i, shape) in [0.5, 2.0].into_iter().enumerate() {
            for (j, sigma) in [0.0, 1.0].into_iter().enumerate() {
                for rep in 0..2 {
                    for p in ["fsp", "ps"] {
                        expected.push((shape, sigma, cell_seed(0, i, j, rep), p.to_string()));
                    }
                }
            }
        }
        let got: Vec<_> = rows
            .iter()
            .map(|r| (r.shape, r.sigma, r.seed, r.policy.to_string()))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(run_sweep(&grid).unwrap(), rows);
    }

    #[test]
    fn empty_axes_rejected() {
        let mut grid = tiny(vec![PolicyName::Ps]);
        grid.sigmas.clear();
        assert!(matches!(run_sweep(&grid), Err(SweepError::EmptyAxis("sigmas"))));
    }

    #[test]
    fn bad_cell_is_identified() {
        let mut grid = tiny(vec![PolicyName::Ps]);
        grid.shapes = vec![1.0, -1.0];
        let err = run_sweep(&grid).unwrap_err();
        assert!(matches!(err, SweepError::Workload { shape, .. } if shape == -1.0));
    }
}
