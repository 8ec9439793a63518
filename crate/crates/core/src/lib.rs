//! Simulation toolkit for fair size-based scheduling on one preemptive
//! machine.
//!
//! * [`workload`]: Weibull/Poisson workload generator with log-normal size
//!   estimation errors, and the CSV trace format.
//! * [`virtualtime`]: weighted virtual time with finish tags, the
//!   `O(log n)` engine behind FSP and PSBS.
//! * [`engine`]: exact event-driven fluid simulator and the [`Scheduler`]
//!   contract.
//! * [`schedulers`]: PS, DPS, FIFO, SRPT (true or estimated sizes), Pri over
//!   any completion sequence, FSP and PSBS.
//! * [`oracle`]: fixed-step simulator used to validate the engine.
//! * [`metrics`]: mean sojourn time, normalization, dominance checks,
//!   correlation.
//! * [`cli`]: `generate`, `run`, `sweep` and `compare` front end.
//!
//! ```
//! use fairsched::prelude::*;
//!
//! let w = Workload::new(vec![JobSpec::exact(0, 0.0, 4.0), JobSpec::exact(1, 1.0, 1.0)]).unwrap();
//! let ps = run(&w, &mut ps_policy()).unwrap();
//! let fsp = run(&w, &mut fsp_policy()).unwrap();
//! assert_eq!(fsp.completion(1), Some(2.0));
//! assert!(dominance_violations(&fsp, &ps, 1e-9).unwrap().is_empty());
//! ```

pub mod cli;
pub mod engine;
pub mod metrics;
pub mod oracle;
pub mod schedulers;
pub mod virtualtime;
pub mod workload;

pub use engine::Scheduler;

pub mod prelude {
    pub use crate::engine::{
        replay_events, run, run_with, Allocation, CompletionRecord, EngineConfig, Scheduler,
        SimError, SimulationResult,
    };
    pub use crate::metrics::{
        dominance_violations, makespan, mean_sojourn, normalized_mst, pearson_correlation,
        MetricsReport,
    };
    pub use crate::oracle::{step_simulate, OracleConfig};
    pub use crate::schedulers::{
        dps_policy, fifo_policy, fsp_policy, pri_completion_sequence, pri_policy, ps_policy,
        psbs_policy, srpt_policy, CompletionSequence, PolicyName,
    };
    pub use crate::virtualtime::VirtualClock;
    pub use crate::workload::{generate, ErrorBias, JobSpec, WeightModel, Workload, WorkloadParams};
}
