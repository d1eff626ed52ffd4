//! Seeded experiment runs, regret bookkeeping, theory diagnostics and summary
//! statistics.

mod simulate;
mod stats;
pub mod theory;

use rayon::prelude::*;

pub use simulate::{simulate, ArmCounts, CheckpointRecord, RunRecord, RunTrace, SimulationOptions, TraceEntry};
pub use stats::{
    mean_se, normal_ci, samples_from_records, summarize, summarize_samples, MethodSummary, PairedSummary,
    RegretSample, SummaryStats, Z_95,
};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Runs every `(seed, method)` pair of the config. Records come back sorted by
/// method (in config order) then seed, whatever the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let cfg = config.confidence()?;
    let params = config.tacc_params()?;
    let options = SimulationOptions {
        checkpoints: config.checkpoints(),
        record_actions: false,
        fixed_bias: config.algorithm.fixed_bias.clone(),
    };
    let methods = config.run.methods.clone();
    let seeds: Vec<u64> = config.run.seeds.iter().collect();

    let work = || -> Result<Vec<RunRecord>> {
        let per_seed: Vec<Result<Vec<RunRecord>>> = seeds
            .par_iter()
            .map(|&seed| {
                let instance = config.build_instance(seed)?;
                methods
                    .iter()
                    .map(|&method| {
                        let mut trace = simulate(&instance, method, &params, &cfg, seed, &options)?;
                        trace.record.run_id = config.run_id(seed, method);
                        Ok(trace.record)
                    })
                    .collect()
            })
            .collect();
        let mut records = Vec::with_capacity(seeds.len() * methods.len());
        for r in per_seed {
            records.extend(r?);
        }
        records.sort_by_key(|r| (methods.iter().position(|&m| m == r.method), r.seed));
        Ok(records)
    };

    if config.run.jobs == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.jobs)
            .build()
            .map_err(|e| Error::config("run.jobs", e.to_string()))?
            .install(work)
    }
}
