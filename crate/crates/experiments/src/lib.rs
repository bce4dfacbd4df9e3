//! Scenario files, sweep grids, CSV/SVG artifacts and the protocol
//! comparison report built on `mmolsr-core`.

pub mod artifacts;
pub mod plot;
pub mod report;
pub mod scenario;
pub mod sweep;

use std::path::Path;

use anyhow::Result;

use sweep::{CellError, RunRecord, SweepPlan};

/// Runs a plan and writes its run index and per-run directories. Failed
/// cells are listed in the index and the sweep carries on.
pub fn execute(plan: &SweepPlan, out: &Path) -> Result<Vec<Result<RunRecord, CellError>>> {
    let results = sweep::run_cells(plan.cells());
    artifacts::write_runs(out, &plan.name, &results)?;
    Ok(results)
}

pub fn successes(results: &[Result<RunRecord, CellError>]) -> Vec<&RunRecord> {
    results.iter().filter_map(|r| r.as_ref().ok()).collect()
}
