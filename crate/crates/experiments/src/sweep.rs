//! Grid enumeration and parallel execution of sweep cells.

use std::fmt;

use mmolsr_core::config::{Mobility, Protocol, RunLength, ScenarioConfig};
use mmolsr_core::metrics::MetricsReport;
use mmolsr_core::sim::{self, SimResult};
use rayon::prelude::*;

/// Cap on a run-to-depletion cell when no node dies.
pub const DEPLETION_CAP: f64 = 1000.0;

/// Horizon for delivery-ratio runs.
pub const PDR_HORIZON: f64 = 150.0;

/// Packet intervals of the rate grid, slowest first.
pub const INTERVALS: [f64; 4] = [0.1, 0.075, 0.05, 0.025];

pub const PROTOCOLS: [Protocol; 2] = [Protocol::Standard, Protocol::MultiMetric];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    Fixed { horizon: f64 },
    ToDepletion { max: f64 },
}

impl RunMode {
    pub fn label(&self) -> &'static str {
        match self {
            RunMode::Fixed { .. } => "pdr",
            RunMode::ToDepletion { .. } => "lifetime",
        }
    }

    fn run_length(&self) -> RunLength {
        match *self {
            RunMode::Fixed { horizon } => RunLength::Fixed(horizon),
            RunMode::ToDepletion { max } => RunLength::UntilDepletion { max },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub name: String,
    pub base: ScenarioConfig,
    /// Overrides every flow's interval. Empty keeps the base flows.
    pub intervals: Vec<f64>,
    /// Empty keeps the base mobility.
    pub mobility: Vec<Mobility>,
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
    /// Empty keeps the base run length.
    pub modes: Vec<RunMode>,
}

/// One point of the grid.
#[derive(Debug, Clone)]
pub struct Cell {
    pub scenario: String,
    pub mode: Option<RunMode>,
    pub mobility: Mobility,
    pub interval: Option<f64>,
    pub protocol: Protocol,
    pub seed: u64,
    pub config: ScenarioConfig,
}

impl Cell {
    /// Stable identifier, also the run's directory name.
    pub fn id(&self) -> String {
        let mut id = self.scenario.clone();
        if let Some(m) = self.mode {
            id.push('-');
            id.push_str(m.label());
        }
        id.push('-');
        id.push_str(&self.mobility.label());
        if let Some(i) = self.interval {
            id.push_str(&format!("-i{i}"));
        }
        id.push_str(&format!("-{}-s{}", self.protocol, self.seed));
        id
    }
}

impl SweepPlan {
    /// Two protocols over the given seeds with the base scenario unchanged.
    pub fn single(name: &str, base: ScenarioConfig, seeds: Vec<u64>) -> Self {
        SweepPlan {
            name: name.to_string(),
            base,
            intervals: Vec::new(),
            mobility: Vec::new(),
            protocols: PROTOCOLS.to_vec(),
            seeds,
            modes: Vec::new(),
        }
    }

    /// The rate grid: every interval and mobility, fixed-horizon runs for
    /// delivery and run-to-depletion runs for lifetime.
    pub fn rate_grid(name: &str, base: ScenarioConfig, seeds: Vec<u64>) -> Self {
        SweepPlan {
            name: name.to_string(),
            base,
            intervals: INTERVALS.to_vec(),
            mobility: vec![
                Mobility::Static,
                Mobility::random_waypoint(2.0),
                Mobility::random_waypoint(20.0),
            ],
            protocols: PROTOCOLS.to_vec(),
            seeds,
            modes: vec![
                RunMode::Fixed { horizon: PDR_HORIZON },
                RunMode::ToDepletion { max: DEPLETION_CAP },
            ],
        }
    }

    /// Cells in the order mode, mobility, interval, protocol, seed.
    pub fn cells(&self) -> Vec<Cell> {
        fn or_keep<T: Copy>(v: &[T]) -> Vec<Option<T>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        }
        let modes = or_keep(&self.modes);
        let intervals = or_keep(&self.intervals);
        let mobility: Vec<Mobility> = if self.mobility.is_empty() {
            vec![self.base.mobility]
        } else {
            self.mobility.clone()
        };
        let mut out = Vec::new();
        for &mode in &modes {
            for &mob in &mobility {
                for &interval in &intervals {
                    for &protocol in &self.protocols {
                        for &seed in &self.seeds {
                            let mut config = self.base.clone();
                            config.mobility = mob;
                            config.protocol = protocol;
                            config.seed = seed;
                            if let Some(m) = mode {
                                config.sim_duration = m.run_length();
                            }
                            if let Some(i) = interval {
                                for f in &mut config.flows {
                                    f.interval = i;
                                }
                            }
                            out.push(Cell {
                                scenario: self.name.clone(),
                                mode,
                                mobility: mob,
                                interval,
                                protocol,
                                seed,
                                config,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub cell: Cell,
    pub result: SimResult,
    pub report: MetricsReport,
}

impl RunRecord {
    pub fn id(&self) -> String {
        self.cell.id()
    }
}

#[derive(Debug, Clone)]
pub struct CellError {
    pub id: String,
    pub message: String,
}

impl fmt::Display for CellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.message)
    }
}

impl std::error::Error for CellError {}

pub fn run_cell(cell: Cell) -> Result<RunRecord, CellError> {
    let result = sim::run(cell.config.clone()).map_err(|e| CellError {
        id: cell.id(),
        message: e.to_string(),
    })?;
    let report = MetricsReport::from_result(&result);
    Ok(RunRecord { cell, result, report })
}

/// Runs cells in parallel; results come back in input order.
pub fn run_cells(cells: Vec<Cell>) -> Vec<Result<RunRecord, CellError>> {
    cells.into_par_iter().map(run_cell).collect()
}
