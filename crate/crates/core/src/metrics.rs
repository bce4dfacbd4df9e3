//! CBR schedules and the run-level performance metrics: normalized PDR,
//! network lifetime, average residual energy over time, and the end-of-run
//! residual-energy histogram.

use crate::config::FlowSpec;
use crate::model::{NodeId, SimTime};
use crate::sim::SimResult;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub generated: u64,
    pub delivered: u64,
    pub dropped_no_route: u64,
    pub dropped_queue: u64,
    pub dropped_ttl: u64,
    pub dropped_energy: u64,
}

impl FlowCounters {
    pub fn dropped(&self) -> u64 {
        self.dropped_no_route + self.dropped_queue + self.dropped_ttl + self.dropped_energy
    }

    pub fn add(&mut self, other: &FlowCounters) {
        self.generated += other.generated;
        self.delivered += other.delivered;
        self.dropped_no_route += other.dropped_no_route;
        self.dropped_queue += other.dropped_queue;
        self.dropped_ttl += other.dropped_ttl;
        self.dropped_energy += other.dropped_energy;
    }
}

/// A flow with its endpoints fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedFlow {
    pub flow_id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub packet_size: usize,
    pub interval: f64,
    pub start: SimTime,
    /// `f64::INFINITY` when the flow runs until the end.
    pub stop: SimTime,
}

impl ResolvedFlow {
    pub fn new(spec: &FlowSpec, src: NodeId, dst: NodeId) -> Self {
        ResolvedFlow {
            flow_id: spec.flow_id,
            src,
            dst,
            packet_size: spec.packet_size,
            interval: spec.interval,
            start: spec.start,
            stop: spec.stop.unwrap_or(f64::INFINITY),
        }
    }

    /// Emission time of packet `k`, or `None` once the schedule ends. A
    /// flow emits exactly [`ideal_packets`](Self::ideal_packets) packets, so
    /// a partial trailing interval sends nothing.
    pub fn send_time(&self, k: u64, horizon: SimTime) -> Option<SimTime> {
        (k < self.ideal_packets(horizon)).then_some(self.start + k as f64 * self.interval)
    }

    /// Packets that would be sent in `[start, min(stop, horizon))`.
    pub fn ideal_packets(&self, horizon: SimTime) -> u64 {
        let span = self.stop.min(horizon) - self.start;
        if span <= 0.0 {
            return 0;
        }
        (span / self.interval + EPS).floor() as u64
    }
}

/// The CBR emission times of a flow up to `horizon`.
pub fn generate_cbr(flow: &ResolvedFlow, horizon: SimTime) -> impl Iterator<Item = SimTime> + '_ {
    (0u64..).map_while(move |k| flow.send_time(k, horizon))
}

/// Delivered packets over the ideal count, in percent; `None` when no
/// packet should have been sent.
pub fn normalized_pdr(counters: &[FlowCounters], flows: &[ResolvedFlow], horizon: SimTime) -> Option<f64> {
    let ideal: u64 = flows.iter().map(|f| f.ideal_packets(horizon)).sum();
    if ideal == 0 {
        return None;
    }
    let delivered: u64 = counters.iter().map(|c| c.delivered).sum();
    Some(100.0 * delivered as f64 / ideal as f64)
}

/// Time of the first node depletion.
pub fn network_lifetime(depleted_at: &[Option<SimTime>]) -> Option<SimTime> {
    depleted_at.iter().flatten().copied().min_by(f64::total_cmp)
}

pub fn mean_residual(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    residuals.iter().sum::<f64>() / residuals.len() as f64
}

pub const HISTOGRAM_BINS: usize = 10;

/// Node counts per 10 % band of residual energy. Bands are left-closed,
/// with 100 % folded into the top band.
pub fn residual_histogram(residuals: &[f64], initial: f64) -> [usize; HISTOGRAM_BINS] {
    let mut bins = [0usize; HISTOGRAM_BINS];
    for &r in residuals {
        let frac = (r / initial).clamp(0.0, 1.0);
        let b = ((frac * HISTOGRAM_BINS as f64 + EPS).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub normalized_pdr: Option<f64>,
    pub network_lifetime: Option<SimTime>,
    pub avg_residual_series: Vec<(SimTime, f64)>,
    pub residual_histogram: [usize; HISTOGRAM_BINS],
    pub totals: FlowCounters,
}

impl MetricsReport {
    pub fn from_result(result: &SimResult) -> Self {
        let residuals: Vec<f64> = result.energy.iter().map(|e| e.residual).collect();
        let depleted: Vec<Option<SimTime>> = result.energy.iter().map(|e| e.depleted_at).collect();
        let mut totals = FlowCounters::default();
        for c in &result.counters {
            totals.add(c);
        }
        MetricsReport {
            // a run cut short by the first depletion has no meaningful ideal count
            normalized_pdr: if result.run_to_depletion {
                None
            } else {
                normalized_pdr(&result.counters, &result.flows, result.end_time)
            },
            network_lifetime: network_lifetime(&depleted),
            avg_residual_series: result.energy_series.clone(),
            residual_histogram: residual_histogram(&residuals, result.initial_energy),
            totals,
        }
    }
}
