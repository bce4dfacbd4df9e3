//! Discrete-event core.
//!
//! A run owns every node's protocol state, MAC queue, battery and position
//! and advances them through one `(time, seq)`-ordered event queue, so a
//! given config and seed always yields the same [`SimResult`].
//!
//! The channel is an idealized unit disk: a frame finishing at time `t`
//! reaches every live node within `radio_range` at `t`, with no collisions
//! or carrier sensing. Every such node pays reception energy, addressed or
//! not. Losses come from queue overflow, missing routes, TTL, dead nodes
//! and next hops that moved out of range.

mod energy;
mod event;
mod mac;
mod mobility;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use energy::{Charge, EnergyState};
pub use event::{Event, EventKind, EventQueue};
pub use mac::{frame_airtime, DataPacket, Frame, FrameKind, MacQueue, Payload};
pub use mobility::{random_waypoint_step, MobilityState, MOBILITY_TICK};

use crate::config::{Mobility, Protocol, RunLength, ScenarioConfig, ValidationErrors};
use crate::metrics::{mean_residual, FlowCounters, ResolvedFlow};
use crate::model::{in_range, NodeId, Position, SimTime};
use crate::olsr::{wire, OlsrState, TcOutcome};
use crate::routing::{
    compute_routing_table_multimetric, compute_routing_table_standard, compute_weight, NodeLocalState,
    RoutingTable,
};

/// Hop limit for flooded TCs.
pub const TC_TTL: u8 = 255;
/// Per-message header (sequence number, TTL, hop count) on control frames.
const CONTROL_HEADER_LEN: usize = 4;
const MAX_PLACEMENT_DRAWS: u32 = 10_000;
const MAX_ENDPOINT_DRAWS: u32 = 1_000;

/// Run-wide counters used by the invariant checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub transmissions: u64,
    pub hello_sent: u64,
    pub tc_originated: u64,
    pub tc_forwarded: u64,
    pub control_dropped: u64,
    /// Live in-range nodes summed over every completed transmission.
    pub receivers_at_tx_end: u64,
    /// Reception charges (addressed or overheard).
    pub rx_charges: u64,
    pub route_recomputations: u64,
    pub mpr_recomputations: u64,
    pub mpr_coverage_violations: u64,
    /// Events that would have run earlier than the event scheduling them.
    pub causality_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub protocol: Protocol,
    pub seed: u64,
    pub initial_energy: f64,
    pub flows: Vec<ResolvedFlow>,
    pub counters: Vec<FlowCounters>,
    pub energy: Vec<EnergyState>,
    pub energy_series: Vec<(SimTime, f64)>,
    pub initial_positions: Vec<Position>,
    /// Hop diameter of the initial unit-disk graph; `None` if disconnected.
    pub hop_diameter: Option<u32>,
    pub placement_redraws: u32,
    pub initially_connected: bool,
    /// Time the run stopped: the horizon, or the first depletion.
    pub end_time: SimTime,
    pub run_to_depletion: bool,
    pub events_processed: u64,
    /// Data packets neither delivered nor dropped when the run stopped, per
    /// flow, from the bookkeeping counters.
    pub in_flight: Vec<u64>,
    /// The same quantity recounted from queues and pending events.
    pub in_flight_scan: Vec<u64>,
    pub stats: SimStats,
}

impl SimResult {
    pub fn depleted_at(&self) -> Vec<Option<SimTime>> {
        self.energy.iter().map(|e| e.depleted_at).collect()
    }
}

#[derive(Debug, Clone)]
struct Node {
    olsr: OlsrState,
    table: RoutingTable,
    mac: MacQueue,
    /// A TxStart is pending or a frame is on the air.
    busy: bool,
    energy: EnergyState,
    mobility: MobilityState,
}

/// Unit-disk adjacency lists.
pub fn unit_disk_graph(positions: &[Position], range: f64) -> Vec<Vec<usize>> {
    (0..positions.len())
        .map(|i| {
            (0..positions.len())
                .filter(|&j| j != i && in_range(positions[i], positions[j], range))
                .collect()
        })
        .collect()
}

/// BFS hop counts from `src`; `None` marks unreachable nodes.
pub fn bfs_hops(adj: &[Vec<usize>], src: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        let d = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

/// Largest shortest-path hop count, or `None` if the graph is disconnected.
pub fn hop_diameter(adj: &[Vec<usize>]) -> Option<u32> {
    let mut best = 0;
    for s in 0..adj.len() {
        for d in bfs_hops(adj, s) {
            best = best.max(d?);
        }
    }
    Some(best)
}

pub struct Simulation {
    cfg: ScenarioConfig,
    rng: ChaCha8Rng,
    queue: EventQueue,
    now: SimTime,
    nodes: Vec<Node>,
    flows: Vec<ResolvedFlow>,
    flow_next: Vec<u64>,
    counters: Vec<FlowCounters>,
    outstanding: Vec<u64>,
    series: Vec<(SimTime, f64)>,
    stats: SimStats,
    events_processed: u64,
    initial_positions: Vec<Position>,
    hop_diameter: Option<u32>,
    placement_redraws: u32,
    /// Set once the run must stop after the current instant.
    stop_at: Option<SimTime>,
    finished: bool,
}

impl Simulation {
    /// Validates `cfg`, seeds the random stream, places nodes, picks flow
    /// endpoints and schedules the initial events.
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ValidationErrors> {
        let cfg = cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (positions, diameter, redraws) = place_nodes(&cfg, &mut rng);
        Ok(Self::build(cfg, rng, positions, diameter, redraws))
    }

    /// Like [`Simulation::new`] but with the initial positions given. The
    /// random stream starts at the flow endpoint draws.
    pub fn with_positions(cfg: ScenarioConfig, positions: Vec<Position>) -> Result<Self, ValidationErrors> {
        let mut cfg = cfg;
        cfg.node_count = positions.len();
        let cfg = cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let diameter = hop_diameter(&unit_disk_graph(&positions, cfg.radio_range));
        Ok(Self::build(cfg, rng, positions, diameter, 0))
    }

    fn build(
        cfg: ScenarioConfig,
        mut rng: ChaCha8Rng,
        positions: Vec<Position>,
        diameter: Option<u32>,
        redraws: u32,
    ) -> Self {
        let adj = unit_disk_graph(&positions, cfg.radio_range);
        let flows = resolve_flows(&cfg, &adj, &mut rng);

        let nodes = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| Node {
                olsr: {
                    let mut o = OlsrState::new(NodeId::from(i), cfg.neighbor_hold_time(), cfg.topology_hold_time());
                    o.set_tc_redundancy(cfg.tc_redundancy);
                    o
                },
                table: RoutingTable::default(),
                mac: MacQueue::new(cfg.mac_queue_capacity),
                busy: false,
                energy: EnergyState::new(cfg.initial_energy),
                mobility: MobilityState::at(p),
            })
            .collect();

        let mut sim = Simulation {
            rng,
            queue: EventQueue::default(),
            now: 0.0,
            nodes,
            flow_next: vec![0; flows.len()],
            counters: vec![FlowCounters::default(); flows.len()],
            outstanding: vec![0; flows.len()],
            flows,
            series: Vec::new(),
            stats: SimStats::default(),
            events_processed: 0,
            initial_positions: positions,
            hop_diameter: diameter,
            placement_redraws: redraws,
            stop_at: None,
            finished: false,
            cfg,
        };
        sim.schedule_initial();
        sim
    }

    fn horizon(&self) -> SimTime {
        self.cfg.sim_duration.horizon()
    }

    fn schedule_initial(&mut self) {
        let n = self.nodes.len();
        for i in 0..n {
            let t = self.rng.gen_range(0.0..self.cfg.hello_interval);
            self.queue.schedule(t, EventKind::HelloTimer(NodeId::from(i)));
        }
        for i in 0..n {
            let t = self.rng.gen_range(0.0..self.cfg.tc_interval);
            self.queue.schedule(t, EventKind::TcTimer(NodeId::from(i)));
        }
        let horizon = self.horizon();
        for f in 0..self.flows.len() {
            if let Some(t) = self.flows[f].send_time(0, horizon) {
                self.queue.schedule(t, EventKind::TrafficGen(f));
            }
        }
        if !self.cfg.mobility.is_static() {
            for i in 0..n {
                self.queue.schedule(MOBILITY_TICK, EventKind::MobilityUpdate(NodeId::from(i)));
            }
        }
        self.queue.schedule(0.0, EventKind::MetricSample);
        self.queue.schedule(horizon, EventKind::End);
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn protocol_state(&self, id: NodeId) -> &OlsrState {
        &self.nodes[id.index()].olsr
    }

    pub fn routing_table(&self, id: NodeId) -> &RoutingTable {
        &self.nodes[id.index()].table
    }

    pub fn position(&self, id: NodeId) -> Position {
        self.nodes[id.index()].mobility.position
    }

    pub fn energy(&self, id: NodeId) -> &EnergyState {
        &self.nodes[id.index()].energy
    }

    pub fn queue_len(&self, id: NodeId) -> usize {
        self.nodes[id.index()].mac.len()
    }

    pub fn flows(&self) -> &[ResolvedFlow] {
        &self.flows
    }

    pub fn counters(&self) -> &[FlowCounters] {
        &self.counters
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// The weight this node would advertise right now.
    pub fn current_weight(&self, id: NodeId) -> crate::model::NodeWeight {
        let node = &self.nodes[id.index()];
        compute_weight(
            NodeLocalState {
                queue_len: node.mac.len(),
                residual_energy: node.energy.residual,
                degree: node.olsr.degree(),
            },
            &self.cfg.weight_params,
        )
    }

    /// Takes a node down now, as if its battery had run out.
    pub fn fail_node(&mut self, id: NodeId) {
        let now = self.now;
        let node = &mut self.nodes[id.index()];
        if node.energy.alive() {
            let residual = node.energy.residual;
            node.energy.charge(Charge::Idle, f64::INFINITY, now, residual);
            node.energy.depleted_at = Some(now);
            self.on_depleted(id, now);
        }
    }

    /// Processes events up to and including time `t`.
    pub fn run_until(&mut self, t: SimTime) {
        while self.peek_next().is_some_and(|next| next <= t) {
            self.step();
        }
    }

    /// Time of the next event that will run, or `None` once the run is over.
    fn peek_next(&mut self) -> Option<SimTime> {
        if self.finished {
            return None;
        }
        let next = self.queue.peek_time();
        let over = match (next, self.stop_at) {
            (None, _) => true,
            (Some(next), Some(stop)) => next > stop,
            _ => false,
        };
        if over {
            self.finished = true;
            return None;
        }
        next
    }

    /// Processes the next event and returns it.
    pub fn step(&mut self) -> Option<Event> {
        self.peek_next()?;
        let ev = self.queue.pop()?;
        if ev.time < self.now {
            self.stats.causality_violations += 1;
        }
        self.now = ev.time;
        self.events_processed += 1;
        self.dispatch(ev.kind.clone());
        Some(ev)
    }

    /// Runs to completion and collects the result.
    pub fn run(mut self) -> SimResult {
        self.run_until(f64::INFINITY);
        self.finish()
    }

    fn finish(mut self) -> SimResult {
        let end = self.stop_at.unwrap_or(self.now).min(self.horizon());
        let idle = self.cfg.idle_power;
        for node in &mut self.nodes {
            node.energy.settle_idle(idle, end);
        }
        let mut scan = vec![0u64; self.flows.len()];
        for node in &self.nodes {
            for f in node.mac.iter() {
                if let Some(d) = f.data() {
                    scan[d.flow_id] += 1;
                }
            }
        }
        for ev in self.queue.iter() {
            match &ev.kind {
                EventKind::TxEnd(_, f) => {
                    if let Some(d) = f.data() {
                        scan[d.flow_id] += 1;
                    }
                }
                EventKind::Delivery(r, f) => {
                    if let Some(d) = f.data() {
                        if d.next_hop == *r {
                            scan[d.flow_id] += 1;
                        }
                    }
                }
                _ => {}
            }
        }
        let mut stats = self.stats;
        for node in &self.nodes {
            let (r, v) = node.olsr.mpr_stats();
            stats.mpr_recomputations += r;
            stats.mpr_coverage_violations += v;
        }
        SimResult {
            protocol: self.cfg.protocol,
            seed: self.cfg.seed,
            initial_energy: self.cfg.initial_energy,
            flows: self.flows,
            counters: self.counters,
            energy: self.nodes.iter().map(|n| n.energy.clone()).collect(),
            energy_series: self.series,
            initial_positions: self.initial_positions,
            hop_diameter: self.hop_diameter,
            placement_redraws: self.placement_redraws,
            initially_connected: self.hop_diameter.is_some(),
            end_time: end,
            run_to_depletion: matches!(self.cfg.sim_duration, RunLength::UntilDepletion { .. }),
            events_processed: self.events_processed,
            in_flight: self.outstanding,
            in_flight_scan: scan,
            stats,
        }
    }

    fn schedule(&mut self, t: SimTime, kind: EventKind) {
        if t < self.now {
            self.stats.causality_violations += 1;
        }
        self.queue.schedule(t, kind);
    }

    fn alive(&self, id: NodeId) -> bool {
        self.nodes[id.index()].energy.alive()
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::HelloTimer(n) => self.on_hello_timer(n),
            EventKind::TcTimer(n) => self.on_tc_timer(n),
            EventKind::TrafficGen(f) => self.on_traffic(f),
            EventKind::TxStart(n) => self.on_tx_start(n),
            EventKind::TxEnd(n, frame) => self.on_tx_end(n, frame),
            EventKind::Delivery(n, frame) => self.on_delivery(n, &frame),
            EventKind::MobilityUpdate(n) => self.on_mobility(n),
            EventKind::MetricSample => self.on_sample(),
            EventKind::End => {
                let t = self.now;
                self.stop_at = Some(self.stop_at.map_or(t, |s| s.min(t)));
            }
        }
    }

    /// Records a depletion and tears the node down.
    fn on_depleted(&mut self, id: NodeId, at: SimTime) {
        if matches!(self.cfg.sim_duration, RunLength::UntilDepletion { .. }) && self.stop_at.is_none() {
            self.stop_at = Some(self.now.max(at));
        }
        let frames: Vec<Frame> = self.nodes[id.index()].mac.drain().collect();
        for f in frames {
            if let Some(d) = f.data() {
                self.drop_data(d.flow_id, |c| &mut c.dropped_energy);
            }
        }
    }

    fn drop_data(&mut self, flow: usize, counter: impl FnOnce(&mut FlowCounters) -> &mut u64) {
        *counter(&mut self.counters[flow]) += 1;
        self.outstanding[flow] -= 1;
    }

    /// Expires soft state at `id` and recomputes its routes if anything
    /// they depend on changed.
    fn refresh(&mut self, id: NodeId) {
        let now = self.now;
        let change = self.nodes[id.index()].olsr.expire_tuples(now);
        if change.neighborhood.neighbors || change.topology {
            self.recompute_routes(id);
        }
    }

    fn recompute_routes(&mut self, id: NodeId) {
        let node = &mut self.nodes[id.index()];
        let neighbors = node.olsr.symmetric_neighbors();
        let tuples = node.olsr.topology_tuples();
        node.table = match self.cfg.protocol {
            Protocol::Standard => compute_routing_table_standard(id, &neighbors, &tuples),
            Protocol::MultiMetric => compute_routing_table_multimetric(id, &neighbors, &tuples),
        };
        self.stats.route_recomputations += 1;
    }

    /// Queues a frame for transmission. Returns `false` on overflow.
    fn enqueue(&mut self, id: NodeId, frame: Frame) -> bool {
        let node = &mut self.nodes[id.index()];
        if node.mac.push(frame).is_err() {
            return false;
        }
        if !node.busy {
            node.busy = true;
            let now = self.now;
            self.schedule(now, EventKind::TxStart(id));
        }
        true
    }

    fn enqueue_control(&mut self, id: NodeId, frame: Frame) {
        if !self.enqueue(id, frame) {
            self.stats.control_dropped += 1;
        }
    }

    fn on_hello_timer(&mut self, id: NodeId) {
        if !self.alive(id) {
            return;
        }
        self.refresh(id);
        let msg = self.nodes[id.index()].olsr.generate_hello();
        let frame = Frame {
            src: id,
            payload_size: wire::hello_len(&msg) + CONTROL_HEADER_LEN,
            payload: Payload::Hello(msg),
        };
        self.stats.hello_sent += 1;
        self.enqueue_control(id, frame);
        let next = self.now + self.cfg.hello_interval;
        self.schedule(next, EventKind::HelloTimer(id));
    }

    fn on_tc_timer(&mut self, id: NodeId) {
        if !self.alive(id) {
            return;
        }
        self.refresh(id);
        let weight = self.current_weight(id);
        let node = &mut self.nodes[id.index()];
        if let Some(msg) = node.olsr.generate_tc(weight) {
            let msg_seq = node.olsr.next_msg_seq();
            // plain OLSR TCs have no weight field
            let weight_len = match self.cfg.protocol {
                Protocol::Standard => 4,
                Protocol::MultiMetric => 0,
            };
            let frame = Frame {
                src: id,
                payload_size: wire::tc_len(msg.advertised.len()) - weight_len + CONTROL_HEADER_LEN,
                payload: Payload::Tc {
                    msg,
                    msg_seq,
                    ttl: TC_TTL,
                },
            };
            self.stats.tc_originated += 1;
            self.enqueue_control(id, frame);
        }
        let next = self.now + self.cfg.tc_interval;
        self.schedule(next, EventKind::TcTimer(id));
    }

    fn on_traffic(&mut self, f: usize) {
        let flow = self.flows[f];
        let k = self.flow_next[f];
        self.flow_next[f] += 1;
        if let Some(t) = flow.send_time(k + 1, self.horizon()) {
            self.schedule(t, EventKind::TrafficGen(f));
        }
        self.counters[f].generated += 1;
        self.outstanding[f] += 1;
        if !self.alive(flow.src) {
            self.drop_data(f, |c| &mut c.dropped_energy);
            return;
        }
        self.refresh(flow.src);
        let Some(next_hop) = self.nodes[flow.src.index()].table.next_hop(flow.dst) else {
            self.drop_data(f, |c| &mut c.dropped_no_route);
            return;
        };
        let frame = Frame {
            src: flow.src,
            payload_size: flow.packet_size,
            payload: Payload::Data(DataPacket {
                flow_id: f,
                seq_no: k,
                origin: flow.src,
                final_dest: flow.dst,
                next_hop,
                ttl: self.cfg.ttl,
            }),
        };
        if !self.enqueue(flow.src, frame) {
            self.drop_data(f, |c| &mut c.dropped_queue);
        }
    }

    fn on_tx_start(&mut self, id: NodeId) {
        let now = self.now;
        let tx_power = self.cfg.tx_power;
        let bandwidth = self.cfg.bandwidth;
        let node = &mut self.nodes[id.index()];
        if !node.energy.alive() {
            node.busy = false;
            return;
        }
        let Some(frame) = node.mac.pop() else {
            node.busy = false;
            return;
        };
        let airtime = frame_airtime(frame.payload_size, bandwidth);
        let depleted = node.energy.charge(Charge::Tx, tx_power, now, airtime);
        self.stats.transmissions += 1;
        self.schedule(now + airtime, EventKind::TxEnd(id, Arc::new(frame)));
        if let Some(at) = depleted {
            self.on_depleted(id, at);
        }
    }

    fn on_tx_end(&mut self, id: NodeId, frame: Arc<Frame>) {
        let now = self.now;
        let airtime = frame_airtime(frame.payload_size, self.cfg.bandwidth);
        let here = self.nodes[id.index()].mobility.position;
        let range = self.cfg.radio_range;
        let rx_power = self.cfg.rx_power;
        let receivers: Vec<NodeId> = (0..self.nodes.len())
            .map(NodeId::from)
            .filter(|&r| r != id && self.alive(r) && in_range(here, self.nodes[r.index()].mobility.position, range))
            .collect();
        self.stats.receivers_at_tx_end += receivers.len() as u64;
        for &r in &receivers {
            let kind = if frame.addressed_to(r) {
                Charge::Rx
            } else {
                Charge::Overhear
            };
            let depleted = self.nodes[r.index()]
                .energy
                .charge(kind, rx_power, now - airtime, airtime);
            self.stats.rx_charges += 1;
            self.schedule(now, EventKind::Delivery(r, Arc::clone(&frame)));
            if let Some(at) = depleted {
                self.on_depleted(r, at);
            }
        }
        if let Some(d) = frame.data() {
            if !receivers.contains(&d.next_hop) {
                if self.alive(d.next_hop) {
                    // stale route: the next hop moved away
                    self.drop_data(d.flow_id, |c| &mut c.dropped_no_route);
                } else {
                    self.drop_data(d.flow_id, |c| &mut c.dropped_energy);
                }
            }
        }
        let node = &mut self.nodes[id.index()];
        if node.energy.alive() && !node.mac.is_empty() {
            self.schedule(now, EventKind::TxStart(id));
        } else {
            node.busy = false;
        }
    }

    fn on_delivery(&mut self, id: NodeId, frame: &Frame) {
        if !self.alive(id) {
            if let Some(d) = frame.data() {
                if d.next_hop == id {
                    self.drop_data(d.flow_id, |c| &mut c.dropped_energy);
                }
            }
            return;
        }
        let now = self.now;
        match &frame.payload {
            Payload::Hello(msg) => {
                self.refresh(id);
                let change = self.nodes[id.index()].olsr.process_hello(msg, frame.src, now);
                if change.neighbors {
                    self.recompute_routes(id);
                }
            }
            Payload::Tc { msg, msg_seq, ttl } => {
                if msg.originator == id {
                    return;
                }
                self.refresh(id);
                let olsr = &mut self.nodes[id.index()].olsr;
                let fresh = !olsr.is_duplicate(msg.originator, *msg_seq);
                let mut recompute = false;
                if fresh {
                    if let TcOutcome::Applied {
                        links_changed,
                        weight_changed,
                    } = olsr.process_tc(msg, now)
                    {
                        recompute =
                            links_changed || (weight_changed && self.cfg.protocol == Protocol::MultiMetric);
                    }
                }
                let forward = olsr.should_forward_tc(msg.originator, *msg_seq, frame.src, now);
                if recompute {
                    self.recompute_routes(id);
                }
                if forward && *ttl > 1 {
                    let copy = Frame {
                        src: id,
                        payload_size: frame.payload_size,
                        payload: Payload::Tc {
                            msg: msg.clone(),
                            msg_seq: *msg_seq,
                            ttl: ttl - 1,
                        },
                    };
                    self.stats.tc_forwarded += 1;
                    self.enqueue_control(id, copy);
                }
            }
            Payload::Data(d) => {
                if d.next_hop != id {
                    return;
                }
                if d.final_dest == id {
                    self.counters[d.flow_id].delivered += 1;
                    self.outstanding[d.flow_id] -= 1;
                    return;
                }
                self.refresh(id);
                let Some(next_hop) = self.nodes[id.index()].table.next_hop(d.final_dest) else {
                    self.drop_data(d.flow_id, |c| &mut c.dropped_no_route);
                    return;
                };
                let ttl = d.ttl - 1;
                if ttl == 0 {
                    self.drop_data(d.flow_id, |c| &mut c.dropped_ttl);
                    return;
                }
                let fwd = Frame {
                    src: id,
                    payload_size: frame.payload_size,
                    payload: Payload::Data(DataPacket {
                        next_hop,
                        ttl,
                        ..d.clone()
                    }),
                };
                if !self.enqueue(id, fwd) {
                    self.drop_data(d.flow_id, |c| &mut c.dropped_queue);
                }
            }
        }
    }

    fn on_mobility(&mut self, id: NodeId) {
        let Mobility::RandomWaypoint { v_min, v_max, pause } = self.cfg.mobility else {
            return;
        };
        let area = (self.cfg.area_width, self.cfg.area_height);
        let now = self.now;
        random_waypoint_step(&mut self.nodes[id.index()].mobility, now, &mut self.rng, area, v_min, v_max, pause);
        let next = now + MOBILITY_TICK;
        if next <= self.horizon() {
            self.schedule(next, EventKind::MobilityUpdate(id));
        }
    }

    fn on_sample(&mut self) {
        let now = self.now;
        let idle = self.cfg.idle_power;
        let mut depleted = Vec::new();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            if let Some(at) = node.energy.settle_idle(idle, now) {
                depleted.push((NodeId::from(i), at));
            }
        }
        for (id, at) in depleted {
            self.on_depleted(id, at);
        }
        let residuals: Vec<f64> = self.nodes.iter().map(|n| n.energy.residual).collect();
        self.series.push((now, mean_residual(&residuals)));
        let next = now + self.cfg.sample_period;
        if next <= self.horizon() {
            self.schedule(next, EventKind::MetricSample);
        }
    }
}

/// Fixes the endpoints of every flow. Missing endpoints are drawn
/// uniformly, avoiding nodes already used as an endpoint and pairs closer
/// than `flow_min_hops`; if no such pair turns up the constraints are
/// dropped except `src != dst`.
fn resolve_flows(cfg: &ScenarioConfig, adj: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<ResolvedFlow> {
    let n = cfg.node_count;
    let hops: Vec<Vec<Option<u32>>> = (0..n).map(|s| bfs_hops(adj, s)).collect();
    let mut used: Vec<NodeId> = cfg.flows.iter().flat_map(|f| [f.src, f.dst]).flatten().collect();
    let mut flows = Vec::with_capacity(cfg.flows.len());
    for f in &cfg.flows {
        let (src, dst) = if let (Some(s), Some(d)) = (f.src, f.dst) {
            (s, d)
        } else {
            let draw = |rng: &mut ChaCha8Rng| {
                let s = f.src.unwrap_or_else(|| NodeId::from(rng.gen_range(0..n)));
                let d = f.dst.unwrap_or_else(|| NodeId::from(rng.gen_range(0..n)));
                (s, d)
            };
            let fresh = |id: NodeId, fixed: Option<NodeId>| fixed.is_some() || !used.contains(&id);
            let mut pick = None;
            for _ in 0..MAX_ENDPOINT_DRAWS {
                let (s, d) = draw(rng);
                let far = hops[s.index()][d.index()].is_none_or(|h| h >= cfg.flow_min_hops);
                if s != d && far && fresh(s, f.src) && fresh(d, f.dst) {
                    pick = Some((s, d));
                    break;
                }
            }
            let (s, d) = match pick {
                Some(p) => p,
                None => loop {
                    let (s, d) = draw(rng);
                    if s != d {
                        break (s, d);
                    }
                },
            };
            used.extend([s, d]);
            (s, d)
        };
        flows.push(ResolvedFlow::new(f, src, dst));
    }
    flows
}

/// Uniform placement. With a diameter gate, placements that are
/// disconnected or whose hop diameter falls outside the band are redrawn
/// from the same stream.
fn place_nodes(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> (Vec<Position>, Option<u32>, u32) {
    let draw = |rng: &mut ChaCha8Rng| -> Vec<Position> {
        (0..cfg.node_count)
            .map(|_| Position::new(rng.gen_range(0.0..=cfg.area_width), rng.gen_range(0.0..=cfg.area_height)))
            .collect()
    };
    let mut redraws = 0;
    loop {
        let positions = draw(rng);
        let diameter = hop_diameter(&unit_disk_graph(&positions, cfg.radio_range));
        let accept = match cfg.diameter_gate {
            None => true,
            Some((lo, hi)) => diameter.is_some_and(|d| (lo..=hi).contains(&d)),
        };
        if accept || redraws >= MAX_PLACEMENT_DRAWS {
            return (positions, diameter, redraws);
        }
        redraws += 1;
    }
}

/// Runs a scenario to completion.
pub fn run(cfg: ScenarioConfig) -> Result<SimResult, ValidationErrors> {
    Ok(Simulation::new(cfg)?.run())
}
