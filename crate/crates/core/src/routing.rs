//! Node weights and routing-table calculation.
//!
//! Two route calculations share one input shape: the node's symmetric
//! neighbors plus the topology tuples it has learned from TCs.
//!
//! * [`compute_routing_table_standard`] is plain min-hop OLSR.
//! * [`compute_routing_table_multimetric`] charges each path
//!   `1 + sum(weights of intermediate nodes)`, where the weight of a relay is
//!   the one carried in its own TCs. The receiver's weight never counts.
//!
//! [`dijkstra_oracle`] is an exact node-weighted shortest-path search over the
//! same inputs, kept independent of the table code so tests can check it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::model::{NodeId, NodeWeight, WeightParams};
use crate::olsr::TopologyTuple;

/// Instantaneous local measurements feeding the node weight.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeLocalState {
    /// Packets waiting in the MAC queue.
    pub queue_len: usize,
    /// Residual energy, joules.
    pub residual_energy: f64,
    /// Symmetric 1-hop neighbor count.
    pub degree: usize,
}

/// `a1 * L/Lmax + a2 * (1 - E/Emax) + a3 * D/Dmax`, each ratio clamped to
/// `[0, 1]` and the sum clamped to `[0, 1]`.
pub fn compute_weight(local: NodeLocalState, p: &WeightParams) -> NodeWeight {
    let queue = (local.queue_len as f64 / p.l_max).clamp(0.0, 1.0);
    let spent = 1.0 - (local.residual_energy / p.e_max).clamp(0.0, 1.0);
    let degree = (local.degree as f64 / p.d_max).clamp(0.0, 1.0);
    NodeWeight::new(p.alpha1 * queue + p.alpha2 * spent + p.alpha3 * degree)
}

/// Cost of a path given its intermediate-node weights: the source counts 1.
pub fn path_cost(intermediate: &[NodeWeight]) -> f64 {
    1.0 + intermediate.iter().map(|w| w.value()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    /// Local interface; nodes have one, so this is always the owner's id.
    pub interface: NodeId,
    /// Hop count for standard routes, weighted path cost for multi-metric.
    pub cost: f64,
    pub hops: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoutingTable {
    entries: BTreeMap<NodeId, RoutingEntry>,
}

impl RoutingTable {
    pub fn get(&self, dest: NodeId) -> Option<&RoutingEntry> {
        self.entries.get(&dest)
    }

    pub fn next_hop(&self, dest: NodeId) -> Option<NodeId> {
        self.entries.get(&dest).map(|e| e.next_hop)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RoutingEntry> {
        self.entries.values()
    }
}

fn sorted_neighbors(me: NodeId, neighbors: &[NodeId]) -> Vec<NodeId> {
    let mut n: Vec<NodeId> = neighbors.iter().copied().filter(|&n| n != me).collect();
    n.sort_unstable();
    n.dedup();
    n
}

fn sorted_tuples(tuples: &[TopologyTuple]) -> Vec<&TopologyTuple> {
    let mut t: Vec<&TopologyTuple> = tuples.iter().collect();
    t.sort_by_key(|t| (t.last_addr, t.dest_addr));
    t
}

fn neighbor_entries(me: NodeId, neighbors: &[NodeId]) -> BTreeMap<NodeId, RoutingEntry> {
    sorted_neighbors(me, neighbors)
        .into_iter()
        .map(|n| {
            (
                n,
                RoutingEntry {
                    dest: n,
                    next_hop: n,
                    interface: me,
                    cost: 1.0,
                    hops: 1,
                },
            )
        })
        .collect()
}

/// Min-hop table. Destinations at distance `h + 1` inherit the next hop of
/// the smallest-id `last_addr` at distance `h` that advertises them.
pub fn compute_routing_table_standard(
    me: NodeId,
    neighbors: &[NodeId],
    tuples: &[TopologyTuple],
) -> RoutingTable {
    let mut entries = neighbor_entries(me, neighbors);
    let tuples = sorted_tuples(tuples);
    let mut h = 1;
    loop {
        let mut added = false;
        for t in &tuples {
            if t.dest_addr == me || entries.contains_key(&t.dest_addr) {
                continue;
            }
            let Some(last) = entries.get(&t.last_addr) else {
                continue;
            };
            if last.hops != h {
                continue;
            }
            let entry = RoutingEntry {
                dest: t.dest_addr,
                next_hop: last.next_hop,
                interface: last.interface,
                cost: f64::from(h + 1),
                hops: h + 1,
            };
            entries.insert(t.dest_addr, entry);
            added = true;
        }
        if !added {
            break;
        }
        h += 1;
    }
    RoutingTable { entries }
}

/// Weighted greedy table, scanned to a fixpoint.
///
/// Neighbors get cost 1. Each scan visits tuples in `(last_addr, dest_addr)`
/// order; a tuple whose `last_addr` is routed offers `dest_addr` the cost
/// `last.cost + weight`. A missing destination is added; an existing one is
/// replaced on a strictly lower cost. Equal costs go to the smaller
/// `last_addr`, which keeps the result independent of scan timing and makes
/// it coincide with the min-hop table when all weights are equal.
pub fn compute_routing_table_multimetric(
    me: NodeId,
    neighbors: &[NodeId],
    tuples: &[TopologyTuple],
) -> RoutingTable {
    let mut entries = neighbor_entries(me, neighbors);
    // predecessor (last_addr) of every non-neighbor entry
    let mut via: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let tuples = sorted_tuples(tuples);
    // Every change strictly lowers a (cost, via) key or propagates a next
    // hop, so this terminates; the bound only guards against float noise.
    let max_passes = 4 * (tuples.len() + entries.len() + 2);
    for _ in 0..max_passes {
        let mut changed = false;
        for t in &tuples {
            if t.dest_addr == me {
                continue;
            }
            let Some(&last) = entries.get(&t.last_addr) else {
                continue;
            };
            let cost = last.cost + t.weight.value();
            let candidate = RoutingEntry {
                dest: t.dest_addr,
                next_hop: last.next_hop,
                interface: last.interface,
                cost,
                hops: last.hops + 1,
            };
            let replace = match entries.get(&t.dest_addr) {
                None => true,
                Some(cur) => match via.get(&t.dest_addr) {
                    // direct neighbors stay at cost 1
                    None => false,
                    Some(&cur_via) if cur_via == t.last_addr => *cur != candidate,
                    Some(&cur_via) => {
                        cost < cur.cost || (cost == cur.cost && t.last_addr < cur_via)
                    }
                },
            };
            if replace {
                entries.insert(t.dest_addr, candidate);
                via.insert(t.dest_addr, t.last_addr);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    RoutingTable { entries }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: NodeId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact minimum path cost from `source` to every reachable node.
///
/// Edges are `source -> neighbor` (cost 1) and `last_addr -> dest_addr` for
/// every tuple, charged with the weight of `last_addr`: a tuple edge is only
/// traversed out of an interior node, so each interior weight is paid once
/// and the destination's own weight never is.
pub fn dijkstra_oracle(
    source: NodeId,
    neighbors: &[NodeId],
    tuples: &[TopologyTuple],
) -> BTreeMap<NodeId, f64> {
    let mut adj: BTreeMap<NodeId, Vec<(NodeId, f64)>> = BTreeMap::new();
    for &n in neighbors {
        if n != source {
            adj.entry(source).or_default().push((n, 1.0));
        }
    }
    for t in tuples {
        if t.last_addr != source {
            adj.entry(t.last_addr)
                .or_default()
                .push((t.dest_addr, t.weight.value()));
        }
    }
    let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0.0);
    heap.push(HeapItem {
        cost: 0.0,
        node: source,
    });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if dist.get(&node).is_some_and(|&d| cost > d) {
            continue;
        }
        for &(next, w) in adj.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
            let c = cost + w;
            if dist.get(&next).is_none_or(|&d| c < d) {
                dist.insert(next, c);
                heap.push(HeapItem { cost: c, node: next });
            }
        }
    }
    dist.remove(&source);
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn tuple(last: u32, dest: u32, w: f64) -> TopologyTuple {
        TopologyTuple {
            last_addr: n(last),
            dest_addr: n(dest),
            ansn: 0,
            weight: NodeWeight::new(w),
            expiry: f64::INFINITY,
        }
    }

    fn params() -> WeightParams {
        WeightParams {
            alpha1: 1.0 / 3.0,
            alpha2: 1.0 / 3.0,
            alpha3: 1.0 / 3.0,
            l_max: 100.0,
            e_max: 7.0,
            d_max: 29.0,
        }
    }

    #[test]
    fn weight_extremes() {
        let p = params();
        let idle = NodeLocalState {
            queue_len: 0,
            residual_energy: 7.0,
            degree: 0,
        };
        assert_eq!(compute_weight(idle, &p).value(), 0.0);
        let worst = NodeLocalState {
            queue_len: 100,
            residual_energy: 0.0,
            degree: 29,
        };
        assert!((compute_weight(worst, &p).value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_half_loaded() {
        let local = NodeLocalState {
            queue_len: 50,
            residual_energy: 3.5,
            degree: 29,
        };
        let w = compute_weight(local, &params()).value();
        // (0.5 + 0.5 + 1) / 3
        assert!((w - 2.0 / 3.0).abs() < 1e-12, "{w}");
    }

    #[test]
    fn weight_clamps_out_of_range_inputs() {
        let local = NodeLocalState {
            queue_len: 500,
            residual_energy: 9.0,
            degree: 100,
        };
        let w = compute_weight(local, &params()).value();
        assert!((w - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_cost_examples() {
        assert_eq!(path_cost(&[]), 1.0);
        assert!((path_cost(&[NodeWeight::new(0.4)]) - 1.4).abs() < 1e-12);
        let ws = [0.2, 0.3, 0.5].map(NodeWeight::new);
        assert!((path_cost(&ws) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn standard_neighbors_only() {
        let t = compute_routing_table_standard(n(0), &[n(2), n(1)], &[]);
        assert_eq!(t.len(), 2);
        for e in t.iter() {
            assert_eq!(e.cost, 1.0);
            assert_eq!(e.next_hop, e.dest);
            assert_eq!(e.interface, n(0));
        }
    }

    #[test]
    fn standard_chain() {
        let t = compute_routing_table_standard(n(0), &[n(1)], &[tuple(1, 2, 0.0)]);
        let c = t.get(n(2)).unwrap();
        assert_eq!((c.next_hop, c.cost), (n(1), 2.0));
    }

    #[test]
    fn standard_skips_self_and_unrouted_tuples() {
        let tuples = [tuple(1, 0, 0.0), tuple(7, 8, 0.0), tuple(1, 2, 0.0)];
        let t = compute_routing_table_standard(n(0), &[n(1)], &tuples);
        assert!(t.get(n(0)).is_none());
        assert!(t.get(n(8)).is_none());
        assert_eq!(t.get(n(2)).unwrap().hops, 2);
    }

    #[test]
    fn multimetric_chain() {
        let t = compute_routing_table_multimetric(n(0), &[n(1)], &[tuple(1, 2, 0.4)]);
        let c = t.get(n(2)).unwrap();
        assert_eq!(c.next_hop, n(1));
        assert!((c.cost - 1.4).abs() < 1e-12);
    }

    #[test]
    fn multimetric_diamond_prefers_light_relay() {
        // A=0, B=1, C=2, D=3
        let tuples = [tuple(1, 3, 0.9), tuple(2, 3, 0.1)];
        let t = compute_routing_table_multimetric(n(0), &[n(1), n(2)], &tuples);
        let d = t.get(n(3)).unwrap();
        assert_eq!(d.next_hop, n(2));
        assert!((d.cost - 1.1).abs() < 1e-12);
        let oracle = dijkstra_oracle(n(0), &[n(1), n(2)], &tuples);
        assert!((oracle[&n(3)] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn multimetric_takes_longer_cheaper_path() {
        // 0 - 1 - 4 (heavy relay 1) versus 0 - 2 - 3 - 4 (light relays)
        let tuples = [
            tuple(1, 4, 0.8),
            tuple(2, 3, 0.1),
            tuple(3, 4, 0.1),
        ];
        let t = compute_routing_table_multimetric(n(0), &[n(1), n(2)], &tuples);
        let e = t.get(n(4)).unwrap();
        assert_eq!(e.next_hop, n(2));
        assert_eq!(e.hops, 3);
        assert!((e.cost - 1.2).abs() < 1e-12);
    }

    #[test]
    fn multimetric_reaches_fixpoint_regardless_of_tuple_order() {
        // tuple (1,2) sorts before (5,1)... chain 0-5-1-2 needs two passes
        let tuples = [tuple(1, 2, 0.2), tuple(5, 1, 0.3)];
        let t = compute_routing_table_multimetric(n(0), &[n(5)], &tuples);
        let e = t.get(n(2)).unwrap();
        assert_eq!(e.next_hop, n(5));
        assert!((e.cost - 1.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_single_edge() {
        let d = dijkstra_oracle(n(0), &[n(1)], &[]);
        assert_eq!(d[&n(1)], 1.0);
    }

    proptest! {
        #[test]
        fn weight_bounded_and_monotone(
            l in 0usize..300, e in -2.0..10.0f64, d in 0usize..60,
            dl in 0usize..10, de in 0.0..3.0f64, dd in 0usize..5,
        ) {
            let p = params();
            let base = NodeLocalState { queue_len: l, residual_energy: e, degree: d };
            let w = compute_weight(base, &p).value();
            prop_assert!((0.0..=1.0).contains(&w));
            let more_q = compute_weight(NodeLocalState { queue_len: l + dl, ..base }, &p).value();
            let more_e = compute_weight(NodeLocalState { residual_energy: e + de, ..base }, &p).value();
            let more_d = compute_weight(NodeLocalState { degree: d + dd, ..base }, &p).value();
            prop_assert!(more_q >= w);
            prop_assert!(more_e <= w);
            prop_assert!(more_d >= w);
        }
    }
}
