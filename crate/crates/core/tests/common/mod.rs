#![allow(dead_code)]

use std::collections::VecDeque;

use mmolsr_core::model::{in_range, NodeId, NodeWeight, Position};
use mmolsr_core::olsr::OlsrState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Graph {
    pub positions: Vec<Position>,
    pub adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn from_positions(positions: Vec<Position>, range: f64) -> Self {
        let n = positions.len();
        let adj = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && in_range(positions[i], positions[j], range))
                    .collect()
            })
            .collect();
        Graph { positions, adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    /// Plain BFS over the physical graph.
    pub fn hops_from(&self, s: usize) -> Vec<Option<u32>> {
        let mut d = vec![None; self.len()];
        d[s] = Some(0);
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if d[v].is_none() {
                    d[v] = Some(d[u].unwrap() + 1);
                    q.push_back(v);
                }
            }
        }
        d
    }

    pub fn connected(&self) -> bool {
        self.hops_from(0).iter().all(Option::is_some)
    }
}

/// A connected unit-disk graph with 2..=max_n nodes.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, max_n: usize) -> Graph {
    loop {
        let n = rng.gen_range(2..=max_n);
        let side = rng.gen_range(300.0..2500.0);
        let positions = (0..n)
            .map(|_| Position::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect();
        let g = Graph::from_positions(positions, 700.0);
        if g.connected() {
            return g;
        }
    }
}

pub fn line(n: usize, spacing: f64) -> Vec<Position> {
    (0..n).map(|i| Position::new(i as f64 * spacing, 0.0)).collect()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs HELLO rounds until neighbor sets, MPRs and selectors settle, then
/// hands every TC to every node, which is what a lossless flood
/// eventually achieves.
pub fn converge(g: &Graph, weights: &[NodeWeight]) -> Vec<OlsrState> {
    let n = g.len();
    let mut states: Vec<OlsrState> = (0..n).map(|i| OlsrState::new(NodeId::from(i), 1e9, 1e9)).collect();
    for round in 0..4 {
        let t = round as f64;
        for u in 0..n {
            let msg = states[u].generate_hello();
            for &v in &g.adj[u] {
                states[v].process_hello(&msg, NodeId::from(u), t);
            }
        }
    }
    let tcs: Vec<_> = (0..n).filter_map(|u| states[u].generate_tc(weights[u])).collect();
    for tc in &tcs {
        for s in states.iter_mut() {
            s.process_tc(tc, 10.0);
        }
    }
    states
}
