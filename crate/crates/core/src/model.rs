//! Shared domain types: node identifiers, geometry, simulated time and the
//! node-weight parameters.

use std::fmt;

/// Index of a simulated node, `0 <= id < node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Simulated time in seconds.
pub type SimTime = f64;

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Unit-disk reachability. The boundary is inclusive.
pub fn in_range(a: Position, b: Position, r: f64) -> bool {
    distance(a, b) <= r
}

/// Node weight in `[0, 1]`. Higher means a worse relay.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct NodeWeight(f64);

impl NodeWeight {
    pub const ZERO: NodeWeight = NodeWeight(0.0);
    pub const ONE: NodeWeight = NodeWeight(1.0);

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn new(w: f64) -> Self {
        if w.is_nan() {
            NodeWeight(0.0)
        } else {
            NodeWeight(w.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Mixing factors and normalizers for the node weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    /// Factor on MAC queue utilization.
    pub alpha1: f64,
    /// Factor on consumed-energy fraction.
    pub alpha2: f64,
    /// Factor on node-degree fraction.
    pub alpha3: f64,
    /// Queue-length normalizer, packets.
    pub l_max: f64,
    /// Energy normalizer (initial energy), joules.
    pub e_max: f64,
    /// Degree normalizer, usually `node_count - 1`.
    pub d_max: f64,
}

impl WeightParams {
    /// Equal thirds, normalizers taken from a node count, an initial energy
    /// and a queue capacity.
    pub fn equal_thirds(node_count: usize, initial_energy: f64, l_max: usize) -> Self {
        WeightParams {
            alpha1: 1.0 / 3.0,
            alpha2: 1.0 / 3.0,
            alpha3: 1.0 / 3.0,
            l_max: l_max as f64,
            e_max: initial_energy,
            d_max: node_count.saturating_sub(1).max(1) as f64,
        }
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha1 + self.alpha2 + self.alpha3
    }
}
