//! OLSR control plane for a single node: link sensing through HELLOs,
//! two-hop discovery, MPR selection, TC generation and processing, and
//! duplicate suppression for MPR flooding.
//!
//! TCs carry the originator's weight; everything else is plain OLSR.

mod mpr;
pub mod wire;

use std::collections::{BTreeMap, BTreeSet};

pub use mpr::{mprs_cover, select_mprs};

use crate::model::{NodeId, NodeWeight, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkStatus {
    Heard,
    Symmetric,
    Mpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelloMessage {
    pub originator: NodeId,
    pub heard_neighbors: Vec<(NodeId, LinkStatus)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcMessage {
    pub originator: NodeId,
    pub ansn: u16,
    pub weight: NodeWeight,
    /// Advertised neighbors, ascending: the MPR selectors, widened by the
    /// TC redundancy setting.
    pub advertised: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborTuple {
    pub neighbor: NodeId,
    pub link_symmetric: bool,
    pub expiry: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoHopTuple {
    pub via: NodeId,
    pub two_hop: NodeId,
    pub expiry: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyTuple {
    /// TC originator.
    pub last_addr: NodeId,
    /// One of the originator's advertised selectors.
    pub dest_addr: NodeId,
    pub ansn: u16,
    /// The originator's weight from its latest TC.
    pub weight: NodeWeight,
    pub expiry: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuplicateTuple {
    pub originator: NodeId,
    pub msg_seq: u16,
    pub retransmitted: bool,
    pub expiry: SimTime,
}

/// `a` is newer than `b` in 16-bit serial-number arithmetic.
pub fn seq_newer(a: u16, b: u16) -> bool {
    a != b && a.wrapping_sub(b) < 0x8000
}

/// What a HELLO or an expiry sweep changed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NeighborhoodChange {
    /// The symmetric neighbor set changed.
    pub neighbors: bool,
    /// The two-hop set changed.
    pub two_hop: bool,
    /// The MPR-selector set changed.
    pub selectors: bool,
}

impl NeighborhoodChange {
    pub fn any(&self) -> bool {
        self.neighbors || self.two_hop || self.selectors
    }
}

/// Which neighbors a TC advertises. Plain OLSR uses `Selectors`; the wider
/// sets give routing more links to choose from at the cost of larger TCs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TcRedundancy {
    #[default]
    Selectors,
    SelectorsAndMprs,
    AllNeighbors,
}

impl TcRedundancy {
    pub fn as_str(self) -> &'static str {
        match self {
            TcRedundancy::Selectors => "selectors",
            TcRedundancy::SelectorsAndMprs => "selectors+mprs",
            TcRedundancy::AllNeighbors => "all",
        }
    }
}

impl std::str::FromStr for TcRedundancy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "selectors" => Ok(TcRedundancy::Selectors),
            "selectors+mprs" => Ok(TcRedundancy::SelectorsAndMprs),
            "all" => Ok(TcRedundancy::AllNeighbors),
            other => Err(format!("unknown TC redundancy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcOutcome {
    /// Own TC or older ANSN than what is stored.
    Discarded,
    Applied {
        links_changed: bool,
        weight_changed: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpiryChange {
    pub neighborhood: NeighborhoodChange,
    pub topology: bool,
}

/// Control-plane state of one node.
#[derive(Debug, Clone)]
pub struct OlsrState {
    id: NodeId,
    redundancy: TcRedundancy,
    neighbor_hold: f64,
    topology_hold: f64,
    neighbors: BTreeMap<NodeId, NeighborTuple>,
    two_hop: BTreeMap<(NodeId, NodeId), SimTime>,
    mprs: BTreeSet<NodeId>,
    selectors: BTreeMap<NodeId, SimTime>,
    topology: BTreeMap<(NodeId, NodeId), TopologyTuple>,
    duplicates: BTreeMap<(NodeId, u16), DuplicateTuple>,
    ansn: u16,
    last_advertised: Option<Vec<NodeId>>,
    msg_seq: u16,
    mpr_recomputations: u64,
    mpr_coverage_violations: u64,
}

impl OlsrState {
    pub fn new(id: NodeId, neighbor_hold: f64, topology_hold: f64) -> Self {
        OlsrState {
            id,
            redundancy: TcRedundancy::Selectors,
            neighbor_hold,
            topology_hold,
            neighbors: BTreeMap::new(),
            two_hop: BTreeMap::new(),
            mprs: BTreeSet::new(),
            selectors: BTreeMap::new(),
            topology: BTreeMap::new(),
            duplicates: BTreeMap::new(),
            ansn: 0,
            last_advertised: None,
            msg_seq: 0,
            mpr_recomputations: 0,
            mpr_coverage_violations: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn set_tc_redundancy(&mut self, redundancy: TcRedundancy) {
        self.redundancy = redundancy;
    }

    pub fn neighbor_tuples(&self) -> impl Iterator<Item = &NeighborTuple> {
        self.neighbors.values()
    }

    pub fn symmetric_neighbors(&self) -> Vec<NodeId> {
        self.neighbors
            .values()
            .filter(|t| t.link_symmetric)
            .map(|t| t.neighbor)
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.neighbors.values().filter(|t| t.link_symmetric).count()
    }

    pub fn two_hop_tuples(&self) -> Vec<TwoHopTuple> {
        self.two_hop
            .iter()
            .map(|(&(via, two_hop), &expiry)| TwoHopTuple { via, two_hop, expiry })
            .collect()
    }

    fn two_hop_pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.two_hop.keys().copied().collect()
    }

    pub fn mprs(&self) -> &BTreeSet<NodeId> {
        &self.mprs
    }

    pub fn mpr_selectors(&self) -> BTreeSet<NodeId> {
        self.selectors.keys().copied().collect()
    }

    pub fn topology_tuples(&self) -> Vec<TopologyTuple> {
        self.topology.values().copied().collect()
    }

    pub fn duplicate_tuples(&self) -> impl Iterator<Item = &DuplicateTuple> {
        self.duplicates.values()
    }

    pub fn ansn(&self) -> u16 {
        self.ansn
    }

    /// Number of MPR recomputations and how many of them left a two-hop
    /// node uncovered (always zero unless selection is broken).
    pub fn mpr_stats(&self) -> (u64, u64) {
        (self.mpr_recomputations, self.mpr_coverage_violations)
    }

    /// Next per-node message sequence number (distinct from the ANSN).
    pub fn next_msg_seq(&mut self) -> u16 {
        self.msg_seq = self.msg_seq.wrapping_add(1);
        self.msg_seq
    }

    pub fn generate_hello(&self) -> HelloMessage {
        let heard_neighbors = self
            .neighbors
            .values()
            .map(|t| {
                let status = if self.mprs.contains(&t.neighbor) {
                    LinkStatus::Mpr
                } else if t.link_symmetric {
                    LinkStatus::Symmetric
                } else {
                    LinkStatus::Heard
                };
                (t.neighbor, status)
            })
            .collect();
        HelloMessage {
            originator: self.id,
            heard_neighbors,
        }
    }

    pub fn process_hello(&mut self, msg: &HelloMessage, sender: NodeId, now: SimTime) -> NeighborhoodChange {
        let mut change = NeighborhoodChange::default();
        if sender == self.id {
            return change;
        }
        let my_status = msg
            .heard_neighbors
            .iter()
            .find(|(n, _)| *n == self.id)
            .map(|&(_, s)| s);
        let symmetric = my_status.is_some();
        let expiry = now + self.neighbor_hold;
        let was_symmetric = self.neighbors.get(&sender).is_some_and(|t| t.link_symmetric);
        self.neighbors.insert(
            sender,
            NeighborTuple {
                neighbor: sender,
                link_symmetric: symmetric,
                expiry,
            },
        );
        change.neighbors = was_symmetric != symmetric;

        let before: Vec<(NodeId, NodeId)> = self
            .two_hop
            .range((sender, NodeId(0))..=(sender, NodeId(u32::MAX)))
            .map(|(k, _)| *k)
            .collect();
        for k in &before {
            self.two_hop.remove(k);
        }
        if symmetric {
            // a new symmetric neighbor is no longer a two-hop node
            let stale: Vec<_> = self.two_hop.keys().filter(|(_, t)| *t == sender).copied().collect();
            change.two_hop |= !stale.is_empty();
            for k in stale {
                self.two_hop.remove(&k);
            }
            for &(n, status) in &msg.heard_neighbors {
                if n == self.id || status == LinkStatus::Heard || self.is_symmetric(n) {
                    continue;
                }
                self.two_hop.insert((sender, n), expiry);
            }
        }
        let after: Vec<(NodeId, NodeId)> = self
            .two_hop
            .range((sender, NodeId(0))..=(sender, NodeId(u32::MAX)))
            .map(|(k, _)| *k)
            .collect();
        change.two_hop |= before != after;

        let selected_me = my_status == Some(LinkStatus::Mpr);
        let was_selector = self.selectors.contains_key(&sender);
        if selected_me {
            self.selectors.insert(sender, expiry);
        } else {
            self.selectors.remove(&sender);
        }
        change.selectors = was_selector != selected_me;

        if change.neighbors || change.two_hop {
            self.recompute_mprs();
        }
        change
    }

    fn is_symmetric(&self, n: NodeId) -> bool {
        self.neighbors.get(&n).is_some_and(|t| t.link_symmetric)
    }

    fn recompute_mprs(&mut self) {
        let sym = self.symmetric_neighbors();
        let pairs = self.two_hop_pairs();
        self.mprs = select_mprs(&sym, &pairs);
        self.mpr_recomputations += 1;
        if !mprs_cover(&self.mprs, &sym, &pairs) {
            self.mpr_coverage_violations += 1;
        }
    }

    /// Builds a TC advertising the current MPR selectors, or `None` when no
    /// neighbor has selected this node.
    pub fn generate_tc(&mut self, own_weight: NodeWeight) -> Option<TcMessage> {
        let mut advertised: BTreeSet<NodeId> = self.selectors.keys().copied().collect();
        match self.redundancy {
            TcRedundancy::Selectors => {}
            TcRedundancy::SelectorsAndMprs => advertised.extend(self.mprs.iter().copied()),
            TcRedundancy::AllNeighbors => advertised.extend(self.symmetric_neighbors()),
        }
        if advertised.is_empty() {
            return None;
        }
        let advertised: Vec<NodeId> = advertised.into_iter().collect();
        if self.last_advertised.as_ref() != Some(&advertised) {
            self.ansn = self.ansn.wrapping_add(1);
            self.last_advertised = Some(advertised.clone());
        }
        Some(TcMessage {
            originator: self.id,
            ansn: self.ansn,
            weight: own_weight,
            advertised,
        })
    }

    pub fn process_tc(&mut self, msg: &TcMessage, now: SimTime) -> TcOutcome {
        if msg.originator == self.id {
            return TcOutcome::Discarded;
        }
        let orig = msg.originator;
        let range = (orig, NodeId(0))..=(orig, NodeId(u32::MAX));
        let old: Vec<TopologyTuple> = self.topology.range(range).map(|(_, t)| *t).collect();
        if let Some(stored) = old.first() {
            if seq_newer(stored.ansn, msg.ansn) {
                return TcOutcome::Discarded;
            }
        }
        for t in &old {
            self.topology.remove(&(t.last_addr, t.dest_addr));
        }
        let expiry = now + self.topology_hold;
        for &dest in &msg.advertised {
            if dest == orig {
                continue;
            }
            self.topology.insert(
                (orig, dest),
                TopologyTuple {
                    last_addr: orig,
                    dest_addr: dest,
                    ansn: msg.ansn,
                    weight: msg.weight,
                    expiry,
                },
            );
        }
        let old_links: Vec<NodeId> = old.iter().map(|t| t.dest_addr).collect();
        let new_links: Vec<NodeId> = self
            .topology
            .range((orig, NodeId(0))..=(orig, NodeId(u32::MAX)))
            .map(|(k, _)| k.1)
            .collect();
        TcOutcome::Applied {
            links_changed: old_links != new_links,
            weight_changed: old.iter().any(|t| t.weight != msg.weight),
        }
    }

    /// Whether a copy of `(originator, msg_seq)` has already been processed.
    pub fn is_duplicate(&self, originator: NodeId, msg_seq: u16) -> bool {
        self.duplicates.contains_key(&(originator, msg_seq))
    }

    /// Records the copy in the duplicate set and decides whether to relay
    /// it: only copies received from an MPR selector are relayed, and each
    /// message at most once.
    pub fn should_forward_tc(&mut self, originator: NodeId, msg_seq: u16, sender: NodeId, now: SimTime) -> bool {
        let expiry = now + self.topology_hold;
        let from_selector = self.selectors.contains_key(&sender);
        let entry = self
            .duplicates
            .entry((originator, msg_seq))
            .or_insert(DuplicateTuple {
                originator,
                msg_seq,
                retransmitted: false,
                expiry,
            });
        entry.expiry = entry.expiry.max(expiry);
        if originator == self.id || entry.retransmitted || !from_selector {
            return false;
        }
        entry.retransmitted = true;
        true
    }

    /// Drops every tuple whose expiry is before `now`, cascading through the
    /// two-hop and selector sets, and reselects MPRs if the neighborhood
    /// moved.
    pub fn expire_tuples(&mut self, now: SimTime) -> ExpiryChange {
        let mut change = ExpiryChange::default();
        let sym_before = self.symmetric_neighbors();
        self.neighbors.retain(|_, t| t.expiry >= now);
        let sym_after = self.symmetric_neighbors();
        change.neighborhood.neighbors = sym_before != sym_after;

        let n2 = self.two_hop.len();
        let neighbors = &self.neighbors;
        self.two_hop.retain(|(via, _), exp| {
            *exp >= now && neighbors.get(via).is_some_and(|t| t.link_symmetric)
        });
        change.neighborhood.two_hop = n2 != self.two_hop.len();

        let ns = self.selectors.len();
        self.selectors
            .retain(|n, exp| *exp >= now && neighbors.get(n).is_some_and(|t| t.link_symmetric));
        change.neighborhood.selectors = ns != self.selectors.len();

        let nt = self.topology.len();
        self.topology.retain(|_, t| t.expiry >= now);
        change.topology = nt != self.topology.len();

        self.duplicates.retain(|_, d| d.expiry >= now);

        if change.neighborhood.neighbors || change.neighborhood.two_hop {
            self.recompute_mprs();
        }
        change
    }
}
