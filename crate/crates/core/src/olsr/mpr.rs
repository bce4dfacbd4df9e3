use std::collections::{BTreeMap, BTreeSet};

use crate::model::NodeId;

/// Greedy multipoint-relay selection.
///
/// `two_hop` holds `(via, two_hop)` pairs. Pairs whose `via` is not a
/// symmetric neighbor, or whose target is itself a symmetric neighbor, are
/// ignored. Neighbors that are the only cover of some two-hop node are taken
/// first; then the neighbor covering the most still-uncovered nodes is added
/// until everything is covered. Ties go to the smaller id.
pub fn select_mprs(symmetric_neighbors: &[NodeId], two_hop: &[(NodeId, NodeId)]) -> BTreeSet<NodeId> {
    let neighbors: BTreeSet<NodeId> = symmetric_neighbors.iter().copied().collect();
    let mut coverage: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    let mut covered_by: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &(via, target) in two_hop {
        if !neighbors.contains(&via) || neighbors.contains(&target) {
            continue;
        }
        coverage.entry(via).or_default().insert(target);
        covered_by.entry(target).or_default().insert(via);
    }

    let mut mprs = BTreeSet::new();
    for covers in covered_by.values() {
        if covers.len() == 1 {
            mprs.extend(covers.iter().copied());
        }
    }
    let mut uncovered: BTreeSet<NodeId> = covered_by
        .keys()
        .copied()
        .filter(|t| !covered_by[t].iter().any(|v| mprs.contains(v)))
        .collect();

    while !uncovered.is_empty() {
        // max_by_key keeps the last maximum; iterate in reverse so the
        // smallest id wins ties.
        let Some((&best, _)) = coverage
            .iter()
            .rev()
            .filter(|(n, _)| !mprs.contains(*n))
            .map(|(n, c)| (n, c.intersection(&uncovered).count()))
            .filter(|&(_, k)| k > 0)
            .max_by_key(|&(_, k)| k)
        else {
            break;
        };
        for t in &coverage[&best] {
            uncovered.remove(t);
        }
        mprs.insert(best);
    }
    mprs
}

/// True when every two-hop target reachable through a symmetric neighbor is
/// adjacent to at least one member of `mprs`.
pub fn mprs_cover(
    mprs: &BTreeSet<NodeId>,
    symmetric_neighbors: &[NodeId],
    two_hop: &[(NodeId, NodeId)],
) -> bool {
    let neighbors: BTreeSet<NodeId> = symmetric_neighbors.iter().copied().collect();
    let targets: BTreeSet<NodeId> = two_hop
        .iter()
        .filter(|(v, t)| neighbors.contains(v) && !neighbors.contains(t))
        .map(|&(_, t)| t)
        .collect();
    targets.iter().all(|t| {
        two_hop
            .iter()
            .any(|(v, tt)| tt == t && mprs.contains(v) && neighbors.contains(v))
    })
}
