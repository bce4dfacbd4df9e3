//! Acceptance gate. Every criterion is evaluated once, one PASS/FAIL line
//! per criterion goes to stderr (bypassing test capture), and each
//! criterion has its own test asserting its outcome.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use mmolsr_core::config::{FlowSpec, Mobility, Protocol, RunLength, ScenarioConfig};
use mmolsr_core::metrics::MetricsReport;
use mmolsr_core::model::{in_range, NodeId, NodeWeight, Position, WeightParams};
use mmolsr_core::olsr::wire::{deserialize_tc, serialize_tc};
use mmolsr_core::olsr::{OlsrState, TcMessage};
use mmolsr_core::routing::{
    compute_routing_table_multimetric, compute_routing_table_standard, compute_weight, dijkstra_oracle,
    NodeLocalState,
};
use mmolsr_core::sim::Simulation;
use mmolsr_experiments::scenario;
use mmolsr_experiments::sweep::{RunMode, RunRecord, SweepPlan, INTERVALS};
use mmolsr_experiments::{execute, successes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [1, 2, 3];
const RANGE: f64 = 700.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Sweeps {
    a: Vec<RunRecord>,
    b: Vec<RunRecord>,
    failed_cells: Vec<String>,
    rerun_mismatches: Vec<String>,
    rerun_checked: usize,
}

fn summary_bytes(dir: &Path, id: &str) -> Option<Vec<u8>> {
    std::fs::read(dir.join("runs").join(id).join("summary.csv")).ok()
}

fn run_sweeps() -> Sweeps {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let plan_a = SweepPlan::single("setupA", scenario::setup_a(), SEEDS.to_vec());
    let plan_b = SweepPlan::rate_grid("setupB", scenario::setup_b(), SEEDS.to_vec());
    let res_a = execute(&plan_a, &out_a).unwrap();
    let res_b = execute(&plan_b, &out_b).unwrap();
    let failed_cells = res_a
        .iter()
        .chain(&res_b)
        .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
        .collect();

    // second execution: all of Setup A and every fifth Setup B cell, which
    // touches every mode, mobility and protocol
    let again_a = tmp.path().join("a2");
    let again_b = tmp.path().join("b2");
    execute(&plan_a, &again_a).unwrap();
    let sample: Vec<_> = plan_b.cells().into_iter().step_by(5).collect();
    let sample_ids: Vec<String> = sample.iter().map(|c| c.id()).collect();
    let rerun = mmolsr_experiments::sweep::run_cells(sample);
    mmolsr_experiments::artifacts::write_runs(&again_b, "setupB", &rerun).unwrap();
    let mut mismatches = Vec::new();
    let mut checked = 0;
    let pairs = plan_a
        .cells()
        .iter()
        .map(|c| (c.id(), &out_a, &again_a))
        .chain(sample_ids.into_iter().map(|id| (id, &out_b, &again_b)))
        .collect::<Vec<_>>();
    for (id, first, second) in pairs {
        checked += 1;
        match (summary_bytes(first, &id), summary_bytes(second, &id)) {
            (Some(x), Some(y)) if x == y => {}
            _ => mismatches.push(id),
        }
    }

    Sweeps {
        a: successes(&res_a).into_iter().cloned().collect(),
        b: successes(&res_b).into_iter().cloned().collect(),
        failed_cells,
        rerun_mismatches: mismatches,
        rerun_checked: checked,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Seed mean of a metric for one grid point; `None` if any seed lacks it.
fn grid_mean(
    b: &[RunRecord],
    lifetime: bool,
    mobility: Mobility,
    interval: f64,
    protocol: Protocol,
) -> Option<f64> {
    let vals: Option<Vec<f64>> = b
        .iter()
        .filter(|r| {
            let mode_ok = match r.cell.mode {
                Some(RunMode::ToDepletion { .. }) => lifetime,
                Some(RunMode::Fixed { .. }) => !lifetime,
                None => false,
            };
            mode_ok
                && r.cell.mobility == mobility
                && r.cell.interval == Some(interval)
                && r.cell.protocol == protocol
        })
        .map(|r| {
            if lifetime {
                r.report.network_lifetime
            } else {
                r.report.normalized_pdr
            }
        })
        .collect();
    vals.filter(|v| v.len() == SEEDS.len()).map(|v| mean(&v))
}

fn pct_gain(std: f64, mm: f64) -> f64 {
    100.0 * (mm - std) / std
}

fn fmt_list(v: &[Option<f64>]) -> String {
    v.iter()
        .map(|x| x.map(|x| format!("{x:+.2}")).unwrap_or_else(|| "n/a".into()))
        .collect::<Vec<_>>()
        .join(", ")
}

// ---------------------------------------------------------------- 1..6

fn criterion_1(s: &Sweeps) -> Outcome {
    let final_mean = |p: Protocol| {
        let v: Vec<f64> = s
            .a
            .iter()
            .filter(|r| r.cell.protocol == p)
            .map(|r| r.report.avg_residual_series.last().unwrap().1)
            .collect();
        (mean(&v), v.len())
    };
    let (std, ns) = final_mean(Protocol::Standard);
    let (mm, nm) = final_mean(Protocol::MultiMetric);
    let initial = s.a[0].result.initial_energy;
    let gain = (mm - std) / initial;
    outcome(
        ns == 3 && nm == 3 && gain >= 0.05,
        format!(
            "final avg residual std {std:.4} J, mm {mm:.4} J, difference {:+.2}% of initial (need >= +5%)",
            100.0 * gain
        ),
    )
}

fn criterion_2(s: &Sweeps) -> Outcome {
    let hist = |p: Protocol| {
        let runs: Vec<&RunRecord> = s.a.iter().filter(|r| r.cell.protocol == p).collect();
        let n = runs.len() as f64;
        let mid: f64 = runs
            .iter()
            .map(|r| {
                let h = r.report.residual_histogram;
                let nodes: usize = h.iter().sum();
                h[3..7].iter().sum::<usize>() as f64 / nodes as f64
            })
            .sum::<f64>()
            / n;
        let low: f64 = runs.iter().map(|r| r.report.residual_histogram[0] as f64).sum::<f64>() / n;
        (mid, low)
    };
    let (std_mid, std_low) = hist(Protocol::Standard);
    let (mm_mid, mm_low) = hist(Protocol::MultiMetric);
    outcome(
        mm_mid > std_mid && mm_low <= std_low,
        format!(
            "30-70% fraction std {std_mid:.3}, mm {mm_mid:.3}; nodes below 10% std {std_low:.2}, mm {mm_low:.2}"
        ),
    )
}

fn improvements(s: &Sweeps, lifetime: bool, mobility: Mobility) -> Vec<Option<f64>> {
    INTERVALS
        .iter()
        .map(|&i| {
            let std = grid_mean(&s.b, lifetime, mobility, i, Protocol::Standard)?;
            let mm = grid_mean(&s.b, lifetime, mobility, i, Protocol::MultiMetric)?;
            Some(pct_gain(std, mm))
        })
        .collect()
}

fn criterion_3(s: &Sweeps) -> Outcome {
    let imp = improvements(s, true, Mobility::Static);
    let all = imp.iter().all(|x| x.is_some_and(|x| x >= 3.0));
    let five = imp.iter().filter(|x| x.is_some_and(|x| x >= 5.0)).count();
    outcome(
        all && five >= 2,
        format!("static lifetime improvement % per interval 0.1..0.025: [{}] (need all >= +3, two >= +5)", fmt_list(&imp)),
    )
}

fn criterion_4(s: &Sweeps) -> Outcome {
    let diffs: Vec<Option<f64>> = INTERVALS
        .iter()
        .map(|&i| {
            let std = grid_mean(&s.b, false, Mobility::Static, i, Protocol::Standard)?;
            let mm = grid_mean(&s.b, false, Mobility::Static, i, Protocol::MultiMetric)?;
            Some(mm - std)
        })
        .collect();
    let no_regression = diffs.iter().all(|d| d.is_some_and(|d| d >= -1.0));
    let improved = diffs.iter().any(|d| d.is_some_and(|d| d > 0.0));
    outcome(
        no_regression && improved,
        format!("static PDR mm - std, points per interval: [{}] (need all >= -1, one > 0)", fmt_list(&diffs)),
    )
}

fn criterion_5(s: &Sweeps) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [Protocol::Standard, Protocol::MultiMetric] {
        for (lifetime, what) in [(false, "pdr"), (true, "lifetime")] {
            let v: Vec<Option<f64>> = INTERVALS
                .iter()
                .map(|&i| grid_mean(&s.b, lifetime, Mobility::Static, i, p))
                .collect();
            let monotone = v.iter().all(Option::is_some) && v.windows(2).all(|w| w[1].unwrap() <= w[0].unwrap());
            ok &= monotone;
            let vals: Vec<String> = v
                .iter()
                .map(|x| x.map(|x| format!("{x:.1}")).unwrap_or_else(|| "n/a".into()))
                .collect();
            parts.push(format!("{p} {what} [{}]", vals.join(" ")));
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion_6(s: &Sweeps) -> Outcome {
    let fast = improvements(s, true, Mobility::random_waypoint(20.0));
    let stat = improvements(s, true, Mobility::Static);
    let ok = fast
        .iter()
        .zip(&stat)
        .all(|(f, s)| matches!((f, s), (Some(f), Some(s)) if f <= s));
    outcome(
        ok,
        format!(
            "lifetime improvement % rwp20 [{}] vs static [{}] (need rwp20 <= static per interval)",
            fmt_list(&fast),
            fmt_list(&stat)
        ),
    )
}

// ---------------------------------------------------------------- 7..9

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = WeightParams {
        alpha1: 1.0 / 3.0,
        alpha2: 1.0 / 3.0,
        alpha3: 1.0 / 3.0,
        l_max: 100.0,
        e_max: 7.0,
        d_max: 29.0,
    };
    let mut out_of_bounds = 0;
    for _ in 0..100_000 {
        // arbitrary mixing factors summing to 1 and inputs past the normalizers
        let a1 = rng.gen_range(0.0..1.0);
        let a2 = rng.gen_range(0.0..1.0 - a1);
        let q = WeightParams {
            alpha1: a1,
            alpha2: a2,
            alpha3: 1.0 - a1 - a2,
            l_max: rng.gen_range(1.0..200.0),
            e_max: rng.gen_range(0.1..20.0),
            d_max: rng.gen_range(1.0..60.0),
        };
        let local = NodeLocalState {
            queue_len: rng.gen_range(0..400),
            residual_energy: rng.gen_range(0.0..40.0),
            degree: rng.gen_range(0..120),
        };
        let w = compute_weight(local, &q).value();
        if !(0.0..=1.0).contains(&w) {
            out_of_bounds += 1;
        }
    }
    // idle and full node, then the half-loaded example: (0.5 + 0.5 + 1) / 3
    let cases = [
        (NodeLocalState { queue_len: 0, residual_energy: 7.0, degree: 0 }, 0.0),
        (NodeLocalState { queue_len: 100, residual_energy: 0.0, degree: 29 }, 1.0),
        (NodeLocalState { queue_len: 50, residual_energy: 3.5, degree: 29 }, 2.0 / 3.0),
    ];
    let errs: Vec<f64> = cases
        .iter()
        .map(|(l, want)| (compute_weight(*l, &p).value() - want).abs())
        .collect();
    let max_err = errs.iter().copied().fold(0.0, f64::max);
    outcome(
        out_of_bounds == 0 && max_err <= 1e-12,
        format!("{out_of_bounds} of 100000 weights outside [0,1]; example max error {max_err:.1e}"),
    )
}

struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    fn random_connected(rng: &mut ChaCha8Rng) -> Graph {
        loop {
            let n = rng.gen_range(2..=30);
            let side = rng.gen_range(300.0..2500.0);
            let pos: Vec<Position> = (0..n)
                .map(|_| Position::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
                .collect();
            let adj = (0..n)
                .map(|i| (0..n).filter(|&j| j != i && in_range(pos[i], pos[j], RANGE)).collect())
                .collect();
            let g = Graph { adj };
            if g.bfs(0).iter().all(Option::is_some) {
                return g;
            }
        }
    }

    fn bfs(&self, s: usize) -> Vec<Option<u32>> {
        let mut d = vec![None; self.adj.len()];
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

    /// HELLO rounds until neighbor state settles, then every TC delivered
    /// to every node.
    fn converge(&self, weights: &[NodeWeight]) -> Vec<OlsrState> {
        let n = self.adj.len();
        let mut states: Vec<OlsrState> = (0..n).map(|i| OlsrState::new(NodeId::from(i), 1e9, 1e9)).collect();
        for round in 0..4 {
            for u in 0..n {
                let msg = states[u].generate_hello();
                for &v in &self.adj[u] {
                    states[v].process_hello(&msg, NodeId::from(u), round as f64);
                }
            }
        }
        let tcs: Vec<TcMessage> = (0..n).filter_map(|u| states[u].generate_tc(weights[u])).collect();
        for tc in &tcs {
            for s in states.iter_mut() {
                s.process_tc(tc, 10.0);
            }
        }
        states
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    let mut checked = 0;
    for _ in 0..500 {
        let g = Graph::random_connected(&mut rng);
        let states = g.converge(&vec![NodeWeight::ZERO; g.adj.len()]);
        for (u, s) in states.iter().enumerate() {
            let table = compute_routing_table_standard(s.id(), &s.symmetric_neighbors(), &s.topology_tuples());
            for (v, hops) in g.bfs(u).into_iter().enumerate() {
                if v == u {
                    continue;
                }
                checked += 1;
                let want = hops.unwrap();
                match table.get(NodeId::from(v)) {
                    Some(e) if e.hops == want && e.cost == f64::from(want) => {}
                    _ => bad += 1,
                }
            }
        }
    }
    outcome(bad == 0, format!("{bad} of {checked} (source, destination) costs differ from BFS hop count"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut below_oracle = 0;
    let mut missing = 0;
    let mut reduction_bad = 0;
    let mut checked = 0;
    for _ in 0..500 {
        let g = Graph::random_connected(&mut rng);
        let n = g.adj.len();
        let weights: Vec<NodeWeight> = (0..n).map(|_| NodeWeight::new(rng.gen_range(0.0..=1.0))).collect();
        let states = g.converge(&weights);
        for s in &states {
            let nb = s.symmetric_neighbors();
            let tuples = s.topology_tuples();
            let table = compute_routing_table_multimetric(s.id(), &nb, &tuples);
            for (dest, cost) in dijkstra_oracle(s.id(), &nb, &tuples) {
                if dest == s.id() {
                    continue;
                }
                checked += 1;
                match table.get(dest) {
                    Some(e) if e.cost >= cost - 1e-12 => {}
                    Some(_) => below_oracle += 1,
                    None => missing += 1,
                }
            }
        }
        let c = NodeWeight::new(rng.gen_range(0.01..=1.0));
        let states = g.converge(&vec![c; n]);
        for s in &states {
            let nb = s.symmetric_neighbors();
            let tuples = s.topology_tuples();
            let mm = compute_routing_table_multimetric(s.id(), &nb, &tuples);
            let std = compute_routing_table_standard(s.id(), &nb, &tuples);
            let mm_hops: BTreeMap<NodeId, NodeId> = mm.iter().map(|e| (e.dest, e.next_hop)).collect();
            let std_hops: BTreeMap<NodeId, NodeId> = std.iter().map(|e| (e.dest, e.next_hop)).collect();
            if mm_hops != std_hops {
                reduction_bad += 1;
            }
        }
    }
    outcome(
        below_oracle == 0 && missing == 0 && reduction_bad == 0,
        format!(
            "{below_oracle} costs below the Dijkstra oracle, {missing} missing, of {checked}; \
             {reduction_bad} uniform-weight tables with next hops differing from min-hop"
        ),
    )
}

// ---------------------------------------------------------------- 10..14

fn all_runs(s: &Sweeps) -> impl Iterator<Item = &RunRecord> {
    s.a.iter().chain(&s.b)
}

fn criterion_10(s: &Sweeps) -> Outcome {
    let mut worst = 0.0f64;
    let mut charge_mismatch = 0;
    let mut runs = 0;
    for r in all_runs(s) {
        runs += 1;
        for e in &r.result.energy {
            worst = worst.max(e.ledger_error());
        }
        if r.result.stats.rx_charges != r.result.stats.receivers_at_tx_end {
            charge_mismatch += 1;
        }
    }
    let complete = s.failed_cells.is_empty() && runs == 6 + 144;
    outcome(
        complete && worst <= 1e-9 && charge_mismatch == 0,
        format!(
            "{runs} runs ({} failed): worst ledger error {worst:.1e}, {charge_mismatch} runs with overhear count mismatch",
            s.failed_cells.len()
        ),
    )
}

fn criterion_11(s: &Sweeps) -> Outcome {
    let mut recomputations = 0;
    let mut violations = 0;
    let mut runs = 0;
    for r in all_runs(s) {
        runs += 1;
        recomputations += r.result.stats.mpr_recomputations;
        violations += r.result.stats.mpr_coverage_violations;
    }
    outcome(
        runs == 150 && recomputations > 0 && violations == 0,
        format!("{violations} uncovered MPR sets in {recomputations} recomputations over {runs} runs"),
    )
}

fn criterion_12(s: &Sweeps) -> Outcome {
    outcome(
        s.rerun_mismatches.is_empty() && s.rerun_checked > 0,
        format!(
            "{} of {} re-executed cells produced a different summary.csv{}",
            s.rerun_mismatches.len(),
            s.rerun_checked,
            s.rerun_mismatches.first().map(|id| format!(" (first: {id})")).unwrap_or_default()
        ),
    )
}

fn criterion_13() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut mismatched = 0;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let count = rng.gen_range(0..64);
        let mut advertised: Vec<NodeId> = (0..count).map(|_| NodeId(rng.gen())).collect();
        advertised.sort();
        advertised.dedup();
        let msg = TcMessage {
            originator: NodeId(rng.gen()),
            ansn: rng.gen(),
            weight: NodeWeight::new(rng.gen_range(0.0..=1.0)),
            advertised,
        };
        let bytes = serialize_tc(&msg).unwrap();
        let back = deserialize_tc(&bytes).unwrap();
        worst = worst.max((back.weight.value() - msg.weight.value()).abs());
        let same_fields =
            back.originator == msg.originator && back.ansn == msg.ansn && back.advertised == msg.advertised;
        if !same_fields || serialize_tc(&back).unwrap() != bytes {
            mismatched += 1;
        }
    }
    let bound = 2f64.powi(-32);
    outcome(
        mismatched == 0 && worst <= bound,
        format!("{mismatched} of 10000 round trips differ; worst weight error {worst:.3e} (bound {bound:.3e})"),
    )
}

fn criterion_14() -> Outcome {
    let mut cfg = ScenarioConfig::default();
    cfg.mobility = Mobility::Static;
    cfg.sim_duration = RunLength::Fixed(150.0);
    cfg.flows = vec![FlowSpec {
        src: Some(NodeId(0)),
        dst: Some(NodeId(1)),
        ..FlowSpec::random(0, 0.1)
    }];
    let positions = vec![Position::new(0.0, 0.0), Position::new(300.0, 0.0)];
    let result = Simulation::with_positions(cfg, positions).unwrap().run();
    let report = MetricsReport::from_result(&result);
    let t = report.totals;
    let drops = t.dropped_queue + t.dropped_no_route + t.dropped_ttl + t.dropped_energy;
    outcome(
        report.normalized_pdr == Some(100.0) && drops == 0 && t.generated == 1200,
        format!(
            "PDR {:?}, generated {}, delivered {}, drops {drops}",
            report.normalized_pdr, t.generated, t.delivered
        ),
    )
}

fn outcomes() -> &'static [Outcome] {
    static CELL: OnceLock<Vec<Outcome>> = OnceLock::new();
    CELL.get_or_init(|| {
        let sweeps = run_sweeps();
        let all = vec![
            criterion_1(&sweeps),
            criterion_2(&sweeps),
            criterion_3(&sweeps),
            criterion_4(&sweeps),
            criterion_5(&sweeps),
            criterion_6(&sweeps),
            criterion_7(),
            criterion_8(),
            criterion_9(),
            criterion_10(&sweeps),
            criterion_11(&sweeps),
            criterion_12(&sweeps),
            criterion_13(),
            criterion_14(),
        ];
        let mut err = std::io::stderr().lock();
        for (i, o) in all.iter().enumerate() {
            let _ = writeln!(
                err,
                "criterion {}: {} {}",
                i + 1,
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
        }
        all
    })
}

fn check(n: usize) {
    let o = &outcomes()[n - 1];
    assert!(o.pass, "criterion {n} failed: {}", o.detail);
}

#[test]
fn criterion_01_setup_a_energy_savings() {
    check(1);
}

#[test]
fn criterion_02_setup_a_residual_dispersion() {
    check(2);
}

#[test]
fn criterion_03_static_lifetime_improvement() {
    check(3);
}

#[test]
fn criterion_04_static_pdr_no_regression() {
    check(4);
}

#[test]
fn criterion_05_rate_trend() {
    check(5);
}

#[test]
fn criterion_06_high_mobility_attenuation() {
    check(6);
}

#[test]
fn criterion_07_weight_bounds_and_examples() {
    check(7);
}

#[test]
fn criterion_08_standard_costs_match_bfs() {
    check(8);
}

#[test]
fn criterion_09_multimetric_admissible_and_reduces() {
    check(9);
}

#[test]
fn criterion_10_energy_conservation() {
    check(10);
}

#[test]
fn criterion_11_mpr_coverage() {
    check(11);
}

#[test]
fn criterion_12_determinism() {
    check(12);
}

#[test]
fn criterion_13_wire_round_trip() {
    check(13);
}

#[test]
fn criterion_14_single_hop_sanity() {
    check(14);
}
