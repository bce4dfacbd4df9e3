//! CSV and SVG outputs. Every file has a fixed header; numbers are written
//! with fixed precision so identical inputs give identical bytes.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use mmolsr_core::config::Protocol;
use mmolsr_core::metrics::HISTOGRAM_BINS;

use crate::plot::{self, Series};
use crate::sweep::{CellError, RunMode, RunRecord, PROTOCOLS};

pub const SUMMARY_HEADER: [&str; 11] = [
    "scenario",
    "protocol",
    "seed",
    "pdr_pct",
    "lifetime_s",
    "generated",
    "delivered",
    "drops_queue",
    "drops_noroute",
    "drops_ttl",
    "drops_energy",
];
pub const SERIES_HEADER: [&str; 2] = ["t_s", "avg_residual_j"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_low_pct", "bin_high_pct", "node_count"];
pub const FIG2_HEADER: [&str; 3] = ["t_s", "standard_avg_residual_j", "multimetric_avg_residual_j"];
pub const FIG3_HEADER: [&str; 4] = ["bin_low_pct", "bin_high_pct", "standard_nodes", "multimetric_nodes"];
pub const RUNS_HEADER: [&str; 12] = [
    "id",
    "scenario",
    "mode",
    "mobility",
    "interval_s",
    "protocol",
    "seed",
    "status",
    "pdr_pct",
    "lifetime_s",
    "hop_diameter",
    "placement_redraws",
];

pub fn pdr_header() -> [&'static str; 8] {
    grid_header("pdr_pct")
}

pub fn lifetime_header() -> [&'static str; 8] {
    grid_header("lifetime_s")
}

fn grid_header(value: &'static str) -> [&'static str; 8] {
    [
        "scenario",
        "protocol",
        "mobility",
        "interval_s",
        "seed",
        value,
        "hop_diameter",
        "placement_redraws",
    ]
}

pub fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

fn summary_row(r: &RunRecord) -> Vec<String> {
    let t = &r.report.totals;
    vec![
        r.cell.scenario.clone(),
        r.cell.protocol.to_string(),
        r.cell.seed.to_string(),
        fmt_opt(r.report.normalized_pdr, 4),
        fmt_opt(r.report.network_lifetime, 6),
        t.generated.to_string(),
        t.delivered.to_string(),
        t.dropped_queue.to_string(),
        t.dropped_no_route.to_string(),
        t.dropped_ttl.to_string(),
        t.dropped_energy.to_string(),
    ]
}

/// `summary.csv`, `energy_series.csv` and `energy_histogram.csv` for one run.
pub fn write_run(dir: &Path, r: &RunRecord) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let path = dir.join("summary.csv");
    let mut w = writer(&path)?;
    w.write_record(SUMMARY_HEADER)?;
    w.write_record(summary_row(r))?;
    finish(w, &path)?;

    let path = dir.join("energy_series.csv");
    let mut w = writer(&path)?;
    w.write_record(SERIES_HEADER)?;
    for (t, e) in &r.report.avg_residual_series {
        w.write_record([format!("{t:.3}"), format!("{e:.9}")])?;
    }
    finish(w, &path)?;

    let path = dir.join("energy_histogram.csv");
    let mut w = writer(&path)?;
    w.write_record(HISTOGRAM_HEADER)?;
    for (i, n) in r.report.residual_histogram.iter().enumerate() {
        w.write_record([(i * 10).to_string(), ((i + 1) * 10).to_string(), n.to_string()])?;
    }
    finish(w, &path)
}

/// Writes every successful run under `runs/<id>/` and an index of all cells,
/// failed ones included.
pub fn write_runs(out: &Path, name: &str, results: &[Result<RunRecord, CellError>]) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join(format!("{name}_runs.csv"));
    let mut w = writer(&path)?;
    w.write_record(RUNS_HEADER)?;
    for res in results {
        match res {
            Ok(r) => {
                write_run(&out.join("runs").join(r.id()), r)?;
                let c = &r.cell;
                w.write_record([
                    r.id(),
                    c.scenario.clone(),
                    c.mode.map(|m| m.label().to_string()).unwrap_or_default(),
                    c.mobility.label(),
                    fmt_opt(c.interval, 3),
                    c.protocol.to_string(),
                    c.seed.to_string(),
                    "ok".to_string(),
                    fmt_opt(r.report.normalized_pdr, 4),
                    fmt_opt(r.report.network_lifetime, 6),
                    r.result.hop_diameter.map(|d| d.to_string()).unwrap_or_default(),
                    r.result.placement_redraws.to_string(),
                ])?;
            }
            Err(e) => {
                let mut row = vec![String::new(); RUNS_HEADER.len()];
                row[0] = e.id.clone();
                row[7] = format!("error: {}", e.message);
                w.write_record(row)?;
            }
        }
    }
    finish(w, &path)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Seed-mean residual series per protocol, aligned by sample index.
pub fn mean_series(records: &[&RunRecord], protocol: Protocol) -> Vec<(f64, f64)> {
    let runs: Vec<&Vec<(f64, f64)>> = records
        .iter()
        .filter(|r| r.cell.protocol == protocol)
        .map(|r| &r.report.avg_residual_series)
        .collect();
    let len = runs.iter().map(|s| s.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let t = runs[0][i].0;
            let e: Vec<f64> = runs.iter().map(|s| s[i].1).collect();
            (t, mean(&e).unwrap_or(0.0))
        })
        .collect()
}

/// Seed-mean node count per residual bin.
pub fn mean_histogram(records: &[&RunRecord], protocol: Protocol) -> Option<[f64; HISTOGRAM_BINS]> {
    let runs: Vec<_> = records.iter().filter(|r| r.cell.protocol == protocol).collect();
    if runs.is_empty() {
        return None;
    }
    let mut out = [0.0; HISTOGRAM_BINS];
    for r in &runs {
        for (o, n) in out.iter_mut().zip(r.report.residual_histogram) {
            *o += n as f64;
        }
    }
    for o in &mut out {
        *o /= runs.len() as f64;
    }
    Some(out)
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg).with_context(|| format!("cannot write {}", path.display()))
}

/// `fig2_avg_energy.csv` and `fig3_histogram.csv` with their SVGs.
pub fn write_energy_figures(out: &Path, records: &[&RunRecord]) -> Result<()> {
    let std_s = mean_series(records, Protocol::Standard);
    let mm_s = mean_series(records, Protocol::MultiMetric);
    let path = out.join("fig2_avg_energy.csv");
    let mut w = writer(&path)?;
    w.write_record(FIG2_HEADER)?;
    for i in 0..std_s.len().max(mm_s.len()) {
        let t = std_s.get(i).or(mm_s.get(i)).map(|p| p.0).unwrap_or_default();
        w.write_record([
            format!("{t:.3}"),
            fmt_opt(std_s.get(i).map(|p| p.1), 9),
            fmt_opt(mm_s.get(i).map(|p| p.1), 9),
        ])?;
    }
    finish(w, &path)?;
    write_svg(
        &out.join("fig2_avg_energy.svg"),
        &plot::line_chart(
            "Average residual energy",
            "time (s)",
            "residual energy per node (J)",
            &[
                Series { name: "standard", points: std_s },
                Series { name: "multimetric", points: mm_s },
            ],
        ),
    )?;

    let std_h = mean_histogram(records, Protocol::Standard);
    let mm_h = mean_histogram(records, Protocol::MultiMetric);
    let path = out.join("fig3_histogram.csv");
    let mut w = writer(&path)?;
    w.write_record(FIG3_HEADER)?;
    for i in 0..HISTOGRAM_BINS {
        w.write_record([
            (i * 10).to_string(),
            ((i + 1) * 10).to_string(),
            fmt_opt(std_h.map(|h| h[i]), 3),
            fmt_opt(mm_h.map(|h| h[i]), 3),
        ])?;
    }
    finish(w, &path)?;
    let groups: Vec<String> = (0..HISTOGRAM_BINS).map(|i| format!("{}-{}", i * 10, (i + 1) * 10)).collect();
    let bars = |h: Option<[f64; HISTOGRAM_BINS]>| (0..HISTOGRAM_BINS).map(|i| h.map(|h| h[i])).collect();
    write_svg(
        &out.join("fig3_histogram.svg"),
        &plot::grouped_bars(
            "Residual energy at end of run",
            "residual energy (% of initial)",
            "nodes",
            &groups,
            &[("standard", bars(std_h)), ("multimetric", bars(mm_h))],
        ),
    )
}

/// One line of a grid CSV: per seed, or the seed mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub protocol: Protocol,
    pub mobility: String,
    pub interval: f64,
    pub seed: Option<u64>,
    pub value: Option<f64>,
    pub hop_diameter: Option<u32>,
    pub placement_redraws: Option<u32>,
}

/// Per-seed rows, each group followed by its mean. The mean is empty when
/// any seed lacks a value.
pub fn grid_rows(records: &[&RunRecord], value: impl Fn(&RunRecord) -> Option<f64>) -> Vec<GridRow> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let key = |r: &RunRecord| (r.cell.protocol, r.cell.mobility.label(), r.cell.interval);
        let k = key(records[i]);
        let mut j = i;
        let mut values = Vec::new();
        while j < records.len() && key(records[j]) == k {
            let r = records[j];
            let v = value(r);
            values.push(v);
            out.push(GridRow {
                protocol: r.cell.protocol,
                mobility: k.1.clone(),
                interval: r.cell.interval.unwrap_or(f64::NAN),
                seed: Some(r.cell.seed),
                value: v,
                hop_diameter: r.result.hop_diameter,
                placement_redraws: Some(r.result.placement_redraws),
            });
            j += 1;
        }
        let complete: Option<Vec<f64>> = values.into_iter().collect();
        out.push(GridRow {
            protocol: k.0,
            mobility: k.1,
            interval: records[i].cell.interval.unwrap_or(f64::NAN),
            seed: None,
            value: complete.and_then(|v| mean(&v)),
            hop_diameter: None,
            placement_redraws: None,
        });
        i = j;
    }
    out
}

fn write_grid(path: &Path, scenario: &str, header: [&str; 8], rows: &[GridRow], digits: usize) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record([
            scenario.to_string(),
            r.protocol.to_string(),
            r.mobility.clone(),
            format!("{:.3}", r.interval),
            r.seed.map(|s| s.to_string()).unwrap_or_else(|| "mean".to_string()),
            fmt_opt(r.value, digits),
            r.hop_diameter.map(|d| d.to_string()).unwrap_or_default(),
            r.placement_redraws.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    finish(w, path)
}

fn grid_svgs(out: &Path, stem: &str, what: &str, rows: &[GridRow]) -> Result<()> {
    let means: Vec<&GridRow> = rows.iter().filter(|r| r.seed.is_none()).collect();
    let mut mobilities: Vec<&str> = Vec::new();
    for r in &means {
        if !mobilities.contains(&r.mobility.as_str()) {
            mobilities.push(&r.mobility);
        }
    }
    for mob in mobilities {
        let mut intervals: Vec<f64> = Vec::new();
        for r in means.iter().filter(|r| r.mobility == mob) {
            if !intervals.contains(&r.interval) {
                intervals.push(r.interval);
            }
        }
        let groups: Vec<String> = intervals.iter().map(|i| format!("{i} s")).collect();
        let series: Vec<(&str, Vec<Option<f64>>)> = PROTOCOLS
            .iter()
            .map(|p| {
                let v = intervals
                    .iter()
                    .map(|i| {
                        means
                            .iter()
                            .find(|r| r.mobility == mob && r.interval == *i && r.protocol == *p)
                            .and_then(|r| r.value)
                    })
                    .collect();
                (p.as_str(), v)
            })
            .collect();
        write_svg(
            &out.join(format!("{stem}_{mob}.svg")),
            &plot::grouped_bars(&format!("{what}, {mob}"), "packet interval", what, &groups, &series),
        )?;
    }
    Ok(())
}

/// `<name>_pdr.csv` and `<name>_lifetime.csv` with grouped-bar SVGs per
/// mobility variant.
pub fn write_rate_grid(out: &Path, name: &str, records: &[&RunRecord]) -> Result<()> {
    let pdr: Vec<&RunRecord> = records
        .iter()
        .copied()
        .filter(|r| matches!(r.cell.mode, Some(RunMode::Fixed { .. })))
        .collect();
    let life: Vec<&RunRecord> = records
        .iter()
        .copied()
        .filter(|r| matches!(r.cell.mode, Some(RunMode::ToDepletion { .. })))
        .collect();
    let pdr_rows = grid_rows(&pdr, |r| r.report.normalized_pdr);
    let life_rows = grid_rows(&life, |r| r.report.network_lifetime);
    write_grid(&out.join(format!("{name}_pdr.csv")), name, pdr_header(), &pdr_rows, 4)?;
    write_grid(&out.join(format!("{name}_lifetime.csv")), name, lifetime_header(), &life_rows, 6)?;
    grid_svgs(out, &format!("{name}_pdr"), "PDR (%)", &pdr_rows)?;
    grid_svgs(out, &format!("{name}_lifetime"), "lifetime (s)", &life_rows)
}
