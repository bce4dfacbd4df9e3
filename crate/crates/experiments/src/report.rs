//! Comparison of the two protocols from the seed-mean rows of a rate grid.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use anyhow::{Context, Result};

use crate::artifacts::fmt_opt;

pub const COMPARISON_HEADER: [&str; 9] = [
    "mobility",
    "interval_s",
    "standard_pdr_pct",
    "multimetric_pdr_pct",
    "pdr_improvement_pct",
    "standard_lifetime_s",
    "multimetric_lifetime_s",
    "lifetime_improvement_pct",
    "status",
];

/// Percent change of `mm` relative to `std`.
pub fn improvement(std: Option<f64>, mm: Option<f64>) -> Option<f64> {
    match (std, mm) {
        (Some(s), Some(m)) if s != 0.0 => Some(100.0 * (m - s) / s),
        _ => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Means {
    pub standard: Option<f64>,
    pub multimetric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub mobility: String,
    /// Formatted as in the grid CSV, so rows key exactly.
    pub interval: String,
    pub pdr: Means,
    pub lifetime: Means,
}

impl ComparisonRow {
    pub fn pdr_improvement(&self) -> Option<f64> {
        improvement(self.pdr.standard, self.pdr.multimetric)
    }

    pub fn lifetime_improvement(&self) -> Option<f64> {
        improvement(self.lifetime.standard, self.lifetime.multimetric)
    }

    pub fn complete(&self) -> bool {
        self.pdr_improvement().is_some() && self.lifetime_improvement().is_some()
    }
}

/// (mobility, interval) -> protocol -> mean, in first-seen order.
type MeanTable = Vec<((String, String), BTreeMap<String, Option<f64>>)>;

fn read_means(path: &Path) -> Result<MeanTable> {
    let mut out: MeanTable = Vec::new();
    if !path.exists() {
        return Ok(out);
    }
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column {name}", path.display()))
    };
    let (p, m, i, s) = (col("protocol")?, col("mobility")?, col("interval_s")?, col("seed")?);
    let v = 5;
    for rec in r.records() {
        let rec = rec?;
        if &rec[s] != "mean" {
            continue;
        }
        let key = (rec[m].to_string(), rec[i].to_string());
        let value = rec[v].parse::<f64>().ok();
        let slot = match out.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot,
            None => {
                out.push((key, BTreeMap::new()));
                out.last_mut().unwrap()
            }
        };
        slot.1.insert(rec[p].to_string(), value);
    }
    Ok(out)
}

/// Joins the pdr and lifetime grids of `name` found in `dir`.
pub fn compare(dir: &Path, name: &str) -> Result<Vec<ComparisonRow>> {
    let pdr_path = dir.join(format!("{name}_pdr.csv"));
    let life_path = dir.join(format!("{name}_lifetime.csv"));
    if !pdr_path.exists() && !life_path.exists() {
        anyhow::bail!("no {name}_pdr.csv or {name}_lifetime.csv in {}", dir.display());
    }
    let pdr = read_means(&pdr_path)?;
    let life = read_means(&life_path)?;
    let mut keys: Vec<(String, String)> = pdr.iter().map(|(k, _)| k.clone()).collect();
    for (k, _) in &life {
        if !keys.contains(k) {
            keys.push(k.clone());
        }
    }
    let lookup = |table: &MeanTable, key: &(String, String)| {
        let row = table.iter().find(|(k, _)| k == key).map(|(_, v)| v);
        let get = |p: &str| row.and_then(|r| r.get(p).copied().flatten());
        Means {
            standard: get("standard"),
            multimetric: get("multimetric"),
        }
    };
    Ok(keys
        .iter()
        .map(|key| ComparisonRow {
            mobility: key.0.clone(),
            interval: key.1.clone(),
            pdr: lookup(&pdr, key),
            lifetime: lookup(&life, key),
        })
        .collect())
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(COMPARISON_HEADER)?;
    for r in rows {
        w.write_record([
            r.mobility.clone(),
            r.interval.clone(),
            fmt_opt(r.pdr.standard, 4),
            fmt_opt(r.pdr.multimetric, 4),
            fmt_opt(r.pdr_improvement(), 3),
            fmt_opt(r.lifetime.standard, 6),
            fmt_opt(r.lifetime.multimetric, 6),
            fmt_opt(r.lifetime_improvement(), 3),
            if r.complete() { "ok" } else { "incomplete" }.to_string(),
        ])?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

fn pct(v: Option<f64>) -> String {
    v.map(|v| format!("{v:+.1}%")).unwrap_or_else(|| "n/a".to_string())
}

/// Plain-text table for the terminal.
pub fn render(rows: &[ComparisonRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>8} {:>9} {:>9} {:>8} {:>10} {:>10} {:>8}  status",
        "mobility", "interval", "pdr std", "pdr mm", "delta", "life std", "life mm", "delta"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<8} {:>8} {:>9} {:>9} {:>8} {:>10} {:>10} {:>8}  {}",
            r.mobility,
            r.interval,
            fmt_opt(r.pdr.standard, 2),
            fmt_opt(r.pdr.multimetric, 2),
            pct(r.pdr_improvement()),
            fmt_opt(r.lifetime.standard, 2),
            fmt_opt(r.lifetime.multimetric, 2),
            pct(r.lifetime_improvement()),
            if r.complete() { "ok" } else { "incomplete" },
        );
    }
    s
}
