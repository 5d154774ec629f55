//! Aggregation of a results CSV: per-group moments and the rank correlation
//! between BNE share and evacuation time.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;

use crate::error::{EvacError, Result};
use crate::harness::CSV_HEADER;

/// One parsed line of a results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultLine {
    pub name: String,
    pub pattern: String,
    pub number_persons: String,
    pub pct_bne: String,
    pub replicate: usize,
    pub seed: u64,
    pub evac_ticks: f64,
    pub evac_seconds: f64,
    pub mean_uec: f64,
    pub stalled: bool,
}

/// Columns usable as grouping keys.
pub const GROUP_KEYS: [&str; 4] = ["name", "pattern", "number_persons", "pct_bne"];

impl ResultLine {
    fn key(&self, column: &str) -> &str {
        match column {
            "name" => &self.name,
            "pattern" => &self.pattern,
            "number_persons" => &self.number_persons,
            "pct_bne" => &self.pct_bne,
            _ => unreachable!("group keys are validated up front"),
        }
    }
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultLine>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EvacError::Results(format!("missing column `{name}`")))
    };
    let idx: Vec<usize> = CSV_HEADER.iter().map(|h| col(h)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("").to_owned();
        let num = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|_| {
                EvacError::Results(format!("line {line}: bad {} `{}`", CSV_HEADER[i], field(i)))
            })
        };
        let int = |i: usize| -> Result<u64> {
            field(i).parse().map_err(|_| {
                EvacError::Results(format!("line {line}: bad {} `{}`", CSV_HEADER[i], field(i)))
            })
        };
        let stalled = match field(9).as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(EvacError::Results(format!(
                    "line {line}: bad stalled `{other}`"
                )))
            }
        };
        rows.push(ResultLine {
            name: field(0),
            pattern: field(1),
            number_persons: field(2),
            pct_bne: field(3),
            replicate: int(4)? as usize,
            seed: int(5)?,
            evac_ticks: num(6)?,
            evac_seconds: num(7)?,
            mean_uec: num(8)?,
            stalled,
        });
    }
    if rows.is_empty() {
        return Err(EvacError::Results("results table has no data rows".into()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Sample standard deviation; zero for a single observation.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Moments { mean, sd, min, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub keys: Vec<String>,
    pub n: usize,
    pub stalled: usize,
    pub evac_ticks: Moments,
    pub mean_uec: Moments,
}

/// Spearman correlation of BNE share against mean evacuation ticks, within
/// one combination of the other group keys.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendSummary {
    pub keys: Vec<String>,
    pub points: usize,
    pub spearman_ticks: Option<f64>,
    pub spearman_uec: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub group_by: Vec<String>,
    pub groups: Vec<GroupSummary>,
    pub trends: Vec<TrendSummary>,
}

/// Groups rows by the given columns (first-appearance order) and computes
/// moments per group. When `pct_bne` is a key, also reports its rank
/// correlation with the group means.
pub fn summarize(rows: &[ResultLine], group_by: &[&str]) -> Result<Summary> {
    for k in group_by {
        if !GROUP_KEYS.contains(k) {
            return Err(EvacError::UnknownParameter((*k).to_owned()));
        }
    }
    if rows.is_empty() {
        return Err(EvacError::EmptyGroup("no rows to summarize".into()));
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut members: HashMap<Vec<String>, Vec<&ResultLine>> = HashMap::new();
    for r in rows {
        let key: Vec<String> = group_by.iter().map(|k| r.key(k).to_owned()).collect();
        let slot = members.entry(key.clone()).or_default();
        if slot.is_empty() {
            order.push(key);
        }
        slot.push(r);
    }

    let mut groups = Vec::with_capacity(order.len());
    for key in order {
        let rs = &members[&key];
        let ticks: Vec<f64> = rs.iter().map(|r| r.evac_ticks).collect();
        let uec: Vec<f64> = rs.iter().map(|r| r.mean_uec).collect();
        let (Some(evac_ticks), Some(mean_uec)) = (Moments::of(&ticks), Moments::of(&uec)) else {
            return Err(EvacError::EmptyGroup(key.join(",")));
        };
        groups.push(GroupSummary {
            n: rs.len(),
            stalled: rs.iter().filter(|r| r.stalled).count(),
            keys: key,
            evac_ticks,
            mean_uec,
        });
    }

    let trends = match group_by.iter().position(|&k| k == "pct_bne") {
        Some(axis) => trends(&groups, axis)?,
        None => Vec::new(),
    };
    Ok(Summary {
        group_by: group_by.iter().map(|s| (*s).to_owned()).collect(),
        groups,
        trends,
    })
}

fn trends(groups: &[GroupSummary], axis: usize) -> Result<Vec<TrendSummary>> {
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut series: HashMap<Vec<String>, Vec<(f64, f64, f64)>> = HashMap::new();
    for g in groups {
        let mut rest = g.keys.clone();
        let pct = rest.remove(axis);
        let pct: f64 = pct
            .parse()
            .map_err(|_| EvacError::Results(format!("pct_bne `{pct}` is not a number")))?;
        let s = series.entry(rest.clone()).or_default();
        if s.is_empty() {
            order.push(rest);
        }
        s.push((pct, g.evac_ticks.mean, g.mean_uec.mean));
    }
    Ok(order
        .into_iter()
        .map(|keys| {
            let s = &series[&keys];
            let x: Vec<f64> = s.iter().map(|p| p.0).collect();
            let t: Vec<f64> = s.iter().map(|p| p.1).collect();
            let u: Vec<f64> = s.iter().map(|p| p.2).collect();
            TrendSummary {
                points: s.len(),
                spearman_ticks: spearman(&x, &t),
                spearman_uec: spearman(&x, &u),
                keys,
            }
        })
        .collect())
}

/// Ranks starting at 1, ties receiving the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// `None` for fewer than two points or a constant series.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return None;
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

const SUMMARY_COLUMNS: [&str; 10] = [
    "n",
    "stalled",
    "ticks_mean",
    "ticks_sd",
    "ticks_min",
    "ticks_max",
    "uec_mean",
    "uec_sd",
    "uec_min",
    "uec_max",
];

impl Summary {
    fn header(&self) -> Vec<String> {
        self.group_by
            .iter()
            .cloned()
            .chain(SUMMARY_COLUMNS.iter().map(|s| (*s).to_owned()))
            .collect()
    }

    fn cells(g: &GroupSummary) -> Vec<String> {
        let mut v = g.keys.clone();
        v.push(g.n.to_string());
        v.push(g.stalled.to_string());
        for m in [g.evac_ticks, g.mean_uec] {
            v.extend([m.mean, m.sd, m.min, m.max].iter().map(|x| x.to_string()));
        }
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header().join(","));
        out.push('\n');
        for g in &self.groups {
            out.push_str(&Self::cells(g).join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned columns followed by one trend line per series.
    pub fn to_table(&self) -> String {
        let header = self.header();
        let rows: Vec<Vec<String>> = self
            .groups
            .iter()
            .map(|g| {
                let mut v = g.keys.clone();
                v.push(g.n.to_string());
                v.push(g.stalled.to_string());
                for m in [g.evac_ticks, g.mean_uec] {
                    v.extend(
                        [m.mean, m.sd, m.min, m.max]
                            .iter()
                            .map(|x| format!("{x:.4}")),
                    );
                }
                v
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(String::len).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&header).chain(&rows) {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        // a single percentage has no trend to report
        for t in self.trends.iter().filter(|t| t.points > 1) {
            let label = if t.keys.is_empty() {
                "all".to_owned()
            } else {
                t.keys.join(",")
            };
            let fmt = |x: Option<f64>| x.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
            let _ = writeln!(
                out,
                "spearman(pct_bne, ticks_mean) [{label}] = {}  spearman(pct_bne, uec_mean) = {}  (points = {})",
                fmt(t.spearman_ticks),
                fmt(t.spearman_uec),
                t.points
            );
        }
        out
    }
}
