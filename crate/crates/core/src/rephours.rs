//! Chronology-preserving reduction of hourly series to weighted representative hours.
//!
//! Hours are `(Lf, Wf, PVf)` triples. Clustering only ever merges neighbours in
//! time, so every representative stands for one contiguous window.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentativeHour {
    /// 1-based chronological position.
    pub index: usize,
    pub load_factor: f64,
    pub wind_factor: f64,
    pub pv_factor: f64,
    pub weight: f64,
    pub span_hours: usize,
}

impl RepresentativeHour {
    pub fn triple(&self) -> [f64; 3] {
        [self.load_factor, self.wind_factor, self.pv_factor]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentativeSet {
    pub hours: Vec<RepresentativeHour>,
    #[serde(default)]
    pub source_hash: String,
}

impl RepresentativeSet {
    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn total_span(&self) -> usize {
        self.hours.iter().map(|h| h.span_hours).sum()
    }

    /// Broken invariants as human-readable rules.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.hours.is_empty() {
            out.push("at least one representative hour".into());
        }
        let sum: f64 = self.hours.iter().map(|h| h.weight).sum();
        if (sum - 1.0).abs() > 1e-12 {
            out.push(format!("weights sum to 1 (got {sum})"));
        }
        for (k, h) in self.hours.iter().enumerate() {
            if h.index != k + 1 {
                out.push(format!("hour {} out of order", h.index));
            }
            if !(h.weight > 0.0) {
                out.push(format!("hour {}: weight > 0", h.index));
            }
            if h.span_hours < 1 {
                out.push(format!("hour {}: span_hours ≥ 1", h.index));
            }
            if !h.triple().iter().all(|v| (0.0..=1.0).contains(v)) {
                out.push(format!("hour {}: factors in [0,1]", h.index));
            }
        }
        out
    }
}

/// Hex sha256 over the little-endian bytes of every value, hour by hour.
pub fn series_hash(series: &[[f64; 3]]) -> String {
    let mut h = Sha256::new();
    for t in series {
        for v in t {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Per-dimension `(min, max)` used for normalisation.
fn ranges(series: &[[f64; 3]]) -> [(f64, f64); 3] {
    let mut r = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    for t in series {
        for d in 0..3 {
            r[d].0 = r[d].0.min(t[d]);
            r[d].1 = r[d].1.max(t[d]);
        }
    }
    r
}

fn normalise(series: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let r = ranges(series);
    series
        .iter()
        .map(|t| {
            let mut o = [0.0; 3];
            for d in 0..3 {
                let w = r[d].1 - r[d].0;
                o[d] = if w > 0.0 { (t[d] - r[d].0) / w } else { 0.0 };
            }
            o
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupedDays {
    /// Kept days in original order, 24 hours each.
    pub days: Vec<Vec<[f64; 3]>>,
    pub multiplicity: Vec<usize>,
    /// Kept-day position for every input day.
    pub assignment: Vec<usize>,
}

impl DedupedDays {
    /// Concatenated hours of the kept days with per-hour multiplicities.
    pub fn flatten(&self) -> (Vec<[f64; 3]>, Vec<f64>) {
        let mut hours = Vec::new();
        let mut weights = Vec::new();
        for (day, &m) in self.days.iter().zip(&self.multiplicity) {
            hours.extend_from_slice(day);
            weights.extend(std::iter::repeat_n(m as f64, day.len()));
        }
        (hours, weights)
    }
}

/// Greedy merge of similar days.
///
/// Distance is the root-mean-square difference of the min-max normalised
/// 72-vectors; a day joins the earliest kept day closer than `threshold`,
/// otherwise it is kept. `threshold = 0` keeps every day.
pub fn dedupe_days(series: &[[f64; 3]], threshold: f64) -> Result<DedupedDays> {
    if series.is_empty() || series.len() % 24 != 0 {
        return Err(Error::Length(format!("series of {} hours is not a whole number of days", series.len())));
    }
    let norm = normalise(series);
    let n_days = series.len() / 24;
    let mut kept: Vec<usize> = Vec::new();
    let mut multiplicity = Vec::new();
    let mut assignment = Vec::with_capacity(n_days);
    for d in 0..n_days {
        let day = &norm[d * 24..(d + 1) * 24];
        let hit = kept.iter().position(|&k| {
            let other = &norm[k * 24..(k + 1) * 24];
            let ss: f64 = day.iter().zip(other).map(|(a, b)| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>()).sum();
            (ss / 72.0).sqrt() < threshold
        });
        match hit {
            Some(p) => {
                multiplicity[p] += 1;
                assignment.push(p);
            }
            None => {
                kept.push(d);
                multiplicity.push(1);
                assignment.push(kept.len() - 1);
            }
        }
    }
    let days = kept.iter().map(|&d| series[d * 24..(d + 1) * 24].to_vec()).collect();
    Ok(DedupedDays { days, multiplicity, assignment })
}

#[derive(Clone, Copy)]
struct Cluster {
    start: usize,
    end: usize,
    weight: f64,
    /// Weighted sum of normalised values.
    nsum: [f64; 3],
    prev: Option<usize>,
    next: Option<usize>,
    alive: bool,
    version: u32,
}

impl Cluster {
    fn ncentroid(&self) -> [f64; 3] {
        [self.nsum[0] / self.weight, self.nsum[1] / self.weight, self.nsum[2] / self.weight]
    }
}

fn merge_cost(a: &Cluster, b: &Cluster) -> f64 {
    let (ca, cb) = (a.ncentroid(), b.ncentroid());
    let d2: f64 = (0..3).map(|i| (ca[i] - cb[i]).powi(2)).sum();
    a.weight * b.weight / (a.weight + b.weight) * d2
}

#[derive(PartialEq)]
struct Candidate {
    cost: f64,
    left: usize,
    lv: u32,
    rv: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.left.cmp(&other.left))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Adjacent-only agglomerative clustering of weighted hours down to `k` windows.
///
/// Merge cost is the size-weighted squared centroid distance
/// `w_a w_b / (w_a + w_b) * |c_a - c_b|^2` on normalised values; equal costs
/// merge the leftmost pair first. `span_hours` counts weighted input hours, so
/// integer multiplicities from [`dedupe_days`] carry through.
pub fn cluster_weighted(series: &[[f64; 3]], weights: &[f64], k: usize) -> Result<RepresentativeSet> {
    let n = series.len();
    if weights.len() != n {
        return Err(Error::Dimension(format!("{} weights for {n} hours", weights.len())));
    }
    if k < 1 || k > n {
        return Err(Error::Domain(format!("k = {k} outside 1..={n}")));
    }
    let norm = normalise(series);
    let mut cl: Vec<Cluster> = (0..n)
        .map(|t| {
            let w = weights[t];
            Cluster {
                start: t,
                end: t + 1,
                weight: w,
                nsum: [norm[t][0] * w, norm[t][1] * w, norm[t][2] * w],
                prev: t.checked_sub(1),
                next: if t + 1 < n { Some(t + 1) } else { None },
                alive: true,
                version: 0,
            }
        })
        .collect();
    let mut heap = BinaryHeap::new();
    for t in 0..n.saturating_sub(1) {
        heap.push(Reverse(Candidate { cost: merge_cost(&cl[t], &cl[t + 1]), left: t, lv: 0, rv: 0 }));
    }
    let mut count = n;
    while count > k {
        let Reverse(c) = heap.pop().expect("adjacent pairs remain while count > 1");
        let a = c.left;
        let Some(b) = cl[a].next else { continue };
        if !cl[a].alive || cl[a].version != c.lv || cl[b].version != c.rv {
            continue;
        }
        let bb = cl[b];
        let ca = &mut cl[a];
        ca.end = bb.end;
        ca.weight += bb.weight;
        for d in 0..3 {
            ca.nsum[d] += bb.nsum[d];
        }
        ca.next = bb.next;
        ca.version += 1;
        cl[b].alive = false;
        if let Some(nx) = bb.next {
            cl[nx].prev = Some(a);
            let cost = merge_cost(&cl[a], &cl[nx]);
            heap.push(Reverse(Candidate { cost, left: a, lv: cl[a].version, rv: cl[nx].version }));
        }
        if let Some(pv) = cl[a].prev {
            let cost = merge_cost(&cl[pv], &cl[a]);
            heap.push(Reverse(Candidate { cost, left: pv, lv: cl[pv].version, rv: cl[a].version }));
        }
        count -= 1;
    }
    let total: f64 = weights.iter().sum();
    let mut hours = Vec::with_capacity(k);
    let mut cur = Some(0);
    while let Some(i) = cur {
        let c = &cl[i];
        let span: f64 = weights[c.start..c.end].iter().sum();
        // Offsets from the first member keep equal-valued windows exact.
        let base = series[c.start];
        let mut centroid = [0.0; 3];
        for d in 0..3 {
            let off: f64 = (c.start..c.end).map(|t| weights[t] * (series[t][d] - base[d])).sum();
            centroid[d] = base[d] + off / c.weight;
        }
        hours.push(RepresentativeHour {
            index: hours.len() + 1,
            load_factor: centroid[0],
            wind_factor: centroid[1],
            pv_factor: centroid[2],
            weight: c.weight / total,
            span_hours: span.round() as usize,
        });
        cur = c.next;
    }
    let sum: f64 = hours.iter().map(|h| h.weight).sum();
    for h in &mut hours {
        h.weight /= sum;
    }
    Ok(RepresentativeSet { hours, source_hash: series_hash(series) })
}

/// Clusters `series` into `k` contiguous windows of equally weighted hours.
pub fn cluster_chronological(series: &[[f64; 3]], k: usize) -> Result<RepresentativeSet> {
    cluster_weighted(series, &vec![1.0; series.len()], k)
}

/// Optional day dedupe followed by weighted clustering; the hash covers the raw input.
pub fn reduce(series: &[[f64; 3]], k: usize, dedupe_threshold: f64) -> Result<RepresentativeSet> {
    if dedupe_threshold <= 0.0 {
        return cluster_chronological(series, k);
    }
    let dd = dedupe_days(series, dedupe_threshold)?;
    let (hours, weights) = dd.flatten();
    let mut set = cluster_weighted(&hours, &weights, k)?;
    set.source_hash = series_hash(series);
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepMetrics {
    /// Duration-curve RMSE per `(Lf, Wf, PVf)`.
    pub duration_rmse: [f64; 3],
    /// Mean absolute hour-to-hour ramp error per dimension.
    pub ramp_mae: [f64; 3],
}

/// Compares representatives with the series they came from.
///
/// The representative series is expanded by repeating each value for its
/// `span_hours`. Factors live on the nominal `[0, 1]` scale, so errors are
/// reported in those units without rescaling.
pub fn evaluate_representatives(rep: &RepresentativeSet, full: &[[f64; 3]]) -> Result<RepMetrics> {
    let n = full.len();
    if rep.total_span() != n {
        return Err(Error::Dimension(format!("representatives span {} hours, series has {n}", rep.total_span())));
    }
    let mut expanded = Vec::with_capacity(n);
    for h in &rep.hours {
        expanded.extend(std::iter::repeat_n(h.triple(), h.span_hours));
    }
    let mut m = RepMetrics { duration_rmse: [0.0; 3], ramp_mae: [0.0; 3] };
    for d in 0..3 {
        let mut a: Vec<f64> = full.iter().map(|t| t[d]).collect();
        let mut b: Vec<f64> = expanded.iter().map(|t| t[d]).collect();
        a.sort_by(|x, y| y.total_cmp(x));
        b.sort_by(|x, y| y.total_cmp(x));
        let ss: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        m.duration_rmse[d] = (ss / n as f64).sqrt();
        if n > 1 {
            let err: f64 =
                (1..n).map(|t| ((full[t][d] - full[t - 1][d]) - (expanded[t][d] - expanded[t - 1][d])).abs()).sum();
            m.ramp_mae[d] = err / (n - 1) as f64;
        }
    }
    Ok(m)
}

const HEADER: &str = "index,load_factor,wind_factor,pv_factor,weight,span_hours";

pub fn write_representatives(set: &RepresentativeSet, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = format!("# source_sha256={}\n{HEADER}\n", set.source_hash);
    for h in &set.hours {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            h.index, h.load_factor, h.wind_factor, h.pv_factor, h.weight, h.span_hours
        ));
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn parse_representatives(text: &str) -> Result<RepresentativeSet> {
    let mut source_hash = String::new();
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix('#') {
            if let Some(h) = rest.trim().strip_prefix("source_sha256=") {
                source_hash = h.trim().to_string();
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let hours = rdr
        .deserialize::<RepresentativeHour>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(RepresentativeSet { hours, source_hash })
}

pub fn read_representatives(path: &Path) -> Result<RepresentativeSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_representatives(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}
