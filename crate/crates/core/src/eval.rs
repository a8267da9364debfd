//! Ranking metrics and distance histograms.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::{self, DatasetMatrix};

/// `sqrt(2) + 0.05`, the tolerance band above the statistical maximum distance.
pub const SQRT2_BAND: f64 = core::f64::consts::SQRT_2 + 0.05;

/// Scores with binary labels (`true` = positive class).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: scores.len(), found: labels.len() });
        }
        if let Some(i) = scores.iter().position(|s| s.is_nan()) {
            return Err(Error::NonFinite(i));
        }
        Ok(ScoredLabels { scores, labels })
    }

    /// Positives first, then negatives.
    pub fn from_groups(positive: &[f64], negative: &[f64]) -> Result<Self> {
        let mut scores = positive.to_vec();
        scores.extend_from_slice(negative);
        let mut labels = alloc::vec![true; positive.len()];
        labels.extend(core::iter::repeat_n(false, negative.len()));
        ScoredLabels::new(scores, labels)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    fn class_counts(&self) -> Result<(u64, u64)> {
        let pos = self.labels.iter().filter(|&&l| l).count() as u64;
        let neg = self.labels.len() as u64 - pos;
        if pos == 0 || neg == 0 {
            return Err(Error::SingleClass);
        }
        Ok((pos, neg))
    }
}

/// Area under the ROC curve from midranks (Mann-Whitney U), ties counting 1/2.
///
/// Rank sums are kept in doubled integer form so the result is exactly
/// `(#correct pairs + #tied pairs / 2) / (#pos * #neg)`.
pub fn auroc(sl: &ScoredLabels) -> Result<f64> {
    let (pos, neg) = sl.class_counts()?;
    let mut order: Vec<usize> = (0..sl.len()).collect();
    order.sort_by(|&a, &b| sl.scores[a].total_cmp(&sl.scores[b]));

    // Sum over positives of 2 * midrank (1-based ranks).
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && sl.scores[order[j]] == sl.scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share midrank (i + 1 + j) / 2.
        let twice_mid = (i + 1 + j) as u64;
        let pos_in_group = order[i..j].iter().filter(|&&o| sl.labels[o]).count() as u64;
        twice_rank_sum += twice_mid * pos_in_group;
        i = j;
    }
    // 2U = 2R - pos(pos+1)
    let twice_u = twice_rank_sum - pos * (pos + 1);
    Ok(twice_u as f64 / (2 * pos * neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision and recall at every distinct score threshold, descending.
/// A row is predicted positive when its score is `>=` the threshold.
pub fn precision_recall(sl: &ScoredLabels) -> Result<Vec<PrPoint>> {
    let (pos, _) = sl.class_counts()?;
    let mut order: Vec<usize> = (0..sl.len()).collect();
    order.sort_by(|&a, &b| sl.scores[b].total_cmp(&sl.scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let t = sl.scores[order[i]];
        while i < order.len() && sl.scores[order[i]] == t {
            if sl.labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(PrPoint {
            threshold: t,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / pos as f64,
        });
    }
    Ok(out)
}

/// Bin layout of a distance histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramConfig {
    pub bins: usize,
    /// `None` spans `[0, max distance]`.
    pub range: Option<(f64, f64)>,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig { bins: 200, range: Some((0.0, 2.1)) }
    }
}

impl HistogramConfig {
    pub fn auto(bins: usize) -> Self {
        HistogramConfig { bins, range: None }
    }

    fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::invalid("bins", "need at least one bin"));
        }
        if let Some((lo, hi)) = self.range {
            if !(hi > lo && lo.is_finite() && hi.is_finite()) {
                return Err(Error::invalid("range", "need finite lo < hi"));
            }
        }
        Ok(())
    }
}

/// Fixed-range accumulator. Values outside the range are clamped into the
/// first or last bin and also tallied separately, so counts always sum to
/// the number of values added.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    below: u64,
    above: u64,
    beyond_sqrt2_band: u64,
}

impl Histogram {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Self {
        Histogram { lo, hi, counts: alloc::vec![0; bins], below: 0, above: 0, beyond_sqrt2_band: 0 }
    }

    pub fn add(&mut self, d: f64) {
        let bins = self.counts.len();
        if d > SQRT2_BAND {
            self.beyond_sqrt2_band += 1;
        }
        let idx = if d < self.lo {
            self.below += 1;
            0
        } else if d >= self.hi {
            if d > self.hi {
                self.above += 1;
            }
            bins - 1
        } else {
            (((d - self.lo) / (self.hi - self.lo) * bins as f64) as usize).min(bins - 1)
        };
        self.counts[idx] += 1;
    }

    /// Adds another accumulator with the same layout.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.counts.len(), other.counts.len(), "histogram layouts differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.below += other.below;
        self.above += other.above;
        self.beyond_sqrt2_band += other.beyond_sqrt2_band;
    }

    pub fn finish(self) -> HistogramReport {
        let bins = self.counts.len();
        let width = (self.hi - self.lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| self.lo + width * i as f64).collect();
        let log_counts = self.counts.iter().map(|&c| libm::log10(1.0 + c as f64)).collect();
        let mut mode_bin = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[mode_bin] {
                mode_bin = i;
            }
        }
        let total = self.counts.iter().sum();
        HistogramReport {
            mode: 0.5 * (edges[mode_bin] + edges[mode_bin + 1]),
            mode_bin,
            edges,
            counts: self.counts,
            log_counts,
            total,
            below_range: self.below,
            above_range: self.above,
            beyond_sqrt2_band: self.beyond_sqrt2_band,
            spread: None,
        }
    }
}

/// Quantiles of the measured distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

impl Spread {
    pub fn ratio(&self) -> f64 {
        self.p90 / self.p10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramReport {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `log10(1 + count)` per bin.
    pub log_counts: Vec<f64>,
    /// Center of the most populated bin (earliest on ties).
    pub mode: f64,
    pub mode_bin: usize,
    pub total: u64,
    pub below_range: u64,
    pub above_range: u64,
    /// Number of distances greater than `sqrt(2) + 0.05`.
    pub beyond_sqrt2_band: u64,
    pub spread: Option<Spread>,
}

impl HistogramReport {
    pub fn bin_centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    pub fn fraction_beyond_sqrt2_band(&self) -> f64 {
        self.beyond_sqrt2_band as f64 / self.total as f64
    }

    /// Number of distances in bins lying entirely below `d`.
    pub fn count_below(&self, d: f64) -> u64 {
        self.counts.iter().zip(self.edges.windows(2)).filter(|(_, w)| w[1] <= d).map(|(c, _)| *c).sum()
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

fn histogram_of(values: &[f64], cfg: &HistogramConfig) -> Result<HistogramReport> {
    cfg.validate()?;
    let (lo, hi) = match cfg.range {
        Some(r) => r,
        None => {
            let max = values.iter().cloned().fold(0.0, f64::max);
            (0.0, if max > 0.0 { max * (1.0 + 1e-12) } else { 1.0 })
        }
    };
    let mut h = Histogram::new(cfg.bins, lo, hi);
    values.iter().for_each(|&d| h.add(d));
    let mut report = h.finish();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    report.spread = Some(Spread {
        p10: quantile_sorted(&sorted, 0.1),
        p50: quantile_sorted(&sorted, 0.5),
        p90: quantile_sorted(&sorted, 0.9),
    });
    Ok(report)
}

/// Distances of all rows to `probe`.
///
/// With `normalized`, rows are unit-vector-normalized first and the distance
/// is `||row - probe||`; otherwise it is `sqrt(||row - probe||^2 / k)`.
pub fn probe_distances(data: &DatasetMatrix, probe: &[f64], normalized: bool) -> Result<Vec<f64>> {
    if probe.len() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: probe.len() });
    }
    if normalized {
        let unit = data.unit_normalized()?;
        Ok(unit.rows().map(|r| libm::sqrt(geometry::sq_dist(r, probe))).collect())
    } else {
        let k = data.dim() as f64;
        Ok(data.rows().map(|r| libm::sqrt(geometry::sq_dist(r, probe) / k)).collect())
    }
}

pub fn probe_histogram(data: &DatasetMatrix, probe: &[f64], normalized: bool, cfg: &HistogramConfig) -> Result<HistogramReport> {
    let d = probe_distances(data, probe, normalized)?;
    histogram_of(&d, cfg)
}

/// Accumulates distances of pairs `(i, j)` with `i` in `rows` and `j > i`.
/// Partitions of `0..n` merge into the full pairwise histogram.
pub fn pairwise_partial(data: &DatasetMatrix, rows: Range<usize>, bins: usize, lo: f64, hi: f64) -> Histogram {
    let mut h = Histogram::new(bins, lo, hi);
    for i in rows {
        let a = data.row(i);
        for j in i + 1..data.n_rows() {
            h.add(libm::sqrt(geometry::sq_dist(a, data.row(j))));
        }
    }
    h
}

/// Histogram of all `n(n-1)/2` pairwise distances of unit-normalized rows.
pub fn pairwise_histogram(data: &DatasetMatrix, cfg: &HistogramConfig) -> Result<HistogramReport> {
    check_pairwise(data, cfg)?;
    let (lo, hi) = cfg.range.unwrap_or((0.0, 2.1));
    Ok(pairwise_partial(data, 0..data.n_rows(), cfg.bins, lo, hi).finish())
}

pub fn check_pairwise(data: &DatasetMatrix, cfg: &HistogramConfig) -> Result<()> {
    cfg.validate()?;
    if data.n_rows() < 2 {
        return Err(Error::invalid("data", "pairwise histogram needs at least 2 rows"));
    }
    data.check_unit_rows(1e-6)
}
