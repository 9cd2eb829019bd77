//! Per-router, per-minute traffic features and the fitted preprocessing
//! (MinMax scaling, PCA, and the rescale into encoder angles).

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::nettsim::{Label, Node, PacketRecord, TrafficType, MS_PER_MINUTE};

pub const NUM_FEATURES: usize = 31;

/// Schema identifier stored with fitted models and in artifacts.
pub const FEATURE_SCHEMA: &str = "window-31/v1";

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "mean_delay_ms",
    "mean_first_hop_delay_ms",
    "delay_q1_ms",
    "delay_q2_ms",
    "delay_q3_ms",
    "src_entropy_bits",
    "dst_entropy_bits",
    "count_data",
    "count_ack",
    "count_control",
    "src_E1",
    "src_E2",
    "src_E3",
    "src_E4",
    "src_R1",
    "src_R2",
    "src_R3",
    "src_C",
    "src_A",
    "dst_E1",
    "dst_E2",
    "dst_E3",
    "dst_E4",
    "dst_R1",
    "dst_R2",
    "dst_R3",
    "dst_C",
    "dst_A",
    "count_total",
    "avg_hops",
    "count_dropped",
];

const SRC_OFFSET: usize = 10;
const DST_OFFSET: usize = 19;

#[derive(Clone, Debug, PartialEq)]
pub struct WindowFeatures {
    pub router: Node,
    pub window_start: usize,
    pub values: [f64; NUM_FEATURES],
    pub label: Label,
}

/// Inclusive linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Shannon entropy in bits of a count histogram.
pub fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Features of one window from the packets that crossed the router.
pub fn window_values(packets: &[&PacketRecord]) -> [f64; NUM_FEATURES] {
    let mut v = [0.0; NUM_FEATURES];
    if packets.is_empty() {
        return v;
    }
    let n = packets.len() as f64;
    let mut delays: Vec<f64> = packets.iter().map(|p| p.end_to_end_delay() as f64).collect();
    v[0] = delays.iter().sum::<f64>() / n;
    let first: Vec<f64> = packets
        .iter()
        .filter_map(|p| p.first_hop_delay())
        .map(|d| d as f64)
        .collect();
    if !first.is_empty() {
        v[1] = first.iter().sum::<f64>() / first.len() as f64;
    }
    delays.sort_by(f64::total_cmp);
    v[2] = quantile(&delays, 0.25);
    v[3] = quantile(&delays, 0.5);
    v[4] = quantile(&delays, 0.75);
    for p in packets {
        let t = TrafficType::ALL.iter().position(|&t| t == p.kind).expect("known type");
        v[7 + t] += 1.0;
        v[SRC_OFFSET + p.src.index()] += 1.0;
        v[DST_OFFSET + p.final_node().index()] += 1.0;
        v[29] += p.hop_count() as f64;
        if !p.delivered() {
            v[30] += 1.0;
        }
    }
    v[5] = entropy(&v[SRC_OFFSET..SRC_OFFSET + 9]);
    v[6] = entropy(&v[DST_OFFSET..DST_OFFSET + 9]);
    v[28] = n;
    v[29] /= n;
    v
}

/// Windows `0..num_windows` (by emission minute) at `router`.
pub fn extract_windows(log: &[PacketRecord], router: Node, num_windows: usize) -> Vec<WindowFeatures> {
    let mut buckets: Vec<Vec<&PacketRecord>> = vec![Vec::new(); num_windows];
    for p in log.iter().filter(|p| p.visits(router)) {
        let w = (p.emitted_at() / MS_PER_MINUTE) as usize;
        if w < num_windows {
            buckets[w].push(p);
        }
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(w, pkts)| WindowFeatures {
            router,
            window_start: w,
            values: window_values(&pkts),
            label: if pkts.iter().any(|p| p.label.is_attack()) {
                Label::Attack
            } else {
                Label::Normal
            },
        })
        .collect()
}

/// Windows spanning the log, up to the last emission minute.
pub fn extract_features(log: &[PacketRecord], router: Node) -> Vec<WindowFeatures> {
    let windows = log
        .iter()
        .map(|p| (p.emitted_at() / MS_PER_MINUTE) as usize + 1)
        .max()
        .unwrap_or(0);
    extract_windows(log, router, windows)
}

/// Columnwise MinMax bounds over nonempty training rows.
pub fn fit_minmax(train: &[[f64; NUM_FEATURES]]) -> Result<(Vec<f64>, Vec<f64>)> {
    if train.is_empty() {
        return Err(Error::Domain("MinMax fit needs at least one row".into()));
    }
    let mut lo = vec![f64::INFINITY; NUM_FEATURES];
    let mut hi = vec![f64::NEG_INFINITY; NUM_FEATURES];
    for row in train {
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Domain(format!("non-finite value in column {j}")));
            }
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    Ok((lo, hi))
}

/// Scales one value into [0, 1]. A column that was constant in training
/// maps its training value to 0 and departures from it to their distance
/// in units of max(|lo|, 1), saturating at 1.
pub fn scale_value(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        ((x - lo).abs() / lo.abs().max(1.0)).min(1.0)
    }
}

pub fn apply_minmax(rows: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().zip(lo.iter().zip(hi)).map(|(&x, (&l, &h))| scale_value(x, l, h)).collect())
        .collect()
}

/// Principal axes of a set of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Row-major, orthonormal rows.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// True when fewer than `d` directions carry variance.
    pub rank_deficient: bool,
}

/// Eigenvalues at or below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

pub fn fit_pca(train: &[Vec<f64>], d: usize) -> Result<Pca> {
    let m = train.len();
    if m <= d {
        return Err(Error::Domain(format!("PCA needs more rows than components ({m} <= {d})")));
    }
    let p = train[0].len();
    if d == 0 || d > p {
        return Err(Error::Domain(format!("cannot keep {d} components of {p} columns")));
    }
    if train.iter().any(|r| r.len() != p) {
        return Err(Error::Domain("ragged PCA input".into()));
    }
    let mut mean = vec![0.0; p];
    for r in train {
        for (mu, x) in mean.iter_mut().zip(r) {
            *mu += x;
        }
    }
    mean.iter_mut().for_each(|mu| *mu /= m as f64);
    let mut cov = vec![vec![0.0; p]; p];
    for r in train {
        let c: Vec<f64> = r.iter().zip(&mean).map(|(x, mu)| x - mu).collect();
        for i in 0..p {
            for j in i..p {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            cov[i][j] /= (m - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let (values, vectors) = linalg::symmetric_eigen(&cov);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let rank = values.iter().filter(|&&v| v > RANK_TOLERANCE * top && v > 0.0).count();
    let kept = rank.min(d);
    let mut components: Vec<Vec<f64>> = vectors[..kept].to_vec();
    let mut explained_variance: Vec<f64> = values[..kept].to_vec();
    let rank_deficient = kept < d;
    if rank_deficient {
        log::warn!("covariance has rank {rank}; padding PCA to {d} components from its null space");
        components.extend(null_space_directions(&vectors[..rank], p, d - kept));
        explained_variance.resize(d, 0.0);
    }
    Ok(Pca {
        mean,
        components,
        explained_variance,
        rank_deficient,
    })
}

/// Orthonormal directions orthogonal to `span`, mixing all residual
/// coordinates so that departures from the training subspace show up in
/// every padded component. Fixed probe vectors keep this deterministic.
fn null_space_directions(span: &[Vec<f64>], p: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5_eed0_f9ca);
    let mut basis: Vec<Vec<f64>> = span.to_vec();
    let mut out = Vec::with_capacity(count);
    let mut probe = vec![1.0; p];
    while out.len() < count {
        for b in &basis {
            let c = linalg::dot(&probe, b);
            probe.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = linalg::norm(&probe);
        if n > 1e-6 {
            let v: Vec<f64> = probe.iter().map(|x| x / n).collect();
            basis.push(v.clone());
            out.push(v);
        }
        probe = (0..p)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
    }
    out
}

impl Pca {
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = row.iter().zip(&self.mean).map(|(x, mu)| x - mu).collect();
        self.components.iter().map(|w| linalg::dot(w, &c)).collect()
    }

    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (w, s) in self.components.iter().zip(scores) {
            out.iter_mut().zip(w).for_each(|(o, x)| *o += s * x);
        }
        out
    }
}

/// Score ranges narrower than this are treated as a single point.
const DEGENERATE_SPAN: f64 = 1e-9;

/// Scale for departures from a component that did not vary in training.
pub const DEGENERATE_FLOOR: f64 = 1e-2;

/// Fitted MinMax + PCA + rescale chain, immutable once fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessModel {
    pub feature_schema: String,
    pub d: usize,
    pub minmax_lo: Vec<f64>,
    pub minmax_hi: Vec<f64>,
    pub pca_mean: Vec<f64>,
    pub pca_components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub post_pca_lo: Vec<f64>,
    pub post_pca_hi: Vec<f64>,
    pub rank_deficient: bool,
}

impl PreprocessModel {
    pub fn fit(train: &[[f64; NUM_FEATURES]], d: usize) -> Result<Self> {
        let (lo, hi) = fit_minmax(train)?;
        let rows: Vec<Vec<f64>> = train.iter().map(|r| r.to_vec()).collect();
        let scaled = apply_minmax(&rows, &lo, &hi);
        let pca = fit_pca(&scaled, d)?;
        let scores: Vec<Vec<f64>> = scaled.iter().map(|r| pca.project(r)).collect();
        let mut post_lo = vec![f64::INFINITY; d];
        let mut post_hi = vec![f64::NEG_INFINITY; d];
        for s in &scores {
            for j in 0..d {
                post_lo[j] = post_lo[j].min(s[j]);
                post_hi[j] = post_hi[j].max(s[j]);
            }
        }
        Ok(PreprocessModel {
            feature_schema: FEATURE_SCHEMA.to_string(),
            d,
            minmax_lo: lo,
            minmax_hi: hi,
            pca_mean: pca.mean,
            pca_components: pca.components,
            explained_variance: pca.explained_variance,
            post_pca_lo: post_lo,
            post_pca_hi: post_hi,
            rank_deficient: pca.rank_deficient,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.feature_schema == FEATURE_SCHEMA
            && self.minmax_lo.len() == NUM_FEATURES
            && self.minmax_hi.len() == NUM_FEATURES
            && self.pca_mean.len() == NUM_FEATURES
            && self.pca_components.len() == self.d
            && self.pca_components.iter().all(|r| r.len() == NUM_FEATURES)
            && self.post_pca_lo.len() == self.d
            && self.post_pca_hi.len() == self.d
            && self.minmax_lo.iter().zip(&self.minmax_hi).all(|(l, h)| h >= l);
        if ok {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "preprocessing model does not match feature schema {FEATURE_SCHEMA} with d = {}",
                self.d
            )))
        }
    }

    pub fn pca(&self) -> Pca {
        Pca {
            mean: self.pca_mean.clone(),
            components: self.pca_components.clone(),
            explained_variance: self.explained_variance.clone(),
            rank_deficient: self.rank_deficient,
        }
    }

    /// Maps one raw feature row to `d` encoder inputs in [0, 1].
    pub fn transform(&self, row: &[f64; NUM_FEATURES]) -> Vec<f64> {
        let scaled: Vec<f64> = row
            .iter()
            .zip(self.minmax_lo.iter().zip(&self.minmax_hi))
            .map(|(&x, (&l, &h))| scale_value(x, l, h))
            .collect();
        let scores = self.pca().project(&scaled);
        scores
            .iter()
            .zip(self.post_pca_lo.iter().zip(&self.post_pca_hi))
            .map(|(&s, (&l, &h))| {
                if h - l > DEGENERATE_SPAN {
                    ((s - l) / (h - l)).clamp(0.0, 1.0)
                } else {
                    ((s - 0.5 * (l + h)).abs() / DEGENERATE_FLOOR).min(1.0)
                }
            })
            .collect()
    }

    pub fn transform_all(&self, rows: &[WindowFeatures]) -> Vec<Vec<f64>> {
        rows.iter().map(|w| self.transform(&w.values)).collect()
    }
}

/// Splits rows into `f` contiguous, near-equal parts; earlier parts take
/// the remainder.
pub fn partition_rounds<T: Clone>(rows: &[T], f: usize) -> Result<Vec<Vec<T>>> {
    if f == 0 {
        return Err(Error::Domain("number of rounds must be at least 1".into()));
    }
    if rows.len() < f {
        return Err(Error::Domain(format!(
            "cannot split {} rows into {f} rounds",
            rows.len()
        )));
    }
    let base = rows.len() / f;
    let extra = rows.len() % f;
    let mut out = Vec::with_capacity(f);
    let mut start = 0;
    for i in 0..f {
        let len = base + usize::from(i < extra);
        out.push(rows[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

/// Seeded shuffle used when pooling rows from several routers.
pub fn shuffle_rows<T>(rows: &mut [T], seed: u64) {
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
}

pub fn csv_header() -> String {
    let mut cols: Vec<&str> = FEATURE_NAMES.to_vec();
    cols.extend(["router", "window_start", "label"]);
    cols.join(",")
}

pub fn write_features<W: Write>(mut out: W, rows: &[WindowFeatures]) -> Result<()> {
    writeln!(out, "{}", csv_header())?;
    for r in rows {
        let vals: Vec<String> = r.values.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{},{},{},{}", vals.join(","), r.router, r.window_start, r.label.as_str())?;
    }
    Ok(())
}

pub fn read_features<R: BufRead>(input: R) -> Result<Vec<WindowFeatures>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != csv_header() {
        return Err(Error::Schema(format!(
            "feature file header does not match schema {FEATURE_SCHEMA}"
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("feature file line {}: {what}", i + 2));
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != NUM_FEATURES + 3 {
            return Err(bad("wrong column count"));
        }
        let mut values = [0.0; NUM_FEATURES];
        for (v, c) in values.iter_mut().zip(&cols) {
            let x: f64 = c.parse().map_err(|_| bad("bad number"))?;
            *v = x;
            if !x.is_finite() {
                return Err(bad("non-finite value"));
            }
        }
        out.push(WindowFeatures {
            router: cols[NUM_FEATURES].parse()?,
            window_start: cols[NUM_FEATURES + 1].parse().map_err(|_| bad("bad window"))?,
            values,
            label: cols[NUM_FEATURES + 2].parse()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(src: Node, hops: &[(Node, u64)], kind: TrafficType) -> PacketRecord {
        PacketRecord {
            packet_id: 0,
            session_id: "t".into(),
            src,
            intended_dst: Node::C,
            hops: hops.to_vec(),
            kind,
            label: Label::Normal,
        }
    }

    #[test]
    fn quartiles_use_inclusive_interpolation() {
        let d = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(quantile(&d, 0.25), 17.5);
        assert_eq!(quantile(&d, 0.5), 25.0);
        assert_eq!(quantile(&d, 0.75), 32.5);
    }

    #[test]
    fn uniform_entropy_over_four() {
        assert!((entropy(&[3.0, 3.0, 3.0, 3.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(entropy(&[0.0, 5.0]), 0.0);
    }

    #[test]
    fn empty_window_is_zero() {
        assert_eq!(window_values(&[]), [0.0; NUM_FEATURES]);
    }

    #[test]
    fn single_packet_window() {
        let p = packet(Node::E1, &[(Node::E1, 100), (Node::R1, 120), (Node::C, 150)], TrafficType::Ack);
        let v = window_values(&[&p]);
        assert_eq!(v[5], 0.0);
        assert_eq!(v[6], 0.0);
        assert_eq!(v[28], 1.0);
        assert_eq!(v[0], 50.0);
        assert_eq!(v[1], 20.0);
        assert_eq!(v[8], 1.0);
        assert_eq!(v[SRC_OFFSET], 1.0);
        assert_eq!(v[DST_OFFSET + 7], 1.0);
        assert_eq!(v[29], 2.0);
        assert_eq!(v[30], 0.0);
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(scale_value(2.0, 2.0, 6.0), 0.0);
        assert_eq!(scale_value(4.0, 2.0, 6.0), 0.5);
        assert_eq!(scale_value(6.0, 2.0, 6.0), 1.0);
        assert_eq!(scale_value(5.0, 5.0, 5.0), 0.0);
        assert_eq!(scale_value(9.0, 2.0, 6.0), 1.0);
        assert_eq!(scale_value(-1.0, 2.0, 6.0), 0.0);
    }

    #[test]
    fn partition_examples() {
        let rows: Vec<usize> = (0..7).collect();
        let parts = partition_rounds(&rows, 5).unwrap();
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 1, 1, 1]);
        assert_eq!(partition_rounds(&rows, 1).unwrap(), vec![rows.clone()]);
        assert!(partition_rounds(&rows, 8).is_err());
        assert!(partition_rounds(&rows, 0).is_err());
        let parts = partition_rounds(&(0..300).collect::<Vec<_>>(), 5).unwrap();
        assert!(parts.iter().all(|p| p.len() == 60));
    }

    #[test]
    fn pca_on_a_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, i as f64]).collect();
        let pca = fit_pca(&rows, 2).unwrap();
        assert!((pca.explained_variance[0] - 5.0).abs() < 1e-12);
        assert_eq!(pca.explained_variance[1], 0.0);
        assert!(pca.rank_deficient);
        let w = &pca.components[1];
        assert!(linalg::dot(w, &pca.components[0]).abs() < 1e-12);
        assert!((linalg::norm(w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_requires_more_rows_than_components() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(fit_pca(&rows, 2).is_err());
    }

    #[test]
    fn header_has_all_columns() {
        assert_eq!(csv_header().split(',').count(), NUM_FEATURES + 3);
    }
}
