//! Embedding-space diversity metrics over generated implementations.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_named, stream};
use crate::Scalar;

pub const DEFAULT_EMBEDDING_DIM: usize = 256;
pub const DEFAULT_NOVELTY_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,
    #[error("vectors have different lengths ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("novelty needs at least {needed} other vectors, got {got}")]
    TooFewOthers { needed: usize, got: usize },
    #[error("silhouette needs at least two members in the own cluster and one in the other")]
    DegenerateClusters,
}

/// `(1 − cos(v, u)) / 2`, in `[0, 1]`.
pub fn cosine_distance<S: Scalar>(v: &[S], u: &[S]) -> Result<S, AnalyticsError> {
    if v.len() != u.len() {
        return Err(AnalyticsError::DimensionMismatch(v.len(), u.len()));
    }
    let dot: S = v.iter().zip(u).map(|(&a, &b)| a * b).sum();
    let vv: S = v.iter().map(|&a| a * a).sum();
    let uu: S = u.iter().map(|&a| a * a).sum();
    if vv == S::zero() || uu == S::zero() {
        return Err(AnalyticsError::ZeroVector);
    }
    // sqrt(vv * uu) rather than |v| |u| so that d(v, v) is exactly zero.
    let cos = (dot / (vv * uu).sqrt()).max(-S::one()).min(S::one());
    Ok((S::one() - cos) / S::lit(2.0))
}

fn distances<S: Scalar, V: AsRef<[S]>>(v: &[S], others: &[V]) -> Result<Vec<S>, AnalyticsError> {
    others.iter().map(|u| cosine_distance(v, u.as_ref())).collect()
}

fn mean<S: Scalar>(xs: &[S]) -> S {
    xs.iter().copied().sum::<S>() / S::from_usize_lossy(xs.len())
}

/// Mean distance from `v` to every vector in `others`.
pub fn mean_distance<S: Scalar, V: AsRef<[S]>>(v: &[S], others: &[V]) -> Result<S, AnalyticsError> {
    if others.is_empty() {
        return Err(AnalyticsError::TooFewOthers { needed: 1, got: 0 });
    }
    Ok(mean(&distances(v, others)?))
}

/// Mean of the `k` smallest distances from `v` to `others`.
pub fn novelty<S: Scalar, V: AsRef<[S]>>(v: &[S], others: &[V], k: usize) -> Result<S, AnalyticsError> {
    if k == 0 || others.len() < k {
        return Err(AnalyticsError::TooFewOthers { needed: k.max(1), got: others.len() });
    }
    let mut d = distances(v, others)?;
    d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(mean(&d[..k]))
}

/// Normalized silhouette `(s + 1) / 2` of `own[index]`, with the member
/// itself excluded from the intra-cluster mean.
pub fn silhouette<S: Scalar, V: AsRef<[S]>>(own: &[V], index: usize, other: &[V]) -> Result<S, AnalyticsError> {
    if own.len() < 2 || other.is_empty() || index >= own.len() {
        return Err(AnalyticsError::DegenerateClusters);
    }
    let v = own[index].as_ref();
    let rest: Vec<&[S]> = own.iter().enumerate().filter(|(i, _)| *i != index).map(|(_, u)| u.as_ref()).collect();
    let a = mean_distance(v, &rest)?;
    let b = mean_distance(v, other)?;
    let denom = a.max(b);
    let s = if denom > S::zero() { (b - a) / denom } else { S::zero() };
    Ok((s + S::one()) / S::lit(2.0))
}

/// Deterministic stand-in for a code embedding model: every token of the
/// source is hashed to a seeded random direction and the directions are
/// summed, so sources sharing tokens land close together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for MockEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_EMBEDDING_DIM, seed: 0 }
    }
}

impl MockEmbedder {
    pub fn embed(&self, source: &str) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim.max(1)];
        let mut add = |tok: &str| {
            let mut rng = stream(derive_named(self.seed, tok));
            for x in acc.iter_mut() {
                *x += rng.random::<f64>() * 2.0 - 1.0;
            }
        };
        let mut any = false;
        for tok in tokens(source) {
            add(tok);
            any = true;
        }
        if !any {
            add("");
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        acc.iter().map(|x| x / norm).collect()
    }
}

fn tokens(source: &str) -> impl Iterator<Item = &str> {
    let mut out = Vec::new();
    let bytes = source.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                i += 1;
            }
            out.push(&source[start..i]);
        } else {
            let len = source[i..].chars().next().map_or(1, char::len_utf8);
            out.push(&source[i..i + len]);
            i += len;
        }
    }
    out.into_iter()
}

/// One generated implementation as seen by the report.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord<L> {
    pub slot: String,
    pub operator: L,
    /// Improvement (percent) over the baseline current when the candidate
    /// was evaluated; `None` for failed candidates.
    pub improvement: Option<f64>,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorReport<L> {
    pub operator: L,
    pub candidates: usize,
    /// Percent of candidates that beat the then-current baseline.
    pub success_rate: f64,
    pub novelty_mean: Option<f64>,
    pub novelty_std: Option<f64>,
    pub silhouette_mean: Option<f64>,
    pub silhouette_std: Option<f64>,
    pub notices: Vec<String>,
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (Some(m), Some(var.sqrt()))
}

/// Per-operator success, novelty and silhouette over one run. Novelty and
/// silhouette compare each candidate against candidates of the other
/// operators on the same slot, pooling both players; `k` is clamped to the
/// number of such candidates.
pub fn operator_report<L: Ord + Clone>(records: &[CandidateRecord<L>], k: usize) -> Vec<OperatorReport<L>> {
    let mut by_op: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_op.entry(r.operator.clone()).or_default().push(i);
    }
    let mut reports = Vec::new();
    for (op, idxs) in by_op {
        let mut notices = Vec::new();
        let successes = idxs.iter().filter(|&&i| records[i].improvement.is_some_and(|x| x > 0.0)).count();
        let mut nov = Vec::new();
        let mut sil = Vec::new();
        let mut nov_skipped = 0;
        let mut sil_skipped = 0;
        for &i in &idxs {
            let r = &records[i];
            let others: Vec<&[f64]> = records
                .iter()
                .filter(|o| o.slot == r.slot && o.operator != op)
                .map(|o| o.embedding.as_slice())
                .collect();
            let own: Vec<(usize, &[f64])> = records
                .iter()
                .enumerate()
                .filter(|(_, o)| o.slot == r.slot && o.operator == op)
                .map(|(j, o)| (j, o.embedding.as_slice()))
                .collect();
            match novelty(&r.embedding, &others, k.min(others.len())) {
                Ok(x) => nov.push(x),
                Err(_) => nov_skipped += 1,
            }
            let pos = own.iter().position(|(j, _)| *j == i).unwrap_or(0);
            let own_vecs: Vec<&[f64]> = own.iter().map(|(_, v)| *v).collect();
            match silhouette(&own_vecs, pos, &others) {
                Ok(x) => sil.push(x),
                Err(_) => sil_skipped += 1,
            }
        }
        if nov.is_empty() {
            notices.push("novelty undefined: no candidates from other operators".to_string());
        } else if nov_skipped > 0 {
            notices.push(format!("novelty skipped for {nov_skipped} candidates"));
        }
        if sil.is_empty() {
            notices.push("silhouette undefined: degenerate clusters".to_string());
        } else if sil_skipped > 0 {
            notices.push(format!("silhouette skipped for {sil_skipped} candidates"));
        }
        let (novelty_mean, novelty_std) = mean_std(&nov);
        let (silhouette_mean, silhouette_std) = mean_std(&sil);
        reports.push(OperatorReport {
            operator: op,
            candidates: idxs.len(),
            success_rate: 100.0 * successes as f64 / idxs.len() as f64,
            novelty_mean,
            novelty_std,
            silhouette_mean,
            silhouette_std,
            notices,
        });
    }
    reports
}

/// Mean and deviation of one metric across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcrossRuns<L> {
    pub operator: L,
    pub runs: usize,
    pub success_rate: (f64, f64),
    pub novelty: Option<(f64, f64)>,
    pub silhouette: Option<(f64, f64)>,
}

/// Aggregates per-run reports; metric means are averaged over the runs
/// that define them.
pub fn aggregate_runs<L: Ord + Clone>(runs: &[Vec<OperatorReport<L>>]) -> Vec<AcrossRuns<L>> {
    let mut by_op: BTreeMap<L, Vec<&OperatorReport<L>>> = BTreeMap::new();
    for run in runs {
        for r in run {
            by_op.entry(r.operator.clone()).or_default().push(r);
        }
    }
    let pair = |xs: Vec<f64>| match mean_std(&xs) {
        (Some(m), Some(s)) => Some((m, s)),
        _ => None,
    };
    by_op
        .into_iter()
        .map(|(operator, rs)| AcrossRuns {
            operator,
            runs: rs.len(),
            success_rate: pair(rs.iter().map(|r| r.success_rate).collect()).unwrap_or((0.0, 0.0)),
            novelty: pair(rs.iter().filter_map(|r| r.novelty_mean).collect()),
            silhouette: pair(rs.iter().filter_map(|r| r.silhouette_mean).collect()),
        })
        .collect()
}
