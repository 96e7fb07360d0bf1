//! Ranking and classification metrics over scored binary labels.

mod export;

pub use export::{
    export_reports, read_metrics_csv, write_metrics_csv, write_metrics_rows, write_pr_csv, write_roc_csv,
    write_scatter_csv, MetricsRow, ModelEvaluation, DEFAULT_THRESHOLD, METRICS_HEADER,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{0} is undefined for this label set")]
    Undefined(&'static str),
    #[error("invalid scored set: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Scores paired with 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self, MetricError> {
        if scores.len() != labels.len() {
            return Err(MetricError::Invalid(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.is_empty() {
            return Err(MetricError::Invalid("no samples".into()));
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(MetricError::Invalid(format!("label at {i} is not 0 or 1")));
        }
        if let Some(i) = scores.iter().position(|s| s.is_nan()) {
            return Err(MetricError::Invalid(format!("score at {i} is NaN")));
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    /// Tie groups in descending score order: (score, positives, negatives).
    fn descending_groups(&self) -> Vec<(f64, usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        let mut groups: Vec<(f64, usize, usize)> = Vec::new();
        for i in order {
            let s = self.scores[i];
            let pos = usize::from(self.labels[i] == 1);
            match groups.last_mut() {
                Some(g) if g.0 == s => {
                    g.1 += pos;
                    g.2 += 1 - pos;
                }
                _ => groups.push((s, pos, 1 - pos)),
            }
        }
        groups
    }
}

/// Confusion counts at a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// 0 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2PR/(P+R)`, evaluated as `2TP/(2TP+FP+FN)` so that equal ratios
    /// compare equal.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn roc_auc(s: &ScoredSet) -> Result<f64, MetricError> {
    let (p, n) = (s.positives(), s.negatives());
    if p == 0 || n == 0 {
        return Err(MetricError::Undefined("ROC-AUC"));
    }
    // ascending walk: each positive beats every negative strictly below it
    let mut negatives_below = 0usize;
    let mut wins = 0.0;
    for &(_, pos, neg) in s.descending_groups().iter().rev() {
        wins += pos as f64 * (negatives_below as f64 + 0.5 * neg as f64);
        negatives_below += neg;
    }
    Ok(wins / (p as f64 * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points from (0, 0) at threshold `+inf` through every unique score in
/// descending order.
pub fn roc_curve(s: &ScoredSet) -> Result<Vec<RocPoint>, MetricError> {
    let (p, n) = (s.positives(), s.negatives());
    if p == 0 || n == 0 {
        return Err(MetricError::Undefined("ROC curve"));
    }
    let mut out = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0, 0);
    for (score, pos, neg) in s.descending_groups() {
        tp += pos;
        fp += neg;
        out.push(RocPoint {
            threshold: score,
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
        });
    }
    Ok(out)
}

/// Trapezoidal area under a ROC curve.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Precision–recall points over descending unique thresholds, and the
/// average precision `Σ (Rᵢ − Rᵢ₋₁)·Pᵢ` with `R₀ = 0`.
pub fn pr_curve_and_auc(s: &ScoredSet) -> Result<(Vec<PrPoint>, f64), MetricError> {
    let p = s.positives();
    if p == 0 {
        return Err(MetricError::Undefined("PR-AUC"));
    }
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (score, pos, neg) in s.descending_groups() {
        tp += pos;
        fp += neg;
        let recall = tp as f64 / p as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint {
            threshold: score,
            recall,
            precision,
        });
    }
    Ok((points, ap))
}

/// Predict positive iff `score >= threshold`.
pub fn confusion_at(s: &ScoredSet, threshold: f64) -> Counts {
    let mut c = Counts::default();
    for (&score, &label) in s.scores.iter().zip(&s.labels) {
        match (score >= threshold, label == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// Table-style summary of one model at one operating threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
    pub counts: Counts,
}

/// Full report at a fixed threshold.
pub fn evaluate_at(s: &ScoredSet, threshold: f64) -> Result<EvalReport, MetricError> {
    let roc = roc_auc(s)?;
    let (_, ap) = pr_curve_and_auc(s)?;
    let counts = confusion_at(s, threshold);
    Ok(EvalReport {
        roc_auc: roc,
        pr_auc: ap,
        f1: counts.f1(),
        precision: counts.precision(),
        recall: counts.recall(),
        threshold,
        counts,
    })
}

/// Scans each unique score as a threshold and keeps the F1 maximiser,
/// preferring the lowest threshold among ties.
pub fn best_f1_threshold(s: &ScoredSet) -> Result<(f64, EvalReport), MetricError> {
    let roc = roc_auc(s)?;
    let (_, ap) = pr_curve_and_auc(s)?;
    let (p, n) = (s.positives(), s.negatives());
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best: Option<(f64, Counts)> = None;
    for (score, pos, neg) in s.descending_groups() {
        tp += pos;
        fp += neg;
        let c = Counts {
            tp,
            fp,
            tn: n - fp,
            fn_: p - tp,
        };
        if best.is_none_or(|(_, b)| c.f1() >= b.f1()) {
            best = Some((score, c));
        }
    }
    let (threshold, counts) = best.expect("non-empty scored set");
    Ok((
        threshold,
        EvalReport {
            roc_auc: roc,
            pr_auc: ap,
            f1: counts.f1(),
            precision: counts.precision(),
            recall: counts.recall(),
            threshold,
            counts,
        },
    ))
}
