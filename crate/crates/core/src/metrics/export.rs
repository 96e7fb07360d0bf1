use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    best_f1_threshold, evaluate_at, pr_curve_and_auc, roc_curve, EvalReport, MetricError,
    ScoredSet,
};
use crate::numfmt::fmt_sig;

/// Threshold used for the fixed-operating-point columns.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Column order of `metrics.csv`: the five headline indicators first, then
/// the thresholds and best-F1 operating point.
pub const METRICS_HEADER: [&str; 11] = [
    "model",
    "roc_auc",
    "pr_auc",
    "f1",
    "precision",
    "recall",
    "threshold",
    "best_threshold",
    "best_f1",
    "best_precision",
    "best_recall",
];

/// One `metrics.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    /// Metrics at [`DEFAULT_THRESHOLD`].
    pub fixed: EvalReport,
    /// Metrics at the best-F1 threshold.
    pub best: EvalReport,
}

impl MetricsRow {
    pub fn from_scores(model: &str, s: &ScoredSet) -> Result<Self, MetricError> {
        Ok(Self {
            model: model.to_string(),
            fixed: evaluate_at(s, DEFAULT_THRESHOLD)?,
            best: best_f1_threshold(s)?.1,
        })
    }

    pub fn values(&self) -> [f64; 10] {
        [
            self.fixed.roc_auc,
            self.fixed.pr_auc,
            self.fixed.f1,
            self.fixed.precision,
            self.fixed.recall,
            self.fixed.threshold,
            self.best.threshold,
            self.best.f1,
            self.best.precision,
            self.best.recall,
        ]
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> MetricError + '_ {
    move |source| MetricError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, MetricError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Writes `metrics.csv` rows in the given order, six decimals per value.
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), MetricError> {
    let raw: Vec<(String, Vec<f64>)> =
        rows.iter().map(|r| (r.model.clone(), r.values().to_vec())).collect();
    write_metrics_rows(path, &raw)
}

/// Writes already-flattened `(model, values)` rows under [`METRICS_HEADER`].
pub fn write_metrics_rows(path: &Path, rows: &[(String, Vec<f64>)]) -> Result<(), MetricError> {
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "{}", METRICS_HEADER.join(",")).map_err(&err)?;
    for (model, values) in rows {
        if values.len() != METRICS_HEADER.len() - 1 {
            return Err(MetricError::Invalid(format!(
                "row '{model}' has {} values, expected {}",
                values.len(),
                METRICS_HEADER.len() - 1
            )));
        }
        let vals: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{model},{}", vals.join(",")).map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Reads back `(model, values)` pairs from a `metrics.csv`.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>, MetricError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER.join(",").as_str()) {
        return Err(MetricError::Invalid(format!("{}: unexpected header", path.display())));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut parts = l.split(',');
            let model = parts.next().unwrap_or_default().to_string();
            let vals = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MetricError::Invalid(format!("{}: {e}", path.display())))?;
            Ok((model, vals))
        })
        .collect()
}

pub fn write_roc_csv(path: &Path, s: &ScoredSet) -> Result<(), MetricError> {
    let curve = roc_curve(s)?;
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "threshold,fpr,tpr").map_err(&err)?;
    for p in curve {
        writeln!(
            w,
            "{},{},{}",
            fmt_sig(p.threshold, 9),
            fmt_sig(p.fpr, 9),
            fmt_sig(p.tpr, 9)
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)
}

pub fn write_pr_csv(path: &Path, s: &ScoredSet) -> Result<(), MetricError> {
    let (curve, _) = pr_curve_and_auc(s)?;
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "threshold,recall,precision").map_err(&err)?;
    for p in curve {
        writeln!(
            w,
            "{},{},{}",
            fmt_sig(p.threshold, 9),
            fmt_sig(p.recall, 9),
            fmt_sig(p.precision, 9)
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Scatter rows `jitter_x,score,label`; the jitter is uniform in `[0, 1)`
/// from a generator seeded with `seed`.
pub fn write_scatter_csv(path: &Path, s: &ScoredSet, seed: u64) -> Result<(), MetricError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "jitter_x,score,label").map_err(&err)?;
    for (&score, &label) in s.scores().iter().zip(s.labels()) {
        let x: f64 = rng.random();
        writeln!(w, "{},{},{}", fmt_sig(x, 9), fmt_sig(score, 9), label).map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Scores of one model ready for export.
#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    pub model: String,
    pub row: MetricsRow,
    /// The set the curves and scatter are drawn from.
    pub curve_set: ScoredSet,
}

/// Writes `metrics.csv` plus `roc_<model>.csv`, `pr_<model>.csv` and
/// `scatter_<model>.csv` for every model into `dir`.
pub fn export_reports(dir: &Path, models: &[ModelEvaluation], seed: u64) -> Result<(), MetricError> {
    if models.is_empty() {
        return Err(MetricError::Invalid("no reports to export".into()));
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<MetricsRow> = models.iter().map(|m| m.row.clone()).collect();
    write_metrics_csv(&dir.join("metrics.csv"), &rows)?;
    for m in models {
        write_roc_csv(&dir.join(format!("roc_{}.csv", m.model)), &m.curve_set)?;
        write_pr_csv(&dir.join(format!("pr_{}.csv", m.model)), &m.curve_set)?;
        write_scatter_csv(&dir.join(format!("scatter_{}.csv", m.model)), &m.curve_set, seed)?;
    }
    Ok(())
}
