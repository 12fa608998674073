//! Segmentation scoring of per-point genus predictions: per-class IoU and
//! accuracy, mIoU, mAcc, OA.
//!
//! Scenes accumulate into one confusion matrix (micro-aggregation, the
//! standard in 3D segmentation benchmarks); a per-scene macro mode is
//! available behind [`Aggregation::MacroPerScene`]. Per-class means run over
//! the classes present in the ground truth; classes absent from both ground
//! truth and prediction are recorded as absent and excluded.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("label lists differ in length ({gt} ground truth vs {pred} predictions)")]
    LengthMismatch { gt: usize, pred: usize },
    #[error("row {row}: label {label} out of range (K = {k})")]
    LabelOutOfRange { row: usize, label: u32, k: usize },
    #[error("no scenes to aggregate")]
    NoScenes,
}

/// K x K counts; rows are ground truth, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.k + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Tallies a scene into the matrix.
    pub fn accumulate(&mut self, gt: &[u32], pred: &[u32]) -> Result<(), MetricsError> {
        if gt.len() != pred.len() {
            return Err(MetricsError::LengthMismatch {
                gt: gt.len(),
                pred: pred.len(),
            });
        }
        for (row, (&g, &p)) in gt.iter().zip(pred).enumerate() {
            if g as usize >= self.k {
                return Err(MetricsError::LabelOutOfRange {
                    row,
                    label: g,
                    k: self.k,
                });
            }
            if p as usize >= self.k {
                return Err(MetricsError::LabelOutOfRange {
                    row,
                    label: p,
                    k: self.k,
                });
            }
            self.counts[g as usize * self.k + p as usize] += 1;
        }
        Ok(())
    }

    /// Adds another matrix of the same size (micro-aggregation across
    /// scenes).
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.k, other.k, "confusion matrices must agree on K");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    fn row_sum(&self, g: usize) -> u64 {
        (0..self.k).map(|p| self.count(g, p)).sum()
    }

    fn col_sum(&self, p: usize) -> u64 {
        (0..self.k).map(|g| self.count(g, p)).sum()
    }
}

/// Builds a confusion matrix from one scene's labels.
pub fn accumulate(gt: &[u32], pred: &[u32], k: usize) -> Result<ConfusionMatrix, MetricsError> {
    let mut cm = ConfusionMatrix::new(k);
    cm.accumulate(gt, pred)?;
    Ok(cm)
}

/// Per-class result; `iou`/`acc` are `None` when the class is absent from
/// both ground truth and prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub in_ground_truth: bool,
    pub in_prediction: bool,
    pub iou: Option<f64>,
    pub acc: Option<f64>,
}

/// Percentages in [0, 100]. `miou`/`macc` are means over the classes present
/// in the ground truth; `oa` is trace / total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub miou: f64,
    pub macc: f64,
    pub oa: f64,
}

/// Computes per-class IoU (`tp / (tp + fp + fn)`) and accuracy/recall
/// (`tp / (tp + fn)`) plus the aggregates.
pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let k = cm.classes();
    let mut per_class = Vec::with_capacity(k);
    let mut iou_sum = 0.0;
    let mut acc_sum = 0.0;
    let mut gt_classes = 0usize;
    for c in 0..k {
        let tp = cm.count(c, c);
        let row = cm.row_sum(c);
        let col = cm.col_sum(c);
        let in_gt = row > 0;
        let in_pred = col > 0;
        let union = row + col - tp;
        let iou = if union > 0 {
            Some(100.0 * tp as f64 / union as f64)
        } else {
            None
        };
        let acc = if in_gt {
            Some(100.0 * tp as f64 / row as f64)
        } else {
            None
        };
        if in_gt {
            gt_classes += 1;
            iou_sum += iou.unwrap_or(0.0);
            acc_sum += acc.unwrap_or(0.0);
        }
        per_class.push(ClassMetrics {
            class: c,
            in_ground_truth: in_gt,
            in_prediction: in_pred,
            iou,
            acc,
        });
    }
    let total = cm.total();
    let trace: u64 = (0..k).map(|c| cm.count(c, c)).sum();
    MetricsReport {
        per_class,
        miou: if gt_classes > 0 {
            iou_sum / gt_classes as f64
        } else {
            0.0
        },
        macc: if gt_classes > 0 {
            acc_sum / gt_classes as f64
        } else {
            0.0
        },
        oa: if total > 0 {
            100.0 * trace as f64 / total as f64
        } else {
            0.0
        },
    }
}

/// How multi-scene results combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Sum confusion matrices, then compute metrics once.
    #[default]
    Micro,
    /// Compute metrics per scene, then average the summary numbers.
    MacroPerScene,
}

/// Aggregates per-scene confusion matrices into one report.
pub fn aggregate(
    scenes: &[ConfusionMatrix],
    mode: Aggregation,
) -> Result<MetricsReport, MetricsError> {
    if scenes.is_empty() {
        return Err(MetricsError::NoScenes);
    }
    match mode {
        Aggregation::Micro => {
            let mut sum = ConfusionMatrix::new(scenes[0].classes());
            for cm in scenes {
                sum.merge(cm);
            }
            Ok(compute_metrics(&sum))
        }
        Aggregation::MacroPerScene => {
            let reports: Vec<MetricsReport> = scenes.iter().map(compute_metrics).collect();
            let n = reports.len() as f64;
            // Summary numbers average per scene; the per-class table comes
            // from the summed matrix so it stays interpretable.
            let mut sum = ConfusionMatrix::new(scenes[0].classes());
            for cm in scenes {
                sum.merge(cm);
            }
            let table = compute_metrics(&sum);
            Ok(MetricsReport {
                per_class: table.per_class,
                miou: reports.iter().map(|r| r.miou).sum::<f64>() / n,
                macc: reports.iter().map(|r| r.macc).sum::<f64>() / n,
                oa: reports.iter().map(|r| r.oa).sum::<f64>() / n,
            })
        }
    }
}

/// Plain-text table: per-genus `Genus | IoU | Acc` rows, then the
/// `mIoU / mAcc / OA` summary.
pub fn render_text(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str("Genus  IoU      Acc\n");
    for c in &report.per_class {
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:7.2}"),
            None => "  --   ".to_string(),
        };
        out.push_str(&format!(
            "{:<5}{}  {}{}\n",
            c.class,
            fmt(c.iou),
            fmt(c.acc),
            if c.in_ground_truth { "" } else { "  (absent)" }
        ));
    }
    out.push_str(&format!(
        "mIoU {:.2}  mAcc {:.2}  OA {:.2}\n",
        report.miou, report.macc, report.oa
    ));
    out
}

/// CSV rows: `genus,iou,acc` per class plus a trailing summary row.
pub fn render_csv(report: &MetricsReport) -> String {
    let mut out = String::from("genus,iou,acc\n");
    for c in &report.per_class {
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => String::new(),
        };
        out.push_str(&format!("{},{},{}\n", c.class, fmt(c.iou), fmt(c.acc)));
    }
    out.push_str(&format!(
        "summary,miou={:.4},macc={:.4},oa={:.4}\n",
        report.miou, report.macc, report.oa
    ));
    out
}
