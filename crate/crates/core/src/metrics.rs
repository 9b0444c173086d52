//! Confusion matrices, per-class precision/recall/F1, and inference latency.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ModelWeights, Network};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// K×K counts; rows are true classes, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self { k, counts: vec![0; k * k] }
    }

    /// Builds a matrix from row-major counts.
    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != k * k {
            return Err(Error::dim("counts", k * k, counts.len(), "K×K confusion matrix"));
        }
        Ok(Self { k, counts })
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        if truth >= self.k || predicted >= self.k {
            return Err(Error::Range(format!("label pair ({truth}, {predicted}) outside 0..{}", self.k)));
        }
        self.counts[truth * self.k + predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    /// Samples whose true class is `class`.
    pub fn row_sum(&self, class: usize) -> u64 {
        (0..self.k).map(|j| self.get(class, j)).sum()
    }

    /// Samples predicted as `class`.
    pub fn col_sum(&self, class: usize) -> u64 {
        (0..self.k).map(|i| self.get(i, class)).sum()
    }

    /// `trace / total`, 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total()).0
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::dim("labels", truth.len(), predicted.len(), "predictions per true label"));
    }
    let mut cm = ConfusionMatrix::new(k);
    for (&t, &p) in truth.iter().zip(predicted) {
        cm.add(t, p)?;
    }
    Ok(cm)
}

/// `num / den`, or `(0, true)` when the denominator is 0.
fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when the metric was 0/0 and reported as 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let classes = (0..cm.classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let (precision, precision_undefined) = ratio(tp, cm.col_sum(c));
            let (recall, recall_undefined) = ratio(tp, cm.row_sum(c));
            let f1_undefined = precision + recall == 0.0;
            let f1 = if f1_undefined { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: cm.row_sum(c),
                precision_undefined,
                recall_undefined,
                f1_undefined,
            }
        })
        .collect();
    MetricsReport {
        classes,
        accuracy: cm.accuracy(),
    }
}

/// Pooled TP over pooled TP + FN across all classes.
pub fn micro_recall(cm: &ConfusionMatrix) -> f64 {
    let tp: u64 = cm.trace();
    let fn_: u64 = (0..cm.classes()).map(|c| cm.row_sum(c) - cm.get(c, c)).sum();
    ratio(tp, tp + fn_).0
}

/// Pooled TP over pooled TP + FP across all classes.
pub fn micro_precision(cm: &ConfusionMatrix) -> f64 {
    let tp: u64 = cm.trace();
    let fp: u64 = (0..cm.classes()).map(|c| cm.col_sum(c) - cm.get(c, c)).sum();
    ratio(tp, tp + fp).0
}

pub const METRICS_HEADER: &str = "class,precision,recall,f1,support";

/// One row per class plus a final `__accuracy__` row, values to 4 decimals.
pub fn metrics_csv(report: &MetricsReport, labels: &[String]) -> Result<String> {
    if labels.len() != report.classes.len() {
        return Err(Error::dim("labels", report.classes.len(), labels.len(), "one label per class"));
    }
    let mut out = format!("{METRICS_HEADER}\n");
    for (label, m) in labels.iter().zip(&report.classes) {
        writeln!(out, "{label},{:.4},{:.4},{:.4},{}", m.precision, m.recall, m.f1, m.support).unwrap();
    }
    writeln!(out, "__accuracy__,{:.4},,,", report.accuracy).unwrap();
    Ok(out)
}

/// Timing summary in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyReport {
    pub count: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl LatencyReport {
    /// Summarizes samples; percentiles use the nearest-rank rule
    /// (`sorted[⌈p·n⌉ − 1]`).
    pub fn from_samples(samples_ms: &[f64]) -> Result<Self> {
        if samples_ms.is_empty() {
            return Err(Error::Range("latency report needs at least one sample".into()));
        }
        if samples_ms.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range("latency samples must be finite".into()));
        }
        let mut sorted = samples_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let rank = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
        Ok(Self {
            count: n,
            mean_ms: sorted.iter().sum::<f64>() / n as f64,
            p50_ms: rank(0.5),
            p95_ms: rank(0.95),
            min_ms: sorted[0],
            max_ms: sorted[n - 1],
        })
    }
}

/// Times `iterations` inference forwards on a fixed input after `warmup`
/// untimed ones. Runs on the current rayon pool; install a one-thread pool
/// for single-threaded figures.
pub fn bench_inference<T: Scalar>(
    spec: &ModelSpec,
    weights: &ModelWeights<T>,
    input_shape: Shape,
    iterations: usize,
    warmup: usize,
) -> Result<LatencyReport> {
    if iterations == 0 {
        return Err(Error::Range("iterations must be at least 1".into()));
    }
    let net = Network::new(spec)?;
    let len = input_shape.n * input_shape.c * input_shape.h * input_shape.w;
    let data = (0..len).map(|i| T::lit(((i % 17) as f64 - 8.0) / 8.0)).collect();
    let input = Tensor::from_vec(input_shape, data)?;
    for _ in 0..warmup {
        net.forward(weights, &input)?;
    }
    let mut samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let start = Instant::now();
        let out = net.forward(weights, &input)?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(out);
    }
    LatencyReport::from_samples(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(cm.trace(), 3);
        assert_eq!(cm.total(), 3);
        let cm = confusion(&[1], &[2], 3).unwrap();
        assert_eq!(cm.get(1, 2), 1);
        assert_eq!(cm.total(), 1);
        assert_eq!(confusion(&[], &[], 2).unwrap(), ConfusionMatrix::new(2));
        assert!(matches!(confusion(&[3], &[0], 3), Err(Error::Range(_))));
        assert!(confusion(&[0, 1], &[0], 3).is_err());
    }

    #[test]
    fn undefined_metrics_are_flagged_zero() {
        let cm = confusion(&[0, 0], &[0, 0], 2).unwrap();
        let r = per_class_metrics(&cm);
        let absent = r.classes[1];
        assert_eq!((absent.precision, absent.recall, absent.f1), (0.0, 0.0, 0.0));
        assert!(absent.precision_undefined && absent.recall_undefined && absent.f1_undefined);
        assert!(!r.classes[0].precision_undefined);
    }

    #[test]
    fn f1_of_equal_halves() {
        // one class with TP 1, FP 1, FN 1
        let cm = ConfusionMatrix::from_counts(2, vec![1, 1, 1, 0]).unwrap();
        let m = per_class_metrics(&cm).classes[0];
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn csv_layout() {
        let cm = ConfusionMatrix::from_counts(2, vec![2, 1, 0, 1]).unwrap();
        let csv = metrics_csv(&per_class_metrics(&cm), &["a".into(), "b".into()]).unwrap();
        assert_eq!(csv, "class,precision,recall,f1,support\na,1.0000,0.6667,0.8000,3\nb,0.5000,1.0000,0.6667,1\n__accuracy__,0.7500,,,\n");
    }

    #[test]
    fn latency_percentiles() {
        let r = LatencyReport::from_samples(&[5.0]).unwrap();
        assert_eq!((r.mean_ms, r.p50_ms, r.p95_ms, r.min_ms, r.max_ms), (5.0, 5.0, 5.0, 5.0, 5.0));
        let samples: Vec<f64> = (1..=20).rev().map(f64::from).collect();
        let r = LatencyReport::from_samples(&samples).unwrap();
        assert_eq!((r.p50_ms, r.p95_ms, r.min_ms, r.max_ms), (10.0, 19.0, 1.0, 20.0));
        assert!(LatencyReport::from_samples(&[]).is_err());
    }
}
