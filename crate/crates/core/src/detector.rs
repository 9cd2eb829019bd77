//! Fidelity threshold, window classification and detection metrics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nettsim::Label;

/// Validation fidelity statistics and the derived cut-off τ = μ − 4σ,
/// with σ the population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdModel {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub num_validation_samples: usize,
}

pub const SIGMA_MULTIPLIER: f64 = 4.0;

pub fn fit_threshold(fidelities: &[f64]) -> Result<ThresholdModel> {
    if fidelities.is_empty() {
        return Err(Error::Domain("threshold needs at least one validation fidelity".into()));
    }
    if let Some(bad) = fidelities.iter().find(|f| !f.is_finite()) {
        return Err(Error::Domain(format!("non-finite validation fidelity {bad}")));
    }
    let n = fidelities.len() as f64;
    let mu = fidelities.iter().sum::<f64>() / n;
    let sigma = (fidelities.iter().map(|f| (f - mu) * (f - mu)).sum::<f64>() / n).sqrt();
    Ok(ThresholdModel {
        mu,
        sigma,
        tau: mu - SIGMA_MULTIPLIER * sigma,
        num_validation_samples: fidelities.len(),
    })
}

impl ThresholdModel {
    /// Attack iff the fidelity is strictly below τ.
    pub fn classify_one(&self, fidelity: f64) -> Label {
        if fidelity < self.tau {
            Label::Attack
        } else {
            Label::Normal
        }
    }
}

pub fn classify(fidelities: &[f64], model: &ThresholdModel) -> Vec<Label> {
    fidelities.iter().map(|&f| model.classify_one(f)).collect()
}

/// Counts with attack as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_labels(predicted: &[Label], truth: &[Label]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::Domain(format!(
                "{} predictions for {} labels",
                predicted.len(),
                truth.len()
            )));
        }
        let mut c = Confusion::default();
        for (p, t) in predicted.iter().zip(truth) {
            match (p.is_attack(), t.is_attack()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Weighted,
    Macro,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F1 averaged over normal and attack.
/// Undefined ratios count as 0.
pub fn metrics_from_confusion(c: &Confusion, averaging: Averaging) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Domain("metrics over zero windows".into()));
    }
    // (true positives, predicted, support) for attack then normal
    let classes = [(c.tp, c.tp + c.fp, c.tp + c.fn_), (c.tn, c.tn + c.fn_, c.tn + c.fp)];
    let mut out = Metrics {
        accuracy: ratio(c.tp + c.tn, total),
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for (hit, predicted, support) in classes {
        let p = ratio(hit, predicted);
        let r = ratio(hit, support);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let w = match averaging {
            Averaging::Weighted => ratio(support, total),
            Averaging::Macro => 0.5,
        };
        out.precision += w * p;
        out.recall += w * r;
        out.f1 += w * f;
    }
    Ok(out)
}

pub fn compute_metrics(predicted: &[Label], truth: &[Label]) -> Result<Metrics> {
    metrics_from_confusion(&Confusion::from_labels(predicted, truth)?, Averaging::Weighted)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowResult {
    pub session: String,
    pub window_start: usize,
    pub fidelity: f64,
    pub predicted: Label,
    pub truth: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionReport {
    pub router: String,
    pub method: String,
    pub per_window: Vec<WindowResult>,
    pub confusion: Confusion,
    pub metrics: Metrics,
}

impl DetectionReport {
    /// Classifies scored windows of one router against `threshold`. The
    /// `predicted` field of the input is overwritten.
    pub fn build(
        router: &str,
        method: &str,
        mut per_window: Vec<WindowResult>,
        threshold: &ThresholdModel,
        averaging: Averaging,
    ) -> Result<Self> {
        for w in &mut per_window {
            w.predicted = threshold.classify_one(w.fidelity);
        }
        let predicted: Vec<Label> = per_window.iter().map(|w| w.predicted).collect();
        let truth: Vec<Label> = per_window.iter().map(|w| w.truth).collect();
        let confusion = Confusion::from_labels(&predicted, &truth)?;
        Ok(DetectionReport {
            router: router.to_string(),
            method: method.to_string(),
            metrics: metrics_from_confusion(&confusion, averaging)?,
            per_window,
            confusion,
        })
    }
}

pub fn write_windows<W: Write>(mut out: W, report: &DetectionReport) -> Result<()> {
    writeln!(out, "router,method,session,window_start,fidelity,predicted,truth")?;
    for w in &report.per_window {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            report.router,
            report.method,
            w.session,
            w.window_start,
            w.fidelity,
            w.predicted.as_str(),
            w.truth.as_str()
        )?;
    }
    Ok(())
}

pub const SUMMARY_HEADER: &str = "router,method,accuracy,precision,recall,f1,tp,fp,fn,tn";

/// One row per (router, method).
pub fn write_summary<W: Write>(mut out: W, reports: &[DetectionReport]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in reports {
        let m = &r.metrics;
        let c = &r.confusion;
        writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{}",
            r.router, r.method, m.accuracy, m.precision, m.recall, m.f1, c.tp, c.fp, c.fn_, c.tn
        )?;
    }
    Ok(())
}

/// Fixed-width rendering of the summary for terminals.
pub fn format_table(reports: &[DetectionReport]) -> String {
    let mut s = format!(
        "{:<8} {:<14} {:>9} {:>9} {:>9} {:>9}\n",
        "Router", "Method", "Accuracy", "Precision", "Recall", "F1"
    );
    for r in reports {
        let m = &r.metrics;
        s.push_str(&format!(
            "{:<8} {:<14} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
            r.router, r.method, m.accuracy, m.precision, m.recall, m.f1
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_threshold() {
        let t = fit_threshold(&[1.0, 0.9]).unwrap();
        assert_eq!(t.tau, 0.75);
        assert!((t.mu - 0.95).abs() < 1e-15);
        assert!((t.sigma - 0.05).abs() < 1e-15);
        assert_eq!(t.tau, t.mu - 4.0 * t.sigma);
    }

    #[test]
    fn constant_validation_set() {
        let t = fit_threshold(&[0.9, 0.9, 0.9]).unwrap();
        assert_eq!((t.mu, t.sigma, t.tau), (0.9, 0.0, 0.9));
        assert_eq!(t.classify_one(0.9), Label::Normal);
        assert_eq!(t.classify_one(0.9 - 1e-12), Label::Attack);
        assert!(fit_threshold(&[]).is_err());
    }

    #[test]
    fn boundary_is_normal() {
        let t = fit_threshold(&[1.0, 0.9]).unwrap();
        assert_eq!(classify(&[0.75, 0.75 - f64::EPSILON], &t), vec![Label::Normal, Label::Attack]);
    }

    #[test]
    fn perfect_predictions() {
        let l = [Label::Attack, Label::Normal, Label::Normal];
        let m = compute_metrics(&l, &l).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_normal_predictions() {
        let truth = [Label::Attack, Label::Normal, Label::Normal, Label::Normal];
        let pred = [Label::Normal; 4];
        let m = compute_metrics(&pred, &truth).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.recall, 0.75);
        assert!((m.precision - 0.75 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[Label::Normal], &[]).is_err());
    }
}
