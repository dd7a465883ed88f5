//! Scoring: precision/recall/F-score, threshold sweeps, catalog matching,
//! the SNR sensitivity benchmark, and chart rendering.

pub mod bench;
pub mod matching;
pub mod plot;
pub mod sweep;

pub use bench::{
    sensitivity_bench, write_sweep_csv, BenchSpec, MethodScores, SweepResult, NCC_GRID,
    STALTA_TRIGGER_GRID,
};
pub use matching::{
    magnitude_histogram, match_catalog, write_magnitude_hist_csv, CatalogMatch, DEFAULT_MATCH_TOL_S,
};
pub use plot::{render_bar_chart, render_csv_chart, render_line_chart};
pub use sweep::{pr_sweep, PrCurve};

use crate::detectors::{extract_events, DEFAULT_MERGE_GAP_S};
use crate::error::Result;
use crate::waveio::write_text;
use std::fmt::Write as _;
use std::path::Path;

/// Window-level counts of a binary classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

/// Classifier scores; a metric whose denominator is zero is `None` rather
/// than 0, so extreme operating points stay visibly undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub fscore: Option<f64>,
}

/// Precision = TP/(TP+FP), recall = TP/(TP+FN), F = 2PR/(P+R). The F-score
/// needs both factors defined; when both are 0 it takes its limit value 0.
pub fn metrics(cm: &ConfusionMatrix) -> Scores {
    let ratio = |num: usize, denom: usize| {
        if denom > 0 {
            Some(num as f64 / denom as f64)
        } else {
            None
        }
    };
    let precision = ratio(cm.true_pos, cm.true_pos + cm.false_pos);
    let recall = ratio(cm.true_pos, cm.true_pos + cm.false_neg);
    let fscore = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Scores {
        precision,
        recall,
        fscore,
    }
}

/// Renders an optional metric for CSV output.
pub(crate) fn csv_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "undefined".to_string(),
    }
}

pub fn write_confusion_csv(path: impl AsRef<Path>, cm: &ConfusionMatrix) -> Result<()> {
    let mut out = String::from("tp,fp,fn,tn\n");
    let _ = writeln!(
        out,
        "{},{},{},{}",
        cm.true_pos, cm.false_pos, cm.false_neg, cm.true_neg
    );
    write_text(path.as_ref(), &out)
}

/// Class of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowClass {
    Earthquake,
    Noise,
}

/// A window counts as an earthquake iff thresholding its probability
/// stream leaves at least one extracted event, using the same run, merge,
/// and duration rules as continuous detection.
pub fn window_classify(prob: &[f64], frame_hop_s: f64, tr: f64, min_dur_s: f64) -> WindowClass {
    if extract_events(prob, frame_hop_s, tr, min_dur_s, DEFAULT_MERGE_GAP_S).is_empty() {
        WindowClass::Noise
    } else {
        WindowClass::Earthquake
    }
}
