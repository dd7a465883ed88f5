//! Precision–recall sweeps over the detection threshold.

use super::{csv_opt, metrics, window_classify, ConfusionMatrix, WindowClass};
use crate::error::{CredError, Result};
use crate::waveio::write_text;
use std::fmt::Write as _;
use std::path::Path;

/// Classifier scores per threshold, plus the threshold with the best
/// F-score (`None` when no threshold yields a defined F-score).
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub fscore: Vec<Option<f64>>,
    pub best_threshold: Option<f64>,
}

impl PrCurve {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("threshold,precision,recall,fscore\n");
        for (i, t) in self.thresholds.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                t,
                csv_opt(self.precision[i]),
                csv_opt(self.recall[i]),
                csv_opt(self.fscore[i])
            );
        }
        write_text(path.as_ref(), &out)
    }
}

/// Sweeps the window classifier over `thresholds`: per threshold every
/// window's probability stream is classified and the resulting confusion
/// matrix scored, with `labels[i]` the truth for `probs[i]`. Positives are
/// earthquake windows. Ties for the best F-score go to the lowest
/// threshold.
pub fn pr_sweep(
    probs: &[Vec<f64>],
    labels: &[WindowClass],
    frame_hop_s: f64,
    min_dur_s: f64,
    thresholds: &[f64],
) -> Result<PrCurve> {
    if probs.len() != labels.len() {
        return Err(CredError::MisalignedInputs(format!(
            "{} probability streams, {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut curve = PrCurve {
        thresholds: thresholds.to_vec(),
        precision: Vec::with_capacity(thresholds.len()),
        recall: Vec::with_capacity(thresholds.len()),
        fscore: Vec::with_capacity(thresholds.len()),
        best_threshold: None,
    };
    let mut best: Option<(f64, f64)> = None; // (fscore, threshold)
    for &tr in thresholds {
        let mut cm = ConfusionMatrix::default();
        for (prob, &label) in probs.iter().zip(labels) {
            let predicted = window_classify(prob, frame_hop_s, tr, min_dur_s);
            match (predicted, label) {
                (WindowClass::Earthquake, WindowClass::Earthquake) => cm.true_pos += 1,
                (WindowClass::Earthquake, WindowClass::Noise) => cm.false_pos += 1,
                (WindowClass::Noise, WindowClass::Earthquake) => cm.false_neg += 1,
                (WindowClass::Noise, WindowClass::Noise) => cm.true_neg += 1,
            }
        }
        let s = metrics(&cm);
        if let Some(f) = s.fscore {
            if best.is_none_or(|(bf, _)| f > bf) {
                best = Some((f, tr));
            }
        }
        curve.precision.push(s.precision);
        curve.recall.push(s.recall);
        curve.fscore.push(s.fscore);
    }
    curve.best_threshold = best.map(|(_, t)| t);
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    const HOP: f64 = 0.2;
    const MIN_DUR: f64 = 1.0;

    /// Windows whose streams sit at a constant level: classification then
    /// reduces to `level >= tr`, which makes expected counts easy.
    fn constant_window(level: f64) -> Vec<f64> {
        vec![level; 20]
    }

    #[test]
    fn separated_scores_are_perfect_between_the_ranges() {
        let probs: Vec<Vec<f64>> = vec![
            constant_window(0.9),
            constant_window(0.85),
            constant_window(0.1),
            constant_window(0.05),
        ];
        let labels = vec![
            WindowClass::Earthquake,
            WindowClass::Earthquake,
            WindowClass::Noise,
            WindowClass::Noise,
        ];
        let curve = pr_sweep(&probs, &labels, HOP, MIN_DUR, &[0.2, 0.5, 0.8]).unwrap();
        for i in 0..3 {
            assert_eq!(curve.precision[i], Some(1.0));
            assert_eq!(curve.recall[i], Some(1.0));
            assert_eq!(curve.fscore[i], Some(1.0));
        }
        // All thresholds tie at F = 1; the first one wins.
        assert_eq!(curve.best_threshold, Some(0.2));
    }

    #[test]
    fn all_noise_labels_zero_the_precision() {
        let probs = vec![constant_window(0.9), constant_window(0.8)];
        let labels = vec![WindowClass::Noise, WindowClass::Noise];
        let curve = pr_sweep(&probs, &labels, HOP, MIN_DUR, &[0.5, 0.95]).unwrap();
        // Threshold 0.5 triggers on both windows: precision 0.
        assert_eq!(curve.precision[0], Some(0.0));
        // Threshold 0.95 triggers nowhere: precision undefined.
        assert_eq!(curve.precision[1], None);
        // No positives exist at all, so recall is undefined everywhere.
        assert_eq!(curve.recall[0], None);
        assert_eq!(curve.best_threshold, None);
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let probs = vec![constant_window(0.5)];
        assert!(matches!(
            pr_sweep(&probs, &[], HOP, MIN_DUR, &[0.5]),
            Err(CredError::MisalignedInputs(_))
        ));
    }

    #[test]
    fn matches_brute_force_recount_on_random_windows() {
        // 100 windows of constant-level streams with random labels: the
        // oracle recounts every cell from `level >= tr` directly.
        let mut rng = Rng::new(0x5EEE);
        let levels: Vec<f64> = (0..100).map(|_| rng.uniform(0.0, 1.0)).collect();
        let labels: Vec<WindowClass> = (0..100)
            .map(|_| {
                if rng.uniform(0.0, 1.0) < 0.5 {
                    WindowClass::Earthquake
                } else {
                    WindowClass::Noise
                }
            })
            .collect();
        let probs: Vec<Vec<f64>> = levels.iter().map(|&l| constant_window(l)).collect();
        let thresholds: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();

        let curve = pr_sweep(&probs, &labels, HOP, MIN_DUR, &thresholds).unwrap();

        let mut best: Option<(f64, f64)> = None;
        for (i, &tr) in thresholds.iter().enumerate() {
            let (mut tp, mut fp, mut fno) = (0usize, 0usize, 0usize);
            for (&level, &label) in levels.iter().zip(&labels) {
                let hit = level >= tr;
                match (hit, label) {
                    (true, WindowClass::Earthquake) => tp += 1,
                    (true, WindowClass::Noise) => fp += 1,
                    (false, WindowClass::Earthquake) => fno += 1,
                    _ => {}
                }
            }
            let p = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
            let r = (tp + fno > 0).then(|| tp as f64 / (tp + fno) as f64);
            assert_eq!(curve.precision[i], p, "threshold {tr}");
            assert_eq!(curve.recall[i], r, "threshold {tr}");
            if let (Some(p), Some(r)) = (p, r) {
                let f = if p + r > 0.0 {
                    2.0 * p * r / (p + r)
                } else {
                    0.0
                };
                assert_eq!(curve.fscore[i], Some(f));
                if best.is_none() || f > best.unwrap().0 {
                    best = Some((f, tr));
                }
            }
        }
        assert_eq!(curve.best_threshold, best.map(|(_, t)| t));
    }

    #[test]
    fn csv_marks_undefined_cells() {
        let probs = vec![constant_window(0.3)];
        let labels = vec![WindowClass::Noise];
        let curve = pr_sweep(&probs, &labels, HOP, MIN_DUR, &[0.9]).unwrap();
        let dir = std::env::temp_dir().join("credkit-eval-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pr_curve.csv");
        curve.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "threshold,precision,recall,fscore\n0.9,undefined,undefined,undefined\n"
        );
    }

    proptest! {
        /// Raising the threshold can only declassify windows, so recall and
        /// the number of triggered windows never increase.
        #[test]
        fn recall_and_trigger_counts_fall_with_threshold(
            seed in 0u64..500,
            n_windows in 2usize..30,
        ) {
            let mut rng = Rng::new(seed);
            let probs: Vec<Vec<f64>> = (0..n_windows)
                .map(|_| (0..30).map(|_| rng.uniform(0.0, 1.0)).collect())
                .collect();
            let labels: Vec<WindowClass> = (0..n_windows)
                .map(|_| if rng.uniform(0.0, 1.0) < 0.5 {
                    WindowClass::Earthquake
                } else {
                    WindowClass::Noise
                })
                .collect();
            let thresholds = [0.1, 0.3, 0.5, 0.7, 0.9];
            let curve = pr_sweep(&probs, &labels, HOP, MIN_DUR, &thresholds).unwrap();

            let trigger_count = |tr: f64| probs.iter()
                .filter(|p| window_classify(p, HOP, tr, MIN_DUR) == WindowClass::Earthquake)
                .count();
            for w in thresholds.windows(2) {
                prop_assert!(trigger_count(w[1]) <= trigger_count(w[0]));
            }
            for w in curve.recall.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    prop_assert!(b <= a + 1e-12);
                }
            }
        }
    }
}
