//! Continuous detection with the neural model over a moving window.

use super::extract::{extract_events, DEFAULT_MERGE_GAP_S, DEFAULT_MIN_DUR_S};
use super::Detection;
use crate::cred::{spectrogram_batch, window_to_input, CredModel};
use crate::dsp::{STFT_HOP, STFT_WINDOW, TARGET_RATE_HZ};
use crate::error::{CredError, Result};
use crate::nn::{Mode, Real};
use crate::waveio::Waveform3C;
use rayon::prelude::*;

/// Default moving-window length for continuous detection, seconds.
pub const DETECT_WINDOW_S: f64 = 30.0;
/// Default window stride (half-overlapping windows), seconds.
pub const DETECT_STRIDE_S: f64 = 15.0;

/// Scans a continuous 100 Hz trace with a moving window: each window is
/// conditioned exactly like a training window, scored by the model, and
/// its per-step probabilities are repeated back up to the spectrogram
/// frame grid. Overlapping windows combine by per-frame maximum on the
/// shared timeline, and events are extracted once from the stitched
/// stream with threshold `tr` and the default duration/merge rules.
///
/// Window starts are quantized to the frame hop (0.2 s) so every window
/// lands on the shared frame grid, and a final window is pinned to the end
/// of the trace so the tail is covered even when the stride does not
/// divide the trace length.
pub fn cred_detect<T: Real>(
    model: &CredModel<T>,
    continuous: &Waveform3C,
    window_s: f64,
    stride_s: f64,
    tr: f64,
) -> Result<Vec<Detection>> {
    let cfg = &model.config;
    let rate = TARGET_RATE_HZ;
    if (continuous.sampling_rate - rate).abs() > 1e-6 {
        return Err(CredError::InvalidConfig(format!(
            "continuous trace must be resampled to {rate} Hz before detection, got {} Hz",
            continuous.sampling_rate
        )));
    }
    if !(window_s > 0.0 && stride_s > 0.0) {
        return Err(CredError::InvalidConfig(format!(
            "window_s {window_s} and stride_s {stride_s} must be positive"
        )));
    }
    let n = continuous.len();
    let window_n = (window_s * rate).round() as usize;
    if window_n > n {
        return Err(CredError::WindowLongerThanTrace {
            window_s,
            trace_s: continuous.duration_s(),
        });
    }
    if window_n < STFT_WINDOW {
        return Err(CredError::GeometryMismatch(format!(
            "a {window_s} s window is shorter than one spectrogram frame"
        )));
    }
    let frames_per_window = (window_n - STFT_WINDOW) / STFT_HOP + 1;
    if frames_per_window != cfg.input_frames {
        return Err(CredError::GeometryMismatch(format!(
            "a {window_s} s window yields {frames_per_window} spectrogram frames, \
             the model expects {}",
            cfg.input_frames
        )));
    }

    // Hop-aligned window starts, plus a final window pinned to the tail.
    let stride_n = (((stride_s * rate).round() as usize) / STFT_HOP * STFT_HOP).max(STFT_HOP);
    let mut offsets: Vec<usize> = (0..)
        .map(|k| k * stride_n)
        .take_while(|o| o + window_n <= n)
        .collect();
    let tail = (n - window_n) / STFT_HOP * STFT_HOP;
    if *offsets.last().expect("offset 0 always fits") < tail {
        offsets.push(tail);
    }

    let specs = offsets
        .par_iter()
        .map(|&o| window_to_input(&continuous.slice(o, window_n)))
        .collect::<Result<Vec<_>>>()?;
    let x = spectrogram_batch::<T>(&specs)?;
    let probs = model.forward(&x, Mode::Infer)?;

    // Stitch onto the trace-wide frame grid by per-frame maximum, repeating
    // each model step across the frames it pooled.
    let t_out = cfg.output_frames();
    let chunk = cfg.input_frames.div_ceil(t_out);
    let total_frames = (n - STFT_WINDOW) / STFT_HOP + 1;
    let mut stitched = vec![0.0f64; total_frames];
    for (w, &offset) in offsets.iter().enumerate() {
        let first_frame = offset / STFT_HOP;
        for f in 0..cfg.input_frames {
            let g = first_frame + f;
            debug_assert!(g < total_frames, "window frame escapes the trace grid");
            let p = probs.data[w * t_out + f / chunk].to_f64();
            if p > stitched[g] {
                stitched[g] = p;
            }
        }
    }

    let hop_s = STFT_HOP as f64 / rate;
    Ok(extract_events(
        &stitched,
        hop_s,
        tr,
        DEFAULT_MIN_DUR_S,
        DEFAULT_MERGE_GAP_S,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cred::{build_model, CredConfig};
    use crate::rng::Rng;

    fn noisy_trace(len: usize, seed: u64) -> Waveform3C {
        let mut rng = Rng::new(seed);
        let mut fill = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect() };
        Waveform3C::new("S", 0.0, TARGET_RATE_HZ, fill(len), fill(len), fill(len)).unwrap()
    }

    /// A freshly built model outputs exactly 0.5 everywhere, which makes
    /// the stitched stream and hence the extraction outcome predictable.
    #[test]
    fn fresh_model_splits_cleanly_around_one_half() {
        let model = build_model::<f32>(&CredConfig::default()).unwrap();
        let trace = Waveform3C::zeros("S", 0.0, TARGET_RATE_HZ, 9000);
        let above = cred_detect(&model, &trace, 30.0, 15.0, 0.4).unwrap();
        assert_eq!(above.len(), 1, "{above:?}");
        assert!((above[0].start_s - 0.0).abs() < 1e-9);
        // 9000 samples hold (9000 - 80) / 20 + 1 = 447 frames of 0.2 s.
        assert!((above[0].end_s - 447.0 * 0.2).abs() < 1e-9);
        assert_eq!(above[0].peak_score, 0.5);

        let below = cred_detect(&model, &trace, 30.0, 15.0, 0.6).unwrap();
        assert!(below.is_empty(), "{below:?}");
    }

    /// Non-overlapping 30 s windows cannot score the 3 frames straddling
    /// each boundary (those frames' samples span two windows), so a
    /// constant-probability stream breaks exactly at the seams, while a
    /// half-window stride covers every frame.
    #[test]
    fn stride_controls_seam_coverage() {
        let model = build_model::<f32>(&CredConfig::default()).unwrap();
        let trace = Waveform3C::zeros("S", 0.0, TARGET_RATE_HZ, 9000);

        let gapless = cred_detect(&model, &trace, 30.0, 15.0, 0.4).unwrap();
        assert_eq!(gapless.len(), 1);

        let seamed = cred_detect(&model, &trace, 30.0, 30.0, 0.4).unwrap();
        assert_eq!(seamed.len(), 3, "{seamed:?}");
        for (d, (start, end)) in seamed.iter().zip([(0.0, 29.4), (30.0, 59.4), (60.0, 89.4)]) {
            assert!((d.start_s - start).abs() < 1e-9, "{seamed:?}");
            assert!((d.end_s - end).abs() < 1e-9, "{seamed:?}");
        }
    }

    #[test]
    fn identical_inputs_give_identical_detections() {
        let model = build_model::<f32>(&CredConfig::default()).unwrap();
        let trace = noisy_trace(12000, 99);
        let a = cred_detect(&model, &trace, 30.0, 15.0, 0.3).unwrap();
        let b = cred_detect(&model, &trace, 30.0, 15.0, 0.3).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.start_s.to_bits(), y.start_s.to_bits());
            assert_eq!(x.end_s.to_bits(), y.end_s.to_bits());
            assert_eq!(x.peak_score.to_bits(), y.peak_score.to_bits());
        }
    }

    #[test]
    fn tail_window_covers_the_end_of_the_trace() {
        let model = build_model::<f32>(&CredConfig::default()).unwrap();
        // 100 s trace: strides of 30 s leave a 10 s tail that only the
        // pinned final window can reach.
        let trace = Waveform3C::zeros("S", 0.0, TARGET_RATE_HZ, 10000);
        let dets = cred_detect(&model, &trace, 30.0, 30.0, 0.4).unwrap();
        let last_end = dets.last().map(|d| d.end_s).unwrap_or(0.0);
        // 10000 samples hold 497 frames; the stream must reach the last one.
        assert!((last_end - 497.0 * 0.2).abs() < 1e-9, "{dets:?}");
    }

    #[test]
    fn geometry_and_input_errors_are_reported() {
        let model = build_model::<f32>(&CredConfig::default()).unwrap();
        let trace = Waveform3C::zeros("S", 0.0, TARGET_RATE_HZ, 9000);
        assert!(matches!(
            cred_detect(&model, &trace, 20.0, 10.0, 0.4),
            Err(CredError::GeometryMismatch(_))
        ));
        let mut wrong_rate = trace.clone();
        wrong_rate.sampling_rate = 250.0;
        assert!(matches!(
            cred_detect(&model, &wrong_rate, 30.0, 15.0, 0.4),
            Err(CredError::InvalidConfig(_))
        ));
        let short = Waveform3C::zeros("S", 0.0, TARGET_RATE_HZ, 2000);
        assert!(matches!(
            cred_detect(&model, &short, 30.0, 15.0, 0.4),
            Err(CredError::WindowLongerThanTrace { .. })
        ));
    }
}
