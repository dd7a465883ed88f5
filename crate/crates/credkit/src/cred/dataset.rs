//! Dataset assembly: spectrogram batches, label pooling, and synthetic
//! training windows.

use super::config::CredConfig;
use crate::dsp::{make_label, preprocess, stft_spectrogram, LabelVector, Spectrogram};
use crate::error::{CredError, Result};
use crate::nn::{Real, Tensor};
use crate::rng::Rng;
use crate::synth::{noise_for_snr, synthetic_event};
use crate::waveio::Waveform3C;

/// Input spectrogram batch [N, C, T, F] with pooled frame labels [N, T'].
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub x: Tensor<T>,
    pub y: Tensor<T>,
}

impl<T: Real> Dataset<T> {
    pub fn len(&self) -> usize {
        self.x.shape.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copies the chosen samples into a new batch, in the given order.
    pub fn select(&self, idx: &[usize]) -> (Tensor<T>, Tensor<T>) {
        let xb: usize = self.x.shape[1..].iter().product();
        let yb: usize = self.y.shape[1..].iter().product();
        let mut x_shape = self.x.shape.clone();
        x_shape[0] = idx.len();
        let mut y_shape = self.y.shape.clone();
        y_shape[0] = idx.len();
        let mut x = Tensor::zeros(&x_shape);
        let mut y = Tensor::zeros(&y_shape);
        for (row, &s) in idx.iter().enumerate() {
            x.data[row * xb..(row + 1) * xb].copy_from_slice(&self.x.data[s * xb..(s + 1) * xb]);
            y.data[row * yb..(row + 1) * yb].copy_from_slice(&self.y.data[s * yb..(s + 1) * yb]);
        }
        (x, y)
    }

    /// Both tensors must match the model geometry and each other.
    pub fn check_geometry(&self, cfg: &CredConfig) -> Result<()> {
        let n = self.len();
        let want_x = [n, cfg.channels, cfg.input_frames, cfg.input_bins];
        let want_y = [n, cfg.output_frames()];
        if self.x.shape != want_x {
            return Err(CredError::GeometryMismatch(format!(
                "dataset inputs {:?}, expected {:?}",
                self.x.shape, want_x
            )));
        }
        if self.y.shape != want_y {
            return Err(CredError::GeometryMismatch(format!(
                "dataset labels {:?}, expected {:?}",
                self.y.shape, want_y
            )));
        }
        Ok(())
    }
}

/// Max-pools frame labels down to `t_out` steps over contiguous chunks of
/// `ceil(frames / t_out)` frames: a pooled step is 1 iff any frame it
/// covers is 1. A trailing chunk that covers no frames pools to 0.
pub fn pool_labels(l: &LabelVector, t_out: usize) -> Result<LabelVector> {
    let frames = l.frames();
    if t_out < 1 || t_out > frames {
        return Err(CredError::InvalidConfig(format!(
            "pooled length {t_out} must be in 1..={frames}"
        )));
    }
    let chunk = frames.div_ceil(t_out);
    let mut out = LabelVector::zeros(t_out, l.frame_hop_s * chunk as f64);
    for (i, v) in out.values.iter_mut().enumerate() {
        let lo = i * chunk;
        let hi = ((i + 1) * chunk).min(frames);
        if lo < hi && l.values[lo..hi].contains(&1.0) {
            *v = 1.0;
        }
    }
    Ok(out)
}

/// Lays spectrograms out as a batch tensor: `x[n, c, t, f] = spec_n(t, f, c)`.
pub fn spectrogram_batch<T: Real>(specs: &[Spectrogram]) -> Result<Tensor<T>> {
    let Some(first) = specs.first() else {
        return Err(CredError::EmptyDataset);
    };
    let (t_len, f_len, c_len) = (first.frames, first.bins, first.channels);
    let mut x = Tensor::zeros(&[specs.len(), c_len, t_len, f_len]);
    for (s, spec) in specs.iter().enumerate() {
        if spec.frames != t_len || spec.bins != f_len || spec.channels != c_len {
            return Err(CredError::MisalignedInputs(format!(
                "spectrogram {s} is {}x{}x{}, expected {t_len}x{f_len}x{c_len}",
                spec.frames, spec.bins, spec.channels
            )));
        }
        for c in 0..c_len {
            for t in 0..t_len {
                for f in 0..f_len {
                    x.data[((s * c_len + c) * t_len + t) * f_len + f] =
                        T::from_f64(spec.at(t, f, c));
                }
            }
        }
    }
    Ok(x)
}

/// One training window: a conditioned trace plus its event times (seconds
/// into the window), if it contains one.
#[derive(Debug, Clone)]
pub struct LabeledWindow {
    pub trace: Waveform3C,
    pub event: Option<(f64, f64)>,
}

/// Shape of a generated window set.
#[derive(Debug, Clone)]
pub struct WindowSetSpec {
    pub event_windows: usize,
    pub noise_windows: usize,
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    pub duration_s: f64,
    pub sampling_rate: f64,
    pub seed: u64,
}

impl Default for WindowSetSpec {
    fn default() -> Self {
        WindowSetSpec {
            event_windows: 128,
            noise_windows: 128,
            snr_lo_db: 12.0,
            snr_hi_db: 30.0,
            duration_s: 30.0,
            sampling_rate: 100.0,
            seed: 42,
        }
    }
}

/// Event windows are synthetic earthquakes plus noise realized at a target
/// SNR drawn uniformly from the requested range; noise windows are pure
/// unit-variance noise. Event and noise windows are interleaved.
pub fn synthetic_windows(spec: &WindowSetSpec) -> Result<Vec<LabeledWindow>> {
    if spec.snr_hi_db < spec.snr_lo_db {
        return Err(CredError::InvalidConfig(format!(
            "snr range [{}, {}] is inverted",
            spec.snr_lo_db, spec.snr_hi_db
        )));
    }
    let n_samples = (spec.duration_s * spec.sampling_rate).round() as usize;
    let mut out = Vec::with_capacity(spec.event_windows + spec.noise_windows);
    for i in 0..spec.event_windows.max(spec.noise_windows) {
        if i < spec.event_windows {
            let tag = 2 * i as u64;
            let ev = synthetic_event(spec.duration_s, spec.sampling_rate, spec.seed ^ (tag << 8))?;
            let mut rng = Rng::derive(spec.seed, 0x51E0 + tag);
            let snr = rng.uniform(spec.snr_lo_db, spec.snr_hi_db);
            let noise = noise_for_snr(&ev.trace, snr, spec.seed ^ (tag << 8) ^ 0xAD)?;
            let mut trace = ev.trace.clone();
            for (dst, src) in trace.channels_mut().into_iter().zip(noise.channels()) {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
            }
            out.push(LabeledWindow {
                trace,
                event: Some((ev.p_s, ev.s_s)),
            });
        }
        if i < spec.noise_windows {
            let tag = 2 * i as u64 + 1;
            let mut rng = Rng::derive(spec.seed, 0x901E + tag);
            let mut trace = Waveform3C::zeros("synthetic", 0.0, spec.sampling_rate, n_samples);
            for chan in trace.channels_mut() {
                for v in chan.iter_mut() {
                    *v = rng.next_gauss();
                }
            }
            out.push(LabeledWindow { trace, event: None });
        }
    }
    Ok(out)
}

/// Band-pass + normalize a window, take its spectrogram, and scale the
/// magnitudes to a unit maximum. This is the exact conditioning applied at
/// detection time, so training and inference see the same distribution.
pub fn window_to_input(window: &Waveform3C) -> Result<Spectrogram> {
    let conditioned = preprocess(window)?;
    Ok(stft_spectrogram(&conditioned.trace)?.normalized())
}

/// Conditions windows and pools their labels into a training-ready dataset
/// matching `cfg` geometry.
pub fn windows_to_dataset<T: Real>(
    windows: &[LabeledWindow],
    cfg: &CredConfig,
) -> Result<Dataset<T>> {
    if windows.is_empty() {
        return Err(CredError::EmptyDataset);
    }
    let t_out = cfg.output_frames();
    let mut specs = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    for w in windows {
        let spec = window_to_input(&w.trace)?;
        if spec.frames != cfg.input_frames || spec.bins != cfg.input_bins {
            return Err(CredError::GeometryMismatch(format!(
                "window yields {}x{} spectrogram, model expects {}x{}",
                spec.frames, spec.bins, cfg.input_frames, cfg.input_bins
            )));
        }
        let label = match w.event {
            Some((p, s)) => make_label(p, s, spec.frames, spec.frame_hop_s)?,
            None => LabelVector::zeros(spec.frames, spec.frame_hop_s),
        };
        labels.push(pool_labels(&label, t_out)?);
        specs.push(spec);
    }
    let x = spectrogram_batch(&specs)?;
    let mut y = Tensor::zeros(&[windows.len(), t_out]);
    for (s, l) in labels.iter().enumerate() {
        for (t, v) in l.values.iter().enumerate() {
            y.data[s * t_out + t] = T::from_f64(*v);
        }
    }
    Ok(Dataset { x, y })
}
