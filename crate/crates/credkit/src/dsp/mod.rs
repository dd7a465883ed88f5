//! Signal conditioning: the fixed preprocessing chain, spectrograms, and
//! frame-level labels.
//!
//! Preprocessing runs, in order: per-channel mean removal, 1-45 Hz
//! Butterworth band-pass (order-4 prototype, forward-backward so the phase
//! is zero), rational resampling to 100 Hz, then joint max-abs
//! normalization so the largest |sample| across all three channels is
//! exactly 1.

pub mod filter;
pub mod resample;
pub mod stft;

pub use filter::{butter_bandpass, SosFilter};
pub use resample::{rate_ratio, resample_poly};
pub use stft::{stft_spectrogram, Spectrogram, STFT_BINS, STFT_HOP, STFT_WINDOW};

use crate::error::{CredError, Result};
use crate::waveio::Waveform3C;
use std::path::Path;

pub const TARGET_RATE_HZ: f64 = 100.0;
pub const BAND_LOW_HZ: f64 = 1.0;
pub const BAND_HIGH_HZ: f64 = 45.0;
/// Frames whose start lies in [P, P + LABEL_SPAN_FACTOR * (S - P)) are 1.
pub const LABEL_SPAN_FACTOR: f64 = 3.0;

/// Result of [`preprocess`]; `all_zero` is set when normalization found no
/// nonzero sample and left the trace unscaled.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub trace: Waveform3C,
    pub all_zero: bool,
}

/// Mean removal, band-pass, resample to 100 Hz, joint peak normalization.
pub fn preprocess(wf: &Waveform3C) -> Result<Preprocessed> {
    if wf.sampling_rate < 90.0 {
        return Err(CredError::SamplingRateTooLow(wf.sampling_rate));
    }
    let bp = butter_bandpass(4, BAND_LOW_HZ, BAND_HIGH_HZ, wf.sampling_rate)?;
    let (up, down) = rate_ratio(wf.sampling_rate, TARGET_RATE_HZ)?;

    let mut out = Waveform3C {
        station: wf.station.clone(),
        start_time: wf.start_time,
        sampling_rate: TARGET_RATE_HZ,
        e: Vec::new(),
        n: Vec::new(),
        z: Vec::new(),
    };
    for (src, dst) in wf
        .channels()
        .into_iter()
        .zip([&mut out.e, &mut out.n, &mut out.z])
    {
        let mean = src.iter().sum::<f64>() / src.len().max(1) as f64;
        let centered: Vec<f64> = src.iter().map(|x| x - mean).collect();
        let filtered = bp.filtfilt(&centered)?;
        *dst = resample_poly(&filtered, up, down);
    }

    let peak = out.peak_abs();
    if peak == 0.0 {
        return Ok(Preprocessed {
            trace: out,
            all_zero: true,
        });
    }
    for chan in out.channels_mut() {
        for v in chan.iter_mut() {
            *v /= peak;
        }
    }
    Ok(Preprocessed {
        trace: out,
        all_zero: false,
    })
}

/// Per-frame binary labels on the spectrogram frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    pub frame_hop_s: f64,
    pub values: Vec<f64>,
}

impl LabelVector {
    pub fn zeros(frames: usize, frame_hop_s: f64) -> Self {
        LabelVector {
            frame_hop_s,
            values: vec![0.0; frames],
        }
    }

    pub fn frames(&self) -> usize {
        self.values.len()
    }
}

/// Event labels: frame t (start time t*hop) is 1 iff
/// p <= t*hop < p + 3*(s - p). Everything past the last frame is clipped
/// by the frame count itself.
pub fn make_label(
    p_time_s: f64,
    s_time_s: f64,
    frames: usize,
    frame_hop_s: f64,
) -> Result<LabelVector> {
    if s_time_s <= p_time_s {
        return Err(CredError::SNotAfterP {
            p: p_time_s,
            s: s_time_s,
        });
    }
    if p_time_s < 0.0 {
        return Err(CredError::InvalidConfig(format!(
            "p_time_s must be >= 0, got {p_time_s}"
        )));
    }
    let span_end = p_time_s + LABEL_SPAN_FACTOR * (s_time_s - p_time_s);
    let mut label = LabelVector::zeros(frames, frame_hop_s);
    for t in 0..frames {
        let start = t as f64 * frame_hop_s;
        if start >= p_time_s && start < span_end {
            label.values[t] = 1.0;
        }
    }
    Ok(label)
}

const SPEC_MAGIC: &[u8; 8] = b"CREDSPEC";
const SPEC_VERSION: u16 = 1;

/// Binary spectrogram container: 16-byte header (8-byte magic, u16 LE
/// version, 6 zero bytes), u32 LE dims (frames, bins, channels), f64 LE
/// frame_hop_s and bin_hz, then f32 LE values in frame-major order.
pub fn write_spectrogram(path: impl AsRef<Path>, spec: &Spectrogram) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + 12 + 16 + spec.data.len() * 4);
    bytes.extend_from_slice(SPEC_MAGIC);
    bytes.extend_from_slice(&SPEC_VERSION.to_le_bytes());
    bytes.extend_from_slice(&[0u8; 6]);
    for dim in [spec.frames, spec.bins, spec.channels] {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    bytes.extend_from_slice(&spec.frame_hop_s.to_le_bytes());
    bytes.extend_from_slice(&spec.bin_hz.to_le_bytes());
    for &v in &spec.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(path.as_ref(), &bytes).map_err(|source| CredError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}

pub fn read_spectrogram(path: impl AsRef<Path>) -> Result<Spectrogram> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CredError::MissingFile(path.to_path_buf())
        } else {
            CredError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let corrupt = |reason: &str| CredError::CorruptFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    };
    if bytes.len() < 44 {
        return Err(corrupt("truncated header"));
    }
    if &bytes[..8] != SPEC_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != SPEC_VERSION {
        return Err(CredError::VersionMismatch(version));
    }
    let dim = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (frames, bins, channels) = (dim(16), dim(20), dim(24));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let frame_hop_s = f64_at(28);
    let bin_hz = f64_at(36);
    let count = frames * bins * channels;
    if bytes.len() != 44 + count * 4 {
        return Err(corrupt("payload size does not match dims"));
    }
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let o = 44 + i * 4;
        data.push(f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64);
    }
    Ok(Spectrogram {
        frames,
        bins,
        channels,
        frame_hop_s,
        bin_hz,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise_wf(seed: u64, n: usize, fs: f64) -> Waveform3C {
        let mut rng = crate::rng::Rng::new(seed);
        Waveform3C::new(
            "S",
            0.0,
            fs,
            (0..n).map(|_| rng.next_gauss()).collect(),
            (0..n).map(|_| rng.next_gauss()).collect(),
            (0..n).map(|_| rng.next_gauss()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn preprocess_normalizes_peak_to_exactly_one() {
        let wf = noise_wf(3, 6000, 200.0);
        let out = preprocess(&wf).unwrap();
        assert!(!out.all_zero);
        assert_eq!(out.trace.sampling_rate, 100.0);
        assert_eq!(out.trace.len(), 3000);
        assert_eq!(out.trace.peak_abs(), 1.0);
    }

    #[test]
    fn preprocess_rejects_low_rates_and_flags_silence() {
        let wf = noise_wf(3, 1000, 80.0);
        assert!(matches!(
            preprocess(&wf),
            Err(CredError::SamplingRateTooLow(r)) if r == 80.0
        ));
        let silent = Waveform3C::zeros("S", 0.0, 100.0, 2000);
        let out = preprocess(&silent).unwrap();
        assert!(out.all_zero);
        assert!(out.trace.e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn preprocess_kills_sub_band_sine() {
        let fs = 100.0;
        let n = 3000;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 0.2 * i as f64 / fs).sin())
            .collect();
        let wf = Waveform3C::new("S", 0.0, fs, x.clone(), x.clone(), x).unwrap();
        // bypass normalization to measure raw attenuation: compare band-passed
        // RMS against input RMS
        let bp = butter_bandpass(4, BAND_LOW_HZ, BAND_HIGH_HZ, fs).unwrap();
        let y = bp.filtfilt(&wf.e).unwrap();
        let rms_in = (wf.e.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let rms_out = (y.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        assert!(rms_out < 0.05 * rms_in);
    }

    #[test]
    fn preprocess_is_nearly_idempotent() {
        // band-limited content: second pass changes RMS by < 1%
        let fs = 100.0;
        let n = 4000;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * std::f64::consts::PI * 5.0 * t).sin()
                    + 0.5 * (2.0 * std::f64::consts::PI * 12.0 * t).sin()
                    + 0.25 * (2.0 * std::f64::consts::PI * 19.0 * t).cos()
            })
            .collect();
        let wf = Waveform3C::new("S", 0.0, fs, x.clone(), x.clone(), x).unwrap();
        let once = preprocess(&wf).unwrap().trace;
        let twice = preprocess(&once).unwrap().trace;
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let r1 = rms(&once.e);
        let r2 = rms(&twice.e);
        assert!((r1 - r2).abs() < 0.01 * r1, "rms {r1} -> {r2}");
    }

    #[test]
    fn label_examples() {
        // p=5, s=10: span [5, 20), hop 0.2 -> frames 25..100
        let l = make_label(5.0, 10.0, 147, 0.2).unwrap();
        for t in 0..147 {
            let want = (25..100).contains(&t);
            assert_eq!(l.values[t] == 1.0, want, "frame {t}");
        }
        // p=20, s=28: span [20, 44) clipped by the 147-frame grid
        let l = make_label(20.0, 28.0, 147, 0.2).unwrap();
        for t in 0..147 {
            assert_eq!(l.values[t] == 1.0, t >= 100, "frame {t}");
        }
        assert!(matches!(
            make_label(10.0, 10.0, 147, 0.2),
            Err(CredError::SNotAfterP { .. })
        ));
        let silent = LabelVector::zeros(147, 0.2);
        assert!(silent.values.iter().all(|&v| v == 0.0));
    }

    proptest! {
        /// Oracle: per-frame membership test written independently.
        #[test]
        fn label_matches_membership_oracle(p in 0.0f64..25.0, d in 0.01f64..8.0) {
            let s = p + d;
            let l = make_label(p, s, 147, 0.2).unwrap();
            for t in 0..147 {
                let start = t as f64 * 0.2;
                let inside = start >= p && start < p + 3.0 * (s - p);
                prop_assert_eq!(l.values[t] == 1.0, inside);
            }
        }
    }

    #[test]
    fn spectrogram_binary_round_trip() {
        let wf = noise_wf(17, 400, 100.0);
        let spec = stft_spectrogram(&wf).unwrap();
        let dir = std::env::temp_dir().join("credkit-dsp-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("spec.bin");
        write_spectrogram(&path, &spec).unwrap();
        let back = read_spectrogram(&path).unwrap();
        assert_eq!(back.frames, spec.frames);
        assert_eq!(back.bins, spec.bins);
        assert_eq!(back.channels, spec.channels);
        assert_eq!(back.frame_hop_s, spec.frame_hop_s);
        // values survive modulo the f32 storage rounding
        for (a, b) in spec.data.iter().zip(&back.data) {
            assert_eq!(*a as f32, *b as f32);
        }
        // second write of the loaded value is byte-identical
        let path2 = dir.join("spec2.bin");
        write_spectrogram(&path2, &back).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }
}
