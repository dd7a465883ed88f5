//! Short-time Fourier transform magnitude spectrograms.
//!
//! Fixed geometry: 80-sample periodic Hann window, hop 20, 80-point DFT,
//! one-sided magnitude (41 bins). The DFT is normalized by 1/sqrt(nfft) so
//! that summing |X|^2 over all two-sided bins of one frame equals the
//! windowed frame's sample energy (Parseval with this normalization).

use crate::error::{CredError, Result};
use crate::waveio::Waveform3C;

pub const STFT_WINDOW: usize = 80;
pub const STFT_HOP: usize = 20;
pub const STFT_BINS: usize = STFT_WINDOW / 2 + 1;

/// Multi-channel magnitude spectrogram, frame-major layout:
/// `data[(frame * bins + bin) * channels + channel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub channels: usize,
    pub frame_hop_s: f64,
    pub bin_hz: f64,
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub fn zeros(
        frames: usize,
        bins: usize,
        channels: usize,
        frame_hop_s: f64,
        bin_hz: f64,
    ) -> Self {
        Spectrogram {
            frames,
            bins,
            channels,
            frame_hop_s,
            bin_hz,
            data: vec![0.0; frames * bins * channels],
        }
    }

    #[inline]
    pub fn at(&self, frame: usize, bin: usize, channel: usize) -> f64 {
        self.data[(frame * self.bins + bin) * self.channels + channel]
    }

    #[inline]
    pub fn at_mut(&mut self, frame: usize, bin: usize, channel: usize) -> &mut f64 {
        &mut self.data[(frame * self.bins + bin) * self.channels + channel]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &x| m.max(x))
    }

    /// Scale so the largest magnitude is 1; an all-zero spectrogram is
    /// returned unchanged.
    pub fn normalized(&self) -> Spectrogram {
        let m = self.max_value();
        if m <= 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        for v in &mut out.data {
            *v /= m;
        }
        out
    }

    /// Total one-sided energy with the doubling convention for interior bins.
    pub fn energy_one_sided_doubled(&self) -> f64 {
        let mut total = 0.0;
        for t in 0..self.frames {
            for b in 0..self.bins {
                let w = if b == 0 || b == self.bins - 1 {
                    1.0
                } else {
                    2.0
                };
                for c in 0..self.channels {
                    let v = self.at(t, b, c);
                    total += w * v * v;
                }
            }
        }
        total
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Magnitude spectrogram of all three channels.
///
/// Frame count is `floor((len - window) / hop) + 1`; a 3000-sample window
/// at 100 Hz yields 147 frames x 41 bins.
pub fn stft_spectrogram(wf: &Waveform3C) -> Result<Spectrogram> {
    let n = wf.len();
    if n < STFT_WINDOW {
        return Err(CredError::TraceTooShort {
            len: n,
            need: STFT_WINDOW,
        });
    }
    let frames = (n - STFT_WINDOW) / STFT_HOP + 1;
    let mut out = Spectrogram::zeros(
        frames,
        STFT_BINS,
        3,
        STFT_HOP as f64 / wf.sampling_rate,
        wf.sampling_rate / STFT_WINDOW as f64,
    );

    let window = hann(STFT_WINDOW);
    // DFT basis tables: cos/sin for each (bin, sample) pair
    let mut cos_t = vec![0.0f64; STFT_BINS * STFT_WINDOW];
    let mut sin_t = vec![0.0f64; STFT_BINS * STFT_WINDOW];
    for k in 0..STFT_BINS {
        for i in 0..STFT_WINDOW {
            let ang = 2.0 * std::f64::consts::PI * (k * i) as f64 / STFT_WINDOW as f64;
            cos_t[k * STFT_WINDOW + i] = ang.cos();
            sin_t[k * STFT_WINDOW + i] = ang.sin();
        }
    }
    let norm = 1.0 / (STFT_WINDOW as f64).sqrt();

    let mut buf = [0.0f64; STFT_WINDOW];
    for (c, chan) in wf.channels().into_iter().enumerate() {
        for t in 0..frames {
            let seg = &chan[t * STFT_HOP..t * STFT_HOP + STFT_WINDOW];
            for i in 0..STFT_WINDOW {
                buf[i] = seg[i] * window[i];
            }
            for k in 0..STFT_BINS {
                let ct = &cos_t[k * STFT_WINDOW..(k + 1) * STFT_WINDOW];
                let st = &sin_t[k * STFT_WINDOW..(k + 1) * STFT_WINDOW];
                let mut re = 0.0;
                let mut im = 0.0;
                for i in 0..STFT_WINDOW {
                    re += buf[i] * ct[i];
                    im -= buf[i] * st[i];
                }
                *out.at_mut(t, k, c) = norm * (re * re + im * im).sqrt();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_wf(freq: f64, n: usize, fs: f64) -> Waveform3C {
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect();
        Waveform3C::new("S", 0.0, fs, x.clone(), x.clone(), x).unwrap()
    }

    #[test]
    fn geometry_of_30s_window() {
        let wf = sine_wf(10.0, 3000, 100.0);
        let spec = stft_spectrogram(&wf).unwrap();
        assert_eq!(spec.frames, 147);
        assert_eq!(spec.bins, 41);
        assert_eq!(spec.channels, 3);
        assert!((spec.frame_hop_s - 0.2).abs() < 1e-15);
        assert!((spec.bin_hz - 1.25).abs() < 1e-15);
    }

    #[test]
    fn pure_tone_peaks_at_its_bin() {
        // 10 Hz at bin_hz = 1.25 -> bin 8
        let wf = sine_wf(10.0, 3000, 100.0);
        let spec = stft_spectrogram(&wf).unwrap();
        for t in 0..spec.frames {
            let best = (0..spec.bins)
                .max_by(|&a, &b| spec.at(t, a, 0).total_cmp(&spec.at(t, b, 0)))
                .unwrap();
            assert_eq!(best, 8, "frame {t}");
        }
    }

    #[test]
    fn too_short_trace_is_rejected() {
        let wf = sine_wf(10.0, 79, 100.0);
        assert!(matches!(
            stft_spectrogram(&wf),
            Err(CredError::TraceTooShort { len: 79, need: 80 })
        ));
    }

    /// Independent oracle: per-frame two-sided DFT energy computed with a
    /// plain quadratic loop must match the one-sided doubled energy.
    #[test]
    fn one_sided_energy_matches_brute_force_dft() {
        let mut rng = crate::rng::Rng::new(11);
        let n = 480;
        let x: Vec<f64> = (0..n).map(|_| rng.next_gauss()).collect();
        let wf = Waveform3C::new("S", 0.0, 100.0, x.clone(), x.clone(), x.clone()).unwrap();
        let spec = stft_spectrogram(&wf).unwrap();

        let window = hann(STFT_WINDOW);
        let mut oracle = 0.0;
        for t in 0..spec.frames {
            let seg: Vec<f64> = (0..STFT_WINDOW)
                .map(|i| x[t * STFT_HOP + i] * window[i])
                .collect();
            for k in 0..STFT_WINDOW {
                let mut re = 0.0;
                let mut im = 0.0;
                for (i, &v) in seg.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (k * i) as f64 / STFT_WINDOW as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                oracle += (re * re + im * im) / STFT_WINDOW as f64;
            }
        }
        let oracle = oracle * 3.0; // three identical channels
        let got = spec.energy_one_sided_doubled();
        assert!(
            (got - oracle).abs() < 1e-9 * oracle,
            "got {got}, oracle {oracle}"
        );
    }

    /// Parseval estimate: total spectrogram energy approximates
    /// sum(x^2) * (window energy / hop) for stationary noise.
    #[test]
    fn energy_tracks_signal_energy() {
        let mut rng = crate::rng::Rng::new(5);
        let n = 3000;
        let x: Vec<f64> = (0..n).map(|_| rng.next_gauss()).collect();
        let wf = Waveform3C::new("S", 0.0, 100.0, x.clone(), vec![0.0; n], vec![0.0; n]).unwrap();
        let spec = stft_spectrogram(&wf).unwrap();
        let wsum: f64 = hann(STFT_WINDOW).iter().map(|w| w * w).sum();
        let expect = x.iter().map(|v| v * v).sum::<f64>() * wsum / STFT_HOP as f64;
        let got = spec.energy_one_sided_doubled();
        assert!(
            (got - expect).abs() < 0.02 * expect,
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn normalized_caps_at_one() {
        let wf = sine_wf(7.5, 400, 100.0);
        let spec = stft_spectrogram(&wf).unwrap().normalized();
        let m = spec.max_value();
        assert_eq!(m, 1.0);
        let zero = Spectrogram::zeros(4, 41, 3, 0.2, 1.25).normalized();
        assert!(zero.data.iter().all(|&v| v == 0.0));
    }
}
