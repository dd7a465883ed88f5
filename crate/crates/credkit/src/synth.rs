//! Synthetic benchmark construction: Ricker fakes, earthquake-like inserts,
//! SNR-calibrated Gaussian noise, and non-overlapping scene assembly.
//!
//! SNR here is a peak-amplitude ratio: `snr_db = 20 log10(S_A / N_A)` where
//! S_A is the signal peak and N_A the noise peak. Noise generation scales a
//! realized Gaussian segment so the target SNR holds exactly by
//! construction, not just in expectation.

use crate::dsp::filter::butter_bandpass;
use crate::error::{CredError, Result};
use crate::rng::Rng;
use crate::waveio::Waveform3C;
use std::fmt::Write as _;
use std::path::Path;

/// Pointwise Ricker wavelet: r(t) = A (1 - 2 pi^2 f^2 t^2) exp(-pi^2 f^2 t^2).
pub fn ricker_value(peak_freq: f64, amplitude: f64, t: f64) -> f64 {
    let a = std::f64::consts::PI * std::f64::consts::PI * peak_freq * peak_freq * t * t;
    amplitude * (1.0 - 2.0 * a) * (-a).exp()
}

/// Ricker wavelet sampled on t in [-3/f, 3/f]. Odd length; the center
/// sample is exactly `amplitude`; tails there are below 1e-16 of the peak.
pub fn ricker(peak_freq: f64, sampling_rate: f64, amplitude: f64) -> Result<Vec<f64>> {
    if !(peak_freq > 0.0) || sampling_rate <= 2.0 * peak_freq {
        return Err(CredError::FrequencyAboveNyquist {
            freq: peak_freq,
            rate: sampling_rate,
        });
    }
    let half = (3.0 / peak_freq * sampling_rate).round() as i64;
    let mut out = Vec::with_capacity((2 * half + 1) as usize);
    for i in -half..=half {
        out.push(ricker_value(peak_freq, amplitude, i as f64 / sampling_rate));
    }
    Ok(out)
}

/// Peak-amplitude SNR in dB.
pub fn snr_db(signal_peak: f64, noise_peak: f64) -> Result<f64> {
    if signal_peak <= 0.0 {
        return Err(CredError::NonPositivePeak(signal_peak));
    }
    if noise_peak <= 0.0 {
        return Err(CredError::NonPositivePeak(noise_peak));
    }
    Ok(20.0 * (signal_peak / noise_peak).log10())
}

/// White Gaussian noise added to `clean`, scaled so the realized noise peak
/// is exactly `signal_peak * 10^(-target_db/20)`. Returns the noisy trace
/// and the realized noise peak.
pub fn noise_for_snr_with_peak(
    clean: &Waveform3C,
    signal_peak: f64,
    target_db: f64,
    seed: u64,
) -> Result<(Waveform3C, f64)> {
    if signal_peak <= 0.0 {
        return Err(CredError::AllZeroClean);
    }
    let n = clean.len();
    let mut noise = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut raw_peak = 0.0_f64;
    for (c, chan) in noise.iter_mut().enumerate() {
        let mut rng = Rng::derive(seed, c as u64);
        for v in chan.iter_mut() {
            *v = rng.next_gauss();
            raw_peak = raw_peak.max(v.abs());
        }
    }
    if raw_peak == 0.0 {
        return Err(CredError::NonPositivePeak(0.0));
    }
    let target_peak = signal_peak * 10f64.powf(-target_db / 20.0);
    let k = target_peak / raw_peak;
    let mut realized = 0.0_f64;
    for chan in noise.iter_mut() {
        for v in chan.iter_mut() {
            *v *= k;
            realized = realized.max(v.abs());
        }
    }
    let mut out = clean.clone();
    for (dst, src) in out.channels_mut().into_iter().zip(noise.iter()) {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += s;
        }
    }
    Ok((out, realized))
}

/// As [`noise_for_snr_with_peak`], using the clean trace's own peak as S_A.
pub fn noise_for_snr(clean: &Waveform3C, target_db: f64, seed: u64) -> Result<Waveform3C> {
    let peak = clean.peak_abs();
    if peak == 0.0 {
        return Err(CredError::AllZeroClean);
    }
    Ok(noise_for_snr_with_peak(clean, peak, target_db, seed)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthKind {
    Earthquake,
    NonEarthquake,
}

impl TruthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TruthKind::Earthquake => "earthquake",
            TruthKind::NonEarthquake => "nonearthquake",
        }
    }
}

/// Ground-truth row for one inserted signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub kind: TruthKind,
    pub start_s: f64,
    pub end_s: f64,
    pub peak_amplitude: f64,
}

/// A scene with its ground truth. `snr_db` is infinite until noise is added.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub trace: Waveform3C,
    pub truth: Vec<TruthRecord>,
    pub snr_db: f64,
}

impl SyntheticScene {
    /// Same scene with Gaussian noise at `target_db`, using the
    /// unit-normalized insert peak (1.0) as the signal amplitude.
    pub fn with_noise(&self, target_db: f64, seed: u64) -> Result<SyntheticScene> {
        let (trace, _) = noise_for_snr_with_peak(&self.trace, 1.0, target_db, seed)?;
        Ok(SyntheticScene {
            trace,
            truth: self.truth.clone(),
            snr_db: target_db,
        })
    }
}

/// Place earthquake inserts and single-channel fakes at random
/// non-overlapping positions with at least `min_gap_s` between neighbors.
/// Event inserts land verbatim on all three channels; fakes are written
/// identically to e, n, and z. Placement order and offsets are seeded.
pub fn assemble_scene(
    events: &[Waveform3C],
    fakes: &[Vec<f64>],
    duration_s: f64,
    min_gap_s: f64,
    seed: u64,
) -> Result<SyntheticScene> {
    let rate = events
        .first()
        .map(|e| e.sampling_rate)
        .unwrap_or(crate::dsp::TARGET_RATE_HZ);
    for ev in events {
        if ev.sampling_rate != rate {
            return Err(CredError::MisalignedInputs(format!(
                "event sampled at {} Hz in a {} Hz scene",
                ev.sampling_rate, rate
            )));
        }
    }
    let scene_len = (duration_s * rate).round() as usize;
    let gap_len = (min_gap_s * rate).round() as usize;

    enum Insert<'a> {
        Event(&'a Waveform3C),
        Fake(&'a [f64]),
    }
    let mut inserts: Vec<Insert> = events
        .iter()
        .map(Insert::Event)
        .chain(fakes.iter().map(|f| Insert::Fake(f)))
        .collect();
    let total: usize = inserts
        .iter()
        .map(|i| match i {
            Insert::Event(e) => e.len(),
            Insert::Fake(f) => f.len(),
        })
        .sum();
    let k = inserts.len();
    let need = total + gap_len * k.saturating_sub(1);
    if need > scene_len {
        return Err(CredError::DoesNotFit {
            need_s: need as f64 / rate,
            have_s: duration_s,
        });
    }

    let mut rng = Rng::derive(seed, 0x5CE11E);
    rng.shuffle(&mut inserts);
    // order-statistics construction: k sorted draws from the free slack give
    // uniformly random non-overlapping positions with the required gaps
    let slack = scene_len - need;
    let mut offsets: Vec<usize> = (0..k).map(|_| rng.next_index(slack + 1)).collect();
    offsets.sort_unstable();

    let mut scene = Waveform3C::zeros("synth", 0.0, rate, scene_len);
    let mut truth = Vec::with_capacity(k);
    let mut cursor = 0usize;
    for (idx, insert) in inserts.iter().enumerate() {
        let pos = offsets[idx] + cursor;
        match insert {
            Insert::Event(ev) => {
                // placements never overlap, so copying keeps inserts verbatim
                // down to the bit (+= would rewrite signed zeros)
                for (dst, src) in scene.channels_mut().into_iter().zip(ev.channels()) {
                    dst[pos..pos + ev.len()].copy_from_slice(src);
                }
                truth.push(TruthRecord {
                    kind: TruthKind::Earthquake,
                    start_s: pos as f64 / rate,
                    end_s: (pos + ev.len()) as f64 / rate,
                    peak_amplitude: ev.peak_abs(),
                });
                cursor += ev.len() + gap_len;
            }
            Insert::Fake(f) => {
                let peak = f.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
                for dst in scene.channels_mut() {
                    dst[pos..pos + f.len()].copy_from_slice(f);
                }
                truth.push(TruthRecord {
                    kind: TruthKind::NonEarthquake,
                    start_s: pos as f64 / rate,
                    end_s: (pos + f.len()) as f64 / rate,
                    peak_amplitude: peak,
                });
                cursor += f.len() + gap_len;
            }
        }
    }
    Ok(SyntheticScene {
        trace: scene,
        truth,
        snr_db: f64::INFINITY,
    })
}

/// An earthquake-like insert with known phase arrivals.
#[derive(Debug, Clone)]
pub struct EventInsert {
    pub trace: Waveform3C,
    /// Seconds from insert start.
    pub p_s: f64,
    pub s_s: f64,
}

/// Stochastic three-component earthquake insert: a sharp higher-frequency
/// P onset (strongest on z), a larger lower-frequency S onset (strongest
/// on the horizontals), and an exponential coda spanning roughly
/// [P, P + 3(S-P)]. Jointly peak-normalized to 1.
pub fn synthetic_event(duration_s: f64, sampling_rate: f64, seed: u64) -> Result<EventInsert> {
    let n = (duration_s * sampling_rate).round() as usize;
    if n < 400 {
        return Err(CredError::TraceTooShort { len: n, need: 400 });
    }
    let mut rng = Rng::derive(seed, 0xE4E27);
    let p = rng.uniform(3.0, 8.0);
    let d_max = ((duration_s - 1.0 - p) / 3.0).min(6.0);
    let d = rng.uniform(2.0, d_max.max(2.1));
    let s = p + d;

    let p_band = butter_bandpass(4, 6.0, 18.0, sampling_rate)?;
    let s_band = butter_bandpass(4, 1.5, 8.0, sampling_rate)?;
    let tau_p = (0.3 * d).max(0.5);
    let tau_s = 1.1 * d;
    // (P amplitude, S amplitude) per channel: z favors P, horizontals favor S
    let mix = [(0.35, 1.6), (0.35, 1.6), (1.0, 0.9)];

    let mut chans: Vec<Vec<f64>> = Vec::with_capacity(3);
    for (c, (p_amp, s_amp)) in mix.iter().enumerate() {
        let mut crng = Rng::derive(seed, 0xC0DA + c as u64);
        let raw_p: Vec<f64> = (0..n).map(|_| crng.next_gauss()).collect();
        let raw_s: Vec<f64> = (0..n).map(|_| crng.next_gauss()).collect();
        let p_noise = p_band.filtfilt(&raw_p)?;
        let s_noise = s_band.filtfilt(&raw_s)?;
        let mut chan = vec![0.0; n];
        for (i, v) in chan.iter_mut().enumerate() {
            let t = i as f64 / sampling_rate;
            let env_p = if t >= p {
                (-(t - p) / tau_p).exp()
            } else {
                0.0
            };
            let env_s = if t >= s {
                (-(t - s) / tau_s).exp()
            } else {
                0.0
            };
            *v = p_amp * env_p * p_noise[i] + s_amp * env_s * s_noise[i];
        }
        chans.push(chan);
    }
    let mut wf = Waveform3C::new(
        format!("synth-ev-{seed}"),
        0.0,
        sampling_rate,
        chans.remove(0),
        chans.remove(0),
        chans.remove(0),
    )?;
    let peak = wf.peak_abs();
    if peak == 0.0 {
        return Err(CredError::AllZeroClean);
    }
    for chan in wf.channels_mut() {
        for v in chan.iter_mut() {
            *v /= peak;
        }
    }
    Ok(EventInsert {
        trace: wf,
        p_s: p,
        s_s: s,
    })
}

pub fn write_truth(path: impl AsRef<Path>, truth: &[TruthRecord]) -> Result<()> {
    let mut out = String::from("kind,start_s,end_s,peak_amplitude\n");
    for t in truth {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t.kind.as_str(),
            t.start_s,
            t.end_s,
            t.peak_amplitude
        );
    }
    crate::waveio::write_text(path.as_ref(), &out)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<TruthRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CredError::MissingFile(path.to_path_buf())
        } else {
            CredError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "kind,start_s,end_s,peak_amplitude" => {}
        other => {
            return Err(CredError::MalformedHeader(format!(
                "expected truth header, got {:?}",
                other.map(|(_, h)| h)
            )))
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CredError::MalformedRow {
                line: idx + 1,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let kind = match fields[0] {
            "earthquake" => TruthKind::Earthquake,
            "nonearthquake" => TruthKind::NonEarthquake,
            other => {
                return Err(CredError::MalformedRow {
                    line: idx + 1,
                    reason: format!("unknown kind {other:?}"),
                })
            }
        };
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| CredError::MalformedRow {
                line: idx + 1,
                reason: format!("bad float {s:?}"),
            })
        };
        out.push(TruthRecord {
            kind,
            start_s: num(fields[1])?,
            end_s: num(fields[2])?,
            peak_amplitude: num(fields[3])?,
        });
    }
    Ok(out)
}
