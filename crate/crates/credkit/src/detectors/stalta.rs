//! Short-term-average / long-term-average energy trigger.

use super::{Detection, Method};
use crate::error::{CredError, Result};

/// Windows and thresholds for [`sta_lta`]. Both windows trail the current
/// sample; the ratio of their mean squared amplitudes is the trigger
/// statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaLtaConfig {
    pub sta_s: f64,
    pub lta_s: f64,
    pub trigger_on: f64,
    pub trigger_off: f64,
}

impl Default for StaLtaConfig {
    fn default() -> Self {
        StaLtaConfig {
            sta_s: 1.0,
            lta_s: 30.0,
            trigger_on: 4.0,
            trigger_off: 1.5,
        }
    }
}

impl StaLtaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sta_s > 0.0 && self.sta_s < self.lta_s) {
            return Err(CredError::InvalidConfig(format!(
                "need 0 < sta_s < lta_s, got sta_s={} lta_s={}",
                self.sta_s, self.lta_s
            )));
        }
        if !(self.trigger_on > 0.0 && self.trigger_off < self.trigger_on) {
            return Err(CredError::InvalidConfig(format!(
                "need 0 < trigger_on and trigger_off < trigger_on, got on={} off={}",
                self.trigger_on, self.trigger_off
            )));
        }
        Ok(())
    }

    /// Window lengths in samples at `rate`: `(sta_n, lta_n)`.
    pub fn window_samples(&self, rate: f64) -> Result<(usize, usize)> {
        let sta_n = ((self.sta_s * rate).round() as usize).max(1);
        let lta_n = (self.lta_s * rate).round() as usize;
        if lta_n <= sta_n {
            return Err(CredError::InvalidConfig(format!(
                "windows collapse at {rate} Hz: sta {sta_n} samples, lta {lta_n}"
            )));
        }
        Ok((sta_n, lta_n))
    }
}

/// Trigger ratio per sample: mean squared amplitude over the short trailing
/// window divided by the mean over the long trailing window. Defined from
/// the first sample with a full long window, so entry `j` of the result
/// belongs to sample `j + lta_n - 1`. A silent long window yields 0.
pub fn sta_lta_ratio(trace: &[f64], rate: f64, cfg: &StaLtaConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if rate <= 0.0 {
        return Err(CredError::NonPositiveSamplingRate(rate));
    }
    let (sta_n, lta_n) = cfg.window_samples(rate)?;
    if trace.len() <= lta_n {
        return Err(CredError::TraceTooShort {
            len: trace.len(),
            need: lta_n + 1,
        });
    }

    // Prefix sums of squared amplitude: energy[i] = sum of x[0..i]^2.
    let mut energy = vec![0.0f64; trace.len() + 1];
    for (i, &x) in trace.iter().enumerate() {
        energy[i + 1] = energy[i] + x * x;
    }
    let mean = |lo: usize, hi: usize| (energy[hi] - energy[lo]) / (hi - lo) as f64;

    Ok(((lta_n - 1)..trace.len())
        .map(|i| {
            let sta = mean(i + 1 - sta_n, i + 1);
            let lta = mean(i + 1 - lta_n, i + 1);
            if lta > 0.0 {
                sta / lta
            } else {
                0.0
            }
        })
        .collect())
}

/// Energy-ratio event trigger: a detection opens when the [`sta_lta_ratio`]
/// statistic reaches `trigger_on` and closes when it falls to
/// `trigger_off` (or the trace ends). `peak_score` is the highest ratio
/// inside the interval.
pub fn sta_lta(trace: &[f64], rate: f64, cfg: &StaLtaConfig) -> Result<Vec<Detection>> {
    let ratio = sta_lta_ratio(trace, rate, cfg)?;
    let (_, lta_n) = cfg.window_samples(rate)?;
    Ok(trigger_from_ratio(
        &ratio,
        lta_n - 1,
        trace.len(),
        rate,
        cfg.trigger_on,
        cfg.trigger_off,
    ))
}

/// On/off trigger over a precomputed ratio stream whose entry 0 belongs to
/// sample `first_sample`. Split out from [`sta_lta`] so threshold sweeps
/// can reuse one ratio computation.
pub fn trigger_from_ratio(
    ratio: &[f64],
    first_sample: usize,
    trace_len: usize,
    rate: f64,
    trigger_on: f64,
    trigger_off: f64,
) -> Vec<Detection> {
    let mut dets = Vec::new();
    let mut open: Option<(usize, f64)> = None;
    for (j, &r) in ratio.iter().enumerate() {
        let i = j + first_sample;
        match open {
            None if r >= trigger_on => open = Some((i, r)),
            Some((start, peak)) => {
                let peak = peak.max(r);
                if r <= trigger_off {
                    dets.push(Detection {
                        method: Method::StaLta,
                        start_s: start as f64 / rate,
                        end_s: i as f64 / rate,
                        peak_score: peak,
                    });
                    open = None;
                } else {
                    open = Some((start, peak));
                }
            }
            None => {}
        }
    }
    if let Some((start, peak)) = open {
        dets.push(Detection {
            method: Method::StaLta,
            start_s: start as f64 / rate,
            end_s: trace_len as f64 / rate,
            peak_score: peak,
        });
    }
    dets
}
