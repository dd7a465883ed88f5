//! Matched filtering by normalized cross-correlation.

use super::{Detection, Method};
use crate::error::{CredError, Result};
use crate::waveio::Waveform3C;
use rayon::prelude::*;

/// Channel-averaged zero-normalized cross-correlation of `template` against
/// every alignment of `trace`. Entry `k` correlates the template with the
/// trace segment starting at sample `k`, with the three channels zero-lag
/// aligned and averaged. A channel whose template or segment is constant
/// carries no correlation evidence and contributes 0 at that alignment.
/// Every per-channel value is clamped to `[-1, 1]`, so the average is too.
pub fn ncc_profile(trace: &Waveform3C, template: &Waveform3C) -> Result<Vec<f64>> {
    let n = trace.len();
    let m = template.len();
    if m == 0 || m >= n {
        return Err(CredError::TemplateTooLong {
            template: m,
            trace: n,
        });
    }
    if (trace.sampling_rate - template.sampling_rate).abs() > 1e-9 {
        return Err(CredError::MisalignedInputs(format!(
            "trace at {} Hz, template at {} Hz",
            trace.sampling_rate, template.sampling_rate
        )));
    }

    struct ChannelStats<'a> {
        trace: &'a [f64],
        template: &'a [f64],
        /// Prefix sums of the trace and its square: sum over [0, i).
        sum1: Vec<f64>,
        sum2: Vec<f64>,
        t_mean: f64,
        /// Centered template energy, sum of (t - t_mean)^2.
        t_var: f64,
    }

    let channels: Vec<ChannelStats> = trace
        .channels()
        .into_iter()
        .zip(template.channels())
        .map(|(x, t)| {
            let mut sum1 = vec![0.0f64; n + 1];
            let mut sum2 = vec![0.0f64; n + 1];
            for (i, &v) in x.iter().enumerate() {
                sum1[i + 1] = sum1[i] + v;
                sum2[i + 1] = sum2[i] + v * v;
            }
            let t_mean = t.iter().sum::<f64>() / m as f64;
            let t_var = t.iter().map(|v| (v - t_mean) * (v - t_mean)).sum::<f64>();
            ChannelStats {
                trace: x,
                template: t,
                sum1,
                sum2,
                t_mean,
                t_var,
            }
        })
        .collect();

    Ok((0..=n - m)
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for ch in &channels {
                if ch.t_var <= 0.0 {
                    continue;
                }
                let w_sum = ch.sum1[k + m] - ch.sum1[k];
                let w_sq = ch.sum2[k + m] - ch.sum2[k];
                let w_var = w_sq - w_sum * w_sum / m as f64;
                if w_var <= 0.0 {
                    continue;
                }
                let cross: f64 = ch.trace[k..k + m]
                    .iter()
                    .zip(ch.template)
                    .map(|(x, t)| x * t)
                    .sum();
                let cov = cross - ch.t_mean * w_sum;
                acc += (cov / (w_var * ch.t_var).sqrt()).clamp(-1.0, 1.0);
            }
            acc / 3.0
        })
        .collect())
}

/// Detects occurrences of a known waveform: local maxima of the
/// [`ncc_profile`] at or above `threshold`, keeping the strongest peak
/// whenever two candidates sit within one template length of each other.
/// Each detection spans the matched segment and scores its correlation.
pub fn template_match(
    trace: &Waveform3C,
    template: &Waveform3C,
    threshold: f64,
) -> Result<Vec<Detection>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(CredError::InvalidConfig(format!(
            "correlation threshold must be in (0, 1], got {threshold}"
        )));
    }
    let ncc = ncc_profile(trace, template)?;
    Ok(peaks_from_profile(
        &ncc,
        template.len(),
        trace.sampling_rate,
        threshold,
    ))
}

/// Peak extraction over a precomputed correlation profile: local maxima at
/// or above `threshold`, strongest kept within one template length. Split
/// out from [`template_match`] so threshold sweeps can reuse one profile.
pub fn peaks_from_profile(
    ncc: &[f64],
    template_len: usize,
    rate: f64,
    threshold: f64,
) -> Vec<Detection> {
    let m = template_len;
    let mut candidates: Vec<usize> = (0..ncc.len())
        .filter(|&k| {
            ncc[k] >= threshold
                && (k == 0 || ncc[k] >= ncc[k - 1])
                && (k + 1 == ncc.len() || ncc[k] >= ncc[k + 1])
        })
        .collect();
    // Strongest peak first; earlier alignment breaks ties.
    candidates.sort_by(|&a, &b| ncc[b].total_cmp(&ncc[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    'next: for k in candidates {
        for &other in &kept {
            if k.abs_diff(other) < m {
                continue 'next;
            }
        }
        kept.push(k);
    }
    kept.sort_unstable();

    kept.into_iter()
        .map(|k| Detection {
            method: Method::Template,
            start_s: k as f64 / rate,
            end_s: (k + m) as f64 / rate,
            peak_score: ncc[k],
        })
        .collect()
}
