//! Rational-ratio polyphase resampling with a windowed-sinc anti-alias FIR.

use crate::error::{CredError, Result};

/// Best rational approximation of `x` with denominator <= `max_den`,
/// by continued fractions.
fn rational_approx(x: f64, max_den: u64) -> (u64, u64) {
    let mut a = x.floor();
    let mut frac = x - a;
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, a as u64, 1u64);
    for _ in 0..64 {
        if frac < 1e-12 {
            break;
        }
        let inv = 1.0 / frac;
        a = inv.floor();
        frac = inv - a;
        let p2 = (a as u64).saturating_mul(p1).saturating_add(p0);
        let q2 = (a as u64).saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    (p1, q1.max(1))
}

/// Up/down factors turning `from_hz` into `to_hz` exactly.
pub fn rate_ratio(from_hz: f64, to_hz: f64) -> Result<(usize, usize)> {
    if from_hz <= 0.0 || to_hz <= 0.0 {
        return Err(CredError::NonPositiveSamplingRate(from_hz.min(to_hz)));
    }
    let (up, down) = rational_approx(to_hz / from_hz, 256);
    let achieved = from_hz * up as f64 / down as f64;
    if (achieved - to_hz).abs() > 1e-9 * to_hz {
        return Err(CredError::InvalidConfig(format!(
            "no small rational ratio takes {from_hz} Hz to {to_hz} Hz"
        )));
    }
    let g = gcd(up, down);
    Ok(((up / g) as usize, (down / g) as usize))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Resample by the rational factor up/down. Output length is
/// ceil(len * up / down); the first output sample is time-aligned with the
/// first input sample, and the FIR is a Hann-windowed sinc cut at the
/// narrower of the two Nyquists.
pub fn resample_poly(x: &[f64], up: usize, down: usize) -> Vec<f64> {
    assert!(up > 0 && down > 0);
    if up == down {
        return x.to_vec();
    }
    let n_out = (x.len() * up).div_ceil(down);
    let max_ud = up.max(down);
    let half = 10 * max_ud;
    let taps = 2 * half + 1;
    // kernel at the upsampled rate, gain `up` to undo zero insertion
    let fc = 0.5 / max_ud as f64;
    let mut h = vec![0.0f64; taps];
    for (k, hk) in h.iter_mut().enumerate() {
        let m = k as f64 - half as f64;
        let sinc = if m == 0.0 {
            2.0 * fc
        } else {
            (2.0 * std::f64::consts::PI * fc * m).sin() / (std::f64::consts::PI * m)
        };
        let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (taps - 1) as f64).cos());
        *hk = up as f64 * sinc * w;
    }

    let mut y = vec![0.0f64; n_out];
    for (n, yn) in y.iter_mut().enumerate() {
        // y[n] = sum_j x[j] h[half + n*down - j*up]
        let t = n * down;
        // j range where 0 <= half + t - j*up < taps
        let j_min = (t + half + 1).saturating_sub(taps).div_ceil(up);
        let j_max = ((t + half) / up).min(x.len().saturating_sub(1));
        let mut acc = 0.0;
        for j in j_min..=j_max {
            acc += x[j] * h[half + t - j * up];
        }
        *yn = acc;
    }
    y
}
