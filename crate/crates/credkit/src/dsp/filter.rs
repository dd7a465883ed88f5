//! Butterworth band-pass design and zero-phase filtering.
//!
//! The design path is the classical one: analog Butterworth prototype,
//! lowpass-to-bandpass transform, bilinear transform with frequency
//! pre-warping, then grouping into second-order sections. An order-4
//! prototype yields an 8-pole band-pass (4 biquads). Zero phase comes from
//! forward-backward application with odd extension at both ends, which
//! squares the magnitude response and cancels the phase.

use crate::error::{CredError, Result};

#[derive(Debug, Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
    fn div(self, o: Complex) -> Complex {
        let d = o.re * o.re + o.im * o.im;
        Complex::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
    fn scale(self, k: f64) -> Complex {
        Complex::new(self.re * k, self.im * k)
    }
    fn sqrt(self) -> Complex {
        let r = (self.re * self.re + self.im * self.im).sqrt().sqrt();
        let theta = self.im.atan2(self.re) / 2.0;
        Complex::new(r * theta.cos(), r * theta.sin())
    }
    fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// One biquad in direct form II transposed: b0..b2 over 1, a1, a2.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

/// Cascade of second-order sections.
#[derive(Debug, Clone)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

/// Butterworth band-pass of prototype order `order` (2*order poles).
///
/// Corners are in Hz. The high corner is clamped to 0.495*fs so a corner
/// sitting exactly on Nyquist cannot degenerate the bilinear transform.
pub fn butter_bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<SosFilter> {
    if !(fs > 0.0) {
        return Err(CredError::NonPositiveSamplingRate(fs));
    }
    let high_hz = high_hz.min(0.495 * fs);
    if !(low_hz > 0.0 && low_hz < high_hz) {
        return Err(CredError::InvalidConfig(format!(
            "band corners {low_hz}..{high_hz} Hz invalid at fs {fs}"
        )));
    }
    let fs2 = 2.0 * fs;
    // pre-warped analog corner frequencies
    let w1 = fs2 * (std::f64::consts::PI * low_hz / fs).tan();
    let w2 = fs2 * (std::f64::consts::PI * high_hz / fs).tan();
    let w0sq = w1 * w2;
    let bw = w2 - w1;

    // analog prototype poles on the unit circle, left half plane
    let n = order;
    let mut bp_poles: Vec<Complex> = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = std::f64::consts::PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let p = Complex::new(theta.cos(), theta.sin());
        // lowpass-to-bandpass: s -> (s^2 + w0^2) / (bw s)
        let half = p.scale(bw / 2.0);
        let disc = half.mul(half).sub(Complex::new(w0sq, 0.0)).sqrt();
        bp_poles.push(half.add(disc));
        bp_poles.push(half.sub(disc));
    }

    // bilinear transform; digital zeros are n at +1 and n at -1
    let mut gain_num = 1.0;
    let mut gain_den = Complex::new(1.0, 0.0);
    let mut z_poles: Vec<Complex> = Vec::with_capacity(2 * n);
    for &p in &bp_poles {
        let denom = Complex::new(fs2, 0.0).sub(p);
        z_poles.push(Complex::new(fs2, 0.0).add(p).div(denom));
        gain_den = gain_den.mul(denom);
        gain_num *= bw * fs2; // bw^n * (2fs)^n in total
    }
    // gain_num accumulated one bw*2fs factor per pole = (bw*2fs)^(2n); the
    // analog gain is bw^n and s^n contributes (2fs)^n, so take the root.
    let gain = gain_num.sqrt() / gain_den.re;
    debug_assert!(
        gain_den.im.abs() < gain_den.re.abs() * 1e-8,
        "pole product must be real"
    );

    // keep one representative of each conjugate pair
    let mut upper: Vec<Complex> = z_poles.iter().copied().filter(|p| p.im > 0.0).collect();
    if upper.len() != n {
        return Err(CredError::InvalidConfig(format!(
            "band {low_hz}..{high_hz} Hz at fs {fs} produced degenerate poles"
        )));
    }
    // sections ordered by pole radius ascending keeps intermediate signals tame
    upper.sort_by(|x, y| x.abs2().partial_cmp(&y.abs2()).unwrap());

    // each section takes one zero at +1 and one at -1: numerator z^2 - 1
    let mut sections: Vec<Biquad> = upper
        .iter()
        .map(|p| Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * p.re, p.abs2()],
        })
        .collect();
    for b in &mut sections[0].b {
        *b *= gain;
    }
    Ok(SosFilter { sections })
}

impl SosFilter {
    /// Single forward pass, zero initial state.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let mut z1 = 0.0;
            let mut z2 = 0.0;
            for v in &mut y {
                let xin = *v;
                let out = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[0] * out + z2;
                z2 = s.b[2] * xin - s.a[1] * out;
                *v = out;
            }
        }
        y
    }

    /// Forward pass with per-section state seeded to the constant-input
    /// steady state of the first sample, as zero-phase filtering expects.
    fn filter_steady(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let x0 = y.first().copied().unwrap_or(0.0);
            let h1 = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
            let y0 = h1 * x0;
            let mut z1 = (s.b[1] + s.b[2]) * x0 - (s.a[0] + s.a[1]) * y0;
            let mut z2 = s.b[2] * x0 - s.a[1] * y0;
            for v in &mut y {
                let xin = *v;
                let out = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[0] * out + z2;
                z2 = s.b[2] * xin - s.a[1] * out;
                *v = out;
            }
        }
        y
    }

    /// Zero-phase filtering: odd-extend both ends, filter forward, reverse,
    /// filter again, reverse, trim. Magnitude response is squared.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = 9 * (2 * self.sections.len() + 1);
        if x.len() <= pad {
            return Err(CredError::TraceTooShort {
                len: x.len(),
                need: pad + 1,
            });
        }
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let first = x[0];
        let last = x[n - 1];
        for i in (1..=pad).rev() {
            ext.push(2.0 * first - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * last - x[n - 1 - i]);
        }

        let mut y = self.filter_steady(&ext);
        y.reverse();
        let mut y = self.filter_steady(&y);
        y.reverse();
        Ok(y[pad..pad + n].to_vec())
    }

    /// |H(e^{j 2 pi f / fs})| of a single pass.
    pub fn gain_at(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / fs;
        let z1 = Complex::new(w.cos(), -w.sin()); // z^-1
        let z2 = z1.mul(z1);
        let mut h = Complex::new(1.0, 0.0);
        for s in &self.sections {
            let num = Complex::new(s.b[0], 0.0)
                .add(z1.scale(s.b[1]))
                .add(z2.scale(s.b[2]));
            let den = Complex::new(1.0, 0.0)
                .add(z1.scale(s.a[0]))
                .add(z2.scale(s.a[1]));
            h = h.mul(num.div(den));
        }
        h.abs2().sqrt()
    }
}
