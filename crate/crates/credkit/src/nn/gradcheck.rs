//! Central finite-difference verification of handwritten backward passes.
//!
//! Every layer packs its parameters (and optionally its input) into a flat
//! f64 vector, exposes the loss as a closure over that vector, and compares
//! the analytic gradient entry by entry. The loss is a fixed random linear
//! projection of the layer output, which exercises all output paths.

/// Coordinates where both gradients sit below this magnitude carry no
/// signal: the central difference of a flat coordinate is pure floating
/// point cancellation noise (~|f|*2^-52/eps), so holding it to a relative
/// standard would flag noise, not bugs. The floor keeps such coordinates
/// on an absolute standard instead; any genuine error of magnitude above
/// the floor still produces a near-1 ratio.
const DENOM_FLOOR: f64 = 1e-5;

/// Max relative error between `analytic` and central differences of `f` at
/// `theta`, with step `eps`. Relative error uses
/// max(|g_a|, |g_n|, [`DENOM_FLOOR`]) as the denominator.
pub fn grad_check(
    mut f: impl FnMut(&[f64]) -> f64,
    theta: &[f64],
    analytic: &[f64],
    eps: f64,
) -> f64 {
    assert_eq!(theta.len(), analytic.len(), "gradient length mismatch");
    let mut buf = theta.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..theta.len() {
        buf[i] = theta[i] + eps;
        let fp = f(&buf);
        buf[i] = theta[i] - eps;
        let fm = f(&buf);
        buf[i] = theta[i];
        let numeric = (fp - fm) / (2.0 * eps);
        let rel =
            (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(DENOM_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_verifies() {
        // f(x) = sum x_i^2 has gradient 2x
        let theta = vec![0.4, -1.3, 2.0];
        let analytic: Vec<f64> = theta.iter().map(|x| 2.0 * x).collect();
        let err = grad_check(|t| t.iter().map(|x| x * x).sum(), &theta, &analytic, 1e-5);
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let theta = vec![1.0, 2.0];
        let wrong = vec![2.0, 3.0];
        let err = grad_check(|t| t.iter().map(|x| x * x).sum(), &theta, &wrong, 1e-5);
        assert!(err > 0.1, "err {err}");
    }
}
