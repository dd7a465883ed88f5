//! LSTM cell, unidirectional layer, and bidirectional layer with full
//! backpropagation through time.
//!
//! Each gate matrix acts on the concatenation [a_prev; x_t]:
//!   c~ = tanh(W_c [a;x] + b_c)      candidate cell state
//!   u  = sigmoid(W_u [a;x] + b_u)   update gate
//!   f  = sigmoid(W_f [a;x] + b_f)   forget gate
//!   o  = sigmoid(W_o [a;x] + b_o)   output gate
//!   c_t = u*c~ + f*c_prev,  a_t = o*tanh(c_t)   (elementwise)

use super::activation::{dsigmoid_from_y, dtanh_from_y, sigmoid};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::{CredError, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    /// Gate matrices, each [hidden, hidden + input].
    pub w_c: Tensor<T>,
    pub w_u: Tensor<T>,
    pub w_f: Tensor<T>,
    pub w_o: Tensor<T>,
    /// Gate biases, each [hidden].
    pub b_c: Tensor<T>,
    pub b_u: Tensor<T>,
    pub b_f: Tensor<T>,
    pub b_o: Tensor<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl<T: Real> LstmParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(&[hidden, hidden + input]);
        let b = || Tensor::zeros(&[hidden]);
        LstmParams {
            w_c: w(),
            w_u: w(),
            w_f: w(),
            w_o: w(),
            b_c: b(),
            b_u: b(),
            b_f: b(),
            b_o: b(),
        }
    }

    /// Scaled-uniform init over each gate matrix; forget bias starts at +1
    /// so early training retains memory.
    pub fn init(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (hidden + input + hidden) as f64).sqrt();
        let mut p = Self::zeros(input, hidden);
        for w in [&mut p.w_c, &mut p.w_u, &mut p.w_f, &mut p.w_o] {
            for v in &mut w.data {
                *v = T::from_f64(rng.uniform(-limit, limit));
            }
        }
        for v in &mut p.b_f.data {
            *v = T::ONE;
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.w_c.shape[0]
    }

    pub fn input_size(&self) -> usize {
        self.w_c.shape[1] - self.w_c.shape[0]
    }
}

/// Per-step intermediates kept for backpropagation.
#[derive(Debug, Clone)]
pub struct CellCache<T> {
    /// [a_prev; x_t]
    z: Vec<T>,
    c_tilde: Vec<T>,
    u: Vec<T>,
    f: Vec<T>,
    o: Vec<T>,
    tanh_c: Vec<T>,
    c_prev: Vec<T>,
}

fn gate<T: Real>(w: &Tensor<T>, b: &Tensor<T>, z: &[T], out: &mut [T]) {
    let cols = w.shape[1];
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w.data[i * cols..(i + 1) * cols];
        let mut acc = b.data[i];
        for (wv, zv) in row.iter().zip(z) {
            acc += *wv * *zv;
        }
        *o = acc;
    }
}

fn cell_forward<T: Real>(
    x: &[T],
    a_prev: &[T],
    c_prev: &[T],
    p: &LstmParams<T>,
) -> (Vec<T>, Vec<T>, CellCache<T>) {
    let h = p.hidden();
    let mut z = Vec::with_capacity(h + x.len());
    z.extend_from_slice(a_prev);
    z.extend_from_slice(x);

    let mut c_tilde = vec![T::ZERO; h];
    let mut u = vec![T::ZERO; h];
    let mut f = vec![T::ZERO; h];
    let mut o = vec![T::ZERO; h];
    gate(&p.w_c, &p.b_c, &z, &mut c_tilde);
    gate(&p.w_u, &p.b_u, &z, &mut u);
    gate(&p.w_f, &p.b_f, &z, &mut f);
    gate(&p.w_o, &p.b_o, &z, &mut o);
    for i in 0..h {
        c_tilde[i] = c_tilde[i].tanh();
        u[i] = sigmoid(u[i]);
        f[i] = sigmoid(f[i]);
        o[i] = sigmoid(o[i]);
    }

    let mut c = vec![T::ZERO; h];
    let mut tanh_c = vec![T::ZERO; h];
    let mut a = vec![T::ZERO; h];
    for i in 0..h {
        c[i] = u[i] * c_tilde[i] + f[i] * c_prev[i];
        tanh_c[i] = c[i].tanh();
        a[i] = o[i] * tanh_c[i];
    }
    let cache = CellCache {
        z,
        c_tilde,
        u,
        f,
        o,
        tanh_c,
        c_prev: c_prev.to_vec(),
    };
    (a, c, cache)
}

/// Single step: returns (a_t, c_t).
pub fn lstm_cell<T: Real>(
    x_t: &Tensor<T>,
    a_prev: &Tensor<T>,
    c_prev: &Tensor<T>,
    p: &LstmParams<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let h = p.hidden();
    if x_t.numel() != p.input_size() || a_prev.numel() != h || c_prev.numel() != h {
        return Err(CredError::ShapeMismatch(format!(
            "lstm_cell: x {} a {} c {} vs input {} hidden {}",
            x_t.numel(),
            a_prev.numel(),
            c_prev.numel(),
            p.input_size(),
            h
        )));
    }
    let (a, c, _) = cell_forward(&x_t.data, &a_prev.data, &c_prev.data, p);
    Ok((Tensor::from_vec(&[h], a)?, Tensor::from_vec(&[h], c)?))
}

/// Gradients of one cell given upstream da/dc. Returns
/// (dx, da_prev, dc_prev) and accumulates parameter gradients into `grads`.
pub fn lstm_cell_backward<T: Real>(
    p: &LstmParams<T>,
    cache: &CellCache<T>,
    da: &[T],
    dc_upstream: &[T],
    grads: &mut LstmParams<T>,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let h = p.hidden();
    let zlen = cache.z.len();

    let mut dzc = vec![T::ZERO; h];
    let mut dzu = vec![T::ZERO; h];
    let mut dzf = vec![T::ZERO; h];
    let mut dzo = vec![T::ZERO; h];
    let mut dc_prev = vec![T::ZERO; h];
    for i in 0..h {
        let dc = da[i] * cache.o[i] * dtanh_from_y(cache.tanh_c[i]) + dc_upstream[i];
        let do_ = da[i] * cache.tanh_c[i];
        dzo[i] = do_ * dsigmoid_from_y(cache.o[i]);
        dzu[i] = dc * cache.c_tilde[i] * dsigmoid_from_y(cache.u[i]);
        dzc[i] = dc * cache.u[i] * dtanh_from_y(cache.c_tilde[i]);
        dzf[i] = dc * cache.c_prev[i] * dsigmoid_from_y(cache.f[i]);
        dc_prev[i] = dc * cache.f[i];
    }

    let mut dz = vec![T::ZERO; zlen];
    for (w, gw, gb, dzg) in [
        (&p.w_c, &mut grads.w_c, &mut grads.b_c, &dzc),
        (&p.w_u, &mut grads.w_u, &mut grads.b_u, &dzu),
        (&p.w_f, &mut grads.w_f, &mut grads.b_f, &dzf),
        (&p.w_o, &mut grads.w_o, &mut grads.b_o, &dzo),
    ] {
        for i in 0..h {
            let g = dzg[i];
            gb.data[i] += g;
            let wrow = &w.data[i * zlen..(i + 1) * zlen];
            let gwrow = &mut gw.data[i * zlen..(i + 1) * zlen];
            for j in 0..zlen {
                gwrow[j] += g * cache.z[j];
                dz[j] += g * wrow[j];
            }
        }
    }
    let da_prev = dz[..h].to_vec();
    let dx = dz[h..].to_vec();
    (dx, da_prev, dc_prev)
}

/// Layer cache: per-step cell caches in processing order plus the visit
/// order mapping processing step -> sequence index.
pub struct LayerCache<T> {
    steps: Vec<CellCache<T>>,
    order: Vec<usize>,
}

fn visit_order(t_len: usize, dir: Direction) -> Vec<usize> {
    match dir {
        Direction::Forward => (0..t_len).collect(),
        Direction::Backward => (0..t_len).rev().collect(),
    }
}

/// x_seq: [T, input] -> [T, hidden] with zero initial state. The backward
/// direction processes the sequence reversed and writes outputs back to
/// their original positions.
pub fn lstm_layer_cached<T: Real>(
    x_seq: &Tensor<T>,
    p: &LstmParams<T>,
    dir: Direction,
) -> Result<(Tensor<T>, LayerCache<T>)> {
    if x_seq.shape.len() != 2 || x_seq.shape[1] != p.input_size() {
        return Err(CredError::ShapeMismatch(format!(
            "lstm_layer: input {:?}, expected [T, {}]",
            x_seq.shape,
            p.input_size()
        )));
    }
    let t_len = x_seq.shape[0];
    let input = p.input_size();
    let h = p.hidden();
    let order = visit_order(t_len, dir);

    let mut out = Tensor::zeros(&[t_len, h]);
    let mut steps = Vec::with_capacity(t_len);
    let mut a = vec![T::ZERO; h];
    let mut c = vec![T::ZERO; h];
    for &t in &order {
        let x = &x_seq.data[t * input..(t + 1) * input];
        let (a_next, c_next, cache) = cell_forward(x, &a, &c, p);
        out.data[t * h..(t + 1) * h].copy_from_slice(&a_next);
        steps.push(cache);
        a = a_next;
        c = c_next;
    }
    Ok((out, LayerCache { steps, order }))
}

pub fn lstm_layer<T: Real>(
    x_seq: &Tensor<T>,
    p: &LstmParams<T>,
    dir: Direction,
) -> Result<Tensor<T>> {
    Ok(lstm_layer_cached(x_seq, p, dir)?.0)
}

/// BPTT for one direction. `dy` is [T, hidden] aligned to sequence
/// positions; returns ([T, input] gradient, parameter gradients).
pub fn lstm_layer_backward<T: Real>(
    p: &LstmParams<T>,
    cache: &LayerCache<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, LstmParams<T>)> {
    let h = p.hidden();
    let input = p.input_size();
    let t_len = cache.order.len();
    if dy.shape != [t_len, h] {
        return Err(CredError::ShapeMismatch(format!(
            "lstm backward: dy {:?}, expected [{t_len}, {h}]",
            dy.shape
        )));
    }
    let mut grads = LstmParams::zeros(input, h);
    let mut dx = Tensor::zeros(&[t_len, input]);
    let mut da_carry = vec![T::ZERO; h];
    let mut dc_carry = vec![T::ZERO; h];
    for k in (0..t_len).rev() {
        let t = cache.order[k];
        let mut da = dy.data[t * h..(t + 1) * h].to_vec();
        for (d, carry) in da.iter_mut().zip(&da_carry) {
            *d += *carry;
        }
        let (dx_t, da_prev, dc_prev) =
            lstm_cell_backward(p, &cache.steps[k], &da, &dc_carry, &mut grads);
        dx.data[t * input..(t + 1) * input].copy_from_slice(&dx_t);
        da_carry = da_prev;
        dc_carry = dc_prev;
    }
    Ok((dx, grads))
}

/// Outputs of a forward and a backward pass concatenated per step:
/// [T, 2*hidden].
pub fn bilstm_layer<T: Real>(
    x_seq: &Tensor<T>,
    p_fwd: &LstmParams<T>,
    p_bwd: &LstmParams<T>,
) -> Result<Tensor<T>> {
    Ok(bilstm_layer_cached(x_seq, p_fwd, p_bwd)?.0)
}

pub struct BilstmCache<T> {
    fwd: LayerCache<T>,
    bwd: LayerCache<T>,
}

pub fn bilstm_layer_cached<T: Real>(
    x_seq: &Tensor<T>,
    p_fwd: &LstmParams<T>,
    p_bwd: &LstmParams<T>,
) -> Result<(Tensor<T>, BilstmCache<T>)> {
    if p_fwd.hidden() != p_bwd.hidden() {
        return Err(CredError::ShapeMismatch(format!(
            "bilstm hidden sizes differ: {} vs {}",
            p_fwd.hidden(),
            p_bwd.hidden()
        )));
    }
    let (yf, cf) = lstm_layer_cached(x_seq, p_fwd, Direction::Forward)?;
    let (yb, cb) = lstm_layer_cached(x_seq, p_bwd, Direction::Backward)?;
    let t_len = x_seq.shape[0];
    let h = p_fwd.hidden();
    let mut out = Tensor::zeros(&[t_len, 2 * h]);
    for t in 0..t_len {
        out.data[t * 2 * h..t * 2 * h + h].copy_from_slice(&yf.data[t * h..(t + 1) * h]);
        out.data[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&yb.data[t * h..(t + 1) * h]);
    }
    Ok((out, BilstmCache { fwd: cf, bwd: cb }))
}

/// Splits dy back into the two directions and sums their input gradients.
pub fn bilstm_backward<T: Real>(
    p_fwd: &LstmParams<T>,
    p_bwd: &LstmParams<T>,
    cache: &BilstmCache<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, LstmParams<T>, LstmParams<T>)> {
    let h = p_fwd.hidden();
    let t_len = cache.fwd.order.len();
    if dy.shape != [t_len, 2 * h] {
        return Err(CredError::ShapeMismatch(format!(
            "bilstm backward: dy {:?}, expected [{t_len}, {}]",
            dy.shape,
            2 * h
        )));
    }
    let mut dyf = Tensor::zeros(&[t_len, h]);
    let mut dyb = Tensor::zeros(&[t_len, h]);
    for t in 0..t_len {
        dyf.data[t * h..(t + 1) * h].copy_from_slice(&dy.data[t * 2 * h..t * 2 * h + h]);
        dyb.data[t * h..(t + 1) * h].copy_from_slice(&dy.data[t * 2 * h + h..(t + 1) * 2 * h]);
    }
    let (dxf, gf) = lstm_layer_backward(p_fwd, &cache.fwd, &dyf)?;
    let (dxb, gb) = lstm_layer_backward(p_bwd, &cache.bwd, &dyb)?;
    Ok((dxf.add(&dxb)?, gf, gb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::grad_check;

    fn flatten(p: &LstmParams<f64>) -> Vec<f64> {
        let mut out = Vec::new();
        for t in [
            &p.w_c, &p.w_u, &p.w_f, &p.w_o, &p.b_c, &p.b_u, &p.b_f, &p.b_o,
        ] {
            out.extend(&t.data);
        }
        out
    }

    fn unflatten(input: usize, hidden: usize, flat: &[f64]) -> LstmParams<f64> {
        let mut p = LstmParams::zeros(input, hidden);
        let mut i = 0;
        for t in [
            &mut p.w_c, &mut p.w_u, &mut p.w_f, &mut p.w_o, &mut p.b_c, &mut p.b_u, &mut p.b_f,
            &mut p.b_o,
        ] {
            let len = t.data.len();
            t.data.copy_from_slice(&flat[i..i + len]);
            i += len;
        }
        p
    }

    fn random_params(input: usize, hidden: usize, seed: u64) -> LstmParams<f64> {
        let mut rng = Rng::new(seed);
        LstmParams::init(input, hidden, &mut rng)
    }

    #[test]
    fn zero_params_halve_cell_state() {
        let p = LstmParams::<f64>::zeros(3, 2);
        let x = Tensor::from_vec(&[3], vec![5.0, -1.0, 2.0]).unwrap();
        let a_prev = Tensor::zeros(&[2]);
        let c_prev = Tensor::from_vec(&[2], vec![0.8, -1.2]).unwrap();
        let (a, c) = lstm_cell(&x, &a_prev, &c_prev, &p).unwrap();
        // u = f = o = 0.5 and c~ = 0, so c = 0.5*c_prev, a = 0.5*tanh(0.5*c_prev)
        for i in 0..2 {
            assert!((c.data[i] - 0.5 * c_prev.data[i]).abs() < 1e-15);
            assert!((a.data[i] - 0.5 * (0.5 * c_prev.data[i]).tanh()).abs() < 1e-15);
        }
        let (a0, c0) = lstm_cell(&x, &a_prev, &Tensor::zeros(&[2]), &p).unwrap();
        assert!(a0.data.iter().chain(&c0.data).all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_gates_carry_memory() {
        let mut p = LstmParams::<f64>::zeros(2, 2);
        for v in &mut p.b_f.data {
            *v = 30.0; // forget gate pinned open
        }
        for v in &mut p.b_u.data {
            *v = -30.0; // update gate pinned closed
        }
        let c_prev = Tensor::from_vec(&[2], vec![0.37, -2.5]).unwrap();
        let x = Tensor::from_vec(&[2], vec![1.0, -1.0]).unwrap();
        let (_, c) = lstm_cell(&x, &Tensor::zeros(&[2]), &c_prev, &p).unwrap();
        for i in 0..2 {
            assert!((c.data[i] - c_prev.data[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn single_step_layer_equals_cell() {
        let p = random_params(3, 4, 2);
        let x = Tensor::from_vec(&[1, 3], vec![0.2, -0.5, 0.9]).unwrap();
        let y = lstm_layer(&x, &p, Direction::Forward).unwrap();
        let xc = Tensor::from_vec(&[3], x.data.clone()).unwrap();
        let (a, _) = lstm_cell(&xc, &Tensor::zeros(&[4]), &Tensor::zeros(&[4]), &p).unwrap();
        assert_eq!(y.data, a.data);
    }

    #[test]
    fn backward_direction_is_reversal_conjugate() {
        let p = random_params(2, 3, 7);
        let mut rng = Rng::new(8);
        let t_len = 5;
        let x = Tensor::from_vec(
            &[t_len, 2],
            (0..t_len * 2).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let mut x_rev = Tensor::zeros(&[t_len, 2]);
        for t in 0..t_len {
            x_rev.data[t * 2..(t + 1) * 2]
                .copy_from_slice(&x.data[(t_len - 1 - t) * 2..(t_len - t) * 2]);
        }
        let yb = lstm_layer(&x, &p, Direction::Backward).unwrap();
        let yf_rev = lstm_layer(&x_rev, &p, Direction::Forward).unwrap();
        for t in 0..t_len {
            for i in 0..3 {
                assert!(
                    (yb.at2(t, i) - yf_rev.at2(t_len - 1 - t, i)).abs() < 1e-15,
                    "t {t} i {i}"
                );
            }
        }
    }

    #[test]
    fn bilstm_concatenates_and_matches_composition() {
        let pf = random_params(3, 2, 11);
        let pb = random_params(3, 2, 12);
        let mut rng = Rng::new(13);
        let x =
            Tensor::from_vec(&[4, 3], (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let y = bilstm_layer(&x, &pf, &pb).unwrap();
        assert_eq!(y.shape, vec![4, 4]);
        let yf = lstm_layer(&x, &pf, Direction::Forward).unwrap();
        let yb = lstm_layer(&x, &pb, Direction::Backward).unwrap();
        for t in 0..4 {
            for i in 0..2 {
                assert!((y.at2(t, i) - yf.at2(t, i)).abs() < 1e-12);
                assert!((y.at2(t, 2 + i) - yb.at2(t, i)).abs() < 1e-12);
            }
        }
        // silent backward direction zeroes the second half
        let y0 = bilstm_layer(&x, &pf, &LstmParams::zeros(3, 2)).unwrap();
        for t in 0..4 {
            assert_eq!(y0.at2(t, 2), 0.0);
            assert_eq!(y0.at2(t, 3), 0.0);
        }
    }

    #[test]
    fn cell_gradients_verify() {
        let mut rng = Rng::new(5);
        let (input, hidden) = (4, 5);
        let p = random_params(input, hidden, 5);
        let x: Vec<f64> = (0..input).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let a_prev: Vec<f64> = (0..hidden).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let c_prev: Vec<f64> = (0..hidden).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let proj_a: Vec<f64> = (0..hidden).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let proj_c: Vec<f64> = (0..hidden).map(|_| rng.uniform(-1.0, 1.0)).collect();

        let mut theta = flatten(&p);
        let np = theta.len();
        theta.extend(&x);
        theta.extend(&a_prev);
        theta.extend(&c_prev);
        let run = |t: &[f64]| -> f64 {
            let q = unflatten(input, hidden, &t[..np]);
            let xi = &t[np..np + input];
            let ai = &t[np + input..np + input + hidden];
            let ci = &t[np + input + hidden..];
            let (a, c, _) = cell_forward(xi, ai, ci, &q);
            a.iter().zip(&proj_a).map(|(v, p)| v * p).sum::<f64>()
                + c.iter().zip(&proj_c).map(|(v, p)| v * p).sum::<f64>()
        };

        let (_, _, cache) = cell_forward(&x, &a_prev, &c_prev, &p);
        let mut grads = LstmParams::zeros(input, hidden);
        let (dx, da_prev, dc_prev) = lstm_cell_backward(&p, &cache, &proj_a, &proj_c, &mut grads);
        let mut analytic = flatten(&grads);
        analytic.extend(&dx);
        analytic.extend(&da_prev);
        analytic.extend(&dc_prev);

        let err = grad_check(run, &theta, &analytic, 1e-5);
        assert!(err < 1e-6, "max rel err {err}");
    }

    #[test]
    fn bilstm_gradients_verify() {
        let mut rng = Rng::new(17);
        let (input, hidden, t_len) = (3, 2, 4);
        let pf = random_params(input, hidden, 18);
        let pb = random_params(input, hidden, 19);
        let x = Tensor::from_vec(
            &[t_len, input],
            (0..t_len * input).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let proj: Vec<f64> = (0..t_len * 2 * hidden)
            .map(|_| rng.uniform(-1.0, 1.0))
            .collect();

        let mut theta = flatten(&pf);
        let np = theta.len();
        theta.extend(flatten(&pb));
        theta.extend(&x.data);
        let run = |t: &[f64]| -> f64 {
            let qf = unflatten(input, hidden, &t[..np]);
            let qb = unflatten(input, hidden, &t[np..2 * np]);
            let xi = Tensor::from_vec(&[t_len, input], t[2 * np..].to_vec()).unwrap();
            let y = bilstm_layer(&xi, &qf, &qb).unwrap();
            y.data.iter().zip(&proj).map(|(a, b)| a * b).sum()
        };

        let (_, cache) = bilstm_layer_cached(&x, &pf, &pb).unwrap();
        let dy = Tensor::from_vec(&[t_len, 2 * hidden], proj.clone()).unwrap();
        let (dx, gf, gb) = bilstm_backward(&pf, &pb, &cache, &dy).unwrap();
        let mut analytic = flatten(&gf);
        analytic.extend(flatten(&gb));
        analytic.extend(&dx.data);

        let err = grad_check(run, &theta, &analytic, 1e-5);
        assert!(err < 1e-6, "max rel err {err}");
    }
}
