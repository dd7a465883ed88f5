//! Reverse-mode gradients for the whole network.
//!
//! The entry point takes gradients at the pre-sigmoid logits; training
//! pairs it with the fused sigmoid + cross-entropy gradient, which stays
//! finite where the chained form underflows.

use super::forward::ForwardCache;
use super::model::CredModel;
use crate::error::{CredError, Result};
use crate::nn::lstm::{bilstm_backward, lstm_layer_backward, LstmParams};
use crate::nn::{conv2d_backward, drelu_from_y, DenseParams, Real, Tensor};
use rayon::prelude::*;

/// Per-sample gradients of the recurrent trunk and head, plus the gradient
/// flowing back into that sample's feature sequence.
struct SeqGrads<T> {
    bi: Vec<(LstmParams<T>, LstmParams<T>, Option<DenseParams<T>>)>,
    uni: LstmParams<T>,
    head_hidden: DenseParams<T>,
    head_out: DenseParams<T>,
    dseq: Tensor<T>,
}

fn acc_lstm<T: Real>(dst: &mut LstmParams<T>, src: &LstmParams<T>) {
    dst.w_c.accumulate(&src.w_c);
    dst.w_u.accumulate(&src.w_u);
    dst.w_f.accumulate(&src.w_f);
    dst.w_o.accumulate(&src.w_o);
    dst.b_c.accumulate(&src.b_c);
    dst.b_u.accumulate(&src.b_u);
    dst.b_f.accumulate(&src.b_f);
    dst.b_o.accumulate(&src.b_o);
}

fn acc_dense<T: Real>(dst: &mut DenseParams<T>, src: &DenseParams<T>) {
    dst.w.accumulate(&src.w);
    dst.b.accumulate(&src.b);
}

fn relu_grad<T: Real>(dy: &Tensor<T>, y: &Tensor<T>) -> Tensor<T> {
    let mut out = dy.clone();
    for (d, v) in out.data.iter_mut().zip(&y.data) {
        *d *= drelu_from_y(*v);
    }
    out
}

impl<T: Real> CredModel<T> {
    /// Gradients of every trainable tensor, as a zero-initialized model
    /// filled with accumulated gradients. `dlogits` is [N, T'], the loss
    /// gradient at the pre-sigmoid outputs.
    ///
    /// Per-sample work runs in parallel; accumulation folds the samples in
    /// index order, so results are independent of the worker count.
    pub fn backward_from_logits(
        &self,
        cache: &ForwardCache<T>,
        dlogits: &Tensor<T>,
    ) -> Result<CredModel<T>> {
        let n = cache.samples.len();
        let t_out = self.config.output_frames();
        if dlogits.shape != [n, t_out] {
            return Err(CredError::ShapeMismatch(format!(
                "dlogits {:?}, expected [{n}, {t_out}]",
                dlogits.shape
            )));
        }

        let per_sample: Vec<SeqGrads<T>> = (0..n)
            .into_par_iter()
            .map(|s| self.seq_backward(cache, dlogits, s))
            .collect::<Result<Vec<_>>>()?;

        let mut g = self.zeros_like();
        let feat = &cache.feat_shape;
        let (c_len, t_len, f_len) = (feat[1], feat[2], feat[3]);
        let mut dfeat = Tensor::zeros(feat);
        for (s, sg) in per_sample.iter().enumerate() {
            for c in 0..c_len {
                for t in 0..t_len {
                    for f in 0..f_len {
                        dfeat.data[((s * c_len + c) * t_len + t) * f_len + f] =
                            sg.dseq.data[t * f_len * c_len + f * c_len + c];
                    }
                }
            }
            for (dst, (gf, gb, gs)) in g.bi_blocks.iter_mut().zip(&sg.bi) {
                acc_lstm(&mut dst.fwd, gf);
                acc_lstm(&mut dst.bwd, gb);
                if let (Some(d), Some(s)) = (dst.shortcut.as_mut(), gs.as_ref()) {
                    acc_dense(d, s);
                }
            }
            acc_lstm(&mut g.uni, &sg.uni);
            acc_dense(&mut g.head_hidden, &sg.head_hidden);
            acc_dense(&mut g.head_out, &sg.head_out);
        }

        // convolutional front end, reversed
        let mut dcur = dfeat;
        for si in (0..self.stages.len()).rev() {
            let stage = &self.stages[si];
            let scache = &cache.stages[si];
            let gstage = &mut g.stages[si];

            let (ddown_in, gdown) = conv2d_backward(&scache.down_in, &stage.down, (2, 2), &dcur)?;
            gstage.down.kernel.accumulate(&gdown.kernel);
            gstage.down.bias.accumulate(&gdown.bias);
            dcur = ddown_in;

            for bi in (0..stage.blocks.len()).rev() {
                let b = &stage.blocks[bi];
                let bc = &scache.blocks[bi];
                let gb = &mut gstage.blocks[bi];

                let (dr2, gc2) = conv2d_backward(&bc.r2, &b.conv2, (1, 1), &dcur)?;
                let dbn2 = relu_grad(&dr2, &bc.r2);
                let (dc1, dgamma2, dbeta2) = b.bn2.backward(&bc.bn2, &dbn2)?;
                let (dr1, gc1) = conv2d_backward(&bc.r1, &b.conv1, (1, 1), &dc1)?;
                let dbn1 = relu_grad(&dr1, &bc.r1);
                let (dx_branch, dgamma1, dbeta1) = b.bn1.backward(&bc.bn1, &dbn1)?;

                gb.conv2.kernel.accumulate(&gc2.kernel);
                gb.conv2.bias.accumulate(&gc2.bias);
                gb.bn2.gamma.accumulate(&dgamma2);
                gb.bn2.beta.accumulate(&dbeta2);
                gb.conv1.kernel.accumulate(&gc1.kernel);
                gb.conv1.bias.accumulate(&gc1.bias);
                gb.bn1.gamma.accumulate(&dgamma1);
                gb.bn1.beta.accumulate(&dbeta1);

                // block output = shortcut + branch: both paths carry dcur
                dcur = dx_branch.add(&dcur)?;
            }
        }
        let (_, gstem) = conv2d_backward(&cache.x, &self.stem, (2, 2), &dcur)?;
        g.stem.kernel.accumulate(&gstem.kernel);
        g.stem.bias.accumulate(&gstem.bias);
        Ok(g)
    }

    fn seq_backward(
        &self,
        cache: &ForwardCache<T>,
        dlogits: &Tensor<T>,
        s: usize,
    ) -> Result<SeqGrads<T>> {
        let sc = &cache.samples[s];
        let t_out = self.config.output_frames();
        let dlog = Tensor::from_vec(
            &[t_out, 1],
            dlogits.data[s * t_out..(s + 1) * t_out].to_vec(),
        )?;

        let (dhid_post, head_out) = self.head_out.backward(&sc.hid_relu, &dlog)?;
        let dhid = relu_grad(&dhid_post, &sc.hid_relu);
        let (duni_out, head_hidden) = self.head_hidden.backward(&sc.uni_out, &dhid)?;
        let (mut dseq, uni) = lstm_layer_backward(&self.uni, &sc.uni, &duni_out)?;

        let mut bi_rev = Vec::with_capacity(self.bi_blocks.len());
        for (bb, bc) in self.bi_blocks.iter().zip(&sc.bi).rev() {
            let (dx_branch, gf, gb) = bilstm_backward(&bb.fwd, &bb.bwd, &bc.cache, &dseq)?;
            let (dx_shortcut, gs) = match &bb.shortcut {
                Some(p) => {
                    let (dx, gp) = p.backward(&bc.x_in, &dseq)?;
                    (dx, Some(gp))
                }
                None => (dseq.clone(), None),
            };
            dseq = dx_branch.add(&dx_shortcut)?;
            bi_rev.push((gf, gb, gs));
        }
        bi_rev.reverse();

        Ok(SeqGrads {
            bi: bi_rev,
            uni,
            head_hidden,
            head_out,
            dseq,
        })
    }
}
