//! Forward pass: convolutional front end, sequence recombination, recurrent
//! trunk, and the per-step sigmoid head.

use super::model::CredModel;
use crate::error::{CredError, Result};
use crate::nn::lstm::{bilstm_layer_cached, lstm_layer_cached, BilstmCache, Direction, LayerCache};
use crate::nn::{conv2d, relu, residual_add, sigmoid, BnCache, Mode, Real, Tensor};
use rayon::prelude::*;

/// Intermediates of one training forward pass, consumed by the backward
/// pass. Tensors are stored at the exact points the gradient computation
/// re-reads them.
pub struct ForwardCache<T> {
    pub(crate) x: Tensor<T>,
    pub(crate) stages: Vec<StageCache<T>>,
    pub(crate) samples: Vec<SampleCache<T>>,
    pub(crate) feat_shape: Vec<usize>,
    probs: Tensor<T>,
}

impl<T: Real> ForwardCache<T> {
    /// Output probabilities, [N, T'].
    pub fn probs(&self) -> &Tensor<T> {
        &self.probs
    }
}

pub(crate) struct ResBlockCache<T> {
    pub bn1: BnCache<T>,
    /// relu(bn1 out): the first convolution's input.
    pub r1: Tensor<T>,
    pub bn2: BnCache<T>,
    /// relu(bn2 out): the second convolution's input.
    pub r2: Tensor<T>,
}

pub(crate) struct StageCache<T> {
    pub blocks: Vec<ResBlockCache<T>>,
    /// Input to the stride-2 downsampling convolution.
    pub down_in: Tensor<T>,
}

pub(crate) struct BiStepCache<T> {
    /// Block input, [T', in]; shortcut of the residual sum.
    pub x_in: Tensor<T>,
    pub cache: BilstmCache<T>,
}

pub(crate) struct SampleCache<T> {
    pub bi: Vec<BiStepCache<T>>,
    pub uni: LayerCache<T>,
    pub uni_out: Tensor<T>,
    /// relu(hidden dense out): the output dense layer's input.
    pub hid_relu: Tensor<T>,
}

impl<T: Real> CredModel<T> {
    fn check_geometry(&self, x: &Tensor<T>) -> Result<usize> {
        let cfg = &self.config;
        let want = [cfg.channels, cfg.input_frames, cfg.input_bins];
        if x.shape.len() != 4 || x.shape[1..] != want {
            return Err(CredError::GeometryMismatch(format!(
                "input batch {:?}, expected [N, {}, {}, {}]",
                x.shape, want[0], want[1], want[2]
            )));
        }
        Ok(x.shape[0])
    }

    /// One sample's feature volume rearranged into a sequence:
    /// `seq[t, f*C + c] = feat[s, c, t, f]`.
    fn sample_sequence(&self, feat: &Tensor<T>, s: usize) -> Tensor<T> {
        let (c_len, t_len, f_len) = (feat.shape[1], feat.shape[2], feat.shape[3]);
        let mut seq = Tensor::zeros(&[t_len, f_len * c_len]);
        for c in 0..c_len {
            for t in 0..t_len {
                for f in 0..f_len {
                    seq.data[t * f_len * c_len + f * c_len + c] =
                        feat.data[((s * c_len + c) * t_len + t) * f_len + f];
                }
            }
        }
        seq
    }

    /// Recurrent trunk and head for one sample. Returns the probability row
    /// and everything the backward pass needs.
    fn seq_forward(&self, feat: &Tensor<T>, s: usize) -> Result<(Vec<T>, SampleCache<T>)> {
        let mut seq = self.sample_sequence(feat, s);
        let mut bi = Vec::with_capacity(self.bi_blocks.len());
        for bb in &self.bi_blocks {
            let (y, cache) = bilstm_layer_cached(&seq, &bb.fwd, &bb.bwd)?;
            let shortcut = match &bb.shortcut {
                Some(p) => p.forward(&seq)?,
                None => seq.clone(),
            };
            let out = residual_add(&shortcut, &y)?;
            bi.push(BiStepCache { x_in: seq, cache });
            seq = out;
        }
        let (uni_out, uni) = lstm_layer_cached(&seq, &self.uni, Direction::Forward)?;
        let hid_relu = self.head_hidden.forward(&uni_out)?.map(relu);
        let logits = self.head_out.forward(&hid_relu)?;
        let probs = logits.data.iter().map(|&z| sigmoid(z)).collect();
        Ok((
            probs,
            SampleCache {
                bi,
                uni,
                uni_out,
                hid_relu,
            },
        ))
    }

    /// Training forward pass: BatchNorm uses batch statistics and updates
    /// the running estimates; all intermediates are cached for
    /// [`CredModel::backward_from_logits`].
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, ForwardCache<T>)> {
        let n = self.check_geometry(x)?;
        let mut cur = conv2d(x, &self.stem, (2, 2))?;
        let mut stages = Vec::with_capacity(self.stages.len());
        for stage in &mut self.stages {
            let mut blocks = Vec::with_capacity(stage.blocks.len());
            for b in &mut stage.blocks {
                let (bn1_out, bn1) = b.bn1.forward_train(&cur)?;
                b.bn1.update_running(&bn1);
                let r1 = bn1_out.map(relu);
                let c1 = conv2d(&r1, &b.conv1, (1, 1))?;
                let (bn2_out, bn2) = b.bn2.forward_train(&c1)?;
                b.bn2.update_running(&bn2);
                let r2 = bn2_out.map(relu);
                let c2 = conv2d(&r2, &b.conv2, (1, 1))?;
                cur = residual_add(&cur, &c2)?;
                blocks.push(ResBlockCache { bn1, r1, bn2, r2 });
            }
            let down_out = conv2d(&cur, &stage.down, (2, 2))?;
            stages.push(StageCache {
                blocks,
                down_in: cur,
            });
            cur = down_out;
        }

        let this = &*self;
        let per_sample: Vec<(Vec<T>, SampleCache<T>)> = (0..n)
            .into_par_iter()
            .map(|s| this.seq_forward(&cur, s))
            .collect::<Result<Vec<_>>>()?;

        let t_out = self.config.output_frames();
        let mut probs = Tensor::zeros(&[n, t_out]);
        let mut samples = Vec::with_capacity(n);
        for (s, (row, cache)) in per_sample.into_iter().enumerate() {
            probs.data[s * t_out..(s + 1) * t_out].copy_from_slice(&row);
            samples.push(cache);
        }
        let cache = ForwardCache {
            x: x.clone(),
            stages,
            samples,
            feat_shape: cur.shape.clone(),
            probs: probs.clone(),
        };
        Ok((probs, cache))
    }

    /// Pure forward pass. `Mode::Train` normalizes with batch statistics,
    /// `Mode::Infer` with the stored running statistics; neither mutates
    /// the model.
    pub fn forward(&self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let n = self.check_geometry(x)?;
        let mut cur = conv2d(x, &self.stem, (2, 2))?;
        for stage in &self.stages {
            for b in &stage.blocks {
                let bn1_out = match mode {
                    Mode::Train => b.bn1.forward_train(&cur)?.0,
                    Mode::Infer => b.bn1.forward_infer(&cur)?,
                };
                let r1 = bn1_out.map(relu);
                let c1 = conv2d(&r1, &b.conv1, (1, 1))?;
                let bn2_out = match mode {
                    Mode::Train => b.bn2.forward_train(&c1)?.0,
                    Mode::Infer => b.bn2.forward_infer(&c1)?,
                };
                let r2 = bn2_out.map(relu);
                let c2 = conv2d(&r2, &b.conv2, (1, 1))?;
                cur = residual_add(&cur, &c2)?;
            }
            cur = conv2d(&cur, &stage.down, (2, 2))?;
        }

        let per_sample: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|s| self.seq_forward(&cur, s).map(|(row, _)| row))
            .collect::<Result<Vec<_>>>()?;
        let t_out = self.config.output_frames();
        let mut probs = Tensor::zeros(&[n, t_out]);
        for (s, row) in per_sample.into_iter().enumerate() {
            probs.data[s * t_out..(s + 1) * t_out].copy_from_slice(&row);
        }
        Ok(probs)
    }
}
