//! Model assembly: layer parameters in a fixed declaration order.
//!
//! The declaration order below is load-bearing: the optimizer's moment
//! slots and the model file's tensor layout both follow
//! [`CredModel::trainable`] / [`CredModel::state_tensors`].

use super::config::CredConfig;
use crate::error::Result;
use crate::nn::{BnParams, ConvParams, DenseParams, LstmParams, Real};
use crate::rng::Rng;

/// One pre-activation residual block: BN -> ReLU -> conv -> BN -> ReLU ->
/// conv, added to the identity shortcut. Channel count is preserved.
#[derive(Debug, Clone)]
pub struct ResBlock<T> {
    pub bn1: BnParams<T>,
    pub conv1: ConvParams<T>,
    pub bn2: BnParams<T>,
    pub conv2: ConvParams<T>,
}

/// Residual blocks at a fixed width followed by a stride-2 downsampling
/// convolution that doubles the channel count.
#[derive(Debug, Clone)]
pub struct ConvStage<T> {
    pub blocks: Vec<ResBlock<T>>,
    pub down: ConvParams<T>,
}

/// One residual bidirectional LSTM block. The shortcut is a per-step dense
/// projection when the block input width differs from the 2*hidden output
/// width, and the identity otherwise.
#[derive(Debug, Clone)]
pub struct BiBlock<T> {
    pub fwd: LstmParams<T>,
    pub bwd: LstmParams<T>,
    pub shortcut: Option<DenseParams<T>>,
}

#[derive(Debug, Clone)]
pub struct CredModel<T> {
    pub config: CredConfig,
    pub stem: ConvParams<T>,
    pub stages: Vec<ConvStage<T>>,
    pub bi_blocks: Vec<BiBlock<T>>,
    pub uni: LstmParams<T>,
    pub head_hidden: DenseParams<T>,
    pub head_out: DenseParams<T>,
}

/// Builds the network with parameters drawn deterministically from
/// `cfg.seed`; the same config yields bit-identical parameters.
pub fn build_model<T: Real>(cfg: &CredConfig) -> Result<CredModel<T>> {
    cfg.validate()?;
    let mut layer = 0u64;
    let mut rng_for = move || {
        layer += 1;
        Rng::derive(cfg.seed, layer)
    };

    let filters = &cfg.conv_stage_filters;
    let stem = ConvParams::init(cfg.channels, filters[0], 3, 3, &mut rng_for());

    let mut stages = Vec::new();
    for stage in 1..filters.len() {
        let width = filters[stage - 1];
        let mut blocks = Vec::new();
        for _ in 0..cfg.res_blocks_per_stage {
            blocks.push(ResBlock {
                bn1: BnParams::identity(width),
                conv1: ConvParams::init(width, width, 3, 3, &mut rng_for()),
                bn2: BnParams::identity(width),
                conv2: ConvParams::init(width, width, 3, 3, &mut rng_for()),
            });
        }
        let down = ConvParams::init(width, filters[stage], 3, 3, &mut rng_for());
        stages.push(ConvStage { blocks, down });
    }

    let h = cfg.lstm_hidden;
    let mut in_dim = cfg.sequence_features();
    let mut bi_blocks = Vec::new();
    for _ in 0..cfg.bilstm_blocks {
        let fwd = LstmParams::init(in_dim, h, &mut rng_for());
        let bwd = LstmParams::init(in_dim, h, &mut rng_for());
        let shortcut = if in_dim != 2 * h {
            Some(DenseParams::init(in_dim, 2 * h, &mut rng_for()))
        } else {
            None
        };
        bi_blocks.push(BiBlock { fwd, bwd, shortcut });
        in_dim = 2 * h;
    }

    let uni = LstmParams::init(2 * h, h, &mut rng_for());
    let head_hidden = DenseParams::init(h, cfg.dense_hidden, &mut rng_for());
    let head_out = DenseParams::init(cfg.dense_hidden, 1, &mut rng_for());

    Ok(CredModel {
        config: cfg.clone(),
        stem,
        stages,
        bi_blocks,
        uni,
        head_hidden,
        head_out,
    })
}

/// Walks LSTM tensors in their fixed order.
macro_rules! lstm_tensors {
    ($p:expr) => {
        [
            &$p.w_c, &$p.w_u, &$p.w_f, &$p.w_o, &$p.b_c, &$p.b_u, &$p.b_f, &$p.b_o,
        ]
    };
}
macro_rules! lstm_tensors_mut {
    ($p:expr) => {
        [
            &mut $p.w_c,
            &mut $p.w_u,
            &mut $p.w_f,
            &mut $p.w_o,
            &mut $p.b_c,
            &mut $p.b_u,
            &mut $p.b_f,
            &mut $p.b_o,
        ]
    };
}

impl<T: Real> CredModel<T> {
    /// Trainable tensors as slices, in declaration order. BatchNorm running
    /// statistics are excluded; they are state, not parameters.
    pub fn trainable(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        out.push(&self.stem.kernel.data);
        out.push(&self.stem.bias.data);
        for stage in &self.stages {
            for b in &stage.blocks {
                out.push(&b.bn1.gamma.data);
                out.push(&b.bn1.beta.data);
                out.push(&b.conv1.kernel.data);
                out.push(&b.conv1.bias.data);
                out.push(&b.bn2.gamma.data);
                out.push(&b.bn2.beta.data);
                out.push(&b.conv2.kernel.data);
                out.push(&b.conv2.bias.data);
            }
            out.push(&stage.down.kernel.data);
            out.push(&stage.down.bias.data);
        }
        for bb in &self.bi_blocks {
            for t in lstm_tensors!(bb.fwd) {
                out.push(&t.data);
            }
            for t in lstm_tensors!(bb.bwd) {
                out.push(&t.data);
            }
            if let Some(p) = &bb.shortcut {
                out.push(&p.w.data);
                out.push(&p.b.data);
            }
        }
        for t in lstm_tensors!(self.uni) {
            out.push(&t.data);
        }
        out.push(&self.head_hidden.w.data);
        out.push(&self.head_hidden.b.data);
        out.push(&self.head_out.w.data);
        out.push(&self.head_out.b.data);
        out
    }

    /// Mutable view of [`CredModel::trainable`], same order.
    pub fn trainable_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        out.push(&mut self.stem.kernel.data);
        out.push(&mut self.stem.bias.data);
        for stage in &mut self.stages {
            for b in &mut stage.blocks {
                out.push(&mut b.bn1.gamma.data);
                out.push(&mut b.bn1.beta.data);
                out.push(&mut b.conv1.kernel.data);
                out.push(&mut b.conv1.bias.data);
                out.push(&mut b.bn2.gamma.data);
                out.push(&mut b.bn2.beta.data);
                out.push(&mut b.conv2.kernel.data);
                out.push(&mut b.conv2.bias.data);
            }
            out.push(&mut stage.down.kernel.data);
            out.push(&mut stage.down.bias.data);
        }
        for bb in &mut self.bi_blocks {
            for t in lstm_tensors_mut!(bb.fwd) {
                out.push(&mut t.data);
            }
            for t in lstm_tensors_mut!(bb.bwd) {
                out.push(&mut t.data);
            }
            if let Some(p) = &mut bb.shortcut {
                out.push(&mut p.w.data);
                out.push(&mut p.b.data);
            }
        }
        for t in lstm_tensors_mut!(self.uni) {
            out.push(&mut t.data);
        }
        out.push(&mut self.head_hidden.w.data);
        out.push(&mut self.head_hidden.b.data);
        out.push(&mut self.head_out.w.data);
        out.push(&mut self.head_out.b.data);
        out
    }

    /// All persistent tensors: the trainable set plus BatchNorm running
    /// statistics, in declaration order (running stats follow their layer's
    /// gamma/beta). This is the model file layout.
    pub fn state_tensors(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        out.push(&self.stem.kernel.data);
        out.push(&self.stem.bias.data);
        for stage in &self.stages {
            for b in &stage.blocks {
                out.push(&b.bn1.gamma.data);
                out.push(&b.bn1.beta.data);
                out.push(&b.bn1.running_mean.data);
                out.push(&b.bn1.running_var.data);
                out.push(&b.conv1.kernel.data);
                out.push(&b.conv1.bias.data);
                out.push(&b.bn2.gamma.data);
                out.push(&b.bn2.beta.data);
                out.push(&b.bn2.running_mean.data);
                out.push(&b.bn2.running_var.data);
                out.push(&b.conv2.kernel.data);
                out.push(&b.conv2.bias.data);
            }
            out.push(&stage.down.kernel.data);
            out.push(&stage.down.bias.data);
        }
        for bb in &self.bi_blocks {
            for t in lstm_tensors!(bb.fwd) {
                out.push(&t.data);
            }
            for t in lstm_tensors!(bb.bwd) {
                out.push(&t.data);
            }
            if let Some(p) = &bb.shortcut {
                out.push(&p.w.data);
                out.push(&p.b.data);
            }
        }
        for t in lstm_tensors!(self.uni) {
            out.push(&t.data);
        }
        out.push(&self.head_hidden.w.data);
        out.push(&self.head_hidden.b.data);
        out.push(&self.head_out.w.data);
        out.push(&self.head_out.b.data);
        out
    }

    /// Mutable view of [`CredModel::state_tensors`], same order.
    pub fn state_tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        out.push(&mut self.stem.kernel.data);
        out.push(&mut self.stem.bias.data);
        for stage in &mut self.stages {
            for b in &mut stage.blocks {
                out.push(&mut b.bn1.gamma.data);
                out.push(&mut b.bn1.beta.data);
                out.push(&mut b.bn1.running_mean.data);
                out.push(&mut b.bn1.running_var.data);
                out.push(&mut b.conv1.kernel.data);
                out.push(&mut b.conv1.bias.data);
                out.push(&mut b.bn2.gamma.data);
                out.push(&mut b.bn2.beta.data);
                out.push(&mut b.bn2.running_mean.data);
                out.push(&mut b.bn2.running_var.data);
                out.push(&mut b.conv2.kernel.data);
                out.push(&mut b.conv2.bias.data);
            }
            out.push(&mut stage.down.kernel.data);
            out.push(&mut stage.down.bias.data);
        }
        for bb in &mut self.bi_blocks {
            for t in lstm_tensors_mut!(bb.fwd) {
                out.push(&mut t.data);
            }
            for t in lstm_tensors_mut!(bb.bwd) {
                out.push(&mut t.data);
            }
            if let Some(p) = &mut bb.shortcut {
                out.push(&mut p.w.data);
                out.push(&mut p.b.data);
            }
        }
        for t in lstm_tensors_mut!(self.uni) {
            out.push(&mut t.data);
        }
        out.push(&mut self.head_hidden.w.data);
        out.push(&mut self.head_hidden.b.data);
        out.push(&mut self.head_out.w.data);
        out.push(&mut self.head_out.b.data);
        out
    }

    /// Total trainable parameter count.
    pub fn parameter_count(&self) -> usize {
        self.trainable().iter().map(|s| s.len()).sum()
    }

    /// A model of identical shape with every tensor zeroed; used as the
    /// gradient accumulator.
    pub fn zeros_like(&self) -> CredModel<T> {
        let mut g = self.clone();
        for s in g.state_tensors_mut() {
            for v in s {
                *v = T::ZERO;
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent closed-form count over the configured shapes.
    fn expected_count(cfg: &CredConfig) -> usize {
        let conv = |cin: usize, cout: usize| cout * cin * 9 + cout;
        let lstm = |inp: usize, h: usize| 4 * (h * (h + inp) + h);
        let dense = |inp: usize, out: usize| out * inp + out;

        let f = &cfg.conv_stage_filters;
        let mut n = conv(cfg.channels, f[0]);
        for s in 1..f.len() {
            let w = f[s - 1];
            n += cfg.res_blocks_per_stage * (2 * (2 * w) + 2 * conv(w, w));
            n += conv(w, f[s]);
        }
        let h = cfg.lstm_hidden;
        let mut in_dim = cfg.sequence_features();
        for _ in 0..cfg.bilstm_blocks {
            n += 2 * lstm(in_dim, h);
            if in_dim != 2 * h {
                n += dense(in_dim, 2 * h);
            }
            in_dim = 2 * h;
        }
        n += lstm(2 * h, h);
        n += dense(h, cfg.dense_hidden);
        n += dense(cfg.dense_hidden, 1);
        n
    }

    #[test]
    fn desk_default_parameter_count_in_bracket() {
        let m = build_model::<f64>(&CredConfig::default()).unwrap();
        let count = m.parameter_count();
        assert_eq!(count, expected_count(&CredConfig::default()));
        assert!(
            (40_000..=120_000).contains(&count),
            "desk model has {count} parameters"
        );
    }

    #[test]
    fn paper_preset_parameter_count_near_quarter_million() {
        let m = build_model::<f64>(&CredConfig::paper_preset()).unwrap();
        let count = m.parameter_count() as f64;
        assert_eq!(
            m.parameter_count(),
            expected_count(&CredConfig::paper_preset())
        );
        assert!(
            (count - 256_000.0).abs() <= 0.2 * 256_000.0,
            "paper preset has {count} parameters, want 256k +/- 20%"
        );
    }

    #[test]
    fn same_seed_is_bit_identical_and_seeds_differ() {
        let cfg = CredConfig::tiny();
        let a = build_model::<f64>(&cfg).unwrap();
        let b = build_model::<f64>(&cfg).unwrap();
        let av = a.trainable();
        let bv = b.trainable();
        assert_eq!(av.len(), bv.len());
        for (x, y) in av.iter().zip(&bv) {
            for (p, q) in x.iter().zip(*y) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
        let other = build_model::<f64>(&CredConfig {
            seed: 8,
            ..cfg.clone()
        })
        .unwrap();
        let differs = a
            .trainable()
            .iter()
            .zip(other.trainable())
            .any(|(x, y)| x.iter().zip(y).any(|(p, q)| p != q));
        assert!(differs);
    }

    #[test]
    fn visitor_orders_are_consistent() {
        let mut m = build_model::<f64>(&CredConfig::tiny()).unwrap();
        let lens: Vec<usize> = m.trainable().iter().map(|s| s.len()).collect();
        let lens_mut: Vec<usize> = m.trainable_mut().iter().map(|s| s.len()).collect();
        assert_eq!(lens, lens_mut);
        assert_eq!(m.parameter_count(), lens.iter().sum::<usize>());

        let state: Vec<usize> = m.state_tensors().iter().map(|s| s.len()).collect();
        let state_mut: Vec<usize> = m.state_tensors_mut().iter().map(|s| s.len()).collect();
        assert_eq!(state, state_mut);
        // state = trainable + 2 running tensors per BN layer
        let bn_layers = m.config.res_blocks_per_stage * (m.config.conv_stage_filters.len() - 1) * 2;
        assert_eq!(state.len(), lens.len() + 2 * bn_layers);

        // trainable and state agree tensor-for-tensor where they overlap:
        // every trainable slice appears in state with identical contents
        let state_ptrs: Vec<*const f64> = m.state_tensors().iter().map(|s| s.as_ptr()).collect();
        for t in m.trainable() {
            assert!(
                state_ptrs.contains(&t.as_ptr()),
                "trainable slice missing from state order"
            );
        }
    }

    #[test]
    fn zeros_like_matches_shapes() {
        let m = build_model::<f64>(&CredConfig::tiny()).unwrap();
        let g = m.zeros_like();
        assert_eq!(m.parameter_count(), g.parameter_count());
        for s in g.state_tensors() {
            assert!(s.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = CredConfig {
            conv_stage_filters: vec![4, 9],
            ..CredConfig::default()
        };
        assert!(build_model::<f64>(&cfg).is_err());
    }
}
