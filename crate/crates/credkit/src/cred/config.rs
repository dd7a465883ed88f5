//! Network configuration and the derived geometry of the detector.

use crate::error::{CredError, Result};

/// Hyperparameters fixing the network shape.
///
/// The convolutional front end applies one stride-2 stem convolution to
/// `conv_stage_filters[0]` channels, then one stage per remaining entry:
/// `res_blocks_per_stage` pre-activation residual blocks at the current
/// width followed by a stride-2 downsampling convolution that doubles the
/// channel count. Time and frequency shrink by `ceil(n/2)` per stride-2
/// layer, so the output sequence length is
/// `ceil(input_frames / 2^len(conv_stage_filters))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CredConfig {
    pub input_frames: usize,
    pub input_bins: usize,
    pub channels: usize,
    pub conv_stage_filters: Vec<usize>,
    pub res_blocks_per_stage: usize,
    pub lstm_hidden: usize,
    pub bilstm_blocks: usize,
    pub dense_hidden: usize,
    pub seed: u64,
}

impl Default for CredConfig {
    /// Desk-scale model: small enough to train on a laptop CPU in minutes.
    fn default() -> Self {
        CredConfig {
            input_frames: 147,
            input_bins: 41,
            channels: 3,
            conv_stage_filters: vec![4, 8, 16],
            res_blocks_per_stage: 2,
            lstm_hidden: 32,
            bilstm_blocks: 2,
            dense_hidden: 32,
            seed: 42,
        }
    }
}

impl CredConfig {
    /// Full-scale preset sized to roughly a quarter million trainable
    /// parameters, for parity experiments rather than desk training.
    pub fn paper_preset() -> Self {
        CredConfig {
            conv_stage_filters: vec![8, 16, 32],
            lstm_hidden: 54,
            dense_hidden: 64,
            ..CredConfig::default()
        }
    }

    /// Miniature geometry used by gradient checks: every layer kind is
    /// present but the parameter vector stays small enough for finite
    /// differences over all of it.
    pub fn tiny() -> Self {
        CredConfig {
            input_frames: 24,
            input_bins: 9,
            channels: 3,
            conv_stage_filters: vec![2, 4],
            res_blocks_per_stage: 2,
            lstm_hidden: 3,
            bilstm_blocks: 2,
            dense_hidden: 3,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("input_frames", self.input_frames),
            ("input_bins", self.input_bins),
            ("channels", self.channels),
            ("res_blocks_per_stage", self.res_blocks_per_stage),
            ("lstm_hidden", self.lstm_hidden),
            ("bilstm_blocks", self.bilstm_blocks),
            ("dense_hidden", self.dense_hidden),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(CredError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if self.conv_stage_filters.is_empty() {
            return Err(CredError::InvalidConfig(
                "conv_stage_filters must be nonempty".into(),
            ));
        }
        if self.conv_stage_filters[0] < 1 {
            return Err(CredError::InvalidConfig(
                "conv filter counts must be >= 1".into(),
            ));
        }
        for w in self.conv_stage_filters.windows(2) {
            if w[1] != 2 * w[0] {
                return Err(CredError::InvalidConfig(format!(
                    "conv_stage_filters must double per stage, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        // every convolution sees a 3x3 kernel, so both spatial dims must
        // stay >= 3 all the way down the stride-2 chain
        let (mut t, mut f) = (self.input_frames, self.input_bins);
        for _ in 0..self.conv_stage_filters.len() {
            if t < 3 || f < 3 {
                return Err(CredError::InvalidConfig(format!(
                    "feature map {t}x{f} too small for a 3x3 kernel; reduce stages or enlarge input"
                )));
            }
            t = t.div_ceil(2);
            f = f.div_ceil(2);
        }
        Ok(())
    }

    /// Sequence length after all stride-2 reductions.
    pub fn output_frames(&self) -> usize {
        reduce(self.input_frames, self.conv_stage_filters.len())
    }

    /// Frequency bins surviving the stride-2 reductions.
    pub fn output_bins(&self) -> usize {
        reduce(self.input_bins, self.conv_stage_filters.len())
    }

    /// Channel count of the final feature volume.
    pub fn final_filters(&self) -> usize {
        *self.conv_stage_filters.last().expect("validated nonempty")
    }

    /// Width of each sequence step after flattening (frequency x channel).
    pub fn sequence_features(&self) -> usize {
        self.output_bins() * self.final_filters()
    }
}

fn reduce(mut n: usize, times: usize) -> usize {
    for _ in 0..times {
        n = n.div_ceil(2);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_and_presets_validate() {
        for cfg in [
            CredConfig::default(),
            CredConfig::paper_preset(),
            CredConfig::tiny(),
        ] {
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn default_output_geometry() {
        let cfg = CredConfig::default();
        assert_eq!(cfg.output_frames(), 19); // 147 -> 74 -> 37 -> 19
        assert_eq!(cfg.output_bins(), 6); // 41 -> 21 -> 11 -> 6
        assert_eq!(cfg.sequence_features(), 96);
    }

    #[test]
    fn tiny_output_geometry() {
        let cfg = CredConfig::tiny();
        assert_eq!(cfg.output_frames(), 6); // 24 -> 12 -> 6
        assert_eq!(cfg.output_bins(), 3); // 9 -> 5 -> 3
        assert_eq!(cfg.sequence_features(), 12);
    }

    #[test]
    fn non_doubling_filters_rejected() {
        let cfg = CredConfig {
            conv_stage_filters: vec![4, 8, 12],
            ..CredConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(CredError::InvalidConfig(_))));
    }

    #[test]
    fn zero_counts_rejected() {
        let cfg = CredConfig {
            lstm_hidden: 0,
            ..CredConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(CredError::InvalidConfig(_))));
        let cfg = CredConfig {
            conv_stage_filters: vec![],
            ..CredConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(CredError::InvalidConfig(_))));
    }

    #[test]
    fn too_many_stages_for_small_input_rejected() {
        let cfg = CredConfig {
            input_frames: 8,
            input_bins: 8,
            conv_stage_filters: vec![2, 4, 8, 16],
            ..CredConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(CredError::InvalidConfig(_))));
    }
}
