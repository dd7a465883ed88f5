//! The convolutional-recurrent detector: configuration, assembly, the
//! forward/backward passes, training, datasets, and model files.

pub mod backward;
pub mod config;
pub mod dataset;
pub mod forward;
pub mod model;
pub mod serialize;
pub mod train;

pub use config::CredConfig;
pub use dataset::{
    pool_labels, spectrogram_batch, synthetic_windows, window_to_input, windows_to_dataset,
    Dataset, LabeledWindow, WindowSetSpec,
};
pub use forward::ForwardCache;
pub use model::{build_model, BiBlock, ConvStage, CredModel, ResBlock};
pub use serialize::{load_model, save_model};
pub use train::{train, EpochRecord, Hyper, TrainReport};
