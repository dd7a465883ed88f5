//! Error type shared across the toolkit.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CredError>;

#[derive(Debug, thiserror::Error)]
pub enum CredError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("channel lengths differ: e={e} n={n} z={z}")]
    UnequalChannelLengths { e: usize, n: usize, z: usize },
    #[error("sampling rate must be positive, got {0}")]
    NonPositiveSamplingRate(f64),
    #[error("event {id}: s_time {s} not after p_time {p}")]
    SBeforeP { id: String, p: f64, s: f64 },
    #[error("duplicate event id {0}")]
    DuplicateId(String),
    #[error("window of {window_s} s longer than trace of {trace_s} s")]
    WindowLongerThanTrace { window_s: f64, trace_s: f64 },
    #[error("sampling rate {0} Hz too low for the 1-45 Hz band (need >= 90)")]
    SamplingRateTooLow(f64),
    #[error("trace too short: {len} samples, need {need}")]
    TraceTooShort { len: usize, need: usize },
    #[error("s_time must be after p_time (p={p}, s={s})")]
    SNotAfterP { p: f64, s: f64 },
    #[error("peak frequency {freq} Hz at or above Nyquist for rate {rate} Hz")]
    FrequencyAboveNyquist { freq: f64, rate: f64 },
    #[error("peak amplitude must be positive, got {0}")]
    NonPositivePeak(f64),
    #[error("clean trace is all zeros; SNR undefined")]
    AllZeroClean,
    #[error("inserts do not fit: need {need_s:.3} s, scene is {have_s:.3} s")]
    DoesNotFit { need_s: f64, have_s: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch of {0} too small for batchnorm statistics (need >= 2)")]
    BatchTooSmall(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("unsupported model file version {0}")]
    VersionMismatch(u16),
    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },
    #[error("template of {template} samples longer than trace of {trace}")]
    TemplateTooLong { template: usize, trace: usize },
    #[error("misaligned inputs: {0}")]
    MisalignedInputs(String),
}

impl CredError {
    /// Process exit code class: 2 for data/input problems, 3 for internal
    /// invariant failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CredError::ShapeMismatch(_)
            | CredError::GeometryMismatch(_)
            | CredError::MisalignedInputs(_) => 3,
            _ => 2,
        }
    }
}
