//! Model file format.
//!
//! Layout: magic `CRED`, format version (u16 LE), a length-prefixed
//! canonical `key=value` config block, every state tensor in declaration
//! order as little-endian IEEE-754 32-bit floats, and a trailing CRC-32 of
//! all preceding bytes. The config makes the file self-describing: tensor
//! shapes are reconstructed from it, so the payload carries raw values
//! only.

use super::config::CredConfig;
use super::model::{build_model, CredModel};
use crate::error::{CredError, Result};
use crate::nn::Real;
use std::path::Path;

const MAGIC: &[u8; 4] = b"CRED";
const VERSION: u16 = 1;

/// CRC-32 (IEEE), bitwise form.
fn crc32(bytes: &[u8]) -> u32 {
    let mut crc: u32 = !0;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

fn config_text(cfg: &CredConfig) -> String {
    let filters: Vec<String> = cfg
        .conv_stage_filters
        .iter()
        .map(|f| f.to_string())
        .collect();
    format!(
        "input_frames={}\ninput_bins={}\nchannels={}\nconv_stage_filters={}\n\
         res_blocks_per_stage={}\nlstm_hidden={}\nbilstm_blocks={}\ndense_hidden={}\nseed={}\n",
        cfg.input_frames,
        cfg.input_bins,
        cfg.channels,
        filters.join(","),
        cfg.res_blocks_per_stage,
        cfg.lstm_hidden,
        cfg.bilstm_blocks,
        cfg.dense_hidden,
        cfg.seed
    )
}

fn parse_config(text: &str) -> std::result::Result<CredConfig, String> {
    let mut cfg = CredConfig::default();
    let mut seen = std::collections::BTreeSet::new();
    for line in text.lines() {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line without '=': {line}"))?;
        if !seen.insert(key.to_string()) {
            return Err(format!("duplicate config key {key}"));
        }
        let count = |v: &str| v.parse::<usize>().map_err(|e| format!("{key}: {e}"));
        match key {
            "input_frames" => cfg.input_frames = count(value)?,
            "input_bins" => cfg.input_bins = count(value)?,
            "channels" => cfg.channels = count(value)?,
            "conv_stage_filters" => {
                cfg.conv_stage_filters = value
                    .split(',')
                    .map(|v| v.parse::<usize>().map_err(|e| format!("{key}: {e}")))
                    .collect::<std::result::Result<_, _>>()?;
            }
            "res_blocks_per_stage" => cfg.res_blocks_per_stage = count(value)?,
            "lstm_hidden" => cfg.lstm_hidden = count(value)?,
            "bilstm_blocks" => cfg.bilstm_blocks = count(value)?,
            "dense_hidden" => cfg.dense_hidden = count(value)?,
            "seed" => cfg.seed = value.parse::<u64>().map_err(|e| format!("seed: {e}"))?,
            other => return Err(format!("unknown config key {other}")),
        }
    }
    const REQUIRED: [&str; 9] = [
        "input_frames",
        "input_bins",
        "channels",
        "conv_stage_filters",
        "res_blocks_per_stage",
        "lstm_hidden",
        "bilstm_blocks",
        "dense_hidden",
        "seed",
    ];
    for key in REQUIRED {
        if !seen.contains(key) {
            return Err(format!("missing config key {key}"));
        }
    }
    Ok(cfg)
}

/// Serializes parameters and running statistics; values are stored as f32
/// regardless of the in-memory precision.
pub fn save_model<T: Real>(m: &CredModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let config = config_text(&m.config);
    let tensors = m.state_tensors();
    let value_count: usize = tensors.iter().map(|t| t.len()).sum();
    let mut bytes = Vec::with_capacity(4 + 2 + 4 + config.len() + value_count * 4 + 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(config.len() as u32).to_le_bytes());
    bytes.extend_from_slice(config.as_bytes());
    for t in tensors {
        for v in t {
            bytes.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
        }
    }
    let crc = crc32(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(path.as_ref(), &bytes).map_err(|source| CredError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<CredModel<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CredError::MissingFile(path.to_path_buf())
        } else {
            CredError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let corrupt = |reason: &str| CredError::CorruptFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    };

    if bytes.len() < 14 {
        return Err(corrupt("truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CredError::VersionMismatch(version));
    }
    let config_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    if bytes.len() < 10 + config_len + 4 {
        return Err(corrupt("truncated config block"));
    }
    let config_str = std::str::from_utf8(&bytes[10..10 + config_len])
        .map_err(|_| corrupt("config not utf-8"))?;
    let cfg = parse_config(config_str).map_err(|reason| corrupt(&reason))?;
    cfg.validate()
        .map_err(|e| corrupt(&format!("invalid config: {e}")))?;

    let mut model = build_model::<T>(&cfg)?;
    let value_count: usize = model.state_tensors().iter().map(|t| t.len()).sum();
    let payload_end = 10 + config_len + value_count * 4;
    if bytes.len() != payload_end + 4 {
        return Err(corrupt("payload size does not match config"));
    }
    let stored_crc = u32::from_le_bytes(bytes[payload_end..payload_end + 4].try_into().unwrap());
    if crc32(&bytes[..payload_end]) != stored_crc {
        return Err(corrupt("checksum mismatch"));
    }
    let mut at = 10 + config_len;
    for t in model.state_tensors_mut() {
        for v in t {
            *v = T::from_f64(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64);
            at += 4;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Mode, Tensor};

    fn dir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn save_load_save_produces_identical_bytes() {
        let cfg = CredConfig::tiny();
        let m = build_model::<f32>(&cfg).unwrap();
        let d = dir();
        let p1 = d.path().join("a.cred");
        let p2 = d.path().join("b.cred");
        save_model(&m, &p1).unwrap();
        let back = load_model::<f32>(&p1).unwrap();
        save_model(&back, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn f32_round_trip_is_bit_exact_and_preserves_outputs() {
        let cfg = CredConfig::tiny();
        let mut m = build_model::<f32>(&cfg).unwrap();
        // move running stats off the identity so they are exercised too
        let mut x = Tensor::<f32>::zeros(&[2, cfg.channels, cfg.input_frames, cfg.input_bins]);
        let mut rng = crate::rng::Rng::new(4);
        for v in &mut x.data {
            *v = rng.uniform(0.0, 1.0) as f32;
        }
        m.forward_train(&x).unwrap();

        let d = dir();
        let p = d.path().join("m.cred");
        save_model(&m, &p).unwrap();
        let back = load_model::<f32>(&p).unwrap();
        for (a, b) in m.state_tensors().iter().zip(back.state_tensors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let ya = m.forward(&x, Mode::Infer).unwrap();
        let yb = back.forward(&x, Mode::Infer).unwrap();
        for (a, b) in ya.data.iter().zip(&yb.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn double_precision_models_round_trip_through_f32_storage() {
        let cfg = CredConfig::tiny();
        let m = build_model::<f64>(&cfg).unwrap();
        let d = dir();
        let p1 = d.path().join("a.cred");
        let p2 = d.path().join("b.cred");
        save_model(&m, &p1).unwrap();
        let back = load_model::<f64>(&p1).unwrap();
        save_model(&back, &p2).unwrap();
        // storage is f32: the files agree even though the f64 values were
        // rounded on the first save
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn truncation_and_corruption_are_detected() {
        let cfg = CredConfig::tiny();
        let m = build_model::<f32>(&cfg).unwrap();
        let d = dir();
        let p = d.path().join("m.cred");
        save_model(&m, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();

        let t = d.path().join("t.cred");
        std::fs::write(&t, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(
            load_model::<f32>(&t),
            Err(CredError::CorruptFile { .. })
        ));

        let mut flipped = bytes.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0x40;
        std::fs::write(&t, &flipped).unwrap();
        assert!(matches!(
            load_model::<f32>(&t),
            Err(CredError::CorruptFile { .. })
        ));
    }

    #[test]
    fn wrong_version_is_reported_as_such() {
        let cfg = CredConfig::tiny();
        let m = build_model::<f32>(&cfg).unwrap();
        let d = dir();
        let p = d.path().join("m.cred");
        save_model(&m, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[4] = 9; // version low byte
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            load_model::<f32>(&p),
            Err(CredError::VersionMismatch(9))
        ));
    }

    #[test]
    fn missing_file_is_reported() {
        assert!(matches!(
            load_model::<f32>("/nonexistent/m.cred"),
            Err(CredError::MissingFile(_))
        ));
    }

    #[test]
    fn config_text_round_trips() {
        for cfg in [
            CredConfig::default(),
            CredConfig::paper_preset(),
            CredConfig::tiny(),
        ] {
            let parsed = parse_config(&config_text(&cfg)).unwrap();
            assert_eq!(parsed, cfg);
        }
        assert!(parse_config("input_frames=10\nbogus=1").is_err());
        assert!(parse_config("input_frames=10").is_err()); // missing keys
    }
}
