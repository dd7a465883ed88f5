//! Three-component waveform and event catalog I/O.
//!
//! Waveform CSV: one header line `#station=<id>,start=<float>,rate=<float>`
//! followed by one `e,n,z` sample row per line. Floats are written with
//! Rust's shortest round-trip formatting, so write-then-read reproduces the
//! arrays bit for bit.
//!
//! Catalog CSV: header `event_id,p_time,s_time,magnitude`; magnitude may be
//! empty. Rows must satisfy `p_time < s_time` and ids must be unique.

use crate::error::{CredError, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Three-component trace sampled at a uniform rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform3C {
    pub station: String,
    /// Epoch seconds of the first sample.
    pub start_time: f64,
    pub sampling_rate: f64,
    pub e: Vec<f64>,
    pub n: Vec<f64>,
    pub z: Vec<f64>,
}

impl Waveform3C {
    pub fn new(
        station: impl Into<String>,
        start_time: f64,
        sampling_rate: f64,
        e: Vec<f64>,
        n: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self> {
        if sampling_rate <= 0.0 {
            return Err(CredError::NonPositiveSamplingRate(sampling_rate));
        }
        if e.len() != n.len() || n.len() != z.len() {
            return Err(CredError::UnequalChannelLengths {
                e: e.len(),
                n: n.len(),
                z: z.len(),
            });
        }
        Ok(Waveform3C {
            station: station.into(),
            start_time,
            sampling_rate,
            e,
            n,
            z,
        })
    }

    /// All-zero trace of `len` samples.
    pub fn zeros(
        station: impl Into<String>,
        start_time: f64,
        sampling_rate: f64,
        len: usize,
    ) -> Self {
        Waveform3C {
            station: station.into(),
            start_time,
            sampling_rate,
            e: vec![0.0; len],
            n: vec![0.0; len],
            z: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sampling_rate
    }

    pub fn channels(&self) -> [&[f64]; 3] {
        [&self.e, &self.n, &self.z]
    }

    pub fn channels_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.e, &mut self.n, &mut self.z]
    }

    /// Largest |sample| over all three channels.
    pub fn peak_abs(&self) -> f64 {
        self.channels()
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    /// Copy of samples [start, start+len).
    pub fn slice(&self, start: usize, len: usize) -> Waveform3C {
        assert!(start + len <= self.len(), "slice out of bounds");
        Waveform3C {
            station: self.station.clone(),
            start_time: self.start_time + start as f64 / self.sampling_rate,
            sampling_rate: self.sampling_rate,
            e: self.e[start..start + len].to_vec(),
            n: self.n[start..start + len].to_vec(),
            z: self.z[start..start + len].to_vec(),
        }
    }
}

/// One catalog row.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEvent {
    pub event_id: String,
    /// Epoch seconds (or seconds from window start, for window catalogs).
    pub p_time: f64,
    pub s_time: f64,
    pub magnitude: Option<f64>,
}

pub type Catalog = Vec<CatalogEvent>;

pub fn read_waveform(path: impl AsRef<Path>) -> Result<Waveform3C> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CredError::MalformedHeader("empty file".into()))?;
    let (station, start_time, sampling_rate) = parse_waveform_header(header)?;
    if sampling_rate <= 0.0 {
        return Err(CredError::NonPositiveSamplingRate(sampling_rate));
    }

    let mut e = Vec::new();
    let mut n = Vec::new();
    let mut z = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        for (chan, out) in [&mut e, &mut n, &mut z].into_iter().enumerate() {
            match fields.next() {
                None | Some("") => {} // missing sample; lengths checked below
                Some(s) => out.push(parse_float(s, idx + 1)?),
            }
            let _ = chan;
        }
        if fields.next().is_some() {
            return Err(CredError::MalformedRow {
                line: idx + 1,
                reason: "more than three fields".into(),
            });
        }
    }
    if e.len() != n.len() || n.len() != z.len() {
        return Err(CredError::UnequalChannelLengths {
            e: e.len(),
            n: n.len(),
            z: z.len(),
        });
    }
    Ok(Waveform3C {
        station,
        start_time,
        sampling_rate,
        e,
        n,
        z,
    })
}

pub fn write_waveform(path: impl AsRef<Path>, wf: &Waveform3C) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(wf.len() * 24 + 64);
    let _ = writeln!(
        out,
        "#station={},start={},rate={}",
        wf.station, wf.start_time, wf.sampling_rate
    );
    for i in 0..wf.len() {
        let _ = writeln!(out, "{},{},{}", wf.e[i], wf.n[i], wf.z[i]);
    }
    write_text(path, &out)
}

pub fn read_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "event_id,p_time,s_time,magnitude" => {}
        Some((_, h)) => {
            return Err(CredError::MalformedHeader(format!(
                "expected catalog header, got {h:?}"
            )))
        }
        None => return Err(CredError::MalformedHeader("empty file".into())),
    }
    let mut events: Catalog = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CredError::MalformedRow {
                line: idx + 1,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let event_id = fields[0].to_string();
        if event_id.is_empty() {
            return Err(CredError::MalformedRow {
                line: idx + 1,
                reason: "empty event_id".into(),
            });
        }
        let p_time = parse_float(fields[1], idx + 1)?;
        let s_time = parse_float(fields[2], idx + 1)?;
        let magnitude = if fields[3].is_empty() {
            None
        } else {
            Some(parse_float(fields[3], idx + 1)?)
        };
        if s_time <= p_time {
            return Err(CredError::SBeforeP {
                id: event_id,
                p: p_time,
                s: s_time,
            });
        }
        if events.iter().any(|ev| ev.event_id == event_id) {
            return Err(CredError::DuplicateId(event_id));
        }
        events.push(CatalogEvent {
            event_id,
            p_time,
            s_time,
            magnitude,
        });
    }
    // rows may arrive in any order; the catalog contract is ascending P time
    events.sort_by(|a, b| a.p_time.total_cmp(&b.p_time));
    Ok(events)
}

pub fn write_catalog(path: impl AsRef<Path>, catalog: &[CatalogEvent]) -> Result<()> {
    let mut out = String::from("event_id,p_time,s_time,magnitude\n");
    for ev in catalog {
        let mag = ev.magnitude.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", ev.event_id, ev.p_time, ev.s_time, mag);
    }
    write_text(path.as_ref(), &out)
}

/// Fixed-length windows at a fixed stride; the trailing partial window is
/// dropped. Window count is `floor((len - window) / stride) + 1` in samples.
pub fn segment_windows(wf: &Waveform3C, window_s: f64, stride_s: f64) -> Result<Vec<Waveform3C>> {
    if window_s <= 0.0 || stride_s <= 0.0 {
        return Err(CredError::InvalidConfig(format!(
            "window_s {window_s} and stride_s {stride_s} must be positive"
        )));
    }
    let window_n = (window_s * wf.sampling_rate).round() as usize;
    let stride_n = ((stride_s * wf.sampling_rate).round() as usize).max(1);
    if window_n == 0 {
        return Err(CredError::InvalidConfig(format!(
            "window_s {window_s} shorter than one sample"
        )));
    }
    if window_n > wf.len() {
        return Err(CredError::WindowLongerThanTrace {
            window_s,
            trace_s: wf.duration_s(),
        });
    }
    let count = (wf.len() - window_n) / stride_n + 1;
    Ok((0..count)
        .map(|k| wf.slice(k * stride_n, window_n))
        .collect())
}

fn parse_waveform_header(header: &str) -> Result<(String, f64, f64)> {
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| CredError::MalformedHeader(format!("missing '#': {header:?}")))?;
    let mut station = None;
    let mut start = None;
    let mut rate = None;
    for part in rest.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CredError::MalformedHeader(format!("bad field {part:?}")))?;
        match key {
            "station" => station = Some(value.to_string()),
            "start" => {
                start = Some(value.parse::<f64>().map_err(|_| {
                    CredError::MalformedHeader(format!("bad start value {value:?}"))
                })?)
            }
            "rate" => {
                rate =
                    Some(value.parse::<f64>().map_err(|_| {
                        CredError::MalformedHeader(format!("bad rate value {value:?}"))
                    })?)
            }
            _ => return Err(CredError::MalformedHeader(format!("unknown key {key:?}"))),
        }
    }
    match (station, start, rate) {
        (Some(st), Some(t0), Some(r)) => Ok((st, t0, r)),
        _ => Err(CredError::MalformedHeader(format!(
            "need station, start, rate: {header:?}"
        ))),
    }
}

pub(crate) fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CredError::MalformedRow {
            line,
            reason: format!("bad float {s:?}"),
        })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CredError::MissingFile(path.to_path_buf())
        } else {
            CredError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CredError::Io {
        path: path.to_path_buf(),
        source,
    })
}
