//! Event detectors and their shared output type.
//!
//! Three detector families turn a continuous trace into [`Detection`]
//! intervals: an energy-ratio trigger ([`sta_lta`]), normalized
//! cross-correlation against known waveforms ([`template_match`]), and the
//! neural detector scanned over a moving window ([`cred_detect`]). The
//! neural path thresholds its probability stream through
//! [`extract_events`], which is exposed separately so evaluation code can
//! reuse the exact same run/merge/duration rules.

pub mod cred_detect;
pub mod extract;
pub mod stalta;
pub mod template;

pub use cred_detect::{cred_detect, DETECT_STRIDE_S, DETECT_WINDOW_S};
pub use extract::{extract_events, DEFAULT_MERGE_GAP_S, DEFAULT_MIN_DUR_S, DEFAULT_TRIGGER};
pub use stalta::{sta_lta, sta_lta_ratio, trigger_from_ratio, StaLtaConfig};
pub use template::{ncc_profile, peaks_from_profile, template_match};

use crate::error::{CredError, Result};
use crate::waveio::{parse_float, read_text, write_text};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

/// Which detector produced a [`Detection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cred,
    StaLta,
    Template,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cred => "cred",
            Method::StaLta => "stalta",
            Method::Template => "template",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "cred" => Some(Method::Cred),
            "stalta" => Some(Method::StaLta),
            "template" => Some(Method::Template),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One detected event interval, in seconds from the start of the trace it
/// was detected on. `end_s` is always strictly after `start_s` and
/// `peak_score` is finite; its scale depends on the method (ratio for
/// `stalta`, correlation for `template`, probability for `cred`).
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub method: Method,
    pub start_s: f64,
    pub end_s: f64,
    pub peak_score: f64,
}

impl Detection {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Closed-interval overlap with `[lo, hi]`.
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.start_s <= hi && self.end_s >= lo
    }
}

pub const DETECTIONS_HEADER: &str = "method,start_s,end_s,peak_score";

pub fn write_detections_csv(path: impl AsRef<Path>, dets: &[Detection]) -> Result<()> {
    let mut out = String::from(DETECTIONS_HEADER);
    out.push('\n');
    for d in dets {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            d.method, d.start_s, d.end_s, d.peak_score
        );
    }
    write_text(path.as_ref(), &out)
}

pub fn read_detections_csv(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == DETECTIONS_HEADER => {}
        Some((_, h)) => {
            return Err(CredError::MalformedHeader(format!(
                "expected detections header, got {h:?}"
            )))
        }
        None => return Err(CredError::MalformedHeader("empty file".into())),
    }
    let mut dets = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CredError::MalformedRow {
                line: line_no,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let method = Method::parse(fields[0].trim()).ok_or_else(|| CredError::MalformedRow {
            line: line_no,
            reason: format!("unknown method {:?}", fields[0]),
        })?;
        let start_s = parse_float(fields[1], line_no)?;
        let end_s = parse_float(fields[2], line_no)?;
        let peak_score = parse_float(fields[3], line_no)?;
        if !(end_s > start_s) {
            return Err(CredError::MalformedRow {
                line: line_no,
                reason: format!("end {end_s} not after start {start_s}"),
            });
        }
        if !peak_score.is_finite() {
            return Err(CredError::MalformedRow {
                line: line_no,
                reason: format!("peak_score {peak_score} not finite"),
            });
        }
        dets.push(Detection {
            method,
            start_s,
            end_s,
            peak_score,
        });
    }
    Ok(dets)
}
