//! Matching detections against a reference catalog.

use crate::detectors::Detection;
use crate::dsp::LABEL_SPAN_FACTOR;
use crate::error::Result;
use crate::waveio::{write_text, CatalogEvent};
use std::fmt::Write as _;
use std::path::Path;

/// Default matching tolerance in seconds.
pub const DEFAULT_MATCH_TOL_S: f64 = 2.0;

/// Outcome of [`match_catalog`]: index pairs for matches, plus the
/// leftovers on each side. Unmatched detections are candidates for new
/// events (or false positives); unmatched catalog events were missed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CatalogMatch {
    pub matched: Vec<(usize, usize)>,
    pub new: Vec<usize>,
    pub missed: Vec<usize>,
}

/// Greedy one-to-one matching in time order: each detection, widened by
/// `tol_s` on both sides, claims the earliest still-unclaimed event whose
/// span `[p, p + 3(s - p)]` it overlaps. Detections are visited in start
/// order and events offered in P-arrival order, so the pairing is
/// deterministic regardless of input order.
pub fn match_catalog(dets: &[Detection], catalog: &[CatalogEvent], tol_s: f64) -> CatalogMatch {
    let mut det_order: Vec<usize> = (0..dets.len()).collect();
    det_order.sort_by(|&a, &b| dets[a].start_s.total_cmp(&dets[b].start_s).then(a.cmp(&b)));
    let mut event_order: Vec<usize> = (0..catalog.len()).collect();
    event_order.sort_by(|&a, &b| {
        catalog[a]
            .p_time
            .total_cmp(&catalog[b].p_time)
            .then(a.cmp(&b))
    });

    let mut claimed = vec![false; catalog.len()];
    let mut result = CatalogMatch::default();
    for &d in &det_order {
        let det = &dets[d];
        let found = event_order.iter().copied().find(|&e| {
            if claimed[e] {
                return false;
            }
            let ev = &catalog[e];
            let span_end = ev.p_time + LABEL_SPAN_FACTOR * (ev.s_time - ev.p_time);
            det.start_s - tol_s <= span_end && det.end_s + tol_s >= ev.p_time
        });
        match found {
            Some(e) => {
                claimed[e] = true;
                result.matched.push((d, e));
            }
            None => result.new.push(d),
        }
    }
    result.missed = event_order.into_iter().filter(|&e| !claimed[e]).collect();
    result
}

/// Counts per fixed-width bin, keyed by the bin's lower edge; empty bins
/// between occupied ones are reported with a zero count so the histogram
/// has a contiguous axis.
pub fn magnitude_histogram(magnitudes: &[f64], bin_width: f64) -> Vec<(f64, usize)> {
    assert!(
        bin_width > 0.0 && bin_width.is_finite(),
        "bin width must be positive"
    );
    let finite: Vec<f64> = magnitudes
        .iter()
        .copied()
        .filter(|m| m.is_finite())
        .collect();
    let Some(lo) = finite.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let hi = finite.iter().copied().reduce(f64::max).unwrap();
    let first = (lo / bin_width).floor() as i64;
    let last = (hi / bin_width).floor() as i64;
    let mut bins = vec![0usize; (last - first + 1) as usize];
    for m in finite {
        let idx = ((m / bin_width).floor() as i64 - first) as usize;
        bins[idx] += 1;
    }
    bins.into_iter()
        .enumerate()
        .map(|(i, count)| ((first + i as i64) as f64 * bin_width, count))
        .collect()
}

pub fn write_magnitude_hist_csv(path: impl AsRef<Path>, hist: &[(f64, usize)]) -> Result<()> {
    let mut out = String::from("bin,count\n");
    for (bin, count) in hist {
        let _ = writeln!(out, "{bin},{count}");
    }
    write_text(path.as_ref(), &out)
}
