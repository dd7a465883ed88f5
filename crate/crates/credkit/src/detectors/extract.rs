//! Turning a frame-rate probability stream into event intervals.

use super::{Detection, Method};

/// Default probability threshold for event extraction.
pub const DEFAULT_TRIGGER: f64 = 0.11;
/// Merged runs shorter than this are discarded.
pub const DEFAULT_MIN_DUR_S: f64 = 1.0;
/// Runs separated by a gap shorter than this are merged.
pub const DEFAULT_MERGE_GAP_S: f64 = 0.5;

/// Extracts event intervals from per-frame probabilities: frames with
/// probability >= `tr` form runs, runs whose separating gap is shorter than
/// `merge_gap_s` are merged, and merged runs shorter than `min_dur_s` are
/// dropped. `peak_score` is the highest probability inside the interval.
///
/// Interval boundaries land on the frame grid: a run covering frames
/// `[i, j)` becomes `[i * hop, j * hop]` seconds, so a 10-frame run at a
/// 0.2 s hop reads as 2.0 s long.
///
/// Raising `tr` shrinks every run, so each interval extracted at a higher
/// threshold nests inside one extracted at a lower threshold. The *count*
/// can still go up when a long interval splits into several surviving
/// pieces; only the covered time is monotone.
pub fn extract_events(
    prob: &[f64],
    frame_hop_s: f64,
    tr: f64,
    min_dur_s: f64,
    merge_gap_s: f64,
) -> Vec<Detection> {
    assert!(
        frame_hop_s > 0.0 && frame_hop_s.is_finite(),
        "frame_hop_s must be a positive duration"
    );

    // Maximal runs of consecutive frames at or above threshold, as
    // half-open [start, end) frame spans.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &p) in prob.iter().enumerate() {
        match (p >= tr, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push((s, prob.len()));
    }

    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in runs {
        match merged.last_mut() {
            Some((_, prev_end)) if (s - *prev_end) as f64 * frame_hop_s < merge_gap_s => {
                *prev_end = e;
            }
            _ => merged.push((s, e)),
        }
    }

    merged
        .into_iter()
        .filter(|&(s, e)| (e - s) as f64 * frame_hop_s >= min_dur_s)
        .map(|(s, e)| Detection {
            method: Method::Cred,
            start_s: s as f64 * frame_hop_s,
            end_s: e as f64 * frame_hop_s,
            peak_score: prob[s..e].iter().fold(f64::NEG_INFINITY, |m, &p| m.max(p)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HOP: f64 = 0.2;

    fn extract(prob: &[f64], tr: f64) -> Vec<Detection> {
        extract_events(prob, HOP, tr, DEFAULT_MIN_DUR_S, DEFAULT_MERGE_GAP_S)
    }

    #[test]
    fn all_zero_probabilities_yield_nothing() {
        assert!(extract(&[0.0; 200], DEFAULT_TRIGGER).is_empty());
        assert!(extract(&[], DEFAULT_TRIGGER).is_empty());
    }

    #[test]
    fn single_run_arithmetic() {
        // 10 frames above threshold at a 0.2 s hop: one 2.0 s detection.
        let mut prob = vec![0.0; 40];
        for p in &mut prob[12..22] {
            *p = 0.8;
        }
        prob[15] = 0.93;
        let dets = extract(&prob, DEFAULT_TRIGGER);
        assert_eq!(dets.len(), 1);
        let d = &dets[0];
        assert_eq!(d.method, Method::Cred);
        assert!((d.start_s - 12.0 * HOP).abs() < 1e-12);
        assert!((d.end_s - 22.0 * HOP).abs() < 1e-12);
        assert!((d.duration_s() - 2.0).abs() < 1e-12);
        assert_eq!(d.peak_score, 0.93);
    }

    #[test]
    fn short_gaps_merge_and_long_gaps_do_not() {
        // Two 1.2 s runs split by a 0.4 s gap merge into one detection.
        let mut prob = vec![0.0; 60];
        for p in &mut prob[10..16] {
            *p = 0.5;
        }
        for p in &mut prob[18..24] {
            *p = 0.6;
        }
        let dets = extract(&prob, DEFAULT_TRIGGER);
        assert_eq!(dets.len(), 1);
        assert!((dets[0].start_s - 2.0).abs() < 1e-12);
        assert!((dets[0].end_s - 4.8).abs() < 1e-12);
        assert_eq!(dets[0].peak_score, 0.6);

        // Same runs split by a 0.6 s gap stay separate.
        let mut prob = vec![0.0; 60];
        for p in &mut prob[10..16] {
            *p = 0.5;
        }
        for p in &mut prob[19..25] {
            *p = 0.6;
        }
        assert_eq!(extract(&prob, DEFAULT_TRIGGER).len(), 2);
    }

    #[test]
    fn gap_equal_to_merge_gap_stays_split() {
        // Gap of exactly merge_gap_s does not merge (strict <). Use a
        // 1.0 s hop so the arithmetic is exact.
        let prob = [1.0, 1.0, 0.0, 1.0, 1.0];
        let dets = extract_events(&prob, 1.0, 0.5, 1.0, 1.0);
        assert_eq!(dets.len(), 2);
        let dets = extract_events(&prob, 1.0, 0.5, 1.0, 1.5);
        assert_eq!(dets.len(), 1);
    }

    #[test]
    fn min_duration_boundary_is_inclusive() {
        // 5 frames at 0.2 s hop is exactly 1.0 s: kept.
        let mut prob = vec![0.0; 30];
        for p in &mut prob[4..9] {
            *p = 0.9;
        }
        assert_eq!(extract(&prob, DEFAULT_TRIGGER).len(), 1);
        // 4 frames is 0.8 s: dropped.
        let mut prob = vec![0.0; 30];
        for p in &mut prob[4..8] {
            *p = 0.9;
        }
        assert!(extract(&prob, DEFAULT_TRIGGER).is_empty());
    }

    #[test]
    fn run_reaching_the_end_is_closed() {
        let mut prob = vec![0.0; 20];
        for p in &mut prob[12..20] {
            *p = 0.7;
        }
        let dets = extract(&prob, DEFAULT_TRIGGER);
        assert_eq!(dets.len(), 1);
        assert!((dets[0].end_s - 4.0).abs() < 1e-12);
    }

    /// A detection at a higher threshold must sit inside one detection at a
    /// lower threshold: runs only shrink as the threshold rises, merged
    /// intervals shrink with them, and a surviving high-threshold interval
    /// certifies the duration of its low-threshold parent.
    fn assert_nested(lo: &[Detection], hi: &[Detection]) {
        for h in hi {
            let parent = lo
                .iter()
                .find(|l| l.start_s <= h.start_s + 1e-12 && h.end_s <= l.end_s + 1e-12);
            assert!(
                parent.is_some(),
                "detection [{}, {}] has no parent at the lower threshold",
                h.start_s,
                h.end_s
            );
        }
        if !hi.is_empty() {
            assert!(!lo.is_empty());
        }
    }

    proptest! {
        #[test]
        fn intervals_are_sorted_disjoint_and_long_enough(
            prob in proptest::collection::vec(0.0f64..1.0, 1..240),
            tr in 0.05f64..0.95,
        ) {
            let dets = extract(&prob, tr);
            for d in &dets {
                prop_assert!(d.duration_s() >= DEFAULT_MIN_DUR_S - 1e-12);
                prop_assert!(d.peak_score >= tr);
                prop_assert!(d.peak_score <= 1.0);
            }
            for w in dets.windows(2) {
                // Sorted, disjoint, and separated by at least the merge gap.
                prop_assert!(w[1].start_s - w[0].end_s >= DEFAULT_MERGE_GAP_S - 1e-12);
            }
        }

        #[test]
        fn raising_the_threshold_nests_detections(
            prob in proptest::collection::vec(0.0f64..1.0, 1..240),
            tr_lo in 0.05f64..0.5,
            bump in 0.01f64..0.45,
        ) {
            let lo = extract(&prob, tr_lo);
            let hi = extract(&prob, tr_lo + bump);
            assert_nested(&lo, &hi);
        }
    }
}
