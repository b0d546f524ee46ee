//! Scoring of detection events against ground truth, false-positive
//! interval metrics, and the dataset analysis procedures: still-frame
//! extraction and body occupancy maps.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::gsn::DetectionEvent;
use crate::pixel::unpack_depth_pixel;
use crate::skeleton::HandSide;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnotationKind {
    Prompted,
    Injected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub gesture_name: String,
    pub skeleton_id: u8,
    pub hand_side: HandSide,
    pub start_ms: f64,
    pub end_ms: f64,
    pub kind: AnnotationKind,
}

pub type AnnotationTrack = Vec<Annotation>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureScore {
    pub gesture_name: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_gesture: Vec<GestureScore>,
    pub total_tp: usize,
    pub total_fp: usize,
    pub total_fn: usize,
    pub tp_rate: f64,
    /// Person-seconds per false positive, total observed time; None when
    /// no exposure was supplied or no false positives occurred.
    pub fp_interval_s: Option<f64>,
    /// Same metric normalized by tracked-skeleton time only.
    pub fp_interval_tracked_s: Option<f64>,
}

/// Default matching window after the end of a truth interval, ms.
pub const DEFAULT_MATCH_WINDOW_MS: f64 = 2000.0;

/// Match detections against ground truth. An event is a true positive
/// when its end timestamp lies within `[start, end + window_ms]` of a
/// same-gesture truth interval on the same (skeleton, hand). Each truth
/// interval absorbs at most one TP; further matching events are neither
/// TP nor FP. Everything unmatched is an FP; truths without a TP are FNs.
pub fn match_detections(
    events: &[DetectionEvent],
    truth: &AnnotationTrack,
    window_ms: f64,
) -> ScoreReport {
    // Sort events by end time so the result is independent of input order.
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by(|&a, &b| {
        events[a]
            .end_timestamp_ms
            .partial_cmp(&events[b].end_timestamp_ms)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(events[a].gesture_name.cmp(&events[b].gesture_name))
    });

    let mut matched = vec![false; truth.len()];
    let mut gesture_names: Vec<String> = Vec::new();
    let note_gesture = |names: &mut Vec<String>, g: &str| {
        if !names.iter().any(|n| n == g) {
            names.push(String::from(g));
        }
    };
    for a in truth {
        note_gesture(&mut gesture_names, &a.gesture_name);
    }
    for e in events {
        note_gesture(&mut gesture_names, &e.gesture_name);
    }

    let mut tp = vec![0usize; gesture_names.len()];
    let mut fp = vec![0usize; gesture_names.len()];
    let gesture_idx = |names: &[String], g: &str| names.iter().position(|n| n == g).unwrap();

    for &ei in &order {
        let e = &events[ei];
        let gi = gesture_idx(&gesture_names, &e.gesture_name);
        let mut absorbed = false;
        let mut hit = None;
        for (ti, a) in truth.iter().enumerate() {
            if a.gesture_name != e.gesture_name
                || a.skeleton_id != e.skeleton_id
                || a.hand_side != e.hand
            {
                continue;
            }
            if e.end_timestamp_ms >= a.start_ms && e.end_timestamp_ms <= a.end_ms + window_ms {
                if matched[ti] {
                    absorbed = true;
                } else {
                    hit = Some(ti);
                    break;
                }
            }
        }
        match hit {
            Some(ti) => {
                matched[ti] = true;
                tp[gi] += 1;
            }
            None if absorbed => {}
            None => fp[gi] += 1,
        }
    }

    let mut fn_ = vec![0usize; gesture_names.len()];
    for (ti, a) in truth.iter().enumerate() {
        if !matched[ti] {
            fn_[gesture_idx(&gesture_names, &a.gesture_name)] += 1;
        }
    }

    let per_gesture: Vec<GestureScore> = gesture_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let truths = tp[i] + fn_[i];
            GestureScore {
                gesture_name: name.clone(),
                tp: tp[i],
                fp: fp[i],
                fn_: fn_[i],
                tp_rate: if truths > 0 {
                    tp[i] as f64 / truths as f64
                } else {
                    0.0
                },
            }
        })
        .collect();

    let total_tp: usize = tp.iter().sum();
    let total_fp: usize = fp.iter().sum();
    let total_fn: usize = fn_.iter().sum();
    let total_truth = total_tp + total_fn;
    ScoreReport {
        per_gesture,
        total_tp,
        total_fp,
        total_fn,
        tp_rate: if total_truth > 0 {
            total_tp as f64 / total_truth as f64
        } else {
            0.0
        },
        fp_interval_s: None,
        fp_interval_tracked_s: None,
    }
}

/// Person-seconds of observation per false positive; infinite when none
/// occurred.
pub fn fp_interval(fp_count: usize, person_seconds: f64) -> f64 {
    debug_assert!(person_seconds > 0.0);
    if fp_count == 0 {
        f64::INFINITY
    } else {
        person_seconds / fp_count as f64
    }
}

/// A single depth frame's payload as seen by the analysis procedures.
#[derive(Debug, Clone, Copy)]
pub struct DepthView<'a> {
    pub timestamp_ms: u64,
    pub pixels: &'a [u16],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StillInterval {
    pub start_ms: u64,
    pub end_ms: u64,
    /// Index of the representative (middle) frame within the input slice.
    pub representative: usize,
}

/// Find maximal intervals where the mean absolute per-pixel depth
/// difference between consecutive frames stays below `diff_threshold_mm`
/// for at least `min_duration_s`, returning one representative frame per
/// interval.
pub fn still_frames(
    frames: &[DepthView<'_>],
    diff_threshold_mm: f64,
    min_duration_s: f64,
) -> Vec<StillInterval> {
    assert!(min_duration_s > 0.0);
    let mut out = Vec::new();
    if frames.len() < 2 {
        return out;
    }

    let mut run_start: Option<usize> = None;
    for i in 1..frames.len() {
        let a = frames[i - 1].pixels;
        let b = frames[i].pixels;
        debug_assert_eq!(a.len(), b.len());
        let mut acc: u64 = 0;
        for (&pa, &pb) in a.iter().zip(b) {
            let da = unpack_depth_pixel(pa).0 as i64;
            let db = unpack_depth_pixel(pb).0 as i64;
            acc += (da - db).unsigned_abs();
        }
        let mean = acc as f64 / a.len() as f64;
        let still = mean < diff_threshold_mm;

        if still && run_start.is_none() {
            run_start = Some(i - 1);
        }
        let run_ends = !still || i == frames.len() - 1;
        if run_ends {
            if let Some(s) = run_start.take() {
                let e = if still { i } else { i - 1 };
                let start_ms = frames[s].timestamp_ms;
                let end_ms = frames[e].timestamp_ms;
                if (end_ms - start_ms) as f64 >= min_duration_s * 1000.0 {
                    out.push(StillInterval {
                        start_ms,
                        end_ms,
                        representative: (s + e) / 2,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMap {
    pub width: usize,
    pub height: usize,
    /// Per-pixel fraction of frames where the player id is nonzero.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionMismatch;

impl core::fmt::Display for DimensionMismatch {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "frame or map dimensions differ")
    }
}

/// Per-pixel fraction of frames with a nonzero player id mask.
pub fn occupancy_map(
    frames: &[&[u16]],
    width: usize,
    height: usize,
) -> Result<OccupancyMap, DimensionMismatch> {
    if frames.is_empty() {
        return Err(DimensionMismatch);
    }
    let n_px = width * height;
    let mut counts = vec![0u32; n_px];
    for frame in frames {
        if frame.len() != n_px {
            return Err(DimensionMismatch);
        }
        for (c, &px) in counts.iter_mut().zip(*frame) {
            if unpack_depth_pixel(px).1 != 0 {
                *c += 1;
            }
        }
    }
    let n = frames.len() as f64;
    Ok(OccupancyMap {
        width,
        height,
        values: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// Clamped difference revealing where a gesture occupies space the
/// background does not: per pixel, max(0, gesture − background).
pub fn gesture_zone(
    gesture: &OccupancyMap,
    background: &OccupancyMap,
) -> Result<OccupancyMap, DimensionMismatch> {
    if gesture.width != background.width || gesture.height != background.height {
        return Err(DimensionMismatch);
    }
    Ok(OccupancyMap {
        width: gesture.width,
        height: gesture.height,
        values: gesture
            .values
            .iter()
            .zip(&background.values)
            .map(|(&g, &b)| (g - b).max(0.0))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub min_ms: u64,
    pub median_ms: u64,
    pub max_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsufficientData;

impl core::fmt::Display for InsufficientData {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "need at least 2 frames to compute inter-frame gaps")
    }
}

/// Min/median/max inter-frame gap of a timestamp stream.
pub fn gap_stats(timestamps_ms: &[u64]) -> Result<GapStats, InsufficientData> {
    if timestamps_ms.len() < 2 {
        return Err(InsufficientData);
    }
    let mut gaps: Vec<u64> = timestamps_ms.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_unstable();
    Ok(GapStats {
        min_ms: gaps[0],
        median_ms: gaps[gaps.len() / 2],
        max_ms: gaps[gaps.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::pack_depth_pixel;

    fn event(g: &str, end_ms: f64) -> DetectionEvent {
        DetectionEvent {
            gesture_name: String::from(g),
            variant_name: String::from("default"),
            skeleton_id: 1,
            hand: HandSide::Right,
            start_timestamp_ms: end_ms - 500.0,
            end_timestamp_ms: end_ms,
            log_likelihood_margin: 1.0,
        }
    }

    fn truth(g: &str, start_ms: f64, end_ms: f64) -> Annotation {
        Annotation {
            gesture_name: String::from(g),
            skeleton_id: 1,
            hand_side: HandSide::Right,
            start_ms,
            end_ms,
            kind: AnnotationKind::Injected,
        }
    }

    #[test]
    fn no_events_all_fn() {
        let t: AnnotationTrack = (0..5).map(|i| truth("Swipe", i as f64 * 10_000.0, i as f64 * 10_000.0 + 800.0)).collect();
        let r = match_detections(&[], &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!(r.total_tp, 0);
        assert_eq!(r.total_fn, 5);
        assert_eq!(r.total_fp, 0);
    }

    #[test]
    fn event_inside_window_is_tp() {
        let t = vec![truth("Swipe", 1000.0, 1800.0)];
        let r = match_detections(&[event("Swipe", 1500.0)], &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!((r.total_tp, r.total_fp, r.total_fn), (1, 0, 0));
        assert_eq!(r.tp_rate, 1.0);
    }

    #[test]
    fn event_in_trailing_window_is_tp() {
        let t = vec![truth("Swipe", 1000.0, 1800.0)];
        let r = match_detections(&[event("Swipe", 3500.0)], &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!((r.total_tp, r.total_fp, r.total_fn), (1, 0, 0));
        // Just outside the 2 s window is an FP.
        let r = match_detections(&[event("Swipe", 3900.0)], &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!((r.total_tp, r.total_fp, r.total_fn), (0, 1, 1));
    }

    #[test]
    fn duplicates_absorbed() {
        let t = vec![truth("Swipe", 1000.0, 1800.0)];
        let events = vec![
            event("Swipe", 1200.0),
            event("Swipe", 1500.0),
            event("Swipe", 1900.0),
        ];
        let r = match_detections(&events, &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!((r.total_tp, r.total_fp, r.total_fn), (1, 0, 0));
    }

    #[test]
    fn wrong_gesture_or_hand_is_fp() {
        let t = vec![truth("Swipe", 1000.0, 1800.0)];
        let mut e = event("Wave", 1500.0);
        let r = match_detections(&[e.clone()], &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!((r.total_tp, r.total_fp, r.total_fn), (0, 1, 1));
        e = event("Swipe", 1500.0);
        e.hand = HandSide::Left;
        let r = match_detections(&[e], &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!((r.total_tp, r.total_fp, r.total_fn), (0, 1, 1));
    }

    #[test]
    fn order_independent() {
        let t = vec![
            truth("Swipe", 1000.0, 1800.0),
            truth("Swipe", 8000.0, 8800.0),
        ];
        let mut events = vec![
            event("Swipe", 9000.0),
            event("Swipe", 1200.0),
            event("Swipe", 4000.0),
        ];
        let a = match_detections(&events, &t, DEFAULT_MATCH_WINDOW_MS);
        events.reverse();
        let b = match_detections(&events, &t, DEFAULT_MATCH_WINDOW_MS);
        assert_eq!(a, b);
        assert_eq!(a.total_tp + a.total_fn, 2);
    }

    #[test]
    fn conservation_property() {
        let mut r = crate::rng::SplitMix64::new(21);
        for _ in 0..20 {
            let t: AnnotationTrack = (0..10)
                .map(|i| {
                    let s = i as f64 * 5000.0 + r.range_f64(0.0, 1000.0);
                    truth(if i % 2 == 0 { "A" } else { "B" }, s, s + 800.0)
                })
                .collect();
            let events: Vec<_> = (0..15)
                .map(|_| {
                    event(
                        if r.next_f64() < 0.5 { "A" } else { "B" },
                        r.range_f64(0.0, 60_000.0),
                    )
                })
                .collect();
            let rep = match_detections(&events, &t, DEFAULT_MATCH_WINDOW_MS);
            assert_eq!(rep.total_tp + rep.total_fn, t.len());
            for g in &rep.per_gesture {
                let n_truth = t.iter().filter(|a| a.gesture_name == g.gesture_name).count();
                assert_eq!(g.tp + g.fn_, n_truth);
            }
        }
    }

    #[test]
    fn fp_interval_arithmetic() {
        assert_eq!(fp_interval(10, 200.0), 20.0);
        assert!(fp_interval(0, 100.0).is_infinite());
    }

    fn flat(depth: u16, n: usize) -> Vec<u16> {
        vec![pack_depth_pixel(depth, 0).unwrap(); n]
    }

    #[test]
    fn static_stream_one_interval() {
        let px: Vec<Vec<u16>> = (0..301).map(|_| flat(2000, 16)).collect();
        let frames: Vec<DepthView> = px
            .iter()
            .enumerate()
            .map(|(i, p)| DepthView {
                timestamp_ms: i as u64 * 33,
                pixels: p,
            })
            .collect();
        let ivs = still_frames(&frames, 8.0, 5.0);
        assert_eq!(ivs.len(), 1);
        assert_eq!(ivs[0].start_ms, 0);
        assert_eq!(ivs[0].end_ms, 300 * 33);
    }

    #[test]
    fn constant_motion_no_intervals() {
        let px: Vec<Vec<u16>> = (0..300).map(|i| flat(2000 + (i % 2) * 50, 16)).collect();
        let frames: Vec<DepthView> = px
            .iter()
            .enumerate()
            .map(|(i, p)| DepthView {
                timestamp_ms: i as u64 * 33,
                pixels: p,
            })
            .collect();
        assert!(still_frames(&frames, 8.0, 5.0).is_empty());
    }

    #[test]
    fn embedded_still_segment_found() {
        // 3 s motion, 6 s still, 3 s motion at 30 fps.
        let mut px: Vec<Vec<u16>> = Vec::new();
        for i in 0..90 {
            px.push(flat(2000 + (i % 2) * 50, 16));
        }
        for _ in 0..180 {
            px.push(flat(3000, 16));
        }
        for i in 0..90 {
            px.push(flat(2000 + (i % 2) * 50, 16));
        }
        let frames: Vec<DepthView> = px
            .iter()
            .enumerate()
            .map(|(i, p)| DepthView {
                timestamp_ms: i as u64 * 33,
                pixels: p,
            })
            .collect();
        let ivs = still_frames(&frames, 8.0, 5.0);
        assert_eq!(ivs.len(), 1);
        // Interval should match the still segment within one frame.
        assert!((ivs[0].start_ms as i64 - 90 * 33).abs() <= 33);
        assert!((ivs[0].end_ms as i64 - 269 * 33).abs() <= 33);
        assert!(ivs[0].representative >= 90 && ivs[0].representative < 270);
    }

    #[test]
    fn occupancy_basics() {
        let bg = flat(2000, 16);
        let mut body = flat(2000, 16);
        body[5] = pack_depth_pixel(1500, 1).unwrap();
        let m = occupancy_map(&[&bg], 4, 4).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
        let m = occupancy_map(&[&body], 4, 4).unwrap();
        assert_eq!(m.values[5], 1.0);
        assert_eq!(m.values.iter().filter(|&&v| v > 0.0).count(), 1);
        let m = occupancy_map(&[&bg, &body], 4, 4).unwrap();
        assert_eq!(m.values[5], 0.5);
    }

    #[test]
    fn occupancy_dimension_mismatch() {
        let a = flat(2000, 16);
        assert!(occupancy_map(&[&a], 5, 5).is_err());
    }

    #[test]
    fn zone_clamps_and_bounds() {
        let g = OccupancyMap {
            width: 2,
            height: 2,
            values: vec![0.8, 0.2, 0.0, 0.5],
        };
        let b = OccupancyMap {
            width: 2,
            height: 2,
            values: vec![0.5, 0.4, 0.0, 0.5],
        };
        let z = gesture_zone(&g, &b).unwrap();
        assert_eq!(z.values, vec![0.30000000000000004, 0.0, 0.0, 0.0]);
        for (zv, gv) in z.values.iter().zip(&g.values) {
            assert!(*zv >= 0.0 && zv <= gv);
        }
        let ident = gesture_zone(&g, &g).unwrap();
        assert!(ident.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gap_stats_examples() {
        let s = gap_stats(&[0, 33, 66]).unwrap();
        assert_eq!((s.min_ms, s.median_ms, s.max_ms), (33, 33, 33));
        let s = gap_stats(&[0, 33, 100]).unwrap();
        assert_eq!((s.min_ms, s.max_ms), (33, 67));
        assert!(gap_stats(&[0]).is_err());
    }
}
