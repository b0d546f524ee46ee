//! End-to-end glue: session frames → observation sequences → trained
//! network → detections → reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use bgac_core::eval::{Annotation, AnnotationTrack};
use bgac_core::features::{extract_sequences, ObservationSequence, ALPHABET};
use bgac_core::gsn::{
    classify_isolated, spot, DetectionEvent, GestureSpottingNetwork, GestureVariant, SpotConfig,
};
use bgac_core::hmm::{baum_welch_train, Topology, TrainOptions};
use bgac_core::skeleton::{resample_skeletons, HandSide, TimedSkeleton};

use crate::config::ToolkitConfig;
use crate::container::Frame;
use crate::synth::{isolated_performance, GestureTemplate};

/// Group a session's skeleton frames into one timestamped stream per
/// tracked player id.
pub fn skeleton_streams(frames: &[Frame]) -> BTreeMap<u8, Vec<TimedSkeleton>> {
    let mut streams: BTreeMap<u8, Vec<TimedSkeleton>> = BTreeMap::new();
    for f in frames {
        let Frame::Skeleton(rec) = f else { continue };
        for skel in &rec.skeletons {
            streams.entry(skel.player_id).or_default().push(TimedSkeleton {
                timestamp_ms: rec.timestamp_ms as f64,
                skeleton: skel.clone(),
            });
        }
    }
    streams
}

/// All observation sequences of a session for the requested hands.
pub fn sequences_from_frames(
    frames: &[Frame],
    cfg: &ToolkitConfig,
    hands: &[HandSide],
) -> Vec<ObservationSequence> {
    let mut out = Vec::new();
    for (player_id, stream) in skeleton_streams(frames) {
        let segments = resample_skeletons(&stream, cfg.resample_hz);
        for &hand in hands {
            out.extend(extract_sequences(&segments, hand, player_id, cfg.resample_hz, &cfg.features));
        }
    }
    out
}

/// Symbols for one isolated synthetic performance.
pub fn isolated_symbols(tpl: &GestureTemplate, seed: u64, cfg: &ToolkitConfig) -> Vec<u16> {
    let stream = isolated_performance(tpl, seed);
    let segments = resample_skeletons(&stream, cfg.resample_hz);
    let seqs = extract_sequences(&segments, HandSide::Right, 1, cfg.resample_hz, &cfg.features);
    seqs.into_iter().flat_map(|s| s.symbols).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub gesture_names: Vec<String>,
    pub examples_per_gesture: usize,
    pub held_out_per_gesture: usize,
    pub held_out_accuracy: f64,
}

/// Train a network from synthetic isolated examples: `examples_per`
/// performances per template, with every 10th held out for the isolated
/// accuracy estimate.
pub fn train_network_synthetic(
    templates: &[GestureTemplate],
    examples_per: usize,
    n_states: usize,
    seed: u64,
    cfg: &ToolkitConfig,
    spot_cfg: SpotConfig,
) -> anyhow::Result<(GestureSpottingNetwork, TrainSummary)> {
    let mut train: Vec<(String, Vec<Vec<u16>>)> = Vec::new();
    let mut held_out: Vec<(String, Vec<u16>)> = Vec::new();
    for (gi, tpl) in templates.iter().enumerate() {
        let mut seqs = Vec::with_capacity(examples_per);
        for e in 0..examples_per {
            let ex_seed = seed
                .wrapping_mul(1_000_003)
                .wrapping_add((gi * 100_000 + e) as u64);
            let symbols = isolated_symbols(tpl, ex_seed, cfg);
            if e % 10 == 9 {
                held_out.push((tpl.name.clone(), symbols));
            } else {
                seqs.push(symbols);
            }
        }
        train.push((tpl.name.clone(), seqs));
    }
    let net = train_from_sequences(&train, n_states, seed, cfg, spot_cfg)?;
    let mut correct = 0usize;
    for (truth, symbols) in &held_out {
        let (got, _) = classify_isolated(&net.variants, symbols)
            .map_err(|e| anyhow::anyhow!("classification: {e:?}"))?;
        if got == truth {
            correct += 1;
        }
    }
    let summary = TrainSummary {
        gesture_names: templates.iter().map(|t| t.name.clone()).collect(),
        examples_per_gesture: examples_per,
        held_out_per_gesture: examples_per / 10,
        held_out_accuracy: if held_out.is_empty() {
            f64::NAN
        } else {
            correct as f64 / held_out.len() as f64
        },
    };
    Ok((net, summary))
}

/// Train one left-to-right variant per gesture from labeled sequences.
pub fn train_from_sequences(
    per_gesture: &[(String, Vec<Vec<u16>>)],
    n_states: usize,
    seed: u64,
    cfg: &ToolkitConfig,
    spot_cfg: SpotConfig,
) -> anyhow::Result<GestureSpottingNetwork> {
    let mut variants = Vec::with_capacity(per_gesture.len());
    for (gi, (name, seqs)) in per_gesture.iter().enumerate() {
        if seqs.is_empty() {
            anyhow::bail!("no training sequences for gesture '{name}'");
        }
        let refs: Vec<&[u16]> = seqs.iter().map(|s| s.as_slice()).collect();
        let opts = TrainOptions {
            emission_floor: spot_cfg.emission_floor,
            seed: seed.wrapping_add(gi as u64),
            ..Default::default()
        };
        let result = baum_welch_train(&refs, n_states, ALPHABET, Topology::LeftToRight, &opts)
            .map_err(|e| anyhow::anyhow!("training '{name}': {e:?}"))?;
        variants.push(GestureVariant {
            gesture_name: name.clone(),
            variant_name: String::from("default"),
            model: result.model,
        });
    }
    Ok(GestureSpottingNetwork::new(variants, spot_cfg, cfg.features, cfg.resample_hz))
}

/// Cut labeled training sequences out of an annotated session.
pub fn training_sequences_from_session(
    frames: &[Frame],
    annotations: &AnnotationTrack,
    cfg: &ToolkitConfig,
) -> Vec<(String, Vec<Vec<u16>>)> {
    let streams = skeleton_streams(frames);
    let mut per_gesture: BTreeMap<String, Vec<Vec<u16>>> = BTreeMap::new();
    for ann in annotations {
        let Some(stream) = streams.get(&ann.skeleton_id) else { continue };
        let window: Vec<TimedSkeleton> = stream
            .iter()
            .filter(|ts| ts.timestamp_ms >= ann.start_ms - 50.0 && ts.timestamp_ms <= ann.end_ms + 50.0)
            .cloned()
            .collect();
        if window.len() < 2 {
            continue;
        }
        let segments = resample_skeletons(&window, cfg.resample_hz);
        let symbols: Vec<u16> = extract_sequences(
            &segments,
            ann.hand_side,
            ann.skeleton_id,
            cfg.resample_hz,
            &cfg.features,
        )
        .into_iter()
        .flat_map(|s| s.symbols)
        .collect();
        if !symbols.is_empty() {
            per_gesture.entry(ann.gesture_name.clone()).or_default().push(symbols);
        }
    }
    per_gesture.into_iter().collect()
}

/// Spot an entire session: every tracked skeleton, the requested hands.
/// Events come back ordered by end timestamp.
pub fn spot_session(
    net: &GestureSpottingNetwork,
    frames: &[Frame],
    hands: &[HandSide],
) -> Vec<DetectionEvent> {
    let cfg = ToolkitConfig {
        features: net.feature_config,
        resample_hz: net.resample_hz,
    };
    let mut events = Vec::new();
    for seq in sequences_from_frames(frames, &cfg, hands) {
        events.extend(spot(net, &seq));
    }
    events.sort_by(|a, b| a.end_timestamp_ms.total_cmp(&b.end_timestamp_ms));
    events
}

/// Observed exposure of a session: (total person-seconds, tracked
/// person-seconds). Total counts session span × bodies; tracked counts
/// only spans where skeleton frames actually carry each body.
pub fn session_exposure(frames: &[Frame]) -> (f64, f64) {
    let streams = skeleton_streams(frames);
    let mut span_end = 0.0f64;
    for f in frames {
        span_end = span_end.max(f.timestamp_ms() as f64);
    }
    let n_bodies = streams.len().max(1);
    let total = span_end / 1000.0 * n_bodies as f64;
    let mut tracked = 0.0;
    for stream in streams.values() {
        if let (Some(first), Some(last)) = (stream.first(), stream.last()) {
            tracked += (last.timestamp_ms - first.timestamp_ms) / 1000.0;
        }
    }
    (total, tracked)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GestureFpCounts {
    pub gesture_name: String,
    pub fp_a: usize,
    pub fp_b: usize,
    /// fp_a / fp_b; infinity when b has none and a has some, 1.0 when
    /// both are zero.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub per_gesture: Vec<GestureFpCounts>,
    pub total_a: usize,
    pub total_b: usize,
    pub total_ratio: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    match (a, b) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => a as f64 / b as f64,
    }
}

/// Run two networks over the same background session and compare their
/// false-positive counts (every detection on a background-only session is
/// a false positive).
pub fn compare_networks(
    net_a: &GestureSpottingNetwork,
    net_b: &GestureSpottingNetwork,
    frames: &[Frame],
    hands: &[HandSide],
) -> anyhow::Result<CompareReport> {
    if net_a.feature_config != net_b.feature_config || net_a.resample_hz != net_b.resample_hz {
        anyhow::bail!("networks were trained with different feature configs");
    }
    let events_a = spot_session(net_a, frames, hands);
    let events_b = spot_session(net_b, frames, hands);

    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for v in &net_a.variants {
        counts.entry(v.gesture_name.clone()).or_default();
    }
    for v in &net_b.variants {
        counts.entry(v.gesture_name.clone()).or_default();
    }
    for e in &events_a {
        counts.entry(e.gesture_name.clone()).or_default().0 += 1;
    }
    for e in &events_b {
        counts.entry(e.gesture_name.clone()).or_default().1 += 1;
    }
    let per_gesture: Vec<GestureFpCounts> = counts
        .into_iter()
        .map(|(gesture_name, (fp_a, fp_b))| GestureFpCounts {
            gesture_name,
            fp_a,
            fp_b,
            ratio: ratio(fp_a, fp_b),
        })
        .collect();
    let total_a = events_a.len();
    let total_b = events_b.len();
    Ok(CompareReport {
        per_gesture,
        total_a,
        total_b,
        total_ratio: ratio(total_a, total_b),
    })
}

/// Detections interchange file.
#[derive(Debug, Serialize, Deserialize)]
struct DetectionFile {
    version: u32,
    detections: Vec<DetectionEvent>,
}

pub fn write_detections(path: &std::path::Path, events: &[DetectionEvent]) -> anyhow::Result<()> {
    let file = DetectionFile { version: 1, detections: events.to_vec() };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn read_detections(path: &std::path::Path) -> anyhow::Result<Vec<DetectionEvent>> {
    let file: DetectionFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.version != 1 {
        anyhow::bail!("unsupported detection file version {}", file.version);
    }
    Ok(file.detections)
}

/// Ground-truth annotations restricted to what a given gesture list can
/// produce; used to sanity-check training coverage.
pub fn gestures_in(annotations: &[Annotation]) -> Vec<String> {
    let mut names: Vec<String> = annotations.iter().map(|a| a.gesture_name.clone()).collect();
    names.sort();
    names.dedup();
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{original_templates, template_by_name, generate_session, Intensity, SynthConfig};

    fn quick_cfg() -> ToolkitConfig {
        ToolkitConfig::default()
    }

    #[test]
    fn isolated_symbols_nonempty_and_in_range() {
        let tpl = template_by_name("Swipe").unwrap();
        let syms = isolated_symbols(&tpl, 3, &quick_cfg());
        assert!(syms.len() >= 15, "got {} symbols", syms.len());
        assert!(syms.iter().all(|&s| (s as usize) < ALPHABET));
    }

    #[test]
    fn swipe_examples_show_rightward_motion() {
        let tpl = template_by_name("Swipe").unwrap();
        let syms = isolated_symbols(&tpl, 5, &quick_cfg());
        let has_plus_x = syms.iter().any(|&s| {
            let (_, v) = bgac_core::features::unpack_symbol(s);
            v.direction[0] == 1
        });
        assert!(has_plus_x);
    }

    #[test]
    fn small_training_run_classifies_held_out() {
        let templates = vec![
            template_by_name("Swipe").unwrap(),
            template_by_name("Circle").unwrap(),
        ];
        let (net, summary) = train_network_synthetic(
            &templates,
            20,
            4,
            11,
            &quick_cfg(),
            SpotConfig::default(),
        )
        .unwrap();
        assert_eq!(net.variants.len(), 2);
        assert_eq!(net.threshold.n_states, 8);
        assert!(summary.held_out_accuracy >= 0.75, "{}", summary.held_out_accuracy);
    }

    #[test]
    fn session_sequences_cover_all_bodies_and_hands() {
        let cfg = SynthConfig {
            duration_s: 8.0,
            n_skeletons: 2,
            prompts_per_gesture: 0,
            render_depth: false,
            ..Default::default()
        };
        let out = generate_session(&cfg);
        let seqs = sequences_from_frames(
            &out.frames,
            &quick_cfg(),
            &[HandSide::Left, HandSide::Right],
        );
        let mut keys: Vec<(u8, HandSide)> = seqs.iter().map(|s| (s.skeleton_id, s.hand)).collect();
        keys.sort_by_key(|k| (k.0, k.1 == HandSide::Right));
        keys.dedup();
        assert_eq!(keys.len(), 4);
    }

    #[test]
    fn exposure_counts_tracked_time() {
        let cfg = SynthConfig {
            duration_s: 10.0,
            prompts_per_gesture: 0,
            render_depth: false,
            intensity: Intensity::Quiet,
            ..Default::default()
        };
        let out = generate_session(&cfg);
        let (total, tracked) = session_exposure(&out.frames);
        assert!(total > 9.0 && total < 11.0, "total {total}");
        assert!(tracked > 9.0 && tracked <= total + 1e-9, "tracked {tracked}");
    }

    #[test]
    fn compare_network_with_itself_is_unity() {
        let templates = original_templates()[..1].to_vec();
        let (net, _) = train_network_synthetic(
            &templates,
            10,
            4,
            3,
            &quick_cfg(),
            SpotConfig::default(),
        )
        .unwrap();
        let cfg = SynthConfig {
            duration_s: 20.0,
            prompts_per_gesture: 0,
            render_depth: false,
            ..Default::default()
        };
        let out = generate_session(&cfg);
        let report = compare_networks(&net, &net, &out.frames, &[HandSide::Right]).unwrap();
        assert_eq!(report.total_a, report.total_b);
        assert!(report.per_gesture.iter().all(|g| g.ratio == 1.0));
    }
}
