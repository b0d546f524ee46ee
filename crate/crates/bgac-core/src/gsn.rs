//! The gesture spotting network: per-variant left-to-right gesture HMMs
//! in parallel with an ergodic threshold model synthesized from their
//! states. A gesture is spotted when the final state of one of the
//! gesture HMMs scores higher than every state of the threshold model.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureConfig, ObservationSequence};
use crate::hmm::{forward_log_likelihood, HmmError, HmmModel, Topology};
use crate::skeleton::HandSide;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureVariant {
    pub gesture_name: String,
    pub variant_name: String,
    pub model: HmmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotConfig {
    /// Minimum candidate segment length in frames.
    pub min_len_frames: usize,
    /// Dead time after an emission, per gesture.
    pub refractory_ms: f64,
    /// Emission probability floor applied at training time.
    pub emission_floor: f64,
    /// Per-gesture minimum segment duration in ms (e.g. the 800 ms hold
    /// required of Point and Wave).
    pub gesture_min_duration_ms: Vec<(String, f64)>,
}

impl Default for SpotConfig {
    fn default() -> Self {
        SpotConfig {
            min_len_frames: 6,
            refractory_ms: 1000.0,
            emission_floor: 1e-5,
            gesture_min_duration_ms: vec![
                (String::from("Point"), 800.0),
                (String::from("Wave"), 800.0),
            ],
        }
    }
}

impl SpotConfig {
    pub fn min_duration_for(&self, gesture: &str) -> f64 {
        self.gesture_min_duration_ms
            .iter()
            .find(|(g, _)| g == gesture)
            .map(|&(_, ms)| ms)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureSpottingNetwork {
    pub variants: Vec<GestureVariant>,
    pub threshold: HmmModel,
    pub config: SpotConfig,
    /// Feature pipeline settings the network was trained with; spotting a
    /// stream discretized differently is a configuration error.
    pub feature_config: FeatureConfig,
    pub resample_hz: f64,
}

impl GestureSpottingNetwork {
    pub fn new(
        variants: Vec<GestureVariant>,
        config: SpotConfig,
        feature_config: FeatureConfig,
        resample_hz: f64,
    ) -> Self {
        let threshold = build_threshold_model(&variants);
        GestureSpottingNetwork {
            variants,
            threshold,
            config,
            feature_config,
            resample_hz,
        }
    }
}

/// Synthesize the threshold model from the trained gesture HMMs: one
/// ergodic state per gesture state, keeping that state's self-transition
/// probability and emission row, with the remaining mass spread uniformly
/// over all other threshold states. Initial distribution is uniform.
///
/// Copied self-transitions are capped below 1: trained final states are
/// absorbing, and an absorbing copy would trap the threshold's mass — once
/// a gesture ends, the rest of the threshold vector would sit many orders
/// of magnitude below the trap and background likelihood could never
/// recover, so every restarted gesture path would out-score it.
pub const THRESHOLD_SELF_CAP: f64 = 0.95;

pub fn build_threshold_model(variants: &[GestureVariant]) -> HmmModel {
    let n: usize = variants.iter().map(|v| v.model.n_states).sum();
    let n_symbols = variants
        .first()
        .map(|v| v.model.n_symbols)
        .unwrap_or(crate::features::ALPHABET);
    let mut transitions = vec![0.0; n * n];
    let mut emissions = vec![0.0; n * n_symbols];

    let mut k = 0usize;
    for variant in variants {
        let m = &variant.model;
        for i in 0..m.n_states {
            let self_p = m.a(i, i).min(THRESHOLD_SELF_CAP);
            transitions[k * n + k] = self_p;
            if n > 1 {
                let spread = (1.0 - self_p) / (n - 1) as f64;
                for j in 0..n {
                    if j != k {
                        transitions[k * n + j] = spread;
                    }
                }
            } else {
                transitions[k * n + k] = 1.0;
            }
            emissions[k * n_symbols..(k + 1) * n_symbols]
                .copy_from_slice(&m.emissions[i * m.n_symbols..(i + 1) * m.n_symbols]);
            k += 1;
        }
    }

    HmmModel {
        n_states: n,
        n_symbols,
        topology: Topology::Ergodic,
        initial: vec![1.0 / n.max(1) as f64; n],
        transitions,
        emissions,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub gesture_name: String,
    pub variant_name: String,
    pub skeleton_id: u8,
    pub hand: HandSide,
    pub start_timestamp_ms: f64,
    pub end_timestamp_ms: f64,
    /// ln(final-state score) − ln(best threshold state score) at emission.
    pub log_likelihood_margin: f64,
}

struct VariantState {
    /// Best-path score per state, shared-scale normalized.
    score: Vec<f64>,
    /// Frame index at which the dominant path into each state started.
    start: Vec<usize>,
    /// Frame index of the last emission from this variant. A new emission
    /// requires a path that started after this frame; without that gate a
    /// path parked in the absorbing final state re-fires at every
    /// refractory expiry on a stationary stream.
    emit_frame: Option<usize>,
}

/// Online spotting engine for one (skeleton, hand) stream. Feed frames in
/// timestamp order; emitted events are deterministic in the input.
pub struct Spotter<'a> {
    network: &'a GestureSpottingNetwork,
    variants: Vec<VariantState>,
    threshold: Vec<f64>,
    frame: usize,
    /// Last emission time per gesture name, for the refractory gate.
    last_emit: Vec<(String, f64)>,
}

impl<'a> Spotter<'a> {
    pub fn new(network: &'a GestureSpottingNetwork) -> Self {
        let variants = network
            .variants
            .iter()
            .map(|v| VariantState {
                score: vec![0.0; v.model.n_states],
                start: vec![0; v.model.n_states],
                emit_frame: None,
            })
            .collect();
        Spotter {
            network,
            variants,
            threshold: vec![0.0; network.threshold.n_states],
            frame: 0,
            last_emit: Vec::new(),
        }
    }

    /// Current final-state-vs-threshold log margin for one variant; test
    /// and diagnostics hook.
    pub fn debug_margin(&self, variant: usize) -> f64 {
        let thr_max = self.threshold.iter().cloned().fold(0.0f64, f64::max);
        let fin = *self.variants[variant].score.last().unwrap();
        libm::log(fin.max(f64::MIN_POSITIVE)) - libm::log(thr_max.max(f64::MIN_POSITIVE))
    }

    /// Advance one frame; returns a detection if one fires at this frame.
    pub fn step(&mut self, symbol: u16, timestamp_ms: f64) -> Option<DetectionEvent> {
        let net = self.network;
        let t = self.frame;
        self.frame += 1;

        let thr = &net.threshold;
        let thr_top_prev = if t == 0 {
            1.0
        } else {
            self.threshold.iter().cloned().fold(0.0f64, f64::max)
        };

        // Scores use max-product (best single state path) dynamic
        // programming rather than sum-forward: with per-frame gesture
        // restarts, summed mass injected at threshold parity accumulates
        // through self-loops and the final state eventually outgrows the
        // threshold on any stationary input. Max-product has no such
        // accumulation and makes start backtracking exact.

        // Propagate the threshold model (no restarts; the ergodic
        // topology mixes on its own).
        let mut thr_next = vec![0.0f64; thr.n_states];
        if t == 0 {
            for j in 0..thr.n_states {
                thr_next[j] = thr.initial[j] * thr.b(j, symbol as usize);
            }
        } else {
            for j in 0..thr.n_states {
                let mut best = 0.0f64;
                for i in 0..thr.n_states {
                    let contrib = self.threshold[i] * thr.a(i, j);
                    if contrib > best {
                        best = contrib;
                    }
                }
                thr_next[j] = best * thr.b(j, symbol as usize);
            }
        }

        // Propagate each gesture variant. State 0 may restart from the
        // background hypothesis: a gesture can begin at any frame, so the
        // entry state competes between continuing and branching off the
        // best threshold score.
        let mut next_scores: Vec<Vec<f64>> = Vec::with_capacity(self.variants.len());
        let mut next_starts: Vec<Vec<usize>> = Vec::with_capacity(self.variants.len());
        for (vs, variant) in self.variants.iter().zip(&net.variants) {
            let m = &variant.model;
            let n = m.n_states;
            let mut score = vec![0.0f64; n];
            let mut start = vec![0usize; n];
            for j in 0..n {
                let mut best = 0.0f64;
                let mut best_start = t;
                if t > 0 {
                    for i in 0..n {
                        // Same cap as the threshold transitions: otherwise
                        // a variant path through near-certain transitions
                        // (absorbing final states train to exactly 1) gains
                        // ln(1/cap) per frame over the threshold on symbol
                        // runs that no model explains, and eventually fires.
                        let a = m.a(i, j).min(THRESHOLD_SELF_CAP);
                        if a == 0.0 {
                            continue;
                        }
                        let contrib = vs.score[i] * a;
                        if contrib > best {
                            best = contrib;
                            best_start = vs.start[i];
                        }
                    }
                }
                if j == 0 {
                    // Branching off the background costs slightly more
                    // than remaining in the background's stickiest state
                    // (cap²): with every transition capped, a path built
                    // on symbols no model explains then tops out at
                    // cap × threshold, a strictly negative margin.
                    let restart = thr_top_prev * m.initial[0] * THRESHOLD_SELF_CAP * THRESHOLD_SELF_CAP;
                    if restart > best {
                        best = restart;
                        best_start = t;
                    }
                }
                score[j] = best * m.b(j, symbol as usize);
                start[j] = best_start;
            }
            next_scores.push(score);
            next_starts.push(start);
        }

        // Shared per-frame scale: the max unnormalized score across all
        // states of all models, so scores stay comparable.
        let mut c = thr_next.iter().cloned().fold(0.0f64, f64::max);
        for s in &next_scores {
            c = s.iter().cloned().fold(c, f64::max);
        }
        if c > 0.0 {
            for v in thr_next.iter_mut() {
                *v /= c;
            }
            for s in next_scores.iter_mut() {
                for v in s.iter_mut() {
                    *v /= c;
                }
            }
        }

        self.threshold = thr_next;
        for ((vs, score), start) in self
            .variants
            .iter_mut()
            .zip(next_scores)
            .zip(next_starts)
        {
            vs.score = score;
            vs.start = start;
        }

        self.detect(symbol, timestamp_ms, t)
    }

    fn detect(&mut self, _symbol: u16, timestamp_ms: f64, t: usize) -> Option<DetectionEvent> {
        let net = self.network;
        let thr_max = self.threshold.iter().cloned().fold(0.0f64, f64::max);

        let mut best: Option<(usize, f64, usize)> = None; // (variant idx, margin, start frame)
        for (vi, (vs, _variant)) in self.variants.iter().zip(&net.variants).enumerate() {
            let final_score = *vs.score.last().unwrap();
            if final_score <= thr_max || final_score <= 0.0 {
                continue;
            }
            let start_frame = *vs.start.last().unwrap();
            if let Some(ef) = vs.emit_frame {
                if start_frame <= ef {
                    continue;
                }
            }
            let seg_len = t - start_frame + 1;
            if seg_len < net.config.min_len_frames {
                continue;
            }
            let margin = libm::log(final_score) - libm::log(thr_max.max(f64::MIN_POSITIVE));
            match best {
                Some((_, m, _)) if m >= margin => {}
                _ => best = Some((vi, margin, start_frame)),
            }
        }

        let (vi, margin, start_frame) = best?;
        let variant = &net.variants[vi];
        let frame_ms = 1000.0 / net.resample_hz;
        let start_ms = timestamp_ms - (t - start_frame) as f64 * frame_ms;

        let min_dur = net.config.min_duration_for(&variant.gesture_name);
        if timestamp_ms - start_ms < min_dur {
            return None;
        }

        if let Some((_, last)) = self
            .last_emit
            .iter()
            .find(|(g, _)| *g == variant.gesture_name)
        {
            if timestamp_ms - last < net.config.refractory_ms {
                return None;
            }
        }

        match self
            .last_emit
            .iter_mut()
            .find(|(g, _)| *g == variant.gesture_name)
        {
            Some(entry) => entry.1 = timestamp_ms,
            None => self
                .last_emit
                .push((variant.gesture_name.clone(), timestamp_ms)),
        }
        self.variants[vi].emit_frame = Some(t);

        Some(DetectionEvent {
            gesture_name: variant.gesture_name.clone(),
            variant_name: variant.variant_name.clone(),
            skeleton_id: 0,
            hand: HandSide::Right,
            start_timestamp_ms: start_ms,
            end_timestamp_ms: timestamp_ms,
            log_likelihood_margin: margin,
        })
    }
}

/// Run the spotting engine over a whole observation sequence.
pub fn spot(network: &GestureSpottingNetwork, obs: &ObservationSequence) -> Vec<DetectionEvent> {
    let mut spotter = Spotter::new(network);
    let mut events = Vec::new();
    for (&sym, &ts) in obs.symbols.iter().zip(&obs.timestamps_ms) {
        if let Some(mut ev) = spotter.step(sym, ts) {
            ev.skeleton_id = obs.skeleton_id;
            ev.hand = obs.hand;
            events.push(ev);
        }
    }
    events
}

/// Isolated classification: the gesture whose variant scores the
/// sequence highest. Ties break toward the earlier variant in list order.
pub fn classify_isolated<'a>(
    variants: &'a [GestureVariant],
    obs: &[u16],
) -> Result<(&'a str, f64), HmmError> {
    if variants.is_empty() {
        return Err(HmmError::NoSequences);
    }
    let mut best_idx = 0usize;
    let mut best_ll = f64::NEG_INFINITY;
    for (i, variant) in variants.iter().enumerate() {
        let ll = forward_log_likelihood(&variant.model, obs)?;
        if ll > best_ll {
            best_ll = ll;
            best_idx = i;
        }
    }
    Ok((&variants[best_idx].gesture_name, best_ll))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{baum_welch_train, TrainOptions};
    use rand::{Rng, SeedableRng};

    fn toy_variant(name: &str, variant: &str, seed: u64, n_symbols: usize) -> GestureVariant {
        GestureVariant {
            gesture_name: String::from(name),
            variant_name: String::from(variant),
            model: HmmModel::seeded_init(4, n_symbols, Topology::LeftToRight, seed),
        }
    }

    #[test]
    fn threshold_state_count() {
        let variants: Vec<_> = (0..5)
            .map(|i| toy_variant("g", &alloc::format!("v{i}"), i as u64, 8))
            .collect();
        let thr = build_threshold_model(&variants);
        assert_eq!(thr.n_states, 20);
        thr.validate(1e-9).unwrap();
    }

    #[test]
    fn threshold_transition_spread() {
        let mut v = toy_variant("g", "v", 0, 8);
        // Pin one self-transition to check the spread arithmetic.
        v.model.transitions[0] = 0.6;
        v.model.transitions[1] = 0.4;
        let variants: Vec<_> = core::iter::once(v)
            .chain((1..5).map(|i| toy_variant("g", &alloc::format!("v{i}"), i as u64, 8)))
            .collect();
        let thr = build_threshold_model(&variants);
        assert_eq!(thr.n_states, 20);
        assert!((thr.a(0, 0) - 0.6).abs() < 1e-12);
        for j in 1..20 {
            assert!((thr.a(0, j) - 0.4 / 19.0).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_copies_emission_rows() {
        let variants: Vec<_> = (0..3)
            .map(|i| toy_variant("g", &alloc::format!("v{i}"), i as u64, 8))
            .collect();
        let thr = build_threshold_model(&variants);
        let mut k = 0;
        for v in &variants {
            for i in 0..v.model.n_states {
                assert_eq!(
                    &thr.emissions[k * 8..(k + 1) * 8],
                    &v.model.emissions[i * 8..(i + 1) * 8]
                );
                k += 1;
            }
        }
    }

    /// Sample a sequence from a model's own generative process.
    fn sample_from(model: &HmmModel, len: usize, rng: &mut impl Rng) -> Vec<u16> {
        let mut state = {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut s = 0;
            for (i, &p) in model.initial.iter().enumerate() {
                acc += p;
                if r <= acc {
                    s = i;
                    break;
                }
            }
            s
        };
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut sym = 0u16;
            for k in 0..model.n_symbols {
                acc += model.b(state, k);
                if r <= acc {
                    sym = k as u16;
                    break;
                }
            }
            out.push(sym);
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            for j in 0..model.n_states {
                acc += model.a(state, j);
                if r <= acc {
                    state = j;
                    break;
                }
            }
        }
        out
    }

    /// Train a sharp little model on sequences drawn around a symbol ramp.
    fn trained_variant(name: &str, base: u16, seed: u64) -> GestureVariant {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let seqs: Vec<Vec<u16>> = (0..40)
            .map(|_| {
                let mut s = Vec::new();
                for phase in 0..4u16 {
                    for _ in 0..4 {
                        let jitter = rng.gen_range(0..2u16);
                        s.push((base + phase * 2 + jitter) % 16);
                    }
                }
                s
            })
            .collect();
        let refs: Vec<&[u16]> = seqs.iter().map(|s| s.as_slice()).collect();
        let res = baum_welch_train(
            &refs,
            4,
            16,
            Topology::LeftToRight,
            &TrainOptions {
                seed,
                emission_floor: 1e-4,
                ..TrainOptions::default()
            },
        )
        .unwrap();
        GestureVariant {
            gesture_name: String::from(name),
            variant_name: String::from("default"),
            model: res.model,
        }
    }

    fn obs_sequence(symbols: Vec<u16>) -> ObservationSequence {
        let timestamps_ms = (0..symbols.len()).map(|i| i as f64 * 33.333).collect();
        ObservationSequence {
            symbols,
            timestamps_ms,
            hand: HandSide::Right,
            skeleton_id: 1,
        }
    }

    #[test]
    fn classify_isolated_prefers_own_model() {
        let a = trained_variant("A", 0, 1);
        let b = trained_variant("B", 8, 2);
        let variants = vec![a, b];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let fifty: Vec<u16> = sample_from(&variants[0].model, 50, &mut rng);
            let (name, _) = classify_isolated(&variants, &fifty).unwrap();
            assert_eq!(name, "A");
        }
    }

    #[test]
    fn classify_single_variant() {
        let variants = [trained_variant("Only", 0, 1)];
        let (name, _) = classify_isolated(&variants, &[0, 1, 2, 3]).unwrap();
        assert_eq!(name, "Only");
    }

    #[test]
    fn classify_tie_breaks_by_order() {
        let a = trained_variant("First", 0, 1);
        let mut b = a.clone();
        b.gesture_name = String::from("Second");
        let variants = [a, b];
        let (name, _) = classify_isolated(&variants, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(name, "First");
    }

    #[test]
    fn classify_empty_variants_errors() {
        assert!(classify_isolated(&[], &[0]).is_err());
    }

    fn spotting_network(variants: Vec<GestureVariant>) -> GestureSpottingNetwork {
        GestureSpottingNetwork::new(
            variants,
            SpotConfig {
                gesture_min_duration_ms: Vec::new(),
                ..SpotConfig::default()
            },
            FeatureConfig::default(),
            30.0,
        )
    }

    #[test]
    fn rest_stream_no_detections() {
        // Variants trained on moving symbol ramps; a constant "rest"
        // symbol stream should never outscore the threshold.
        let net = spotting_network(vec![trained_variant("A", 0, 1), trained_variant("B", 8, 2)]);
        let obs = obs_sequence(vec![15u16; 300]);
        let events = spot(&net, &obs);
        assert!(events.is_empty(), "{events:?}");
    }

    #[test]
    fn embedded_gesture_detected() {
        let net = spotting_network(vec![trained_variant("A", 0, 1)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        // Background of diffuse random symbols, gesture embedded mid-way.
        let mut symbols: Vec<u16> = (0..150).map(|_| rng.gen_range(0..16)).collect();
        let gesture = sample_from(&net.variants[0].model, 16, &mut rng);
        symbols.splice(75..75, gesture);
        let obs = obs_sequence(symbols);
        let events = spot(&net, &obs);
        assert!(
            events.iter().any(|e| {
                e.gesture_name == "A"
                    && e.end_timestamp_ms >= 75.0 * 33.333
                    && e.start_timestamp_ms <= 95.0 * 33.333
            }),
            "{events:?}"
        );
    }

    #[test]
    fn refractory_separates_repeats() {
        let net = spotting_network(vec![trained_variant("A", 0, 1)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let gesture: Vec<u16> = sample_from(&net.variants[0].model, 16, &mut rng);
        // Two performances 5 s apart inside a rest-like background of a
        // symbol the gesture model was never trained on.
        let mut symbols: Vec<u16> = vec![12u16; 400];
        symbols.splice(200..200, gesture.clone());
        symbols.splice(50..50, gesture);
        let obs = obs_sequence(symbols);
        let events: Vec<_> = spot(&net, &obs)
            .into_iter()
            .filter(|e| e.gesture_name == "A")
            .collect();
        assert_eq!(events.len(), 2, "{events:?}");
    }

    #[test]
    fn spotting_deterministic() {
        let net = spotting_network(vec![trained_variant("A", 0, 1), trained_variant("B", 8, 2)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let symbols: Vec<u16> = (0..500).map(|_| rng.gen_range(0..16)).collect();
        let obs = obs_sequence(symbols);
        let a = spot(&net, &obs);
        let b = spot(&net, &obs);
        assert_eq!(a, b);
    }

    #[test]
    fn threshold_streams_trigger_less_than_gesture_streams() {
        let net = spotting_network(vec![trained_variant("A", 0, 1), trained_variant("B", 8, 2)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);

        let mut thr_detections = 0usize;
        let mut gest_detections = 0usize;
        for _ in 0..5 {
            let thr_stream = sample_from(&net.threshold, 600, &mut rng);
            thr_detections += spot(&net, &obs_sequence(thr_stream)).len();

            let mut gest_stream = Vec::new();
            while gest_stream.len() < 600 {
                gest_stream.extend(sample_from(&net.variants[0].model, 20, &mut rng));
            }
            gest_detections += spot(&net, &obs_sequence(gest_stream)).len();
        }
        assert!(
            thr_detections < gest_detections,
            "threshold {thr_detections} vs gesture {gest_detections}"
        );
    }

    #[test]
    fn empty_sequence_empty_events() {
        let net = spotting_network(vec![trained_variant("A", 0, 1)]);
        let obs = obs_sequence(Vec::new());
        assert!(spot(&net, &obs).is_empty());
    }
}
