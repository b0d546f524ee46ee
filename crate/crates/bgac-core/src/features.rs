//! Discretization of body-relative hand motion into the symbol alphabet
//! the gesture HMMs consume: a 54-value position symbol (binary radius ×
//! three 3-way angle bins) crossed with a 27-value velocity direction
//! symbol, 1458 symbols total.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::skeleton::{hand_vector, HandSide, HandVector, TimedSkeleton};

/// Number of distinct position symbols.
pub const POSITION_SYMBOLS: usize = 54;
/// Number of distinct velocity symbols.
pub const VELOCITY_SYMBOLS: usize = 27;
/// Full alphabet size.
pub const ALPHABET: usize = POSITION_SYMBOLS * VELOCITY_SYMBOLS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleBin {
    Low = 0,
    Mid = 1,
    High = 2,
}

impl AngleBin {
    fn from_index(i: usize) -> Self {
        match i {
            0 => AngleBin::Low,
            1 => AngleBin::Mid,
            _ => AngleBin::High,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositionSymbol {
    pub radius_bit: u8,
    pub angle_x: AngleBin,
    pub angle_y: AngleBin,
    pub angle_z: AngleBin,
}

impl PositionSymbol {
    pub fn index(&self) -> usize {
        self.radius_bit as usize * 27
            + self.angle_x as usize * 9
            + self.angle_y as usize * 3
            + self.angle_z as usize
    }

    pub fn from_index(i: usize) -> Self {
        debug_assert!(i < POSITION_SYMBOLS);
        PositionSymbol {
            radius_bit: (i / 27) as u8,
            angle_x: AngleBin::from_index((i / 9) % 3),
            angle_y: AngleBin::from_index((i / 3) % 3),
            angle_z: AngleBin::from_index(i % 3),
        }
    }
}

/// Velocity direction with components in {-1, 0, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VelocitySymbol {
    pub direction: [i8; 3],
}

impl VelocitySymbol {
    pub const REST: VelocitySymbol = VelocitySymbol { direction: [0; 3] };

    pub fn index(&self) -> usize {
        ((self.direction[0] + 1) as usize) * 9
            + ((self.direction[1] + 1) as usize) * 3
            + (self.direction[2] + 1) as usize
    }

    pub fn from_index(i: usize) -> Self {
        debug_assert!(i < VELOCITY_SYMBOLS);
        VelocitySymbol {
            direction: [(i / 9) as i8 - 1, ((i / 3) % 3) as i8 - 1, (i % 3) as i8 - 1],
        }
    }
}

/// Pack a (position, velocity) pair into a single alphabet index.
pub fn pack_symbol(p: PositionSymbol, v: VelocitySymbol) -> u16 {
    (p.index() * VELOCITY_SYMBOLS + v.index()) as u16
}

/// Inverse of [`pack_symbol`].
pub fn unpack_symbol(sym: u16) -> (PositionSymbol, VelocitySymbol) {
    let i = sym as usize;
    debug_assert!(i < ALPHABET);
    (
        PositionSymbol::from_index(i / VELOCITY_SYMBOLS),
        VelocitySymbol::from_index(i % VELOCITY_SYMBOLS),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Hand vector norm at or above which the radius bit is set.
    pub radius_threshold_m: f64,
    /// Speeds below this discretize to the rest velocity symbol.
    pub speed_threshold_mps: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            radius_threshold_m: 0.25,
            speed_threshold_mps: 0.15,
        }
    }
}

/// Angle bin boundary: ±π/4 of signed elevation toward each axis.
pub const ANGLE_BIN_RAD: f64 = core::f64::consts::FRAC_PI_4;

fn bin_angle(theta: f64) -> AngleBin {
    if theta < -ANGLE_BIN_RAD {
        AngleBin::Low
    } else if theta > ANGLE_BIN_RAD {
        AngleBin::High
    } else {
        AngleBin::Mid
    }
}

/// Discretize a hand vector into a position symbol. The angle toward each
/// axis is the signed elevation asin(vᵢ/‖v‖); a zero vector bins Mid on
/// every axis with the radius bit clear.
pub fn discretize_position(v: &HandVector, cfg: &FeatureConfig) -> PositionSymbol {
    let norm = libm::sqrt(v.v[0] * v.v[0] + v.v[1] * v.v[1] + v.v[2] * v.v[2]);
    if norm == 0.0 {
        return PositionSymbol {
            radius_bit: 0,
            angle_x: AngleBin::Mid,
            angle_y: AngleBin::Mid,
            angle_z: AngleBin::Mid,
        };
    }
    let theta = |c: f64| libm::asin((c / norm).clamp(-1.0, 1.0));
    PositionSymbol {
        radius_bit: (norm >= cfg.radius_threshold_m) as u8,
        angle_x: bin_angle(theta(v.v[0])),
        angle_y: bin_angle(theta(v.v[1])),
        angle_z: bin_angle(theta(v.v[2])),
    }
}

/// Discretize the velocity between two hand vectors to the nearest of the
/// 26 nonzero direction candidates, or the rest symbol below the speed
/// threshold. Cosine ties break toward the lowest packed index.
pub fn discretize_velocity(
    v_now: &HandVector,
    v_prev: &HandVector,
    dt_s: f64,
    cfg: &FeatureConfig,
) -> VelocitySymbol {
    debug_assert!(dt_s > 0.0);
    let vel = [
        (v_now.v[0] - v_prev.v[0]) / dt_s,
        (v_now.v[1] - v_prev.v[1]) / dt_s,
        (v_now.v[2] - v_prev.v[2]) / dt_s,
    ];
    let speed = libm::sqrt(vel[0] * vel[0] + vel[1] * vel[1] + vel[2] * vel[2]);
    if speed < cfg.speed_threshold_mps {
        return VelocitySymbol::REST;
    }
    let mut best = VelocitySymbol::REST;
    let mut best_cos = f64::NEG_INFINITY;
    for i in 0..VELOCITY_SYMBOLS {
        let cand = VelocitySymbol::from_index(i);
        if cand.direction == [0, 0, 0] {
            continue;
        }
        let d = [
            cand.direction[0] as f64,
            cand.direction[1] as f64,
            cand.direction[2] as f64,
        ];
        let dn = libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        let cos = (vel[0] * d[0] + vel[1] * d[1] + vel[2] * d[2]) / (speed * dn);
        if cos > best_cos {
            best_cos = cos;
            best = cand;
        }
    }
    best
}

/// One observation stream extracted from a resampled skeleton segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    pub symbols: Vec<u16>,
    /// Timestamp of each symbol's frame, fractional ms since session start.
    pub timestamps_ms: Vec<f64>,
    pub hand: HandSide,
    pub skeleton_id: u8,
}

impl ObservationSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureError(pub String);

/// Turn resampled skeleton segments into observation sequences for one
/// hand. Frames where the limb is untracked split the sequence like a
/// dropout would; the first frame of every sequence carries the rest
/// velocity symbol.
pub fn extract_sequences(
    segments: &[Vec<TimedSkeleton>],
    side: HandSide,
    skeleton_id: u8,
    rate_hz: f64,
    cfg: &FeatureConfig,
) -> Vec<ObservationSequence> {
    let dt_s = 1.0 / rate_hz;
    let mut out = Vec::new();
    for seg in segments {
        let mut cur_syms: Vec<u16> = Vec::new();
        let mut cur_ts: Vec<f64> = Vec::new();
        let mut prev_hv: Option<HandVector> = None;

        let mut flush = |syms: &mut Vec<u16>, ts: &mut Vec<f64>| {
            if !syms.is_empty() {
                out.push(ObservationSequence {
                    symbols: core::mem::take(syms),
                    timestamps_ms: core::mem::take(ts),
                    hand: side,
                    skeleton_id,
                });
            }
        };

        for frame in seg {
            match hand_vector(&frame.skeleton, side) {
                Ok(hv) => {
                    let pos = discretize_position(&hv, cfg);
                    let vel = match prev_hv {
                        Some(ref prev) => discretize_velocity(&hv, prev, dt_s, cfg),
                        None => VelocitySymbol::REST,
                    };
                    cur_syms.push(pack_symbol(pos, vel));
                    cur_ts.push(frame.timestamp_ms);
                    prev_hv = Some(hv);
                }
                Err(_) => {
                    flush(&mut cur_syms, &mut cur_ts);
                    prev_hv = None;
                }
            }
        }
        flush(&mut cur_syms, &mut cur_ts);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{Joint, JointId, Skeleton};

    fn hv(x: f64, y: f64, z: f64) -> HandVector {
        HandVector { v: [x, y, z] }
    }

    #[test]
    fn position_zero_vector() {
        let s = discretize_position(&hv(0.0, 0.0, 0.0), &FeatureConfig::default());
        assert_eq!(s.radius_bit, 0);
        assert_eq!(s.angle_x, AngleBin::Mid);
        assert_eq!(s.angle_y, AngleBin::Mid);
        assert_eq!(s.angle_z, AngleBin::Mid);
    }

    #[test]
    fn position_axis_aligned() {
        let s = discretize_position(&hv(0.5, 0.0, 0.0), &FeatureConfig::default());
        assert_eq!(s.radius_bit, 1);
        assert_eq!(s.angle_x, AngleBin::High);
        assert_eq!(s.angle_y, AngleBin::Mid);
        assert_eq!(s.angle_z, AngleBin::Mid);
    }

    #[test]
    fn position_diagonal_all_mid() {
        // asin(1/sqrt(3)) ≈ 0.6155 < π/4 ≈ 0.7854 is false: 0.6155 < 0.7854,
        // so every axis bins Mid; norm ≈ 0.173 < 0.25 keeps the radius clear.
        let s = discretize_position(&hv(0.1, 0.1, 0.1), &FeatureConfig::default());
        let theta = libm::asin(1.0 / libm::sqrt(3.0));
        assert!(theta < ANGLE_BIN_RAD);
        assert_eq!(s.radius_bit, 0);
        assert_eq!(s.angle_x, AngleBin::Mid);
        assert_eq!(s.angle_y, AngleBin::Mid);
        assert_eq!(s.angle_z, AngleBin::Mid);
    }

    #[test]
    fn velocity_rest_when_still() {
        let cfg = FeatureConfig::default();
        let v = discretize_velocity(&hv(0.2, 0.1, 0.0), &hv(0.2, 0.1, 0.0), 0.033, &cfg);
        assert_eq!(v, VelocitySymbol::REST);
    }

    #[test]
    fn velocity_exact_candidate() {
        let cfg = FeatureConfig::default();
        // 1 m/s along +x over 1 s.
        let v = discretize_velocity(&hv(1.0, 0.0, 0.0), &hv(0.0, 0.0, 0.0), 1.0, &cfg);
        assert_eq!(v.direction, [1, 0, 0]);
    }

    #[test]
    fn velocity_argmax_matches_brute_force() {
        // vel = (1, 0.9, 0): the nearest candidate by cosine is (+1,+1,0).
        let cfg = FeatureConfig::default();
        let vel = [1.0, 0.9, 0.0];
        let got = discretize_velocity(&hv(vel[0], vel[1], vel[2]), &hv(0.0, 0.0, 0.0), 1.0, &cfg);

        let mut best = None;
        let mut best_cos = f64::NEG_INFINITY;
        for dx in -1i8..=1 {
            for dy in -1i8..=1 {
                for dz in -1i8..=1 {
                    if (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let d = [dx as f64, dy as f64, dz as f64];
                    let dn = libm::sqrt(d.iter().map(|c| c * c).sum());
                    let vn = libm::sqrt(vel.iter().map(|c| c * c).sum());
                    let cos = (vel[0] * d[0] + vel[1] * d[1] + vel[2] * d[2]) / (dn * vn);
                    if cos > best_cos {
                        best_cos = cos;
                        best = Some([dx, dy, dz]);
                    }
                }
            }
        }
        assert_eq!(got.direction, [1, 1, 0]);
        assert_eq!(got.direction, best.unwrap());
    }

    #[test]
    fn velocity_dt_scale_invariant() {
        let cfg = FeatureConfig::default();
        let a = discretize_velocity(&hv(0.02, 0.0, 0.01), &hv(0.0, 0.0, 0.0), 0.033, &cfg);
        let b = discretize_velocity(&hv(0.04, 0.0, 0.02), &hv(0.0, 0.0, 0.0), 0.066, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn symbol_pack_bijection() {
        for i in 0..ALPHABET as u16 {
            let (p, v) = unpack_symbol(i);
            assert_eq!(pack_symbol(p, v), i);
        }
    }

    #[test]
    fn mirror_symmetry() {
        let cfg = FeatureConfig::default();
        let mut r = crate::rng::SplitMix64::new(5);
        for _ in 0..200 {
            let v = hv(
                r.range_f64(-0.5, 0.5),
                r.range_f64(-0.5, 0.5),
                r.range_f64(-0.5, 0.5),
            );
            let m = hv(-v.v[0], v.v[1], v.v[2]);
            let sv = discretize_position(&v, &cfg);
            let sm = discretize_position(&m, &cfg);
            assert_eq!(sv.radius_bit, sm.radius_bit);
            assert_eq!(sv.angle_y, sm.angle_y);
            assert_eq!(sv.angle_z, sm.angle_z);
            let flipped = match sv.angle_x {
                AngleBin::Low => AngleBin::High,
                AngleBin::Mid => AngleBin::Mid,
                AngleBin::High => AngleBin::Low,
            };
            assert_eq!(sm.angle_x, flipped);

            let prev = hv(0.0, 0.0, 0.0);
            let dv = discretize_velocity(&v, &prev, 0.1, &cfg);
            let dm = discretize_velocity(&m, &prev, 0.1, &cfg);
            assert_eq!(dm.direction[1], dv.direction[1]);
            assert_eq!(dm.direction[2], dv.direction[2]);
            assert_eq!(dm.direction[0], -dv.direction[0]);
        }
    }

    fn frame(t: f64, x: f32) -> TimedSkeleton {
        let mut s = Skeleton::new(1);
        for j in s.joints.iter_mut() {
            *j = Joint::tracked(0.0, 0.0, 2.0);
        }
        *s.joint_mut(JointId::HandRight) = Joint::tracked(x, 0.0, 2.0);
        TimedSkeleton {
            timestamp_ms: t,
            skeleton: s,
        }
    }

    #[test]
    fn stationary_stream_one_symbol() {
        let seg: Vec<_> = (0..10).map(|i| frame(i as f64 * 33.0, 0.1)).collect();
        let seqs = extract_sequences(
            &[seg],
            HandSide::Right,
            1,
            30.0,
            &FeatureConfig::default(),
        );
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].len(), 10);
        let first = seqs[0].symbols[0];
        assert!(seqs[0].symbols.iter().all(|&s| s == first));
        let (_, v) = unpack_symbol(first);
        assert_eq!(v, VelocitySymbol::REST);
    }

    #[test]
    fn rightward_motion_dominant_plus_x() {
        // 1 m/s rightward at 30 Hz.
        let seg: Vec<_> = (0..15)
            .map(|i| frame(i as f64 * 33.333, i as f32 * 0.0333))
            .collect();
        let seqs = extract_sequences(
            &[seg],
            HandSide::Right,
            1,
            30.0,
            &FeatureConfig::default(),
        );
        let plus_x = seqs[0]
            .symbols
            .iter()
            .skip(1)
            .filter(|&&s| unpack_symbol(s).1.direction[0] == 1)
            .count();
        assert!(plus_x >= 10, "plus_x = {plus_x}");
    }

    #[test]
    fn segment_break_splits_sequences() {
        let a: Vec<_> = (0..5).map(|i| frame(i as f64 * 33.0, 0.1)).collect();
        let b: Vec<_> = (0..5).map(|i| frame(800.0 + i as f64 * 33.0, 0.1)).collect();
        let seqs = extract_sequences(
            &[a, b],
            HandSide::Right,
            1,
            30.0,
            &FeatureConfig::default(),
        );
        assert_eq!(seqs.len(), 2);
    }

    #[test]
    fn untracked_stream_empty() {
        let mut seg: Vec<_> = (0..5).map(|i| frame(i as f64 * 33.0, 0.1)).collect();
        for f in seg.iter_mut() {
            f.skeleton.joint_mut(JointId::HandRight).state = crate::skeleton::JointState::NotTracked;
        }
        let seqs = extract_sequences(
            &[seg],
            HandSide::Right,
            1,
            30.0,
            &FeatureConfig::default(),
        );
        assert!(seqs.is_empty());
    }
}
