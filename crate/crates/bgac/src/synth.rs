//! Deterministic synthetic session generator. Produces background-like
//! skeleton motion (low-frequency arm noise, scripted reaches toward a
//! virtual table, rest spans) with gesture performances spliced in, plus
//! exact ground-truth annotations and optional coarse depth rendering.
//! Output is a pure function of the config.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use bgac_core::eval::{Annotation, AnnotationKind, AnnotationTrack};
use bgac_core::pixel::pack_depth_pixel;
use bgac_core::skeleton::{HandSide, Joint, JointId, Skeleton};

use crate::container::{
    DepthFrame, Frame, SessionHeader, SkeletonFrameRecord, STREAM_DEPTH, STREAM_SKELETON,
};

// ---------------------------------------------------------------------------
// Gesture templates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GestureKind {
    Swipe,
    AirTap,
    Wave,
    Point,
    PauseSwipe,
    Circle,
    VerticalCircling,
    ForwardUp,
}

/// Parametric hand-path program for one gesture. Amplitude and duration
/// get per-performance jitter; `noise_sigma_m` adds smooth positional
/// noise on top of the ideal path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureTemplate {
    pub name: String,
    pub kind: GestureKind,
    /// Nominal path extent in meters (radius for circular gestures).
    pub amplitude_m: f64,
    pub duration_ms: f64,
    /// Leading near-still span (Pause Swipe only).
    pub pause_ms: f64,
    /// Relative amplitude jitter; realized scale is uniform in 1 ± this.
    pub amp_jitter: f64,
    /// Relative duration jitter.
    pub dur_jitter: f64,
    pub noise_sigma_m: f64,
}

fn template(name: &str, kind: GestureKind, amplitude_m: f64, duration_ms: f64) -> GestureTemplate {
    GestureTemplate {
        name: String::from(name),
        kind,
        amplitude_m,
        duration_ms,
        pause_ms: if kind == GestureKind::PauseSwipe { 500.0 } else { 0.0 },
        amp_jitter: 0.12,
        dur_jitter: 0.10,
        noise_sigma_m: 0.003,
    }
}

/// The four gestures of the original set.
pub fn original_templates() -> Vec<GestureTemplate> {
    vec![
        template("Swipe", GestureKind::Swipe, 0.60, 600.0),
        template("AirTap", GestureKind::AirTap, 0.25, 500.0),
        template("Wave", GestureKind::Wave, 0.25, 1000.0),
        template("Point", GestureKind::Point, 0.35, 1000.0),
    ]
}

/// The four redesigned gestures meant to cut background false positives.
pub fn proposed_templates() -> Vec<GestureTemplate> {
    vec![
        template("Pause Swipe", GestureKind::PauseSwipe, 0.60, 1100.0),
        template("Circle", GestureKind::Circle, 0.36, 1200.0),
        template("Vertical Circling", GestureKind::VerticalCircling, 0.15, 1600.0),
        template("Forward Up", GestureKind::ForwardUp, 0.25, 800.0),
    ]
}

pub fn all_templates() -> Vec<GestureTemplate> {
    let mut t = original_templates();
    t.extend(proposed_templates());
    t
}

pub fn template_by_name(name: &str) -> Option<GestureTemplate> {
    all_templates().into_iter().find(|t| t.name == name)
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Ideal (noise-free) hand offset at normalized time u ∈ [0,1], with the
/// realized amplitude already applied. All paths start at the origin.
fn ideal_offset(kind: GestureKind, amp: f64, pause_frac: f64, u: f64) -> [f64; 3] {
    use std::f64::consts::PI;
    match kind {
        // Lateral motion the full amplitude wide, centered on the rest pose.
        GestureKind::Swipe => [amp * smoothstep(u), 0.0, 0.0],
        // Forward push toward the sensor and back.
        GestureKind::AirTap => [0.0, 0.0, -amp * (PI * u).sin()],
        // Two lateral cycles with a slight raise of the hand.
        GestureKind::Wave => [
            0.5 * amp * (2.0 * PI * 2.0 * u).sin(),
            0.12 * (PI * u).sin(),
            0.0,
        ],
        // Extend the arm forward and hold.
        GestureKind::Point => [0.0, 0.05 * smoothstep(u / 0.25), -amp * smoothstep(u / 0.25)],
        // Hand raised and held near-still, then a swipe at that height.
        // The raised pause is what distinguishes it from ordinary rest.
        GestureKind::PauseSwipe => {
            if u < pause_frac {
                [0.0, 0.45, 0.0]
            } else {
                let v = (u - pause_frac) / (1.0 - pause_frac);
                [amp * smoothstep(v), 0.45, 0.0]
            }
        }
        // One full revolution in the frontal plane, starting at the origin.
        GestureKind::Circle => [
            amp * (2.0 * PI * u).sin(),
            amp * ((2.0 * PI * u).cos() - 1.0),
            0.0,
        ],
        // Two revolutions in the horizontal plane.
        GestureKind::VerticalCircling => [
            amp * (2.0 * PI * 2.0 * u).sin(),
            0.0,
            amp * ((2.0 * PI * 2.0 * u).cos() - 1.0),
        ],
        // Push forward, then an upward flick.
        GestureKind::ForwardUp => {
            let push = -0.25 * smoothstep(u / 0.5);
            let flick = if u > 0.5 { 0.15 * smoothstep((u - 0.5) / 0.5) } else { 0.0 };
            [0.0, flick, push * (amp / 0.25)]
        }
    }
}

/// A rendered performance: hand offsets sampled every `PATH_STEP_MS`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPath {
    pub duration_ms: f64,
    /// (t_ms, offset_m) samples; starts at t = 0 with a zero offset.
    pub points: Vec<(f64, [f64; 3])>,
}

pub const PATH_STEP_MS: f64 = 10.0;

/// Smooth low-frequency noise: two incommensurate sinusoids per axis.
struct SmoothNoise {
    params: [[f64; 4]; 3], // per axis: f1_hz, phase1, f2_hz, phase2
    sigma: f64,
}

impl SmoothNoise {
    fn new(rng: &mut ChaCha8Rng, sigma: f64) -> Self {
        let mut params = [[0.0; 4]; 3];
        for axis in params.iter_mut() {
            axis[0] = rng.gen_range(0.15..0.50);
            axis[1] = rng.gen_range(0.0..std::f64::consts::TAU);
            axis[2] = rng.gen_range(0.60..1.20);
            axis[3] = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        SmoothNoise { params, sigma }
    }

    fn at(&self, t_s: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, p) in self.params.iter().enumerate() {
            out[i] = self.sigma
                * ((std::f64::consts::TAU * p[0] * t_s + p[1]).sin()
                    + 0.5 * (std::f64::consts::TAU * p[2] * t_s + p[3]).sin());
        }
        out
    }
}

/// Render one performance of a template: ideal path with per-performance
/// amplitude/duration scaling plus smooth positional noise (suppressed
/// during a Pause Swipe's pause so the pause really is still).
pub fn render_template(t: &GestureTemplate, seed: u64) -> RenderedPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = t.amplitude_m * rng.gen_range(1.0 - t.amp_jitter..=1.0 + t.amp_jitter);
    let duration = t.duration_ms * rng.gen_range(1.0 - t.dur_jitter..=1.0 + t.dur_jitter);
    let pause_frac = (t.pause_ms / duration).min(0.9);
    let noise = SmoothNoise::new(&mut rng, t.noise_sigma_m);

    let n = (duration / PATH_STEP_MS).ceil() as usize;
    let mut points = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t_ms = (i as f64 * PATH_STEP_MS).min(duration);
        let u = t_ms / duration;
        let mut p = ideal_offset(t.kind, amp, pause_frac, u);
        let nz = noise.at(t_ms / 1000.0);
        let noise_gain = if t.kind == GestureKind::PauseSwipe && u < pause_frac {
            0.0
        } else {
            1.0
        };
        for k in 0..3 {
            p[k] += noise_gain * nz[k];
        }
        points.push((t_ms, p));
    }
    RenderedPath { duration_ms: duration, points }
}

impl RenderedPath {
    /// Offset at arbitrary time by linear interpolation; clamps outside.
    pub fn offset_at(&self, t_ms: f64) -> [f64; 3] {
        if self.points.is_empty() {
            return [0.0; 3];
        }
        if t_ms <= 0.0 {
            return self.points[0].1;
        }
        let last = self.points.last().unwrap();
        if t_ms >= last.0 {
            return last.1;
        }
        let i = (t_ms / PATH_STEP_MS) as usize;
        let (t0, p0) = self.points[i];
        let (t1, p1) = self.points[i + 1];
        let w = if t1 > t0 { (t_ms - t0) / (t1 - t0) } else { 0.0 };
        [
            p0[0] + w * (p1[0] - p0[0]),
            p0[1] + w * (p1[1] - p0[1]),
            p0[2] + w * (p1[2] - p0[2]),
        ]
    }
}

// ---------------------------------------------------------------------------
// Session generation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Intensity {
    Quiet,
    Typical,
    Boisterous,
}

impl Intensity {
    fn noise_sigma_m(self) -> f64 {
        match self {
            Intensity::Quiet => 0.012,
            Intensity::Typical => 0.035,
            Intensity::Boisterous => 0.060,
        }
    }

    fn reach_rate_per_min(self) -> f64 {
        match self {
            Intensity::Quiet => 0.5,
            Intensity::Typical => 2.0,
            Intensity::Boisterous => 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub duration_s: f64,
    /// Tracked bodies, 1 or 2.
    pub n_skeletons: usize,
    /// Performances injected per gesture template, spread over the session.
    pub prompts_per_gesture: usize,
    pub gestures: Vec<GestureTemplate>,
    pub intensity: Intensity,
    pub seed: u64,
    /// Depth rendering is optional; skeleton-only sessions are much
    /// cheaper and suffice for spotting experiments.
    pub render_depth: bool,
    pub depth_width: u16,
    pub depth_height: u16,
    pub sensor_id: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            duration_s: 60.0,
            n_skeletons: 1,
            prompts_per_gesture: 1,
            gestures: all_templates(),
            intensity: Intensity::Typical,
            seed: 1,
            render_depth: true,
            depth_width: 80,
            depth_height: 60,
            sensor_id: String::from("synthetic"),
        }
    }
}

#[derive(Debug)]
pub struct SynthOutput {
    pub header: SessionHeader,
    pub frames: Vec<Frame>,
    pub annotations: AnnotationTrack,
}

/// Neutral standing pose, hip center at (cx, 0, 2.2). Arm joints hang so
/// the rest hand vector sits just under the default radius threshold.
fn neutral_skeleton(player_id: u8, cx: f32) -> Skeleton {
    let mut s = Skeleton::new(player_id);
    let joints: [(JointId, [f32; 3]); 20] = [
        (JointId::HipCenter, [0.0, 0.0, 0.0]),
        (JointId::Spine, [0.0, 0.25, 0.0]),
        (JointId::ShoulderCenter, [0.0, 0.50, 0.0]),
        (JointId::Head, [0.0, 0.72, 0.0]),
        (JointId::ShoulderLeft, [-0.19, 0.45, 0.0]),
        (JointId::ElbowLeft, [-0.24, 0.18, 0.0]),
        (JointId::WristLeft, [-0.27, -0.02, -0.02]),
        (JointId::HandLeft, [-0.28, -0.05, -0.04]),
        (JointId::ShoulderRight, [0.19, 0.45, 0.0]),
        (JointId::ElbowRight, [0.24, 0.18, 0.0]),
        (JointId::WristRight, [0.27, -0.02, -0.02]),
        (JointId::HandRight, [0.28, -0.05, -0.04]),
        (JointId::HipLeft, [-0.10, -0.02, 0.0]),
        (JointId::KneeLeft, [-0.11, -0.45, 0.0]),
        (JointId::AnkleLeft, [-0.12, -0.85, 0.0]),
        (JointId::FootLeft, [-0.12, -0.92, -0.08]),
        (JointId::HipRight, [0.10, -0.02, 0.0]),
        (JointId::KneeRight, [0.11, -0.45, 0.0]),
        (JointId::AnkleRight, [0.12, -0.85, 0.0]),
        (JointId::FootRight, [0.12, -0.92, -0.08]),
    ];
    for (id, p) in joints {
        s.joints[id as usize] = Joint::tracked(cx + p[0], p[1], 2.2 + p[2]);
    }
    s
}

/// Scripted reach toward a virtual table: out, hold, back.
struct Reach {
    start_ms: f64,
    duration_ms: f64,
    hand: HandSide,
    dir: [f64; 3],
}

impl Reach {
    fn offset_at(&self, t_ms: f64) -> Option<[f64; 3]> {
        let u = (t_ms - self.start_ms) / self.duration_ms;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        // Rise over the first 35%, hold, return over the last 35%.
        let env = if u < 0.35 {
            smoothstep(u / 0.35)
        } else if u > 0.65 {
            smoothstep((1.0 - u) / 0.35)
        } else {
            1.0
        };
        Some([self.dir[0] * env, self.dir[1] * env, self.dir[2] * env])
    }
}

struct Injection {
    annotation: Annotation,
    path: RenderedPath,
}

/// Everything that moves one body: background noise, reaches, rests, and
/// the spliced gesture performances.
struct BodyMotion {
    base: Skeleton,
    hand_noise: [SmoothNoise; 2], // left, right
    sway: SmoothNoise,
    reaches: Vec<Reach>,
    rests: Vec<(f64, f64)>,
    injections: Vec<Injection>,
}

const BLEND_MS: f64 = 300.0;

impl BodyMotion {
    fn noise_gain(&self, t_ms: f64) -> f64 {
        for &(s, e) in &self.rests {
            if t_ms >= s && t_ms < e {
                // Ramp down into the rest and back out of it.
                let into = smoothstep((t_ms - s) / BLEND_MS);
                let out = smoothstep((e - t_ms) / BLEND_MS);
                return 1.0 - 0.9 * into.min(out);
            }
        }
        1.0
    }

    /// Total offset applied to one hand at time t: background noise plus
    /// any active reach or spliced gesture (with its return blend).
    fn hand_offset(&self, hand: HandSide, t_ms: f64) -> [f64; 3] {
        let idx = match hand {
            HandSide::Left => 0,
            HandSide::Right => 1,
        };
        let gain = self.noise_gain(t_ms);
        let mut off = self.hand_noise[idx].at(t_ms / 1000.0);
        for o in off.iter_mut() {
            *o *= gain;
        }
        for r in &self.reaches {
            if r.hand != hand {
                continue;
            }
            if let Some(ro) = r.offset_at(t_ms) {
                for k in 0..3 {
                    off[k] += ro[k];
                }
            }
        }
        for inj in &self.injections {
            if inj.annotation.hand_side != hand {
                continue;
            }
            let start = inj.annotation.start_ms;
            let end = inj.annotation.end_ms;
            if t_ms >= start && t_ms <= end {
                let go = inj.path.offset_at(t_ms - start);
                for k in 0..3 {
                    off[k] += go[k];
                }
            } else if t_ms < start && t_ms > start - BLEND_MS {
                // Blend the hand from its background trajectory into the
                // path's starting offset (nonzero for raised-start paths).
                let w = smoothstep((t_ms - (start - BLEND_MS)) / BLEND_MS);
                let go = inj.path.offset_at(0.0);
                for k in 0..3 {
                    off[k] += w * go[k];
                }
            } else if t_ms > end && t_ms < end + BLEND_MS {
                // Blend the hand back to its background trajectory.
                let w = 1.0 - smoothstep((t_ms - end) / BLEND_MS);
                let go = inj.path.offset_at(end - start);
                for k in 0..3 {
                    off[k] += w * go[k];
                }
            }
        }
        off
    }

    fn skeleton_at(&self, t_ms: f64) -> Skeleton {
        let mut s = self.base.clone();
        let sway = self.sway.at(t_ms / 1000.0);
        for j in s.joints.iter_mut() {
            j.position[0] += sway[0] as f32;
            j.position[2] += sway[2] as f32;
        }
        for hand in [HandSide::Left, HandSide::Right] {
            let off = self.hand_offset(hand, t_ms);
            // The hand carries the full offset; wrist and elbow follow
            // partially so the arm stays plausible.
            for (joint, w) in [(hand.hand(), 1.0), (hand.wrist_joint(), 0.7), (hand.elbow(), 0.3)] {
                let p = &mut s.joints[joint as usize].position;
                p[0] += (off[0] * w) as f32;
                p[1] += (off[1] * w) as f32;
                p[2] += (off[2] * w) as f32;
            }
        }
        s
    }
}

/// Wrist joint for a side; HandSide itself only names hand/elbow/shoulder.
trait WristExt {
    fn wrist_joint(self) -> JointId;
}

impl WristExt for HandSide {
    fn wrist_joint(self) -> JointId {
        match self {
            HandSide::Left => JointId::WristLeft,
            HandSide::Right => JointId::WristRight,
        }
    }
}

fn overlaps_injection(injections: &[Injection], hand: HandSide, start: f64, end: f64) -> bool {
    injections.iter().any(|inj| {
        inj.annotation.hand_side == hand
            && start < inj.annotation.end_ms + BLEND_MS + 500.0
            && end > inj.annotation.start_ms - 500.0
    })
}

fn build_body(
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
    player_id: u8,
    cx: f32,
    injections: Vec<Injection>,
) -> BodyMotion {
    let sigma = cfg.intensity.noise_sigma_m();
    let duration_ms = cfg.duration_s * 1000.0;
    let hand_noise = [SmoothNoise::new(rng, sigma), SmoothNoise::new(rng, sigma)];
    let sway = SmoothNoise::new(rng, sigma * 0.4);

    // Rest spans: one ~20 s span per 5 minutes.
    let mut rests = Vec::new();
    let n_rests = (cfg.duration_s / 300.0).floor() as usize;
    for i in 0..n_rests {
        let slot = duration_ms / n_rests as f64;
        let start = slot * i as f64 + rng.gen_range(0.2..0.6) * slot;
        rests.push((start, start + 20_000.0));
    }

    // Reach events: Poisson arrivals, skipped when they would overlap an
    // injected gesture on the same hand or a rest span.
    let mut reaches = Vec::new();
    let rate_per_ms = cfg.intensity.reach_rate_per_min() / 60_000.0;
    let mut t = 0.0f64;
    loop {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        t += -u.ln() / rate_per_ms;
        if t >= duration_ms {
            break;
        }
        let duration = rng.gen_range(1200.0..2200.0);
        let hand = if rng.gen_bool(0.5) { HandSide::Left } else { HandSide::Right };
        let sx = match hand {
            HandSide::Left => -1.0,
            HandSide::Right => 1.0,
        };
        let dir = [
            sx * rng.gen_range(0.05..0.35),
            rng.gen_range(-0.40..-0.15),
            rng.gen_range(-0.45..-0.20),
        ];
        if overlaps_injection(&injections, hand, t, t + duration) {
            continue;
        }
        if rests.iter().any(|&(s, e)| t < e && t + duration > s) {
            continue;
        }
        reaches.push(Reach { start_ms: t, duration_ms: duration, hand, dir });
    }

    BodyMotion {
        base: neutral_skeleton(player_id, cx),
        hand_noise,
        sway,
        reaches,
        rests,
        injections,
    }
}

/// Coarse pinhole blob rendering of the tracked bodies; enough structure
/// for occupancy maps and still-frame analysis, nothing more.
fn render_depth(skeletons: &[Skeleton], width: u16, height: u16) -> Vec<u16> {
    let w = width as i32;
    let h = height as i32;
    let fx = width as f64; // ~53 degree horizontal field of view
    let background = pack_depth_pixel(3500, 0).unwrap();
    let mut pixels = vec![background; (w * h) as usize];

    for skel in skeletons {
        for (ji, joint) in skel.joints.iter().enumerate() {
            let [x, y, z] = joint.position;
            if z <= 0.1 {
                continue;
            }
            let r_m = match ji {
                3 => 0.12,                 // head
                0..=2 => 0.16,             // torso column
                12 | 16 => 0.12,           // hips
                _ => 0.07,                 // limbs
            };
            let px = (w as f64 / 2.0 + fx * x as f64 / z as f64).round() as i32;
            let py = (h as f64 / 2.0 - fx * y as f64 / z as f64).round() as i32;
            let pr = (fx * r_m / z as f64).ceil() as i32;
            let depth_mm = ((z as f64) * 1000.0).round().clamp(0.0, 8191.0) as u16;
            let packed = pack_depth_pixel(depth_mm, skel.player_id.min(7)).unwrap();
            for dy in -pr..=pr {
                for dx in -pr..=pr {
                    if dx * dx + dy * dy > pr * pr {
                        continue;
                    }
                    let (qx, qy) = (px + dx, py + dy);
                    if qx < 0 || qy < 0 || qx >= w || qy >= h {
                        continue;
                    }
                    let idx = (qy * w + qx) as usize;
                    // Nearer surface wins.
                    let (cur_depth, _) = bgac_core::pixel::unpack_depth_pixel(pixels[idx]);
                    if depth_mm < cur_depth || pixels[idx] == background {
                        pixels[idx] = packed;
                    }
                }
            }
        }
    }
    pixels
}

/// Generate a full session. Byte-identical output for identical configs.
pub fn generate_session(cfg: &SynthConfig) -> SynthOutput {
    assert!(cfg.duration_s > 0.0, "duration must be positive");
    assert!((1..=2).contains(&cfg.n_skeletons), "1 or 2 skeletons");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let duration_ms = cfg.duration_s * 1000.0;

    // Schedule injections round-robin over gestures, evenly spaced slots
    // with jitter, all on the right hand of alternating skeletons.
    let n_events = cfg.prompts_per_gesture * cfg.gestures.len();
    let mut per_body_injections: Vec<Vec<Injection>> =
        (0..cfg.n_skeletons).map(|_| Vec::new()).collect();
    let mut annotations: AnnotationTrack = Vec::new();
    for i in 0..n_events {
        let tpl = &cfg.gestures[i % cfg.gestures.len()];
        let body = i % cfg.n_skeletons;
        let slot = duration_ms / n_events as f64;
        let path = render_template(tpl, rng.gen());
        let latest_start = (slot * (i as f64 + 0.9) - path.duration_ms - BLEND_MS)
            .max(slot * i as f64 + 1.0);
        let start = rng.gen_range((slot * i as f64 + slot * 0.1).min(latest_start)..=latest_start);
        let ann = Annotation {
            gesture_name: tpl.name.clone(),
            skeleton_id: (body + 1) as u8,
            hand_side: HandSide::Right,
            start_ms: start,
            end_ms: start + path.duration_ms,
            kind: AnnotationKind::Injected,
        };
        annotations.push(ann.clone());
        per_body_injections[body].push(Injection { annotation: ann, path });
    }
    annotations.sort_by(|a, b| a.start_ms.total_cmp(&b.start_ms));

    let mut bodies = Vec::with_capacity(cfg.n_skeletons);
    for (b, injections) in per_body_injections.into_iter().enumerate() {
        let cx = if cfg.n_skeletons == 1 {
            0.0
        } else if b == 0 {
            -0.55
        } else {
            0.55
        };
        bodies.push(build_body(cfg, &mut rng, (b + 1) as u8, cx, injections));
    }

    // Skeleton frames at the tracker's jittered 15-30 fps cadence.
    let mut frames = Vec::new();
    let mut t = 0.0f64;
    let mut skel_times = Vec::new();
    while t < duration_ms {
        skel_times.push(t);
        t += rng.gen_range(33.4..66.6);
    }
    for &ts in &skel_times {
        let skeletons: Vec<Skeleton> = bodies.iter().map(|b| b.skeleton_at(ts)).collect();
        frames.push(Frame::Skeleton(SkeletonFrameRecord {
            timestamp_ms: ts as u64,
            skeletons,
        }));
    }

    // Depth frames at a steady 30 fps when rendering is on.
    if cfg.render_depth {
        let mut dt = 0.0f64;
        while dt < duration_ms {
            let skeletons: Vec<Skeleton> = bodies.iter().map(|b| b.skeleton_at(dt)).collect();
            frames.push(Frame::Depth(DepthFrame {
                timestamp_ms: dt as u64,
                width: cfg.depth_width,
                height: cfg.depth_height,
                pixels: render_depth(&skeletons, cfg.depth_width, cfg.depth_height),
            }));
            dt += 1000.0 / 30.0;
        }
    }

    frames.sort_by_key(|f| (f.timestamp_ms(), frame_order(f)));

    let header = SessionHeader {
        format_version: crate::container::FORMAT_VERSION,
        sensor_id: cfg.sensor_id.clone(),
        start_epoch_ms: 0,
        stream_flags: STREAM_SKELETON | if cfg.render_depth { STREAM_DEPTH } else { 0 },
    };

    SynthOutput { header, frames, annotations }
}

fn frame_order(f: &Frame) -> u8 {
    match f {
        Frame::Depth(_) => 0,
        Frame::Rgb(_) => 1,
        Frame::Skeleton(_) => 2,
    }
}

/// One isolated performance as a clean 30 Hz skeleton stream: a neutral
/// pose with the rendered path applied to the right arm. The stream spans
/// exactly the performance — no rest padding or approach motion, so the
/// trained states describe only the gesture itself. (In a session the
/// splice blends the hand in from its background trajectory; spotting
/// paths simply begin at the first in-path frame.)
pub fn isolated_performance(
    tpl: &GestureTemplate,
    seed: u64,
) -> Vec<bgac_core::skeleton::TimedSkeleton> {
    let path = render_template(tpl, seed);
    let base = neutral_skeleton(1, 0.0);
    let dt = 1000.0 / 30.0;
    let n = (path.duration_ms / dt).floor() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 * dt;
        let off = path.offset_at(t);
        let mut s = base.clone();
        for (joint, w) in [
            (JointId::HandRight, 1.0),
            (JointId::WristRight, 0.7),
            (JointId::ElbowRight, 0.3),
        ] {
            let p = &mut s.joints[joint as usize].position;
            p[0] += (off[0] * w) as f32;
            p[1] += (off[1] * w) as f32;
            p[2] += (off[2] * w) as f32;
        }
        out.push(bgac_core::skeleton::TimedSkeleton { timestamp_ms: t, skeleton: s });
    }
    out
}

// ---------------------------------------------------------------------------
// Annotation file IO

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationFile {
    version: u32,
    annotations: AnnotationTrack,
}

pub fn write_annotations(path: &std::path::Path, track: &AnnotationTrack) -> anyhow::Result<()> {
    let file = AnnotationFile { version: 1, annotations: track.clone() };
    let json = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_annotations(path: &std::path::Path) -> anyhow::Result<AnnotationTrack> {
    let text = std::fs::read_to_string(path)?;
    let file: AnnotationFile = serde_json::from_str(&text)?;
    if file.version != 1 {
        anyhow::bail!("unsupported annotation file version {}", file.version);
    }
    Ok(file.annotations)
}
