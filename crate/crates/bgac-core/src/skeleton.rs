//! Skeleton domain types and body-relative geometry: the 20-joint pose,
//! the hand vector feeding feature extraction, and uniform resampling of
//! the sensor's jittered frame stream.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub const JOINT_COUNT: usize = 20;

/// Joint indices follow the v1 sensor SDK convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum JointId {
    HipCenter = 0,
    Spine = 1,
    ShoulderCenter = 2,
    Head = 3,
    ShoulderLeft = 4,
    ElbowLeft = 5,
    WristLeft = 6,
    HandLeft = 7,
    ShoulderRight = 8,
    ElbowRight = 9,
    WristRight = 10,
    HandRight = 11,
    HipLeft = 12,
    KneeLeft = 13,
    AnkleLeft = 14,
    FootLeft = 15,
    HipRight = 16,
    KneeRight = 17,
    AnkleRight = 18,
    FootRight = 19,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum JointState {
    NotTracked = 0,
    Inferred = 1,
    Tracked = 2,
}

impl JointState {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(JointState::NotTracked),
            1 => Some(JointState::Inferred),
            2 => Some(JointState::Tracked),
            _ => None,
        }
    }
}

/// Sensor coordinates: x right, y up, z away from the sensor, meters.
pub type Vec3 = [f32; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub position: Vec3,
    pub state: JointState,
}

impl Joint {
    pub fn tracked(x: f32, y: f32, z: f32) -> Self {
        Joint {
            position: [x, y, z],
            state: JointState::Tracked,
        }
    }

    pub fn not_tracked() -> Self {
        Joint {
            position: [0.0; 3],
            state: JointState::NotTracked,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub player_id: u8,
    pub joints: [Joint; JOINT_COUNT],
}

impl Skeleton {
    pub fn new(player_id: u8) -> Self {
        Skeleton {
            player_id,
            joints: [Joint::not_tracked(); JOINT_COUNT],
        }
    }

    pub fn joint(&self, id: JointId) -> &Joint {
        &self.joints[id as usize]
    }

    pub fn joint_mut(&mut self, id: JointId) -> &mut Joint {
        &mut self.joints[id as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HandSide {
    Left,
    Right,
}

impl HandSide {
    pub fn hand(self) -> JointId {
        match self {
            HandSide::Left => JointId::HandLeft,
            HandSide::Right => JointId::HandRight,
        }
    }

    pub fn elbow(self) -> JointId {
        match self {
            HandSide::Left => JointId::ElbowLeft,
            HandSide::Right => JointId::ElbowRight,
        }
    }

    pub fn shoulder(self) -> JointId {
        match self {
            HandSide::Left => JointId::ShoulderLeft,
            HandSide::Right => JointId::ShoulderRight,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HandSide::Left => "left",
            HandSide::Right => "right",
        }
    }
}

/// Hand position relative to the body: x, y relative to the same-side
/// elbow; z relative to the same-side shoulder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandVector {
    pub v: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UntrackedLimb {
    pub side: HandSide,
}

impl core::fmt::Display for UntrackedLimb {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} hand, elbow, or shoulder not tracked", self.side.name())
    }
}

/// Body-relative hand vector for one side.
pub fn hand_vector(skel: &Skeleton, side: HandSide) -> Result<HandVector, UntrackedLimb> {
    let hand = skel.joint(side.hand());
    let elbow = skel.joint(side.elbow());
    let shoulder = skel.joint(side.shoulder());
    if hand.state == JointState::NotTracked
        || elbow.state == JointState::NotTracked
        || shoulder.state == JointState::NotTracked
    {
        return Err(UntrackedLimb { side });
    }
    Ok(HandVector {
        v: [
            (hand.position[0] - elbow.position[0]) as f64,
            (hand.position[1] - elbow.position[1]) as f64,
            (hand.position[2] - shoulder.position[2]) as f64,
        ],
    })
}

/// Skeleton with the timestamp of the frame it came from, in fractional
/// milliseconds since session start.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSkeleton {
    pub timestamp_ms: f64,
    pub skeleton: Skeleton,
}

/// Dropouts longer than this split the stream into separate segments.
pub const GAP_THRESHOLD_MS: f64 = 500.0;

/// Resample a jittered skeleton stream to a uniform rate by linear
/// interpolation of joint positions. Gaps longer than
/// [`GAP_THRESHOLD_MS`] produce a segment break with no samples inside.
///
/// Joint states of an interpolated sample are the weaker of the two
/// neighbours' states per joint; player id is taken from the earlier
/// neighbour.
pub fn resample_skeletons(stream: &[TimedSkeleton], rate_hz: f64) -> Vec<Vec<TimedSkeleton>> {
    assert!(rate_hz > 0.0, "rate must be positive");
    let mut segments = Vec::new();
    if stream.is_empty() {
        return segments;
    }
    let dt = 1000.0 / rate_hz;

    // Split on gaps first, then resample each run independently.
    let mut run_start = 0usize;
    for i in 1..=stream.len() {
        let boundary = i == stream.len()
            || stream[i].timestamp_ms - stream[i - 1].timestamp_ms > GAP_THRESHOLD_MS;
        if !boundary {
            continue;
        }
        let run = &stream[run_start..i];
        run_start = i;

        let t0 = run[0].timestamp_ms;
        let t_end = run[run.len() - 1].timestamp_ms;
        let mut seg = Vec::new();
        let mut k = 0usize;
        let mut cursor = 0usize;
        loop {
            let t = t0 + k as f64 * dt;
            if t > t_end + 1e-9 {
                break;
            }
            while cursor + 1 < run.len() && run[cursor + 1].timestamp_ms < t {
                cursor += 1;
            }
            seg.push(interpolate(run, cursor, t));
            k += 1;
        }
        if !seg.is_empty() {
            segments.push(seg);
        }
    }
    segments
}

fn interpolate(run: &[TimedSkeleton], cursor: usize, t: f64) -> TimedSkeleton {
    let a = &run[cursor];
    if cursor + 1 >= run.len() || t <= a.timestamp_ms {
        return TimedSkeleton {
            timestamp_ms: t,
            skeleton: a.skeleton.clone(),
        };
    }
    let b = &run[cursor + 1];
    let span = b.timestamp_ms - a.timestamp_ms;
    let w = if span > 0.0 {
        ((t - a.timestamp_ms) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut skel = a.skeleton.clone();
    for (j, joint) in skel.joints.iter_mut().enumerate() {
        let pa = a.skeleton.joints[j].position;
        let pb = b.skeleton.joints[j].position;
        for axis in 0..3 {
            joint.position[axis] = pa[axis] + (pb[axis] - pa[axis]) * w as f32;
        }
        // Weaker of the two tracking states.
        let sa = a.skeleton.joints[j].state as u8;
        let sb = b.skeleton.joints[j].state as u8;
        joint.state = JointState::from_u8(sa.min(sb)).unwrap();
    }
    TimedSkeleton {
        timestamp_ms: t,
        skeleton: skel,
    }
}
