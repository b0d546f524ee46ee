//! Algorithmic core of the background-activity gesture capture toolkit.
//!
//! Everything in this crate is pure computation over in-memory data: the
//! LZF block codec and depth pixel packing used by the capture container,
//! skeleton geometry and resampling, discretization of hand motion into
//! the HMM symbol alphabet, the gesture spotting network itself, and the
//! scoring/analysis metrics. File formats, session generation, and the
//! CLI live in the companion `bgac` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod eval;
pub mod features;
pub mod gsn;
pub mod hmm;
pub mod lzf;
pub mod pixel;
pub mod rng;
pub mod skeleton;
