//! Background-activity gesture capture toolkit: the std-side companion to
//! `bgac-core`. Capture container IO, network file format, synthetic
//! session generation, the end-to-end pipeline, reports, and the CLI.

pub mod cli;
pub mod config;
pub mod container;
pub mod netfile;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use bgac_core as core;
