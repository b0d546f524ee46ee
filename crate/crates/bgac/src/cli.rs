//! Command-line frontend. Exit codes: 0 success, 2 usage/input error,
//! 3 data corruption (bad container or network file).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bgac_core::eval::{
    fp_interval, gesture_zone, match_detections, occupancy_map, still_frames, DepthView,
};
use bgac_core::gsn::SpotConfig;
use bgac_core::skeleton::HandSide;

use crate::config::{load_config, ToolkitConfig};
use crate::container::{read_all, ContainerError, Frame};
use crate::netfile::{load_network_file, save_network_file, NetFileError};
use crate::pipeline;
use crate::report::{self, RunManifest};
use crate::synth::{self, SynthConfig};

#[derive(Parser)]
#[command(name = "bgac", version, about = "Gesture capture and spotting toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic session with ground-truth annotations.
    Synth(SynthArgs),
    /// Train a gesture spotting network from annotated sessions.
    Train(TrainArgs),
    /// Run the spotting network over a session.
    Spot(SpotArgs),
    /// Score detections against ground-truth annotations.
    Eval(EvalArgs),
    /// Compare two networks' false positives on the same background session.
    Compare(CompareArgs),
    /// Extract still-frame intervals from the depth stream.
    Stillframes(StillArgs),
    /// Compute a gesture-specific spatial zone map.
    Zones(ZonesArgs),
    /// Print session header and frame-rate statistics.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HandArg {
    Left,
    Right,
    Both,
}

impl HandArg {
    fn sides(self) -> Vec<HandSide> {
        match self {
            HandArg::Left => vec![HandSide::Left],
            HandArg::Right => vec![HandSide::Right],
            HandArg::Both => vec![HandSide::Left, HandSide::Right],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IntensityArg {
    Quiet,
    Typical,
    Boisterous,
}

impl From<IntensityArg> for synth::Intensity {
    fn from(v: IntensityArg) -> Self {
        match v {
            IntensityArg::Quiet => synth::Intensity::Quiet,
            IntensityArg::Typical => synth::Intensity::Typical,
            IntensityArg::Boisterous => synth::Intensity::Boisterous,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GestureSet {
    All,
    Original,
    Proposed,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for session.bgac and annotations.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 60.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 1)]
    prompts: usize,
    #[arg(long, default_value_t = 1)]
    skeletons: usize,
    #[arg(long, value_enum, default_value_t = IntensityArg::Typical)]
    intensity: IntensityArg,
    #[arg(long, value_enum, default_value_t = GestureSet::All)]
    gestures: GestureSet,
    /// Skip depth rendering; skeleton-only sessions are much smaller.
    #[arg(long)]
    no_depth: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Session container; repeat for multiple, paired with --annotations.
    #[arg(long, required = true)]
    session: Vec<PathBuf>,
    #[arg(long, required = true)]
    annotations: Vec<PathBuf>,
    /// Output network file (.gsn).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    states: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated gesture names that must be present in training data.
    #[arg(long)]
    gestures: Option<String>,
}

#[derive(Args)]
struct SpotArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    session: PathBuf,
    /// Detection file to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature config to validate against the network.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = HandArg::Both)]
    hand: HandArg,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Session used to compute person-seconds of exposure.
    #[arg(long)]
    session: Option<PathBuf>,
    #[arg(long, default_value_t = bgac_core::eval::DEFAULT_MATCH_WINDOW_MS)]
    window_ms: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    network_a: PathBuf,
    #[arg(long)]
    network_b: PathBuf,
    #[arg(long)]
    session: PathBuf,
    #[arg(long, value_enum, default_value_t = HandArg::Both)]
    hand: HandArg,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StillArgs {
    #[arg(long)]
    session: PathBuf,
    #[arg(long, default_value_t = 8.0)]
    threshold_mm: f64,
    #[arg(long, default_value_t = 5.0)]
    min_duration_s: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ZonesArgs {
    #[arg(long)]
    session: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Gesture whose zone to compute.
    #[arg(long)]
    gesture: String,
    /// Output PGM path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    session: PathBuf,
    #[arg(long)]
    json: bool,
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter("BGAC_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Spot(a) => cmd_spot(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Stillframes(a) => cmd_stillframes(a),
        Cmd::Zones(a) => cmd_zones(a),
        Cmd::Inspect(a) => cmd_inspect(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

/// Data corruption (unreadable container or network file) exits 3;
/// everything else is a usage/input error, exit 2.
fn exit_code_for(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<ContainerError>() {
            match c {
                ContainerError::BadMagic
                | ContainerError::Truncated { .. }
                | ContainerError::Corrupt { .. }
                | ContainerError::UnsupportedVersion(_) => return 3,
                _ => {}
            }
        }
        if let Some(n) = cause.downcast_ref::<NetFileError>() {
            match n {
                NetFileError::BadMagic | NetFileError::Corrupt(_) => return 3,
                NetFileError::Io(_) => {}
            }
        }
    }
    2
}

fn toolkit_config(path: &Option<PathBuf>) -> anyhow::Result<ToolkitConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(ToolkitConfig::default()),
    }
}

fn load_session(path: &Path) -> anyhow::Result<(crate::container::SessionHeader, Vec<Frame>)> {
    let file = std::fs::File::open(path)
        .map_err(|e| anyhow::anyhow!("cannot open {}: {e}", path.display()))?;
    Ok(read_all(std::io::BufReader::new(file))?)
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    if a.duration_s <= 0.0 {
        anyhow::bail!("duration must be positive");
    }
    if !(1..=2).contains(&a.skeletons) {
        anyhow::bail!("1 or 2 skeletons supported");
    }
    let _ = toolkit_config(&a.config)?; // validates the file if given
    let gestures = match a.gestures {
        GestureSet::All => synth::all_templates(),
        GestureSet::Original => synth::original_templates(),
        GestureSet::Proposed => synth::proposed_templates(),
    };
    let cfg = SynthConfig {
        duration_s: a.duration_s,
        n_skeletons: a.skeletons,
        prompts_per_gesture: a.prompts,
        gestures,
        intensity: a.intensity.into(),
        seed: a.seed,
        render_depth: !a.no_depth,
        ..Default::default()
    };
    std::fs::create_dir_all(&a.out)?;
    let out = synth::generate_session(&cfg);
    let session_path = a.out.join("session.bgac");
    let ann_path = a.out.join("annotations.json");
    let file = std::fs::File::create(&session_path)?;
    crate::container::write_all(std::io::BufWriter::new(file), &out.header, &out.frames)?;
    synth::write_annotations(&ann_path, &out.annotations)?;
    println!(
        "wrote {} ({} frames) and {} ({} annotations)",
        session_path.display(),
        out.frames.len(),
        ann_path.display(),
        out.annotations.len()
    );
    let mut manifest = RunManifest::new("synth");
    manifest.seed = Some(a.seed);
    manifest.config_path = a.config.clone();
    manifest.outputs = vec![session_path, ann_path];
    manifest.write(&a.out, start.elapsed())
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    if a.session.len() != a.annotations.len() {
        anyhow::bail!("--session and --annotations must be paired");
    }
    let cfg = toolkit_config(&a.config)?;
    let mut per_gesture: std::collections::BTreeMap<String, Vec<Vec<u16>>> = Default::default();
    for (spath, apath) in a.session.iter().zip(&a.annotations) {
        let (_, frames) = load_session(spath)?;
        let annotations = synth::read_annotations(apath)?;
        for (name, seqs) in pipeline::training_sequences_from_session(&frames, &annotations, &cfg) {
            per_gesture.entry(name).or_default().extend(seqs);
        }
    }
    if per_gesture.is_empty() {
        anyhow::bail!("no training examples found in the given annotations");
    }
    if let Some(wanted) = &a.gestures {
        for name in wanted.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if !per_gesture.contains_key(name) {
                anyhow::bail!("gesture '{name}' has no annotated examples");
            }
        }
    }
    for (name, seqs) in &per_gesture {
        if seqs.len() < 10 {
            anyhow::bail!("gesture '{name}' has only {} examples; need at least 10", seqs.len());
        }
        if seqs.len() < 80 {
            log::warn!("gesture '{name}' has {} examples; 80 recommended", seqs.len());
        }
    }

    // Hold out every 10th example per gesture for the accuracy estimate.
    let mut train: Vec<(String, Vec<Vec<u16>>)> = Vec::new();
    let mut held_out: Vec<(String, Vec<u16>)> = Vec::new();
    for (name, seqs) in per_gesture {
        let mut keep = Vec::new();
        for (i, s) in seqs.into_iter().enumerate() {
            if i % 10 == 9 {
                held_out.push((name.clone(), s));
            } else {
                keep.push(s);
            }
        }
        train.push((name, keep));
    }
    let net = pipeline::train_from_sequences(&train, a.states, a.seed, &cfg, SpotConfig::default())?;
    let mut correct = 0usize;
    for (truth, symbols) in &held_out {
        if let Ok((got, _)) = bgac_core::gsn::classify_isolated(&net.variants, symbols) {
            if got == truth {
                correct += 1;
            }
        }
    }
    save_network_file(&a.out, &net)?;
    if held_out.is_empty() {
        println!("trained {} variants; no held-out examples", net.variants.len());
    } else {
        println!(
            "trained {} variants; held-out isolated accuracy {:.1}% ({}/{})",
            net.variants.len(),
            100.0 * correct as f64 / held_out.len() as f64,
            correct,
            held_out.len()
        );
    }
    let mut manifest = RunManifest::new("train");
    manifest.seed = Some(a.seed);
    manifest.config_path = a.config.clone();
    manifest.inputs = a.session.iter().chain(&a.annotations).cloned().collect();
    manifest.outputs = vec![a.out.clone()];
    let dir = a.out.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    manifest.write(&dir, start.elapsed())
}

fn cmd_spot(a: SpotArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let net = load_network_file(&a.network)?;
    if let Some(cfg_path) = &a.config {
        let cfg = load_config(cfg_path)?;
        if cfg.features != net.feature_config || cfg.resample_hz != net.resample_hz {
            anyhow::bail!(
                "config {} does not match the feature config the network was trained with",
                cfg_path.display()
            );
        }
    }
    let (_, frames) = load_session(&a.session)?;
    let events = pipeline::spot_session(&net, &frames, &a.hand.sides());
    match &a.out {
        Some(path) => {
            pipeline::write_detections(path, &events)?;
            println!("{} detections -> {}", events.len(), path.display());
            let mut manifest = RunManifest::new("spot");
            manifest.inputs = vec![a.network.clone(), a.session.clone()];
            manifest.outputs = vec![path.clone()];
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
            manifest.write(&dir, start.elapsed())?;
        }
        None => println!("{}", serde_json::to_string_pretty(&events)?),
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> anyhow::Result<()> {
    let events = pipeline::read_detections(&a.detections)?;
    let truth = synth::read_annotations(&a.annotations)?;
    let mut report = match_detections(&events, &truth, a.window_ms);
    if let Some(spath) = &a.session {
        let (_, frames) = load_session(spath)?;
        let (total_s, tracked_s) = pipeline::session_exposure(&frames);
        if total_s > 0.0 {
            report.fp_interval_s = Some(fp_interval(report.total_fp, total_s));
        }
        if tracked_s > 0.0 {
            report.fp_interval_tracked_s = Some(fp_interval(report.total_fp, tracked_s));
        }
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report::score_table(&report));
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> anyhow::Result<()> {
    let net_a = load_network_file(&a.network_a)?;
    let net_b = load_network_file(&a.network_b)?;
    let (_, frames) = load_session(&a.session)?;
    let report = pipeline::compare_networks(&net_a, &net_b, &frames, &a.hand.sides())?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report::compare_table(&report));
    }
    Ok(())
}

fn depth_views(frames: &[Frame]) -> Vec<DepthView<'_>> {
    frames
        .iter()
        .filter_map(|f| match f {
            Frame::Depth(d) => Some(DepthView {
                timestamp_ms: d.timestamp_ms,
                pixels: &d.pixels,
            }),
            _ => None,
        })
        .collect()
}

fn cmd_stillframes(a: StillArgs) -> anyhow::Result<()> {
    if a.min_duration_s <= 0.0 {
        anyhow::bail!("min duration must be positive");
    }
    let (_, frames) = load_session(&a.session)?;
    let views = depth_views(&frames);
    let intervals = still_frames(&views, a.threshold_mm, a.min_duration_s);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&intervals)?);
    } else if intervals.is_empty() {
        println!("no still intervals");
    } else {
        for iv in &intervals {
            println!(
                "still {:>8} ms .. {:>8} ms  (representative frame {})",
                iv.start_ms, iv.end_ms, iv.representative
            );
        }
    }
    Ok(())
}

fn cmd_zones(a: ZonesArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let (_, frames) = load_session(&a.session)?;
    let truth = synth::read_annotations(&a.annotations)?;
    let views = depth_views(&frames);
    if views.is_empty() {
        anyhow::bail!("session has no depth frames; zones need rendered depth");
    }
    let in_gesture = |ts: f64| {
        truth
            .iter()
            .any(|t| t.gesture_name == a.gesture && ts >= t.start_ms && ts <= t.end_ms)
    };
    let in_any = |ts: f64| truth.iter().any(|t| ts >= t.start_ms && ts <= t.end_ms);
    let gesture_px: Vec<&[u16]> = views
        .iter()
        .filter(|v| in_gesture(v.timestamp_ms as f64))
        .map(|v| v.pixels)
        .collect();
    let background_px: Vec<&[u16]> = views
        .iter()
        .filter(|v| !in_any(v.timestamp_ms as f64))
        .map(|v| v.pixels)
        .collect();
    if gesture_px.is_empty() {
        anyhow::bail!("no depth frames fall inside '{}' annotations", a.gesture);
    }
    if background_px.is_empty() {
        anyhow::bail!("no background depth frames outside annotations");
    }
    let (w, h) = match &frames.iter().find_map(|f| match f {
        Frame::Depth(d) => Some((d.width as usize, d.height as usize)),
        _ => None,
    }) {
        Some(dim) => *dim,
        None => unreachable!(),
    };
    let g_map = occupancy_map(&gesture_px, w, h).map_err(|e| anyhow::anyhow!("{e}"))?;
    let b_map = occupancy_map(&background_px, w, h).map_err(|e| anyhow::anyhow!("{e}"))?;
    let zone = gesture_zone(&g_map, &b_map).map_err(|e| anyhow::anyhow!("{e}"))?;
    report::write_pgm(&a.out, &zone)?;
    println!(
        "zone map for '{}' -> {} ({} gesture frames, {} background frames)",
        a.gesture,
        a.out.display(),
        gesture_px.len(),
        background_px.len()
    );
    let mut manifest = RunManifest::new("zones");
    manifest.inputs = vec![a.session.clone(), a.annotations.clone()];
    manifest.outputs = vec![a.out.clone()];
    let dir = a.out.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    manifest.write(&dir, start.elapsed())
}

fn cmd_inspect(a: InspectArgs) -> anyhow::Result<()> {
    let (header, frames) = load_session(&a.session)?;
    let stats = crate::container::frame_rate_stats(&frames);
    if a.json {
        #[derive(serde::Serialize)]
        struct Inspect<'a> {
            format_version: u32,
            sensor_id: &'a str,
            start_epoch_ms: u64,
            stream_flags: u32,
            stats: &'a crate::container::FrameRateStats,
        }
        let view = Inspect {
            format_version: header.format_version,
            sensor_id: &header.sensor_id,
            start_epoch_ms: header.start_epoch_ms,
            stream_flags: header.stream_flags,
            stats: &stats,
        };
        println!("{}", serde_json::to_string_pretty(&view)?);
    } else {
        println!("version:      {}", header.format_version);
        println!("sensor:       {}", header.sensor_id);
        println!("epoch:        {} ms", header.start_epoch_ms);
        println!("streams:      {:#06b}", header.stream_flags);
        for (name, count, gaps) in [
            ("depth", stats.depth_frames, stats.depth),
            ("rgb", stats.rgb_frames, stats.rgb),
            ("skeleton", stats.skeleton_frames, stats.skeleton),
        ] {
            match gaps {
                Some(g) => println!(
                    "{name:<9} {count:>7} frames, gap min/median/max {}/{}/{} ms",
                    g.min_ms, g.median_ms, g.max_ms
                ),
                None => println!("{name:<9} {count:>7} frames"),
            }
        }
    }
    Ok(())
}
