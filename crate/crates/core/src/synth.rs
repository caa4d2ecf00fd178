//! Synthetic bitstream datasets.
//!
//! Simulates the frame-level transmission of a 42 s H.264/AMR-WB clip over a
//! lossy link for every condition of the compression/impairment grid, extracts
//! the bitstream feature columns from each trace and attaches a surrogate MOS.
//! The surrogate exists to exercise the modeling pipeline; it is not a model
//! of subjective quality.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{QualityDataset, Sample};
use crate::error::{Error, Result};
use crate::seed;

pub const CLIP_SECONDS: u32 = 42;
pub const I_FRAME_INTERVAL_S: u32 = 10;
pub const AUDIO_FRAMES_PER_S: u32 = 50;
/// Loss is only applied from this instant on.
pub const LOSS_START_S: f64 = 1.0;
/// Per-second features cover seconds 0..=30.
pub const PER_SECOND_HORIZON: usize = 31;
pub const I_FRAME_SLOTS: usize = 5;

pub const FRAME_WIDTH: f64 = 1280.0;
pub const FRAME_HEIGHT: f64 = 720.0;
pub const PAYLOAD_BYTES: u32 = 1200;
pub const AUDIO_BITRATE: f64 = 24_000.0;
pub const VIDEO_TIMEBASE: f64 = 90_000.0;
pub const AUDIO_TIMEBASE: f64 = 16_000.0;
/// Single source clip, so one content-complexity value for every row.
pub const CONTENT_COMPLEXITY: f64 = 1.0;

const I_MEAN_BYTES: f64 = 60_000.0;
const P_MEAN_BYTES: f64 = 6_000.0;
const SIZE_SIGMA: f64 = 0.25;
const NR_SIZE_FACTOR: f64 = 0.85;

pub const FPS_LEVELS: [u32; 4] = [10, 15, 20, 25];
pub const QP_LEVELS: [u32; 4] = [23, 27, 31, 35];
pub const NR_LEVELS: [u32; 2] = [0, 999];
pub const PLR_LEVELS: [f64; 5] = [0.0, 0.1, 0.5, 1.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamCondition {
    pub fps: u32,
    pub qp: u32,
    pub nr: u32,
    /// Percent.
    pub video_plr: f64,
    /// Percent.
    pub audio_plr: f64,
}

impl StreamCondition {
    pub fn validate(&self, extended: bool) -> Result<()> {
        let bad = |what, value: String, allowed: String| Error::OutOfRange { what, value, allowed };
        if self.fps == 0 {
            return Err(bad("fps", "0".into(), "> 0".into()));
        }
        for (what, plr) in [("video_plr", self.video_plr), ("audio_plr", self.audio_plr)] {
            if !(0.0..=100.0).contains(&plr) {
                return Err(bad(what, plr.to_string(), "[0, 100]".into()));
            }
        }
        if extended {
            return Ok(());
        }
        if !FPS_LEVELS.contains(&self.fps) {
            return Err(bad("fps", self.fps.to_string(), format!("{FPS_LEVELS:?}")));
        }
        if !QP_LEVELS.contains(&self.qp) {
            return Err(bad("qp", self.qp.to_string(), format!("{QP_LEVELS:?}")));
        }
        if !NR_LEVELS.contains(&self.nr) {
            return Err(bad("nr", self.nr.to_string(), format!("{NR_LEVELS:?}")));
        }
        for (what, plr) in [("video_plr", self.video_plr), ("audio_plr", self.audio_plr)] {
            if !PLR_LEVELS.contains(&plr) {
                return Err(bad(what, plr.to_string(), format!("{PLR_LEVELS:?}")));
            }
        }
        Ok(())
    }
}

/// Axis values of the condition grid. Audio loss is paired with video loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGrid {
    pub fps: Vec<u32>,
    pub qp: Vec<u32>,
    pub nr: Vec<u32>,
    pub plr: Vec<f64>,
    /// Permit values outside the standard levels.
    pub extended: bool,
}

impl ConditionGrid {
    pub fn full() -> Self {
        ConditionGrid {
            fps: FPS_LEVELS.to_vec(),
            qp: QP_LEVELS.to_vec(),
            nr: NR_LEVELS.to_vec(),
            plr: PLR_LEVELS.to_vec(),
            extended: false,
        }
    }

    /// 2 x 2 x 1 x 3 corner grid for quick runs.
    pub fn tiny() -> Self {
        ConditionGrid {
            fps: vec![10, 25],
            qp: vec![23, 35],
            nr: vec![0],
            plr: vec![0.0, 1.0, 5.0],
            extended: false,
        }
    }
}

pub fn enumerate_conditions(grid: &ConditionGrid) -> Result<Vec<StreamCondition>> {
    let mut out = Vec::with_capacity(grid.fps.len() * grid.qp.len() * grid.nr.len() * grid.plr.len());
    for &fps in &grid.fps {
        for &qp in &grid.qp {
            for &nr in &grid.nr {
                for &plr in &grid.plr {
                    let c = StreamCondition {
                        fps,
                        qp,
                        nr,
                        video_plr: plr,
                        audio_plr: plr,
                    };
                    c.validate(grid.extended)?;
                    out.push(c);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    I,
    P,
    A,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub kind: FrameKind,
    pub timestamp: f64,
    /// Bytes sent.
    pub size: u32,
    /// Bytes that arrived.
    pub received: u32,
    /// At least one packet of the frame was dropped.
    pub lost: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTrace {
    /// Video frames in presentation order followed by audio frames.
    pub frames: Vec<FrameRecord>,
    pub duration: f64,
    pub nominal_video_bitrate: f64,
    pub nominal_audio_bitrate: f64,
}

impl FrameTrace {
    pub fn video(&self) -> impl Iterator<Item = &FrameRecord> {
        self.frames.iter().filter(|f| f.kind != FrameKind::A)
    }

    pub fn audio(&self) -> impl Iterator<Item = &FrameRecord> {
        self.frames.iter().filter(|f| f.kind == FrameKind::A)
    }

    pub fn count(&self, kind: FrameKind) -> usize {
        self.frames.iter().filter(|f| f.kind == kind).count()
    }
}

fn qp_scale(qp: u32) -> f64 {
    2f64.powf((23.0 - qp as f64) / 6.0)
}

fn mean_sizes(c: &StreamCondition) -> (f64, f64) {
    let nr = if c.nr > 0 { NR_SIZE_FACTOR } else { 1.0 };
    let scale = qp_scale(c.qp) * nr;
    let motion = (25.0 / c.fps as f64).sqrt();
    (I_MEAN_BYTES * scale, P_MEAN_BYTES * scale * motion)
}

fn packets(size: u32) -> u32 {
    size.div_ceil(PAYLOAD_BYTES).max(1)
}

/// Drops packets i.i.d. at `plr` percent. A uniform draw is consumed for
/// every packet regardless of `active` or `plr`, so traces that differ only
/// in loss rate share their random numbers.
fn transmit(size: u32, plr: f64, active: bool, rng: &mut seed::Rng) -> (u32, bool) {
    let n = packets(size);
    let mut received = 0;
    let mut lost = false;
    for k in 0..n {
        let bytes = if k + 1 == n { size - PAYLOAD_BYTES * (n - 1) } else { PAYLOAD_BYTES.min(size) };
        let u: f64 = rng.random();
        if active && u < plr / 100.0 {
            lost = true;
        } else {
            received += bytes;
        }
    }
    (received, lost)
}

/// Simulates one 42 s transmission. Frame sizes are lognormal around
/// means scaled by `2^((23 - qp) / 6)`; with a fixed seed the sizes are
/// monotone in qp and the realized losses are nested in the loss rate.
pub fn simulate_transmission(c: &StreamCondition, seed: u64) -> FrameTrace {
    let (i_mean, p_mean) = mean_sizes(c);
    let mut size_rng = seed::derived_rng(seed, &[1]);
    let mut video_loss = seed::derived_rng(seed, &[2]);
    let mut audio_loss = seed::derived_rng(seed, &[3]);

    let n_video = c.fps * CLIP_SECONDS;
    let gop = c.fps * I_FRAME_INTERVAL_S;
    let n_audio = AUDIO_FRAMES_PER_S * CLIP_SECONDS;
    let mut frames = Vec::with_capacity((n_video + n_audio) as usize);

    let draw_size = |mean: f64, rng: &mut seed::Rng| -> u32 {
        let z: f64 = rng.sample(StandardNormal);
        let v = mean * (SIZE_SIGMA * z - 0.5 * SIZE_SIGMA * SIZE_SIGMA).exp();
        (v.round() as u32).max(1)
    };

    for i in 0..n_video {
        let timestamp = i as f64 / c.fps as f64;
        let (kind, mean) = if i % gop == 0 { (FrameKind::I, i_mean) } else { (FrameKind::P, p_mean) };
        let size = draw_size(mean, &mut size_rng);
        let (received, lost) = transmit(size, c.video_plr, timestamp >= LOSS_START_S, &mut video_loss);
        frames.push(FrameRecord { kind, timestamp, size, received, lost });
    }
    let audio_bytes = (AUDIO_BITRATE / 8.0 / AUDIO_FRAMES_PER_S as f64).round() as u32;
    for i in 0..n_audio {
        let timestamp = i as f64 / AUDIO_FRAMES_PER_S as f64;
        let (received, lost) =
            transmit(audio_bytes, c.audio_plr, timestamp >= LOSS_START_S, &mut audio_loss);
        frames.push(FrameRecord {
            kind: FrameKind::A,
            timestamp,
            size: audio_bytes,
            received,
            lost,
        });
    }

    let n_p = (n_video - CLIP_SECONDS / I_FRAME_INTERVAL_S - 1) as f64;
    let n_i = (CLIP_SECONDS / I_FRAME_INTERVAL_S + 1) as f64;
    FrameTrace {
        frames,
        duration: CLIP_SECONDS as f64,
        nominal_video_bitrate: (n_i * i_mean + n_p * p_mean) * 8.0 / CLIP_SECONDS as f64,
        nominal_audio_bitrate: AUDIO_BITRATE,
    }
}

/// Bitstream feature columns, in the order [`extract_features`] emits them.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = [
        "VideoFrameRate",
        "NoiseReduction",
        "QuantizationParameter",
        "VideoPacketLossRate",
        "AudioPacketLossRate",
        "VideoStartPTS",
        "VideoDurationTS",
        "VideoBitRate",
        "VideoNBFrames",
        "AudioDurationTS",
        "AudioDuration",
        "AudioBitRate",
        "AudioNBFrames",
        "VideoBitsPerPixelFrame",
        "iFramesPerScene",
        "ContentComplexity",
        "iFrameCount",
        "pFrameCount",
        "aFrameCount",
        "iFrameCountDiff",
        "pFrameCountDiff",
        "aFrameCountDiff",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend((0..I_FRAME_SLOTS).map(|i| format!("iFrame{i}Size")));
    names.extend((0..I_FRAME_SLOTS).map(|i| format!("iFrame{i}SizeDiff")));
    names.extend((0..PER_SECOND_HORIZON).map(|s| format!("S{s}pFrameCountDiff")));
    names.extend((0..PER_SECOND_HORIZON).map(|s| format!("S{s}pFrameMeanDiff")));
    names.extend((0..PER_SECOND_HORIZON).map(|s| format!("S{s}aFrameCountDiff")));
    names
}

/// `100 * (reference - received) / reference`, 0 for an empty reference.
fn deficit(reference: f64, received: f64) -> f64 {
    if reference > 0.0 {
        100.0 * (reference - received) / reference
    } else {
        0.0
    }
}

fn second_of(t: f64) -> usize {
    (t + 1e-9).floor() as usize
}

#[derive(Default, Clone, Copy)]
struct Tally {
    sent: usize,
    arrived: usize,
    bytes_sent: f64,
    bytes_arrived: f64,
}

impl Tally {
    fn add(&mut self, f: &FrameRecord) {
        self.sent += 1;
        self.bytes_sent += f.size as f64;
        self.bytes_arrived += f.received as f64;
        if !f.lost {
            self.arrived += 1;
        }
    }

    fn count_diff(&self) -> f64 {
        deficit(self.sent as f64, self.arrived as f64)
    }

    fn bytes_diff(&self) -> f64 {
        deficit(self.bytes_sent, self.bytes_arrived)
    }
}

/// Computes the feature row of a trace. "Diff" columns are percentage
/// deficits against the same trace with loss disabled; a frame counts as
/// received only when all of its packets arrived.
pub fn extract_features(trace: &FrameTrace, c: &StreamCondition) -> Result<Vec<f64>> {
    if trace.duration < PER_SECOND_HORIZON as f64 {
        return Err(Error::TraceTooShort {
            duration: trace.duration,
            needed: PER_SECOND_HORIZON as f64,
        });
    }
    let fps = c.fps as f64;
    let (mut i_tot, mut p_tot, mut a_tot) = (Tally::default(), Tally::default(), Tally::default());
    let mut p_sec = [Tally::default(); PER_SECOND_HORIZON];
    let mut a_sec = [Tally::default(); PER_SECOND_HORIZON];
    let mut i_frames: Vec<&FrameRecord> = Vec::new();
    let mut last_video: Option<f64> = None;
    let mut first_video: Option<f64> = None;
    let mut last_audio: Option<f64> = None;

    for f in &trace.frames {
        let s = second_of(f.timestamp);
        match f.kind {
            FrameKind::I => {
                i_tot.add(f);
                i_frames.push(f);
            }
            FrameKind::P => {
                p_tot.add(f);
                if s < PER_SECOND_HORIZON {
                    p_sec[s].add(f);
                }
            }
            FrameKind::A => {
                a_tot.add(f);
                if s < PER_SECOND_HORIZON {
                    a_sec[s].add(f);
                }
            }
        }
        if !f.lost {
            if f.kind == FrameKind::A {
                last_audio = Some(last_audio.map_or(f.timestamp, |t: f64| t.max(f.timestamp)));
            } else {
                first_video = Some(first_video.map_or(f.timestamp, |t: f64| t.min(f.timestamp)));
                last_video = Some(last_video.map_or(f.timestamp, |t: f64| t.max(f.timestamp)));
            }
        }
    }

    let video_bytes = i_tot.bytes_arrived + p_tot.bytes_arrived;
    let audio_bytes = a_tot.bytes_arrived;
    let video_bitrate = video_bytes * 8.0 / trace.duration;
    let audio_bitrate = audio_bytes * 8.0 / trace.duration;
    let video_duration = last_video.map_or(0.0, |t| t + 1.0 / fps);
    let audio_duration = last_audio.map_or(0.0, |t| t + 1.0 / AUDIO_FRAMES_PER_S as f64);

    let mut row = vec![
        c.fps as f64,
        c.nr as f64,
        c.qp as f64,
        c.video_plr,
        c.audio_plr,
        (first_video.unwrap_or(0.0) * VIDEO_TIMEBASE).round(),
        (video_duration * VIDEO_TIMEBASE).round(),
        video_bitrate,
        (i_tot.arrived + p_tot.arrived) as f64,
        (audio_duration * AUDIO_TIMEBASE).round(),
        audio_duration,
        audio_bitrate,
        a_tot.arrived as f64,
        video_bitrate / (FRAME_WIDTH * FRAME_HEIGHT * fps),
        i_tot.arrived as f64,
        CONTENT_COMPLEXITY,
        i_tot.arrived as f64,
        p_tot.arrived as f64,
        a_tot.arrived as f64,
        i_tot.count_diff(),
        p_tot.count_diff(),
        a_tot.count_diff(),
    ];
    for slot in 0..I_FRAME_SLOTS {
        row.push(i_frames.get(slot).map_or(0.0, |f| f.received as f64));
    }
    for slot in 0..I_FRAME_SLOTS {
        row.push(i_frames.get(slot).map_or(0.0, |f| deficit(f.size as f64, f.received as f64)));
    }
    row.extend(p_sec.iter().map(Tally::count_diff));
    row.extend(p_sec.iter().map(Tally::bytes_diff));
    row.extend(a_sec.iter().map(Tally::count_diff));
    debug_assert_eq!(row.len(), feature_names().len());
    Ok(row)
}

/// Noise-free surrogate MOS: strictly decreasing in video loss, decreasing
/// in qp, increasing in fps. Stays inside [1.7, 4.9] on the standard grid.
pub fn surrogate_mos_clean(c: &StreamCondition) -> f64 {
    let plr_term = 2.2 * (1.0 + c.video_plr).ln() / 6f64.ln();
    let qp_term = 0.6 * (c.qp as f64 - 23.0) / 12.0;
    let fps_term = 0.4 * (c.fps as f64 - 10.0) / 15.0;
    4.5 - plr_term - qp_term + fps_term
}

pub const MOS_NOISE_AMPLITUDE: f64 = 0.1;

/// Surrogate MOS with seeded uniform noise in `[-0.1, 0.1]`, clamped to [1, 5].
pub fn synth_mos(c: &StreamCondition, noise_seed: u64) -> f64 {
    let key = [
        c.fps as u64,
        c.qp as u64,
        c.nr as u64,
        c.video_plr.to_bits(),
        c.audio_plr.to_bits(),
    ];
    let mut rng = seed::derived_rng(noise_seed, &key);
    let noise = rng.random_range(-MOS_NOISE_AMPLITUDE..=MOS_NOISE_AMPLITUDE);
    (surrogate_mos_clean(c) + noise).clamp(1.0, 5.0)
}

/// Seed of the trace simulated for `c`. Loss rate is excluded so conditions
/// differing only in loss share frame sizes and loss draws.
pub fn trace_seed(master: u64, c: &StreamCondition) -> u64 {
    seed::derive(master, &[seed::tag("trace"), c.fps as u64, c.qp as u64, c.nr as u64])
}

pub fn generate_dataset(grid: &ConditionGrid, master: u64) -> Result<QualityDataset> {
    let conditions = enumerate_conditions(grid)?;
    let mos_seed = seed::derive(master, &[seed::tag("mos")]);
    let samples = conditions
        .iter()
        .map(|c| {
            let trace = simulate_transmission(c, trace_seed(master, c));
            Ok(Sample {
                features: extract_features(&trace, c)?,
                mos: synth_mos(c, mos_seed),
                ci95: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QualityDataset::new(feature_names(), samples)
}
