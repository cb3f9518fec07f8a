//! Monte-Carlo frame-error-rate harness.
//!
//! Frame `t` at every Eb/N0 point draws its message and unit-variance noise
//! from the counter-based stream `(seed, t)`, so results do not depend on
//! the number of worker threads and different points and decoders see
//! common random numbers.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_llrvs_flat, frame_rng, noise_variance, transmit_flat};
use crate::error::{Error, Result};
use crate::gf::GfElement;
use crate::llrv::{KernelTables, Precision};
use crate::nbscl::{self, SclConfig};
use crate::polar::{split_code_with_layout, CodeSpec, SplitLayout, SplitSpec};
use crate::split::{self, SkimConfig, SkimMetric, SkimPolicy};

/// Decoder under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecoderKind {
    Sc,
    Scl { list_size: usize },
    SNbscl { m: usize, list_size: usize, skim: usize },
}

impl DecoderKind {
    pub fn label(&self) -> String {
        match self {
            DecoderKind::Sc => "sc".into(),
            DecoderKind::Scl { list_size } => format!("scl-L{list_size}"),
            DecoderKind::SNbscl { m, list_size, skim } => format!("s-nbscl-M{m}-L{list_size}-Ls{skim}"),
        }
    }
}

/// Variant knobs of the split decoder; ignored by the other decoders.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub layout: SplitLayout,
    pub policy: SkimPolicy,
    pub metric: SkimMetric,
}

/// Simulation settings shared by all points of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FerConfig {
    pub decoder: DecoderKind,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default)]
    pub split: SplitOptions,
    pub seed: u64,
    pub min_errors: u64,
    pub max_frames: u64,
    /// Worker threads; 0 uses all available cores. Has no effect on results.
    pub workers: usize,
}

impl FerConfig {
    pub fn new(decoder: DecoderKind, seed: u64) -> Self {
        FerConfig { decoder, precision: Precision::Float, split: SplitOptions::default(), seed, min_errors: 100, max_frames: 1_000_000, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FerPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl FerPoint {
    pub fn new(ebn0_db: f64, frames: u64, errors: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, frames);
        let fer = if frames == 0 { 0.0 } else { errors as f64 / frames as f64 };
        FerPoint { ebn0_db, frames, errors, fer, ci_lo, ci_hi }
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(errors: u64, frames: u64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == frames { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

enum Prepared {
    Plain(SclConfig),
    Split(Box<SplitSpec>, SkimConfig),
}

/// A code and decoder ready for simulation.
pub struct Simulator {
    code: CodeSpec,
    kt: KernelTables,
    prepared: Prepared,
    cfg: FerConfig,
}

const BATCH: u64 = 64;

impl Simulator {
    pub fn new(code: &CodeSpec, cfg: &FerConfig) -> Result<Self> {
        if cfg.min_errors == 0 || cfg.max_frames == 0 {
            return Err(Error::DecoderConfig("min_errors and max_frames must be positive".into()));
        }
        let prepared = match cfg.decoder {
            DecoderKind::Sc => Prepared::Plain(SclConfig { list_size: 1, precision: cfg.precision }),
            DecoderKind::Scl { list_size } => {
                if list_size == 0 {
                    return Err(Error::DecoderConfig("list size must be at least 1".into()));
                }
                Prepared::Plain(SclConfig { list_size, precision: cfg.precision })
            }
            DecoderKind::SNbscl { m, list_size, skim } => {
                let skim_cfg = SkimConfig {
                    precision: cfg.precision,
                    policy: cfg.split.policy,
                    metric: cfg.split.metric,
                    ..SkimConfig::new(m, list_size, skim)
                };
                skim_cfg.validate(code.q())?;
                Prepared::Split(Box::new(split_code_with_layout(code, m, cfg.split.layout)?), skim_cfg)
            }
        };
        Ok(Simulator { code: code.clone(), kt: code.kernel_tables(), prepared, cfg: *cfg })
    }

    /// Simulates frame `frame` at `sigma2`; returns whether it was decoded in error.
    pub fn frame_error(&self, frame: u64, sigma2: f64) -> Result<bool> {
        let code = &self.code;
        let mut rng = frame_rng(self.cfg.seed, frame);
        let message: Vec<GfElement> = (0..code.k()).map(|_| GfElement(rng.random_range(0..code.q()) as u8)).collect();
        let c = code.encode_message(&message)?;
        let r = code.field().r();
        let y = transmit_flat(&c, r, sigma2.sqrt(), &mut rng);
        let ch = channel_llrvs_flat(&y, r, sigma2);
        let decoded = match &self.prepared {
            Prepared::Plain(scl) => nbscl::decode_flat(code, &self.kt, &ch, scl).map(|o| o.message),
            Prepared::Split(spec, skim) => split::decode_flat(spec, &self.kt, &ch, skim).map(|o| o.message),
        };
        match decoded {
            Ok(m) => Ok(m != message),
            Err(Error::FrameFailure { .. }) => Ok(true),
            Err(e) => Err(e),
        }
    }

    /// Simulates until `min_errors` frame errors or `max_frames` frames.
    pub fn run_point(&self, ebn0_db: f64) -> Result<FerPoint> {
        let sigma2 = noise_variance(ebn0_db, self.code.rate());
        let (mut frames, mut errors) = (0u64, 0u64);
        while frames < self.cfg.max_frames && errors < self.cfg.min_errors {
            let end = (frames + BATCH).min(self.cfg.max_frames);
            let outcomes: Vec<bool> =
                (frames..end).into_par_iter().map(|t| self.frame_error(t, sigma2)).collect::<Result<_>>()?;
            for e in outcomes {
                frames += 1;
                errors += u64::from(e);
                if errors >= self.cfg.min_errors {
                    break;
                }
            }
        }
        Ok(FerPoint::new(ebn0_db, frames, errors))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| Error::DecoderConfig(format!("thread pool: {e}")))
    }

    /// Runs every point of `ebn0_db` in order.
    pub fn run(&self, ebn0_db: &[f64]) -> Result<Vec<FerPoint>> {
        self.pool()?.install(|| ebn0_db.iter().map(|&e| self.run_point(e)).collect())
    }

    /// Sweeps upward from `start` in steps of `step` until a point falls below
    /// `target` FER (or `max_points` points), giving a bracket for interpolation.
    pub fn sweep_to_target(&self, start: f64, step: f64, target: f64, max_points: usize) -> Result<Vec<FerPoint>> {
        let pool = self.pool()?;
        let mut points = Vec::new();
        let mut e = start;
        while points.len() < max_points {
            let p = pool.install(|| self.run_point(e))?;
            points.push(p);
            if p.fer < target {
                break;
            }
            e = ((e + step) * 1e6).round() / 1e6;
        }
        Ok(points)
    }
}

/// Convenience wrapper: builds a [`Simulator`] and runs the sweep.
pub fn run_fer(code: &CodeSpec, cfg: &FerConfig, ebn0_db: &[f64]) -> Result<Vec<FerPoint>> {
    Simulator::new(code, cfg)?.run(ebn0_db)
}

/// Eb/N0 at which the curve crosses `target`, interpolating `log10(FER)`
/// linearly between the first bracketing pair of points.
pub fn ebn0_at_fer(points: &[FerPoint], target: f64) -> Option<f64> {
    let mut pts: Vec<&FerPoint> = points.iter().collect();
    pts.sort_by(|a, b| a.ebn0_db.total_cmp(&b.ebn0_db));
    pts.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.fer >= target && b.fer < target && b.fer > 0.0 {
            let (la, lb, lt) = (a.fer.log10(), b.fer.log10(), target.log10());
            Some(a.ebn0_db + (la - lt) / (la - lb) * (b.ebn0_db - a.ebn0_db))
        } else {
            None
        }
    })
}

/// Writes points as CSV with columns `ebn0_db,frames,errors,fer,ci_lo,ci_hi`.
pub fn write_csv<W: Write>(points: &[FerPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_csv_string(points: &[FerPoint]) -> String {
    let mut buf = Vec::new();
    write_csv(points, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub n: usize,
    pub k: usize,
    pub q: usize,
    pub poly: u32,
    pub alpha: u8,
    pub beta: u8,
    pub config: FerConfig,
    pub ebn0_db: Vec<f64>,
    pub frozen: Vec<usize>,
}

impl RunManifest {
    pub fn new(code: &CodeSpec, cfg: &FerConfig, ebn0_db: &[f64]) -> Self {
        RunManifest {
            version: concat!(env!("CARGO_PKG_NAME"), "-", env!("CARGO_PKG_VERSION")).into(),
            n: code.len(),
            k: code.k(),
            q: code.q(),
            poly: code.field().poly(),
            alpha: code.kernel().alpha.0,
            beta: code.kernel().beta.0,
            config: *cfg,
            ebn0_db: ebn0_db.to_vec(),
            frozen: (0..code.len()).filter(|&i| code.is_frozen(i)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}
