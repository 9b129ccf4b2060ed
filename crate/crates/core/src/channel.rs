//! Channel model: users dropped uniformly over a disc around the base
//! station, path loss `1 / (1 + (d/d0)^alpha)`, Rayleigh small-scale fading,
//! and a power budget drawn uniformly from a dB grid.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVec;

/// Receiver noise power. Every SINR in the crate is computed against it.
pub const NOISE_POWER: f64 = 1.0;

/// Seed namespaces; each maps to a disjoint ChaCha stream.
pub mod streams {
    pub const TRAIN: u64 = 0;
    pub const VALIDATION: u64 = 1 << 32;
    pub const TEST: u64 = 2 << 32;
    pub const INIT: u64 = 3 << 32;
}

/// Reproducible random source for a `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub m: usize,
    pub k: usize,
    /// Meters.
    pub cell_radius: f64,
    /// Reference distance `d0`, meters.
    pub ref_distance: f64,
    pub pathloss_exp: f64,
    /// Users are never closer than this to the base station, meters.
    pub min_bs_distance: f64,
    pub noise_power: f64,
}

impl ChannelConfig {
    pub fn new(m: usize, k: usize) -> Self {
        Self {
            m,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::InvalidConfig("M and K must be positive".into()));
        }
        if !(self.pathloss_exp > 0.0) || !(self.ref_distance > 0.0) {
            return Err(Error::InvalidConfig(
                "path-loss exponent and reference distance must be positive".into(),
            ));
        }
        if !(self.cell_radius >= self.min_bs_distance) || self.min_bs_distance < 0.0 {
            return Err(Error::InvalidConfig("need 0 <= min_bs_distance <= cell_radius".into()));
        }
        Ok(())
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            m: 4,
            k: 4,
            cell_radius: 100.0,
            ref_distance: 30.0,
            pathloss_exp: 3.0,
            min_bs_distance: 1.0,
            noise_power: NOISE_POWER,
        }
    }
}

/// Power levels in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    levels_db: Vec<f64>,
}

impl PowerGrid {
    pub fn new(mut levels_db: Vec<f64>) -> Result<Self> {
        if levels_db.is_empty() {
            return Err(Error::InvalidConfig("power grid is empty".into()));
        }
        if levels_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("power grid has a non-finite level".into()));
        }
        levels_db.sort_by(f64::total_cmp);
        if levels_db.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("power grid levels must be distinct".into()));
        }
        Ok(Self { levels_db })
    }

    pub fn single(level_db: f64) -> Self {
        Self {
            levels_db: vec![level_db],
        }
    }

    /// Parses `"0,5,10"` or a `start:step:stop` range such as `"0:5:30"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse power grid {spec:?}"));
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() == 3 {
            let nums: Vec<f64> = parts
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let (start, step, stop) = (nums[0], nums[1], nums[2]);
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            return Self::new((0..=n).map(|i| start + step * i as f64).collect());
        }
        let levels = spec
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }

    pub fn levels_db(&self) -> &[f64] {
        &self.levels_db
    }

    pub fn len(&self) -> usize {
        self.levels_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_db.is_empty()
    }

    pub fn contains(&self, level_db: f64) -> bool {
        self.levels_db.contains(&level_db)
    }
}

impl Default for PowerGrid {
    fn default() -> Self {
        Self {
            levels_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

/// One draw of the stacked channel and its power budget.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSample {
    pub h: Vec<CVec>,
    pub power_db: f64,
    /// Linear budget, always `db_to_linear(power_db)`.
    pub power: f64,
}

impl ChannelSample {
    pub fn new(h: Vec<CVec>, power_db: f64) -> Self {
        Self {
            h,
            power_db,
            power: db_to_linear(power_db),
        }
    }

    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.h.first().map_or(0, CVec::len)
    }

    pub fn is_finite(&self) -> bool {
        self.power_db.is_finite() && self.h.iter().all(CVec::is_finite)
    }

    pub fn with_power_db(&self, power_db: f64) -> Self {
        Self::new(self.h.clone(), power_db)
    }
}

/// `rho = 1 / (1 + (d/d0)^alpha)`.
pub fn path_loss(distance: f64, cfg: &ChannelConfig) -> f64 {
    1.0 / (1.0 + (distance / cfg.ref_distance).powf(cfg.pathloss_exp))
}

/// Distance of a user placed uniformly over the annulus
/// `min_bs_distance <= r <= cell_radius`.
pub fn draw_distance<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> f64 {
    let (r0, r1) = (cfg.min_bs_distance, cfg.cell_radius);
    let u: f64 = rng.random();
    (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt()
}

/// `CN(0, I_m)` vector.
pub fn draw_small_scale<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVec::zeros(m);
    for i in 0..m {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        v.re[i] = s * a;
        v.im[i] = s * b;
    }
    v
}

/// Channel for every user: `h_k = sqrt(rho_k) h~_k`.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> Vec<CVec> {
    (0..cfg.k)
        .map(|_| {
            let rho = path_loss(draw_distance(rng, cfg), cfg);
            draw_small_scale(rng, cfg.m).scale(rho.sqrt())
        })
        .collect()
}

pub fn draw_sample<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig, grid: &PowerGrid) -> ChannelSample {
    let h = draw_channel(rng, cfg);
    let level = grid.levels_db[rng.random_range(0..grid.len())];
    ChannelSample::new(h, level)
}

/// Endless reproducible sample sequence.
pub struct SampleStream {
    rng: ChaCha8Rng,
    cfg: ChannelConfig,
    grid: PowerGrid,
}

impl SampleStream {
    pub fn new(seed: u64, stream: u64, cfg: ChannelConfig, grid: PowerGrid) -> Self {
        Self {
            rng: stream_rng(seed, stream),
            cfg,
            grid,
        }
    }

    pub fn take_vec(&mut self, n: usize) -> Vec<ChannelSample> {
        self.take(n).collect()
    }
}

impl Iterator for SampleStream {
    type Item = ChannelSample;

    fn next(&mut self) -> Option<ChannelSample> {
        Some(draw_sample(&mut self.rng, &self.cfg, &self.grid))
    }
}

/// Test set with `per_level` samples for every grid level, level-major.
/// Channels are shared across levels so per-level averages compare like
/// with like.
pub fn per_level_set(
    seed: u64,
    stream: u64,
    cfg: &ChannelConfig,
    grid: &PowerGrid,
    per_level: usize,
) -> Vec<ChannelSample> {
    let mut rng = stream_rng(seed, stream);
    let channels: Vec<Vec<CVec>> = (0..per_level).map(|_| draw_channel(&mut rng, cfg)).collect();
    grid.levels_db()
        .iter()
        .flat_map(|&db| channels.iter().map(move |h| ChannelSample::new(h.clone(), db)))
        .collect()
}

// ---------------------------------------------------------------- dataset files

const DATASET_FORMAT: &str = "unibeam-dataset";
const DATASET_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    version: u32,
    m: usize,
    k: usize,
    grid_db: Vec<f64>,
}

/// In-memory dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub m: usize,
    pub k: usize,
    pub grid: PowerGrid,
    pub samples: Vec<ChannelSample>,
}

impl Dataset {
    pub fn new(grid: PowerGrid, samples: Vec<ChannelSample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let (m, k) = (first.num_antennas(), first.num_users());
        for (i, s) in samples.iter().enumerate() {
            if s.num_users() != k || s.h.iter().any(|h| h.len() != m) {
                return Err(Error::Dataset {
                    line: i + 2,
                    msg: format!("record {i} does not have shape K={k} x M={m}"),
                });
            }
        }
        Ok(Self { m, k, grid, samples })
    }

    /// Header line, then one record per line: the dB budget followed by
    /// `re im` pairs for `h_1[0..M], ..., h_K[0..M]`, 17 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let header = DatasetHeader {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            m: self.m,
            k: self.k,
            grid_db: self.grid.levels_db().to_vec(),
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        let mut line = String::new();
        for s in &self.samples {
            line.clear();
            line.push_str(&format!("{:.16e}", s.power_db));
            for h in &s.h {
                for i in 0..h.len() {
                    line.push_str(&format!(" {:.16e} {:.16e}", h.re[i], h.im[i]));
                }
            }
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header_line = match lines.next() {
            None => return Err(Error::EmptyDataset),
            Some((_, l)) => l?,
        };
        if header_line.trim().is_empty() {
            return Err(Error::EmptyDataset);
        }
        let header: DatasetHeader = serde_json::from_str(&header_line).map_err(|e| Error::Dataset {
            line: 1,
            msg: format!("bad header: {e}"),
        })?;
        if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
            return Err(Error::Dataset {
                line: 1,
                msg: format!(
                    "unsupported format {:?} version {} (expected {DATASET_FORMAT} v{DATASET_VERSION})",
                    header.format, header.version
                ),
            });
        }
        let grid = PowerGrid::new(header.grid_db).map_err(|e| Error::Dataset {
            line: 1,
            msg: e.to_string(),
        })?;
        let (m, k) = (header.m, header.k);
        let expected = 1 + 2 * m * k;
        let mut samples = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split_ascii_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Dataset {
                        line: lineno,
                        msg: format!("malformed number {t:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != expected {
                return Err(Error::Dataset {
                    line: lineno,
                    msg: format!(
                        "record {} has {} values, header K={k} x M={m} needs {expected}",
                        samples.len(),
                        values.len()
                    ),
                });
            }
            let h = (0..k)
                .map(|u| {
                    let base = 1 + 2 * m * u;
                    let re = (0..m).map(|i| values[base + 2 * i]).collect();
                    let im = (0..m).map(|i| values[base + 2 * i + 1]).collect();
                    CVec { re, im }
                })
                .collect();
            samples.push(ChannelSample::new(h, values[0]));
        }
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { m, k, grid, samples })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
