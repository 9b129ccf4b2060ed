//! Evaluation, benchmarking and ablation runs behind the command-line tool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{mrt_poweropt, wmmse, zf_waterfilling, Baseline, MrtConfig, WmmseConfig};
use crate::channel::{per_level_set, streams, ChannelConfig, ChannelSample, Dataset, PowerGrid};
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::metrics::sum_rate;
use crate::model::NetworkParams;

pub const CODE_FINGERPRINT: &str = env!("UNIBEAM_CODE_FINGERPRINT");

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "UNIBEAM_OUT_DIR";

pub enum Method {
    Model { label: String, params: NetworkParams },
    Baseline(Baseline),
}

impl Method {
    pub fn label(&self) -> &str {
        match self {
            Method::Model { label, .. } => label,
            Method::Baseline(b) => b.name(),
        }
    }

    fn check(&self, m: usize, k: usize) -> Result<()> {
        if let Method::Model { params, .. } = self {
            if params.m != m || params.k != k {
                return Err(Error::DimensionMismatch {
                    context: "model vs test set (2MK)",
                    expected: 2 * m * k,
                    found: 2 * params.m * params.k,
                });
            }
        }
        Ok(())
    }
}

/// Runs a baseline solver on one channel.
pub fn solve_baseline(b: Baseline, h: &[CVec], power: f64) -> Result<Vec<CVec>> {
    Ok(match b {
        Baseline::Wmmse => wmmse(h, power, &WmmseConfig::default())?.beams.v,
        Baseline::ZfWf => zf_waterfilling(h, power)?.v,
        Baseline::Mrt => mrt_poweropt(h, power, &MrtConfig::default())?.v,
    })
}

/// Samples grouped by budget; `samples[l]` all have budget `levels_db[l]`.
#[derive(Clone, Debug)]
pub struct TestSet {
    pub m: usize,
    pub k: usize,
    pub levels_db: Vec<f64>,
    pub samples: Vec<Vec<ChannelSample>>,
}

impl TestSet {
    /// `per_level` channels drawn from the test stream, reused at every level.
    pub fn generate(seed: u64, m: usize, k: usize, grid: &PowerGrid, per_level: usize) -> Result<Self> {
        let cfg = ChannelConfig::new(m, k);
        cfg.validate()?;
        if per_level == 0 {
            return Err(Error::InvalidConfig("need at least one sample per level".into()));
        }
        let flat = per_level_set(seed, streams::TEST, &cfg, grid, per_level);
        Ok(Self {
            m,
            k,
            levels_db: grid.levels_db().to_vec(),
            samples: flat.chunks(per_level).map(<[_]>::to_vec).collect(),
        })
    }

    /// Groups a dataset by the budget of each record, in grid order. Levels
    /// without records are dropped.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut levels_db = Vec::new();
        let mut samples = Vec::new();
        for &db in ds.grid.levels_db() {
            let group: Vec<ChannelSample> = ds.samples.iter().filter(|s| s.power_db == db).cloned().collect();
            if !group.is_empty() {
                levels_db.push(db);
                samples.push(group);
            }
        }
        Self {
            m: ds.m,
            k: ds.k,
            levels_db,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Average sum rate per level and method.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalTable {
    pub levels_db: Vec<f64>,
    pub columns: Vec<(String, Vec<Option<f64>>)>,
}

impl EvalTable {
    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    /// `p_db,<method>...`, one row per level; missing cells are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["p_db".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        out.write_record(&header)?;
        for (l, db) in self.levels_db.iter().enumerate() {
            let mut rec = vec![format!("{db}")];
            rec.extend(
                self.columns
                    .iter()
                    .map(|(_, c)| c[l].map_or_else(String::new, |v| format!("{v:.6}"))),
            );
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Per-sample sum rates of one method on one level.
pub fn sample_rates(method: &Method, samples: &[ChannelSample], threads: usize) -> Result<Vec<f64>> {
    match method {
        Method::Model { params, .. } => {
            let inferred = params.infer(samples)?;
            samples
                .iter()
                .zip(&inferred)
                .map(|(s, inf)| sum_rate(&s.h, &inf.beams.v))
                .collect()
        }
        Method::Baseline(b) => {
            let one = |s: &ChannelSample| sum_rate(&s.h, &solve_baseline(*b, &s.h, s.power)?);
            if threads <= 1 {
                samples.iter().map(one).collect()
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
                pool.install(|| samples.par_iter().map(one).collect())
            }
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Average sum rate of every method at every level. Sums run in sample
/// order, so the result does not depend on `threads`.
pub fn evaluate(methods: &[Method], test: &TestSet, threads: usize) -> Result<EvalTable> {
    let mut columns = Vec::with_capacity(methods.len());
    for method in methods {
        method.check(test.m, test.k)?;
        let col = test
            .samples
            .iter()
            .map(|group| Ok(Some(mean(&sample_rates(method, group, threads)?))))
            .collect::<Result<Vec<_>>>()?;
        columns.push((method.label().to_string(), col));
    }
    Ok(EvalTable {
        levels_db: test.levels_db.clone(),
        columns,
    })
}

/// Universal model, models trained at single budgets, and the composite
/// "trained and tested at the same budget" reference built from the latter.
pub fn ablate(universal: Method, fixed: Vec<(f64, Method)>, test: &TestSet, threads: usize) -> Result<EvalTable> {
    let mut methods = vec![universal];
    let fixed_levels: Vec<f64> = fixed.iter().map(|(db, _)| *db).collect();
    methods.extend(fixed.into_iter().map(|(_, m)| m));
    let mut table = evaluate(&methods, test, threads)?;
    if !fixed_levels.is_empty() {
        let per_p: Vec<Option<f64>> = test
            .levels_db
            .iter()
            .enumerate()
            .map(|(l, db)| {
                fixed_levels
                    .iter()
                    .position(|f| f == db)
                    .and_then(|i| table.columns[i + 1].1[l])
            })
            .collect();
        table.columns.push(("per_p".to_string(), per_p));
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub p_db: f64,
    /// Seconds per sample.
    pub mean: f64,
    pub median_of_means: f64,
    pub std: f64,
}

pub const BENCH_GROUPS: usize = 10;

/// Wall-clock seconds per single-sample solve or inference, on the current
/// thread, after `warmup` untimed calls per level.
pub fn bench(methods: &[Method], test: &TestSet, warmup: usize) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for method in methods {
        method.check(test.m, test.k)?;
        let run = |s: &ChannelSample| -> Result<Vec<CVec>> {
            match method {
                Method::Model { params, .. } => Ok(params.beamform(s)?.v),
                Method::Baseline(b) => solve_baseline(*b, &s.h, s.power),
            }
        };
        for group in &test.samples {
            for s in group.iter().cycle().take(warmup) {
                std::hint::black_box(run(s)?);
            }
        }
        // levels are timed round-robin so slow drift in machine speed hits all of them alike
        let mut times: Vec<Vec<f64>> = test.samples.iter().map(|g| Vec::with_capacity(g.len())).collect();
        let longest = test.samples.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..longest {
            for (group, out) in test.samples.iter().zip(&mut times) {
                if let Some(s) = group.get(i) {
                    let t = Instant::now();
                    std::hint::black_box(run(s)?);
                    out.push(t.elapsed().as_secs_f64());
                }
            }
        }
        for (db, t) in test.levels_db.iter().zip(&times) {
            rows.push(summarize(method.label(), *db, t));
        }
    }
    Ok(rows)
}

fn summarize(method: &str, p_db: f64, times: &[f64]) -> BenchRow {
    let m = mean(times);
    let var = times.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (times.len().max(2) - 1) as f64;
    let chunk = times.len().div_ceil(BENCH_GROUPS).max(1);
    let mut means: Vec<f64> = times.chunks(chunk).map(mean).collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    let median = if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    };
    BenchRow {
        method: method.to_string(),
        p_db,
        mean: m,
        median_of_means: median,
        std: var.sqrt(),
    }
}

/// `method,p_db,mean_s,median_of_means_s,std_s`.
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "p_db", "mean_s", "median_of_means_s", "std_s"])?;
    for r in rows {
        out.write_record([
            r.method.clone(),
            format!("{}", r.p_db),
            format!("{:.6e}", r.mean),
            format!("{:.6e}", r.median_of_means),
            format!("{:.6e}", r.std),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Provenance record written next to every output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub code_fingerprint: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            code_fingerprint: CODE_FINGERPRINT.to_string(),
            started: chrono::Utc::now().to_rfc3339(),
            finished: String::new(),
            outputs: Vec::new(),
        }
    }

    /// `<output>.manifest.json`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    /// Stamps the finish time and writes the manifest next to `primary`.
    pub fn finish(mut self, primary: &Path, outputs: &[&Path]) -> Result<PathBuf> {
        self.finished = chrono::Utc::now().to_rfc3339();
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        let path = Self::path_for(primary);
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }
}
