use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use unibeam::baselines::Baseline;
use unibeam::channel::{per_level_set, streams, ChannelConfig, Dataset, PowerGrid, SampleStream};
use unibeam::experiment::{ablate, bench, evaluate, write_bench_csv, Method, RunManifest, TestSet, OUT_DIR_ENV};
use unibeam::model::{HeadKind, NetworkParams, TrunkSpec};
use unibeam::trainer::{train_with, TrainConfig};

/// Universal deep-learning beamformers for the multi-user MISO downlink.
#[derive(Parser)]
#[command(name = "unibeam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write its parameters, log CSV and manifest.
    Train(TrainArgs),
    /// Average sum rate per power level for models and baselines.
    Eval(EvalArgs),
    /// Single-sample wall-clock time per method and power level.
    Bench(BenchArgs),
    /// Universal model against models trained at single power levels.
    Ablate(AblateArgs),
    /// Write a channel dataset file.
    GenData(GenDataArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum HeadArg {
    Dbl,
    Fl,
    Sfl,
}

impl From<HeadArg> for HeadKind {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Dbl => HeadKind::Dbl,
            HeadArg::Fl => HeadKind::Fl,
            HeadArg::Sfl => HeadKind::Sfl,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum BaselineArg {
    Wmmse,
    Zf,
    Mrt,
}

impl From<BaselineArg> for Baseline {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Wmmse => Baseline::Wmmse,
            BaselineArg::Zf => Baseline::ZfWf,
            BaselineArg::Mrt => Baseline::Mrt,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum)]
    head: HeadArg,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Training budgets in dB: "0,5,10" or "start:step:stop".
    #[arg(long, default_value = "0:5:30")]
    pgrid: String,
    #[arg(long, default_value_t = 20_000)]
    steps: usize,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train at a single budget (dB) without the power input feature.
    #[arg(long)]
    fixed_p: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "320,320,320,320,320")]
    hidden: String,
    /// Global gradient-norm clip; 0 disables clipping.
    #[arg(long, default_value_t = 10.0)]
    clip: f64,
    #[arg(long, default_value_t = 1000)]
    eval_every: usize,
    #[arg(long, default_value_t = 1000)]
    val_per_level: usize,
    /// Draw minibatches from a dataset file instead of fresh samples.
    #[arg(long)]
    train_set: Option<PathBuf>,
    /// Save parameters here at every log row.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Parameter file (default: $UNIBEAM_OUT_DIR/<head>.params).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Log CSV (default: <out>.log.csv).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct TestArgs {
    /// Antennas; taken from the first model when omitted.
    #[arg(long)]
    m: Option<usize>,
    /// Users; taken from the first model when omitted.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "0:5:30")]
    pgrid: String,
    /// Test samples per power level.
    #[arg(long, default_value_t = 1000)]
    per_level: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use this dataset file instead of generating a test set.
    #[arg(long)]
    test_set: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct MethodArgs {
    /// Model file, optionally labelled: `[label=]path`. Repeatable.
    #[arg(long = "model")]
    models: Vec<String>,
    /// Baseline solver. Repeatable.
    #[arg(long = "baseline", value_enum)]
    baselines: Vec<BaselineArg>,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    methods: MethodArgs,
    #[command(flatten)]
    test: TestArgs,
    /// Worker threads for baseline solves.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output CSV (default: $UNIBEAM_OUT_DIR/eval.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[command(flatten)]
    methods: MethodArgs,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value = "0:5:30")]
    pgrid: String,
    /// Timed samples per method and level.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Untimed calls per method and level.
    #[arg(long, default_value_t = 20)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (default: $UNIBEAM_OUT_DIR/bench.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct AblateArgs {
    /// Universal model, `[label=]path`.
    #[arg(long)]
    universal: String,
    /// Model trained at one budget, `dB=path`. Repeatable.
    #[arg(long = "fixed")]
    fixed: Vec<String>,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output CSV (default: $UNIBEAM_OUT_DIR/ablate.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct GenDataArgs {
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value = "0:5:30")]
    pgrid: String,
    /// Samples with budgets drawn uniformly from the grid.
    #[arg(long, conflicts_with = "per_level", required_unless_present = "per_level")]
    n: Option<usize>,
    /// Channels per level, each repeated at every budget.
    #[arg(long)]
    per_level: Option<usize>,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: $UNIBEAM_OUT_DIR/data.txt).
    #[arg(long)]
    out: Option<PathBuf>,
}

type AnyResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn output_path(out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    if let Some(p) = out {
        return p.clone();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(default_name),
        None => Cli::command()
            .error(
                ErrorKind::MissingRequiredArgument,
                format!("--out is required when {OUT_DIR_ENV} is not set"),
            )
            .exit(),
    }
}

fn prepare(path: &Path) -> AnyResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn load_model(spec: &str) -> AnyResult<Method> {
    let (label, path) = match spec.split_once('=') {
        Some((l, p)) if !l.is_empty() => (l.to_string(), PathBuf::from(p)),
        _ => {
            let p = PathBuf::from(spec);
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.into());
            (stem, p)
        }
    };
    let params = NetworkParams::load(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Method::Model { label, params })
}

fn methods(args: &MethodArgs) -> AnyResult<Vec<Method>> {
    let mut out = args
        .models
        .iter()
        .map(|s| load_model(s))
        .collect::<AnyResult<Vec<_>>>()?;
    out.extend(args.baselines.iter().map(|&b| Method::Baseline(b.into())));
    if out.is_empty() {
        return Err("give at least one --model or --baseline".into());
    }
    Ok(out)
}

fn dims_from(methods: &[Method]) -> Option<(usize, usize)> {
    methods.iter().find_map(|m| match m {
        Method::Model { params, .. } => Some((params.m, params.k)),
        Method::Baseline(_) => None,
    })
}

fn test_set(args: &TestArgs, methods: &[Method]) -> AnyResult<TestSet> {
    if let Some(path) = &args.test_set {
        let ds = Dataset::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(TestSet::from_dataset(&ds));
    }
    let (dm, dk) = dims_from(methods).unwrap_or((4, 4));
    let grid = PowerGrid::parse(&args.pgrid)?;
    Ok(TestSet::generate(
        args.seed,
        args.m.unwrap_or(dm),
        args.k.unwrap_or(dk),
        &grid,
        args.per_level,
    )?)
}

fn parse_widths(spec: &str) -> AnyResult<TrunkSpec> {
    let widths = spec
        .split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad --hidden width {w:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrunkSpec { widths })
}

fn cmd_train(a: &TrainArgs) -> AnyResult<()> {
    let head: HeadKind = a.head.into();
    let default_name = match a.fixed_p {
        Some(db) => format!("{}-fixed{db}.params", head.to_string().to_lowercase()),
        None => format!("{}.params", head.to_string().to_lowercase()),
    };
    let out = output_path(&a.out, &default_name);
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&out, ".log.csv"));
    let mut cfg = TrainConfig::new(a.m, a.k, head);
    cfg.grid = PowerGrid::parse(&a.pgrid)?;
    cfg.fixed_p_db = a.fixed_p;
    cfg.trunk = parse_widths(&a.hidden)?;
    cfg.steps = a.steps;
    cfg.batch_size = a.batch;
    cfg.adam.learning_rate = a.lr;
    cfg.grad_clip = (a.clip > 0.0).then_some(a.clip);
    cfg.seed = a.seed;
    cfg.eval_every = a.eval_every;
    cfg.val_per_level = a.val_per_level;
    cfg.checkpoint = a.checkpoint.clone();
    if let Some(path) = &a.train_set {
        let ds = Dataset::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.dataset = Some(ds.samples);
    }
    cfg.validate()?;
    prepare(&out)?;
    prepare(&log_path)?;

    let mut config = cfg.describe();
    config["train_set"] = json!(a.train_set);
    let manifest = RunManifest::start("train", config, a.seed);
    let outcome = train_with(&cfg, |row| {
        let val: Vec<String> = row.val_sum_rate.iter().map(|v| format!("{v:.3}")).collect();
        eprintln!("step {:>6}  loss {:>9.4}  val [{}]", row.step, row.loss, val.join(" "));
    })?;
    outcome.params.save(&out)?;
    outcome.log.write_csv(BufWriter::new(File::create(&log_path)?))?;
    let manifest_path = manifest.finish(&out, &[&out, &log_path])?;
    eprintln!(
        "wrote {}, {}, {}",
        out.display(),
        log_path.display(),
        manifest_path.display()
    );
    Ok(())
}

fn write_table(command: &str, config: serde_json::Value, seed: u64, out: &Path, csv: String) -> AnyResult<()> {
    prepare(out)?;
    let manifest = RunManifest::start(command, config, seed);
    std::fs::write(out, &csv)?;
    manifest.finish(out, &[out])?;
    print!("{csv}");
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> AnyResult<()> {
    let out = output_path(&a.out, "eval.csv");
    let ms = methods(&a.methods)?;
    let test = test_set(&a.test, &ms)?;
    let table = evaluate(&ms, &test, a.threads)?;
    write_table(
        "eval",
        serde_json::to_value(a)?,
        a.test.seed,
        &out,
        table.to_csv_string(),
    )
}

fn cmd_bench(a: &BenchArgs) -> AnyResult<()> {
    let out = output_path(&a.out, "bench.csv");
    let ms = methods(&a.methods)?;
    let (m, k) = dims_from(&ms).unwrap_or((a.m, a.k));
    let test = TestSet::generate(a.seed, m, k, &PowerGrid::parse(&a.pgrid)?, a.samples)?;
    let rows = bench(&ms, &test, a.warmup)?;
    let mut buf = Vec::new();
    write_bench_csv(&rows, &mut buf)?;
    write_table("bench", serde_json::to_value(a)?, a.seed, &out, String::from_utf8(buf)?)
}

fn cmd_ablate(a: &AblateArgs) -> AnyResult<()> {
    let out = output_path(&a.out, "ablate.csv");
    let universal = load_model(&a.universal)?;
    let fixed = a
        .fixed
        .iter()
        .map(|spec| {
            let (db, path) = spec
                .split_once('=')
                .ok_or_else(|| format!("--fixed expects dB=path, got {spec:?}"))?;
            let db: f64 = db
                .trim()
                .parse()
                .map_err(|_| format!("bad budget in --fixed {spec:?}"))?;
            let model = load_model(&format!("fixed{db}={path}"))?;
            Ok((db, model))
        })
        .collect::<AnyResult<Vec<_>>>()?;
    let test = test_set(&a.test, std::slice::from_ref(&universal))?;
    let table = ablate(universal, fixed, &test, a.threads)?;
    write_table(
        "ablate",
        serde_json::to_value(a)?,
        a.test.seed,
        &out,
        table.to_csv_string(),
    )
}

fn cmd_gen_data(a: &GenDataArgs) -> AnyResult<()> {
    let out = output_path(&a.out, "data.txt");
    let grid = PowerGrid::parse(&a.pgrid)?;
    let cfg = ChannelConfig::new(a.m, a.k);
    cfg.validate()?;
    let stream = match a.split {
        SplitArg::Train => streams::TRAIN,
        SplitArg::Validation => streams::VALIDATION,
        SplitArg::Test => streams::TEST,
    };
    let samples = match (a.n, a.per_level) {
        (Some(n), _) => SampleStream::new(a.seed, stream, cfg, grid.clone()).take_vec(n),
        (None, Some(n)) => per_level_set(a.seed, stream, &cfg, &grid, n),
        (None, None) => unreachable!("clap enforces --n or --per-level"),
    };
    prepare(&out)?;
    let manifest = RunManifest::start("gen-data", serde_json::to_value(a)?, a.seed);
    Dataset::new(grid, samples)?.save(&out)?;
    manifest.finish(&out, &[&out])?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::GenData(a) => cmd_gen_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
