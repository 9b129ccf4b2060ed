//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Trained models are cached under `$CARGO_TARGET_TMPDIR/acceptance-models`
//! (override with `UNIBEAM_ACCEPTANCE_CACHE`), keyed by the training
//! configuration fingerprint. `UNIBEAM_RETRAIN=1` ignores the cache.
//! FAIL lines are reported but only change the exit status when
//! `UNIBEAM_ACCEPTANCE_STRICT=1`.
//!
//! Arguments: `--train-only` trains the cached models and exits; any other
//! non-flag argument selects criteria whose name contains it.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use unibeam::autodiff::{compare_gradients, finite_diff_grad};
use unibeam::baselines::{mrt_poweropt, wmmse, zf_directions, zf_waterfilling, Baseline, MrtConfig, WmmseConfig};
use unibeam::channel::{
    db_to_linear, draw_channel, stream_rng, ChannelConfig, ChannelSample, PowerGrid, SampleStream, NOISE_POWER,
};
use unibeam::experiment::{ablate, bench, evaluate, BenchRow, EvalTable, Method, TestSet};
use unibeam::linalg::{norm2, CVec};
use unibeam::metrics::{omega, omega_symmetry_gap, sinr, sum_rate};
use unibeam::model::{init_params, BatchInput, HeadKind, Mode, NetworkParams, TrunkSpec};
use unibeam::trainer::{loss_gradient, loss_value, relu_margin, train, train_with, TrainConfig};

const M: usize = 4;
const K: usize = 4;
const TRAIN_SEED: u64 = 1;
const TEST_SEED: u64 = 2024;
const TEST_PER_LEVEL: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- model cache

fn cache_dir() -> PathBuf {
    std::env::var_os("UNIBEAM_ACCEPTANCE_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-models"))
}

fn universal_config(head: HeadKind) -> TrainConfig {
    let mut cfg = TrainConfig::new(M, K, head);
    cfg.seed = TRAIN_SEED;
    cfg
}

fn fixed_config(db: f64) -> TrainConfig {
    let mut cfg = universal_config(HeadKind::Fl);
    cfg.fixed_p_db = Some(db);
    cfg
}

fn trained(name: &str, cfg: &TrainConfig) -> NetworkParams {
    let dir = cache_dir();
    std::fs::create_dir_all(&dir).expect("cache directory");
    let path = dir.join(format!("{name}-{}.params", cfg.fingerprint()));
    let retrain = std::env::var("UNIBEAM_RETRAIN").is_ok_and(|v| v == "1");
    if !retrain {
        if let Ok(p) = NetworkParams::load(&path) {
            return p;
        }
    }
    eprintln!("training {name} ({} steps) -> {}", cfg.steps, path.display());
    let start = Instant::now();
    let out = train_with(cfg, |row| {
        eprintln!(
            "  {name} step {:>6} loss {:.4} val {:.3?} [{:.0?}]",
            row.step,
            row.loss,
            row.val_sum_rate,
            start.elapsed()
        );
    })
    .expect("training succeeds");
    std::fs::write(path.with_extension("log.csv"), out.log.to_csv_string()).expect("write log");
    out.params.save(&path).expect("write params");
    out.params
}

struct Models {
    sfl: NetworkParams,
    fl: NetworkParams,
    dbl: NetworkParams,
    fixed: Vec<(f64, NetworkParams)>,
}

fn grid() -> PowerGrid {
    PowerGrid::default()
}

fn models() -> Models {
    Models {
        sfl: trained("sfl", &universal_config(HeadKind::Sfl)),
        fl: trained("fl", &universal_config(HeadKind::Fl)),
        dbl: trained("dbl", &universal_config(HeadKind::Dbl)),
        fixed: grid()
            .levels_db()
            .iter()
            .map(|&db| (db, trained(&format!("fl-fixed{db}"), &fixed_config(db))))
            .collect(),
    }
}

fn model(label: &str, params: &NetworkParams) -> Method {
    Method::Model {
        label: label.to_string(),
        params: params.clone(),
    }
}

fn cell(table: &EvalTable, col: &str, db: f64) -> f64 {
    let l = table.levels_db.iter().position(|&x| x == db).expect("level in grid");
    table.column(col).expect("column")[l].expect("value")
}

// ---------------------------------------------------------------- criteria

fn c1_power_feasibility() -> Outcome {
    let cfg = ChannelConfig::new(M, K);
    let mut rng = stream_rng(101, 0);
    let mut worst: f64 = 0.0;
    for head in HeadKind::ALL {
        let params = init_params(M, K, head, &TrunkSpec::default(), true, 101 + head as u64);
        let samples: Vec<ChannelSample> = (0..10_000)
            .map(|_| ChannelSample::new(draw_channel(&mut rng, &cfg), rng.random_range(0.0..30.0)))
            .collect();
        for inf in params.infer(&samples).expect("inference") {
            worst = worst.max(inf.beams.power_error());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max |sum ||v||^2 - P| / P = {worst:.2e} over 3 x 10^4 samples (tol 1e-9)"),
    )
}

/// Denominator floor for relative errors: central differences at step 1e-6
/// carry round-off near 1e-9, and pre-BN biases have exactly zero gradient.
const GRAD_FLOOR: f64 = 1e-4;

fn c2_gradients() -> Outcome {
    let mut cmp_all = (0usize, 0usize, 0.0f64);
    let mut skipped = 0;
    for head in HeadKind::ALL {
        for n in [2, 3] {
            let mut seed = 0u64;
            let mut done = 0;
            while done < 50 {
                seed += 1;
                let mut params = init_params(
                    n,
                    n,
                    head,
                    &TrunkSpec { widths: vec![16, 16] },
                    true,
                    1000 * n as u64 + seed,
                );
                let mut stream = SampleStream::new(seed, 7, ChannelConfig::new(n, n), grid());
                let batch = BatchInput::new(&stream.take_vec(4), true).unwrap();
                if relu_margin(&params, &batch).unwrap() < 1e-4 {
                    skipped += 1;
                    continue;
                }
                let (_, analytic) = loss_gradient(&params, &batch, Mode::Train).unwrap();
                let numeric = finite_diff_grad(
                    |p: &NetworkParams| loss_value(p, &batch, Mode::Train).unwrap(),
                    &mut params,
                    1e-6,
                )
                .unwrap();
                let c = compare_gradients(&analytic, &numeric, 1e-4, GRAD_FLOOR);
                cmp_all.0 += c.coordinates;
                cmp_all.1 += c.within_tol;
                cmp_all.2 = cmp_all.2.max(c.max_rel_err);
                done += 1;
            }
        }
    }
    let frac = cmp_all.1 as f64 / cmp_all.0 as f64;
    outcome(
        frac >= 0.99 && cmp_all.2 <= 1e-3,
        format!(
            "{:.4}% of {} coordinates within 1e-4, max rel err {:.2e} (floor {GRAD_FLOOR:e}; 300 instances, {skipped} resampled near ReLU kinks)",
            100.0 * frac,
            cmp_all.0,
            cmp_all.2
        ),
    )
}

fn c3_wmmse() -> Outcome {
    let mut rng = stream_rng(303, 0);
    let mut worst_single: f64 = 0.0;
    for _ in 0..50 {
        let h = draw_channel(&mut rng, &ChannelConfig::new(M, 1));
        let p = db_to_linear(rng.random_range(0.0..30.0));
        let out = wmmse(&h, p, &WmmseConfig::default()).unwrap();
        worst_single = worst_single.max((out.sum_rate() - (1.0 + p * norm2(&h[0])).log2()).abs());
    }
    let mut worst_drop: f64 = 0.0;
    let mut stream = SampleStream::new(303, 1, ChannelConfig::new(M, K), grid());
    for s in stream.take_vec(1000) {
        let out = wmmse(&s.h, s.power, &WmmseConfig::default()).unwrap();
        for w in out.trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    outcome(
        worst_single <= 1e-6 && worst_drop <= 1e-9,
        format!("K=1 max rate error {worst_single:.2e} (tol 1e-6); largest trace drop {worst_drop:.2e} over 10^3 instances (tol 1e-9)"),
    )
}

fn c4_baseline_oracles() -> Outcome {
    let mut rng = stream_rng(404, 0);
    let (mut zf_worst, mut mrt_worst): (f64, f64) = (0.0, 0.0);
    for m in [2, 4] {
        for &db in grid().levels_db() {
            let p = db_to_linear(db);
            for _ in 0..30 {
                let h = draw_channel(&mut rng, &ChannelConfig::new(m, 2));
                let zf = sum_rate(&h, &zf_waterfilling(&h, p).unwrap().v).unwrap();
                let (dz, _) = zf_directions(&h).unwrap();
                let mrt = sum_rate(&h, &mrt_poweropt(&h, p, &MrtConfig::default()).unwrap().v).unwrap();
                let dm: Vec<CVec> = h.iter().map(|x| x.scale(1.0 / x.norm())).collect();
                let (mut zf_grid, mut mrt_grid): (f64, f64) = (0.0, 0.0);
                for a in 0..=100 {
                    for b in 0..=(100 - a) {
                        let (pa, pb) = (p * a as f64 / 100.0, p * b as f64 / 100.0);
                        zf_grid = zf_grid.max(sum_rate(&h, &[dz[0].scale(pa.sqrt()), dz[1].scale(pb.sqrt())]).unwrap());
                        mrt_grid =
                            mrt_grid.max(sum_rate(&h, &[dm[0].scale(pa.sqrt()), dm[1].scale(pb.sqrt())]).unwrap());
                    }
                }
                zf_worst = zf_worst.max((zf - zf_grid).abs());
                mrt_worst = mrt_worst.max((mrt - mrt_grid).abs());
            }
        }
    }
    outcome(
        zf_worst <= 1e-3 && mrt_worst <= 1e-2,
        format!("max |ZF-WF - grid| = {zf_worst:.2e} (tol 1e-3), max |MRT - grid| = {mrt_worst:.2e} (tol 1e-2), K=2, M in {{2,4}}"),
    )
}

fn ratio_line(table: &EvalTable, col: &str, reference: &str) -> String {
    table
        .levels_db
        .iter()
        .map(|&db| format!("{db}dB {:.3}", cell(table, col, db) / cell(table, reference, db)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn c5_sum_rate(table: &EvalTable) -> Outcome {
    let mut pass = true;
    for col in ["sfl", "fl"] {
        for (db, need) in [(0.0, 0.95), (10.0, 0.95), (20.0, 0.95), (30.0, 0.90)] {
            pass &= cell(table, col, db) >= need * cell(table, "wmmse", db);
        }
    }
    outcome(
        pass,
        format!(
            "ratio to WMMSE: SFL [{}]; FL [{}]; need >= 0.95 at 0/10/20 dB, >= 0.90 at 30 dB; absolute SFL/FL/WMMSE at 20 dB = {:.3}/{:.3}/{:.3}",
            ratio_line(table, "sfl", "wmmse"),
            ratio_line(table, "fl", "wmmse"),
            cell(table, "sfl", 20.0),
            cell(table, "fl", 20.0),
            cell(table, "wmmse", 20.0)
        ),
    )
}

fn c6_dbl_gap(table: &EvalTable) -> Outcome {
    let (dbl, sfl) = (cell(table, "dbl", 30.0), cell(table, "sfl", 30.0));
    outcome(
        dbl <= 0.85 * sfl,
        format!(
            "DBL {dbl:.3} vs SFL {sfl:.3} at 30 dB, ratio {:.3} (need <= 0.85)",
            dbl / sfl
        ),
    )
}

fn c7_universality(table: &EvalTable) -> Outcome {
    let mut worst: f64 = 0.0;
    for &db in &table.levels_db {
        worst = worst.max((cell(table, "sfl", db) / cell(table, "per_p", db) - 1.0).abs());
    }
    let (fixed0, uni) = (cell(table, "fl-fixed0", 30.0), cell(table, "sfl", 30.0));
    let loss = 1.0 - fixed0 / uni;
    outcome(
        worst <= 0.03 && loss >= 0.10,
        format!(
            "universal SFL / per-P FL [{}], max deviation {:.2}% (need <= 3%); 0 dB model at 30 dB loses {:.1}% (need >= 10%)",
            ratio_line(table, "sfl", "per_p"),
            100.0 * worst,
            100.0 * loss
        ),
    )
}

fn c8_timing(models: &Models) -> Outcome {
    let full = TestSet::generate(TEST_SEED, M, K, &grid(), TEST_PER_LEVEL).unwrap();
    let dnn = bench(&[model("sfl", &models.sfl)], &full, 20).unwrap();
    let upto20 = TestSet {
        levels_db: full.levels_db[..5].to_vec(),
        samples: full.samples[..5].to_vec(),
        ..full.clone()
    };
    let wm = bench(&[Method::Baseline(Baseline::Wmmse)], &upto20, 5).unwrap();
    let at = |rows: &[BenchRow], db: f64| rows.iter().find(|r| r.p_db == db).unwrap().median_of_means;
    let speedup = at(&wm, 20.0) / at(&dnn, 20.0);
    let times: Vec<f64> = dnn.iter().map(|r| r.median_of_means).collect();
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    let spread = hi / lo - 1.0;
    let wm_times: Vec<f64> = wm.iter().map(|r| r.median_of_means).collect();
    let increasing = wm_times.windows(2).all(|w| w[1] > w[0]);
    outcome(
        speedup >= 10.0 && spread <= 0.2 && increasing,
        format!(
            "SFL {:.3e} s vs WMMSE {:.3e} s at 20 dB (speedup {speedup:.1}x, need >= 10x); SFL spread across P {:.1}% (need <= 20%); WMMSE 0..20 dB [{}] strictly increasing: {increasing}",
            at(&dnn, 20.0),
            at(&wm, 20.0),
            100.0 * spread,
            wm_times.iter().map(|t| format!("{t:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c9_omega(models: &Models) -> Outcome {
    let test = TestSet::generate(TEST_SEED, M, K, &PowerGrid::single(30.0), TEST_PER_LEVEL).unwrap();
    let samples = &test.samples[0];
    let inferred = models.sfl.infer(samples).unwrap();
    let (mut gap_sum, mut worst_identity): (f64, f64) = (0.0, 0.0);
    for (s, inf) in samples.iter().zip(&inferred) {
        let d = inf.directions.as_ref().expect("SFL exposes directions");
        let p = &inf.duality.as_ref().expect("SFL exposes powers").p;
        let gamma = sinr(&s.h, &inf.beams.v).unwrap();
        let o = omega(&s.h, d, &gamma).unwrap();
        gap_sum += omega_symmetry_gap(&o);
        for r in o.mul_vec(p) {
            worst_identity = worst_identity.max((r + NOISE_POWER).abs());
        }
    }
    let mean_gap = gap_sum / samples.len() as f64;
    outcome(
        mean_gap <= 0.1 && worst_identity <= 1e-9,
        format!(
            "mean symmetry gap {mean_gap:.4} (need <= 0.1); max |Omega p + sigma^2| = {worst_identity:.2e} (tol 1e-9)"
        ),
    )
}

fn c10_determinism() -> Outcome {
    let mut cfg = TrainConfig::new(M, K, HeadKind::Sfl);
    cfg.seed = 77;
    cfg.steps = 200;
    cfg.batch_size = 64;
    cfg.eval_every = 50;
    cfg.val_per_level = 50;
    let a = train(&cfg).unwrap();
    let b = train(&cfg).unwrap();
    let logs_equal = a.log.to_csv_string() == b.log.to_csv_string();
    let params_equal = a.params.to_bytes() == b.params.to_bytes();
    let test = TestSet::generate(TEST_SEED, M, K, &grid(), 30).unwrap();
    let methods = |p: &NetworkParams| {
        vec![
            model("sfl", p),
            Method::Baseline(Baseline::Wmmse),
            Method::Baseline(Baseline::ZfWf),
            Method::Baseline(Baseline::Mrt),
        ]
    };
    let e1 = evaluate(&methods(&a.params), &test, 1).unwrap().to_csv_string();
    let e2 = evaluate(&methods(&b.params), &test, 1).unwrap().to_csv_string();
    let e3 = evaluate(&methods(&a.params), &test, 4).unwrap().to_csv_string();
    let pass = logs_equal && params_equal && e1 == e2 && e1 == e3;
    outcome(
        pass,
        format!(
            "training logs identical: {logs_equal}; parameter files identical: {params_equal}; eval CSVs identical (repeat, 1 vs 4 threads): {}",
            e1 == e2 && e1 == e3
        ),
    )
}

// ---------------------------------------------------------------- driver

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--train-only") {
        models();
        return ExitCode::SUCCESS;
    }
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let selected = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));

    let names = [
        "c1_power_feasibility",
        "c2_gradients",
        "c3_wmmse",
        "c4_baseline_oracles",
        "c5_sum_rate",
        "c6_dbl_gap",
        "c7_universality",
        "c8_timing",
        "c9_omega",
        "c10_determinism",
    ];
    let needs_models = ["c5", "c6", "c7", "c8", "c9"]
        .iter()
        .any(|c| names.iter().any(|n| n.starts_with(&format!("{c}_")) && selected(n)));
    let trained = needs_models.then(models);
    let table = trained
        .as_ref()
        .filter(|_| {
            ["c5_sum_rate", "c6_dbl_gap", "c7_universality"]
                .iter()
                .any(|n| selected(n))
        })
        .map(|ms| {
            let test = TestSet::generate(TEST_SEED, M, K, &grid(), TEST_PER_LEVEL).unwrap();
            let mut t = evaluate(
                &[
                    model("sfl", &ms.sfl),
                    model("fl", &ms.fl),
                    model("dbl", &ms.dbl),
                    Method::Baseline(Baseline::Wmmse),
                ],
                &test,
                1,
            )
            .unwrap();
            let fixed = ms
                .fixed
                .iter()
                .map(|(db, p)| (*db, model(&format!("fl-fixed{db}"), p)))
                .collect();
            let ab = ablate(model("sfl", &ms.sfl), fixed, &test, 1).unwrap();
            t.columns.extend(ab.columns.into_iter().skip(1));
            eprintln!("{}", t.to_csv_string());
            t
        });

    let mut failed = 0;
    for (i, name) in names.iter().enumerate() {
        if !selected(name) {
            continue;
        }
        let start = Instant::now();
        let result = match i {
            0 => c1_power_feasibility(),
            1 => c2_gradients(),
            2 => c3_wmmse(),
            3 => c4_baseline_oracles(),
            4 => c5_sum_rate(table.as_ref().unwrap()),
            5 => c6_dbl_gap(table.as_ref().unwrap()),
            6 => c7_universality(table.as_ref().unwrap()),
            7 => c8_timing(trained.as_ref().unwrap()),
            8 => c9_omega(trained.as_ref().unwrap()),
            _ => c10_determinism(),
        };
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.1?}]",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {failed} criteria failed");
    let strict = std::env::var("UNIBEAM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
