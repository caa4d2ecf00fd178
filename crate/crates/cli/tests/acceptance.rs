//! Acceptance suite. Criteria 1-7 always run; 8-12 need the public INRS
//! bitstream CSV, supplied through the `INRS_CSV` environment variable.
//!
//! Prints one line per criterion and exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use avqual::data::{load_dataset_csv, QualityDataset, Sample, SchemaOptions};
use avqual::gp::{evolve, GpParams};
use avqual::harness::{read_sweep_csv, SweepResult};
use avqual::metrics::{fisher_z_compare, outlier_ratio, pearson, rmse, rmse_epsilon, spearman, Epsilon};
use avqual::mlp::{init_uniform, MlpModel, MlpWeights};
use avqual::trees::{fit_cart_on, Node, TreeParams, TIE_TOLERANCE};
use rand::Rng;

const METRIC_INSTANCES: usize = 1000;
const METRIC_TOL: f64 = 1e-9;
const GRAD_PAIRS: u64 = 50;
const GRAD_TOL: f64 = 1e-6;
const CART_MAX_ROWS: usize = 12;
const CART_MAX_FEATURES: usize = 3;
const FISHER_Z: f64 = 1.22;
const FISHER_Z_TOL: f64 = 0.02;
const SYNTH_MIN_PEARSON: f64 = 0.85;
const GP_RMSE: f64 = 0.05;
const GP_MIN_HITS: usize = 8;
const RF_MIN_PEARSON: f64 = 0.90;
const RF_MAX_RMSE: f64 = 0.40;
const BG_MIN_PEARSON: f64 = 0.90;
const MLP_MIN_PEARSON: f64 = 0.85;
const PLATEAU_BAND: f64 = 0.03;
const MLP_MIN_DEGRADATION: f64 = 0.03;
const SEED: &str = "7";

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    id: u32,
    name: &'static str,
    status: Status,
    detail: String,
}

fn judge(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, status: if pass { Status::Pass } else { Status::Fail }, detail }
}

fn avqual(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_avqual"))
        .args(args)
        .env_remove("QOE_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("avqual {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

// ---------------------------------------------------------------- 1

fn oracle_rmse(p: &[f64], a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - a[i]) * (p[i] - a[i]);
    }
    (s / p.len() as f64).sqrt()
}

fn oracle_rmse_star(p: &[f64], a: &[f64], ci: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let e = ((p[i] - a[i]).abs() - ci[i]).max(0.0);
        s += e * e;
    }
    (s / p.len() as f64).sqrt()
}

/// `None` when either series is constant.
fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    let constant = |v: &[f64]| v.iter().all(|t| *t == v[0]);
    if constant(x) || constant(y) {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx.sqrt() * vy.sqrt()))
}

fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let ties = x.iter().filter(|w| *w == v).count() as f64;
            below + (ties + 1.0) / 2.0
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut rng = avqual::seed::rng(101);
    let mut worst: f64 = 0.0;
    let mut star_violations = 0usize;
    let mut undefined_mismatch = 0usize;
    for inst in 0..METRIC_INSTANCES {
        let n = rng.random_range(3..60);
        // Every fourth instance is integer-valued to exercise ties.
        let draw = |rng: &mut avqual::seed::Rng| -> f64 {
            if inst % 4 == 0 { rng.random_range(1..=5) as f64 } else { rng.random_range(1.0..5.0) }
        };
        let p: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let a: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let ci: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.6)).collect();
        let eps = rng.random_range(0.0..1.0);

        let r = rmse(&p, &a).unwrap();
        worst = worst.max((r - oracle_rmse(&p, &a)).abs());
        let rs = rmse_epsilon(&p, &a, Epsilon::PerSample(&ci)).unwrap();
        worst = worst.max((rs - oracle_rmse_star(&p, &a, &ci)).abs());
        let rg = rmse_epsilon(&p, &a, Epsilon::Global(eps)).unwrap();
        worst = worst.max((rg - oracle_rmse_star(&p, &a, &vec![eps; n])).abs());
        if rs > r || rg > r {
            star_violations += 1;
        }
        let out = (0..n).filter(|&i| (p[i] - a[i]).abs() > ci[i]).count() as f64 / n as f64;
        worst = worst.max((outlier_ratio(&p, &a, &ci).unwrap() - out).abs());

        match (pearson(&p, &a).ok(), oracle_pearson(&p, &a)) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
            (None, None) => {}
            _ => undefined_mismatch += 1,
        }
        match (spearman(&p, &a).ok(), oracle_pearson(&oracle_ranks(&p), &oracle_ranks(&a))) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
            (None, None) => {}
            _ => undefined_mismatch += 1,
        }
    }
    judge(
        1,
        "metric oracle suite",
        worst <= METRIC_TOL && star_violations == 0 && undefined_mismatch == 0,
        format!(
            "max |impl - oracle| = {worst:.2e} over {METRIC_INSTANCES} instances (tol {METRIC_TOL:e}); \
             rmse* > rmse in {star_violations}; undefined-correlation disagreements {undefined_mismatch}"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mut rng = avqual::seed::rng(202);
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for pair in 0..GRAD_PAIRS {
        let f = rng.random_range(1..8);
        let hid = rng.random_range(1..8);
        let len = hid * f + 2 * hid + 1;
        let theta = init_uniform(len, 1.0, 1000 + pair).unwrap();
        let model = MlpModel::from_weights(MlpWeights::from_flat(f, hid, &theta));
        let b = rng.random_range(1..7);
        let xs: Vec<Vec<f64>> = (0..b).map(|_| (0..f).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ts: Vec<f64> = (0..b).map(|_| rng.random_range(1.0..5.0)).collect();
        let analytic = model.gradient(&xs, &ts).unwrap().to_flat();
        let loss = |t: &[f64]| MlpModel::from_weights(MlpWeights::from_flat(f, hid, t)).batch_loss(&xs, &ts).unwrap();
        let (mut num2, mut ana2, mut diff2) = (0.0, 0.0, 0.0);
        for i in 0..len {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[i] += h;
            down[i] -= h;
            let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
            num2 += numeric * numeric;
            ana2 += analytic[i] * analytic[i];
            diff2 += (numeric - analytic[i]).powi(2);
        }
        let denom = num2.sqrt() + ana2.sqrt();
        if denom > 0.0 {
            worst = worst.max(diff2.sqrt() / denom);
        }
    }
    judge(
        2,
        "MLP gradient vs central differences",
        worst <= GRAD_TOL,
        format!("max relative error {worst:.2e} over {GRAD_PAIRS} model/batch pairs (tol {GRAD_TOL:e})"),
    )
}

// ---------------------------------------------------------------- 3

fn brute_force_root(x: &[Vec<f64>], y: &[f64]) -> Option<(usize, f64)> {
    if y.iter().all(|v| *v == y[0]) {
        return None;
    }
    let sse = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>()
    };
    let total = sse(y);
    let mut best: Option<(usize, f64, f64)> = None;
    for j in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[j]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let l: Vec<f64> = x.iter().zip(y).filter(|(r, _)| r[j] <= t).map(|(_, v)| *v).collect();
            let r: Vec<f64> = x.iter().zip(y).filter(|(r, _)| r[j] > t).map(|(_, v)| *v).collect();
            let gain = total - sse(&l) - sse(&r);
            if best.is_none_or(|(_, _, g)| gain > g + TIE_TOLERANCE * (1.0 + g.abs())) {
                best = Some((j, t, gain));
            }
        }
    }
    best.map(|(j, t, _)| (j, t))
}

fn criterion_3() -> Outcome {
    let mut rng = avqual::seed::rng(303);
    let (mut checked, mut mismatches) = (0usize, Vec::new());
    for f in 1..=CART_MAX_FEATURES {
        let patterns = 1usize << f;
        for n in 1..=CART_MAX_ROWS {
            // Every multiset of n rows over the 2^f binary patterns.
            let mut counts = vec![0usize; patterns];
            counts[0] = n;
            loop {
                let x: Vec<Vec<f64>> = counts
                    .iter()
                    .enumerate()
                    .flat_map(|(p, &c)| std::iter::repeat_n((0..f).map(|j| ((p >> j) & 1) as f64).collect::<Vec<f64>>(), c))
                    .collect();
                for _ in 0..2 {
                    let y: Vec<f64> = (0..n).map(|_| rng.random_range(1..=5) as f64).collect();
                    let cols: Vec<Vec<f64>> = (0..f).map(|j| x.iter().map(|r| r[j]).collect()).collect();
                    let feats: Vec<usize> = (0..f).collect();
                    let tree = fit_cart_on(&cols, &y, (0..n).collect(), &feats, &TreeParams::default()).unwrap();
                    let got = match tree.root() {
                        Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
                        Node::Leaf { .. } => None,
                    };
                    if got != brute_force_root(&x, &y) && mismatches.len() < 3 {
                        mismatches.push(format!("x={x:?} y={y:?}"));
                    }
                    checked += 1;
                }
                let Some(i) = (0..patterns - 1).rev().find(|&i| counts[i] > 0) else { break };
                counts[i] -= 1;
                let tail = counts[i + 1..].iter().sum::<usize>() + 1;
                counts[i + 1..].iter_mut().for_each(|c| *c = 0);
                counts[i + 1] = tail;
            }
        }
    }
    judge(
        3,
        "CART root split vs exhaustive enumeration",
        mismatches.is_empty(),
        format!("{checked} datasets (<= {CART_MAX_ROWS} rows x <= {CART_MAX_FEATURES} binary features); mismatches: {mismatches:?}"),
    )
}

// ---------------------------------------------------------------- 4, 6

struct SynthFixture {
    dir: PathBuf,
    input: PathBuf,
    ranking: PathBuf,
}

fn synth_fixture(root: &Path) -> Result<SynthFixture, String> {
    let input = root.join("synthetic.csv");
    let ranking = root.join("ranking.csv");
    avqual(&["synth", "--grid", "full", "--seed", SEED, "--out", path(&input)])?;
    avqual(&["rank", "--input", path(&input), "--seed", SEED, "--out", path(&ranking)])?;
    Ok(SynthFixture { dir: root.to_path_buf(), input, ranking })
}

fn sweep_files(dir: &Path, algo: &str) -> Vec<(String, Vec<u8>)> {
    [format!("sweep_{algo}.csv"), "comparison.csv".into(), "summary.json".into()]
        .into_iter()
        .map(|f| {
            let bytes = std::fs::read(dir.join(&f)).unwrap_or_default();
            (f, bytes)
        })
        .collect()
}

fn criterion_4(fx: &SynthFixture) -> Outcome {
    // Full default hyperparameters for rf, bg and mlp. GP at its defaults
    // (5000 x 200, 10 x 4-fold) takes hours, so it runs reduced.
    let algos: [(&str, &[&str]); 4] = [
        ("rf", &[]),
        ("bg", &[]),
        ("mlp", &[]),
        ("gp", &["--population", "300", "--generations", "15", "--repeats", "2"]),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (algo, extra) in algos {
        let mut runs = Vec::new();
        for (tag, workers) in [("a", "8"), ("b", "8"), ("c", "1")] {
            let out = fx.dir.join(format!("det_{algo}_{tag}"));
            let mut args = vec![
                "sweep", "--algo", algo, "--kmax", "5", "--seed", SEED, "--workers", workers,
                "--input", path(&fx.input), "--ranking", path(&fx.ranking), "--out-dir", path(&out),
            ];
            args.extend_from_slice(extra);
            if let Err(e) = avqual(&args) {
                return judge(4, "determinism", false, e);
            }
            runs.push(sweep_files(&out, algo));
        }
        let same = runs[0] == runs[1] && runs[1] == runs[2] && runs[0].iter().all(|(_, b)| !b.is_empty());
        pass &= same;
        notes.push(format!("{algo}: {}", if same { "identical" } else { "DIFFER" }));
    }
    judge(4, "determinism (twice, and --workers 1 vs 8)", pass, notes.join(", "))
}

fn best_pearson(s: &SweepResult, ks: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
    s.rows
        .iter()
        .filter(|r| ks(r.k))
        .filter_map(|r| r.summary.pearson.mean.map(|p| (r.k, p)))
        .fold(None, |b, c| match b {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
}

fn load_sweep(dir: &Path, algo: &str) -> Result<SweepResult, String> {
    let f = std::fs::File::open(dir.join(format!("sweep_{algo}.csv"))).map_err(|e| e.to_string())?;
    read_sweep_csv(f, algo, false).map_err(|e| e.to_string())
}

/// Identical across every lossless condition, yet not constant overall:
/// the column moves only through packet loss.
fn loss_driven(ds: &QualityDataset, col: usize) -> bool {
    let plr = ds.column_index("VideoPacketLossRate").expect("grid column");
    let lossless: Vec<f64> = ds.samples().iter().filter(|s| s.features[plr] == 0.0).map(|s| s.features[col]).collect();
    let all = ds.column(col);
    !lossless.is_empty() && lossless.iter().all(|v| *v == lossless[0]) && all.iter().any(|v| *v != all[0])
}

fn criterion_6(fx: &SynthFixture) -> Outcome {
    let name = "synthetic end-to-end (rank + RF sweep)";
    let start = Instant::now();
    let ranking = match std::fs::read_to_string(&fx.ranking) {
        Ok(t) => t,
        Err(e) => return judge(6, name, false, e.to_string()),
    };
    let top = ranking.lines().nth(1).and_then(|l| l.split(',').nth(1)).unwrap_or("").to_string();
    let ds = load_dataset_csv(&fx.input, &SchemaOptions::default()).unwrap();
    let top_ok = ds.column_index(&top).is_some_and(|c| loss_driven(&ds, c));
    let out = fx.dir.join("e2e_rf");
    let args = [
        "sweep", "--algo", "rf", "--kmax", "25", "--repeats", "3", "--seed", SEED,
        "--input", path(&fx.input), "--ranking", path(&fx.ranking), "--out-dir", path(&out),
    ];
    if let Err(e) = avqual(&args) {
        return judge(6, name, false, e);
    }
    let sweep = load_sweep(&out, "rf").unwrap();
    let best = best_pearson(&sweep, |_| true);
    let pearson_ok = best.is_some_and(|b| b.1 >= SYNTH_MIN_PEARSON);
    judge(
        6,
        name,
        top_ok && pearson_ok,
        format!(
            "top-ranked feature {top} (loss-driven: {top_ok}); best pooled Pearson {:?} (min {SYNTH_MIN_PEARSON}); sweep {:.0?}",
            best,
            start.elapsed()
        ),
    )
}

// ---------------------------------------------------------------- 5, 7

fn criterion_5() -> Outcome {
    let s = fisher_z_compare(0.9332, 0.9130, 160, 160).unwrap();
    let oracle = (0.9332f64.atanh() - 0.9130f64.atanh()) / (2.0 / 157.0f64).sqrt();
    judge(
        5,
        "Fisher-z on the best BG vs best DL correlations",
        (s.z_stat.abs() - FISHER_Z).abs() <= FISHER_Z_TOL && (s.z_stat - oracle).abs() < 1e-12 && !s.significant_at_05,
        format!("z = {:.4} (target {FISHER_Z} +/- {FISHER_Z_TOL}), p = {:.4}, significant: {}", s.z_stat, s.p_value, s.significant_at_05),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = avqual::seed::rng(707);
    let samples = (0..100)
        .map(|_| {
            let (a, b) = (rng.random_range(0.5..2.5), rng.random_range(0.5..2.5));
            Sample { features: vec![a, b], mos: a + b, ci95: None }
        })
        .collect();
    let ds = QualityDataset::new(vec!["x0".into(), "x1".into()], samples).unwrap();
    let results: Vec<f64> = (0..10u64)
        .map(|seed| {
            let p = GpParams { population_size: 500, generations: 30, seed, ..GpParams::default() };
            evolve(&ds, &p).unwrap().best.raw
        })
        .collect();
    let hits = results.iter().filter(|r| **r < GP_RMSE).count();
    judge(
        7,
        "GP recovers y = x0 + x1",
        hits >= GP_MIN_HITS,
        format!("{hits}/10 seeds reach raw RMSE < {GP_RMSE} (need {GP_MIN_HITS}); best RMSEs {results:?}"),
    )
}

// ---------------------------------------------------------------- 8-12

struct InrsRuns {
    rf: SweepResult,
    bg: SweepResult,
    mlp: SweepResult,
    rf_summary: serde_json::Value,
    has_ci: bool,
}

fn inrs_runs(csv: &Path, root: &Path) -> Result<InrsRuns, String> {
    let ds = load_dataset_csv(csv, &SchemaOptions::default()).map_err(|e| e.to_string())?;
    let ranking = root.join("inrs_ranking.csv");
    avqual(&["rank", "--input", path(csv), "--seed", SEED, "--out", path(&ranking)])?;
    let sweep = |algo: &str| -> Result<SweepResult, String> {
        let out = root.join(format!("inrs_{algo}"));
        avqual(&[
            "sweep", "--algo", algo, "--kmax", "25", "--seed", SEED,
            "--input", path(csv), "--ranking", path(&ranking), "--out-dir", path(&out),
        ])?;
        load_sweep(&out, algo)
    };
    let (rf, bg, mlp) = (sweep("rf")?, sweep("bg")?, sweep("mlp")?);
    let summary = std::fs::read_to_string(root.join("inrs_rf/summary.json")).map_err(|e| e.to_string())?;
    Ok(InrsRuns {
        rf,
        bg,
        mlp,
        rf_summary: serde_json::from_str(&summary).map_err(|e| e.to_string())?,
        has_ci: ds.has_ci(),
    })
}

fn pearson_at(s: &SweepResult, k: usize) -> Option<f64> {
    s.rows.iter().find(|r| r.k == k).and_then(|r| r.summary.pearson.mean)
}

/// Lowest Pearson over k = 15..=25 relative to the best there.
fn plateau_drop(s: &SweepResult) -> Option<f64> {
    let band: Vec<f64> = (15..=25).map(|k| pearson_at(s, k)).collect::<Option<_>>()?;
    let top = band.iter().cloned().fold(f64::MIN, f64::max);
    Some(top - band.iter().cloned().fold(f64::MAX, f64::min))
}

fn inrs_criteria(runs: &InrsRuns) -> Vec<Outcome> {
    let rf_best = best_pearson(&runs.rf, |_| true);
    let rf_rmse = runs.rf.rows.iter().filter_map(|r| r.summary.rmse.mean.map(|v| (r.k, v))).fold(None, |b: Option<(usize, f64)>, c| match b {
        Some(b) if b.1 <= c.1 => Some(b),
        _ => Some(c),
    });
    let bg_best = best_pearson(&runs.bg, |_| true);
    let mlp_best = best_pearson(&runs.mlp, |k| k <= 10);
    let (rf_drop, bg_drop) = (plateau_drop(&runs.rf), plateau_drop(&runs.bg));
    let mlp_deg = mlp_best.zip(pearson_at(&runs.mlp, 25)).map(|(b, last)| b.1 - last);
    let star = &runs.rf_summary["algorithms"]["rf"]["min_rmse_star"];
    let star_ok = if runs.has_ci { star["value"].as_f64().is_some_and(f64::is_finite) } else { star == "not_attempted" };
    vec![
        judge(
            8,
            "INRS RF sweep",
            rf_best.is_some_and(|b| b.1 >= RF_MIN_PEARSON) && rf_rmse.is_some_and(|r| r.1 <= RF_MAX_RMSE),
            format!("best Pearson {rf_best:?} (min {RF_MIN_PEARSON}), best RMSE {rf_rmse:?} (max {RF_MAX_RMSE})"),
        ),
        judge(9, "INRS BG sweep", bg_best.is_some_and(|b| b.1 >= BG_MIN_PEARSON), format!("best Pearson {bg_best:?} (min {BG_MIN_PEARSON})")),
        judge(10, "INRS MLP sweep (k <= 10)", mlp_best.is_some_and(|b| b.1 >= MLP_MIN_PEARSON), format!("best Pearson {mlp_best:?} (min {MLP_MIN_PEARSON})")),
        judge(
            11,
            "curve shape: tree plateau vs MLP degradation",
            rf_drop.is_some_and(|d| d <= PLATEAU_BAND) && bg_drop.is_some_and(|d| d <= PLATEAU_BAND) && mlp_deg.is_some_and(|d| d >= MLP_MIN_DEGRADATION),
            format!("RF spread k15-25 {rf_drop:?}, BG spread {bg_drop:?} (max {PLATEAU_BAND}); MLP peak - k25 {mlp_deg:?} (min {MLP_MIN_DEGRADATION})"),
        ),
        judge(
            12,
            "RMSE* reported only with CI data",
            star_ok,
            format!("CI column present: {}; summary min_rmse_star = {star}", runs.has_ci),
        ),
    ]
}

fn main() {
    // `cargo test -- --list` and similar harness queries: nothing to list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3()];
    match synth_fixture(tmp.path()) {
        Ok(fx) => {
            outcomes.push(criterion_4(&fx));
            outcomes.push(criterion_5());
            outcomes.push(criterion_6(&fx));
        }
        Err(e) => {
            outcomes.push(judge(4, "determinism", false, e.clone()));
            outcomes.push(criterion_5());
            outcomes.push(judge(6, "synthetic end-to-end", false, e));
        }
    }
    outcomes.push(criterion_7());
    let property_time = start.elapsed();

    match std::env::var_os("INRS_CSV").map(PathBuf::from) {
        Some(csv) => match inrs_runs(&csv, tmp.path()) {
            Ok(runs) => outcomes.extend(inrs_criteria(&runs)),
            Err(e) => {
                for (id, name) in [(8, "INRS RF sweep"), (9, "INRS BG sweep"), (10, "INRS MLP sweep"), (11, "curve shape"), (12, "RMSE* reporting")] {
                    outcomes.push(judge(id, name, false, e.clone()));
                }
            }
        },
        None => {
            for (id, name) in [(8, "INRS RF sweep"), (9, "INRS BG sweep"), (10, "INRS MLP sweep"), (11, "curve shape"), (12, "RMSE* reporting")] {
                outcomes.push(Outcome {
                    id,
                    name,
                    status: Status::Skip,
                    detail: "SKIPPED: INRS bitstream CSV not supplied (set INRS_CSV=/path/to/file.csv)".into(),
                });
            }
        }
    }

    println!("\nacceptance criteria");
    let mut failed = 0;
    for o in &outcomes {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("criterion {:>2} [{tag}] {}: {}", o.id, o.name, o.detail);
    }
    println!("criteria 1-7 took {property_time:.1?}; total {:.1?}\n", start.elapsed());
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
