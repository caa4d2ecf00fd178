use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use avqual::data::{load_dataset_csv, save_dataset_csv, FeatureRanking, QualityDataset, SchemaOptions, MOS_COLUMN};
use avqual::gp::GpParams;
use avqual::harness::{
    compare_significance, emit_report, feature_sweep, rank_features_loo, read_sweep_csv, summarize,
    write_comparison_csv, Algorithm, AlgorithmConfig, Baseline, CvScheme, MetricPooling, Regressor,
    ReportBundle, TrainedModel,
};
use avqual::metrics::MetricOptions;
use avqual::mlp::MlpParams;
use avqual::seed;
use avqual::synth::{generate_dataset, ConditionGrid};
use avqual::trees::EnsembleParams;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::manifest::{self, InputRecord};
use crate::{
    Algo, BaselineArg, Command, CompareArgs, ForestArgs, Grid, InputArgs, ModelArgs, Pooling, PredictArgs,
    RankArgs, ReportArgs, SeedArgs, SweepArgs, SynthArgs, TrainArgs,
};

const SAVED_MODEL_VERSION: u32 = 1;
const SEED_ENV: &str = "QOE_SEED";

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => in_pool(&a.seed, || synth(&a)),
        Command::Rank(a) => in_pool(&a.seed, || rank(&a)),
        Command::Sweep(a) => in_pool(&a.seed, || sweep(&a)),
        Command::Train(a) => in_pool(&a.seed, || train(&a)),
        Command::Predict(a) => predict(&a),
        Command::Compare(a) => compare(&a),
        Command::Report(a) => report(&a),
    }
}

fn in_pool<T: Send>(s: &SeedArgs, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match s.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f),
        None => f(),
    }
}

fn master_seed(s: &SeedArgs) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(s.seed),
    }
}

fn grid(g: Grid) -> ConditionGrid {
    match g {
        Grid::Full => ConditionGrid::full(),
        Grid::Tiny => ConditionGrid::tiny(),
    }
}

fn grid_name(g: Grid) -> &'static str {
    match g {
        Grid::Full => "full",
        Grid::Tiny => "tiny",
    }
}

fn algorithm(a: Algo) -> Algorithm {
    match a {
        Algo::Rf => Algorithm::Rf,
        Algo::Bg => Algorithm::Bg,
        Algo::Mlp => Algorithm::Mlp,
        Algo::Gp => Algorithm::Gp,
    }
}

fn baseline(b: BaselineArg) -> Baseline {
    match b {
        BaselineArg::PerAlgorithm => Baseline::PerAlgorithm,
        BaselineArg::Global => Baseline::Global,
    }
}

fn forest_params(base: EnsembleParams, f: &ForestArgs) -> EnsembleParams {
    EnsembleParams {
        n_trees: f.trees,
        feature_fraction: f.max_features.unwrap_or(base.feature_fraction),
        sample_fraction: f.max_sample.unwrap_or(base.sample_fraction),
        max_depth: f.max_depth,
        min_samples_split: f.min_samples_split,
        ..base
    }
}

fn algorithm_config(algo: Algo, m: &ModelArgs) -> Result<AlgorithmConfig> {
    let cfg = match algo {
        Algo::Rf => AlgorithmConfig::Rf(forest_params(EnsembleParams::random_forest(), &m.forest)),
        Algo::Bg => AlgorithmConfig::Bg(forest_params(EnsembleParams::bagging(), &m.forest)),
        Algo::Mlp => AlgorithmConfig::Mlp(MlpParams {
            hidden_units: m.hidden,
            batch_size: m.batch_size,
            epochs: m.epochs,
            ..MlpParams::default()
        }),
        Algo::Gp => AlgorithmConfig::Gp(GpParams {
            population_size: m.population,
            generations: m.generations,
            tournament_size: m.tournament,
            parsimony_coefficient: m.parsimony,
            stopping_fitness: m.stopping_fitness,
            max_samples: m.gp_max_samples,
            ..GpParams::default()
        }),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Loads `--input`, or generates the synthetic grid and, when `local_copy`
/// is given, writes it there so the manifest hash can be checked later.
fn load_input(
    input: &InputArgs,
    master: u64,
    local_copy: Option<&Path>,
) -> Result<(QualityDataset, Option<InputRecord>, bool)> {
    match &input.input {
        Some(path) => {
            let ds = load_dataset_csv(path, &SchemaOptions::default())
                .with_context(|| format!("loading {}", path.display()))?;
            let rec = InputRecord::External { path: path.clone(), sha256: manifest::sha256_file(path)? };
            Ok((ds, Some(rec), false))
        }
        None => {
            let ds = generate_dataset(&grid(input.grid), master)?;
            let rec = match local_copy {
                Some(p) => {
                    save_dataset_csv(&ds, p)?;
                    let file = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
                    Some(InputRecord::Local { file, sha256: manifest::sha256_file(p)? })
                }
                None => None,
            };
            Ok((ds, rec, true))
        }
    }
}

fn input_json(rec: &Option<InputRecord>, input: &InputArgs) -> Value {
    match rec {
        Some(r) => json!({ "dataset": r.to_json() }),
        None => json!({ "dataset": { "location": "generated", "grid": grid_name(input.grid) } }),
    }
}

fn rank_seed(master: u64) -> u64 {
    seed::derive(master, &[seed::tag("rank")])
}

fn ranking_params(master: u64, forest: &ForestArgs) -> EnsembleParams {
    forest_params(EnsembleParams::random_forest(), forest).with_seed(rank_seed(master))
}

fn load_ranking(path: &Path) -> Result<FeatureRanking> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(FeatureRanking::read_csv(f)?)
}

fn write_ranking(r: &FeatureRanking, path: &Path) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    r.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let master = master_seed(&a.seed)?;
    let ds = generate_dataset(&grid(a.grid), master)?;
    create_parent(&a.out)?;
    save_dataset_csv(&ds, &a.out)?;
    let m = manifest::build(
        "synth",
        master,
        true,
        json!({}),
        json!({ "grid": grid_name(a.grid), "rows": ds.len(), "features": ds.feature_count(), "out_sha256": manifest::sha256_file(&a.out)? }),
    );
    manifest::write(&manifest::sidecar_path(&a.out), &m)?;
    eprintln!("wrote {} rows x {} features (surrogate MOS) to {}", ds.len(), ds.feature_count(), a.out.display());
    Ok(())
}

fn rank(a: &RankArgs) -> Result<()> {
    let master = master_seed(&a.seed)?;
    let (ds, rec, surrogate) = load_input(&a.input, master, None)?;
    let params = ranking_params(master, &a.forest);
    let ranking = rank_features_loo(&ds, &params)?;
    create_parent(&a.out)?;
    write_ranking(&ranking, &a.out)?;
    let m = manifest::build(
        "rank",
        master,
        surrogate,
        input_json(&rec, &a.input),
        json!({ "forest": params, "models": ds.len() }),
    );
    manifest::write(&manifest::sidecar_path(&a.out), &m)?;
    if let Some((name, imp)) = ranking.entries().first() {
        eprintln!("top feature: {name} ({imp:.4})");
    }
    Ok(())
}

fn metric_pooling(p: Pooling) -> MetricPooling {
    match p {
        Pooling::Pooled => MetricPooling::Pooled,
        Pooling::Perfold => MetricPooling::PerFold,
    }
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let master = master_seed(&a.seed)?;
    let algo = algorithm(a.algo);
    let config = algorithm_config(a.algo, &a.model)?;
    let dir = &a.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (ds, rec, surrogate) = load_input(&a.input, master, Some(&dir.join("input.csv")))?;

    let (ranking, ranking_source) = match &a.ranking {
        Some(p) => (load_ranking(p)?, json!({ "source": "file", "sha256": manifest::sha256_file(p)? })),
        None => {
            let params = EnsembleParams::random_forest().with_seed(rank_seed(master));
            (rank_features_loo(&ds, &params)?, json!({ "source": "loo", "forest": params }))
        }
    };
    let ranking_path = dir.join("ranking.csv");
    write_ranking(&ranking, &ranking_path)?;
    let ordered = ds.reorder_by_ranking(&ranking)?;
    let kmax = a.kmax.unwrap_or(ordered.feature_count());

    let scheme = CvScheme {
        n_bins: a.bins,
        ..CvScheme::kfold(
            a.folds.unwrap_or(algo.default_folds()),
            a.repeats,
            seed::derive(master, &[seed::tag("cv")]),
        )
    };
    let pooling = metric_pooling(a.metric_pooling);
    let opts = MetricOptions { global_epsilon: a.epsilon, dof_correction: a.dof_correction };
    let result = feature_sweep(&ordered, &config, &scheme, kmax, master, pooling, &opts)?;
    let sweeps = vec![result];
    let comparisons = compare_significance(&sweeps, baseline(a.baseline), a.significance_n).unwrap_or_default();

    let mut inputs = input_json(&rec, &a.input);
    inputs["ranking"] = json!({
        "location": "out_dir",
        "path": "ranking.csv",
        "sha256": manifest::sha256_file(&ranking_path)?,
    });
    let m = manifest::build(
        "sweep",
        master,
        surrogate,
        inputs,
        json!({
            "algorithm": algo.id(),
            "config": config,
            "kmax": kmax,
            "cv": scheme,
            "metric_pooling": pooling,
            "dof_correction": a.dof_correction,
            "epsilon": a.epsilon,
            "baseline": baseline(a.baseline),
            "significance_n": a.significance_n,
            "ranking": ranking_source,
            "rmse_star_attempted": sweeps[0].rmse_star_attempted,
        }),
    );
    let bundle = ReportBundle { manifest: m, summary: summarize(&sweeps, surrogate), sweeps, comparisons };
    let written = emit_report(dir, &bundle)?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    algorithm: Algorithm,
    feature_names: Vec<String>,
    seed: u64,
    config: AlgorithmConfig,
    model: TrainedModel,
}

fn train(a: &TrainArgs) -> Result<()> {
    let master = master_seed(&a.seed)?;
    let algo = algorithm(a.algo);
    let config = algorithm_config(a.algo, &a.model)?;
    let (mut ds, rec, surrogate) = load_input(&a.input, master, None)?;
    let mut inputs = input_json(&rec, &a.input);
    if let Some(p) = &a.ranking {
        ds = ds.reorder_by_ranking(&load_ranking(p)?)?;
        if let Some(k) = a.k {
            ds = ds.select_top_k(k)?;
        }
        inputs["ranking"] = json!({ "location": "external", "path": p.display().to_string(), "sha256": manifest::sha256_file(p)? });
    }
    let model_seed = seed::derive(master, &[seed::tag(algo.id())]);
    let model = config.train(&ds, model_seed)?;
    let saved = SavedModel {
        format_version: SAVED_MODEL_VERSION,
        algorithm: algo,
        feature_names: ds.column_names().to_vec(),
        seed: model_seed,
        config: config.clone(),
        model,
    };
    create_parent(&a.out)?;
    let mut bytes = serde_json::to_vec_pretty(&saved)?;
    bytes.push(b'\n');
    std::fs::write(&a.out, bytes).with_context(|| format!("writing {}", a.out.display()))?;
    let m = manifest::build(
        "train",
        master,
        surrogate,
        inputs,
        json!({ "algorithm": algo.id(), "config": config, "features": ds.column_names(), "model_seed": model_seed }),
    );
    manifest::write(&manifest::sidecar_path(&a.out), &m)?;
    if let TrainedModel::Gp(g) = &saved.model {
        eprintln!("program: {}", g.infix);
    }
    eprintln!("trained {} on {} rows x {} features", algo, ds.len(), ds.feature_count());
    Ok(())
}

fn load_saved(path: &Path) -> Result<SavedModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let saved: SavedModel = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if saved.format_version != SAVED_MODEL_VERSION {
        bail!("unsupported model file version {}", saved.format_version);
    }
    // Re-validates the inner model's own version tag.
    TrainedModel::from_json(&serde_json::to_string(&saved.model)?)?;
    if saved.model.feature_count() != saved.feature_names.len() {
        bail!("model expects {} features but lists {} names", saved.model.feature_count(), saved.feature_names.len());
    }
    Ok(saved)
}

fn predict(a: &PredictArgs) -> Result<()> {
    let saved = load_saved(&a.model)?;
    let mut reader = csv::Reader::from_path(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let cols: Vec<usize> = saved
        .feature_names
        .iter()
        .map(|n| header.iter().position(|h| h == n).with_context(|| format!("input lacks column {n:?}")))
        .collect::<Result<_>>()?;
    let mos_col = header.iter().position(|h| h == MOS_COLUMN);

    let sink: Box<dyn Write> = match &a.out {
        Some(p) => {
            create_parent(p)?;
            Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(BufWriter::new(sink));
    let mut head = vec!["row", "prediction"];
    if mos_col.is_some() {
        head.push(MOS_COLUMN);
    }
    w.write_record(&head)?;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let x: Vec<f64> = cols
            .iter()
            .map(|&j| {
                let v = rec.get(j).unwrap_or("").trim();
                v.parse::<f64>().with_context(|| format!("row {row}, column {:?}: cannot parse {v:?}", header[j]))
            })
            .collect::<Result<_>>()?;
        // Scores live on the 1..5 ACR scale.
        let p = saved.model.predict_row(&x)?.clamp(1.0, 5.0);
        let mut out = vec![row.to_string(), p.to_string()];
        if let Some(j) = mos_col {
            out.push(rec.get(j).unwrap_or("").trim().to_string());
        }
        w.write_record(&out)?;
    }
    w.flush()?;
    if let Some(p) = &a.out {
        let m = manifest::build(
            "predict",
            saved.seed,
            false,
            json!({
                "model": { "location": "external", "path": a.model.display().to_string(), "sha256": manifest::sha256_file(&a.model)? },
                "dataset": { "location": "external", "path": a.input.display().to_string(), "sha256": manifest::sha256_file(&a.input)? },
            }),
            json!({ "algorithm": saved.algorithm.id(), "clamp": [1.0, 5.0] }),
        );
        manifest::write(&manifest::sidecar_path(p), &m)?;
    }
    Ok(())
}

fn algo_from_path(p: &Path) -> String {
    let stem = p.file_stem().unwrap_or_default().to_string_lossy();
    stem.strip_prefix("sweep_").unwrap_or(&stem).to_string()
}

fn compare(a: &CompareArgs) -> Result<()> {
    let sweeps = a
        .sweeps
        .iter()
        .map(|p| {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(read_sweep_csv(f, &algo_from_path(p), false)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let tables = compare_significance(&sweeps, baseline(a.baseline), a.n)?;
    match &a.out {
        Some(p) => {
            create_parent(p)?;
            write_comparison_csv(&tables, File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
            let inputs: serde_json::Map<String, Value> = a
                .sweeps
                .iter()
                .map(|s| {
                    Ok((
                        algo_from_path(s),
                        json!({ "location": "external", "path": s.display().to_string(), "sha256": manifest::sha256_file(s)? }),
                    ))
                })
                .collect::<Result<_>>()?;
            let m = manifest::build("compare", 0, false, Value::Object(inputs), json!({ "baseline": baseline(a.baseline), "n": a.n }));
            manifest::write(&manifest::sidecar_path(p), &m)?;
        }
        None => write_comparison_csv(&tables, io::stdout().lock())?,
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let path = a.dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let m: Value = serde_json::from_str(&text)?;
    if m["subcommand"] != "sweep" {
        bail!("{} was not written by `sweep`", path.display());
    }
    if a.verify {
        for line in manifest::verify(&m, &a.dir)? {
            println!("{line}");
        }
        return Ok(());
    }
    let params = &m["parameters"];
    let algo = params["algorithm"].as_str().context("manifest lacks parameters.algorithm")?;
    let attempted = params["rmse_star_attempted"].as_bool().unwrap_or(false);
    let sweep_path = a.dir.join(format!("sweep_{algo}.csv"));
    let f = File::open(&sweep_path).with_context(|| format!("opening {}", sweep_path.display()))?;
    let sweeps = vec![read_sweep_csv(f, algo, attempted)?];
    let base: Baseline = serde_json::from_value(params["baseline"].clone()).context("manifest baseline")?;
    let n = params["significance_n"].as_u64().context("manifest significance_n")? as usize;
    let surrogate = m["surrogate"].as_bool().unwrap_or(false);
    let comparisons = compare_significance(&sweeps, base, n).unwrap_or_default();
    let bundle = ReportBundle { summary: summarize(&sweeps, surrogate), manifest: m, sweeps, comparisons };
    for p in emit_report(&a.dir, &bundle)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}
