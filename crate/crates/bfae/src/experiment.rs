//! The four commands behind the CLI. Each returns the files it wrote.
//!
//! Seeds: cell `c`, replication `k` uses `derive_seed(derive_seed(master, c), k)`
//! as its root; the dataset, split and network seeds are derived from that
//! root with tags 1, 2 and 3. Replications are independent and run in
//! parallel; their rows are assembled in (cell, replication) order, so
//! reports do not depend on `--jobs`.

use std::fs;
use std::path::{Path, PathBuf};

use bfae_core::baselines::ae::AeConfig;
use bfae_core::dataset::{split_indices, SplitSpec};
use bfae_core::downstream::{evaluate_pipeline, functional_rmse, PipelineConfig, Task};
use bfae_core::gp::{sample_gp, MaternParams, SimConfig};
use bfae_core::{fit_reconstruct, rng, BfaeModel, FunctionBatch, FunctionalDataset, Grid, Reducer};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{io_err, Error, Result};
use crate::io::{fmt_f64, load_csv, save_csv};
use crate::modelfile::save_model;
use crate::report::{ExperimentReport, ReportRow, FAILED};
use crate::synthetic;

const DATA_TAG: u64 = 1;
const SPLIT_TAG: u64 = 2;
const MODEL_TAG: u64 = 3;

/// Method names as they appear in reports.
pub const PCA: &str = "pca";
pub const AE: &str = "ae";
pub const FPCA: &str = "fpca";
pub const BFAE: &str = "bfae";
pub const BFAE_REDUCED: &str = "bfae_m";
pub const ORIGINAL: &str = "original";
/// Metric holding the number of retained components of PCA / FPCA, whose
/// rows report `m_latent = r_latent = 0`.
pub const LATENT_SIZE: &str = "latent_size";
pub const TABLE_METHODS: [&str; 5] = [PCA, AE, FPCA, BFAE, BFAE_REDUCED];

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(io_err(&path))?;
    files.push(path);
    Ok(())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

fn replication_seed(master: u64, cell: usize, rep: usize) -> u64 {
    rng::derive_seed(rng::derive_seed(master, cell as u64), rep as u64)
}

/// `(n_samples, n_points)` cells in configuration order.
pub fn cells(config: &ExperimentConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &n in &config.sim.n_samples {
        for &m in &config.sim.n_points {
            out.push((n, m));
        }
    }
    out
}

pub fn sim_config(config: &ExperimentConfig, n: usize, m: usize, seed: u64) -> Result<SimConfig> {
    Ok(SimConfig {
        n_samples: n,
        n_features: config.sim.n_features,
        grid: Grid::uniform(0.0, 1.0, m)?,
        matern: MaternParams::new(config.sim.sigma2, config.sim.rho)?,
        noise_sd: config.sim.noise_sd,
        seed,
    })
}

fn split_spec(config: &ExperimentConfig, seed: u64) -> SplitSpec {
    SplitSpec { train_fraction: config.split.train_fraction, seed, shuffle: config.split.shuffle }
}

/// A reducer together with the latent shape reported for it.
struct MethodSpec {
    name: &'static str,
    reducer: Reducer,
    r_latent: usize,
    m_latent: usize,
}

fn method_specs(config: &ExperimentConfig, r: usize, grid: &Grid, seed: u64) -> Vec<MethodSpec> {
    let m = grid.len();
    let interval = [grid.start(), grid.end()];
    let b = &config.bfae;
    let main = b.model_config(r, m, b.main_points(m), interval, seed);
    let reduced = b.model_config(r, m, b.reduced_points(m), interval, seed);
    let mut out = Vec::new();
    let methods = config.methods;
    if methods.pca {
        out.push(MethodSpec { name: PCA, reducer: Reducer::Pca { variance_target: config.variance_target }, r_latent: 0, m_latent: 0 });
    }
    if methods.ae {
        out.push(MethodSpec {
            name: AE,
            reducer: Reducer::Ae(AeConfig::mirror(&main)),
            r_latent: b.latent_features,
            m_latent: b.main_points(m),
        });
    }
    if methods.fpca {
        out.push(MethodSpec { name: FPCA, reducer: Reducer::Fpca { variance_target: config.variance_target }, r_latent: 0, m_latent: 0 });
    }
    if methods.bfae {
        out.push(MethodSpec { name: BFAE, reducer: Reducer::Bfae(main), r_latent: b.latent_features, m_latent: b.main_points(m) });
    }
    if methods.bfae_reduced {
        out.push(MethodSpec {
            name: BFAE_REDUCED,
            reducer: Reducer::Bfae(reduced),
            r_latent: b.latent_features,
            m_latent: b.reduced_points(m),
        });
    }
    out
}

// ---------------------------------------------------------------- simulate

/// Write one dataset per cell (simulations) or the synthetic stand-in
/// files (real-data kinds).
pub fn simulate(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let mut files = Vec::new();
    match config.kind {
        ExperimentKind::Phoneme => {
            let d = synthetic::phoneme_like(config.data.n_samples, rng::derive_seed(config.seed, DATA_TAG))?;
            let p = out.join("phoneme.csv");
            save_csv(&d, &p)?;
            files.extend([p.clone(), crate::io::grid_path(&p)]);
        }
        ExperimentKind::Adelaide => {
            let (t, d) = synthetic::adelaide_like(config.data.n_samples, rng::derive_seed(config.seed, DATA_TAG))?;
            for (name, ds) in [("adelaide_temperature.csv", &t), ("adelaide_demand.csv", &d)] {
                let p = out.join(name);
                save_csv(ds, &p)?;
                files.extend([p.clone(), crate::io::grid_path(&p)]);
            }
        }
        _ => {
            for (c, (n, m)) in cells(config).into_iter().enumerate() {
                let seed = rng::derive_seed(replication_seed(config.seed, c, 0), DATA_TAG);
                let d = sample_gp(&sim_config(config, n, m, seed)?)?;
                let p = out.join(format!("{}_N{n}_M{m}_R{}.csv", config.kind.name(), config.sim.n_features));
                save_csv(&d, &p)?;
                files.extend([p.clone(), crate::io::grid_path(&p)]);
            }
        }
    }
    Ok(files)
}

// ------------------------------------------------------------------- train

pub struct TrainOutcome {
    pub files: Vec<PathBuf>,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

fn training_data(config: &ExperimentConfig) -> Result<FunctionalDataset> {
    if let Some(p) = &config.data.inputs {
        return load_csv(p);
    }
    match config.kind {
        ExperimentKind::Phoneme => synthetic::phoneme_like(config.data.n_samples, rng::derive_seed(config.seed, DATA_TAG)),
        ExperimentKind::Adelaide => {
            Ok(synthetic::adelaide_like(config.data.n_samples, rng::derive_seed(config.seed, DATA_TAG))?.0)
        }
        _ => {
            let (n, m) = cells(config)[0];
            let seed = rng::derive_seed(replication_seed(config.seed, 0, 0), DATA_TAG);
            Ok(sample_gp(&sim_config(config, n, m, seed)?)?)
        }
    }
}

/// Train the main BFAE on the training split (held-out split tracked as
/// validation loss); write the model and its per-epoch history.
pub fn train(config: &ExperimentConfig, out: &Path) -> Result<TrainOutcome> {
    ensure_dir(out)?;
    let data = training_data(config)?;
    let root = replication_seed(config.seed, 0, 0);
    let (tr, te) = split_indices(data.n(), &split_spec(config, rng::derive_seed(root, SPLIT_TAG)))?;
    let (train, test) = (data.values.select(&tr), data.values.select(&te));
    let grid = &data.grid;
    let b = &config.bfae;
    let mc = b.model_config(data.features(), grid.len(), b.main_points(grid.len()), [grid.start(), grid.end()], rng::derive_seed(root, MODEL_TAG));
    let mut model = BfaeModel::build_on_grid(&mc, grid)?;
    let history = model.train(&train, &mc, Some(&test))?;
    let mut files = Vec::new();
    let model_path = out.join("model.json");
    save_model(&model, &mc, history.train_loss.len(), &model_path)?;
    files.push(model_path);
    let mut csv = String::from("epoch,train_loss,validation_loss\n");
    for (e, (a, v)) in history.train_loss.iter().zip(&history.validation_loss).enumerate() {
        csv.push_str(&format!("{},{},{}\n", e + 1, fmt_f64(*a), fmt_f64(*v)));
    }
    write(out.join("history.csv"), &csv, &mut files)?;
    Ok(TrainOutcome { files, train_loss: history.train_loss, validation_loss: history.validation_loss })
}

// --------------------------------------------------------------- benchmark

pub struct BenchmarkOutcome {
    pub report: ExperimentReport,
    pub files: Vec<PathBuf>,
    /// Held-out curve used for the reconstruction figure: grid points, truth
    /// and `(method, reconstruction)` pairs.
    pub figure: Option<Figure>,
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub points: Vec<f64>,
    pub truth: Vec<f64>,
    pub curves: Vec<(&'static str, Vec<f64>)>,
}

impl Figure {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,truth");
        for (name, _) in &self.curves {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, t) in self.points.iter().enumerate() {
            out.push_str(&format!("{},{}", fmt_f64(*t), fmt_f64(self.truth[k])));
            for (_, c) in &self.curves {
                out.push(',');
                out.push_str(&fmt_f64(c[k]));
            }
            out.push('\n');
        }
        out
    }
}

struct Replication {
    rows: Vec<ReportRow>,
    figure: Figure,
}

fn benchmark_replication(config: &ExperimentConfig, cell: usize, rep: usize, hash: &str) -> Result<Replication> {
    let (n, m) = cells(config)[cell];
    let root = replication_seed(config.seed, cell, rep);
    let data = sample_gp(&sim_config(config, n, m, rng::derive_seed(root, DATA_TAG))?)?;
    let (tr, te) = split_indices(n, &split_spec(config, rng::derive_seed(root, SPLIT_TAG)))?;
    let (train, test) = (data.values.select(&tr), data.values.select(&te));
    let grid = &data.grid;
    let r = config.sim.n_features;
    let mut rows = Vec::new();
    let mut figure = Figure { points: grid.points().to_vec(), truth: test.curve(0, 0).to_vec(), curves: Vec::new() };
    for spec in method_specs(config, r, grid, rng::derive_seed(root, MODEL_TAG)) {
        let rec = fit_reconstruct(&spec.reducer, &train, &test, grid)?;
        let row = |split: &str, metric: &str, value: f64| ReportRow {
            method: spec.name.into(),
            dataset: config.kind.name().into(),
            n,
            m,
            r,
            m_latent: spec.m_latent,
            r_latent: spec.r_latent,
            replication: rep.to_string(),
            split: split.into(),
            metric: metric.into(),
            value,
            seed: root,
            config_hash: hash.into(),
        };
        rows.push(row("train", "rmse", functional_rmse(&train, &rec.train, grid)?));
        rows.push(row("test", "rmse", functional_rmse(&test, &rec.test, grid)?));
        if spec.m_latent == 0 {
            // retained components vary by replication
            rows.push(row("train", LATENT_SIZE, rec.latent_size as f64));
        }
        figure.curves.push((spec.name, rec.test.curve(0, 0).to_vec()));
    }
    Ok(Replication { rows, figure })
}

fn failure_row(config: &ExperimentConfig, hash: &str, seed: u64, what: &str) -> ReportRow {
    ReportRow {
        method: what.into(),
        dataset: config.kind.name().into(),
        n: 0,
        m: 0,
        r: 0,
        m_latent: 0,
        r_latent: 0,
        replication: FAILED.into(),
        split: "-".into(),
        metric: "error".into(),
        value: f64::NAN,
        seed,
        config_hash: hash.into(),
    }
}

fn write_reports(
    report: &ExperimentReport,
    config: &ExperimentConfig,
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let p = out.join("report.csv");
    report.write_csv(&p)?;
    files.push(p);
    let p = out.join("report.json");
    report.write_json(&p)?;
    files.push(p);
    let mut cfg = serde_json::to_string_pretty(config)?;
    cfg.push('\n');
    write(out.join("config.json"), &cfg, files)
}

/// Reconstruction benchmark on simulated data (Tables I and II).
pub fn benchmark(config: &ExperimentConfig, out: &Path, jobs: usize) -> Result<BenchmarkOutcome> {
    if config.kind.is_real_data() {
        return Err(Error::Config(format!("{} is a real-data experiment; use the realdata command", config.kind.name())));
    }
    ensure_dir(out)?;
    let hash = config.hash();
    let tasks: Vec<(usize, usize)> =
        (0..cells(config).len()).flat_map(|c| (0..config.replications).map(move |k| (c, k))).collect();
    let results: Vec<Result<Replication>> = pool(jobs)?
        .install(|| tasks.par_iter().map(|&(c, k)| benchmark_replication(config, c, k, &hash)).collect());
    let mut report = ExperimentReport::default();
    let mut figure = None;
    let mut first_error = None;
    for (&(c, k), res) in tasks.iter().zip(results) {
        match res {
            Ok(rep) => {
                if figure.is_none() {
                    figure = Some(rep.figure);
                }
                report.rows.extend(rep.rows);
            }
            Err(e) => {
                report.rows.push(failure_row(config, &hash, replication_seed(config.seed, c, k), &format!("cell{c}_rep{k}")));
                first_error.get_or_insert(e);
            }
        }
    }
    report.add_summaries(config.seed);
    let mut files = Vec::new();
    write_reports(&report, config, out, &mut files)?;
    if let Some(e) = first_error {
        return Err(e);
    }
    write(out.join("table.csv"), &report.table("rmse", &TABLE_METHODS), &mut files)?;
    if let Some(f) = &figure {
        write(out.join("figure2.csv"), &f.to_csv(), &mut files)?;
    }
    Ok(BenchmarkOutcome { report, files, figure })
}

// ---------------------------------------------------------------- realdata

/// Inputs, optional labels/responses for a real-data run.
pub struct RealData {
    pub inputs: FunctionalDataset,
    pub responses: Option<FunctionalDataset>,
}

pub fn load_real_data(config: &ExperimentConfig) -> Result<RealData> {
    let seed = rng::derive_seed(config.seed, DATA_TAG);
    if config.data.synthetic {
        return match config.kind {
            ExperimentKind::Phoneme => Ok(RealData { inputs: synthetic::phoneme_like(config.data.n_samples, seed)?, responses: None }),
            ExperimentKind::Adelaide => {
                let (t, d) = synthetic::adelaide_like(config.data.n_samples, seed)?;
                Ok(RealData { inputs: t, responses: Some(d) })
            }
            k => Err(Error::Config(format!("{} has no synthetic real-data stand-in", k.name()))),
        };
    }
    let hint = "convert the source data to the dataset CSV layout (header sample_id,feature,label,t_1..t_M plus a \
                <name>.grid.json sidecar, see README) and set data.inputs (and data.responses for Adelaide), \
                or set data.synthetic=true";
    let inputs = config
        .data
        .inputs
        .as_ref()
        .ok_or_else(|| Error::MissingData(format!("data.inputs is not set: {hint}")))?;
    if !inputs.exists() {
        return Err(Error::MissingData(format!("{} not found: {hint}", inputs.display())));
    }
    let responses = match (&config.data.responses, config.kind) {
        (Some(p), _) if p.exists() => Some(load_csv(p)?),
        (Some(p), _) => return Err(Error::MissingData(format!("{} not found: {hint}", p.display()))),
        (None, ExperimentKind::Adelaide) => {
            return Err(Error::MissingData(format!("data.responses is not set: {hint}")));
        }
        (None, _) => None,
    };
    Ok(RealData { inputs: load_csv(inputs)?, responses })
}

/// The two class names in sorted order; the second is the positive class.
pub fn binary_labels(labels: &[String]) -> Result<(Vec<bool>, [String; 2])> {
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::Config(format!("classification needs exactly two classes, found {}", classes.len())));
    }
    let pos = classes[1].clone();
    Ok((labels.iter().map(|l| *l == pos).collect(), [classes[0].clone(), pos]))
}

fn realdata_cell(
    config: &ExperimentConfig,
    data: &RealData,
    rep: usize,
    method: Option<&MethodSpec>,
    hash: &str,
) -> Result<Vec<ReportRow>> {
    let root = replication_seed(config.seed, 0, rep);
    let x = &data.inputs;
    let (tr, te) = split_indices(x.n(), &split_spec(config, rng::derive_seed(root, SPLIT_TAG)))?;
    let (train, test) = (x.values.select(&tr), x.values.select(&te));
    let pipeline = PipelineConfig { standardize: config.standardize, seed: rng::derive_seed(root, 4), ..config.pipeline.clone() };
    let labels;
    let responses: Option<(FunctionBatch, FunctionBatch, Grid)>;
    let task = match (&data.responses, &x.labels) {
        (Some(y), _) => {
            responses = Some((y.values.select(&tr), y.values.select(&te), y.grid.clone()));
            let (a, b, g) = responses.as_ref().expect("just set");
            Task::Regress { train: a, test: b, grid: g }
        }
        (None, Some(l)) => {
            labels = binary_labels(l)?.0;
            let yt: Vec<bool> = tr.iter().map(|&i| labels[i]).collect();
            let ys: Vec<bool> = te.iter().map(|&i| labels[i]).collect();
            return realdata_rows(config, x, &train, &test, Task::Classify { train: &yt, test: &ys }, method, &pipeline, rep, root, hash);
        }
        (None, None) => return Err(Error::Config("real data need labels or paired responses".into())),
    };
    realdata_rows(config, x, &train, &test, task, method, &pipeline, rep, root, hash)
}

#[allow(clippy::too_many_arguments)]
fn realdata_rows(
    config: &ExperimentConfig,
    x: &FunctionalDataset,
    train: &FunctionBatch,
    test: &FunctionBatch,
    task: Task<'_>,
    method: Option<&MethodSpec>,
    pipeline: &PipelineConfig,
    rep: usize,
    root: u64,
    hash: &str,
) -> Result<Vec<ReportRow>> {
    let reducer = method.map_or(Reducer::None, |s| s.reducer.clone());
    let outcome = evaluate_pipeline(&reducer, &task, train, test, &x.grid, pipeline)?;
    let name = method.map_or(ORIGINAL, |s| s.name);
    let downstream = match task {
        Task::Classify { .. } => "classification_error",
        Task::Regress { .. } => "response_rmse",
    };
    let (r_latent, m_latent) = match method {
        Some(s) => (s.r_latent, s.m_latent),
        None => (x.features(), x.points()),
    };
    let row = |split: &str, metric: &str, value: f64| ReportRow {
        method: name.into(),
        dataset: config.kind.name().into(),
        n: x.n(),
        m: x.points(),
        r: x.features(),
        m_latent,
        r_latent,
        replication: rep.to_string(),
        split: split.into(),
        metric: metric.into(),
        value,
        seed: root,
        config_hash: hash.into(),
    };
    let mut rows = Vec::new();
    if let (Some(a), Some(b)) = (outcome.reconstruction_train, outcome.reconstruction_test) {
        rows.push(row("train", "reconstruction_rmse", a));
        rows.push(row("test", "reconstruction_rmse", b));
    }
    rows.push(row("train", downstream, outcome.downstream_train));
    rows.push(row("test", downstream, outcome.downstream_test));
    if m_latent == 0 {
        rows.push(row("train", LATENT_SIZE, outcome.latent_size as f64));
    }
    Ok(rows)
}

pub struct RealDataOutcome {
    pub report: ExperimentReport,
    pub files: Vec<PathBuf>,
}

/// Real-data protocol: reconstruction errors of every reducer (Table III)
/// and downstream errors on original vs. reconstructed inputs (Table IV).
pub fn realdata(config: &ExperimentConfig, out: &Path, jobs: usize) -> Result<RealDataOutcome> {
    if !config.kind.is_real_data() {
        return Err(Error::Config(format!("{} is a simulation; use the benchmark command", config.kind.name())));
    }
    ensure_dir(out)?;
    let data = load_real_data(config)?;
    let hash = config.hash();
    let grid = data.inputs.grid.clone();
    let r = data.inputs.features();
    let tasks: Vec<(usize, Option<usize>)> = (0..config.replications)
        .flat_map(|k| {
            let count = method_specs(config, r, &grid, 0).len();
            std::iter::once((k, None)).chain((0..count).map(move |i| (k, Some(i))))
        })
        .collect();
    let results: Vec<Result<Vec<ReportRow>>> = pool(jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(k, i)| {
                let root = replication_seed(config.seed, 0, k);
                let specs = method_specs(config, r, &grid, rng::derive_seed(root, MODEL_TAG));
                realdata_cell(config, &data, k, i.map(|i| &specs[i]), &hash)
            })
            .collect()
    });
    let mut report = ExperimentReport::default();
    let mut first_error = None;
    for (&(k, i), res) in tasks.iter().zip(results) {
        match res {
            Ok(rows) => report.rows.extend(rows),
            Err(e) => {
                let what = format!("rep{k}_{}", i.map_or("original".to_string(), |i| format!("method{i}")));
                report.rows.push(failure_row(config, &hash, replication_seed(config.seed, 0, k), &what));
                first_error.get_or_insert(e);
            }
        }
    }
    report.add_summaries(config.seed);
    let mut files = Vec::new();
    write_reports(&report, config, out, &mut files)?;
    if let Some(e) = first_error {
        return Err(e);
    }
    write(out.join("table3.csv"), &report.table("reconstruction_rmse", &TABLE_METHODS), &mut files)?;
    write(out.join("table4.csv"), &downstream_table(&report), &mut files)?;
    Ok(RealDataOutcome { report, files })
}

/// Original vs. BFAE vs. BFAE (M') downstream errors, train and test rows.
fn downstream_table(report: &ExperimentReport) -> String {
    let metric = report
        .summaries()
        .map(|r| r.metric.as_str())
        .find(|m| *m == "classification_error" || *m == "response_rmse")
        .unwrap_or("classification_error")
        .to_string();
    let methods = [ORIGINAL, BFAE, BFAE_REDUCED];
    let mut out = format!("split,{}\n", methods.join(","));
    for split in ["train", "test"] {
        out.push_str(split);
        for m in methods {
            out.push(',');
            if let Some(v) = report.summaries().find(|r| r.method == m && r.split == split && r.metric == metric) {
                out.push_str(&format!("{:.3}", v.value));
            }
        }
        out.push('\n');
    }
    out
}
