use std::fs;
use std::path::{Path, PathBuf};

use dualcl::analysis::analyze_trajectory;
use dualcl::bundle::{BundleConfig, DatasetInfo, RunBundle};
use dualcl::datasets::{load_csv, normalize, save_csv, Dataset, GeneratorKind, GeneratorSpec};
use dualcl::linalg::{singular_values, DataMatrix, PrototypeSet};
use dualcl::loss::{assign, chl_edges, EdgeMatrix};
use dualcl::trainer::{accuracy, grid_search, mean_sem, run_seeds, train, AggregateRow, SeedRun, TrainConfig};
use dualcl::{Model, ModelKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, CompareArgs, DataArgs, GenerateArgs, GridArgs, HighdimArgs, KindArg, ModelArg, ModelRates, RunArgs,
    TrainArgs,
};
use crate::settings::Settings;
use crate::svg::{self, PlanarScene, Series};
use crate::CliError;

pub const DEFAULT_SAMPLES: usize = 500;
pub const DEFAULT_MADELON_FEATURES: usize = 20;
pub const COMPARE_REPS: usize = 10;
pub const GRID_REPS: usize = 3;
pub const HIGHDIM_SAMPLES: usize = 100;
pub const HIGHDIM_FEATURES: [usize; 2] = [1000, 2000];
pub const HIGHDIM_REPS: usize = 10;
pub const HIGHDIM_RECORD_EVERY: usize = 10;
/// Learning rates for standardized hypercube data, whose top squared
/// singular value grows with the feature count.
pub const HIGHDIM_LR_VCL: f64 = 0.5;
pub const HIGHDIM_LR_DCL: f64 = 1e-5;
pub const HIGHDIM_LR_DEEP: f64 = 1e-3;

pub const COMPARISON_FILE: &str = "comparison.csv";
pub const FINAL_FILE: &str = "final.csv";
pub const ACCURACY_FILE: &str = "accuracy_vs_features.csv";
pub const ACCURACY_RUNS_FILE: &str = "accuracy_runs.csv";
pub const GRID_FILE: &str = "grid.csv";
pub const ANALYSIS_FILE: &str = "analysis.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    }
    w.flush().map_err(io_err(path))
}

fn model_name(kind: ModelKind) -> &'static str {
    kind.name()
}

/// Loaded or generated data, standardized unless `raw` is set.
pub fn resolve_dataset(settings: &Settings, a: &DataArgs) -> Result<(Dataset, DatasetInfo), CliError> {
    let seed = settings.pick(a.seed, "seed", 0)?;
    let raw = settings.pick_switch(a.raw, "raw")?;
    let path: Option<PathBuf> = settings.pick_opt(a.data.clone(), "data")?;
    let (ds, generator) = match path {
        Some(path) => (load_csv(&path)?, None),
        None => {
            let kind: GeneratorKind = settings.pick(a.kind, "kind", KindArg::Moons)?.into();
            let n = settings.pick(a.n, "n", DEFAULT_SAMPLES)?;
            let mut spec = if kind == GeneratorKind::Madelon {
                GeneratorSpec::madelon(
                    n,
                    settings.pick(a.features, "features", DEFAULT_MADELON_FEATURES)?,
                    settings.pick(a.clusters, "clusters", 2)?,
                    seed,
                )
            } else {
                let mut spec = GeneratorSpec::planar(kind, n, seed);
                if let Some(f) = settings.pick_opt(a.features, "features")? {
                    spec.n_features = f;
                }
                spec
            };
            if let Some(noise) = settings.pick_opt(a.noise, "noise")? {
                spec.noise = noise;
            }
            (spec.generate()?, Some(spec))
        }
    };
    let ds = if raw { ds } else { normalize(&ds)? };
    for w in &ds.warnings {
        log::warn!("{}: {w}", ds.name);
    }
    let info = DatasetInfo {
        name: ds.name.clone(),
        d: ds.x.d(),
        n: ds.x.n(),
        normalized: !raw,
        generator,
    };
    Ok((ds, info))
}

/// Training configuration for `kind` with the learning rate looked up under
/// `lr_key`.
pub fn resolve_train(
    settings: &Settings,
    run: &RunArgs,
    kind: ModelKind,
    lr: Option<f64>,
    lr_key: &str,
    lr_default: Option<f64>,
    seed: u64,
) -> Result<TrainConfig, CliError> {
    let mut cfg = TrainConfig::new(kind);
    cfg.seed = seed;
    cfg.k = settings.pick(run.k, "k", cfg.k)?;
    cfg.epochs = settings.pick(run.epochs, "epochs", cfg.epochs)?;
    cfg.lambda = settings.pick(run.lambda, "lambda", cfg.lambda)?;
    cfg.record_every = settings.pick(run.record_every, "record-every", cfg.record_every)?;
    cfg.learning_rate = settings.pick(lr, lr_key, lr_default.unwrap_or(cfg.learning_rate))?;
    cfg.freeze_assignment = settings.pick_switch(run.freeze_assignment, "freeze-assignment")?;
    cfg.dcl_bias = settings.pick_switch(run.dcl_bias, "dcl-bias")?;
    if kind == ModelKind::DeepDcl {
        cfg.encoder_widths = settings.pick_list(run.encoder.clone(), "encoder", cfg.encoder_widths)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rate_key(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Vcl => "lr-vcl",
        ModelKind::Dcl => "lr-dcl",
        ModelKind::DeepDcl => "lr-deep",
    }
}

fn rate_flag(rates: &ModelRates, kind: ModelKind) -> Option<f64> {
    match kind {
        ModelKind::Vcl => rates.lr_vcl,
        ModelKind::Dcl => rates.lr_dcl,
        ModelKind::DeepDcl => rates.lr_deep,
    }
}

fn data_seed(settings: &Settings, a: &DataArgs) -> Result<u64, CliError> {
    settings.pick(a.seed, "seed", 0)
}

#[derive(Debug, Serialize)]
struct ExtremeValues {
    max: f64,
    min: f64,
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    dataset: &'a DatasetInfo,
    singular_values: ExtremeValues,
}

pub fn generate(settings: &Settings, args: &GenerateArgs) -> Result<(), CliError> {
    let (ds, info) = resolve_dataset(settings, &args.data)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    save_csv(&ds, &args.out)?;
    let s = singular_values(&ds.x);
    let sidecar = Sidecar {
        dataset: &info,
        singular_values: ExtremeValues {
            max: s.max(),
            min: s.min(),
        },
    };
    let side_path = args.out.with_extension("json");
    write_text(
        &side_path,
        &(serde_json::to_string_pretty(&sidecar).map_err(dualcl::Error::from)? + "\n"),
    )?;
    println!("wrote {} ({} samples, {} features)", args.out.display(), info.n, info.d);
    Ok(())
}

fn metric_plots(dir: &Path, curves: &[(&str, &[AggregateRow])]) -> Result<(), CliError> {
    let series = |f: &dyn Fn(&AggregateRow) -> (f64, f64)| -> Vec<Series> {
        curves
            .iter()
            .map(|(name, rows)| Series {
                name: name.to_string(),
                points: rows.iter().map(|r| (r.epoch as f64, f(r).0)).collect(),
                errors: Some(rows.iter().map(|r| f(r).1).collect()),
            })
            .collect()
    };
    let q = series(&|r| (r.q_mean, r.q_sem));
    write_text(
        &dir.join("quantization.svg"),
        &svg::line_chart("Quantization error", "epoch", "Q (mean ± SEM)", &q, true),
    )?;
    let e = series(&|r| (r.edge_mean, r.edge_sem));
    write_text(
        &dir.join("edge_norm.svg"),
        &svg::line_chart("Edge matrix norm", "epoch", "‖E‖ (mean ± SEM)", &e, false),
    )?;
    let v = series(&|r| (r.valid_mean, r.valid_sem));
    write_text(
        &dir.join("valid_prototypes.svg"),
        &svg::line_chart("Valid prototypes", "epoch", "count (mean ± SEM)", &v, false),
    )
}

fn run_bundle(
    ds: &Dataset,
    info: &DatasetInfo,
    cfg: &TrainConfig,
    reps: usize,
) -> Result<(RunBundle, Vec<SeedRun>), CliError> {
    let runs = run_seeds(ds, cfg, reps)?;
    let config = BundleConfig::new(info.clone(), cfg.clone(), reps);
    Ok((RunBundle::from_runs(config, ds.clone(), &runs), runs))
}

pub fn train_cmd(settings: &Settings, args: &TrainArgs) -> Result<(), CliError> {
    let (ds, info) = resolve_dataset(settings, &args.data)?;
    let seed = data_seed(settings, &args.data)?;
    let kind: ModelKind = settings.pick(args.model, "model", ModelArg::Vcl)?.into();
    let cfg = resolve_train(settings, &args.run, kind, args.lr, "lr", None, seed)?;
    let reps = settings.pick(args.run.reps, "reps", 1)?;
    let (bundle, runs) = run_bundle(&ds, &info, &cfg, reps)?;
    bundle.write(&args.out)?;
    metric_plots(&args.out, &[(model_name(kind), &bundle.aggregate)])?;
    for run in &runs {
        let f = &run.trace.final_record;
        println!(
            "{} seed {}: Q {:.6} ‖E‖ {:.6} valid {}",
            kind, run.seed, f.quantization, f.edge_norm, f.valid_count
        );
    }
    println!("wrote bundle {}", args.out.display());
    Ok(())
}

/// Edge structure of a trained model on its own data view.
pub fn final_topology(model: &Model, x: &DataMatrix) -> Result<(PrototypeSet, EdgeMatrix), CliError> {
    let (view, p) = model.embed(x)?;
    let view = DataMatrix::new(view)?;
    let a = assign(&view, &p)?;
    let edges = chl_edges(&a, &p);
    Ok((p, edges))
}

#[derive(Debug, Serialize)]
struct ComparisonRow {
    model: &'static str,
    epoch: usize,
    q_mean: f64,
    q_sem: f64,
    edge_mean: f64,
    edge_sem: f64,
    valid_mean: f64,
    valid_sem: f64,
}

#[derive(Debug, Serialize)]
struct FinalRow {
    model: &'static str,
    seed: u64,
    quantization: f64,
    edge_norm: f64,
    valid_count: usize,
    components: usize,
    lonely: usize,
}

fn planar_plots(dir: &Path, name: &str, ds: &Dataset, run: &SeedRun, bundle: &RunBundle) -> Result<(), CliError> {
    let x = ds.x.as_matrix();
    let labels = ds.labels.clone().unwrap_or_else(|| vec![0; ds.x.n()]);
    let samples: Vec<(f64, f64, usize)> = (0..ds.x.n()).map(|i| (x[(0, i)], x[(1, i)], labels[i])).collect();
    let (p, edges) = final_topology(&run.model, &ds.x)?;
    let pm = p.as_matrix();
    let protos: Vec<(f64, f64)> = pm.column_iter().map(|c| (c[0], c[1])).collect();
    let k = p.k();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
        .filter(|&(a, b)| edges.occupancy[(a, b)] > 0)
        .collect();
    let lonely = edges.lonely();
    let title = format!("{name} topology (seed {})", run.seed);
    write_text(
        &dir.join(format!("topology_{name}.svg")),
        &svg::planar_chart(&PlanarScene {
            title: &title,
            samples: &samples,
            prototypes: &protos,
            hollow: &lonely,
            edges: &pairs,
            paths: &[],
        }),
    )?;
    let snaps = bundle.trajectory_of(run.seed);
    let paths: Vec<Vec<(f64, f64)>> = (0..k)
        .map(|j| snaps.iter().map(|(_, s)| (s[(0, j)], s[(1, j)])).collect())
        .collect();
    let title = format!("{name} prototype trajectories (seed {})", run.seed);
    write_text(
        &dir.join(format!("trajectories_{name}.svg")),
        &svg::planar_chart(&PlanarScene {
            title: &title,
            samples: &samples,
            prototypes: &protos,
            hollow: &[],
            edges: &[],
            paths: &paths,
        }),
    )
}

pub fn compare(settings: &Settings, args: &CompareArgs) -> Result<(), CliError> {
    let (ds, info) = resolve_dataset(settings, &args.data)?;
    let seed = data_seed(settings, &args.data)?;
    let models = settings.pick_list(args.models.clone(), "models", vec![ModelArg::Vcl, ModelArg::Dcl])?;
    if models.is_empty() {
        return Err(CliError::Usage("at least one model is required".into()));
    }
    let reps = settings.pick(args.run.reps, "reps", COMPARE_REPS)?;
    let mut comparison = Vec::new();
    let mut finals = Vec::new();
    let mut bundles = Vec::new();
    for m in &models {
        let kind: ModelKind = (*m).into();
        let cfg = resolve_train(
            settings,
            &args.run,
            kind,
            rate_flag(&args.rates, kind),
            rate_key(kind),
            None,
            seed,
        )?;
        let (bundle, runs) = run_bundle(&ds, &info, &cfg, reps)?;
        let name = model_name(kind);
        bundle.write(args.out.join(name))?;
        comparison.extend(bundle.aggregate.iter().map(|r| ComparisonRow {
            model: name,
            epoch: r.epoch,
            q_mean: r.q_mean,
            q_sem: r.q_sem,
            edge_mean: r.edge_mean,
            edge_sem: r.edge_sem,
            valid_mean: r.valid_mean,
            valid_sem: r.valid_sem,
        }));
        for run in &runs {
            let (_, edges) = final_topology(&run.model, &ds.x)?;
            let f = &run.trace.final_record;
            finals.push(FinalRow {
                model: name,
                seed: run.seed,
                quantization: f.quantization,
                edge_norm: f.edge_norm,
                valid_count: f.valid_count,
                components: edges.components().len(),
                lonely: edges.lonely().len(),
            });
        }
        if ds.x.d() == 2 && kind != ModelKind::DeepDcl {
            planar_plots(&args.out, name, &ds, &runs[0], &bundle)?;
        }
        let q: Vec<f64> = runs.iter().map(|r| r.trace.final_record.quantization).collect();
        let (mean, sem) = mean_sem(&q);
        println!("{name}: final Q {mean:.6} ± {sem:.6} over {reps} seeds");
        bundles.push((name, bundle));
    }
    write_csv(&args.out.join(COMPARISON_FILE), &comparison)?;
    write_csv(&args.out.join(FINAL_FILE), &finals)?;
    let curves: Vec<(&str, &[AggregateRow])> = bundles.iter().map(|(n, b)| (*n, b.aggregate.as_slice())).collect();
    metric_plots(&args.out, &curves)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AccuracyRow {
    pub model: &'static str,
    pub n_features: usize,
    pub n_samples: usize,
    pub k: usize,
    pub reps: usize,
    pub mean_accuracy: f64,
    pub sem_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
struct AccuracyRun {
    model: &'static str,
    n_features: usize,
    seed: u64,
    accuracy: f64,
    final_quantization: f64,
}

pub fn highdim(settings: &Settings, args: &HighdimArgs) -> Result<Vec<AccuracyRow>, CliError> {
    let features = settings.pick_list(args.features.clone(), "features", HIGHDIM_FEATURES.to_vec())?;
    let n = settings.pick(args.n, "n", HIGHDIM_SAMPLES)?;
    let clusters = settings.pick(args.clusters, "clusters", 2)?;
    let seed = settings.pick(args.seed, "seed", 0)?;
    let reps = settings.pick(args.run.reps, "reps", HIGHDIM_REPS)?;
    let models = settings.pick_list(
        args.models.clone(),
        "models",
        vec![ModelArg::Vcl, ModelArg::Dcl, ModelArg::DeepDcl],
    )?;
    if features.is_empty() || models.is_empty() || reps == 0 {
        return Err(CliError::Usage(
            "feature list, model list and repetitions must be non-empty".into(),
        ));
    }
    let mut run_args = args.run.clone();
    run_args.k = Some(settings.pick(args.run.k, "k", (n / 10).max(2))?);
    run_args.record_every = Some(settings.pick(args.run.record_every, "record-every", HIGHDIM_RECORD_EVERY)?);

    let mut rows = Vec::new();
    let mut per_run = Vec::new();
    for &nf in &features {
        let datasets: Vec<Dataset> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                Ok(normalize(
                    &GeneratorSpec::madelon(n, nf, clusters, seed + r).generate()?,
                )?)
            })
            .collect::<Result<_, CliError>>()?;
        for m in &models {
            let kind: ModelKind = (*m).into();
            let default_lr = match kind {
                ModelKind::Vcl => HIGHDIM_LR_VCL,
                ModelKind::Dcl => HIGHDIM_LR_DCL,
                ModelKind::DeepDcl => HIGHDIM_LR_DEEP,
            };
            let base = resolve_train(
                settings,
                &run_args,
                kind,
                rate_flag(&args.rates, kind),
                rate_key(kind),
                Some(default_lr),
                seed,
            )?;
            let results: Vec<(u64, f64, f64)> = datasets
                .par_iter()
                .enumerate()
                .map(|(r, ds)| {
                    let mut cfg = base.clone();
                    cfg.seed = seed + r as u64;
                    let (model, trace) = train(ds, &cfg)?;
                    Ok((cfg.seed, accuracy(&model, ds)?, trace.final_record.quantization))
                })
                .collect::<Result<_, CliError>>()?;
            let name = model_name(kind);
            let acc: Vec<f64> = results.iter().map(|r| r.1).collect();
            let (mean, sem) = mean_sem(&acc);
            println!("{name} n_f={nf}: accuracy {mean:.4} ± {sem:.4}");
            rows.push(AccuracyRow {
                model: name,
                n_features: nf,
                n_samples: n,
                k: base.k,
                reps,
                mean_accuracy: mean,
                sem_accuracy: sem,
            });
            per_run.extend(results.iter().map(|&(s, a, q)| AccuracyRun {
                model: name,
                n_features: nf,
                seed: s,
                accuracy: a,
                final_quantization: q,
            }));
        }
    }
    write_csv(&args.out.join(ACCURACY_FILE), &rows)?;
    write_csv(&args.out.join(ACCURACY_RUNS_FILE), &per_run)?;
    let series: Vec<Series> = models
        .iter()
        .map(|m| {
            let name = model_name((*m).into());
            let mine: Vec<&AccuracyRow> = rows.iter().filter(|r| r.model == name).collect();
            Series {
                name: name.into(),
                points: mine.iter().map(|r| (r.n_features as f64, r.mean_accuracy)).collect(),
                errors: Some(mine.iter().map(|r| r.sem_accuracy).collect()),
            }
        })
        .collect();
    write_text(
        &args.out.join("accuracy.svg"),
        &svg::line_chart(
            "Accuracy against dimensionality",
            "features",
            "accuracy (mean ± SEM)",
            &series,
            false,
        ),
    )?;
    println!("wrote {}", args.out.display());
    Ok(rows)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let bundle = RunBundle::load(&args.bundle)?;
    let kind = bundle.config.train.model_kind;
    if kind == ModelKind::DeepDcl {
        return Err(CliError::Usage(
            "flow analysis applies to vcl and dcl bundles; the deep model has no closed-form flow".into(),
        ));
    }
    let seeds = bundle.seeds();
    let seed = args.seed.or_else(|| seeds.first().copied()).ok_or_else(|| {
        CliError::Core(dualcl::Error::Bundle {
            path: args.bundle.clone(),
            message: "bundle holds no runs".into(),
        })
    })?;
    if !seeds.contains(&seed) {
        return Err(CliError::Usage(format!("seed {seed} is not part of the bundle")));
    }
    let snapshots = bundle.trajectory_of(seed);
    let report = analyze_trajectory(&bundle.data.x, kind, bundle.config.train.learning_rate, &snapshots)?;
    let out = args.out.clone().unwrap_or_else(|| args.bundle.join("analysis"));
    write_text(
        &out.join(ANALYSIS_FILE),
        &(serde_json::to_string_pretty(&report).map_err(dualcl::Error::from)? + "\n"),
    )?;

    let groups: Vec<(String, Vec<(f64, f64)>)> = report
        .rates
        .iter()
        .map(|p| {
            let pts = p
                .modes
                .iter()
                .filter_map(|m| m.fitted_rate.map(|f| (m.predicted_rate, f)))
                .collect();
            (format!("prototype {}", p.prototype), pts)
        })
        .filter(|(_, pts): &(String, Vec<(f64, f64)>)| !pts.is_empty())
        .collect();
    write_text(
        &out.join("rates.svg"),
        &svg::scatter_chart("Decay rates per mode", "predicted rate", "fitted rate", &groups, true),
    )?;
    let curve = &report.range_residuals;
    let series = [Series {
        name: "mean residual".into(),
        points: curve
            .epochs
            .iter()
            .zip(&curve.mean_residual)
            .map(|(&e, &r)| (e as f64, r))
            .collect(),
        errors: None,
    }];
    write_text(
        &out.join("residuals.svg"),
        &svg::line_chart("Distance of prototypes to R(X)", "epoch", "residual", &series, true),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct GridRow {
    rank: usize,
    model: &'static str,
    k: usize,
    learning_rate: f64,
    lambda: f64,
    mean_final_q: f64,
    mean_final_edge: f64,
}

pub fn grid(settings: &Settings, args: &GridArgs) -> Result<(), CliError> {
    let (ds, _) = resolve_dataset(settings, &args.data)?;
    let seed = data_seed(settings, &args.data)?;
    let kind: ModelKind = settings.pick(args.model, "model", ModelArg::Dcl)?.into();
    let base = resolve_train(settings, &args.run, kind, None, "lr", None, seed)?;
    let lrs = settings.pick_list(args.lrs.clone(), "lrs", vec![0.0008, 0.008])?;
    let lambdas = settings.pick_list(args.lambdas.clone(), "lambdas", vec![base.lambda])?;
    let ks = settings.pick_list(args.ks.clone(), "ks", vec![base.k])?;
    let reps = settings.pick(args.run.reps, "reps", GRID_REPS)?;
    let mut configs = Vec::new();
    for &k in &ks {
        for &lr in &lrs {
            for &lambda in &lambdas {
                let mut cfg = base.clone();
                cfg.k = k;
                cfg.learning_rate = lr;
                cfg.lambda = lambda;
                cfg.validate()?;
                configs.push(cfg);
            }
        }
    }
    let results = grid_search(&ds, &configs, reps)?;
    let rows: Vec<GridRow> = results
        .iter()
        .enumerate()
        .map(|(i, r)| GridRow {
            rank: i + 1,
            model: model_name(kind),
            k: r.config.k,
            learning_rate: r.config.learning_rate,
            lambda: r.config.lambda,
            mean_final_q: r.mean_final_q,
            mean_final_edge: r.mean_final_edge,
        })
        .collect();
    write_csv(&args.out.join(GRID_FILE), &rows)?;
    if let Some(best) = rows.first() {
        println!(
            "best: k={} lr={} lambda={} mean final Q {:.6}",
            best.k, best.learning_rate, best.lambda, best.mean_final_q
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
