//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dualcl::analysis::{
    fit_decay_rates, frozen_base_descent, frozen_dual_descent, predict_dual_flow, subspace_residuals,
    voronoi_centroids, Subspace, TimeMap,
};
use dualcl::datasets::{normalize, GeneratorKind, GeneratorSpec};
use dualcl::layers::{dcl_forward, deep_forward, vcl_prototypes, DclLayer, DeepDcl, VclLayer};
use dualcl::linalg::{edm, edm_gram, pseudoinverse, svd, DataMatrix, GramMatrix, PrototypeSet};
use dualcl::loss::{assign, frozen_loss, grad_dcl, grad_deep, grad_vcl, VoronoiAssignment};
use dualcl::trainer::{run_seeds, train_model, TrainConfig};
use dualcl::{Model, ModelKind};
use dualcl_cli::args::{HighdimArgs, ModelRates, RunArgs};
use dualcl_cli::commands::{final_topology, highdim};
use dualcl_cli::settings::Settings;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn within_time(elapsed: Duration, limit: Duration) -> (bool, String) {
    (
        elapsed < limit,
        format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()),
    )
}

// 1

fn edm_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=20);
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=10);
        let x = DataMatrix::new(random(d, n, &mut rng) * 3.0).unwrap();
        let omega = random(k, n, &mut rng);
        let g = GramMatrix::new(x.as_matrix().tr_mul(x.as_matrix())).unwrap();
        let lhs = edm_gram(&g, &omega).unwrap();
        let p = PrototypeSet::new(x.as_matrix() * omega.transpose()).unwrap();
        let rhs = edm(&x, &p).unwrap();
        let tol = 1e-9 * (1.0 + x.as_matrix().norm_squared());
        worst = worst.max((lhs - rhs).amax() / tol);
    }
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(1));
    outcome(
        worst <= 1.0 && fast,
        format!("worst error / tolerance {worst:.2e}; {time}"),
    )
}

// 2

const FD_STEP: f64 = 1e-6;

fn central_diff(m: &DMatrix<f64>, mut f: impl FnMut(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let mut probe = m.clone();
    for idx in 0..m.len() {
        let orig = probe[idx];
        probe[idx] = orig + FD_STEP;
        let up = f(&probe);
        probe[idx] = orig - FD_STEP;
        let down = f(&probe);
        probe[idx] = orig;
        out[idx] = (up - down) / (2.0 * FD_STEP);
    }
    out
}

fn relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    let scale = analytic.norm().max(numeric.norm()).max(1e-12);
    (analytic - numeric).norm() / scale
}

fn column(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn gradient_oracles() -> Outcome {
    let start = Instant::now();
    let (mut vcl, mut dcl, mut deep) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let d = rng.random_range(2..6);
        let n = rng.random_range(6..16);
        let k = rng.random_range(2..6);
        let lambda = [0.0, 0.01, 0.5][seed as usize % 3];
        let x = DataMatrix::new(random(d, n, &mut rng) * 2.0).unwrap();
        let xm = x.as_matrix();

        let layer = VclLayer::new(random(k, d, &mut rng)).unwrap();
        let a = assign(&x, &vcl_prototypes(&layer)).unwrap();
        let numeric = central_diff(&layer.weights, |w| frozen_loss(xm, &w.transpose(), &a, lambda).total);
        vcl = vcl.max(relative_error(&grad_vcl(&x, &layer, &a, lambda), &numeric));

        let bias = (seed % 2 == 1).then(|| DVector::from_fn(k, |_, _| rng.random_range(-0.5..0.5)));
        let layer = DclLayer::new(random(k, n, &mut rng) * 0.5, bias).unwrap();
        let a = assign(&x, &dcl_forward(&layer, &x).unwrap()).unwrap();
        let g = grad_dcl(&x, &layer, &a, lambda).unwrap();
        let loss_at = |l: &DclLayer| frozen_loss(xm, dcl_forward(l, &x).unwrap().as_matrix(), &a, lambda).total;
        let numeric = central_diff(&layer.weights, |w| {
            loss_at(&DclLayer::new(w.clone(), layer.bias.clone()).unwrap())
        });
        dcl = dcl.max(relative_error(&g.weights, &numeric));
        if let Some(b) = &layer.bias {
            let numeric = central_diff(&column(b), |bm| {
                loss_at(&DclLayer::new(layer.weights.clone(), Some(bm.column(0).into_owned())).unwrap())
            });
            dcl = dcl.max(relative_error(&column(g.bias.as_ref().unwrap()), &numeric));
        }

        let mut model = DeepDcl::glorot(d, n, k, &[4, 3], seed, seed % 2 == 0);
        for l in &mut model.encoder {
            l.bias = DVector::from_fn(l.bias.len(), |_, _| rng.random_range(-0.3..0.3));
        }
        let (f, p) = deep_forward(&model, &x).unwrap();
        let a = assign(&DataMatrix::new(f).unwrap(), &p).unwrap();
        let g = grad_deep(&model, &x, &a, lambda).unwrap();
        let loss_at = |m: &DeepDcl| {
            let (f, p) = deep_forward(m, &x).unwrap();
            frozen_loss(&f, p.as_matrix(), &a, lambda).total
        };
        let numeric = central_diff(&model.head.weights, |w| {
            let mut m = model.clone();
            m.head.weights = w.clone();
            loss_at(&m)
        });
        deep = deep.max(relative_error(&g.head.weights, &numeric));
        for l in 0..model.encoder.len() {
            let numeric = central_diff(&model.encoder[l].weights, |w| {
                let mut m = model.clone();
                m.encoder[l].weights = w.clone();
                loss_at(&m)
            });
            deep = deep.max(relative_error(&g.encoder[l].weights, &numeric));
            let numeric = central_diff(&column(&model.encoder[l].bias), |b| {
                let mut m = model.clone();
                m.encoder[l].bias = b.column(0).into_owned();
                loss_at(&m)
            });
            deep = deep.max(relative_error(&column(&g.encoder[l].bias), &numeric));
        }
    }
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(30));
    outcome(
        vcl <= 1e-5 && dcl <= 1e-5 && deep <= 1e-4 && fast,
        format!("max relative error vcl {vcl:.1e}, dcl {dcl:.1e}, deep {deep:.1e}; {time}"),
    )
}

// 3

fn random_partition(n: usize, k: usize, rng: &mut ChaCha8Rng) -> VoronoiAssignment {
    loop {
        let w1: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        if (0..k).all(|j| w1.contains(&j)) {
            let w2 = w1.iter().map(|&w| (w + 1) % k).collect();
            return VoronoiAssignment::from_winners(w1, w2, k).unwrap();
        }
    }
}

fn critical_points() -> Outcome {
    let mut worst_normal = 0.0f64;
    let mut worst_match = 0.0f64;
    let mut unconverged = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let (d, n) = if seed % 2 == 0 { (6, 3) } else { (3, 6) };
        let x = DataMatrix::new(random(d, n, &mut rng)).unwrap();
        let xm = x.as_matrix();
        let k = 2;
        let a = random_partition(n, k, &mut rng);
        let f = svd(&x).unwrap();
        let s1 = f.singular_values[0];
        let nj_max = *a.counts.iter().max().unwrap() as f64;
        let lr = n as f64 / (2.0 * nj_max * s1 * s1);
        let layer0 = DclLayer::new(random(k, n, &mut rng), None).unwrap();
        let centroids = voronoi_centroids(xm, &a);
        let residual = |l: &DclLayer| {
            (0..k)
                .map(|j| {
                    let mu = centroids[j].as_ref().unwrap();
                    let om = l.weights.row(j).transpose();
                    (xm.tr_mul(xm) * om - xm.tr_mul(mu)).norm()
                })
                .fold(0.0f64, f64::max)
        };
        let mut layer = layer0.clone();
        let mut rounds = 0;
        while residual(&layer) > 1e-7 && rounds < 500 {
            layer = frozen_dual_descent(&x, layer, &a, 0.0, lr, 1000, 1000).unwrap().0;
            rounds += 1;
        }
        let r = residual(&layer);
        if r > 1e-7 {
            unconverged += 1;
        }
        worst_normal = worst_normal.max(r);
        // Ω − X⁺μ must equal the null-space part of Ω₀
        let rank = f.rank(1e-10);
        let vr = f.v.columns(0, rank);
        let pinv = pseudoinverse(&x).unwrap();
        for (j, mu) in centroids.iter().enumerate() {
            let om = layer.weights.row(j).transpose();
            let om0 = layer0.weights.row(j).transpose();
            let crit = &pinv * mu.as_ref().unwrap();
            let null0 = &om0 - vr * vr.tr_mul(&om0);
            worst_match = worst_match.max((om - crit - null0).norm());
        }
    }
    outcome(
        worst_normal <= 1e-6 && worst_match <= 1e-6,
        format!(
            "max ‖XᵀXΩ − Xᵀμ‖ {worst_normal:.1e}, max ‖Ω − X⁺μ − center part‖ {worst_match:.1e}, {unconverged} runs above 1e-7"
        ),
    )
}

// 4

fn one_per_sample(n: usize) -> VoronoiAssignment {
    let w1: Vec<usize> = (0..n).collect();
    let w2 = (0..n).map(|i| (i + 1) % n).collect();
    VoronoiAssignment::from_winners(w1, w2, n).unwrap()
}

fn decay_rates() -> Outcome {
    let start = Instant::now();
    let eps = 1e-3;
    let steps = 3000;
    let mut worst_dual = 0.0f64;
    let mut worst_base = 0.0f64;
    let mut fitted = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let x = DataMatrix::new(random(3, 2, &mut rng)).unwrap();
        let f = svd(&x).unwrap();
        let a = one_per_sample(2);
        let tm = TimeMap::new(eps, 2, 1);

        let (_, path) = frozen_dual_descent(&x, DclLayer::glorot(2, 2, seed, false), &a, 0.0, eps, steps, 50).unwrap();
        for j in 0..2 {
            let mu = x.as_matrix().column(j).into_owned();
            let (pred, _) = predict_dual_flow(&x, &path[0].1.row(j).transpose(), &mu, &[], tm).unwrap();
            let samples: Vec<(f64, DVector<f64>)> = path
                .iter()
                .map(|(e, w)| (tm.time(*e as f64), w.row(j).transpose()))
                .collect();
            for fit in fit_decay_rates(&samples, &pred.critical, &f.v) {
                if fit.initial_amplitude <= 1e-4 {
                    continue;
                }
                let sigma2 = f.singular_values[fit.mode].powi(2);
                let rate = fit.slope.map_or(f64::INFINITY, |s| -s);
                worst_dual = worst_dual.max((rate - sigma2).abs() / sigma2);
                fitted += 1;
            }
        }

        let layer = VclLayer::glorot(2, 3, seed);
        let (_, path) = frozen_base_descent(&x, layer, &a, 0.0, eps, steps, 50);
        let identity = DMatrix::identity(3, 3);
        for j in 0..2 {
            let mu = x.as_matrix().column(j).into_owned();
            let samples: Vec<(f64, DVector<f64>)> = path
                .iter()
                .map(|(e, w)| (tm.time(*e as f64), w.row(j).transpose()))
                .collect();
            let rates: Vec<f64> = fit_decay_rates(&samples, &mu, &identity)
                .iter()
                .filter(|m| m.initial_amplitude > 1e-4)
                .map(|m| m.slope.map_or(f64::INFINITY, |s| -s))
                .collect();
            let hi = rates.iter().copied().fold(f64::MIN, f64::max);
            let lo = rates.iter().copied().fold(f64::MAX, f64::min);
            worst_base = worst_base.max((hi - lo) / lo);
        }
    }
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(10));
    outcome(
        worst_dual <= 0.1 && worst_base <= 0.05 && fitted > 0 && fast,
        format!(
            "{fitted} dual modes, max |rate − σ²|/σ² {worst_dual:.2e}; max base rate spread {worst_base:.2e}; {time}"
        ),
    )
}

// 5

fn subspace_confinement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let x = DataMatrix::new(random(10, 4, &mut rng) * 2.0).unwrap();

    let mut cfg = TrainConfig::new(ModelKind::Vcl);
    cfg.k = 3;
    cfg.lambda = 0.0;
    cfg.learning_rate = 0.05;
    cfg.epochs = 400;
    let layer = VclLayer::glorot(cfg.k, x.d(), 5);
    let (_, trace) = train_model(Model::Vcl(layer), &x, &cfg).unwrap();
    let p_final = PrototypeSet::new(trace.final_record.prototypes.clone()).unwrap();
    let a = assign(&x, &p_final).unwrap();
    let alive: Vec<usize> = (0..cfg.k).filter(|&j| a.counts[j] > 0).collect();
    let mean_residual = |p: &DMatrix<f64>| {
        let cols: Vec<DVector<f64>> = alive.iter().map(|&j| p.column(j).into_owned()).collect();
        let r = subspace_residuals(&cols, &x, Subspace::RangeX).unwrap();
        r.residual_norms.iter().sum::<f64>() / cols.len() as f64
    };
    let initial = mean_residual(&trace.records[0].prototypes);
    let last = mean_residual(&trace.final_record.prototypes);
    let vcl_ok = !alive.is_empty() && last <= 1e-3 * initial;

    let mut cfg = TrainConfig::new(ModelKind::Dcl);
    cfg.k = 3;
    cfg.epochs = 400;
    cfg.record_every = 1;
    let mut layer = DclLayer::glorot(cfg.k, x.n(), 5, false);
    let mut worst = 0.0f64;
    for _ in 0..cfg.epochs {
        let p = dcl_forward(&layer, &x).unwrap();
        let a = assign(&x, &p).unwrap();
        let g = grad_dcl(&x, &layer, &a, cfg.lambda).unwrap();
        layer.weights -= &g.weights * cfg.learning_rate;
        let rows: Vec<DVector<f64>> = (0..cfg.k).map(|j| layer.weights.row(j).transpose()).collect();
        let r = subspace_residuals(&rows, &x, Subspace::RangeXt).unwrap();
        worst = worst.max(r.residual_norms.iter().copied().fold(0.0, f64::max));
    }
    outcome(
        vcl_ok && worst <= 1e-8,
        format!(
            "VCL residual {last:.2e} vs initial {initial:.2e} ({} prototypes own samples); max DCL row-space residual {worst:.1e}",
            alive.len()
        ),
    )
}

// 6

struct TopologyRun {
    q_final: f64,
    q50: f64,
    valid: f64,
    edge: f64,
    components: usize,
}

fn topology_runs(kind: GeneratorKind, model: ModelKind) -> Vec<TopologyRun> {
    let ds = normalize(&GeneratorSpec::planar(kind, 500, 0).generate().unwrap()).unwrap();
    let cfg = TrainConfig::new(model);
    run_seeds(&ds, &cfg, 10)
        .unwrap()
        .iter()
        .map(|run| {
            let (_, edges) = final_topology(&run.model, &ds.x).unwrap();
            let f = &run.trace.final_record;
            TopologyRun {
                q_final: f.quantization,
                q50: run.trace.at(50).unwrap().quantization,
                valid: f.valid_count as f64,
                edge: f.edge_norm,
                components: edges.components().len(),
            }
        })
        .collect()
}

fn topology_reproduction() -> Vec<(String, Outcome)> {
    let start = Instant::now();
    let kinds = [GeneratorKind::Spiral, GeneratorKind::Moons, GeneratorKind::Circles];
    let mut a = (true, Vec::new());
    let mut b = (true, Vec::new());
    let mut c = (true, Vec::new());
    let mut d = (true, Vec::new());
    let mut e = (true, String::new());
    for kind in kinds {
        let v = topology_runs(kind, ModelKind::Vcl);
        let w = topology_runs(kind, ModelKind::Dcl);
        let med = |runs: &[TopologyRun], f: fn(&TopologyRun) -> f64| median(runs.iter().map(f).collect());
        let (qv, qd) = (med(&v, |r| r.q_final), med(&w, |r| r.q_final));
        let gap = (qv - qd).abs() / qv.max(qd);
        a.0 &= gap <= 0.25;
        a.1.push(format!(
            "{}: VCL {qv:.3} DCL {qd:.3} gap {:.0}%",
            kind.name(),
            100.0 * gap
        ));
        let (q50v, q50d) = (med(&v, |r| r.q50), med(&w, |r| r.q50));
        b.0 &= q50d < q50v;
        b.1.push(format!("{}: DCL {q50d:.3} VCL {q50v:.3}", kind.name()));
        let (vv, vd) = (med(&v, |r| r.valid), med(&w, |r| r.valid));
        c.0 &= vd >= vv;
        c.1.push(format!("{}: DCL {vd} VCL {vv}", kind.name()));
        let (ev, ed) = (med(&v, |r| r.edge), med(&w, |r| r.edge));
        d.0 &= ev >= ed;
        d.1.push(format!("{}: VCL {ev:.2} DCL {ed:.2}", kind.name()));
        if kind == GeneratorKind::Circles {
            let split = w.iter().filter(|r| r.components >= 2).count();
            let counts: Vec<String> = w.iter().map(|r| r.components.to_string()).collect();
            e = (
                split >= 7,
                format!("{split}/10 seeds with ≥ 2 components (per seed: {})", counts.join(",")),
            );
        }
    }
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(600));
    vec![
        ("6a final Q within 25%".into(), outcome(a.0, a.1.join("; "))),
        ("6b DCL faster at epoch 50".into(), outcome(b.0, b.1.join("; "))),
        (
            "6c DCL keeps more valid prototypes".into(),
            outcome(c.0, c.1.join("; ")),
        ),
        ("6d VCL edge norm not smaller".into(), outcome(d.0, d.1.join("; "))),
        ("6e Circles splits into components".into(), outcome(e.0, e.1)),
        ("6 runtime".into(), outcome(fast, time)),
    ]
}

// 7

fn highdim_sweep() -> Outcome {
    let start = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let args = HighdimArgs {
        features: Some(vec![1000, 2000]),
        n: Some(100),
        clusters: None,
        seed: None,
        run: RunArgs {
            k: Some(10),
            reps: Some(10),
            ..RunArgs::default()
        },
        rates: ModelRates::default(),
        models: None,
        out: out.path().to_path_buf(),
    };
    let rows = highdim(&Settings::default(), &args).unwrap();
    let acc = |model: &str, nf: usize| {
        rows.iter()
            .find(|r| r.model == model && r.n_features == nf)
            .map(|r| r.mean_accuracy)
            .unwrap()
    };
    let (d1, d2) = (acc("dcl", 1000), acc("dcl", 2000));
    let (v2, deep2) = (acc("vcl", 2000), acc("deep_dcl", 2000));
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(1200));
    outcome(
        d1 >= 0.9 && d2 >= 0.9 && d2 >= v2 && deep2 + 0.05 >= d2 && fast,
        format!("DCL {d1:.3} / {d2:.3} at 1000 / 2000 features; VCL {v2:.3} and deep {deep2:.3} at 2000; {time}"),
    )
}

// 8

fn whitened_duality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8000);
    let q = random(8, 8, &mut rng).qr().q();
    let x = DataMatrix::new(q.rows(0, 3).into_owned()).unwrap();
    let k = 3;
    let omega0 = DclLayer::new(random(k, 8, &mut rng), None).unwrap();
    let p0 = dcl_forward(&omega0, &x).unwrap();
    let a = assign(&x, &p0).unwrap();
    let w0 = VclLayer::new(p0.as_matrix().transpose()).unwrap();
    let nj = (0..k).map(|j| a.counts[j]).max().unwrap() as f64;
    let lr = 0.25 * 8.0 / nj;
    let steps = 4000;
    let (dual, dual_path) = frozen_dual_descent(&x, omega0, &a, 0.0, lr, steps, 100).unwrap();
    let (base, base_path) = frozen_base_descent(&x, w0, &a, 0.0, lr, steps, 100);
    let gap = |om: &DMatrix<f64>, w: &DMatrix<f64>| {
        (0..k)
            .map(|j| (x.as_matrix() * om.row(j).transpose() - w.row(j).transpose()).norm())
            .fold(0.0f64, f64::max)
    };
    let last = gap(&dual.weights, &base.weights);
    let along = dual_path
        .iter()
        .zip(&base_path)
        .map(|((_, o), (_, w))| gap(o, w))
        .fold(0.0f64, f64::max);
    let (fast, time) = within_time(start.elapsed(), Duration::from_secs(10));
    outcome(
        last <= 1e-3 && fast,
        format!("final max ‖XΩⱼ − W₁ⱼ‖ {last:.1e}, max along trajectory {along:.1e}; {time}"),
    )
}

// 9

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dualcl");
    let commands: Vec<(&str, Vec<&str>)> = vec![
        (
            "generate",
            vec!["generate", "--kind", "spiral", "--n", "300", "--out", "OUT/data.csv"],
        ),
        (
            "train",
            vec![
                "train", "--kind", "moons", "--n", "200", "--model", "dcl", "--epochs", "60", "--reps", "3", "--out",
                "OUT",
            ],
        ),
        (
            "compare",
            vec![
                "compare",
                "--kind",
                "circles",
                "--n",
                "200",
                "--epochs",
                "60",
                "--reps",
                "3",
                "--models",
                "vcl,dcl,deep-dcl",
                "--out",
                "OUT",
            ],
        ),
        (
            "highdim",
            vec![
                "highdim",
                "--features",
                "40,80",
                "--n",
                "40",
                "--reps",
                "2",
                "--epochs",
                "40",
                "--out",
                "OUT",
            ],
        ),
        (
            "grid-search",
            vec![
                "grid-search",
                "--kind",
                "moons",
                "--n",
                "150",
                "--epochs",
                "40",
                "--lrs",
                "0.0005,0.001",
                "--ks",
                "8,16",
                "--reps",
                "2",
                "--out",
                "OUT",
            ],
        ),
    ];
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for (name, args) in &commands {
        let runs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let out = dir.path().join("out");
                let args: Vec<String> = args.iter().map(|a| a.replace("OUT", out.to_str().unwrap())).collect();
                let status = Command::new(bin).args(&args).output().unwrap();
                assert!(
                    status.status.success(),
                    "{name}: {}",
                    String::from_utf8_lossy(&status.stderr)
                );
                if *name == "train" {
                    let analyze = Command::new(bin)
                        .args(["analyze", "--bundle", out.to_str().unwrap()])
                        .output()
                        .unwrap();
                    assert!(
                        analyze.status.success(),
                        "analyze: {}",
                        String::from_utf8_lossy(&analyze.stderr)
                    );
                }
                csv_files(&out)
            })
            .collect();
        compared += runs[0].len();
        if runs[0].is_empty() || runs[0] != runs[1] {
            mismatched.push(*name);
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{compared} CSV files compared across 5 commands; mismatched: {mismatched:?}"),
    )
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut results: Vec<(String, Outcome)> = Vec::new();
    let mut run = |id: &str, f: &dyn Fn() -> Vec<(String, Outcome)>| {
        if filter.as_ref().is_some_and(|s| !id.contains(s.as_str())) {
            return;
        }
        for (name, o) in f() {
            println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            results.push((name, o));
        }
    };
    run("1", &|| vec![("1 edm identity".into(), edm_identity())]);
    run("2", &|| vec![("2 gradient oracles".into(), gradient_oracles())]);
    run("3", &|| vec![("3 critical points".into(), critical_points())]);
    run("4", &|| vec![("4 decay rates".into(), decay_rates())]);
    run("5", &|| vec![("5 subspace confinement".into(), subspace_confinement())]);
    run("6", &topology_reproduction);
    run("7", &|| vec![("7 high-dimensional sweep".into(), highdim_sweep())]);
    run("8", &|| vec![("8 duality under whitening".into(), whitened_duality())]);
    run("9", &|| vec![("9 determinism".into(), determinism())]);
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
