use std::path::Path;
use std::process::{Command, Output};

fn dualcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualcl")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_svg(path: &Path) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(doc.root_element().tag_name().name(), "svg");
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn generate_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sub/moons.csv");
    let out = dualcl(&["generate", "--kind", "moons", "--n", "120", "--out", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 121);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["dataset"]["n"], 120);
    assert_eq!(side["dataset"]["d"], 2);
    assert!(side["singular_values"]["max"].as_f64().unwrap() >= side["singular_values"]["min"].as_f64().unwrap());
}

#[test]
fn train_then_analyze_produces_bundle_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("run");
    let out = dualcl(&[
        "train",
        "--kind",
        "spiral",
        "--n",
        "150",
        "--model",
        "vcl",
        "--epochs",
        "40",
        "--reps",
        "2",
        "--out",
        s(&b),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "config.json",
        "model.json",
        "trace.csv",
        "aggregate.csv",
        "trajectories.csv",
        "data.csv",
    ] {
        assert!(b.join(f).is_file(), "missing {f}");
    }
    for f in ["quantization.svg", "edge_norm.svg", "valid_prototypes.svg"] {
        assert_svg(&b.join(f));
    }
    let out = dualcl(&["analyze", "--bundle", s(&b), "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(b.join("analysis/analysis.json")).unwrap()).unwrap();
    assert!(report["singular_values"].is_array());
    assert_svg(&b.join("analysis/rates.svg"));
    assert_svg(&b.join("analysis/residuals.svg"));

    let out = dualcl(&["analyze", "--bundle", s(&b), "--seed", "7"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn compare_writes_tables_and_planar_plots() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("cmp");
    let out = dualcl(&[
        "compare",
        "--kind",
        "circles",
        "--n",
        "150",
        "--epochs",
        "30",
        "--reps",
        "2",
        "--models",
        "vcl,dcl,deep",
        "--out",
        s(&o),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        header(&o.join("comparison.csv")),
        "model,epoch,q_mean,q_sem,edge_mean,edge_sem,valid_mean,valid_sem"
    );
    assert_eq!(
        header(&o.join("final.csv")),
        "model,seed,quantization,edge_norm,valid_count,components,lonely"
    );
    assert_eq!(std::fs::read_to_string(o.join("final.csv")).unwrap().lines().count(), 7);
    for f in [
        "quantization.svg",
        "edge_norm.svg",
        "valid_prototypes.svg",
        "topology_vcl.svg",
        "topology_dcl.svg",
        "trajectories_vcl.svg",
        "trajectories_dcl.svg",
    ] {
        assert_svg(&o.join(f));
    }
    assert!(!o.join("topology_deep_dcl.svg").exists());
    for m in ["vcl", "dcl", "deep_dcl"] {
        assert!(o.join(m).join("trace.csv").is_file());
    }
    let out = dualcl(&["analyze", "--bundle", s(&o.join("deep_dcl"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn highdim_and_grid_search_tables() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("hd");
    let out = dualcl(&[
        "highdim",
        "--features",
        "30,60",
        "--n",
        "40",
        "--reps",
        "2",
        "--epochs",
        "20",
        "--out",
        s(&h),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(h.join("accuracy_vs_features.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert_svg(&h.join("accuracy.svg"));

    let g = dir.path().join("grid");
    let out = dualcl(&[
        "grid-search",
        "--kind",
        "moons",
        "--n",
        "100",
        "--epochs",
        "20",
        "--lrs",
        "0.0005,0.001",
        "--lambdas",
        "0,0.01",
        "--reps",
        "2",
        "--out",
        s(&g),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(g.join("grid.csv")).unwrap();
    let q: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(q.len(), 4);
    assert!(q.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("x");
    assert_eq!(code(&dualcl(&["train", "--no-such-flag"])), 2);
    assert_eq!(
        code(&dualcl(&["train", "--kind", "moons", "--k", "1", "--out", s(&o)])),
        2
    );
    assert_eq!(
        code(&dualcl(&["train", "--kind", "moons", "--jobs", "0", "--out", s(&o)])),
        2
    );
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&dualcl(&["train", "--data", s(&missing), "--out", s(&o)])), 3);
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "x0,x1\n1,2\n3\n").unwrap();
    assert_eq!(code(&dualcl(&["train", "--data", s(&ragged), "--out", s(&o)])), 3);
    let out = dualcl(&[
        "train",
        "--kind",
        "moons",
        "--n",
        "100",
        "--lr",
        "1e9",
        "--epochs",
        "20",
        "--out",
        s(&o),
    ]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# shared settings\nepochs = 15\nk = 6\nlr = 0.003\nkind = circles\n",
    )
    .unwrap();
    let o = dir.path().join("run");
    let out = dualcl(&["--config", s(&cfg), "train", "--n", "80", "--k", "5", "--out", s(&o)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(o.join("config.json")).unwrap()).unwrap();
    let text = config.to_string();
    assert!(text.contains("\"k\":5"), "{text}");
    assert!(text.contains("\"epochs\":15"), "{text}");
    assert!(text.contains("\"learning_rate\":0.003"), "{text}");
    assert!(text.contains("\"lambda\":0.01"), "{text}");
    assert!(text.contains("circles"), "{text}");

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(code(&dualcl(&["--config", s(&bad), "train", "--out", s(&o)])), 2);
}

#[test]
fn jobs_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<String> = ["1", "4"]
        .iter()
        .map(|j| {
            let o = dir.path().join(format!("j{j}"));
            let out = dualcl(&[
                "--jobs",
                j,
                "train",
                "--kind",
                "moons",
                "--n",
                "100",
                "--model",
                "dcl",
                "--epochs",
                "20",
                "--reps",
                "4",
                "--out",
                s(&o),
            ]);
            assert_eq!(code(&out), 0);
            std::fs::read_to_string(o.join("trace.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn sidecar_extremes_match_reloaded_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spiral.csv");
    assert_eq!(code(&dualcl(&["generate", "--kind", "spiral", "--n", "500", "--seed", "0", "--out", s(&csv)])), 0);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    let sv = dualcl::linalg::singular_values(&dualcl::datasets::load_csv(&csv).unwrap().x);
    let max = side["singular_values"]["max"].as_f64().unwrap();
    let min = side["singular_values"]["min"].as_f64().unwrap();
    assert!((sv.max() - max).abs() <= 1e-9 * max);
    assert!((sv.min() - min).abs() <= 1e-9 * max);
    assert_eq!(code(&dualcl(&["generate", "--kind", "torus", "--out", s(&csv)])), 2);
}

#[test]
fn analyze_is_repeatable_and_reports_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("frozen");
    let out = dualcl(&[
        "train",
        "--kind",
        "moons",
        "--n",
        "60",
        "--model",
        "dcl",
        "--k",
        "4",
        "--epochs",
        "200",
        "--lambda",
        "0",
        "--freeze-assignment",
        "--out",
        s(&b),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Vec<String> = (0..2)
        .map(|_| {
            assert_eq!(code(&dualcl(&["analyze", "--bundle", s(&b)])), 0);
            std::fs::read_to_string(b.join("analysis/analysis.json")).unwrap()
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_str(&reports[0]).unwrap();
    let fitted = report["rates"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|p| p["modes"].as_array().unwrap())
        .filter(|m| !m["fitted_rate"].is_null())
        .count();
    assert!(fitted > 0);

    std::fs::remove_file(b.join("trace.csv")).unwrap();
    let out = dualcl(&["analyze", "--bundle", s(&b)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace.csv"));
}
