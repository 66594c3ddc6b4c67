use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arucount"))
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("SOURCE_DATE_EPOCH")
        .env_remove("ARUCOUNT_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const SHORT: [&str; 8] = ["--chains", "2", "--iters", "500", "--burn", "100", "--adapt", "100"];

#[test]
fn simulate_writes_dataset_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&["simulate", "--scenario", "grid:17", "--seed", "42", "--out", path(dir)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for f in ["sites.csv", "acoustic.csv", "validation.csv", "counts.csv", "truth.json", "manifest.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
        if f.ends_with(".csv") {
            let text = String::from_utf8(x).unwrap();
            assert!(!text.contains('\r') && !text.lines().any(|l| l.ends_with(' ')), "{f} not canonical");
        }
    }
    let m = manifest(&a);
    assert_eq!(m["config"]["scenario"], "grid:17");
    assert_eq!(m["config_sources"]["seed"], "flag");
    assert_eq!(m["outputs"].as_object().unwrap().len(), 5);
}

#[test]
fn inline_overrides_are_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--lambda", "0.5", "--sites", "50", "--visits", "4", "--out", path(tmp.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let truth: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["spec"]["abundance"]["lambda"], 0.5);
    let sites = std::fs::read_to_string(tmp.path().join("sites.csv")).unwrap();
    assert_eq!(sites.lines().count(), 51);
    let counts = std::fs::read_to_string(tmp.path().join("counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 1 + 50 * 4);
}

#[test]
fn invalid_fraction_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--validation-fraction", "1.5", "--out", path(tmp.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("validation_fraction out of range"), "{}", stderr(&out));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.toml");
    std::fs::write(&cfg, "scenario = \"custom\"\nsites = 8\nseed = 5\nlambda = 2.0\n").unwrap();
    let dir = tmp.path().join("d");
    let out = run(&["simulate", "--config", path(&cfg), "--seed", "6", "--out", path(&dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = manifest(&dir);
    assert_eq!(m["config"]["seed"], 6);
    assert_eq!(m["config_sources"]["seed"], "flag");
    assert_eq!(m["config_sources"]["sites"], "file");
    assert_eq!(m["config_sources"]["validation_fraction"], serde_json::Value::Null);
    assert!(m["inputs"]["config:sim.toml"].is_string());

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"sights": 3}"#).unwrap();
    let out = run(&["simulate", "--config", path(&bad), "--out", path(&dir)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown field `sights`"), "{}", stderr(&out));
}

#[test]
fn fit_round_trips_simulated_files() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = run(&["simulate", "--sites", "12", "--seed", "3", "--out", path(&data)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let fits: Vec<_> = (0..2).map(|i| tmp.path().join(format!("fit{i}"))).collect();
    for dir in &fits {
        let mut args = vec!["fit", "--data", path(&data), "--variant", "ACV", "--out", path(dir), "--allow-nonconverged"];
        args.extend(SHORT);
        let out = run(&args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for f in ["draws.csv", "summary.csv", "manifest.json"] {
        assert_eq!(std::fs::read(fits[0].join(f)).unwrap(), std::fs::read(fits[1].join(f)).unwrap(), "{f}");
    }
    let summary = std::fs::read_to_string(fits[0].join("summary.csv")).unwrap();
    assert!(summary.starts_with("parameter,median,ci_lower,ci_upper,ci_width,rhat,ess\n"));
    for p in ["alpha0", "alpha1", "delta", "omega", "p", "lambda", "N_total"] {
        assert!(summary.lines().any(|l| l.starts_with(&format!("{p},"))), "{p}");
    }
    let draws = std::fs::read_to_string(fits[0].join("draws.csv")).unwrap();
    assert!(draws.starts_with("chain,iteration,parameter,value\n"));
    // 2 chains x 150 draws x (6 scalars + log posterior)
    assert_eq!(draws.lines().count(), 1 + 2 * 150 * 7);
    let m = manifest(&fits[0]);
    let digest = m["inputs"]["counts.csv"].as_str().unwrap().to_string();
    let sim = manifest(&data);
    assert_eq!(sim["outputs"]["counts.csv"].as_str().unwrap(), digest);
}

#[test]
fn fit_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(code(&run(&["simulate", "--sites", "10", "--out", path(&data)])), 0);

    // An unreachable R-hat threshold forces a convergence failure; outputs
    // are still written.
    let fit = tmp.path().join("fit");
    let mut args = vec!["fit", "--data", path(&data), "--variant", "C", "--out", path(&fit), "--rhat-threshold", "1.0000001"];
    args.extend(SHORT);
    let out = run(&args);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("not converged"));
    assert!(fit.join("summary.csv").exists());
    args.push("--allow-nonconverged");
    assert_eq!(code(&run(&args)), 0);

    std::fs::remove_file(data.join("validation.csv")).unwrap();
    let out = run(&["fit", "--data", path(&data), "--variant", "AV", "--out", path(&fit)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("requires validation block"), "{}", stderr(&out));

    let out = run(&["fit", "--data", path(&tmp.path().join("missing")), "--variant", "C", "--out", path(&fit)]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));

    let out = run(&["fit", "--data", path(&data), "--variant", "XYZ", "--out", path(&fit)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_rows_are_located() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(code(&run(&["simulate", "--sites", "6", "--out", path(&data)])), 0);
    let counts = std::fs::read_to_string(data.join("counts.csv")).unwrap();
    let mut lines: Vec<String> = counts.lines().map(String::from).collect();
    lines[3] = "0,2,x".into();
    std::fs::write(data.join("counts.csv"), lines.join("\n") + "\n").unwrap();
    let out = run(&["fit", "--data", path(&data), "--variant", "C", "--out", path(&tmp.path().join("f"))]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("counts.csv") && err.contains("line 4") && err.contains("`c`"), "{err}");
}

#[test]
fn study_resumes_to_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (full, resumed) = (tmp.path().join("full"), tmp.path().join("resumed"));
    let mut base = vec!["study", "grid", "--filter", "index=4", "--replicates", "2", "--variants", "C,AC"];
    base.extend(SHORT);
    let with_out = |dir: &Path, extra: &[&str]| {
        let mut a = base.clone();
        a.extend(["--out", path(dir)]);
        a.extend(extra);
        run(&a)
    };
    assert_eq!(code(&with_out(&full, &[])), 0);

    // Replicate 1 only, then the rest with --resume.
    let mut first = base.clone();
    first[5] = "1";
    first.extend(["--out", path(&resumed)]);
    assert_eq!(code(&run(&first)), 0);
    let out = with_out(&resumed, &["--resume"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["records.csv", "aggregate.csv"] {
        assert_eq!(std::fs::read(full.join(f)).unwrap(), std::fs::read(resumed.join(f)).unwrap(), "{f}");
    }
    let agg = std::fs::read_to_string(full.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 3);
    assert!(agg.lines().skip(1).all(|l| l.starts_with("grid:4,50,R=I,5,1.2,0.5,0.27,")), "{agg}");
    assert_eq!(manifest(&full)["notes"]["variants_paired"], true);
}

#[test]
fn sweep_emits_one_row_per_size() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["study", "pointcount-sweep", "--replicates", "1", "--sizes", "5,10,50", "--out", path(tmp.path())];
    args.extend(SHORT);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = std::fs::read_to_string(tmp.path().join("aggregate.csv")).unwrap();
    let sizes: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(sizes, ["5", "10", "50"]);
    assert!(table.starts_with("point_counts,beta0_relative_bias,beta0_ci_width,beta1_relative_bias,beta1_ci_width,"));

    let out = run(&["study", "pointcount-sweep", "--sizes", "0", "--out", path(tmp.path())]);
    assert_eq!(code(&out), 2);
    let out = run(&["study", "grid", "--filter", "lambda=7", "--out", path(tmp.path())]);
    assert_eq!(code(&out), 2);
}
