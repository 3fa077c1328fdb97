use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mvperf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvperf"))
        .args(args)
        .env("MVPERF_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, dims: &str, noise: &str, seed: &str) -> String {
    let out = mvperf(&["gen", "--out", s(dir), "--n", "60", "--dims", dims, "--margin", "2", "--noise", noise, "--seed", seed]);
    assert!(out.status.success(), "{out:?}");
    dir.join("manifest.toml").to_str().unwrap().to_string()
}

fn train(data: &str, model: &Path, measure: &str) -> Output {
    mvperf(&[
        "train", "--data", data, "--measure", measure, "--c1", "10", "--c2", "1", "--max-iter", "50",
        "--eps", "1e-4", "--out", s(model),
    ])
}

#[test]
fn separable_data_trains_to_zero_loss() {
    let tmp = tempfile::tempdir().unwrap();
    let data = gen(&tmp.path().join("d"), "3,2", "0", "7");
    let model = tmp.path().join("m.model");
    let out = train(&data, &model, "err");
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).starts_with("status converged"));

    let log = fs::read_to_string(tmp.path().join("m.model.log.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("t,xi,violation,primal"));
    assert!(lines.next().is_some());

    let out = mvperf(&["eval", "--data", &data, "--model", s(&model), "--measure", "err"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("loss 0.0\n"), "{}", stdout(&out));

    let pred = tmp.path().join("pred.txt");
    let out = mvperf(&["predict", "--data", &data, "--model", s(&model), "--out", s(&pred)]);
    assert!(out.status.success());
    let labels = fs::read_to_string(tmp.path().join("d/labels.txt")).unwrap();
    assert_eq!(fs::read_to_string(&pred).unwrap(), labels);
}

#[test]
fn dimension_mismatch_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let data = gen(&tmp.path().join("a"), "3,2", "0", "1");
    let other = gen(&tmp.path().join("b"), "4,2", "0", "1");
    let model = tmp.path().join("m.model");
    assert!(train(&data, &model, "f1").status.success());
    let out = mvperf(&["predict", "--data", &other, "--model", s(&model), "--out", s(&tmp.path().join("p"))]);
    assert_eq!(out.status.code(), Some(5));
    let out = mvperf(&["eval", "--data", &other, "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = gen(&tmp.path().join("d"), "2,2", "0.5", "3");
    let model = tmp.path().join("m.model");

    assert_eq!(train(&data, &model, "bogus").status.code(), Some(2));
    assert_eq!(train(&data, &model, "prec@0").status.code(), Some(2));
    assert_eq!(train(&data, &model, "prec@61").status.code(), Some(2));
    assert_eq!(
        train(s(&tmp.path().join("missing.toml")), &model, "err").status.code(),
        Some(3)
    );

    fs::write(tmp.path().join("d/labels.txt"), "+1\n0\n").unwrap();
    assert_eq!(train(&data, &model, "err").status.code(), Some(4));

    let bad_model = tmp.path().join("bad.model");
    fs::write(&bad_model, "not a model\n").unwrap();
    let out = mvperf(&["predict", "--data", &data, "--model", s(&bad_model), "--out", s(&tmp.path().join("p"))]);
    assert_eq!(out.status.code(), Some(4));

    let out = mvperf(&["verify", "--suite", "nope"]);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_mvperf"))
        .args(["verify", "--suite", "qp", "--count", "2"])
        .env("MVPERF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_mvperf"))
        .args(["verify", "--suite", "qp", "--count", "2"])
        .env("MVPERF_THREADS", "0")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn help_documents_exit_codes() {
    let out = mvperf(&["train", "--help"]);
    let text = stdout(&out);
    for line in ["2  usage", "3  I/O", "4  malformed", "5  dimension", "6  solver", "7  verification"] {
        assert!(text.contains(line), "missing {line:?}");
    }
    assert!(text.contains("MVPERF_THREADS"));
}

#[test]
fn verify_reports_pass_counts() {
    let out = mvperf(&["verify", "--suite", "constraint-search"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "pass constraint-search: 200/200\n");
    let out = mvperf(&["verify", "--suite", "all", "--count", "5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 5);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["one", "two"] {
        let dir = tmp.path().join(run);
        let data = gen(&dir.join("d"), "4,3", "0.8", "11");
        let model = dir.join("m.model");
        let out = train(&data, &model, "prbep");
        assert!(out.status.success(), "{out:?}");
        let pred = dir.join("p.txt");
        assert!(mvperf(&["predict", "--data", &data, "--model", s(&model), "--out", s(&pred)]).status.success());
        let eval = mvperf(&["eval", "--data", &data, "--model", s(&model)]);
        outputs.push((
            fs::read(dir.join("d/view1.svm")).unwrap(),
            fs::read(&model).unwrap(),
            fs::read(dir.join("m.model.log.csv")).unwrap(),
            fs::read(&pred).unwrap(),
            stdout(&out),
            stdout(&eval),
        ));
    }
    assert!(outputs[0] == outputs[1]);
}
