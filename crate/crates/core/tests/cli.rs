use std::path::PathBuf;
use std::process::Command;

fn gefs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gefs"))
}

fn iris() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv")
}

#[test]
fn train_convert_predict() {
    let dir = tempfile::tempdir().unwrap();
    let forest = dir.path().join("forest.json");
    let model = dir.path().join("model.json");
    let st = gefs()
        .args(["train", "--trees", "10", "--no-convert", "--out"])
        .arg(&forest)
        .arg("--data")
        .arg(iris())
        .status()
        .unwrap();
    assert!(st.success());
    let st = gefs()
        .args(["convert", "--mode", "gefplus", "--model"])
        .arg(&forest)
        .arg("--data")
        .arg(iris())
        .arg("--out")
        .arg(&model)
        .status()
        .unwrap();
    assert!(st.success());
    let out = gefs()
        .args(["predict", "--rate", "0.3", "--model"])
        .arg(&model)
        .arg("--data")
        .arg(iris())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 151);
    assert!(text.starts_with("row\tpredicted\tp_setosa"));
}

#[test]
fn bench_missing_from_flags() {
    let out = gefs()
        .args(["bench-missing", "--trees", "5", "--rate", "0.3", "--folds", "3", "--repeats", "1", "--data"])
        .arg(iris())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    // header plus one row per method
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn missing_model_file_is_an_error() {
    let out = gefs()
        .args(["predict", "--model", "/nonexistent/model.json", "--data"])
        .arg(iris())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
