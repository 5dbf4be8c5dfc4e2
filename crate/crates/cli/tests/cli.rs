use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn randpoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randpoly"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const DISK: &str = r#"{"body": {"kind": "ball", "dim": 2}, "density": "uniform",
    "N_list": [20, 40, 80, 160], "reps": 4, "mc_budget": 1000, "seed": 5}"#;

#[test]
fn sweep_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DISK);
    let out = dir.path().join("a.csv");
    let out_s = out.to_str().unwrap();
    let r = randpoly(&["sweep", "--config", &cfg, "--out", out_s]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# seed=5\nn,body,density,N,reps,symdiff_mean"));
    assert_eq!(text.lines().count(), 6);

    let again = dir.path().join("b.csv");
    assert!(randpoly(&["sweep", "--config", &cfg, "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let reseeded = dir.path().join("c.csv");
    let r = randpoly(&["sweep", "--config", &cfg, "--out", reseeded.to_str().unwrap(), "--seed", "6"]);
    assert!(r.status.success());
    assert!(fs::read_to_string(&reseeded).unwrap().starts_with("# seed=6\n"));

    let fit = randpoly(&["fit", "--in", out_s]);
    assert!(fit.status.success());
    let text = String::from_utf8(fit.stdout).unwrap();
    let line = text.lines().nth(1).unwrap();
    let slope: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
    assert!((slope + 2.0).abs() < 0.5, "{line}");
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"body": {"kind": "ball", "dim": 2}, "density": "uniform", "N_list": [10], "reps": 1, "bogus": 0}"#);
    let out = dir.path().join("x.csv");
    let r = randpoly(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let r = randpoly(&["fit", "--in", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let cfg = write_config(dir.path(), DISK);
    let r = randpoly(&["sweep", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn functionals_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DISK);
    let r = randpoly(&["functionals", "--config", &cfg]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.starts_with("quantity,parameter,value,error\n"));
    assert!(text.lines().any(|l| l.starts_with("sw_constant,2,0.5")));
    assert!(text.lines().any(|l| l.starts_with("as_p,inf,")));
}

#[test]
fn sample_and_hull_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"body": {"kind": "ellipsoid", "semiaxes": [2, 1, 1]}, "density": "affine", "N_list": [10], "reps": 1}"#,
    );
    let pts = dir.path().join("pts.csv");
    let hull = dir.path().join("hull.json");
    let r = randpoly(&[
        "sample", "--config", &cfg, "--count", "50", "--out", pts.to_str().unwrap(),
        "--dump-hull", hull.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&pts).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.starts_with("x0,x1,x2,normal0,normal1,normal2,curvature,support\n"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&hull).unwrap()).unwrap();
    assert_eq!(json["dimension"], 3);
    assert_eq!(json["vertices"].as_array().unwrap().len(), 50);
}

#[test]
fn compare_two_densities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"body": {"kind": "ellipsoid", "semiaxes": [2, 1]}, "density": "uniform",
            "densities": ["uniform", "affine"], "N_list": [50, 100], "reps": 3, "mc_budget": 1000}"#,
    );
    let r = randpoly(&["compare", "--config", &cfg]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("affine"));
}

#[test]
fn quick_validation_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let r = randpoly(&["validate", "--quick", "--report", report.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert!(json["checks"].as_array().unwrap().len() >= 10);
}
