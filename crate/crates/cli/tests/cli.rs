use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn tfprop(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_tfprop"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&o.stdout).to_string() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().unwrap_or(-1), text)
}

fn report(out: &Path, experiment: &str) -> Value {
    let text = std::fs::read_to_string(out.join(experiment).join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn stft_of_gaussian_peaks_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = tfprop(&["stft"], dir.path());
    assert_eq!(code, 0);
    let r = report(dir.path(), "stft");
    assert_eq!(r["status"], "pass");
    let peak = &r["results"]["peak"];
    assert!(peak["x"].as_f64().unwrap().abs() < 0.05 && peak["xi"].as_f64().unwrap().abs() < 0.05);
    for f in ["signal.csv", "coefficients.csv", "ridge.csv"] {
        assert!(dir.path().join("stft").join(f).exists(), "{f}");
    }
}

#[test]
fn chirp_ridge_follows_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = tfprop(&["stft", "--override", "signal.kind=chirp", "--override", "signal.c=1"], dir.path());
    assert_eq!(code, 0);
    let slope = report(dir.path(), "stft")["results"]["ridge_slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.02, "{slope}");
}

#[test]
fn config_file_and_experiment_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("atom.json");
    std::fs::write(&cfg, r#"{"experiment": "atom", "signal": {"kind": "gabor_atom", "x": 2.0, "xi": 3.0}}"#).unwrap();
    let (code, _) = tfprop(&["stft", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    let peak = &report(dir.path(), "atom")["results"]["peak"];
    let cell = (512f64).sqrt().recip();
    assert!((peak["x"].as_f64().unwrap() - 2.0).abs() <= cell);
    assert!((peak["xi"].as_f64().unwrap() - 3.0).abs() <= cell);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tfprop(&["stft", "--override", "grid.size=3"], dir.path()).0, 2);
    assert_eq!(tfprop(&["stft", "--override", "grid.n=abc"], dir.path()).0, 2);
    assert_eq!(tfprop(&["stft", "--config", "/nonexistent/config.json"], dir.path()).0, 2);
    let (code, msg) = tfprop(
        &["propagate", "--override", "propagator.hamiltonian=perturbed_oscillator", "--override", "propagator.method=metaplectic"],
        dir.path(),
    );
    assert_eq!(code, 2);
    assert!(msg.contains("quadratic"), "{msg}");
}

#[test]
fn failed_certificate_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = tfprop(&["frame", "--override", "frame.alpha=2", "--override", "frame.beta=1"], dir.path());
    assert_eq!(code, 1);
    let r = report(dir.path(), "frame");
    assert_eq!(r["results"]["frame"], false);
    assert_eq!(r["passed"], false);
}

#[test]
fn frame_at_half_density() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tfprop(&["frame"], dir.path()).0, 0);
    let r = report(dir.path(), "frame");
    assert_eq!(r["results"]["frame"], true);
    assert!(r["results"]["reconstruction"]["relative_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn constant_symbol_reports_the_class_cap() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = tfprop(&["certify", "--override", r#"symbol.spec={"kind":"constant","value":1}"#], dir.path());
    assert_eq!(code, 0);
    let r = report(dir.path(), "certify");
    assert_eq!(r["results"]["class_cap"], 10.0);
}

#[test]
fn free_particle_center_moves_along_the_shear() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tfprop(&["propagate", "--override", "propagator.t=0.3"], dir.path()).0, 0);
    let c = &report(dir.path(), "propagate")["results"]["center"];
    let x0 = c["initial"]["x"].as_f64().unwrap();
    let want = x0 + 4.0 * std::f64::consts::PI * 0.3 * 0.5;
    assert!((c["predicted"]["x"].as_f64().unwrap() - want).abs() < 1e-12);
    assert_eq!(c["passed"], true);
}

#[test]
fn example_two_refuses_weights_outside_the_range() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = tfprop(&["example2", "--override", "wavefront.r=0.6"], dir.path());
    assert_eq!(code, 2);
    let r = report(dir.path(), "example2");
    assert_eq!(r["status"], "refused");
    assert!(r["results"]["refused"][0].as_str().unwrap().contains("mu/2 - 1"));
}

#[test]
fn example_one_at_the_caustic() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = tfprop(&["example1", "--override", "propagator.t=1.5707963267948966"], dir.path());
    assert_eq!(code, 0);
    let r = report(dir.path(), "example1");
    assert!(r["results"]["gabor_matrix"]["sup_error"].as_f64().unwrap() < 1e-5);
    assert_eq!(r["results"]["evolution"]["method"], "metaplectic");
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["wavefront", "--override", "signal.kind=chirp", "--override", "signal.c=1"];
    assert_eq!(tfprop(&args, a.path()).0, 0);
    assert_eq!(tfprop(&args, b.path()).0, 0);
    for f in ["report.json", "sectors.csv"] {
        let x = std::fs::read(a.path().join("wavefront").join(f)).unwrap();
        let y = std::fs::read(b.path().join("wavefront").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}
