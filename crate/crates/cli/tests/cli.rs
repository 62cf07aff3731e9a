use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn manelab(args: &[&str], out: &Path, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_manelab"));
    cmd.args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MANELAB_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_ENTROPY: &str = "[system]\npoly = -1,6,-5,1\npower = 2\n\
                             [entropy]\neps = 0.2,0.3\nn = 1,2,3\nsamples = 3000\n";

#[test]
fn spectral_summary_on_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = manelab(
        &["spectral", "--poly", "-1,6,-5,1", "--power", "2"],
        &out,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let eig: Vec<f64> = v["results"]["spectral"]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (got, want) in eig.iter().zip([0.03922866, 2.41789479, 10.54287655]) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
    let h = v["results"]["spectral"]["entropy"].as_f64().unwrap();
    assert!((h - 3.23841).abs() < 1e-4);
    assert_eq!(
        v["constants"]["entropy"],
        v["results"]["spectral"]["entropy"]
    );
    for key in ["system", "constants", "results", "timings"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let on_disk: Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk["results"], v["results"]);
}

#[test]
fn entropy_csv_is_reproducible_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_ENTROPY);
    let runs: Vec<Vec<u8>> = [("1", "a"), ("1", "b"), ("3", "c")]
        .iter()
        .map(|(threads, name)| {
            let out = tmp.path().join(name);
            let o = manelab(
                &["entropy", "--config", &cfg, "--seed", "42", "--plot"],
                &out,
                &[("MANELAB_THREADS", threads)],
            );
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            assert!(out.join("entropy.gp").exists());
            assert!(out.join("entropy_linear.csv").exists());
            std::fs::read(out.join("entropy.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert!(text.starts_with("eps,n,count\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    let other = tmp.path().join("d");
    assert!(
        manelab(&["entropy", "--config", &cfg, "--seed", "43"], &other, &[])
            .status
            .success()
    );
    assert_ne!(std::fs::read(other.join("entropy.csv")).unwrap(), runs[0]);
}

#[test]
fn missing_system_section_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[rng]\nseed = 1\n");
    let out = tmp.path().join("out");
    let o = manelab(&["spectral", "--config", &cfg], &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[system]"));
    assert!(!out.exists());
}

#[test]
fn bad_overrides_and_environment_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        manelab(&["spectral", "--power", "0"], &out, &[])
            .status
            .code(),
        Some(2)
    );
    let o = manelab(&["spectral"], &out, &[("MANELAB_THREADS", "0")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MANELAB_THREADS"));
    assert_eq!(manelab(&["nonsense"], &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn inadmissible_polynomial_is_a_numeric_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // x^2 - x - 1 has a negative root
    let o = manelab(
        &["spectral", "--poly", "-1,-1,1", "--power", "1"],
        &out,
        &[],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("manelab: spectral:"));
    assert!(!out.exists());
}

#[test]
fn violated_inequality_is_a_numeric_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[system]\n[mane]\nrho = 0.15\nb = 0.3\n");
    let out = tmp.path().join("out");
    let o = manelab(&["build", "--config", &cfg], &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mane:") && err.contains("inequality"), "{err}");
    assert!(!out.exists());
}

#[test]
fn oversized_deformation_leaves_the_shadowing_regime() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[system]\n[mane]\ntau_fraction = 1\n[shadow]\ndefect_samples = 4\n",
    );
    let out = tmp.path().join("out");
    let o = manelab(&["pi", "--config", &cfg], &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("semiconj:") && err.contains("shadowing regime"),
        "{err}"
    );
    assert!(!out.exists());
}
