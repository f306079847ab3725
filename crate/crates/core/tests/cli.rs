use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggregative"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const EV_RUN: &str = "[experiment]\nkind = \"ev\"\nm = 8\ntol = 1e-5\nseed = 3\noutput_dir = \"out\"\nverify_samples = 20\n";

#[test]
fn run_writes_outputs_and_verify_accepts_them() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), EV_RUN);
    let out = bin(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("converged = true"), "{stdout}");
    for f in ["equilibrium.csv", "duals.csv", "trace.csv", "report.csv"] {
        assert!(dir.path().join("out").join(f).is_file(), "{f} missing");
    }
    let eq = fs::read_to_string(dir.path().join("out/equilibrium.csv")).unwrap();
    assert_eq!(eq.lines().next(), Some("agent,component,value"));
    assert_eq!(eq.lines().count(), 1 + 8 * 24);

    let eq_path = dir.path().join("out/equilibrium.csv");
    let out = bin(&["verify", eq_path.to_str().unwrap(), "--config", &cfg, "--out", dir.path().join("v").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("feasible = true"));
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), EV_RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = bin(&["run", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["equilibrium.csv", "duals.csv", "trace.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = dir.path().join("c");
    bin(&["run", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "4"]);
    assert_ne!(fs::read(a.join("equilibrium.csv")).unwrap(), fs::read(c.join("equilibrium.csv")).unwrap());
}

#[test]
fn configuration_errors_exit_with_two_and_write_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &EV_RUN.replace("tol = 1e-5", "tol = -1.0"));
    let out = bin(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), &EV_RUN.replace("\"ev\"", "\"chess\""));
    assert_eq!(bin(&["run", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(dir.path(), &EV_RUN.replace("seed = 3\n", ""));
    assert_eq!(bin(&["run", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(bin(&["run"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--config", "/nonexistent/exp.toml"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn iteration_budget_exhaustion_exits_with_one_and_keeps_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), EV_RUN);
    let out = bin(&["run", "--config", &cfg, "--max-iter", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 3);
    assert!(dir.path().join("out/report.csv").is_file());
}

#[test]
fn sweep_and_compare_write_one_row_per_entry() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[experiment]\nkind = \"quadratic\"\nm = [5, 10]\ntol = 1e-6\nseed = 1\noutput_dir = \"out\"\nrepetitions = 2\n\n[quadratic]\nq = 0.1\nc = 1.0\n",
    );
    let out = bin(&["sweep-m", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("out/distances.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);

    let out = bin(&["compare", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("out/iterations.csv")).unwrap();
    // two M values times the default pair of algorithms
    assert_eq!(table.lines().count(), 1 + 4);
}

#[test]
fn custom_json_game_runs() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("game.json"),
        r#"{"m": 2, "n": 1, "q": [[1.0]], "c": [[1.0]], "offsets": [[-2.0], [-2.0]],
            "lo": [[0.0], [0.0]], "hi": [[2.0], [2.0]], "cap": [0.5]}"#,
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        "[experiment]\nkind = \"custom-file\"\nalgorithm = \"apa-nash\"\ntol = 1e-9\nseed = 0\noutput_dir = \"out\"\n\n[custom]\nfile = \"game.json\"\n",
    );
    let out = bin(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let eq = fs::read_to_string(dir.path().join("out/equilibrium.csv")).unwrap();
    for line in eq.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{line}");
    }
    let duals = fs::read_to_string(dir.path().join("out/duals.csv")).unwrap();
    let lambda: f64 = duals.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((lambda - 1.5).abs() < 1e-5, "{duals}");

    fs::write(dir.path().join("game.json"), r#"{"m": 2}"#).unwrap();
    assert_eq!(bin(&["run", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            aggregative::cli::ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            count += 1;
        }
    }
    assert!(count >= 6);
}

#[test]
fn bundled_traffic_config_reroutes_around_the_cap() {
    let dir = TempDir::new().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/traffic_diamond.toml");
    let out = bin(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let eq = fs::read_to_string(dir.path().join("equilibrium.csv")).unwrap();
    let mut sigma = [0.0; 8];
    for line in eq.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        sigma[f[1].parse::<usize>().unwrap()] += f[2].parse::<f64>().unwrap() / 20.0;
    }
    assert!(sigma[0] <= 0.03 + 1e-4, "{sigma:?}");
    assert!(sigma[4] > 0.9, "{sigma:?}");
}
