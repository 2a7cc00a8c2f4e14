use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use philap_cli::export::{write_profile, BRANCH_CSV, PROFILE_DIR, REPORT_JSON};
use philap_cli::{
    export_all, read_json, read_profile, run_sweep, solve_one, write_branch_csv, Config,
    ConfigError, Problem, Profile, ProfileSource, SweepConfig, CSV_HEADER,
};
use philap_core::{minimize, GridFunction, MinimizeOptions, NFunctionSpec, Polynomial, RadialGrid};

fn small() -> Config {
    let mut c = Config::reference();
    c.domain.nodes = 201;
    c.solver.scan_points = 200;
    c
}

fn csv_bytes(config: &Config, lambda: f64) -> Vec<u8> {
    let problem = Problem::new(config.clone()).unwrap();
    let outcome = solve_one(&problem, lambda);
    let mut out = Vec::new();
    write_branch_csv(&outcome.report, &mut out).unwrap();
    out
}

#[test]
fn branch_csv_header_is_exact() {
    let bytes = csv_bytes(&small(), 110.0);
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,k,sup_norm,energy,boundary_residual,sup_gt_b,integral_positive,ordering_ok"
    );
    assert_eq!(CSV_HEADER.join(","), text.lines().next().unwrap());

    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<f64>().unwrap(), 110.0);
        assert_eq!(row[1].parse::<usize>().unwrap(), k + 1);
        assert!(row[4].parse::<f64>().unwrap() <= 1e-2);
        assert_eq!(&row[5], "true");
        assert!(row[6].parse::<f64>().unwrap() > 0.0);
        assert_eq!(&row[7], "true");
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let a = csv_bytes(&small(), 80.0);
    let b = csv_bytes(&small(), 80.0);
    assert_eq!(a, b);
}

#[test]
fn json_report_round_trips() {
    let mut c = small();
    c.sweep = SweepConfig::Grid {
        lambdas: vec![4.0, 110.0],
    };
    let outcome = run_sweep(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_all(&outcome, dir.path()).unwrap();
    let back = read_json(dir.path().join(REPORT_JSON)).unwrap();
    assert_eq!(back, outcome.report);
    assert_eq!(back.schema_version, philap_cli::SCHEMA_VERSION);
    assert!(back.tool_version.starts_with("philap "));
    assert_eq!(back.config, c);
    assert!(dir.path().join(BRANCH_CSV).exists());
    let profiles = std::fs::read_dir(dir.path().join(PROFILE_DIR))
        .unwrap()
        .count();
    assert_eq!(profiles, outcome.profiles.len());
}

#[test]
fn empty_lambda_grid_is_rejected() {
    let mut c = small();
    c.sweep = SweepConfig::Grid { lambdas: vec![] };
    assert!(matches!(run_sweep(&c), Err(ConfigError::Schema(_))));
}

#[test]
fn sweep_below_threshold_has_no_lambda_bar() {
    let mut c = small();
    c.sweep = SweepConfig::Grid {
        lambdas: vec![1.0, 2.0, 4.0],
    };
    let report = run_sweep(&c).unwrap().report;
    assert_eq!(report.points.len(), 3);
    assert!(report
        .points
        .iter()
        .all(|p| !p.ordering_ok && !p.inconclusive));
    assert_eq!(report.lambda_bar, None);
    assert!(report.findings.is_empty(), "{:?}", report.findings);
}

#[test]
fn poisson_profile_export_matches_parabola() {
    let n = 401;
    let grid = Arc::new(RadialGrid::uniform(1.0, 1, n).unwrap());
    let nf = NFunctionSpec::power(2.0).unwrap();
    let opts = MinimizeOptions {
        tol: 1e-12,
        ..MinimizeOptions::default()
    };
    let zero = GridFunction::zeros(grid.clone());
    let res = minimize(&grid, &nf, &Polynomial::constant(1.0), 1.0, &zero, &opts).unwrap();
    let profile = Profile {
        lambda: 1.0,
        k: 1,
        source: ProfileSource::Energy,
        r: grid.nodes().to_vec(),
        u: res.u.values().to_vec(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("poisson.csv");
    write_profile(&profile, std::fs::File::create(&path).unwrap()).unwrap();
    let (r, u) = read_profile(&path).unwrap();
    assert_eq!(r, profile.r);
    assert_eq!(u, profile.u);
    for (r, u) in r.iter().zip(&u) {
        assert!((u - 0.5 * (1.0 - r * r)).abs() <= 4.0 / (n * n) as f64);
    }
}

fn philap(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_philap"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, c: &Config) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(c).unwrap()).unwrap();
    path.display().to_string()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small());

    let out = philap(&["validate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let out = philap(&["solve", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(1), "missing --lambda");

    let out = philap(
        &[
            "solve", "--config", &cfg, "--lambda", "110", "--out", "run", "--quiet",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(out.stdout.is_empty());
    let report = read_json(dir.path().join("run").join(REPORT_JSON)).unwrap();
    assert!(report.points[0].ordering_ok);

    let profile = dir.path().join("run/profiles/lambda_110_k1_energy.csv");
    let out = philap(
        &["norm", profile.to_str().unwrap(), "--config", &cfg],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let norm: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(norm > 0.0 && norm.is_finite());

    let out = philap(&["delta2", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let d2: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((d2["ell_estimate"].as_f64().unwrap() - 2.0).abs() < 1e-8);

    let mut bad = small();
    bad.bumps.amplitudes = Some(vec![0.0, 1.0]);
    let bad_cfg = write_config(dir.path(), &bad);
    let out = philap(&["validate", "--config", &bad_cfg], dir.path());
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let out = philap(
        &["solve", "--config", &bad_cfg, "--lambda", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    std::fs::write(dir.path().join("broken.json"), "{\"nfunction\": {}}").unwrap();
    let out = philap(&["sweep", "--config", "broken.json"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn non_convergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small();
    c.solver.max_iter = 1;
    let cfg = write_config(dir.path(), &c);
    let out = philap(
        &["solve", "--config", &cfg, "--lambda", "110", "--quiet"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let report = read_json(dir.path().join("philap-out").join(REPORT_JSON)).unwrap();
    assert!(report.points[0].inconclusive);
}
