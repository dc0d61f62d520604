use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use fermikit::cli::{radius_path, Command, RunConfig, EXIT_CONFIG, EXIT_NUMERICAL};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fermikit(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_fermikit"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("FERMIKIT_THREADS", t),
        None => cmd.env_remove("FERMIKIT_THREADS"),
    };
    cmd.output().expect("spawn fermikit")
}

fn run_fixture(command: &str, out: &Path, threads: Option<&str>) -> Output {
    let config = fixtures().join(format!("{command}.conf"));
    fermikit(
        &[command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()],
        threads,
    )
}

fn assert_same_file(actual: &Path, golden: &Path) {
    let a = fs::read(actual).unwrap();
    let g = fs::read(golden).unwrap();
    assert!(a == g, "{} differs from golden {}", actual.display(), golden.display());
}

#[test]
fn golden_files_reproduce_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for command in ["density", "stability", "bcs"] {
        let out = dir.path().join(format!("{command}.csv"));
        let result = run_fixture(command, &out, Some("2"));
        assert!(result.status.success(), "{command}: {}", String::from_utf8_lossy(&result.stderr));
        assert_same_file(&out, &fixtures().join(format!("{command}.csv")));
    }
    for i in 0..2 {
        let name = format!("stability_r{i}.csv");
        assert_same_file(&dir.path().join(&name), &fixtures().join(&name));
    }
}

#[test]
fn output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let many = dir.path().join("many.csv");
    assert!(run_fixture("stability", &one, Some("1")).status.success());
    assert!(run_fixture("stability", &many, Some("0")).status.success());
    assert_eq!(fs::read(&one).unwrap(), fs::read(&many).unwrap());
    assert_eq!(fs::read(radius_path(&one, 1)).unwrap(), fs::read(radius_path(&many, 1)).unwrap());
}

#[test]
fn echo_reparses_to_the_same_config() {
    for (command, kind) in [("density", Command::Density), ("stability", Command::Stability), ("bcs", Command::Bcs)] {
        let text = fs::read_to_string(fixtures().join(format!("{command}.conf"))).unwrap();
        let cfg = RunConfig::parse(kind, &text).unwrap();
        let golden = fs::read_to_string(fixtures().join(format!("{command}.csv"))).unwrap();
        assert_eq!(RunConfig::from_echo(&golden).unwrap(), cfg, "{command}");
    }
}

#[test]
fn echoed_output_works_as_config() {
    // Strip the `# ` prefix from the echo and feed it back as a config file.
    let dir = tempfile::tempdir().unwrap();
    let golden = fs::read_to_string(fixtures().join("bcs.csv")).unwrap();
    let body: String = golden
        .lines()
        .map_while(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    let config = dir.path().join("again.conf");
    fs::write(&config, body).unwrap();
    let out = dir.path().join("again.csv");
    let result = fermikit(&["bcs", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(result.status.success());
    assert_eq!(fs::read_to_string(out).unwrap(), golden);
}

#[test]
fn overrides_apply_after_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let config = fixtures().join("bcs.conf");
    let result = fermikit(
        &["bcs", "--config", config.to_str().unwrap(), "--set", "n_max=3", "--set", "t_points=2", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(result.status.success());
    let cfg = RunConfig::from_echo(&fs::read_to_string(out).unwrap()).unwrap();
    let mut expected = RunConfig::parse(Command::Bcs, &fs::read_to_string(config).unwrap()).unwrap();
    expected.apply_override("n_max=3").unwrap();
    expected.apply_override("t_points=2").unwrap();
    assert_eq!(cfg, expected);
}

#[test]
fn metadata_line_only_when_enabled() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let result = fermikit(&["bcs", "--set", "t_points=3", "--out", out.to_str().unwrap()], Some("3"));
    assert!(result.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\n# run: fermikit "));
    assert!(text.contains("threads 3\n"));
    let golden = fs::read_to_string(fixtures().join("bcs.csv")).unwrap();
    assert!(!golden.contains("# run:"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "a12 0.5\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["stability", "--set", "a12=abc", "--out", out],
        vec!["stability", "--set", "unknown=1", "--out", out],
        vec!["stability", "--set", "rho1=-1", "--out", out],
        vec!["stability", "--set", "t_min=10", "--set", "t_max=1", "--out", out],
        vec!["stability", "--config", bad.to_str().unwrap(), "--out", out],
        vec!["bcs", "--config", "/definitely/not/here.conf", "--out", out],
        vec!["bcs", "--set", "coupling=-0.1", "--out", out],
        vec!["density", "--set", "n1=0", "--out", out],
        vec!["density", "--set", "units=furlongs", "--out", out],
    ];
    for args in cases {
        let result = fermikit(&args, None);
        assert_eq!(result.status.code(), Some(EXIT_CONFIG), "{args:?}");
        assert!(!result.stderr.is_empty());
    }
    let result = fermikit(&["bcs", "--out", out], Some("many"));
    assert_eq!(result.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn numerical_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let result = fermikit(&["density", "--set", "max_iter=2", "--out", out.to_str().unwrap()], None);
    assert_eq!(result.status.code(), Some(EXIT_NUMERICAL));
    assert!(String::from_utf8_lossy(&result.stderr).contains("did not converge"));
}

#[test]
fn no_transition_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let result = fermikit(&["bcs", "--set", "coupling=0", "--out", out.to_str().unwrap()], None);
    assert_eq!(result.status.code(), Some(0));
    let text = fs::read_to_string(out).unwrap();
    assert!(text.contains("# result T_c_gap = none\n"));
    assert!(text.contains("# result T_c_closed_form = none\n"));
    assert!(text.contains("# result T_c_first_term = none\n"));
}

#[test]
fn csv_dialect() {
    for name in ["density.csv", "stability.csv", "bcs.csv"] {
        let text = fs::read_to_string(fixtures().join(name)).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let columns = lines.next().unwrap().split(',').count();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), columns, "{name}: {line}");
            for f in fields.iter().filter(|f| !matches!(**f, "true" | "false")) {
                let (mantissa, _) = f.split_once('e').expect("scientific notation");
                let digits = mantissa.chars().filter(char::is_ascii_digit).count();
                assert_eq!(digits, 17, "{name}: {f}");
            }
        }
    }
}

#[test]
fn density_columns_and_attractive_compression() {
    let text = fs::read_to_string(fixtures().join("density.csv")).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        rows.next().unwrap(),
        "r,n_ideal,n_self_consistent,n_perturbative,local_fugacity_1,local_fugacity_2"
    );
    let first: Vec<f64> = rows.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!(first[2] > first[1], "attractive field must raise the central density");
}

#[test]
fn density_without_interaction_matches_ideal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("free.csv");
    let config = fixtures().join("density.conf");
    let result = fermikit(
        &["density", "--config", config.to_str().unwrap(), "--set", "v0=0", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(result.status.success());
    let text = fs::read_to_string(out).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        // Grid normalisation re-solves mu; the closed-form ideal mu differs by
        // the quadrature error only.
        assert!((v[1] - v[2]).abs() <= 1e-9 * v[1].max(1e-300), "{line}");
        assert!((v[2] - v[3]).abs() <= 1e-13 * v[2], "{line}");
    }
}
