//! End-to-end tests of the `spinstep` binary: flags, CSV formats, exit codes.

use std::process::{Command, Output};

fn spinstep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinstep"))
        .args(args)
        .env_remove("SPINSTEP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = spinstep(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn list_systems_names_all_systems_and_default_parameters() {
    let text = stdout_of(&["list-systems"]);
    for name in ["rb", "irreversible-rb", "forced-rb", "vortices", "chain", "lagrange"] {
        assert!(text.contains(name), "missing {name} in listing");
    }
    assert!(text.contains("1,2,4"));
    assert!(text.contains("0.6666666666666666"));
    assert!(text.contains("kappa_i = 1"));
    for preset in ["rb-fig2", "irrev-fig3", "forced-rb"] {
        assert!(text.contains(preset), "missing preset {preset}");
    }
}

#[test]
fn unknown_subcommand_and_missing_args_exit_3() {
    assert_eq!(exit_code(&spinstep(&["frobnicate"])), 3);
    assert_eq!(exit_code(&spinstep(&[])), 3);
    // invalid spec: h = 0
    let out = spinstep(&["integrate", "--preset", "rb-fig2", "--h", "0", "--steps", "5"]);
    assert_eq!(exit_code(&out), 3);
    // invalid spec: arity mismatch
    let out = spinstep(&[
        "integrate",
        "--system",
        "rb",
        "--w0",
        "1,0,0,0,1,0",
        "--h",
        "0.1",
    ]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn integrate_emits_header_plus_one_row_per_state() {
    let csv = stdout_of(&[
        "integrate",
        "--preset",
        "rb-fig2",
        "--h",
        "0.1",
        "--steps",
        "100",
        "--solver-tol",
        "1e-14",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,w1x,w1y,w1z,H");
    assert_eq!(lines.len(), 102); // header + 101 states

    // the energy column is constant to 1e-12
    let energies: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let spread = energies
        .iter()
        .map(|e| (e - energies[0]).abs())
        .fold(0.0, f64::max);
    assert!(spread <= 1e-12, "energy spread {spread:e}");
}

#[test]
fn integrate_zero_steps_is_a_single_row() {
    let csv = stdout_of(&["integrate", "--preset", "rb-fig2", "--h", "0.1", "--steps", "0"]);
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn nonconvergence_exits_2_and_names_the_step() {
    // The Lagrange orbit through (2, 1, 1) blows up near t = 0.76, so the
    // midpoint equation loses solutions after roughly 15 steps.
    let out = spinstep(&["nambu", "--w0", "2,1,1", "--h", "0.05", "--steps", "1000"]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("step"), "stderr should name the step: {stderr}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "poincare",
        "--preset",
        "forced-rb",
        "--periods",
        "20",
        "--steps-per-period",
        "20",
    ];
    let first = stdout_of(&args);
    let second = stdout_of(&args);
    assert_eq!(first, second);
    assert_eq!(first.lines().count(), 22); // header + 21 section points
    assert_eq!(first.lines().next().unwrap(), "w1x,w1y,w1z");
}

#[test]
fn csv_round_trips_through_parse_and_reserialize() {
    let csv = stdout_of(&["integrate", "--preset", "rb-fig2", "--h", "0.1", "--steps", "20"]);
    let mut rebuilt = String::new();
    for (k, line) in csv.lines().enumerate() {
        if k == 0 {
            rebuilt.push_str(line);
        } else {
            let fields: Vec<String> = line
                .split(',')
                .map(|f| format!("{}", f.parse::<f64>().unwrap()))
                .collect();
            rebuilt.push_str(&fields.join(","));
        }
        rebuilt.push('\n');
    }
    assert_eq!(csv, rebuilt);
}

#[test]
fn output_flag_writes_the_same_bytes_as_stdout() {
    let path = std::env::temp_dir().join(format!("spinstep-test-{}.csv", std::process::id()));
    let args = ["integrate", "--preset", "rb-fig2", "--h", "0.1", "--steps", "5"];
    let from_stdout = stdout_of(&args);
    let mut with_output: Vec<&str> = args.to_vec();
    let path_str = path.to_str().unwrap();
    with_output.extend_from_slice(&["--output", path_str]);
    let out = spinstep(&with_output);
    assert!(out.status.success());
    let from_file = std::fs::read_to_string(&path).unwrap();
    let _ = std::fs::remove_file(&path);
    assert_eq!(from_stdout, from_file);
}

#[test]
fn diagnose_poisson_reports_pass_for_free_rigid_body() {
    let text = stdout_of(&[
        "diagnose",
        "--check",
        "poisson",
        "--preset",
        "rb-fig2",
        "--h",
        "0.1",
        "--solver-tol",
        "1e-14",
        "--seed",
        "7",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "name,max_violation,tolerance,pass");
    assert!(lines[1].starts_with("poisson-preservation,"));
    assert!(lines[1].ends_with(",true"), "{}", lines[1]);
}

#[test]
fn nambu_run_keeps_both_quadratics_constant() {
    let csv = stdout_of(&["nambu"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,wx,wy,wz,C,H");
    assert_eq!(lines.len(), 302); // header + default 300 steps + initial row
    let mut worst_c = 0.0_f64;
    let mut worst_h = 0.0_f64;
    let parse_tail = |line: &str| -> (f64, f64) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        (fields[4], fields[5])
    };
    let (c0, h0) = parse_tail(lines[1]);
    for line in &lines[1..] {
        let (c, h) = parse_tail(line);
        worst_c = worst_c.max((c - c0).abs());
        worst_h = worst_h.max((h - h0).abs());
    }
    assert!(worst_c <= 1e-12, "C spread {worst_c:e}");
    assert!(worst_h <= 1e-12, "H spread {worst_h:e}");
}

#[test]
fn vortex_manifold_checks_emit_small_residuals() {
    let csv = stdout_of(&["vortex-manifold", "--check", "tangency", "--grid", "6"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta,phi,residual");
    assert_eq!(lines.len(), 37);
    for line in &lines[1..] {
        let residual: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(residual <= 1e-10);
    }

    let csv = stdout_of(&[
        "vortex-manifold",
        "--check",
        "invariance",
        "--theta",
        "1.0",
        "--phi",
        "0.7",
        "--h",
        "0.1",
        "--steps",
        "50",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,residual");
    assert_eq!(lines.len(), 52);
}

#[test]
fn compare_and_convergence_emit_tables() {
    let csv = stdout_of(&[
        "compare",
        "--preset",
        "rb-fig2",
        "--h",
        "0.125",
        "--time",
        "2",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,method,max_error");
    assert_eq!(lines.len(), 3); // spherical + classical
    assert!(lines[1].starts_with("0.125,spherical,"));
    assert!(lines[2].starts_with("0.125,classical,"));

    let csv = stdout_of(&[
        "convergence",
        "--preset",
        "rb-fig2",
        "--h",
        "0.125",
        "--h",
        "0.0625",
        "--h",
        "0.03125",
        "--time",
        "2",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,max_error");
    assert_eq!(lines.len(), 4);
}

#[test]
fn seed_env_variable_is_honored() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_spinstep"))
        .args(["diagnose", "--check", "poisson", "--preset", "rb-fig2", "--h", "0.1"])
        .env("SPINSTEP_SEED", "7")
        .output()
        .unwrap();
    let with_flag = spinstep(&[
        "diagnose", "--check", "poisson", "--preset", "rb-fig2", "--h", "0.1", "--seed", "7",
    ]);
    assert_eq!(with_env.stdout, with_flag.stdout);
}
