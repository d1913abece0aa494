//! End-to-end runs of the `radtemp` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radtemp_cli::io::{read_field_dump, read_node_table, read_sidecar, write_field_dump};

const BALL: &str = r#"
[domain]
shape = "ball"
center = [0.0, 0.0, 0.0]
radius = 1.0
"#;

fn grey_equilibrium() -> String {
    format!(
        r#"mode = "grey"
{BALL}
[medium]
absorption = 1.0
[boundary]
kind = "equilibrium"
temperature = 1.0
[spatial]
h = 0.25
[angular]
n_polar = 4
n_azimuth = 8
"#
    )
}

fn scattering(boundary: &str) -> String {
    format!(
        r#"mode = "scattering"
{BALL}
[medium]
absorption = 0.0
scattering = 1.0
[boundary]
{boundary}
[spatial]
h = 0.4
[angular]
rule = "lebedev26"
[spectral]
n_nodes = 8
"#
    )
}

fn two_beam_grey() -> String {
    format!(
        r#"mode = "grey"
{BALL}
[medium]
absorption = 1.0
[boundary]
kind = "beams"
[[boundary.beams]]
direction = [0.0, 0.0, 1.0]
temperature = 1.0
exponent = 0.0
[[boundary.beams]]
direction = [0.0, 0.0, -1.0]
temperature = 0.9
exponent = 0.0
[spatial]
h = 0.2857142857142857
[angular]
rule = "lebedev26"
[spectral]
n_nodes = 8
"#
    )
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn radtemp(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } =
        Command::new(env!("CARGO_BIN_EXE_radtemp")).args(args).output().expect("the binary runs");
    Run {
        code: status.code().expect("exited normally"),
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn solve(dir: &Path, name: &str, text: &str) -> (Run, PathBuf) {
    let cfg = write_config(dir, &format!("{name}.toml"), text);
    let out = dir.join(name);
    let run = radtemp(&["solve", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--threads", "1"]);
    (run, out)
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn grey_equilibrium_solves_to_unit_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let (run, out) = solve(dir.path(), "eq", &grey_equilibrium());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = read_node_table(&out.join("nodes.csv")).unwrap();
    assert!(!rows.is_empty());
    let worst = rows.iter().map(|r| (r[3] - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-2, "max |T - 1| = {worst}");

    let r = report(&out);
    assert_eq!(r["solver"]["status"], "converged");
    // defaults are expanded in the embedded config
    assert_eq!(r["config"]["ray"]["h"].as_f64(), Some(2.0 / 128.0));
    assert_eq!(r["config"]["spectral"]["t_ref"].as_f64(), Some(1.0));
    assert_eq!(r["config"]["solver"]["self_cell"], "exact_mass");
    let e = &r["entropy"];
    let scale = e["phi_out"].as_f64().unwrap();
    assert!(e["production_volume_integral"].as_f64().unwrap().abs() <= 1e-8 * scale);
}

#[test]
fn grey_mode_rejects_tabulated_absorption() {
    let dir = tempfile::tempdir().unwrap();
    let text = grey_equilibrium().replace("absorption = 1.0", "absorption = { nu = [1.0, 2.0], alpha = [1.0, 2.0] }");
    let (run, out) = solve(dir.path(), "bad", &text);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("mode compatibility"), "{}", run.stderr);
    assert!(!out.join("nodes.csv").exists());
}

#[test]
fn config_errors_name_the_key_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (run, _) = solve(dir.path(), "h", &grey_equilibrium().replace("h = 0.25", "h = 0.0"));
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("spatial.h"), "{}", run.stderr);
    let (run, _) = solve(dir.path(), "typo", &format!("{}\n[solver]\ntoll = 1e-6\n", grey_equilibrium()));
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("toll"), "{}", run.stderr);
    let missing = radtemp(&["solve", "--config", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(missing.code, 1);
    assert_eq!(radtemp(&["solve"]).code, 1);
}

#[test]
fn iteration_limit_exits_two_and_keeps_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let (run, out) = solve(dir.path(), "slow", &format!("{}\n[solver]\nmax_iter = 2\n", grey_equilibrium()));
    assert_eq!(run.code, 2, "{}", run.stderr);
    let r = report(&out);
    assert_eq!(r["solver"]["status"], "max_iter_exceeded");
    assert_eq!(r["solver"]["iterations"], 2);
    assert!(!out.join("nodes.csv").exists());
}

#[test]
fn constant_scattering_keeps_the_incoming_radiance() {
    let dir = tempfile::tempdir().unwrap();
    let (run, out) = solve(dir.path(), "scat", &scattering("kind = \"constant\"\nvalue = 3.0"));
    assert_eq!(run.code, 0, "{}", run.stderr);
    let dump = read_field_dump(&out.join("field.bin")).unwrap();
    assert!(dump.temperature.is_none());
    let worst = dump.field.values.iter().map(|v| (v - 3.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-6 * 3.0, "max |I - 3| = {worst}");
}

#[test]
fn same_config_and_threads_give_identical_node_tables() {
    let dir = tempfile::tempdir().unwrap();
    let text = two_beam_grey();
    let (a, out_a) = solve(dir.path(), "a", &text);
    let (b, out_b) = solve(dir.path(), "b", &text);
    assert_eq!((a.code, b.code), (0, 0));
    let ta = std::fs::read(out_a.join("nodes.csv")).unwrap();
    let tb = std::fs::read(out_b.join("nodes.csv")).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn field_dump_survives_a_rewrite_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let (run, out) = solve(dir.path(), "dump", &two_beam_grey());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let path = out.join("field.bin");
    let dump = read_field_dump(&path).unwrap();
    let side = read_sidecar(&path).unwrap();
    let copy = dir.path().join("copy.bin");
    write_field_dump(&copy, &dump, &side.config).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&copy).unwrap());
    assert_eq!(read_field_dump(&copy).unwrap(), dump);
}

fn entropy_json(dir: &Path, dump: &Path) -> serde_json::Value {
    let out = dir.join("entropy-out");
    let run = radtemp(&["entropy", dump.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("balance defect"), "{}", run.stdout);
    serde_json::from_str(&std::fs::read_to_string(out.join("entropy.json")).unwrap()).unwrap()
}

#[test]
fn entropy_of_persisted_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let (run, eq) = solve(dir.path(), "eq", &grey_equilibrium());
    assert_eq!(run.code, 0);
    let e = entropy_json(dir.path(), &eq.join("field.bin"));
    let scale = e["phi_out"].as_f64().unwrap();
    assert!(e["production_volume_integral"].as_f64().unwrap().abs() <= 1e-8 * scale, "{e}");

    let (run, beams) = solve(dir.path(), "beams", &two_beam_grey());
    assert_eq!(run.code, 0);
    let e = entropy_json(dir.path(), &beams.join("field.bin"));
    let net = e["phi_out"].as_f64().unwrap() + e["phi_in"].as_f64().unwrap();
    assert!(net > 0.0, "{e}");

    let (run, zero) = solve(dir.path(), "zero", &scattering("kind = \"zero\""));
    assert_eq!(run.code, 0, "{}", run.stderr);
    let e = entropy_json(dir.path(), &zero.join("field.bin"));
    for key in ["production_volume_integral", "scattering_production", "phi_in", "phi_out", "i_in", "i_out"] {
        assert_eq!(e[key].as_f64(), Some(0.0), "{key}: {e}");
    }
}

#[test]
fn entropy_rejects_unreadable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"junk").unwrap();
    let run = radtemp(&["entropy", junk.to_str().unwrap()]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("not a readable field dump"), "{}", run.stderr);
}

#[test]
fn validate_passes_and_catches_an_injected_kernel_fault() {
    let ok = radtemp(&["validate"]);
    assert_eq!(ok.code, 0, "{}{}", ok.stdout, ok.stderr);
    assert!(ok.stdout.contains("PASS stefan-boltzmann"), "{}", ok.stdout);
    assert_eq!(ok.stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);

    let bad = radtemp(&["validate", "--inject-kernel-fault"]);
    assert_ne!(bad.code, 0);
    assert!(bad.stdout.contains("FAIL kernel mass"), "{}", bad.stdout);
    assert!(bad.stdout.lines().filter(|l| l.starts_with("FAIL")).count() == 1, "{}", bad.stdout);
}

fn oracle(dir: &Path, name: &str, text: &str) -> (Run, serde_json::Value) {
    let cfg = write_config(dir, &format!("{name}.toml"), text);
    let out = dir.join(name);
    let run = radtemp(&["oracle", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    let json = serde_json::from_str(&std::fs::read_to_string(out.join("oracle.json")).unwrap()).unwrap();
    (run, json)
}

#[test]
fn oracle_agrees_on_small_problems() {
    let dir = tempfile::tempdir().unwrap();
    let (run, cmp) = oracle(dir.path(), "grey", &two_beam_grey());
    assert_eq!(run.code, 0, "{}{}", run.stdout, run.stderr);
    assert!(cmp["max_deviation"].as_f64().unwrap() <= 5e-3, "{cmp}");

    let text = format!(
        "{}\n[solver]\ntol = 1e-10\n[oracle]\ntolerance = 1e-8\n",
        scattering("kind = \"constant\"\nvalue = 3.0")
    );
    let (run, cmp) = oracle(dir.path(), "scat", &text);
    assert_eq!(run.code, 0, "{}{}", run.stdout, run.stderr);
    assert!(cmp["max_deviation"].as_f64().unwrap() <= 1e-8, "{cmp}");
}

#[test]
fn oracle_reports_deviation_beyond_a_tight_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\n[oracle]\ntolerance = 1e-12\n", two_beam_grey());
    let (run, cmp) = oracle(dir.path(), "tight", &text);
    assert_ne!(run.code, 0);
    assert!(run.stdout.contains("max deviation") && run.stdout.contains("FAIL"), "{}", run.stdout);
    assert_eq!(cmp["pass"], false);
}

#[test]
fn oracle_refuses_large_problems() {
    let dir = tempfile::tempdir().unwrap();
    let text = grey_equilibrium().replace("h = 0.25", "h = 0.1");
    let cfg = write_config(dir.path(), "big.toml", &text);
    let run = radtemp(&["oracle", "--config", cfg.to_str().unwrap(), "--output", dir.path().to_str().unwrap()]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("too large"), "{}", run.stderr);
}
