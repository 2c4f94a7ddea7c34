use std::path::Path;
use std::process::{Command, Output};

fn psdg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psdg")).args(args).current_dir(dir).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.ini");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "[mesh]\nnx = 4\nny = 4\ntargets = 6\n\n[discretisation]\ndegree = 1\n\n\
                     [experiment]\ndt = 1e-3, 1e-6\nrepetitions = 2\n";

#[test]
fn iter_table_writes_csv_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = psdg(&["--config", &cfg, "--output", "tables/iter", "iter-table"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("tables/iter.csv")).unwrap();
    let md = std::fs::read_to_string(dir.path().join("tables/iter.md")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("seed=42 tol=1e-8"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 4);
    assert!(md.contains("### dcg"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("### pcg-bj"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = psdg(&["--config", &cfg, "--solvers", "dcg", "--seed", "9", "--format", "csv", "iter-table"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("seed=9"));
    assert!(csv.lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.starts_with("dcg,")));
}

#[test]
fn exit_code_two_on_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = psdg(&["--config", &cfg, "--maxit", "1", "--solvers", "cg", "iter-table"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("1.0!"));

    let out = psdg(&["--config", &cfg, "--maxit", "1", "--solvers", "cg", "solve", "--steps", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_code_one_on_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[experiment]\nrepetitions = none\n");
    assert_eq!(psdg(&["--config", &bad, "iter-table"], dir.path()).status.code(), Some(1));
    assert_eq!(psdg(&["--config", "missing.ini", "iter-table"], dir.path()).status.code(), Some(1));
    assert_eq!(psdg(&["--solvers", "gmres", "iter-table"], dir.path()).status.code(), Some(1));
    assert_eq!(psdg(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(psdg(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn cond_table_and_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[convergence]\nrefinements = 2, 4\n"));
    let out = psdg(&["--config", &cfg, "--solvers", "pcg-cbj", "--format", "csv", "cond-table"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("series,dt,column,elements,h,kappa,flagged,balanced"));
    assert!(csv.contains("\nraw,1e-3,h0,6,") && csv.contains("\npcg-cbj,1e-6,h0,6,"));

    let out = psdg(&["--config", &cfg, "--solvers", "dcg", "--format", "csv", "convergence"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("elements,h,dt,steps,energy_error,slope\n4,"));
}

#[test]
fn solve_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = psdg(&["--config", &cfg, "--solvers", "pcg-cbj", "solve", "--steps", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let log = String::from_utf8(out.stdout).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(log.starts_with("step,time,iterations,residual\n1,1e-3,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("energy_error="));

    let out = psdg(&["--config", &cfg, "export-matrices", "--dir", "mtx"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<_> = ["M1", "B1", "B2", "B3", "M", "A", "Astar"]
        .iter()
        .map(|n| dir.path().join("mtx").join(format!("{n}.mtx")))
        .collect();
    assert!(names.iter().all(|p| p.is_file()));
    let a = psdg::mmio::load_matrix_market(&names[6]).unwrap();
    let m = psdg::mmio::load_matrix_market(&names[4]).unwrap();
    let b = psdg::mmio::load_matrix_market(&names[5]).unwrap();
    let rebuilt = m.add_scaled(1e-3, &b);
    assert!(a.max_abs_diff(&rebuilt) <= 1e-12 * a.max_abs());
}

#[test]
fn mesh_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = "# two squares\n6 2\n0 0\n0.5 0\n1 0\n0 1\n0.5 1\n1 1\n4 0 1 4 3\n4 1 2 5 4\n2 5 N\n";
    std::fs::write(dir.path().join("two.mesh"), mesh).unwrap();
    let cfg = write_config(
        dir.path(),
        "[mesh]\nfile = two.mesh\ntargets = 2\nneumann = none\n\n[discretisation]\ndegree = 1\n\n[experiment]\ndt = 1e-4\nrepetitions = 1\n",
    );
    let out = psdg(&["--config", &cfg, "--format", "csv", "iter-table"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains(",h0,2,"));
}
