use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso-stokes")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn run_writes_one_row_per_level() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bl.cfg", "case = bl2d\nmethod = cr-rt\nepsilon = 1e-2\nlevels = 4, 8, 16\n");
    let out = dir.path().join("out.csv");
    let status = bin(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(
        "level,N_or_h,n_elem,n_dof,err_h1,err_l2_u,err_l2_p,err_pi_p,eoc_h1,eoc_l2_u,eoc_l2_p,eoc_pi_p\n"
    ));
    let rows = rows(&text);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "4");
    assert_eq!(rows[2][2], "512");
    assert!(rows[0][8].is_empty());
    for row in &rows {
        assert_eq!(row.len(), 12);
        // Seventeen significant digits in scientific notation.
        let mantissa = row[4].split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{}", row[4]);
    }
    let h1: f64 = rows[2][4].parse().unwrap();
    assert!(h1 > 0.0 && h1 < 0.1);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bl.cfg", "case = bl2d\nmethod = cr-bdm\nlevels = 4,8\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(bin(&["run", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(bin(&["run", &cfg, "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let stdout = bin(&["run", &cfg]).stdout;
    assert_eq!(stdout, fs::read(&a).unwrap());
}

#[test]
fn overrides_replace_file_values() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bl.cfg", "case = bl2d\nmethod = cr\nlevels = 4\n");
    let cr = bin(&["run", &cfg]).stdout;
    let bdm = bin(&["run", &cfg, "--method", "cr-bdm", "--levels", "4"]).stdout;
    let err = |o: &[u8]| -> f64 { rows(std::str::from_utf8(o).unwrap())[0][4].parse().unwrap() };
    assert!(err(&bdm) < err(&cr));
    let uniform = bin(&["run", &cfg, "--epsilon", "0.5"]).stdout;
    assert_ne!(uniform, cr);
}

#[test]
fn failures_leave_a_marker_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bl.cfg", "case = bl2d\nlevels = 4, 3\n");
    let out = dir.path().join("out.csv");
    let status = bin(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("level 3"));
    let rows = rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][..2], ["3".to_owned(), "FAILED".to_owned()]);
}

#[test]
fn invalid_configurations_are_rejected() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [
        ("unknown.cfg", "case = bl2d\nlevels = 4\ncolour = red\n"),
        ("foreign.cfg", "case = edge3d\nlevels = 2\nepsilon = 0.1\n"),
        ("nu.cfg", "case = bl2d\nlevels = 4\nnu = 0\n"),
        ("levels.cfg", "case = bl2d\n"),
    ] {
        let cfg = write_config(dir.path(), name, text);
        let out = bin(&["run", &cfg]);
        assert!(!out.status.success(), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let cfg = write_config(dir.path(), "ok.cfg", "case = bl2d\nlevels = 4\n");
    assert!(!bin(&["run", &cfg, "--nu", "-1"]).status.success());
    assert!(!bin(&["run", dir.path().join("missing.cfg").to_str().unwrap()]).status.success());
}

#[test]
fn mesh_audit_reports_quality() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "edge.cfg", "case = edge3d\nmu = 0.4\nlevels = 2, 3\n");
    let out = bin(&["mesh-audit", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("level,n_elem,max_angle_deg"));
    let angle: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
    assert!(angle < 170.0);
    assert_eq!(lines[3].split(',').nth(5), Some("0"));
}

#[test]
fn export_vtk_writes_legacy_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bl.cfg", "case = bl2d\nmethod = cr-rt\nlevels = 2, 4\n");
    let vtk = dir.path().join("vtk");
    assert!(bin(&["export-vtk", &cfg, "--out", vtk.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(vtk.join("cr-rt_level4.vtk")).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
    assert!(text.contains("CELLS 32 128"));
    assert!(text.contains("CELL_DATA 32"));
    assert!(text.contains("SCALARS pressure double 1"));
    assert!(text.contains("VECTORS velocity double"));
    assert_eq!(text.lines().filter(|l| *l == "5").count(), 32);
    assert!(vtk.join("cr-rt_level2.vtk").exists());
}
