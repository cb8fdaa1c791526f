use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracising"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8_lossy(&o.stderr).to_string();
    assert_eq!(s.trim_end().lines().count(), 1, "{s}");
    s.trim_end().to_string()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn manifest(dir: &Path) -> toml::Table {
    toml::from_str(&fs::read_to_string(dir.join("manifest.toml")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn nearest_neighbour_kernel_rows() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(&run(&["kernel", "--q", "2", "--range", "5"], tmp.path()));
    let (header, rows) = csv_rows(&tmp.path().join("kernel.csv"));
    assert_eq!(header, ["r", "J"]);
    let parsed: Vec<(usize, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(parsed, [(1, 1.0), (2, 0.0), (3, 0.0), (4, 0.0), (5, 0.0)]);
    assert_eq!(stdout, fs::read_to_string(tmp.path().join("kernel.csv")).unwrap());
    assert_eq!(rows[0][1], "1.0000000000000000e0");
}

#[test]
fn expfit_json_report() {
    let tmp = TempDir::new().unwrap();
    ok(&run(&["expfit", "--q", "1.5", "--range", "1000", "--tol", "1e-9", "--format", "json"], tmp.path()));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("expfit.json")).unwrap()).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["inputs", "outputs", "diagnostics"]);
    let n = v["outputs"]["term_count"].as_u64().unwrap();
    assert!((10..=14).contains(&n), "{n}");
    assert_eq!(v["outputs"]["expfit"]["a"].as_array().unwrap().len() as u64, n);
    assert!(v["outputs"]["sup_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["inputs"]["range"], 1000);
}

#[test]
fn flags_override_file_override_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "q = 1.5\nrange = 30\ntol = 1e-6\nj0 = 2.0\n").unwrap();
    let out = tmp.path().join("out");
    ok(&bin().args(["expfit", "--config"]).arg(&cfg).args(["--range", "12", "--j0", "1.0", "--out"]).arg(&out).output().unwrap());
    let m = manifest(&out);
    assert_eq!(m["q"].as_float(), Some(1.5)); // file
    assert_eq!(m["range"].as_integer(), Some(12)); // flag over file
    assert_eq!(m["j0"].as_float(), Some(1.0)); // flag over file
    assert_eq!(m["tol"].as_float(), Some(1e-6)); // file over default
    assert_eq!(m["max-terms"].as_integer(), Some(20)); // default
    assert_eq!(m["command"].as_str(), Some("expfit"));
    assert_eq!(m["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
}

#[test]
fn manifest_reproduces_outputs_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&run(&["lightcone", "--q", "1.5", "--L", "24", "--t-max", "4", "--format", "json"], &a));
    ok(&bin().args(["lightcone", "--config"]).arg(a.join("manifest.toml")).arg("--out").arg(&b).output().unwrap());
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        let (tx, ty) = (fs::read_to_string(x).unwrap(), fs::read_to_string(y).unwrap());
        if x.ends_with("manifest.toml") {
            let strip = |t: &str| t.lines().filter(|l| !l.starts_with("out =")).collect::<Vec<_>>().join("\n");
            assert_eq!(strip(&tx), strip(&ty));
        } else {
            let strip = |t: &str| t.lines().filter(|l| !l.contains("\"out\":")).collect::<Vec<_>>().join("\n");
            assert_eq!(strip(&tx), strip(&ty), "{}", x.display());
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let args = ["gap-scan", "--q", "1.5", "--L-list", "20,30,40,50,60,80,100"];
    let one = ok(&bin().args(args).arg("--out").arg(tmp.path().join("1")).env("FRACISING_THREADS", "1").output().unwrap());
    let four = ok(&bin().args(args).arg("--out").arg(tmp.path().join("4")).env("FRACISING_THREADS", "4").output().unwrap());
    assert_eq!(one, four);
    let bad = bin().args(args).arg("--out").arg(tmp.path().join("0")).env("FRACISING_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_line(&bad).starts_with("error: USAGE:"));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let usage = run(&["kernel", "--range", "5"], tmp.path());
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(stderr_line(&usage), "error: USAGE: --q is required");
    let unknown = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr_line(&unknown).starts_with("error: USAGE:"));
    let numerical = run(&["gap-scan", "--q", "1.5", "--method", "ed", "--L-list", "16"], tmp.path());
    assert_eq!(numerical.status.code(), Some(1));
    assert!(stderr_line(&numerical).starts_with("error: SIZE_LIMIT:"));
    let domain = run(&["kernel", "--q", "0"], tmp.path());
    assert_eq!(domain.status.code(), Some(1));
    assert!(stderr_line(&domain).starts_with("error: DOMAIN_ERROR:"));
    assert!(bin().arg("--help").output().unwrap().status.success());
}

#[test]
fn gap_scan_feeds_scaling_fit() {
    let tmp = TempDir::new().unwrap();
    let scan = tmp.path().join("scan");
    ok(&run(&["gap-scan", "--q", "2", "--L-max", "200"], &scan));
    let fit = tmp.path().join("fit");
    let input = scan.join("gap-scan.csv");
    ok(&run(&["scaling-fit", "--input", input.to_str().unwrap()], &fit));
    let (header, rows) = csv_rows(&fit.join("scaling-fit.csv"));
    assert_eq!(header, ["parameter", "value", "stderr"]);
    let z: f64 = rows.iter().find(|r| r[0] == "z").unwrap()[1].parse().unwrap();
    assert!((z - 1.0).abs() < 0.01, "{z}");
}

#[test]
fn ed_scan_reports_entropy_peaks() {
    let tmp = TempDir::new().unwrap();
    let grid = (0..17).map(|i| format!("{}", 0.4 + 0.05 * i as f64)).collect::<Vec<_>>().join(",");
    ok(&run(&["gap-scan", "--q", "1.5", "--method", "ed", "--L-list", "8,10", "--g-grid", &grid], tmp.path()));
    let (header, rows) = csv_rows(&tmp.path().join("gap-scan.csv"));
    assert_eq!(header, ["L", "g", "gap", "half_entropy"]);
    assert_eq!(rows.len(), 34);
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("gap-scan-diagnostics.json")).unwrap()).unwrap();
    let p8 = diag["entropy_peaks"]["L=8"]["position"].as_f64().unwrap();
    let p10 = diag["entropy_peaks"]["L=10"]["position"].as_f64().unwrap();
    assert!(p8 < p10, "{p8} {p10}");
}

#[test]
fn mpo_check_stays_within_bound() {
    let tmp = TempDir::new().unwrap();
    ok(&run(&["mpo-check", "--q", "2.2", "--L", "8"], tmp.path()));
    let (header, rows) = csv_rows(&tmp.path().join("mpo-check.csv"));
    assert_eq!(header[0], "L");
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn pipeline_nearest_neighbour_summary() {
    let tmp = TempDir::new().unwrap();
    ok(&run(&["pipeline", "--q", "2", "--L-max", "200"], tmp.path()));
    let (header, rows) = csv_rows(&tmp.path().join("pipeline.csv"));
    assert_eq!(header, ["q", "g_c", "z_gap", "z_front", "z_dispersion"]);
    let v: Vec<f64> = rows[0].iter().map(|x| x.parse().unwrap()).collect();
    assert!((v[1] - 1.0).abs() < 1e-12);
    assert!((v[2] - 1.0).abs() < 0.01);
    assert!((v[3] - 1.0).abs() < 0.05);
    assert!((v[4] - 1.0).abs() < 0.01);
}
