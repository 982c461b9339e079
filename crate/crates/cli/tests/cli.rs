use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_vk-ribbon");

struct Csv {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let columns = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
            .collect();
        Self { columns, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i]).collect()
    }
}

fn run(cmd: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.with_extension("toml");
    fs::create_dir_all(out.parent().unwrap()).unwrap();
    fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr)))
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout {}\nstderr {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn workspace_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn density_table_matches_closed_forms() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("density");
    let o = run("density", "[material]\nmu = 1.0\nlambda = 1.0\n", &out, &[]);
    ok(&o);
    let t = Csv::read(&out.join("density.csv"));
    assert_eq!(t.rows.len(), 21 * 21);
    assert!(t.col("max_rel").iter().all(|&r| r <= 1e-10));
    let origin = t.rows.iter().find(|r| r[0] == 0.0 && r[1] == 0.0).expect("grid contains the origin");
    assert!(origin[2..8].iter().all(|&v| v == 0.0));

    let a = Csv::read(&out.join("alpha.csv"));
    assert!((a.col("alpha_plus")[0] - 4.0).abs() <= 1e-12);
    assert!((a.col("alpha_minus")[0] - 20.0 / 3.0).abs() <= 1e-12);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["material"]["mu"], 1.0);
    assert_eq!(manifest["config"]["tolerances"]["density"], 1e-10);
    assert!(fs::read_to_string(out.join("qbar_kappa.dat")).unwrap().lines().any(|l| !l.starts_with('#')));
}

#[test]
fn density_needs_isotropic_material() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d");
    let cfg = "[material]\nrep = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]\n";
    let o = run("density", cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "config");
}

#[test]
fn alpha_for_anisotropic_form() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("a");
    let cfg = "[material]\nrep = [[3.0, 0.4, 0.2], [0.4, 2.0, -0.3], [0.2, -0.3, 1.5]]\n[alpha]\nsamples = 20000\nseed = 5\n";
    let o = run("alpha", cfg, &out, &[]);
    ok(&o);
    let t = Csv::read(&out.join("alpha.csv"));
    assert!(t.col("max_rel")[0] <= 1e-6);
    assert!(t.col("alpha_plus_closed")[0].is_nan());
}

#[test]
fn zero_load_sweep_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep");
    let cfg = "eps = [0.4, 0.2, 0.1]\n[geometry]\nnx_per_length = 8\nny = 4\n";
    let o = run("gamma-sweep", cfg, &out, &[]);
    ok(&o);
    let t = Csv::read(&out.join("sweep.csv"));
    assert_eq!(t.col("eps"), vec![0.4, 0.2, 0.1]);
    for c in ["min2d", "recovery", "limit1d", "gap_min2d", "gap_recovery", "det_residual", "h12", "h22"] {
        assert!(t.col(c).iter().all(|&v| v == 0.0), "column {c}");
    }
    assert!(t.col("bracket").iter().all(|&v| v == 1.0));
    assert!(t.col("nx").iter().all(|&v| v == 8.0));
}

#[test]
fn vk_sweep_with_small_load_keeps_the_bracket() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep");
    let cfg = r#"
eps = [0.4, 0.2, 0.1]
[model]
kind = "vk"
[geometry]
nx_per_length = 8
ny = 4
[[loads.q_w.cos]]
amplitude = 0.3
wavenumber = 6.283185307179586
[tolerances]
sweep_gap = 0.05
"#;
    let o = run("gamma-sweep", cfg, &out, &["--threads", "2"]);
    ok(&o);
    let t = Csv::read(&out.join("sweep.csv"));
    let (m, r) = (t.col("min2d"), t.col("recovery"));
    assert!(m.iter().zip(&r).all(|(m, r)| m <= r));
    let gaps = t.col("gap_min2d");
    assert!(gaps.windows(2).all(|g| g[1] < g[0]));
}

#[test]
fn recovery_with_zero_data_is_zero() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rec");
    let o = run("recovery", "[model]\nkind = \"lvk\"\n", &out, &[]);
    ok(&o);
    let t = Csv::read(&out.join("recovery.csv"));
    for c in ["recovery", "limit", "rel_error"] {
        assert!(t.col(c).iter().all(|&v| v == 0.0), "column {c}");
    }
    assert!(out.join("rel_error.dat").exists());
}

#[test]
fn recovery_config_in_repo_converges() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rec");
    let o = Command::new(BIN)
        .args(["recovery", "--config"])
        .arg(workspace_configs().join("recovery_lvk.toml"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    ok(&o);
    let e = Csv::read(&out.join("recovery.csv")).col("rel_error");
    assert!(e.windows(2).all(|p| p[1] < p[0]));
    assert!(*e.last().unwrap() <= 5e-3);
}

#[test]
fn gradcheck_on_ten_vk_fields() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g");
    let o = run("gradcheck", "[model]\nkind = \"vk\"\n[gradcheck]\nfields = 10\nseed = 9\n", &out, &[]);
    ok(&o);
    let t = Csv::read(&out.join("gradcheck.csv"));
    assert_eq!(t.rows.len(), 10);
    assert!(t.col("rel_error").iter().all(|&e| e <= 1e-6));
}

#[test]
fn clamped_beam_midpoint_deflection() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("beam");
    let cfg = "[model]\nkind = \"lvk\"\nconstraints = \"clamped\"\n[loads.q_w]\npoly = [1.0]\n";
    let o = run("minimize1d", cfg, &out, &[]);
    ok(&o);
    let t = Csv::read(&out.join("field.csv"));
    let x = t.col("x");
    let mid = x.iter().position(|&x| x == 0.0).expect("midpoint node");
    // B = E/12 with E = μ(2μ+3λ)/(μ+λ) = 5/2 for μ = λ = 1.
    let exact = 1.0 / (384.0 * 2.5 / 12.0);
    let w = t.col("w")[mid];
    assert!(((w - exact) / exact).abs() <= 1e-8, "{w} vs {exact}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    for cfg in ["[geometry]\nlength = 2.0\n", "epsilon = [0.1]\n", "[solver]\ntolerance = 1e-8\n"] {
        let out = dir.path().join("bad");
        let o = run("density", cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        let e = stderr_json(&o);
        assert_eq!(e["status"], "error");
        assert_eq!(e["kind"], "config");
        assert!(!out.join("manifest.json").exists());
    }
}

#[test]
fn invalid_values_are_rejected() {
    let dir = TempDir::new().unwrap();
    for cfg in [
        "eps = [0.1, -0.2]\n",
        "[geometry]\nell = 0.0\n",
        "[material]\nmu = 1.0\n",
        "[material]\nmu = 1.0\nlambda = 1.0\nrep = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\n",
        "[material]\nrep = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]\n",
    ] {
        let o = run("alpha", cfg, &dir.path().join("bad"), &[]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        assert_eq!(stderr_json(&o)["kind"], "config");
    }
}

#[test]
fn failed_check_reports_json_after_writing_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rec");
    let cfg = r#"
eps = [0.2, 0.1]
[recovery]
w = { cos = [{ amplitude = 0.1, wavenumber = 6.283185307179586 }] }
theta = { poly = [0.0, 0.4] }
[tolerances]
recovery = 1e-12
"#;
    let o = run("recovery", cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["kind"], "assertion");
    assert_eq!(e["failed"][0]["name"], "final_rel_error");
    assert!(out.join("recovery.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn cvk_recovery_rejects_non_developable_data() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rec");
    // |θ'| > |w''| everywhere puts the relaxed minimizer off the developable branch.
    let cfg = "[model]\nkind = \"cvk\"\n[recovery]\nw = { poly = [0.0, 0.0, 0.1] }\ntheta = { poly = [0.0, 1.0] }\n";
    let o = run("recovery", cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["kind"], "computation");
    assert!(e["message"].as_str().unwrap().contains("chart"));
}

#[test]
fn identical_config_gives_identical_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"
eps = [0.2, 0.1]
[model]
kind = "vk"
[geometry]
nx_per_length = 8
ny = 4
[[loads.q_w.cos]]
amplitude = 0.3
wavenumber = 6.283185307179586
"#;
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&run("gamma-sweep", cfg, &a, &["--threads", "1"]));
    ok(&run("gamma-sweep", cfg, &b, &["--threads", "3"]));
    for f in ["sweep.csv", "min2d.dat", "recovery.dat"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let g = dir.path().join("g");
    let h = dir.path().join("h");
    ok(&run("gradcheck", "[gradcheck]\nseed = 4\n", &g, &[]));
    ok(&run("gradcheck", "[gradcheck]\nseed = 4\n", &h, &[]));
    assert_eq!(fs::read(g.join("gradcheck.csv")).unwrap(), fs::read(h.join("gradcheck.csv")).unwrap());
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("a");
    ok(&run("alpha", "[alpha]\nsamples = 1000\n", &out, &[]));
    let text = fs::read_to_string(out.join("alpha.csv")).unwrap();
    assert!(text.starts_with("# vk-ribbon "));
    assert!(text.lines().any(|l| l.starts_with("# config-sha256 ")));
    let row = text.lines().last().unwrap();
    let first = row.split(',').next().unwrap();
    let mantissa = first.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{first}");
}

#[test]
fn repository_configs_parse() {
    let dir = TempDir::new().unwrap();
    let mut n = 0;
    for entry in fs::read_dir(workspace_configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = Command::new(BIN)
                .args(["alpha", "--config"])
                .arg(&path)
                .arg("--out")
                .arg(dir.path().join(path.file_stem().unwrap()))
                .output()
                .unwrap();
            ok(&o);
            n += 1;
        }
    }
    assert!(n >= 5);
}
