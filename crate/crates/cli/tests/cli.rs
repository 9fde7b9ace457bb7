use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hqsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqsp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Value of a `key: value` header line.
fn header_value(text: &str, key: &str) -> f64 {
    text.lines().find_map(|l| l.strip_prefix(&format!("# {key}: "))).unwrap_or_else(|| panic!("no {key} line")).trim().parse().unwrap()
}

/// Number inside `[...]` on the first line containing `key`.
fn bracketed(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.contains(key)).unwrap_or_else(|| panic!("no line with {key}"));
    let inner = line.split('[').nth(1).unwrap().trim_end_matches(']');
    inner.parse().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn zero_potential_gives_unit_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[fourier.potential]\nkind = \"zero\"\n");
    let out = tmp.path().join("out");
    let o = hqsp(&["approximate", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out, "series_custom.csv");
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, vec!["k,re,im", "0,1,0"]);
}

#[test]
fn morse_series_meets_its_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = hqsp(&["approximate", "--modes", "nu26", "--states", "D2", "--epsilon", "1e-3", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = read(&out, "series_nu26_D2.csv");
    assert!(header_value(&csv, "tail_bound") <= 1e-3);
    assert!(header_value(&csv, "degree") > 0.0);
    assert!(read(&out, "degree_report.txt").contains("nu26_D2"));
}

#[test]
fn missing_dataset_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.toml");
    let o = hqsp(&["approximate", "--dataset", missing.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(missing.to_str().unwrap()));
    let bad = write_config(tmp.path(), "fock_dimm = 3\n");
    assert_eq!(hqsp(&["estimate", "-c", &bad]).status.code(), Some(2));
}

#[test]
fn unreachable_degree_exits_with_numerical_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[fourier]\nmax_degree = 2\nepsilon = 1e-9\n");
    let out = tmp.path().join("out");
    let o = hqsp(&["approximate", "-c", &cfg, "--modes", "nu26", "--states", "D2", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn identity_gate_has_unit_fidelity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "fock_dim = 16\n[fourier.potential]\nkind = \"zero\"\n[synthesize]\ndegree = 4\nrefine = false\n");
    let out = tmp.path().join("out");
    let o = hqsp(&["synthesize", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&out, "synthesis_report.txt");
    assert!((bracketed(&report, "vacuum fidelity (unrefined)") - 1.0).abs() <= 1e-10);
    assert!(out.join("angles.toml").exists());
}

#[test]
fn morse_gate_synthesis_with_wigner_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = hqsp(&["synthesize", "--degree", "39", "--no-refine", "--wigner", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let report = read(&out, "synthesis_report.txt");
    assert!(report.contains("degree d: 39"));
    assert!(bracketed(&report, "vacuum fidelity (unrefined)") > 0.99);
    assert!(report.contains("haar reference 0 fidelity"));
    for f in ["wigner_target.csv", "wigner_synthesized.csv"] {
        assert!(read(&out, f).starts_with("# hqsp "));
    }
    let angles = read(&out, "angles.toml");
    let body: String = angles.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert!(hybrid_qsp::gqsp::GqspProgram::from_toml_str(&body).is_ok());
}

#[test]
fn simulation_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = |d: &Path| {
        vec!["simulate", "--dim", "10", "--p", "10", "--t-total", "4", "--seed", "5", "-o"]
            .into_iter()
            .map(String::from)
            .chain([d.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    for d in [&a, &b] {
        let v = args(d);
        let o = hqsp(&v.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["populations_compiled.csv", "populations_oracle_trotterized.csv", "comparison.txt"] {
        assert_eq!(read(&a, f), read(&b, f), "{f} differs");
    }
}

#[test]
fn single_short_step_matches_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = hqsp(&["simulate", "--dim", "12", "--p", "1", "--t-total", "0.2", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let report = read(&out, "comparison.txt");
    let tails: Vec<f64> = report.lines().filter(|l| l.starts_with("gate ")).map(|l| l.rsplit(' ').next().unwrap().parse().unwrap()).collect();
    let tail = tails.iter().cloned().fold(0.0, f64::max);
    let dev: f64 = report.lines().find_map(|l| l.strip_prefix("overall max deviation: ")).unwrap().parse().unwrap();
    assert!(dev <= 2.0 * tail, "{dev} vs {tail}");
}

#[test]
fn guard_breach_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hqsp(&["simulate", "--modes", "all", "--states", "all", "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn uracil_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = hqsp(&["estimate", "--modes", "all", "--states", "all", "--degree", "40", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out, "resources.txt");
    assert!(text.contains("states (N = 4)") && text.contains("modes (M = 12)") && text.contains("M' = 5"));
    let csv = read(&out, "resources_0.csv");
    let shot: f64 = csv.lines().find_map(|l| l.strip_prefix("shot_factor,")).unwrap().parse().unwrap();
    assert!((shot - 122.0).abs() <= 0.05 * 122.0);
    assert!(stdout(&o).contains("reference degree 116"));
    let hash = |s: &str| s.lines().find(|l| l.starts_with("# config-sha256")).unwrap().to_string();
    assert_eq!(hash(&csv), hash(&text));
    assert_eq!(hash(&csv), hash(&read(&out, "tradeoff.csv")));
}

#[test]
fn harmonic_estimate_always_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = hqsp(&["estimate", "--modes", "nu21,nu7", "--states", "all", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = read(&out, "resources_0.csv");
    assert!(csv.contains("success_probability,1.000000000000e0"));
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seed = 3\nfock_dim = 20\n");
    let out = tmp.path().join("out");
    let o = hqsp(&["estimate", "-c", &cfg, "--dim", "8", "--degree", "5", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let eff = read(&out, "config.toml");
    assert!(eff.contains("fock_dim = 8") && eff.contains("seed = 3"));
}
