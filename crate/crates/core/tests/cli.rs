use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use magslab::cli::table::Table;

const STRONG: &str = r#"
[model]
b = 8.0
nu = 1.0

[grid]
length = 16.0
npoints = 321

[profile]
kind = "gaussian"
width = 1.0
"#;

fn magslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn summary_value(dir: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("summary has no {key}"))
}

#[test]
fn penalty_table_matches_bounds_and_touch_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = magslab(&["penalty-table", "--b", "1", "--g-max", "1", "--steps", "101", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let t = Table::read(&dir.path().join("penalty_table.tsv")).unwrap();
    assert_eq!(t.rows.len(), 101);
    assert_eq!(t.get_meta("b"), Some("1e0"));
    for c in ["g", "F", "lower_bound", "upper_bound", "f_minus", "f_plus"] {
        assert!(t.column_index(c).is_some(), "missing column {c}");
    }
    let touch = Table::read(&dir.path().join("penalty_touch_points.tsv")).unwrap();
    let g = touch.column("g").unwrap();
    let f = touch.column("F").unwrap();
    let bound = touch.column("bound").unwrap();
    let i = g.iter().position(|&x| (x - 1.0 / (4.0 * PI)).abs() < 1e-15).unwrap();
    assert_eq!(touch.rows[i][3], "upper");
    assert!((f[i] - bound[i]).abs() < 1e-15);
}

#[test]
fn spin_table_stays_below_thomas_fermi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = magslab(&["penalty-table", "--b", "1", "--spin", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let t = Table::read(&dir.path().join("penalty_table.tsv")).unwrap();
    assert_eq!(t.get_meta("spin"), Some("true"));
    let g = t.column("g").unwrap();
    let f = t.column("F").unwrap();
    for (g, f) in g.iter().zip(&f) {
        assert!(*f <= 0.5 * PI * g * g + 1e-15);
    }
}

#[test]
fn penalty_table_rejects_single_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = magslab(&["penalty-table", "--steps", "1", "--out", &out.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steps"));
    assert!(!out.exists());
}

#[test]
fn strong_field_solve_is_rank_one_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strong.toml", STRONG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = magslab(&["solve", "--config", &cfg, "--out", &out.display().to_string()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(summary_value(&a, "rank"), "1");
    assert_eq!(summary_value(&a, "converged"), "true");
    let penalty: f64 = summary_value(&a, "energy_penalty").parse().unwrap();
    assert!((penalty - 4.0).abs() <= 1e-10);
    for f in ["summary.txt", "density.tsv", "orbitals.tsv", "bands.tsv", "history.tsv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn solve_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strong.toml", STRONG);
    let out = dir.path().join("o");
    let o = magslab(&["solve", "--config", &cfg, "--out", &out.display().to_string()]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["density.tsv", "orbitals.tsv", "bands.tsv", "history.tsv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        let t = Table::parse(&text).unwrap();
        assert_eq!(t.render(), text, "{f}");
        assert!(t.columns.iter().all(|c| !c.is_empty()));
        assert!(t.get_meta("build").is_some());
    }
    let d = Table::read(&out.join("density.tsv")).unwrap();
    let rho = d.column("rho").unwrap();
    let h = 16.0 / 320.0;
    let total: f64 = h * (rho.iter().sum::<f64>() - 0.5 * (rho[0] + rho[rho.len() - 1]));
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn missing_profile_is_invalid_input_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = STRONG.replace("[profile]\nkind = \"gaussian\"\nwidth = 1.0\n", "");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = dir.path().join("o");
    let o = magslab(&["solve", "--config", &cfg, "--out", &out.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("profile"));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{STRONG}\n[solver]\nmixng_alpha = 0.2\n"));
    let o = magslab(&["solve", "--config", &cfg, "--out", &dir.path().join("o").display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mixng_alpha"));
}

#[test]
fn non_convergence_exits_two_with_best_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "short.toml", &format!("{STRONG}\n[solver]\nmax_iterations = 2\n"));
    let out = dir.path().join("o");
    let o = magslab(&["solve", "--config", &cfg, "--out", &out.display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(summary_value(&out, "converged"), "false");
    assert!(out.join("density.tsv").exists());
}

#[test]
fn verify_reduction_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = magslab(&["verify", "--suite", "reduction", "--seed", "42", "--out", &dir.path().display().to_string()]);
    assert_eq!(o.status.code(), Some(0));
    let t = Table::read(&dir.path().join("verify_report.tsv")).unwrap();
    let samples = t.column("samples").unwrap();
    let errors = t.column("max_error").unwrap();
    assert!(t.rows.iter().all(|r| r[5] == "pass"));
    let identity = t.rows.iter().position(|r| r[1].contains("level energy")).unwrap();
    assert_eq!(samples[identity], 1000.0);
    assert!(errors[identity] < 1e-10);
}

#[test]
fn verify_moyal_passes() {
    let o = magslab(&["verify", "--suite", "moyal"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\tpass"));
}

#[test]
fn verify_unknown_suite_lists_choices() {
    let o = magslab(&["verify", "--suite", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    for s in magslab::cli::verify::SUITES {
        assert!(err.contains(s), "{err}");
    }
}

#[test]
fn sweep_is_monotone_with_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strong.toml", STRONG);
    let out = dir.path().join("sweep");
    let o = magslab(&["sweep-b", "--config", &cfg, "--b", "2,0.5,1,0,8,12", "--out", &out.display().to_string()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::read(&out.join("sweep.tsv")).unwrap();
    let b = t.column("b").unwrap();
    assert_eq!(b, vec![0.0, 0.5, 1.0, 2.0, 8.0, 12.0]);
    assert_eq!(t.rows[0][9], "reference");
    let total = t.column("total").unwrap();
    for w in total.windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "{total:?}");
    }
    let k = t.column("kinetic").unwrap();
    let h = t.column("hartree").unwrap();
    assert!(((k[4] + h[4]) - (k[5] + h[5])).abs() < 1e-7);
    assert!(out.join("b_reference").join("summary.txt").exists());
    assert!(out.join("b_8").join("density.tsv").exists());
}

#[test]
fn sweep_without_fields_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strong.toml", STRONG);
    let o = magslab(&["sweep-b", "--config", &cfg, "--out", &dir.path().join("s").display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty b list"));
}

#[test]
fn shipped_configs_are_valid() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["strong_field.toml", "weak_field.toml", "sweep.toml", "tabulated.toml"] {
        let run = magslab::cli::config::RunConfig::load(&root.join(name)).unwrap();
        run.scf_config(None).unwrap();
    }
}
