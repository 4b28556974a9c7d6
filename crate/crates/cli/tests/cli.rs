use std::f64::consts::FRAC_2_PI;
use std::path::Path;
use std::process::{Command, Output};

use llep_core::exceptional::{repolish, ExceptionalPoint};
use llep_core::io::{parse_f64, ExportRecord, Payload};
use llep_core::{solve_k_real, Parity};
use num_complex::Complex64;
use serde_json::Value;

fn llep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn table(args: &[&str]) -> (ExportRecord, Vec<Vec<String>>, Vec<String>) {
    let rec = ExportRecord::parse(&stdout(&llep(args))).unwrap();
    let Payload::Table(t) = rec.payload.clone() else { panic!("expected a table") };
    (rec, t.rows, t.columns)
}

fn document(args: &[&str]) -> Value {
    let rec = ExportRecord::parse(&stdout(&llep(args))).unwrap();
    let Payload::Document(d) = rec.payload else { panic!("expected a document") };
    d
}

fn num(s: &str) -> f64 {
    parse_f64(s).unwrap()
}

fn solve_k(n: &str, g: &str) -> Complex64 {
    let (_, rows, cols) = table(&["solve", "--n", n, "--g", g]);
    assert_eq!(cols[2..4], ["re_k", "im_k"]);
    Complex64::new(num(&rows[0][2]), num(&rows[0][3]))
}

#[test]
fn solve_examples() {
    assert_eq!(solve_k("2", "0"), Complex64::new(2.0, 0.0));
    assert!((solve_k("2", "1e6") - 3.0).norm() < 1e-3);
    let k = solve_k("0", "-10");
    assert!(k.re.abs() < 1e-8 && (k.im + 10.0).abs() < 1.0);
}

#[test]
fn solve_reports_energy_and_rejects_parity_mismatch() {
    let (_, rows, cols) = table(&["solve", "--n", "2", "--g", "1", "--kbar", "2"]);
    let e = cols.iter().position(|c| c == "re_energy").unwrap();
    let k = solve_k_real(2, 1.0).unwrap().k.re;
    assert!((num(&rows[0][e]) - 0.5 * (k * k + 4.0)).abs() < 1e-12);
    let out = llep(&["solve", "--n", "2", "--g", "1", "--kbar", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_failure_is_exit_two() {
    let out = llep(&["solve", "--n", "3", "--g", "5", "--newton-max", "1", "--residual-tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

fn ep_rows(parity: &str, n_max: &str) -> Vec<Vec<String>> {
    table(&["--parity", parity, "eps", "--n-max", n_max]).1
}

#[test]
fn ep_tables_lie_left_of_the_branch_points() {
    let even = ep_rows("even", "8");
    assert_eq!(even.len(), 4);
    assert!(even.iter().all(|r| num(&r[2]) < 0.0 && r[8] == "ok"));
    let odd = ep_rows("odd", "9");
    assert_eq!(odd.len(), 4);
    assert!(odd.iter().all(|r| num(&r[2]) < -FRAC_2_PI && r[8] == "ok"));
}

#[test]
fn ep_rows_repolish_to_themselves() {
    let rows = ep_rows("even", "2");
    let r = &rows[0];
    let ep = ExceptionalPoint {
        n: 2,
        n_b: 0,
        g_ep: Complex64::new(num(&r[2]), num(&r[3])),
        k_ep: Complex64::new(num(&r[4]), num(&r[5])),
        parity: Parity::Even,
    };
    let again = repolish(&ep).unwrap();
    assert!((again.g_ep - ep.g_ep).norm() < 1e-13);
    assert!((again.k_ep - ep.k_ep).norm() < 1e-13);
}

fn assert_matches_golden(fixture: &str, rows: &[Vec<String>]) {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(fixture)).unwrap();
    let Payload::Table(golden) = ExportRecord::parse(&text).unwrap().payload else { panic!() };
    assert_eq!(golden.rows.len(), rows.len());
    for (g, r) in golden.rows.iter().zip(rows) {
        assert_eq!(g[..2], r[..2]);
        for col in 2..6 {
            assert!((num(&g[col]) - num(&r[col])).abs() < 1e-12, "{fixture} n={} col {col}", r[0]);
        }
    }
}

#[test]
fn ep_tables_match_golden_fixtures() {
    assert_matches_golden("eps_even.csv", &ep_rows("even", "8"));
    assert_matches_golden("eps_odd.csv", &ep_rows("odd", "9"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let args = ["eps", "--n-max", "6"];
    assert_eq!(stdout(&llep(&args)), stdout(&llep(&args)));
}

#[test]
fn sheet_real_row_matches_solve() {
    let args = [
        "sheet", "--n", "2", "--grid-re-min", "-3", "--grid-re-max", "2", "--grid-im-min", "-1", "--grid-im-max", "1",
        "--grid-n-re", "11", "--grid-n-im", "5",
    ];
    let (_, rows, _) = table(&args);
    assert_eq!(rows.len(), 55);
    let mut checked = 0;
    for r in rows.iter().filter(|r| num(&r[1]) == 0.0) {
        let g = num(&r[0]);
        let k = solve_k_real(2, g).unwrap().k;
        assert!((num(&r[2]) - k.re).abs() < 1e-12 && num(&r[3]) == k.im, "g={g}");
        checked += 1;
    }
    assert_eq!(checked, 11);
}

fn lower_cut_lines(n: &str) -> Vec<f64> {
    let (_, rows, _) = table(&["sheet", "--n", n, "--cuts", "--grid-n-re", "41", "--grid-n-im", "41"]);
    let mut lines: Vec<f64> = rows.iter().filter(|r| num(&r[2]) < 0.0).map(|r| num(&r[0])).collect();
    lines.sort_by(f64::total_cmp);
    lines.dedup();
    lines
}

#[test]
fn sheet_cuts() {
    let ground = lower_cut_lines("0");
    assert!(ground.len() > 1 && ground.iter().all(|&x| x < 0.0), "{ground:?}");
    assert_eq!(lower_cut_lines("4").len(), 1);
}

fn matrix(v: &Value) -> Vec<Vec<Complex64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|z| Complex64::new(z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
                .collect()
        })
        .collect()
}

#[test]
fn holonomy_ep_loop_gives_the_swap() {
    let d = document(&["holonomy", "ep-loop", "--n", "2"]);
    assert!(d["max_deviation"].as_f64().unwrap() < 1e-6);
    let m = matrix(&d["matrix"]);
    assert!((m[0][1] + 1.0).norm() < 1e-6 && (m[1][0] - 1.0).norm() < 1e-6);
    assert_eq!(d["status"], "Complete");
    assert_eq!(d["permutation"][0]["to"], 2);
}

#[test]
fn holonomy_chain_and_empty() {
    let d = document(&["holonomy", "chain", "--m", "2"]);
    assert!(d["max_deviation"].as_f64().unwrap() < 1e-6);
    assert_eq!(d["contour"]["eps"].as_array().unwrap().len(), 2);
    let e = document(&["--n-levels", "5", "holonomy", "empty"]);
    assert_eq!(e["max_deviation"].as_f64(), Some(0.0));
    let m = matrix(&e["matrix"]);
    for (i, row) in m.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            assert_eq!(*z, Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        }
    }
}

#[test]
fn holonomy_odd_family_and_path_ordering_flag() {
    let d = document(&["--parity", "odd", "--n-levels", "6", "holonomy", "--g0", "0.5", "ep-loop", "--n", "3"]);
    assert!(d["max_deviation"].as_f64().unwrap() < 1e-6);
    // The wrong factor order need not even produce a permutation.
    let out = llep(&["--ordering", "path-ordered", "holonomy", "chain", "--m", "2"]);
    assert!(matches!(out.status.code(), Some(0 | 3)));
    let rec = ExportRecord::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let Payload::Document(p) = rec.payload else { panic!() };
    assert_eq!(p["ordering"], "PathOrdered");
    assert!(p["max_deviation"].as_f64().unwrap() > 0.5);
}

#[test]
fn escaping_level_is_inconclusive() {
    let out = llep(&["--n-levels", "2", "holonomy", "ep-loop", "--n", "4"]);
    assert_eq!(out.status.code(), Some(3));
    let rec = ExportRecord::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let Payload::Document(d) = rec.payload else { panic!() };
    assert_eq!(d["status"], "Inconclusive");
    assert!(d["closed_form"].is_null());
}

#[test]
fn cycle_shifts_by_two() {
    let d = document(&["--n-levels", "6", "cycle", "--g0", "1"]);
    for m in d["permutation"].as_array().unwrap() {
        assert_eq!(m["to"].as_u64().unwrap(), m["from"].as_u64().unwrap() + 2);
    }
}

#[test]
fn oracle_check_agrees() {
    let d = document(&["--n-levels", "4", "oracle-check", "--g", "1"]);
    assert_eq!(d["agrees"], true);
    let strict = llep(&["--n-levels", "4", "oracle-check", "--g", "1", "--tolerance", "1e-30"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn config_file_flags_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small odd run\nparity = odd\nn_levels = 4\n").unwrap();
    let out = dir.path().join("eps.csv");
    let cfg_s = cfg.to_str().unwrap();
    let out_s = out.to_str().unwrap();
    let status = llep(&["--config", cfg_s, "--out", out_s, "eps", "--n-max", "5"]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let rec = ExportRecord::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let expected = llep_core::RunConfig::load(&cfg).unwrap().hash();
    assert_eq!(rec.config_hash, expected);
    let Payload::Table(t) = rec.payload else { panic!() };
    assert_eq!(t.rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["3", "5"]);

    // Flags override the file and change the hash.
    let (over, rows, _) = table(&["--config", cfg_s, "--parity", "even", "eps", "--n-max", "5"]);
    assert_ne!(over.config_hash, expected);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "2");
}

#[test]
fn bad_configuration_is_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "proxy_infinity = 10\n").unwrap();
    let out = llep(&["--config", cfg.to_str().unwrap(), "solve", "--n", "2", "--g", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("proxy_infinity"));
    assert_eq!(llep(&["solve", "--n", "2"]).status.code(), Some(1));
    assert_eq!(llep(&["--transport-rtol", "-1", "solve", "--n", "2", "--g", "1"]).status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = llep(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for word in ["solve", "eps", "sheet", "holonomy", "cycle", "oracle-check", "--loop-radius"] {
        assert!(text.contains(word), "help lacks {word}");
    }
}
