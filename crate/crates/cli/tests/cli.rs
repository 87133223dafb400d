//! End-to-end checks of the binary: exit codes, JSON shape, determinism.

use std::process::Command;

fn reglab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reglab"))
}

#[test]
fn verify_theorem_passes_on_the_headline_triple() {
    let out = reglab()
        .args([
            "verify-theorem",
            "--level",
            "15",
            "--a",
            "7",
            "--b",
            "4",
            "--c",
            "3",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn verify_theorem_diagonal_is_zero_and_passes() {
    let out = reglab()
        .args([
            "verify-theorem",
            "--level",
            "15",
            "--a",
            "7",
            "--b",
            "7",
            "--c",
            "3",
            "--json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reg = v["outputs"][0]["value"].as_f64().unwrap();
    assert_eq!(reg, 0.0);
}

#[test]
fn verify_theorem_rejects_inadmissible_input() {
    // ac = 15 ≡ 0 mod 15
    let out = reglab()
        .args([
            "verify-theorem",
            "--level",
            "15",
            "--a",
            "5",
            "--b",
            "4",
            "--c",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("inadmissible"), "stderr: {err}");
}

#[test]
fn factor_unit_roundtrip_through_json() {
    use reglab::siegel::siegel_qexp;
    let x = siegel_qexp(7, 15, 60)
        .unwrap()
        .div(&siegel_qexp(2, 15, 60).unwrap())
        .unwrap();
    let dir = std::env::temp_dir().join("reglab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("g7_over_g2.json");
    std::fs::write(&path, serde_json::to_string(&x.to_json()).unwrap()).unwrap();
    let out = reglab()
        .args([
            "factor-unit",
            "--level",
            "15",
            "--qexp",
            path.to_str().unwrap(),
            "--json",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let exps = &v["outputs"][0]["value"];
    assert_eq!(exps["7"], serde_json::json!(1));
    assert_eq!(exps["2"], serde_json::json!(-1));
}

#[test]
fn reports_are_byte_deterministic() {
    let run = || {
        reglab()
            .args(["mahler", "--k", "1", "--json"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn lvalue_combo_cli_matches_library() {
    let out = reglab()
        .args(["lvalue", "--combo", "7,4,3:1", "--level", "15", "--json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let got = v["outputs"][0]["value"][0].as_f64().unwrap();

    use num_complex::Complex64;
    use reglab::eisenstein::{weight2_combo, ComboTerm};
    use reglab::lvalue::{lvalue_combo, suggested_combo_order};
    let combo = weight2_combo(
        &[ComboTerm::new(7, 4, 3, Complex64::new(1.0, 0.0))],
        15,
        suggested_combo_order(15, 1e-9),
    )
    .unwrap();
    let expect = lvalue_combo(&combo, 1e-8).unwrap().value.re;
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
}

#[test]
fn mahler_k2_consistent_with_example_3_lvalue() {
    let out = reglab()
        .args(["mahler", "--k", "2", "--json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let m = v["outputs"][0]["value"].as_f64().unwrap();

    // C * L(f24, 2) with C = 6/pi^2, through the library
    use num::{BigInt, BigRational};
    use reglab::examples::{eta_combination_coeffs, example_record};
    use reglab::lvalue::lvalue_qexp;
    use reglab::qseries::{expdenom, QExp};
    let rec = example_record(3).unwrap();
    let ints = eta_combination_coeffs(rec.f_eta.as_ref().unwrap(), 2000).unwrap();
    let d = expdenom(24);
    let coeffs: Vec<BigRational> = ints[1..]
        .iter()
        .map(|&c| BigRational::from(BigInt::from(c)))
        .collect();
    let f = QExp::from_rational_coeffs(24, d, d, coeffs, 2001 * d);
    let l = lvalue_qexp(&f, 2, 1e-8).unwrap();
    let expect = 6.0 / std::f64::consts::PI.powi(2) * l.value.re;
    assert!((m - expect).abs() < 1e-5, "{m} vs {expect}");
}

#[test]
fn regulator_accepts_negative_cusps() {
    let out = reglab()
        .args([
            "regulator",
            "--level",
            "15",
            "--u",
            "7:1,2:-1",
            "--v",
            "4:1,1:-1@-1",
            "--from",
            "-3",
            "--to",
            "3",
            "--json",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let over_2pi = v["outputs"][1]["value"].as_f64().unwrap();
    // the classical measure of 1 + x + 1/x + y + 1/y
    assert!(
        (over_2pi - 0.25133043371325).abs() < 1e-10,
        "got {over_2pi}"
    );
}

#[test]
fn example_1_pipeline_passes() {
    let out = reglab().args(["example", "--id", "1"]).output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn bad_example_id_is_invalid_input() {
    let out = reglab().args(["example", "--id", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
