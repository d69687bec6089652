use assert_cmd::Command;
use predicates::prelude::*;

fn valdef() -> Command {
    Command::cargo_bin("valdef").unwrap()
}

#[test]
fn robinson_integral_exits_zero() {
    valdef()
        .args(["robinson", "--p", "5", "--x", "7"])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("True"));
}

#[test]
fn robinson_non_integral_exits_one() {
    valdef()
        .args(["robinson", "--p", "5", "--x", "1/5"])
        .assert()
        .code(1)
        .stdout(predicate::str::contains("False"));
}

#[test]
fn phi_z_rejects_negative_valuation() {
    valdef()
        .args([
            "phi-z",
            "--field",
            "Laurent(Fp(3))",
            "--p",
            "3",
            "--x",
            "t^-2",
        ])
        .assert()
        .code(1);
}

#[test]
fn phi_z_accepts_units() {
    valdef()
        .args(["phi-z", "--field", "Qp(5)", "--p", "2", "--x", "1 + 5"])
        .assert()
        .code(0);
}

#[test]
fn malformed_element_is_a_usage_error() {
    valdef()
        .args(["robinson", "--p", "5", "--x", "1 +"])
        .assert()
        .code(64);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    valdef().args(["robinson", "--nope"]).assert().code(64);
}

#[test]
fn help_exits_zero() {
    valdef().arg("--help").assert().code(0);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let args = [
        "phi-z",
        "--field",
        "Laurent(Fp(3))",
        "--p",
        "3",
        "--x",
        "1 + t",
        "--seed",
        "9",
        "--json",
    ];
    let a = valdef().args(args).assert().code(0);
    let b = valdef().args(args).assert().code(0);
    assert_eq!(
        a.get_output().stdout,
        b.get_output().stdout,
        "same configuration must emit byte-identical JSON"
    );
}

#[test]
fn table_labels_computed_and_cited() {
    valdef()
        .args(["table", "--l", "3"])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("(computed)").and(predicate::str::contains("(cited)")));
}

#[test]
fn table_json_has_three_rows() {
    let out = valdef()
        .args(["table", "--l", "5", "--json"])
        .assert()
        .code(0);
    let v: serde_json::Value =
        serde_json::from_slice(&out.get_output().stdout).expect("valid JSON table");
    assert_eq!(v["rows"].as_array().map(|r| r.len()), Some(3));
}

#[test]
fn eval_runs_a_formula() {
    valdef()
        .args([
            "eval",
            "--field",
            "Qp(5)",
            "--formula",
            "E y. y^2 = x",
            "--x",
            "4",
        ])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("True"));
}

#[test]
fn counterexample_audit_only_for_algebraically_closed_base() {
    valdef()
        .args(["counterexample", "--base", "C", "--samples", "5"])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("elementarily equivalent"));
}
