//! One line per acceptance criterion. Criterion 9 cannot hold for its
//! prescribed pair (the two axes share the endpoint at infinity), so it is
//! expected to fail with the elementary-pair error; every other criterion
//! must pass.

use std::io::Write;
use std::process::Command;

use gromolab::acceptance::run_criteria;
use serde_json::Value;

const UNATTAINABLE: u32 = 9;

fn verify_bytes(seed: &str) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_gromolab")).args(["verify", "--seed", seed]).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

#[test]
fn acceptance_criteria() {
    let mut criteria = run_criteria(0);
    let (code_a, a) = verify_bytes("0");
    let (code_b, b) = verify_bytes("0");
    let report: Value = serde_json::from_slice(&a).unwrap();
    let listed = report["result"]["criteria"].as_array().unwrap();
    criteria.push(gromolab::acceptance::Criterion {
        id: 12,
        name: "determinism",
        passed: a == b && code_a == code_b && listed.len() == 12,
        detail: Value::Null,
    });

    // written to the raw handle so the lines show without --nocapture
    let mut err = std::io::stderr().lock();
    writeln!(err).unwrap();
    let mut unexpected = Vec::new();
    for c in &criteria {
        writeln!(err, "{}", c.summary_line()).unwrap();
        if c.passed != (c.id != UNATTAINABLE) {
            unexpected.push(c.id);
        }
    }
    assert_eq!(criteria.len(), 12);
    assert!(unexpected.is_empty(), "unexpected outcome for criteria {unexpected:?}");

    let nine = &criteria[8];
    let msg = nine.detail["conjugate_pair"]["error"].as_str().unwrap_or_default();
    assert!(msg.contains("elementary"), "{}", nine.detail);
    assert_eq!(nine.detail["p_min"], 11);
    // the binary reports the failed criterion through its exit code
    assert_eq!(code_a, 1);
}
