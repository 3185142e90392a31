//! Acceptance gate: one test per criterion of the suite in
//! `qhermite::acceptance`, each printing a single pass/fail line with the
//! measured detail before asserting.

use qhermite::acceptance::{run_criterion, CriterionOutcome};

fn gate(id: u8) {
    let CriterionOutcome {
        id,
        name,
        pass,
        detail,
    } = run_criterion(id);
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{status}] {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_triple_product_identity() {
    gate(1);
}

#[test]
fn criterion_02_remainder_lemma_bounds() {
    gate(2);
}

#[test]
fn criterion_03_evaluation_oracle_triangle() {
    gate(3);
}

#[test]
fn criterion_04_regime_1_unconditional_decay() {
    gate(4);
}

#[test]
fn criterion_05_regime_2_progressions() {
    gate(5);
}

#[test]
fn criterion_06_regime_3_hit_sequence() {
    gate(6);
}

#[test]
fn criterion_07_regime_4_strip_sweep() {
    gate(7);
}

#[test]
fn criterion_08_regime_5_strip_hits() {
    gate(8);
}

#[test]
fn criterion_09_regime_6_strip_hits() {
    gate(9);
}

#[test]
fn criterion_10_regime_7_double_hits() {
    gate(10);
}

#[test]
fn criterion_11_diophantine_layer() {
    gate(11);
}

#[test]
fn criterion_12_split_coefficient_bounds() {
    gate(12);
}

#[test]
fn criterion_13_sweep_determinism() {
    gate(13);
}
