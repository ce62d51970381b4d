mod common;

use common::suites::{containment_suite, delay_suite, dtp_suite, forget_suite, window_suite, SuiteReport};

const INSTANCES: usize = 50;

fn check(report: SuiteReport) {
    eprintln!("{report}");
    for d in report.disagreements.iter().take(3) {
        eprintln!("  {d}");
    }
    assert!(report.passed(INSTANCES), "{report}");
}

#[test]
fn dtp_agrees_with_oracle() {
    check(dtp_suite(INSTANCES, 11));
}

#[test]
fn forget_agrees_with_oracle() {
    check(forget_suite(INSTANCES, 12));
}

#[test]
fn containment_agrees_with_oracle() {
    check(containment_suite(INSTANCES, 13));
}

#[test]
fn delay_agrees_with_oracle() {
    check(delay_suite(INSTANCES, 14));
}

#[test]
fn window_agrees_with_oracle() {
    check(window_suite(INSTANCES, 15));
}
