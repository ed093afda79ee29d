//! End-to-end acceptance run: all nine suite criteria, one pass/fail line
//! each, failing the target if any criterion fails or overruns its budget.

use otmr_core::suite::{run_all, SuiteConfig};

#[test]
fn acceptance() {
    let reports = run_all(&SuiteConfig::default());
    let mut failed = Vec::new();
    for rep in &reports {
        println!("{}", rep.line(false));
        if !rep.passed {
            failed.push(rep.number);
        }
    }
    assert!(
        failed.is_empty(),
        "failed criteria: {failed:?} (see the lines above)"
    );
}
