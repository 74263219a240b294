//! Runs the invariant suite on the Cauliflower pair.

use lamina::cli::verify_suite;
use lamina::dynamics::PairSpec;

fn main() -> lamina::Result<()> {
    let report = verify_suite(&PairSpec::cauliflower(0.5), 8, 1)?;
    for case in &report.testsuite.testcases {
        println!("{:<7} {}.{} {}", case.status, case.classname, case.name, case.message.as_deref().unwrap_or(""));
    }
    Ok(())
}
