// Run the built-in oracle suites at reduced size and print the report.
//
// ```text
// cargo run --release --example oracle_check
// ```

use cat_core::oracle::{run_oracle_suites, OracleConfig};

pub fn run_example() -> cat_core::Result<()> {
    let config = OracleConfig {
        forward_instances: 100,
        gradient_instances: 10,
        expansion_instances: 20,
        ..OracleConfig::default()
    };
    let report = run_oracle_suites(&config)?;
    print!("{}", report.to_text());
    report.check()?;

    // swapping the Kronecker operands must be caught
    let corrupted = run_oracle_suites(&OracleConfig {
        corrupt_kronecker_order: true,
        ..config
    })?;
    println!("with corrupted Kronecker order: {:?} fail", corrupted.failed_invariants());
    assert!(!corrupted.passed());
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
