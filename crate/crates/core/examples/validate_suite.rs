//! Running the invariant suite from code, including the deliberate ramp
//! fault that the suite must catch.

use std::error::Error;

use rope_scaling::validate::{run_validation, Fault, ValidationOptions};
use rope_scaling::{RopeParams, SchemeConfig, SchemeKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::default();
    let config = SchemeConfig::new(SchemeKind::Yarn, 16.0);

    let report = run_validation(&params, &config, ValidationOptions::default())?;
    report.write_to(std::io::stdout())?;
    assert!(report.all_passed());

    let faulty = ValidationOptions {
        fault: Some(Fault::RampSignFlip),
        ..Default::default()
    };
    let report = run_validation(&params, &config, faulty)?;
    println!("with injected ramp fault:");
    for c in report.failures() {
        println!("  {c}");
    }
    assert!(!report.all_passed());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
