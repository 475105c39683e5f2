//! Average closest-pair spacing of N uniform points on a line of length L,
//! simulated and compared with L / (N^2 - 1).

use std::error::Error;

use rope_scaling::{expected_min_distance, min_distance_estimate};

pub fn run() -> Result<(), Box<dyn Error>> {
    let length = 4096.0;
    println!(
        "{:>4} {:>12} {:>12} {:>10}",
        "N", "simulated", "formula", "z"
    );
    for n in [2, 4, 10, 32, 100] {
        let est = min_distance_estimate(n, length, 100_000, n as u64)?;
        let formula = expected_min_distance(n, length)?;
        println!(
            "{n:>4} {:>12.5} {:>12.5} {:>10.2}",
            est.mean,
            formula,
            (est.mean - formula) / est.std_error
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
