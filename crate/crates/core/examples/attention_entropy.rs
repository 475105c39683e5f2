//! Mean causal attention entropy of random queries/keys across lengths and
//! schemes. YaRN's logit gain lowers the mean entropy relative to
//! NTK-by-parts, which has the same frequencies.

use std::error::Error;

use rope_scaling::{entropy_sweep, RopeParams, SchemeConfig, SchemeKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::default();
    let configs: Vec<SchemeConfig> = [
        SchemeKind::None,
        SchemeKind::Pi,
        SchemeKind::NtkByParts,
        SchemeKind::Yarn,
    ]
    .into_iter()
    .map(|k| SchemeConfig::new(k, 16.0))
    .collect();
    let lengths = [16, 64, 256];
    let sweep = entropy_sweep(&params, &configs, &lengths, 42)?;

    println!(
        "{:<13} {:>6} {:>12} {:>10}",
        "scheme", "N", "mean H", "ln N"
    );
    for d in &sweep {
        println!(
            "{:<13} {:>6} {:>12.5} {:>10.5}",
            d.scheme.as_str(),
            d.context_length,
            d.mean_entropy,
            d.uniform_bound()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
