//! Plain RoPE: per-pair frequencies and wavelengths, and the fact that a
//! query/key score only depends on how far apart the two tokens are.

use std::error::Error;

use rope_scaling::{attention_score, build_base_table, PositionedPair, RopeParams};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::default();
    let table = build_base_table(&params);

    println!("dim  theta            wavelength (tokens)");
    for e in table.entries().iter().step_by(8) {
        println!("{:>3}  {:<15.6e}  {:.1}", e.dim, e.theta_base, e.wavelength);
    }
    let longest = table.entries().last().unwrap().wavelength;
    println!(
        "longest wavelength {longest:.0} vs trained context {}",
        params.trained_context()
    );

    let q: Vec<f64> = (0..128)
        .map(|i| ((i * 31 % 17) as f64 - 8.0) / 8.0)
        .collect();
    let k: Vec<f64> = (0..128)
        .map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0)
        .collect();
    for (m, n) in [(7, 3), (104, 100), (40_004, 40_000)] {
        let score = attention_score(&PositionedPair::new(q.clone(), k.clone(), m, n), &table)?;
        println!("score(m={m:>5}, n={n:>5}) = {score:.12}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
