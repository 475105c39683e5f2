//! Dynamic scaling during decoding. Keys are cached un-rotated and rotated
//! again under the table for the current length, so once the sequence
//! outgrows the trained window every cached key moves.

use std::error::Error;

use rope_scaling::{DynamicScaler, RopeParams, SchemeConfig, SchemeKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::new(10_000.0, 64, 1024)?;
    let mut scaler = DynamicScaler::new(params, SchemeConfig::new(SchemeKind::Yarn, 1.0))?;

    let raw_key: Vec<f64> = (0..64).map(|i| (i as f64 * 0.61).cos()).collect();
    let position = 900;
    let mut previous: Option<Vec<f64>> = None;
    for len in [901, 1024, 1536, 2048, 4096] {
        scaler.advance_to(len);
        let rotated = scaler.rotate(&raw_key, position)?;
        let moved = previous
            .as_ref()
            .map(|p| {
                p.iter()
                    .zip(&rotated)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .unwrap_or(0.0);
        println!(
            "len={len:>5}  scale={:.3}  key[0..2]=({:+.5}, {:+.5})  moved {moved:.2e}",
            scaler.effective_scale(len),
            rotated[0],
            rotated[1]
        );
        previous = Some(rotated);
    }
    println!("{} distinct tables built", scaler.cached_tables());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
