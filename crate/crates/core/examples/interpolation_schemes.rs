//! The five frequency transforms side by side at a 16x extension.

use std::error::Error;

use rope_scaling::{build_table, RopeParams, SchemeConfig, SchemeKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::default();
    let tables = SchemeKind::ALL
        .into_iter()
        .map(|kind| build_table(&params, &SchemeConfig::new(kind, 16.0)))
        .collect::<Result<Vec<_>, _>>()?;

    print!("dim ");
    for t in &tables {
        print!(" {:>13}", t.scheme().as_str());
    }
    println!();
    for d in (0..params.pairs()).step_by(7) {
        print!("{d:>3} ");
        for t in &tables {
            // stretch of the wavelength relative to plain RoPE
            let e = t.entries()[d];
            print!(" {:>13.4}", e.theta_base / e.theta_scaled);
        }
        println!();
    }
    print!("mscale");
    for t in &tables {
        print!(" {:>11.4}", t.mscale());
    }
    println!();
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
