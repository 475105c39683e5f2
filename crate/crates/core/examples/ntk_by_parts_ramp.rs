//! Where the NTK-by-parts ramp switches between interpolating and leaving
//! a dimension alone, for Llama 2 defaults (alpha = 1, beta = 32).

use std::error::Error;

use rope_scaling::{
    build_table, dim_for_rotations, rotations_at, RopeParams, SchemeConfig, SchemeKind,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::default();
    let config = SchemeConfig::new(SchemeKind::NtkByParts, 16.0);
    let l = params.trained_context();
    println!(
        "untouched below dim {:.2}, fully interpolated above dim {:.2}",
        dim_for_rotations(config.beta, l, &params)?,
        dim_for_rotations(config.alpha, l, &params)?
    );

    let table = build_table(&params, &config)?;
    println!("dim  rotations  gamma   theta'/theta");
    for e in table.entries().iter().skip(18).step_by(3).take(11) {
        println!(
            "{:>3}  {:>9.3}  {:.4}  {:.5}",
            e.dim,
            rotations_at(e.dim, &params)?,
            e.gamma,
            e.theta_scaled / e.theta_base
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
