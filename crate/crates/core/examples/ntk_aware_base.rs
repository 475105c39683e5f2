//! "NTK-aware" interpolation as a change of base, and Code Llama's manual
//! base of 1M for comparison.

use std::error::Error;

use rope_scaling::io::compare_tables;
use rope_scaling::{
    build_base_table, build_table, ntk_aware_base, RopeParams, SchemeConfig, SchemeKind,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::default();
    for s in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let table = build_table(&params, &SchemeConfig::new(SchemeKind::NtkAware, s))?;
        let last = table.entries().last().unwrap();
        println!(
            "s={s:>4}: b'={:>14.1}  last wavelength stretch {:.6}",
            ntk_aware_base(&params, s)?,
            last.wavelength_scaled() / last.wavelength
        );
    }

    let code_llama = RopeParams::new(1_000_000.0, 128, 16_384)?;
    let cmp = compare_tables(&build_base_table(&params), &build_base_table(&code_llama))?;
    let implied = (1_000_000.0f64 / 10_000.0).powf(126.0 / 128.0);
    println!(
        "base 1e6 vs 1e4: last-pair stretch {:.1} (equivalent NTK-aware scale), max |log ratio| {:.3}",
        implied, cmp.max_abs_log_ratio
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
