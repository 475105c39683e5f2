//! YaRN's embedding length scaling: multiplying both rotated vectors by
//! sqrt(t) gives the same attention as multiplying logits by t.

use std::error::Error;

use rope_scaling::attention::synthetic_qk;
use rope_scaling::{
    build_table, temperature_equivalence_gap, yarn_mscale, RopeParams, SchemeConfig, SchemeKind,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let params = RopeParams::default();
    for s in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let m = yarn_mscale(s)?;
        println!("s={s:>4}: sqrt(t)={m:.4}  t={:.4}", m * m);
    }

    let s = 16.0;
    let yarn = build_table(&params, &SchemeConfig::new(SchemeKind::Yarn, s))?;
    let parts = build_table(&params, &SchemeConfig::new(SchemeKind::NtkByParts, s))?;
    let (queries, keys) = synthetic_qk(0, 256, params.head_dim());
    let positions: Vec<usize> = (0..256).map(|i| i * 250).collect();
    let t = yarn.mscale().powi(2);
    let gap = temperature_equivalence_gap(&queries, &keys, &positions, &yarn, &parts, t)?;
    println!("max |softmax difference| over 256 causal rows: {gap:.3e}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
