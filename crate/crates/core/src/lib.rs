//! Rotary position embeddings and context-window extension.
//!
//! [`rope`] holds the base rotation math. [`schemes`] builds frequency
//! tables for position interpolation, "NTK-aware" base change,
//! "NTK-by-parts" ramp blending and YaRN (by-parts plus embedding length
//! scaling). [`dynamic`] recomputes the scale from the running sequence
//! length. [`attention`] measures softmax entropy and checks that scaling
//! embeddings by `sqrt(t)` is the same as tempering logits by `t`.
//!
//! ```
//! use rope_scaling::{build_table, apply_rotation, RopeParams, SchemeConfig, SchemeKind};
//!
//! let params = RopeParams::default(); // b = 10000, |D| = 128, L = 4096
//! let config = SchemeConfig::for_target(SchemeKind::Yarn, &params, 65_536);
//! let table = build_table(&params, &config).unwrap();
//! assert_eq!(config.scale, 16.0);
//!
//! let k = vec![1.0; 128];
//! let rotated = apply_rotation(&k, 40_000, &table).unwrap();
//! assert_eq!(rotated.len(), 128);
//! ```

pub mod attention;
pub mod dynamic;
pub mod error;
pub mod io;
pub mod rope;
pub mod schemes;
pub mod validate;

pub use attention::{
    attention_diagnostics, entropy_sweep, expected_min_distance, min_distance_estimate,
    min_distance_monte_carlo, softmax, softmax_entropy, temperature_equivalence_gap,
    AttentionDiagnostics, MinDistanceEstimate,
};
pub use dynamic::{dynamic_scale, DynamicScaler, ScaleGranularity};
pub use error::{Result, RopeError};
pub use rope::{
    apply_rotation, attention_score, build_base_table, theta, wavelength, FrequencyEntry,
    FrequencyTable, PositionedPair, RopeParams,
};
pub use schemes::{
    build_table, dim_for_rotations, ntk_aware_base, ntk_aware_table, ntk_by_parts_table, pi_table,
    ramp, rotations_at, yarn_mscale, yarn_table, BlendDomain, SchemeConfig, SchemeKind,
};
