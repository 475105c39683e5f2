//! Inference-time dynamic rescaling.
//!
//! The scale is recomputed from the number of tokens seen so far,
//! `s = max(len / L, 1)`, so sequences that fit the trained window are
//! rotated exactly as plain RoPE would rotate them. Because every key's
//! rotation changes whenever `s` changes, keys must be cached *before*
//! rotation; [`DynamicScaler::rotate_cached`] always starts from the raw key.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Result;
use crate::rope::{apply_rotation, FrequencyTable, RopeParams};
use crate::schemes::{build_table, SchemeConfig};

/// `max(current_length / trained_context, 1)`.
///
/// # Panics
/// If `trained_context` is zero.
pub fn dynamic_scale(current_length: usize, trained_context: usize) -> f64 {
    assert!(trained_context > 0, "trained context must be at least 1");
    if current_length > trained_context {
        current_length as f64 / trained_context as f64
    } else {
        1.0
    }
}

/// How the dynamic scale is discretized before building a table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScaleGranularity {
    /// Use `len / L` as is; one table per distinct length beyond `L`.
    #[default]
    Exact,
    /// Round the scale up to the next multiple of the step (e.g. 1.0),
    /// which bounds the number of cached tables.
    Step(f64),
}

impl ScaleGranularity {
    fn apply(self, scale: f64) -> f64 {
        match self {
            ScaleGranularity::Exact => scale,
            ScaleGranularity::Step(step) => ((scale / step).ceil() * step).max(1.0),
        }
    }
}

/// Re-parameterizes an inner scheme by the current sequence length.
///
/// Single writer: the owner advances the length and fills the table cache.
/// Shared readers can look up already-built tables through [`Self::cached`].
#[derive(Debug, Clone)]
pub struct DynamicScaler {
    params: RopeParams,
    inner: SchemeConfig,
    granularity: ScaleGranularity,
    current_length: usize,
    tables: HashMap<u64, Arc<FrequencyTable>>,
}

impl DynamicScaler {
    pub fn new(params: RopeParams, inner: SchemeConfig) -> Result<Self> {
        inner.with_scale(1.0).validate(&params)?;
        Ok(Self {
            params,
            inner,
            granularity: ScaleGranularity::Exact,
            current_length: 0,
            tables: HashMap::new(),
        })
    }

    pub fn with_granularity(mut self, granularity: ScaleGranularity) -> Self {
        self.granularity = granularity;
        self
    }

    pub fn params(&self) -> &RopeParams {
        &self.params
    }

    pub fn inner(&self) -> &SchemeConfig {
        &self.inner
    }

    pub fn current_length(&self) -> usize {
        self.current_length
    }

    /// Records that `len` tokens (including the one being positioned) exist.
    pub fn advance_to(&mut self, len: usize) {
        self.current_length = len;
    }

    /// Scale the inner scheme is evaluated at for a sequence of `len` tokens.
    pub fn effective_scale(&self, len: usize) -> f64 {
        self.granularity
            .apply(dynamic_scale(len, self.params.trained_context()))
    }

    /// Number of distinct tables built so far.
    pub fn cached_tables(&self) -> usize {
        self.tables.len()
    }

    /// Previously built table for an exact scale, if any.
    pub fn cached(&self, scale: f64) -> Option<&FrequencyTable> {
        self.tables.get(&scale.to_bits()).map(Arc::as_ref)
    }

    /// Inner scheme's table at the dynamic scale for `len` tokens, memoized.
    pub fn table_for_length(&mut self, len: usize) -> Result<Arc<FrequencyTable>> {
        let scale = self.effective_scale(len);
        if let Some(table) = self.tables.get(&scale.to_bits()) {
            return Ok(Arc::clone(table));
        }
        let table = Arc::new(build_table(&self.params, &self.inner.with_scale(scale))?);
        self.tables.insert(scale.to_bits(), Arc::clone(&table));
        Ok(table)
    }

    /// Rotates an un-rotated key to position `m` under the table for `len` tokens.
    pub fn rotate_cached(&mut self, raw_k: &[f64], m: usize, len: usize) -> Result<Vec<f64>> {
        let table = self.table_for_length(len)?;
        apply_rotation(raw_k, m, &table)
    }

    /// [`Self::rotate_cached`] at the current length.
    pub fn rotate(&mut self, raw_k: &[f64], m: usize) -> Result<Vec<f64>> {
        self.rotate_cached(raw_k, m, self.current_length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rope::build_base_table;
    use crate::schemes::{yarn_table, SchemeKind};

    fn scaler(kind: SchemeKind) -> DynamicScaler {
        DynamicScaler::new(RopeParams::default(), SchemeConfig::new(kind, 1.0)).unwrap()
    }

    #[test]
    fn scale_examples() {
        assert_eq!(dynamic_scale(2048, 4096), 1.0);
        assert_eq!(dynamic_scale(8192, 4096), 2.0);
        assert_eq!(dynamic_scale(4096, 4096), 1.0);
        assert_eq!(dynamic_scale(0, 4096), 1.0);
        assert_eq!(dynamic_scale(6144, 4096), 1.5);
    }

    #[test]
    #[should_panic]
    fn zero_trained_context_panics() {
        dynamic_scale(10, 0);
    }

    #[test]
    fn table_examples() {
        let mut s = scaler(SchemeKind::Yarn);
        let base = build_base_table(&RopeParams::default());
        for len in [0, 4096] {
            let t = s.table_for_length(len).unwrap();
            assert!(t.theta_scaled().eq(base.theta_scaled()));
            assert_eq!(t.mscale(), 1.0);
        }
        assert_eq!(s.cached_tables(), 1);

        let oracle = yarn_table(
            &RopeParams::default(),
            &SchemeConfig::new(SchemeKind::Yarn, 2.0),
        )
        .unwrap();
        assert_eq!(*s.table_for_length(8192).unwrap(), oracle);
        assert_eq!(s.cached(2.0), Some(&oracle));
        assert_eq!(s.cached_tables(), 2);
    }

    #[test]
    fn rotate_examples() {
        let raw: Vec<f64> = (0..128).map(|i| (i as f64 * 0.37).sin()).collect();

        let mut yarn = scaler(SchemeKind::Yarn);
        let out = yarn.rotate_cached(&raw, 0, 4 * 4096).unwrap();
        let m = yarn.table_for_length(4 * 4096).unwrap().mscale();
        for (o, r) in out.iter().zip(&raw) {
            assert!((o - m * r).abs() < 1e-15);
        }

        let mut parts = scaler(SchemeKind::NtkByParts);
        let short = parts.rotate_cached(&raw, 100, 4096).unwrap();
        let long = parts.rotate_cached(&raw, 100, 4 * 4096).unwrap();
        let p = RopeParams::default();
        let t1 = build_table(&p, &SchemeConfig::new(SchemeKind::NtkByParts, 1.0)).unwrap();
        let t4 = build_table(&p, &SchemeConfig::new(SchemeKind::NtkByParts, 4.0)).unwrap();
        assert_eq!(short, apply_rotation(&raw, 100, &t1).unwrap());
        assert_eq!(long, apply_rotation(&raw, 100, &t4).unwrap());
        assert_ne!(short, long);

        let mut none = scaler(SchemeKind::None);
        let a = none.rotate_cached(&raw, 100, 10).unwrap();
        let b = none.rotate_cached(&raw, 100, 100_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_granularity_bounds_cache() {
        let mut s = scaler(SchemeKind::Pi).with_granularity(ScaleGranularity::Step(1.0));
        assert_eq!(s.effective_scale(4096), 1.0);
        assert_eq!(s.effective_scale(4097), 2.0);
        assert_eq!(s.effective_scale(8192), 2.0);
        for len in (0..40_000).step_by(97) {
            s.table_for_length(len).unwrap();
        }
        assert_eq!(s.cached_tables(), 10);
    }

    #[test]
    fn rotate_uses_current_length() {
        let raw = vec![1.0; 128];
        let mut s = scaler(SchemeKind::Pi);
        s.advance_to(3 * 4096);
        assert_eq!(s.current_length(), 3 * 4096);
        assert_eq!(
            s.rotate(&raw, 5).unwrap(),
            s.clone().rotate_cached(&raw, 5, 3 * 4096).unwrap()
        );
    }

    #[test]
    fn rejects_bad_inner_config() {
        let bad = SchemeConfig::new(SchemeKind::Yarn, 1.0).with_ramp(5.0, 2.0);
        assert!(DynamicScaler::new(RopeParams::default(), bad).is_err());
    }
}
