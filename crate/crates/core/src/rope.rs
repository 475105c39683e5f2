//! Base rotary position embedding math.
//!
//! A head vector of dimension `|D|` is treated as `|D|/2` adjacent coordinate
//! pairs `(v[2d], v[2d+1])`. Pair `d` is rotated by `m * theta'_d` at position
//! `m`, and the whole vector is then multiplied by the table's `mscale`.
//! Every extension scheme only changes how the [`FrequencyTable`] is built;
//! the rotation kernel here never looks at the scheme.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Result, RopeError};
use crate::schemes::SchemeKind;

// ── Parameters ──────────────────────────────────────────────────────────────

/// Pre-training facts every scheme consumes: base `b`, head dimension `|D|`
/// and trained context length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RopeParams {
    base: f64,
    head_dim: usize,
    trained_context: usize,
}

impl RopeParams {
    pub const DEFAULT_BASE: f64 = 10_000.0;
    pub const DEFAULT_HEAD_DIM: usize = 128;
    pub const DEFAULT_TRAINED_CONTEXT: usize = 4096;

    pub fn new(base: f64, head_dim: usize, trained_context: usize) -> Result<Self> {
        if head_dim < 2 || !head_dim.is_multiple_of(2) {
            return Err(RopeError::InvalidHeadDim(head_dim));
        }
        if !base.is_finite() || base <= 1.0 {
            return Err(RopeError::InvalidBase(base));
        }
        if trained_context == 0 {
            return Err(RopeError::ZeroContext);
        }
        Ok(Self {
            base,
            head_dim,
            trained_context,
        })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn head_dim(&self) -> usize {
        self.head_dim
    }

    pub fn trained_context(&self) -> usize {
        self.trained_context
    }

    /// Number of rotated coordinate pairs, `|D|/2`.
    pub fn pairs(&self) -> usize {
        self.head_dim / 2
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d >= self.pairs() {
            return Err(RopeError::DimOutOfRange {
                index: d,
                pairs: self.pairs(),
            });
        }
        Ok(())
    }
}

impl Default for RopeParams {
    /// Llama 2: `b = 10000`, `|D| = 128`, `L = 4096`.
    fn default() -> Self {
        Self {
            base: Self::DEFAULT_BASE,
            head_dim: Self::DEFAULT_HEAD_DIM,
            trained_context: Self::DEFAULT_TRAINED_CONTEXT,
        }
    }
}

/// Base rotation frequency `b^(-2d/|D|)` of pair `d`.
pub fn theta(d: usize, params: &RopeParams) -> Result<f64> {
    params.check_dim(d)?;
    Ok(params.base.powf(-2.0 * d as f64 / params.head_dim as f64))
}

/// Tokens needed for pair `d` to complete a full turn, `2π b^(2d/|D|)`.
pub fn wavelength(d: usize, params: &RopeParams) -> Result<f64> {
    params.check_dim(d)?;
    Ok(TAU * params.base.powf(2.0 * d as f64 / params.head_dim as f64))
}

// ── Frequency table ─────────────────────────────────────────────────────────

/// One dimension pair of a [`FrequencyTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyEntry {
    pub dim: usize,
    pub theta_base: f64,
    pub theta_scaled: f64,
    /// Base wavelength `λ_d`.
    pub wavelength: f64,
    /// Ramp value in `[0, 1]`; 0 for schemes that do not use the ramp.
    pub gamma: f64,
}

impl FrequencyEntry {
    pub fn wavelength_scaled(&self) -> f64 {
        TAU / self.theta_scaled
    }
}

/// Precomputed per-pair frequencies plus the embedding magnitude multiplier.
///
/// Immutable once built; everything that rotates vectors reads from here.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    params: RopeParams,
    entries: Vec<FrequencyEntry>,
    mscale: f64,
    scheme: SchemeKind,
}

impl FrequencyTable {
    /// Builds a table from explicit scaled frequencies and per-pair ramp values.
    ///
    /// Base frequencies and wavelengths are always derived from `params`.
    pub fn from_scaled(
        params: RopeParams,
        theta_scaled: Vec<f64>,
        gamma: Vec<f64>,
        mscale: f64,
        scheme: SchemeKind,
    ) -> Result<Self> {
        let pairs = params.pairs();
        for len in [theta_scaled.len(), gamma.len()] {
            if len != pairs {
                return Err(RopeError::TableLength {
                    expected: pairs,
                    got: len,
                });
            }
        }
        if !mscale.is_finite() || mscale <= 0.0 {
            return Err(RopeError::InvalidTable(format!(
                "mscale must be positive, got {mscale}"
            )));
        }
        let entries = theta_scaled
            .into_iter()
            .zip(gamma)
            .enumerate()
            .map(|(d, (scaled, gamma))| {
                if !scaled.is_finite() || scaled <= 0.0 {
                    return Err(RopeError::InvalidTable(format!(
                        "scaled frequency at dim {d} must be positive, got {scaled}"
                    )));
                }
                Ok(FrequencyEntry {
                    dim: d,
                    theta_base: theta(d, &params)?,
                    theta_scaled: scaled,
                    wavelength: wavelength(d, &params)?,
                    gamma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            entries,
            mscale,
            scheme,
        })
    }

    pub fn params(&self) -> &RopeParams {
        &self.params
    }

    pub fn entries(&self) -> &[FrequencyEntry] {
        &self.entries
    }

    pub fn mscale(&self) -> f64 {
        self.mscale
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn head_dim(&self) -> usize {
        self.params.head_dim
    }

    pub fn theta_scaled(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.theta_scaled)
    }

    /// Rotates `v` to position `m` into `out`. Both slices must have length `|D|`.
    pub fn rotate_into(&self, v: &[f64], m: usize, out: &mut [f64]) -> Result<()> {
        let dim = self.head_dim();
        if v.len() != dim {
            return Err(RopeError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        if out.len() != dim {
            return Err(RopeError::DimensionMismatch {
                expected: dim,
                got: out.len(),
            });
        }
        let pos = m as f64;
        for (entry, (src, dst)) in self
            .entries
            .iter()
            .zip(v.chunks_exact(2).zip(out.chunks_exact_mut(2)))
        {
            // angle from the position directly, never accumulated
            let (sin, cos) = (pos * entry.theta_scaled).sin_cos();
            let (x, y) = (src[0], src[1]);
            dst[0] = self.mscale * (x * cos - y * sin);
            dst[1] = self.mscale * (x * sin + y * cos);
        }
        Ok(())
    }
}

/// Frequencies of plain RoPE: `theta_scaled = theta_base`, `mscale = 1`.
pub fn build_base_table(params: &RopeParams) -> FrequencyTable {
    let entries = (0..params.pairs())
        .map(|d| {
            let exponent = 2.0 * d as f64 / params.head_dim as f64;
            let theta = params.base.powf(-exponent);
            FrequencyEntry {
                dim: d,
                theta_base: theta,
                theta_scaled: theta,
                wavelength: TAU * params.base.powf(exponent),
                gamma: 0.0,
            }
        })
        .collect();
    FrequencyTable {
        params: *params,
        entries,
        mscale: 1.0,
        scheme: SchemeKind::None,
    }
}

// ── Rotation and scores ─────────────────────────────────────────────────────

/// Query/key pair with their token positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionedPair {
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

impl PositionedPair {
    pub fn new(q: Vec<f64>, k: Vec<f64>, m: usize, n: usize) -> Self {
        Self { q, k, m, n }
    }
}

/// Rotates each pair of `v` by `m * theta'_d` and scales by the table's mscale.
pub fn apply_rotation(v: &[f64], m: usize, table: &FrequencyTable) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    table.rotate_into(v, m, &mut out)?;
    Ok(out)
}

/// Pre-softmax attention logit `<R_m q, R_n k> / sqrt(|D|)`.
pub fn attention_score(pair: &PositionedPair, table: &FrequencyTable) -> Result<f64> {
    let q = apply_rotation(&pair.q, pair.m, table)?;
    let k = apply_rotation(&pair.k, pair.n, table)?;
    Ok(dot(&q, &k) / (table.head_dim() as f64).sqrt())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn params(base: f64, dim: usize, ctx: usize) -> RopeParams {
        RopeParams::new(base, dim, ctx).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn params_validation() {
        assert_eq!(
            RopeParams::new(10_000.0, 7, 10),
            Err(RopeError::InvalidHeadDim(7))
        );
        assert_eq!(
            RopeParams::new(10_000.0, 0, 10),
            Err(RopeError::InvalidHeadDim(0))
        );
        assert_eq!(
            RopeParams::new(1.0, 4, 10),
            Err(RopeError::InvalidBase(1.0))
        );
        assert!(RopeParams::new(f64::NAN, 4, 10).is_err());
        assert_eq!(RopeParams::new(10.0, 4, 0), Err(RopeError::ZeroContext));
        let p = RopeParams::default();
        assert_eq!(
            (p.base(), p.head_dim(), p.trained_context()),
            (10_000.0, 128, 4096)
        );
    }

    #[test]
    fn theta_examples() {
        let p = params(10_000.0, 128, 4096);
        assert_eq!(theta(0, &p).unwrap(), 1.0);
        assert!(rel(theta(32, &p).unwrap(), 0.01) < 1e-15);
        // 10000^(-126/128), 40-digit evaluation
        assert!(rel(theta(63, &p).unwrap(), 1.154_781_984_689_458_2e-4) < 1e-14);
        assert_eq!(
            theta(64, &p),
            Err(RopeError::DimOutOfRange {
                index: 64,
                pairs: 64
            })
        );
    }

    #[test]
    fn wavelength_examples() {
        let p = params(10_000.0, 128, 4096);
        assert_eq!(wavelength(0, &p).unwrap(), TAU);
        assert!(rel(wavelength(32, &p).unwrap(), 200.0 * PI) < 1e-15);
        assert!(rel(wavelength(63, &p).unwrap(), 54_410.143_130_776_75) < 1e-14);
        assert!(wavelength(64, &p).is_err());
        for d in 0..64 {
            let product = wavelength(d, &p).unwrap() * theta(d, &p).unwrap();
            assert!(rel(product, TAU) < 1e-12, "d={d}");
        }
    }

    #[test]
    fn base_table_examples() {
        let t = build_base_table(&params(10_000.0, 4, 2048));
        assert_eq!(t.entries().len(), 2);
        assert_eq!(t.entries()[0].theta_base, 1.0);
        assert!(rel(t.entries()[1].theta_base, 0.01) < 1e-15);
        assert_eq!(t.mscale(), 1.0);
        assert_eq!(t.scheme(), SchemeKind::None);

        let t = build_base_table(&params(10_000.0, 2, 7));
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.entries()[0].theta_base, 1.0);
        assert_eq!(t.entries()[0].wavelength, TAU);

        // Code Llama: manual base of 1M, 16k context
        let p = params(1_000_000.0, 128, 16_384);
        let t = build_base_table(&p);
        assert_eq!(t.entries().len(), 64);
        for e in t.entries() {
            assert_eq!(e.theta_base, e.theta_scaled);
            assert_eq!(e.theta_base, theta(e.dim, &p).unwrap());
            assert_eq!(e.gamma, 0.0);
        }
        assert!(rel(t.entries()[32].theta_base, 1e-3) < 1e-15);
    }

    #[test]
    fn base_table_spectrum_is_monotone() {
        let t = build_base_table(&RopeParams::default());
        for w in t.entries().windows(2) {
            assert!(w[1].theta_base < w[0].theta_base);
            assert!(w[1].wavelength > w[0].wavelength);
            assert_eq!(w[1].dim, w[0].dim + 1);
        }
    }

    #[test]
    fn rotation_examples() {
        let base = build_base_table(&params(10_000.0, 2, 16));
        assert_eq!(
            apply_rotation(&[1.0, 0.0], 0, &base).unwrap(),
            vec![1.0, 0.0]
        );

        let p = params(10_000.0, 2, 16);
        let quarter =
            FrequencyTable::from_scaled(p, vec![FRAC_PI_2], vec![0.0], 1.0, SchemeKind::None)
                .unwrap();
        let out = apply_rotation(&[1.0, 0.0], 1, &quarter).unwrap();
        assert!(out[0].abs() < 1e-16 && (out[1] - 1.0).abs() < 1e-16);

        // (3,4) rotated by 17 * 0.013 = 0.221 rad, 40-digit oracle
        let t =
            FrequencyTable::from_scaled(p, vec![0.013], vec![0.0], 1.0, SchemeKind::None).unwrap();
        let out = apply_rotation(&[3.0, 4.0], 17, &t).unwrap();
        assert!((out[0] - 2.050_214_550_374_645).abs() < 1e-14);
        assert!((out[1] - 4.560_331_160_939_093).abs() < 1e-14);
    }

    #[test]
    fn rotation_rejects_dimension_mismatch() {
        let t = build_base_table(&params(10_000.0, 4, 16));
        assert_eq!(
            apply_rotation(&[1.0, 0.0], 3, &t),
            Err(RopeError::DimensionMismatch {
                expected: 4,
                got: 2
            })
        );
        let pair = PositionedPair::new(vec![1.0; 4], vec![1.0; 6], 0, 0);
        assert!(attention_score(&pair, &t).is_err());
    }

    #[test]
    fn score_examples() {
        let t = build_base_table(&params(10_000.0, 2, 16));
        let same = PositionedPair::new(vec![1.0, 0.0], vec![1.0, 0.0], 5, 5);
        assert!((attention_score(&same, &t).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        let ortho = PositionedPair::new(vec![1.0, 0.0], vec![0.0, 1.0], 9, 9);
        assert!(attention_score(&ortho, &t).unwrap().abs() < 1e-15);
    }

    #[test]
    fn from_scaled_rejects_bad_input() {
        let p = params(10_000.0, 4, 16);
        assert!(
            FrequencyTable::from_scaled(p, vec![1.0], vec![0.0; 2], 1.0, SchemeKind::Pi).is_err()
        );
        assert!(
            FrequencyTable::from_scaled(p, vec![1.0, -1.0], vec![0.0; 2], 1.0, SchemeKind::Pi)
                .is_err()
        );
        assert!(
            FrequencyTable::from_scaled(p, vec![1.0, 0.1], vec![0.0; 2], 0.0, SchemeKind::Pi)
                .is_err()
        );
    }
}
