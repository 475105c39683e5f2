//! Context-window extension schemes.
//!
//! Each scheme maps `(RopeParams, SchemeConfig)` to a [`FrequencyTable`]:
//!
//! | scheme         | scaled frequency `theta'_d`                          | mscale           |
//! |----------------|------------------------------------------------------|------------------|
//! | `none`         | `theta_d`                                            | 1                |
//! | `pi`           | `theta_d / s`                                        | 1                |
//! | `ntk-aware`    | `b'^(-2d/|D|)`, `b' = b * s^(|D|/(|D|-2))`           | 1                |
//! | `ntk-by-parts` | `(1 - γ_d) theta_d / s + γ_d theta_d`                | 1                |
//! | `yarn`         | same as `ntk-by-parts`                               | `0.1 ln(s) + 1`  |
//!
//! Positions are never remapped (`g(m) = m`); position interpolation is
//! expressed in its equivalent frequency form.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, RopeError};
use crate::rope::{build_base_table, FrequencyTable, RopeParams};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 32.0;

// ── Configuration ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    None,
    Pi,
    NtkAware,
    NtkByParts,
    Yarn,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::None,
        SchemeKind::Pi,
        SchemeKind::NtkAware,
        SchemeKind::NtkByParts,
        SchemeKind::Yarn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::None => "none",
            SchemeKind::Pi => "pi",
            SchemeKind::NtkAware => "ntk-aware",
            SchemeKind::NtkByParts => "ntk-by-parts",
            SchemeKind::Yarn => "yarn",
        }
    }

    /// Whether the scheme reads the per-dimension ramp (`alpha`, `beta`).
    pub fn uses_ramp(self) -> bool {
        matches!(self, SchemeKind::NtkByParts | SchemeKind::Yarn)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = RopeError;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.trim().to_ascii_lowercase().replace('_', "-");
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == normalized)
            .ok_or_else(|| RopeError::Parse(format!("unknown scheme `{s}`")))
    }
}

/// Domain in which NTK-by-parts blends the interpolated and original values.
///
/// `Frequency` is the canonical form. `Wavelength` blends
/// `λ'_d = (1 - γ) s λ_d + γ λ_d` and converts back, which differs from the
/// frequency blend for `0 < γ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlendDomain {
    #[default]
    Frequency,
    Wavelength,
}

/// Which scheme to run plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub target_context: Option<usize>,
    pub blend: BlendDomain,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, scale: f64) -> Self {
        Self {
            kind,
            scale,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            target_context: None,
            blend: BlendDomain::Frequency,
        }
    }

    /// Config whose scale is `target / L`, clamped below at 1.
    pub fn for_target(kind: SchemeKind, params: &RopeParams, target: usize) -> Self {
        let scale = (target as f64 / params.trained_context() as f64).max(1.0);
        Self {
            target_context: Some(target),
            ..Self::new(kind, scale)
        }
    }

    pub fn with_ramp(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_blend(mut self, blend: BlendDomain) -> Self {
        self.blend = blend;
        self
    }

    /// Same scheme at a different scale; drops any target length.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self.target_context = None;
        self
    }

    pub fn validate(&self, params: &RopeParams) -> Result<()> {
        check_scale(self.scale)?;
        if self.kind.uses_ramp() {
            check_ramp(self.alpha, self.beta)?;
        }
        if self.kind == SchemeKind::NtkAware && params.head_dim() == 2 {
            return Err(RopeError::SingularBaseChange);
        }
        if let Some(target) = self.target_context {
            let implied = self.scale * params.trained_context() as f64;
            // target may only be rounded from s * L, or sit at L when s is clamped to 1
            let rounded = (implied - target as f64).abs() < 1.0;
            let clamped = self.scale == 1.0 && target <= params.trained_context();
            if !rounded && !clamped {
                return Err(RopeError::TargetMismatch {
                    target,
                    scale: self.scale,
                    trained: params.trained_context(),
                });
            }
        }
        Ok(())
    }

    fn expect_kind(&self, expected: SchemeKind) -> Result<()> {
        if self.kind != expected {
            return Err(RopeError::SchemeMismatch {
                expected: expected.as_str(),
                got: self.kind.as_str(),
            });
        }
        Ok(())
    }
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self::new(SchemeKind::None, 1.0)
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if !scale.is_finite() || scale < 1.0 {
        return Err(RopeError::InvalidScale(scale));
    }
    Ok(())
}

fn check_ramp(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta > alpha) {
        return Err(RopeError::InvalidRamp { alpha, beta });
    }
    Ok(())
}

// ── Table construction ──────────────────────────────────────────────────────

/// Builds the table for whatever scheme `config` names.
pub fn build_table(params: &RopeParams, config: &SchemeConfig) -> Result<FrequencyTable> {
    match config.kind {
        SchemeKind::None => {
            config.validate(params)?;
            Ok(build_base_table(params))
        }
        SchemeKind::Pi => pi_table(params, config),
        SchemeKind::NtkAware => ntk_aware_table(params, config),
        SchemeKind::NtkByParts => ntk_by_parts_table(params, config),
        SchemeKind::Yarn => yarn_table(params, config),
    }
}

/// Position interpolation: every frequency divided by `s`.
pub fn pi_table(params: &RopeParams, config: &SchemeConfig) -> Result<FrequencyTable> {
    config.expect_kind(SchemeKind::Pi)?;
    config.validate(params)?;
    let base = build_base_table(params);
    let scaled = base
        .entries()
        .iter()
        .map(|e| e.theta_base / config.scale)
        .collect();
    FrequencyTable::from_scaled(
        *params,
        scaled,
        vec![0.0; params.pairs()],
        1.0,
        SchemeKind::Pi,
    )
}

/// New base `b * s^(|D|/(|D|-2))` that stretches the last pair's wavelength by `s`.
pub fn ntk_aware_base(params: &RopeParams, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    if params.head_dim() == 2 {
        return Err(RopeError::SingularBaseChange);
    }
    let dim = params.head_dim() as f64;
    Ok(params.base() * scale.powf(dim / (dim - 2.0)))
}

pub fn ntk_aware_table(params: &RopeParams, config: &SchemeConfig) -> Result<FrequencyTable> {
    config.expect_kind(SchemeKind::NtkAware)?;
    config.validate(params)?;
    let new_base = ntk_aware_base(params, config.scale)?;
    let dim = params.head_dim() as f64;
    let scaled = (0..params.pairs())
        .map(|d| new_base.powf(-2.0 * d as f64 / dim))
        .collect();
    FrequencyTable::from_scaled(
        *params,
        scaled,
        vec![0.0; params.pairs()],
        1.0,
        SchemeKind::NtkAware,
    )
}

/// Full rotations pair `d` makes over the trained context, `L / λ_d`.
pub fn rotations_at(d: usize, params: &RopeParams) -> Result<f64> {
    Ok(params.trained_context() as f64 / crate::rope::wavelength(d, params)?)
}

/// Continuous dimension index at which a context of `context` tokens makes
/// `rotations` full turns: `|D| / (2 ln b) * ln(context / (2π r))`.
pub fn dim_for_rotations(rotations: f64, context: usize, params: &RopeParams) -> Result<f64> {
    if !rotations.is_finite() || rotations <= 0.0 {
        return Err(RopeError::InvalidRotations(rotations));
    }
    let dim = params.head_dim() as f64;
    let ratio = context as f64 / (std::f64::consts::TAU * rotations);
    Ok(dim / (2.0 * params.base().ln()) * ratio.ln())
}

/// Ramp `γ(r)`: 0 below `alpha`, 1 above `beta`, linear in between.
///
/// Callers must ensure `beta > alpha`; [`SchemeConfig::validate`] checks this.
pub fn ramp(rotations: f64, alpha: f64, beta: f64) -> f64 {
    debug_assert!(beta > alpha, "ramp needs beta > alpha");
    if rotations < alpha {
        0.0
    } else if rotations > beta {
        1.0
    } else {
        (rotations - alpha) / (beta - alpha)
    }
}

pub fn ntk_by_parts_table(params: &RopeParams, config: &SchemeConfig) -> Result<FrequencyTable> {
    config.expect_kind(SchemeKind::NtkByParts)?;
    by_parts_with_ramp(params, config, ramp, 1.0, SchemeKind::NtkByParts)
}

/// Shared NTK-by-parts construction; `ramp_fn` is swappable so the
/// validation harness can inject a faulty ramp.
pub(crate) fn by_parts_with_ramp(
    params: &RopeParams,
    config: &SchemeConfig,
    ramp_fn: fn(f64, f64, f64) -> f64,
    mscale: f64,
    tag: SchemeKind,
) -> Result<FrequencyTable> {
    config.validate(params)?;
    check_ramp(config.alpha, config.beta)?;
    let s = config.scale;
    let base = build_base_table(params);
    let (scaled, gammas): (Vec<f64>, Vec<f64>) = base
        .entries()
        .iter()
        .map(|e| {
            let r = params.trained_context() as f64 / e.wavelength;
            let gamma = ramp_fn(r, config.alpha, config.beta);
            let theta = if gamma == 1.0 || s == 1.0 {
                e.theta_base
            } else if gamma == 0.0 {
                e.theta_base / s
            } else {
                match config.blend {
                    BlendDomain::Frequency => {
                        (1.0 - gamma) * e.theta_base / s + gamma * e.theta_base
                    }
                    BlendDomain::Wavelength => {
                        let stretched = (1.0 - gamma) * s * e.wavelength + gamma * e.wavelength;
                        std::f64::consts::TAU / stretched
                    }
                }
            };
            (theta, gamma)
        })
        .unzip();
    FrequencyTable::from_scaled(*params, scaled, gammas, mscale, tag)
}

/// Embedding magnitude multiplier `sqrt(t) = 0.1 ln(s) + 1`.
pub fn yarn_mscale(scale: f64) -> Result<f64> {
    check_scale(scale)?;
    Ok(0.1 * scale.ln() + 1.0)
}

/// NTK-by-parts frequencies with the embedding length scaled by `sqrt(t)`.
pub fn yarn_table(params: &RopeParams, config: &SchemeConfig) -> Result<FrequencyTable> {
    config.expect_kind(SchemeKind::Yarn)?;
    let mscale = yarn_mscale(config.scale)?;
    by_parts_with_ramp(params, config, ramp, mscale, SchemeKind::Yarn)
}
