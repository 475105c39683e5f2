//! Invariant checks for every module, run by the `validate` subcommand.
//!
//! Each check is a pure function of the parameters, the configured scheme
//! and a seed. Sizes are kept small enough to finish in well under a second
//! with optimizations on; the acceptance suite runs the full-size versions.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::attention::{
    attention_diagnostics, expected_min_distance, min_distance_estimate, softmax_entropy,
    synthetic_qk, temperature_equivalence_gap,
};
use crate::dynamic::{dynamic_scale, DynamicScaler};
use crate::error::RopeError;
use crate::io::{read_freqs, write_freqs, OutputFormat};
use crate::rope::{
    apply_rotation, attention_score, build_base_table, FrequencyTable, PositionedPair, RopeParams,
};
use crate::schemes::{
    build_table, by_parts_with_ramp, ramp, rotations_at, yarn_mscale, SchemeConfig, SchemeKind,
};

/// Deliberate defects used to confirm the harness catches regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negates the linear segment of the NTK-by-parts ramp.
    RampSignFlip,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}::{}", self.module, self.name)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for check in &self.checks {
            writeln!(out, "{check}")?;
        }
        let failed = self.failures().count();
        writeln!(
            out,
            "{} checks, {} passed, {} failed",
            self.checks.len(),
            self.checks.len() - failed,
            failed
        )
    }
}

type Outcome = Result<String, String>;

fn flipped_ramp(rotations: f64, alpha: f64, beta: f64) -> f64 {
    match ramp(rotations, alpha, beta) {
        g if g > 0.0 && g < 1.0 => -g,
        g => g,
    }
}

struct Harness {
    params: RopeParams,
    config: SchemeConfig,
    opts: ValidationOptions,
    scales: Vec<f64>,
}

impl Harness {
    fn table(&self, kind: SchemeKind, scale: f64) -> Result<FrequencyTable, String> {
        let config = SchemeConfig {
            kind,
            ..self.config.with_scale(scale)
        };
        let built = match (self.opts.fault, kind) {
            (Some(Fault::RampSignFlip), SchemeKind::NtkByParts) => {
                by_parts_with_ramp(&self.params, &config, flipped_ramp, 1.0, kind)
            }
            (Some(Fault::RampSignFlip), SchemeKind::Yarn) => yarn_mscale(scale)
                .and_then(|m| by_parts_with_ramp(&self.params, &config, flipped_ramp, m, kind)),
            _ => build_table(&self.params, &config),
        };
        built.map_err(|e| format!("{kind} at s={scale}: {e}"))
    }

    /// Schemes that can be built for these parameters.
    fn kinds(&self) -> Vec<SchemeKind> {
        SchemeKind::ALL
            .into_iter()
            .filter(|k| *k != SchemeKind::NtkAware || self.params.head_dim() > 2)
            .collect()
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        rng.set_stream(salt);
        rng
    }

    fn normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn unit_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        let v = Self::normal_vec(rng, dim);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }

    // ── rope_core ──

    fn relative_position(&self) -> Outcome {
        let mut rng = self.rng(1);
        let limit = 10 * self.params.trained_context();
        let mut worst: f64 = 0.0;
        for &dim in &[2usize, 8, 64, 128, self.params.head_dim()] {
            let params = RopeParams::new(self.params.base(), dim, self.params.trained_context())
                .map_err(|e| e.to_string())?;
            let table = build_base_table(&params);
            for _ in 0..100 {
                let q = Self::unit_vec(&mut rng, dim);
                let k = Self::unit_vec(&mut rng, dim);
                let m = rng.random_range(0..=limit);
                let n = rng.random_range(0..=limit);
                let shift = rng.random_range(0..=limit);
                let a = attention_score(&PositionedPair::new(q.clone(), k.clone(), m, n), &table);
                let b = attention_score(&PositionedPair::new(q, k, m + shift, n + shift), &table);
                worst = worst
                    .max((a.map_err(|e| e.to_string())? - b.map_err(|e| e.to_string())?).abs());
            }
        }
        bound(worst, 1e-9, "max score difference")
    }

    fn isometry(&self) -> Outcome {
        let mut rng = self.rng(2);
        let mut worst: f64 = 0.0;
        for kind in self.kinds() {
            for &s in &self.scales {
                let table = self.table(kind, s)?;
                for _ in 0..20 {
                    let v = Self::normal_vec(&mut rng, self.params.head_dim());
                    let m = rng.random_range(0..=10 * self.params.trained_context());
                    let out = apply_rotation(&v, m, &table).map_err(|e| e.to_string())?;
                    let expected = table.mscale() * norm(&v);
                    worst = worst.max((norm(&out) - expected).abs() / expected);
                }
            }
        }
        bound(worst, 1e-10, "max relative norm error")
    }

    fn reciprocity(&self) -> Outcome {
        let table = build_base_table(&self.params);
        let worst = table
            .entries()
            .iter()
            .map(|e| (e.wavelength * e.theta_base / TAU - 1.0).abs())
            .fold(0.0, f64::max);
        bound(worst, 1e-12, "max relative error of λθ/2π")
    }

    fn monotone_spectrum(&self) -> Outcome {
        let table = build_base_table(&self.params);
        for w in table.entries().windows(2) {
            if !(w[1].theta_base < w[0].theta_base && w[1].wavelength > w[0].wavelength) {
                return Err(format!("not strictly monotone at dim {}", w[1].dim));
            }
        }
        Ok(String::new())
    }

    fn composition(&self) -> Outcome {
        let mut rng = self.rng(3);
        let mut worst: f64 = 0.0;
        for kind in [SchemeKind::None, SchemeKind::Pi, SchemeKind::NtkByParts] {
            let table = self.table(kind, self.config.scale)?;
            for _ in 0..20 {
                let v = Self::normal_vec(&mut rng, self.params.head_dim());
                let m1 = rng.random_range(0..=5 * self.params.trained_context());
                let m2 = rng.random_range(0..=5 * self.params.trained_context());
                let twice = apply_rotation(&v, m1, &table)
                    .and_then(|r| apply_rotation(&r, m2, &table))
                    .map_err(|e| e.to_string())?;
                let once = apply_rotation(&v, m1 + m2, &table).map_err(|e| e.to_string())?;
                worst = worst.max(max_abs_diff(&twice, &once));
            }
        }
        bound(worst, 1e-9, "max coordinate difference")
    }

    // ── schemes ──

    fn interpolation_bound(&self) -> Outcome {
        for kind in self.kinds() {
            for &s in &self.scales {
                let table = self.table(kind, s)?;
                for e in table.entries() {
                    let ok = if kind == SchemeKind::NtkAware {
                        let stretch = e.theta_base / e.theta_scaled;
                        stretch >= 1.0 - 1e-12 && stretch <= s * (1.0 + 1e-9)
                    } else {
                        let slack = 1e-15 * e.theta_base;
                        e.theta_scaled <= e.theta_base + slack
                            && e.theta_scaled >= e.theta_base / s - slack
                    };
                    if !ok {
                        return Err(format!(
                            "{kind} s={s} dim {} theta'={}",
                            e.dim, e.theta_scaled
                        ));
                    }
                }
            }
        }
        Ok(String::new())
    }

    fn agreement_at_unit_scale(&self) -> Outcome {
        let base = build_base_table(&self.params);
        for kind in self.kinds() {
            let table = self.table(kind, 1.0)?;
            if table.mscale() != 1.0 {
                return Err(format!("{kind} mscale {}", table.mscale()));
            }
            for (a, b) in table.entries().iter().zip(base.entries()) {
                if (a.theta_scaled - b.theta_scaled).abs() > 1e-12 * b.theta_scaled {
                    return Err(format!("{kind} dim {}", a.dim));
                }
            }
        }
        Ok(String::new())
    }

    fn ntk_aware_endpoints(&self) -> Outcome {
        if self.params.head_dim() == 2 {
            return Ok("skipped: base change undefined for head dim 2".into());
        }
        for &s in &self.scales {
            let table = self.table(SchemeKind::NtkAware, s)?;
            let first = table.entries()[0];
            let last = table.entries()[table.entries().len() - 1];
            if first.theta_scaled != first.theta_base {
                return Err(format!("s={s}: theta'_0 = {}", first.theta_scaled));
            }
            let err = (last.wavelength_scaled() / (s * last.wavelength) - 1.0).abs();
            if err > 1e-9 {
                return Err(format!("s={s}: last wavelength off by {err:e}"));
            }
        }
        Ok(String::new())
    }

    fn ramp_partition(&self) -> Outcome {
        for kind in [SchemeKind::NtkByParts, SchemeKind::Yarn] {
            for &s in &self.scales {
                let table = self.table(kind, s)?;
                for e in table.entries() {
                    if !(0.0..=1.0).contains(&e.gamma) {
                        return Err(format!("{kind} s={s} dim {} gamma {}", e.dim, e.gamma));
                    }
                }
                for w in table.entries().windows(2) {
                    if w[1].gamma > w[0].gamma {
                        return Err(format!("{kind} s={s} gamma increases at dim {}", w[1].dim));
                    }
                }
            }
        }
        Ok(String::new())
    }

    fn ramp_boundaries(&self) -> Outcome {
        for &s in &self.scales {
            let table = self.table(SchemeKind::NtkByParts, s)?;
            for e in table.entries() {
                let r = rotations_at(e.dim, &self.params).map_err(|e| e.to_string())?;
                if r > self.config.beta && e.theta_scaled != e.theta_base {
                    return Err(format!("s={s} dim {} should be untouched", e.dim));
                }
                if r < self.config.alpha
                    && (e.theta_scaled - e.theta_base / s).abs() > 1e-15 * e.theta_scaled
                {
                    return Err(format!("s={s} dim {} should be fully interpolated", e.dim));
                }
            }
        }
        Ok(String::new())
    }

    fn yarn_matches_by_parts(&self) -> Outcome {
        if yarn_mscale(1.0) != Ok(1.0) {
            return Err("mscale at s=1 is not 1".into());
        }
        for &s in &self.scales {
            let yarn = self.table(SchemeKind::Yarn, s)?;
            let parts = self.table(SchemeKind::NtkByParts, s)?;
            if !yarn.theta_scaled().eq(parts.theta_scaled()) {
                return Err(format!("s={s}: frequencies differ"));
            }
            let expected = 0.1 * s.ln() + 1.0;
            if yarn.mscale() != expected || parts.mscale() != 1.0 {
                return Err(format!("s={s}: mscale {} vs {expected}", yarn.mscale()));
            }
        }
        Ok(String::new())
    }

    // ── dynamic_scaler ──

    fn dynamic_identity(&self) -> Outcome {
        let mut rng = self.rng(4);
        let base = build_base_table(&self.params);
        let l = self.params.trained_context();
        let mut worst: f64 = 0.0;
        for kind in self.kinds() {
            let mut scaler = DynamicScaler::new(
                self.params,
                SchemeConfig {
                    kind,
                    ..self.config
                },
            )
            .map_err(|e| e.to_string())?;
            for _ in 0..20 {
                let len = rng.random_range(0..=l);
                let m = rng.random_range(0..=l);
                let raw = Self::normal_vec(&mut rng, self.params.head_dim());
                let got = scaler
                    .rotate_cached(&raw, m, len)
                    .map_err(|e| e.to_string())?;
                let want = apply_rotation(&raw, m, &base).map_err(|e| e.to_string())?;
                worst = worst.max(max_abs_diff(&got, &want));
            }
        }
        bound(worst, 1e-12, "max deviation from base rotation")
    }

    fn dynamic_scale_shape(&self) -> Outcome {
        let l = self.params.trained_context();
        let mut prev = 0.0;
        for len in (0..=8 * l).step_by((l / 64).max(1)) {
            let s = dynamic_scale(len, l);
            if s < prev {
                return Err(format!("decreases at length {len}"));
            }
            let expected = if len <= l { 1.0 } else { len as f64 / l as f64 };
            if s != expected {
                return Err(format!("length {len}: {s} != {expected}"));
            }
            prev = s;
        }
        Ok(String::new())
    }

    fn dynamic_cache(&self) -> Outcome {
        let mut rng = self.rng(5);
        let l = self.params.trained_context();
        for kind in self.kinds() {
            let inner = SchemeConfig {
                kind,
                ..self.config
            };
            let raw = Self::normal_vec(&mut rng, self.params.head_dim());
            let m = rng.random_range(0..l);
            let final_len = rng.random_range(l..=8 * l);
            let mut visited = DynamicScaler::new(self.params, inner).map_err(|e| e.to_string())?;
            let mut len = m + 1;
            while len < final_len {
                visited
                    .rotate_cached(&raw, m, len)
                    .map_err(|e| e.to_string())?;
                len += rng.random_range(1..=l);
            }
            let after = visited
                .rotate_cached(&raw, m, final_len)
                .map_err(|e| e.to_string())?;
            let mut fresh = DynamicScaler::new(self.params, inner).map_err(|e| e.to_string())?;
            let direct = fresh
                .rotate_cached(&raw, m, final_len)
                .map_err(|e| e.to_string())?;
            if after != direct {
                return Err(format!("{kind}: result depends on visited lengths"));
            }
        }
        Ok(String::new())
    }

    // ── attention_lab ──

    fn temperature_identity(&self) -> Outcome {
        let mut worst: f64 = 0.0;
        for &s in &self.scales {
            let yarn = self.table(SchemeKind::Yarn, s)?;
            let parts = self.table(SchemeKind::NtkByParts, s)?;
            let t = yarn.mscale() * yarn.mscale();
            for (i, n) in [1usize, 17, 64].into_iter().enumerate() {
                let (q, k) = synthetic_qk(
                    self.opts.seed.wrapping_add(i as u64),
                    n,
                    self.params.head_dim(),
                );
                let positions: Vec<usize> = (0..n).map(|j| j * 37).collect();
                let gap = temperature_equivalence_gap(&q, &k, &positions, &yarn, &parts, t)
                    .map_err(|e| e.to_string())?;
                worst = worst.max(gap);
            }
        }
        bound(worst, 1e-12, "max softmax gap")
    }

    fn entropy_monotonicity(&self) -> Outcome {
        let mut rng = self.rng(6);
        let gains = [1.0, 1.1, 1.277_258_872_223_978, 1.346_573_590_279_973];
        for _ in 0..200 {
            let n = rng.random_range(2..=64);
            let z = Self::normal_vec(&mut rng, n);
            for pair in gains.windows(2) {
                let (lo, hi) = (pair[0], pair[1]);
                let h_lo = entropy_at_gain(&z, lo)?;
                let h_hi = entropy_at_gain(&z, hi)?;
                if h_hi > h_lo + 1e-12 {
                    return Err(format!(
                        "gain {hi} entropy {h_hi} > gain {lo} entropy {h_lo}"
                    ));
                }
            }
        }
        Ok(String::new())
    }

    fn shift_invariance(&self) -> Outcome {
        let mut rng = self.rng(7);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let n = rng.random_range(1..=64);
            let z = Self::normal_vec(&mut rng, n);
            let c: f64 = rng.random_range(-50.0..50.0);
            let shifted: Vec<f64> = z.iter().map(|x| x + c).collect();
            let a = softmax_entropy(&z).map_err(|e| e.to_string())?;
            let b = softmax_entropy(&shifted).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs());
        }
        bound(worst, 1e-12, "max entropy change")
    }

    fn entropy_bounds(&self) -> Outcome {
        let table = self.table(self.config.kind, self.config.scale)?;
        for len in [1usize, 2, 33, 128] {
            let d =
                attention_diagnostics(&table, len, self.opts.seed).map_err(|e| e.to_string())?;
            for (i, h) in d.row_entropies.iter().enumerate() {
                if *h < 0.0 || *h > ((i + 1) as f64).ln() {
                    return Err(format!("length {len} row {i} entropy {h}"));
                }
            }
        }
        Ok(String::new())
    }

    fn min_distance(&self) -> Outcome {
        let mut details = Vec::new();
        for n in [2usize, 4, 10, 32] {
            let est =
                min_distance_estimate(n, 1.0, 20_000, self.opts.seed).map_err(|e| e.to_string())?;
            let expected = expected_min_distance(n, 1.0).map_err(|e| e.to_string())?;
            let z = (est.mean - expected).abs() / est.std_error;
            if z > 3.0 {
                return Err(format!(
                    "N={n}: {} vs {expected} ({z:.2} standard errors)",
                    est.mean
                ));
            }
            details.push(format!("N={n}: {z:.2}σ"));
        }
        Ok(details.join(", "))
    }

    // ── cli_io ──

    fn csv_round_trip(&self) -> Outcome {
        let table = self.table(self.config.kind, self.config.scale)?;
        let mut buf = Vec::new();
        write_freqs(&table, OutputFormat::Csv, &mut buf).map_err(|e| e.to_string())?;
        let rows = read_freqs(OutputFormat::Csv, buf.as_slice()).map_err(|e| e.to_string())?;
        for (row, e) in rows.iter().zip(table.entries()) {
            if row.theta_scaled.to_bits() != e.theta_scaled.to_bits()
                || row.theta_base.to_bits() != e.theta_base.to_bits()
                || row.gamma.to_bits() != e.gamma.to_bits()
                || row.mscale.to_bits() != table.mscale().to_bits()
            {
                return Err(format!("dim {} did not round-trip", e.dim));
            }
        }
        if rows.len() != table.entries().len() {
            return Err("row count changed".into());
        }
        Ok(String::new())
    }
}

fn entropy_at_gain(z: &[f64], gain: f64) -> Result<f64, String> {
    let scaled: Vec<f64> = z.iter().map(|x| gain * x).collect();
    softmax_entropy(&scaled).map_err(|e| e.to_string())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn bound(value: f64, limit: f64, what: &str) -> Outcome {
    if value < limit {
        Ok(format!("{what} {value:.3e}"))
    } else {
        Err(format!("{what} {value:.3e} >= {limit:e}"))
    }
}

/// Runs every invariant check against `params` and the scheme in `config`.
///
/// The configured scale is checked together with 2, 16 and 32.
pub fn run_validation(
    params: &RopeParams,
    config: &SchemeConfig,
    opts: ValidationOptions,
) -> Result<ValidationReport, RopeError> {
    config.validate(params)?;
    let scales: BTreeSet<u64> = [config.scale, 2.0, 16.0, 32.0]
        .into_iter()
        .map(f64::to_bits)
        .collect();
    let harness = Harness {
        params: *params,
        config: *config,
        opts,
        scales: scales.into_iter().map(f64::from_bits).collect(),
    };

    type Check = fn(&Harness) -> Outcome;
    let checks: [(&'static str, &'static str, Check); 20] = [
        (
            "rope_core",
            "relative_position_identity",
            Harness::relative_position,
        ),
        ("rope_core", "isometry", Harness::isometry),
        ("rope_core", "reciprocity", Harness::reciprocity),
        ("rope_core", "monotone_spectrum", Harness::monotone_spectrum),
        ("rope_core", "composition", Harness::composition),
        (
            "schemes",
            "interpolation_bound",
            Harness::interpolation_bound,
        ),
        (
            "schemes",
            "agreement_at_unit_scale",
            Harness::agreement_at_unit_scale,
        ),
        (
            "schemes",
            "ntk_aware_endpoints",
            Harness::ntk_aware_endpoints,
        ),
        ("schemes", "ramp_partition", Harness::ramp_partition),
        ("schemes", "ramp_boundaries", Harness::ramp_boundaries),
        (
            "schemes",
            "yarn_matches_by_parts",
            Harness::yarn_matches_by_parts,
        ),
        (
            "dynamic_scaler",
            "graceful_identity",
            Harness::dynamic_identity,
        ),
        (
            "dynamic_scaler",
            "monotone_scale",
            Harness::dynamic_scale_shape,
        ),
        (
            "dynamic_scaler",
            "cache_correctness",
            Harness::dynamic_cache,
        ),
        (
            "attention_lab",
            "temperature_identity",
            Harness::temperature_identity,
        ),
        (
            "attention_lab",
            "entropy_monotonicity",
            Harness::entropy_monotonicity,
        ),
        (
            "attention_lab",
            "shift_invariance",
            Harness::shift_invariance,
        ),
        ("attention_lab", "entropy_bounds", Harness::entropy_bounds),
        (
            "attention_lab",
            "min_distance_monte_carlo",
            Harness::min_distance,
        ),
        ("cli_io", "csv_round_trip", Harness::csv_round_trip),
    ];
    let mut report = ValidationReport::default();
    for (module, name, check) in checks {
        let (passed, detail) = match check(&harness) {
            Ok(detail) => (true, detail),
            Err(detail) => (false, detail),
        };
        report.checks.push(CheckResult {
            module,
            name,
            passed,
            detail,
        });
    }
    Ok(report)
}
