//! Attention diagnostics: softmax entropy, the embedding-length vs logit
//! temperature identity, and the expected minimum spacing of random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Result, RopeError};
use crate::rope::{dot, FrequencyTable, RopeParams};
use crate::schemes::{build_table, SchemeConfig, SchemeKind};

// ── Softmax ─────────────────────────────────────────────────────────────────

fn check_logits(logits: &[f64]) -> Result<f64> {
    if logits.is_empty() {
        return Err(RopeError::EmptyLogits);
    }
    let mut max = f64::NEG_INFINITY;
    for (i, &z) in logits.iter().enumerate() {
        if !z.is_finite() {
            return Err(RopeError::NonFiniteLogit(i));
        }
        max = max.max(z);
    }
    Ok(max)
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let max = check_logits(logits)?;
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    Ok(out)
}

/// Shannon entropy (nats) of `softmax(logits)`, clamped to `[0, ln N]`.
pub fn softmax_entropy(logits: &[f64]) -> Result<f64> {
    let max = check_logits(logits)?;
    // H = ln Z - E_p[z - max], with Z = sum exp(z - max)
    let mut partition = 0.0;
    let mut weighted = 0.0;
    for &z in logits {
        let shifted = z - max;
        let w = shifted.exp();
        partition += w;
        weighted += w * shifted;
    }
    let h = partition.ln() - weighted / partition;
    Ok(h.clamp(0.0, (logits.len() as f64).ln()))
}

// ── Temperature identity ────────────────────────────────────────────────────

fn rotate_all(
    vectors: &[Vec<f64>],
    positions: &[usize],
    table: &FrequencyTable,
) -> Result<Vec<Vec<f64>>> {
    vectors
        .iter()
        .zip(positions)
        .map(|(v, &m)| {
            let mut out = vec![0.0; v.len()];
            table.rotate_into(v, m, &mut out)?;
            Ok(out)
        })
        .collect()
}

/// Causal score rows: row `i` holds the logits of query `i` against keys `0..=i`.
fn causal_scores(
    queries: &[Vec<f64>],
    keys: &[Vec<f64>],
    head_dim: usize,
    gain: f64,
) -> Vec<Vec<f64>> {
    let norm = (head_dim as f64).sqrt();
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| keys[..=i].iter().map(|k| gain * dot(q, k) / norm).collect())
        .collect()
}

/// Largest elementwise difference between causal attention computed with
/// `with_mscale` and attention computed with `without_mscale` whose logits
/// are multiplied by `t`.
///
/// The two tables must share parameters and scaled frequencies, and their
/// mscale ratio must satisfy `(with / without)^2 = t`.
pub fn temperature_equivalence_gap(
    queries: &[Vec<f64>],
    keys: &[Vec<f64>],
    positions: &[usize],
    with_mscale: &FrequencyTable,
    without_mscale: &FrequencyTable,
    t: f64,
) -> Result<f64> {
    if with_mscale.params() != without_mscale.params() {
        return Err(RopeError::TableMismatch("rope parameters differ".into()));
    }
    if !with_mscale.theta_scaled().eq(without_mscale.theta_scaled()) {
        return Err(RopeError::TableMismatch("scaled frequencies differ".into()));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(RopeError::NonPositive {
            what: "temperature",
            value: t,
        });
    }
    let ratio = with_mscale.mscale() / without_mscale.mscale();
    if ((ratio * ratio - t) / t).abs() > 1e-12 {
        return Err(RopeError::TableMismatch(format!(
            "mscale ratio {ratio} is not sqrt of temperature {t}"
        )));
    }
    let n = positions.len();
    for (what, len) in [("queries", queries.len()), ("keys", keys.len())] {
        if len != n {
            return Err(RopeError::TableMismatch(format!(
                "{len} {what} for {n} positions"
            )));
        }
    }

    let dim = with_mscale.head_dim();
    let scaled = causal_scores(
        &rotate_all(queries, positions, with_mscale)?,
        &rotate_all(keys, positions, with_mscale)?,
        dim,
        1.0,
    );
    let tempered = causal_scores(
        &rotate_all(queries, positions, without_mscale)?,
        &rotate_all(keys, positions, without_mscale)?,
        dim,
        t,
    );
    let mut gap: f64 = 0.0;
    for (a, b) in scaled.iter().zip(&tempered) {
        let (pa, pb) = (softmax(a)?, softmax(b)?);
        for (x, y) in pa.iter().zip(&pb) {
            gap = gap.max((x - y).abs());
        }
    }
    Ok(gap)
}

// ── Entropy sweep ───────────────────────────────────────────────────────────

/// Per-row causal attention entropies for one `(scheme, length)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionDiagnostics {
    pub row_entropies: Vec<f64>,
    pub mean_entropy: f64,
    /// Logit temperature implied by the table, `mscale^2`.
    pub temperature_t: f64,
    pub context_length: usize,
    pub scheme: SchemeKind,
    pub mscale: f64,
}

impl AttentionDiagnostics {
    /// `ln(context_length)`, the entropy of uniform attention over the full window.
    pub fn uniform_bound(&self) -> f64 {
        (self.context_length as f64).ln()
    }
}

/// Standard-normal queries and keys for a sequence of `length` tokens.
///
/// The stream depends only on `(seed, length, head_dim)`, so every scheme
/// evaluated at the same length sees the same vectors.
pub fn synthetic_qk(seed: u64, length: usize, head_dim: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(length as u64);
    let mut draw = || -> Vec<Vec<f64>> {
        (0..length)
            .map(|_| (0..head_dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    };
    let queries = draw();
    let keys = draw();
    (queries, keys)
}

/// Causal attention entropy of synthetic vectors at positions `0..length`.
pub fn attention_diagnostics(
    table: &FrequencyTable,
    length: usize,
    seed: u64,
) -> Result<AttentionDiagnostics> {
    if length == 0 {
        return Err(RopeError::NonPositive {
            what: "context length",
            value: 0.0,
        });
    }
    let (queries, keys) = synthetic_qk(seed, length, table.head_dim());
    let positions: Vec<usize> = (0..length).collect();
    let rows = causal_scores(
        &rotate_all(&queries, &positions, table)?,
        &rotate_all(&keys, &positions, table)?,
        table.head_dim(),
        1.0,
    );
    let row_entropies = rows
        .iter()
        .map(|row| softmax_entropy(row))
        .collect::<Result<Vec<_>>>()?;
    let mean_entropy = row_entropies.iter().sum::<f64>() / length as f64;
    Ok(AttentionDiagnostics {
        row_entropies,
        mean_entropy,
        temperature_t: table.mscale() * table.mscale(),
        context_length: length,
        scheme: table.scheme(),
        mscale: table.mscale(),
    })
}

/// One diagnostics record per `(config, length)`, configs outermost.
pub fn entropy_sweep(
    params: &RopeParams,
    configs: &[SchemeConfig],
    lengths: &[usize],
    seed: u64,
) -> Result<Vec<AttentionDiagnostics>> {
    let mut out = Vec::with_capacity(configs.len() * lengths.len());
    for config in configs {
        let table = build_table(params, config)?;
        for &length in lengths {
            out.push(attention_diagnostics(&table, length, seed)?);
        }
    }
    Ok(out)
}

// ── Minimum spacing ─────────────────────────────────────────────────────────

/// Expected minimum pairwise distance of `n` uniform points on `[0, length]`,
/// `length / (n^2 - 1)`.
pub fn expected_min_distance(n: usize, length: f64) -> Result<f64> {
    if n < 2 {
        return Err(RopeError::TooFewPoints(n));
    }
    if !length.is_finite() || length <= 0.0 {
        return Err(RopeError::NonPositive {
            what: "length",
            value: length,
        });
    }
    let n = n as f64;
    Ok(length / (n * n - 1.0))
}

/// Monte Carlo estimate of the mean minimum pairwise distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinDistanceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

pub fn min_distance_estimate(
    n: usize,
    length: f64,
    trials: usize,
    seed: u64,
) -> Result<MinDistanceEstimate> {
    if n < 2 {
        return Err(RopeError::TooFewPoints(n));
    }
    if trials == 0 {
        return Err(RopeError::NonPositive {
            what: "trials",
            value: 0.0,
        });
    }
    if !length.is_finite() || length <= 0.0 {
        return Err(RopeError::NonPositive {
            what: "length",
            value: length,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![0.0f64; n];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        points.iter_mut().for_each(|p| *p = rng.random::<f64>());
        points.sort_unstable_by(f64::total_cmp);
        let gap = points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        sum += gap;
        sum_sq += gap * gap;
    }
    // sampled on the unit interval and scaled once, so estimates are exactly linear in length
    let count = trials as f64;
    let mean = sum / count;
    let variance = if trials > 1 {
        (sum_sq - count * mean * mean).max(0.0) / (count - 1.0)
    } else {
        0.0
    };
    Ok(MinDistanceEstimate {
        mean: mean * length,
        std_error: (variance / count).sqrt() * length,
        trials,
    })
}

/// Mean minimum pairwise distance over `trials` draws of `n` uniform points on `[0, length]`.
pub fn min_distance_monte_carlo(n: usize, length: f64, trials: usize, seed: u64) -> Result<f64> {
    Ok(min_distance_estimate(n, length, trials, seed)?.mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rope::build_base_table;

    #[test]
    fn entropy_examples() {
        assert!((softmax_entropy(&[0.3; 8]).unwrap() - 8f64.ln()).abs() < 1e-15);
        let mut spike = vec![0.0; 16];
        spike[3] = 1000.0;
        assert!(softmax_entropy(&spike).unwrap() < 1e-6);
        // H(1/4, 3/4), 40-digit oracle
        let h = softmax_entropy(&[0.0, 3f64.ln()]).unwrap();
        assert!((h - 0.562_335_144_618_808_4).abs() < 1e-15);
        assert_eq!(softmax_entropy(&[42.0]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_errors() {
        assert_eq!(softmax_entropy(&[]), Err(RopeError::EmptyLogits));
        assert_eq!(
            softmax_entropy(&[1.0, f64::NAN]),
            Err(RopeError::NonFiniteLogit(1))
        );
        assert_eq!(softmax(&[f64::INFINITY]), Err(RopeError::NonFiniteLogit(0)));
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, -2.0, 700.0, 699.0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p[2] > p[3]);
    }

    #[test]
    fn gap_is_zero_at_unit_temperature() {
        let table = build_base_table(&RopeParams::default());
        let (q, k) = synthetic_qk(7, 16, 128);
        let pos: Vec<usize> = (0..16).collect();
        let gap = temperature_equivalence_gap(&q, &k, &pos, &table, &table, 1.0).unwrap();
        assert_eq!(gap, 0.0);

        let gap =
            temperature_equivalence_gap(&q[..1], &k[..1], &pos[..1], &table, &table, 1.0).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn gap_rejects_mismatched_tables() {
        let p = RopeParams::default();
        let yarn = build_table(&p, &SchemeConfig::new(SchemeKind::Yarn, 16.0)).unwrap();
        let pi = build_table(&p, &SchemeConfig::new(SchemeKind::Pi, 16.0)).unwrap();
        let (q, k) = synthetic_qk(1, 4, 128);
        let pos = [0, 1, 2, 3];
        assert!(temperature_equivalence_gap(&q, &k, &pos, &yarn, &pi, 1.0).is_err());

        let parts = build_table(&p, &SchemeConfig::new(SchemeKind::NtkByParts, 16.0)).unwrap();
        assert!(temperature_equivalence_gap(&q, &k, &pos, &yarn, &parts, 1.0).is_err());
        let t = yarn.mscale().powi(2);
        assert!(temperature_equivalence_gap(&q, &k, &pos[..3], &yarn, &parts, t).is_err());
        assert!(temperature_equivalence_gap(&q, &k, &pos, &yarn, &parts, t).unwrap() < 1e-12);
    }

    #[test]
    fn sweep_examples() {
        let p = RopeParams::default();
        let none = SchemeConfig::default();
        let d = entropy_sweep(&p, &[none], &[1], 0).unwrap();
        assert_eq!(d[0].mean_entropy, 0.0);
        assert_eq!(d[0].uniform_bound(), 0.0);

        let configs = [
            SchemeConfig::new(SchemeKind::Yarn, 8.0),
            SchemeConfig::new(SchemeKind::NtkByParts, 8.0),
        ];
        let a = entropy_sweep(&p, &configs, &[8, 64], 11).unwrap();
        let b = entropy_sweep(&p, &configs, &[8, 64], 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(
            a.iter()
                .map(|d| (d.scheme, d.context_length))
                .collect::<Vec<_>>(),
            vec![
                (SchemeKind::Yarn, 8),
                (SchemeKind::Yarn, 64),
                (SchemeKind::NtkByParts, 8),
                (SchemeKind::NtkByParts, 64)
            ]
        );
        // yarn sharpens: logits are the by-parts logits times t > 1
        assert!(a[0].mean_entropy <= a[2].mean_entropy);
        assert!(a[1].mean_entropy <= a[3].mean_entropy);
        for d in &a {
            for (i, h) in d.row_entropies.iter().enumerate() {
                assert!(*h >= 0.0 && *h <= ((i + 1) as f64).ln() + 1e-12);
            }
        }
        assert!(attention_diagnostics(&build_base_table(&p), 0, 0).is_err());
    }

    #[test]
    fn synthetic_vectors_depend_on_length_and_seed() {
        let (q1, _) = synthetic_qk(3, 4, 8);
        let (q2, _) = synthetic_qk(3, 4, 8);
        let (q3, _) = synthetic_qk(4, 4, 8);
        let (q4, _) = synthetic_qk(3, 5, 8);
        assert_eq!(q1, q2);
        assert_ne!(q1, q3);
        assert_ne!(q1[0], q4[0]);
    }

    #[test]
    fn min_distance_examples() {
        assert!((expected_min_distance(2, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((expected_min_distance(10, 1.0).unwrap() - 1.0 / 99.0).abs() < 1e-16);
        assert_eq!(
            expected_min_distance(1, 1.0),
            Err(RopeError::TooFewPoints(1))
        );
        assert!(expected_min_distance(3, 0.0).is_err());
    }

    #[test]
    fn monte_carlo_examples() {
        let est = min_distance_monte_carlo(2, 1.0, 200_000, 5).unwrap();
        assert!((est - 1.0 / 3.0).abs() < 0.01);

        let one = min_distance_monte_carlo(6, 1.0, 5_000, 9).unwrap();
        let two = min_distance_monte_carlo(6, 2.0, 5_000, 9).unwrap();
        assert_eq!(two, 2.0 * one);

        assert_eq!(
            min_distance_monte_carlo(4, 1.0, 1, 42).unwrap(),
            min_distance_monte_carlo(4, 1.0, 1, 42).unwrap()
        );
        assert!(min_distance_monte_carlo(4, 1.0, 0, 42).is_err());
        assert!(min_distance_monte_carlo(1, 1.0, 10, 42).is_err());
    }
}
