//! Paired before/after statistics across observations.
//!
//! Spreads here are sample standard deviations (n − 1); within-run spreads in
//! [`crate::metrics`] use the population convention.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::VehicleMetrics;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("pre has {pre} values but post has {post}")]
    LengthMismatch { pre: usize, post: usize },
    #[error("differences have zero variance")]
    ZeroVariance,
    #[error("pre and post share no observation keys")]
    NoOverlap,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn betai(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
pub fn t_sf(t: f64, df: u32) -> f64 {
    assert!(df >= 1, "t_sf needs df >= 1");
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let df = df as f64;
    betai(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1). Zero for fewer than two values.
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn differences(pre: &[f64], post: &[f64]) -> Result<Vec<f64>, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::LengthMismatch {
            pre: pre.len(),
            post: post.len(),
        });
    }
    if pre.len() < 2 {
        return Err(StatsError::TooFewPairs(pre.len()));
    }
    Ok(pre.iter().zip(post).map(|(a, b)| a - b).collect())
}

/// Paired t on `pre − post`. Zero-variance differences give `±inf` when
/// their mean is nonzero and `0` when every difference is zero.
pub fn paired_t(pre: &[f64], post: &[f64]) -> Result<(f64, u32), StatsError> {
    let d = differences(pre, post)?;
    let n = d.len();
    let m = mean(&d);
    let sd = sample_sd(&d);
    let t = if sd == 0.0 {
        if m == 0.0 {
            0.0
        } else {
            m.signum() * f64::INFINITY
        }
    } else {
        m / (sd / (n as f64).sqrt())
    };
    Ok((t, (n - 1) as u32))
}

/// Cohen's d for paired samples: mean over sample SD of the differences.
pub fn cohen_dz(pre: &[f64], post: &[f64]) -> Result<f64, StatsError> {
    let d = differences(pre, post)?;
    let sd = sample_sd(&d);
    if sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(mean(&d) / sd)
}

pub fn cohen_dz_from_t(t: f64, n: usize) -> f64 {
    t / (n as f64).sqrt()
}

/// Observation identity: driver (or session) label plus lap.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObservationKey {
    pub driver: String,
    pub lap: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variable: String,
    pub n: usize,
    pub pre_mean: f64,
    pub pre_sd: f64,
    pub post_mean: f64,
    pub post_sd: f64,
    pub t: f64,
    pub df: u32,
    pub p: f64,
    pub cohen_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Observations present on only one side, or lacking a requested value.
    pub dropped: usize,
    pub warnings: Vec<String>,
}

/// Paired comparison of keyed observations, one row per variable. Keys
/// missing from either side, or without a value for a variable, are dropped
/// pairwise and counted.
pub fn compare(
    pre: &[(ObservationKey, VehicleMetrics)],
    post: &[(ObservationKey, VehicleMetrics)],
    variables: &[&str],
) -> Result<Comparison, StatsError> {
    for v in variables {
        if !crate::metrics::VARIABLES.contains(v) {
            return Err(StatsError::UnknownVariable(v.to_string()));
        }
    }
    let pre: BTreeMap<_, _> = pre.iter().map(|(k, m)| (k, m)).collect();
    let post: BTreeMap<_, _> = post.iter().map(|(k, m)| (k, m)).collect();
    let shared: Vec<_> = pre
        .keys()
        .filter(|k| post.contains_key(*k))
        .copied()
        .collect();
    if shared.is_empty() {
        return Err(StatsError::NoOverlap);
    }
    let unmatched = pre.len() + post.len() - 2 * shared.len();
    let mut warnings = Vec::new();
    if unmatched > 0 {
        warnings.push(format!(
            "{unmatched} observation(s) without a partner were dropped"
        ));
    }
    let mut dropped = unmatched;
    let mut rows = Vec::new();
    for &var in variables {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for k in &shared {
            match (pre[k].get(var), post[k].get(var)) {
                (Some(x), Some(y)) if x.is_finite() && y.is_finite() => {
                    a.push(x);
                    b.push(y);
                }
                _ => {
                    dropped += 1;
                    warnings.push(format!(
                        "{var}: no value for {}{}",
                        k.driver,
                        k.lap.map(|l| format!(" lap {l}")).unwrap_or_default()
                    ));
                }
            }
        }
        if a.len() < 2 {
            warnings.push(format!("{var}: fewer than 2 pairs, row skipped"));
            continue;
        }
        let (t, df) = paired_t(&a, &b)?;
        let d = cohen_dz(&a, &b).unwrap_or(if t == 0.0 { 0.0 } else { t });
        rows.push(ComparisonRow {
            variable: var.to_string(),
            n: a.len(),
            pre_mean: mean(&a),
            pre_sd: sample_sd(&a),
            post_mean: mean(&b),
            post_sd: sample_sd(&b),
            t,
            df,
            p: t_sf(t, df),
            cohen_d: d,
        });
    }
    Ok(Comparison {
        rows,
        dropped,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert_abs_diff_eq!(ln_gamma(n as f64), fact.ln(), epsilon = 1e-12);
            fact *= n as f64;
        }
        assert_abs_diff_eq!(
            ln_gamma(0.5),
            std::f64::consts::PI.sqrt().ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn hand_worked_pair() {
        let (t, df) = paired_t(&[2.0, 3.0, 5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(t, 4.0, epsilon = 1e-12);
        assert_eq!(df, 2);
        assert_abs_diff_eq!(t_sf(t, df), 0.057191, epsilon = 1e-6);
        let d = cohen_dz(&[2.0, 3.0, 5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(d, 4.0 / 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn known_t_n_triples() {
        assert_abs_diff_eq!(cohen_dz_from_t(6.30, 25), 1.26, epsilon = 0.005);
        assert_abs_diff_eq!(cohen_dz_from_t(4.08, 11), 1.2302, epsilon = 1e-4);
    }

    #[test]
    fn equal_samples_give_zero() {
        let x = [1.0, 2.0, 3.5];
        assert_eq!(paired_t(&x, &x).unwrap(), (0.0, 2));
        assert_eq!(t_sf(0.0, 2), 1.0);
        assert_eq!(cohen_dz(&x, &x), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn constant_shift_is_infinite() {
        let (t, _) = paired_t(&[2.0, 3.0], &[1.0, 2.0]).unwrap();
        assert_eq!(t, f64::INFINITY);
        assert_eq!(t_sf(t, 1), 0.0);
    }

    #[test]
    fn input_errors() {
        assert_eq!(paired_t(&[1.0], &[2.0]), Err(StatsError::TooFewPairs(1)));
        assert_eq!(
            paired_t(&[1.0, 2.0], &[2.0]),
            Err(StatsError::LengthMismatch { pre: 2, post: 1 })
        );
    }

    #[test]
    fn df_one_and_two_closed_forms() {
        for &t in &[0.1, 0.5, 1.0, 2.0, 4.0, 10.0, 50.0] {
            let p1 = 1.0 - 2.0 / std::f64::consts::PI * f64::atan(t);
            assert_abs_diff_eq!(t_sf(t, 1), p1, epsilon = 1e-12);
            let p2 = 1.0 - t / (t * t + 2.0).sqrt();
            assert_abs_diff_eq!(t_sf(t, 2), p2, epsilon = 1e-12);
        }
    }

    fn obs(driver: &str, lap: i64, speed_sd: f64) -> (ObservationKey, VehicleMetrics) {
        let key = ObservationKey {
            driver: driver.into(),
            lap: Some(lap),
        };
        let m = VehicleMetrics {
            vehicle_id: driver.into(),
            lap: Some(lap),
            speed_mean: 8.0,
            speed_sd,
            gap_mean: None,
            gap_sd: None,
            timegap_mean: None,
            timegap_sd: None,
            min_ttc: None,
            pfs_mean: None,
            energy: None,
            extension_mean: None,
            extension_sd: None,
            overlap_samples: 0,
        };
        (key, m)
    }

    #[test]
    fn compare_identical_sets() {
        let pre = vec![obs("a", 0, 1.0), obs("a", 1, 1.5), obs("b", 0, 2.0)];
        let c = compare(&pre, &pre, &["speed_sd", "speed_mean"]).unwrap();
        for r in &c.rows {
            assert_eq!((r.t, r.p, r.cohen_d), (0.0, 1.0, 0.0));
        }
        assert_eq!(c.dropped, 0);
    }

    #[test]
    fn compare_drops_missing_lap() {
        let pre = vec![
            obs("a", 0, 1.0),
            obs("a", 1, 1.5),
            obs("b", 0, 2.0),
            obs("b", 1, 2.2),
        ];
        let post = vec![obs("a", 0, 0.5), obs("a", 1, 1.2), obs("b", 0, 1.0)];
        let c = compare(&pre, &post, &["speed_sd"]).unwrap();
        assert_eq!(c.rows[0].df, 2);
        assert_eq!(c.dropped, 1);
        assert_eq!(c.warnings.len(), 1);
        assert!(c.rows[0].t > 0.0);
    }

    #[test]
    fn compare_without_overlap_fails() {
        let pre = vec![obs("a", 0, 1.0)];
        let post = vec![obs("b", 0, 1.0)];
        assert_eq!(
            compare(&pre, &post, &["speed_sd"]),
            Err(StatsError::NoOverlap)
        );
        assert_eq!(
            compare(&pre, &pre, &["nope"]),
            Err(StatsError::UnknownVariable("nope".into()))
        );
    }
}
