//! Student's t-test and the distribution functions behind it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample `{label}` needs at least 2 values, got {len}")]
    TooShort { label: String, len: usize },
    #[error("sample `{0}` contains a non-finite value")]
    NonFinite(String),
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDf(f64),
    #[error("both samples have zero variance but different means")]
    DegenerateSamples,
    #[error("incomplete beta did not converge for a={a}, b={b}, x={x}")]
    NoConvergence { a: f64, b: f64, x: f64 },
    #[error("argument out of domain: {0}")]
    Domain(String),
}

const CF_TOLERANCE: f64 = 1e-12;
const CF_MAX_ITER: usize = 300;
const TINY: f64 = 1e-300;

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

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
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

/// Continued fraction for I_x(a, b) by the modified Lentz method.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
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
    for m in 1..=CF_MAX_ITER {
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
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_TOLERANCE {
            return Ok(h);
        }
    }
    Err(StatsError::NoConvergence { a, b, x })
}

/// Regularized incomplete beta function I_x(a, b).
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(StatsError::Domain(format!("a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(StatsError::Domain(format!("x={x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// Upper tail P(|T| > |t|) for Student's t with `df` degrees of freedom.
fn two_sided_tail(t: f64, df: f64) -> Result<f64, StatsError> {
    if t == 0.0 {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// CDF of Student's t distribution.
pub fn t_cdf(t: f64, df: f64) -> Result<f64, StatsError> {
    if df.is_nan() || df <= 0.0 {
        return Err(StatsError::InvalidDf(df));
    }
    if t.is_nan() {
        return Err(StatsError::Domain("t is NaN".into()));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let tail = 0.5 * two_sided_tail(t, df)?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleVector {
    label: String,
    values: Vec<f64>,
}

impl SampleVector {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        let label = label.into();
        if values.len() < 2 {
            return Err(StatsError::TooShort {
                label,
                len: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(label));
        }
        Ok(Self { label, values })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.values.len() - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Variance {
    #[default]
    Pooled,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    pub significant: bool,
    pub alpha: f64,
}

/// Pooled-variance two-sample Student's t-test, two-sided.
pub fn t_test_two_sample(a: &SampleVector, b: &SampleVector, alpha: f64) -> Result<TestResult, StatsError> {
    t_test(a, b, alpha, Variance::Pooled)
}

pub fn t_test(a: &SampleVector, b: &SampleVector, alpha: f64, variance: Variance) -> Result<TestResult, StatsError> {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (a.variance(), b.variance());
    let diff = a.mean() - b.mean();
    let (se2, df) = match variance {
        Variance::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            (pooled * (1.0 / na + 1.0 / nb), df)
        }
        Variance::Welch => {
            let (sa, sb) = (va / na, vb / nb);
            let se2 = sa + sb;
            let denom = sa * sa / (na - 1.0) + sb * sb / (nb - 1.0);
            let df = if denom > 0.0 { se2 * se2 / denom } else { na + nb - 2.0 };
            (se2, df)
        }
    };
    if se2 == 0.0 {
        if diff == 0.0 {
            return Ok(TestResult {
                t: 0.0,
                df,
                p_two_sided: 1.0,
                significant: false,
                alpha,
            });
        }
        return Err(StatsError::DegenerateSamples);
    }
    let t = diff / se2.sqrt();
    let p = two_sided_tail(t, df)?.clamp(0.0, 1.0);
    Ok(TestResult {
        t,
        df,
        p_two_sided: p,
        significant: p < alpha,
        alpha,
    })
}

/// Outcome of testing one model against the weakest baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model: String,
    pub baseline: String,
    pub result: Option<TestResult>,
    pub star: bool,
}

/// Tests each model against the baseline with the lowest sample mean.
///
/// A model is starred only when its mean is above that baseline's and the
/// two-sided test rejects at `alpha`. Degenerate tests count as not significant.
pub fn compare_to_weakest_baseline(
    results: &BTreeMap<String, SampleVector>,
    baselines: &BTreeMap<String, SampleVector>,
    alpha: f64,
) -> Vec<Comparison> {
    let Some((base_name, base)) = baselines.iter().min_by(|x, y| x.1.mean().total_cmp(&y.1.mean())) else {
        return results
            .keys()
            .map(|m| Comparison {
                model: m.clone(),
                baseline: String::new(),
                result: None,
                star: false,
            })
            .collect();
    };
    results
        .iter()
        .map(|(model, sample)| {
            let result = t_test_two_sample(sample, base, alpha).ok();
            let star = sample.mean() > base.mean() && result.is_some_and(|r| r.significant);
            Comparison {
                model: model.clone(),
                baseline: base_name.clone(),
                result,
                star,
            }
        })
        .collect()
}

pub fn significance_stars(
    results: &BTreeMap<String, SampleVector>,
    baselines: &BTreeMap<String, SampleVector>,
    alpha: f64,
) -> BTreeMap<String, bool> {
    compare_to_weakest_baseline(results, baselines, alpha)
        .into_iter()
        .map(|c| (c.model, c.star))
        .collect()
}
