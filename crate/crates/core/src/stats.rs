//! Empirical-distribution machinery: tagged sample sets, ECDFs,
//! Kolmogorov-Smirnov tests and the closed-form reference CDFs used to turn
//! equalities in law into assertions.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Provenance tag carried by every Monte Carlo sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub seed: u64,
    pub label: String,
    pub t: f64,
    pub dt: f64,
}

/// Tagged scalar samples; anonymous samples are not allowed.
#[derive(Debug, Clone)]
pub struct SampleSet {
    values: Vec<f64>,
    meta: SampleMeta,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(SampleSet { values, meta })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

/// Right-continuous empirical CDF with evaluation by binary search.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
        Ok(Ecdf { sorted })
    }

    /// Fraction of samples <= x.
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Outcome of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(statistic: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    kolmogorov_sf(lambda)
}

/// Two-sample KS test: sup distance between the ECDFs with the asymptotic
/// Kolmogorov p-value at the effective sample size.
pub fn ks_two_sample(a: &SampleSet, b: &SampleSet) -> Result<KsOutcome> {
    let ea = Ecdf::new(a.values())?;
    let eb = Ecdf::new(b.values())?;
    let mut statistic = 0.0_f64;
    for &x in ea.sorted().iter().chain(eb.sorted().iter()) {
        statistic = statistic.max((ea.eval(x) - eb.eval(x)).abs());
    }
    let na = a.len() as f64;
    let nb = b.len() as f64;
    Ok(KsOutcome {
        statistic,
        p_value: ks_p_value(statistic, na * nb / (na + nb)),
    })
}

/// One-sample KS test against a reference CDF. The sup is exact because the
/// discrepancy is evaluated on both sides of every jump; a non-monotone cdf
/// on the sample points is reported as a contract violation.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &SampleSet, cdf: F) -> Result<KsOutcome> {
    let e = Ecdf::new(a.values())?;
    let n = e.sorted().len() as f64;
    let mut statistic = 0.0_f64;
    let mut prev_cdf = f64::NEG_INFINITY;
    for (i, &x) in e.sorted().iter().enumerate() {
        let f = cdf(x);
        if f < prev_cdf - 1e-12 || !(-1e-9..=1.0 + 1e-9).contains(&f) {
            return Err(Error::NonMonotoneCdf);
        }
        prev_cdf = f;
        let hi = (i + 1) as f64 / n;
        let lo = i as f64 / n;
        statistic = statistic.max((hi - f).abs()).max((f - lo).abs());
    }
    Ok(KsOutcome {
        statistic,
        p_value: ks_p_value(statistic, n),
    })
}

/// Dvoretzky-Kiefer-Wolfowitz uniform band sqrt(ln(2/delta) / (2N)).
pub fn dkw_epsilon(n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".to_string()));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidParameter(
            "delta must lie in (0, 1)".to_string(),
        ));
    }
    Ok(((2.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// CDF-scale budget for the downward bias of grid-restricted running maxima,
/// added to one-sample thresholds: 0.6 sqrt(dt) / sqrt(t).
pub fn discretization_bias_budget(dt: f64, t: f64) -> f64 {
    0.6 * (dt / t).sqrt()
}

/// Standard normal CDF through erfc, stable in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// CDF of the running maximum of a single free path over [0, t]:
/// 2 Phi(a / sqrt(t)) - 1 for a >= 0 (reflection principle).
pub fn half_normal_cdf(t: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    libm::erf(a / (2.0 * t).sqrt())
}

/// CDF of the scaled chi-3 (Maxwell) law governing the single wall-excluded
/// particle at time t: erf(u/sqrt(2)) - sqrt(2/pi) u exp(-u^2/2), u = a/sqrt(t).
pub fn maxwell_cdf(t: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let u = a / t.sqrt();
    libm::erf(u / SQRT_2) - 2.0 * INV_SQRT_2PI * u * (-0.5 * u * u).exp()
}
