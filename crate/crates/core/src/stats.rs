//! Small statistical toolkit shared by the estimators and diagnostics.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Point estimate with a confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub point: f64,
    pub ci: (f64, f64),
    pub level: f64,
    pub replicates: u64,
    pub censored: u64,
    pub method: String,
    /// Set when some input (σ, a truncated probe) could not be certified.
    #[serde(default)]
    pub uncertified: bool,
}

impl EstimateReport {
    pub fn new(
        quantity: impl Into<String>,
        point: f64,
        ci: (f64, f64),
        level: f64,
        replicates: u64,
        method: impl Into<String>,
    ) -> Self {
        let (lo, hi) = ci;
        Self {
            quantity: quantity.into(),
            point,
            ci: (lo.min(point), hi.max(point)),
            level,
            replicates,
            censored: 0,
            method: method.into(),
            uncertified: false,
        }
    }

    pub fn with_censored(mut self, censored: u64) -> Self {
        self.censored = censored;
        self
    }

    pub fn half_width(&self) -> f64 {
        (self.ci.1 - self.ci.0) / 2.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci.0 <= x && x <= self.ci.1
    }

    pub fn check(&self) -> Result<()> {
        if !(self.ci.0 <= self.point && self.point <= self.ci.1) {
            return Err(Error::InvariantViolation(format!(
                "{}: point {} outside [{}, {}]",
                self.quantity, self.point, self.ci.0, self.ci.1
            )));
        }
        if self.censored > self.replicates {
            return Err(Error::InvariantViolation(format!(
                "{}: {} censored out of {} replicates",
                self.quantity, self.censored, self.replicates
            )));
        }
        Ok(())
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Two-sided critical value `z` with `P(|Z| ≤ z) = level`.
pub fn z_for_level(level: f64) -> f64 {
    std_normal().inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, level: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = z_for_level(level);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Binomial proportion with its Wilson interval.
pub fn proportion(quantity: &str, successes: u64, trials: u64, level: f64) -> EstimateReport {
    let p = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
    EstimateReport::new(quantity, p, wilson(successes, trials, level), level, trials, "wilson")
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<CompensatedSum>().value() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).collect::<CompensatedSum>().value()
        / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return 0.0;
    }
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect::<CompensatedSum>()
        .value()
        / (xs.len() - 1) as f64
}

/// Normal-theory interval for a mean from replicate values.
pub fn mean_estimate(quantity: &str, xs: &[f64], level: f64) -> EstimateReport {
    let m = mean(xs);
    let half = z_for_level(level) * std_dev(xs) / (xs.len() as f64).sqrt();
    EstimateReport::new(quantity, m, (m - half, m + half), level, xs.len() as u64, "replicate-mean")
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    if lag >= n {
        return 0.0;
    }
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum();
    num / denom
}

/// Two-sided permutation p-value for lag-1 dependence.
pub fn permutation_pvalue_lag1<R: Rng + ?Sized>(xs: &[f64], permutations: usize, rng: &mut R) -> f64 {
    let observed = autocorrelation(xs, 1).abs();
    let mut work = xs.to_vec();
    let mut extreme = 0usize;
    for _ in 0..permutations {
        work.shuffle(rng);
        if autocorrelation(&work, 1).abs() >= observed - 1e-12 {
            extreme += 1;
        }
    }
    (extreme + 1) as f64 / (permutations + 1) as f64
}

/// Kolmogorov distribution tail `Q(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test, asymptotic p-value with the
/// Stephens small-sample adjustment.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    KsResult {
        distance: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}

/// One-sample KS distance of `xs` against a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut x = xs.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().fold(0.0f64, |d, (i, &v)| {
        let f = cdf(v);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Critical value of the one-sample KS statistic at significance `alpha`,
/// using the asymptotic Kolmogorov quantile with the Stephens adjustment.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let s = (n as f64).sqrt();
    c / (s + 0.12 + 0.11 / s)
}

/// Lilliefors critical value for a normal fit with estimated mean and
/// variance (large-sample approximation, 1%, 5% and 10% levels).
pub fn lilliefors_critical(n: usize, alpha: f64) -> f64 {
    let k = if alpha <= 0.01 {
        1.031
    } else if alpha <= 0.05 {
        0.886
    } else {
        0.805
    };
    k / (n as f64).sqrt()
}

/// Dvoretzky–Kiefer–Wolfowitz band half-width: with probability at least
/// `level` the ECDF of `n` samples is within this distance of the truth.
pub fn dkw_epsilon(n: usize, level: f64) -> f64 {
    ((2.0 / (1.0 - level)).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Weighted least squares fit of `y = a + b x`, with weighted `R²`.
pub fn weighted_linear_fit(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() != ws.len() {
        return Err(Error::InvalidArgument("fit inputs differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("a fit needs at least two points".into()));
    }
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
        syy += w * (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        points: xs.len(),
    })
}

/// One row of an empirical survival table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub n: u64,
    pub survivors: u64,
    pub total: u64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Survival table `P̂(X > n)` for each `n` in `ns`.
pub fn survival_table(values: &[u64], ns: &[u64], level: f64) -> Vec<SurvivalPoint> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let total = sorted.len() as u64;
    ns.iter()
        .map(|&n| {
            let at_most = sorted.partition_point(|&v| v <= n) as u64;
            let survivors = total - at_most;
            let (lo, hi) = wilson(survivors, total, level);
            SurvivalPoint {
                n,
                survivors,
                total,
                estimate: if total == 0 { 0.0 } else { survivors as f64 / total as f64 },
                lo,
                hi,
            }
        })
        .collect()
}

/// Weighted fit of `log P̂` against `n`, dropping rows with no survivors.
///
/// Each row is weighted by the inverse delta-method variance of `log p̂`,
/// namely `R p̂ / (1 - p̂)`.
pub fn log_survival_fit(table: &[SurvivalPoint]) -> Result<LinearFit> {
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for row in table {
        if row.survivors == 0 || row.total == 0 {
            continue;
        }
        let p = row.estimate;
        xs.push(row.n as f64);
        ys.push(p.ln());
        ws.push(if p >= 1.0 { row.total as f64 } else { row.total as f64 * p / (1.0 - p) });
    }
    weighted_linear_fit(&xs, &ys, &ws)
}
