//! Radius-of-influence laws and the exact analytic objects built from them:
//! the products `a_n`, the percolation criterion and the overshoot law.
//!
//! Radii are nonnegative integers. Only `floor(I)` decides which vertices lie
//! within reach, so integer laws lose nothing and keep oracles exact.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radii are capped here so that `vertex + radius` never overflows `i64`.
pub const RADIUS_CAP: u64 = 1 << 52;

/// Tolerance on the total mass of a finite pmf.
pub const PMF_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusLaw {
    /// `I = c` almost surely.
    Constant { c: u64 },
    /// `P(I = k) = (1 - q) q^k` on `{0, 1, 2, ...}`.
    Geometric { q: f64 },
    /// `P(I = k) = (1 - q) q^(k-1)` on `{1, 2, ...}`.
    GeometricMin1 { q: f64 },
    /// `P(I > i) = c (i + 1)^(-alpha)` for every `i >= 0`.
    PolynomialTail { alpha: f64, c: f64 },
    /// Explicit pmf over `{0, ..., K}`.
    Finite { pmf: Vec<f64> },
}

impl RadiusLaw {
    pub fn constant(c: u64) -> Self {
        RadiusLaw::Constant { c }
    }

    pub fn geometric(q: f64) -> Result<Self> {
        let law = RadiusLaw::Geometric { q };
        law.validate()?;
        Ok(law)
    }

    pub fn geometric_min1(q: f64) -> Result<Self> {
        let law = RadiusLaw::GeometricMin1 { q };
        law.validate()?;
        Ok(law)
    }

    pub fn polynomial_tail(alpha: f64, c: f64) -> Result<Self> {
        let law = RadiusLaw::PolynomialTail { alpha, c };
        law.validate()?;
        Ok(law)
    }

    pub fn finite(pmf: Vec<f64>) -> Result<Self> {
        let law = RadiusLaw::Finite { pmf };
        law.validate()?;
        Ok(law)
    }

    /// Checks parameter ranges; returns every problem found.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let prob = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                out.push(format!("{name} = {v} is not a probability"));
            }
        };
        match self {
            RadiusLaw::Constant { c } => {
                if *c > RADIUS_CAP {
                    out.push(format!("constant radius {c} exceeds cap {RADIUS_CAP}"));
                }
            }
            RadiusLaw::Geometric { q } | RadiusLaw::GeometricMin1 { q } => {
                prob("q", *q, &mut out);
                if *q >= 1.0 {
                    out.push("q must be < 1".into());
                }
            }
            RadiusLaw::PolynomialTail { alpha, c } => {
                if *alpha <= 0.0 || !alpha.is_finite() {
                    out.push(format!("alpha = {alpha} must be positive"));
                }
                prob("c", *c, &mut out);
            }
            RadiusLaw::Finite { pmf } => {
                if pmf.is_empty() {
                    out.push("pmf is empty".into());
                }
                for (k, p) in pmf.iter().enumerate() {
                    if !(0.0..=1.0).contains(p) || p.is_nan() {
                        out.push(format!("pmf[{k}] = {p} is not a probability"));
                    }
                }
                let mass: f64 = pmf.iter().sum();
                if !pmf.is_empty() && (mass - 1.0).abs() > PMF_MASS_TOL {
                    out.push(format!("pmf mass {}", round_for_display(mass)));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLaw(p.join("; ")))
        }
    }

    /// `P(I <= i)`.
    pub fn cdf(&self, i: i64) -> f64 {
        if i < 0 {
            return 0.0;
        }
        match self {
            RadiusLaw::Finite { pmf } => {
                let top = (i as usize).min(pmf.len().saturating_sub(1));
                if i as usize >= pmf.len() {
                    return 1.0;
                }
                pmf[..=top].iter().sum()
            }
            _ => 1.0 - self.tail(i),
        }
    }

    /// `P(I > i)`.
    pub fn tail(&self, i: i64) -> f64 {
        if i < 0 {
            return 1.0;
        }
        match self {
            RadiusLaw::Constant { c } => {
                if (i as u64) < *c {
                    1.0
                } else {
                    0.0
                }
            }
            RadiusLaw::Geometric { q } => q.powf(i as f64 + 1.0),
            RadiusLaw::GeometricMin1 { q } => q.powf(i as f64),
            RadiusLaw::PolynomialTail { alpha, c } => c * (i as f64 + 1.0).powf(-alpha),
            RadiusLaw::Finite { pmf } => {
                let from = i as usize + 1;
                if from >= pmf.len() {
                    0.0
                } else {
                    pmf[from..].iter().sum()
                }
            }
        }
    }

    /// `P(I = k)`.
    pub fn pmf(&self, k: u64) -> f64 {
        match self {
            RadiusLaw::Finite { pmf } => pmf.get(k as usize).copied().unwrap_or(0.0),
            RadiusLaw::Constant { c } => {
                if k == *c {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let k = k as i64;
                self.tail(k - 1) - self.tail(k)
            }
        }
    }

    /// `p1 = P(I = 0)`, the mass that lets a vertex fail to spread.
    pub fn p1(&self) -> f64 {
        self.cdf(0)
    }

    /// Largest value in the support, when finite.
    pub fn support_bound(&self) -> Option<u64> {
        match self {
            RadiusLaw::Constant { c } => Some(*c),
            RadiusLaw::Finite { pmf } => Some(
                pmf.iter()
                    .rposition(|&p| p > 0.0)
                    .map(|k| k as u64)
                    .unwrap_or(0),
            ),
            _ => None,
        }
    }

    /// Support points with positive mass.
    pub fn support(&self) -> Option<Vec<u64>> {
        match self {
            RadiusLaw::Constant { c } => Some(vec![*c]),
            RadiusLaw::Finite { pmf } => Some(
                pmf.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(k, _)| k as u64)
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Supremum of the orders `m` with `E I^m < infinity`.
    pub fn moment_order(&self) -> f64 {
        match self {
            RadiusLaw::PolynomialTail { alpha, .. } => *alpha,
            _ => f64::INFINITY,
        }
    }

    /// True when `P(I > n)` decays at least exponentially.
    pub fn has_exponential_tail(&self) -> bool {
        !matches!(self, RadiusLaw::PolynomialTail { .. })
    }

    /// Upper bound on `sum_{i >= j} P(I > i)`; infinite when the series diverges.
    pub fn tail_sum_from(&self, j: u64) -> f64 {
        match self {
            RadiusLaw::Constant { c } => c.saturating_sub(j) as f64,
            RadiusLaw::Geometric { q } => q.powf(j as f64 + 1.0) / (1.0 - q),
            RadiusLaw::GeometricMin1 { q } => q.powf(j as f64) / (1.0 - q),
            RadiusLaw::PolynomialTail { alpha, c } => {
                if *alpha <= 1.0 {
                    if *c == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    let x = j as f64 + 1.0;
                    c * x.powf(-alpha) + c * x.powf(1.0 - alpha) / (alpha - 1.0)
                }
            }
            RadiusLaw::Finite { pmf } => {
                let mut s = 0.0;
                for i in j as usize..pmf.len() {
                    s += self.tail(i as i64);
                }
                s
            }
        }
    }

    /// Inverse CDF: the smallest `k` with `u < P(I <= k)`, for `u` in `[0, 1)`.
    ///
    /// Monotone in `u`, so laws ordered pointwise by their tails produce
    /// ordered radii from a shared uniform.
    pub fn quantile(&self, u: f64) -> u64 {
        // w = 1 - u is exact on the 53-bit grid; find the smallest k with tail(k) < w.
        let w = 1.0 - u;
        match self {
            RadiusLaw::Constant { c } => *c,
            RadiusLaw::Finite { pmf } => {
                let mut above: f64 = pmf.iter().skip(1).sum();
                for k in 0..pmf.len() {
                    if above < w {
                        return k as u64;
                    }
                    if k + 1 < pmf.len() {
                        above -= pmf[k + 1];
                    }
                }
                self.support_bound().unwrap_or(0)
            }
            RadiusLaw::Geometric { q } => {
                if *q <= 0.0 {
                    return 0;
                }
                let guess = w.ln() / q.ln() - 1.0;
                self.settle_quantile(guess, w)
            }
            RadiusLaw::GeometricMin1 { q } => {
                if *q <= 0.0 {
                    return 1;
                }
                let guess = w.ln() / q.ln();
                self.settle_quantile(guess, w).max(1)
            }
            RadiusLaw::PolynomialTail { alpha, c } => {
                if *c <= 0.0 {
                    return 0;
                }
                let guess = (c / w).powf(1.0 / alpha) - 1.0;
                self.settle_quantile(guess, w)
            }
        }
    }

    fn settle_quantile(&self, guess: f64, w: f64) -> u64 {
        let mut k = if guess.is_nan() || guess <= 0.0 {
            0
        } else if guess >= RADIUS_CAP as f64 {
            return RADIUS_CAP;
        } else {
            guess.floor() as u64
        };
        while k > 0 && self.tail(k as i64 - 1) < w {
            k -= 1;
        }
        while self.tail(k as i64) >= w {
            k += 1;
            if k >= RADIUS_CAP {
                return RADIUS_CAP;
            }
        }
        k
    }

    /// Draws one radius from one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            RadiusLaw::Constant { c } => Some(*c as f64),
            RadiusLaw::Geometric { q } => Some(q / (1.0 - q)),
            RadiusLaw::GeometricMin1 { q } => Some(1.0 / (1.0 - q)),
            RadiusLaw::PolynomialTail { alpha, c } => {
                (*alpha > 1.0).then(|| c * zeta(*alpha))
            }
            RadiusLaw::Finite { pmf } => {
                Some(pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum())
            }
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match self {
            RadiusLaw::Constant { .. } => Some(0.0),
            RadiusLaw::Geometric { q } | RadiusLaw::GeometricMin1 { q } => {
                Some(q / ((1.0 - q) * (1.0 - q)))
            }
            RadiusLaw::PolynomialTail { alpha, c } => {
                if *alpha <= 2.0 {
                    return None;
                }
                // E I^2 = sum_{i>=0} (2i + 1) P(I > i)
                let second = c * (2.0 * zeta(alpha - 1.0) - zeta(*alpha));
                let m = c * zeta(*alpha);
                Some(second - m * m)
            }
            RadiusLaw::Finite { pmf } => {
                let m: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
                let s: f64 = pmf
                    .iter()
                    .enumerate()
                    .map(|(k, p)| (k as f64 - m).powi(2) * p)
                    .sum();
                Some(s)
            }
        }
    }

    /// `a_n = prod_{i=0}^{n} P(I <= i)`.
    pub fn a_n(&self, n: u64) -> f64 {
        let mut a = 1.0;
        for i in 0..=n {
            a *= self.cdf(i as i64);
            if a == 0.0 {
                break;
            }
        }
        a
    }

    /// `ln a_n`, accurate where `a_n` itself underflows.
    pub fn log_a_n(&self, n: u64) -> f64 {
        let mut s = 0.0;
        for i in 0..=n {
            s += self.log_cdf(i as i64);
            if s == f64::NEG_INFINITY {
                break;
            }
        }
        s
    }

    fn log_cdf(&self, i: i64) -> f64 {
        let t = self.tail(i);
        if t < 0.5 {
            (-t).ln_1p()
        } else {
            self.cdf(i).ln()
        }
    }

    /// Short label such as `geometric(q=0.5)`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RadiusLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusLaw::Constant { c } => write!(f, "constant(c={c})"),
            RadiusLaw::Geometric { q } => write!(f, "geometric(q={q})"),
            RadiusLaw::GeometricMin1 { q } => write!(f, "geometric_min1(q={q})"),
            RadiusLaw::PolynomialTail { alpha, c } => {
                write!(f, "polynomial_tail(alpha={alpha}, c={c})")
            }
            RadiusLaw::Finite { pmf } => {
                let parts: Vec<String> = pmf.iter().map(|p| format!("{p}")).collect();
                write!(f, "finite([{}])", parts.join(","))
            }
        }
    }
}

fn round_for_display(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Riemann zeta for `s > 1` by Euler-Maclaurin with a fixed cut.
fn zeta(s: f64) -> f64 {
    const N: usize = 64;
    let mut sum = 0.0;
    for k in 1..N {
        sum += (k as f64).powf(-s);
    }
    let n = N as f64;
    sum += n.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * n.powf(-s);
    sum += s * n.powf(-s - 1.0) / 12.0;
    sum -= s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    sum
}

// ---------------------------------------------------------------------------
// Percolation criterion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoPercolation,
    PercolatesWithPositiveProb,
    Inconclusive,
}

/// Which certificate produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionReason {
    /// `p1 = 0`, so every `a_n` vanishes.
    ProductVanishes,
    /// `p1 > 0` and `sum P(I > i) < infinity`: the product converges to a
    /// positive limit, so `sum a_n` diverges.
    ProductConverges,
    /// `a_n >= tol` over `[nmax/2, nmax]`.
    BoundedBelow,
    /// The tail `sum_{n > nmax} a_n` is certified below `tol`.
    TailCertified,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub verdict: Verdict,
    pub reason: CriterionReason,
    pub nmax: u64,
    pub log_a_nmax: Option<f64>,
    /// `ln` of the certified bound on `sum_{n > nmax} a_n`, when available.
    pub log_tail_bound: Option<f64>,
}

pub const DEFAULT_NMAX: i64 = 1_000_000;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Decides whether `sum_n a_n` is finite (positive percolation probability)
/// or infinite (no percolation).
pub fn percolation_criterion(law: &RadiusLaw, nmax: i64, tol: f64) -> Result<CriterionOutcome> {
    if nmax <= 0 {
        return Err(Error::InvalidArgument(format!("nmax = {nmax} must be positive")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    law.validate()?;
    let nmax_u = nmax as u64;
    let mut out = CriterionOutcome {
        verdict: Verdict::Inconclusive,
        reason: CriterionReason::Undecided,
        nmax: nmax_u,
        log_a_nmax: None,
        log_tail_bound: None,
    };

    if law.p1() == 0.0 {
        out.verdict = Verdict::PercolatesWithPositiveProb;
        out.reason = CriterionReason::ProductVanishes;
        out.log_a_nmax = Some(f64::NEG_INFINITY);
        out.log_tail_bound = Some(f64::NEG_INFINITY);
        return Ok(out);
    }

    // prod (1 - q_i) with q_i = P(I > i) < 1 converges to a nonzero limit iff sum q_i < infinity.
    if law.tail_sum_from(0).is_finite() {
        out.verdict = Verdict::NoPercolation;
        out.reason = CriterionReason::ProductConverges;
        return Ok(out);
    }

    let log_a = law.log_a_n(nmax_u);
    out.log_a_nmax = Some(log_a);
    let log_tol = tol.ln();
    // a_n is nonincreasing, so the minimum over [nmax/2, nmax] sits at nmax.
    if log_a >= log_tol {
        out.verdict = Verdict::NoPercolation;
        out.reason = CriterionReason::BoundedBelow;
        return Ok(out);
    }

    if let Some(lb) = log_tail_bound(law, nmax_u, log_a) {
        out.log_tail_bound = Some(lb);
        if lb < log_tol {
            out.verdict = Verdict::PercolatesWithPositiveProb;
            out.reason = CriterionReason::TailCertified;
        }
    }
    Ok(out)
}

/// Certified `ln sum_{n > N} a_n` from the law's tail, for laws whose tail sum
/// diverges (polynomial tails with `alpha <= 1`).
///
/// Uses `a_n <= a_N exp(-sum_{i=N+1}^{n} P(I > i))` and an integral
/// comparison for the decreasing summands.
fn log_tail_bound(law: &RadiusLaw, n: u64, log_a_n: f64) -> Option<f64> {
    let RadiusLaw::PolynomialTail { alpha, c } = law else {
        return None;
    };
    let (alpha, c) = (*alpha, *c);
    let x0 = n as f64 + 2.0;
    if alpha < 1.0 {
        // sum_{i=N+1}^{n} c (i+1)^-alpha >= (c/beta) ((n+2)^beta - (N+2)^beta)
        let beta = 1.0 - alpha;
        let k = c / beta;
        let y0 = x0.powf(beta);
        let s = 1.0 / beta - 1.0;
        // int_{y0}^inf y^s e^{-k(y - y0)} dy <= y0^s / (k - s / y0)
        let rate = k - s / y0;
        if rate <= 0.0 {
            return None;
        }
        Some(log_a_n - beta.ln() + s * y0.ln() - rate.ln())
    } else if (alpha - 1.0).abs() < f64::EPSILON {
        (c > 1.0).then(|| log_a_n + x0.ln() - (c - 1.0).ln())
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Overshoot
// ---------------------------------------------------------------------------

/// A truncated evaluation request for the overshoot law
/// `O = sup { i + I_i : i <= 0 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct OvershootQuery {
    pub law: RadiusLaw,
    pub truncation_depth: u64,
    /// Bound on `sum_{i > depth} P(I > i)`; zero when the support ends by `depth`.
    pub truncation_error_bound: f64,
}

impl OvershootQuery {
    pub fn new(law: RadiusLaw, truncation_depth: u64) -> Self {
        let truncation_error_bound = match law.support_bound() {
            Some(k) if truncation_depth >= k => 0.0,
            _ => law.tail_sum_from(truncation_depth + 1),
        };
        Self {
            law,
            truncation_depth,
            truncation_error_bound,
        }
    }

    /// Picks the smallest depth whose truncation error is below `eps`.
    pub fn with_tolerance(law: RadiusLaw, eps: f64) -> Result<Self> {
        if let Some(k) = law.support_bound() {
            return Ok(Self::new(law, k));
        }
        if !law.tail_sum_from(0).is_finite() {
            return Err(Error::MomentTooLow {
                order: law.moment_order(),
                needed: 1.0,
            });
        }
        let mut depth = 1u64;
        while law.tail_sum_from(depth + 1) >= eps {
            depth *= 2;
            if depth > 1 << 40 {
                return Err(Error::Inconclusive(format!(
                    "no truncation depth reaches error {eps}"
                )));
            }
        }
        let (mut lo, mut hi) = (depth / 2, depth);
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if law.tail_sum_from(mid + 1) < eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Self::new(law, hi))
    }
}

/// A probability with a certified absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedProb {
    pub value: f64,
    pub error_bound: f64,
}

/// `P(O <= m) = prod_{i >= 0} P(I <= m + i)`.
pub fn overshoot_cdf_exact(query: &OvershootQuery, m: u64) -> Result<CertifiedProb> {
    let law = &query.law;
    if let Some(k) = law.support_bound() {
        let mut p = 1.0;
        let mut j = m;
        while j < k {
            p *= law.cdf(j as i64);
            j += 1;
        }
        return Ok(CertifiedProb {
            value: p,
            error_bound: 0.0,
        });
    }
    if law.cdf(m as i64) == 0.0 {
        return Ok(CertifiedProb {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    if law.moment_order() <= 1.0 {
        return Err(Error::Inconclusive(format!(
            "overshoot of {law} may vanish; product not certifiable"
        )));
    }
    let mut p = 1.0;
    for i in 0..=query.truncation_depth {
        p *= law.cdf((m + i) as i64);
    }
    let rest = law.tail_sum_from(m + query.truncation_depth + 1).min(1.0);
    Ok(CertifiedProb {
        value: p,
        error_bound: p * rest,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DepthPolicy {
    /// Walk to the support bound; exact.
    ExactBounded,
    /// Stop once the chance that deeper radii change the result is below `eps`.
    TailBudget(f64),
}

/// Hard cap on the number of radii inspected by tail-budget walks.
pub const MAX_WALK_DEPTH: u64 = 1 << 26;

/// Samples `O = max(0, max_i (I_{-i} - i))` by drawing `I_0, I_{-1}, ...`
/// lazily. The flag is `false` when the tail budget, not the support, ended
/// the walk.
pub fn overshoot_sample<R: Rng + ?Sized>(
    law: &RadiusLaw,
    rng: &mut R,
    policy: DepthPolicy,
) -> Result<(u64, bool)> {
    let bound = law.support_bound();
    if let DepthPolicy::ExactBounded = policy {
        if bound.is_none() {
            return Err(Error::InvalidArgument(format!(
                "exact overshoot sampling needs bounded support; {law} is unbounded"
            )));
        }
    }
    if bound.is_none() && !law.tail_sum_from(0).is_finite() {
        return Err(Error::MomentTooLow {
            order: law.moment_order(),
            needed: 1.0,
        });
    }
    let mut best = 0u64;
    let mut i = 0u64;
    loop {
        if let Some(k) = bound {
            if i >= k {
                return Ok((best, true));
            }
        }
        if let DepthPolicy::TailBudget(eps) = policy {
            if law.tail_sum_from(i + best) < eps {
                return Ok((best, false));
            }
        }
        if i >= MAX_WALK_DEPTH {
            return Ok((best, false));
        }
        let r = law.sample(rng);
        if r > i {
            best = best.max(r - i);
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_zero_half() -> RadiusLaw {
        RadiusLaw::finite(vec![0.5, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn constant_samples_are_degenerate() {
        let law = RadiusLaw::constant(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(law.sample(&mut rng), 3);
        }
        assert_eq!(law.quantile(0.0), 3);
    }

    #[test]
    fn finite_support_sample_mean() {
        let law = half_zero_half();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| law.sample(&mut rng)).sum();
        let mean = sum as f64 / n as f64;
        // sd of one draw is 1, so 3 sd of the mean is 3e-3
        assert!((mean - 1.0).abs() < 3e-3, "mean {mean}");
    }

    #[test]
    fn geometric_zero_mass() {
        let law = RadiusLaw::geometric(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| law.sample(&mut rng) == 0).count();
        let p = zeros as f64 / n as f64;
        let sd = (0.25f64 / n as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * sd, "p {p}");
    }

    #[test]
    fn quantile_matches_pmf_on_a_grid() {
        let laws = vec![
            RadiusLaw::geometric(0.3).unwrap(),
            RadiusLaw::geometric_min1(0.6).unwrap(),
            RadiusLaw::polynomial_tail(2.5, 0.4).unwrap(),
            RadiusLaw::finite(vec![0.2, 0.0, 0.3, 0.5]).unwrap(),
        ];
        let n = 200_000;
        for law in laws {
            let mut counts = [0usize; 6];
            for j in 0..n {
                let u = (j as f64 + 0.5) / n as f64;
                let k = law.quantile(u) as usize;
                if k < counts.len() {
                    counts[k] += 1;
                }
            }
            for (k, c) in counts.iter().enumerate() {
                let got = *c as f64 / n as f64;
                assert!(
                    (got - law.pmf(k as u64)).abs() < 2e-5,
                    "{law} k={k}: {got} vs {}",
                    law.pmf(k as u64)
                );
            }
        }
    }

    #[test]
    fn geometric_min1_never_zero() {
        let law = RadiusLaw::geometric_min1(0.5).unwrap();
        assert_eq!(law.quantile(0.0), 1);
        assert_eq!(law.p1(), 0.0);
        assert_eq!(law.mean(), Some(2.0));
    }

    #[test]
    fn p1_is_cdf_at_zero() {
        for law in [
            half_zero_half(),
            RadiusLaw::geometric(0.5).unwrap(),
            RadiusLaw::constant(0),
            RadiusLaw::constant(2),
            RadiusLaw::polynomial_tail(0.5, 0.5).unwrap(),
        ] {
            assert_eq!(law.p1(), law.cdf(0));
        }
        assert_eq!(half_zero_half().p1(), 0.5);
    }

    #[test]
    fn moment_orders() {
        assert_eq!(RadiusLaw::constant(2).moment_order(), f64::INFINITY);
        assert_eq!(RadiusLaw::geometric(0.5).unwrap().moment_order(), f64::INFINITY);
        assert_eq!(
            RadiusLaw::polynomial_tail(2.0, 0.5).unwrap().moment_order(),
            2.0
        );
    }

    #[test]
    fn rejects_bad_laws() {
        let err = RadiusLaw::finite(vec![0.5, 0.6]).unwrap_err().to_string();
        assert!(err.contains("pmf mass 1.1"), "{err}");
        assert!(RadiusLaw::geometric(1.2).is_err());
        assert!(RadiusLaw::polynomial_tail(0.0, 0.5).is_err());
        assert!(RadiusLaw::polynomial_tail(-1.0, 0.5).is_err());
        assert!(RadiusLaw::finite(vec![]).is_err());
    }

    #[test]
    fn a_n_examples() {
        assert_eq!(RadiusLaw::constant(0).a_n(5), 1.0);
        assert_eq!(RadiusLaw::constant(1).a_n(5), 0.0);
        let g = RadiusLaw::geometric(0.5).unwrap();
        assert!((g.a_n(2) - 0.328125).abs() < 1e-15);
    }

    #[test]
    fn a_n_recursion_holds() {
        for law in [
            RadiusLaw::geometric(0.7).unwrap(),
            half_zero_half(),
            RadiusLaw::polynomial_tail(0.5, 0.5).unwrap(),
        ] {
            for n in 1..40 {
                assert_eq!(law.a_n(n), law.a_n(n - 1) * law.cdf(n as i64));
            }
        }
    }

    #[test]
    fn criterion_examples() {
        let v = |law: RadiusLaw| {
            percolation_criterion(&law, DEFAULT_NMAX, DEFAULT_TOL)
                .unwrap()
                .verdict
        };
        assert_eq!(v(RadiusLaw::constant(1)), Verdict::PercolatesWithPositiveProb);
        assert_eq!(v(RadiusLaw::constant(0)), Verdict::NoPercolation);
        assert_eq!(v(RadiusLaw::geometric(0.5).unwrap()), Verdict::NoPercolation);
        assert_eq!(
            v(RadiusLaw::polynomial_tail(0.5, 0.5).unwrap()),
            Verdict::PercolatesWithPositiveProb
        );
        assert_eq!(
            v(RadiusLaw::polynomial_tail(2.0, 0.5).unwrap()),
            Verdict::NoPercolation
        );
        // a_n ~ n^{-1/2}: divergent and slowly decaying
        assert_eq!(
            v(RadiusLaw::polynomial_tail(1.0, 0.5).unwrap()),
            Verdict::NoPercolation
        );
    }

    #[test]
    fn criterion_can_be_inconclusive() {
        // a_n ~ exp(-9 n^0.1) is summable, but nmax = 1000 is far too short to certify it
        let law = RadiusLaw::polynomial_tail(0.9, 0.9).unwrap();
        let out = percolation_criterion(&law, 1000, 1e-3).unwrap();
        assert_eq!(out.verdict, Verdict::Inconclusive);
        assert!(out.log_tail_bound.unwrap() > 1e-3f64.ln());
    }

    #[test]
    fn criterion_rejects_nonpositive_nmax() {
        assert!(percolation_criterion(&RadiusLaw::constant(1), 0, 1e-8).is_err());
        assert!(percolation_criterion(&RadiusLaw::constant(1), -3, 1e-8).is_err());
    }

    #[test]
    fn overshoot_cdf_examples() {
        let q = OvershootQuery::new(RadiusLaw::constant(1), 10);
        assert_eq!(overshoot_cdf_exact(&q, 0).unwrap().value, 0.0);
        assert_eq!(overshoot_cdf_exact(&q, 1).unwrap().value, 1.0);

        let q = OvershootQuery::with_tolerance(RadiusLaw::geometric(0.5).unwrap(), 1e-15).unwrap();
        let p = overshoot_cdf_exact(&q, 0).unwrap();
        // prod_{k>=1} (1 - 2^-k), the q-Pochhammer symbol (1/2; 1/2)_inf
        assert!((p.value - 0.288_788_095_086_602_4).abs() < 1e-14, "{}", p.value);
        assert!(p.error_bound < 1e-15);

        let q = OvershootQuery::new(half_zero_half(), 5);
        let p = overshoot_cdf_exact(&q, 1).unwrap();
        assert_eq!(p.value, 0.5);
        assert_eq!(p.error_bound, 0.0);
    }

    #[test]
    fn overshoot_cdf_rejects_heavy_tails() {
        let law = RadiusLaw::polynomial_tail(0.8, 0.5).unwrap();
        let q = OvershootQuery::new(law, 100);
        assert!(matches!(overshoot_cdf_exact(&q, 0), Err(Error::Inconclusive(_))));
        // a zero factor is exact regardless of moments
        let law = RadiusLaw::PolynomialTail { alpha: 0.8, c: 1.0 };
        let q = OvershootQuery::new(law, 100);
        assert_eq!(overshoot_cdf_exact(&q, 0).unwrap().value, 0.0);
    }

    #[test]
    fn overshoot_cdf_is_monotone_and_reaches_one() {
        let q = OvershootQuery::with_tolerance(RadiusLaw::geometric(0.6).unwrap(), 1e-14).unwrap();
        let mut prev = 0.0;
        for m in 0..80 {
            let v = overshoot_cdf_exact(&q, m).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overshoot_sample_degenerate_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(
                overshoot_sample(&RadiusLaw::constant(2), &mut rng, DepthPolicy::ExactBounded).unwrap(),
                (2, true)
            );
            assert_eq!(
                overshoot_sample(&RadiusLaw::constant(0), &mut rng, DepthPolicy::TailBudget(1e-9)).unwrap(),
                (0, true)
            );
        }
    }

    #[test]
    fn overshoot_sample_geometric_zero_mass() {
        let law = RadiusLaw::geometric(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let mut zeros = 0;
        for _ in 0..n {
            let (o, _) = overshoot_sample(&law, &mut rng, DepthPolicy::TailBudget(1e-9)).unwrap();
            if o == 0 {
                zeros += 1;
            }
        }
        let p0 = 0.288_788_095_086_602_4;
        let p = zeros as f64 / n as f64;
        let sd = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((p - p0).abs() < 3.0 * sd, "p {p}");
    }

    #[test]
    fn exact_policy_needs_bounded_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let law = RadiusLaw::geometric(0.5).unwrap();
        assert!(overshoot_sample(&law, &mut rng, DepthPolicy::ExactBounded).is_err());
    }

    #[test]
    fn zeta_is_accurate() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
    }
}
