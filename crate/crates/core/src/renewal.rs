//! Regeneration structure of the right front in the basic model.
//!
//! After the σ step no vertex on the left can push the right front, and from
//! then on every step at which the front advances by exactly one vertex
//! starts an independent copy of the one-sided process. The increments
//! between such steps are i.i.d., which yields a ratio estimator for the
//! speed.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{self, BasicState, Sides, Status, Stop, Trajectory};
use crate::error::{Error, Result};
use crate::field::{RadiusField, StaticField, VertexRadii};
use crate::law::{DepthPolicy, OvershootQuery, RadiusLaw, MAX_WALK_DEPTH};
use crate::sites::Sites;
use crate::stats::{self, EstimateReport, KsResult};

/// Default tail budget when σ is searched for under an unbounded law.
pub const DEFAULT_SIGMA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sigma {
    pub step: u64,
    /// False when the search depth was limited by the tail budget.
    pub certified: bool,
}

/// `σ = inf{n ≥ 1 : i + I_i ≤ 0 for every i ≤ -n}` on an all-occupied line.
pub fn detect_sigma<V: VertexRadii + ?Sized>(
    field: &V,
    law: &RadiusLaw,
    policy: DepthPolicy,
) -> Result<Sigma> {
    detect_sigma_with_sites(field, &mut Sites::all_occupied(), law, policy)
}

/// As [`detect_sigma`], ignoring vertices that hold no individual.
pub fn detect_sigma_with_sites<V: VertexRadii + ?Sized>(
    field: &V,
    sites: &mut Sites,
    law: &RadiusLaw,
    policy: DepthPolicy,
) -> Result<Sigma> {
    let (depth, certified) = match (law.support_bound(), policy) {
        (Some(k), _) => (k, true),
        (None, DepthPolicy::ExactBounded) => {
            return Err(Error::InvalidArgument(format!(
                "exact σ detection needs bounded support; {law} is unbounded"
            )))
        }
        (None, DepthPolicy::TailBudget(eps)) => {
            if law.moment_order() <= 1.0 {
                return Err(Error::MomentTooLow {
                    order: law.moment_order(),
                    needed: 1.0,
                });
            }
            let q = OvershootQuery::with_tolerance(law.clone(), eps)?;
            let depth = q.truncation_depth.min(MAX_WALK_DEPTH);
            (depth, q.truncation_error_bound == 0.0)
        }
    };
    // A vertex at -d violates the condition exactly when its radius exceeds d.
    let mut deepest = 0u64;
    for d in 1..=depth {
        let v = -(d as i64);
        if field.radius_at(v) > d && sites.occupied(v) {
            deepest = d;
        }
    }
    Ok(Sigma {
        step: deepest + 1,
        certified,
    })
}

/// Furthest vertex reached by the left active interval, if any.
///
/// Once `n > σ` on a run with `P(I = 0) = 0`, this never exceeds 0.
pub fn left_reach<F: RadiusField + ?Sized>(state: &BasicState, field: &mut F) -> Option<i64> {
    let a = state.active_left?;
    a.iter().map(|u| u + field.radius(u, state.n) as i64).max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalPoint {
    pub step: u64,
    pub r: i64,
}

/// `(Δτ, Δr)` between two consecutive renewal steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Increment {
    pub d_tau: u64,
    pub d_r: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalLedger {
    pub sigma: Sigma,
    /// `r_σ`, absent when the run ended before σ.
    pub r_sigma: Option<i64>,
    /// `τ_1, τ_2, ...` with the front position at each.
    pub taus: Vec<RenewalPoint>,
    /// The run went extinct or ended before σ, so later renewals are missing.
    pub truncated: bool,
}

impl RenewalLedger {
    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// The leg from σ to `τ_1`, whose law differs from the rest.
    pub fn first_leg(&self) -> Option<Increment> {
        let first = self.taus.first()?;
        let r_sigma = self.r_sigma?;
        Some(Increment {
            d_tau: first.step - self.sigma.step,
            d_r: (first.r - r_sigma) as u64,
        })
    }

    /// Increments `τ_{j+1} - τ_j` for `j ≥ 1`.
    pub fn increments(&self) -> Vec<Increment> {
        self.taus
            .windows(2)
            .map(|w| Increment {
                d_tau: w[1].step - w[0].step,
                d_r: (w[1].r - w[0].r) as u64,
            })
            .collect()
    }

    /// CSV with columns `j,tau_j,r_tau_j,d_tau,d_r`; row 0 is σ.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "j,tau_j,r_tau_j,d_tau,d_r")?;
        let Some(r_sigma) = self.r_sigma else {
            return Ok(());
        };
        writeln!(w, "0,{},{},,", self.sigma.step, r_sigma)?;
        let mut prev = RenewalPoint {
            step: self.sigma.step,
            r: r_sigma,
        };
        for (j, p) in self.taus.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                j + 1,
                p.step,
                p.r,
                p.step - prev.step,
                p.r - prev.r
            )?;
            prev = *p;
        }
        Ok(())
    }
}

/// Scans a trajectory for `τ_j = inf{n > τ_{j-1} : r_n - r_{n-1} = 1}` with
/// `τ_0 = σ`.
pub fn detect_taus(traj: &Trajectory, sigma: Sigma) -> RenewalLedger {
    let extinct = matches!(traj.status, Status::Extinct { .. });
    let Some(r_sigma) = traj.r_at(sigma.step) else {
        return RenewalLedger {
            sigma,
            r_sigma: None,
            taus: Vec::new(),
            truncated: true,
        };
    };
    let taus = traj
        .records
        .windows(2)
        .skip(sigma.step as usize)
        .filter(|w| w[1].r - w[0].r == 1)
        .map(|w| RenewalPoint {
            step: w[1].n,
            r: w[1].r,
        })
        .collect();
    RenewalLedger {
        sigma,
        r_sigma: Some(r_sigma),
        taus,
        truncated: extinct,
    }
}

/// Runs `steps` steps of the basic model on a static field and extracts its
/// renewal ledger.
pub fn ledger_for_run(
    law: &RadiusLaw,
    seed: u64,
    steps: u64,
    policy: DepthPolicy,
) -> Result<(Trajectory, RenewalLedger)> {
    let mut field = StaticField::new(law.clone(), seed);
    let sigma = detect_sigma(&field, law, policy)?;
    let traj = engine::run(&mut field, &mut Sites::all_occupied(), Stop::Horizon(steps))?;
    let ledger = detect_taus(&traj, sigma);
    Ok((traj, ledger))
}

/// `μ̂ = mean(Δr) / mean(Δτ)` with a delta-method interval.
pub fn speed_from_increments(increments: &[Increment], level: f64) -> Result<EstimateReport> {
    if increments.len() < 2 {
        return Err(Error::NoRenewalsFound);
    }
    let dt: Vec<f64> = increments.iter().map(|i| i.d_tau as f64).collect();
    let dr: Vec<f64> = increments.iter().map(|i| i.d_r as f64).collect();
    let (mt, mr) = (stats::mean(&dt), stats::mean(&dr));
    let ratio = mr / mt;
    let j = increments.len() as f64;
    let var = (stats::variance(&dr) - 2.0 * ratio * stats::covariance(&dr, &dt)
        + ratio * ratio * stats::variance(&dt))
        / (mt * mt * j);
    let half = stats::z_for_level(level) * var.max(0.0).sqrt();
    Ok(EstimateReport::new(
        "mu",
        ratio,
        (ratio - half, ratio + half),
        level,
        increments.len() as u64,
        "renewal-ratio",
    ))
}

/// Speed estimate from a ledger, skipping the σ to `τ_1` leg.
pub fn speed_from_renewals(ledger: &RenewalLedger, level: f64) -> Result<EstimateReport> {
    let mut report = speed_from_increments(&ledger.increments(), level)?;
    report.uncertified = !ledger.sigma.certified;
    Ok(report)
}

/// Pools the increments of several ledgers into one speed estimate.
pub fn speed_from_ledgers(ledgers: &[RenewalLedger], level: f64) -> Result<EstimateReport> {
    let pooled: Vec<Increment> = ledgers.iter().flat_map(|l| l.increments()).collect();
    let mut report = speed_from_increments(&pooled, level)?;
    report.uncertified = ledgers.iter().any(|l| !l.sigma.certified);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    pub rho1: f64,
    pub rho2: f64,
    /// Permutation p-value for lag-1 dependence.
    pub lag1_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidDiagnostics {
    pub count: usize,
    pub mu_hat: f64,
    pub d_tau: SeriesDiagnostics,
    pub d_r: SeriesDiagnostics,
    /// `Δr - μ̂ Δτ`.
    pub residual: SeriesDiagnostics,
    pub halves_d_tau: KsResult,
    pub halves_d_r: KsResult,
}

pub const PERMUTATIONS: usize = 999;

/// Autocorrelation, permutation and first-half versus second-half checks.
pub fn iid_diagnostics(increments: &[Increment], seed: u64) -> Result<IidDiagnostics> {
    if increments.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "diagnostics need at least 100 increments, got {}",
            increments.len()
        )));
    }
    let dt: Vec<f64> = increments.iter().map(|i| i.d_tau as f64).collect();
    let dr: Vec<f64> = increments.iter().map(|i| i.d_r as f64).collect();
    let mu_hat = stats::mean(&dr) / stats::mean(&dt);
    let resid: Vec<f64> = dr.iter().zip(&dt).map(|(r, t)| r - mu_hat * t).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = |xs: &[f64]| SeriesDiagnostics {
        rho1: stats::autocorrelation(xs, 1),
        rho2: stats::autocorrelation(xs, 2),
        lag1_p_value: stats::permutation_pvalue_lag1(xs, PERMUTATIONS, &mut rng),
    };
    let d_tau = series(&dt);
    let d_r = series(&dr);
    let residual = series(&resid);
    let mid = increments.len() / 2;
    Ok(IidDiagnostics {
        count: increments.len(),
        mu_hat,
        d_tau,
        d_r,
        residual,
        halves_d_tau: stats::ks_two_sample(&dt[..mid], &dt[mid..]),
        halves_d_r: stats::ks_two_sample(&dr[..mid], &dr[mid..]),
    })
}

/// One draw of the one-sided renewal time and displacement: run the process
/// on `{0, 1, ...}` until the first step `n ≥ 1` at which exactly one vertex
/// is active. `None` if it dies first or `cap` steps pass.
pub fn one_sided_renewal_sample<F: RadiusField + ?Sized>(
    field: &mut F,
    sites: &mut Sites,
    cap: u64,
) -> Option<Increment> {
    let mut state = BasicState::init_one_sided();
    while state.n < cap {
        state = engine::step(&state, Sides::RightOnly, field, sites);
        if state.is_extinct() {
            return None;
        }
        if state.active_count() == 1 {
            return Some(Increment {
                d_tau: state.n,
                d_r: state.r as u64,
            });
        }
    }
    None
}
