//! Monte Carlo estimators built on the engines.
//!
//! Replicate `i` of an experiment with master seed `s` always draws from
//! seeds derived from `(s, i)`, and results are gathered in replicate order,
//! so every estimate is independent of the worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, RunSummary, Status, Stop};
use crate::error::{Error, Result};
use crate::field::StaticField;
use crate::keyed::{derive_seed, KeyedStream, Purpose};
use crate::law::{overshoot_cdf_exact, DepthPolicy, OvershootQuery, RadiusLaw};
use crate::react::{self, Window};
use crate::renewal::{self, RenewalLedger};
use crate::sites::{SiteEnvironment, Sites};
use crate::stats::{self, EstimateReport, LinearFit, SurvivalPoint};

/// Replicates used by the LLN speed estimators unless configured otherwise.
pub const DEFAULT_SPEED_REPLICATES: usize = 32;

/// Fraction of censored runs above which cluster statistics are flagged.
pub const CENSOR_WARN_FRACTION: f64 = 0.01;

/// Field and site environment for replicate `index`.
pub fn replicate_world(law: &RadiusLaw, env: &SiteEnvironment, master: u64, index: u64) -> (StaticField, Sites) {
    (
        StaticField::new(law.clone(), derive_seed(master, index, Purpose::Field)),
        Sites::new(env.clone(), derive_seed(master, index, Purpose::Sites)),
    )
}

/// Keyed stream for reactivation replicate `index`.
pub fn replicate_stream(master: u64, index: u64) -> KeyedStream {
    KeyedStream::new(derive_seed(master, index, Purpose::Reactivation))
}

/// Runs `replicates` independent basic-model runs in parallel.
pub fn simulate_summaries(
    law: &RadiusLaw,
    env: &SiteEnvironment,
    master: u64,
    replicates: u64,
    stop: Stop,
) -> Result<Vec<RunSummary>> {
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let (mut field, mut sites) = replicate_world(law, env, master, i);
            engine::run_summary(&mut field, &mut sites, stop)
        })
        .collect()
}

fn extinction_times(runs: &[RunSummary]) -> (Vec<u64>, u64) {
    let mut censored = 0;
    let taus = runs
        .iter()
        .map(|s| match s.status {
            Status::Extinct { tau } => tau,
            Status::Censored { .. } => {
                censored += 1;
                u64::MAX
            }
        })
        .collect();
    (taus, censored)
}

fn subcritical_warning(law: &RadiusLaw) -> Option<String> {
    (law.p1() == 0.0).then(|| format!("{law} has P(I = 0) = 0; the process survives surely"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalReport {
    pub law: String,
    pub replicates: u64,
    pub censored: u64,
    pub table: Vec<SurvivalPoint>,
    pub fit: Option<LinearFit>,
    /// Rows with no survivors, left out of the fit.
    pub dropped: Vec<u64>,
    pub warning: Option<String>,
}

/// `P̂(τ > n)` for each `n` with Wilson intervals, and a weighted fit of the
/// log-survival against `n`. Censored runs count as survivors.
#[allow(clippy::too_many_arguments)]
pub fn survival_tail(
    law: &RadiusLaw,
    env: &SiteEnvironment,
    ns: &[u64],
    replicates: u64,
    master: u64,
    level: f64,
    cap: u64,
) -> Result<SurvivalReport> {
    let runs = simulate_summaries(law, env, master, replicates, Stop::UntilExtinct(cap))?;
    let (taus, censored) = extinction_times(&runs);
    let table = stats::survival_table(&taus, ns, level);
    let dropped = table.iter().filter(|r| r.survivors == 0).map(|r| r.n).collect();
    let fit = stats::log_survival_fit(&table).ok();
    Ok(SurvivalReport {
        law: law.label(),
        replicates,
        censored,
        table,
        fit,
        dropped,
        warning: subcritical_warning(law),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardRow {
    pub n: u64,
    pub at_risk: u64,
    pub events: u64,
    pub hazard: f64,
    pub sigma: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardReport {
    pub law: String,
    /// `P(O = 0)` and its certified error.
    pub p_overshoot_zero: f64,
    pub p_overshoot_zero_error: f64,
    /// `P(O = 0)²`.
    pub bound: f64,
    pub min_samples: u64,
    pub rows: Vec<HazardRow>,
    /// Steps skipped for having fewer than `min_samples` runs at risk.
    pub skipped: Vec<u64>,
    pub all_pass: bool,
}

/// `ĥ(n) = P̂(τ = n + 1 | τ > n)` for `n = 0..=nmax`, checked against the
/// lower bound `P(O = 0)²` with a 3σ allowance.
pub fn hazard_check(
    law: &RadiusLaw,
    env: &SiteEnvironment,
    nmax: u64,
    replicates: u64,
    master: u64,
    min_samples: u64,
) -> Result<HazardReport> {
    let query = OvershootQuery::with_tolerance(law.clone(), 1e-15)?;
    let p0 = overshoot_cdf_exact(&query, 0)?;
    let bound = p0.value * p0.value;
    let runs = simulate_summaries(law, env, master, replicates, Stop::UntilExtinct(nmax + 2))?;
    let (taus, _) = extinction_times(&runs);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &t in &taus {
        *counts.entry(t).or_default() += 1;
    }
    let mut at_risk = replicates;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for n in 0..=nmax {
        // at_risk = #{τ > n}
        at_risk -= counts.get(&n).copied().unwrap_or(0);
        if at_risk < min_samples {
            skipped.push(n);
            continue;
        }
        let events = counts.get(&(n + 1)).copied().unwrap_or(0);
        let h = events as f64 / at_risk as f64;
        let sigma = (h * (1.0 - h) / at_risk as f64).sqrt();
        rows.push(HazardRow {
            n,
            at_risk,
            events,
            hazard: h,
            sigma,
            passes: h >= bound - 3.0 * sigma,
        });
    }
    let all_pass = rows.iter().all(|r| r.passes);
    Ok(HazardReport {
        law: law.label(),
        p_overshoot_zero: p0.value,
        p_overshoot_zero_error: p0.error_bound,
        bound,
        min_samples,
        rows,
        skipped,
        all_pass,
    })
}

/// `γ̂` = fraction of runs still active at `horizon`. Biased upward, since
/// a run alive at the horizon may still die later.
pub fn percolation_prob(
    law: &RadiusLaw,
    env: &SiteEnvironment,
    horizon: u64,
    replicates: u64,
    master: u64,
    level: f64,
) -> Result<EstimateReport> {
    let runs = simulate_summaries(law, env, master, replicates, Stop::Horizon(horizon))?;
    let alive = runs.iter().filter(|s| s.tau().is_none()).count() as u64;
    let report = stats::proportion("gamma", alive, replicates, level);
    Ok(EstimateReport {
        method: format!("wilson; survivors at horizon {horizon}, biased upward"),
        ..report
    }
    .with_censored(alive))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub law: String,
    pub replicates: u64,
    pub censored: u64,
    pub mean: EstimateReport,
    pub second_moment: EstimateReport,
    /// Counts of `M = m` among extinct runs.
    pub distribution: BTreeMap<u64, u64>,
    pub tail: Vec<SurvivalPoint>,
    pub tail_fit: Option<LinearFit>,
    pub flagged: bool,
    pub warning: Option<String>,
}

/// Moments and tail of the final cluster size `M`. Censored runs are
/// excluded and counted.
pub fn cluster_moments(
    law: &RadiusLaw,
    env: &SiteEnvironment,
    replicates: u64,
    cap: u64,
    master: u64,
    level: f64,
) -> Result<ClusterReport> {
    let runs = simulate_summaries(law, env, master, replicates, Stop::UntilExtinct(cap))?;
    let sizes: Vec<u64> = runs.iter().filter_map(|s| s.cluster.map(|c| c.m)).collect();
    let censored = replicates - sizes.len() as u64;
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("every run was censored".into()));
    }
    let m: Vec<f64> = sizes.iter().map(|&x| x as f64).collect();
    let m2: Vec<f64> = m.iter().map(|x| x * x).collect();
    let mut distribution = BTreeMap::new();
    for &s in &sizes {
        *distribution.entry(s).or_default() += 1;
    }
    let max = *sizes.iter().max().unwrap();
    let grid: Vec<u64> = (1..=max).collect();
    let tail = stats::survival_table(&sizes, &grid, level);
    let tail_fit = stats::log_survival_fit(&tail).ok();
    let flagged = censored as f64 > CENSOR_WARN_FRACTION * replicates as f64;
    Ok(ClusterReport {
        law: law.label(),
        replicates,
        censored,
        mean: stats::mean_estimate("M", &m, level).with_censored(censored),
        second_moment: stats::mean_estimate("M^2", &m2, level).with_censored(censored),
        distribution,
        tail,
        tail_fit,
        flagged,
        warning: flagged.then(|| format!("{censored} of {replicates} runs hit the cap")),
    })
}

fn require_supercritical(law: &RadiusLaw) -> Result<()> {
    if law.p1() > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{law} has P(I = 0) > 0; the front speed is only defined when P(I = 0) = 0"
        )));
    }
    Ok(())
}

/// Right fronts at each requested step for `replicates` full-line runs.
pub fn basic_fronts(law: &RadiusLaw, steps: &[u64], replicates: u64, master: u64) -> Result<Vec<Vec<i64>>> {
    let horizon = *steps.iter().max().ok_or_else(|| Error::InvalidArgument("no steps".into()))?;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let (mut field, mut sites) = replicate_world(law, &SiteEnvironment::AllOccupied, master, i);
            let mut out = vec![0; steps.len()];
            engine::run_observed(
                engine::BasicState::init(),
                engine::Sides::Both,
                &mut field,
                &mut sites,
                Stop::Horizon(horizon),
                |s| {
                    for (slot, &n) in out.iter_mut().zip(steps) {
                        if s.n == n {
                            *slot = s.r;
                        }
                    }
                },
            )?;
            Ok(out)
        })
        .collect()
}

/// `μ̂ = r_N / N`, averaged over replicates with a normal interval.
pub fn speed_lln(law: &RadiusLaw, horizon: u64, replicates: u64, master: u64, level: f64) -> Result<EstimateReport> {
    require_supercritical(law)?;
    let fronts = basic_fronts(law, &[horizon], replicates, master)?;
    let speeds: Vec<f64> = fronts.iter().map(|f| f[0] as f64 / horizon as f64).collect();
    Ok(EstimateReport {
        method: "lln".into(),
        ..stats::mean_estimate("mu", &speeds, level)
    })
}

/// Renewal ledgers of `replicates` independent runs of `steps` steps.
pub fn renewal_ledgers(
    law: &RadiusLaw,
    steps: u64,
    replicates: u64,
    master: u64,
    policy: DepthPolicy,
) -> Result<Vec<RenewalLedger>> {
    require_supercritical(law)?;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master, i, Purpose::Field);
            renewal::ledger_for_run(law, seed, steps, policy).map(|(_, ledger)| ledger)
        })
        .collect()
}

/// Pooled renewal-ratio estimate of μ.
pub fn speed_renewal(
    law: &RadiusLaw,
    steps: u64,
    replicates: u64,
    master: u64,
    level: f64,
    policy: DepthPolicy,
) -> Result<EstimateReport> {
    let ledgers = renewal_ledgers(law, steps, replicates, master, policy)?;
    renewal::speed_from_ledgers(&ledgers, level)
}

/// `μ̂' = r^R_N / N` over replicates, optionally windowed.
#[allow(clippy::too_many_arguments)]
pub fn speed_lln_react(
    law: &RadiusLaw,
    p2: f64,
    horizon: u64,
    replicates: u64,
    master: u64,
    level: f64,
    window: Window,
) -> Result<EstimateReport> {
    let speeds = react_speeds(law, p2, &[horizon], replicates, master, window)?;
    let xs: Vec<f64> = speeds.iter().map(|v| v[0]).collect();
    let mut report = EstimateReport {
        method: "lln-reactivation".into(),
        ..stats::mean_estimate("mu_prime", &xs, level)
    };
    report.uncertified = window.error_budget_per_step(law, p2) > 0.0;
    Ok(report)
}

/// `r^R_n / n` at each requested `n` for every replicate.
pub fn react_speeds(
    law: &RadiusLaw,
    p2: f64,
    steps: &[u64],
    replicates: u64,
    master: u64,
    window: Window,
) -> Result<Vec<Vec<f64>>> {
    let horizon = *steps.iter().max().ok_or_else(|| Error::InvalidArgument("no steps".into()))?;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let stream = replicate_stream(master, i);
            let mut state = react::ReactivationState::init();
            let mut out = vec![0.0; steps.len()];
            while state.n < horizon {
                state = react::step_react(&state, law, p2, &stream, window);
                for (slot, &n) in out.iter_mut().zip(steps) {
                    if state.n == n {
                        *slot = state.r as f64 / n as f64;
                    }
                }
            }
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTailReport {
    pub law: String,
    pub p2: f64,
    pub u: i64,
    pub horizon: u64,
    /// Individual outcomes, written separately from the summary.
    #[serde(skip)]
    pub probes: Vec<react::DominationProbe>,
    pub failed: u64,
    /// `P̂(n < β^R ≤ horizon)` over all probes, for `n = 1..horizon`.
    pub table: Vec<SurvivalPoint>,
    pub fit: Option<LinearFit>,
}

/// Runs `count` independent domination probes at `u` and tabulates the
/// censored tail of `β^R`.
#[allow(clippy::too_many_arguments)]
pub fn probe_tail(
    law: &RadiusLaw,
    p2: f64,
    u: i64,
    horizon: u64,
    width: u64,
    count: u64,
    master: u64,
    level: f64,
) -> Result<ProbeTailReport> {
    let probes: Vec<react::DominationProbe> = (0..count)
        .into_par_iter()
        .map(|i| react::probe_domination(u, law, p2, &replicate_stream(master, i), horizon, width))
        .collect::<Result<_>>()?;
    let mut betas: Vec<u64> = probes.iter().filter_map(|p| p.beta()).collect();
    betas.sort_unstable();
    let table: Vec<SurvivalPoint> = (1..horizon)
        .map(|n| {
            let survivors = (betas.len() - betas.partition_point(|&b| b <= n)) as u64;
            let (lo, hi) = stats::wilson(survivors, count, level);
            SurvivalPoint {
                n,
                survivors,
                total: count,
                estimate: survivors as f64 / count as f64,
                lo,
                hi,
            }
        })
        .collect();
    let fit = stats::log_survival_fit(&table).ok();
    Ok(ProbeTailReport {
        law: law.label(),
        p2,
        u,
        horizon,
        failed: betas.len() as u64,
        probes,
        table,
        fit,
    })
}

/// Where the CLT centering `μ` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuSource {
    /// Pooled renewal increments from independent runs.
    Renewal { steps: u64, replicates: u64 },
    /// `r_N / N` from independent runs.
    Lln { steps: u64, replicates: u64 },
    Fixed { mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: u64,
    pub replicates: u64,
    pub mu_hat: f64,
    pub mu_source: MuSource,
    pub psi_hat: f64,
    pub mean_z: f64,
    /// `3 ψ̂ / √M`.
    pub mean_tolerance: f64,
    pub ks_distance: f64,
    pub ks_critical: f64,
    /// Critical value corrected for the estimated variance.
    pub lilliefors_critical: f64,
    pub alpha: f64,
    pub uncertified: bool,
}

impl CltReport {
    pub fn ks_passes(&self) -> bool {
        self.ks_distance < self.ks_critical
    }

    pub fn centering_passes(&self) -> bool {
        self.mean_z.abs() <= self.mean_tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CltOutcome {
    /// Every standardized value is zero.
    Degenerate { mu_hat: f64, psi_hat: f64 },
    Tested(CltReport),
}

/// Standardizes `r_n` across replicates and compares with `N(0, ψ̂²)`.
///
/// `alpha` is the KS significance level. The critical value is the one for a
/// fully specified normal; the variance is estimated, which makes it
/// conservative.
pub fn clt_check(
    law: &RadiusLaw,
    n: u64,
    replicates: u64,
    mu_source: MuSource,
    master: u64,
    alpha: f64,
) -> Result<CltOutcome> {
    require_supercritical(law)?;
    if law.moment_order() <= 4.0 {
        return Err(Error::MomentTooLow {
            order: law.moment_order(),
            needed: 4.0,
        });
    }
    let centering_seed = derive_seed(master, 0, Purpose::Centering);
    let (mu_hat, uncertified) = match mu_source {
        MuSource::Fixed { mu } => (mu, false),
        MuSource::Lln { steps, replicates } => {
            (speed_lln(law, steps, replicates, centering_seed, 0.95)?.point, false)
        }
        MuSource::Renewal { steps, replicates } => {
            let r = speed_renewal(law, steps, replicates, centering_seed, 0.95, DepthPolicy::TailBudget(renewal::DEFAULT_SIGMA_EPS))?;
            (r.point, r.uncertified)
        }
    };
    let fronts = basic_fronts(law, &[n], replicates, master)?;
    let root = (n as f64).sqrt();
    let z: Vec<f64> = fronts.iter().map(|f| (f[0] as f64 - n as f64 * mu_hat) / root).collect();
    let psi_hat = stats::std_dev(&z);
    let mean_z = stats::mean(&z);
    if psi_hat == 0.0 {
        return Ok(CltOutcome::Degenerate { mu_hat, psi_hat });
    }
    let ks_distance = stats::ks_distance(&z, |x| stats::normal_cdf(x / psi_hat));
    Ok(CltOutcome::Tested(CltReport {
        n,
        replicates,
        mu_hat,
        mu_source,
        psi_hat,
        mean_z,
        mean_tolerance: 3.0 * psi_hat / (replicates as f64).sqrt(),
        ks_distance,
        ks_critical: stats::ks_critical(replicates as usize, alpha),
        lilliefors_critical: stats::lilliefors_critical(replicates as usize, alpha),
        alpha,
        uncertified,
    }))
}
