//! The rumour process with reactivation.
//!
//! Every informed vertex carries a Bernoulli clock: at each step an old
//! vertex becomes active again with probability `p2` and spreads with a fresh
//! radius. Randomness is keyed by `(step, vertex, channel)`, so processes
//! started from different initial sets consult the same `I^n_v` and `B^n_v`.

use serde::{Deserialize, Serialize};

use crate::engine::{Status, StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::keyed::{Channel, KeyedStream};
use crate::law::RadiusLaw;

/// Which vertices have their reactivation clocks consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Every informed vertex.
    Exact,
    /// Only informed vertices at distance less than the width from a front.
    /// Fronts stay exact when the width is at least the support bound.
    Within(u64),
}

impl Window {
    /// Bound on the per-step probability that an ignored vertex would have
    /// moved a front.
    pub fn error_budget_per_step(&self, law: &RadiusLaw, p2: f64) -> f64 {
        match *self {
            Window::Exact => 0.0,
            Window::Within(w) => 2.0 * p2 * law.tail_sum_from(w),
        }
    }

    /// Smallest window that keeps the fronts exact, if the law is bounded.
    pub fn exact_fronts_for(law: &RadiusLaw) -> Option<Self> {
        law.support_bound().map(|k| Window::Within(k.max(1)))
    }
}

/// Geometry of the informed set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extent {
    /// `[l, r]`, growing both ways.
    Interval,
    /// `[anchor, r]`: nothing left of the anchor exists.
    RightOf(i64),
    /// `(-∞, r]`: only the right front is tracked.
    LeftUnbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactivationState {
    pub n: u64,
    /// Left front; meaningless for [`Extent::LeftUnbounded`].
    pub l: i64,
    pub r: i64,
    pub extent: Extent,
    /// `Ã^R_n`, sorted and without repeats. Under a window this holds only
    /// the tracked part of the set.
    pub active: Vec<i64>,
}

impl ReactivationState {
    /// The full-line process from `{0}`.
    pub fn init() -> Self {
        Self {
            n: 0,
            l: 0,
            r: 0,
            extent: Extent::Interval,
            active: vec![0],
        }
    }

    /// The one-sided process started from `{u}`.
    pub fn init_one_sided(u: i64) -> Self {
        Self {
            n: 0,
            l: u,
            r: u,
            extent: Extent::RightOf(u),
            active: vec![u],
        }
    }

    /// The process started with every vertex below `u` informed and active.
    /// Only the part of that set inside the window is materialized.
    pub fn init_left_of(u: i64, window: u64) -> Self {
        Self {
            n: 0,
            l: i64::MIN,
            r: u - 1,
            extent: Extent::LeftUnbounded,
            active: ((u - window.max(1) as i64)..u).collect(),
        }
    }

    fn record(&self) -> StepRecord {
        StepRecord {
            n: self.n,
            l: self.l,
            r: self.r,
            active_count: self.active.len() as u64,
        }
    }
}

#[inline]
fn radius(law: &RadiusLaw, stream: &KeyedStream, step: u64, v: i64) -> i64 {
    law.quantile(stream.uniform(step, v, Channel::Radius)) as i64
}

#[inline]
fn clock(stream: &KeyedStream, step: u64, v: i64, p2: f64) -> bool {
    p2 > 0.0 && stream.uniform(step, v, Channel::Clock) < p2
}

/// One step: active vertices spread with `I^n_w`, then informed vertices
/// whose clock `B^{n+1}_u` fires join the newly reached ones.
pub fn step_react(
    state: &ReactivationState,
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    window: Window,
) -> ReactivationState {
    let n = state.n;
    let (mut l2, mut r2) = (state.l, state.r);
    for &w in &state.active {
        let i = radius(law, stream, n, w);
        r2 = r2.max(w + i);
        if state.extent == Extent::Interval {
            l2 = l2.min(w - i);
        }
    }

    let mut next = Vec::new();
    if l2 < state.l {
        next.extend(l2..state.l);
    }
    let mut wake = |u: i64| {
        if clock(stream, n + 1, u, p2) {
            next.push(u);
        }
    };
    if p2 > 0.0 {
        let (lo, hi) = (state.l, state.r);
        match (window, state.extent) {
            (Window::Exact, Extent::LeftUnbounded) => {
                unreachable!("unbounded informed sets always run windowed")
            }
            (Window::Exact, _) => (lo..=hi).for_each(&mut wake),
            (Window::Within(w), extent) => {
                let w = w.max(1) as i64;
                let right_start = hi.saturating_sub(w - 1);
                if extent == Extent::LeftUnbounded {
                    (right_start..=hi).for_each(&mut wake);
                } else {
                    let left_end = lo.saturating_add(w - 1).min(hi);
                    (lo..=left_end).for_each(&mut wake);
                    (right_start.max(left_end + 1)..=hi).for_each(&mut wake);
                }
            }
        }
    }
    if r2 > state.r {
        next.extend(state.r + 1..=r2);
    }
    debug_assert!(next.windows(2).all(|p| p[0] < p[1]));
    ReactivationState {
        n: n + 1,
        l: l2,
        r: r2,
        extent: state.extent,
        active: next,
    }
}

fn check_react_args(p2: f64, horizon: u64) -> Result<()> {
    if !(0.0..=1.0).contains(&p2) {
        return Err(Error::InvalidArgument(format!("p2 = {p2} is not a probability")));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    Ok(())
}

fn run_from(
    start: ReactivationState,
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    horizon: u64,
    window: Window,
) -> Result<Trajectory> {
    check_react_args(p2, horizon)?;
    let mut state = start;
    let mut records = Vec::with_capacity(horizon as usize + 1);
    records.push(state.record());
    while state.n < horizon {
        state = step_react(&state, law, p2, stream, window);
        records.push(state.record());
    }
    Ok(Trajectory {
        records,
        status: Status::Censored { horizon },
        cluster: None,
    })
}

/// Runs the full-line process for `horizon` steps. An empty active set is
/// not terminal: it persists until some clock fires.
pub fn run_react(
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    horizon: u64,
    window: Window,
) -> Result<Trajectory> {
    run_from(ReactivationState::init(), law, p2, stream, horizon, window)
}

/// Final right front after `horizon` steps, without keeping records.
pub fn react_front(
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    horizon: u64,
    window: Window,
) -> Result<i64> {
    check_react_args(p2, horizon)?;
    let mut state = ReactivationState::init();
    while state.n < horizon {
        state = step_react(&state, law, p2, stream, window);
    }
    Ok(state.r)
}

/// The one-sided process from `{u}` on `[u, ∞)`.
pub fn run_one_sided_react(
    u: i64,
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    horizon: u64,
    window: Window,
) -> Result<Trajectory> {
    run_from(ReactivationState::init_one_sided(u), law, p2, stream, horizon, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeOutcome {
    /// The restricted front overtook the one-sided front at this step.
    Failed { beta: u64 },
    DominatedThrough { horizon: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominationProbe {
    pub u: i64,
    pub horizon: u64,
    pub outcome: ProbeOutcome,
}

impl DominationProbe {
    pub fn beta(&self) -> Option<u64> {
        match self.outcome {
            ProbeOutcome::Failed { beta } => Some(beta),
            ProbeOutcome::DominatedThrough { .. } => None,
        }
    }

    /// `{"u", "horizon", "outcome", "betaR"}` record.
    pub fn to_json(&self) -> serde_json::Value {
        let (outcome, beta) = match self.outcome {
            ProbeOutcome::Failed { beta } => ("failed", serde_json::json!(beta)),
            ProbeOutcome::DominatedThrough { .. } => ("dominated", serde_json::Value::Null),
        };
        serde_json::json!({
            "u": self.u,
            "horizon": self.horizon,
            "outcome": outcome,
            "betaR": beta,
        })
    }
}

/// Co-evolves the process started from everything below `u` with the
/// one-sided process from `{u}` on the same keys and reports the first step
/// at which the former's right front is strictly ahead.
///
/// `stream` should already be shifted to the step at which the probe starts.
/// The left-unbounded process is always windowed; with `width` at least the
/// support bound its front is exact.
pub fn probe_domination(
    u: i64,
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    horizon: u64,
    width: u64,
) -> Result<DominationProbe> {
    check_react_args(p2, horizon)?;
    let window = Window::Within(width.max(1));
    let mut left = ReactivationState::init_left_of(u, width);
    let mut right = ReactivationState::init_one_sided(u);
    for n in 1..=horizon {
        left = step_react(&left, law, p2, stream, window);
        right = step_react(&right, law, p2, stream, window);
        if left.r > right.r {
            return Ok(DominationProbe {
                u,
                horizon,
                outcome: ProbeOutcome::Failed { beta: n },
            });
        }
    }
    Ok(DominationProbe {
        u,
        horizon,
        outcome: ProbeOutcome::DominatedThrough { horizon },
    })
}

/// Steps `n` at which the `confirm_lag`-truncated domination event holds at
/// the current front, with the fronts at those steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxRenewals {
    pub confirm_lag: u64,
    pub steps: Vec<u64>,
    pub fronts: Vec<i64>,
    pub horizon: u64,
    pub final_front: i64,
}

impl ApproxRenewals {
    /// Increments between consecutive approximate renewals.
    pub fn increments(&self) -> Vec<crate::renewal::Increment> {
        self.steps
            .windows(2)
            .zip(self.fronts.windows(2))
            .map(|(s, f)| crate::renewal::Increment {
                d_tau: s[1] - s[0],
                d_r: (f[1] - f[0]) as u64,
            })
            .collect()
    }
}

/// Probes domination at every step of a run and keeps the steps where the
/// truncated event holds. A surrogate for the true renewal sequence whose
/// bias depends on `confirm_lag`.
pub fn detect_renewals_react(
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    horizon: u64,
    confirm_lag: u64,
    window: Window,
) -> Result<ApproxRenewals> {
    if confirm_lag == 0 {
        return Err(Error::InvalidArgument("confirm lag must be positive".into()));
    }
    let width = match window {
        Window::Within(w) => w,
        Window::Exact => law.support_bound().unwrap_or(1).max(1),
    };
    let traj = run_react(law, p2, stream, horizon, window)?;
    let mut steps = Vec::new();
    let mut fronts = Vec::new();
    for rec in &traj.records {
        let probe = probe_domination(rec.r, law, p2, &stream.shifted(rec.n), confirm_lag, width)?;
        if probe.beta().is_none() {
            steps.push(rec.n);
            fronts.push(rec.r);
        }
    }
    Ok(ApproxRenewals {
        confirm_lag,
        steps,
        fronts,
        horizon,
        final_front: traj.last().r,
    })
}

/// `θ = p2 · P(I ≥ 1)`.
pub fn drift_theta(law: &RadiusLaw, p2: f64) -> f64 {
    p2 * law.tail(0)
}

/// The walk `X_n` driven by the front vertex's own clock and radius:
/// `X_n - X_{n-1} = 1{B^{n-1}_v = 1, I^{n-1}_v ≥ 1}` with `v = r^R_{n-1}`.
/// Returns `(X_n, r^R_n)` for `n = 0..=horizon`.
pub fn drift_walk(
    law: &RadiusLaw,
    p2: f64,
    stream: &KeyedStream,
    horizon: u64,
    window: Window,
) -> Result<Vec<(u64, i64)>> {
    check_react_args(p2, horizon)?;
    let mut state = ReactivationState::init();
    let mut x = 0u64;
    let mut out = vec![(0, 0)];
    while state.n < horizon {
        let (n, v) = (state.n, state.r);
        if clock(stream, n, v, p2) && radius(law, stream, n, v) >= 1 {
            x += 1;
        }
        state = step_react(&state, law, p2, stream, window);
        out.push((x, state.r));
    }
    Ok(out)
}
