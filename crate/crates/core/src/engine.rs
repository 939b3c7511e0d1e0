//! The basic rumour process on ℤ.
//!
//! Every newly informed vertex spreads exactly once, so the vertices that
//! heard the rumour always form an interval `[l, r]` and the active set is
//! at most two intervals hugging its ends. [`step`] works on that
//! representation; [`step_reference`] is a literal set-based transcription
//! kept for differential testing.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadiusField;
use crate::sites::Sites;

/// Default cap for [`Stop::UntilExtinct`].
pub const DEFAULT_CAP: u64 = 1_000_000;

/// Closed integer interval, never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(v: i64) -> Self {
        Self { lo: v, hi: v }
    }

    /// Number of vertices; an interval always holds at least one.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

/// Which half-lines exist: the full line, or only `{0, 1, 2, ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sides {
    Both,
    RightOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicState {
    pub n: u64,
    pub l: i64,
    pub r: i64,
    pub active_left: Option<Interval>,
    pub active_right: Option<Interval>,
}

impl BasicState {
    /// `A_0 = Ã_0 = {0}`. The origin sits in both boundary intervals.
    pub fn init() -> Self {
        Self {
            n: 0,
            l: 0,
            r: 0,
            active_left: Some(Interval::point(0)),
            active_right: Some(Interval::point(0)),
        }
    }

    /// Initial state of the process living on the nonnegative half-line.
    pub fn init_one_sided() -> Self {
        Self {
            active_left: None,
            ..Self::init()
        }
    }

    pub fn is_extinct(&self) -> bool {
        self.active_left.is_none() && self.active_right.is_none()
    }

    /// `#Ã_n`, counting the origin once at `n = 0`.
    pub fn active_count(&self) -> u64 {
        let mut count = 0;
        self.for_each_active(|_| count += 1);
        count
    }

    /// Visits each active vertex once.
    pub fn for_each_active(&self, mut f: impl FnMut(i64)) {
        if let Some(a) = self.active_left {
            a.iter().for_each(&mut f);
        }
        if let Some(b) = self.active_right {
            for u in b.iter() {
                if !self.active_left.is_some_and(|a| a.contains(u)) {
                    f(u);
                }
            }
        }
    }

    pub fn active_vertices(&self) -> Vec<i64> {
        let mut out = Vec::new();
        self.for_each_active(|u| out.push(u));
        out.sort_unstable();
        out
    }

    pub fn cluster(&self) -> ClusterSize {
        ClusterSize {
            m: (self.r - self.l) as u64 + 1,
            m_plus: self.r as u64 + 1,
            m_minus: (-self.l) as u64 + 1,
        }
    }

    /// Whether this state describes the same sets as a set-based state.
    pub fn matches(&self, other: &SetState) -> bool {
        let heard_ok = other.heard.len() as u64 == (self.r - self.l) as u64 + 1
            && other.heard.first() == Some(&self.l)
            && other.heard.last() == Some(&self.r);
        heard_ok
            && self.n == other.n
            && self.active_vertices() == other.active.iter().copied().collect::<Vec<_>>()
    }
}

/// Advances the process by one step.
///
/// Each occupied active vertex `u` reads its radius and pushes the fronts to
/// `u + I_u` and `u - I_u`. Unoccupied vertices hear the rumour but do not
/// spread it.
pub fn step<F: RadiusField + ?Sized>(
    state: &BasicState,
    sides: Sides,
    field: &mut F,
    sites: &mut Sites,
) -> BasicState {
    let mut reach_r = state.r;
    let mut reach_l = state.l;
    let n = state.n;
    state.for_each_active(|u| {
        if !sites.occupied(u) {
            return;
        }
        let radius = field.radius(u, n) as i64;
        reach_r = reach_r.max(u + radius);
        reach_l = reach_l.min(u - radius);
    });
    if sides == Sides::RightOnly {
        reach_l = state.l;
    }
    BasicState {
        n: n + 1,
        l: reach_l,
        r: reach_r,
        active_left: (reach_l < state.l).then(|| Interval::new(reach_l, state.l - 1)),
        active_right: (reach_r > state.r).then(|| Interval::new(state.r + 1, reach_r)),
    }
}

/// Explicit vertex sets `A_n` and `Ã_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetState {
    pub n: u64,
    pub heard: BTreeSet<i64>,
    pub active: BTreeSet<i64>,
}

impl SetState {
    pub fn init() -> Self {
        Self {
            n: 0,
            heard: BTreeSet::from([0]),
            active: BTreeSet::from([0]),
        }
    }
}

/// `Ã_{n+1} = {z ∉ A_n : |z - u| ≤ I_u for some occupied u ∈ Ã_n}`, built
/// vertex by vertex. Only suitable for small radii.
pub fn step_reference<F: RadiusField + ?Sized>(
    state: &SetState,
    sides: Sides,
    field: &mut F,
    sites: &mut Sites,
) -> SetState {
    let mut fresh = BTreeSet::new();
    for &u in &state.active {
        if !sites.occupied(u) {
            continue;
        }
        let radius = field.radius(u, state.n) as i64;
        for z in (u - radius)..=(u + radius) {
            if sides == Sides::RightOnly && z < 0 {
                continue;
            }
            if !state.heard.contains(&z) {
                fresh.insert(z);
            }
        }
    }
    let mut heard = state.heard.clone();
    heard.extend(fresh.iter().copied());
    SetState {
        n: state.n + 1,
        heard,
        active: fresh,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Run until extinction, giving up after the given number of steps.
    UntilExtinct(u64),
    /// Run exactly this many steps unless extinct earlier.
    Horizon(u64),
    /// Run until the right front reaches the vertex.
    RightReaches(i64),
}

impl Stop {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Stop::UntilExtinct(cap) => cap > 0,
            Stop::Horizon(n) => n > 0,
            Stop::RightReaches(x) => x > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("stop condition {self:?} must be positive")))
        }
    }

    fn reached(&self, s: &BasicState) -> bool {
        match *self {
            Stop::UntilExtinct(cap) => s.n >= cap,
            Stop::Horizon(n) => s.n >= n,
            Stop::RightReaches(x) => s.r >= x || s.n >= DEFAULT_CAP * 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Extinct { tau: u64 },
    Censored { horizon: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSize {
    pub m: u64,
    pub m_plus: u64,
    pub m_minus: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: u64,
    pub l: i64,
    pub r: i64,
    pub active_count: u64,
}

impl StepRecord {
    fn of(s: &BasicState) -> Self {
        Self {
            n: s.n,
            l: s.l,
            r: s.r,
            active_count: s.active_count(),
        }
    }
}

/// Outcome of a run without the per-step records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub status: Status,
    pub last: BasicState,
    /// `M`, `M+`, `M-`, present only after extinction.
    pub cluster: Option<ClusterSize>,
}

impl RunSummary {
    pub fn tau(&self) -> Option<u64> {
        match self.status {
            Status::Extinct { tau } => Some(tau),
            Status::Censored { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// One record per step, starting with `n = 0`.
    pub records: Vec<StepRecord>,
    pub status: Status,
    pub cluster: Option<ClusterSize>,
}

impl Trajectory {
    pub fn r_at(&self, n: u64) -> Option<i64> {
        self.records.get(n as usize).map(|rec| rec.r)
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("a trajectory has at least the initial record")
    }

    pub fn tau(&self) -> Option<u64> {
        match self.status {
            Status::Extinct { tau } => Some(tau),
            Status::Censored { .. } => None,
        }
    }

    /// CSV with columns `n,l,r,active_count` and a closing `#` line carrying
    /// the terminal status.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,l,r,active_count")?;
        for rec in &self.records {
            writeln!(w, "{},{},{},{}", rec.n, rec.l, rec.r, rec.active_count)?;
        }
        match (self.status, self.cluster) {
            (Status::Extinct { tau }, Some(c)) => {
                writeln!(w, "#status=extinct,tau={tau},M={}", c.m)
            }
            (Status::Extinct { tau }, None) => writeln!(w, "#status=extinct,tau={tau},M="),
            (Status::Censored { horizon }, _) => {
                writeln!(w, "#status=censored,tau=,M=,horizon={horizon}")
            }
        }
    }
}

/// Steps from `start` until `stop`, calling `observe` on every state after
/// the initial one.
pub fn run_observed<F, O>(
    start: BasicState,
    sides: Sides,
    field: &mut F,
    sites: &mut Sites,
    stop: Stop,
    mut observe: O,
) -> Result<RunSummary>
where
    F: RadiusField + ?Sized,
    O: FnMut(&BasicState),
{
    stop.validate()?;
    let mut state = start;
    loop {
        if state.is_extinct() {
            return Ok(RunSummary {
                status: Status::Extinct { tau: state.n },
                last: state,
                cluster: Some(state.cluster()),
            });
        }
        if stop.reached(&state) {
            return Ok(RunSummary {
                status: Status::Censored { horizon: state.n },
                last: state,
                cluster: None,
            });
        }
        state = step(&state, sides, field, sites);
        observe(&state);
    }
}

fn run_recorded<F: RadiusField + ?Sized>(
    start: BasicState,
    sides: Sides,
    field: &mut F,
    sites: &mut Sites,
    stop: Stop,
) -> Result<Trajectory> {
    let mut records = vec![StepRecord::of(&start)];
    let summary = run_observed(start, sides, field, sites, stop, |s| {
        records.push(StepRecord::of(s))
    })?;
    Ok(Trajectory {
        records,
        status: summary.status,
        cluster: summary.cluster,
    })
}

/// Runs the full-line process from the origin and records every step.
pub fn run<F: RadiusField + ?Sized>(
    field: &mut F,
    sites: &mut Sites,
    stop: Stop,
) -> Result<Trajectory> {
    run_recorded(BasicState::init(), Sides::Both, field, sites, stop)
}

/// Runs the process restricted to `{0, 1, 2, ...}`.
pub fn run_one_sided<F: RadiusField + ?Sized>(
    field: &mut F,
    sites: &mut Sites,
    stop: Stop,
) -> Result<Trajectory> {
    run_recorded(BasicState::init_one_sided(), Sides::RightOnly, field, sites, stop)
}

/// Full-line run without per-step records.
pub fn run_summary<F: RadiusField + ?Sized>(
    field: &mut F,
    sites: &mut Sites,
    stop: Stop,
) -> Result<RunSummary> {
    run_observed(BasicState::init(), Sides::Both, field, sites, stop, |_| {})
}
