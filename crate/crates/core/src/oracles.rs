//! Exact answers on tiny instances by exhaustive enumeration.
//!
//! The enumeration works with explicit vertex sets and shares no code with
//! the engines, so agreement between the two is meaningful.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::keyed::{replicate_rng, Purpose};
use crate::law::RadiusLaw;
use crate::stats::{self, CompensatedSum, EstimateReport};

pub const DEFAULT_BUDGET: f64 = 1e8;
pub const MAX_HORIZON: u64 = 4;
/// Tolerance on the total probability mass of an enumeration.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationSpec {
    pub law: RadiusLaw,
    pub horizon: u64,
    pub budget: f64,
}

impl EnumerationSpec {
    pub fn new(law: RadiusLaw, horizon: u64) -> Result<Self> {
        let spec = Self {
            law,
            horizon,
            budget: DEFAULT_BUDGET,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn with_budget(mut self, budget: f64) -> Result<Self> {
        self.budget = budget;
        self.check()?;
        Ok(self)
    }

    fn support_bound(&self) -> u64 {
        self.law.support_bound().unwrap_or(0)
    }

    /// Vertices that can be reached within the horizon.
    pub fn window(&self) -> (i64, i64) {
        let w = (self.support_bound() * self.horizon) as i64;
        (-w, w)
    }

    /// Number of radius assignments over the whole window.
    pub fn required_states(&self) -> f64 {
        let support = self.law.support().map_or(0, |s| s.len()) as f64;
        let (lo, hi) = self.window();
        support.powf((hi - lo + 1) as f64)
    }

    fn check(&self) -> Result<()> {
        if self.law.support_bound().is_none() {
            return Err(Error::InvalidArgument(format!(
                "enumeration needs a law with bounded support, got {}",
                self.law
            )));
        }
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return Err(Error::InvalidArgument(format!(
                "enumeration horizon must be in 1..={MAX_HORIZON}, got {}",
                self.horizon
            )));
        }
        let required = self.required_states();
        if required > self.budget {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn branches(&self) -> Vec<(u64, f64)> {
        self.law
            .support()
            .unwrap_or_default()
            .into_iter()
            .map(|k| (k, self.law.pmf(k)))
            .filter(|&(_, p)| p > 0.0)
            .collect()
    }
}

/// Exact laws of `τ` and `M` up to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub law: String,
    pub law_hash: String,
    pub horizon: u64,
    /// `P(τ = k)` for `k ≤ horizon`.
    pub tau: BTreeMap<u64, f64>,
    /// `P(τ > horizon)`.
    pub tau_overflow: f64,
    /// `P(M = m, τ ≤ horizon)`.
    pub cluster: BTreeMap<u64, f64>,
    pub total_mass: f64,
}

impl OracleTable {
    pub fn tau_prob(&self, k: u64) -> f64 {
        self.tau.get(&k).copied().unwrap_or(0.0)
    }

    pub fn cluster_prob(&self, m: u64) -> f64 {
        self.cluster.get(&m).copied().unwrap_or(0.0)
    }
}

/// Short stable digest of a law's serialized form.
pub fn law_hash(law: &RadiusLaw) -> String {
    let text = serde_json::to_string(law).expect("laws serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Default)]
struct Tally {
    tau: BTreeMap<u64, CompensatedSum>,
    cluster: BTreeMap<u64, CompensatedSum>,
    overflow: CompensatedSum,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (k, v) in other.tau {
            self.tau.entry(k).or_default().add(v.value());
        }
        for (k, v) in other.cluster {
            self.cluster.entry(k).or_default().add(v.value());
        }
        self.overflow.add(other.overflow.value());
        self
    }
}

#[derive(Clone)]
struct Node {
    heard: BTreeSet<i64>,
    active: Vec<i64>,
    n: u64,
}

/// Literal step: the newly informed set given a radius for each active vertex.
fn spread(node: &Node, radii: &[u64]) -> Node {
    let mut fresh = BTreeSet::new();
    for (&u, &k) in node.active.iter().zip(radii) {
        let k = k as i64;
        for z in u - k..=u + k {
            if !node.heard.contains(&z) {
                fresh.insert(z);
            }
        }
    }
    let mut heard = node.heard.clone();
    heard.extend(&fresh);
    Node {
        heard,
        active: fresh.into_iter().collect(),
        n: node.n + 1,
    }
}

fn settle(node: &Node, p: f64, horizon: u64, tally: &mut Tally) -> bool {
    if node.active.is_empty() {
        tally.tau.entry(node.n).or_default().add(p);
        tally.cluster.entry(node.heard.len() as u64).or_default().add(p);
        return true;
    }
    if node.n >= horizon {
        tally.overflow.add(p);
        return true;
    }
    false
}

/// Depth-first over the radii of the active vertices, one vertex at a time.
fn explore(
    node: &Node,
    radii: &mut Vec<u64>,
    p: f64,
    branches: &[(u64, f64)],
    horizon: u64,
    tally: &mut Tally,
) {
    if radii.len() == node.active.len() {
        let next = spread(node, radii);
        if !settle(&next, p, horizon, tally) {
            explore(&next, &mut Vec::new(), p, branches, horizon, tally);
        }
        return;
    }
    for &(k, q) in branches {
        radii.push(k);
        explore(node, radii, p * q, branches, horizon, tally);
        radii.pop();
    }
}

fn enumerate(spec: &EnumerationSpec) -> Tally {
    let branches = spec.branches();
    let root = Node {
        heard: BTreeSet::from([0]),
        active: vec![0],
        n: 0,
    };
    // The origin's radius is the outermost branch.
    branches
        .par_iter()
        .map(|&(k, q)| {
            let mut tally = Tally::default();
            let next = spread(&root, &[k]);
            if !settle(&next, q, spec.horizon, &mut tally) {
                explore(&next, &mut Vec::new(), q, &branches, spec.horizon, &mut tally);
            }
            tally
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::default(), Tally::merge)
}

fn table_from(spec: &EnumerationSpec, tally: Tally) -> Result<OracleTable> {
    let tau: BTreeMap<u64, f64> = tally.tau.iter().map(|(k, v)| (*k, v.value())).collect();
    let cluster: BTreeMap<u64, f64> = tally.cluster.iter().map(|(k, v)| (*k, v.value())).collect();
    let overflow = tally.overflow.value();
    let total: f64 = tau.values().copied().chain([overflow]).collect::<CompensatedSum>().value();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvariantViolation(format!(
            "enumerated mass {total} differs from 1"
        )));
    }
    Ok(OracleTable {
        law: spec.law.label(),
        law_hash: law_hash(&spec.law),
        horizon: spec.horizon,
        tau,
        tau_overflow: overflow,
        cluster,
        total_mass: total,
    })
}

/// Exact `P(τ = k)` for `k ≤ horizon` and `P(τ > horizon)`, together with
/// the law of the final cluster size on `{τ ≤ horizon}`.
pub fn exact_tau_distribution(spec: &EnumerationSpec) -> Result<OracleTable> {
    spec.check()?;
    table_from(spec, enumerate(spec))
}

/// Law of `M` on `{τ ≤ horizon}`.
pub fn exact_cluster_distribution(spec: &EnumerationSpec) -> Result<BTreeMap<u64, f64>> {
    exact_tau_distribution(spec).map(|t| t.cluster)
}

/// The same table by brute force over every radius assignment in the
/// window, with no pruning of unreachable vertices.
pub fn exact_tau_distribution_unpruned(spec: &EnumerationSpec) -> Result<OracleTable> {
    spec.check()?;
    let branches = spec.branches();
    let (lo, hi) = spec.window();
    let width = (hi - lo + 1) as usize;
    let mut tally = Tally::default();
    let mut digits = vec![0usize; width];
    loop {
        let p: f64 = digits.iter().map(|&d| branches[d].1).product();
        let radius = |v: i64| branches[digits[(v - lo) as usize]].0;
        let mut node = Node {
            heard: BTreeSet::from([0]),
            active: vec![0],
            n: 0,
        };
        loop {
            let radii: Vec<u64> = node.active.iter().map(|&v| radius(v)).collect();
            node = spread(&node, &radii);
            if settle(&node, p, spec.horizon, &mut tally) {
                break;
            }
        }
        // odometer over the assignments
        let mut i = 0;
        while i < width {
            digits[i] += 1;
            if digits[i] < branches.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == width {
            break;
        }
    }
    table_from(spec, tally)
}

/// Exact law of `O = sup{i + I_i : i ≤ 0}` for a bounded law. Only the
/// vertices `0, -1, ..., -(K - 1)` can give a positive term.
pub fn exact_overshoot_distribution(law: &RadiusLaw) -> Result<BTreeMap<u64, f64>> {
    let k = law.support_bound().ok_or_else(|| {
        Error::InvalidArgument(format!("overshoot enumeration needs bounded support, got {law}"))
    })?;
    let branches: Vec<(u64, f64)> = law
        .support()
        .unwrap_or_default()
        .into_iter()
        .map(|r| (r, law.pmf(r)))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    let vertices = k.max(1) as usize;
    let mut acc: BTreeMap<u64, CompensatedSum> = BTreeMap::new();
    let mut digits = vec![0usize; vertices];
    loop {
        let mut p = 1.0;
        let mut best = 0i64;
        for (depth, &d) in digits.iter().enumerate() {
            let (r, q) = branches[d];
            p *= q;
            best = best.max(r as i64 - depth as i64);
        }
        acc.entry(best as u64).or_default().add(p);
        let mut i = 0;
        while i < vertices {
            digits[i] += 1;
            if digits[i] < branches.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == vertices {
            break;
        }
    }
    Ok(acc.into_iter().map(|(m, s)| (m, s.value())).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSumReport {
    pub replicates: u64,
    pub mean: EstimateReport,
    pub predicted_mean: f64,
    pub variance: EstimateReport,
    pub predicted_variance: f64,
    pub mean_ok: bool,
    pub variance_ok: bool,
}

/// Checks `E Z = E η · E X` and `Var Z = E η · Var X + Var η · (E X)²` for
/// `Z = X_1 + ... + X_η` by simulation.
pub fn random_sum_identities(
    law_x: &RadiusLaw,
    law_eta: &RadiusLaw,
    replicates: u64,
    master: u64,
    level: f64,
) -> Result<RandomSumReport> {
    let moments = |law: &RadiusLaw| -> Result<(f64, f64)> {
        match (law.mean(), law.variance()) {
            (Some(m), Some(v)) => Ok((m, v)),
            _ => Err(Error::MomentTooLow {
                order: law.moment_order(),
                needed: 2.0,
            }),
        }
    };
    let (ex, vx) = moments(law_x)?;
    let (eeta, veta) = moments(law_eta)?;
    if replicates < 2 {
        return Err(Error::InvalidArgument("need at least two replicates".into()));
    }
    let z: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(master, i, Purpose::Auxiliary);
            let eta = law_eta.sample(&mut rng);
            (0..eta).map(|_| law_x.sample(&mut rng) as f64).sum()
        })
        .collect();
    let mean = stats::mean_estimate("E[Z]", &z, level);
    let s2 = stats::variance(&z);
    let m = stats::mean(&z);
    let m4 = z.iter().map(|x| (x - m).powi(4)).sum::<f64>() / z.len() as f64;
    let half = stats::z_for_level(level) * ((m4 - s2 * s2).max(0.0) / z.len() as f64).sqrt();
    let variance = EstimateReport::new("Var[Z]", s2, (s2 - half, s2 + half), level, replicates, "sample-variance");
    let predicted_mean = eeta * ex;
    let predicted_variance = eeta * vx + veta * ex * ex;
    Ok(RandomSumReport {
        replicates,
        mean_ok: mean.contains(predicted_mean),
        variance_ok: variance.contains(predicted_variance),
        mean,
        predicted_mean,
        variance,
        predicted_variance,
    })
}
