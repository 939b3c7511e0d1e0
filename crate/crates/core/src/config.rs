//! Experiment configuration files.
//!
//! A config is a TOML document with a top-level `kind`, a `[law]` table, an
//! optional `[environment]` table and kind-specific keys. Parsing walks the
//! document by hand so that every problem is reported at once and unknown
//! keys are rejected.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::engine::DEFAULT_CAP;
use crate::error::{Error, Result};
use crate::estimators::MuSource;
use crate::law::{RadiusLaw, DEFAULT_NMAX, DEFAULT_TOL};
use crate::oracles::DEFAULT_BUDGET;
use crate::react::Window;
use crate::renewal::DEFAULT_SIGMA_EPS;
use crate::sites::SiteEnvironment;

pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Survival,
    Speed,
    Clt,
    React,
    Criterion,
    Oracle,
    Probe,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Simulate,
        ExperimentKind::Survival,
        ExperimentKind::Speed,
        ExperimentKind::Clt,
        ExperimentKind::React,
        ExperimentKind::Criterion,
        ExperimentKind::Oracle,
        ExperimentKind::Probe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Survival => "survival",
            ExperimentKind::Speed => "speed",
            ExperimentKind::Clt => "clt",
            ExperimentKind::React => "react",
            ExperimentKind::Criterion => "criterion",
            ExperimentKind::Oracle => "oracle",
            ExperimentKind::Probe => "probe",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    pub replicates: u64,
    /// Stop after this many steps; `None` runs until extinction or `cap`.
    pub horizon: Option<u64>,
    pub cap: u64,
    /// Replicates whose full trajectory is written.
    pub trajectories: u64,
    /// Step a set-based reference engine alongside and stop on mismatch.
    pub verify: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalParams {
    pub replicates: u64,
    pub ns: Vec<u64>,
    pub cap: u64,
    pub hazard_nmax: u64,
    pub min_samples: u64,
    pub gamma_horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedParams {
    pub horizon: u64,
    pub replicates: u64,
    pub renewal_steps: u64,
    pub sigma_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltParams {
    pub n: u64,
    pub replicates: u64,
    pub alpha: f64,
    pub mu: MuSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactParams {
    pub p2: f64,
    pub horizon: u64,
    pub replicates: u64,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionParams {
    pub nmax: i64,
    pub tol: f64,
    /// Rows of `a_n` written to the CSV.
    pub rows: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub horizon: u64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub p2: f64,
    pub u: i64,
    pub horizon: u64,
    pub probes: u64,
    pub width: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Simulate(SimulateParams),
    Survival(SurvivalParams),
    Speed(SpeedParams),
    Clt(CltParams),
    React(ReactParams),
    Criterion(CriterionParams),
    Oracle(OracleParams),
    Probe(ProbeParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub law: RadiusLaw,
    pub environment: SiteEnvironment,
    pub seed: u64,
    pub level: f64,
    pub params: Params,
    /// Output directory; not part of the hash.
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        match self.params {
            Params::Simulate(_) => ExperimentKind::Simulate,
            Params::Survival(_) => ExperimentKind::Survival,
            Params::Speed(_) => ExperimentKind::Speed,
            Params::Clt(_) => ExperimentKind::Clt,
            Params::React(_) => ExperimentKind::React,
            Params::Criterion(_) => ExperimentKind::Criterion,
            Params::Oracle(_) => ExperimentKind::Oracle,
            Params::Probe(_) => ExperimentKind::Probe,
        }
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Re-checks the cross-field constraints, e.g. after CLI overrides.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        check_level(self.level, &mut errors);
        errors.extend(self.law.problems().into_iter().map(|p| format!("law: {p}")));
        errors.extend(self.environment.problems().into_iter().map(|p| format!("environment: {p}")));
        if errors.is_empty() {
            check_kind_constraints(&self.law, &self.environment, &self.params, &mut errors);
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

fn check_level(level: f64, errors: &mut Vec<String>) {
    if !(level > 0.0 && level < 1.0) {
        errors.push(format!("level = {level} must lie strictly between 0 and 1"));
    }
}

/// Reads keys out of one table, remembering which were used and every error.
struct Fields<'a> {
    path: String,
    table: &'a Table,
    used: BTreeSet<&'a str>,
    errors: &'a mut Vec<String>,
}

impl<'a> Fields<'a> {
    fn new(path: &str, table: &'a Table, errors: &'a mut Vec<String>) -> Self {
        Self {
            path: path.to_string(),
            table,
            used: BTreeSet::new(),
            errors,
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn error(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn raw(&mut self, k: &'a str) -> Option<&'a Value> {
        let v = self.table.get(k);
        if v.is_some() {
            self.used.insert(k);
        }
        v
    }

    fn opt_u64(&mut self, k: &'a str) -> Option<u64> {
        match self.raw(k)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            other => {
                let msg = format!("{} = {other} must be a nonnegative integer", self.key(k));
                self.error(msg);
                None
            }
        }
    }

    fn u64_or(&mut self, k: &'a str, default: u64) -> u64 {
        self.opt_u64(k).unwrap_or(default)
    }

    fn positive_u64(&mut self, k: &'a str, default: u64) -> u64 {
        let v = self.u64_or(k, default);
        if v == 0 {
            let msg = format!("{} must be positive", self.key(k));
            self.error(msg);
        }
        v
    }

    fn i64_or(&mut self, k: &'a str, default: i64) -> i64 {
        match self.raw(k) {
            None => default,
            Some(Value::Integer(i)) => *i,
            Some(other) => {
                let msg = format!("{} = {other} must be an integer", self.key(k));
                self.error(msg);
                default
            }
        }
    }

    fn opt_f64(&mut self, k: &'a str) -> Option<f64> {
        match self.raw(k)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                let msg = format!("{} = {other} must be a number", self.key(k));
                self.error(msg);
                None
            }
        }
    }

    fn f64_or(&mut self, k: &'a str, default: f64) -> f64 {
        self.opt_f64(k).unwrap_or(default)
    }

    fn required_f64(&mut self, k: &'a str) -> f64 {
        self.opt_f64(k).unwrap_or_else(|| {
            if !self.table.contains_key(k) {
                let msg = format!("{} is required", self.key(k));
                self.error(msg);
            }
            f64::NAN
        })
    }

    fn probability(&mut self, k: &'a str, value: f64) -> f64 {
        if !(0.0..=1.0).contains(&value) && (!value.is_nan() || self.table.contains_key(k)) {
            let msg = format!("{} = {value} is not a probability", self.key(k));
            self.error(msg);
        }
        value
    }

    fn opt_str(&mut self, k: &'a str) -> Option<&'a str> {
        match self.raw(k)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                let msg = format!("{} = {other} must be a string", self.key(k));
                self.error(msg);
                None
            }
        }
    }

    fn opt_table(&mut self, k: &'a str) -> Option<&'a Table> {
        match self.raw(k)? {
            Value::Table(t) => Some(t),
            other => {
                let msg = format!("{} = {other} must be a table", self.key(k));
                self.error(msg);
                None
            }
        }
    }

    fn opt_f64_list(&mut self, k: &'a str) -> Option<Vec<f64>> {
        let arr = match self.raw(k)? {
            Value::Array(a) => a,
            other => {
                let msg = format!("{} = {other} must be an array of numbers", self.key(k));
                self.error(msg);
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, v) in arr.iter().enumerate() {
            match v {
                Value::Float(x) => out.push(*x),
                Value::Integer(x) => out.push(*x as f64),
                other => {
                    let msg = format!("{}[{i}] = {other} must be a number", self.key(k));
                    self.error(msg);
                }
            }
        }
        Some(out)
    }

    fn opt_u64_list(&mut self, k: &'a str) -> Option<Vec<u64>> {
        let arr = match self.raw(k)? {
            Value::Array(a) => a,
            other => {
                let msg = format!("{} = {other} must be an array of nonnegative integers", self.key(k));
                self.error(msg);
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, v) in arr.iter().enumerate() {
            match v {
                Value::Integer(x) if *x >= 0 => out.push(*x as u64),
                other => {
                    let msg = format!("{}[{i}] = {other} must be a nonnegative integer", self.key(k));
                    self.error(msg);
                }
            }
        }
        Some(out)
    }

    fn bool_or(&mut self, k: &'a str, default: bool) -> bool {
        match self.raw(k) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                let msg = format!("{} = {other} must be a boolean", self.key(k));
                self.error(msg);
                default
            }
        }
    }

    /// Reports every key that was never read.
    fn finish(self) {
        for k in self.table.keys() {
            if !self.used.contains(k.as_str()) {
                let key = if self.path.is_empty() {
                    k.clone()
                } else {
                    format!("{}.{k}", self.path)
                };
                self.errors.push(format!("unknown key `{key}`"));
            }
        }
    }
}

fn parse_law(table: &Table, errors: &mut Vec<String>) -> Option<RadiusLaw> {
    let mut f = Fields::new("law", table, errors);
    let Some(kind) = f.opt_str("kind") else {
        if !table.contains_key("kind") {
            f.error("law.kind is required".into());
        }
        f.finish();
        return None;
    };
    let law = match kind {
        "constant" => f.opt_u64("c").map(|c| RadiusLaw::Constant { c }),
        "geometric" => Some(RadiusLaw::Geometric { q: f.required_f64("q") }),
        "geometric_min1" => Some(RadiusLaw::GeometricMin1 { q: f.required_f64("q") }),
        "polynomial_tail" => Some(RadiusLaw::PolynomialTail {
            alpha: f.required_f64("alpha"),
            c: f.required_f64("c"),
        }),
        "finite" => f.opt_f64_list("pmf").map(|pmf| RadiusLaw::Finite { pmf }),
        other => {
            f.error(format!(
                "law.kind = \"{other}\" is not one of constant, geometric, geometric_min1, polynomial_tail, finite"
            ));
            None
        }
    };
    if law.is_none() && matches!(kind, "constant" | "finite") {
        let field = if kind == "constant" { "c" } else { "pmf" };
        if !table.contains_key(field) {
            f.error(format!("law.{field} is required"));
        }
    }
    f.finish();
    let law = law?;
    let problems = law.problems();
    let nan_only = problems.iter().all(|p| p.contains("NaN"));
    if !problems.is_empty() {
        // A missing required parameter was already reported.
        if !nan_only {
            errors.extend(problems.into_iter().filter(|p| !p.contains("NaN")).map(|p| format!("law: {p}")));
        }
        return None;
    }
    Some(law)
}

fn parse_environment(table: &Table, errors: &mut Vec<String>) -> Option<SiteEnvironment> {
    let mut f = Fields::new("environment", table, errors);
    let env = match f.opt_str("kind") {
        None => {
            if !table.contains_key("kind") {
                f.error("environment.kind is required".into());
            }
            None
        }
        Some("all_occupied") => Some(SiteEnvironment::AllOccupied),
        Some("bernoulli_sites") => {
            let p = f.required_f64("p_occ");
            let p_occ = f.probability("p_occ", p);
            Some(SiteEnvironment::BernoulliSites { p_occ })
        }
        Some("markov_sites") => {
            let a = f.required_f64("p00");
            let b = f.required_f64("p11");
            let p00 = f.probability("p00", a);
            let p11 = f.probability("p11", b);
            Some(SiteEnvironment::MarkovSites { p00, p11 })
        }
        Some(other) => {
            f.error(format!(
                "environment.kind = \"{other}\" is not one of all_occupied, bernoulli_sites, markov_sites"
            ));
            None
        }
    };
    f.finish();
    let env = env?;
    if env.problems().is_empty() {
        Some(env)
    } else {
        None
    }
}

fn parse_window(f: &mut Fields<'_>, law: Option<&RadiusLaw>) -> Window {
    let default = law.and_then(Window::exact_fronts_for).unwrap_or(Window::Exact);
    match f.raw("window") {
        None => default,
        Some(Value::String(s)) if s == "exact" => Window::Exact,
        Some(Value::Integer(w)) if *w >= 1 => Window::Within(*w as u64),
        Some(other) => {
            let msg = format!("window = {other} must be \"exact\" or a positive integer");
            f.error(msg);
            default
        }
    }
}

fn parse_mu(f: &mut Fields<'_>) -> MuSource {
    let default = MuSource::Renewal {
        steps: 100_000,
        replicates: 100,
    };
    let Some(table) = f.opt_table("mu") else {
        return default;
    };
    let mut errors = Vec::new();
    let mut g = Fields::new("mu", table, &mut errors);
    let mu = match g.opt_str("kind") {
        None => default,
        Some("renewal") => MuSource::Renewal {
            steps: g.positive_u64("steps", 100_000),
            replicates: g.positive_u64("replicates", 100),
        },
        Some("lln") => MuSource::Lln {
            steps: g.positive_u64("steps", 100_000),
            replicates: g.positive_u64("replicates", 32),
        },
        Some("fixed") => MuSource::Fixed {
            mu: g.required_f64("mu"),
        },
        Some(other) => {
            g.error(format!("mu.kind = \"{other}\" is not one of renewal, lln, fixed"));
            default
        }
    };
    g.finish();
    for e in errors {
        f.error(e);
    }
    mu
}

fn parse_params<'a>(kind: ExperimentKind, f: &mut Fields<'a>, law: Option<&RadiusLaw>) -> Params {
    match kind {
        ExperimentKind::Simulate => Params::Simulate(SimulateParams {
            replicates: f.positive_u64("replicates", 1000),
            horizon: f.opt_u64("horizon"),
            cap: f.positive_u64("cap", DEFAULT_CAP),
            trajectories: f.u64_or("trajectories", 1),
            verify: f.bool_or("verify", false),
        }),
        ExperimentKind::Survival => Params::Survival(SurvivalParams {
            replicates: f.positive_u64("replicates", 100_000),
            ns: f.opt_u64_list("ns").unwrap_or_else(|| (1..=25).collect()),
            cap: f.positive_u64("cap", DEFAULT_CAP),
            hazard_nmax: f.u64_or("hazard_nmax", 50),
            min_samples: f.positive_u64("min_samples", 1000),
            gamma_horizon: f.positive_u64("gamma_horizon", 1000),
        }),
        ExperimentKind::Speed => {
            let horizon = f.positive_u64("horizon", 10_000);
            Params::Speed(SpeedParams {
                horizon,
                replicates: f.positive_u64("replicates", 32),
                renewal_steps: f.positive_u64("renewal_steps", horizon),
                sigma_eps: f.f64_or("sigma_eps", DEFAULT_SIGMA_EPS),
            })
        }
        ExperimentKind::Clt => Params::Clt(CltParams {
            n: f.positive_u64("n", 2000),
            replicates: f.positive_u64("replicates", 2000),
            alpha: f.f64_or("alpha", 0.01),
            mu: parse_mu(f),
        }),
        ExperimentKind::React => {
            let p = f.required_f64("p2");
            Params::React(ReactParams {
                p2: f.probability("p2", p),
                horizon: f.positive_u64("horizon", 10_000),
                replicates: f.positive_u64("replicates", 32),
                window: parse_window(f, law),
            })
        }
        ExperimentKind::Criterion => Params::Criterion(CriterionParams {
            nmax: f.i64_or("nmax", DEFAULT_NMAX),
            tol: f.f64_or("tol", DEFAULT_TOL),
            rows: f.u64_or("rows", 100),
        }),
        ExperimentKind::Oracle => Params::Oracle(OracleParams {
            horizon: f.positive_u64("horizon", 3),
            budget: f.f64_or("budget", DEFAULT_BUDGET),
        }),
        ExperimentKind::Probe => {
            let p = f.required_f64("p2");
            Params::Probe(ProbeParams {
                p2: f.probability("p2", p),
                u: f.i64_or("u", 0),
                horizon: f.positive_u64("horizon", 500),
                probes: f.positive_u64("probes", 1000),
                width: f.positive_u64("width", 1),
            })
        }
    }
}

/// Constraints that involve the law together with the kind-specific keys.
fn check_kind_constraints(law: &RadiusLaw, env: &SiteEnvironment, params: &Params, errors: &mut Vec<String>) {
    let needs_supercritical = |what: &str, errors: &mut Vec<String>| {
        if law.p1() > 0.0 {
            errors.push(format!("{what} needs a law with P(I = 0) = 0, got {law}"));
        }
    };
    let needs_plain_sites = |what: &str, errors: &mut Vec<String>| {
        if !env.is_all_occupied() {
            errors.push(format!("{what} only supports environment all_occupied"));
        }
    };
    match params {
        Params::Simulate(p) => {
            if p.horizon == Some(0) {
                errors.push("horizon must be positive".into());
            }
            if p.trajectories > p.replicates {
                errors.push(format!(
                    "trajectories = {} exceeds replicates = {}",
                    p.trajectories, p.replicates
                ));
            }
        }
        Params::Survival(p) => {
            if p.ns.is_empty() {
                errors.push("ns must not be empty".into());
            }
        }
        Params::Speed(p) => {
            needs_supercritical("speed", errors);
            needs_plain_sites("speed", errors);
            if !(p.sigma_eps > 0.0 && p.sigma_eps < 1.0) {
                errors.push(format!("sigma_eps = {} must lie in (0, 1)", p.sigma_eps));
            }
        }
        Params::Clt(p) => {
            needs_supercritical("clt", errors);
            needs_plain_sites("clt", errors);
            if law.moment_order() <= 4.0 {
                errors.push(format!("clt needs finite moments beyond order 4, {law} has order {}", law.moment_order()));
            }
            if !(p.alpha > 0.0 && p.alpha < 1.0) {
                errors.push(format!("alpha = {} must lie strictly between 0 and 1", p.alpha));
            }
            if let MuSource::Fixed { mu } = p.mu {
                if !mu.is_finite() {
                    errors.push("mu.mu must be a finite number".into());
                }
            }
        }
        Params::React(_) | Params::Probe(_) => needs_plain_sites("the reactivation model", errors),
        Params::Criterion(p) => {
            needs_plain_sites("criterion", errors);
            if p.nmax < 1 {
                errors.push(format!("nmax = {} must be positive", p.nmax));
            }
            if p.tol.is_nan() || p.tol <= 0.0 {
                errors.push(format!("tol = {} must be positive", p.tol));
            }
        }
        Params::Oracle(p) => {
            needs_plain_sites("oracle", errors);
            if law.support_bound().is_none() {
                errors.push(format!("oracle needs a law with bounded support, got {law}"));
            }
            if p.budget.is_nan() || p.budget <= 0.0 {
                errors.push(format!("budget = {} must be positive", p.budget));
            }
        }
    }
}

/// Parses and validates a config. On failure the error lists every problem.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("malformed config: {}", e.message())]))?;
    let mut errors = Vec::new();
    let mut f = Fields::new("", &table, &mut errors);

    let kind = match f.opt_str("kind") {
        Some(s) => ExperimentKind::from_name(s).or_else(|| {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            f.error(format!("kind = \"{s}\" is not one of {}", names.join(", ")));
            None
        }),
        None => {
            if !table.contains_key("kind") {
                f.error("kind is required".into());
            }
            None
        }
    };
    let seed = f.u64_or("seed", 0);
    let level = f.f64_or("level", DEFAULT_LEVEL);
    let output = f.opt_str("output").map(PathBuf::from);

    let law_table = f.opt_table("law");
    let env_table = f.opt_table("environment");
    if law_table.is_none() && !table.contains_key("law") {
        f.error("[law] table is required".into());
    }
    let mut nested = Vec::new();
    let law = law_table.and_then(|t| parse_law(t, &mut nested));
    let environment = match env_table {
        Some(t) => parse_environment(t, &mut nested),
        None => Some(SiteEnvironment::AllOccupied),
    };
    let params = kind.map(|k| parse_params(k, &mut f, law.as_ref()));
    f.finish();
    errors.extend(nested);
    check_level(level, &mut errors);

    match (law, environment, params) {
        (Some(law), Some(environment), Some(params)) if errors.is_empty() => {
            let config = ExperimentConfig {
                law,
                environment,
                seed,
                level,
                params,
                output,
            };
            config.validate()?;
            Ok(config)
        }
        _ => {
            if errors.is_empty() {
                errors.push("config is incomplete".into());
            }
            Err(Error::Config(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn messages(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(m)) => m,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_survival_fills_defaults() {
        let c = parse_config("kind = \"survival\"\n[law]\nkind = \"finite\"\npmf = [0.5, 0, 0.5]\n").unwrap();
        assert_eq!(c.kind(), ExperimentKind::Survival);
        assert_eq!(c.seed, 0);
        assert_eq!(c.level, DEFAULT_LEVEL);
        assert_eq!(c.environment, SiteEnvironment::AllOccupied);
        let Params::Survival(p) = &c.params else { panic!() };
        assert_eq!(p.replicates, 100_000);
        assert_eq!(p.ns, (1..=25).collect::<Vec<_>>());
        assert_eq!(p.cap, DEFAULT_CAP);
    }

    #[test]
    fn pmf_mass_is_reported() {
        let m = messages("kind = \"survival\"\n[law]\nkind = \"finite\"\npmf = [0.5, 0.6]\n");
        assert!(m.iter().any(|e| e.contains("pmf mass 1.1")), "{m:?}");
    }

    #[test]
    fn p2_out_of_range_is_rejected() {
        let m = messages("kind = \"react\"\np2 = 1.5\n[law]\nkind = \"constant\"\nc = 1\n");
        assert!(m.iter().any(|e| e.contains("p2 = 1.5")), "{m:?}");
    }

    #[test]
    fn every_error_is_collected() {
        let m = messages(
            "kind = \"probe\"\np2 = -0.1\nlevel = 1.5\nbogus = 3\n[law]\nkind = \"polynomial_tail\"\nalpha = 0\nc = 0.5\nextra = 1\n[environment]\nkind = \"bernoulli_sites\"\np_occ = 2\n",
        );
        for needle in ["p2 = -0.1", "level = 1.5", "unknown key `bogus`", "unknown key `law.extra`", "alpha = 0", "p_occ = 2"] {
            assert!(m.iter().any(|e| e.contains(needle)), "missing {needle} in {m:?}");
        }
    }

    #[test]
    fn missing_pieces_are_named() {
        let m = messages("seed = 3\n");
        assert!(m.iter().any(|e| e == "kind is required"));
        assert!(m.iter().any(|e| e.contains("[law] table is required")));
        let m = messages("kind = \"react\"\n[law]\nkind = \"constant\"\nc = 1\n");
        assert!(m.iter().any(|e| e == "p2 is required"), "{m:?}");
    }

    #[test]
    fn kind_constraints() {
        let m = messages("kind = \"speed\"\n[law]\nkind = \"geometric\"\nq = 0.5\n");
        assert!(m.iter().any(|e| e.contains("P(I = 0) = 0")));
        let m = messages("kind = \"oracle\"\n[law]\nkind = \"geometric\"\nq = 0.5\n");
        assert!(m.iter().any(|e| e.contains("bounded support")));
    }

    #[test]
    fn hash_ignores_output_and_tracks_content() {
        let a = parse_config("kind = \"speed\"\n[law]\nkind = \"constant\"\nc = 2\n").unwrap();
        let mut b = a.clone();
        b.output = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn react_window_defaults_to_support_bound() {
        let c = parse_config("kind = \"react\"\np2 = 0.5\n[law]\nkind = \"finite\"\npmf = [0.5, 0.5]\n").unwrap();
        let Params::React(p) = &c.params else { panic!() };
        assert_eq!(p.window, Window::Within(1));
        let c = parse_config("kind = \"react\"\np2 = 0.5\nwindow = \"exact\"\n[law]\nkind = \"geometric\"\nq = 0.5\n").unwrap();
        let Params::React(p) = &c.params else { panic!() };
        assert_eq!(p.window, Window::Exact);
    }
}
