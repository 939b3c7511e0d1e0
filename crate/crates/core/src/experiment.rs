//! Running a validated config and persisting its artifacts.
//!
//! An experiment writes one directory holding `manifest.json`, `report.json`
//! and long-format CSV tables. Every CSV starts with a `# config_hash=` line
//! and `report.json` carries the same hash, so each file traces back to one
//! config. Data files depend only on the config, never on the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{
    CltParams, CriterionParams, ExperimentConfig, OracleParams, Params, ProbeParams, ReactParams, SimulateParams,
    SpeedParams, SurvivalParams,
};
use crate::engine::{self, BasicState, SetState, Sides, Status, Stop};
use crate::error::{Error, Result};
use crate::estimators::{self, CltOutcome};
use crate::law::{percolation_criterion, DepthPolicy};
use crate::oracles::{self, EnumerationSpec};
use crate::react;
use crate::renewal;
use crate::stats::{self, SurvivalPoint};

/// Environment variable read for the default worker count.
pub const WORKERS_ENV: &str = "RUMOUR_WORKERS";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub kind: String,
    pub seed: u64,
    pub version: String,
    pub workers: usize,
    pub started_unix: u64,
    pub wall_time_secs: f64,
    pub files: Vec<FileEntry>,
    pub config: ExperimentConfig,
}

/// Files produced by one experiment, keyed by name.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub report: Value,
    pub files: BTreeMap<String, String>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, hash: &str, body: String) {
        self.files.insert(name.to_string(), format!("# config_hash={hash}\n{body}"));
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.parse().ok().filter(|&n| n > 0)
}

/// Computes every artifact on a pool of `workers` threads without touching
/// the file system.
pub fn compute(config: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(config))
}

/// Runs the experiment and writes its directory. Returns the manifest.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, workers: usize) -> Result<Manifest> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let artifacts = compute(config, workers)?;
    fs::create_dir_all(out)?;
    let mut entries = Vec::new();
    let report = serde_json::to_string_pretty(&artifacts.report)? + "\n";
    let all = std::iter::once(("report.json".to_string(), report)).chain(artifacts.files);
    for (name, body) in all {
        fs::write(out.join(&name), &body)?;
        entries.push(FileEntry {
            sha256: hex(&Sha256::digest(body.as_bytes())),
            name,
        });
    }
    let manifest = Manifest {
        config_hash: config.hash(),
        kind: config.kind().to_string(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        workers,
        started_unix,
        wall_time_secs: started.elapsed().as_secs_f64(),
        files: entries,
        config: config.clone(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Default output directory: `runs/<kind>-<first 12 hex digits of the hash>`.
pub fn default_out_dir(config: &ExperimentConfig) -> PathBuf {
    PathBuf::from("runs").join(format!("{}-{}", config.kind(), &config.hash()[..12]))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn dispatch(config: &ExperimentConfig) -> Result<Artifacts> {
    let hash = config.hash();
    let mut art = Artifacts::default();
    let results = match &config.params {
        Params::Simulate(p) => simulate(config, p, &hash, &mut art)?,
        Params::Survival(p) => survival(config, p, &hash, &mut art)?,
        Params::Speed(p) => speed(config, p, &hash, &mut art)?,
        Params::Clt(p) => clt(config, p, &hash, &mut art)?,
        Params::React(p) => reactivation(config, p, &hash, &mut art)?,
        Params::Criterion(p) => criterion(config, p, &hash, &mut art)?,
        Params::Oracle(p) => oracle(config, p, &hash, &mut art)?,
        Params::Probe(p) => probe(config, p, &hash, &mut art)?,
    };
    art.report = json!({
        "kind": config.kind().name(),
        "config_hash": hash,
        "law": config.law.label(),
        "seed": config.seed,
        "results": results,
    });
    Ok(art)
}

fn survival_csv(table: &[SurvivalPoint]) -> String {
    let mut s = String::from("n,survivors,total,estimate,lo,hi\n");
    for row in table {
        let _ = writeln!(s, "{},{},{},{},{},{}", row.n, row.survivors, row.total, row.estimate, row.lo, row.hi);
    }
    s
}

fn error_value(e: &Error) -> Value {
    json!({ "error": e.to_string() })
}

/// Steps the interval engine and the set-based reference side by side.
fn verified_run(config: &ExperimentConfig, index: u64, stop: Stop) -> Result<()> {
    let (mut field, mut sites) = estimators::replicate_world(&config.law, &config.environment, config.seed, index);
    let limit = match stop {
        Stop::Horizon(n) | Stop::UntilExtinct(n) => n,
        Stop::RightReaches(_) => engine::DEFAULT_CAP,
    };
    let mut fast = BasicState::init();
    let mut slow = SetState::init();
    while !fast.is_extinct() && fast.n < limit {
        fast = engine::step(&fast, Sides::Both, &mut field, &mut sites);
        slow = engine::step_reference(&slow, Sides::Both, &mut field, &mut sites);
        if !fast.matches(&slow) {
            return Err(Error::InvariantViolation(format!(
                "contiguity differential mismatch in replicate {index} at step {}",
                fast.n
            )));
        }
    }
    Ok(())
}

fn simulate(config: &ExperimentConfig, p: &SimulateParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let stop = match p.horizon {
        Some(h) => Stop::Horizon(h),
        None => Stop::UntilExtinct(p.cap),
    };
    if p.verify {
        (0..p.replicates)
            .into_par_iter()
            .try_for_each(|i| verified_run(config, i, stop))?;
    }
    let runs = estimators::simulate_summaries(&config.law, &config.environment, config.seed, p.replicates, stop)?;
    let mut csv = String::from("replicate,status,tau,l,r,m,m_plus,m_minus\n");
    let mut taus = Vec::new();
    let mut sizes = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let (status, tau) = match run.status {
            Status::Extinct { tau } => ("extinct", tau.to_string()),
            Status::Censored { .. } => ("censored", String::new()),
        };
        let cluster = run
            .cluster
            .map(|c| format!("{},{},{}", c.m, c.m_plus, c.m_minus))
            .unwrap_or_else(|| ",,".into());
        let _ = writeln!(csv, "{i},{status},{tau},{},{},{cluster}", run.last.l, run.last.r);
        if let Some(t) = run.tau() {
            taus.push(t as f64);
        }
        if let Some(c) = run.cluster {
            sizes.push(c.m as f64);
        }
    }
    art.csv("runs.csv", hash, csv);
    for i in 0..p.trajectories {
        let (mut field, mut sites) = estimators::replicate_world(&config.law, &config.environment, config.seed, i);
        let traj = engine::run(&mut field, &mut sites, stop)?;
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        art.csv(&format!("trajectory_{i}.csv"), hash, String::from_utf8_lossy(&buf).into_owned());
    }
    let censored = p.replicates - taus.len() as u64;
    let estimate = |name: &str, xs: &[f64]| {
        (!xs.is_empty()).then(|| stats::mean_estimate(name, xs, config.level).with_censored(censored))
    };
    Ok(json!({
        "replicates": p.replicates,
        "extinct": taus.len(),
        "censored": censored,
        "verified": p.verify,
        "mean_tau": estimate("tau", &taus),
        "mean_cluster": estimate("M", &sizes),
    }))
}

fn survival(config: &ExperimentConfig, p: &SurvivalParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let (law, env, seed, level) = (&config.law, &config.environment, config.seed, config.level);
    let tail = estimators::survival_tail(law, env, &p.ns, p.replicates, seed, level, p.cap)?;
    art.csv("survival.csv", hash, survival_csv(&tail.table));
    let cluster = match estimators::cluster_moments(law, env, p.replicates, p.cap, seed, level) {
        Ok(c) => {
            let mut csv = String::from("m,count\n");
            for (m, count) in &c.distribution {
                let _ = writeln!(csv, "{m},{count}");
            }
            art.csv("cluster.csv", hash, csv);
            serde_json::to_value(&c)?
        }
        Err(e) => error_value(&e),
    };
    let hazard = if p.hazard_nmax > 0 {
        let h = estimators::hazard_check(law, env, p.hazard_nmax, p.replicates, seed, p.min_samples)?;
        let mut csv = String::from("n,at_risk,events,hazard,sigma,bound,passes\n");
        for row in &h.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                row.n, row.at_risk, row.events, row.hazard, row.sigma, h.bound, row.passes
            );
        }
        art.csv("hazard.csv", hash, csv);
        serde_json::to_value(&h)?
    } else {
        Value::Null
    };
    let gamma = estimators::percolation_prob(law, env, p.gamma_horizon, p.replicates, seed, level)?;
    Ok(json!({
        "survival": {
            "replicates": tail.replicates,
            "censored": tail.censored,
            "fit": tail.fit,
            "dropped": tail.dropped,
            "warning": tail.warning,
        },
        "cluster": cluster,
        "hazard": hazard,
        "gamma": gamma,
    }))
}

fn speed(config: &ExperimentConfig, p: &SpeedParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let (law, seed, level) = (&config.law, config.seed, config.level);
    let lln = estimators::speed_lln(law, p.horizon, p.replicates, seed, level)?;
    let ledgers = estimators::renewal_ledgers(law, p.renewal_steps, p.replicates, seed, DepthPolicy::TailBudget(p.sigma_eps))?;
    let renewal = renewal::speed_from_ledgers(&ledgers, level);

    let mut csv = String::from("method,point,lo,hi,replicates\n");
    let _ = writeln!(csv, "lln,{},{},{},{}", lln.point, lln.ci.0, lln.ci.1, lln.replicates);
    if let Ok(r) = &renewal {
        let _ = writeln!(csv, "renewal,{},{},{},{}", r.point, r.ci.0, r.ci.1, r.replicates);
    }
    art.csv("speed.csv", hash, csv);

    let mut incs = String::from("replicate,j,d_tau,d_r\n");
    for (i, ledger) in ledgers.iter().enumerate() {
        for (j, inc) in ledger.increments().iter().enumerate() {
            let _ = writeln!(incs, "{i},{},{},{}", j + 1, inc.d_tau, inc.d_r);
        }
    }
    art.csv("increments.csv", hash, incs);
    if let Some(first) = ledgers.first() {
        let mut buf = Vec::new();
        first.write_csv(&mut buf)?;
        art.csv("ledger_0.csv", hash, String::from_utf8_lossy(&buf).into_owned());
    }
    Ok(json!({
        "lln": lln,
        "renewal": match &renewal {
            Ok(r) => serde_json::to_value(r)?,
            Err(e) => error_value(e),
        },
        "renewal_counts": ledgers.iter().map(|l| l.taus.len()).collect::<Vec<_>>(),
    }))
}

fn clt(config: &ExperimentConfig, p: &CltParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let outcome = estimators::clt_check(&config.law, p.n, p.replicates, p.mu, config.seed, p.alpha)?;
    let mut csv = String::from("n,replicates,mu_hat,psi_hat,mean_z,mean_tolerance,ks_distance,ks_critical,lilliefors_critical\n");
    match &outcome {
        CltOutcome::Tested(r) => {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                r.n, r.replicates, r.mu_hat, r.psi_hat, r.mean_z, r.mean_tolerance, r.ks_distance, r.ks_critical,
                r.lilliefors_critical
            );
        }
        CltOutcome::Degenerate { mu_hat, psi_hat } => {
            let _ = writeln!(csv, "{},{},{mu_hat},{psi_hat},0,0,,,", p.n, p.replicates);
        }
    }
    art.csv("clt.csv", hash, csv);
    let passes = match &outcome {
        CltOutcome::Tested(r) => Some(r.ks_passes() && r.centering_passes()),
        CltOutcome::Degenerate { .. } => None,
    };
    Ok(json!({ "outcome": outcome, "passes": passes }))
}

fn reactivation(config: &ExperimentConfig, p: &ReactParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let (law, seed) = (&config.law, config.seed);
    let speeds = estimators::react_speeds(law, p.p2, &[p.horizon], p.replicates, seed, p.window)?;
    let xs: Vec<f64> = speeds.iter().map(|v| v[0]).collect();
    let mut csv = String::from("replicate,r_over_n\n");
    for (i, x) in xs.iter().enumerate() {
        let _ = writeln!(csv, "{i},{x}");
    }
    art.csv("fronts.csv", hash, csv);
    let traj = react::run_react(law, p.p2, &estimators::replicate_stream(seed, 0), p.horizon, p.window)?;
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    art.csv("trajectory_0.csv", hash, String::from_utf8_lossy(&buf).into_owned());
    let budget = p.window.error_budget_per_step(law, p.p2);
    let mut mu = stats::mean_estimate("mu_prime", &xs, config.level);
    mu.method = "lln-reactivation".into();
    mu.uncertified = budget > 0.0;
    Ok(json!({
        "mu_prime": mu,
        "theta": react::drift_theta(law, p.p2),
        "window": p.window,
        "window_error_budget_per_step": budget,
    }))
}

fn criterion(config: &ExperimentConfig, p: &CriterionParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let outcome = percolation_criterion(&config.law, p.nmax, p.tol)?;
    let mut csv = String::from("n,a_n,log_a_n\n");
    for n in 0..p.rows {
        let _ = writeln!(csv, "{n},{},{}", config.law.a_n(n), config.law.log_a_n(n));
    }
    art.csv("a_n.csv", hash, csv);
    Ok(serde_json::to_value(outcome)?)
}

fn oracle(config: &ExperimentConfig, p: &OracleParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let spec = EnumerationSpec::new(config.law.clone(), p.horizon)?.with_budget(p.budget)?;
    let table = oracles::exact_tau_distribution(&spec)?;
    let mut csv = String::from("tau,probability\n");
    for (k, prob) in &table.tau {
        let _ = writeln!(csv, "{k},{prob}");
    }
    art.csv("tau.csv", hash, csv);
    let mut csv = String::from("m,probability\n");
    for (m, prob) in &table.cluster {
        let _ = writeln!(csv, "{m},{prob}");
    }
    art.csv("cluster.csv", hash, csv);
    let overshoot = match oracles::exact_overshoot_distribution(&config.law) {
        Ok(dist) => {
            let mut csv = String::from("m,probability\n");
            for (m, prob) in &dist {
                let _ = writeln!(csv, "{m},{prob}");
            }
            art.csv("overshoot.csv", hash, csv);
            serde_json::to_value(dist)?
        }
        Err(e) => error_value(&e),
    };
    Ok(json!({ "table": table, "overshoot": overshoot }))
}

fn probe(config: &ExperimentConfig, p: &ProbeParams, hash: &str, art: &mut Artifacts) -> Result<Value> {
    let report = estimators::probe_tail(&config.law, p.p2, p.u, p.horizon, p.width, p.probes, config.seed, config.level)?;
    let records: Vec<Value> = report.probes.iter().map(|pr| pr.to_json()).collect();
    art.files.insert("probes.json".into(), serde_json::to_string(&records)? + "\n");
    art.csv("beta_survival.csv", hash, survival_csv(&report.table));
    Ok(serde_json::to_value(&report)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(text: &str) -> ExperimentConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn constant_two_speed_is_exact() {
        let c = config("kind = \"speed\"\nhorizon = 200\nreplicates = 4\n[law]\nkind = \"constant\"\nc = 2\n");
        let art = compute(&c, 2).unwrap();
        assert_eq!(art.report["results"]["lln"]["point"], json!(2.0));
        assert!(art.report["results"]["renewal"]["error"].as_str().unwrap().contains("no renewal"));
    }

    #[test]
    fn oracle_reports_tau_two() {
        let c = config("kind = \"oracle\"\n[law]\nkind = \"finite\"\npmf = [0.5, 0, 0.5]\n");
        let art = compute(&c, 1).unwrap();
        let p = art.report["results"]["table"]["tau"]["2"].as_f64().unwrap();
        assert!((p - 0.03125).abs() < 1e-15);
        assert!(art.files["tau.csv"].contains("\n2,0.03125\n"));
    }

    #[test]
    fn simulate_verifies_against_reference() {
        let c = config(
            "kind = \"simulate\"\nreplicates = 200\nverify = true\ntrajectories = 2\n[law]\nkind = \"finite\"\npmf = [0.3, 0.3, 0.4]\n",
        );
        let art = compute(&c, 3).unwrap();
        assert_eq!(art.report["results"]["verified"], json!(true));
        assert!(art.files.contains_key("trajectory_1.csv"));
        assert!(art.files["runs.csv"].lines().nth(1).unwrap().starts_with("replicate,status"));
    }

    #[test]
    fn every_csv_carries_the_hash() {
        let c = config("kind = \"react\"\np2 = 0.5\nhorizon = 300\nreplicates = 3\n[law]\nkind = \"finite\"\npmf = [0.5, 0.5]\n");
        let art = compute(&c, 1).unwrap();
        let first = format!("# config_hash={}", c.hash());
        for (name, body) in &art.files {
            assert_eq!(body.lines().next().unwrap(), first, "{name}");
        }
        assert_eq!(art.report["config_hash"], json!(c.hash()));
    }
}
