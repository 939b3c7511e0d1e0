use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use rumour::config::{parse_config, ExperimentConfig, ExperimentKind};
use rumour::experiment::{compute, run_experiment, Manifest};
use sha2::{Digest, Sha256};

fn config_for(kind: ExperimentKind) -> ExperimentConfig {
    let text = match kind {
        ExperimentKind::Simulate => {
            "kind = \"simulate\"\nreplicates = 500\ntrajectories = 2\nverify = true\n[law]\nkind = \"finite\"\npmf = [0.5, 0, 0.5]\n"
        }
        ExperimentKind::Survival => {
            "kind = \"survival\"\nreplicates = 2000\nns = [1, 2, 3, 5]\nhazard_nmax = 10\nmin_samples = 100\ngamma_horizon = 100\n[law]\nkind = \"finite\"\npmf = [0.5, 0, 0.5]\n"
        }
        ExperimentKind::Speed => {
            "kind = \"speed\"\nhorizon = 500\nreplicates = 4\n[law]\nkind = \"geometric_min1\"\nq = 0.5\n"
        }
        ExperimentKind::Clt => {
            "kind = \"clt\"\nn = 100\nreplicates = 200\n[mu]\nkind = \"lln\"\nsteps = 2000\nreplicates = 4\n[law]\nkind = \"geometric_min1\"\nq = 0.5\n"
        }
        ExperimentKind::React => {
            "kind = \"react\"\np2 = 0.5\nhorizon = 300\nreplicates = 4\n[law]\nkind = \"finite\"\npmf = [0.5, 0.5]\n"
        }
        ExperimentKind::Criterion => {
            "kind = \"criterion\"\nrows = 20\n[law]\nkind = \"polynomial_tail\"\nalpha = 2\nc = 0.5\n"
        }
        ExperimentKind::Oracle => "kind = \"oracle\"\nhorizon = 2\n[law]\nkind = \"finite\"\npmf = [0.5, 0, 0.5]\n",
        ExperimentKind::Probe => {
            "kind = \"probe\"\np2 = 0.5\nhorizon = 100\nprobes = 50\n[law]\nkind = \"finite\"\npmf = [0.5, 0.5]\n"
        }
    };
    parse_config(text).unwrap()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    for kind in ExperimentKind::ALL {
        let config = config_for(kind);
        let one = compute(&config, 1).unwrap();
        let many = compute(&config, 4).unwrap();
        assert_eq!(one.files, many.files, "{kind}");
        assert_eq!(one.report, many.report, "{kind}");
    }
}

#[test]
fn reruns_are_byte_identical_and_manifests_are_complete() {
    for kind in ExperimentKind::ALL {
        let config = config_for(kind);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let manifest = run_experiment(&config, a.path(), 2).unwrap();
        run_experiment(&config, b.path(), 3).unwrap();
        let files = read_dir(a.path());
        assert_eq!(files, read_dir(b.path()), "{kind}");

        let on_disk: Manifest = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(on_disk.config_hash, config.hash());
        assert_eq!(on_disk.kind, kind.name());
        assert_eq!(on_disk.config, config);
        assert_eq!(on_disk.files.len(), files.len(), "{kind}");
        for entry in &manifest.files {
            let body = &files[&entry.name];
            let digest: String = Sha256::digest(body).iter().map(|b| format!("{b:02x}")).collect();
            assert_eq!(digest, entry.sha256, "{kind}/{}", entry.name);
            if entry.name.ends_with(".csv") {
                let first = std::str::from_utf8(body).unwrap().lines().next().unwrap();
                assert_eq!(first, format!("# config_hash={}", config.hash()), "{kind}/{}", entry.name);
            }
        }
        assert!(files.contains_key("report.json"));
    }
}

fn header(files: &BTreeMap<String, String>, name: &str) -> String {
    files[name].lines().nth(1).unwrap_or_else(|| panic!("{name} has no header")).to_string()
}

#[test]
fn csv_headers() {
    let expected = [
        (ExperimentKind::Simulate, "runs.csv", "replicate,status,tau,l,r,m,m_plus,m_minus"),
        (ExperimentKind::Simulate, "trajectory_0.csv", "n,l,r,active_count"),
        (ExperimentKind::Survival, "survival.csv", "n,survivors,total,estimate,lo,hi"),
        (ExperimentKind::Survival, "cluster.csv", "m,count"),
        (ExperimentKind::Survival, "hazard.csv", "n,at_risk,events,hazard,sigma,bound,passes"),
        (ExperimentKind::Speed, "speed.csv", "method,point,lo,hi,replicates"),
        (ExperimentKind::Speed, "increments.csv", "replicate,j,d_tau,d_r"),
        (ExperimentKind::Speed, "ledger_0.csv", "j,tau_j,r_tau_j,d_tau,d_r"),
        (ExperimentKind::React, "fronts.csv", "replicate,r_over_n"),
        (ExperimentKind::Criterion, "a_n.csv", "n,a_n,log_a_n"),
        (ExperimentKind::Oracle, "tau.csv", "tau,probability"),
        (ExperimentKind::Oracle, "cluster.csv", "m,probability"),
    ];
    let mut cache = BTreeMap::new();
    for (kind, name, want) in expected {
        let files = cache.entry(kind.name()).or_insert_with(|| compute(&config_for(kind), 2).unwrap().files);
        assert_eq!(header(files, name), want, "{kind}/{name}");
    }
}

#[test]
fn oracle_rows_are_exact() {
    let files = compute(&config_for(ExperimentKind::Oracle), 1).unwrap().files;
    let rows: Vec<&str> = files["tau.csv"].lines().skip(2).collect();
    assert!(rows.contains(&"1,0.5"), "{rows:?}");
}

fn rumour(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rumour"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("oracle.toml");
    fs::write(&good, "kind = \"oracle\"\nseed = 5\n[law]\nkind = \"finite\"\npmf = [0.5, 0, 0.5]\n").unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "kind = \"react\"\np2 = 1.5\nbogus = 1\n[law]\nkind = \"finite\"\npmf = [0.5, 0.6]\n").unwrap();

    let out = rumour(dir.path(), &["oracle", "--config", "oracle.toml", "--out", "o", "--seed", "99", "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!((manifest.seed, manifest.workers), (99, 2));

    let out = rumour(dir.path(), &["react", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for needle in ["p2 = 1.5", "unknown key `bogus`", "pmf mass 1.1"] {
        assert!(stderr.contains(needle), "missing {needle:?} in {stderr}");
    }

    let out = rumour(dir.path(), &["speed", "--config", "oracle.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not speed"));

    let out = rumour(dir.path(), &["check", "--config", "oracle.toml"]);
    assert!(out.status.success());
    let config = parse_config(&fs::read_to_string(&good).unwrap()).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("oracle {}", config.hash()));

    let out = rumour(dir.path(), &["oracle", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));

    let out = rumour(dir.path(), &["oracle", "--config", "oracle.toml"]);
    assert!(out.status.success());
    let runs: Vec<_> = fs::read_dir(dir.path().join("runs")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(runs, vec![format!("oracle-{}", &config.hash()[..12])]);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut kinds = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = parse_config(&fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(path.file_stem().unwrap().to_str().unwrap(), config.kind().name());
        kinds.push(config.kind().name());
    }
    kinds.sort_unstable();
    let mut all: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
    all.sort_unstable();
    assert_eq!(kinds, all);
}
