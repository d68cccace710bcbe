use std::fs;
use std::process::Command as Process;

use thinpore_cli::{
    config_hash, exit_code, run, run_cell, run_darcy, run_sweep, CliError, Command, ExperimentConfig, ForcingConfig,
    EXIT_VALIDATION,
};

const BASE: &str = r#"
seed = 3

[medium]
omega_extent = [0.5, 0.5]
epsilon = 0.25
a_eps = 0.25
regime = "critical"
obstacle_radius = 0.25
mu = 1.0
g = 1.0

[grid]
cell_resolution = 8

[forcing]
f1 = [{ c = 0.5 }, { c = -1.0, py = 1 }]
f2 = [{ c = -0.5 }, { c = 1.0, px = 1 }]

[sweep]
directions = 8
magnitudes = [1.0, 2.0]
xi = [[1.0, 0.0]]
epsilons = [0.25, 0.125]
"#;

fn base() -> ExperimentConfig {
    ExperimentConfig::from_toml(BASE).unwrap()
}

fn field_of(e: CliError) -> String {
    match e {
        CliError::Validation { field, .. } => field,
        other => panic!("expected a validation error, got {other}"),
    }
}

#[test]
fn config_round_trips() {
    let cfg = base();
    let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.to_toml(), again.to_toml());
    let mut full = cfg.clone();
    full.solver.tol_rel = Some(1e-9);
    full.darcy.eta = Some(0.125);
    full.medium.lambda = Some(1.0);
    full.command = Some(Command::EpsilonStudy);
    assert_eq!(ExperimentConfig::from_toml(&full.to_toml()).unwrap(), full);
}

#[test]
fn hash_tracks_content() {
    let cfg = base();
    assert_eq!(config_hash(&cfg), config_hash(&base()));
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(config_hash(&cfg), config_hash(&other));
    assert_eq!(config_hash(&cfg).len(), 64);
}

#[test]
fn unknown_keys_are_rejected() {
    let text = BASE.replace("seed = 3", "seed = 3\ncolour = 1");
    assert!(matches!(ExperimentConfig::from_toml(&text), Err(CliError::Parse(_))));
}

#[test]
fn forcing_polynomials() {
    let f = base().forcing;
    assert_eq!(f.eval([0.25, 0.25]), [0.25, -0.25]);
    assert_eq!(ForcingConfig::swirl(1.0, [0.5, 0.5]), f);
    assert_eq!(ForcingConfig::constant([2.0, -1.0]).eval([7.0, 3.0]), [2.0, -1.0]);
}

#[test]
fn bad_tiling_names_the_field() {
    let mut cfg = base();
    cfg.medium.a_eps = 0.3;
    let e = run(Command::Single, &cfg).unwrap_err();
    assert_eq!(e.exit_code(), EXIT_VALIDATION);
    assert_eq!(field_of(e), "medium.a_eps");

    let mut cfg = base();
    cfg.sweep.epsilons = vec![0.25, 0.15];
    assert_eq!(field_of(run(Command::VerifyApriori, &cfg).unwrap_err()), "sweep.a_eps[1]");
}

#[test]
fn validation_errors_carry_paths() {
    let mut cfg = base();
    cfg.medium.mu = -1.0;
    assert_eq!(field_of(run(Command::Cell, &cfg).unwrap_err()), "medium.mu");
    let mut cfg = base();
    cfg.solver.relaxation = Some(3.0);
    assert_eq!(field_of(run(Command::Cell, &cfg).unwrap_err()), "solver.relaxation");
    let mut cfg = base();
    cfg.sweep.epsilons = vec![0.125, 0.25];
    assert_eq!(field_of(run(Command::EpsilonStudy, &cfg).unwrap_err()), "sweep.epsilons[1]");
    let mut cfg = base();
    cfg.command = Some(Command::Darcy);
    assert_eq!(field_of(run(Command::Sweep, &cfg).unwrap_err()), "command");
    let mut cfg = base();
    cfg.medium.regime = thinpore_cli::config::RegimeName::Supercritical;
    cfg.medium.a_eps = 0.5;
    assert_eq!(field_of(run(Command::VerifyApriori, &cfg).unwrap_err()), "sweep.a_eps");
}

#[test]
fn empty_sweep_gives_empty_report() {
    let mut cfg = base();
    cfg.sweep.magnitudes.clear();
    let r = run_sweep(&cfg).unwrap();
    assert!(r.records.is_empty());
    assert_eq!(exit_code(&r), 0);
    let csv = r.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("config_hash,version,command,key"));
}

#[test]
fn records_carry_the_hash() {
    let mut cfg = base();
    cfg.medium.g = 0.0;
    cfg.sweep.xi = vec![[1.0, 0.0], [0.0, 2.0]];
    let r = run_cell(&cfg).unwrap();
    let h = config_hash(&cfg);
    assert_eq!(r.records.len(), 2);
    assert!(r.records.iter().all(|x| x.config_hash == h && x.converged));
    assert_eq!(exit_code(&r), 0);
}

#[test]
fn darcy_driver_balances_constant_forcing() {
    let mut cfg = base();
    cfg.forcing = ForcingConfig::constant([0.3, 0.1]);
    cfg.darcy.dims = [6, 6];
    let r = run_darcy(&cfg).unwrap();
    assert!(r.records[0].converged);
    assert!(r.records[0].error.unwrap() <= 1e-10);
    assert!(r.files.iter().any(|(n, _)| n == "darcy.csv"));
}

#[test]
fn nonconvergence_maps_to_exit_three() {
    let mut cfg = base();
    cfg.solver.max_outer = Some(1);
    cfg.solver.tol_rel = Some(1e-14);
    cfg.sweep.xi = vec![[30.0, 0.0]];
    let r = run_cell(&cfg).unwrap();
    assert!(!r.records[0].converged);
    assert_eq!(exit_code(&r), 3);
}

#[test]
fn binary_writes_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.toml");
    let mut cfg = base();
    cfg.medium.regime = thinpore_cli::config::RegimeName::Supercritical;
    cfg.medium.a_eps = 0.5;
    cfg.sweep.xi = vec![[4.0, 0.0], [0.0, 3.0]];
    fs::write(&cfg_path, cfg.to_toml()).unwrap();
    let bin = env!("CARGO_BIN_EXE_thinpore");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let st = Process::new(bin)
            .args(["cell", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
        outputs.push((
            fs::read(out.join("report.csv")).unwrap(),
            fs::read(out.join("summary.txt")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[medium]\n").unwrap();
    let st = Process::new(bin).args(["cell", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(st.code(), Some(2));
}
