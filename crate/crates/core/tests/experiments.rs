use graphlb_core::experiment::{
    run_all, run_experiment, run_with_retry, validate, CouplingAuditParams, ExperimentError, FluidParams, Params, Profile,
    SuiteConfig, EXPERIMENTS,
};

const SMALL_FLUID: &str = "[suite]\nexperiments = [\"fig_fluid\"]\nseed = 3\n\n[fig_fluid]\nn = 300\nreplications = 2\nhorizon = 2.0\n";

fn read_dir(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn overrides_merge_over_profile_defaults() {
    let cfg = SuiteConfig::parse(SMALL_FLUID, None).unwrap();
    assert_eq!(cfg.profile, Profile::Ci);
    assert_eq!(cfg.seed, 3);
    let p: FluidParams = cfg.params("fig_fluid").unwrap();
    assert_eq!((p.n, p.replications, p.horizon), (300, 2, 2.0));
    let defaults = FluidParams::defaults(Profile::Ci);
    assert_eq!((p.lambda, p.tolerance, p.degree_rule.as_str()), (defaults.lambda, defaults.tolerance, "sqrt"));

    let full = SuiteConfig::parse(SMALL_FLUID, Some(Profile::Full)).unwrap();
    let pf: FluidParams = full.params("fig_fluid").unwrap();
    assert_eq!(pf.n, 300);
    assert_eq!(pf.tolerance, FluidParams::defaults(Profile::Full).tolerance);
}

#[test]
fn nested_sections_merge_key_by_key() {
    let text = "[suite]\nexperiments = [\"coupling_audit\"]\n\n[coupling_audit]\nns = [100, 200]\ntie_rule = \"id\"\n";
    let cfg = SuiteConfig::parse(text, None).unwrap();
    let p: CouplingAuditParams = cfg.params("coupling_audit").unwrap();
    assert_eq!(p.ns, vec![100, 200]);
    assert_eq!(p.tie_rule, "id");
    assert_eq!(p.replications, 5);
}

#[test]
fn config_errors_are_reported() {
    let unknown_list = "[suite]\nexperiments = [\"fig_fluid\", \"fig_missing\"]\n";
    assert!(matches!(SuiteConfig::parse(unknown_list, None), Err(ExperimentError::UnknownExperiment(n)) if n == "fig_missing"));
    let unknown_section = "[suite]\nexperiments = []\n[fig_other]\nn = 1\n";
    assert!(matches!(SuiteConfig::parse(unknown_section, None), Err(ExperimentError::UnknownExperiment(_))));
    assert!(matches!(SuiteConfig::parse("experiments = []\n", None), Err(ExperimentError::Config(_))));
    assert!(matches!(SuiteConfig::parse("[suite\n", None), Err(ExperimentError::Config(_))));
    let twice = "[suite]\nexperiments = [\"fig_fluid\", \"fig_fluid\"]\n";
    assert!(matches!(SuiteConfig::parse(twice, None), Err(ExperimentError::Config(_))));

    let bad_key = "[suite]\nexperiments = [\"fig_fluid\"]\n[fig_fluid]\nnn = 10\n";
    let cfg = SuiteConfig::parse(bad_key, None).unwrap();
    assert!(matches!(validate(&cfg), Err(ExperimentError::Config(_))));
    let bad_type = "[suite]\nexperiments = [\"fig_fluid\"]\n[fig_fluid]\nn = \"many\"\n";
    assert!(validate(&SuiteConfig::parse(bad_type, None).unwrap()).is_err());
}

#[test]
fn invalid_section_fails_before_any_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let text = "[suite]\nexperiments = [\"fig_fluid\", \"coupling_audit\"]\n[fig_fluid]\nn = 200\nhorizon = 1.0\n[coupling_audit]\nbogus = 1\n";
    let cfg = SuiteConfig::parse(text, None).unwrap();
    assert!(run_all(&cfg, &out).is_err());
    assert!(!out.exists());
}

#[test]
fn empty_suite_writes_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SuiteConfig::parse("[suite]\nexperiments = []\n", None).unwrap();
    let report = run_all(&cfg, dir.path()).unwrap();
    assert!(report.passed());
    assert_eq!(report.n_checks(), 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("summary.txt")).unwrap(), "");
    let checks = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert_eq!(checks, "experiment,check,measured,tolerance,pass\n");
}

#[test]
fn suite_outputs_are_byte_identical_across_runs() {
    let cfg = SuiteConfig::parse(SMALL_FLUID, None).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_all(&cfg, a.path()).unwrap();
    run_all(&cfg, b.path()).unwrap();
    let (fa, fb) = (read_dir(a.path()), read_dir(b.path()));
    assert_eq!(fa.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(), ["checks.csv", "fig_fluid.csv", "report.txt", "summary.txt"]);
    assert_eq!(fa, fb);

    let other = SuiteConfig::parse(&SMALL_FLUID.replace("seed = 3", "seed = 4"), None).unwrap();
    let c = tempfile::tempdir().unwrap();
    run_all(&other, c.path()).unwrap();
    let table = |files: &[(String, Vec<u8>)]| files.iter().find(|f| f.0 == "fig_fluid.csv").unwrap().1.clone();
    assert_ne!(table(&fa), table(&read_dir(c.path())));
}

#[test]
fn fluid_table_has_documented_columns() {
    let cfg = SuiteConfig::parse(SMALL_FLUID, None).unwrap();
    let r = run_experiment(&cfg, "fig_fluid", 9).unwrap();
    let (stem, csv) = &r.tables[0];
    assert_eq!(stem, "fig_fluid");
    assert_eq!(csv.lines().next().unwrap(), "t,fluid_q1,fluid_q2,errg_q1,errg_q2,clique_q1,clique_q2");
    assert!(r.check("errg_gap").is_some() && r.check("clique_gap").is_some());
}

#[test]
fn retry_uses_a_fresh_seed_and_records_it() {
    let text = "[suite]\nexperiments = [\"fig_fluid\"]\nseed = 1\n[fig_fluid]\nn = 100\nreplications = 1\nhorizon = 1.0\ntolerance = -1.0\n";
    let cfg = SuiteConfig::parse(text, None).unwrap();
    let r = run_with_retry(&cfg, "fig_fluid").unwrap();
    assert_eq!(r.attempts, 2);
    assert!(!r.passed());
    let first = run_experiment(&cfg, "fig_fluid", graphlb_core::experiment::experiment_seed(1, "fig_fluid")).unwrap();
    assert_ne!(first.seed, r.seed);

    let easy = SuiteConfig::parse(&text.replace("tolerance = -1.0", "tolerance = 1.0"), None).unwrap();
    assert_eq!(run_with_retry(&easy, "fig_fluid").unwrap().attempts, 1);
}

#[test]
fn every_experiment_resolves_default_parameters() {
    for profile in [Profile::Ci, Profile::Full] {
        let cfg = SuiteConfig::with_defaults(&EXPERIMENTS, 0, profile).unwrap();
        validate(&cfg).unwrap();
    }
}
