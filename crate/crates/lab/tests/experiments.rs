use std::fs;

use khessian_lab::{parse_config, run_experiment, verify_all, write_report, LabError};

fn small(kind: &str, extra: &str) -> khessian_lab::ExperimentConfig {
    parse_config(&format!(
        "[experiment]\nkind = \"{kind}\"\nseed = 11\n[problem]\nn = 2\nk = 2\nN = 8\n{extra}"
    ))
    .unwrap()
}

#[test]
fn same_seed_gives_byte_identical_outputs() {
    let cfg = small("stability", "[stability]\nts = [0.2, 0.1]\n");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut written = Vec::new();
    for d in &dirs {
        let report = run_experiment(&cfg).unwrap();
        written.push(write_report(&report, d.path()).unwrap());
    }
    assert_eq!(written[0].len(), written[1].len());
    for (a, b) in written[0].iter().zip(&written[1]) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn zero_perturbation_leaves_the_solution_in_place() {
    let cfg = small("stability", "[stability]\nts = [0.0]\n");
    let report = run_experiment(&cfg).unwrap();
    let t = report.table("stability").unwrap();
    assert_eq!(t.column("lp_distance").unwrap(), vec![0.0]);
    assert!(t.column("sup_distance").unwrap()[0] <= 1e-12);
}

#[test]
fn solve_reports_a_converged_residual() {
    let cfg = small("solve", "[density]\npreset = \"sine\"\namplitude = 0.3\n");
    let report = run_experiment(&cfg).unwrap();
    assert!(report.metrics["residual_sup"] <= 1e-8);
    assert!(report.metrics["cone_margin_min"] > 0.0);
    assert!(report.table("newton").is_some());
}

#[test]
fn degenerate_form_runs_the_continuation() {
    let cfg = small("solve", "[omega]\npreset = \"slice-degenerate\"\n");
    let report = run_experiment(&cfg).unwrap();
    assert!(report.checks.iter().all(|c| c.id == "AC7"));
    assert!(!report.checks.is_empty());
}

#[test]
fn degenerate_form_rejects_the_exponential_mode() {
    let cfg = small("solve", "mode = \"exponential\"\n[omega]\npreset = \"slice-degenerate\"\n");
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, LabError::Validation { ref key, .. } if key == "problem.mode"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn envelope_produces_a_rate_table() {
    let cfg = small("envelope", "[envelope]\nschedule = [2, 4, 8, 16]\noracle = false\n");
    let report = run_experiment(&cfg).unwrap();
    let errors = report.table("envelope_rate").unwrap().column("sup_error").unwrap();
    assert_eq!(errors.len(), 4);
    assert!(errors.iter().all(|e| e.is_finite() && *e >= 0.0));
}

#[test]
fn radial_scan_passes_its_checks() {
    let mut cfg = small("radial", "");
    cfg.problem.k = 1;
    let report = run_experiment(&cfg).unwrap();
    assert!(report.all_pass(), "{:#?}", report.checks);
}

#[test]
fn verify_on_small_problems() {
    for (n, k) in [(2, 2), (3, 1)] {
        let cfg = parse_config(&format!(
            "[experiment]\nkind = \"verify\"\n[problem]\nn = {n}\nk = {k}\nN = 4\n\
             [verify]\ncriteria = [1, 8, 10]\ngarding_samples = 500\ncomparison_pairs = 3\nstokes_fields = 5\n"
        ))
        .unwrap();
        let report = verify_all(&cfg);
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).map(|c| c.line()).collect();
        assert!(failed.is_empty(), "n={n} k={k}: {failed:#?}");
    }
}
