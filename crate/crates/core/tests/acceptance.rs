//! Acceptance suite. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities (run with `--nocapture` to see them) and then asserts.

use std::sync::Arc;
use std::time::{Duration, Instant};

use witnesskit_core::experiments::{
    enumerate_check, hoeffding_slack, run_trials, run_trials_with_threads, ExperimentConfig,
    ExperimentReport, ExperimentSpec, HashKind,
};
use witnesskit_core::numtheory::Nat;
use witnesskit_core::reductions::wphp::{
    output_count_audit, AdversarialWphpSolver, CanonicalWphpSolver, ConstantWphpSolver, ModHash,
    WphpConfig,
};

fn report_line(name: &str, passed: bool, detail: &str) {
    println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn exhaustive(name: &str, check: &str, limit: Option<Duration>) {
    let (result, elapsed) = timed(|| enumerate_check(check).unwrap());
    let in_time = limit.is_none_or(|l| elapsed < l);
    let passed = result.passed && in_time;
    let detail = format!(
        "{} cases in {:.2?}{}{}",
        result.cases,
        elapsed,
        limit.map_or(String::new(), |l| format!(" (limit {l:?})")),
        result.counterexample.as_deref().map_or(String::new(), |c| format!(", counterexample: {c}"))
    );
    report_line(name, passed, &detail);
    assert!(passed, "{detail}");
}

fn parity_run(m: usize, k: usize, rows: usize, trials: u64, seed: u64) -> (ExperimentReport, Duration) {
    let cfg = ExperimentConfig {
        spec: ExperimentSpec::Parity { m, k, rows },
        trials,
        master_seed: seed,
        solver: "scripted".into(),
    };
    timed(|| run_trials(&cfg).unwrap())
}

#[test]
fn par_unpar_bijection_up_to_12() {
    exhaustive("par/unpar bijection, m <= 12", "par-unpar-bijection", Some(Duration::from_secs(10)));
}

#[test]
fn par_linearity_up_to_8() {
    exhaustive("par linearity, m <= 8", "par-linearity", None);
}

#[test]
fn four_roots_complete_below_30() {
    exhaustive("four-root completeness, p, q < 30", "four-roots", Some(Duration::from_secs(30)));
}

#[test]
fn factor_extraction_law_below_30() {
    exhaustive("factor extraction law, p, q < 30", "factor-extraction", None);
}

#[test]
fn blinding_uniform_at_2_and_3() {
    exhaustive("blinding uniformity, m = 2, 3", "blinding-uniformity", Some(Duration::from_secs(60)));
}

#[test]
fn parity_abort_bound_and_success() {
    let (report, elapsed) = parity_run(30, 5, 30, 10_000, 42);
    let slack = hoeffding_slack(10_000, 0.01);
    assert!((slack - 0.0163).abs() < 5e-5);

    let abort = report.rate("parity_abort");
    let line = 1.0 / 6.0 + 0.0163;
    let passed = abort <= line && elapsed < Duration::from_secs(60);
    let detail = format!("abort rate {abort:.4} <= 1/6 + 0.0163 = {line:.4}, {elapsed:.2?} (limit 60s)");
    report_line("parity abort bound, m = 30, k = 5", passed, &detail);

    let decided = report.count("parity_decision");
    let correct = report.metric("decisions_correct");
    let success = report.rate("parity_decision");
    let passed_success = decided > 0 && correct == decided && success >= 2.0 / 3.0;
    let detail_success = format!("{correct}/{decided} decisions correct, success rate {success:.4} >= 2/3");
    report_line("parity success, m = 30, k = 5", passed_success, &detail_success);

    assert!(passed, "{detail}");
    assert!(passed_success, "{detail_success}");
}

#[test]
fn rabin_per_index_law() {
    let cfg = ExperimentConfig {
        spec: ExperimentSpec::Factor {
            prime_bits: 16,
            k: 5,
            m: None,
        },
        trials: 1000,
        master_seed: 42,
        solver: "canonical".into(),
    };
    let (report, elapsed) = timed(|| run_trials(&cfg).unwrap());
    let per_index = report.rates["per_unused_index_factor"];
    let covers_half = per_index.wilson_low <= 0.5 && 0.5 <= per_index.wilson_high;
    let m = report.metric("min_sequence_len") as i32;
    let bound = 1.0 - 2f64.powi(-(m - 5)) - 0.05;
    let success = report.rate("factor");
    let passed = per_index.total > 0 && covers_half && success >= bound && elapsed < Duration::from_secs(120);
    let detail = format!(
        "{}/{} unused indices split n, 95% CI [{:.4}, {:.4}]; success {success:.4} >= {bound:.4} (m >= {m}); {elapsed:.2?} (limit 120s)",
        per_index.count, per_index.total, per_index.wilson_low, per_index.wilson_high
    );
    report_line("rabin per-index law, 16-bit primes, k = 5", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn wphp_collision_rate() {
    let cfg = ExperimentConfig {
        spec: ExperimentSpec::Wphp {
            n: 1024,
            k: 2,
            seq_len: 11,
            hash: HashKind::Mod,
        },
        trials: 1000,
        master_seed: 42,
        solver: "canonical".into(),
    };
    let (report, elapsed) = timed(|| run_trials(&cfg).unwrap());
    let rate = report.rate("collision");
    let passed = rate >= 0.99 && elapsed < Duration::from_secs(60);
    let detail = format!("collision rate {rate:.4} >= 0.99, {elapsed:.2?} (limit 60s)");
    report_line("wphp collision, n = 1024, L = 11, k = 2", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn output_count_audit_at_n4() {
    let cfg = WphpConfig::new(Nat::from(4u32), 1, Arc::new(ModHash)).with_seq_len(2);
    let audits = [
        ("canonical", output_count_audit(&cfg, &mut CanonicalWphpSolver::new(1)).unwrap()),
        ("adversarial", output_count_audit(&cfg, &mut AdversarialWphpSolver::new(1)).unwrap()),
        ("constant", output_count_audit(&cfg, &mut ConstantWphpSolver).unwrap()),
    ];
    let passed = audits.iter().all(|(_, a)| a.bound == 256 && a.distinct_outputs <= 256);
    let detail = audits
        .iter()
        .map(|(name, a)| format!("{name}: {}/{} over {} inputs", a.distinct_outputs, a.bound, a.inputs))
        .collect::<Vec<_>>()
        .join("; ");
    report_line("output-count audit, n = 4, L = 2, k = 1", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn budget_hierarchy() {
    let (wide, _) = parity_run(64, 4, 64, 10_000, 42);
    let wide_ok = wide.warnings.is_empty() && wide.rate("parity_decision") >= 2.0 / 3.0;

    // 8 < 3 * 4, so the solver's abort rate may exceed 1/3 and it does
    let (narrow, _) = parity_run(8, 4, 8, 10_000, 42);
    let narrow_abort = narrow.rate("parity_abort");
    let narrow_ok = !narrow.warnings.is_empty() && narrow_abort > 1.0 / 3.0 + narrow.hoeffding_slack;

    let passed = wide_ok && narrow_ok;
    let detail = format!(
        "A = 64, B = 4: success {:.4} >= 2/3, {} warnings; A = 8, B = 4: abort {narrow_abort:.4} > 1/3 + {:.4}, warning {:?}",
        wide.rate("parity_decision"),
        wide.warnings.len(),
        narrow.hoeffding_slack,
        narrow.warnings.first()
    );
    report_line("budget hierarchy, A = 64 vs A = 8 at B = 4", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn reruns_are_byte_identical() {
    let configs = [
        (ExperimentSpec::Parity { m: 30, k: 5, rows: 30 }, "adaptive", 2000),
        (ExperimentSpec::Factor { prime_bits: 12, k: 3, m: None }, "canonical", 200),
        (
            ExperimentSpec::Wphp { n: 64, k: 1, seq_len: 7, hash: HashKind::DigitSum },
            "canonical",
            500,
        ),
    ];
    let mut mismatches = Vec::new();
    for (spec, solver, trials) in configs {
        let cfg = ExperimentConfig {
            spec,
            trials,
            master_seed: 2024,
            solver: solver.into(),
        };
        let first = run_trials(&cfg).unwrap().to_json();
        let second = run_trials(&cfg).unwrap().to_json();
        let single = run_trials_with_threads(&cfg, Some(1)).unwrap().to_json();
        if first != second || first != single {
            mismatches.push(cfg.spec.name());
        }
    }
    let passed = mismatches.is_empty();
    let detail = format!("parity, factor and wphp reports rerun identically; mismatches: {mismatches:?}");
    report_line("reproducibility", passed, &detail);
    assert!(passed, "{detail}");
}
