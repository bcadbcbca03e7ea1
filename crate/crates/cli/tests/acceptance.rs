//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line to stderr, even when output is captured.
//!
//! The tests share a lock: several explore the full baseline model, and the
//! trend test needs most of the machine's memory for its largest count.

use std::io::Write as _;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use twincheck::checker::{brute_force_explore, count_states, explore, Bounds, Counts};
use twincheck::kernel::CommandName;
use twincheck::leakage::{monte_carlo_check, HealthModel};
use twincheck::pgm::{augment, channel_name, received_name, uav_pgm};
use twincheck::uav::{build_model, UavConfig, Variant};
use twincheck_cli::{run_check, RunReport};

/// Criterion 1: total wall-clock budget for the buggy and fixed P8 runs.
const P8_BUDGET: Duration = Duration::from_secs(5 * 60);
/// Criterion 6: nodes and edges added by augmenting the two-sensor graph.
const AUGMENT_ADDED_NODES: usize = 6;
const AUGMENT_REPLACEMENT_EDGES: usize = 9;
/// Criterion 7: Monte-Carlo parameters, tolerance and budget.
const MC_RATES: [f64; 2] = [0.01, 0.05];
const MC_SAMPLES: u64 = 1000;
const MC_TRIALS: usize = 10_000;
const MC_EPSILONS: [f64; 3] = [0.01, 0.02, 0.05];
const MC_STANDARD_ERRORS: f64 = 3.0;
const MC_BUDGET: Duration = Duration::from_secs(60);
const MC_SEED: u64 = 2024;
/// Criterion 8: worker counts compared.
const WORKERS: [usize; 2] = [1, 8];

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn line(criterion: u32, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {criterion}: {verdict} {detail}");
}

fn baseline(variant: Variant) -> UavConfig {
    UavConfig::baseline().with_variant(variant)
}

fn fixed_report() -> &'static RunReport {
    static REPORT: OnceLock<RunReport> = OnceLock::new();
    REPORT.get_or_init(|| run_check(&baseline(Variant::Fixed), None, 1, None).unwrap())
}

fn verdict(report: &RunReport, name: &str) -> bool {
    report.result(name).expect("property was checked").passed()
}

#[test]
fn criterion_1_p8_counterexample() {
    let _g = serial();
    let start = Instant::now();
    let buggy = run_check(&baseline(Variant::BuggyP8), Some("P8"), 1, None).unwrap();
    let fixed = run_check(&baseline(Variant::Fixed), Some("P8"), 1, None).unwrap();
    let elapsed = start.elapsed();

    let uav = build_model(&baseline(Variant::BuggyP8)).unwrap();
    let trace = buggy.result("P8").and_then(|r| r.trace.clone()).expect("P8 counterexample");
    // Executed commands after each execute step, in trace order.
    let executions: Vec<_> = trace
        .prefix
        .iter()
        .filter(|s| s.process.as_deref() == Some("ExecuteControl"))
        .map(|s| uav.decode(&s.state).u_executed.expect("executed command"))
        .collect();
    let last_two_stale = matches!(executions.as_slice(), [.., a, b] if b.t <= a.t);

    // backup execution, dynamic compute+emit, receive, dynamic execution
    let mut stage = 0;
    let mut prev = uav.decode(&trace.prefix[0].state);
    for step in &trace.prefix[1..] {
        let cur = uav.decode(&step.state);
        let name = step.process.as_deref().unwrap_or("");
        let hit = match stage {
            0 => name == "ExecuteControl" && cur.u_executed.is_some_and(|c| c.name == CommandName::Backup),
            1 => name == "ComputeEmitControl" && cur.u.is_some_and(|c| c.name == CommandName::Dynamic),
            2 => name.starts_with("ReceiveControl") && cur.u_in != prev.u_in,
            3 => name == "ExecuteControl" && cur.u_executed.is_some_and(|c| c.name == CommandName::Dynamic),
            _ => false,
        };
        if hit {
            stage += 1;
        }
        prev = cur;
    }

    let passed = !verdict(&buggy, "P8") && verdict(&fixed, "P8") && last_two_stale && stage == 4 && elapsed < P8_BUDGET;
    line(
        1,
        passed,
        &format!(
            "buggy-p8 P8={} ({} steps, ordered stages {stage}/4, final executes non-increasing={last_two_stale}), fixed P8={}, {:.1}s of {}s",
            buggy.result("P8").unwrap().verdict,
            trace.prefix.len(),
            fixed.result("P8").unwrap().verdict,
            elapsed.as_secs_f64(),
            P8_BUDGET.as_secs(),
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_2_termination() {
    let _g = serial();
    let report = fixed_report();
    let passed = verdict(report, "termination");
    let counts = report.counts.unwrap();
    line(2, passed, &format!("fixed baseline termination over {} distinct states", counts.distinct));
    assert!(passed);
}

#[test]
fn criterion_3_oracle_equivalence() {
    let _g = serial();
    let configs = [
        UavConfig { sensors: 1, eta: 1, c_max: 1, t_max: 2, ..UavConfig::baseline() },
        UavConfig { sensors: 2, eta: 1, c_max: 1, t_max: 2, noise: 0, ..UavConfig::baseline() },
        UavConfig { sensors: 1, eta: 2, c_max: 2, t_max: 3, noise: 0, ..UavConfig::baseline() },
    ];
    let mut detail = vec![];
    let mut passed = true;
    for cfg in &configs {
        let uav = build_model(cfg).unwrap();
        let (graph, counts) = explore(&uav.model, Bounds::NONE).unwrap();
        let (naive, naive_counts) = brute_force_explore(&uav.model, Bounds::NONE).unwrap();
        let same = counts == naive_counts && graph.edge_multiset() == naive.edge_multiset();
        passed &= same;
        detail.push(format!(
            "M={} eta={} c_max={} t_max={}: {}/{} {}",
            cfg.sensors,
            cfg.eta,
            cfg.c_max,
            cfg.t_max,
            counts.distinct,
            counts.total,
            if same { "identical" } else { "DIFFERENT" }
        ));
    }
    line(3, passed, &detail.join("; "));
    assert!(passed);
}

fn count(cfg: &UavConfig) -> Counts {
    count_states(&build_model(cfg).unwrap().model, Bounds::NONE).unwrap()
}

#[test]
fn criterion_4_state_space_trends() {
    let _g = serial();
    let base = UavConfig::baseline();
    let reference = count(&base);
    let variations = [
        ("+1 sensor", UavConfig { sensors: base.sensors + 1, ..base.clone() }),
        ("+1 delay window", UavConfig { eta: base.eta + 1, ..base.clone() }),
        ("+1 noise amplitude", UavConfig { noise: base.noise + 1, ..base.clone() }),
        ("+1 initial health", UavConfig { s0: base.s0 + 1, d0: base.d0 + 1, ..base.clone() }),
    ];
    let mut detail = vec![format!("baseline {}", reference.distinct)];
    let mut passed = true;
    for (label, cfg) in &variations {
        let c = count(cfg);
        let up = c.distinct > reference.distinct;
        passed &= up;
        detail.push(format!("{label} {}{}", c.distinct, if up { "" } else { " (not larger)" }));
    }
    // Reported only: the direction is not part of the criterion.
    let split = count(&UavConfig { split_damage: true, ..base.clone() });
    detail.push(format!("split damage {} (not asserted)", split.distinct));
    line(4, passed, &detail.join(", "));
    assert!(passed);
}

#[test]
fn criterion_5_property_suite() {
    let _g = serial();
    let fixed = fixed_report();
    let broken = run_check(&baseline(Variant::BrokenP3), Some("P2"), 1, None).unwrap();
    let fixed_ok = ["P4", "P5", "P7"].iter().all(|p| verdict(fixed, p));
    let broken_fails = !verdict(&broken, "P2");
    let passed = fixed_ok && broken_fails;
    let listed: Vec<String> =
        ["P4", "P5", "P7"].iter().map(|p| format!("{p}={}", fixed.result(p).unwrap().verdict)).collect();
    line(5, passed, &format!("fixed {}; broken-p3 P2={}", listed.join(" "), broken.result("P2").unwrap().verdict));
    assert!(passed);
}

#[test]
fn criterion_6_augmentation() {
    let _g = serial();
    let pgm = uav_pgm(2);
    let out = augment(&pgm).unwrap();
    let distributed: Vec<(String, String)> =
        pgm.edges().filter(|(_, _, f)| f.distributed).map(|(s, d, _)| (s.into(), d.into())).collect();
    let added_nodes = out.nodes().filter(|n| !pgm.contains_node(n)).count();
    let added_edges: Vec<(String, String)> =
        out.edges().filter(|(s, d, _)| pgm.edge(s, d).is_none()).map(|(s, d, _)| (s.into(), d.into())).collect();
    let expected: Vec<(String, String)> = {
        let mut v: Vec<(String, String)> = distributed
            .iter()
            .flat_map(|(s, d)| {
                let (inn, ch) = (received_name(s), channel_name(s));
                [(s.clone(), inn.clone()), (ch, inn.clone()), (inn, d.clone())]
            })
            .collect();
        v.sort();
        v
    };
    let removed = distributed.iter().all(|(s, d)| out.edge(s, d).is_none());
    let idempotent = augment(&out).unwrap() == out;
    let passed = distributed.len() == 3
        && added_nodes == AUGMENT_ADDED_NODES
        && added_edges.len() == AUGMENT_REPLACEMENT_EDGES
        && added_edges == expected
        && removed
        && idempotent;
    line(
        6,
        passed,
        &format!(
            "{} distributed edges -> {added_nodes} added nodes, {} replacement edges, idempotent={idempotent}",
            distributed.len(),
            added_edges.len()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_monte_carlo() {
    let _g = serial();
    let start = Instant::now();
    let model = HealthModel::new(MC_RATES.to_vec()).unwrap();
    let report = monte_carlo_check(&model, MC_SAMPLES, MC_TRIALS, &MC_EPSILONS, MC_SEED).unwrap();
    let elapsed = start.elapsed();
    let mut passed = elapsed < MC_BUDGET;
    let mut detail = vec![];
    for a in &report.per_action {
        let tol = MC_STANDARD_ERRORS * (a.lambda / (MC_SAMPLES as f64 * MC_TRIALS as f64)).sqrt();
        let unbiased = (a.mean - a.lambda).abs() <= tol;
        let bounded =
            a.deviations.iter().all(|d| d.frequency <= a.lambda / (MC_SAMPLES as f64 * d.epsilon * d.epsilon));
        passed &= unbiased && bounded;
        let freqs: Vec<String> =
            a.deviations.iter().map(|d| format!("{}:{:.4}<={:.4}", d.epsilon, d.frequency, d.bound)).collect();
        detail.push(format!(
            "lambda={} |mean-lambda|={:.2e}<={tol:.2e} {}",
            a.lambda,
            (a.mean - a.lambda).abs(),
            freqs.join(" ")
        ));
    }
    line(7, passed, &format!("{}; {:.1}s of {}s", detail.join("; "), elapsed.as_secs_f64(), MC_BUDGET.as_secs()));
    assert!(passed);
}

#[test]
fn criterion_8_worker_determinism() {
    let _g = serial();
    let cfg = baseline(Variant::BuggyP8);
    let bodies: Vec<String> = WORKERS.iter().map(|&w| run_check(&cfg, None, w, None).unwrap().body()).collect();
    let passed = bodies.windows(2).all(|w| w[0] == w[1]) && bodies[0].contains("# counterexample P8");
    line(
        8,
        passed,
        &format!("buggy-p8 report bodies with workers {:?}: {} bytes, identical={passed}", WORKERS, bodies[0].len()),
    );
    assert!(passed);
}
