//! Command implementations behind the `twincheck` binary. Each returns the
//! text to print and an [`Outcome`] that maps onto the process exit status.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use thiserror::Error;
use twincheck::checker::{
    check_property, check_termination, explore_with_workers, export_dot, render_trace, Bounds, CheckResult, Counts,
    DotOptions, ExploreError, Property, StateGraph,
};
use twincheck::leakage::{self, EpisodeTrace, HealthModel, LeakageError, Policy, Scalar};
use twincheck::pgm::{augment, derive_processes, emit_pgm, parse_pgm, PgmError};
use twincheck::uav::{build_model, property_catalog, ConfigError, UavConfig, UavError};
use twincheck::Exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Violation,
    LimitHit,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Violation => 1,
            Outcome::LimitHit => 3,
        }
    }
}

/// Everything that exits with status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("model: {0}")]
    Uav(#[from] UavError),
    #[error("pgm: {0}")]
    Pgm(#[from] PgmError),
    #[error("leakage: {0}")]
    Leakage(#[from] LeakageError),
    #[error("{0}")]
    Usage(String),
    #[error("exploration: {0}")]
    Explore(String),
}

impl CliError {
    pub const CODE: u8 = 2;
}

pub fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn write_file(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

pub const TERMINATION: &str = "termination";

/// Result of one `check` run. Only `duration` and `workers` depend on how
/// the run was executed; [`RunReport::body`] is reproducible.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: UavConfig,
    pub counts: Option<Counts>,
    /// One entry per selected property, in selection order. `None` when the
    /// property was not checked because exploration stopped early.
    pub verdicts: Vec<(String, Option<CheckResult>)>,
    pub limit_hit: Option<String>,
    pub variables: Vec<String>,
    pub workers: usize,
    pub duration: Duration,
}

impl RunReport {
    pub fn outcome(&self) -> Outcome {
        if self.limit_hit.is_some() {
            Outcome::LimitHit
        } else if self.verdicts.iter().any(|(_, r)| r.as_ref().is_some_and(|r| !r.passed())) {
            Outcome::Violation
        } else {
            Outcome::Pass
        }
    }

    pub fn result(&self, name: &str) -> Option<&CheckResult> {
        self.verdicts.iter().find(|(n, _)| n == name).and_then(|(_, r)| r.as_ref())
    }

    pub fn body(&self) -> String {
        let mut out = String::from("# config\n");
        out.push_str(&self.config.to_string());
        out.push_str("# counts\n");
        match self.counts {
            Some(c) => {
                let _ = writeln!(out, "distinct = {}\ntotal = {}", c.distinct, c.total);
            }
            None => out.push_str("distinct = unknown\ntotal = unknown\n"),
        }
        if let Some(limit) = &self.limit_hit {
            let _ = writeln!(out, "# limit\n{limit}");
        }
        out.push_str("# verdicts\n");
        for (name, r) in &self.verdicts {
            match r {
                None => {
                    let _ = writeln!(out, "{name}: unchecked");
                }
                Some(r) if r.passed() => {
                    let _ = writeln!(out, "{name}: pass");
                }
                Some(r) => {
                    let _ = writeln!(out, "{name}: FAIL ({})", r.reason.as_deref().unwrap_or("violated"));
                }
            }
        }
        for (name, r) in &self.verdicts {
            if let Some(trace) = r.as_ref().and_then(|r| r.trace.as_ref()) {
                let _ = writeln!(out, "# counterexample {name}");
                out.push_str(&render_trace(&self.variables, trace));
            }
        }
        out
    }
}

impl std::fmt::Display for RunReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.body())?;
        writeln!(f, "# run\nworkers = {}", self.workers)?;
        writeln!(f, "duration = {:.3}s", self.duration.as_secs_f64())
    }
}

fn limit_text(e: &ExploreError) -> Option<(String, Counts)> {
    match e {
        ExploreError::LimitExceeded { which, counts, depth } => Some((
            format!("{which} limit exceeded at depth {depth} after {} distinct states", counts.distinct),
            *counts,
        )),
        _ => None,
    }
}

/// Splits a `--props` list. Empty selection means the whole catalog plus
/// termination.
pub fn select_properties(catalog: &[Property], selection: Option<&str>) -> Result<Vec<String>, CliError> {
    let known: Vec<String> = catalog.iter().map(|p| p.name().to_owned()).chain([TERMINATION.to_owned()]).collect();
    let Some(sel) = selection.filter(|s| !s.trim().is_empty()) else {
        return Ok(known);
    };
    let mut out: Vec<String> = Vec::new();
    for name in sel.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !known.iter().any(|k| k == name) {
            return Err(CliError::Usage(format!("unknown property `{name}` (known: {})", known.join(", "))));
        }
        if !out.iter().any(|n| n == name) {
            out.push(name.to_owned());
        }
    }
    Ok(out)
}

pub fn run_check(
    config: &UavConfig,
    props: Option<&str>,
    workers: usize,
    limit: Option<usize>,
) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let uav = build_model(config)?;
    let catalog = property_catalog(&uav);
    let selected = select_properties(&catalog, props)?;
    let bounds = Bounds { max_states: limit, max_depth: None };
    let variables = uav.layout.variable_names();
    let mut report = RunReport {
        config: config.clone(),
        counts: None,
        verdicts: vec![],
        limit_hit: None,
        variables,
        workers,
        duration: Duration::ZERO,
    };
    let graph: StateGraph = match explore_with_workers(&uav.model, bounds, workers) {
        Ok((g, counts)) => {
            report.counts = Some(counts);
            g
        }
        Err(e) => match limit_text(&e) {
            Some((text, counts)) => {
                report.counts = Some(counts);
                report.limit_hit = Some(text);
                report.verdicts = selected.into_iter().map(|n| (n, None)).collect();
                report.duration = start.elapsed();
                return Ok(report);
            }
            None => return Err(CliError::Explore(e.to_string())),
        },
    };
    for name in selected {
        let result = if name == TERMINATION {
            check_termination(&graph)
        } else {
            let prop = catalog.iter().find(|p| p.name() == name).expect("selection was validated");
            check_property(&graph, prop)
        };
        report.verdicts.push((name, Some(result)));
    }
    report.duration = start.elapsed();
    Ok(report)
}

pub fn load_config(path: &str) -> Result<UavConfig, CliError> {
    Ok(UavConfig::parse(&read_file(path)?)?)
}

/// DOT text and counts, or the limit message.
pub fn run_graph(
    config: &UavConfig,
    limit: usize,
    workers: usize,
) -> Result<(Result<String, String>, Counts), CliError> {
    let uav = build_model(config)?;
    match explore_with_workers(&uav.model, Bounds::states(limit), workers) {
        Ok((g, counts)) => {
            let dot = export_dot(&g, &DotOptions { edge_labels: true, vertex_limit: limit }).map_err(|e| e.to_string());
            Ok((dot, counts))
        }
        Err(e) => match limit_text(&e) {
            Some((text, counts)) => Ok((Err(text), counts)),
            None => Err(CliError::Explore(e.to_string())),
        },
    }
}

pub fn run_pgm_augment(text: &str) -> Result<String, CliError> {
    Ok(emit_pgm(&augment(&parse_pgm(text)?)?))
}

pub fn run_pgm_processes(text: &str) -> Result<String, CliError> {
    let pgm = parse_pgm(text)?;
    Ok(derive_processes(&pgm).iter().map(|p| format!("{p}\n")).collect())
}

/// Parses a comma-separated list of decimals.
pub fn parse_list<T: Scalar>(what: &str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| T::parse_decimal(s).ok_or_else(|| CliError::Usage(format!("bad {what} value `{}`", s.trim()))))
        .collect()
}

pub fn parse_one<T: Scalar>(what: &str, text: &str) -> Result<T, CliError> {
    T::parse_decimal(text).ok_or_else(|| CliError::Usage(format!("bad {what} value `{text}`")))
}

pub fn run_simulate(rates: &str, policy: &str, horizon: usize, h0: i64, seed: u64) -> Result<EpisodeTrace, CliError> {
    let model = HealthModel::new(parse_list::<f64>("rate", rates)?)?;
    let policy = match policy.split_once(':') {
        Some(("seq", list)) => Policy::Sequence(
            list.split(',')
                .map(|a| a.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad action `{a}`"))))
                .collect::<Result<_, _>>()?,
        ),
        Some(("weights", list)) => Policy::Stationary(parse_list::<f64>("weight", list)?),
        _ => return Err(CliError::Usage(format!("policy must be `seq:<actions>` or `weights:<w>`, got `{policy}`"))),
    };
    Ok(leakage::simulate(&model, &policy, horizon, h0, seed)?)
}

pub fn run_estimate(trace_text: &str, epsilon: &str, key_values: bool) -> Result<String, CliError> {
    let trace = EpisodeTrace::parse(trace_text)?;
    let report = leakage::leakage_report::<Exact>(&trace, parse_one("epsilon", epsilon)?)?;
    let mut out = report.to_string();
    if key_values {
        out.push('\n');
        out.push_str(&report.key_values());
    }
    Ok(out)
}

fn decimal<T: Scalar>(x: T) -> String {
    format!("{} ({x})", x.to_f64().unwrap_or(f64::NAN))
}

/// Deviation bound for `n` samples, the sample count for confidence
/// `delta`, or both, computed exactly.
pub fn run_bound(lambda: &str, epsilon: &str, n: Option<u64>, delta: Option<&str>) -> Result<String, CliError> {
    let lambda: Exact = parse_one("lambda", lambda)?;
    let epsilon: Exact = parse_one("epsilon", epsilon)?;
    if n.is_none() && delta.is_none() {
        return Err(CliError::Usage("give --samples, --delta or both".into()));
    }
    let mut out = String::new();
    if let Some(n) = n {
        let b = leakage::deviation_bound(lambda, n, epsilon)?;
        let _ = writeln!(out, "bound = {}", decimal(b));
    }
    if let Some(delta) = delta {
        let delta: Exact = parse_one("delta", delta)?;
        let _ = writeln!(out, "required_samples = {}", leakage::required_samples(lambda, epsilon, delta)?);
    }
    Ok(out)
}

pub fn run_montecarlo(
    rates: &str,
    samples: u64,
    trials: usize,
    epsilons: &str,
    seed: u64,
) -> Result<(String, Outcome), CliError> {
    let model = HealthModel::new(parse_list::<f64>("rate", rates)?)?;
    let eps = parse_list::<f64>("epsilon", epsilons)?;
    let report = leakage::monte_carlo_check(&model, samples, trials, &eps, seed)?;
    let outcome = if report.all_hold() { Outcome::Pass } else { Outcome::Violation };
    Ok((report.to_string(), outcome))
}
