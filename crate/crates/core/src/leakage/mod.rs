//! How much an observer of health readings and chosen actions learns about
//! the per-action damage rates: a Poisson degradation simulator, the rate
//! estimator, Chebyshev-style deviation bounds and a Monte-Carlo check of
//! both.

mod scalar;

pub use scalar::Scalar;

use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LeakageError {
    #[error("a health model needs at least one action")]
    NoActions,
    #[error("rate for action {action} must be finite and non-negative")]
    InvalidRate { action: usize },
    #[error("invalid action distribution: {0}")]
    InvalidDistribution(String),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("initial health must be non-negative")]
    NegativeHealth,
    #[error("trace needs at least two steps, got {0}")]
    TraceTooShort(usize),
    #[error("epsilon must be positive")]
    InvalidEpsilon,
    #[error("delta must lie strictly between 0 and 1")]
    InvalidDelta,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("at least 100 trials are needed, got {0}")]
    TooFewTrials(usize),
    #[error("required sample count does not fit in 64 bits")]
    Overflow,
    #[error("line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },
}

// NaN fails both, so these are not the negations of `<` and `<=`.
fn positive<T: Scalar>(x: T) -> bool {
    x > T::zero()
}

fn non_negative<T: Scalar>(x: T) -> bool {
    x >= T::zero()
}

/// Per-action Poisson damage rates; actions are numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HealthModel<T> {
    rates: Vec<T>,
}

impl<T: Scalar> HealthModel<T> {
    pub fn new(rates: Vec<T>) -> Result<Self, LeakageError> {
        if rates.is_empty() {
            return Err(LeakageError::NoActions);
        }
        for (i, r) in rates.iter().enumerate() {
            if !non_negative(*r) || !r.to_f64().is_some_and(f64::is_finite) {
                return Err(LeakageError::InvalidRate { action: i + 1 });
            }
        }
        Ok(Self { rates })
    }

    /// Rates 0.01 and 0.05 per step for a gentle and an aggressive maneuver.
    pub fn default_uav() -> Self {
        let r = |v: f64| T::from_f64(v).expect("default rates are representable");
        Self { rates: vec![r(0.01), r(0.05)] }
    }

    pub fn actions(&self) -> usize {
        self.rates.len()
    }

    pub fn rate(&self, action: usize) -> T {
        self.rates[action - 1]
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }
}

/// How the acting party chooses actions.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy<T> {
    /// Actions in order, repeated as needed.
    Sequence(Vec<usize>),
    /// An independent draw at every step with these (unnormalized) weights.
    Stationary(Vec<T>),
}

impl<T: Scalar> Policy<T> {
    fn validate(&self, actions: usize) -> Result<(), LeakageError> {
        let bad = |m: String| Err(LeakageError::InvalidDistribution(m));
        match self {
            Policy::Sequence(seq) => {
                if seq.is_empty() {
                    return bad("empty action sequence".into());
                }
                if let Some(a) = seq.iter().find(|&&a| a == 0 || a > actions) {
                    return bad(format!("action {a} outside 1..={actions}"));
                }
            }
            Policy::Stationary(w) => {
                if w.len() != actions {
                    return bad(format!("{} weights for {actions} actions", w.len()));
                }
                if w.iter().any(|x| !non_negative(*x)) {
                    return bad("negative weight".into());
                }
                if !w.iter().fold(T::zero(), |a, &b| a + b).to_f64().is_some_and(|s| s > 0.0) {
                    return bad("weights sum to zero".into());
                }
            }
        }
        Ok(())
    }

    fn pick(&self, step: usize, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Policy::Sequence(seq) => seq[step % seq.len()],
            Policy::Stationary(w) => {
                let weights: Vec<f64> = w.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect();
                let mut u = rng.gen::<f64>() * weights.iter().sum::<f64>();
                for (i, &x) in weights.iter().enumerate() {
                    if u < x {
                        return i + 1;
                    }
                    u -= x;
                }
                weights.iter().rposition(|&x| x > 0.0).unwrap_or(0) + 1
            }
        }
    }
}

/// Health readings and the action taken at each step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeTrace {
    actions: usize,
    steps: Vec<(i64, usize)>,
}

impl EpisodeTrace {
    pub fn new(actions: usize, steps: Vec<(i64, usize)>) -> Result<Self, LeakageError> {
        let fmt_err = |line: usize, msg: String| LeakageError::TraceFormat { line, msg };
        if actions == 0 {
            return Err(LeakageError::NoActions);
        }
        for (i, &(h, a)) in steps.iter().enumerate() {
            if a == 0 || a > actions {
                return Err(fmt_err(i + 1, format!("action {a} outside 1..={actions}")));
            }
            if i > 0 && h > steps[i - 1].0 {
                return Err(fmt_err(i + 1, format!("health rose from {} to {h}", steps[i - 1].0)));
            }
        }
        Ok(Self { actions, steps })
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn steps(&self) -> &[(i64, usize)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `m=<actions>` followed by one `h a` line per step; `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self, LeakageError> {
        let mut actions = None;
        let mut steps = vec![];
        let mut lines = vec![];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: &str| LeakageError::TraceFormat { line, msg: msg.into() };
            if actions.is_none() {
                let m = content.strip_prefix("m=").ok_or_else(|| err("expected header `m=<actions>`"))?;
                actions = Some(m.trim().parse::<usize>().map_err(|_| err("bad action count"))?);
                continue;
            }
            let mut parts = content.split_whitespace();
            let (Some(h), Some(a), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `<health> <action>`"));
            };
            let h = h.parse::<i64>().map_err(|_| err("bad health value"))?;
            let a = a.parse::<usize>().map_err(|_| err("bad action index"))?;
            steps.push((h, a));
            lines.push(line);
        }
        let actions = actions.ok_or(LeakageError::TraceFormat { line: 1, msg: "missing header".into() })?;
        // report errors against file lines rather than step positions
        Self::new(actions, steps).map_err(|e| match e {
            LeakageError::TraceFormat { line, msg } => LeakageError::TraceFormat { line: lines[line - 1], msg },
            other => other,
        })
    }
}

impl fmt::Display for EpisodeTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m={}", self.actions)?;
        for (h, a) in &self.steps {
            writeln!(f, "{h} {a}")?;
        }
        Ok(())
    }
}

/// Above this a draw is split into a sum of smaller ones so `exp(-rate)`
/// stays well inside `f64` range.
const POISSON_CHUNK: f64 = 30.0;

/// Poisson draw by sequential search of the cumulative distribution.
fn poisson(rate: f64, rng: &mut ChaCha8Rng) -> u64 {
    let mut remaining = rate;
    let mut total = 0;
    while remaining > 0.0 {
        let lambda = remaining.min(POISSON_CHUNK);
        remaining -= lambda;
        let u: f64 = rng.gen();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        total += k;
    }
    total
}

/// Runs `horizon` steps from health `h0`. Each step's damage is an
/// independent Poisson draw at the chosen action's rate; health stops at 0
/// and the trace ends there.
pub fn simulate<T: Scalar>(
    model: &HealthModel<T>,
    policy: &Policy<T>,
    horizon: usize,
    h0: i64,
    seed: u64,
) -> Result<EpisodeTrace, LeakageError> {
    if horizon == 0 {
        return Err(LeakageError::ZeroHorizon);
    }
    if h0 < 0 {
        return Err(LeakageError::NegativeHealth);
    }
    policy.validate(model.actions())?;
    let rates: Vec<f64> = model.rates.iter().map(|r| r.to_f64().unwrap_or(0.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = h0;
    let mut steps = Vec::with_capacity(horizon + 1);
    for t in 0..horizon {
        let a = policy.pick(t, &mut rng);
        steps.push((h, a));
        let damage = poisson(rates[a - 1], &mut rng);
        h = h.saturating_sub(damage.min(i64::MAX as u64) as i64).max(0);
        if h == 0 {
            break;
        }
    }
    let last = policy.pick(steps.len(), &mut rng);
    steps.push((h, last));
    Ok(EpisodeTrace { actions: model.actions(), steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionEstimate<T> {
    pub action: usize,
    /// Steps taken with this action that have a successor step.
    pub samples: u64,
    /// Absent when there are no samples.
    pub lambda_hat: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub per_action: Vec<ActionEstimate<T>>,
}

impl<T: Scalar> Estimate<T> {
    pub fn get(&self, action: usize) -> &ActionEstimate<T> {
        &self.per_action[action - 1]
    }

    pub fn lambda_hat(&self, action: usize) -> Option<T> {
        self.get(action).lambda_hat
    }
}

/// Mean observed damage per step, separately for each action.
pub fn estimate<T: Scalar>(trace: &EpisodeTrace) -> Result<Estimate<T>, LeakageError> {
    if trace.len() < 2 {
        return Err(LeakageError::TraceTooShort(trace.len()));
    }
    let mut damage = vec![0i64; trace.actions];
    let mut samples = vec![0u64; trace.actions];
    for w in trace.steps.windows(2) {
        let ((h, a), (h_next, _)) = (w[0], w[1]);
        damage[a - 1] += h - h_next;
        samples[a - 1] += 1;
    }
    let per_action = (0..trace.actions)
        .map(|i| ActionEstimate {
            action: i + 1,
            samples: samples[i],
            lambda_hat: (samples[i] > 0).then(|| {
                T::from_i64(damage[i]).expect("damage total fits") / T::from_u64(samples[i]).expect("count fits")
            }),
        })
        .collect();
    Ok(Estimate { per_action })
}

/// Upper bound on the probability that an `n`-sample estimate misses
/// `lambda` by at least `epsilon`, capped at 1.
pub fn deviation_bound<T: Scalar>(lambda: T, n: u64, epsilon: T) -> Result<T, LeakageError> {
    if !positive(epsilon) {
        return Err(LeakageError::InvalidEpsilon);
    }
    if n == 0 {
        return Err(LeakageError::ZeroSamples);
    }
    let n = T::from_u64(n).ok_or(LeakageError::Overflow)?;
    let bound = lambda / (n * epsilon * epsilon);
    Ok(if bound > T::one() { T::one() } else { bound })
}

/// Fewest samples for which [`deviation_bound`] is at most `delta`.
pub fn required_samples<T: Scalar>(lambda: T, epsilon: T, delta: T) -> Result<u64, LeakageError> {
    if !positive(epsilon) {
        return Err(LeakageError::InvalidEpsilon);
    }
    if !(positive(delta) && delta < T::one()) {
        return Err(LeakageError::InvalidDelta);
    }
    let n = (lambda / (delta * epsilon * epsilon)).ceil_u64().ok_or(LeakageError::Overflow)?;
    Ok(n.max(1))
}

fn trial_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined inputs
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationCheck<T> {
    pub epsilon: T,
    /// Fraction of trials whose estimate missed by at least `epsilon`.
    pub frequency: T,
    pub bound: T,
}

impl<T: Scalar> DeviationCheck<T> {
    pub fn holds(&self) -> bool {
        self.frequency <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionCheck<T> {
    pub action: usize,
    pub lambda: T,
    pub samples: u64,
    pub trials: usize,
    pub mean: T,
    /// Three standard errors of the mean estimate.
    pub mean_tolerance: f64,
    pub deviations: Vec<DeviationCheck<T>>,
}

impl<T: Scalar> ActionCheck<T> {
    pub fn mean_error(&self) -> f64 {
        (self.mean - self.lambda).to_f64().unwrap_or(f64::INFINITY).abs()
    }

    pub fn unbiased(&self) -> bool {
        self.mean_error() <= self.mean_tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport<T> {
    pub per_action: Vec<ActionCheck<T>>,
}

impl<T: Scalar> MonteCarloReport<T> {
    pub fn all_hold(&self) -> bool {
        self.per_action.iter().all(|a| a.unbiased() && a.deviations.iter().all(DeviationCheck::holds))
    }
}

impl<T: Scalar> fmt::Display for MonteCarloReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.per_action {
            writeln!(
                f,
                "action {}: lambda={} N={} trials={} mean={:.6} |mean-lambda|={:.6} tolerance={:.6} {}",
                a.action,
                a.lambda,
                a.samples,
                a.trials,
                a.mean.to_f64().unwrap_or(f64::NAN),
                a.mean_error(),
                a.mean_tolerance,
                if a.unbiased() { "ok" } else { "BIASED" },
            )?;
            for d in &a.deviations {
                writeln!(
                    f,
                    "  epsilon={} frequency={:.6} bound={:.6} {}",
                    d.epsilon,
                    d.frequency.to_f64().unwrap_or(f64::NAN),
                    d.bound.to_f64().unwrap_or(f64::NAN),
                    if d.holds() { "ok" } else { "EXCEEDED" },
                )?;
            }
        }
        Ok(())
    }
}

/// Estimates every action's rate from `samples` simulated steps, `trials`
/// times, and compares the spread of the estimates with the theory. Each
/// trial has its own seed derived from `seed`, so the report does not
/// depend on how trials are scheduled.
pub fn monte_carlo_check<T: Scalar>(
    model: &HealthModel<T>,
    samples: u64,
    trials: usize,
    epsilons: &[T],
    seed: u64,
) -> Result<MonteCarloReport<T>, LeakageError> {
    if trials < 100 {
        return Err(LeakageError::TooFewTrials(trials));
    }
    if samples == 0 {
        return Err(LeakageError::ZeroSamples);
    }
    if epsilons.iter().any(|e| !positive(*e)) {
        return Err(LeakageError::InvalidEpsilon);
    }
    let m = model.actions();
    // Health high enough that no run can reach the floor.
    let h0 = i64::MAX / 2;
    let estimates: Vec<Vec<T>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            (1..=m)
                .map(|a| {
                    let stream = (trial * m + a - 1) as u64;
                    let trace =
                        simulate(model, &Policy::Sequence(vec![a]), samples as usize, h0, trial_seed(seed, stream))
                            .expect("validated inputs");
                    estimate::<T>(&trace).expect("trace has samples").lambda_hat(a).expect("action sampled")
                })
                .collect()
        })
        .collect();

    let count = T::from_usize(trials).ok_or(LeakageError::Overflow)?;
    let per_action = (1..=m)
        .map(|a| {
            let lambda = model.rate(a);
            let column = || estimates.iter().map(|row| row[a - 1]);
            let mean = column().fold(T::zero(), |acc, x| acc + x) / count;
            let deviations = epsilons
                .iter()
                .map(|&epsilon| {
                    let misses = column()
                        .filter(|&x| {
                            let diff = if x > lambda { x - lambda } else { lambda - x };
                            diff >= epsilon
                        })
                        .count();
                    Ok(DeviationCheck {
                        epsilon,
                        frequency: T::from_usize(misses).ok_or(LeakageError::Overflow)? / count,
                        bound: deviation_bound(lambda, samples, epsilon)?,
                    })
                })
                .collect::<Result<Vec<_>, LeakageError>>()?;
            let lambda_f = lambda.to_f64().unwrap_or(0.0);
            Ok(ActionCheck {
                action: a,
                lambda,
                samples,
                trials,
                mean,
                mean_tolerance: 3.0 * (lambda_f / (samples as f64 * trials as f64)).sqrt(),
                deviations,
            })
        })
        .collect::<Result<Vec<_>, LeakageError>>()?;
    Ok(MonteCarloReport { per_action })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow<T> {
    pub action: usize,
    pub samples: u64,
    pub lambda_hat: Option<T>,
    pub bound: Option<T>,
}

/// What an observer of the trace can infer about each action's damage rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport<T> {
    pub epsilon: T,
    pub rows: Vec<ReportRow<T>>,
}

impl<T: Scalar> LeakageReport<T> {
    /// `key = value` lines with exact values, one block per action.
    pub fn key_values(&self) -> String {
        let mut out = format!("epsilon = {}\n", self.epsilon);
        for r in &self.rows {
            let a = r.action;
            let _ = writeln!(out, "action.{a}.samples = {}", r.samples);
            match (r.lambda_hat, r.bound) {
                (Some(l), Some(b)) => {
                    let _ = writeln!(out, "action.{a}.lambda_hat = {l}");
                    let _ = writeln!(out, "action.{a}.bound = {b}");
                }
                _ => {
                    let _ = writeln!(out, "action.{a}.lambda_hat = none");
                    let _ = writeln!(out, "action.{a}.bound = none");
                }
            }
        }
        out
    }
}

impl<T: Scalar> fmt::Display for LeakageReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "epsilon = {}", self.epsilon)?;
        writeln!(f, "{:>6}  {:>8}  {:>12}  {:>12}", "action", "samples", "lambda_hat", "P(miss)<=")?;
        for r in &self.rows {
            match (r.lambda_hat, r.bound) {
                (Some(l), Some(b)) => writeln!(
                    f,
                    "{:>6}  {:>8}  {:>12.6}  {:>12.6}",
                    r.action,
                    r.samples,
                    l.to_f64().unwrap_or(f64::NAN),
                    b.to_f64().unwrap_or(f64::NAN),
                )?,
                _ => writeln!(f, "{:>6}  {:>8}  {:>12}  {:>12}", r.action, r.samples, "-", "no leakage")?,
            }
        }
        writeln!(
            f,
            "P(miss) bounds the chance that an observer's estimate of the action's damage rate is off by epsilon or more."
        )
    }
}

/// Estimates from `trace` together with the deviation bound each estimate
/// carries at `epsilon`.
pub fn leakage_report<T: Scalar>(trace: &EpisodeTrace, epsilon: T) -> Result<LeakageReport<T>, LeakageError> {
    if !positive(epsilon) {
        return Err(LeakageError::InvalidEpsilon);
    }
    let est = estimate::<T>(trace)?;
    let rows = est
        .per_action
        .iter()
        .map(|e| {
            let bound = match e.lambda_hat {
                Some(l) => Some(deviation_bound(l, e.samples, epsilon)?),
                None => None,
            };
            Ok(ReportRow { action: e.action, samples: e.samples, lambda_hat: e.lambda_hat, bound })
        })
        .collect::<Result<Vec<_>, LeakageError>>()?;
    Ok(LeakageReport { epsilon, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;
    use rand::Rng;

    type Q = Ratio<i64>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(n, d)
    }

    #[test]
    fn estimate_direct_arithmetic() {
        // deltas -1, 0, -2 under action 1
        let trace = EpisodeTrace::new(1, vec![(10, 1), (9, 1), (9, 1), (7, 1)]).unwrap();
        let est = estimate::<Q>(&trace).unwrap();
        assert_eq!(est.lambda_hat(1), Some(q(1, 1)));
        assert_eq!(est.get(1).samples, 3);
    }

    #[test]
    fn constant_health_and_unobserved_actions() {
        let trace = EpisodeTrace::new(3, vec![(5, 1), (5, 2), (5, 1), (5, 3)]).unwrap();
        let est = estimate::<Q>(&trace).unwrap();
        assert_eq!(est.lambda_hat(1), Some(q(0, 1)));
        assert_eq!(est.lambda_hat(2), Some(q(0, 1)));
        // the final step has no successor, so action 3 is never sampled
        assert_eq!(est.get(3).samples, 0);
        assert_eq!(est.lambda_hat(3), None);
        assert_eq!(estimate::<Q>(&EpisodeTrace::new(1, vec![(1, 1)]).unwrap()), Err(LeakageError::TraceTooShort(1)));
    }

    #[test]
    fn bounds_exact_values() {
        assert_eq!(deviation_bound(q(1, 20), 100, q(1, 10)).unwrap(), q(1, 20));
        assert_eq!(deviation_bound(q(0, 1), 100, q(1, 10)).unwrap(), q(0, 1));
        assert_eq!(deviation_bound(q(1, 1), 1, q(1, 2)).unwrap(), q(1, 1));
        assert_eq!(deviation_bound(q(1, 1), 1, q(0, 1)), Err(LeakageError::InvalidEpsilon));
        assert_eq!(deviation_bound(q(1, 1), 0, q(1, 2)), Err(LeakageError::ZeroSamples));

        assert_eq!(required_samples(q(1, 20), q(1, 10), q(1, 20)).unwrap(), 100);
        assert_eq!(required_samples(q(0, 1), q(1, 10), q(1, 20)).unwrap(), 1);
        assert_eq!(required_samples(q(1, 100), q(1, 100), q(1, 10)).unwrap(), 1_000);
        assert_eq!(required_samples(q(1, 100), q(1, 100), q(1, 1)), Err(LeakageError::InvalidDelta));
        assert_eq!(required_samples(q(1, 100), q(-1, 100), q(1, 2)), Err(LeakageError::InvalidEpsilon));
    }

    #[test]
    fn float_bounds_agree_with_exact() {
        let b = deviation_bound(0.05f64, 100, 0.1).unwrap();
        assert!((b - 0.05).abs() < 1e-12);
        assert_eq!(required_samples(0.01f64, 0.01, 0.1).unwrap(), 1_000);
    }

    #[test]
    fn simulate_zero_rates_and_horizon_one() {
        let model = HealthModel::new(vec![0.0f64, 0.0]).unwrap();
        let trace = simulate(&model, &Policy::Sequence(vec![1, 2]), 50, 10, 7).unwrap();
        assert_eq!(trace.len(), 51);
        assert!(trace.steps().iter().all(|&(h, _)| h == 10));

        let model = HealthModel::<f64>::default_uav();
        let trace = simulate(&model, &Policy::Sequence(vec![2]), 1, 10, 7).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(estimate::<f64>(&trace).unwrap().get(2).samples, 1);
    }

    #[test]
    fn simulate_is_reproducible_and_absorbs_at_zero() {
        let model = HealthModel::new(vec![2.0f64]).unwrap();
        let policy = Policy::Stationary(vec![1.0]);
        let a = simulate(&model, &policy, 100, 20, 42).unwrap();
        assert_eq!(a, simulate(&model, &policy, 100, 20, 42).unwrap());
        assert_ne!(a, simulate(&model, &policy, 100, 20, 43).unwrap());
        assert_eq!(a.steps().last().unwrap().0, 0);
        assert!(a.len() < 101);
    }

    #[test]
    fn simulate_rejects_bad_inputs() {
        let model = HealthModel::<f64>::default_uav();
        assert_eq!(simulate(&model, &Policy::Sequence(vec![1]), 0, 1, 0), Err(LeakageError::ZeroHorizon));
        assert!(matches!(
            simulate(&model, &Policy::Sequence(vec![3]), 5, 1, 0),
            Err(LeakageError::InvalidDistribution(_))
        ));
        assert!(matches!(
            simulate(&model, &Policy::Stationary(vec![0.5, -0.5]), 5, 1, 0),
            Err(LeakageError::InvalidDistribution(_))
        ));
        assert!(matches!(
            simulate(&model, &Policy::Stationary(vec![0.0, 0.0]), 5, 1, 0),
            Err(LeakageError::InvalidDistribution(_))
        ));
        assert!(matches!(HealthModel::new(vec![-0.1f64]), Err(LeakageError::InvalidRate { action: 1 })));
        assert!(matches!(HealthModel::<f64>::new(vec![]), Err(LeakageError::NoActions)));
    }

    #[test]
    fn mean_damage_over_hundred_aggressive_steps() {
        let model = HealthModel::<f64>::default_uav();
        let runs = 10_000u64;
        let total: i64 = (0..runs)
            .map(|seed| {
                let t = simulate(&model, &Policy::Sequence(vec![2]), 100, 1_000, seed).unwrap();
                1_000 - t.steps().last().unwrap().0
            })
            .sum();
        let mean = total as f64 / runs as f64;
        // standard error sqrt(5 / 10^4) ~ 0.022
        assert!((mean - 5.0).abs() < 0.1, "mean damage {mean}");
    }

    #[test]
    fn mixed_trace_estimate_is_close() {
        let model = HealthModel::<f64>::default_uav();
        let trace = simulate(&model, &Policy::Stationary(vec![0.5, 0.5]), 1000, 100_000, 42).unwrap();
        let est = estimate::<f64>(&trace).unwrap();
        for a in 1..=2 {
            let e = est.get(a);
            let lambda = model.rate(a);
            assert!(e.samples > 0);
            let tol = 3.0 * (lambda / e.samples as f64).sqrt();
            assert!((e.lambda_hat.unwrap() - lambda).abs() <= tol, "action {a}: {e:?}");
        }
    }

    #[test]
    fn zero_rate_monte_carlo() {
        let model = HealthModel::new(vec![q(0, 1)]).unwrap();
        let report = monte_carlo_check(&model, 50, 100, &[q(1, 100)], 1).unwrap();
        let a = &report.per_action[0];
        assert_eq!(a.mean, q(0, 1));
        assert_eq!(a.deviations[0].frequency, q(0, 1));
        assert!(report.all_hold());
        assert_eq!(monte_carlo_check(&model, 50, 99, &[q(1, 100)], 1), Err(LeakageError::TooFewTrials(99)));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let model = HealthModel::<f64>::default_uav();
        let a = monte_carlo_check(&model, 100, 200, &[0.02], 9).unwrap();
        let b = monte_carlo_check(&model, 100, 200, &[0.02], 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_file_round_trip_and_errors() {
        let text = "# episode\nm=2\n10 1\n9 2\n9 1\n";
        let trace = EpisodeTrace::parse(text).unwrap();
        assert_eq!(trace.steps(), &[(10, 1), (9, 2), (9, 1)]);
        assert_eq!(EpisodeTrace::parse(&trace.to_string()).unwrap(), trace);
        assert!(matches!(EpisodeTrace::parse("10 1\n"), Err(LeakageError::TraceFormat { line: 1, .. })));
        assert!(matches!(EpisodeTrace::parse("m=2\n10 1\n11 1\n"), Err(LeakageError::TraceFormat { line: 3, .. })));
        assert!(matches!(EpisodeTrace::parse("m=2\n\n10 3\n"), Err(LeakageError::TraceFormat { line: 3, .. })));
        assert!(matches!(EpisodeTrace::parse("m=2\n10\n"), Err(LeakageError::TraceFormat { line: 2, .. })));
    }

    #[test]
    fn report_rows() {
        let trace = EpisodeTrace::new(2, vec![(10, 1), (9, 1), (9, 2)]).unwrap();
        let report = leakage_report(&trace, q(1, 2)).unwrap();
        assert_eq!(report.rows[0].lambda_hat, Some(q(1, 2)));
        assert_eq!(report.rows[0].bound, Some(q(1, 1)));
        assert_eq!(report.rows[1].samples, 0);
        let text = report.to_string();
        assert!(text.contains("no leakage"));
        assert_eq!(text, leakage_report(&trace, q(1, 2)).unwrap().to_string());
        assert!(report.key_values().contains("action.1.lambda_hat = 1/2"));
        assert!(report.key_values().contains("action.2.bound = none"));
    }

    fn arb_trace() -> impl Strategy<Value = EpisodeTrace> {
        (1usize..4).prop_flat_map(|m| (Just(m), proptest::collection::vec((0i64..5, 1..=m), 2..40))).prop_map(
            |(m, deltas)| {
                let mut h = 1_000i64;
                let steps = deltas
                    .into_iter()
                    .map(|(d, a)| {
                        let s = (h, a);
                        h -= d;
                        s
                    })
                    .collect();
                EpisodeTrace::new(m, steps).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn scaling_deltas_scales_estimates(trace in arb_trace(), k in 1i64..6) {
            let top = trace.steps()[0].0;
            let scaled: Vec<(i64, usize)> =
                trace.steps().iter().map(|&(h, a)| (top - k * (top - h), a)).collect();
            let scaled = EpisodeTrace::new(trace.actions(), scaled).unwrap();
            let (a, b) = (estimate::<Q>(&trace).unwrap(), estimate::<Q>(&scaled).unwrap());
            for (x, y) in a.per_action.iter().zip(&b.per_action) {
                prop_assert_eq!(x.lambda_hat.map(|l| l * Q::from_integer(k)), y.lambda_hat);
            }
        }

        #[test]
        fn estimate_ignores_order_within_an_action(trace in arb_trace(), seed in any::<u64>()) {
            // rebuild the trace from its (delta, action) pairs in shuffled order
            let mut pairs: Vec<(i64, usize)> =
                trace.steps().windows(2).map(|w| (w[0].0 - w[1].0, w[0].1)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..pairs.len()).rev() {
                pairs.swap(i, rng.gen_range(0..=i));
            }
            let mut h = trace.steps()[0].0;
            let mut steps = vec![];
            for (d, a) in pairs {
                steps.push((h, a));
                h -= d;
            }
            steps.push((h, 1));
            let shuffled = EpisodeTrace::new(trace.actions(), steps).unwrap();
            prop_assert_eq!(estimate::<Q>(&trace).unwrap(), estimate::<Q>(&shuffled).unwrap());
        }

        #[test]
        fn required_samples_meets_delta(l in 0i64..200, e in 1i64..50, d in 1i64..99) {
            let (lambda, epsilon, delta) = (q(l, 1000), q(e, 100), q(d, 100));
            let n = required_samples(lambda, epsilon, delta).unwrap();
            prop_assert!(deviation_bound(lambda, n, epsilon).unwrap() <= delta);
            if n > 1 {
                prop_assert!(deviation_bound(lambda, n - 1, epsilon).unwrap() > delta);
            }
        }
    }
}
