use std::fmt;
use std::sync::Arc;

use crate::kernel::SystemState;

pub type StatePred = Arc<dyn Fn(&SystemState) -> bool + Send + Sync>;
pub type ActionPred = Arc<dyn Fn(&SystemState, &SystemState) -> bool + Send + Sync>;

pub fn state_pred(f: impl Fn(&SystemState) -> bool + Send + Sync + 'static) -> StatePred {
    Arc::new(f)
}

pub fn action_pred(f: impl Fn(&SystemState, &SystemState) -> bool + Send + Sync + 'static) -> ActionPred {
    Arc::new(f)
}

#[derive(Clone)]
pub struct StateInvariant {
    pub name: String,
    pub pred: StatePred,
}

#[derive(Clone)]
pub struct ActionInvariant {
    pub name: String,
    pub pred: ActionPred,
}

/// `trigger ~> goal`, possibly as a family of independent obligations
/// (one per message, timestamp, ...). The property holds iff every case does.
#[derive(Clone)]
pub struct LeadsTo {
    pub name: String,
    pub cases: Vec<(StatePred, StatePred)>,
}

impl LeadsTo {
    pub fn new(name: impl Into<String>, trigger: StatePred, goal: StatePred) -> Self {
        Self { name: name.into(), cases: vec![(trigger, goal)] }
    }

    pub fn family(name: impl Into<String>, cases: Vec<(StatePred, StatePred)>) -> Self {
        Self { name: name.into(), cases }
    }
}

#[derive(Clone)]
pub enum Property {
    State(StateInvariant),
    Action(ActionInvariant),
    LeadsTo(LeadsTo),
}

impl Property {
    pub fn state(name: impl Into<String>, pred: impl Fn(&SystemState) -> bool + Send + Sync + 'static) -> Self {
        Property::State(StateInvariant { name: name.into(), pred: Arc::new(pred) })
    }

    pub fn action(
        name: impl Into<String>,
        pred: impl Fn(&SystemState, &SystemState) -> bool + Send + Sync + 'static,
    ) -> Self {
        Property::Action(ActionInvariant { name: name.into(), pred: Arc::new(pred) })
    }

    pub fn name(&self) -> &str {
        match self {
            Property::State(p) => &p.name,
            Property::Action(p) => &p.name,
            Property::LeadsTo(p) => &p.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Property::State(_) => "state invariant",
            Property::Action(_) => "action invariant",
            Property::LeadsTo(_) => "leads-to",
        }
    }
}

impl fmt::Debug for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind(), self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
        })
    }
}

/// One step of a trace: the process taken to reach `state` (none for the
/// first state of a trace).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub process: Option<String>,
    pub state: SystemState,
}

/// Marker process name for an infinite stuttering step.
pub const STUTTER: &str = "(stutter)";

/// A finite path from an initial state, optionally followed by a cycle that
/// returns to the path's last state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub prefix: Vec<Step>,
    pub lasso: Option<Vec<Step>>,
}

impl Counterexample {
    /// Processes along the prefix, skipping the initial state.
    pub fn prefix_processes(&self) -> Vec<&str> {
        self.prefix.iter().filter_map(|s| s.process.as_deref()).collect()
    }

    pub fn last_state(&self) -> &SystemState {
        &self.prefix.last().expect("non-empty prefix").state
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub trace: Option<Counterexample>,
}

impl CheckResult {
    pub fn pass() -> Self {
        Self { verdict: Verdict::Pass, reason: None, trace: None }
    }

    pub fn fail(reason: impl Into<String>, trace: Counterexample) -> Self {
        Self { verdict: Verdict::Fail, reason: Some(reason.into()), trace: Some(trace) }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}
