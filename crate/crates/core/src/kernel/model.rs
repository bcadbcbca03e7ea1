//! Finite state machines: declared variables, initial states, fairness-annotated
//! nondeterministic processes, and a terminal predicate.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::state::SystemState;
use super::value::{Message, Value};

/// Scheduling assumption attached to a process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FairnessClass {
    /// May never run.
    Unfair,
    /// Runs eventually if continuously enabled.
    Weak,
    /// Runs eventually if enabled infinitely often.
    Strong,
}

impl fmt::Display for FairnessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FairnessClass::Unfair => "UF",
            FairnessClass::Weak => "WF",
            FairnessClass::Strong => "SF",
        })
    }
}

/// Admissible values of a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Int {
        lo: i64,
        hi: i64,
    },
    Bool,
    /// Absent, or a command with timestamp `<= t_max`.
    OptCommand {
        t_max: u32,
    },
    /// Absent, or an observation within the given bounds.
    OptObservation {
        t_max: u32,
        sensors: u8,
        lo: i32,
        hi: i32,
    },
    /// A channel of at most `max_len` messages, each admissible under `elem`.
    Queue {
        elem: Box<Domain>,
        max_len: usize,
    },
    List {
        elem: Box<Domain>,
        max_len: usize,
    },
}

impl Domain {
    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::Int { lo, hi }, Value::Int(v)) => lo <= v && v <= hi,
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::OptCommand { .. } | Domain::OptObservation { .. }, Value::Absent) => true,
            (Domain::OptCommand { .. }, Value::Command(_)) | (Domain::OptObservation { .. }, Value::Observation(_)) => {
                self.admits_message(&message_of(value))
            }
            (Domain::Queue { elem, max_len }, Value::Queue(ms)) | (Domain::List { elem, max_len }, Value::List(ms)) => {
                ms.len() <= *max_len && ms.iter().all(|m| elem.admits_message(m))
            }
            _ => false,
        }
    }

    fn admits_message(&self, m: &Message) -> bool {
        match (self, m) {
            (Domain::OptCommand { t_max }, Message::Command(c)) => c.t <= *t_max && (c.kind == 2 || c.kind == 3),
            (Domain::OptObservation { t_max, sensors, lo, hi }, Message::Observation(o)) => {
                o.t <= *t_max && (1..=*sensors).contains(&o.sensor) && (*lo..=*hi).contains(&o.value)
            }
            _ => false,
        }
    }
}

fn message_of(v: &Value) -> Message {
    match v {
        Value::Command(c) => Message::Command(*c),
        Value::Observation(o) => Message::Observation(*o),
        _ => unreachable!("only called on record values"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
}

pub type SuccessorFn = dyn Fn(&SystemState) -> Vec<SystemState> + Send + Sync;
pub type StatePredicate = dyn Fn(&SystemState) -> bool + Send + Sync;

/// A named nondeterministic action. Enabled in `s` iff it yields at least one
/// successor of `s`.
#[derive(Clone)]
pub struct ProcessDef {
    pub name: String,
    pub fairness: FairnessClass,
    successors: Arc<SuccessorFn>,
}

impl ProcessDef {
    pub fn new(
        name: impl Into<String>,
        fairness: FairnessClass,
        successors: impl Fn(&SystemState) -> Vec<SystemState> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), fairness, successors: Arc::new(successors) }
    }

    /// Successor set in canonical (sorted, deduplicated) order.
    pub fn successors(&self, s: &SystemState) -> Vec<SystemState> {
        let set: BTreeSet<SystemState> = (self.successors)(s).into_iter().collect();
        set.into_iter().collect()
    }

    pub fn is_enabled(&self, s: &SystemState) -> bool {
        !(self.successors)(s).is_empty()
    }
}

impl fmt::Debug for ProcessDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessDef").field("name", &self.name).field("fairness", &self.fairness).finish_non_exhaustive()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("model has no initial state")]
    NoInitialState,
    #[error("state has {got} values but the model declares {want} variables")]
    NotTotal { got: usize, want: usize },
    #[error("process `{process}` assigns out-of-domain value {value} to `{var}`")]
    DomainViolation { process: String, var: String, value: String },
    #[error("initial state assigns out-of-domain value {value} to `{var}`")]
    InitialDomainViolation { var: String, value: String },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate process `{0}`")]
    DuplicateProcess(String),
}

/// A finite state machine: initial states, the disjunction of processes, and
/// a terminal predicate. Terminal states are absorbing.
#[derive(Clone)]
pub struct Model {
    variables: Vec<VarDecl>,
    initial: Vec<SystemState>,
    processes: Vec<ProcessDef>,
    terminal: Arc<StatePredicate>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("variables", &self.variables)
            .field("initial", &self.initial.len())
            .field("processes", &self.processes)
            .finish_non_exhaustive()
    }
}

impl Model {
    pub fn new(
        variables: Vec<VarDecl>,
        initial: Vec<SystemState>,
        processes: Vec<ProcessDef>,
        terminal: impl Fn(&SystemState) -> bool + Send + Sync + 'static,
    ) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for v in &variables {
            if !seen.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &processes {
            if !seen.insert(p.name.as_str()) {
                return Err(ModelError::DuplicateProcess(p.name.clone()));
            }
        }
        if initial.is_empty() {
            return Err(ModelError::NoInitialState);
        }
        let model = Self { variables, initial, processes, terminal: Arc::new(terminal) };
        for s in &model.initial {
            model.check_total(s)?;
            if let Some((var, value)) = model.first_violation(s) {
                return Err(ModelError::InitialDomainViolation { var, value });
            }
        }
        Ok(model)
    }

    pub fn variables(&self) -> &[VarDecl] {
        &self.variables
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn initial(&self) -> &[SystemState] {
        &self.initial
    }

    pub fn processes(&self) -> &[ProcessDef] {
        &self.processes
    }

    pub fn process_index(&self, name: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.name == name)
    }

    pub fn is_terminal(&self, s: &SystemState) -> bool {
        (self.terminal)(s)
    }

    fn check_total(&self, s: &SystemState) -> Result<(), ModelError> {
        if s.len() != self.variables.len() {
            return Err(ModelError::NotTotal { got: s.len(), want: self.variables.len() });
        }
        Ok(())
    }

    fn first_violation(&self, s: &SystemState) -> Option<(String, String)> {
        self.variables
            .iter()
            .zip(s.values())
            .find(|(decl, v)| !decl.domain.contains(v))
            .map(|(decl, v)| (decl.name.clone(), v.to_string()))
    }

    /// Successors of `s` tagged with the index of the process producing them,
    /// in process order and then canonical successor order. Empty for
    /// terminal states.
    pub fn successors_indexed(&self, s: &SystemState) -> Result<Vec<(usize, SystemState)>, ModelError> {
        self.check_total(s)?;
        if self.is_terminal(s) {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for (idx, p) in self.processes.iter().enumerate() {
            for next in p.successors(s) {
                self.check_total(&next)?;
                if let Some((var, value)) = self.first_violation(&next) {
                    return Err(ModelError::DomainViolation { process: p.name.clone(), var, value });
                }
                out.push((idx, next));
            }
        }
        Ok(out)
    }

    /// Same as [`Model::successors_indexed`], tagged with process names.
    pub fn successors(&self, s: &SystemState) -> Result<Vec<(String, SystemState)>, ModelError> {
        Ok(self.successors_indexed(s)?.into_iter().map(|(i, next)| (self.processes[i].name.clone(), next)).collect())
    }

    /// `name: value` lines for every variable.
    pub fn describe(&self, s: &SystemState) -> Vec<(String, String)> {
        self.variables.iter().zip(s.values()).map(|(d, v)| (d.name.clone(), v.to_string())).collect()
    }

    /// Variables whose values differ between `a` and `b`, with their new values.
    pub fn diff(&self, a: &SystemState, b: &SystemState) -> Vec<(String, String)> {
        self.variables
            .iter()
            .zip(a.values().iter().zip(b.values()))
            .filter(|(_, (x, y))| x != y)
            .map(|(d, (_, y))| (d.name.clone(), y.to_string()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counter_model(limit: i64) -> Model {
        let vars = vec![VarDecl { name: "x".into(), domain: Domain::Int { lo: 0, hi: 3 } }];
        let tick = ProcessDef::new("tick", FairnessClass::Weak, |s: &SystemState| {
            let x = s.get(0).as_int().unwrap();
            vec![SystemState::new(vec![Value::Int(x + 1)])]
        });
        Model::new(vars, vec![SystemState::new(vec![Value::Int(0)])], vec![tick], move |s| {
            s.get(0).as_int().unwrap() >= limit
        })
        .unwrap()
    }

    #[test]
    fn terminal_state_has_no_successors() {
        let m = counter_model(0);
        assert!(m.successors(&m.initial()[0]).unwrap().is_empty());
    }

    #[test]
    fn singleton_enablement() {
        let m = counter_model(3);
        let succ = m.successors(&m.initial()[0]).unwrap();
        assert_eq!(succ, vec![("tick".to_string(), SystemState::new(vec![Value::Int(1)]))]);
    }

    #[test]
    fn out_of_domain_successor_is_an_error() {
        let m = counter_model(10);
        let s = SystemState::new(vec![Value::Int(3)]);
        assert!(matches!(m.successors(&s), Err(ModelError::DomainViolation { .. })));
    }

    #[test]
    fn partial_state_rejected() {
        let m = counter_model(3);
        assert!(matches!(m.successors(&SystemState::new(vec![])), Err(ModelError::NotTotal { got: 0, want: 1 })));
    }

    #[test]
    fn successor_sets_are_canonical_and_pure() {
        let vars = vec![VarDecl { name: "x".into(), domain: Domain::Int { lo: 0, hi: 9 } }];
        let p = ProcessDef::new("p", FairnessClass::Unfair, |_s: &SystemState| {
            vec![3, 1, 3, 2].into_iter().map(|v| SystemState::new(vec![Value::Int(v)])).collect()
        });
        let m = Model::new(vars, vec![SystemState::new(vec![Value::Int(0)])], vec![p], |_| false).unwrap();
        let s0 = &m.initial()[0];
        let a = m.successors(s0).unwrap();
        let vals: Vec<i64> = a.iter().map(|(_, s)| s.get(0).as_int().unwrap()).collect();
        assert_eq!(vals, vec![1, 2, 3]);
        assert_eq!(a, m.successors(s0).unwrap());
    }

    #[test]
    fn domain_membership() {
        let q = Domain::Queue { elem: Box::new(Domain::OptCommand { t_max: 4 }), max_len: 1 };
        use crate::kernel::value::Command;
        assert!(q.contains(&Value::Queue(vec![])));
        assert!(q.contains(&Value::Queue(vec![Command::dynamic(4, 3).into()])));
        assert!(!q.contains(&Value::Queue(vec![Command::dynamic(5, 3).into()])));
        assert!(!q.contains(&Value::Queue(vec![Command::dynamic(1, 3).into(); 2])));
        assert!(!q.contains(&Value::List(vec![])));
        assert!(Domain::OptCommand { t_max: 1 }.contains(&Value::Absent));
        assert!(!Domain::Int { lo: 0, hi: 1 }.contains(&Value::Int(2)));
    }
}
