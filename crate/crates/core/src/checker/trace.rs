//! Counterexample rendering: a numbered listing for people and a JSON
//! document for tools.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::property::{Counterexample, Step};
use crate::kernel::SystemState;

fn changes(vars: &[String], prev: Option<&SystemState>, cur: &SystemState) -> Vec<(String, String)> {
    vars.iter()
        .enumerate()
        .filter(|(i, _)| prev.is_none_or(|p| p.get(*i) != cur.get(*i)))
        .map(|(i, name)| (name.clone(), cur.get(i).to_string()))
        .collect()
}

fn flatten(cx: &Counterexample) -> Vec<(&Step, bool)> {
    let mut steps: Vec<(&Step, bool)> = cx.prefix.iter().map(|s| (s, false)).collect();
    if let Some(lasso) = &cx.lasso {
        steps.extend(lasso.iter().map(|s| (s, true)));
    }
    steps
}

/// ```text
/// 1. Initial state
///    s: 3
/// 2. -> ExecuteControl
///    u_executed: {t: 1, name: "Backup", type: 2}
/// ```
/// The first state lists every variable; later steps list only the variables
/// that changed. Cycle steps follow a `-- cycle --` marker.
pub fn render_trace(vars: &[String], cx: &Counterexample) -> String {
    let mut out = String::new();
    let mut prev: Option<&SystemState> = None;
    let mut in_cycle = false;
    for (i, (step, cyc)) in flatten(cx).into_iter().enumerate() {
        if cyc && !in_cycle {
            out.push_str("-- cycle (repeats forever) --\n");
            in_cycle = true;
        }
        match &step.process {
            None => {
                let _ = writeln!(out, "{}. Initial state", i + 1);
            }
            Some(p) => {
                let _ = writeln!(out, "{}. -> {p}", i + 1);
            }
        }
        for (name, value) in changes(vars, prev, &step.state) {
            let _ = writeln!(out, "   {name}: {value}");
        }
        prev = Some(&step.state);
    }
    out
}

#[derive(Debug, Serialize)]
struct TraceRecord {
    index: usize,
    process: Option<String>,
    cycle: bool,
    changes: BTreeMap<String, String>,
}

/// One JSON record per step: index, process, whether it is part of the
/// repeating cycle, and the changed-variable map.
pub fn trace_json(vars: &[String], cx: &Counterexample) -> String {
    let mut prev: Option<&SystemState> = None;
    let mut records = vec![];
    for (i, (step, cyc)) in flatten(cx).into_iter().enumerate() {
        records.push(TraceRecord {
            index: i + 1,
            process: step.process.clone(),
            cycle: cyc,
            changes: changes(vars, prev, &step.state).into_iter().collect(),
        });
        prev = Some(&step.state);
    }
    serde_json::to_string_pretty(&records).expect("trace records serialize")
}
