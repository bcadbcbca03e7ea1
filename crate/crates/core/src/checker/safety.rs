//! Invariant and termination checks over a fully explored graph.

use rayon::prelude::*;

use super::graph::StateGraph;
use super::property::{ActionInvariant, CheckResult, Counterexample, StateInvariant, Step};

/// Prefix from an initial state to `id` along the breadth-first tree.
pub(crate) fn prefix_to(graph: &StateGraph, id: u32) -> Vec<Step> {
    graph
        .path_to(id)
        .into_iter()
        .map(|(p, s)| Step { process: p.map(|p| graph.process_name(p).to_owned()), state: graph.state(s) })
        .collect()
}

/// Holds iff the predicate is true in every reachable state. A failure
/// carries a shortest path to the first violating state in breadth-first
/// order.
pub fn check_state_invariant(graph: &StateGraph, inv: &StateInvariant) -> CheckResult {
    let bad = graph.map_states(|_, s| !(inv.pred)(s));
    match bad.iter().position(|b| *b) {
        None => CheckResult::pass(),
        Some(id) => CheckResult::fail(
            format!("invariant {} violated", inv.name),
            Counterexample { prefix: prefix_to(graph, id as u32), lasso: None },
        ),
    }
}

/// Holds iff the predicate is true on every edge. A failure ends with the
/// violating edge, reached along a shortest path.
pub fn check_action_invariant(graph: &StateGraph, inv: &ActionInvariant) -> CheckResult {
    // First violating edge index per source state, in process order.
    let bad: Vec<Option<usize>> = (0..graph.len() as u32)
        .into_par_iter()
        .map(|from| {
            let edges = graph.edges_from(from);
            if edges.is_empty() {
                return None;
            }
            let s = graph.state(from);
            edges.iter().position(|e| !(inv.pred)(&s, &graph.state(e.to)))
        })
        .collect();
    // States are numbered by non-decreasing depth, so the first hit is shortest.
    let Some((from, k)) = bad.iter().enumerate().find_map(|(i, b)| b.map(|k| (i as u32, k))) else {
        return CheckResult::pass();
    };
    let edge = graph.edges_from(from)[k];
    let mut prefix = prefix_to(graph, from);
    prefix.push(Step { process: Some(graph.process_name(edge.process).to_owned()), state: graph.state(edge.to) });
    CheckResult::fail(format!("action invariant {} violated", inv.name), Counterexample { prefix, lasso: None })
}

/// Holds iff every state without successors is terminal and the non-terminal
/// part of the graph is acyclic.
pub fn check_termination(graph: &StateGraph) -> CheckResult {
    if let Some(id) = (0..graph.len() as u32).find(|&i| !graph.is_terminal(i) && graph.edges_from(i).is_empty()) {
        return CheckResult::fail(
            "non-terminal deadlock",
            Counterexample { prefix: prefix_to(graph, id), lasso: None },
        );
    }
    match find_cycle(graph) {
        None => CheckResult::pass(),
        Some(cycle) => {
            let entry = cycle[0].1;
            let prefix = prefix_to(graph, entry);
            let lasso = cycle
                .iter()
                .skip(1)
                .chain(std::iter::once(&cycle[0]))
                .map(|&(p, s)| Step {
                    process: Some(graph.process_name(p.expect("cycle edges are labelled")).to_owned()),
                    state: graph.state(s),
                })
                .collect();
            CheckResult::fail("non-terminating cycle", Counterexample { prefix, lasso: Some(lasso) })
        }
    }
}

/// First cycle found by iterative depth-first search from the lowest state
/// ids. Returned as `(incoming process, state)` pairs where the first entry's
/// process labels the closing edge.
fn find_cycle(graph: &StateGraph) -> Option<Vec<(Option<u16>, u32)>> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let n = graph.len();
    let mut color = vec![WHITE; n];
    // (state, next edge index, incoming process)
    let mut stack: Vec<(u32, usize, Option<u16>)> = vec![];
    for root in 0..n as u32 {
        if color[root as usize] != WHITE {
            continue;
        }
        color[root as usize] = GREY;
        stack.push((root, 0, None));
        while let Some(top) = stack.last_mut() {
            let (v, k) = (top.0, top.1);
            let edges = graph.edges_from(v);
            if k == edges.len() {
                color[v as usize] = BLACK;
                stack.pop();
                continue;
            }
            top.1 += 1;
            let e = edges[k];
            match color[e.to as usize] {
                WHITE => {
                    color[e.to as usize] = GREY;
                    stack.push((e.to, 0, Some(e.process)));
                }
                GREY => {
                    let start = stack.iter().position(|f| f.0 == e.to).expect("grey on stack");
                    let mut cycle: Vec<(Option<u16>, u32)> = stack[start..].iter().map(|f| (f.2, f.0)).collect();
                    cycle[0].0 = Some(e.process);
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}
