//! Leads-to checking under per-process fairness.
//!
//! A violation of `P ~> Q` is a fair execution that reaches a `P ∧ ¬Q` state
//! and then avoids `Q` forever. On a finite graph that execution ends either
//! in a state where it may stutter forever (no weakly or strongly fair process
//! is enabled there, which covers terminal states) or in a fair cycle of
//! `¬Q` states. Fair cycles are found by SCC decomposition with the usual
//! Streett refinement: states enabling a strongly fair process that the
//! component never takes are removed and the remainder is decomposed again.

use std::collections::{BTreeSet, VecDeque};

use super::graph::StateGraph;
use super::property::{CheckResult, Counterexample, LeadsTo, Step, STUTTER};
use super::safety::prefix_to;
use crate::kernel::FairnessClass;

/// Check every case of `prop`; the first failing case decides the result.
pub fn check_leads_to(graph: &StateGraph, prop: &LeadsTo, fairness: &[FairnessClass]) -> CheckResult {
    assert_eq!(fairness.len(), graph.process_names().len(), "one fairness class per process");
    for (case, (trigger, goal)) in prop.cases.iter().enumerate() {
        let flags = graph.map_states(|_, s| (trigger(s), goal(s)));
        let p: Vec<bool> = flags.iter().map(|f| f.0).collect();
        let q: Vec<bool> = flags.iter().map(|f| f.1).collect();
        if let Some(trace) = find_violation(graph, &p, &q, fairness) {
            let which = if prop.cases.len() > 1 { format!(" (case {})", case + 1) } else { String::new() };
            return CheckResult::fail(format!("leads-to {}{} violated", prop.name, which), trace);
        }
    }
    CheckResult::pass()
}

fn enabled(graph: &StateGraph, v: u32) -> BTreeSet<u16> {
    graph.edges_from(v).iter().map(|e| e.process).collect()
}

fn find_violation(graph: &StateGraph, p: &[bool], q: &[bool], fairness: &[FairnessClass]) -> Option<Counterexample> {
    let n = graph.len();
    // Breadth-first sweep of ¬Q states reachable from P ∧ ¬Q states.
    let mut pending = vec![false; n];
    let mut via: Vec<Option<(u32, u16)>> = vec![None; n];
    let mut order = vec![];
    let mut queue = VecDeque::new();
    for v in 0..n {
        if p[v] && !q[v] {
            pending[v] = true;
            queue.push_back(v as u32);
        }
    }
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for e in graph.edges_from(v) {
            let w = e.to as usize;
            if !q[w] && !pending[w] {
                pending[w] = true;
                via[w] = Some((v, e.process));
                queue.push_back(e.to);
            }
        }
    }
    if order.is_empty() {
        return None;
    }

    let stutters = |v: u32| enabled(graph, v).iter().all(|&pr| fairness[pr as usize] == FairnessClass::Unfair);
    let mut member = vec![usize::MAX; n];
    let fair = fair_components(graph, &pending, fairness);
    for (ci, comp) in fair.iter().enumerate() {
        for &v in comp {
            member[v as usize] = ci;
        }
    }
    let witness = order.iter().copied().find(|&v| stutters(v) || member[v as usize] != usize::MAX)?;

    // Prefix: initial -> trigger state along the BFS tree, then the ¬Q path.
    let mut tail = vec![];
    let mut cur = witness;
    while let Some((prev, pr)) = via[cur as usize] {
        tail.push((pr, cur));
        cur = prev;
    }
    tail.reverse();
    let mut prefix = prefix_to(graph, cur);
    prefix.extend(
        tail.into_iter()
            .map(|(pr, s)| Step { process: Some(graph.process_name(pr).to_owned()), state: graph.state(s) }),
    );

    let lasso = if member[witness as usize] != usize::MAX {
        fair_walk(graph, &fair[member[witness as usize]], witness)
            .into_iter()
            .map(|(pr, s)| Step { process: Some(graph.process_name(pr).to_owned()), state: graph.state(s) })
            .collect()
    } else {
        vec![Step { process: Some(STUTTER.to_owned()), state: graph.state(witness) }]
    };
    Some(Counterexample { prefix, lasso: Some(lasso) })
}

/// Strongly connected components (Tarjan, iterative) of the subgraph induced
/// by `allowed`. Only non-trivial components are returned: more than one
/// state, or a single state with a self-loop.
pub(crate) fn sccs(graph: &StateGraph, allowed: &[bool]) -> Vec<Vec<u32>> {
    let n = graph.len();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = vec![];
    let mut out = vec![];
    let mut next = 0u32;
    let mut call: Vec<(u32, usize)> = vec![];
    for root in 0..n as u32 {
        if !allowed[root as usize] || index[root as usize] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&(v, k)) = call.last() {
            let edges = graph.edges_from(v);
            if k < edges.len() {
                let w = edges[k].to;
                call.last_mut().expect("non-empty").1 += 1;
                if !allowed[w as usize] {
                    continue;
                }
                if index[w as usize] == UNSEEN {
                    index[w as usize] = next;
                    low[w as usize] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                let mut comp = vec![];
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w as usize] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                let nontrivial = comp.len() > 1 || graph.edges_from(v).iter().any(|e| e.to == v);
                if nontrivial {
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out.sort();
    out
}

/// Components of `allowed` that contain a fair cycle.
pub(crate) fn fair_components(graph: &StateGraph, allowed: &[bool], fairness: &[FairnessClass]) -> Vec<Vec<u32>> {
    let n = graph.len();
    let mut fair = vec![];
    let mut work = sccs(graph, allowed);
    work.reverse();
    while let Some(comp) = work.pop() {
        let mut inside = vec![false; n];
        for &v in &comp {
            inside[v as usize] = true;
        }
        let mut taken = BTreeSet::new();
        let mut enabled_somewhere = BTreeSet::new();
        for &v in &comp {
            for e in graph.edges_from(v) {
                enabled_somewhere.insert(e.process);
                if inside[e.to as usize] {
                    taken.insert(e.process);
                }
            }
        }
        let starved: BTreeSet<u16> = enabled_somewhere
            .iter()
            .copied()
            .filter(|pr| fairness[*pr as usize] == FairnessClass::Strong && !taken.contains(pr))
            .collect();
        if !starved.is_empty() {
            let mut sub = inside.clone();
            for &v in &comp {
                if graph.edges_from(v).iter().any(|e| starved.contains(&e.process)) {
                    sub[v as usize] = false;
                }
            }
            let mut parts = sccs(graph, &sub);
            parts.reverse();
            work.extend(parts);
            continue;
        }
        let weak_starved = (0..fairness.len() as u16).any(|pr| {
            fairness[pr as usize] == FairnessClass::Weak
                && !taken.contains(&pr)
                && comp.iter().all(|&v| graph.edges_from(v).iter().any(|e| e.process == pr))
        });
        if !weak_starved {
            fair.push(comp);
        }
    }
    fair.sort();
    fair
}

/// Shortest path inside `inside` from `from` to `to`, as `(process, state)` steps.
fn path_within(graph: &StateGraph, inside: &[bool], from: u32, to: u32) -> Vec<(u16, u32)> {
    if from == to {
        return vec![];
    }
    let mut via: Vec<Option<(u32, u16)>> = vec![None; graph.len()];
    let mut seen = vec![false; graph.len()];
    seen[from as usize] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for e in graph.edges_from(v) {
            if inside[e.to as usize] && !seen[e.to as usize] {
                seen[e.to as usize] = true;
                via[e.to as usize] = Some((v, e.process));
                if e.to == to {
                    let mut out = vec![];
                    let mut cur = to;
                    while cur != from {
                        let (prev, pr) = via[cur as usize].expect("bfs tree");
                        out.push((pr, cur));
                        cur = prev;
                    }
                    out.reverse();
                    return out;
                }
                queue.push_back(e.to);
            }
        }
    }
    unreachable!("component is strongly connected")
}

/// A closed walk from `start` through every state of `comp` that takes at
/// least one edge of every process occurring inside the component. Such a
/// walk satisfies every fairness obligation the component can satisfy.
fn fair_walk(graph: &StateGraph, comp: &[u32], start: u32) -> Vec<(u16, u32)> {
    let mut inside = vec![false; graph.len()];
    for &v in comp {
        inside[v as usize] = true;
    }
    let mut required: Vec<(u32, u16, u32)> = vec![];
    let mut labels = BTreeSet::new();
    for &v in comp {
        for e in graph.edges_from(v) {
            if inside[e.to as usize] && labels.insert(e.process) {
                required.push((v, e.process, e.to));
            }
        }
    }
    let mut walk = vec![];
    let mut cur = start;
    let mut visited = BTreeSet::from([start]);
    for (from, pr, to) in required {
        let hop = path_within(graph, &inside, cur, from);
        visited.extend(hop.iter().map(|s| s.1));
        walk.extend(hop);
        walk.push((pr, to));
        visited.insert(to);
        cur = to;
    }
    for &v in comp {
        if !visited.contains(&v) {
            let hop = path_within(graph, &inside, cur, v);
            visited.extend(hop.iter().map(|s| s.1));
            walk.extend(hop);
            cur = v;
        }
    }
    walk.extend(path_within(graph, &inside, cur, start));
    walk
}
