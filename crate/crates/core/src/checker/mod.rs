//! Explicit-state exploration and verification.

pub mod dot;
pub mod graph;
pub mod liveness;
pub mod property;
pub mod safety;
pub mod trace;

pub use dot::{export_dot, DotOptions, DotSizeError};
pub use graph::{
    brute_force_explore, count_states, count_states_with_workers, explore, explore_with_workers, Bounds, Counts,
    ExploreError, NaiveGraph, StateGraph,
};
pub use liveness::check_leads_to;
pub use property::{
    action_pred, state_pred, ActionInvariant, CheckResult, Counterexample, LeadsTo, Property, StateInvariant, Step,
    Verdict, STUTTER,
};
pub use safety::{check_action_invariant, check_state_invariant, check_termination};
pub use trace::{render_trace, trace_json};

/// Check any property against the graph, using the graph's own fairness
/// annotations for leads-to obligations.
pub fn check_property(graph: &StateGraph, prop: &Property) -> CheckResult {
    match prop {
        Property::State(p) => check_state_invariant(graph, p),
        Property::Action(p) => check_action_invariant(graph, p),
        Property::LeadsTo(p) => check_leads_to(graph, p, &graph.fairness.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Domain, FairnessClass, Model, ProcessDef, SystemState, Value, VarDecl};

    fn bits(vals: &[bool]) -> SystemState {
        SystemState::new(vals.iter().map(|b| Value::Bool(*b)).collect())
    }

    fn bit(s: &SystemState, i: usize) -> bool {
        s.get(i).as_bool().unwrap()
    }

    fn set_bit(i: usize, fairness: FairnessClass) -> ProcessDef {
        ProcessDef::new(format!("set{i}"), fairness, move |s: &SystemState| {
            if bit(s, i) {
                vec![]
            } else {
                let mut n = s.clone();
                n.set(i, Value::Bool(true));
                vec![n]
            }
        })
    }

    fn decl(name: &str) -> VarDecl {
        VarDecl { name: name.into(), domain: Domain::Bool }
    }

    /// Two independent flags, set in either order; terminal once both are set.
    fn two_bit() -> Model {
        Model::new(
            vec![decl("a"), decl("b")],
            vec![bits(&[false, false])],
            vec![set_bit(0, FairnessClass::Weak), set_bit(1, FairnessClass::Weak)],
            |s| bit(s, 0) && bit(s, 1),
        )
        .unwrap()
    }

    /// A message in flight (`delivered = false`) and a clock bit that toggles
    /// forever while it is. Delivery is the only way out.
    fn delivery(deliver: FairnessClass, with_clock: bool) -> Model {
        let mut procs = vec![set_bit(0, deliver)];
        if with_clock {
            procs.push(ProcessDef::new("tick", FairnessClass::Weak, |s: &SystemState| {
                let mut n = s.clone();
                n.set(1, Value::Bool(!bit(s, 1)));
                vec![n]
            }));
        }
        Model::new(vec![decl("delivered"), decl("clock")], vec![bits(&[false, false])], procs, |s| bit(s, 0)).unwrap()
    }

    fn received() -> LeadsTo {
        LeadsTo::new("received", state_pred(|_| true), state_pred(|s| bit(s, 0)))
    }

    #[test]
    fn lone_initial_state() {
        let m = Model::new(vec![decl("a")], vec![bits(&[false])], vec![], |_| false).unwrap();
        let (g, c) = explore(&m, Bounds::NONE).unwrap();
        assert_eq!(c, Counts { distinct: 1, total: 1 });
        assert!(!g.is_terminal(0));
        let (_, c2) = brute_force_explore(&m, Bounds::NONE).unwrap();
        assert_eq!(c2, c);
    }

    #[test]
    fn two_bit_interleaving_counts() {
        let (g, c) = explore(&two_bit(), Bounds::NONE).unwrap();
        // 00 -> {10, 01}, 10 -> 11, 01 -> 11, 11 terminal.
        assert_eq!(c, Counts { distinct: 4, total: 5 });
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.terminal_ids().collect::<Vec<_>>(), vec![3]);
        let (naive, c2) = brute_force_explore(&two_bit(), Bounds::NONE).unwrap();
        assert_eq!(c2, c);
        assert_eq!(naive.edge_multiset(), g.edge_multiset());
        assert_eq!(count_states(&two_bit(), Bounds::NONE).unwrap(), c);
        assert_eq!(
            count_states_with_workers(&delivery(FairnessClass::Weak, true), Bounds::NONE, 3).unwrap().distinct,
            4
        );
        assert!(count_states(&two_bit(), Bounds::states(3)).is_err());
    }

    #[test]
    fn exploration_is_worker_independent() {
        let m = delivery(FairnessClass::Strong, true);
        let (g1, c1) = explore_with_workers(&m, Bounds::NONE, 1).unwrap();
        let (g8, c8) = explore_with_workers(&m, Bounds::NONE, 8).unwrap();
        assert_eq!(c1, c8);
        assert_eq!(export_dot(&g1, &DotOptions::default()), export_dot(&g8, &DotOptions::default()));
    }

    #[test]
    fn limits_are_errors() {
        let m = two_bit();
        assert!(matches!(explore(&m, Bounds::states(2)), Err(ExploreError::LimitExceeded { which: "states", .. })));
        assert!(matches!(
            explore(&m, Bounds { max_states: None, max_depth: Some(1) }),
            Err(ExploreError::LimitExceeded { which: "depth", .. })
        ));
        assert!(explore(&m, Bounds { max_states: Some(4), max_depth: Some(2) }).is_ok());
        assert!(brute_force_explore(&m, Bounds::states(3)).is_err());
    }

    #[test]
    fn state_invariants() {
        let (g, _) = explore(&two_bit(), Bounds::NONE).unwrap();
        let yes = StateInvariant { name: "true".into(), pred: state_pred(|_| true) };
        assert!(check_state_invariant(&g, &yes).passed());
        let not_both = StateInvariant { name: "not both".into(), pred: state_pred(|s| !(bit(s, 0) && bit(s, 1))) };
        let r = check_state_invariant(&g, &not_both);
        assert_eq!(r.verdict, Verdict::Fail);
        let cx = r.trace.unwrap();
        assert_eq!(cx.prefix.len(), 3);
        assert_eq!(cx.prefix_processes(), vec!["set0", "set1"]);
        assert!(cx.lasso.is_none());
    }

    #[test]
    fn action_invariants() {
        let (g, _) = explore(&two_bit(), Bounds::NONE).unwrap();
        let any = ActionInvariant { name: "any".into(), pred: action_pred(|_, _| true) };
        assert!(check_action_invariant(&g, &any).passed());
        let a_first = ActionInvariant { name: "a first".into(), pred: action_pred(|s, t| bit(s, 0) || !bit(t, 1)) };
        let cx = check_action_invariant(&g, &a_first).trace.unwrap();
        assert_eq!(cx.prefix_processes(), vec!["set1"]);
    }

    #[test]
    fn termination() {
        let (g, _) = explore(&two_bit(), Bounds::NONE).unwrap();
        assert!(check_termination(&g).passed());

        let single = Model::new(vec![decl("a")], vec![bits(&[true])], vec![], |s| bit(s, 0)).unwrap();
        let (g, _) = explore(&single, Bounds::NONE).unwrap();
        assert!(check_termination(&g).passed());

        let spin = ProcessDef::new("spin", FairnessClass::Weak, |s: &SystemState| vec![s.clone()]);
        let looping = Model::new(vec![decl("a")], vec![bits(&[false])], vec![spin], |_| false).unwrap();
        let (g, _) = explore(&looping, Bounds::NONE).unwrap();
        let r = check_termination(&g);
        assert_eq!(r.reason.as_deref(), Some("non-terminating cycle"));
        let lasso = r.trace.unwrap().lasso.unwrap();
        assert_eq!(lasso.len(), 1);
        assert_eq!(lasso[0].process.as_deref(), Some("spin"));

        let stuck = Model::new(vec![decl("a")], vec![bits(&[false])], vec![], |_| false).unwrap();
        let (g, _) = explore(&stuck, Bounds::NONE).unwrap();
        assert_eq!(check_termination(&g).reason.as_deref(), Some("non-terminal deadlock"));
    }

    #[test]
    fn vacuous_leads_to() {
        let (g, _) = explore(&delivery(FairnessClass::Unfair, true), Bounds::NONE).unwrap();
        let p = LeadsTo::new("vacuous", state_pred(|_| false), state_pred(|_| false));
        assert!(check_leads_to(&g, &p, g.fairness()).passed());
    }

    #[test]
    fn strong_fairness_forces_delivery() {
        for with_clock in [false, true] {
            let (g, _) = explore(&delivery(FairnessClass::Strong, with_clock), Bounds::NONE).unwrap();
            assert!(check_leads_to(&g, &received(), g.fairness()).passed());
        }
    }

    #[test]
    fn unfair_delivery_starves() {
        // Without the clock the message may simply never move.
        let (g, _) = explore(&delivery(FairnessClass::Unfair, false), Bounds::NONE).unwrap();
        let r = check_leads_to(&g, &received(), g.fairness());
        let lasso = r.trace.unwrap().lasso.unwrap();
        assert_eq!(lasso[0].process.as_deref(), Some(STUTTER));

        // With the clock the starvation is a genuine cycle.
        let (g, _) = explore(&delivery(FairnessClass::Unfair, true), Bounds::NONE).unwrap();
        let r = check_leads_to(&g, &received(), g.fairness());
        assert_eq!(r.verdict, Verdict::Fail);
        let cx = r.trace.unwrap();
        let lasso = cx.lasso.as_ref().unwrap();
        assert!(lasso.iter().all(|s| s.process.as_deref() == Some("tick")));
        assert_eq!(&lasso.last().unwrap().state, cx.last_state());
        assert!(lasso.iter().all(|s| !bit(&s.state, 0)));
    }

    #[test]
    fn weak_fairness_on_continuously_enabled_delivery() {
        let (g, _) = explore(&delivery(FairnessClass::Weak, true), Bounds::NONE).unwrap();
        assert!(check_leads_to(&g, &received(), g.fairness()).passed());
        // Overriding fairness at check time changes the verdict.
        let unfair = vec![FairnessClass::Unfair, FairnessClass::Weak];
        assert!(!check_leads_to(&g, &received(), &unfair).passed());
    }

    #[test]
    fn weak_fairness_does_not_cover_intermittent_enabling() {
        // `deliver` is only enabled while the clock bit is set: weak fairness
        // allows the clock to starve it, strong fairness does not.
        let model = |f: FairnessClass| {
            let deliver = ProcessDef::new("deliver", f, |s: &SystemState| {
                if bit(s, 1) && !bit(s, 0) {
                    let mut n = s.clone();
                    n.set(0, Value::Bool(true));
                    vec![n]
                } else {
                    vec![]
                }
            });
            let tick = ProcessDef::new("tick", FairnessClass::Weak, |s: &SystemState| {
                let mut n = s.clone();
                n.set(1, Value::Bool(!bit(s, 1)));
                vec![n]
            });
            Model::new(vec![decl("delivered"), decl("clock")], vec![bits(&[false, false])], vec![deliver, tick], |s| {
                bit(s, 0)
            })
            .unwrap()
        };
        let (g, _) = explore(&model(FairnessClass::Weak), Bounds::NONE).unwrap();
        let r = check_leads_to(&g, &received(), g.fairness());
        assert!(!r.passed());
        assert_eq!(r.trace.unwrap().lasso.unwrap().len(), 2);
        let (g, _) = explore(&model(FairnessClass::Strong), Bounds::NONE).unwrap();
        assert!(check_leads_to(&g, &received(), g.fairness()).passed());
    }

    #[test]
    fn goal_missing_at_terminal_state_is_a_violation() {
        let (g, _) = explore(&two_bit(), Bounds::NONE).unwrap();
        let p = LeadsTo::new("never", state_pred(|_| true), state_pred(|_| false));
        let r = check_leads_to(&g, &p, g.fairness());
        let cx = r.trace.unwrap();
        assert_eq!(cx.prefix.len(), 3);
        assert_eq!(cx.lasso.unwrap()[0].process.as_deref(), Some(STUTTER));
    }

    #[test]
    fn dot_small_graphs() {
        let single = Model::new(vec![decl("a")], vec![bits(&[true])], vec![], |s| bit(s, 0)).unwrap();
        let (g, _) = explore(&single, Bounds::NONE).unwrap();
        let dot = export_dot(&g, &DotOptions::default()).unwrap();
        assert_eq!(
            dot,
            "digraph states {\n  node [shape=circle];\n  1 [color=blue, style=filled, fillcolor=orange];\n}\n"
        );

        let chain = Model::new(
            vec![decl("a"), decl("b")],
            vec![bits(&[false, false])],
            vec![
                set_bit(0, FairnessClass::Weak),
                ProcessDef::new("set1", FairnessClass::Weak, |s: &SystemState| {
                    if bit(s, 0) && !bit(s, 1) {
                        vec![bits(&[true, true])]
                    } else {
                        vec![]
                    }
                }),
            ],
            |s| bit(s, 1),
        )
        .unwrap();
        let (g, _) = explore(&chain, Bounds::NONE).unwrap();
        let dot = export_dot(&g, &DotOptions::default()).unwrap();
        assert_eq!(
            dot,
            "digraph states {\n  node [shape=circle];\n  1 [color=blue];\n  2 [color=black];\n  3 [color=orange];\n  \
             1 -> 2 [label=\"set0\"];\n  2 -> 3 [label=\"set1\"];\n}\n"
        );
        let unlabelled = export_dot(&g, &DotOptions { edge_labels: false, vertex_limit: 3 }).unwrap();
        assert!(unlabelled.contains("  1 -> 2;\n"));
        assert_eq!(
            export_dot(&g, &DotOptions { edge_labels: true, vertex_limit: 2 }),
            Err(DotSizeError { vertices: 3, limit: 2 })
        );
    }

    #[test]
    fn rendered_trace_lists_changes() {
        let (g, _) = explore(&two_bit(), Bounds::NONE).unwrap();
        let inv = StateInvariant { name: "x".into(), pred: state_pred(|s| !bit(s, 1)) };
        let cx = check_state_invariant(&g, &inv).trace.unwrap();
        let text = render_trace(g.variables(), &cx);
        assert_eq!(text, "1. Initial state\n   a: false\n   b: false\n2. -> set1\n   b: true\n");
        let json: serde_json::Value = serde_json::from_str(&trace_json(g.variables(), &cx)).unwrap();
        assert_eq!(json[1]["process"], "set1");
        assert_eq!(json[1]["changes"]["b"], "true");
        assert_eq!(json[0]["index"], 1);
    }
}
