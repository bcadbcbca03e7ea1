//! Requirements checked against the UAV model, plus structural invariants
//! used to sanity-check the model itself.

use crate::checker::{state_pred, LeadsTo, Property};
use crate::kernel::CommandName;

use super::{failure_detected, is_terminal, UavModel, UavState};

fn is_update(a: &UavState, b: &UavState) -> bool {
    b.last_update_t != a.last_update_t
}

/// P1, P2, P4, P5, P7 and P8, in that order.
pub fn property_catalog(uav: &UavModel) -> Vec<Property> {
    let layout = uav.layout;
    let cfg = uav.config.clone();
    let mut props = Vec::new();

    let c = cfg.clone();
    props.push(Property::LeadsTo(LeadsTo::new(
        "P1",
        state_pred(|_| true),
        state_pred(move |s| is_terminal(&c, &layout.decode(s))),
    )));

    // An update that saw a non-positive reading must not raise the estimate;
    // with a tolerance configured, a normal finish must also leave d near s.
    let c = cfg.clone();
    props.push(Property::action("P2", move |a, b| {
        let (a, b) = (layout.decode(a), layout.decode(b));
        let saw_failure = a.obs_in.iter().flatten().any(|o| o.value <= 0);
        if is_update(&a, &b) && saw_failure && b.d > a.d {
            return false;
        }
        match c.sync_tol {
            Some(tol) if is_terminal(&c, &b) && !failure_detected(&b) => (b.d - b.s).abs() <= tol,
            _ => true,
        }
    }));

    // The readings an update consumes are the newest ones in its pre-state.
    props.push(Property::action("P4", move |a, b| {
        let (a, b) = (layout.decode(a), layout.decode(b));
        !is_update(&a, &b) || a.obs_in.iter().all(|o| o.is_some_and(|o| o.t == b.last_update_t))
    }));

    let mut cases = Vec::new();
    for m in 0..cfg.sensors {
        for k in 1..=cfg.t_max {
            let c = cfg.clone();
            cases.push((
                state_pred(move |s| layout.decode(s).n_obs[m].iter().any(|o| o.t == k)),
                state_pred(move |s| {
                    let st = layout.decode(s);
                    st.n_obs[m].iter().all(|o| o.t != k) || is_terminal(&c, &st)
                }),
            ));
        }
    }
    props.push(Property::LeadsTo(LeadsTo::family("P5", cases)));

    let mut cases = Vec::new();
    for k in 1..=cfg.t_max {
        let c = cfg.clone();
        cases.push((
            state_pred(move |s| {
                let st = layout.decode(s);
                st.u.is_some_and(|u| u.t == k) && st.n_u.iter().any(|u| u.t == k && u.name == CommandName::Dynamic)
            }),
            state_pred(move |s| {
                let st = layout.decode(s);
                st.u_executed.is_some_and(|e| e.t >= k) || is_terminal(&c, &st)
            }),
        ));
    }
    props.push(Property::LeadsTo(LeadsTo::family("P7", cases)));

    props.push(Property::action("P8", move |a, b| {
        let (a, b) = (layout.decode(a), layout.decode(b));
        match (a.u_executed, b.u_executed) {
            (Some(x), Some(y)) if x != y => y.t > x.t,
            _ => true,
        }
    }));
    props
}

/// Health never improves, the clock moves by at most one, and channels stay
/// bounded with strictly increasing timestamps.
pub fn structural_invariants(uav: &UavModel) -> Vec<Property> {
    let layout = uav.layout;
    let t_max = uav.config.t_max as usize;
    vec![
        Property::action("health-monotone", move |a, b| layout.decode(b).s <= layout.decode(a).s),
        Property::action("clock-step", move |a, b| {
            let (ta, tb) = (layout.decode(a).t, layout.decode(b).t);
            tb == ta || tb == ta + 1
        }),
        Property::state("queues-bounded", move |s| {
            let st = layout.decode(s);
            st.n_u.len() <= t_max && st.n_obs.iter().all(|q| q.len() <= t_max)
        }),
        Property::state("queues-ordered", move |s| {
            let st = layout.decode(s);
            st.n_u.windows(2).all(|w| w[0].t < w[1].t) && st.n_obs.iter().all(|q| q.windows(2).all(|w| w[0].t < w[1].t))
        }),
        Property::action("count-tracks-executions", move |a, b| {
            let (a, b) = (layout.decode(a), layout.decode(b));
            let executed = b.u_executed != a.u_executed || b.u_executed_count != a.u_executed_count;
            if executed {
                b.u_executed_count == a.u_executed_count + 1
            } else {
                b.u_executed_count == a.u_executed_count
            }
        }),
    ]
}
