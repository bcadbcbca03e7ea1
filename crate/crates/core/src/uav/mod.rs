//! The UAV digital twin: a physical twin that senses and maneuvers, a
//! digital twin that tracks structural health and issues commands, and the
//! lossy, reordering channels between them.

mod config;
mod properties;
mod state;

pub use config::{ConfigError, UavConfig, Variant};
pub use properties::{property_catalog, structural_invariants};
pub use state::{Layout, UavState};

use std::sync::Arc;

use thiserror::Error;

use crate::kernel::{
    channel_take, Command, FairnessClass, Message, Model, ModelError, Observation, ProcessDef, SystemState,
};

#[derive(Debug, Error)]
pub enum UavError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A built model together with the configuration and layout needed to
/// interpret its states.
#[derive(Debug, Clone)]
pub struct UavModel {
    pub config: UavConfig,
    pub layout: Layout,
    pub model: Model,
}

impl UavModel {
    pub fn decode(&self, s: &SystemState) -> UavState {
        self.layout.decode(s)
    }

    pub fn encode(&self, st: &UavState) -> SystemState {
        self.layout.encode(st)
    }
}

/// The twin believes the airframe is gone and every sensor's newest
/// received reading agrees.
pub fn failure_detected(st: &UavState) -> bool {
    st.d <= 0 && (0..st.sensors()).all(|m| st.newest_reading_low(m))
}

pub fn is_terminal(cfg: &UavConfig, st: &UavState) -> bool {
    st.u_executed_count >= cfg.c_max || st.t >= cfg.t_max || failure_detected(st) || st.s <= 0
}

/// A message may stay in flight for fewer than `eta` epoch openings.
fn overdue(cfg: &UavConfig, st: &UavState, epoch: u32) -> bool {
    let late = |t: u32| t as usize + cfg.eta <= epoch as usize;
    st.n_obs.iter().flatten().any(|o| late(o.t)) || st.n_u.iter().any(|c| late(c.t))
}

fn observe_emit(cfg: &UavConfig, m: usize, st: &UavState) -> Vec<UavState> {
    if st.s <= 0 || st.t >= cfg.t_max {
        return vec![];
    }
    // Sensor 1 opens the next epoch once every sensor has sampled this one.
    let stamp = if m == 0 {
        if st.sampled[1..].iter().any(|&k| k != st.t) || overdue(cfg, st, st.t + 1) {
            return vec![];
        }
        st.t + 1
    } else {
        if st.t < 1 || st.sampled[m] >= st.t {
            return vec![];
        }
        st.t
    };
    (-cfg.noise..=cfg.noise)
        .map(|eps| {
            let obs = Observation { t: stamp, sensor: (m + 1) as u8, value: (st.s + eps) as i32 };
            let mut next = st.clone();
            next.sampled[m] = stamp;
            next.n_obs[m].push(obs);
            next.t = if m == 0 { st.t + 1 } else { st.t };
            next
        })
        .collect()
}

fn receive_obs(cfg: &UavConfig, m: usize, i: usize, st: &UavState) -> Vec<UavState> {
    let queue: Vec<Message> = st.n_obs[m].iter().copied().map(Message::from).collect();
    let Ok((msg, rest)) = channel_take(&queue, i, cfg.eta) else {
        return vec![];
    };
    let obs = *msg.as_observation().expect("observation channel");
    let mut next = st.clone();
    next.n_obs[m] = rest.iter().map(|x| *x.as_observation().expect("observation channel")).collect();
    let newest = st.obs_in[m].map_or(st.last_update_t, |o| o.t);
    if obs.t > newest {
        next.obs_in[m] = Some(obs);
    }
    vec![next]
}

fn update_digital(cfg: &UavConfig, st: &UavState) -> Vec<UavState> {
    let Some(inputs) = st.pending_readings() else {
        return vec![];
    };
    let k = inputs[0].t;
    if inputs.iter().any(|o| o.t != k) || k <= st.last_update_t {
        return vec![];
    }
    let failing = cfg.variant != Variant::BrokenP3 && inputs.iter().any(|o| o.value <= 0);
    let candidates: Vec<i64> = if failing {
        (0..=st.d).collect()
    } else {
        let zeta = match st.u.map_or(2, |u| u.kind) {
            2 => cfg.zeta2,
            _ => cfg.zeta3,
        };
        let mut ds: Vec<i64> = (-zeta..=zeta).map(|z| (st.d + z).clamp(0, 100)).collect();
        ds.dedup();
        ds
    };
    candidates
        .into_iter()
        .map(|d| {
            let mut next = st.clone();
            next.d = d;
            next.last_update_t = k;
            next.d_fresh = true;
            for (m, o) in inputs.iter().enumerate() {
                next.consumed_low[m] = o.value <= 0;
                next.obs_in[m] = None;
            }
            next
        })
        .collect()
}

fn compute_emit_control(cfg: &UavConfig, st: &UavState) -> Vec<UavState> {
    if !st.d_fresh || st.t > cfg.t_max || st.u.is_some_and(|u| u.t >= st.t) {
        return vec![];
    }
    let kinds: &[u8] = if st.d >= cfg.d_min { &[3, 2] } else { &[2] };
    kinds
        .iter()
        .map(|&kind| {
            let cmd = Command::dynamic(st.t, kind);
            let mut next = st.clone();
            next.u = Some(cmd);
            next.n_u.push(cmd);
            next.d_fresh = false;
            next
        })
        .collect()
}

fn receive_control(cfg: &UavConfig, i: usize, st: &UavState) -> Vec<UavState> {
    if st.s <= 0 || st.u_executed_count > cfg.c_max {
        return vec![];
    }
    let queue: Vec<Message> = st.n_u.iter().copied().map(Message::from).collect();
    let Ok((msg, rest)) = channel_take(&queue, i, cfg.eta) else {
        return vec![];
    };
    let cmd = *msg.as_command().expect("command channel");
    let mut next = st.clone();
    next.n_u = rest.iter().map(|x| *x.as_command().expect("command channel")).collect();
    let accept = match cfg.variant {
        Variant::BuggyP8 => true,
        Variant::Fixed | Variant::BrokenP3 => cmd.t as i64 > st.u_in.map_or(-1, |u| u.t as i64),
    };
    if accept {
        next.u_in = Some(cmd);
    }
    vec![next]
}

fn damaged(cfg: &UavConfig, st: UavState) -> [UavState; 2] {
    let mut hit = st.clone();
    hit.s = (st.s - cfg.delta).max(0);
    [st, hit]
}

/// Executes the accepted command if it has not run yet; otherwise flies a
/// backup maneuver once per epoch. The backup also becomes the accepted
/// command, so the fixed receive check rejects anything it supersedes.
fn execute_control(cfg: &UavConfig, st: &UavState) -> Vec<UavState> {
    if st.s <= 0 || st.u_executed_count >= cfg.c_max || st.damage_pending {
        return vec![];
    }
    let cmd = match st.u_in {
        Some(u) if st.u_executed != Some(u) => u,
        _ if st.t >= 1 && st.u_executed.is_none_or(|e| e.t < st.t) => Command::backup(st.t),
        _ => return vec![],
    };
    let mut next = st.clone();
    next.u_in = Some(cmd);
    next.u_executed = Some(cmd);
    next.u_executed_count += 1;
    if cfg.split_damage {
        next.damage_pending = true;
        vec![next]
    } else {
        damaged(cfg, next).into()
    }
}

fn apply_damage(cfg: &UavConfig, st: &UavState) -> Vec<UavState> {
    if !st.damage_pending {
        return vec![];
    }
    let mut next = st.clone();
    next.damage_pending = false;
    damaged(cfg, next).into()
}

type StepFn = dyn Fn(&UavConfig, &UavState) -> Vec<UavState> + Send + Sync;

fn process(
    cfg: &Arc<UavConfig>,
    layout: Layout,
    name: String,
    fairness: FairnessClass,
    step: Arc<StepFn>,
) -> ProcessDef {
    let cfg = Arc::clone(cfg);
    ProcessDef::new(name, fairness, move |s| {
        let st = layout.decode(s);
        step(&cfg, &st).iter().map(|n| layout.encode(n)).collect()
    })
}

fn window_fairness(i: usize) -> FairnessClass {
    if i == 1 {
        FairnessClass::Strong
    } else {
        FairnessClass::Unfair
    }
}

/// Physical-twin processes first, then digital-twin ones; counterexample
/// search breaks ties in this order.
pub fn build_model(cfg: &UavConfig) -> Result<UavModel, UavError> {
    cfg.validate()?;
    let layout = Layout::of(cfg);
    let shared = Arc::new(cfg.clone());
    let mut procs = Vec::new();
    let mut add =
        |name: String, fairness, step: Arc<StepFn>| procs.push(process(&shared, layout, name, fairness, step));

    for m in 0..cfg.sensors {
        add(format!("ObserveEmit_{}", m + 1), FairnessClass::Strong, Arc::new(move |c, s| observe_emit(c, m, s)));
    }
    add("ExecuteControl".into(), FairnessClass::Strong, Arc::new(execute_control));
    if cfg.split_damage {
        add("ApplyDamage".into(), FairnessClass::Strong, Arc::new(apply_damage));
    }
    for i in 1..=cfg.eta {
        add(format!("ReceiveControl_{i}"), window_fairness(i), Arc::new(move |c, s| receive_control(c, i, s)));
    }
    for m in 0..cfg.sensors {
        for i in 1..=cfg.eta {
            add(format!("ReceiveObs_{}_{i}", m + 1), window_fairness(i), Arc::new(move |c, s| receive_obs(c, m, i, s)));
        }
    }
    add("UpdateDigital".into(), FairnessClass::Weak, Arc::new(update_digital));
    add("ComputeEmitControl".into(), FairnessClass::Weak, Arc::new(compute_emit_control));

    let initial = layout.encode(&UavState::initial(cfg));
    let term_cfg = cfg.clone();
    let model =
        Model::new(layout.declarations(cfg), vec![initial], procs, move |s| is_terminal(&term_cfg, &layout.decode(s)))?;
    Ok(UavModel { config: cfg.clone(), layout, model })
}
