//! Typed view of a UAV system state and its mapping onto kernel variables.

use crate::kernel::{Command, Domain, Message, Observation, SystemState, Timestamp, Value, VarDecl};

use super::config::UavConfig;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UavState {
    /// Physical structural health.
    pub s: i64,
    /// Physical clock: the newest observation epoch.
    pub t: Timestamp,
    pub u_executed: Option<Command>,
    pub u_executed_count: u32,
    /// Per sensor: the epoch of its last sample (0 before the first).
    pub sampled: Vec<Timestamp>,
    /// Per sensor: observation channel, head first.
    pub n_obs: Vec<Vec<Observation>>,
    /// Per sensor: the newest received reading not yet consumed by an
    /// update. Older ones are never read again, so they are not kept.
    pub obs_in: Vec<Option<Observation>>,
    /// Per sensor: the reading last consumed by an update was non-positive.
    pub consumed_low: Vec<bool>,
    /// Digital estimate of structural health.
    pub d: i64,
    /// Last computed command.
    pub u: Option<Command>,
    /// Control channel, head first.
    pub n_u: Vec<Command>,
    /// Last command accepted by the physical twin.
    pub u_in: Option<Command>,
    pub last_update_t: Timestamp,
    /// An update has happened that no command has been computed from yet.
    pub d_fresh: bool,
    /// Split-damage mode only: an execution whose damage is still to apply.
    pub damage_pending: bool,
}

impl UavState {
    pub fn initial(cfg: &UavConfig) -> Self {
        let m = cfg.sensors;
        Self {
            s: cfg.s0,
            t: 0,
            u_executed: None,
            u_executed_count: 0,
            sampled: vec![0; m],
            n_obs: vec![vec![]; m],
            obs_in: vec![None; m],
            consumed_low: vec![false; m],
            d: cfg.d0,
            u: None,
            n_u: vec![],
            u_in: None,
            last_update_t: 0,
            d_fresh: false,
            damage_pending: false,
        }
    }

    pub fn sensors(&self) -> usize {
        self.sampled.len()
    }

    /// Unconsumed reading of each sensor, if every sensor has one.
    pub fn pending_readings(&self) -> Option<Vec<Observation>> {
        self.obs_in.iter().copied().collect()
    }

    /// Whether sensor `m`'s newest received reading, consumed or not, is
    /// non-positive. False if it has never delivered one.
    pub fn newest_reading_low(&self, m: usize) -> bool {
        match self.obs_in[m] {
            Some(o) => o.value <= 0,
            None => self.last_update_t > 0 && self.consumed_low[m],
        }
    }
}

/// Variable order of the encoded state; fixed for a given sensor count and
/// damage mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub sensors: usize,
    pub split_damage: bool,
}

fn obs_list(v: &[Observation]) -> Vec<Message> {
    v.iter().copied().map(Message::from).collect()
}

fn cmd_list(v: &[Command]) -> Vec<Message> {
    v.iter().copied().map(Message::from).collect()
}

impl Layout {
    pub fn of(cfg: &UavConfig) -> Self {
        Self { sensors: cfg.sensors, split_damage: cfg.split_damage }
    }

    pub fn variable_names(&self) -> Vec<String> {
        let m = self.sensors;
        let mut names: Vec<String> = vec!["s".into(), "t".into(), "u_executed".into(), "u_executed_count".into()];
        names.extend((1..=m).map(|i| format!("sampled_{i}")));
        names.extend((1..=m).map(|i| format!("n_obs_{i}")));
        names.extend((1..=m).map(|i| format!("obs_in_{i}")));
        names.extend((1..=m).map(|i| format!("consumed_low_{i}")));
        names.extend(["d", "u", "n_u", "u_in", "last_update_t"].map(String::from));
        names.push("d_fresh".into());
        if self.split_damage {
            names.push("damage_pending".into());
        }
        names
    }

    pub fn declarations(&self, cfg: &UavConfig) -> Vec<VarDecl> {
        let t_max = cfg.t_max;
        let cmd = Domain::OptCommand { t_max };
        let obs = Domain::OptObservation {
            t_max,
            sensors: cfg.sensors as u8,
            lo: -(cfg.noise as i32),
            hi: 100 + cfg.noise as i32,
        };
        let queue = |d: &Domain| Domain::Queue { elem: Box::new(d.clone()), max_len: t_max as usize };
        let m = self.sensors;
        let mut domains = vec![
            Domain::Int { lo: 0, hi: 100 },
            Domain::Int { lo: 0, hi: t_max as i64 },
            cmd.clone(),
            Domain::Int { lo: 0, hi: cfg.c_max as i64 },
        ];
        domains.extend(std::iter::repeat_n(Domain::Int { lo: 0, hi: t_max as i64 }, m));
        domains.extend(std::iter::repeat_n(queue(&obs), m));
        domains.extend(std::iter::repeat_n(obs, m));
        domains.extend(std::iter::repeat_n(Domain::Bool, m));
        domains.extend([
            Domain::Int { lo: 0, hi: 100 },
            cmd.clone(),
            queue(&cmd),
            cmd,
            Domain::Int { lo: 0, hi: t_max as i64 },
        ]);
        domains.push(Domain::Bool);
        if self.split_damage {
            domains.push(Domain::Bool);
        }
        self.variable_names().into_iter().zip(domains).map(|(name, domain)| VarDecl { name, domain }).collect()
    }

    pub fn encode(&self, st: &UavState) -> SystemState {
        let mut v = vec![
            Value::Int(st.s),
            Value::Int(st.t as i64),
            st.u_executed.into(),
            Value::Int(st.u_executed_count as i64),
        ];
        v.extend(st.sampled.iter().map(|&t| Value::Int(t as i64)));
        v.extend(st.n_obs.iter().map(|q| Value::Queue(obs_list(q))));
        v.extend(st.obs_in.iter().map(|&o| Value::from(o)));
        v.extend(st.consumed_low.iter().map(|&b| Value::Bool(b)));
        v.push(Value::Int(st.d));
        v.push(st.u.into());
        v.push(Value::Queue(cmd_list(&st.n_u)));
        v.push(st.u_in.into());
        v.push(Value::Int(st.last_update_t as i64));
        v.push(Value::Bool(st.d_fresh));
        if self.split_damage {
            v.push(Value::Bool(st.damage_pending));
        }
        SystemState::new(v)
    }

    /// Inverse of [`Layout::encode`]. Panics on a state of another layout.
    pub fn decode(&self, s: &SystemState) -> UavState {
        let m = self.sensors;
        let int = |i: usize| s.get(i).as_int().expect("integer variable");
        let cmd = |i: usize| s.get(i).as_command();
        let obs = |i: usize| s.get(i).as_observation();
        let msgs = |i: usize| s.get(i).as_messages().expect("message collection");
        let observations =
            |i: usize| msgs(i).iter().map(|x| *x.as_observation().expect("observation")).collect::<Vec<_>>();
        let base_sampled = 4;
        let base_n = base_sampled + m;
        let base_in = base_n + m;
        let base_low = base_in + m;
        let base_d = base_low + m;
        let fresh = base_d + 5;
        UavState {
            s: int(0),
            t: int(1) as Timestamp,
            u_executed: cmd(2),
            u_executed_count: int(3) as u32,
            sampled: (0..m).map(|i| int(base_sampled + i) as Timestamp).collect(),
            n_obs: (0..m).map(|i| observations(base_n + i)).collect(),
            obs_in: (0..m).map(|i| obs(base_in + i)).collect(),
            consumed_low: (0..m).map(|i| s.get(base_low + i).as_bool().expect("boolean")).collect(),
            d: int(base_d),
            u: cmd(base_d + 1),
            n_u: msgs(base_d + 2).iter().map(|x| *x.as_command().expect("command")).collect(),
            u_in: cmd(base_d + 3),
            last_update_t: int(base_d + 4) as Timestamp,
            d_fresh: s.get(fresh).as_bool().expect("boolean"),
            damage_pending: self.split_damage && s.get(fresh + 1).as_bool().expect("boolean"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_has_eighteen_variables() {
        let cfg = UavConfig::baseline();
        let layout = Layout::of(&cfg);
        assert_eq!(layout.variable_names().len(), 18);
        assert_eq!(layout.declarations(&cfg).len(), 18);
    }

    #[test]
    fn encode_decode_round_trip() {
        let cfg = UavConfig { split_damage: true, ..UavConfig::baseline() };
        let layout = Layout::of(&cfg);
        let mut st = UavState::initial(&cfg);
        st.t = 2;
        st.n_obs[1] = vec![Observation { t: 1, sensor: 2, value: 4 }];
        st.obs_in[0] = Some(Observation { t: 2, sensor: 1, value: 0 });
        st.n_u = vec![Command::dynamic(1, 3), Command::backup(2)];
        st.u_in = Some(Command::backup(2));
        st.consumed_low = vec![true, false];
        st.sampled = vec![2, 1];
        st.damage_pending = true;
        let enc = layout.encode(&st);
        assert_eq!(enc.len(), 19);
        assert_eq!(layout.decode(&enc), st);
        let decls = layout.declarations(&cfg);
        assert!(decls.iter().zip(enc.values()).all(|(d, v)| d.domain.contains(v)));
    }
}
