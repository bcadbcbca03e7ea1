//! Breadth-first state-space construction.

use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{FairnessClass, Model, ModelError, StateDigest, SystemState};

/// Distinct states and generated state instances. `total` counts every
/// initial state plus every successor produced during exploration, with
/// multiplicity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub distinct: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_states: Option<usize>,
    pub max_depth: Option<usize>,
}

impl Bounds {
    pub const NONE: Bounds = Bounds { max_states: None, max_depth: None };

    pub fn states(limit: usize) -> Self {
        Bounds { max_states: Some(limit), max_depth: None }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds::NONE
    }
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("exploration limit exceeded ({which}) after {counts:?} at depth {depth}")]
    LimitExceeded { which: &'static str, counts: Counts, depth: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub process: u16,
    pub to: u32,
}

/// The reachable state space. States are numbered in breadth-first discovery
/// order; every state's outgoing edges are stored contiguously in process
/// order.
#[derive(Debug, Clone)]
pub struct StateGraph {
    pub(crate) variables: Vec<String>,
    pub(crate) processes: Vec<String>,
    pub(crate) fairness: Vec<FairnessClass>,
    states: Vec<Box<[u8]>>,
    index: DigestMap<u32>,
    edge_start: Vec<u32>,
    edges: Vec<Edge>,
    parent: Vec<Option<(u32, u16)>>,
    depth: Vec<u32>,
    initial: Vec<u32>,
    terminal: Vec<bool>,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: u32) -> SystemState {
        SystemState::decode(&self.states[id as usize]).expect("stored states decode")
    }

    pub fn id_of(&self, s: &SystemState) -> Option<u32> {
        self.index.get(&s.digest()).copied()
    }

    pub fn edges_from(&self, id: u32) -> &[Edge] {
        let (a, b) = (self.edge_start[id as usize], self.edge_start[id as usize + 1]);
        &self.edges[a as usize..b as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn initial(&self) -> &[u32] {
        &self.initial
    }

    pub fn is_initial(&self, id: u32) -> bool {
        self.depth[id as usize] == 0
    }

    pub fn is_terminal(&self, id: u32) -> bool {
        self.terminal[id as usize]
    }

    pub fn terminal_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).filter(|&i| self.terminal[i as usize])
    }

    pub fn depth(&self, id: u32) -> u32 {
        self.depth[id as usize]
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn process_names(&self) -> &[String] {
        &self.processes
    }

    pub fn process_name(&self, p: u16) -> &str {
        &self.processes[p as usize]
    }

    pub fn fairness(&self) -> &[FairnessClass] {
        &self.fairness
    }

    /// Breadth-first tree path from an initial state to `id`, as
    /// `(incoming process, state id)` pairs; the first entry has no process.
    pub fn path_to(&self, id: u32) -> Vec<(Option<u16>, u32)> {
        let mut rev = vec![];
        let mut cur = id;
        loop {
            match self.parent[cur as usize] {
                Some((p, proc_)) => {
                    rev.push((Some(proc_), cur));
                    cur = p;
                }
                None => {
                    rev.push((None, cur));
                    break;
                }
            }
        }
        rev.reverse();
        rev
    }

    /// All edges as `(from, process name, to)` state triples, sorted.
    pub fn edge_multiset(&self) -> Vec<(SystemState, String, SystemState)> {
        let states: Vec<SystemState> = (0..self.len() as u32).map(|i| self.state(i)).collect();
        let mut out = Vec::with_capacity(self.edges.len());
        for from in 0..self.len() as u32 {
            for e in self.edges_from(from) {
                out.push((
                    states[from as usize].clone(),
                    self.processes[e.process as usize].clone(),
                    states[e.to as usize].clone(),
                ));
            }
        }
        out.sort();
        out
    }

    /// Evaluate `f` over every state id, in parallel, preserving id order.
    pub(crate) fn map_states<T: Send>(&self, f: impl Fn(u32, &SystemState) -> T + Send + Sync) -> Vec<T> {
        (0..self.len() as u32).into_par_iter().map(|i| f(i, &self.state(i))).collect()
    }
}

/// Digests are already uniformly distributed; hashing them again is wasted
/// work.
#[derive(Default, Clone, Copy)]
pub(crate) struct DigestHasher(u64);

impl Hasher for DigestHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ b as u64;
        }
    }

    fn write_u128(&mut self, v: u128) {
        self.0 = v as u64;
    }
}

pub(crate) type DigestMap<V> = HashMap<StateDigest, V, BuildHasherDefault<DigestHasher>>;
type DigestSet = HashSet<StateDigest, BuildHasherDefault<DigestHasher>>;

/// States expanded in parallel per batch; bounds the memory held by
/// not-yet-merged successors.
const CHUNK: usize = 1 << 13;

type Successors = Vec<(u16, Box<[u8]>, StateDigest)>;

fn expand(model: &Model, bytes: &[u8]) -> Result<Successors, ModelError> {
    let s = SystemState::decode(bytes).expect("stored states decode");
    Ok(model
        .successors_indexed(&s)?
        .into_iter()
        .map(|(p, next)| {
            let enc = next.encode();
            let digest = StateDigest::of_encoding(&enc);
            (p as u16, enc.into_boxed_slice(), digest)
        })
        .collect())
}

fn expand_chunk(model: &Model, chunk: &[Box<[u8]>]) -> Result<Vec<Successors>, ModelError> {
    chunk.par_iter().map(|bytes| expand(model, bytes)).collect()
}

fn depth_exceeded(bounds: Bounds, depth: usize, expanded: &[Successors]) -> bool {
    bounds.max_depth.is_some_and(|d| depth >= d) && expanded.iter().any(|e| !e.is_empty())
}

/// Explore every state reachable from the model's initial states.
///
/// Successor generation runs on `workers` threads in batches of one
/// breadth-first layer; merging happens sequentially in state order, so the
/// graph, its numbering and the counts do not depend on the worker count.
pub fn explore_with_workers(
    model: &Model,
    bounds: Bounds,
    workers: usize,
) -> Result<(StateGraph, Counts), ExploreError> {
    with_pool(workers, || explore(model, bounds))
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T, ExploreError> + Send) -> Result<T, ExploreError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExploreError::Pool(e.to_string()))?;
    pool.install(f)
}

/// [`explore_with_workers`] on the current rayon pool.
pub fn explore(model: &Model, bounds: Bounds) -> Result<(StateGraph, Counts), ExploreError> {
    assert!(model.processes().len() < u16::MAX as usize, "too many processes");
    let mut g = StateGraph {
        variables: model.variables().iter().map(|v| v.name.clone()).collect(),
        processes: model.processes().iter().map(|p| p.name.clone()).collect(),
        fairness: model.processes().iter().map(|p| p.fairness).collect(),
        states: vec![],
        index: DigestMap::default(),
        edge_start: vec![0],
        edges: vec![],
        parent: vec![],
        depth: vec![],
        initial: vec![],
        terminal: vec![],
    };
    let mut counts = Counts { distinct: 0, total: model.initial().len() as u64 };
    for s in model.initial() {
        let enc = s.encode();
        let digest = StateDigest::of_encoding(&enc);
        if g.index.contains_key(&digest) {
            continue;
        }
        let id = g.states.len() as u32;
        g.index.insert(digest, id);
        g.states.push(enc.into_boxed_slice());
        g.parent.push(None);
        g.depth.push(0);
        g.terminal.push(model.is_terminal(s));
        g.initial.push(id);
    }
    check_state_limit(g.states.len(), bounds, counts, 0)?;

    let mut layer_start = 0usize;
    let mut depth = 0usize;
    while layer_start < g.states.len() {
        let layer_end = g.states.len();
        let mut from = layer_start;
        while from < layer_end {
            let to_idx = (from + CHUNK).min(layer_end);
            let expanded = expand_chunk(model, &g.states[from..to_idx])?;
            if depth_exceeded(bounds, depth, &expanded) {
                counts.distinct = g.states.len() as u64;
                return Err(ExploreError::LimitExceeded { which: "depth", counts, depth });
            }
            for (offset, successors) in expanded.into_iter().enumerate() {
                let src = (from + offset) as u32;
                for (process, enc, digest) in successors {
                    counts.total += 1;
                    let to = match g.index.get(&digest) {
                        Some(&id) => id,
                        None => {
                            let id = g.states.len() as u32;
                            let next = SystemState::decode(&enc).expect("fresh encoding decodes");
                            g.index.insert(digest, id);
                            g.terminal.push(model.is_terminal(&next));
                            g.states.push(enc);
                            g.parent.push(Some((src, process)));
                            g.depth.push(depth as u32 + 1);
                            id
                        }
                    };
                    g.edges.push(Edge { process, to });
                }
                g.edge_start.push(g.edges.len() as u32);
                check_state_limit(g.states.len(), bounds, counts, depth + 1)?;
            }
            from = to_idx;
        }
        layer_start = layer_end;
        depth += 1;
    }
    counts.distinct = g.states.len() as u64;
    Ok((g, counts))
}

/// The same counts as [`explore`], keeping only state digests and one
/// breadth-first layer in memory. For state spaces too large to hold as a
/// graph.
pub fn count_states(model: &Model, bounds: Bounds) -> Result<Counts, ExploreError> {
    let mut seen = DigestSet::default();
    let mut counts = Counts { distinct: 0, total: model.initial().len() as u64 };
    let mut layer: Vec<Box<[u8]>> = vec![];
    for s in model.initial() {
        let enc = s.encode();
        if seen.insert(StateDigest::of_encoding(&enc)) {
            layer.push(enc.into_boxed_slice());
        }
    }
    check_state_limit(seen.len(), bounds, counts, 0)?;
    let mut depth = 0usize;
    while !layer.is_empty() {
        let mut next_layer = vec![];
        for chunk in layer.chunks(CHUNK) {
            let expanded = expand_chunk(model, chunk)?;
            if depth_exceeded(bounds, depth, &expanded) {
                counts.distinct = seen.len() as u64;
                return Err(ExploreError::LimitExceeded { which: "depth", counts, depth });
            }
            for (_, enc, digest) in expanded.into_iter().flatten() {
                counts.total += 1;
                if seen.insert(digest) {
                    next_layer.push(enc);
                }
            }
            check_state_limit(seen.len(), bounds, counts, depth + 1)?;
        }
        layer = next_layer;
        depth += 1;
    }
    counts.distinct = seen.len() as u64;
    Ok(counts)
}

/// [`count_states`] on a dedicated pool of `workers` threads.
pub fn count_states_with_workers(model: &Model, bounds: Bounds, workers: usize) -> Result<Counts, ExploreError> {
    with_pool(workers, || count_states(model, bounds))
}

fn check_state_limit(distinct: usize, bounds: Bounds, mut counts: Counts, depth: usize) -> Result<(), ExploreError> {
    if let Some(max) = bounds.max_states {
        if distinct > max {
            counts.distinct = distinct as u64;
            return Err(ExploreError::LimitExceeded { which: "states", counts, depth });
        }
    }
    Ok(())
}

/// Result of the naive reference enumeration.
#[derive(Debug, Clone)]
pub struct NaiveGraph {
    pub states: Vec<SystemState>,
    pub edges: Vec<(usize, String, usize)>,
    pub initial: Vec<usize>,
}

impl NaiveGraph {
    pub fn edge_multiset(&self) -> Vec<(SystemState, String, SystemState)> {
        let mut out: Vec<_> =
            self.edges.iter().map(|(a, p, b)| (self.states[*a].clone(), p.clone(), self.states[*b].clone())).collect();
        out.sort();
        out
    }
}

/// Reference enumeration: depth-first recursion over a plain visited list
/// with linear-search membership. Slow on purpose; used to cross-check
/// [`explore`] on small models.
pub fn brute_force_explore(model: &Model, bounds: Bounds) -> Result<(NaiveGraph, Counts), ExploreError> {
    let limit = bounds.max_states.unwrap_or(100_000);
    let mut g = NaiveGraph { states: vec![], edges: vec![], initial: vec![] };
    let mut total = 0u64;

    fn visit(
        model: &Model,
        s: SystemState,
        g: &mut NaiveGraph,
        total: &mut u64,
        limit: usize,
    ) -> Result<usize, ExploreError> {
        if let Some(i) = g.states.iter().position(|t| *t == s) {
            return Ok(i);
        }
        if g.states.len() >= limit {
            let counts = Counts { distinct: g.states.len() as u64, total: *total };
            return Err(ExploreError::LimitExceeded { which: "states", counts, depth: 0 });
        }
        let i = g.states.len();
        g.states.push(s.clone());
        for (name, next) in model.successors(&s)? {
            *total += 1;
            let j = visit(model, next, g, total, limit)?;
            g.edges.push((i, name, j));
        }
        Ok(i)
    }

    for s in model.initial() {
        total += 1;
        let i = visit(model, s.clone(), &mut g, &mut total, limit)?;
        if !g.initial.contains(&i) {
            g.initial.push(i);
        }
    }
    let counts = Counts { distinct: g.states.len() as u64, total };
    Ok((g, counts))
}
