//! Structural digital-twin graphical models.
//!
//! A [`Pgm`] records which twin variables each variable depends on. Edges may
//! be flagged `distributed` when the dependency crosses a message channel;
//! [`augment`] rewrites every such edge through an explicit channel node and a
//! received-value node, and [`derive_processes`] turns the result into one
//! update process per variable with parents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate node `{name}`")]
    DuplicateNode { line: usize, name: String },
    #[error("line {line}: duplicate edge `{src} -> {dst}`")]
    DuplicateEdge { line: usize, src: String, dst: String },
    #[error("line {line}: edge endpoint `{name}` is not a declared node")]
    DanglingEndpoint { line: usize, name: String },
    #[error("augmentation would create `{name}`, which already exists")]
    NameCollision { name: String },
    #[error("self-edge `{node} -> {node}` cannot be distributed")]
    DistributedSelfEdge { node: String },
}

/// Attributes carried by an edge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct EdgeFlags {
    pub distributed: bool,
    /// The channel's behaviour depends on the transmitted value (payload-size
    /// sensitive links). Only meaningful on distributed edges.
    pub load_sensitive: bool,
}

/// A directed dependency graph over named twin variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pgm {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), EdgeFlags>,
}

/// One update process: `parents -> target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessSignature {
    pub target: String,
    pub parents: BTreeSet<String>,
}

impl std::fmt::Display for ProcessSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parents: Vec<&str> = self.parents.iter().map(String::as_str).collect();
        write!(f, "{} -> {}", parents.join(", "), self.target)
    }
}

impl Pgm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: impl Into<String>) -> Result<(), PgmError> {
        let name = name.into();
        if !self.nodes.insert(name.clone()) {
            return Err(PgmError::DuplicateNode { line: 0, name });
        }
        Ok(())
    }

    pub fn add_edge(
        &mut self,
        src: impl Into<String>,
        dst: impl Into<String>,
        flags: EdgeFlags,
    ) -> Result<(), PgmError> {
        let (src, dst) = (src.into(), dst.into());
        for name in [&src, &dst] {
            if !self.nodes.contains(name) {
                return Err(PgmError::DanglingEndpoint { line: 0, name: name.clone() });
            }
        }
        let key = (src, dst);
        if self.edges.contains_key(&key) {
            return Err(PgmError::DuplicateEdge { line: 0, src: key.0, dst: key.1 });
        }
        self.edges.insert(key, flags);
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, EdgeFlags)> {
        self.edges.iter().map(|((s, d), f)| (s.as_str(), d.as_str(), *f))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_node(&self, name: &str) -> bool {
        self.nodes.contains(name)
    }

    pub fn edge(&self, src: &str, dst: &str) -> Option<EdgeFlags> {
        self.edges.get(&(src.to_owned(), dst.to_owned())).copied()
    }

    pub fn distributed_edge_count(&self) -> usize {
        self.edges.values().filter(|f| f.distributed).count()
    }

    /// In-neighbours of `node`, self-dependence included.
    pub fn parents(&self, node: &str) -> BTreeSet<String> {
        self.edges.keys().filter(|(_, d)| d == node).map(|(s, _)| s.clone()).collect()
    }
}

/// Name of the received-value node introduced for a distributed source.
pub fn received_name(source: &str) -> String {
    format!("{source}_in")
}

/// Name of the channel node introduced for a distributed source.
pub fn channel_name(source: &str) -> String {
    format!("n_{source}")
}

/// Parse the line-oriented model description.
///
/// ```text
/// node S
/// node O
/// edge S O distributed   # comment
/// ```
pub fn parse_pgm(text: &str) -> Result<Pgm, PgmError> {
    let mut pgm = Pgm::new();
    let mut pending_edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        match words.next() {
            Some("node") => {
                let name = words.next().ok_or_else(|| PgmError::Syntax { line, msg: "`node` needs a name".into() })?;
                if let Some(extra) = words.next() {
                    return Err(PgmError::Syntax { line, msg: format!("unexpected `{extra}`") });
                }
                if !pgm.nodes.insert(name.to_owned()) {
                    return Err(PgmError::DuplicateNode { line, name: name.to_owned() });
                }
            }
            Some("edge") => {
                let (Some(src), Some(dst)) = (words.next(), words.next()) else {
                    return Err(PgmError::Syntax { line, msg: "`edge` needs a source and a destination".into() });
                };
                let mut flags = EdgeFlags::default();
                for word in words {
                    match word {
                        "distributed" if !flags.distributed => flags.distributed = true,
                        "load-sensitive" if !flags.load_sensitive => flags.load_sensitive = true,
                        other => {
                            return Err(PgmError::Syntax { line, msg: format!("unexpected edge attribute `{other}`") })
                        }
                    }
                }
                if flags.load_sensitive && !flags.distributed {
                    return Err(PgmError::Syntax {
                        line,
                        msg: "`load-sensitive` only applies to distributed edges".into(),
                    });
                }
                pending_edges.push((line, src.to_owned(), dst.to_owned(), flags));
            }
            Some(other) => return Err(PgmError::Syntax { line, msg: format!("unknown directive `{other}`") }),
            None => unreachable!("blank lines are skipped"),
        }
    }
    // Nodes may be declared after the edges that use them.
    for (line, src, dst, flags) in pending_edges {
        for name in [&src, &dst] {
            if !pgm.nodes.contains(name) {
                return Err(PgmError::DanglingEndpoint { line, name: name.clone() });
            }
        }
        let key = (src, dst);
        if pgm.edges.contains_key(&key) {
            return Err(PgmError::DuplicateEdge { line, src: key.0, dst: key.1 });
        }
        pgm.edges.insert(key, flags);
    }
    Ok(pgm)
}

/// Canonical text form: sorted nodes, then edges sorted by `(src, dst)`.
pub fn emit_pgm(pgm: &Pgm) -> String {
    let mut out = String::from("# nodes\n");
    for node in &pgm.nodes {
        let _ = writeln!(out, "node {node}");
    }
    out.push_str("# edges\n");
    for ((src, dst), flags) in &pgm.edges {
        let _ = write!(out, "edge {src} {dst}");
        if flags.distributed {
            out.push_str(" distributed");
        }
        if flags.load_sensitive {
            out.push_str(" load-sensitive");
        }
        out.push('\n');
    }
    out
}

/// Route every distributed edge `v -> w` through a channel node `n_v` and a
/// received-value node `v_in`: the edge is replaced by `v -> v_in`,
/// `n_v -> v_in` and `v_in -> w`. Load-sensitive edges also get `v -> n_v`.
///
/// Several distributed edges leaving the same source share one channel and one
/// received-value node.
pub fn augment(pgm: &Pgm) -> Result<Pgm, PgmError> {
    let distributed: Vec<(String, String, EdgeFlags)> =
        pgm.edges.iter().filter(|(_, f)| f.distributed).map(|((s, d), f)| (s.clone(), d.clone(), *f)).collect();
    let mut out = pgm.clone();
    for (src, dst, _) in &distributed {
        if src == dst {
            return Err(PgmError::DistributedSelfEdge { node: src.clone() });
        }
    }
    let sources: BTreeSet<&String> = distributed.iter().map(|(s, _, _)| s).collect();
    for src in &sources {
        for name in [received_name(src), channel_name(src)] {
            if pgm.nodes.contains(&name) {
                return Err(PgmError::NameCollision { name });
            }
        }
    }
    let plain = EdgeFlags::default();
    for (src, dst, flags) in distributed {
        let received = received_name(&src);
        let channel = channel_name(&src);
        out.edges.remove(&(src.clone(), dst.clone()));
        out.nodes.insert(received.clone());
        out.nodes.insert(channel.clone());
        out.edges.insert((src.clone(), received.clone()), plain);
        out.edges.insert((channel.clone(), received.clone()), plain);
        out.edges.insert((received, dst), plain);
        if flags.load_sensitive {
            out.edges.insert((src, channel), plain);
        }
    }
    Ok(out)
}

/// One process per node with a non-empty parent set, ordered by target.
pub fn derive_processes(pgm: &Pgm) -> Vec<ProcessSignature> {
    let mut parents: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (src, dst) in pgm.edges.keys() {
        parents.entry(dst.as_str()).or_default().insert(src.clone());
    }
    parents.into_iter().map(|(target, parents)| ProcessSignature { target: target.to_owned(), parents }).collect()
}

/// The six-variable UAV twin graph with its sensor and control links marked
/// distributed. `sensors == 0` keeps a single undistributed `O` node.
pub fn uav_pgm(sensors: usize) -> Pgm {
    let mut text = String::new();
    let observations: Vec<String> =
        if sensors == 0 { vec!["O".into()] } else { (1..=sensors).map(|m| format!("O_{m}")).collect() };
    for n in ["S", "D", "U", "Q", "R"] {
        let _ = writeln!(text, "node {n}");
    }
    for o in &observations {
        let _ = writeln!(text, "node {o}");
    }
    let link = if sensors == 0 { "" } else { " distributed" };
    text.push_str("edge S S\nedge U S");
    text.push_str(link);
    text.push('\n');
    for o in &observations {
        let _ = writeln!(text, "edge S {o}\nedge {o} D{link}\nedge {o} R");
    }
    text.push_str("edge D D\nedge U D\nedge D U\nedge Q U\nedge D Q\nedge D R\nedge U R\nedge Q R\n");
    parse_pgm(&text).expect("built-in UAV graph is well formed")
}
