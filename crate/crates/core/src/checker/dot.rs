//! Graphviz rendering of explored state spaces.

use std::fmt::Write as _;

use thiserror::Error;

use super::graph::StateGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotOptions {
    pub edge_labels: bool,
    pub vertex_limit: usize,
}

impl Default for DotOptions {
    fn default() -> Self {
        Self { edge_labels: true, vertex_limit: 100_000 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("graph has {vertices} vertices, above the export limit of {limit}")]
pub struct DotSizeError {
    pub vertices: usize,
    pub limit: usize,
}

/// Vertices are numbered from 1 in breadth-first discovery order. Initial
/// states are blue, terminal states orange (an initial terminal state is a
/// blue outline filled orange), everything else black.
pub fn export_dot(graph: &StateGraph, options: &DotOptions) -> Result<String, DotSizeError> {
    if graph.len() > options.vertex_limit {
        return Err(DotSizeError { vertices: graph.len(), limit: options.vertex_limit });
    }
    let mut out = String::from("digraph states {\n  node [shape=circle];\n");
    for id in 0..graph.len() as u32 {
        let attrs = match (graph.is_initial(id), graph.is_terminal(id)) {
            (true, true) => "color=blue, style=filled, fillcolor=orange",
            (true, false) => "color=blue",
            (false, true) => "color=orange",
            (false, false) => "color=black",
        };
        let _ = writeln!(out, "  {} [{attrs}];", id + 1);
    }
    for from in 0..graph.len() as u32 {
        for e in graph.edges_from(from) {
            if options.edge_labels {
                let label = graph.process_name(e.process).replace('"', "\\\"");
                let _ = writeln!(out, "  {} -> {} [label=\"{label}\"];", from + 1, e.to + 1);
            } else {
                let _ = writeln!(out, "  {} -> {};", from + 1, e.to + 1);
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}
