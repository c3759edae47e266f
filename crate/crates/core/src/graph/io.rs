//! Plain-text graph and exhaustion formats.
//!
//! Graphs are edge lists, one edge per line: `<u> <v> <c>`, whitespace
//! separated, `#` starts a comment. Exhaustions are one line per level
//! listing the vertex ids of that level.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, GraphBuilder, WeightedGraph};

/// Parses an edge-list text into a graph.
pub fn read_graph(text: &str) -> Result<WeightedGraph> {
    let mut b = GraphBuilder::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                reason: format!("expected `<u> <v> <c>`, got {} fields", fields.len()),
            });
        }
        let c: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            reason: format!("cannot parse conductance `{}`", fields[2]),
        })?;
        b.add_edge(fields[0], fields[1], c)?;
    }
    b.build()
}

/// Serializes a graph as a deterministic edge list (sorted by vertex names).
pub fn write_graph(graph: &WeightedGraph) -> String {
    let mut lines: Vec<(String, String, f64)> = graph
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (graph.name(e.u).to_string(), graph.name(e.v).to_string());
            if a <= b {
                (a, b, e.c)
            } else {
                (b, a, e.c)
            }
        })
        .collect();
    lines.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
    let mut out = String::from("# edge list: <u> <v> <c>\n");
    for (a, b, c) in lines {
        out.push_str(&format!("{a} {b} {c}\n"));
    }
    out
}

/// Parses an exhaustion file (one line of vertex ids per level).
pub fn read_exhaustion(text: &str, graph: &WeightedGraph) -> Result<Exhaustion> {
    let mut levels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut lvl = Vec::new();
        for tok in line.split_whitespace() {
            let v = graph
                .vertex(tok)
                .ok_or_else(|| Error::UnknownVertex(tok.to_string()))?;
            lvl.push(v);
        }
        if lvl.is_empty() {
            return Err(Error::Parse {
                line: lineno + 1,
                reason: "empty level".into(),
            });
        }
        levels.push(lvl);
    }
    Exhaustion::new(graph, levels)
}

/// Serializes an exhaustion, one level per line.
pub fn write_exhaustion(exhaustion: &Exhaustion, graph: &WeightedGraph) -> String {
    let mut out = String::from("# exhaustion: one line per level\n");
    for n in 1..=exhaustion.depth() {
        let line = exhaustion
            .level(n)
            .unwrap()
            .iter()
            .map(|&v| graph.name(v))
            .join(" ");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
