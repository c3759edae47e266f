//! Spanning-forest machinery.
//!
//! [`wilson`] draws exact conductance-weighted spanning trees by
//! loop-erased random walk. [`aldous_broder_extract`] reads the first-entry
//! forest off a trajectory: each vertex's parent is whatever was visited
//! immediately before its first visit, with excursion entries (vertices
//! first reached straight from an INF marker) becoming roots — children of
//! the point at infinity. [`exact_marginals`] computes edge inclusion
//! probabilities deterministically as `c(e)·R_eff(e)`, one resistance solve
//! per edge, and [`enumerate_trees`] is the brute-force oracle for small
//! graphs.

use itertools::Itertools;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::potential::{effective_resistance, BoundaryKind};
use crate::samplers::{Step, Trajectory, WalkKernel};

/// A rooted spanning forest: every non-root vertex has exactly one parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    /// Parent of each vertex (`None` for roots and unvisited vertices).
    pub parent: Vec<Option<usize>>,
    pub roots: Vec<usize>,
}

impl Forest {
    /// True if the unoriented edge `{u,v}` is a parent edge of the forest.
    pub fn contains_edge(&self, u: usize, v: usize) -> bool {
        self.parent[u] == Some(v) || self.parent[v] == Some(u)
    }

    /// Number of parent edges.
    pub fn edge_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }

    /// Checks that the forest spans the graph as a tree rooted at `root`:
    /// acyclic, every parent edge realized in the graph, all vertices reach
    /// the root.
    pub fn validate_spanning_tree(&self, graph: &WeightedGraph, root: usize) -> Result<()> {
        let n = graph.vertex_count();
        if self.parent[root].is_some() {
            return Err(Error::InvalidInput("root has a parent".into()));
        }
        for v in 0..n {
            if let Some(p) = self.parent[v] {
                if graph.edge_between(v, p).is_none() {
                    return Err(Error::InvalidInput(format!(
                        "parent edge {}-{} not in graph",
                        graph.name(v),
                        graph.name(p)
                    )));
                }
            }
        }
        for v in 0..n {
            let mut x = v;
            let mut steps = 0;
            while let Some(p) = self.parent[x] {
                x = p;
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidInput("cycle in forest".into()));
                }
            }
            if x != root {
                return Err(Error::InvalidInput(format!(
                    "vertex {} does not reach the root",
                    graph.name(v)
                )));
            }
        }
        Ok(())
    }
}

/// Exact sample from the conductance-weighted spanning-tree law, rooted at
/// `root`, by Wilson's loop-erased random walk algorithm.
pub fn wilson(
    graph: &WeightedGraph,
    kernel: &WalkKernel,
    root: usize,
    rng: &mut ChaCha12Rng,
) -> Forest {
    let n = graph.vertex_count();
    let mut in_tree = vec![false; n];
    let mut next: Vec<Option<usize>> = vec![None; n];
    in_tree[root] = true;
    for start in 0..n {
        let mut u = start;
        // Random walk, recording the latest exit from each vertex;
        // overwriting pops loops implicitly.
        while !in_tree[u] {
            let v = kernel.step(graph, u, rng);
            next[u] = Some(v);
            u = v;
        }
        // Retrace and freeze the loop-erased path.
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u].unwrap();
        }
    }
    for v in 0..n {
        if !in_tree[v] {
            next[v] = None;
        }
    }
    next[root] = None;
    Forest {
        parent: next,
        roots: vec![root],
    }
}

/// Which visits of a trace feed the first-entry extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractMode {
    /// Use the whole trace.
    FromStart,
    /// Ignore everything before the first INF marker.
    AfterFirstInf,
}

/// A first-entry forest together with its coverage of a target set.
#[derive(Debug, Clone)]
pub struct ExtractedForest {
    pub forest: Forest,
    /// Fraction of the target set that the trace visited.
    pub coverage: f64,
    /// Targets never visited (forest is partial if nonempty).
    pub missing: Vec<usize>,
}

/// Reads the first-entry forest off a trajectory.
///
/// The parent of a vertex is the step immediately before its first visit;
/// a first visit straight after an INF marker (or at the very start) makes
/// the vertex a root. `target` is the vertex set the forest should cover;
/// partial coverage is reported, not an error, since finite traces need not
/// cover a window.
pub fn aldous_broder_extract(
    graph: &WeightedGraph,
    trace: &Trajectory,
    mode: ExtractMode,
    target: &[usize],
) -> ExtractedForest {
    let n = graph.vertex_count();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut roots = Vec::new();
    let mut prev: Option<usize> = None;
    let mut active = mode == ExtractMode::FromStart;
    for s in &trace.steps {
        match s {
            Step::Inf => {
                active = true;
                prev = None;
            }
            Step::Vertex(v) => {
                if active && !seen[*v] {
                    seen[*v] = true;
                    match prev {
                        Some(p) => parent[*v] = Some(p),
                        None => roots.push(*v),
                    }
                }
                if active {
                    prev = Some(*v);
                }
            }
        }
    }
    let missing: Vec<usize> = target.iter().copied().filter(|&v| !seen[v]).collect();
    let coverage = if target.is_empty() {
        1.0
    } else {
        1.0 - missing.len() as f64 / target.len() as f64
    };
    ExtractedForest {
        forest: Forest { parent, roots },
        coverage,
        missing,
    }
}

/// Edge inclusion probabilities for the weighted spanning-tree law.
#[derive(Debug, Clone)]
pub struct EdgeMarginals {
    /// Edge ids, in the order probabilities are reported.
    pub edges: Vec<usize>,
    pub probability: Vec<f64>,
    pub kind: BoundaryKind,
}

impl EdgeMarginals {
    pub fn get(&self, edge: usize) -> Option<f64> {
        self.edges
            .iter()
            .position(|&e| e == edge)
            .map(|i| self.probability[i])
    }
}

/// Exact marginals `P[e ∈ tree] = c(e) · R_eff(endpoints)`, one resistance
/// solve per edge. `panel` restricts the computation; `None` does every
/// edge (their sum is then `|V| − 1`).
pub fn exact_marginals(
    graph: &WeightedGraph,
    panel: Option<&[usize]>,
    kind: BoundaryKind,
    tol: f64,
) -> Result<EdgeMarginals> {
    let ids: Vec<usize> = match panel {
        Some(p) => p.to_vec(),
        None => (0..graph.edge_count()).collect(),
    };
    let mut probability = Vec::with_capacity(ids.len());
    for &id in &ids {
        let e = graph.edge(id);
        let r = effective_resistance(graph, e.u, e.v, tol)?;
        probability.push((e.c * r).clamp(0.0, 1.0));
    }
    Ok(EdgeMarginals {
        edges: ids,
        probability,
        kind,
    })
}

/// Exhaustive table of spanning trees with normalized weights.
#[derive(Debug, Clone)]
pub struct TreeTable {
    /// Each tree as a sorted list of edge ids, with its probability.
    pub trees: Vec<(Vec<usize>, f64)>,
    /// Partition function `Z = Σ_trees Π c(e)`.
    pub partition: f64,
}

impl TreeTable {
    pub fn edge_marginal(&self, edge: usize) -> f64 {
        self.trees
            .iter()
            .filter(|(t, _)| t.binary_search(&edge).is_ok())
            .map(|(_, p)| p)
            .sum()
    }

    pub fn probability_of(&self, edges: &[usize]) -> Option<f64> {
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        self.trees
            .iter()
            .find(|(t, _)| *t == sorted)
            .map(|(_, p)| *p)
    }
}

const ENUMERATION_LIMIT: usize = 12;

/// Enumerates all spanning trees of a small graph (≤ 12 vertices).
pub fn enumerate_trees(graph: &WeightedGraph) -> Result<TreeTable> {
    let n = graph.vertex_count();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLargeToEnumerate {
            vertices: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut trees = Vec::new();
    let mut partition = 0.0;
    for combo in (0..graph.edge_count()).combinations(n - 1) {
        // Union-find acyclicity check.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut acyclic = true;
        for &id in &combo {
            let e = graph.edge(id);
            let (ru, rv) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if ru == rv {
                acyclic = false;
                break;
            }
            parent[ru] = rv;
        }
        if !acyclic {
            continue;
        }
        let weight: f64 = combo.iter().map(|&id| graph.edge(id).c).product();
        partition += weight;
        trees.push((combo, weight));
    }
    for (_, w) in &mut trees {
        *w /= partition;
    }
    Ok(TreeTable { trees, partition })
}
