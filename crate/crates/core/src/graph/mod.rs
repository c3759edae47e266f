//! Weighted graphs, exhaustions and wired quotients.
//!
//! An infinite transient graph is represented by a finite *window* — the
//! realized portion — together with an [`Exhaustion`]: a nested family of
//! connected vertex sets whose largest member is the whole window. Wiring a
//! level collapses everything outside it to a single boundary vertex, giving
//! the finite quotient on which killed (wired) quantities are computed.

mod families;
mod io;

pub use families::{build_family, two_sheet_rung_cut, FamilySpec};
pub use io::{read_exhaustion, read_graph, write_exhaustion, write_graph};

use std::collections::HashMap;

use crate::error::{Error, Result};

/// An unoriented conductance-weighted edge; `u < v` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub c: f64,
}

impl Edge {
    /// The endpoint opposite to `x`.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A finite connected graph with symmetric positive conductances.
///
/// Vertices are dense indices; the original string ids are kept for I/O.
/// `pi(x)` is the stationary weight `Σ_y c(x,y)` and the walk kernel is
/// `p(x,y) = c(x,y)/π(x)`.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>, // (neighbor, edge id)
    pi: Vec<f64>,
}

impl WeightedGraph {
    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn pi(&self, v: usize) -> f64 {
        self.pi[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Neighbors of `v` as `(neighbor, conductance, edge id)`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        self.adj[v].iter().map(move |&(w, e)| (w, self.edges[e].c, e))
    }

    /// Conductance between `x` and `y`, or 0 if not adjacent.
    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.adj[x]
            .iter()
            .find(|&&(w, _)| w == y)
            .map(|&(_, e)| self.edges[e].c)
            .unwrap_or(0.0)
    }

    /// Edge id between `x` and `y`, if adjacent.
    pub fn edge_between(&self, x: usize, y: usize) -> Option<usize> {
        self.adj[x].iter().find(|&&(w, _)| w == y).map(|&(_, e)| e)
    }

    /// One-step transition probability `c(x,y)/π(x)`.
    pub fn kernel(&self, x: usize, y: usize) -> f64 {
        self.conductance(x, y) / self.pi[x]
    }

    /// Sum of all edge conductances.
    pub fn total_conductance(&self) -> f64 {
        self.edges.iter().map(|e| e.c).sum()
    }

    /// Graph distances from `v` by breadth-first search.
    pub fn bfs_distances(&self, v: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[v] = Some(0);
        queue.push_back(v);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for &(y, _) in &self.adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Induced subgraph on `verts`. Returns the subgraph, the map from new
    /// to old indices, and the partial map from old to new indices.
    pub fn induced_subgraph(
        &self,
        verts: &[usize],
    ) -> Result<(WeightedGraph, Vec<usize>, Vec<Option<usize>>)> {
        let mut old_to_new = vec![None; self.vertex_count()];
        for (new, &old) in verts.iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        let mut builder = GraphBuilder::new();
        for &old in verts {
            builder.add_vertex(&self.names[old]);
        }
        for e in &self.edges {
            if let (Some(_), Some(_)) = (old_to_new[e.u], old_to_new[e.v]) {
                builder.add_edge(&self.names[e.u], &self.names[e.v], e.c)?;
            }
        }
        let sub = builder.build()?;
        // GraphBuilder preserves insertion order, so new index i is verts[i].
        Ok((sub, verts.to_vec(), old_to_new))
    }
}

/// Incremental construction with validation at `build`.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    seen: HashMap<(usize, usize), f64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or looks up) a vertex by id.
    pub fn add_vertex(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    /// Adds an unoriented edge. Duplicates (in either orientation) are
    /// rejected; symmetry of the conductance is guaranteed by construction.
    pub fn add_edge(&mut self, a: &str, b: &str, c: f64) -> Result<()> {
        if a == b {
            return Err(Error::SelfLoop(a.to_string()));
        }
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::NonpositiveConductance {
                u: a.to_string(),
                v: b.to_string(),
                c,
            });
        }
        let i = self.add_vertex(a);
        let j = self.add_vertex(b);
        let key = (i.min(j), i.max(j));
        if let Some(&prev) = self.seen.get(&key) {
            return Err(Error::DuplicateEdge {
                u: a.to_string(),
                v: b.to_string(),
                first: prev,
                second: c,
            });
        }
        self.seen.insert(key, c);
        self.edges.push(Edge {
            u: key.0,
            v: key.1,
            c,
        });
        Ok(())
    }

    /// Validates connectivity and finalizes adjacency and `π`.
    pub fn build(self) -> Result<WeightedGraph> {
        let n = self.names.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adj = vec![Vec::new(); n];
        let mut pi = vec![0.0; n];
        for (id, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, id));
            adj[e.v].push((e.u, id));
            pi[e.u] += e.c;
            pi[e.v] += e.c;
        }
        let graph = WeightedGraph {
            names: self.names,
            index: self.index,
            edges: self.edges,
            adj,
            pi,
        };
        let reachable = graph.bfs_distances(0).iter().filter(|d| d.is_some()).count();
        if reachable != n {
            return Err(Error::Disconnected {
                reachable,
                total: n,
            });
        }
        Ok(graph)
    }
}

/// Nested connected vertex sets `VG_1 ⊂ … ⊂ VG_N`; the last level is the
/// whole window.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    levels: Vec<Vec<usize>>,
    level_of: Vec<usize>, // 1-based smallest level containing each vertex
}

impl Exhaustion {
    /// Builds and validates an exhaustion from nested sorted vertex lists.
    pub fn new(graph: &WeightedGraph, levels: Vec<Vec<usize>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("exhaustion needs at least one level".into()));
        }
        let n = graph.vertex_count();
        let mut level_of = vec![usize::MAX; n];
        let mut prev: Option<&Vec<usize>> = None;
        for (i, lvl) in levels.iter().enumerate() {
            let mut sorted = lvl.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != lvl.len() {
                return Err(Error::InvalidInput(format!(
                    "level {} contains duplicate vertices",
                    i + 1
                )));
            }
            if let Some(p) = prev {
                let set: std::collections::HashSet<_> = lvl.iter().collect();
                if !p.iter().all(|v| set.contains(v)) || p.len() >= lvl.len() {
                    return Err(Error::InvalidInput(format!(
                        "levels must be strictly nested (level {} vs {})",
                        i, i + 1
                    )));
                }
            }
            for &v in lvl {
                if v >= n {
                    return Err(Error::InvalidInput(format!(
                        "level {} mentions vertex {} beyond the window",
                        i + 1,
                        v
                    )));
                }
                if level_of[v] == usize::MAX {
                    level_of[v] = i + 1;
                }
            }
            if !induces_connected(graph, lvl) {
                return Err(Error::InvalidInput(format!(
                    "level {} does not induce a connected subgraph",
                    i + 1
                )));
            }
            prev = Some(lvl);
        }
        if levels.last().unwrap().len() != n {
            return Err(Error::InvalidInput(
                "last level must cover the whole window".into(),
            ));
        }
        let mut levels = levels;
        for lvl in &mut levels {
            lvl.sort_unstable();
        }
        Ok(Self { levels, level_of })
    }

    /// Number of levels `N`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Vertex set of level `n` (1-based), sorted.
    pub fn level(&self, n: usize) -> Result<&[usize]> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::LevelOutOfRange {
                level: n,
                levels: self.levels.len(),
            });
        }
        Ok(&self.levels[n - 1])
    }

    /// 1-based smallest level containing `v`.
    pub fn level_of(&self, v: usize) -> usize {
        self.level_of[v]
    }

    /// 0-based shell index of `v`: vertices of the innermost level are
    /// shell 0, each further ring adds one.
    pub fn shell(&self, v: usize) -> usize {
        self.level_of[v] - 1
    }

    /// Vertices of the outermost ring (level N minus level N−1); the walk
    /// killing set used as the proxy for "reached infinity".
    pub fn rim(&self) -> Vec<usize> {
        let n = self.levels.len();
        if n == 1 {
            return self.levels[0].clone();
        }
        self.levels[n - 1]
            .iter()
            .copied()
            .filter(|&v| self.level_of[v] == n)
            .collect()
    }

    /// True if `v` lies in the outermost ring.
    pub fn on_rim(&self, v: usize) -> bool {
        self.level_of[v] == self.levels.len()
    }

    /// Vertices of level `n` that have a window neighbor outside level `n`.
    pub fn level_boundary(&self, graph: &WeightedGraph, n: usize) -> Result<Vec<usize>> {
        let lvl = self.level(n)?;
        Ok(lvl
            .iter()
            .copied()
            .filter(|&v| graph.neighbors(v).any(|(w, _, _)| self.level_of[w] > n))
            .collect())
    }
}

fn induces_connected(graph: &WeightedGraph, verts: &[usize]) -> bool {
    if verts.is_empty() {
        return false;
    }
    let set: std::collections::HashSet<usize> = verts.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![verts[0]];
    seen.insert(verts[0]);
    while let Some(x) = stack.pop() {
        for (y, _, _) in graph.neighbors(x) {
            if set.contains(&y) && seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.len() == verts.len()
}

/// The quotient graph obtained by collapsing everything outside level `n`
/// to a single boundary vertex `z`.
#[derive(Debug, Clone)]
pub struct WiredQuotient {
    graph: WeightedGraph,
    z: usize,
    level: usize,
    to_base: Vec<Option<usize>>,
    from_base: Vec<Option<usize>>,
}

impl WiredQuotient {
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Index of the collapsed boundary vertex inside the quotient graph.
    pub fn z(&self) -> usize {
        self.z
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Quotient index of a window vertex, if it lies inside the level.
    pub fn from_base(&self, base: usize) -> Option<usize> {
        self.from_base[base]
    }

    /// Window index of a quotient vertex (`None` for `z`).
    pub fn to_base(&self, q: usize) -> Option<usize> {
        self.to_base[q]
    }

    /// Maps a base-index set into quotient indices, rejecting vertices
    /// outside the level.
    pub fn map_set(&self, base: &[usize]) -> Result<Vec<usize>> {
        base.iter()
            .map(|&v| {
                self.from_base
                    .get(v)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::OutsideWindow(format!("base vertex {v}")))
            })
            .collect()
    }
}

/// Collapses the exterior of level `n` into a single vertex `z_n` that picks
/// up all conductance leaving the level.
pub fn wire(graph: &WeightedGraph, exhaustion: &Exhaustion, n: usize) -> Result<WiredQuotient> {
    let lvl = exhaustion.level(n)?;
    if lvl.len() == graph.vertex_count() {
        return Err(Error::NoExteriorToWire(n));
    }
    let z_name = format!("#z{n}");
    let mut builder = GraphBuilder::new();
    for &v in lvl {
        builder.add_vertex(graph.name(v));
    }
    builder.add_vertex(&z_name);

    let inside: Vec<bool> = {
        let mut m = vec![false; graph.vertex_count()];
        for &v in lvl {
            m[v] = true;
        }
        m
    };
    // Interior edges verbatim; cut conductance accumulated per inside endpoint.
    let mut cut: HashMap<usize, f64> = HashMap::new();
    for e in graph.edges() {
        match (inside[e.u], inside[e.v]) {
            (true, true) => builder.add_edge(graph.name(e.u), graph.name(e.v), e.c)?,
            (true, false) => *cut.entry(e.u).or_insert(0.0) += e.c,
            (false, true) => *cut.entry(e.v).or_insert(0.0) += e.c,
            (false, false) => {}
        }
    }
    let mut cut: Vec<(usize, f64)> = cut.into_iter().collect();
    cut.sort_unstable_by_key(|&(v, _)| v);
    for (v, c) in cut {
        builder.add_edge(graph.name(v), &z_name, c)?;
    }
    let qgraph = builder.build()?;

    let z = qgraph.vertex(&z_name).unwrap();
    let mut to_base = vec![None; qgraph.vertex_count()];
    let mut from_base = vec![None; graph.vertex_count()];
    for (q, slot) in to_base.iter_mut().enumerate() {
        if q == z {
            continue;
        }
        let base = graph.vertex(qgraph.name(q)).unwrap();
        *slot = Some(base);
        from_base[base] = Some(q);
    }
    Ok(WiredQuotient {
        graph: qgraph,
        z,
        level: n,
        to_base,
        from_base,
    })
}
