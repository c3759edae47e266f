//! Discrete potential theory on windows and wired quotients.
//!
//! Free quantities are computed on the window (or an induced level
//! subgraph): minimizing Dirichlet energy there imposes natural
//! zero-Neumann conditions at the window's outer rim. Wired quantities are
//! computed on a [`WiredQuotient`], where the collapsed vertex `z` stands in
//! for infinity. All "values on the infinite graph" are exhaustion-level
//! sequences; [`richardson3`] extrapolates monotone ones.

mod solver;

pub use solver::{solve_laplacian, SolveStats, DEFAULT_TOL};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{WeightedGraph, WiredQuotient};

/// Which boundary convention produced a field or marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Free,
    Wired,
}

/// A real-valued function on the vertices of one graph, harmonic off its
/// boundary set.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub values: Vec<f64>,
    pub kind: BoundaryKind,
    pub boundary: Vec<(usize, f64)>,
    pub energy: f64,
    pub stats: SolveStats,
}

impl PotentialField {
    /// Largest absolute harmonic residual over unconstrained vertices.
    pub fn harmonic_residual(&self, graph: &WeightedGraph) -> f64 {
        let constrained: std::collections::HashSet<usize> =
            self.boundary.iter().map(|&(v, _)| v).collect();
        (0..graph.vertex_count())
            .filter(|v| !constrained.contains(v))
            .map(|x| {
                graph
                    .neighbors(x)
                    .map(|(y, c, _)| c * (self.values[x] - self.values[y]))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Dirichlet energy `Σ_{edges} c(x,y) (f(x) − f(y))²`.
pub fn dirichlet_energy(graph: &WeightedGraph, values: &[f64]) -> f64 {
    graph
        .edges()
        .iter()
        .map(|e| e.c * (values[e.u] - values[e.v]).powi(2))
        .sum()
}

/// Net current `Δf(x) = Σ_y c(x,y)(f(x) − f(y))` at one vertex.
pub fn net_current(graph: &WeightedGraph, values: &[f64], x: usize) -> f64 {
    graph
        .neighbors(x)
        .map(|(y, c, _)| c * (values[x] - values[y]))
        .sum()
}

/// A nonnegative measure on a finite vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    support: Vec<usize>,
    mass: Vec<f64>,
}

impl Measure {
    /// Builds a measure; masses must be nonnegative (tiny negative values
    /// from solver roundoff are clipped to zero).
    pub fn new(pairs: Vec<(usize, f64)>) -> Result<Self> {
        let mut pairs = pairs;
        pairs.sort_unstable_by_key(|&(v, _)| v);
        let mut support = Vec::with_capacity(pairs.len());
        let mut mass = Vec::with_capacity(pairs.len());
        for (v, m) in pairs {
            if support.last() == Some(&v) {
                return Err(Error::InvalidInput(format!(
                    "vertex {v} repeated in measure support"
                )));
            }
            if m < -1e-9 || !m.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "negative mass {m} at vertex {v}"
                )));
            }
            support.push(v);
            mass.push(m.max(0.0));
        }
        Ok(Self { support, mass })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn get(&self, v: usize) -> f64 {
        match self.support.binary_search(&v) {
            Ok(i) => self.mass[i],
            Err(_) => 0.0,
        }
    }

    /// Rescales to total mass one.
    pub fn normalized(&self) -> Result<Measure> {
        let t = self.total();
        if t <= 0.0 {
            return Err(Error::InvalidInput("cannot normalize a zero measure".into()));
        }
        Ok(Measure {
            support: self.support.clone(),
            mass: self.mass.iter().map(|m| m / t).collect(),
        })
    }

    /// Empirical distribution from counts.
    pub fn from_counts(pairs: Vec<(usize, u64)>) -> Result<Measure> {
        let total: u64 = pairs.iter().map(|&(_, c)| c).sum();
        if total == 0 {
            return Err(Error::InvalidInput("no observations".into()));
        }
        Measure::new(
            pairs
                .into_iter()
                .map(|(v, c)| (v, c as f64 / total as f64))
                .collect(),
        )
    }
}

/// Free energy-minimizing extension of boundary values over `graph`.
///
/// The returned field agrees with `boundary` exactly (clamped) and is
/// discrete harmonic elsewhere up to the solver tolerance.
pub fn solve_harmonic(
    graph: &WeightedGraph,
    boundary: &[(usize, f64)],
    tol: f64,
) -> Result<PotentialField> {
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let (values, stats) = solve_laplacian(graph, boundary, &[], tol)?;
    let energy = dirichlet_energy(graph, &values);
    Ok(PotentialField {
        values,
        kind: BoundaryKind::Free,
        boundary: boundary.to_vec(),
        energy,
        stats,
    })
}

/// Wired extension on a quotient: `z` is clamped to 0 unless `boundary`
/// already pins it. Boundary vertices are given in window (base) indices.
pub fn solve_harmonic_wired(
    quotient: &WiredQuotient,
    boundary: &[(usize, f64)],
    tol: f64,
) -> Result<PotentialField> {
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let g = quotient.graph();
    let mut clamps = Vec::with_capacity(boundary.len() + 1);
    for &(v, val) in boundary {
        let q = quotient
            .from_base(v)
            .ok_or_else(|| Error::OutsideWindow(format!("base vertex {v}")))?;
        clamps.push((q, val));
    }
    if !clamps.iter().any(|&(v, _)| v == quotient.z()) {
        clamps.push((quotient.z(), 0.0));
    }
    let (values, stats) = solve_laplacian(g, &clamps, &[], tol)?;
    let energy = dirichlet_energy(g, &values);
    Ok(PotentialField {
        values,
        kind: BoundaryKind::Wired,
        boundary: clamps,
        energy,
        stats,
    })
}

/// Equilibrium measure, capacity and normalized equilibrium measure of `K`
/// inside a wired quotient.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// `e_K` in window indices.
    pub measure: Measure,
    pub capacity: f64,
    /// `ẽ_K = e_K / cap(K)`.
    pub normalized: Measure,
    /// The wired voltage field (1 on K, 0 at z) on the quotient.
    pub voltage: PotentialField,
}

/// Computes `e_K(y) = Δφ(y)` where `φ` is the wired voltage with value 1 on
/// `K` and 0 at `z`; `cap(K)` is its total mass.
pub fn equilibrium_measure(
    quotient: &WiredQuotient,
    k: &[usize],
    tol: f64,
) -> Result<EquilibriumReport> {
    if k.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let boundary: Vec<(usize, f64)> = k.iter().map(|&v| (v, 1.0)).collect();
    let voltage = solve_harmonic_wired(quotient, &boundary, tol)?;
    let g = quotient.graph();
    let mut pairs = Vec::with_capacity(k.len());
    for &v in k {
        let q = quotient.from_base(v).unwrap();
        pairs.push((v, net_current(g, &voltage.values, q)));
    }
    let measure = Measure::new(pairs)?;
    let capacity = measure.total();
    let normalized = measure.normalized()?;
    Ok(EquilibriumReport {
        measure,
        capacity,
        normalized,
        voltage,
    })
}

/// Green matrix of the walk killed at `z`: `G = (Δ restricted to the
/// level)⁻¹`, returned as a `|K| × |K|` matrix in the order of `k`.
pub fn green_matrix(quotient: &WiredQuotient, k: &[usize], tol: f64) -> Result<Vec<Vec<f64>>> {
    let g = quotient.graph();
    let kq = quotient.map_set(k)?; // rejects anything outside the level
    let mut rows = vec![vec![0.0; k.len()]; k.len()];
    for (j, &kj) in kq.iter().enumerate() {
        let (vals, _) = solve_laplacian(g, &[(quotient.z(), 0.0)], &[(kj, 1.0)], tol)?;
        for (t, &kt) in kq.iter().enumerate() {
            rows[t][j] = vals[kt];
        }
    }
    Ok(rows)
}

/// Green column `G(·, y)` on the whole quotient for one source `y`.
pub fn green_column(quotient: &WiredQuotient, y: usize, tol: f64) -> Result<Vec<f64>> {
    let g = quotient.graph();
    let yq = quotient
        .from_base(y)
        .ok_or_else(|| Error::OutsideWindow(format!("base vertex {y}")))?;
    let (vals, _) = solve_laplacian(g, &[(quotient.z(), 0.0)], &[(yq, 1.0)], tol)?;
    Ok(vals)
}

/// The family of indicator extensions `h^y` for `y ∈ K`, solved on whatever
/// graph is passed (window, level subgraph, or quotient with `z` left
/// unconstrained). Row sums are identically 1 by linearity.
#[derive(Debug, Clone)]
pub struct HittingFamily {
    pub k: Vec<usize>,
    /// One field per `y ∈ K`, indexed as the graph.
    pub fields: Vec<Vec<f64>>,
}

impl HittingFamily {
    /// Hitting measure seen from `x`: `y ↦ h^y(x)`.
    pub fn measure_at(&self, x: usize) -> Result<Measure> {
        Measure::new(
            self.k
                .iter()
                .zip(&self.fields)
                .map(|(&y, f)| (y, f[x].clamp(0.0, 1.0)))
                .collect(),
        )
    }

    /// `Σ_y h^y(x)`; equals 1 up to solver tolerance.
    pub fn row_sum(&self, x: usize) -> f64 {
        self.fields.iter().map(|f| f[x]).sum()
    }
}

/// Solves the indicator family over `graph` with only `K` constrained.
pub fn hitting_family(graph: &WeightedGraph, k: &[usize], tol: f64) -> Result<HittingFamily> {
    if k.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut fields = Vec::with_capacity(k.len());
    for &y in k {
        let boundary: Vec<(usize, f64)> = k
            .iter()
            .map(|&v| (v, if v == y { 1.0 } else { 0.0 }))
            .collect();
        fields.push(solve_harmonic(graph, &boundary, tol)?.values);
    }
    Ok(HittingFamily {
        k: k.to_vec(),
        fields,
    })
}

/// Free entry measure `y ↦ h^y_K(probe)` on the given (window) graph.
#[derive(Debug, Clone)]
pub struct EntryMeasure {
    pub measure: Measure,
    pub probe: usize,
    /// True when the probe sits inside `K`, making the measure a point mass.
    pub degenerate: bool,
}

pub fn entry_measure_free(
    graph: &WeightedGraph,
    k: &[usize],
    probe: usize,
    tol: f64,
) -> Result<EntryMeasure> {
    let degenerate = k.contains(&probe);
    if degenerate {
        let measure = Measure::new(k.iter().map(|&y| (y, f64::from(y == probe))).collect())?;
        return Ok(EntryMeasure {
            measure,
            probe,
            degenerate,
        });
    }
    let family = hitting_family(graph, k, tol)?;
    Ok(EntryMeasure {
        measure: family.measure_at(probe)?,
        probe,
        degenerate,
    })
}

/// An antisymmetric edge flow, stored per edge id in the edge's `u → v`
/// orientation.
#[derive(Debug, Clone)]
pub struct Flow {
    pub edge_flow: Vec<f64>,
}

impl Flow {
    /// Flow energy `Σ θ(e)² / c(e)`.
    pub fn energy(&self, graph: &WeightedGraph) -> f64 {
        graph
            .edges()
            .iter()
            .zip(&self.edge_flow)
            .map(|(e, th)| th * th / e.c)
            .sum()
    }

    /// Signed flow from `x` to `y` along their edge.
    pub fn value(&self, graph: &WeightedGraph, x: usize, y: usize) -> f64 {
        match graph.edge_between(x, y) {
            Some(id) => {
                let e = graph.edge(id);
                if e.u == x {
                    self.edge_flow[id]
                } else {
                    -self.edge_flow[id]
                }
            }
            None => 0.0,
        }
    }

    /// Net flux out of a vertex.
    pub fn flux_out(&self, graph: &WeightedGraph, x: usize) -> f64 {
        graph
            .neighbors(x)
            .map(|(y, _, _)| self.value(graph, x, y))
            .sum()
    }
}

/// Gradient flow `θ = c · ∇f` of a potential.
pub fn gradient_flow(graph: &WeightedGraph, values: &[f64]) -> Flow {
    Flow {
        edge_flow: graph
            .edges()
            .iter()
            .map(|e| e.c * (values[e.u] - values[e.v]))
            .collect(),
    }
}

/// A unit current between two disjoint vertex sets, with its voltage and
/// effective resistance.
#[derive(Debug, Clone)]
pub struct CurrentReport {
    pub flow: Flow,
    pub voltage: PotentialField,
    pub effective_resistance: f64,
}

/// Unit current from `A` to `B` on the given graph (pass a quotient graph
/// with `B = [z]` for the wired current to infinity). The flow has net flux
/// +1 out of `A`, −1 into `B`, and its energy equals the effective
/// resistance.
pub fn unit_current(
    graph: &WeightedGraph,
    a: &[usize],
    b: &[usize],
    tol: f64,
) -> Result<CurrentReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    if a.iter().any(|v| b.contains(v)) {
        return Err(Error::OverlappingSets);
    }
    let mut boundary: Vec<(usize, f64)> = a.iter().map(|&v| (v, 1.0)).collect();
    boundary.extend(b.iter().map(|&v| (v, 0.0)));
    let voltage = solve_harmonic(graph, &boundary, tol)?;
    let current: f64 = a
        .iter()
        .map(|&v| net_current(graph, &voltage.values, v))
        .sum();
    if current <= 0.0 {
        return Err(Error::SingularSystem(
            "no current flows between the sets".into(),
        ));
    }
    let r_eff = 1.0 / current;
    let scaled: Vec<f64> = voltage.values.iter().map(|v| v * r_eff).collect();
    let flow = gradient_flow(graph, &scaled);
    let energy = dirichlet_energy(graph, &scaled);
    Ok(CurrentReport {
        flow,
        voltage: PotentialField {
            values: scaled,
            energy,
            ..voltage
        },
        effective_resistance: r_eff,
    })
}

/// Effective resistance between two vertices.
pub fn effective_resistance(
    graph: &WeightedGraph,
    a: usize,
    b: usize,
    tol: f64,
) -> Result<f64> {
    Ok(unit_current(graph, &[a], &[b], tol)?.effective_resistance)
}

/// Aitken extrapolation from the last three entries of a monotone sequence.
/// Returns `None` when fewer than three entries exist or the increments
/// degenerate.
pub fn richardson3(seq: &[f64]) -> Option<f64> {
    if seq.len() < 3 {
        return None;
    }
    let n = seq.len();
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let denom = c - 2.0 * b + a;
    if denom.abs() < 1e-300 {
        return None;
    }
    let extrapolated = c - (c - b) * (c - b) / denom;
    extrapolated.is_finite().then_some(extrapolated)
}
