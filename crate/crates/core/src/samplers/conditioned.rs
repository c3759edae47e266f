//! Walks conditioned never to return to a set, via Doob h-transform.
//!
//! The conditioning function `h(x)` is the probability of reaching the rim
//! before touching `K`, computed by a wired solve (rim clamped to 1, `K`
//! to 0). The transformed kernel steps with weights `c(x,y)·h(y)`, which
//! vanish on `K` and reproduce the conditioned law exactly. Rejection
//! sampling of the unconditioned walk is kept as the independent oracle.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, WeightedGraph};
use crate::potential::{solve_laplacian, Measure};
use crate::samplers::{StartMode, Step, Trajectory, WalkKernel};

const ESCAPE_FLOOR: f64 = 1e-13;

/// h-transformed sampler of walks from `y ∈ K` conditioned to reach the rim
/// without re-entering `K`.
#[derive(Debug, Clone)]
pub struct NoReturnWalker {
    h: Vec<f64>,
    k_mask: Vec<bool>,
    rim_mask: Vec<bool>,
    /// Conditioned cumulative step weights per vertex (empty on rim and at
    /// vertices with no escape mass).
    cum: Vec<Vec<f64>>,
    /// Escape weight `Σ_y c(x,y) h(y)` per vertex.
    escape: Vec<f64>,
}

impl NoReturnWalker {
    pub fn new(
        graph: &WeightedGraph,
        exhaustion: &Exhaustion,
        k: &[usize],
        tol: f64,
    ) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::EmptyBoundary);
        }
        let n = graph.vertex_count();
        let mut k_mask = vec![false; n];
        for &v in k {
            if exhaustion.on_rim(v) {
                return Err(Error::InvalidInput(format!(
                    "K vertex {} sits on the rim",
                    graph.name(v)
                )));
            }
            k_mask[v] = true;
        }
        let mut rim_mask = vec![false; n];
        let mut clamps: Vec<(usize, f64)> = Vec::new();
        for v in exhaustion.rim() {
            rim_mask[v] = true;
            clamps.push((v, 1.0));
        }
        clamps.extend(k.iter().map(|&v| (v, 0.0)));
        let (h, _) = solve_laplacian(graph, &clamps, &[], tol)?;

        let mut cum = vec![Vec::new(); n];
        let mut escape = vec![0.0; n];
        for x in 0..n {
            if rim_mask[x] {
                continue;
            }
            let mut acc = 0.0;
            let row: Vec<f64> = graph
                .neighbors(x)
                .map(|(y, c, _)| {
                    acc += c * h[y].max(0.0);
                    acc
                })
                .collect();
            escape[x] = acc;
            if acc > ESCAPE_FLOOR {
                cum[x] = row.iter().map(|w| w / acc).collect();
            }
        }
        Ok(Self {
            h,
            k_mask,
            rim_mask,
            cum,
            escape,
        })
    }

    /// The conditioning field `h(x) = P_x[reach rim before K]`.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `π(y) · P_y[never return to K]` proxy; zero means conditioning is
    /// impossible from `y` in this window.
    pub fn escape_weight(&self, y: usize) -> f64 {
        self.escape[y]
    }

    /// Exact first-step law of the conditioned walk from `y`.
    pub fn first_step_law(&self, graph: &WeightedGraph, y: usize) -> Result<Measure> {
        if self.escape[y] <= ESCAPE_FLOOR {
            return Err(Error::NoEscapeMass);
        }
        Measure::new(
            graph
                .neighbors(y)
                .map(|(x, c, _)| (x, c * self.h[x].max(0.0) / self.escape[y]))
                .collect(),
        )
    }

    /// Samples the conditioned walk from `y` until the rim; the returned
    /// trajectory starts at `y` and ends on the killed rim vertex.
    pub fn sample(
        &self,
        graph: &WeightedGraph,
        y: usize,
        budget: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<Trajectory> {
        if self.escape[y] <= ESCAPE_FLOOR {
            return Err(Error::NoEscapeMass);
        }
        let mut steps = vec![Step::Vertex(y)];
        let mut x = y;
        loop {
            if steps.len() > budget {
                return Err(Error::StepBudgetExceeded {
                    budget,
                    visited: steps.len(),
                });
            }
            let row = &self.cum[x];
            if row.is_empty() {
                return Err(Error::NoEscapeMass);
            }
            let u: f64 = rng.random();
            let idx = row.partition_point(|&c| c <= u).min(row.len() - 1);
            x = graph
                .neighbors(x)
                .nth(idx)
                .map(|(v, _, _)| v)
                .expect("conditioned row shorter than adjacency");
            debug_assert!(!self.k_mask[x], "conditioned walk stepped into K");
            steps.push(Step::Vertex(x));
            if self.rim_mask[x] {
                return Ok(Trajectory::discrete(steps, StartMode::FromVertex(y)));
            }
        }
    }
}

/// Convenience wrapper: build the walker and draw one conditioned walk.
pub fn walk_conditioned_no_return(
    graph: &WeightedGraph,
    exhaustion: &Exhaustion,
    k: &[usize],
    y: usize,
    budget: usize,
    tol: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Trajectory> {
    NoReturnWalker::new(graph, exhaustion, k, tol)?.sample(graph, y, budget, rng)
}

/// Rejection-sampling oracle for the same law: run the unconditioned walk
/// from `y`, reject any attempt that re-enters `K` before the rim. Returns
/// the accepted walk and the number of attempts it took.
#[allow(clippy::too_many_arguments)]
pub fn walk_no_return_rejection(
    graph: &WeightedGraph,
    exhaustion: &Exhaustion,
    k: &[usize],
    y: usize,
    budget: usize,
    max_attempts: usize,
    kernel: &WalkKernel,
    rng: &mut ChaCha12Rng,
) -> Result<(Trajectory, usize)> {
    let mut k_mask = vec![false; graph.vertex_count()];
    for &v in k {
        k_mask[v] = true;
    }
    for attempt in 1..=max_attempts {
        let mut steps = vec![Step::Vertex(y)];
        let mut x = y;
        let mut rejected = false;
        loop {
            if steps.len() > budget {
                return Err(Error::StepBudgetExceeded {
                    budget,
                    visited: steps.len(),
                });
            }
            x = kernel.step(graph, x, rng);
            if k_mask[x] {
                rejected = true;
                break;
            }
            steps.push(Step::Vertex(x));
            if exhaustion.on_rim(x) {
                break;
            }
        }
        if !rejected {
            return Ok((
                Trajectory::discrete(steps, StartMode::FromVertex(y)),
                attempt,
            ));
        }
    }
    Err(Error::InvalidInput(format!(
        "rejection sampler exhausted {max_attempts} attempts"
    )))
}
