//! Monte Carlo engines: plain and conditioned walks, the windowed
//! interlacement point process and the truncated reflected walk.
//!
//! "Hitting infinity" is operationalized as killing the walk on the
//! window's outermost ring (the exhaustion rim); the margin between the
//! level of interest and the rim is the accuracy knob. Every sampler draws
//! topology decisions and holding times from two separate seeded streams,
//! so the discrete vertex skeleton of a run is invariant under changes of
//! the holding-rate schedule.

mod conditioned;
mod interlacement;
mod reflected;

pub use conditioned::{walk_conditioned_no_return, walk_no_return_rejection, NoReturnWalker};
pub use interlacement::{
    interlacement_order, ordered_trace, Excursion, InterlacementSampler, OrderedVisit,
    PointSample,
};
pub use reflected::{EntryMode, ReflectedRun, ReflectedSampler, RunBudget};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, WeightedGraph};

/// Paired RNG streams: one for topology (which vertex next, how many
/// excursions, labels), one for holding times only.
#[derive(Debug, Clone)]
pub struct SamplerRng {
    pub topo: ChaCha12Rng,
    pub holds: ChaCha12Rng,
}

impl SamplerRng {
    pub fn new(seed: u64) -> Self {
        Self::for_worker(seed, 0)
    }

    /// Independent stream pair for a parallel worker.
    pub fn for_worker(seed: u64, worker: u64) -> Self {
        let mut topo = ChaCha12Rng::seed_from_u64(seed);
        topo.set_stream(2 * worker);
        let mut holds = ChaCha12Rng::seed_from_u64(seed);
        holds.set_stream(2 * worker + 1);
        Self { topo, holds }
    }
}

/// One entry of a trajectory: a vertex visit or the marker for "at
/// infinity" between excursions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Step {
    Vertex(usize),
    Inf,
}

/// Where a trajectory starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StartMode {
    FromVertex(usize),
    FromInfinity,
}

/// A finite vertex path, possibly with INF markers separating excursions
/// and per-step holding times (INF markers hold zero time: the set of
/// times spent at infinity is null).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub holds: Option<Vec<f64>>,
    pub start: StartMode,
}

impl Trajectory {
    pub fn discrete(steps: Vec<Step>, start: StartMode) -> Self {
        Self {
            steps,
            holds: None,
            start,
        }
    }

    /// Number of vertex visits (INF markers excluded).
    pub fn visit_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Vertex(_)))
            .count()
    }

    /// Iterates vertex visits in order.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().filter_map(|s| match s {
            Step::Vertex(v) => Some(*v),
            Step::Inf => None,
        })
    }

    /// Total holding time (0 when the trajectory is discrete).
    pub fn total_time(&self) -> f64 {
        self.holds.as_ref().map_or(0.0, |h| h.iter().sum())
    }

    /// Index ranges of the maximal vertex runs between INF markers.
    pub fn excursion_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = Vec::new();
        let mut start = None;
        for (i, s) in self.steps.iter().enumerate() {
            match (s, start) {
                (Step::Vertex(_), None) => start = Some(i),
                (Step::Inf, Some(b)) => {
                    ranges.push(b..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(b) = start {
            ranges.push(b..self.steps.len());
        }
        ranges
    }

    /// Checks step adjacency, hold alignment and hold positivity.
    pub fn validate(&self, graph: &WeightedGraph) -> Result<()> {
        if let Some(h) = &self.holds {
            if h.len() != self.steps.len() {
                return Err(Error::InvalidInput(format!(
                    "holds length {} does not match steps length {}",
                    h.len(),
                    self.steps.len()
                )));
            }
            for (s, &t) in self.steps.iter().zip(h) {
                match s {
                    Step::Vertex(_) if t <= 0.0 || t.is_nan() => {
                        return Err(Error::InvalidInput(format!(
                            "nonpositive holding time {t}"
                        )))
                    }
                    Step::Inf if t != 0.0 => {
                        return Err(Error::InvalidInput(
                            "INF markers must hold zero time".into(),
                        ))
                    }
                    _ => {}
                }
            }
        }
        let mut prev: Option<usize> = None;
        for s in &self.steps {
            match s {
                Step::Vertex(v) => {
                    if *v >= graph.vertex_count() {
                        return Err(Error::InvalidInput(format!("vertex {v} out of range")));
                    }
                    if let Some(p) = prev {
                        if graph.edge_between(p, *v).is_none() {
                            return Err(Error::InvalidInput(format!(
                                "consecutive steps {} and {} are not adjacent",
                                graph.name(p),
                                graph.name(*v)
                            )));
                        }
                    }
                    prev = Some(*v);
                }
                Step::Inf => prev = None,
            }
        }
        Ok(())
    }
}

/// Precomputed cumulative transition weights for O(log deg) kernel steps.
#[derive(Debug, Clone)]
pub struct WalkKernel {
    cum: Vec<Vec<f64>>,
}

impl WalkKernel {
    pub fn new(graph: &WeightedGraph) -> Self {
        let cum = (0..graph.vertex_count())
            .map(|v| {
                let mut acc = 0.0;
                let mut row: Vec<f64> = graph
                    .neighbors(v)
                    .map(|(_, c, _)| {
                        acc += c;
                        acc
                    })
                    .collect();
                let total = acc;
                for x in &mut row {
                    *x /= total;
                }
                row
            })
            .collect();
        Self { cum }
    }

    /// Samples one step of the walk from `x`.
    pub fn step(&self, graph: &WeightedGraph, x: usize, rng: &mut ChaCha12Rng) -> usize {
        let row = &self.cum[x];
        let u: f64 = rng.random();
        let idx = row.partition_point(|&c| c <= u).min(row.len() - 1);
        graph
            .neighbors(x)
            .nth(idx)
            .map(|(y, _, _)| y)
            .expect("kernel row shorter than adjacency")
    }
}

/// Runs the discrete walk from `start` until `stop` first returns true
/// (checked on every visited vertex, including the start).
pub fn walk<F: FnMut(usize) -> bool>(
    graph: &WeightedGraph,
    kernel: &WalkKernel,
    start: usize,
    mut stop: F,
    budget: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Trajectory> {
    let mut steps = vec![Step::Vertex(start)];
    let mut x = start;
    if stop(x) {
        return Ok(Trajectory::discrete(steps, StartMode::FromVertex(start)));
    }
    loop {
        if steps.len() > budget {
            return Err(Error::StepBudgetExceeded {
                budget,
                visited: steps.len(),
            });
        }
        x = kernel.step(graph, x, rng);
        steps.push(Step::Vertex(x));
        if stop(x) {
            return Ok(Trajectory::discrete(steps, StartMode::FromVertex(start)));
        }
    }
}

/// Per-vertex holding rates `m(x)`, constant on exhaustion shells.
#[derive(Debug, Clone)]
pub struct RateSchedule {
    rates: Vec<f64>,
}

impl RateSchedule {
    /// Constant rate everywhere.
    pub fn constant(graph: &WeightedGraph, rate: f64) -> Result<Self> {
        if rate <= 0.0 || rate.is_nan() {
            return Err(Error::InvalidInput(format!("rate must be positive, got {rate}")));
        }
        Ok(Self {
            rates: vec![rate; graph.vertex_count()],
        })
    }

    pub fn rate(&self, v: usize) -> f64 {
        self.rates[v]
    }

    /// Smallest rate over the window.
    pub fn floor(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Geometric schedule `m(x) = base · growth^shell(x)`; `growth >= 1` keeps
/// the rates nondecreasing outward, accelerating the walk toward the rim.
pub fn default_rate(
    graph: &WeightedGraph,
    exhaustion: &Exhaustion,
    base: f64,
    growth: f64,
) -> Result<RateSchedule> {
    if base <= 0.0 || base.is_nan() {
        return Err(Error::InvalidInput(format!("base must be positive, got {base}")));
    }
    if growth < 1.0 || growth.is_nan() {
        return Err(Error::InvalidInput(format!(
            "growth must be >= 1 so rates are nondecreasing in the shell, got {growth}"
        )));
    }
    let rates = (0..graph.vertex_count())
        .map(|v| base * growth.powi(exhaustion.shell(v) as i32))
        .collect();
    Ok(RateSchedule { rates })
}

/// Draws an `Exp(1)/m(v)` holding time.
pub(crate) fn draw_hold(rate: &RateSchedule, v: usize, rng: &mut ChaCha12Rng) -> f64 {
    let e: f64 = rng.sample(Exp1);
    // Exp1 can return exactly 0 with negligible probability; keep holds positive.
    (e.max(f64::MIN_POSITIVE)) / rate.rate(v)
}

/// Attaches holding times to every vertex step of a discrete trajectory.
pub fn attach_holds(
    trajectory: &mut Trajectory,
    rate: &RateSchedule,
    rng: &mut ChaCha12Rng,
) {
    let holds = trajectory
        .steps
        .iter()
        .map(|s| match s {
            Step::Vertex(v) => draw_hold(rate, *v, rng),
            Step::Inf => 0.0,
        })
        .collect();
    trajectory.holds = Some(holds);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_family, FamilySpec, GraphBuilder};

    #[test]
    fn two_vertex_walk_is_one_step() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "b", 1.0).unwrap();
        let g = b.build().unwrap();
        let kernel = WalkKernel::new(&g);
        let mut rng = SamplerRng::new(7);
        for _ in 0..50 {
            let t = walk(&g, &kernel, 0, |v| v == 1, 100, &mut rng.topo).unwrap();
            assert_eq!(t.steps, vec![Step::Vertex(0), Step::Vertex(1)]);
        }
    }

    #[test]
    fn walk_budget_errors() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "b", 1.0).unwrap();
        let g = b.build().unwrap();
        let kernel = WalkKernel::new(&g);
        let mut rng = SamplerRng::new(7);
        let err = walk(&g, &kernel, 0, |_| false, 10, &mut rng.topo).unwrap_err();
        assert!(matches!(err, Error::StepBudgetExceeded { .. }));
    }

    #[test]
    fn kernel_matches_transition_probabilities() {
        // Star with unequal conductances; empirical one-step law must match
        // c/π closely at 200k draws.
        let mut b = GraphBuilder::new();
        b.add_edge("c", "x", 1.0).unwrap();
        b.add_edge("c", "y", 2.0).unwrap();
        b.add_edge("c", "z", 5.0).unwrap();
        let g = b.build().unwrap();
        let c = g.vertex("c").unwrap();
        let kernel = WalkKernel::new(&g);
        let mut rng = SamplerRng::new(20260810);
        let n = 200_000;
        let mut counts = vec![0u64; g.vertex_count()];
        for _ in 0..n {
            counts[kernel.step(&g, c, &mut rng.topo)] += 1;
        }
        for (name, expect) in [("x", 0.125), ("y", 0.25), ("z", 0.625)] {
            let v = g.vertex(name).unwrap();
            let freq = counts[v] as f64 / n as f64;
            let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
            assert!(
                (freq - expect).abs() < 4.0 * sigma,
                "{name}: freq {freq} vs {expect}"
            );
        }
    }

    #[test]
    fn rate_schedule_shapes() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 3 }).unwrap();
        let flat = default_rate(&g, &e, 2.0, 1.0).unwrap();
        assert!(flat.rates.iter().all(|&r| r == 2.0));
        // shell 0, base 2 -> rate 2, so mean hold is 1/2
        let grow = default_rate(&g, &e, 2.0, 3.0).unwrap();
        let origin = g.vertex("0,0,0").unwrap();
        assert_eq!(grow.rate(origin), 2.0);
        // L-inf norm 3 puts the corner in level 3, i.e. shell 2.
        let far = g.vertex("3,3,3").unwrap();
        assert_eq!(grow.rate(far), 2.0 * 9.0);
        assert!(default_rate(&g, &e, 2.0, 0.5).is_err());
        assert!(default_rate(&g, &e, 0.0, 2.0).is_err());
    }

    #[test]
    fn holds_align_and_are_positive() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 2 }).unwrap();
        let kernel = WalkKernel::new(&g);
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let mut rng = SamplerRng::new(3);
        let mut t = walk(
            &g,
            &kernel,
            g.vertex("0,0,0").unwrap(),
            |v| e.on_rim(v),
            1_000_000,
            &mut rng.topo,
        )
        .unwrap();
        attach_holds(&mut t, &rate, &mut rng.holds);
        t.validate(&g).unwrap();
        assert!(t.total_time() > 0.0);
    }

    #[test]
    fn mean_hold_matches_rate() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 1 }).unwrap();
        let rate = default_rate(&g, &e, 2.0, 1.0).unwrap();
        let mut rng = SamplerRng::new(11);
        let origin = g.vertex("0,0,0").unwrap();
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| draw_hold(&rate, origin, &mut rng.holds))
            .sum::<f64>()
            / n as f64;
        // Exp(2) has mean 0.5 and sd 0.5.
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt(), "mean {mean}");
    }
}
