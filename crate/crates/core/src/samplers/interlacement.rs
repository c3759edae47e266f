//! The windowed interlacement point process.
//!
//! A sample for a finite set `K` is a Poisson number (intensity
//! `u_max · cap(K)`) of labelled excursions. Each excursion is rooted at
//! the first `K`-hit `y ~ ẽ_K`, runs an unconditioned forward leg from `y`
//! to the rim, and a backward leg conditioned never to return to `K`
//! (realized by h-transform, stored reversed so the excursion reads
//! rim → y → rim in time order). Labels are i.i.d. uniform on `[0, u_max]`;
//! the interlacement ordering sorts visits by label and in-excursion index.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, WeightedGraph};
use crate::potential::{net_current, solve_laplacian, Measure};
use crate::samplers::conditioned::NoReturnWalker;
use crate::samplers::{
    draw_hold, RateSchedule, SamplerRng, StartMode, Step, Trajectory, WalkKernel,
};

/// One labelled excursion through `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Excursion {
    pub trajectory: Trajectory,
    /// Poisson label `u_m ∈ [0, u_max]`.
    pub label: f64,
    /// Index of the root (first `K`-hit) within `trajectory.steps`.
    pub root_pos: usize,
}

impl Excursion {
    pub fn root(&self) -> usize {
        match self.trajectory.steps[self.root_pos] {
            Step::Vertex(v) => v,
            Step::Inf => unreachable!("root position is a vertex"),
        }
    }
}

/// A windowed interlacement sample.
#[derive(Debug, Clone)]
pub struct PointSample {
    pub excursions: Vec<Excursion>,
    pub k: Vec<usize>,
    pub u_max: f64,
    pub capacity: f64,
}

/// Prebuilt sampler for one `(window, K)` pair.
pub struct InterlacementSampler<'g> {
    graph: &'g WeightedGraph,
    kernel: WalkKernel,
    walker: NoReturnWalker,
    k: Vec<usize>,
    capacity: f64,
    equilibrium: Measure,
    root_cum: Vec<f64>,
    rate: RateSchedule,
    rim_mask: Vec<bool>,
    budget: usize,
}

impl<'g> InterlacementSampler<'g> {
    pub fn new(
        graph: &'g WeightedGraph,
        exhaustion: &Exhaustion,
        k: &[usize],
        rate: RateSchedule,
        tol: f64,
    ) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::EmptyBoundary);
        }
        // Wired voltage with the rim standing in for z: 1 on K, 0 on the rim.
        let mut clamps: Vec<(usize, f64)> = k.iter().map(|&v| (v, 1.0)).collect();
        for v in exhaustion.rim() {
            if k.contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "K vertex {} sits on the rim",
                    graph.name(v)
                )));
            }
            clamps.push((v, 0.0));
        }
        let (phi, _) = solve_laplacian(graph, &clamps, &[], tol)?;
        let equilibrium = Measure::new(
            k.iter()
                .map(|&y| (y, net_current(graph, &phi, y)))
                .collect(),
        )?;
        let capacity = equilibrium.total();
        if capacity <= 0.0 {
            return Err(Error::NoEscapeMass);
        }
        let mut acc = 0.0;
        let root_cum = equilibrium
            .masses()
            .iter()
            .map(|m| {
                acc += m / capacity;
                acc
            })
            .collect();
        let walker = NoReturnWalker::new(graph, exhaustion, k, tol)?;
        let mut rim_mask = vec![false; graph.vertex_count()];
        for v in exhaustion.rim() {
            rim_mask[v] = true;
        }
        Ok(Self {
            graph,
            kernel: WalkKernel::new(graph),
            walker,
            k: k.to_vec(),
            capacity,
            equilibrium,
            root_cum,
            rate,
            rim_mask,
            budget: 50_000_000,
        })
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// The (unnormalized) equilibrium measure `e_K` on the window.
    pub fn equilibrium(&self) -> &Measure {
        &self.equilibrium
    }

    fn sample_root(&self, rng: &mut SamplerRng) -> usize {
        let u: f64 = rng.topo.random();
        let idx = self
            .root_cum
            .partition_point(|&c| c <= u)
            .min(self.k.len() - 1);
        self.equilibrium.support()[idx]
    }

    /// Draws one rooted excursion (without a label).
    fn sample_excursion(&self, label: f64, rng: &mut SamplerRng) -> Result<Excursion> {
        let y = self.sample_root(rng);
        let back = self
            .walker
            .sample(self.graph, y, self.budget, &mut rng.topo)?;
        let mut steps: Vec<Step> = back.steps[1..].iter().rev().copied().collect();
        let root_pos = steps.len();
        steps.push(Step::Vertex(y));
        // Forward leg: plain walk killed on the rim.
        let mut x = y;
        loop {
            if steps.len() > self.budget {
                return Err(Error::StepBudgetExceeded {
                    budget: self.budget,
                    visited: steps.len(),
                });
            }
            x = self.kernel.step(self.graph, x, &mut rng.topo);
            steps.push(Step::Vertex(x));
            if self.rim_mask[x] {
                break;
            }
        }
        let mut trajectory = Trajectory::discrete(steps, StartMode::FromInfinity);
        let holds = trajectory
            .steps
            .iter()
            .map(|s| match s {
                Step::Vertex(v) => draw_hold(&self.rate, *v, &mut rng.holds),
                Step::Inf => 0.0,
            })
            .collect();
        trajectory.holds = Some(holds);
        Ok(Excursion {
            trajectory,
            label,
            root_pos,
        })
    }

    /// Samples the point process up to label `u_max`.
    pub fn sample(&self, u_max: f64, rng: &mut SamplerRng) -> Result<PointSample> {
        if u_max < 0.0 {
            return Err(Error::InvalidInput(format!("u_max must be >= 0, got {u_max}")));
        }
        let lambda = u_max * self.capacity;
        let count = if lambda > 0.0 {
            let poisson = Poisson::new(lambda)
                .map_err(|e| Error::InvalidInput(format!("poisson intensity: {e}")))?;
            poisson.sample(&mut rng.topo) as u64
        } else {
            0
        };
        let mut excursions = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let label: f64 = rng.topo.random_range(0.0..=u_max);
            excursions.push(self.sample_excursion(label, rng)?);
        }
        Ok(PointSample {
            excursions,
            k: self.k.clone(),
            u_max,
            capacity: self.capacity,
        })
    }
}

/// One visit in interlacement order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedVisit {
    /// Index into `sample.excursions`.
    pub excursion: usize,
    /// Root-relative step index within the excursion (negative on the
    /// backward leg).
    pub step: i64,
    pub vertex: usize,
    pub hold: f64,
    /// `T(m,n)`: total holding time of all visits that precede this one.
    pub start: f64,
}

/// Sorts all visits by (label, in-excursion order) and accumulates the time
/// function. Label ties (a probability-zero event) break by excursion index.
pub fn interlacement_order(sample: &PointSample) -> Vec<OrderedVisit> {
    let mut order: Vec<usize> = (0..sample.excursions.len()).collect();
    order.sort_by(|&a, &b| {
        sample.excursions[a]
            .label
            .partial_cmp(&sample.excursions[b].label)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut visits = Vec::new();
    let mut clock = 0.0;
    for &m in &order {
        let exc = &sample.excursions[m];
        let holds = exc
            .trajectory
            .holds
            .as_ref()
            .expect("interlacement excursions always carry holds");
        for (j, s) in exc.trajectory.steps.iter().enumerate() {
            if let Step::Vertex(v) = s {
                visits.push(OrderedVisit {
                    excursion: m,
                    step: j as i64 - exc.root_pos as i64,
                    vertex: *v,
                    hold: holds[j],
                    start: clock,
                });
                clock += holds[j];
            }
        }
    }
    visits
}

/// Concatenates the sample into one trajectory in interlacement order,
/// with INF markers before each excursion (the process starts at infinity).
pub fn ordered_trace(sample: &PointSample) -> Trajectory {
    let mut order: Vec<usize> = (0..sample.excursions.len()).collect();
    order.sort_by(|&a, &b| {
        sample.excursions[a]
            .label
            .partial_cmp(&sample.excursions[b].label)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut steps = Vec::new();
    let mut holds = Vec::new();
    for &m in &order {
        let exc = &sample.excursions[m];
        steps.push(Step::Inf);
        holds.push(0.0);
        steps.extend_from_slice(&exc.trajectory.steps);
        holds.extend_from_slice(exc.trajectory.holds.as_ref().unwrap());
    }
    Trajectory {
        steps,
        holds: Some(holds),
        start: StartMode::FromInfinity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_family, wire, FamilySpec};
    use crate::potential::equilibrium_measure;
    use crate::samplers::default_rate;

    fn setup() -> (WeightedGraph, Exhaustion, Vec<usize>) {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 4 }).unwrap();
        let k: Vec<usize> = ["0,0,0", "1,0,0"]
            .iter()
            .map(|s| g.vertex(s).unwrap())
            .collect();
        (g, e, k)
    }

    #[test]
    fn umax_zero_gives_empty_sample() {
        let (g, e, k) = setup();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
        let mut rng = SamplerRng::new(1);
        let sample = s.sample(0.0, &mut rng).unwrap();
        assert!(sample.excursions.is_empty());
    }

    #[test]
    fn window_capacity_matches_quotient_computation() {
        let (g, e, k) = setup();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-12).unwrap();
        let q = wire(&g, &e, e.depth() - 1).unwrap();
        let rep = equilibrium_measure(&q, &k, 1e-12).unwrap();
        assert!(
            (s.capacity() - rep.capacity).abs() < 1e-8,
            "window {} vs quotient {}",
            s.capacity(),
            rep.capacity
        );
    }

    #[test]
    fn excursions_visit_k_and_backward_leg_avoids_it() {
        let (g, e, k) = setup();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
        let mut rng = SamplerRng::new(5);
        let sample = s.sample(2.0, &mut rng).unwrap();
        assert!(!sample.excursions.is_empty());
        for exc in &sample.excursions {
            assert!(k.contains(&exc.root()));
            assert!(exc.label >= 0.0 && exc.label <= 2.0);
            // Strictly before the root: no K visits.
            for s in &exc.trajectory.steps[..exc.root_pos] {
                if let Step::Vertex(v) = s {
                    assert!(!k.contains(v), "backward leg revisited K");
                }
            }
            exc.trajectory.validate(&g).unwrap();
            // Both ends on the rim.
            let verts: Vec<usize> = exc.trajectory.vertices().collect();
            assert!(e.on_rim(verts[0]) && e.on_rim(*verts.last().unwrap()));
        }
    }

    #[test]
    fn ordering_respects_labels_and_time_identity() {
        let (g, e, k) = setup();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
        let mut rng = SamplerRng::new(13);
        let sample = s.sample(1.0, &mut rng).unwrap();
        let visits = interlacement_order(&sample);
        // Total time identity: last start + last hold = sum of all holds.
        let total: f64 = visits.iter().map(|v| v.hold).sum();
        if let Some(last) = visits.last() {
            assert!((last.start + last.hold - total).abs() < 1e-9);
        }
        // Visits of a lower-label excursion all precede higher labels.
        for w in visits.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (la, lb) = (
                sample.excursions[a.excursion].label,
                sample.excursions[b.excursion].label,
            );
            assert!(la <= lb, "ordering violated");
            if a.excursion == b.excursion {
                assert!(a.step < b.step);
            }
        }
    }

    #[test]
    fn t_at_root_relative_zero_sums_backward_holds() {
        let (g, e, k) = setup();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
        let mut rng = SamplerRng::new(21);
        let mut sample = s.sample(0.8, &mut rng).unwrap();
        while sample.excursions.is_empty() {
            sample = s.sample(0.8, &mut rng).unwrap();
        }
        let visits = interlacement_order(&sample);
        // Label-minimal excursion = first in the ordered visit list.
        let first_exc = visits[0].excursion;
        let exc = &sample.excursions[first_exc];
        let backward_sum: f64 = exc.trajectory.holds.as_ref().unwrap()[..exc.root_pos]
            .iter()
            .sum();
        let root_visit = visits
            .iter()
            .find(|v| v.excursion == first_exc && v.step == 0)
            .unwrap();
        assert!((root_visit.start - backward_sum).abs() < 1e-12);
    }

    #[test]
    fn seed_determinism_bit_identical() {
        let (g, e, k) = setup();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
        let a = s.sample(1.5, &mut SamplerRng::new(2024)).unwrap();
        let b = s.sample(1.5, &mut SamplerRng::new(2024)).unwrap();
        assert_eq!(a.excursions, b.excursions);
    }

    #[test]
    fn vertex_skeleton_independent_of_rate() {
        let (g, e, k) = setup();
        let slow = default_rate(&g, &e, 1.0, 1.0).unwrap();
        let fast = default_rate(&g, &e, 7.0, 3.0).unwrap();
        let s1 = InterlacementSampler::new(&g, &e, &k, slow, 1e-10).unwrap();
        let s2 = InterlacementSampler::new(&g, &e, &k, fast, 1e-10).unwrap();
        let a = s1.sample(1.5, &mut SamplerRng::new(77)).unwrap();
        let b = s2.sample(1.5, &mut SamplerRng::new(77)).unwrap();
        assert_eq!(a.excursions.len(), b.excursions.len());
        for (x, y) in a.excursions.iter().zip(&b.excursions) {
            assert_eq!(x.trajectory.steps, y.trajectory.steps);
            assert_eq!(x.label, y.label);
            assert_ne!(x.trajectory.holds, y.trajectory.holds);
        }
    }

    #[test]
    fn coverage_monotone_in_label_cutoff() {
        // Filtering one big sample by label cutoff gives coupled sub-samples:
        // the set of visited K vertices is monotone in the cutoff, exactly.
        let (g, e, k) = setup();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = InterlacementSampler::new(&g, &e, &k, rate, 1e-10).unwrap();
        let sample = s.sample(4.0, &mut SamplerRng::new(31)).unwrap();
        let visited = |cut: f64| -> std::collections::HashSet<usize> {
            sample
                .excursions
                .iter()
                .filter(|exc| exc.label <= cut)
                .flat_map(|exc| exc.trajectory.vertices())
                .filter(|v| k.contains(v))
                .collect()
        };
        let mut prev = visited(0.5);
        for cut in [1.0, 2.0, 4.0] {
            let now = visited(cut);
            assert!(prev.is_subset(&now));
            prev = now;
        }
    }
}
