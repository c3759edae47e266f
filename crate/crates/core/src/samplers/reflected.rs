//! The truncated reflected walk: excursions into a level, killed at the rim.
//!
//! The process alternates visits to level `n` with stretches "at infinity"
//! (INF markers). Re-entry follows one of two laws. In wired mode entries
//! are i.i.d. from the normalized equilibrium measure `ẽ_{VG_n}` — every
//! escape route to infinity is interchangeable. In free-trace mode the
//! entry measure is `y ↦ h^y_{VG_n}(x_exit)`, evaluated at the rim vertex
//! where the previous excursion died: the martingale-limit re-entry, which
//! remembers *which way* the walk left. The two laws agree exactly when
//! free and wired boundary behavior coincide; their divergence on trees is
//! one of the headline diagnostics.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, WeightedGraph};
use crate::potential::{net_current, solve_laplacian};
use crate::samplers::{
    draw_hold, RateSchedule, SamplerRng, StartMode, Step, Trajectory, WalkKernel,
};

/// Re-entry law of the truncated walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryMode {
    Wired,
    FreeTrace,
}

/// Stopping rules for one run; whichever triggers first ends it.
#[derive(Debug, Clone, Default)]
pub struct RunBudget {
    /// Stop after this many completed excursions.
    pub max_excursions: Option<usize>,
    /// Stop once total holding time reaches this.
    pub max_time: Option<f64>,
    /// Stop once all of these vertices have been visited.
    pub coverage: Option<Vec<usize>>,
}

impl RunBudget {
    pub fn excursions(n: usize) -> Self {
        Self {
            max_excursions: Some(n),
            ..Default::default()
        }
    }

    pub fn duration(t: f64) -> Self {
        Self {
            max_time: Some(t),
            ..Default::default()
        }
    }
}

/// One realized run of the truncated walk.
#[derive(Debug, Clone)]
pub struct ReflectedRun {
    pub trajectory: Trajectory,
    /// Entry vertex of each started excursion.
    pub entries: Vec<usize>,
    /// Rim vertex where each completed excursion was killed.
    pub exits: Vec<usize>,
    pub completed_excursions: usize,
}

/// Prebuilt sampler for one `(window, level, mode)` triple.
pub struct ReflectedSampler<'g> {
    graph: &'g WeightedGraph,
    level: usize,
    mode: EntryMode,
    kernel: WalkKernel,
    rate: RateSchedule,
    rim_mask: Vec<bool>,
    rim_list: Vec<usize>,
    /// Boundary vertices of the level carrying equilibrium mass.
    support: Vec<usize>,
    wired_cum: Vec<f64>,
    /// Per rim vertex: cumulative entry law over `support` (free-trace).
    free_cum: Option<Vec<Vec<f64>>>,
    rim_slot: Vec<Option<usize>>,
    step_budget: usize,
}

impl<'g> ReflectedSampler<'g> {
    pub fn new(
        graph: &'g WeightedGraph,
        exhaustion: &Exhaustion,
        level: usize,
        mode: EntryMode,
        rate: RateSchedule,
        tol: f64,
    ) -> Result<Self> {
        if level + 2 > exhaustion.depth() {
            return Err(Error::InvalidInput(format!(
                "level {level} leaves no margin before the rim (window depth {})",
                exhaustion.depth()
            )));
        }
        let lvl = exhaustion.level(level)?.to_vec();
        let rim_list = exhaustion.rim();
        let mut rim_mask = vec![false; graph.vertex_count()];
        for &v in &rim_list {
            rim_mask[v] = true;
        }

        // Equilibrium measure of the level set, killed at the rim.
        let mut clamps: Vec<(usize, f64)> = lvl.iter().map(|&v| (v, 1.0)).collect();
        clamps.extend(rim_list.iter().map(|&v| (v, 0.0)));
        let (phi, _) = solve_laplacian(graph, &clamps, &[], tol)?;
        let mut support = Vec::new();
        let mut masses = Vec::new();
        for &y in &lvl {
            let m = net_current(graph, &phi, y);
            if m > 1e-14 {
                support.push(y);
                masses.push(m);
            }
        }
        if support.is_empty() {
            return Err(Error::NoEscapeMass);
        }
        let total: f64 = masses.iter().sum();
        let mut acc = 0.0;
        let wired_cum: Vec<f64> = masses
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();

        let mut rim_slot = vec![None; graph.vertex_count()];
        for (i, &v) in rim_list.iter().enumerate() {
            rim_slot[v] = Some(i);
        }

        // Free-trace re-entry table: h^y over the window, read off at the rim.
        let free_cum = if mode == EntryMode::FreeTrace {
            let mut table = vec![vec![0.0; support.len()]; rim_list.len()];
            for (yi, &y) in support.iter().enumerate() {
                let boundary: Vec<(usize, f64)> = lvl
                    .iter()
                    .map(|&v| (v, if v == y { 1.0 } else { 0.0 }))
                    .collect();
                let (hy, _) = solve_laplacian(graph, &boundary, &[], tol)?;
                for (ri, &r) in rim_list.iter().enumerate() {
                    table[ri][yi] = hy[r].max(0.0);
                }
            }
            let mut cum = Vec::with_capacity(rim_list.len());
            for row in table {
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-6 {
                    return Err(Error::SingularSystem(format!(
                        "free entry law sums to {total}, expected 1"
                    )));
                }
                let mut acc = 0.0;
                cum.push(
                    row.iter()
                        .map(|m| {
                            acc += m / total;
                            acc
                        })
                        .collect(),
                );
            }
            Some(cum)
        } else {
            None
        };

        Ok(Self {
            graph,
            level,
            mode,
            kernel: WalkKernel::new(graph),
            rate,
            rim_mask,
            rim_list,
            support,
            wired_cum,
            free_cum,
            rim_slot,
            step_budget: 50_000_000,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn mode(&self) -> EntryMode {
        self.mode
    }

    /// Entry support (`∂VG_n` carrying equilibrium mass).
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    fn sample_cum(&self, cum: &[f64], rng: &mut SamplerRng) -> usize {
        let u: f64 = rng.topo.random();
        let idx = cum.partition_point(|&c| c <= u).min(self.support.len() - 1);
        self.support[idx]
    }

    fn sample_entry(&self, last_exit: Option<usize>, rng: &mut SamplerRng) -> usize {
        match self.mode {
            EntryMode::Wired => self.sample_cum(&self.wired_cum, rng),
            EntryMode::FreeTrace => {
                let exit = last_exit.unwrap_or_else(|| {
                    // No history yet: pretend the walk left through a
                    // uniformly chosen rim vertex.
                    let i = rng.topo.random_range(0..self.rim_list.len());
                    self.rim_list[i]
                });
                let slot = self.rim_slot[exit].expect("exit vertex not on the rim");
                self.sample_cum(&self.free_cum.as_ref().unwrap()[slot], rng)
            }
        }
    }

    /// Runs excursions until the budget is exhausted.
    pub fn run(&self, budget: &RunBudget, rng: &mut SamplerRng) -> Result<ReflectedRun> {
        let mut steps = Vec::new();
        let mut holds = Vec::new();
        let mut entries = Vec::new();
        let mut exits = Vec::new();
        let mut completed = 0usize;
        let mut time = 0.0f64;
        let mut last_exit: Option<usize> = None;

        let mut uncovered = budget.coverage.as_ref().map(|targets| {
            let mut mask = vec![false; self.graph.vertex_count()];
            let mut left = 0usize;
            for &t in targets {
                if !mask[t] {
                    mask[t] = true;
                    left += 1;
                }
            }
            (mask, left)
        });

        'outer: loop {
            if let Some((_, 0)) = &uncovered {
                break;
            }
            if let Some(max) = budget.max_excursions {
                if completed >= max {
                    break;
                }
            }
            if let Some(max_t) = budget.max_time {
                if time >= max_t {
                    break;
                }
            }
            if budget.max_excursions.is_none()
                && budget.max_time.is_none()
                && budget.coverage.is_none()
            {
                return Err(Error::InvalidInput("run budget is unbounded".into()));
            }

            let entry = self.sample_entry(last_exit, rng);
            entries.push(entry);
            steps.push(Step::Inf);
            holds.push(0.0);

            let mut x = entry;
            loop {
                steps.push(Step::Vertex(x));
                let h = draw_hold(&self.rate, x, &mut rng.holds);
                holds.push(h);
                time += h;
                if steps.len() > self.step_budget {
                    return Err(Error::StepBudgetExceeded {
                        budget: self.step_budget,
                        visited: steps.len(),
                    });
                }
                if let Some((mask, left)) = &mut uncovered {
                    if mask[x] {
                        mask[x] = false;
                        *left -= 1;
                        if *left == 0 {
                            break 'outer;
                        }
                    }
                }
                if self.rim_mask[x] {
                    exits.push(x);
                    last_exit = Some(x);
                    completed += 1;
                    break;
                }
                if let Some(max_t) = budget.max_time {
                    if time >= max_t {
                        break 'outer;
                    }
                }
                x = self.kernel.step(self.graph, x, &mut rng.topo);
            }
        }

        Ok(ReflectedRun {
            trajectory: Trajectory {
                steps,
                holds: Some(holds),
                start: StartMode::FromInfinity,
            },
            entries,
            exits,
            completed_excursions: completed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_family, FamilySpec};
    use crate::samplers::default_rate;

    #[test]
    fn duration_shorter_than_first_hold_gives_single_vertex() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 4 }).unwrap();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = ReflectedSampler::new(&g, &e, 2, EntryMode::Wired, rate, 1e-10).unwrap();
        let run = s
            .run(&RunBudget::duration(1e-300), &mut SamplerRng::new(4))
            .unwrap();
        assert_eq!(run.trajectory.visit_count(), 1);
        assert_eq!(run.entries.len(), 1);
        assert!(run.exits.is_empty());
    }

    #[test]
    fn excursions_start_on_support_and_end_on_rim() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 5 }).unwrap();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = ReflectedSampler::new(&g, &e, 2, EntryMode::Wired, rate, 1e-10).unwrap();
        let run = s
            .run(&RunBudget::excursions(20), &mut SamplerRng::new(8))
            .unwrap();
        assert_eq!(run.completed_excursions, 20);
        assert_eq!(run.entries.len(), 20);
        assert_eq!(run.exits.len(), 20);
        for &en in &run.entries {
            assert!(s.support().contains(&en));
        }
        for &ex in &run.exits {
            assert!(e.on_rim(ex));
        }
        run.trajectory.validate(&g).unwrap();
        // Excursion ranges: every block starts at an entry, ends at an exit.
        let ranges = run.trajectory.excursion_ranges();
        assert_eq!(ranges.len(), 20);
    }

    #[test]
    fn free_trace_needs_margin() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 3 }).unwrap();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        assert!(ReflectedSampler::new(&g, &e, 3, EntryMode::Wired, rate, 1e-10).is_err());
    }

    #[test]
    fn seed_determinism_and_rate_independent_skeleton() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 4 }).unwrap();
        let r1 = default_rate(&g, &e, 1.0, 1.0).unwrap();
        let r2 = default_rate(&g, &e, 5.0, 2.0).unwrap();
        let s1 = ReflectedSampler::new(&g, &e, 2, EntryMode::FreeTrace, r1, 1e-10).unwrap();
        let s2 = ReflectedSampler::new(&g, &e, 2, EntryMode::FreeTrace, r2, 1e-10).unwrap();
        let a = s1
            .run(&RunBudget::excursions(15), &mut SamplerRng::new(42))
            .unwrap();
        let b = s1
            .run(&RunBudget::excursions(15), &mut SamplerRng::new(42))
            .unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        let c = s2
            .run(&RunBudget::excursions(15), &mut SamplerRng::new(42))
            .unwrap();
        assert_eq!(a.trajectory.steps, c.trajectory.steps);
        assert_ne!(a.trajectory.holds, c.trajectory.holds);
    }

    #[test]
    fn coverage_budget_stops_after_visiting_targets() {
        let (g, e) = build_family(&FamilySpec::ZdBox { dim: 3, radius: 4 }).unwrap();
        let rate = default_rate(&g, &e, 1.0, 2.0).unwrap();
        let s = ReflectedSampler::new(&g, &e, 2, EntryMode::Wired, rate, 1e-10).unwrap();
        let targets = vec![g.vertex("0,0,0").unwrap(), g.vertex("1,1,0").unwrap()];
        let budget = RunBudget {
            coverage: Some(targets.clone()),
            max_excursions: Some(100_000),
            ..Default::default()
        };
        let run = s.run(&budget, &mut SamplerRng::new(17)).unwrap();
        let visited: std::collections::HashSet<usize> = run.trajectory.vertices().collect();
        for t in targets {
            assert!(visited.contains(&t));
        }
    }
}
