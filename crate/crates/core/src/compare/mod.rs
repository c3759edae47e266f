//! Metrics and verdicts: total variation, the exponential path metric,
//! truncation-convergence curves and the headline equivalence report.
//!
//! The report bundles four diagnostics of the free/wired dichotomy and
//! classifies each level series as decreasing or plateauing against
//! declared thresholds. The thresholds are declared, not derived: the
//! underlying theory guarantees limits, never rates.

pub mod stats;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{wire, Exhaustion, WeightedGraph};
use crate::potential::{
    effective_resistance, entry_measure_free, equilibrium_measure, Measure,
};
use crate::samplers::{
    default_rate, EntryMode, InterlacementSampler, ReflectedSampler, RunBudget, SamplerRng, Step,
    Trajectory,
};

/// Total variation `½ Σ |a − b|` between two probability measures over the
/// union of their supports. Inputs must be normalized.
pub fn tv_distance(a: &Measure, b: &Measure) -> Result<f64> {
    for m in [a, b] {
        let t = m.total();
        if (t - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedMeasure(t));
        }
    }
    let mut support: Vec<usize> = a
        .support()
        .iter()
        .chain(b.support().iter())
        .copied()
        .collect();
    support.sort_unstable();
    support.dedup();
    Ok(0.5
        * support
            .iter()
            .map(|&v| (a.get(v) - b.get(v)).abs())
            .sum::<f64>())
}

/// Value of the exponential path metric `∫ e^{-t} 1_{f≠g} dt` over a finite
/// horizon, with the unobserved tail bounded by `e^{-horizon}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathMetricValue {
    pub d: f64,
    pub horizon: f64,
    pub tail_bound: f64,
}

fn segments(t: &Trajectory) -> Result<Vec<(Step, f64)>> {
    let holds = t
        .holds
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("path metric needs holding times".into()))?;
    Ok(t.steps
        .iter()
        .zip(holds)
        .filter(|&(_, &h)| h > 0.0)
        .map(|(&s, &h)| (s, h))
        .collect())
}

/// Exact integral of `e^{-t}` over the set where the two piecewise-constant
/// trajectories disagree, up to `horizon` (clamped to the shorter total
/// duration; everything beyond is covered by the tail bound).
pub fn path_metric(f: &Trajectory, g: &Trajectory, horizon: Option<f64>) -> Result<PathMetricValue> {
    let sf = segments(f)?;
    let sg = segments(g)?;
    let tf: f64 = sf.iter().map(|&(_, h)| h).sum();
    let tg: f64 = sg.iter().map(|&(_, h)| h).sum();
    let mut horizon_eff = tf.min(tg);
    if let Some(h) = horizon {
        if h <= 0.0 || h.is_nan() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {h}")));
        }
        horizon_eff = horizon_eff.min(h);
    }
    let mut d = 0.0;
    let mut t = 0.0;
    let (mut i, mut j) = (0, 0);
    let (mut left_i, mut left_j) = (
        sf.first().map_or(0.0, |&(_, h)| h),
        sg.first().map_or(0.0, |&(_, h)| h),
    );
    while t < horizon_eff && i < sf.len() && j < sg.len() {
        let step = left_i.min(left_j).min(horizon_eff - t);
        if sf[i].0 != sg[j].0 {
            d += (-t).exp() - (-(t + step)).exp();
        }
        t += step;
        left_i -= step;
        left_j -= step;
        if left_i <= 1e-300 {
            i += 1;
            if i < sf.len() {
                left_i = sf[i].1;
            }
        }
        if left_j <= 1e-300 {
            j += 1;
            if j < sg.len() {
                left_j = sg[j].1;
            }
        }
    }
    Ok(PathMetricValue {
        d,
        horizon: horizon_eff,
        tail_bound: (-horizon_eff).exp(),
    })
}

/// Truncation of an interlacement-ordered trace to level `n`: excursions
/// that miss the level are dropped, kept ones are observed from their first
/// level hit until their rim kill.
pub fn truncate_ordered_trace(
    trace: &Trajectory,
    exhaustion: &Exhaustion,
    n: usize,
) -> Result<Trajectory> {
    exhaustion.level(n)?; // validates the level number
    let holds = trace
        .holds
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("truncation needs holding times".into()))?;
    let mut steps = Vec::new();
    let mut out_holds = Vec::new();
    for range in trace.excursion_ranges() {
        let first_hit = range.clone().find(|&i| match trace.steps[i] {
            Step::Vertex(v) => exhaustion.level_of(v) <= n,
            Step::Inf => false,
        });
        if let Some(start) = first_hit {
            steps.push(Step::Inf);
            out_holds.push(0.0);
            steps.extend_from_slice(&trace.steps[start..range.end]);
            out_holds.extend_from_slice(&holds[start..range.end]);
        }
    }
    Ok(Trajectory {
        steps,
        holds: Some(out_holds),
        start: crate::samplers::StartMode::FromInfinity,
    })
}

/// Per-level truncation distances for one underlying sample.
///
/// All levels are evaluated against the reference level of the *same*
/// trace, on its shared global clock: the distance at level `n` is the
/// `e^{-t}`-weighted duration of the stretches the reference observes but
/// the level-`n` truncation drops (the segment between each excursion's
/// first level-`N` hit and its first level-`n` hit, plus whole excursions
/// that miss level `n`). Since the kept stretches are nested in `n`, the
/// distance is monotone for every single replica; re-concatenating the
/// clocks instead would swamp the comparison with clock-shift artifacts.
#[derive(Debug, Clone)]
pub struct CoupledTruncations {
    pub reference_level: usize,
    /// `(level, d(Z^N, Z^n))`, in the requested level order.
    pub distances: Vec<(usize, f64)>,
}

/// Evaluates the coupled truncation distances from one ordered trace.
pub fn coupled_truncations(
    trace: &Trajectory,
    exhaustion: &Exhaustion,
    reference_level: usize,
    levels: &[usize],
) -> Result<CoupledTruncations> {
    exhaustion.level(reference_level)?;
    for &n in levels {
        if n > reference_level {
            return Err(Error::UncoupledTruncation {
                level: n,
                reference: reference_level,
            });
        }
        exhaustion.level(n)?;
    }
    let holds = trace
        .holds
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("truncation needs holding times".into()))?;
    // Global-clock start time of each step.
    let mut starts = Vec::with_capacity(trace.steps.len());
    let mut clock = 0.0;
    for &h in holds {
        starts.push(clock);
        clock += h;
    }
    // Exponential-weighted kept mass per level: sum over excursions of
    // (e^{-first_hit} - e^{-end}).
    let kept_weight = |n: usize| -> f64 {
        let mut total = 0.0;
        for range in trace.excursion_ranges() {
            let first_hit = range.clone().find(|&i| match trace.steps[i] {
                Step::Vertex(v) => exhaustion.level_of(v) <= n,
                Step::Inf => false,
            });
            if let Some(i) = first_hit {
                let last = range.end - 1;
                let end = starts[last] + holds[last];
                total += (-starts[i]).exp() - (-end).exp();
            }
        }
        total
    };
    let reference_weight = kept_weight(reference_level);
    let distances = levels
        .iter()
        .map(|&n| (n, (reference_weight - kept_weight(n)).max(0.0)))
        .collect();
    Ok(CoupledTruncations {
        reference_level,
        distances,
    })
}

/// Mean path-metric curve over coupled replicas, with the monotone-trend
/// test.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationCurve {
    pub levels: Vec<usize>,
    pub mean_d: Vec<f64>,
    /// Percentile bootstrap band of each mean.
    pub bands: Vec<(f64, f64)>,
    pub spearman_rho: f64,
    /// One-sided p-value for "d decreases with the level".
    pub p_decreasing: f64,
    pub replicas: usize,
}

/// Computes E[d(reference, truncation)] per level across replicas. All
/// replicas must share the same reference level and level list.
pub fn truncation_curve(
    replicas: &[CoupledTruncations],
    bootstrap: usize,
    rng: &mut SamplerRng,
) -> Result<TruncationCurve> {
    if replicas.is_empty() {
        return Err(Error::InvalidInput("no replicas".into()));
    }
    let reference = replicas[0].reference_level;
    let levels: Vec<usize> = replicas[0].distances.iter().map(|&(n, _)| n).collect();
    let mut per_level: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];
    let mut pairs = Vec::new();
    for rep in replicas {
        if rep.reference_level != reference {
            return Err(Error::UncoupledTruncation {
                level: rep.reference_level,
                reference,
            });
        }
        let rep_levels: Vec<usize> = rep.distances.iter().map(|&(n, _)| n).collect();
        if rep_levels != levels {
            return Err(Error::InvalidInput(
                "replicas carry different level lists".into(),
            ));
        }
        for (li, &(n, d)) in rep.distances.iter().enumerate() {
            per_level[li].push(d);
            pairs.push((n as f64, d));
        }
    }
    let mean_d: Vec<f64> = per_level
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let mut bands = Vec::with_capacity(levels.len());
    for v in &per_level {
        let mut means: Vec<f64> = (0..bootstrap)
            .map(|_| {
                let m = v.len();
                (0..m)
                    .map(|_| v[rand::Rng::random_range(&mut rng.topo, 0..m)])
                    .sum::<f64>()
                    / m as f64
            })
            .collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = means[(0.025 * (bootstrap as f64 - 1.0)).round() as usize];
        let hi = means[(0.975 * (bootstrap as f64 - 1.0)).round() as usize];
        bands.push((lo, hi));
    }
    let (rho, p) = stats::spearman_negative(&pairs)?;
    Ok(TruncationCurve {
        levels,
        mean_d,
        bands,
        spearman_rho: rho,
        p_decreasing: p,
        replicas: replicas.len(),
    })
}

/// Classification of one level series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Gap shrank by the configured factor and ended below threshold.
    Decreasing,
    /// Last three levels sit within the plateau band, above threshold.
    Plateau,
    Ambiguous,
}

/// Declared thresholds for the verdict.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Thresholds {
    /// Absolute TV threshold for "gap has vanished".
    pub tv_eps: f64,
    /// Relative effective-resistance threshold.
    pub resistance_eps_rel: f64,
    /// Absolute forest-marginal threshold.
    pub forest_eps: f64,
    /// Threshold for the empirical sampler-entry TV.
    pub sampler_tv_eps: f64,
    /// "Decreasing" requires last <= shrink * first.
    pub shrink: f64,
    /// "Plateau" requires the last three values within this relative band.
    pub plateau_band: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tv_eps: 0.05,
            resistance_eps_rel: 1e-3,
            forest_eps: 0.02,
            sampler_tv_eps: 0.05,
            shrink: 0.5,
            plateau_band: 0.2,
        }
    }
}

fn classify(values: &[f64], eps: f64, th: &Thresholds) -> Trend {
    let first = values[0];
    let last = *values.last().unwrap();
    if last <= th.shrink * first && last < eps {
        return Trend::Decreasing;
    }
    if values.len() >= 3 {
        let tail = &values[values.len() - 3..];
        let max = tail.iter().copied().fold(f64::MIN, f64::max);
        let min = tail.iter().copied().fold(f64::MAX, f64::min);
        if max > eps && (max - min) <= th.plateau_band * max {
            return Trend::Plateau;
        }
    }
    Trend::Ambiguous
}

/// One per-level diagnostic series.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticSeries {
    pub name: String,
    pub levels: Vec<usize>,
    pub values: Vec<f64>,
    pub threshold: f64,
    pub trend: Trend,
}

/// The empirical sampler comparison (interlacement roots vs free-trace
/// re-entries), one working level.
#[derive(Debug, Clone, Serialize)]
pub struct SamplerDiagnostic {
    pub level: usize,
    pub excursions: usize,
    pub tv: f64,
    pub band: (f64, f64),
    pub threshold: f64,
    pub small: bool,
}

/// Overall verdict of the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithEquivalence,
    Inconsistent,
    Inconclusive,
}

/// Configuration of [`equivalence_report`].
#[derive(Debug, Clone)]
pub struct ReportConfig {
    /// The finite set K (window indices).
    pub k: Vec<usize>,
    /// Levels for the exact diagnostics; ascending, each wireable.
    pub levels: Vec<usize>,
    /// Pair for the effective-resistance diagnostic; defaults to the first
    /// two vertices of K.
    pub resistance_pair: Option<(usize, usize)>,
    /// Edge panel (endpoint pairs) for the forest-marginal diagnostic.
    pub panel: Vec<(usize, usize)>,
    /// Level for the sampler diagnostic; `None` skips it.
    pub sampler_level: Option<usize>,
    /// Pooled excursions per side of the sampler diagnostic.
    pub sampler_excursions: usize,
    /// Holding-rate schedule (base, growth) for the samplers.
    pub rate: (f64, f64),
    pub bootstrap: usize,
    pub tol: f64,
    pub seed: u64,
    pub thresholds: Thresholds,
}

impl ReportConfig {
    pub fn new(k: Vec<usize>, levels: Vec<usize>, panel: Vec<(usize, usize)>, seed: u64) -> Self {
        Self {
            k,
            levels,
            resistance_pair: None,
            panel,
            sampler_level: None,
            sampler_excursions: 100_000,
            rate: (1.0, 2.0),
            bootstrap: 200,
            tol: 1e-10,
            seed,
            thresholds: Thresholds::default(),
        }
    }
}

/// The verdict document.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub k: Vec<String>,
    pub levels: Vec<usize>,
    pub entry_tv: DiagnosticSeries,
    pub resistance_gap_rel: DiagnosticSeries,
    pub forest_gap: DiagnosticSeries,
    pub sampler_entry: Option<SamplerDiagnostic>,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub verdict: Verdict,
}

impl EquivalenceReport {
    /// CSV appendix: one row per (diagnostic, level, value).
    pub fn csv_appendix(&self) -> String {
        let mut out = String::from("diagnostic,level,value\n");
        for s in [&self.entry_tv, &self.resistance_gap_rel, &self.forest_gap] {
            for (n, v) in s.levels.iter().zip(&s.values) {
                out.push_str(&format!("{},{n},{v}\n", s.name));
            }
        }
        if let Some(sd) = &self.sampler_entry {
            out.push_str(&format!("sampler_entry_tv,{},{}\n", sd.level, sd.tv));
        }
        out
    }
}

/// Deterministic probe choice: the boundary vertex of the level farthest
/// from K (ties to the smallest vertex index).
pub fn auto_rim_probe(
    graph: &WeightedGraph,
    exhaustion: &Exhaustion,
    n: usize,
    k: &[usize],
) -> Result<usize> {
    let boundary = exhaustion.level_boundary(graph, n)?;
    if boundary.is_empty() {
        return Err(Error::InvalidInput(format!("level {n} has no boundary")));
    }
    let (sub, _, old_to_new) = graph.induced_subgraph(exhaustion.level(n)?)?;
    // Multi-source BFS from K inside the level.
    let mut dist = vec![usize::MAX; sub.vertex_count()];
    let mut queue = std::collections::VecDeque::new();
    for &v in k {
        let s = old_to_new[v].ok_or_else(|| Error::OutsideWindow(graph.name(v).to_string()))?;
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(x) = queue.pop_front() {
        for (y, _, _) in sub.neighbors(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut best: Option<(usize, usize)> = None; // (distance, base vertex)
    for &v in &boundary {
        let d = dist[old_to_new[v].unwrap()];
        let better = match best {
            None => true,
            Some((bd, bv)) => d > bd || (d == bd && v < bv),
        };
        if better {
            best = Some((d, v));
        }
    }
    Ok(best.unwrap().1)
}

/// Default central panel: the first `size` edges with both endpoints inside
/// the given level.
pub fn central_edge_panel(
    graph: &WeightedGraph,
    exhaustion: &Exhaustion,
    within_level: usize,
    size: usize,
) -> Result<Vec<(usize, usize)>> {
    let lvl: std::collections::HashSet<usize> =
        exhaustion.level(within_level)?.iter().copied().collect();
    Ok(graph
        .edges()
        .iter()
        .filter(|e| lvl.contains(&e.u) && lvl.contains(&e.v))
        .take(size)
        .map(|e| (e.u, e.v))
        .collect())
}

/// Runs all four diagnostics and classifies the result.
pub fn equivalence_report(
    graph: &WeightedGraph,
    exhaustion: &Exhaustion,
    cfg: &ReportConfig,
) -> Result<EquivalenceReport> {
    if cfg.k.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    if cfg.levels.is_empty() {
        return Err(Error::InvalidInput("no diagnostic levels".into()));
    }
    let th = cfg.thresholds;
    let mut entry_tv = Vec::new();
    let mut res_gap = Vec::new();
    let mut forest_gap = Vec::new();
    let (ra, rb) = cfg
        .resistance_pair
        .unwrap_or_else(|| (cfg.k[0], cfg.k[1 % cfg.k.len()]));
    if ra == rb {
        return Err(Error::InvalidInput("resistance pair needs two vertices".into()));
    }

    for &n in &cfg.levels {
        let quotient = wire(graph, exhaustion, n)?;
        let (sub, _, old_to_new) = graph.induced_subgraph(exhaustion.level(n)?)?;
        let map = |v: usize| -> Result<usize> {
            old_to_new[v].ok_or_else(|| Error::OutsideWindow(graph.name(v).to_string()))
        };

        // (1) TV between the normalized equilibrium measure and the free
        // entry measure read at the auto-rim probe.
        let eq = equilibrium_measure(&quotient, &cfg.k, cfg.tol)?;
        let probe = auto_rim_probe(graph, exhaustion, n, &cfg.k)?;
        let k_sub: Vec<usize> = cfg.k.iter().map(|&v| map(v)).collect::<Result<_>>()?;
        let entry = entry_measure_free(&sub, &k_sub, map(probe)?, cfg.tol)?;
        // Map back to window indices (k_sub[i] corresponds to cfg.k[i]).
        let entry_base = Measure::new(
            cfg.k
                .iter()
                .zip(&k_sub)
                .map(|(&base, &s)| (base, entry.measure.get(s)))
                .collect(),
        )?;
        entry_tv.push(tv_distance(&eq.normalized, &entry_base.normalized()?)?);

        // (2) Relative free/wired effective-resistance gap.
        let r_free = effective_resistance(&sub, map(ra)?, map(rb)?, cfg.tol)?;
        let qa = quotient.from_base(ra).unwrap();
        let qb = quotient.from_base(rb).unwrap();
        let r_wired = effective_resistance(quotient.graph(), qa, qb, cfg.tol)?;
        res_gap.push((r_free - r_wired).abs() / r_wired);

        // (3) Max free/wired exact-marginal gap over the panel.
        let mut worst: f64 = 0.0;
        for &(u, v) in &cfg.panel {
            let free_edge = sub
                .edge_between(map(u)?, map(v)?)
                .ok_or_else(|| Error::InvalidInput("panel edge missing in level".into()))?;
            let m_free = sub.edge(free_edge).c
                * effective_resistance(&sub, map(u)?, map(v)?, cfg.tol)?;
            let uq = quotient.from_base(u).unwrap();
            let vq = quotient.from_base(v).unwrap();
            let m_wired = quotient.graph().conductance(uq, vq)
                * effective_resistance(quotient.graph(), uq, vq, cfg.tol)?;
            worst = worst.max((m_free - m_wired).abs());
        }
        forest_gap.push(worst);
    }

    // (4) Empirical entry comparison at one working level.
    let sampler_entry = match cfg.sampler_level {
        None => None,
        Some(level) => {
            let mut rng = SamplerRng::new(cfg.seed);
            let rate_ri = default_rate(graph, exhaustion, cfg.rate.0, cfg.rate.1)?;
            let level_set = exhaustion.level(level)?.to_vec();
            let ri = InterlacementSampler::new(graph, exhaustion, &level_set, rate_ri, cfg.tol)?;
            let target = cfg.sampler_excursions;
            // Pool roots across point-process draws.
            let u_batch = (target as f64 / 8.0) / ri.capacity();
            let mut roots: Vec<usize> = Vec::with_capacity(target);
            while roots.len() < target {
                let sample = ri.sample(u_batch, &mut rng)?;
                for exc in &sample.excursions {
                    if roots.len() == target {
                        break;
                    }
                    roots.push(exc.root());
                }
            }
            let rate_rw = default_rate(graph, exhaustion, cfg.rate.0, cfg.rate.1)?;
            let reflected =
                ReflectedSampler::new(graph, exhaustion, level, EntryMode::FreeTrace, rate_rw, cfg.tol)?;
            let run = reflected.run(&RunBudget::excursions(target), &mut rng)?;

            // Shared support: the reflected sampler's entry support.
            let support = reflected.support().to_vec();
            let slot: std::collections::HashMap<usize, usize> = support
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, i))
                .collect();
            let mut ca = vec![0u64; support.len()];
            for r in &roots {
                ca[*slot
                    .get(r)
                    .ok_or_else(|| Error::InvalidInput("root outside entry support".into()))?] += 1;
            }
            let mut cb = vec![0u64; support.len()];
            for e in &run.entries {
                cb[slot[e]] += 1;
            }
            let (tv, band) = stats::bootstrap_tv_band(&ca, &cb, cfg.bootstrap, &mut rng.topo)?;
            Some(SamplerDiagnostic {
                level,
                excursions: target,
                tv,
                band,
                threshold: th.sampler_tv_eps,
                small: tv <= th.sampler_tv_eps,
            })
        }
    };

    let entry_series = DiagnosticSeries {
        name: "entry_tv".into(),
        levels: cfg.levels.clone(),
        values: entry_tv,
        threshold: th.tv_eps,
        trend: Trend::Ambiguous,
    };
    let res_series = DiagnosticSeries {
        name: "resistance_gap_rel".into(),
        levels: cfg.levels.clone(),
        values: res_gap,
        threshold: th.resistance_eps_rel,
        trend: Trend::Ambiguous,
    };
    let forest_series = DiagnosticSeries {
        name: "forest_marginal_gap".into(),
        levels: cfg.levels.clone(),
        values: forest_gap,
        threshold: th.forest_eps,
        trend: Trend::Ambiguous,
    };
    let mut series = [entry_series, res_series, forest_series];
    for s in &mut series {
        s.trend = classify(&s.values, s.threshold, &th);
    }
    let [entry_series, res_series, forest_series] = series;

    let trends = [
        entry_series.trend,
        res_series.trend,
        forest_series.trend,
    ];
    let verdict = if trends.contains(&Trend::Plateau) {
        Verdict::Inconsistent
    } else if trends.iter().all(|&t| t == Trend::Decreasing)
        && sampler_entry.as_ref().is_none_or(|s| s.small)
    {
        Verdict::ConsistentWithEquivalence
    } else {
        Verdict::Inconclusive
    };

    Ok(EquivalenceReport {
        k: cfg.k.iter().map(|&v| graph.name(v).to_string()).collect(),
        levels: cfg.levels.clone(),
        entry_tv: entry_series,
        resistance_gap_rel: res_series,
        forest_gap: forest_series,
        sampler_entry,
        thresholds: th,
        seed: cfg.seed,
        verdict,
    })
}
