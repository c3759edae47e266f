//! Subcommand implementations. Each handler records its parameters in the
//! resolved config map (so the hash covers them), computes, and writes CSV
//! and JSON artifacts into the output directory.

use anyhow::{bail, Context, Result};
use serde_json::json;
use walklab::compare::{
    central_edge_panel, coupled_truncations, equivalence_report, truncation_curve, ReportConfig,
};
use walklab::forests::{exact_marginals, wilson};
use walklab::graph::{wire, write_exhaustion, write_graph};
use walklab::potential::{
    effective_resistance, entry_measure_free, equilibrium_measure, green_matrix, hitting_family,
    richardson3, BoundaryKind,
};
use walklab::samplers::{
    default_rate, interlacement_order, EntryMode, InterlacementSampler, ReflectedSampler,
    RunBudget, SamplerRng, Step, WalkKernel,
};

use crate::config::{csv_field, parse_levels, parse_vertex_list, write_csv, write_json, RunConfig};
use crate::{Command, CompareCmd, ForestCmd, KindArg, ModeArg, PotentialCmd, SampleCmd};

/// Runs one subcommand; returns its canonical name for the manifest.
pub fn dispatch(command: &Command, cfg: &mut RunConfig, tol: f64) -> Result<String> {
    match command {
        Command::Graph { write, wire_level } => {
            cmd_graph(cfg, *write, *wire_level)?;
            Ok("graph".into())
        }
        Command::Potential { cmd } => {
            let name = match cmd {
                PotentialCmd::Equilibrium { k, levels } => {
                    record(cfg, "potential.k", k);
                    record(cfg, "potential.levels", levels);
                    cmd_equilibrium(cfg, k, levels, tol)?;
                    "potential equilibrium"
                }
                PotentialCmd::EntryFree { k, probe, levels } => {
                    record(cfg, "potential.k", k);
                    record(cfg, "potential.probe", probe);
                    record(cfg, "potential.levels", levels);
                    cmd_entry_free(cfg, k, probe, levels, tol)?;
                    "potential entry-free"
                }
                PotentialCmd::Resistance { a, b, kind, levels } => {
                    record(cfg, "potential.a", a);
                    record(cfg, "potential.b", b);
                    record(cfg, "potential.kind", &format!("{kind:?}"));
                    record(cfg, "potential.levels", levels);
                    cmd_resistance(cfg, a, b, *kind, levels, tol)?;
                    "potential resistance"
                }
                PotentialCmd::Green { k, level } => {
                    record(cfg, "potential.k", k);
                    record(cfg, "potential.level", &level.to_string());
                    cmd_green(cfg, k, *level, tol)?;
                    "potential green"
                }
            };
            Ok(name.into())
        }
        Command::Sample { cmd } => {
            let name = match cmd {
                SampleCmd::Ri {
                    k,
                    umax,
                    rate_base,
                    rate_growth,
                } => {
                    record(cfg, "sample.k", k);
                    record(cfg, "sample.umax", &umax.to_string());
                    record(cfg, "sample.rate", &format!("{rate_base}*{rate_growth}^shell"));
                    cmd_sample_ri(cfg, k, *umax, (*rate_base, *rate_growth), tol)?;
                    "sample ri"
                }
                SampleCmd::Reflected {
                    level,
                    mode,
                    excursions,
                    rate_base,
                    rate_growth,
                } => {
                    record(cfg, "sample.level", &level.to_string());
                    record(cfg, "sample.mode", &format!("{mode:?}"));
                    record(cfg, "sample.excursions", &excursions.to_string());
                    record(cfg, "sample.rate", &format!("{rate_base}*{rate_growth}^shell"));
                    cmd_sample_reflected(
                        cfg,
                        *level,
                        *mode,
                        *excursions,
                        (*rate_base, *rate_growth),
                        tol,
                    )?;
                    "sample reflected"
                }
            };
            Ok(name.into())
        }
        Command::Forest { cmd } => {
            let name = match cmd {
                ForestCmd::Wilson {
                    samples,
                    kind,
                    level,
                    panel,
                } => {
                    record(cfg, "forest.samples", &samples.to_string());
                    record(cfg, "forest.kind", &format!("{kind:?}"));
                    cmd_wilson(cfg, *samples, *kind, *level, *panel, tol)?;
                    "forest wilson"
                }
                ForestCmd::Marginals { kind, level, panel } => {
                    record(cfg, "forest.kind", &format!("{kind:?}"));
                    record(cfg, "forest.panel", &panel.to_string());
                    cmd_marginals(cfg, *kind, *level, *panel, tol)?;
                    "forest marginals"
                }
            };
            Ok(name.into())
        }
        Command::Compare { cmd } => {
            let name = match cmd {
                CompareCmd::Equivalence {
                    k,
                    max_level,
                    min_level,
                    sampler_level,
                    sampler_excursions,
                    panel,
                } => {
                    record(cfg, "compare.k", k);
                    record(cfg, "compare.max_level", &max_level.to_string());
                    cmd_equivalence(
                        cfg,
                        k,
                        min_level.unwrap_or(4),
                        *max_level,
                        *sampler_level,
                        *sampler_excursions,
                        *panel,
                        tol,
                    )?;
                    "compare equivalence"
                }
                CompareCmd::Truncation {
                    reference,
                    levels,
                    replicas,
                    mean_excursions,
                } => {
                    record(cfg, "compare.reference", &reference.to_string());
                    record(cfg, "compare.levels", levels);
                    record(cfg, "compare.replicas", &replicas.to_string());
                    cmd_truncation(cfg, *reference, levels, *replicas, *mean_excursions, tol)?;
                    "compare truncation"
                }
            };
            Ok(name.into())
        }
        Command::SuitePaper => unreachable!("handled before dispatch"),
    }
}

fn record(cfg: &mut RunConfig, key: &str, value: &str) {
    cfg.resolved.insert(key.into(), value.into());
}

fn cmd_graph(cfg: &mut RunConfig, write: bool, wire_level: Option<usize>) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let mut summary = json!({
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "total_conductance": g.total_conductance(),
        "levels": e.depth(),
        "rim_size": e.rim().len(),
    });
    if let Some(n) = wire_level {
        let q = wire(&g, &e, n)?;
        summary["wire"] = json!({
            "level": n,
            "cut_conductance": q.graph().pi(q.z()),
            "quotient_vertices": q.graph().vertex_count(),
        });
    }
    if write {
        std::fs::create_dir_all(&cfg.out_dir)?;
        std::fs::write(cfg.out_dir.join("graph.txt"), write_graph(&g))?;
        std::fs::write(cfg.out_dir.join("exhaustion.txt"), write_exhaustion(&e, &g))?;
    }
    write_json(&cfg.out_dir, "graph_summary.json", &hash, summary)?;
    Ok(())
}

fn cmd_equilibrium(cfg: &mut RunConfig, k: &str, levels: &str, tol: f64) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let k = parse_vertex_list(&g, k)?;
    let levels = parse_levels(levels)?;
    let mut rows = Vec::new();
    let mut caps = Vec::new();
    for &n in &levels {
        let q = wire(&g, &e, n)?;
        let rep = equilibrium_measure(&q, &k, tol)?;
        caps.push(rep.capacity);
        for (i, &v) in rep.measure.support().iter().enumerate() {
            rows.push(format!(
                "{n},{},{},{}",
                csv_field(g.name(v)),
                rep.measure.masses()[i],
                rep.normalized.masses()[i]
            ));
        }
    }
    write_csv(&cfg.out_dir, "equilibrium.csv", &hash, "level,vertex,mass,normalized", rows)?;
    let cap_rows = levels
        .iter()
        .zip(&caps)
        .map(|(n, c)| format!("{n},{c}"))
        .collect::<Vec<_>>();
    write_csv(&cfg.out_dir, "capacity.csv", &hash, "level,capacity", cap_rows)?;
    write_json(
        &cfg.out_dir,
        "equilibrium_summary.json",
        &hash,
        json!({
            "levels": levels,
            "capacity": caps,
            "capacity_extrapolated": richardson3(&caps),
            "monotone_decreasing": caps.windows(2).all(|w| w[1] <= w[0]),
        }),
    )?;
    Ok(())
}

fn cmd_entry_free(cfg: &mut RunConfig, k: &str, probe: &str, levels: &str, tol: f64) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let k = parse_vertex_list(&g, k)?;
    let levels = parse_levels(levels)?;
    let mut rows = Vec::new();
    let mut spreads = Vec::new();
    for &n in &levels {
        let (sub, _, old_to_new) = g.induced_subgraph(e.level(n)?)?;
        let probe_base = if probe == "auto-rim" {
            walklab::compare::auto_rim_probe(&g, &e, n, &k)?
        } else {
            g.vertex(probe)
                .with_context(|| format!("unknown probe `{probe}`"))?
        };
        let map = |v: usize| -> Result<usize> {
            old_to_new[v].with_context(|| format!("vertex {} outside level {n}", g.name(v)))
        };
        let k_sub: Vec<usize> = k.iter().map(|&v| map(v)).collect::<Result<_>>()?;
        let em = entry_measure_free(&sub, &k_sub, map(probe_base)?, tol)?;
        for (i, &v) in k.iter().enumerate() {
            rows.push(format!(
                "{n},{},{},{}",
                csv_field(g.name(v)),
                em.measure.get(k_sub[i]),
                csv_field(g.name(probe_base))
            ));
        }
        // Value-at-infinity diagnostic, two routes: (a) the spread of each
        // atom's field over the level boundary, (b) the running value along
        // sampled walks stopped at the boundary. The spread between them is
        // itself the report.
        let fam = hitting_family(&sub, &k_sub, tol)?;
        let boundary = e.level_boundary(&g, n)?;
        let kernel = WalkKernel::new(&sub);
        let boundary_sub: Vec<usize> = boundary.iter().map(|&b| old_to_new[b].unwrap()).collect();
        let on_boundary = {
            let mut mask = vec![false; sub.vertex_count()];
            for &b in &boundary_sub {
                mask[b] = true;
            }
            mask
        };
        let mut rng = SamplerRng::new(cfg.seed ^ n as u64);
        let walks = 2000usize;
        let mut walk_means = vec![0.0; k.len()];
        let start = map(probe_base)?;
        for _ in 0..walks {
            let mut x = start;
            while !on_boundary[x] {
                x = kernel.step(&sub, x, &mut rng.topo);
            }
            for (i, f) in fam.fields.iter().enumerate() {
                walk_means[i] += f[x];
            }
        }
        for (i, &v) in k.iter().enumerate() {
            let vals: Vec<f64> = boundary_sub.iter().map(|&b| fam.fields[i][b]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().copied().fold(f64::MAX, f64::min);
            let max = vals.iter().copied().fold(f64::MIN, f64::max);
            spreads.push(json!({
                "level": n,
                "vertex": g.name(v),
                "rim_mean": mean,
                "rim_min": min,
                "rim_max": max,
                "walk_estimate": walk_means[i] / walks as f64,
            }));
        }
    }
    write_csv(&cfg.out_dir, "entry_free.csv", &hash, "level,vertex,mass,probe", rows)?;
    write_json(
        &cfg.out_dir,
        "entry_free_summary.json",
        &hash,
        json!({ "levels": levels, "alpha_spread": spreads }),
    )?;
    Ok(())
}

fn cmd_resistance(
    cfg: &mut RunConfig,
    a: &str,
    b: &str,
    kind: KindArg,
    levels: &str,
    tol: f64,
) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let a = parse_vertex_list(&g, a)?[0];
    let b = parse_vertex_list(&g, b)?[0];
    let levels = parse_levels(levels)?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &n in &levels {
        let r = match kind {
            KindArg::Free => {
                let (sub, _, old_to_new) = g.induced_subgraph(e.level(n)?)?;
                effective_resistance(
                    &sub,
                    old_to_new[a].context("a outside level")?,
                    old_to_new[b].context("b outside level")?,
                    tol,
                )?
            }
            KindArg::Wired => {
                let q = wire(&g, &e, n)?;
                effective_resistance(
                    q.graph(),
                    q.from_base(a).context("a outside level")?,
                    q.from_base(b).context("b outside level")?,
                    tol,
                )?
            }
        };
        values.push(r);
        rows.push(format!("{n},{},{},{r}", csv_field(g.name(a)), csv_field(g.name(b))));
    }
    write_csv(&cfg.out_dir, "resistance.csv", &hash, "level,a,b,r_eff", rows)?;
    write_json(
        &cfg.out_dir,
        "resistance_summary.json",
        &hash,
        json!({
            "kind": format!("{kind:?}"),
            "levels": levels,
            "r_eff": values,
            "extrapolated": richardson3(&values),
        }),
    )?;
    Ok(())
}

fn cmd_green(cfg: &mut RunConfig, k: &str, level: usize, tol: f64) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let k = parse_vertex_list(&g, k)?;
    let q = wire(&g, &e, level)?;
    let gm = green_matrix(&q, &k, tol)?;
    let mut rows = Vec::new();
    for (t, &vt) in k.iter().enumerate() {
        for (j, &vj) in k.iter().enumerate() {
            rows.push(format!(
                "{},{},{}",
                csv_field(g.name(vt)),
                csv_field(g.name(vj)),
                gm[t][j]
            ));
        }
    }
    write_csv(&cfg.out_dir, "green.csv", &hash, "row,col,value", rows)?;
    Ok(())
}

fn cmd_sample_ri(
    cfg: &mut RunConfig,
    k: &str,
    umax: f64,
    rate: (f64, f64),
    tol: f64,
) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let k = parse_vertex_list(&g, k)?;
    let schedule = default_rate(&g, &e, rate.0, rate.1)?;
    let sampler = InterlacementSampler::new(&g, &e, &k, schedule, tol)?;
    let mut rng = SamplerRng::new(cfg.seed);
    let sample = sampler.sample(umax, &mut rng)?;
    let visits = interlacement_order(&sample);
    let rows: Vec<String> = visits
        .iter()
        .map(|v| {
            format!(
                "{},{},{},{},{}",
                v.excursion,
                v.step,
                csv_field(g.name(v.vertex)),
                v.hold,
                v.start
            )
        })
        .collect();
    write_csv(&cfg.out_dir, "ri_visits.csv", &hash, "excursion,step,vertex,hold,T", rows)?;
    let label_rows: Vec<String> = sample
        .excursions
        .iter()
        .enumerate()
        .map(|(i, exc)| format!("{i},{},{}", exc.label, csv_field(g.name(exc.root()))))
        .collect();
    write_csv(&cfg.out_dir, "ri_excursions.csv", &hash, "excursion,label,root", label_rows)?;
    write_json(
        &cfg.out_dir,
        "ri_summary.json",
        &hash,
        json!({
            "capacity": sampler.capacity(),
            "u_max": umax,
            "expected_count": umax * sampler.capacity(),
            "count": sample.excursions.len(),
        }),
    )?;
    Ok(())
}

fn cmd_sample_reflected(
    cfg: &mut RunConfig,
    level: usize,
    mode: ModeArg,
    excursions: usize,
    rate: (f64, f64),
    tol: f64,
) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let schedule = default_rate(&g, &e, rate.0, rate.1)?;
    let mode = match mode {
        ModeArg::Wired => EntryMode::Wired,
        ModeArg::FreeTrace => EntryMode::FreeTrace,
    };
    let sampler = ReflectedSampler::new(&g, &e, level, mode, schedule, tol)?;
    let mut rng = SamplerRng::new(cfg.seed);
    let run = sampler.run(&RunBudget::excursions(excursions), &mut rng)?;
    let holds = run.trajectory.holds.as_ref().unwrap();
    let mut rows = Vec::new();
    let mut t = 0.0;
    let mut excursion = 0usize;
    let mut step = 0usize;
    for (i, s) in run.trajectory.steps.iter().enumerate() {
        match s {
            Step::Inf => {
                excursion += 1;
                step = 0;
            }
            Step::Vertex(v) => {
                rows.push(format!(
                    "{},{step},{},{},{t}",
                    excursion - 1,
                    csv_field(g.name(*v)),
                    holds[i]
                ));
                step += 1;
            }
        }
        t += holds[i];
    }
    write_csv(&cfg.out_dir, "reflected_visits.csv", &hash, "excursion,step,vertex,hold,T", rows)?;
    let entry_rows: Vec<String> = run
        .entries
        .iter()
        .enumerate()
        .map(|(i, &en)| {
            let exit = run.exits.get(i).map(|&x| csv_field(g.name(x))).unwrap_or_else(|| "-".into());
            format!("{i},{},{exit}", csv_field(g.name(en)))
        })
        .collect();
    write_csv(&cfg.out_dir, "reflected_excursions.csv", &hash, "excursion,entry,exit", entry_rows)?;
    write_json(
        &cfg.out_dir,
        "reflected_summary.json",
        &hash,
        json!({
            "level": level,
            "mode": format!("{mode:?}"),
            "completed_excursions": run.completed_excursions,
            "total_time": run.trajectory.total_time(),
        }),
    )?;
    Ok(())
}

fn cmd_wilson(
    cfg: &mut RunConfig,
    samples: usize,
    kind: KindArg,
    level: Option<usize>,
    panel: usize,
    tol: f64,
) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let level = level.unwrap_or(e.depth() - 1);
    let mut rng = SamplerRng::new(cfg.seed);
    let mut rows = Vec::new();
    match kind {
        KindArg::Wired => {
            let q = wire(&g, &e, level)?;
            let kernel = WalkKernel::new(q.graph());
            let panel_pairs = central_edge_panel(&g, &e, 1.min(level), panel.max(1))?;
            let mut counts = vec![0u64; panel_pairs.len()];
            for _ in 0..samples {
                let f = wilson(q.graph(), &kernel, q.z(), &mut rng.topo);
                for (i, &(u, v)) in panel_pairs.iter().enumerate() {
                    let (uq, vq) = (q.from_base(u).unwrap(), q.from_base(v).unwrap());
                    if f.contains_edge(uq, vq) {
                        counts[i] += 1;
                    }
                }
            }
            for (i, &(u, v)) in panel_pairs.iter().enumerate() {
                rows.push(format!(
                    "{},{},{},{}",
                    csv_field(g.name(u)),
                    csv_field(g.name(v)),
                    counts[i],
                    counts[i] as f64 / samples as f64
                ));
            }
        }
        KindArg::Free => {
            let (sub, new_to_old, old_to_new) = g.induced_subgraph(e.level(level)?)?;
            let kernel = WalkKernel::new(&sub);
            let panel_pairs = central_edge_panel(&g, &e, 1.min(level), panel.max(1))?;
            let mut counts = vec![0u64; panel_pairs.len()];
            let root = 0usize;
            for _ in 0..samples {
                let f = wilson(&sub, &kernel, root, &mut rng.topo);
                for (i, &(u, v)) in panel_pairs.iter().enumerate() {
                    let (us, vs) = (old_to_new[u].unwrap(), old_to_new[v].unwrap());
                    if f.contains_edge(us, vs) {
                        counts[i] += 1;
                    }
                }
            }
            let _ = new_to_old;
            for (i, &(u, v)) in panel_pairs.iter().enumerate() {
                rows.push(format!(
                    "{},{},{},{}",
                    csv_field(g.name(u)),
                    csv_field(g.name(v)),
                    counts[i],
                    counts[i] as f64 / samples as f64
                ));
            }
        }
    }
    let _ = tol;
    write_csv(&cfg.out_dir, "wilson_frequencies.csv", &hash, "u,v,count,frequency", rows)?;
    Ok(())
}

fn cmd_marginals(
    cfg: &mut RunConfig,
    kind: KindArg,
    level: Option<usize>,
    panel: usize,
    tol: f64,
) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let level = level.unwrap_or(e.depth() - 1);
    let mut rows = Vec::new();
    match kind {
        KindArg::Wired => {
            let q = wire(&g, &e, level)?;
            let ids: Vec<usize> = if panel == 0 {
                (0..q.graph().edge_count()).collect()
            } else {
                let pairs = central_edge_panel(&g, &e, 1.min(level), panel)?;
                pairs
                    .iter()
                    .map(|&(u, v)| {
                        q.graph()
                            .edge_between(q.from_base(u).unwrap(), q.from_base(v).unwrap())
                            .context("panel edge missing in quotient")
                    })
                    .collect::<Result<_>>()?
            };
            let m = exact_marginals(q.graph(), Some(&ids), BoundaryKind::Wired, tol)?;
            for (i, &id) in m.edges.iter().enumerate() {
                let ed = q.graph().edge(id);
                rows.push(format!(
                    "{},{},{},wired,{level}",
                    csv_field(q.graph().name(ed.u)),
                    csv_field(q.graph().name(ed.v)),
                    m.probability[i]
                ));
            }
        }
        KindArg::Free => {
            let (sub, _, old_to_new) = g.induced_subgraph(e.level(level)?)?;
            let ids: Vec<usize> = if panel == 0 {
                (0..sub.edge_count()).collect()
            } else {
                let pairs = central_edge_panel(&g, &e, 1.min(level), panel)?;
                pairs
                    .iter()
                    .map(|&(u, v)| {
                        sub.edge_between(old_to_new[u].unwrap(), old_to_new[v].unwrap())
                            .context("panel edge missing in level")
                    })
                    .collect::<Result<_>>()?
            };
            let m = exact_marginals(&sub, Some(&ids), BoundaryKind::Free, tol)?;
            for (i, &id) in m.edges.iter().enumerate() {
                let ed = sub.edge(id);
                rows.push(format!(
                    "{},{},{},free,{level}",
                    csv_field(sub.name(ed.u)),
                    csv_field(sub.name(ed.v)),
                    m.probability[i]
                ));
            }
        }
    }
    write_csv(&cfg.out_dir, "marginals.csv", &hash, "u,v,probability,kind,level", rows)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_equivalence(
    cfg: &mut RunConfig,
    k: &str,
    min_level: usize,
    max_level: usize,
    sampler_level: Option<usize>,
    sampler_excursions: usize,
    panel: usize,
    tol: f64,
) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let k = parse_vertex_list(&g, k)?;
    if max_level < min_level {
        bail!("max_level below min_level");
    }
    let panel_pairs = central_edge_panel(&g, &e, 1.min(min_level), panel.max(1))?;
    let mut rc = ReportConfig::new(k, (min_level..=max_level).collect(), panel_pairs, cfg.seed);
    rc.sampler_level = sampler_level;
    rc.sampler_excursions = sampler_excursions;
    rc.tol = tol;
    record(cfg, "compare.levels", &format!("{min_level}:{max_level}"));
    if let Some(sl) = sampler_level {
        record(cfg, "compare.sampler_level", &sl.to_string());
        record(cfg, "compare.sampler_excursions", &sampler_excursions.to_string());
    }
    let hash = cfg.config_hash();
    let report = equivalence_report(&g, &e, &rc)?;
    let rows: Vec<String> = report
        .csv_appendix()
        .lines()
        .skip(1)
        .map(str::to_string)
        .collect();
    write_csv(&cfg.out_dir, "gaps.csv", &hash, "diagnostic,level,value", rows)?;
    write_json(
        &cfg.out_dir,
        "verdict.json",
        &hash,
        serde_json::to_value(&report)?,
    )?;
    Ok(())
}

fn cmd_truncation(
    cfg: &mut RunConfig,
    reference: usize,
    levels: &str,
    replicas: usize,
    mean_excursions: f64,
    tol: f64,
) -> Result<()> {
    let (g, e) = cfg.load_graph()?;
    let hash = cfg.config_hash();
    let levels = parse_levels(levels)?;
    let level_set = e.level(reference)?.to_vec();
    let schedule = default_rate(&g, &e, 1.0, 2.0)?;
    let sampler = InterlacementSampler::new(&g, &e, &level_set, schedule, tol)?;
    let u = mean_excursions / sampler.capacity();
    let mut rng = SamplerRng::new(cfg.seed);
    let mut reps = Vec::with_capacity(replicas);
    for _ in 0..replicas {
        let sample = sampler.sample(u, &mut rng)?;
        let trace = walklab::samplers::ordered_trace(&sample);
        reps.push(coupled_truncations(&trace, &e, reference, &levels)?);
    }
    let curve = truncation_curve(&reps, 200, &mut rng)?;
    let rows: Vec<String> = curve
        .levels
        .iter()
        .zip(curve.mean_d.iter().zip(&curve.bands))
        .map(|(n, (d, (lo, hi)))| format!("{n},{d},{lo},{hi}"))
        .collect();
    write_csv(&cfg.out_dir, "truncation.csv", &hash, "level,mean_d,band_lo,band_hi", rows)?;
    write_json(
        &cfg.out_dir,
        "truncation_summary.json",
        &hash,
        serde_json::to_value(&curve)?,
    )?;
    Ok(())
}
