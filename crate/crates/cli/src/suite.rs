//! The built-in dichotomy suite: one positive and two negative cases with
//! pinned seeds. The lattice window satisfies the uniqueness condition, so
//! its diagnostics must all decrease; the transient tree and the two-sheet
//! graph (one-ended, but with a summable cut between its sheets) must both
//! plateau. Unexpected verdicts exit nonzero — this is the repository's
//! end-to-end check.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use serde_json::json;
use walklab::compare::{central_edge_panel, equivalence_report, ReportConfig, Verdict};
use walklab::graph::{build_family, FamilySpec};

use crate::config::{parse_vertex_list, write_csv, write_json, GraphSource, RunConfig};

pub struct SuiteCase {
    pub name: &'static str,
    pub spec: FamilySpec,
    pub k: &'static str,
    pub levels: (usize, usize),
    pub panel_level: usize,
    pub panel_size: usize,
    pub sampler_level: usize,
    pub sampler_excursions: usize,
    pub seed: u64,
    pub expected: Verdict,
}

pub fn cases() -> Vec<SuiteCase> {
    vec![
        SuiteCase {
            name: "zd",
            spec: FamilySpec::ZdBox { dim: 3, radius: 13 },
            k: "0,0,0;1,0,0;0,1,0;0,0,1",
            levels: (4, 12),
            panel_level: 1,
            panel_size: 20,
            sampler_level: 2,
            sampler_excursions: 100_000,
            seed: 20260810,
            expected: Verdict::ConsistentWithEquivalence,
        },
        SuiteCase {
            name: "tree",
            spec: FamilySpec::RegularTree {
                branching: 2,
                depth: 11,
            },
            k: "o.0;o.1",
            levels: (4, 10),
            panel_level: 2,
            panel_size: 20,
            sampler_level: 3,
            sampler_excursions: 20_000,
            seed: 20260811,
            expected: Verdict::Inconsistent,
        },
        SuiteCase {
            name: "two_sheet",
            spec: FamilySpec::TwoSheet { dim: 3, radius: 9 },
            k: "0,0,0|0;0,0,0|1",
            levels: (4, 8),
            panel_level: 1,
            panel_size: 20,
            sampler_level: 2,
            sampler_excursions: 50_000,
            seed: 20260812,
            expected: Verdict::Inconsistent,
        },
    ]
}

/// Runs one suite case into `out/<name>/`; returns the verdict.
pub fn run_case(case: &SuiteCase, out_root: &Path) -> Result<Verdict> {
    let started = Instant::now();
    let (g, e) = build_family(&case.spec)?;
    let k = parse_vertex_list(&g, case.k)?;
    let panel = central_edge_panel(&g, &e, case.panel_level, case.panel_size)?;
    let mut rc = ReportConfig::new(
        k,
        (case.levels.0..=case.levels.1).collect(),
        panel,
        case.seed,
    );
    rc.sampler_level = Some(case.sampler_level);
    rc.sampler_excursions = case.sampler_excursions;

    let mut resolved = BTreeMap::new();
    resolved.insert("graph.family".to_string(), case.spec.describe());
    resolved.insert("compare.k".to_string(), case.k.to_string());
    resolved.insert(
        "compare.levels".to_string(),
        format!("{}:{}", case.levels.0, case.levels.1),
    );
    resolved.insert(
        "compare.sampler_level".to_string(),
        case.sampler_level.to_string(),
    );
    resolved.insert(
        "compare.sampler_excursions".to_string(),
        case.sampler_excursions.to_string(),
    );
    resolved.insert("run.seed".to_string(), case.seed.to_string());
    let cfg = RunConfig {
        graph_source: GraphSource::Family(case.spec.clone()),
        seed: case.seed,
        out_dir: out_root.join(case.name),
        resolved,
    };
    let hash = cfg.config_hash();

    let report = equivalence_report(&g, &e, &rc)?;
    let rows: Vec<String> = report
        .csv_appendix()
        .lines()
        .skip(1)
        .map(str::to_string)
        .collect();
    write_csv(&cfg.out_dir, "gaps.csv", &hash, "diagnostic,level,value", rows)?;
    write_json(&cfg.out_dir, "verdict.json", &hash, serde_json::to_value(&report)?)?;
    crate::config::write_manifest(&cfg, &format!("suite-paper {}", case.name), started)?;
    Ok(report.verdict)
}

/// Runs all cases; exit code 0 only when every verdict matches.
pub fn run_suite(out_root: &Path) -> Result<i32> {
    let mut results = Vec::new();
    let mut all_ok = true;
    for case in cases() {
        let verdict = run_case(&case, out_root)?;
        let ok = verdict == case.expected;
        all_ok &= ok;
        println!(
            "{}: {} (expected {}) {}",
            case.name,
            verdict_str(verdict),
            verdict_str(case.expected),
            if ok { "ok" } else { "UNEXPECTED" }
        );
        results.push(json!({
            "case": case.name,
            "graph": case.spec.describe(),
            "verdict": verdict_str(verdict),
            "expected": verdict_str(case.expected),
            "ok": ok,
        }));
    }
    std::fs::create_dir_all(out_root)?;
    std::fs::write(
        out_root.join("suite_summary.json"),
        serde_json::to_string_pretty(&json!({ "cases": results, "all_ok": all_ok }))?,
    )?;
    Ok(if all_ok { 0 } else { 3 })
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::ConsistentWithEquivalence => "consistent-with-equivalence",
        Verdict::Inconsistent => "inconsistent",
        Verdict::Inconclusive => "inconclusive",
    }
}
