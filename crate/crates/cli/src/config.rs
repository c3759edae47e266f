//! Run configuration: graph source, seeding, output layout, config hashing
//! and the run manifest.
//!
//! Every run resolves to a flat sorted `key=value` map; its SHA-256 hash is
//! stamped into every artifact so outputs are traceable to the exact
//! configuration that produced them. Plain-text config files use the same
//! `key=value` lines with optional `[section]` headers, which prefix keys
//! as `section.key`; command-line flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use walklab::graph::{
    build_family, read_exhaustion, read_graph, Exhaustion, FamilySpec, WeightedGraph,
};

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph_source: GraphSource,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Flat, sorted key=value view of everything that shapes the run.
    pub resolved: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub enum GraphSource {
    Family(FamilySpec),
    Files {
        graph: PathBuf,
        exhaustion: Option<PathBuf>,
    },
}

impl RunConfig {
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.resolved {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Realizes the window graph and its exhaustion.
    pub fn load_graph(&self) -> Result<(WeightedGraph, Exhaustion)> {
        match &self.graph_source {
            GraphSource::Family(spec) => {
                build_family(spec).with_context(|| format!("building {}", spec.describe()))
            }
            GraphSource::Files { graph, exhaustion } => {
                let text = std::fs::read_to_string(graph)
                    .with_context(|| format!("reading {}", graph.display()))?;
                let g = read_graph(&text)?;
                let e = match exhaustion {
                    Some(p) => {
                        let etext = std::fs::read_to_string(p)
                            .with_context(|| format!("reading {}", p.display()))?;
                        read_exhaustion(&etext, &g)?
                    }
                    None => bail!("--exhaustion is required with --graph (the window needs levels)"),
                };
                Ok((g, e))
            }
        }
    }
}

/// Parses a `key=value` config file with optional `[section]` headers.
pub fn parse_kv_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got `{line}`", lineno + 1);
        };
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Looks a key up with and without its module prefix.
pub fn kv_get<'a>(kv: &'a BTreeMap<String, String>, section: &str, key: &str) -> Option<&'a str> {
    kv.get(&format!("{section}.{key}"))
        .or_else(|| kv.get(key))
        .map(String::as_str)
}

/// Writes the run manifest. Wall time lives only here, never in the data
/// artifacts, so reruns stay byte-identical.
pub fn write_manifest(cfg: &RunConfig, command: &str, started: Instant) -> Result<()> {
    let manifest = serde_json::json!({
        "command": command,
        "config": cfg.resolved,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {
            "walklab": env!("CARGO_PKG_VERSION"),
        },
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes a CSV artifact: a config-hash comment, a header row, then rows.
pub fn write_csv(
    dir: &Path,
    name: &str,
    hash: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut text = format!("# config_hash={hash}\n{header}\n");
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Quotes a CSV field when it contains separators or quotes.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes a JSON artifact with the config hash stitched into the document.
pub fn write_json(dir: &Path, name: &str, hash: &str, value: serde_json::Value) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut value = value;
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("config_hash".into(), serde_json::json!(hash));
    }
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Splits a `;`-separated vertex-name list (names may contain commas).
pub fn parse_vertex_list(graph: &WeightedGraph, list: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for name in list.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let v = graph
            .vertex(name)
            .with_context(|| format!("unknown vertex `{name}`"))?;
        out.push(v);
    }
    if out.is_empty() {
        bail!("empty vertex list");
    }
    Ok(out)
}

/// Parses `a:b` (inclusive) level ranges or single levels.
pub fn parse_levels(spec: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = spec.split_once(':') {
        let a: usize = a.trim().parse().context("bad level range start")?;
        let b: usize = b.trim().parse().context("bad level range end")?;
        if a == 0 || b < a {
            bail!("bad level range {spec}");
        }
        Ok((a..=b).collect())
    } else {
        let n: usize = spec.trim().parse().context("bad level")?;
        if n == 0 {
            bail!("levels are 1-based");
        }
        Ok(vec![n])
    }
}
