//! Built-in window families with canonical exhaustions.
//!
//! Each family realizes a window of a well-understood infinite transient
//! graph out to a requested radius, together with the nested-ball
//! exhaustion. Transience of the infinite object is a documented
//! responsibility of the parameters (`dim >= 3` where it matters), not
//! something detected at runtime.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, GraphBuilder, WeightedGraph};

/// Parameters for the example families.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// Box `[-radius, radius]^dim` of the hypercubic lattice, unit
    /// conductances, exhausted by nested boxes. Requires `dim >= 3`.
    ZdBox { dim: usize, radius: usize },
    /// Rooted tree in which every vertex has `branching` children, realized
    /// to `depth`, exhausted by balls around the root.
    RegularTree { branching: usize, depth: usize },
    /// Cartesian product of a `ZdBox` window with a path on `factor`
    /// vertices; unit conductances on both kinds of edges.
    Product {
        dim: usize,
        radius: usize,
        factor: usize,
    },
    /// A `ZdBox` window glued at the origin to a half-line of `ray` extra
    /// vertices, with ladder rungs of conductance `decay^k` between ray
    /// vertex `k` and lattice vertex `(k,0,…,0)`. `decay < 1` keeps the rung
    /// conductances summable.
    Ladder {
        dim: usize,
        radius: usize,
        ray: usize,
        decay: f64,
    },
    /// Two copies of a `ZdBox` window joined by a rung at every site `x`
    /// with conductance `(|x|+1)^{-(dim+1)}` (`|x|` the graph distance from
    /// the origin); sheet edges have unit conductance. Requires `dim >= 3`.
    TwoSheet { dim: usize, radius: usize },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::ZdBox { .. } => "zd_box",
            FamilySpec::RegularTree { .. } => "regular_tree",
            FamilySpec::Product { .. } => "product",
            FamilySpec::Ladder { .. } => "ladder",
            FamilySpec::TwoSheet { .. } => "two_sheet",
        }
    }

    /// Canonical description, e.g. `zd_box(dim=3,radius=8)`.
    pub fn describe(&self) -> String {
        match self {
            FamilySpec::ZdBox { dim, radius } => format!("zd_box(dim={dim},radius={radius})"),
            FamilySpec::RegularTree { branching, depth } => {
                format!("regular_tree(branching={branching},depth={depth})")
            }
            FamilySpec::Product {
                dim,
                radius,
                factor,
            } => format!("product(dim={dim},radius={radius},factor={factor})"),
            FamilySpec::Ladder {
                dim,
                radius,
                ray,
                decay,
            } => format!("ladder(dim={dim},radius={radius},ray={ray},decay={decay})"),
            FamilySpec::TwoSheet { dim, radius } => {
                format!("two_sheet(dim={dim},radius={radius})")
            }
        }
    }
}

/// Builds the window graph and its canonical exhaustion.
pub fn build_family(spec: &FamilySpec) -> Result<(WeightedGraph, Exhaustion)> {
    match *spec {
        FamilySpec::ZdBox { dim, radius } => {
            check_dim(dim, "zd_box")?;
            check_radius(radius)?;
            zd_box(dim, radius)
        }
        FamilySpec::RegularTree { branching, depth } => {
            if branching < 2 {
                return Err(Error::InvalidFamily(format!(
                    "regular_tree needs branching >= 2 for transience, got {branching}"
                )));
            }
            if depth < 1 {
                return Err(Error::InvalidFamily("regular_tree needs depth >= 1".into()));
            }
            regular_tree(branching, depth)
        }
        FamilySpec::Product {
            dim,
            radius,
            factor,
        } => {
            check_dim(dim, "product")?;
            check_radius(radius)?;
            if factor < 2 {
                return Err(Error::InvalidFamily("product needs factor >= 2".into()));
            }
            product(dim, radius, factor)
        }
        FamilySpec::Ladder {
            dim,
            radius,
            ray,
            decay,
        } => {
            check_dim(dim, "ladder")?;
            check_radius(radius)?;
            if decay <= 0.0 || decay >= 1.0 || decay.is_nan() {
                return Err(Error::InvalidFamily(format!(
                    "ladder rung decay must lie in (0,1) so that the rung conductances are summable, got {decay}"
                )));
            }
            ladder(dim, radius, ray, decay)
        }
        FamilySpec::TwoSheet { dim, radius } => {
            check_dim(dim, "two_sheet")?;
            check_radius(radius)?;
            two_sheet(dim, radius)
        }
    }
}

fn check_dim(dim: usize, family: &str) -> Result<()> {
    if dim < 3 {
        return Err(Error::InvalidFamily(format!(
            "{family} needs dim >= 3 (the infinite lattice is recurrent below that), got {dim}"
        )));
    }
    Ok(())
}

fn check_radius(radius: usize) -> Result<()> {
    if radius < 1 {
        return Err(Error::InvalidFamily("radius must be >= 1".into()));
    }
    Ok(())
}

fn coord_name(x: &[i64]) -> String {
    x.iter().map(|c| c.to_string()).join(",")
}

/// All lattice points of the box `[-r, r]^dim` in lexicographic order.
fn box_points(dim: usize, r: i64) -> Vec<Vec<i64>> {
    (0..dim)
        .map(|_| -r..=r)
        .multi_cartesian_product()
        .collect()
}

fn l1_norm(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).sum()
}

fn linf_norm(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).max().unwrap_or(0)
}

fn zd_box(dim: usize, radius: usize) -> Result<(WeightedGraph, Exhaustion)> {
    let r = radius as i64;
    let mut b = GraphBuilder::new();
    let points = box_points(dim, r);
    for p in &points {
        b.add_vertex(&coord_name(p));
    }
    for p in &points {
        for axis in 0..dim {
            if p[axis] < r {
                let mut q = p.clone();
                q[axis] += 1;
                b.add_edge(&coord_name(p), &coord_name(&q), 1.0)?;
            }
        }
    }
    let g = b.build()?;
    let levels = (1..=radius)
        .map(|k| {
            points
                .iter()
                .filter(|p| linf_norm(p) <= k as i64)
                .map(|p| g.vertex(&coord_name(p)).unwrap())
                .collect()
        })
        .collect();
    let e = Exhaustion::new(&g, levels)?;
    Ok((g, e))
}

fn tree_name(path: &[usize]) -> String {
    if path.is_empty() {
        "o".to_string()
    } else {
        format!("o.{}", path.iter().map(|c| c.to_string()).join("."))
    }
}

fn regular_tree(branching: usize, depth: usize) -> Result<(WeightedGraph, Exhaustion)> {
    let mut b = GraphBuilder::new();
    b.add_vertex("o");
    // Breadth-first generation so vertex indices grow with depth.
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for path in &frontier {
            for child in 0..branching {
                let mut cp = path.clone();
                cp.push(child);
                b.add_edge(&tree_name(path), &tree_name(&cp), 1.0)?;
                next.push(cp);
            }
        }
        frontier = next;
    }
    let g = b.build()?;
    let mut levels = Vec::new();
    for k in 1..=depth {
        let mut lvl = Vec::new();
        let mut paths: Vec<Vec<usize>> = vec![vec![]];
        lvl.push(g.vertex("o").unwrap());
        for _ in 0..k {
            let mut next = Vec::new();
            for path in &paths {
                for child in 0..branching {
                    let mut cp = path.clone();
                    cp.push(child);
                    lvl.push(g.vertex(&tree_name(&cp)).unwrap());
                    next.push(cp);
                }
            }
            paths = next;
        }
        levels.push(lvl);
    }
    let e = Exhaustion::new(&g, levels)?;
    Ok((g, e))
}

fn product(dim: usize, radius: usize, factor: usize) -> Result<(WeightedGraph, Exhaustion)> {
    let r = radius as i64;
    let mut b = GraphBuilder::new();
    let points = box_points(dim, r);
    let name = |p: &Vec<i64>, i: usize| format!("{}|{}", coord_name(p), i);
    for p in &points {
        for i in 0..factor {
            b.add_vertex(&name(p, i));
        }
    }
    for p in &points {
        for i in 0..factor {
            for axis in 0..dim {
                if p[axis] < r {
                    let mut q = p.clone();
                    q[axis] += 1;
                    b.add_edge(&name(p, i), &name(&q, i), 1.0)?;
                }
            }
            if i + 1 < factor {
                b.add_edge(&name(p, i), &name(p, i + 1), 1.0)?;
            }
        }
    }
    let g = b.build()?;
    let mut levels = Vec::new();
    for k in 1..=radius {
        let mut lvl = Vec::new();
        for p in points.iter().filter(|p| linf_norm(p) <= k as i64) {
            for i in 0..factor {
                lvl.push(g.vertex(&name(p, i)).unwrap());
            }
        }
        levels.push(lvl);
    }
    let e = Exhaustion::new(&g, levels)?;
    Ok((g, e))
}

fn ladder(dim: usize, radius: usize, ray: usize, decay: f64) -> Result<(WeightedGraph, Exhaustion)> {
    let r = radius as i64;
    let mut b = GraphBuilder::new();
    let points = box_points(dim, r);
    for p in &points {
        b.add_vertex(&coord_name(p));
    }
    for p in &points {
        for axis in 0..dim {
            if p[axis] < r {
                let mut q = p.clone();
                q[axis] += 1;
                b.add_edge(&coord_name(p), &coord_name(&q), 1.0)?;
            }
        }
    }
    // Half-line glued at the origin: ray vertex 0 is the lattice origin.
    let origin = coord_name(&vec![0; dim]);
    let ray_name = |k: usize| format!("ray{k}");
    for k in 1..=ray {
        let prev = if k == 1 {
            origin.clone()
        } else {
            ray_name(k - 1)
        };
        b.add_edge(&prev, &ray_name(k), 1.0)?;
        // Rung onto the first lattice axis, where realized.
        if (k as i64) <= r {
            let mut p = vec![0i64; dim];
            p[0] = k as i64;
            b.add_edge(&ray_name(k), &coord_name(&p), decay.powi(k as i32))?;
        }
    }
    let g = b.build()?;
    // Balls in graph distance from the glue point. The box corners sit at
    // graph distance dim*radius, so the levels run out that far.
    let max_level = (dim * radius).max(ray);
    let mut levels = Vec::new();
    for k in 1..=max_level {
        let mut lvl: Vec<usize> = points
            .iter()
            .filter(|p| l1_norm(p) <= k as i64)
            .map(|p| g.vertex(&coord_name(p)).unwrap())
            .collect();
        for j in 1..=k.min(ray) {
            lvl.push(g.vertex(&ray_name(j)).unwrap());
        }
        levels.push(lvl);
    }
    let e = Exhaustion::new(&g, levels)?;
    Ok((g, e))
}

fn two_sheet(dim: usize, radius: usize) -> Result<(WeightedGraph, Exhaustion)> {
    let r = radius as i64;
    let mut b = GraphBuilder::new();
    let points = box_points(dim, r);
    let name = |p: &Vec<i64>, s: usize| format!("{}|{}", coord_name(p), s);
    for s in 0..2 {
        for p in &points {
            b.add_vertex(&name(p, s));
        }
    }
    for p in &points {
        for s in 0..2 {
            for axis in 0..dim {
                if p[axis] < r {
                    let mut q = p.clone();
                    q[axis] += 1;
                    b.add_edge(&name(p, s), &name(&q, s), 1.0)?;
                }
            }
        }
        let rung = ((l1_norm(p) + 1) as f64).powi(-(dim as i32 + 1));
        b.add_edge(&name(p, 0), &name(p, 1), rung)?;
    }
    let g = b.build()?;
    let mut levels = Vec::new();
    for k in 1..=radius {
        let mut lvl = Vec::new();
        for p in points.iter().filter(|p| linf_norm(p) <= k as i64) {
            for s in 0..2 {
                lvl.push(g.vertex(&name(p, s)).unwrap());
            }
        }
        levels.push(lvl);
    }
    let e = Exhaustion::new(&g, levels)?;
    Ok((g, e))
}

/// Total conductance of the cut separating the two sheets.
pub fn two_sheet_rung_cut(graph: &WeightedGraph) -> f64 {
    graph
        .edges()
        .iter()
        .filter(|e| {
            let (a, b) = (graph.name(e.u), graph.name(e.v));
            a.split('|').next() == b.split('|').next()
        })
        .map(|e| e.c)
        .sum()
}
