//! Independent oracles shared by the integration tests.
//!
//! Everything here deliberately avoids the library's own solver paths:
//! dense linear algebra goes through nalgebra, tree quantities through
//! closed-form series/parallel recursions, and spanning-tree counts through
//! the weighted-Laplacian cofactor.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use walklab::graph::WeightedGraph;

/// Dense direct solve of the clamped Laplacian system (the quadratic
/// minimization oracle): minimizes the Dirichlet energy subject to the
/// clamped values by eliminating the constraints and LU-solving the
/// reduced normal equations.
pub fn dense_solve_clamped(
    graph: &WeightedGraph,
    clamped: &[(usize, f64)],
    injection: &[(usize, f64)],
) -> Vec<f64> {
    let n = graph.vertex_count();
    let mut fixed = vec![None; n];
    for &(v, val) in clamped {
        fixed[v] = Some(val);
    }
    let unknowns: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let index: std::collections::HashMap<usize, usize> = unknowns
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let m = unknowns.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &v) in unknowns.iter().enumerate() {
        a[(i, i)] = graph.pi(v);
        for (w, c, _) in graph.neighbors(v) {
            match fixed[w] {
                Some(val) => b[i] += c * val,
                None => a[(i, index[&w])] -= c,
            }
        }
    }
    for &(v, inj) in injection {
        b[index[&v]] += inj;
    }
    let x = a.lu().solve(&b).expect("dense oracle: singular system");
    let mut out = vec![0.0; n];
    for v in 0..n {
        out[v] = match fixed[v] {
            Some(val) => val,
            None => x[index[&v]],
        };
    }
    out
}

/// Dense inverse of the rim-killed Laplacian (Green-matrix oracle):
/// returns the full inverse restricted to the non-killed block.
pub fn dense_green_inverse(graph: &WeightedGraph, killed: usize) -> DMatrix<f64> {
    let n = graph.vertex_count();
    let keep: Vec<usize> = (0..n).filter(|&v| v != killed).collect();
    let m = keep.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let index: std::collections::HashMap<usize, usize> =
        keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    for (i, &v) in keep.iter().enumerate() {
        a[(i, i)] = graph.pi(v);
        for (w, c, _) in graph.neighbors(v) {
            if w != killed {
                a[(i, index[&w])] -= c;
            }
        }
    }
    a.try_inverse().expect("dense oracle: singular Laplacian")
}

/// Weighted matrix-tree count: the partition function equals any cofactor
/// of the weighted Laplacian.
pub fn matrix_tree_partition(graph: &WeightedGraph) -> f64 {
    let n = graph.vertex_count();
    let m = n - 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for v in 1..n {
        a[(v - 1, v - 1)] = graph.pi(v);
        for (w, c, _) in graph.neighbors(v) {
            if w != 0 {
                a[(v - 1, w - 1)] -= c;
            }
        }
    }
    a.determinant()
}

/// Series/parallel recursions for the regular tree wired at level `n`.
///
/// `subtree_conductance_to_z(b, n, j)` is the conductance from a depth-`j`
/// vertex to the collapsed boundary vertex through its own subtree:
/// at depth `n` the vertex touches `z` directly through its `b` children,
/// below that each of the `b` child edges (conductance 1) is in series
/// with the child's own subtree conductance.
pub fn subtree_conductance_to_z(branching: usize, n: usize, j: usize) -> f64 {
    assert!(j <= n);
    let b = branching as f64;
    let mut g = b; // depth-n vertices: b unit edges straight into z
    for _ in 0..(n - j) {
        g = b * g / (1.0 + g);
    }
    g
}

/// Wired effective resistance between the two children of the root of a
/// binary-style regular tree, wired at level `n`: the route through the
/// root (resistance 2) in parallel with the route through `z`
/// (resistance 2/G(1)).
pub fn tree_wired_resistance_children(branching: usize, n: usize) -> f64 {
    let g1 = subtree_conductance_to_z(branching, n, 1);
    2.0 / (1.0 + g1)
}

/// Wired effective resistance between the root and one of its children.
/// Route through the edge itself (resistance 1) in parallel with: root →
/// other children subtrees → z → child's subtree.
pub fn tree_wired_resistance_root_child(branching: usize, n: usize) -> f64 {
    let b = branching as f64;
    let g1 = subtree_conductance_to_z(branching, n, 1);
    // Root reaches z only through its other (b-1) children: each is a unit
    // edge in series with that child's subtree conductance G(1).
    let root_to_z = (b - 1.0) * g1 / (1.0 + g1);
    if root_to_z <= 0.0 {
        return 1.0;
    }
    let alt = 1.0 / root_to_z + 1.0 / g1;
    alt / (1.0 + alt)
}
