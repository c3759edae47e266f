//! Conjugate-gradient solver for clamped Laplacian systems.
//!
//! The system is `Δu(x) = injection(x)` at every unclamped vertex, with
//! `u` fixed on the clamped set, where `Δu(x) = Σ_y c(x,y)(u(x) − u(y))`.
//! The reduced operator is symmetric positive definite whenever every
//! component of the unclamped set can reach a clamped vertex, which the
//! solver checks up front. Jacobi (diagonal `π`) preconditioning.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Convergence report for one solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖₂ / ‖b‖₂`.
    pub residual: f64,
}

/// Default relative-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Solves the clamped Laplacian system and returns per-vertex values.
///
/// `clamped` lists `(vertex, value)` pairs (at least one required);
/// `injection` lists net-current sources at unclamped vertices.
pub fn solve_laplacian(
    graph: &WeightedGraph,
    clamped: &[(usize, f64)],
    injection: &[(usize, f64)],
    tol: f64,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = graph.vertex_count();
    if clamped.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut fixed = vec![f64::NAN; n];
    for &(v, val) in clamped {
        if v >= n {
            return Err(Error::InvalidInput(format!("clamped vertex {v} out of range")));
        }
        if !fixed[v].is_nan() && fixed[v] != val {
            return Err(Error::InvalidInput(format!(
                "vertex {} clamped to two different values",
                graph.name(v)
            )));
        }
        fixed[v] = val;
    }

    // Unknown ordering: ascending vertex index.
    let mut unknown_of = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for v in 0..n {
        if fixed[v].is_nan() {
            unknown_of[v] = unknowns.len();
            unknowns.push(v);
        }
    }
    let m = unknowns.len();

    let mut values = vec![0.0; n];
    for v in 0..n {
        if !fixed[v].is_nan() {
            values[v] = fixed[v];
        }
    }
    if m == 0 {
        return Ok((values, SolveStats { iterations: 0, residual: 0.0 }));
    }

    // Every unknown component must touch the clamped set, else singular.
    {
        let mut reached = vec![false; n];
        let mut stack: Vec<usize> = clamped.iter().map(|&(v, _)| v).collect();
        for &v in &stack {
            reached[v] = true;
        }
        while let Some(x) = stack.pop() {
            for (y, _, _) in graph.neighbors(x) {
                if !reached[y] {
                    reached[y] = true;
                    if fixed[y].is_nan() {
                        stack.push(y);
                    }
                }
            }
        }
        if let Some(&v) = unknowns.iter().find(|&&v| !reached[v]) {
            return Err(Error::SingularSystem(format!(
                "vertex {} is cut off from the boundary set",
                graph.name(v)
            )));
        }
    }

    // Right-hand side: injections plus clamped-neighbor contributions.
    let mut b = vec![0.0; m];
    for &(v, inj) in injection {
        let u = unknown_of[v];
        if u == usize::MAX {
            return Err(Error::InvalidInput(format!(
                "injection at clamped vertex {}",
                graph.name(v)
            )));
        }
        b[u] += inj;
    }
    for (u, &v) in unknowns.iter().enumerate() {
        for (y, c, _) in graph.neighbors(v) {
            if !fixed[y].is_nan() {
                b[u] += c * fixed[y];
            }
        }
    }

    let apply = |x: &[f64], out: &mut [f64]| {
        for (u, &v) in unknowns.iter().enumerate() {
            let mut acc = graph.pi(v) * x[u];
            for (y, c, _) in graph.neighbors(v) {
                let w = unknown_of[y];
                if w != usize::MAX {
                    acc -= c * x[w];
                }
            }
            out[u] = acc;
        }
    };

    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        for &v in &unknowns {
            values[v] = 0.0;
        }
        return Ok((values, SolveStats { iterations: 0, residual: 0.0 }));
    }

    // Preconditioned CG with Jacobi diag(π).
    let inv_diag: Vec<f64> = unknowns.iter().map(|&v| 1.0 / graph.pi(v)).collect();
    let mut x = vec![0.0; m];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, c)| a * c).sum();
    let mut ap = vec![0.0; m];
    let max_iter = 40 * m + 2000;
    let mut iterations = 0;
    let mut residual = 1.0;
    for it in 0..max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, c)| a * c).sum();
        if pap <= 0.0 {
            return Err(Error::SingularSystem(
                "operator lost positive definiteness".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations = it + 1;
        residual = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
        if residual <= tol {
            break;
        }
        for i in 0..m {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, c)| a * c).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    if residual > tol {
        return Err(Error::NoConvergence {
            residual,
            iterations,
            tol,
        });
    }
    for (u, &v) in unknowns.iter().enumerate() {
        values[v] = x[u];
    }
    Ok((values, SolveStats { iterations, residual }))
}
