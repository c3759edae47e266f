//! Statistical helpers: chi-square tests, Spearman rank correlation and
//! bootstrap bands for empirical total-variation distances.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Goodness-of-fit chi-square: returns (statistic, upper-tail p-value).
/// `expected` are probabilities summing to 1; cells with expected count
/// below 5 should be pooled by the caller.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::InvalidInput("chi-square needs matching cells".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::InvalidInput("chi-square needs observations".into()));
    }
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * n as f64;
        if e <= 0.0 {
            if o > 0 {
                return Err(Error::InvalidInput(
                    "observation in a zero-probability cell".into(),
                ));
            }
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    let dof = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Chi-square test of independence on an r×c contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<(f64, f64, usize)> {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.len());
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("need a rectangular table, at least 2x2".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j] as f64).sum())
        .collect();
    let n: f64 = row_sums.iter().sum();
    if n == 0.0 {
        return Err(Error::InvalidInput("empty table".into()));
    }
    let mut stat = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_sums[i] * col_sums[j] / n;
            if e > 0.0 {
                stat += (table[i][j] as f64 - e).powi(2) / e;
            }
        }
    }
    let dof = (rows - 1) * (cols - 1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat), dof))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with a one-sided p-value for the alternative
/// "rho < 0" (normal approximation `z = ρ√(m−1)`).
pub fn spearman_negative(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    let m = pairs.len();
    if m < 4 {
        return Err(Error::InvalidInput("spearman needs at least 4 pairs".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rx = ranks(&xs);
    let ry = ranks(&ys);
    let mean = (m as f64 + 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..m {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean).powi(2);
        dy += (ry[i] - mean).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return Err(Error::InvalidInput("degenerate ranks in spearman".into()));
    }
    let rho = num / (dx * dy).sqrt();
    let z = rho * ((m - 1) as f64).sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    Ok((rho, normal.cdf(z)))
}

/// Plug-in TV between two empirical count vectors over a shared support,
/// with a percentile bootstrap band.
pub fn bootstrap_tv_band(
    counts_a: &[u64],
    counts_b: &[u64],
    resamples: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(f64, (f64, f64))> {
    if counts_a.len() != counts_b.len() || counts_a.is_empty() {
        return Err(Error::InvalidInput("count vectors must match".into()));
    }
    let na: u64 = counts_a.iter().sum();
    let nb: u64 = counts_b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::InvalidInput("empty samples".into()));
    }
    let tv = |a: &[u64], b: &[u64]| -> f64 {
        0.5 * a
            .iter()
            .zip(b)
            .map(|(&x, &y)| (x as f64 / na as f64 - y as f64 / nb as f64).abs())
            .sum::<f64>()
    };
    let plugin = tv(counts_a, counts_b);
    let cum = |c: &[u64], n: u64| -> Vec<f64> {
        let mut acc = 0.0;
        c.iter()
            .map(|&x| {
                acc += x as f64 / n as f64;
                acc
            })
            .collect()
    };
    let cum_a = cum(counts_a, na);
    let cum_b = cum(counts_b, nb);
    let draw = |cum: &[f64], n: u64, rng: &mut ChaCha12Rng| -> Vec<u64> {
        let mut out = vec![0u64; cum.len()];
        for _ in 0..n {
            let u: f64 = rng.random();
            let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
            out[i] += 1;
        }
        out
    };
    let mut tvs: Vec<f64> = (0..resamples)
        .map(|_| {
            let ra = draw(&cum_a, na, rng);
            let rb = draw(&cum_b, nb, rng);
            tv(&ra, &rb)
        })
        .collect();
    tvs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = tvs[(0.025 * (resamples as f64 - 1.0)).round() as usize];
    let hi = tvs[(0.975 * (resamples as f64 - 1.0)).round() as usize];
    Ok((plugin, (lo, hi)))
}
