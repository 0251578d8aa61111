//! Dominant eigenvalue of small nonnegative matrices.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

const REL_TOL: f64 = 1e-13;
const MAX_ITERATIONS: usize = 1_000_000;

/// Spectral radius of a nonnegative square matrix.
///
/// The matrix is split into its irreducible diagonal blocks (strongly
/// connected components of the support graph); the spectral radius is the
/// largest block radius. Each block is handled by power iteration on
/// `B + cI`, which is primitive, and the Collatz-Wielandt quotients
/// `min_i (Bx)_i / x_i <= rho <= max_i (Bx)_i / x_i` bracket the answer
/// at every step.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return domain("spectral radius needs a square matrix");
    }
    if let Some(bad) = m.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return domain(format!("spectral radius needs finite nonnegative entries, found {bad}"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut rho: f64 = 0.0;
    for block in irreducible_blocks(m) {
        let r = if block.len() == 1 {
            let i = block[0];
            m[(i, i)]
        } else {
            block_radius(m, &block)?
        };
        rho = rho.max(r);
    }
    Ok(rho)
}

/// Strongly connected components of the graph with an edge i→j when m[i][j] > 0.
fn irreducible_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if m[(i, j)] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut blocks = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let block: Vec<usize> = (i..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &block {
            assigned[j] = true;
        }
        blocks.push(block);
    }
    blocks
}

fn block_radius(m: &DMatrix<f64>, idx: &[usize]) -> Result<f64> {
    let n = idx.len();
    let b = DMatrix::from_fn(n, n, |i, j| m[(idx[i], idx[j])]);
    let scale = b.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let shift = 0.5 * scale;
    let shifted = &b + DMatrix::identity(n, n) * shift;

    let mut x = nalgebra::DVector::from_element(n, 1.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..MAX_ITERATIONS {
        let y = &shifted * &x;
        let (mut qmin, mut qmax) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let q = y[i] / x[i];
            qmin = qmin.min(q);
            qmax = qmax.max(q);
        }
        lo = f64::max(lo, qmin);
        hi = f64::min(hi, qmax);
        if hi - lo <= REL_TOL * hi {
            return Ok(0.5 * (lo + hi) - shift);
        }
        let norm = y.max();
        x = y / norm;
    }
    let estimate = 0.5 * (lo + hi) - shift;
    if (hi - lo) <= 1e-10 * estimate.abs().max(f64::MIN_POSITIVE) {
        return Ok(estimate);
    }
    Err(Error::Convergence {
        solver: "spectral_radius",
        iterations: MAX_ITERATIONS,
        residual: hi - lo,
        last_iterate: x.iter().copied().collect(),
    })
}
