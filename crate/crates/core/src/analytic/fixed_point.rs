//! Monotone fixed-point solvers for the extinction and final-size systems.
//!
//! Extinction: `w_h = exp(sum_k m[h][k] (w_k - 1))`, smallest root in `[0,1]^H`,
//! reached by iterating upward from zero.
//!
//! Final size: `1 - z_h = exp(-sum_k f[h][k] z_k)`, largest root in `[0,1]^H`,
//! reached by iterating downward from one. Here `f[h][k] = N_k gamma[k][h]`:
//! the rate at which type-`k` recipients reach a given type-`h` node.
//!
//! Both maps are monotone, so the iterates never cross the target root. Near
//! criticality plain iteration crawls; a guarded Newton stage finishes the
//! job and is only allowed to move inside the sub-/super-solution region,
//! which keeps it from jumping to the trivial root.

use nalgebra::{DMatrix, DVector};

use super::spectral::spectral_radius;
use crate::error::{Error, Result};

/// Spectral radii at or below this are subcritical.
pub const CRITICALITY_TOL: f64 = 1e-9;
/// Max-norm step size that ends plain iteration.
pub const STEP_TOL: f64 = 1e-13;
/// Largest accepted max-norm residual of a returned root.
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100_000;
const NEWTON_STEPS: usize = 100;

pub(crate) fn is_supercritical(rho: f64) -> bool {
    rho > 1.0 + CRITICALITY_TOL
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Domain(format!("{what} must be square")));
    }
    if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain(format!("{what} needs finite nonnegative entries")));
    }
    Ok(())
}

/// Residual vector of the extinction system at `w`.
pub fn extinction_residual(m: &DMatrix<f64>, w: &[f64]) -> f64 {
    let w = DVector::from_column_slice(w);
    let g = extinction_map(m, &w);
    (w - g).amax()
}

/// Residual vector of the final-size system at `z`.
pub fn fraction_residual(f: &DMatrix<f64>, z: &[f64]) -> f64 {
    let z = DVector::from_column_slice(z);
    let phi = fraction_map(f, &z);
    (z - phi).amax()
}

fn extinction_map(m: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let shifted = w.map(|x| x - 1.0);
    (m * shifted).map(f64::exp)
}

fn fraction_map(f: &DMatrix<f64>, z: &DVector<f64>) -> DVector<f64> {
    (f * z).map(|s| -(-s).exp_m1())
}

/// Extinction probabilities for a single source of each type.
///
/// `mean_offspring[h][k]` is the expected number of type-`k` nodes reached
/// directly by one type-`h` node. Returns all ones when the spectral radius
/// does not exceed `1 + CRITICALITY_TOL`.
pub fn solve_extinction(mean_offspring: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(mean_offspring, "mean offspring matrix")?;
    let h = mean_offspring.nrows();
    if !is_supercritical(spectral_radius(mean_offspring)?) {
        return Ok(vec![1.0; h]);
    }
    let m = mean_offspring;
    let mut w = DVector::zeros(h);
    for _ in 0..MAX_ITERATIONS {
        let next = extinction_map(m, &w);
        let step = (&next - &w).amax();
        w = next;
        if step < STEP_TOL {
            break;
        }
    }

    // Newton on F(w) = w - G(w), J = I - diag(G) m.
    // Accept only iterates with G(w) >= w (below the smallest root).
    for _ in 0..NEWTON_STEPS {
        let g = extinction_map(m, &w);
        let resid = &w - &g;
        if resid.amax() == 0.0 {
            break;
        }
        let jac = DMatrix::identity(h, h) - DMatrix::from_diagonal(&g) * m;
        let Some(delta) = jac.lu().solve(&(-&resid)) else {
            break;
        };
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..30 {
            let cand = (&w + &delta * scale).map(|x| x.clamp(0.0, 1.0));
            let gc = extinction_map(m, &cand);
            let below = cand.iter().zip(gc.iter()).all(|(c, g)| *c <= *g + f64::EPSILON);
            let not_trivial = cand.iter().any(|&c| c < 1.0);
            if below && not_trivial && (&cand - &gc).amax() < resid.amax() {
                w = cand;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || (&delta * scale).amax() < f64::EPSILON {
            break;
        }
    }

    let residual = (&w - extinction_map(m, &w)).amax();
    if residual > RESIDUAL_TOL {
        return Err(Error::Convergence {
            solver: "solve_extinction",
            iterations: MAX_ITERATIONS,
            residual,
            last_iterate: w.iter().copied().collect(),
        });
    }
    Ok(w.iter().copied().collect())
}

/// Expected recipient fractions per type, given that the packet spreads out.
///
/// `weights[h][k] = N_k * gamma[k][h]`. Returns all zeros when the spectral
/// radius does not exceed `1 + CRITICALITY_TOL` (the trivial root is then
/// the only one).
pub fn solve_fractions(weights: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(weights, "fraction weight matrix")?;
    let h = weights.nrows();
    if !is_supercritical(spectral_radius(weights)?) {
        return Ok(vec![0.0; h]);
    }
    let f = weights;
    let mut z = DVector::from_element(h, 1.0);
    for _ in 0..MAX_ITERATIONS {
        let next = fraction_map(f, &z);
        let step = (&next - &z).amax();
        z = next;
        if step < STEP_TOL {
            break;
        }
    }

    // Newton on F(z) = z - Phi(z), J = I - diag(1 - Phi) f.
    // Accept only iterates with Phi(z) <= z (above the largest root).
    for _ in 0..NEWTON_STEPS {
        let phi = fraction_map(f, &z);
        let resid = &z - &phi;
        if resid.amax() == 0.0 {
            break;
        }
        let jac = DMatrix::identity(h, h) - DMatrix::from_diagonal(&phi.map(|p| 1.0 - p)) * f;
        let Some(delta) = jac.lu().solve(&(-&resid)) else {
            break;
        };
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..30 {
            let cand = (&z + &delta * scale).map(|x| x.clamp(0.0, 1.0));
            let pc = fraction_map(f, &cand);
            let above = cand.iter().zip(pc.iter()).all(|(c, p)| *c + f64::EPSILON >= *p);
            let not_trivial = cand.iter().any(|&c| c > 0.0);
            if above && not_trivial && (&cand - &pc).amax() < resid.amax() {
                z = cand;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || (&delta * scale).amax() < f64::EPSILON {
            break;
        }
    }

    let residual = (&z - fraction_map(f, &z)).amax();
    if residual > RESIDUAL_TOL {
        return Err(Error::Convergence {
            solver: "solve_fractions",
            iterations: MAX_ITERATIONS,
            residual,
            last_iterate: z.iter().copied().collect(),
        });
    }
    Ok(z.iter().copied().collect())
}
