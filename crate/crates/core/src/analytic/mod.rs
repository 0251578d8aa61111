//! Branching-process characterization of a single packet's spread.
//!
//! A packet forwarded by a type-`h` node reaches on average
//! `N_k * gamma[h][k]` type-`k` nodes. The dominant eigenvalue of that
//! mean-offspring matrix decides whether the packet can spread out at all;
//! the extinction and final-size systems give the spread-out probability per
//! source type and the fraction of each type reached when it does.

mod fixed_point;
mod lambert;
mod spectral;

use nalgebra::DMatrix;

pub use fixed_point::{
    extinction_residual, fraction_residual, solve_extinction, solve_fractions, CRITICALITY_TOL,
    MAX_ITERATIONS, RESIDUAL_TOL, STEP_TOL,
};
pub use lambert::lambert_w0;
pub use spectral::spectral_radius;

use crate::error::{domain, Result};
use crate::model::{gamma_matrix, ScenarioConfig};

/// Mean offspring matrix `m[h][k] = N_k * gamma[h][k]`.
pub fn mean_offspring(counts: &[usize], gamma: &DMatrix<f64>) -> DMatrix<f64> {
    let h = counts.len();
    DMatrix::from_fn(h, h, |i, k| counts[k] as f64 * gamma[(i, k)])
}

/// Final-size weights `f[h][k] = N_k * gamma[k][h]` (note the transposed gamma).
pub fn fraction_weights(counts: &[usize], gamma: &DMatrix<f64>) -> DMatrix<f64> {
    let h = counts.len();
    DMatrix::from_fn(h, h, |i, k| counts[k] as f64 * gamma[(k, i)])
}

/// Solved characterization of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticResult {
    pub spectral_radius: f64,
    /// Probability that a packet seeded at one type-`h` node dies out.
    pub extinction: Vec<f64>,
    /// Expected fraction of type-`h` nodes reached, given spread-out.
    pub fractions: Vec<f64>,
    pub supercritical: bool,
    /// Population per type, kept for population-weighted aggregates.
    pub counts: Vec<usize>,
}

impl AnalyticResult {
    /// Solves both systems from populations and meeting probabilities.
    pub fn solve(counts: &[usize], gamma: &DMatrix<f64>) -> Result<Self> {
        let m = mean_offspring(counts, gamma);
        let rho = spectral_radius(&m)?;
        let extinction = solve_extinction(&m)?;
        let fractions = solve_fractions(&fraction_weights(counts, gamma))?;
        Ok(Self {
            spectral_radius: rho,
            extinction,
            fractions,
            supercritical: fixed_point::is_supercritical(rho),
            counts: counts.to_vec(),
        })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Self::solve(&cfg.counts(), &gamma_matrix(cfg)?)
    }

    pub fn total_nodes(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Population-weighted fraction reached by a spread-out packet.
    pub fn population_fraction(&self) -> f64 {
        let n = self.total_nodes() as f64;
        self.counts
            .iter()
            .zip(&self.fractions)
            .map(|(&c, &z)| c as f64 * z / n)
            .sum()
    }

    /// Expected fraction of all nodes reached by one packet seeded at
    /// `sources[h]` type-`h` nodes.
    pub fn fraction_multi_source(&self, sources: &[usize]) -> Result<f64> {
        let extinct = extinction_multi_source(&self.extinction, sources)?;
        Ok(self.population_fraction() * (1.0 - extinct))
    }

    /// Fraction reached by one packet from a single type-`h` source.
    pub fn single_source_fraction(&self, h: usize) -> f64 {
        self.population_fraction() * (1.0 - self.extinction[h])
    }
}

/// Extinction probability of a packet seeded at several nodes: `prod_h w_h^beta_h`.
pub fn extinction_multi_source(extinction: &[f64], sources: &[usize]) -> Result<f64> {
    if extinction.len() != sources.len() {
        return domain("one source count per node type");
    }
    if sources.iter().all(|&b| b == 0) {
        return domain("at least one source is required");
    }
    if let Some(w) = extinction.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return domain(format!("extinction probability {w} outside [0, 1]"));
    }
    Ok(extinction
        .iter()
        .zip(sources)
        .map(|(&w, &b)| w.powi(b as i32))
        .product())
}

/// Closed-form extinction probability of a single-type network with mean
/// offspring `a`: `-W0(-a e^{-a}) / a`.
pub fn extinction_closed_form_h1(mean_offspring: f64) -> Result<f64> {
    let a = mean_offspring;
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("mean offspring must be positive and finite, got {a}"));
    }
    if !fixed_point::is_supercritical(a) {
        return Ok(1.0);
    }
    Ok(-lambert_w0(-a * (-a).exp())? / a)
}

/// Closed-form fraction of a single-type network reached by a packet pushed
/// to `beta` nodes: `(1 - w)(1 - w^beta)` with `w` the closed-form extinction.
pub fn fraction_closed_form_h1(mean_offspring: f64, beta: usize) -> Result<f64> {
    if beta < 1 {
        return domain("beta must be at least 1");
    }
    let w = extinction_closed_form_h1(mean_offspring)?;
    Ok((1.0 - w) * (1.0 - w.powi(beta as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const W_A2: f64 = 0.203_187_869_979_979_95;
    const Z_A2: f64 = 0.796_812_130_020_020_05;

    fn h1(a: f64) -> AnalyticResult {
        AnalyticResult::solve(&[1], &DMatrix::from_element(1, 1, a)).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(extinction_closed_form_h1(1.0).unwrap(), 1.0);
        assert_eq!(extinction_closed_form_h1(0.5).unwrap(), 1.0);
        assert!((extinction_closed_form_h1(2.0).unwrap() - W_A2).abs() < 1e-14);
        assert!(extinction_closed_form_h1(0.0).is_err());
        assert!(extinction_closed_form_h1(-1.0).is_err());

        for beta in 1..5 {
            assert_eq!(fraction_closed_form_h1(1.0, beta).unwrap(), 0.0);
        }
        // z(1) = (1 - w)^2, z(3) = (1 - w)(1 - w^3) at a = 2
        assert!((fraction_closed_form_h1(2.0, 1).unwrap() - 0.634_909_570_547_041_3).abs() < 1e-13);
        assert!((fraction_closed_form_h1(2.0, 3).unwrap() - 0.790_127_932_580_299_9).abs() < 1e-13);
    }

    #[test]
    fn multi_source_extinction() {
        assert_eq!(extinction_multi_source(&[1.0, 1.0], &[3, 2]).unwrap(), 1.0);
        assert!((extinction_multi_source(&[0.2, 1.0], &[2, 0]).unwrap() - 0.04).abs() < 1e-15);
        let p = extinction_multi_source(&[W_A2, 0.5], &[1, 1]).unwrap();
        assert!((p - 0.101_593_934_989_989_98).abs() < 1e-15);
        assert!(extinction_multi_source(&[0.5, 0.5], &[0, 0]).is_err());
    }

    #[test]
    fn multi_source_fraction() {
        let sub = h1(0.5);
        assert!(!sub.supercritical);
        assert_eq!(sub.extinction, vec![1.0]);
        assert_eq!(sub.fractions, vec![0.0]);
        assert_eq!(sub.fraction_multi_source(&[7]).unwrap(), 0.0);

        let sup = h1(2.0);
        assert!((sup.fraction_multi_source(&[1]).unwrap() - 0.634_909_570_547_041_3).abs() < 1e-13);
        assert!((sup.fraction_multi_source(&[60]).unwrap() - Z_A2).abs() < 1e-13);
        assert!(sup.fraction_multi_source(&[0]).is_err());
    }

    #[test]
    fn duality_for_single_type() {
        for a in [1.1, 1.5, 2.0, 3.0, 5.0, 10.0] {
            let r = h1(a);
            assert!((r.fractions[0] - (1.0 - r.extinction[0])).abs() < 1e-9, "a={a}");
        }
    }

    #[test]
    fn fraction_weights_transpose_gamma() {
        let gamma = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let counts = [10, 20];
        let m = mean_offspring(&counts, &gamma);
        let f = fraction_weights(&counts, &gamma);
        // m[h][k] = N_k g[h][k], f[h][k] = N_k g[k][h]
        assert!((m[(0, 1)] - 20.0 * 0.2).abs() < 1e-15);
        assert!((f[(0, 1)] - 20.0 * 0.3).abs() < 1e-15);
        assert!((f[(1, 0)] - 10.0 * 0.2).abs() < 1e-15);
        let rm = spectral_radius(&m).unwrap();
        let rf = spectral_radius(&f).unwrap();
        assert!((rm - rf).abs() < 1e-12);
    }
}
