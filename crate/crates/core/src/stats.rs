//! Small statistical helpers for the simulators' self-checks.

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::error::{domain, Result};

/// Kolmogorov-Smirnov statistic `D` and asymptotic p-value of `samples`
/// against the continuous CDF `cdf`.
///
/// The p-value uses Stephens' small-sample correction
/// `Q((sqrt(n) + 0.12 + 0.11 / sqrt(n)) D)`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return domain("KS test needs at least one sample");
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    Ok((d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)))
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1.18 {
        if lambda <= 0.0 {
            return 1.0;
        }
        // small-argument form: sqrt(2 pi)/l * sum exp(-(2k-1)^2 pi^2 / (8 l^2))
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (1..=6).map(|k| y.powi((2 * k - 1) * (2 * k - 1))).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Exact (Garwood) two-sided confidence interval for a Poisson rate given
/// `count` events over `exposure`.
pub fn poisson_rate_ci(count: u64, exposure: f64, level: f64) -> Result<(f64, f64)> {
    if !(exposure > 0.0) || !(level > 0.0 && level < 1.0) {
        return domain("Poisson interval needs exposure > 0 and level in (0, 1)");
    }
    let alpha = 1.0 - level;
    let k = count as f64;
    let lo = if count == 0 {
        0.0
    } else {
        chi_square_quantile(alpha / 2.0, 2.0 * k) / 2.0
    };
    let hi = chi_square_quantile(1.0 - alpha / 2.0, 2.0 * k + 2.0) / 2.0;
    Ok((lo / exposure, hi / exposure))
}

/// Chi-square quantile; the library inverse is polished by Newton steps on
/// the CDF, since it is only accurate to a few parts in 1e5.
fn chi_square_quantile(p: f64, dof: f64) -> f64 {
    let dist = ChiSquared::new(dof).expect("positive dof");
    let mut x = dist.inverse_cdf(p);
    for _ in 0..8 {
        let density = dist.pdf(x);
        if !(density > 0.0) {
            break;
        }
        let next = (x - (dist.cdf(x) - p) / density).max(x / 2.0);
        if (next - x).abs() <= 1e-15 * x {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Pearson chi-square goodness-of-fit p-value of observed counts against a
/// uniform expectation.
pub fn chi_square_uniform_p(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return domain("chi-square test needs at least two cells");
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    if expected <= 0.0 {
        return domain("chi-square test needs observations");
    }
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive dof");
    Ok(1.0 - dist.cdf(stat))
}
