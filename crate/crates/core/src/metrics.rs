//! Scoring and aggregation: ISE, phase ISE, MISE ratios with jackknife
//! standard errors, and quartiles.

use num_complex::Complex64;
use serde::Serialize;

use crate::density::DensityEstimate;
use crate::ecf::PhaseEstimate;
use crate::error::{invalid, Result};
use crate::model::TrueDensity;
use crate::quad::trapezoid;

/// `\int (f_hat - f)^2` on the estimate's grid.
pub fn ise(est: &DensityEstimate, truth: TrueDensity) -> f64 {
    let sq: Vec<f64> = est
        .xs
        .iter()
        .zip(&est.fs)
        .map(|(&x, &f)| {
            let d = f - truth.density(x);
            d * d
        })
        .collect();
    trapezoid(&est.xs, &sq)
}

/// `\int_{-t*}^{t*} |rho_hat - rho|^2 dt` on the estimate's grid. `truth`
/// holds the true phase at every grid point.
pub fn phase_ise(est: &PhaseEstimate, truth: &[Complex64], t_star: f64) -> Result<f64> {
    if truth.len() != est.grid.len() {
        return Err(invalid(format!(
            "phase grids differ: estimate has {} points, truth {}",
            est.grid.len(),
            truth.len()
        )));
    }
    phase_ise_on(est.grid.values(), &est.phase, truth, t_star)
}

/// Same as [`phase_ise`] for bare vectors on a shared grid `ts`.
pub fn phase_ise_on(ts: &[f64], est: &[Complex64], truth: &[Complex64], t_star: f64) -> Result<f64> {
    if ts.len() != est.len() || ts.len() != truth.len() {
        return Err(invalid("phase vectors must share the grid"));
    }
    let tol = 1e-12 * t_star.abs().max(1.0);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for ((&t, a), b) in ts.iter().zip(est).zip(truth) {
        if t.abs() <= t_star + tol {
            xs.push(t);
            ys.push((a - b).norm_sqr());
        }
    }
    Ok(trapezoid(&xs, &ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    /// `None` with fewer than two pairs.
    pub se: Option<f64>,
}

/// `mean(ise_eq) / mean(ise_opt)` and the leave-one-out standard error
/// `sqrt(N^{-1} sum (R_{(-j)} - R_bar)^2)`.
pub fn mise_ratio_with_jackknife(pairs: &[(f64, f64)]) -> Result<RatioEstimate> {
    if pairs.is_empty() {
        return Err(invalid("no ISE pairs"));
    }
    let n = pairs.len() as f64;
    let sum_eq: f64 = pairs.iter().map(|p| p.0).sum();
    let sum_opt: f64 = pairs.iter().map(|p| p.1).sum();
    if !(sum_opt > 0.0) {
        return Err(invalid("optimal-weight MISE is zero"));
    }
    let ratio = sum_eq / sum_opt;
    if pairs.len() < 2 {
        return Ok(RatioEstimate { ratio, se: None });
    }
    let mut loo = Vec::with_capacity(pairs.len());
    for &(eq, opt) in pairs {
        let denom = sum_opt - opt;
        if !(denom > 0.0) {
            return Err(invalid("leave-one-out denominator is zero"));
        }
        loo.push((sum_eq - eq) / denom);
    }
    let bar = loo.iter().sum::<f64>() / n;
    let se = (loo.iter().map(|r| (r - bar) * (r - bar)).sum::<f64>() / n).sqrt();
    Ok(RatioEstimate { ratio, se: Some(se) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            q1: self.q1 * factor,
            median: self.median * factor,
            q3: self.q3 * factor,
        }
    }
}

/// Linear-interpolation quantile between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartile_summary(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return Err(invalid("quartiles of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Quartiles {
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
    })
}
