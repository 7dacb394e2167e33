//! Fitting a discrete distribution whose phase matches an empirical phase
//! function.
//!
//! Given support points `x_j`, masses `p` on the probability simplex define
//! `psi(t) = sum_j p_j exp(i t x_j)`. The fit minimizes
//!
//! ```text
//! T(p) = \int w(t) | |psi(t)| phi(t) - |phi(t)| psi(t) |^2 dt
//! ```
//!
//! over `[-t*, t*]`, where `phi` is the weighted ECF and `w` is the
//! Epanechnikov kernel rescaled to `[-t*, t*]`. This equals the weighted
//! squared distance between the two phases with weight `w |phi psi|^2`, and
//! needs no division by small moduli. A penalty `lambda v(p)` on the variance
//! of the discrete law selects the least dispersed of the near-minimizers.
//!
//! Minimization uses projected gradient steps with Barzilai-Borwein step
//! lengths and Armijo backtracking, restarted from several points.

use std::cmp::Ordering;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::ecf::PhaseEstimate;
use crate::error::{invalid, Error, Result};
use crate::model::{stream_rng, ObservationSet};

/// Masses below this are dropped from the returned fit.
pub const MASS_CUTOFF: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;

/// Masses `p_j` on support points `x_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    x: Vec<f64>,
    p: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != p.len() {
            return Err(invalid("support and masses must be non-empty and of equal length"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("support points must be strictly increasing"));
        }
        if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(invalid("masses must be finite and non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("masses sum to {total}")));
        }
        Ok(Self { x, p })
    }

    pub fn point_mass(x: f64) -> Self {
        Self {
            x: vec![x],
            p: vec![1.0],
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        self.x
            .iter()
            .zip(&self.p)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&x, &p)| p * Complex64::new(0.0, t * x).exp())
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.x.iter().zip(&self.p).map(|(x, p)| x * p).sum()
    }

    pub fn variance(&self) -> f64 {
        variance_v(&self.p, &self.x)
    }
}

/// Fit settings. `None` fields take data-driven defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    /// Number of support points; defaults to `ceil(5 sqrt(n))`.
    pub support_size: Option<usize>,
    /// Variance penalty; defaults to `lambda_scale * T(uniform) / v(uniform)`.
    pub lambda: Option<f64>,
    pub lambda_scale: f64,
    pub starts: usize,
    pub max_iters: usize,
    /// Stop once the relative objective decrease stays below this.
    pub tol_objective: f64,
    /// Stop once a projected step moves no coordinate more than this.
    pub tol_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            support_size: None,
            lambda: None,
            lambda_scale: 1e-3,
            starts: 8,
            max_iters: 2000,
            tol_objective: 1e-10,
            tol_step: 1e-12,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_iters == 0 {
            return Err(invalid("starts and max_iters must be positive"));
        }
        if self.support_size == Some(0) {
            return Err(invalid("support size must be positive"));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid(format!("lambda must be non-negative, got {l}")));
            }
        }
        if !(self.tol_objective > 0.0 && self.tol_step > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// `ceil(5 sqrt(n))`.
pub fn default_support_size(n: usize) -> usize {
    (5.0 * (n as f64).sqrt() - 1e-9).ceil() as usize
}

/// `m` sorted points drawn uniformly on `[min W, max W]`.
pub fn build_support(obs: &ObservationSet, m: usize, seed: u64) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(invalid(format!("support size must be at least 2, got {m}")));
    }
    let lo = obs.w().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = obs.w().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(invalid("observations have zero range"));
    }
    let mut rng = stream_rng(seed, 0);
    loop {
        let mut x: Vec<f64> = (0..m).map(|_| rng.random_range(lo..=hi)).collect();
        x.sort_by(|a, b| a.total_cmp(b));
        if x.windows(2).all(|w| w[1] > w[0]) {
            return Ok(x);
        }
    }
}

/// Variance of the discrete law `(x, p)`.
pub fn variance_v(p: &[f64], x: &[f64]) -> f64 {
    let mean: f64 = p.iter().zip(x).map(|(p, x)| p * x).sum();
    let second: f64 = p.iter().zip(x).map(|(p, x)| p * x * x).sum();
    (second - mean * mean).max(0.0)
}

/// Euclidean projection onto `{p : p >= 0, sum p = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// The penalized phase-matching objective on a fixed support, with the
/// trigonometric design matrices precomputed on `[0, t*]`.
#[derive(Debug, Clone)]
pub struct PhaseObjective {
    /// Quadrature weight times the kernel weight, folded for symmetry.
    weights: Vec<f64>,
    target: Vec<Complex64>,
    target_mod: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    x: Vec<f64>,
    lambda: f64,
}

impl PhaseObjective {
    pub fn new(target: &PhaseEstimate, x: &[f64], lambda: f64) -> Self {
        let ts = target.t_to_t_star();
        let cf = target.cf_to_t_star();
        let t_star = target.t_star.value;
        let dt = target.grid.step();
        let k_len = ts.len();
        let weights = ts
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let u = t / t_star;
                let kernel = (0.75 * (1.0 - u * u)).max(0.0) / t_star;
                let quad = if k == 0 {
                    dt
                } else if k + 1 == k_len {
                    dt // half weight on each of the two mirrored endpoints
                } else {
                    2.0 * dt
                };
                kernel * quad
            })
            .collect();
        let m = x.len();
        let mut cos = vec![0.0; k_len * m];
        let mut sin = vec![0.0; k_len * m];
        for (k, &t) in ts.iter().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                let (s, c) = (t * xj).sin_cos();
                cos[k * m + j] = c;
                sin[k * m + j] = s;
            }
        }
        Self {
            weights,
            target: cf.to_vec(),
            target_mod: cf.iter().map(|z| z.norm()).collect(),
            cos,
            sin,
            x: x.to_vec(),
            lambda,
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.x
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    fn psi(&self, p: &[f64]) -> Vec<Complex64> {
        let m = self.x.len();
        (0..self.weights.len())
            .map(|k| {
                let row_c = &self.cos[k * m..(k + 1) * m];
                let row_s = &self.sin[k * m..(k + 1) * m];
                let re: f64 = row_c.iter().zip(p).map(|(c, p)| c * p).sum();
                let im: f64 = row_s.iter().zip(p).map(|(s, p)| s * p).sum();
                Complex64::new(re, im)
            })
            .collect()
    }

    /// The phase-matching term alone.
    pub fn t_value(&self, p: &[f64]) -> f64 {
        let psi = self.psi(p);
        self.weights
            .iter()
            .zip(&psi)
            .zip(self.target.iter().zip(&self.target_mod))
            .map(|((w, z), (a, am))| {
                let u = z.norm();
                let r = a.re * z.re + a.im * z.im;
                w * 2.0 * am * u * (am * u - r)
            })
            .sum::<f64>()
            .max(0.0)
    }

    pub fn variance(&self, p: &[f64]) -> f64 {
        variance_v(p, &self.x)
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.t_value(p) + self.lambda * self.variance(p)
    }

    /// Objective value, writing its gradient with respect to `p` into `grad`.
    pub fn value_and_gradient(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        let m = self.x.len();
        let psi = self.psi(p);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut t_value = 0.0;
        for (k, z) in psi.iter().enumerate() {
            let w = self.weights[k];
            if w == 0.0 {
                continue;
            }
            let a = self.target[k];
            let am = self.target_mod[k];
            let u = z.norm();
            let r = a.re * z.re + a.im * z.im;
            t_value += w * 2.0 * am * u * (am * u - r);
            // |r| <= am * u, so r / u stays bounded as u -> 0
            let ratio = if u > 0.0 { r / u } else { 0.0 };
            let common = 4.0 * am * am - 2.0 * am * ratio;
            let alpha = w * (common * z.re - 2.0 * am * u * a.re);
            let beta = w * (common * z.im - 2.0 * am * u * a.im);
            let row_c = &self.cos[k * m..(k + 1) * m];
            let row_s = &self.sin[k * m..(k + 1) * m];
            for ((g, c), s) in grad.iter_mut().zip(row_c).zip(row_s) {
                *g += alpha * c + beta * s;
            }
        }
        if self.lambda != 0.0 {
            let mean: f64 = p.iter().zip(&self.x).map(|(p, x)| p * x).sum();
            for (g, x) in grad.iter_mut().zip(&self.x) {
                *g += self.lambda * (x * x - 2.0 * mean * x);
            }
        }
        t_value.max(0.0) + self.lambda * self.variance(p)
    }
}

/// Phase-matching term `T(p)` for masses `p` on support `x`.
pub fn objective_t(p: &[f64], x: &[f64], target: &PhaseEstimate) -> f64 {
    PhaseObjective::new(target, x, 0.0).t_value(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub distribution: DiscreteDistribution,
    /// `T(p) + lambda v(p)` at the returned masses.
    pub objective: f64,
    pub t_value: f64,
    pub variance: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub start: usize,
}

/// Fit on a freshly drawn support of the configured size.
pub fn fit_discrete(
    target: &PhaseEstimate,
    obs: &ObservationSet,
    cfg: &FitConfig,
    seed: u64,
) -> Result<FitResult> {
    cfg.validate()?;
    let m = cfg.support_size.unwrap_or_else(|| default_support_size(obs.len()));
    let x = build_support(obs, m, seed)?;
    fit_on_support(target, x, cfg, seed)
}

/// Fit on a given strictly increasing support.
pub fn fit_on_support(
    target: &PhaseEstimate,
    x: Vec<f64>,
    cfg: &FitConfig,
    seed: u64,
) -> Result<FitResult> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(invalid("empty support"));
    }
    let m = x.len();
    let mut objective = PhaseObjective::new(target, &x, 0.0);
    let uniform = vec![1.0 / m as f64; m];
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => {
            let t_u = objective.t_value(&uniform);
            let v_u = objective.variance(&uniform);
            cfg.lambda_scale * t_u / v_u.max(1e-12)
        }
    };
    objective = objective.with_lambda(lambda);

    if m == 1 {
        let p = vec![1.0];
        return Ok(FitResult {
            objective: objective.value(&p),
            t_value: objective.t_value(&p),
            variance: 0.0,
            distribution: DiscreteDistribution::new(x, p)?,
            lambda,
            iterations: 0,
            start: 0,
        });
    }

    let runs: Vec<Result<StartOutcome>> = (0..cfg.starts)
        .into_par_iter()
        .map(|s| {
            let start = if s == 0 {
                uniform.clone()
            } else {
                dirichlet_ones(m, &mut stream_rng(seed, 1 + s as u64))
            };
            descend(&objective, start, cfg).map(|(p, value, iterations)| StartOutcome {
                variance: objective.variance(&p),
                p,
                value,
                iterations,
                start: s,
            })
        })
        .collect();

    let mut best: Option<StartOutcome> = None;
    for run in runs {
        let run = run?;
        best = match best {
            None => Some(run),
            Some(b) => Some(if compare_outcomes(&run, &b) == Ordering::Less { run } else { b }),
        };
    }
    let best = best.expect("at least one start");

    let mut p: Vec<f64> = best
        .p
        .iter()
        .map(|&v| if v < MASS_CUTOFF { 0.0 } else { v })
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);

    Ok(FitResult {
        objective: objective.value(&p),
        t_value: objective.t_value(&p),
        variance: objective.variance(&p),
        distribution: DiscreteDistribution::new(x, p)?,
        lambda,
        iterations: best.iterations,
        start: best.start,
    })
}

struct StartOutcome {
    p: Vec<f64>,
    value: f64,
    variance: f64,
    iterations: usize,
    start: usize,
}

// Ties broken by lower variance, then lexicographically on p, so the
// reduction does not depend on the order the starts finish in.
fn compare_outcomes(a: &StartOutcome, b: &StartOutcome) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.variance.total_cmp(&b.variance))
        .then_with(|| {
            a.p.iter()
                .zip(&b.p)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
}

fn dirichlet_ones<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

fn descend(obj: &PhaseObjective, start: Vec<f64>, cfg: &FitConfig) -> Result<(Vec<f64>, f64, usize)> {
    let m = start.len();
    let mut p = project_simplex(&start);
    let mut grad = vec![0.0; m];
    let mut value = obj.value_and_gradient(&p, &mut grad);
    if !value.is_finite() {
        return Err(non_finite(0, 0.0));
    }
    let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let mut step = if gmax > 0.0 { 1.0 / gmax } else { 1.0 };
    let mut next_grad = vec![0.0; m];
    let mut quiet = 0;

    for iter in 1..=cfg.max_iters {
        let mut accepted = None;
        loop {
            let trial: Vec<f64> = p.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let candidate = project_simplex(&trial);
            let moved = candidate
                .iter()
                .zip(&p)
                .fold(0.0f64, |a, (c, p)| a.max((c - p).abs()));
            if moved <= cfg.tol_step {
                break;
            }
            let decrease: f64 = grad.iter().zip(candidate.iter().zip(&p)).map(|(g, (c, p))| g * (c - p)).sum();
            let trial_value = obj.value_and_gradient(&candidate, &mut next_grad);
            if !trial_value.is_finite() {
                return Err(non_finite(iter, step));
            }
            if trial_value <= value + ARMIJO * decrease {
                accepted = Some((candidate, trial_value));
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                break;
            }
        }
        let Some((candidate, new_value)) = accepted else {
            return Ok((p, value, iter));
        };

        // Barzilai-Borwein length for the next step
        let mut ss = 0.0;
        let mut sy = 0.0;
        for j in 0..m {
            let s = candidate[j] - p[j];
            let y = next_grad[j] - grad[j];
            ss += s * s;
            sy += s * y;
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (step * 4.0).min(1e12) };

        let rel = (value - new_value) / value.abs().max(f64::MIN_POSITIVE);
        p = candidate;
        value = new_value;
        std::mem::swap(&mut grad, &mut next_grad);
        if rel < cfg.tol_objective {
            quiet += 1;
            if quiet >= 5 {
                return Ok((p, value, iter));
            }
        } else {
            quiet = 0;
        }
    }
    Ok((p, value, cfg.max_iters))
}

fn non_finite(iteration: usize, step: f64) -> Error {
    Error::NumericalFailure {
        message: "objective became non-finite during phase fit".into(),
        iteration,
        step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecf::TGrid;
    use proptest::prelude::*;

    fn target_from(dist: &DiscreteDistribution, grid: &TGrid, n: usize) -> PhaseEstimate {
        let cf = grid.values().iter().map(|&t| dist.cf(t)).collect();
        PhaseEstimate::from_cf(cf, grid.clone(), n)
    }

    fn sample_target() -> (PhaseEstimate, Vec<f64>) {
        let w = vec![-0.3, 0.1, 0.4, 1.2, 2.0, 2.1, 3.3];
        let n = w.len();
        let obs = ObservationSet::equally_weighted(w, vec![0.0; n]).unwrap();
        let grid = TGrid::new(4.0, 41).unwrap();
        let est = crate::ecf::wepf(&obs, &grid).unwrap();
        (est, vec![-0.5, 0.2, 0.9, 1.6, 2.8])
    }

    #[test]
    fn support_size_rule() {
        assert_eq!(default_support_size(400), 100);
        assert_eq!(default_support_size(500), 112);
        assert_eq!(default_support_size(1000), 159);
    }

    #[test]
    fn support_is_sorted_within_range_and_reproducible() {
        let obs = ObservationSet::equally_weighted(vec![0.0, 10.0, 3.0], vec![0.0; 3]).unwrap();
        let x = build_support(&obs, 3, 4).unwrap();
        assert_eq!(x.len(), 3);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!(x.iter().all(|&v| (0.0..=10.0).contains(&v)));
        assert_eq!(x, build_support(&obs, 3, 4).unwrap());

        let obs = ObservationSet::equally_weighted(vec![0.0, 1.0], vec![0.0; 2]).unwrap();
        let x = build_support(&obs, 2, 9).unwrap();
        assert!(x[0] < x[1] && x[0] >= 0.0 && x[1] <= 1.0);

        let flat = ObservationSet::equally_weighted(vec![2.0, 2.0], vec![0.0; 2]).unwrap();
        assert!(build_support(&flat, 4, 0).is_err());
        assert!(build_support(&obs, 1, 0).is_err());
    }

    #[test]
    fn discrete_variance_examples() {
        assert_eq!(variance_v(&[1.0], &[3.0]), 0.0);
        assert!((variance_v(&[0.5, 0.5], &[0.0, 2.0]) - 1.0).abs() < 1e-15);
        let p = [0.1, 0.2, 0.3, 0.4];
        let x = [-1.0, 0.5, 2.0, 7.0];
        let mean: f64 = p.iter().zip(&x).map(|(p, x)| p * x).sum();
        let two_pass: f64 = p.iter().zip(&x).map(|(p, x)| p * (x - mean) * (x - mean)).sum();
        assert!((variance_v(&p, &x) - two_pass).abs() < 1e-12);
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[0.4, 0.3, 0.6]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[2] - p[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn self_match_has_zero_objective() {
        let dist = DiscreteDistribution::new(vec![-1.0, 0.3, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let grid = TGrid::new(3.0, 61).unwrap();
        let target = target_from(&dist, &grid, 50);
        assert!(objective_t(dist.p(), dist.x(), &target) < 1e-10);

        let point = DiscreteDistribution::point_mass(1.5);
        let target = target_from(&point, &grid, 50);
        assert!(objective_t(&[1.0], &[1.5], &target) < 1e-10);
        assert!(objective_t(&[1.0], &[0.5], &target) > 1e-3);
    }

    #[test]
    fn division_free_form_matches_literal_phase_distance() {
        // Literal form: |rho_hat - psi/|psi||^2 * omega(t) |phi psi|^2 integrated by
        // the trapezoid rule over the full symmetric grid on [-t*, t*].
        let obs = ObservationSet::new(
            vec![0.0, 0.2, 0.5],
            vec![0.0; 3],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let grid = TGrid::new(1.0, 5).unwrap();
        let target = crate::ecf::wepf(&obs, &grid).unwrap();
        assert!(target.t_star.saturated);
        let x = [0.2, 1.9];
        let p = [0.7, 0.3];
        let t_star = target.t_star.value;
        let mut integrand = Vec::new();
        for (k, &t) in grid.values().iter().enumerate() {
            let phi = target.cf[k];
            let psi = p[0] * Complex64::new(0.0, t * x[0]).exp() + p[1] * Complex64::new(0.0, t * x[1]).exp();
            let u = t / t_star;
            let omega = 0.75 * (1.0 - u * u) / t_star;
            let diff = phi / phi.norm() - psi / psi.norm();
            integrand.push(diff.norm_sqr() * omega * (phi * psi).norm_sqr());
        }
        let literal = crate::quad::trapezoid_uniform(&integrand, grid.step());
        let value = objective_t(&p, &x, &target);
        assert!((value - literal).abs() < 1e-12, "{value} vs {literal}");
        assert!(value > 0.0);
    }

    #[test]
    fn translation_leaves_objective_unchanged() {
        let (est, x) = sample_target();
        let w: Vec<f64> = vec![-0.3, 0.1, 0.4, 1.2, 2.0, 2.1, 3.3];
        let c = 2.7;
        let shifted = ObservationSet::equally_weighted(w.iter().map(|v| v + c).collect(), vec![0.0; 7]).unwrap();
        let est2 = crate::ecf::wepf(&shifted, &est.grid).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| v + c).collect();
        let p = [0.1, 0.3, 0.2, 0.25, 0.15];
        assert!((objective_t(&p, &x, &est) - objective_t(&p, &x2, &est2)).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (est, x) = sample_target();
        let obj = PhaseObjective::new(&est, &x, 0.05);
        let mut rng = stream_rng(31, 0);
        let h = 1e-6;
        for _ in 0..100 {
            let p = dirichlet_ones(5, &mut rng);
            let mut grad = vec![0.0; 5];
            obj.value_and_gradient(&p, &mut grad);
            for j in 0..5 {
                let mut up = p.clone();
                let mut dn = p.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (obj.value(&up) - obj.value(&dn)) / (2.0 * h);
                let scale = grad[j].abs().max(fd.abs()).max(1e-8);
                assert!((grad[j] - fd).abs() / scale < 1e-4, "coord {j}: {} vs {fd}", grad[j]);
            }
        }
    }

    #[test]
    fn recovers_known_discrete_law() {
        let truth = DiscreteDistribution::new(
            vec![-1.0, 0.0, 0.5, 2.0, 3.0],
            vec![0.1, 0.3, 0.2, 0.25, 0.15],
        )
        .unwrap();
        let grid = TGrid::new(3.0, 121).unwrap();
        let target = target_from(&truth, &grid, 100);
        let mut x: Vec<f64> = truth.x().to_vec();
        x.extend((0..15).map(|k| -1.9 + 0.37 * k as f64));
        x.sort_by(|a, b| a.total_cmp(b));
        x.dedup();
        let cfg = FitConfig {
            lambda: Some(0.0),
            max_iters: 20_000,
            tol_objective: 1e-14,
            ..FitConfig::default()
        };
        let fit = fit_on_support(&target, x, &cfg, 3).unwrap();
        assert!(fit.t_value < 1e-6, "T = {}", fit.t_value);
    }

    #[test]
    fn single_support_point_is_immediate() {
        let (est, _) = sample_target();
        let cfg = FitConfig {
            lambda: Some(0.0),
            ..FitConfig::default()
        };
        let fit = fit_on_support(&est, vec![1.0], &cfg, 0).unwrap();
        assert_eq!(fit.distribution.p(), &[1.0]);
        assert_eq!(fit.iterations, 0);
    }

    #[test]
    fn fits_are_deterministic_and_beat_uniform() {
        let w: Vec<f64> = (0..60).map(|k| ((k * 37) % 60) as f64 / 20.0 + (k as f64 * 0.3).sin()).collect();
        let obs = ObservationSet::equally_weighted(w, vec![0.0; 60]).unwrap();
        let grid = TGrid::for_observations(&obs).unwrap();
        let est = crate::ecf::wepf(&obs, &grid).unwrap();
        let cfg = FitConfig::default();
        let a = fit_discrete(&est, &obs, &cfg, 12).unwrap();
        let b = fit_discrete(&est, &obs, &cfg, 12).unwrap();
        assert_eq!(a.distribution, b.distribution);
        let x = a.distribution.x();
        let uniform = vec![1.0 / x.len() as f64; x.len()];
        assert!(a.t_value <= objective_t(&uniform, x, &est));
        let total: f64 = a.distribution.p().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (est, x) = sample_target();
        let cfg = FitConfig {
            starts: 0,
            ..FitConfig::default()
        };
        assert!(fit_on_support(&est, x, &cfg, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fitted_masses_lie_on_simplex(seed in 0u64..1000, lambda in 0.0f64..0.1) {
            let (est, x) = sample_target();
            let cfg = FitConfig { lambda: Some(lambda), starts: 3, ..FitConfig::default() };
            let fit = fit_on_support(&est, x.clone(), &cfg, seed).unwrap();
            let p = fit.distribution.p();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let uniform = vec![0.2; 5];
            let obj = PhaseObjective::new(&est, &x, lambda);
            prop_assert!(fit.objective <= obj.value(&uniform) + 1e-12);
        }
    }
}
