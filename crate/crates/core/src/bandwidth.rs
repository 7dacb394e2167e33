//! Bandwidth selection by minimizing a Normal-Laplace approximation of the
//! asymptotic MISE, and the exact three-term MISE for diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::density::kernel_ft;
use crate::error::{invalid, Result};

pub const GRID_POINTS: usize = 200;
/// Gaussian factor support, in units of `1/sigma_x`.
pub const GAUSSIAN_SUPPORT: f64 = 8.0;
const KERNEL_PANELS: usize = 256;
const TAIL_PANELS: usize = 128;
const GOLDEN_TOL: f64 = 1e-7;

/// Composite Simpson rule on `[a, b]` with an even number of panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let panels = panels + panels % 2;
    let dx = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(a + k as f64 * dx);
    }
    acc * dx / 3.0
}

/// Inputs of the approximate AMISE with the per-observation sums precomputed.
#[derive(Debug, Clone)]
pub struct Amise {
    sigma_x_sq: f64,
    half_sigma_sq: Vec<f64>,
    q: Vec<f64>,
    sum_q_sq: f64,
}

impl Amise {
    pub fn new(sigma_x_sq: f64, sigma_sq: &[f64], q: &[f64]) -> Result<Self> {
        if !(sigma_x_sq > 0.0 && sigma_x_sq.is_finite()) {
            return Err(invalid(format!("sigma_x^2 must be positive, got {sigma_x_sq}")));
        }
        if sigma_sq.len() != q.len() || q.is_empty() {
            return Err(invalid("sigma^2 and weights must be non-empty and of equal length"));
        }
        if sigma_sq.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("error variances must be non-negative"));
        }
        Ok(Self {
            sigma_x_sq,
            half_sigma_sq: sigma_sq.iter().map(|s| 0.5 * s).collect(),
            q: q.to_vec(),
            sum_q_sq: q.iter().map(|v| v * v).sum(),
        })
    }

    fn laplace_mix(&self, t: f64) -> f64 {
        let t2 = t * t;
        self.q
            .iter()
            .zip(&self.half_sigma_sq)
            .map(|(q, a)| q / (1.0 + a * t2))
            .sum()
    }

    fn upper(&self, h: f64) -> f64 {
        (1.0 / h).max(GAUSSIAN_SUPPORT / self.sigma_x_sq.sqrt())
    }

    /// Squared-bias term, `(2 pi)^{-1} \int e^{-sigma_x^2 t^2} (K^ft(ht) - 1)^2 dt`.
    pub fn bias_term(&self, h: f64) -> f64 {
        let inner = |t: f64| {
            let d = kernel_ft(t, h) - 1.0;
            (-self.sigma_x_sq * t * t).exp() * d * d
        };
        let kernel_end = 1.0 / h;
        let upper = self.upper(h);
        let near = simpson(inner, 0.0, kernel_end.min(upper), KERNEL_PANELS);
        let far = simpson(|t| (-self.sigma_x_sq * t * t).exp(), kernel_end, upper, TAIL_PANELS);
        (near + far) / PI
    }

    /// Variance term with Laplace error CFs.
    pub fn variance_term(&self, h: f64) -> f64 {
        let integrand = |t: f64| {
            let k = kernel_ft(t, h);
            let d = self.laplace_mix(t);
            k * k * self.sum_q_sq / (d * d)
        };
        simpson(integrand, 0.0, 1.0 / h, KERNEL_PANELS) / PI
    }

    pub fn value(&self, h: f64) -> f64 {
        self.bias_term(h) + self.variance_term(h)
    }
}

pub fn amise_objective(h: f64, sigma_x_sq: f64, sigma_sq: &[f64], q: &[f64]) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("bandwidth must be positive, got {h}")));
    }
    Ok(Amise::new(sigma_x_sq, sigma_sq, q)?.value(h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSearch {
    pub h_grid: Vec<f64>,
    pub objective: Vec<f64>,
    pub h_star: f64,
    pub value: f64,
    pub widened: bool,
    /// The minimizer sat on the grid edge even after widening.
    pub on_boundary: bool,
}

/// Search range used when none is given: `[0.01, 10] * sigma_x * n_eff^{-1/5}`.
pub fn default_range(sigma_x_sq: f64, q: &[f64]) -> (f64, f64) {
    let n_eff = 1.0 / q.iter().map(|v| v * v).sum::<f64>();
    let scale = sigma_x_sq.sqrt() * n_eff.powf(-0.2);
    (0.01 * scale, 10.0 * scale)
}

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..GRID_POINTS)
        .map(|k| (a + (b - a) * k as f64 / (GRID_POINTS - 1) as f64).exp())
        .collect()
}

fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let g = |u: f64| f(u.exp());
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = g(d);
        }
    }
    let u = 0.5 * (a + b);
    (u.exp(), g(u))
}

fn grid_search(amise: &Amise, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let h_grid = log_grid(lo, hi);
    let objective: Vec<f64> = h_grid.iter().map(|&h| amise.value(h)).collect();
    let best = objective
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v < objective[best] { k } else { best });
    (h_grid, objective, best)
}

/// Minimizer of the approximate AMISE over a log grid, refined by golden
/// section between the neighbours of the grid minimizer.
pub fn select_bandwidth(
    sigma_x_sq: f64,
    sigma_sq: &[f64],
    q: &[f64],
    range: Option<(f64, f64)>,
) -> Result<BandwidthSearch> {
    let amise = Amise::new(sigma_x_sq, sigma_sq, q)?;
    let (mut lo, mut hi) = range.unwrap_or_else(|| default_range(sigma_x_sq, q));
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!("invalid bandwidth range [{lo}, {hi}]")));
    }
    let (mut h_grid, mut objective, mut best) = grid_search(&amise, lo, hi);
    let mut widened = false;
    if best == 0 || best == GRID_POINTS - 1 {
        widened = true;
        if best == 0 {
            lo /= 10.0;
        } else {
            hi *= 10.0;
        }
        (h_grid, objective, best) = grid_search(&amise, lo, hi);
    }
    let on_boundary = best == 0 || best == GRID_POINTS - 1;
    if on_boundary {
        log::warn!(
            "bandwidth minimizer on the search boundary h = {:.4e} after widening",
            h_grid[best]
        );
        return Ok(BandwidthSearch {
            h_star: h_grid[best],
            value: objective[best],
            h_grid,
            objective,
            widened,
            on_boundary,
        });
    }
    let (h_star, value) = golden_section(|h| amise.value(h), h_grid[best - 1], h_grid[best + 1]);
    let (h_star, value) = if value <= objective[best] {
        (h_star, value)
    } else {
        (h_grid[best], objective[best])
    };
    Ok(BandwidthSearch {
        h_grid,
        objective,
        h_star,
        value,
        widened,
        on_boundary,
    })
}

/// The three terms of the exact MISE of the known-error estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiseTerms {
    pub bias: f64,
    pub variance: f64,
    /// Subtracted term, neglected by the asymptotic form.
    pub correction: f64,
}

impl MiseTerms {
    pub fn total(&self) -> f64 {
        self.bias + self.variance - self.correction
    }

    pub fn amise(&self) -> f64 {
        self.bias + self.variance
    }

    /// `|correction| / (bias + variance)`.
    pub fn correction_share(&self) -> f64 {
        self.correction.abs() / self.amise()
    }
}

/// Exact MISE of the known-error estimator for the true CF of `X` and the
/// error CFs `err_cf(j, s)`. The bias integral runs over `[-t_max, t_max]`.
pub fn exact_mise<F, G>(h: f64, cf_x: F, err_cf: G, q: &[f64], sigma: &[f64], t_max: f64) -> Result<MiseTerms>
where
    F: Fn(f64) -> Complex64,
    G: Fn(usize, f64) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("bandwidth must be positive, got {h}")));
    }
    if q.len() != sigma.len() || q.is_empty() {
        return Err(invalid("weights and error SDs must be non-empty and of equal length"));
    }
    let panels = 4 * KERNEL_PANELS;
    let mod_sq = |t: f64| cf_x(t).norm_sqr();
    let kernel_end = (1.0 / h).min(t_max);
    let bias_near = simpson(
        |t| {
            let d = kernel_ft(t, h) - 1.0;
            mod_sq(t) * d * d
        },
        0.0,
        kernel_end,
        panels,
    );
    let far_panels = panels.max(((t_max - kernel_end) / 1e-3).ceil() as usize);
    let bias_far = simpson(mod_sq, kernel_end, t_max, far_panels);
    let sum_q_sq: f64 = q.iter().map(|v| v * v).sum();
    let sums = |t: f64| {
        let mut first = 0.0;
        let mut second = 0.0;
        for (j, (&qj, &sj)) in q.iter().zip(sigma).enumerate() {
            let c = err_cf(j, sj * t);
            first += qj * c;
            second += qj * qj * c * c;
        }
        (first, second)
    };
    let variance = simpson(
        |t| {
            let k = kernel_ft(t, h);
            let (d, _) = sums(t);
            k * k * sum_q_sq / (d * d)
        },
        0.0,
        1.0 / h,
        panels,
    );
    let correction = simpson(
        |t| {
            let k = kernel_ft(t, h);
            let (d, s) = sums(t);
            mod_sq(t) * k * k * s / (d * d)
        },
        0.0,
        1.0 / h,
        panels,
    );
    Ok(MiseTerms {
        bias: (bias_near + bias_far) / PI,
        variance: variance / PI,
        correction: correction / PI,
    })
}
