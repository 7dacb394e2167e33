//! Density estimates by Fourier inversion: the phase-fit deconvolution
//! estimator with a ridged tail, the weighted known-error estimator, a naive
//! kernel estimator, and the `log(x - 50)` back-transform.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ecf::{ecf_non_negative, PhaseEstimate};
use crate::error::{invalid, Error, Result};
use crate::model::ObservationSet;
use crate::phasefit::DiscreteDistribution;
use crate::quad::{interpolate, linspace, trapezoid, trapezoid_weights};

pub const DEFAULT_X_POINTS: usize = 401;
/// Denominators of the known-error estimator are floored here.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;
const MIN_INVERSION_POINTS: usize = 513;
const MAX_INVERSION_POINTS: usize = 200_001;
/// Largest phase advance `dt * span` allowed per quadrature step.
const MAX_PHASE_STEP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "epf")]
    PhaseEpf,
    #[serde(rename = "wepf")]
    PhaseWepf,
    #[serde(rename = "known-error")]
    KnownErrorBaseline,
    #[serde(rename = "kde")]
    NaiveKde,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::PhaseEpf => "epf",
            Method::PhaseWepf => "wepf",
            Method::KnownErrorBaseline => "known-error",
            Method::NaiveKde => "kde",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epf" => Ok(Method::PhaseEpf),
            "wepf" => Ok(Method::PhaseWepf),
            "known-error" => Ok(Method::KnownErrorBaseline),
            "kde" => Ok(Method::NaiveKde),
            other => Err(invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    #[serde(rename = "grid")]
    pub xs: Vec<f64>,
    #[serde(rename = "values")]
    pub fs: Vec<f64>,
    pub bandwidth: f64,
    pub method: Method,
    pub t_star: Option<f64>,
    pub normalized: bool,
    /// Values before truncation and renormalization.
    #[serde(skip)]
    pub raw: Vec<f64>,
    /// Number of frequencies where a denominator was floored.
    #[serde(skip)]
    pub clamped: usize,
}

impl DensityEstimate {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.xs, &self.fs)
    }

    pub fn mean(&self) -> f64 {
        let m: Vec<f64> = self.xs.iter().zip(&self.fs).map(|(x, f)| x * f).collect();
        trapezoid(&self.xs, &m) / self.integral()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let m: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.fs)
            .map(|(x, f)| (x - mu) * (x - mu) * f)
            .collect();
        trapezoid(&self.xs, &m) / self.integral()
    }

    pub fn value_at(&self, x: f64) -> f64 {
        interpolate(&self.xs, &self.fs, x)
    }
}

/// Fourier transform of the smoothing kernel, `(1 - (ht)^2)^3` on `|ht| <= 1`.
pub fn kernel_ft(t: f64, h: f64) -> f64 {
    let u = h * t;
    if u.abs() > 1.0 {
        0.0
    } else {
        let v = 1.0 - u * u;
        v * v * v
    }
}

/// 401 points spanning `[min W - 2 SD, max W + 2 SD]`.
pub fn default_x_grid(obs: &ObservationSet) -> Vec<f64> {
    let (lo, hi) = range(obs.w());
    let sd = obs.sd();
    linspace(lo - 2.0 * sd, hi + 2.0 * sd, DEFAULT_X_POINTS)
}

fn range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// The CF used for inversion: the fitted discrete CF up to `t*`, and beyond it
/// the weighted ECF times the reciprocal of a Laplace CF whose variance is the
/// weighted mean error variance. Negative `t` follow by Hermitian symmetry.
pub fn ridged_cf(fit: &DiscreteDistribution, est: &PhaseEstimate, obs: &ObservationSet, t: f64) -> Complex64 {
    let value = ridged_cf_non_negative(fit, est.t_star.value, obs, t.abs());
    if t < 0.0 {
        value.conj()
    } else {
        value
    }
}

fn ridged_cf_non_negative(fit: &DiscreteDistribution, t_star: f64, obs: &ObservationSet, t: f64) -> Complex64 {
    if t <= t_star {
        fit.cf(t)
    } else {
        let ecf: Complex64 = obs
            .w()
            .iter()
            .zip(obs.q())
            .map(|(&w, &q)| q * Complex64::new(0.0, t * w).exp())
            .sum();
        ecf * (1.0 + 0.5 * obs.weighted_error_variance() * t * t)
    }
}

/// Frequencies `[0, 1/h]` fine enough that `dt * span` stays small.
struct InversionGrid {
    ts: Vec<f64>,
    dt: f64,
}

impl InversionGrid {
    fn new(h: f64, span: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("bandwidth must be positive, got {h}")));
        }
        let t_max = 1.0 / h;
        let wanted = (t_max * span.max(1e-12) / MAX_PHASE_STEP).ceil() as usize + 1;
        let count = wanted.clamp(MIN_INVERSION_POINTS, MAX_INVERSION_POINTS);
        let dt = t_max / (count - 1) as f64;
        Ok(Self {
            ts: (0..count).map(|k| k as f64 * dt).collect(),
            dt,
        })
    }
}

/// `(2 pi)^{-1} \int e^{-itx} g(t) dt` for Hermitian `g` given on `t >= 0`.
fn invert_half(grid: &InversionGrid, g: &[Complex64], xs: &[f64]) -> Vec<f64> {
    const REANCHOR: usize = 32;
    let weights = trapezoid_weights(g.len(), grid.dt);
    let wg: Vec<Complex64> = g.iter().zip(&weights).map(|(g, w)| g * w).collect();
    xs.iter()
        .map(|&x| {
            let (s, c) = (-grid.dt * x).sin_cos();
            let rot = Complex64::new(c, s);
            let mut acc = 0.0;
            let mut start = 0;
            while start < wg.len() {
                let (s, c) = (-grid.ts[start] * x).sin_cos();
                let mut cur = Complex64::new(c, s);
                let end = (start + REANCHOR).min(wg.len());
                for v in &wg[start..end] {
                    acc += (cur * v).re;
                    cur *= rot;
                }
                start = end;
            }
            acc / PI
        })
        .collect()
}

/// Clip negative values and rescale to unit trapezoid mass on `xs`.
pub fn post_process(xs: &[f64], raw: &[f64]) -> Result<Vec<f64>> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            message: "non-finite density value".into(),
            iteration: 0,
            step: 0.0,
        });
    }
    let clipped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let mass = trapezoid(xs, &clipped);
    if !(mass > 0.0) {
        return Err(Error::NumericalFailure {
            message: "density estimate has no positive mass on the grid".into(),
            iteration: 0,
            step: 0.0,
        });
    }
    Ok(clipped.into_iter().map(|v| v / mass).collect())
}

fn check_grid(xs: &[f64]) -> Result<()> {
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
        return Err(invalid("x grid must be finite, increasing and have at least 2 points"));
    }
    Ok(())
}

fn span(xs: &[f64], points: &[f64]) -> f64 {
    let (xl, xh) = range(xs);
    let (pl, ph) = range(points);
    (xh - pl).abs().max((ph - xl).abs())
}

/// Phase-fit deconvolution estimate at `xs` with bandwidth `h`.
pub fn invert_to_density(
    fit: &DiscreteDistribution,
    est: &PhaseEstimate,
    obs: &ObservationSet,
    h: f64,
    xs: &[f64],
    method: Method,
) -> Result<DensityEstimate> {
    check_grid(xs)?;
    let mut points = obs.w().to_vec();
    points.extend_from_slice(fit.x());
    let grid = InversionGrid::new(h, span(xs, &points))?;
    let t_star = est.t_star.value;
    let sigma_l_sq = obs.weighted_error_variance();

    let ecf = ecf_non_negative(obs.w(), obs.q(), grid.dt, grid.ts.len());
    let g: Vec<Complex64> = grid
        .ts
        .iter()
        .zip(&ecf)
        .map(|(&t, &phi)| {
            let smooth = kernel_ft(t, h);
            if smooth == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let tilde = if t <= t_star {
                fit.cf(t)
            } else {
                phi * (1.0 + 0.5 * sigma_l_sq * t * t)
            };
            tilde * smooth
        })
        .collect();
    let raw = invert_half(&grid, &g, xs);
    let fs = post_process(xs, &raw)?;
    Ok(DensityEstimate {
        xs: xs.to_vec(),
        fs,
        bandwidth: h,
        method,
        t_star: Some(t_star),
        normalized: true,
        raw,
        clamped: 0,
    })
}

/// Kernel estimate from the weighted ECF with no deconvolution, i.e. the
/// inversion above with the CF left untouched. Used as a zero-noise check.
pub fn smoothed_ecf_density(obs: &ObservationSet, h: f64, xs: &[f64]) -> Result<DensityEstimate> {
    known_error_estimator(obs, |_, _| 1.0, h, xs)
}

/// Weighted deconvolution estimate for known error CFs:
/// `K^ft(ht) phi_W(t|q) / sum_j q_j phi_eps_j(sigma_j t)`, inverted.
///
/// `err_cf(j, s)` is the CF of the j-th unit-variance error at `s`.
pub fn known_error_estimator<F>(obs: &ObservationSet, err_cf: F, h: f64, xs: &[f64]) -> Result<DensityEstimate>
where
    F: Fn(usize, f64) -> f64,
{
    check_grid(xs)?;
    let grid = InversionGrid::new(h, span(xs, obs.w()))?;
    let ecf = ecf_non_negative(obs.w(), obs.q(), grid.dt, grid.ts.len());
    let mut clamped = 0;
    let g: Vec<Complex64> = grid
        .ts
        .iter()
        .zip(&ecf)
        .map(|(&t, &phi)| {
            let smooth = kernel_ft(t, h);
            if smooth == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut denom: f64 = obs
                .q()
                .iter()
                .zip(obs.sigma())
                .enumerate()
                .map(|(j, (&q, &s))| q * err_cf(j, s * t))
                .sum();
            if denom < DENOMINATOR_FLOOR {
                denom = DENOMINATOR_FLOOR;
                clamped += 1;
            }
            phi * (smooth / denom)
        })
        .collect();
    let raw = invert_half(&grid, &g, xs);
    let fs = post_process(xs, &raw)?;
    Ok(DensityEstimate {
        xs: xs.to_vec(),
        fs,
        bandwidth: h,
        method: Method::KnownErrorBaseline,
        t_star: None,
        normalized: true,
        raw,
        clamped,
    })
}

/// Normal-reference bandwidth `(4/3)^{1/5} SD n^{-1/5}`.
pub fn normal_reference_bandwidth(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    (4.0f64 / 3.0).powf(0.2) * crate::quad::sample_variance(w).sqrt() * n.powf(-0.2)
}

/// Gaussian kernel estimate that ignores measurement error.
pub fn naive_kde(w: &[f64], h: f64, xs: &[f64]) -> Result<DensityEstimate> {
    check_grid(xs)?;
    if w.is_empty() || !(h > 0.0 && h.is_finite()) {
        return Err(invalid("naive KDE needs data and a positive bandwidth"));
    }
    let norm = 1.0 / (w.len() as f64 * h * (2.0 * PI).sqrt());
    let raw: Vec<f64> = xs
        .iter()
        .map(|&x| {
            w.iter()
                .map(|&wi| {
                    let z = (x - wi) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    let fs = post_process(xs, &raw)?;
    Ok(DensityEstimate {
        xs: xs.to_vec(),
        fs,
        bandwidth: h,
        method: Method::NaiveKde,
        t_star: None,
        normalized: true,
        raw,
        clamped: 0,
    })
}

/// Density of `X = 50 + exp(Y)` from an estimate on the `Y` scale:
/// `f_X(x) = f_Y(log(x - 50)) / (x - 50)` for `x > 50`.
pub fn back_transform_log50(est: &DensityEstimate, xs: &[f64]) -> Result<DensityEstimate> {
    if let Some(bad) = xs.iter().find(|&&x| !(x > 50.0)) {
        return Err(invalid(format!("back-transform grid must exceed 50, found {bad}")));
    }
    check_grid(xs)?;
    let fs: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let shifted = x - 50.0;
            est.value_at(shifted.ln()) / shifted
        })
        .collect();
    Ok(DensityEstimate {
        xs: xs.to_vec(),
        raw: fs.clone(),
        fs,
        bandwidth: est.bandwidth,
        method: est.method,
        t_star: est.t_star,
        normalized: false,
        clamped: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecf::{wepf, TGrid};
    use crate::model::ErrorLaw;

    fn obs(w: Vec<f64>, sigma: f64) -> ObservationSet {
        let n = w.len();
        ObservationSet::equally_weighted(w, vec![sigma; n]).unwrap()
    }

    /// `K(u) = pi^{-1} \int_0^1 cos(s u) (1 - s^2)^3 ds` by composite Simpson.
    fn kernel_oracle(u: f64) -> f64 {
        let n = 20_000;
        let ds = 1.0 / n as f64;
        let f = |s: f64| (s * u).cos() * (1.0 - s * s).powi(3);
        let mut acc = f(0.0) + f(1.0);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * ds);
        }
        acc * ds / 3.0 / PI
    }

    fn sample_w() -> Vec<f64> {
        vec![-0.8, -0.1, 0.3, 0.35, 0.9, 1.4, 2.2, 2.3, 3.1, 0.0]
    }

    #[test]
    fn kernel_ft_values() {
        assert_eq!(kernel_ft(0.0, 0.7), 1.0);
        assert_eq!(kernel_ft(1.0 / 0.7, 0.7), 0.0);
        assert_eq!(kernel_ft(2.0, 0.7), 0.0);
        assert!((kernel_ft(0.5, 1.0) - 0.421875).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_reduces_to_kernel_density_estimate() {
        let w = sample_w();
        let o = obs(w.clone(), 0.0);
        let h = 0.4;
        let xs = linspace(-3.0, 5.0, 81);
        let est = smoothed_ecf_density(&o, h, &xs).unwrap();
        let baseline = known_error_estimator(&o, |_, s| ErrorLaw::Normal.cf(s), h, &xs).unwrap();
        let n = w.len() as f64;
        for (k, &x) in xs.iter().enumerate() {
            let kde: f64 = w.iter().map(|&wi| kernel_oracle((x - wi) / h)).sum::<f64>() / (n * h);
            assert!((est.raw[k] - kde).abs() < 1e-6, "x={x}: {} vs {kde}", est.raw[k]);
            assert!((baseline.raw[k] - kde).abs() < 1e-6);
        }
        assert_eq!(baseline.clamped, 0);
    }

    #[test]
    fn phase_estimator_with_empirical_fit_reduces_to_kde() {
        // a "fit" that reproduces the ECF exactly: masses q on the observations
        let w = sample_w();
        let o = obs(w.clone(), 0.0);
        let mut pairs: Vec<(f64, f64)> = w.iter().map(|&x| (x, 0.1)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let fit = DiscreteDistribution::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
        .unwrap();
        let grid = TGrid::for_observations(&o).unwrap();
        let est = wepf(&o, &grid).unwrap();
        let h = 0.4;
        let xs = linspace(-3.0, 5.0, 81);
        let dens = invert_to_density(&fit, &est, &o, h, &xs, Method::PhaseEpf).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            let kde: f64 = w.iter().map(|&wi| kernel_oracle((x - wi) / h)).sum::<f64>() / (w.len() as f64 * h);
            assert!((dens.raw[k] - kde).abs() < 1e-6);
        }
        assert!((dens.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn point_mass_fit_concentrates_at_its_location() {
        let o = obs(sample_w(), 0.0);
        let grid = TGrid::for_observations(&o).unwrap();
        let est = wepf(&o, &grid).unwrap();
        let fit = DiscreteDistribution::point_mass(1.23);
        let xs = linspace(-3.0, 5.0, 401);
        // h large enough that 1/h stays below t*, so only the fitted branch is used
        let h = 1.5 / est.t_star.value.min(1.0);
        let dens = invert_to_density(&fit, &est, &o, h, &xs, Method::PhaseWepf).unwrap();
        let (arg, _) = dens
            .fs
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (k, &f)| if f > acc.1 { (k, f) } else { acc });
        assert!((xs[arg] - 1.23).abs() <= xs[1] - xs[0]);
    }

    #[test]
    fn ridged_cf_branches() {
        let o = obs(sample_w(), 0.0);
        let grid = TGrid::for_observations(&o).unwrap();
        let est = wepf(&o, &grid).unwrap();
        let fit = DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!((ridged_cf(&fit, &est, &o, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // zero error variance: the ridge is the ECF itself
        let t = est.t_star.value + 0.5;
        let direct: Complex64 = o
            .w()
            .iter()
            .map(|&w| 0.1 * Complex64::new(0.0, t * w).exp())
            .sum();
        assert!((ridged_cf(&fit, &est, &o, t) - direct).norm() < 1e-12);
        assert!((ridged_cf(&fit, &est, &o, -t) - direct.conj()).norm() < 1e-12);

        let noisy = obs(sample_w(), 0.5);
        let r = ridged_cf(&fit, &est, &noisy, t);
        assert!((r - direct * (1.0 + 0.125 * t * t)).norm() < 1e-12);
    }

    #[test]
    fn homoscedastic_normal_matches_classical_deconvolution_kernel() {
        // classical estimator: (nh)^{-1} sum_j L((x - W_j)/h), with
        // L(u) = pi^{-1} \int_0^1 cos(su) (1-s^2)^3 exp(sigma^2 s^2 / (2 h^2)) ds
        let mut rng = crate::model::stream_rng(3, 0);
        let w: Vec<f64> = (0..50)
            .map(|_| crate::model::TrueDensity::Mixture2.sample(&mut rng) + 0.3 * ErrorLaw::Normal.sample(&mut rng))
            .collect();
        let sigma = 0.3;
        let h = 0.35;
        let o = obs(w.clone(), sigma);
        let xs = linspace(-1.0, 5.0, 31);
        let est = known_error_estimator(&o, |_, s| ErrorLaw::Normal.cf(s), h, &xs).unwrap();
        let l = |u: f64| {
            let n = 20_000;
            let ds = 1.0 / n as f64;
            let f = |s: f64| (s * u).cos() * (1.0 - s * s).powi(3) * (sigma * sigma * s * s / (2.0 * h * h)).exp();
            let mut acc = f(0.0) + f(1.0);
            for k in 1..n {
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * ds);
            }
            acc * ds / 3.0 / PI
        };
        for (k, &x) in xs.iter().enumerate() {
            let classical: f64 = w.iter().map(|&wi| l((x - wi) / h)).sum::<f64>() / (50.0 * h);
            assert!((est.raw[k] - classical).abs() < 1e-8, "x={x}: {} vs {classical}", est.raw[k]);
        }
    }

    #[test]
    fn laplace_errors_never_clamp() {
        let o = obs(sample_w(), 1.0);
        let xs = linspace(-3.0, 5.0, 41);
        let est = known_error_estimator(&o, |_, s| ErrorLaw::Laplace.cf(s), 0.05, &xs).unwrap();
        assert_eq!(est.clamped, 0);
        let normal = known_error_estimator(&o, |_, s| ErrorLaw::Normal.cf(s), 0.05, &xs).unwrap();
        assert!(normal.clamped > 0);
    }

    #[test]
    fn outputs_are_normalized_and_nonnegative() {
        let o = obs(sample_w(), 0.2);
        let xs = default_x_grid(&o);
        assert_eq!(xs.len(), 401);
        for h in [0.1, 0.3, 1.0] {
            let est = known_error_estimator(&o, |_, s| ErrorLaw::Normal.cf(s), h, &xs).unwrap();
            assert!(est.fs.iter().all(|&f| f >= 0.0 && f.is_finite()));
            assert!((est.integral() - 1.0).abs() < 1e-3);
        }
        let kde = naive_kde(o.w(), normal_reference_bandwidth(o.w()), &xs).unwrap();
        assert!((kde.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn translation_equivariance() {
        let w = sample_w();
        let c = 1.75;
        let h = 0.5;
        let xs = linspace(-3.0, 5.0, 81);
        let shifted_xs: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let a = smoothed_ecf_density(&obs(w.clone(), 0.3), h, &xs).unwrap();
        let b = smoothed_ecf_density(&obs(w.iter().map(|x| x + c).collect(), 0.3), h, &shifted_xs).unwrap();
        for (u, v) in a.raw.iter().zip(&b.raw) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn variance_grows_with_bandwidth() {
        let o = obs(sample_w(), 0.0);
        let xs = linspace(-10.0, 12.0, 401);
        let mut last = 0.0;
        for h in [0.05, 0.2, 0.5, 1.0, 3.0, 10.0, 100.0, 1000.0] {
            let v = smoothed_ecf_density(&o, h, &xs).unwrap().variance();
            assert!(v > last, "h = {h}: {v} <= {last}");
            last = v;
        }
    }

    #[test]
    fn back_transform_substitution_and_mass() {
        let ys = linspace(-6.0, 6.0, 4001);
        let fs: Vec<f64> = ys.iter().map(|y| (-0.5 * y * y).exp() / (2.0 * PI).sqrt()).collect();
        let est = DensityEstimate {
            xs: ys.clone(),
            raw: fs.clone(),
            fs,
            bandwidth: 0.1,
            method: Method::PhaseWepf,
            t_star: None,
            normalized: true,
            clamped: 0,
        };
        let at51 = back_transform_log50(&est, &[51.0, 52.0]).unwrap();
        assert!((at51.fs[0] - est.value_at(0.0)).abs() < 1e-15);

        let xs: Vec<f64> = [50.5, 51.0, 52.0, 55.0, 60.0].to_vec();
        let bt = back_transform_log50(&est, &xs).unwrap();
        for (x, f) in xs.iter().zip(&bt.fs) {
            let y = (x - 50.0f64).ln();
            let closed = (-0.5 * y * y).exp() / ((2.0 * PI).sqrt() * (x - 50.0));
            assert!((f - closed).abs() < 1e-6, "{x}: {f} vs {closed}");
        }

        let fine: Vec<f64> = (1..=400_000).map(|k| 50.0 + 0.0025 * k as f64 / 4.0).collect();
        let bt = back_transform_log50(&est, &fine).unwrap();
        assert!((bt.integral() - 1.0).abs() < 2e-2);

        assert!(back_transform_log50(&est, &[50.0, 51.0]).is_err());
    }
}
