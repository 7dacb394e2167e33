//! Weighted empirical characteristic and phase functions on a symmetric
//! frequency grid, the `t*` cutoff, and the asymptotic-variance diagnostic.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::ObservationSet;

/// Moduli below this are treated as zero when forming the phase.
pub const EXCLUSION_MODULUS: f64 = 1e-12;
pub const DEFAULT_GRID_POINTS: usize = 1025;
/// Default half-width of the grid, in units of `1 / SD(W)`.
pub const DEFAULT_T_MAX_SDS: f64 = 40.0;

/// Symmetric uniform grid on `[-t_max, t_max]` with an odd point count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TGrid {
    t_max: f64,
    values: Vec<f64>,
}

impl TGrid {
    pub fn new(t_max: f64, count: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(invalid(format!("t_max must be positive, got {t_max}")));
        }
        if count < 3 || count % 2 == 0 {
            return Err(invalid(format!("grid count must be odd and >= 3, got {count}")));
        }
        let half = count / 2;
        let step = t_max / half as f64;
        let mut values = vec![0.0; count];
        for k in 1..=half {
            let t = if k == half { t_max } else { step * k as f64 };
            values[half + k] = t;
            values[half - k] = -t;
        }
        Ok(Self { t_max, values })
    }

    /// The default grid for a sample: 1025 points out to `40 / SD(W)`.
    pub fn for_observations(obs: &ObservationSet) -> Result<Self> {
        Self::for_sd(obs.sd(), DEFAULT_GRID_POINTS)
    }

    pub fn for_sd(sd: f64, count: usize) -> Result<Self> {
        if !(sd.is_finite() && sd > 0.0) {
            return Err(invalid(format!("sample SD must be positive, got {sd}")));
        }
        Self::new(DEFAULT_T_MAX_SDS / sd, count)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.t_max / self.center() as f64
    }

    /// Index of `t = 0`.
    pub fn center(&self) -> usize {
        self.values.len() / 2
    }

    /// Non-negative half, starting at `t = 0`.
    pub fn non_negative(&self) -> &[f64] {
        &self.values[self.center()..]
    }
}

/// Weighted ECF `sum_j q_j exp(i t W_j)` at every grid point.
pub fn weighted_ecf(obs: &ObservationSet, grid: &TGrid) -> Result<Vec<Complex64>> {
    if obs.is_empty() {
        return Err(invalid("empty observation set"));
    }
    Ok(weighted_ecf_raw(obs.w(), obs.q(), grid))
}

/// As [`weighted_ecf`] on raw slices; `q` need not be normalized.
pub fn weighted_ecf_raw(w: &[f64], q: &[f64], grid: &TGrid) -> Vec<Complex64> {
    let half = ecf_non_negative(w, q, grid.step(), grid.center() + 1);
    mirror(&half)
}

/// ECF on `t_k = k dt`, `k = 0..len`, by rotating `exp(i dt W_j)` and
/// re-anchoring every few steps so rounding does not accumulate.
pub(crate) fn ecf_non_negative(w: &[f64], q: &[f64], dt: f64, len: usize) -> Vec<Complex64> {
    const REANCHOR: usize = 32;
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    for (&wj, &qj) in w.iter().zip(q) {
        if qj == 0.0 {
            continue;
        }
        let (s, c) = (dt * wj).sin_cos();
        let rot = Complex64::new(c, s);
        let mut start = 0;
        while start < len {
            let (s, c) = (start as f64 * dt * wj).sin_cos();
            let mut cur = Complex64::new(qj * c, qj * s);
            let end = (start + REANCHOR).min(len);
            for a in &mut acc[start..end] {
                *a += cur;
                cur *= rot;
            }
            start = end;
        }
    }
    acc
}

/// Full symmetric vector from its non-negative half using `f(-t) = conj f(t)`.
pub(crate) fn mirror(half: &[Complex64]) -> Vec<Complex64> {
    let h = half.len() - 1;
    let mut out = Vec::with_capacity(2 * h + 1);
    out.extend(half[1..].iter().rev().map(|z| z.conj()));
    out.extend_from_slice(half);
    out
}

/// The frequency cutoff: first positive grid point where `|cf| < n^{-1/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TStar {
    pub value: f64,
    /// Index into the full grid.
    pub index: usize,
    /// True when the modulus never dropped below the threshold.
    pub saturated: bool,
}

impl TStar {
    /// Number of non-negative grid points in `[0, t*]`.
    pub fn half_len(&self, grid: &TGrid) -> usize {
        self.index - grid.center() + 1
    }
}

pub fn find_t_star(cf: &[Complex64], grid: &TGrid, n: usize) -> TStar {
    let threshold = (n as f64).powf(-0.25);
    let c = grid.center();
    for k in c + 1..grid.len() {
        if cf[k].norm() < threshold {
            return TStar {
                value: grid.values()[k],
                index: k,
                saturated: false,
            };
        }
    }
    TStar {
        value: grid.t_max(),
        index: grid.len() - 1,
        saturated: true,
    }
}

/// Weighted ECF and its phase on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseEstimate {
    pub grid: TGrid,
    #[serde(skip)]
    pub cf: Vec<Complex64>,
    #[serde(skip)]
    pub phase: Vec<Complex64>,
    /// Points where `|cf|` is numerically zero; their phase is set to 0.
    pub excluded: Vec<bool>,
    pub t_star: TStar,
    pub n: usize,
}

impl PhaseEstimate {
    pub fn from_cf(cf: Vec<Complex64>, grid: TGrid, n: usize) -> Self {
        let mut phase = Vec::with_capacity(cf.len());
        let mut excluded = Vec::with_capacity(cf.len());
        for z in &cf {
            let m = z.norm();
            if m < EXCLUSION_MODULUS {
                phase.push(Complex64::new(0.0, 0.0));
                excluded.push(true);
            } else {
                phase.push(z / m);
                excluded.push(false);
            }
        }
        let t_star = find_t_star(&cf, &grid, n);
        Self {
            grid,
            cf,
            phase,
            excluded,
            t_star,
            n,
        }
    }

    /// Non-negative half of the ECF restricted to `[0, t*]`.
    pub fn cf_to_t_star(&self) -> &[Complex64] {
        &self.cf[self.grid.center()..=self.t_star.index]
    }

    pub fn t_to_t_star(&self) -> &[f64] {
        &self.grid.values()[self.grid.center()..=self.t_star.index]
    }
}

/// Weighted empirical phase function of `obs` on `grid`.
pub fn wepf(obs: &ObservationSet, grid: &TGrid) -> Result<PhaseEstimate> {
    let cf = weighted_ecf(obs, grid)?;
    Ok(PhaseEstimate::from_cf(cf, grid.clone(), obs.len()))
}

/// Asymptotic variance of the WEPF, `E|rho_hat(t) - rho(t)|^2`, at each grid
/// point. `cf_x` is the true target CF, `err_cf(k, s)` the CF of the k-th
/// unit-variance error at `s`. Points where `|cf_x| < 1e-14` are `None`.
///
/// This is the delta-method form: writing `rho_hat - rho ~ i rho Im(conj(rho) D) / |phi_W|`
/// gives a first bracket of `sum q_k^2` alone. See
/// [`wepf_asymptotic_variance_displayed`] for the variant whose first bracket
/// carries the extra `phi_eps^2 (1 - |phi_X|^2)` term.
pub fn wepf_asymptotic_variance<F, G>(
    obs: &ObservationSet,
    cf_x: F,
    err_cf: G,
    grid: &TGrid,
) -> Vec<Option<f64>>
where
    F: Fn(f64) -> Complex64,
    G: Fn(usize, f64) -> f64,
{
    asymptotic_variance_impl(obs, cf_x, err_cf, grid, false)
}

/// The asymptotic-variance expression with first bracket
/// `1 - |phi_X|^2 phi_k^2 + phi_k^2`, kept for comparison against Monte Carlo.
pub fn wepf_asymptotic_variance_displayed<F, G>(
    obs: &ObservationSet,
    cf_x: F,
    err_cf: G,
    grid: &TGrid,
) -> Vec<Option<f64>>
where
    F: Fn(f64) -> Complex64,
    G: Fn(usize, f64) -> f64,
{
    asymptotic_variance_impl(obs, cf_x, err_cf, grid, true)
}

fn asymptotic_variance_impl<F, G>(
    obs: &ObservationSet,
    cf_x: F,
    err_cf: G,
    grid: &TGrid,
    displayed: bool,
) -> Vec<Option<f64>>
where
    F: Fn(f64) -> Complex64,
    G: Fn(usize, f64) -> f64,
{
    let q = obs.q();
    let sigma = obs.sigma();
    grid.values()
        .iter()
        .map(|&t| {
            let phi = cf_x(t);
            let mod_sq = phi.norm_sqr();
            if mod_sq.sqrt() < crate::model::PHASE_EXCLUSION_MODULUS {
                return None;
            }
            let mut mix = 0.0;
            let mut first = 0.0;
            let mut second = 0.0;
            for (k, (&qk, &sk)) in q.iter().zip(sigma).enumerate() {
                let e1 = err_cf(k, sk * t);
                let e2 = err_cf(k, 2.0 * sk * t);
                mix += qk * e1;
                let bracket = if displayed {
                    1.0 - mod_sq * e1 * e1 + e1 * e1
                } else {
                    1.0
                };
                first += qk * qk * bracket;
                second += qk * qk * e2;
            }
            let psi = mix * mix;
            let cross = (phi * phi * cf_x(-2.0 * t)).re;
            Some(first / (2.0 * mod_sq * psi) - cross * second / (2.0 * mod_sq * mod_sq * psi))
        })
        .collect()
}
