//! Target distributions, measurement-error laws and the simulation designs
//! used to generate contaminated replicate data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const SCALE_MIX1: f64 = 9.5;
const SCALE_MIX2: f64 = 2.2425;

/// Phase values below this modulus are treated as undefined.
pub const PHASE_EXCLUSION_MODULUS: f64 = 1e-14;

/// Deterministic RNG for `(seed, stream)`; streams are independent so a
/// replicate's draws do not depend on how replicates are scheduled.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The three unit-variance target laws of the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrueDensity {
    /// chi-square with 3 degrees of freedom divided by sqrt(6).
    ScaledChiSq3,
    /// `(0.5 N(1, 1) + 0.5 chi2(5)) / sqrt(9.5)`.
    Mixture1,
    /// `(0.5 N(5, 0.6^2) + 0.5 N(2.5, 1)) / sqrt(2.2425)`.
    Mixture2,
}

impl TrueDensity {
    pub const ALL: [TrueDensity; 3] = [
        TrueDensity::ScaledChiSq3,
        TrueDensity::Mixture1,
        TrueDensity::Mixture2,
    ];

    fn scale(self) -> f64 {
        match self {
            TrueDensity::ScaledChiSq3 => 6f64.sqrt(),
            TrueDensity::Mixture1 => SCALE_MIX1.sqrt(),
            TrueDensity::Mixture2 => SCALE_MIX2.sqrt(),
        }
    }

    pub fn mean(self) -> f64 {
        match self {
            TrueDensity::ScaledChiSq3 => 3.0 / self.scale(),
            TrueDensity::Mixture1 => 3.0 / self.scale(),
            TrueDensity::Mixture2 => 3.75 / self.scale(),
        }
    }

    pub fn variance(self) -> f64 {
        1.0
    }

    /// An interval outside of which the density is below `1e-12`.
    pub fn effective_support(self) -> (f64, f64) {
        match self {
            TrueDensity::ScaledChiSq3 => (0.0, 30.0),
            TrueDensity::Mixture1 => (-3.0, 30.0),
            TrueDensity::Mixture2 => (-2.0, 6.0),
        }
    }

    pub fn density(self, x: f64) -> f64 {
        let s = self.scale();
        let y = s * x;
        match self {
            TrueDensity::ScaledChiSq3 => s * chi_sq_density(y, 3),
            TrueDensity::Mixture1 => {
                s * (0.5 * normal_density(y, 1.0, 1.0) + 0.5 * chi_sq_density(y, 5))
            }
            TrueDensity::Mixture2 => {
                s * (0.5 * normal_density(y, 5.0, 0.6) + 0.5 * normal_density(y, 2.5, 1.0))
            }
        }
    }

    /// Closed-form characteristic function.
    ///
    /// Chi-square factors use `exp(-k/2 * ln(1 - 2iu))`. The base has real part
    /// 1, so the principal logarithm is continuous in `u` and no branch
    /// tracking is needed.
    pub fn cf(self, t: f64) -> Complex64 {
        let u = t / self.scale();
        match self {
            TrueDensity::ScaledChiSq3 => chi_sq_cf(u, 3.0),
            TrueDensity::Mixture1 => 0.5 * normal_cf(u, 1.0, 1.0) + 0.5 * chi_sq_cf(u, 5.0),
            TrueDensity::Mixture2 => 0.5 * normal_cf(u, 5.0, 0.6) + 0.5 * normal_cf(u, 2.5, 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let s = self.scale();
        match self {
            TrueDensity::ScaledChiSq3 => chi_sq_sample(rng, 3.0) / s,
            TrueDensity::Mixture1 => {
                let y = if rng.random::<bool>() {
                    1.0 + rng.sample::<f64, _>(StandardNormal)
                } else {
                    chi_sq_sample(rng, 5.0)
                };
                y / s
            }
            TrueDensity::Mixture2 => {
                let y = if rng.random::<bool>() {
                    5.0 + 0.6 * rng.sample::<f64, _>(StandardNormal)
                } else {
                    2.5 + rng.sample::<f64, _>(StandardNormal)
                };
                y / s
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TrueDensity::ScaledChiSq3 => "chisq3",
            TrueDensity::Mixture1 => "mix1",
            TrueDensity::Mixture2 => "mix2",
        }
    }
}

impl fmt::Display for TrueDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TrueDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chisq3" | "scaled-chisq3" | "chi" => Ok(TrueDensity::ScaledChiSq3),
            "mix1" | "mixture1" => Ok(TrueDensity::Mixture1),
            "mix2" | "mixture2" => Ok(TrueDensity::Mixture2),
            other => Err(invalid(format!("unknown distribution '{other}'"))),
        }
    }
}

fn normal_density(y: f64, mu: f64, sd: f64) -> f64 {
    let z = (y - mu) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

fn chi_sq_density(y: f64, dof: u32) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    match dof {
        // Gamma(3/2) = sqrt(pi)/2, Gamma(5/2) = 3 sqrt(pi)/4
        3 => y.sqrt() * (-0.5 * y).exp() / (2.0 * PI).sqrt(),
        5 => y * y.sqrt() * (-0.5 * y).exp() / (3.0 * (2.0 * PI).sqrt()),
        _ => unreachable!("only 3 and 5 degrees of freedom are used"),
    }
}

fn normal_cf(u: f64, mu: f64, sd: f64) -> Complex64 {
    Complex64::new(-0.5 * sd * sd * u * u, mu * u).exp()
}

fn chi_sq_cf(u: f64, dof: f64) -> Complex64 {
    (-0.5 * dof * Complex64::new(1.0, -2.0 * u).ln()).exp()
}

fn chi_sq_sample<R: Rng + ?Sized>(rng: &mut R, dof: f64) -> f64 {
    ChiSquared::new(dof).expect("positive dof").sample(rng)
}

/// Phase of the true law on a grid, with points of vanishing modulus flagged.
#[derive(Debug, Clone)]
pub struct TruePhase {
    pub values: Vec<Complex64>,
    pub excluded: Vec<bool>,
}

pub fn true_density(spec: TrueDensity, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| spec.density(x)).collect()
}

pub fn true_phase(spec: TrueDensity, ts: &[f64]) -> TruePhase {
    let mut values = Vec::with_capacity(ts.len());
    let mut excluded = Vec::with_capacity(ts.len());
    for &t in ts {
        let cf = spec.cf(t);
        let modulus = cf.norm();
        if modulus < PHASE_EXCLUSION_MODULUS {
            values.push(Complex64::new(0.0, 0.0));
            excluded.push(true);
        } else {
            values.push(cf / modulus);
            excluded.push(false);
        }
    }
    TruePhase { values, excluded }
}

/// Distribution of the unit-variance error terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLaw {
    Normal,
    Laplace,
}

impl ErrorLaw {
    /// Characteristic function of the unit-variance law at `s`.
    pub fn cf(self, s: f64) -> f64 {
        match self {
            ErrorLaw::Normal => (-0.5 * s * s).exp(),
            // scale b = 1/sqrt(2) gives unit variance
            ErrorLaw::Laplace => 1.0 / (1.0 + 0.5 * s * s),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::Normal => rng.sample(StandardNormal),
            ErrorLaw::Laplace => {
                let b = std::f64::consts::FRAC_1_SQRT_2;
                let u: f64 = rng.random::<f64>() - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorLaw::Normal => "normal",
            ErrorLaw::Laplace => "laplace",
        }
    }
}

impl fmt::Display for ErrorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ErrorLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(ErrorLaw::Normal),
            "laplace" => Ok(ErrorLaw::Laplace),
            other => Err(invalid(format!("unknown error law '{other}'"))),
        }
    }
}

/// Heteroscedastic variance patterns, relative to a unit target variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceCase {
    /// `0.025` for the first half of the sample, `0.975` for the second.
    Case1,
    /// `0.25 + 0.5 i/n`.
    Case2,
    /// `0.025 + 0.95 i/n`.
    Case3,
    /// No measurement error at all.
    Zero,
}

impl VarianceCase {
    pub const PAPER: [VarianceCase; 3] = [VarianceCase::Case1, VarianceCase::Case2, VarianceCase::Case3];

    /// Error variances `sigma_i^2` for `i = 1..=n`, given the target variance.
    pub fn sigma_sq(self, n: usize, sigma_x_sq: f64) -> Result<Vec<f64>> {
        if n < 2 {
            return Err(invalid(format!("sample size must be at least 2, got {n}")));
        }
        let nf = n as f64;
        let out = match self {
            VarianceCase::Case1 => {
                if n % 2 != 0 {
                    return Err(invalid(format!("case 1 splits the sample in half; n = {n} is odd")));
                }
                (1..=n)
                    .map(|i| if i <= n / 2 { 0.025 } else { 0.975 } * sigma_x_sq)
                    .collect()
            }
            VarianceCase::Case2 => (1..=n)
                .map(|i| (0.25 + 0.5 * i as f64 / nf) * sigma_x_sq)
                .collect(),
            VarianceCase::Case3 => (1..=n)
                .map(|i| (0.025 + 0.95 * i as f64 / nf) * sigma_x_sq)
                .collect(),
            VarianceCase::Zero => vec![0.0; n],
        };
        Ok(out)
    }

    pub fn label(self) -> &'static str {
        match self {
            VarianceCase::Case1 => "1",
            VarianceCase::Case2 => "2",
            VarianceCase::Case3 => "3",
            VarianceCase::Zero => "zero",
        }
    }
}

impl fmt::Display for VarianceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for VarianceCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "case1" => Ok(VarianceCase::Case1),
            "2" | "case2" => Ok(VarianceCase::Case2),
            "3" | "case3" => Ok(VarianceCase::Case3),
            "0" | "zero" | "none" => Ok(VarianceCase::Zero),
            other => Err(invalid(format!("unknown variance case '{other}'"))),
        }
    }
}

/// Measurement-error design: law, variance pattern and replicate count `J`.
///
/// Each replicate carries variance `tau_i^2 = J sigma_i^2`, so the replicate
/// average has error variance `sigma_i^2` whatever `J` is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSpec {
    pub law: ErrorLaw,
    pub case: VarianceCase,
    pub replicates: usize,
}

impl ErrorSpec {
    pub fn new(law: ErrorLaw, case: VarianceCase, replicates: usize) -> Self {
        Self { law, case, replicates }
    }

    pub fn sigma_sq(&self, n: usize) -> Result<Vec<f64>> {
        self.case.sigma_sq(n, 1.0)
    }

    pub fn tau_sq(&self, n: usize) -> Result<Vec<f64>> {
        let j = self.replicates as f64;
        Ok(self.sigma_sq(n)?.into_iter().map(|s| j * s).collect())
    }
}

/// Raw replicate measurements, one row per subject. Rows may have unequal
/// lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateDataset {
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ReplicateDataset {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(invalid("ids and rows differ in length"));
        }
        if rows.len() < 2 {
            return Err(invalid(format!("need at least 2 subjects, got {}", rows.len())));
        }
        for (id, row) in ids.iter().zip(&rows) {
            if row.is_empty() {
                return Err(Error::InsufficientReplicates { id: id.clone(), found: 0 });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidRow {
                    id: id.clone(),
                    message: "non-finite measurement".into(),
                });
            }
        }
        Ok(Self { ids, rows })
    }

    /// Rows labelled `0..n`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(ids, rows)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn total_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }
}

/// Collapsed observations `W_i` with error SDs `sigma_i` and weights `q_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    w: Vec<f64>,
    sigma: Vec<f64>,
    q: Vec<f64>,
}

impl ObservationSet {
    pub fn new(w: Vec<f64>, sigma: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(invalid("empty observation set"));
        }
        if w.len() != sigma.len() || w.len() != q.len() {
            return Err(invalid(format!(
                "length mismatch: {} observations, {} sigmas, {} weights",
                w.len(),
                sigma.len(),
                q.len()
            )));
        }
        if w.iter().chain(&sigma).chain(&q).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite value in observation set"));
        }
        if sigma.iter().any(|&s| s < 0.0) {
            return Err(invalid("negative error SD"));
        }
        if q.iter().any(|&v| v < 0.0) {
            return Err(invalid("negative weight"));
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { w, sigma, q })
    }

    /// Equal weights `1/n`.
    pub fn equally_weighted(w: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let n = w.len().max(1);
        Self::new(w, sigma, vec![1.0 / n as f64; n])
    }

    /// Same observations, new weights.
    pub fn with_weights(&self, q: Vec<f64>) -> Result<Self> {
        Self::new(self.w.clone(), self.sigma.clone(), q)
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Weighted average error variance `sum q_j sigma_j^2`.
    pub fn weighted_error_variance(&self) -> f64 {
        self.q.iter().zip(&self.sigma).map(|(q, s)| q * s * s).sum()
    }

    /// Sample standard deviation of `W`.
    pub fn sd(&self) -> f64 {
        crate::quad::sample_variance(&self.w).sqrt()
    }
}

/// Draw `n` subjects with `J` replicates each: `W_ij = X_i + tau_i e_ij`.
///
/// Returns the dataset and the latent `X_i` (for scoring only).
pub fn sample_dataset(
    spec: TrueDensity,
    err: &ErrorSpec,
    n: usize,
    seed: u64,
) -> Result<(ReplicateDataset, Vec<f64>)> {
    sample_dataset_stream(spec, err, n, seed, 0)
}

/// As [`sample_dataset`], drawing from stream `stream` of `seed`.
pub fn sample_dataset_stream(
    spec: TrueDensity,
    err: &ErrorSpec,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<(ReplicateDataset, Vec<f64>)> {
    if n < 2 {
        return Err(invalid(format!("sample size must be at least 2, got {n}")));
    }
    if err.replicates == 0 {
        return Err(invalid("replicate count J must be positive"));
    }
    let tau: Vec<f64> = err.tau_sq(n)?.into_iter().map(f64::sqrt).collect();
    let mut rng = stream_rng(seed, stream);
    let latent: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
    let rows = latent
        .iter()
        .zip(&tau)
        .map(|(&x, &t)| {
            (0..err.replicates)
                .map(|_| x + t * err.law.sample(&mut rng))
                .collect()
        })
        .collect();
    Ok((ReplicateDataset::from_rows(rows)?, latent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{linspace, trapezoid};

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let err = ErrorSpec::new(ErrorLaw::Normal, VarianceCase::Case1, 1);
        let (a, xa) = sample_dataset(TrueDensity::ScaledChiSq3, &err, 4, 7).unwrap();
        let (b, xb) = sample_dataset(TrueDensity::ScaledChiSq3, &err, 4, 7).unwrap();
        assert_eq!(a.n(), 4);
        assert!(a.rows().iter().all(|r| r.len() == 1));
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            assert_eq!(ra[0].to_bits(), rb[0].to_bits());
        }
        assert_eq!(xa, xb);
        let (c, _) = sample_dataset(TrueDensity::ScaledChiSq3, &err, 4, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mixture2_latent_mean_is_close_to_analytic() {
        // 0.5 * 5 + 0.5 * 2.5 = 3.75 before scaling
        let analytic = 3.75 / 2.2425f64.sqrt();
        assert!((TrueDensity::Mixture2.mean() - analytic).abs() < 1e-15);
        let err = ErrorSpec::new(ErrorLaw::Laplace, VarianceCase::Case2, 2);
        let (data, latent) = sample_dataset(TrueDensity::Mixture2, &err, 100, 1).unwrap();
        assert_eq!(data.counts(), vec![2; 100]);
        let m = crate::quad::mean(&latent);
        let se = 1.0 / 10.0;
        assert!((m - analytic).abs() < 4.0 * se, "mean {m} vs {analytic}");

        // large-sample cross-check of the analytic value
        let mut rng = stream_rng(99, 0);
        let big: Vec<f64> = (0..200_000).map(|_| TrueDensity::Mixture2.sample(&mut rng)).collect();
        assert!((crate::quad::mean(&big) - analytic).abs() < 0.01);
    }

    #[test]
    fn zero_noise_replicates_equal_latent_values() {
        let err = ErrorSpec::new(ErrorLaw::Normal, VarianceCase::Zero, 3);
        let (data, latent) = sample_dataset(TrueDensity::Mixture1, &err, 6, 3).unwrap();
        for (row, x) in data.rows().iter().zip(&latent) {
            assert!(row.iter().all(|v| v == x));
        }
    }

    #[test]
    fn invalid_sample_sizes_are_rejected() {
        let err = ErrorSpec::new(ErrorLaw::Normal, VarianceCase::Case1, 1);
        assert!(matches!(
            sample_dataset(TrueDensity::ScaledChiSq3, &err, 1, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(sample_dataset(TrueDensity::ScaledChiSq3, &err, 5, 0).is_err());
    }

    #[test]
    fn scaled_chi_sq_boundary_and_change_of_variables() {
        assert_eq!(TrueDensity::ScaledChiSq3.density(0.0), 0.0);
        // sqrt(6) * f_chi3(sqrt(6)), f_chi3(y) = sqrt(y) exp(-y/2) / sqrt(2 pi)
        let y = 6f64.sqrt();
        let expected = 6f64.sqrt() * y.sqrt() * (-y / 2.0).exp() / (2.0 * PI).sqrt();
        assert!((TrueDensity::ScaledChiSq3.density(1.0) - expected).abs() < 1e-14);

        // numerical derivative of the CDF, CDF obtained by fine quadrature
        let cdf = |b: f64| {
            let xs = linspace(0.0, b, 200_001);
            let ys = true_density(TrueDensity::ScaledChiSq3, &xs);
            trapezoid(&xs, &ys)
        };
        let h = 1e-3;
        let deriv = (cdf(1.0 + h) - cdf(1.0 - h)) / (2.0 * h);
        assert!((deriv - expected).abs() < 1e-5, "{deriv} vs {expected}");
    }

    #[test]
    fn densities_integrate_to_one_with_unit_variance() {
        for spec in TrueDensity::ALL {
            let (lo, hi) = spec.effective_support();
            let xs = linspace(lo.min(-5.0), hi.max(10.0), 400_001);
            let fs = true_density(spec, &xs);
            assert!(fs.iter().all(|&f| f >= 0.0));
            let mass = trapezoid(&xs, &fs);
            assert!((mass - 1.0).abs() < 1e-6, "{spec}: mass {mass}");
            let m1: Vec<f64> = xs.iter().zip(&fs).map(|(x, f)| x * f).collect();
            let m2: Vec<f64> = xs.iter().zip(&fs).map(|(x, f)| x * x * f).collect();
            let mean = trapezoid(&xs, &m1);
            let var = trapezoid(&xs, &m2) - mean * mean;
            assert!((mean - spec.mean()).abs() < 1e-6, "{spec}: mean {mean}");
            assert!((var - 1.0).abs() < 1e-5, "{spec}: var {var}");
        }
    }

    #[test]
    fn mixture2_integrates_to_one_on_stated_interval() {
        let xs = linspace(-5.0, 10.0, 150_001);
        let fs = true_density(TrueDensity::Mixture2, &xs);
        assert!((trapezoid(&xs, &fs) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn true_phase_basic_identities() {
        let ts = linspace(-5.0, 5.0, 101);
        for spec in TrueDensity::ALL {
            let ph = true_phase(spec, &ts);
            let mid = ph.values[50];
            assert!((mid - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            for k in 0..ts.len() {
                let a = ph.values[k];
                let b = ph.values[ts.len() - 1 - k];
                assert!((a - b.conj()).norm() < 1e-12);
                assert!((a.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chi_sq_phase_matches_quadrature() {
        let spec = TrueDensity::ScaledChiSq3;
        let xs = linspace(0.0, 60.0, 600_001);
        let fs = true_density(spec, &xs);
        let re: Vec<f64> = xs.iter().zip(&fs).map(|(x, f)| (x * 1.0).cos() * f).collect();
        let im: Vec<f64> = xs.iter().zip(&fs).map(|(x, f)| (x * 1.0).sin() * f).collect();
        let cf = Complex64::new(trapezoid(&xs, &re), trapezoid(&xs, &im));
        let quad_phase = cf / cf.norm();
        let ph = true_phase(spec, &[1.0]).values[0];
        assert!((ph - quad_phase).norm() < 1e-6, "{ph} vs {quad_phase}");
    }

    #[test]
    fn monte_carlo_variance_is_one() {
        for spec in TrueDensity::ALL {
            let mut rng = stream_rng(2024, spec as u64);
            let xs: Vec<f64> = (0..1_000_000).map(|_| spec.sample(&mut rng)).collect();
            let v = crate::quad::sample_variance(&xs);
            assert!((v - 1.0).abs() < 0.01, "{spec}: {v}");
        }
    }

    #[test]
    fn replicate_differences_recover_tau_sq() {
        let err = ErrorSpec::new(ErrorLaw::Laplace, VarianceCase::Case1, 10_000);
        let (data, _) = sample_dataset(TrueDensity::ScaledChiSq3, &err, 2, 5).unwrap();
        let tau_sq = err.tau_sq(2).unwrap();
        for (row, &truth) in data.rows().iter().zip(&tau_sq) {
            let est = row
                .windows(2)
                .map(|w| (w[0] - w[1]).powi(2) / 2.0)
                .sum::<f64>()
                / (row.len() - 1) as f64;
            assert!(((est - truth) / truth).abs() < 0.05, "{est} vs {truth}");
        }
    }

    #[test]
    fn laplace_errors_have_unit_variance() {
        let mut rng = stream_rng(11, 0);
        let xs: Vec<f64> = (0..400_000).map(|_| ErrorLaw::Laplace.sample(&mut rng)).collect();
        assert!((crate::quad::sample_variance(&xs) - 1.0).abs() < 0.02);
        assert!(crate::quad::mean(&xs).abs() < 0.01);
    }

    #[test]
    fn variance_cases_follow_their_patterns() {
        let c1 = VarianceCase::Case1.sigma_sq(4, 2.0).unwrap();
        assert_eq!(c1, vec![0.05, 0.05, 1.95, 1.95]);
        let c2 = VarianceCase::Case2.sigma_sq(4, 1.0).unwrap();
        assert!((c2[3] - 0.75).abs() < 1e-15 && (c2[0] - 0.375).abs() < 1e-15);
        let c3 = VarianceCase::Case3.sigma_sq(2, 1.0).unwrap();
        assert!((c3[1] - 0.975).abs() < 1e-15);
        let err = ErrorSpec::new(ErrorLaw::Normal, VarianceCase::Case1, 3);
        assert_eq!(err.tau_sq(2).unwrap(), vec![0.025 * 3.0, 0.975 * 3.0]);
    }

    #[test]
    fn observation_set_validates_weights() {
        assert!(ObservationSet::new(vec![1.0, 2.0], vec![0.0, 0.0], vec![0.5, 0.6]).is_err());
        assert!(ObservationSet::new(vec![], vec![], vec![]).is_err());
        assert!(ObservationSet::new(vec![1.0], vec![0.0], vec![1.0]).is_ok());
    }
}
