//! The end-to-end path from replicate data to a density estimate:
//! variance components, weights, phase estimate, fit, bandwidth, inversion.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bandwidth::{select_bandwidth, BandwidthSearch};
use crate::density::{
    invert_to_density, known_error_estimator, naive_kde, normal_reference_bandwidth, DensityEstimate, Method,
};
use crate::ecf::{wepf, PhaseEstimate, TGrid, DEFAULT_GRID_POINTS};
use crate::error::{invalid, Error, Result};
use crate::model::{ErrorLaw, ObservationSet, ReplicateDataset};
use crate::phasefit::{fit_discrete, FitConfig, FitResult};
use crate::weights::{
    collapse_replicates, collapse_with_known_sigma, equal_weights, estimate_variance_components,
    mean_optimal_weights, sigma_x_sq_with_known_errors, VarianceComponents,
};

/// Weighting of the observations in the phase estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Epf,
    Wepf,
}

impl Weighting {
    pub fn method(self) -> Method {
        match self {
            Weighting::Epf => Method::PhaseEpf,
            Weighting::Wepf => Method::PhaseWepf,
        }
    }
}

/// Which weightings to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSet {
    Epf,
    Wepf,
    Both,
}

impl WeightSet {
    pub fn weightings(self) -> &'static [Weighting] {
        match self {
            WeightSet::Epf => &[Weighting::Epf],
            WeightSet::Wepf => &[Weighting::Wepf],
            WeightSet::Both => &[Weighting::Epf, Weighting::Wepf],
        }
    }
}

impl FromStr for WeightSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epf" => Ok(WeightSet::Epf),
            "wepf" => Ok(WeightSet::Wepf),
            "both" => Ok(WeightSet::Both),
            other => Err(invalid(format!("unknown weighting '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Phase,
    KnownError,
    Kde,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(Estimator::Phase),
            "known-error" => Ok(Estimator::KnownError),
            "kde" => Ok(Estimator::Kde),
            other => Err(invalid(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthChoice {
    #[default]
    Auto,
    Fixed(f64),
}

impl FromStr for BandwidthChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(BandwidthChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthChoice::Fixed(h)),
            _ => Err(invalid(format!("bandwidth must be 'auto' or a positive number, got '{s}'"))),
        }
    }
}

impl fmt::Display for BandwidthChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthChoice::Auto => f.write_str("auto"),
            BandwidthChoice::Fixed(h) => write!(f, "{h}"),
        }
    }
}

/// Collapsed observations with the variance inputs needed downstream.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Subject means with equal weights.
    pub obs: ObservationSet,
    pub sigma_x_sq: f64,
    pub sigma_sq: Vec<f64>,
    /// Present when the variances were estimated from replicates.
    pub components: Option<VarianceComponents>,
}

impl Prepared {
    /// From replicates, or from known per-subject error variances.
    pub fn from_dataset(data: &ReplicateDataset, known_sigma_sq: Option<&[f64]>) -> Result<Self> {
        match known_sigma_sq {
            Some(sigma_sq) => {
                if sigma_sq.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                    return Err(invalid("error variances must be finite and non-negative"));
                }
                let obs = collapse_with_known_sigma(data, sigma_sq.iter().map(|s| s.sqrt()).collect())?;
                let sigma_x_sq = sigma_x_sq_with_known_errors(obs.w(), sigma_sq);
                Ok(Self {
                    obs,
                    sigma_x_sq,
                    sigma_sq: sigma_sq.to_vec(),
                    components: None,
                })
            }
            None => {
                let vc = estimate_variance_components(data)?;
                let obs = collapse_replicates(data, &vc)?;
                Ok(Self {
                    sigma_x_sq: vc.clamped_sigma_x_sq(obs.w()),
                    sigma_sq: vc.sigma_sq.clone(),
                    obs,
                    components: Some(vc),
                })
            }
        }
    }

    /// Known error variances and a known target variance.
    pub fn known(data: &ReplicateDataset, sigma_sq: &[f64], sigma_x_sq: f64) -> Result<Self> {
        let mut p = Self::from_dataset(data, Some(sigma_sq))?;
        p.sigma_x_sq = sigma_x_sq;
        Ok(p)
    }

    pub fn weights(&self, weighting: Weighting) -> Result<Vec<f64>> {
        match weighting {
            Weighting::Epf => Ok(equal_weights(self.obs.len())),
            Weighting::Wepf => mean_optimal_weights(self.sigma_x_sq, &self.sigma_sq),
        }
    }

    pub fn observations(&self, weighting: Weighting) -> Result<ObservationSet> {
        self.obs.with_weights(self.weights(weighting)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Number of points of the frequency grid.
    pub tgrid: usize,
    pub fit: FitConfig,
    pub bandwidth: BandwidthChoice,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tgrid: DEFAULT_GRID_POINTS,
            fit: FitConfig::default(),
            bandwidth: BandwidthChoice::Auto,
            seed: 0,
        }
    }
}

/// Bandwidth from the approximate AMISE, or the override.
pub fn choose_bandwidth(
    choice: BandwidthChoice,
    sigma_x_sq: f64,
    sigma_sq: &[f64],
    q: &[f64],
) -> Result<(f64, Option<BandwidthSearch>)> {
    match choice {
        BandwidthChoice::Fixed(h) => Ok((h, None)),
        BandwidthChoice::Auto => {
            let search = select_bandwidth(sigma_x_sq, sigma_sq, q, None)?;
            Ok((search.h_star, Some(search)))
        }
    }
}

/// Phase estimate of `obs` on a grid scaled to its SD.
pub fn phase_estimate(obs: &ObservationSet, points: usize) -> Result<PhaseEstimate> {
    let grid = TGrid::for_sd(obs.sd(), points)?;
    wepf(obs, &grid)
}

#[derive(Debug, Clone)]
pub struct PhaseDensity {
    pub estimate: DensityEstimate,
    pub phase: PhaseEstimate,
    pub fit: FitResult,
    pub search: Option<BandwidthSearch>,
}

/// Full phase-function deconvolution for one weighting.
pub fn phase_density(
    prep: &Prepared,
    weighting: Weighting,
    cfg: &PipelineConfig,
    xs: &[f64],
) -> Result<PhaseDensity> {
    let obs = prep.observations(weighting)?;
    let phase = phase_estimate(&obs, cfg.tgrid)?;
    let fit = fit_discrete(&phase, &obs, &cfg.fit, cfg.seed)?;
    let (h, search) = choose_bandwidth(cfg.bandwidth, prep.sigma_x_sq, &prep.sigma_sq, obs.q())?;
    let estimate = invert_to_density(&fit.distribution, &phase, &obs, h, xs, weighting.method())?;
    Ok(PhaseDensity {
        estimate,
        phase,
        fit,
        search,
    })
}

/// Weighted known-error estimate assuming the error law `law`.
pub fn known_error_density(
    prep: &Prepared,
    weighting: Weighting,
    law: ErrorLaw,
    bandwidth: BandwidthChoice,
    xs: &[f64],
) -> Result<DensityEstimate> {
    let obs = prep.observations(weighting)?;
    let (h, _) = choose_bandwidth(bandwidth, prep.sigma_x_sq, &prep.sigma_sq, obs.q())?;
    known_error_estimator(&obs, |_, s| law.cf(s), h, xs)
}

/// Gaussian kernel estimate of the subject means with the normal-reference bandwidth.
pub fn kde_density(prep: &Prepared, xs: &[f64]) -> Result<DensityEstimate> {
    let w = prep.obs.w();
    naive_kde(w, normal_reference_bandwidth(w), xs)
}
