//! Variance components from replicate measurements and the observation
//! weights built from them.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{ObservationSet, ReplicateDataset};
use crate::quad::sample_variance;

/// Lower bound for the target variance, as a fraction of the sample variance
/// of the collapsed observations.
pub const SIGMA_X_SQ_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceComponents {
    /// Replicate-level error variances.
    pub tau_sq: Vec<f64>,
    /// Moment estimate of the target variance; may be negative.
    pub sigma_x_sq: f64,
    /// Error variances of the subject means, `tau_sq / n_i`.
    pub sigma_sq: Vec<f64>,
    pub counts: Vec<usize>,
}

impl VarianceComponents {
    pub fn sigma(&self) -> Vec<f64> {
        self.sigma_sq.iter().map(|s| s.sqrt()).collect()
    }

    /// `sigma_x_sq` floored at `0.05 * Var(W)` of the collapsed observations.
    pub fn clamped_sigma_x_sq(&self, collapsed_w: &[f64]) -> f64 {
        clamp_sigma_x_sq(self.sigma_x_sq, collapsed_w)
    }
}

pub fn clamp_sigma_x_sq(sigma_x_sq: f64, collapsed_w: &[f64]) -> f64 {
    sigma_x_sq.max(SIGMA_X_SQ_FLOOR * sample_variance(collapsed_w))
}

/// Moment estimates of the replicate error variances and the target variance.
pub fn estimate_variance_components(data: &ReplicateDataset) -> Result<VarianceComponents> {
    for (id, row) in data.ids().iter().zip(data.rows()) {
        if row.len() < 2 {
            return Err(Error::InsufficientReplicates {
                id: id.clone(),
                found: row.len(),
            });
        }
    }
    let n = data.n() as f64;
    let total = data.total_count() as f64;
    let counts = data.counts();

    // sum_{j<j'} (a_j - a_j')^2 = n_i * sum_j (a_j - mean)^2
    let tau_sq: Vec<f64> = data.rows().iter().map(|row| sample_variance(row)).collect();

    let grand_mean = data
        .rows()
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .sum::<f64>()
        / n;
    let spread = data
        .rows()
        .iter()
        .flatten()
        .map(|w| (w - grand_mean) * (w - grand_mean))
        .sum::<f64>()
        / total;
    let sigma_x_sq = spread - tau_sq.iter().sum::<f64>() / n;
    let sigma_sq = tau_sq
        .iter()
        .zip(&counts)
        .map(|(t, &c)| t / c as f64)
        .collect();
    Ok(VarianceComponents {
        tau_sq,
        sigma_x_sq,
        sigma_sq,
        counts,
    })
}

/// Subject means with their estimated error SDs; weights start out equal.
pub fn collapse_replicates(data: &ReplicateDataset, vc: &VarianceComponents) -> Result<ObservationSet> {
    if vc.sigma_sq.len() != data.n() {
        return Err(invalid("variance components do not match the dataset"));
    }
    ObservationSet::equally_weighted(row_means(data), vc.sigma())
}

/// Subject means paired with externally known error SDs.
pub fn collapse_with_known_sigma(data: &ReplicateDataset, sigma: Vec<f64>) -> Result<ObservationSet> {
    if sigma.len() != data.n() {
        return Err(invalid("one sigma per subject is required"));
    }
    ObservationSet::equally_weighted(row_means(data), sigma)
}

fn row_means(data: &ReplicateDataset) -> Vec<f64> {
    data.rows()
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect()
}

/// Target variance when the error variances are known: `Var(W) - mean(sigma^2)`,
/// floored like [`clamp_sigma_x_sq`].
pub fn sigma_x_sq_with_known_errors(w: &[f64], sigma_sq: &[f64]) -> f64 {
    let raw = sample_variance(w) - sigma_sq.iter().sum::<f64>() / sigma_sq.len() as f64;
    clamp_sigma_x_sq(raw, w)
}

pub fn equal_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Inverse-variance weights `q_i ~ 1 / (sigma_x^2 + sigma_i^2)`, which give the
/// minimum-variance weighted mean of the observations.
pub fn mean_optimal_weights(sigma_x_sq: f64, sigma_sq: &[f64]) -> Result<Vec<f64>> {
    if sigma_sq.is_empty() {
        return Err(invalid("no error variances supplied"));
    }
    let inv: Vec<f64> = sigma_sq.iter().map(|s| 1.0 / (sigma_x_sq + s)).collect();
    if inv.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid(format!(
            "non-positive total variance (sigma_x^2 = {sigma_x_sq})"
        )));
    }
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|v| v / total).collect())
}
