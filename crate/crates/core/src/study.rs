//! Monte Carlo studies: per-replicate pipeline runs, aggregated into MISE
//! ratios, jackknife standard errors and ISE quartiles.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::default_x_grid;
use crate::ecf::DEFAULT_GRID_POINTS;
use crate::error::{invalid, Result};
use crate::metrics::{ise, mise_ratio_with_jackknife, phase_ise_on, quartile_summary, Quartiles, RatioEstimate};
use crate::model::{sample_dataset_stream, true_phase, ErrorLaw, ErrorSpec, TrueDensity, VarianceCase};
use crate::phasefit::FitConfig;
use crate::pipeline::{
    choose_bandwidth, kde_density, phase_density, phase_estimate, BandwidthChoice, Estimator, PipelineConfig,
    Prepared, WeightSet, Weighting,
};
use crate::density::known_error_estimator;
use crate::quad::linspace;

/// Share of failed replicates above which a study counts as failed.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub dist: TrueDensity,
    pub error: ErrorLaw,
    pub case: VarianceCase,
    pub n: usize,
    #[serde(rename = "J")]
    pub replicates: usize,
    pub reps: usize,
    pub seed: u64,
    pub weights: WeightSet,
    /// Density estimators to run. Empty means phase functions only.
    pub estimators: Vec<Estimator>,
    pub bandwidth: BandwidthChoice,
    pub tgrid: usize,
    #[serde(skip)]
    pub fit: FitConfig,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl StudyConfig {
    pub fn new(dist: TrueDensity, error: ErrorLaw, case: VarianceCase, n: usize, replicates: usize, reps: usize) -> Self {
        Self {
            dist,
            error,
            case,
            n,
            replicates,
            reps,
            seed: 0,
            weights: WeightSet::Both,
            estimators: Vec::new(),
            bandwidth: BandwidthChoice::Auto,
            tgrid: DEFAULT_GRID_POINTS,
            fit: FitConfig::default(),
            workers: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(invalid("at least one replication is required"));
        }
        if self.replicates == 0 {
            return Err(invalid("J must be at least 1"));
        }
        self.case.sigma_sq(self.n, 1.0)?;
        Ok(())
    }

    fn error_spec(&self) -> ErrorSpec {
        ErrorSpec::new(self.error, self.case, self.replicates)
    }
}

/// One row of `replicates.csv`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub rep: usize,
    pub status: String,
    pub error: Option<String>,
    pub sigma_x_sq: Option<f64>,
    pub t_star_epf: Option<f64>,
    pub t_star_wepf: Option<f64>,
    /// Common cutoff used to score both phase estimates.
    pub t_star: Option<f64>,
    pub phase_ise_epf: Option<f64>,
    pub phase_ise_wepf: Option<f64>,
    pub ise_epf: Option<f64>,
    pub ise_wepf: Option<f64>,
    pub ise_known: Option<f64>,
    pub ise_kde: Option<f64>,
    pub h_epf: Option<f64>,
    pub h_wepf: Option<f64>,
    pub h_known: Option<f64>,
    pub h_kde: Option<f64>,
}

impl ReplicateRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the fit for replicate `rep` and weighting `slot`.
pub fn fit_seed(seed: u64, rep: usize, slot: u64) -> u64 {
    splitmix(splitmix(seed) ^ splitmix((rep as u64) << 2 | slot))
}

/// ISE grid: the default grid widened to the truth's effective support.
fn scoring_grid(prep: &Prepared, dist: TrueDensity) -> Vec<f64> {
    let base = default_x_grid(&prep.obs);
    let (lo, hi) = dist.effective_support();
    linspace(base[0].min(lo), base[base.len() - 1].max(hi), base.len())
}

/// Run one replicate. Errors are returned, not recorded.
pub fn run_replicate(cfg: &StudyConfig, rep: usize) -> Result<ReplicateRecord> {
    let err = cfg.error_spec();
    let (data, _) = sample_dataset_stream(cfg.dist, &err, cfg.n, cfg.seed, rep as u64)?;
    let true_sigma_sq = err.sigma_sq(cfg.n)?;
    // with one measurement per subject the error variances are treated as known
    let prep = if cfg.replicates == 1 {
        Prepared::known(&data, &true_sigma_sq, 1.0)?
    } else {
        Prepared::from_dataset(&data, None)?
    };
    let mut rec = ReplicateRecord {
        rep,
        status: "ok".into(),
        sigma_x_sq: Some(prep.sigma_x_sq),
        ..Default::default()
    };

    let eq = phase_estimate(&prep.observations(Weighting::Epf)?, cfg.tgrid)?;
    let opt = phase_estimate(&prep.observations(Weighting::Wepf)?, cfg.tgrid)?;
    let truth: Vec<Complex64> = true_phase(cfg.dist, eq.grid.values()).values;
    let t_star = eq.t_star.value.min(opt.t_star.value);
    rec.t_star_epf = Some(eq.t_star.value);
    rec.t_star_wepf = Some(opt.t_star.value);
    rec.t_star = Some(t_star);
    rec.phase_ise_epf = Some(phase_ise_on(eq.grid.values(), &eq.phase, &truth, t_star)?);
    rec.phase_ise_wepf = Some(phase_ise_on(opt.grid.values(), &opt.phase, &truth, t_star)?);

    if cfg.estimators.is_empty() {
        return Ok(rec);
    }
    let xs = scoring_grid(&prep, cfg.dist);
    for est in &cfg.estimators {
        match est {
            Estimator::Phase => {
                for &w in cfg.weights.weightings() {
                    let slot = if w == Weighting::Epf { 0 } else { 1 };
                    let pcfg = PipelineConfig {
                        tgrid: cfg.tgrid,
                        fit: cfg.fit.clone(),
                        bandwidth: cfg.bandwidth,
                        seed: fit_seed(cfg.seed, rep, slot),
                    };
                    let out = phase_density(&prep, w, &pcfg, &xs)?;
                    let score = ise(&out.estimate, cfg.dist);
                    match w {
                        Weighting::Epf => {
                            rec.ise_epf = Some(score);
                            rec.h_epf = Some(out.estimate.bandwidth);
                        }
                        Weighting::Wepf => {
                            rec.ise_wepf = Some(score);
                            rec.h_wepf = Some(out.estimate.bandwidth);
                        }
                    }
                }
            }
            Estimator::KnownError => {
                // oracle baseline: true error law, true variances, mean-optimal weights
                let known = Prepared::known(&data, &true_sigma_sq, 1.0)?;
                let obs = known.observations(Weighting::Wepf)?;
                let (h, _) = choose_bandwidth(cfg.bandwidth, 1.0, &true_sigma_sq, obs.q())?;
                let law = cfg.error;
                let out = known_error_estimator(&obs, |_, s| law.cf(s), h, &xs)?;
                rec.ise_known = Some(ise(&out, cfg.dist));
                rec.h_known = Some(h);
            }
            Estimator::Kde => {
                let out = kde_density(&prep, &xs)?;
                rec.ise_kde = Some(ise(&out, cfg.dist));
                rec.h_kde = Some(out.bandwidth);
            }
        }
    }
    Ok(rec)
}

fn failed(rep: usize, message: String) -> ReplicateRecord {
    ReplicateRecord {
        rep,
        status: "failed".into(),
        error: Some(message),
        ..Default::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorSummary {
    pub mise: f64,
    /// Quartiles of `10 * ISE`.
    pub quartiles: Quartiles,
    pub mean_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: StudyConfig,
    pub replications: usize,
    pub failed: usize,
    /// Phase MISE ratio, equal over mean-optimal weights.
    pub mise_ratio: Option<f64>,
    pub se_jack: Option<f64>,
    pub phase_mise_epf: Option<f64>,
    pub phase_mise_wepf: Option<f64>,
    pub mean_t_star: Option<f64>,
    pub density_mise_ratio: Option<f64>,
    pub density_se_jack: Option<f64>,
    pub epf: Option<EstimatorSummary>,
    pub wepf: Option<EstimatorSummary>,
    #[serde(rename = "known-error")]
    pub known_error: Option<EstimatorSummary>,
    pub kde: Option<EstimatorSummary>,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub records: Vec<ReplicateRecord>,
    pub summary: Summary,
}

impl StudyResult {
    pub fn failure_rate(&self) -> f64 {
        self.summary.failed as f64 / self.records.len() as f64
    }

    pub fn acceptable(&self) -> bool {
        self.failure_rate() <= MAX_FAILURE_RATE
    }

    pub fn phase_pairs(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| Some((r.phase_ise_epf?, r.phase_ise_wepf?)))
            .collect()
    }

    pub fn column(&self, pick: impl Fn(&ReplicateRecord) -> Option<f64>) -> Vec<f64> {
        self.records.iter().filter_map(pick).collect()
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn ratio(pairs: &[(f64, f64)]) -> Option<RatioEstimate> {
    if pairs.is_empty() {
        None
    } else {
        mise_ratio_with_jackknife(pairs).ok()
    }
}

fn estimator_summary(
    records: &[ReplicateRecord],
    ise: impl Fn(&ReplicateRecord) -> Option<f64>,
    h: impl Fn(&ReplicateRecord) -> Option<f64>,
) -> Option<EstimatorSummary> {
    let values: Vec<f64> = records.iter().filter_map(&ise).collect();
    let bandwidths: Vec<f64> = records.iter().filter_map(&h).collect();
    Some(EstimatorSummary {
        mise: mean(&values)?,
        quartiles: quartile_summary(&values).ok()?.scaled(10.0),
        mean_bandwidth: mean(&bandwidths),
    })
}

/// Aggregate replicate records.
pub fn summarize(cfg: &StudyConfig, records: &[ReplicateRecord]) -> Summary {
    let phase_pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.phase_ise_epf?, r.phase_ise_wepf?)))
        .collect();
    let density_pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.ise_epf?, r.ise_wepf?)))
        .collect();
    let phase = ratio(&phase_pairs);
    let density = ratio(&density_pairs);
    let t_stars: Vec<f64> = records.iter().filter_map(|r| r.t_star).collect();
    let phase_eq: Vec<f64> = phase_pairs.iter().map(|p| p.0).collect();
    let phase_opt: Vec<f64> = phase_pairs.iter().map(|p| p.1).collect();
    Summary {
        config: cfg.clone(),
        replications: records.len(),
        failed: records.iter().filter(|r| !r.ok()).count(),
        mise_ratio: phase.map(|r| r.ratio),
        se_jack: phase.and_then(|r| r.se),
        phase_mise_epf: mean(&phase_eq),
        phase_mise_wepf: mean(&phase_opt),
        mean_t_star: mean(&t_stars),
        density_mise_ratio: density.map(|r| r.ratio),
        density_se_jack: density.and_then(|r| r.se),
        epf: estimator_summary(records, |r| r.ise_epf, |r| r.h_epf),
        wepf: estimator_summary(records, |r| r.ise_wepf, |r| r.h_wepf),
        known_error: estimator_summary(records, |r| r.ise_known, |r| r.h_known),
        kde: estimator_summary(records, |r| r.ise_kde, |r| r.h_kde),
    }
}

/// Run all replicates (in parallel, in a deterministic order) and summarize.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let body = || -> Vec<ReplicateRecord> {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                run_replicate(cfg, rep).unwrap_or_else(|e| {
                    log::warn!("replicate {rep} failed: {e}");
                    failed(rep, e.to_string())
                })
            })
            .collect()
    };
    let records = match cfg.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?
            .install(body),
        None => body(),
    };
    let summary = summarize(cfg, &records);
    Ok(StudyResult { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> StudyConfig {
        let mut cfg = StudyConfig::new(TrueDensity::ScaledChiSq3, ErrorLaw::Normal, VarianceCase::Case1, 100, 1, reps);
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn phase_study_fields() {
        let res = run_study(&small(6)).unwrap();
        assert_eq!(res.records.len(), 6);
        assert_eq!(res.summary.failed, 0);
        assert!(res.summary.mise_ratio.unwrap() > 0.0);
        assert!(res.summary.se_jack.is_some());
        assert!(res.summary.epf.is_none());
        for r in &res.records {
            assert!(r.phase_ise_epf.unwrap() >= 0.0);
            assert!(r.t_star.unwrap() <= r.t_star_epf.unwrap().min(r.t_star_wepf.unwrap()));
        }
    }

    #[test]
    fn single_rep_has_no_standard_error() {
        let res = run_study(&small(1)).unwrap();
        assert!(res.summary.mise_ratio.is_some());
        assert_eq!(res.summary.se_jack, None);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small(4);
        cfg.estimators = vec![Estimator::Phase, Estimator::Kde];
        cfg.n = 60;
        cfg.workers = Some(1);
        let a = run_study(&cfg).unwrap();
        cfg.workers = Some(3);
        let b = run_study(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(
            serde_json::to_string(&a.summary).unwrap(),
            serde_json::to_string(&b.summary).unwrap()
        );
    }

    #[test]
    fn fit_seeds_differ_by_rep_and_slot() {
        let a = fit_seed(1, 0, 0);
        assert_ne!(a, fit_seed(1, 0, 1));
        assert_ne!(a, fit_seed(1, 1, 0));
        assert_ne!(a, fit_seed(2, 0, 0));
    }

    #[test]
    fn invalid_designs_are_rejected() {
        let mut cfg = small(2);
        cfg.n = 101;
        assert!(run_study(&cfg).is_err());
        cfg.n = 100;
        cfg.reps = 0;
        assert!(run_study(&cfg).is_err());
    }
}
