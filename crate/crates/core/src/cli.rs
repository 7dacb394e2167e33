//! Command-line front end. The binary only parses arguments and calls [`run`].

use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::density::{back_transform_log50, default_x_grid, DensityEstimate};
use crate::ecf::DEFAULT_GRID_POINTS;
use crate::error::{invalid, Result};
use crate::io::{read_log50_csv_path, read_long_csv_path, write_density_table, write_json, write_study, LongInput};
use crate::model::{ErrorLaw, TrueDensity, VarianceCase};
use crate::pipeline::{
    kde_density, known_error_density, phase_density, BandwidthChoice, Estimator, PipelineConfig, Prepared,
    WeightSet, Weighting,
};
use crate::quad::linspace;
use crate::study::{run_study, StudyConfig, MAX_FAILURE_RATE};

/// Exit code when more than 5% of replicates failed.
pub const EXIT_TOO_MANY_FAILURES: i32 = 3;
/// Exit code when some, but at most 5%, of replicates failed.
pub const EXIT_SOME_FAILURES: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "phasedeconv", version, about = "Phase-function density deconvolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo study: replicates.csv and summary.json.
    Simulate(SimulateArgs),
    /// Density estimate from a long-format replicate file.
    Deconvolve(DeconvolveArgs),
    /// Deconvolution on the log(M - 50) scale with back-transform.
    #[command(name = "analyze-log50")]
    AnalyzeLog50(DeconvolveArgs),
    /// Variance components and mean-optimal weights of a replicate file.
    Variances(VariancesArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "both")]
    pub weights: WeightSet,
    #[arg(long, value_delimiter = ',', default_value = "phase")]
    pub estimator: Vec<Estimator>,
    #[arg(long, default_value = "auto")]
    pub bandwidth: BandwidthChoice,
    /// Number of points of the frequency grid.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub tgrid: usize,
    #[arg(long, default_value = "normal")]
    pub error: ErrorLaw,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "chisq3")]
    pub dist: TrueDensity,
    #[arg(long, default_value = "1")]
    pub case: VarianceCase,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long = "J", default_value_t = 1)]
    pub j: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Score phase functions only, skipping density estimates.
    #[arg(long)]
    pub phase_only: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct DeconvolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Add the naive kernel estimate.
    #[arg(long)]
    pub kde: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct VariancesArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(k) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?
            .install(f)),
        None => Ok(f()),
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Deconvolve(args) => {
            let input = read_long_csv_path(&args.input)?;
            let workers = args.common.workers;
            with_pool(workers, || deconvolve(&input, &args))??;
            Ok(0)
        }
        Command::AnalyzeLog50(args) => {
            let input = read_log50_csv_path(&args.input)?;
            let workers = args.common.workers;
            with_pool(workers, || analyze_log50(&input, &args))??;
            Ok(0)
        }
        Command::Variances(args) => {
            let input = read_long_csv_path(&args.input)?;
            let report = variances(&input)?;
            match &args.out {
                Some(dir) => write_variances(dir, &report)?,
                None => write_json(std::io::stdout(), &report)?,
            }
            Ok(0)
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<i32> {
    let c = &args.common;
    let mut cfg = StudyConfig::new(args.dist, c.error, args.case, args.n, args.j, args.reps);
    cfg.seed = c.seed;
    cfg.weights = c.weights;
    cfg.estimators = if args.phase_only { Vec::new() } else { c.estimator.clone() };
    cfg.bandwidth = c.bandwidth;
    cfg.tgrid = c.tgrid;
    cfg.workers = c.workers;
    let result = run_study(&cfg)?;
    write_study(&c.out, &result)?;
    Ok(if result.failure_rate() > MAX_FAILURE_RATE {
        EXIT_TOO_MANY_FAILURES
    } else if result.summary.failed > 0 {
        EXIT_SOME_FAILURES
    } else {
        0
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateInfo {
    pub method: String,
    pub bandwidth: f64,
    pub t_star: Option<f64>,
    pub integral: f64,
    pub fit_objective: Option<f64>,
    pub support_size: Option<usize>,
    pub clamped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeconvolveSummary {
    pub subjects: usize,
    pub measurements: usize,
    pub known_variances: bool,
    pub sigma_x_sq: f64,
    pub mean_sigma_sq: f64,
    pub estimates: Vec<EstimateInfo>,
}

/// All requested estimates on the default grid of the collapsed data.
pub fn estimate_all(input: &LongInput, common: &Common, with_kde: bool) -> Result<(Prepared, Vec<DensityEstimate>, Vec<EstimateInfo>)> {
    let prep = Prepared::from_dataset(&input.data, input.sigma_sq.as_deref())?;
    let xs = default_x_grid(&prep.obs);
    let mut estimates = Vec::new();
    let mut info = Vec::new();
    let mut push = |est: DensityEstimate, fit: Option<(f64, usize)>, estimates: &mut Vec<DensityEstimate>| {
        info.push(EstimateInfo {
            method: est.method.label().into(),
            bandwidth: est.bandwidth,
            t_star: est.t_star,
            integral: est.integral(),
            fit_objective: fit.map(|f| f.0),
            support_size: fit.map(|f| f.1),
            clamped: est.clamped,
        });
        estimates.push(est);
    };
    let mut kinds = common.estimator.clone();
    if with_kde && !kinds.contains(&Estimator::Kde) {
        kinds.push(Estimator::Kde);
    }
    for kind in kinds {
        match kind {
            Estimator::Phase => {
                for (slot, &w) in common.weights.weightings().iter().enumerate() {
                    let cfg = PipelineConfig {
                        tgrid: common.tgrid,
                        bandwidth: common.bandwidth,
                        seed: common.seed.wrapping_add(slot as u64),
                        ..Default::default()
                    };
                    let out = phase_density(&prep, w, &cfg, &xs)?;
                    let fit = (out.fit.objective, out.fit.distribution.x().len());
                    push(out.estimate, Some(fit), &mut estimates);
                }
            }
            Estimator::KnownError => {
                let w = if common.weights == WeightSet::Epf { Weighting::Epf } else { Weighting::Wepf };
                push(known_error_density(&prep, w, common.error, common.bandwidth, &xs)?, None, &mut estimates);
            }
            Estimator::Kde => push(kde_density(&prep, &xs)?, None, &mut estimates),
        }
    }
    Ok((prep, estimates, info))
}

fn summary_of(input: &LongInput, prep: &Prepared, info: Vec<EstimateInfo>) -> DeconvolveSummary {
    DeconvolveSummary {
        subjects: input.data.n(),
        measurements: input.data.total_count(),
        known_variances: prep.components.is_none(),
        sigma_x_sq: prep.sigma_x_sq,
        mean_sigma_sq: prep.sigma_sq.iter().sum::<f64>() / prep.sigma_sq.len() as f64,
        estimates: info,
    }
}

fn write_table(path: &Path, estimates: &[DensityEstimate]) -> Result<()> {
    let refs: Vec<&DensityEstimate> = estimates.iter().collect();
    write_density_table(File::create(path)?, &refs)
}

pub fn deconvolve(input: &LongInput, args: &DeconvolveArgs) -> Result<Vec<DensityEstimate>> {
    let (prep, estimates, info) = estimate_all(input, &args.common, args.kde)?;
    let dir = &args.common.out;
    std::fs::create_dir_all(dir)?;
    write_table(&dir.join("density.csv"), &estimates)?;
    write_json(File::create(dir.join("density.json"))?, &estimates)?;
    write_json(File::create(dir.join("summary.json"))?, &summary_of(input, &prep, info))?;
    Ok(estimates)
}

/// Writes `density_log.csv` on the log scale and `density.csv` on the raw
/// scale. Returns the raw-scale estimates.
pub fn analyze_log50(input: &LongInput, args: &DeconvolveArgs) -> Result<Vec<DensityEstimate>> {
    let (prep, estimates, info) = estimate_all(input, &args.common, args.kde)?;
    let ys = &estimates[0].xs;
    let xs = linspace(50.0 + ys[0].exp(), 50.0 + ys[ys.len() - 1].exp(), ys.len());
    let raw_scale: Vec<DensityEstimate> = estimates
        .iter()
        .map(|e| back_transform_log50(e, &xs))
        .collect::<Result<_>>()?;
    let dir = &args.common.out;
    std::fs::create_dir_all(dir)?;
    write_table(&dir.join("density_log.csv"), &estimates)?;
    write_table(&dir.join("density.csv"), &raw_scale)?;
    write_json(File::create(dir.join("summary.json"))?, &summary_of(input, &prep, info))?;
    Ok(raw_scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceRow {
    pub id: String,
    pub count: usize,
    pub tau_sq: f64,
    pub sigma_sq: f64,
    pub q_opt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub subjects: usize,
    pub sigma_x_sq_raw: f64,
    pub sigma_x_sq: f64,
    pub mean_sigma_sq: f64,
    pub rows: Vec<VarianceRow>,
}

pub fn variances(input: &LongInput) -> Result<VarianceReport> {
    let prep = Prepared::from_dataset(&input.data, None)?;
    let vc = prep.components.as_ref().expect("replicate path");
    let q = prep.weights(Weighting::Wepf)?;
    let rows = input
        .data
        .ids()
        .iter()
        .enumerate()
        .map(|(k, id)| VarianceRow {
            id: id.clone(),
            count: vc.counts[k],
            tau_sq: vc.tau_sq[k],
            sigma_sq: vc.sigma_sq[k],
            q_opt: q[k],
        })
        .collect();
    Ok(VarianceReport {
        subjects: input.data.n(),
        sigma_x_sq_raw: vc.sigma_x_sq,
        sigma_x_sq: prep.sigma_x_sq,
        mean_sigma_sq: vc.sigma_sq.iter().sum::<f64>() / vc.sigma_sq.len() as f64,
        rows,
    })
}

pub fn write_variances(dir: &Path, report: &VarianceReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("variances.csv"))?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    write_json(File::create(dir.join("summary.json"))?, report)
}
