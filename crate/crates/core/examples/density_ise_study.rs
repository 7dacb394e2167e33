//! Density ISE quartiles for the phase estimators, the known-error baseline
//! and a naive kernel estimate.
//!
//! cargo run --release --example density_ise_study -- [reps] [dist] [J] [case] [error]

use phasedeconv::model::{ErrorLaw, TrueDensity, VarianceCase};
use phasedeconv::pipeline::Estimator;
use phasedeconv::study::{run_study, EstimatorSummary, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |k: usize, default: &str| args.get(k).cloned().unwrap_or_else(|| default.to_string());
    let reps: usize = arg(0, "20").parse()?;
    let dist: TrueDensity = arg(1, "chisq3").parse()?;
    let j: usize = arg(2, "2").parse()?;
    let case: VarianceCase = arg(3, "1").parse()?;
    let error: ErrorLaw = arg(4, "normal").parse()?;

    let mut cfg = StudyConfig::new(dist, error, case, 500, j, reps);
    cfg.seed = 2024;
    cfg.estimators = vec![Estimator::Phase, Estimator::KnownError, Estimator::Kde];

    let start = std::time::Instant::now();
    let result = run_study(&cfg)?;
    println!("{dist} J={j} case {case} {error}: {reps} reps in {:.1?}", start.elapsed());
    println!("{:<12} {:>8} {:>8} {:>8} {:>8}", "estimator", "Q1", "median", "Q3", "mean h");
    let s = &result.summary;
    let rows: [(&str, &Option<EstimatorSummary>); 4] =
        [("epf", &s.epf), ("wepf", &s.wepf), ("known-error", &s.known_error), ("kde", &s.kde)];
    for (name, row) in rows {
        if let Some(r) = row {
            println!(
                "{name:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                r.quartiles.q1,
                r.quartiles.median,
                r.quartiles.q3,
                r.mean_bandwidth.unwrap_or(f64::NAN)
            );
        }
    }
    if let (Some(r), Some(se)) = (s.density_mise_ratio, s.density_se_jack) {
        println!("density MISE ratio epf/wepf {r:.3} (se {se:.3})");
    }
    println!("failed replicates: {}", s.failed);
    Ok(())
}
