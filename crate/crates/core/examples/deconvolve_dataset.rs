//! Deconvolves one simulated dataset with every estimator and reports the
//! integrated squared error against the true density.
//!
//! cargo run --release --example deconvolve_dataset -- [dist] [n] [J] [error]

use phasedeconv::density::default_x_grid;
use phasedeconv::metrics::ise;
use phasedeconv::model::{sample_dataset, ErrorLaw, ErrorSpec, TrueDensity, VarianceCase};
use phasedeconv::pipeline::{
    kde_density, known_error_density, phase_density, BandwidthChoice, PipelineConfig, Prepared, Weighting,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |k: usize, default: &str| args.get(k).cloned().unwrap_or_else(|| default.to_string());
    let dist: TrueDensity = arg(0, "mix2").parse()?;
    let n: usize = arg(1, "500").parse()?;
    let j: usize = arg(2, "2").parse()?;
    let law: ErrorLaw = arg(3, "laplace").parse()?;

    let err = ErrorSpec::new(law, VarianceCase::Case1, j);
    let (data, _) = sample_dataset(dist, &err, n, 3)?;
    let prep = Prepared::from_dataset(&data, None)?;
    let xs = default_x_grid(&prep.obs);
    let cfg = PipelineConfig::default();

    println!("{dist}, {law} errors, n={n}, J={j}");
    for w in [Weighting::Epf, Weighting::Wepf] {
        let out = phase_density(&prep, w, &cfg, &xs)?;
        println!(
            "{:<12} ISE {:.5}  h {:.3}  t* {:.3}  support {}  objective {:.2e}",
            out.estimate.method.label(),
            ise(&out.estimate, dist),
            out.estimate.bandwidth,
            out.estimate.t_star.unwrap_or(f64::NAN),
            out.fit.distribution.x().len(),
            out.fit.objective,
        );
    }
    // the baseline is told the error law; the phase estimators are not
    let known = known_error_density(&prep, Weighting::Wepf, law, BandwidthChoice::Auto, &xs)?;
    println!("{:<12} ISE {:.5}  h {:.3}", "known-error", ise(&known, dist), known.bandwidth);
    let kde = kde_density(&prep, &xs)?;
    println!("{:<12} ISE {:.5}  h {:.3}", "kde", ise(&kde, dist), kde.bandwidth);
    Ok(())
}
