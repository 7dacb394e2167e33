//! Monte Carlo variance of the weighted phase estimate at a few frequencies,
//! against the delta-method variance.
//!
//! cargo run --release --example wepf_variance -- [n] [reps]

use num_complex::Complex64;
use phasedeconv::ecf::{wepf, wepf_asymptotic_variance, TGrid};
use phasedeconv::model::{stream_rng, ErrorLaw, ObservationSet, TrueDensity};
use phasedeconv::weights::mean_optimal_weights;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |k: usize, default: &str| args.get(k).cloned().unwrap_or_else(|| default.to_string());
    let n: usize = arg(0, "2000").parse()?;
    let reps: usize = arg(1, "500").parse()?;

    let dist = TrueDensity::Mixture1;
    let sigma_sq: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.2 } else { 2.0 }).collect();
    let sigma: Vec<f64> = sigma_sq.iter().map(|s| s.sqrt()).collect();
    let q = mean_optimal_weights(1.0, &sigma_sq)?;

    for t in [0.25, 0.5, 1.0] {
        let grid = TGrid::new(t, 3)?;
        let rho = dist.cf(t) / dist.cf(t).norm();
        let mut mse = 0.0;
        for rep in 0..reps {
            let mut rng = stream_rng(99, rep as u64);
            let w: Vec<f64> = sigma
                .iter()
                .map(|s| dist.sample(&mut rng) + s * ErrorLaw::Normal.sample(&mut rng))
                .collect();
            let obs = ObservationSet::new(w, sigma.clone(), q.clone())?;
            let est = wepf(&obs, &grid)?;
            let d: Complex64 = est.phase[2] - rho;
            mse += d.norm_sqr();
        }
        let template = ObservationSet::new(vec![0.0; n], sigma.clone(), q.clone())?;
        let delta = wepf_asymptotic_variance(&template, |s| dist.cf(s), |_, s| ErrorLaw::Normal.cf(s), &grid)[2];
        println!(
            "t={t:<5} n*MSE {:.4}  delta method {:.4}",
            mse / reps as f64 * n as f64,
            delta.map_or(f64::NAN, |v| v * n as f64)
        );
    }
    Ok(())
}
