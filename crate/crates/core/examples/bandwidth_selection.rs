//! The approximate MISE curve, its minimizer, and the exact MISE terms of the
//! known-error estimator at that bandwidth.
//!
//! cargo run --release --example bandwidth_selection -- [n] [case] [dist]

use phasedeconv::bandwidth::{exact_mise, select_bandwidth};
use phasedeconv::model::{ErrorLaw, ErrorSpec, TrueDensity, VarianceCase};
use phasedeconv::weights::mean_optimal_weights;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |k: usize, default: &str| args.get(k).cloned().unwrap_or_else(|| default.to_string());
    let n: usize = arg(0, "500").parse()?;
    let case: VarianceCase = arg(1, "1").parse()?;
    let dist: TrueDensity = arg(2, "chisq3").parse()?;

    let sigma_sq = ErrorSpec::new(ErrorLaw::Normal, case, 1).sigma_sq(n)?;
    let sigma: Vec<f64> = sigma_sq.iter().map(|s| s.sqrt()).collect();
    let q = mean_optimal_weights(1.0, &sigma_sq)?;
    let search = select_bandwidth(1.0, &sigma_sq, &q, None)?;

    println!("n={n}, case {case}: h* = {:.4} (AMISE {:.5})", search.h_star, search.value);
    if search.widened {
        println!("search range was widened");
    }
    let step = search.h_grid.len() / 10;
    for k in (0..search.h_grid.len()).step_by(step) {
        println!("  h {:>8.4}  AMISE {:.5}", search.h_grid[k], search.objective[k]);
    }
    println!("{:>8} {:>10} {:>10} {:>10} {:>8}", "h", "bias", "variance", "corr", "share");
    for factor in [0.5, 1.0, 2.0] {
        let h = factor * search.h_star;
        let terms = exact_mise(h, |t| dist.cf(t), |_, s| ErrorLaw::Normal.cf(s), &q, &sigma, 40.0)?;
        println!(
            "{h:>8.4} {:>10.5} {:>10.5} {:>10.5} {:>8.4}",
            terms.bias,
            terms.variance,
            terms.correction,
            terms.correction_share()
        );
    }
    Ok(())
}
