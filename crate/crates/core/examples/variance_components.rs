//! Per-subject variance components from replicates, compared with the values
//! used to simulate them.
//!
//! cargo run --example variance_components -- [n] [J] [case]

use phasedeconv::model::{sample_dataset, ErrorLaw, ErrorSpec, TrueDensity, VarianceCase};
use phasedeconv::pipeline::{Prepared, Weighting};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |k: usize, default: &str| args.get(k).cloned().unwrap_or_else(|| default.to_string());
    let n: usize = arg(0, "400").parse()?;
    let j: usize = arg(1, "5").parse()?;
    let case: VarianceCase = arg(2, "1").parse()?;

    let err = ErrorSpec::new(ErrorLaw::Normal, case, j);
    let (data, _) = sample_dataset(TrueDensity::Mixture1, &err, n, 11)?;
    let truth = err.sigma_sq(n)?;
    let prep = Prepared::from_dataset(&data, None)?;
    let vc = prep.components.as_ref().expect("estimated from replicates");
    let q = prep.weights(Weighting::Wepf)?;

    println!("sigma_x^2: estimated {:.4} (used {:.4}), true 1", vc.sigma_x_sq, prep.sigma_x_sq);
    println!("{:>4} {:>10} {:>10} {:>10}", "id", "sigma^2", "true", "q");
    for k in (0..n).step_by((n / 8).max(1)) {
        println!("{:>4} {:>10.4} {:>10.4} {:>10.5}", data.ids()[k], vc.sigma_sq[k], truth[k], q[k]);
    }
    let err_sq: f64 = vc.sigma_sq.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
    println!("mean squared error of sigma^2: {err_sq:.4}");
    println!("effective sample size of q: {:.1}", 1.0 / q.iter().map(|v| v * v).sum::<f64>());
    Ok(())
}
