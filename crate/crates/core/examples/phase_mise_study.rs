//! MISE ratio of the unweighted to the weighted phase estimate across the
//! three variance cases, with jackknife standard errors.
//!
//! cargo run --release --example phase_mise_study -- [reps] [dist] [n] [J]

use phasedeconv::model::{ErrorLaw, TrueDensity, VarianceCase};
use phasedeconv::study::{run_study, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |k: usize, default: &str| args.get(k).cloned().unwrap_or_else(|| default.to_string());
    let reps: usize = arg(0, "100").parse()?;
    let dist: TrueDensity = arg(1, "chisq3").parse()?;
    let n: usize = arg(2, "1000").parse()?;
    let j: usize = arg(3, "1").parse()?;

    println!("{dist}, n={n}, J={j}, {reps} reps");
    println!("{:<6} {:>8} {:>8} {:>10} {:>10} {:>6}", "case", "ratio", "se", "mise epf", "mise wepf", "t*");
    for case in [VarianceCase::Case1, VarianceCase::Case3, VarianceCase::Case2] {
        let mut cfg = StudyConfig::new(dist, ErrorLaw::Normal, case, n, j, reps);
        cfg.seed = 7;
        let s = run_study(&cfg)?.summary;
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<6} {:>8} {:>8} {:>10} {:>10} {:>6}",
            case.to_string(),
            show(s.mise_ratio),
            show(s.se_jack),
            show(s.phase_mise_epf),
            show(s.phase_mise_wepf),
            show(s.mean_t_star),
        );
    }
    Ok(())
}
