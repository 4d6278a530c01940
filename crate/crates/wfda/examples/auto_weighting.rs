//! Automatically weighted FDA: the alternating optimizer learns which class
//! pairs matter, and the sparsity budget k prunes the rest.
//!
//! Run with: cargo run --example auto_weighting

use wfda::autoweight::{fit_aw_fda, fit_aw_kfda, AwConfig};
use wfda::dataset::toy_three_class;
use wfda::kfda::KernelSpec;

fn main() -> wfda::Result<()> {
    let data = toy_three_class();

    for k in [3, 2, 1] {
        let cfg = AwConfig::new(k);
        let (model, report) = fit_aw_fda(&data, 2, &cfg, 1e-9)?;
        println!(
            "aw-fda k={k}: {} iterations, converged={}, objective {:+.4} -> {:+.4}",
            report.iterations,
            report.converged,
            report.objective_trace.first().unwrap(),
            report.objective_trace.last().unwrap(),
        );
        println!("  eigenvalues: {:?}", model.eigenvalues.as_slice());
        let alpha = report.weights.alpha();
        for r in 0..3 {
            let row: Vec<String> = (0..3).map(|l| format!("{:.4}", alpha[(r, l)])).collect();
            println!("  weights class {}: [{}]", r + 1, row.join(", "));
        }
    }

    let cfg = AwConfig::new(2);
    let kernel = KernelSpec::Rbf { gamma: 0.2 };
    let (_, report) = fit_aw_kfda(&data, &kernel, 2, &cfg, 1e-9)?;
    println!(
        "\naw-kfda k=2 ({kernel}): {} iterations, final objective {:+.4}",
        report.iterations,
        report.objective_trace.last().unwrap()
    );
    Ok(())
}
