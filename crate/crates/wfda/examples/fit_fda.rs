//! Fit plain FDA on the three-class toy problem and project the samples.
//!
//! The toy data has class means (1,1), (3,1), (2,4); the leading direction
//! separates the bottom two classes from the top one along the y axis.
//!
//! Run with: cargo run --example fit_fda

use wfda::dataset::toy_three_class;
use wfda::fda::{fit_fda, project};

fn main() -> wfda::Result<()> {
    let data = toy_three_class();
    let model = fit_fda(&data, 2, 0.0)?;

    println!("eigenvalues: {:?}", model.eigenvalues.as_slice());
    println!("basis (columns are directions):");
    for i in 0..model.basis.nrows() {
        let row: Vec<String> =
            (0..model.p).map(|j| format!("{:+.4}", model.basis[(i, j)])).collect();
        println!("  [{}]", row.join(", "));
    }

    let embedded = project(&model, data.samples())?;
    println!("\nprojected samples (label: y1, y2):");
    for j in 0..data.len() {
        println!(
            "  class {}: {:+.3}, {:+.3}",
            data.labels()[j],
            embedded[(0, j)],
            embedded[(1, j)]
        );
    }
    Ok(())
}
