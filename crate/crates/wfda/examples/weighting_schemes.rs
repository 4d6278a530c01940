//! Compute every manual class-pair weighting scheme on one dataset and
//! print the matrices side by side.
//!
//! Run with: cargo run --example weighting_schemes

use wfda::dataset::{class_statistics, toy_three_class};
use wfda::kfda::KernelSpec;
use wfda::weighting::{
    apac_weights, cdm_weights, cosine_weights, kernel_cosine_weights, knn_weights, pow_weights,
    ClassDistances, WeightMatrix,
};

fn show(w: &WeightMatrix) {
    println!("{}:", w.scheme());
    let c = w.num_classes();
    for r in 0..c {
        let row: Vec<String> = (0..c).map(|l| format!("{:.4}", w.alpha()[(r, l)])).collect();
        println!("  [{}]", row.join(", "));
    }
    println!();
}

fn main() -> wfda::Result<()> {
    let data = toy_three_class();
    let stats = class_statistics(&data)?;
    let dist = ClassDistances::from_stats(&stats);

    show(&apac_weights(&dist)?);
    show(&pow_weights(&dist, 3)?);
    show(&knn_weights(&dist, 1)?);
    show(&cosine_weights(&stats)?);
    show(&kernel_cosine_weights(&stats, &KernelSpec::Rbf { gamma: 0.1 })?);

    // CDM estimates weights from the confusion of a quadratic classifier on
    // the training data; on well-separated classes it degenerates to zero.
    match cdm_weights(&data) {
        Ok(w) => show(&w),
        Err(e) => println!("cdm: {e}"),
    }
    Ok(())
}
