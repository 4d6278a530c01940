//! Fisherfaces: fit FDA on a face-like image corpus and write the leading
//! basis directions back out as images.
//!
//! Run with: cargo run --release --example fisherfaces
//!
//! Output lands in ./fisherfaces-out as 8-bit PGM files.

use wfda::dataset::{split, standardize_apply, standardize_fit, synthetic_faces, SplitSpec};
use wfda::evaluate::export_fisherfaces;
use wfda::fda::fit_fda;

fn main() -> wfda::Result<()> {
    let (width, height) = (36, 44);
    let data = synthetic_faces(10, 8, width, height, 7);
    println!("corpus: {} images of {}x{} pixels, {} classes", data.len(), width, height, data.num_classes());

    let spec = SplitSpec { train_fraction: 0.66, seed: 7, stratified: true };
    let (train_raw, _) = split(&data, &spec)?;
    let standardizer = standardize_fit(&train_raw)?;
    let train = standardize_apply(&standardizer, &train_raw)?;

    let model = fit_fda(&train, 9, 1e-9)?;
    println!("leading eigenvalues: {:?}", &model.eigenvalues.as_slice()[..4]);

    let out_dir = std::path::Path::new("fisherfaces-out");
    let paths = export_fisherfaces(&model, width, height, 4, out_dir)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}
