//! Full evaluation pipeline: split, standardize, fit every method in both
//! spaces, and score with a 1-NN classifier, like the accuracy tables in the
//! face-recognition literature.
//!
//! Run with: cargo run --release --example evaluation_pipeline

use wfda::autoweight::AwConfig;
use wfda::dataset::{synthetic_faces, SplitSpec};
use wfda::evaluate::{run_experiment_matrix, EvalParams, MethodSpec, Space};
use wfda::kfda::KernelSpec;

fn main() -> wfda::Result<()> {
    let data = synthetic_faces(8, 10, 16, 16, 1);
    let split = SplitSpec { train_fraction: 0.66, seed: 1, stratified: true };

    let tags = ["fda", "apac", "pow", "cdm", "knn", "cw", "aw"];
    let methods: Vec<MethodSpec> = tags
        .iter()
        .map(|t| MethodSpec::parse(t).unwrap())
        .flat_map(|m| [m.in_space(Space::Input), m.in_space(Space::Feature)])
        .collect();

    let params = EvalParams {
        p: 7,
        ridge: 1e-9,
        kernel: KernelSpec::Rbf { gamma: 1.0 / 256.0 },
        pow_m: 3,
        knn_k: 1,
        aw: AwConfig::new(8),
    };

    let report = run_experiment_matrix(&data, "synthetic-faces", &methods, &split, &params)?;
    print!("{}", report.to_csv());
    Ok(())
}
