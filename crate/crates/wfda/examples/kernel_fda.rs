//! Kernel FDA with three kernel families, including the out-of-sample
//! projection of points the model never saw.
//!
//! Run with: cargo run --example kernel_fda

use nalgebra::DMatrix;
use wfda::dataset::toy_three_class;
use wfda::kfda::{default_rbf_gamma, fit_kfda, kernel_project, KernelSpec};

fn main() -> wfda::Result<()> {
    let data = toy_three_class();
    let kernels = [
        KernelSpec::Linear,
        KernelSpec::Polynomial { degree: 2, coef0: 1.0 },
        KernelSpec::Rbf { gamma: default_rbf_gamma(&data) },
    ];

    // Two held-out points near the class-1 and class-3 means.
    let queries = DMatrix::from_vec(2, 2, vec![1.1, 0.9, 2.0, 3.9]);

    for kernel in &kernels {
        let model = fit_kfda(&data, kernel, 2, 1e-9)?;
        println!("{kernel}: eigenvalues {:?}", model.eigenvalues.as_slice());

        let train_emb = kernel_project(&model, data.samples())?;
        let query_emb = kernel_project(&model, &queries)?;
        for q in 0..queries.ncols() {
            // Report which training class mean the query lands closest to.
            let mut best = (f64::INFINITY, 0usize);
            for j in 0..data.len() {
                let dist = (train_emb.column(j) - query_emb.column(q)).norm();
                if dist < best.0 {
                    best = (dist, data.labels()[j]);
                }
            }
            println!("  query {} -> nearest class {}", q + 1, best.1);
        }
    }
    Ok(())
}
