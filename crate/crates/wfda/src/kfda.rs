//! Kernels, Gram matrices, feature-space scatters, kernel FDA and weighted
//! kernel FDA, and out-of-sample projection.
//!
//! Feature-space fits work entirely through the training Gram matrix: the
//! projection directions are expansion coefficients Y over the training
//! samples, and new data is embedded as `Yᵀ K(X_train, X_new)`.

use nalgebra::{DMatrix, DVector};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::fda::{DiscriminantModel, TrainRef};
use crate::linalg::generalized_eig;
use crate::weighting::WeightMatrix;

/// Kernel family and parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, coef0: f64 },
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, .. } => {
                if *degree < 1 {
                    Err(Error::InvalidKernel("polynomial degree must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Rbf { gamma } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    Err(Error::InvalidKernel(format!("rbf gamma must be positive, got {gamma}")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { degree, coef0 } => {
                write!(f, "polynomial(degree={degree}, coef0={coef0})")
            }
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
        }
    }
}

/// Number of worker threads for Gram computation: `WFDA_THREADS` capped by
/// the column count, `0` or unset meaning the machine's parallelism.
fn gram_threads(cols: usize) -> usize {
    let requested = std::env::var("WFDA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    let auto = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let t = if requested == 0 { auto } else { requested };
    t.clamp(1, cols.max(1))
}

/// Gram matrix `k(x_i, y_j)` between the columns of two sample matrices.
///
/// Columns of the output are computed in fixed order within disjoint blocks,
/// so results do not depend on the thread count.
pub fn gram(kernel: &KernelSpec, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    if x1.nrows() != x2.nrows() {
        return Err(Error::InvalidInput(format!(
            "gram: feature dimensions differ ({} vs {})",
            x1.nrows(),
            x2.nrows()
        )));
    }
    let (m1, m2) = (x1.ncols(), x2.ncols());
    if m1 == 0 || m2 == 0 {
        return Ok(DMatrix::zeros(m1, m2));
    }
    let inner = x1.transpose() * x2;
    let mut out = inner;
    match kernel {
        KernelSpec::Linear => {}
        KernelSpec::Polynomial { degree, coef0 } => {
            for v in out.iter_mut() {
                *v = (*v + coef0).powi(*degree as i32);
            }
        }
        KernelSpec::Rbf { gamma } => {
            let n1: Vec<f64> = x1.column_iter().map(|c| c.norm_squared()).collect();
            let n2: Vec<f64> = x2.column_iter().map(|c| c.norm_squared()).collect();
            let threads = gram_threads(m2);
            let gamma = *gamma;
            let chunk = m2.div_ceil(threads);
            let cols: Vec<usize> = (0..m2).collect();
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for (block_idx, block) in cols.chunks(chunk).enumerate() {
                    let n1 = &n1;
                    let n2 = &n2;
                    let inner_block =
                        out.columns(block_idx * chunk, block.len()).into_owned();
                    let start = block_idx * chunk;
                    handles.push(scope.spawn(move || {
                        let mut b = inner_block;
                        for (jj, j) in (start..start + b.ncols()).enumerate() {
                            for i in 0..m1 {
                                let d2 = (n1[i] + n2[j] - 2.0 * b[(i, jj)]).max(0.0);
                                b[(i, jj)] = (-gamma * d2).exp();
                            }
                        }
                        (start, b)
                    }));
                }
                for h in handles {
                    let (start, b) = h.join().expect("gram worker panicked");
                    out.columns_mut(start, b.ncols()).copy_from(&b);
                }
            });
        }
    }
    Ok(out)
}

/// Default RBF bandwidth `γ = 1 / (d · v̄)` with `v̄` the mean per-feature
/// population variance of the training matrix.
pub fn default_rbf_gamma(train: &LabeledDataset) -> f64 {
    let d = train.dim();
    let n = train.len();
    let mut total_var = 0.0;
    for i in 0..d {
        let row = train.samples().row(i);
        let mean: f64 = row.iter().sum::<f64>() / n as f64;
        total_var += row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    }
    let mean_var = total_var / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}

/// Per-class pieces of the training Gram matrix: class column blocks K_r,
/// kernel class means ξ⁽ʳ⁾, their difference matrices Ξ_r, and the class-size
/// diagonal N.
#[derive(Debug, Clone)]
pub struct KernelClassQuantities {
    pub sizes: Vec<usize>,
    /// K_r, n × n_r: training Gram columns belonging to class r.
    pub class_blocks: Vec<DMatrix<f64>>,
    /// ξ⁽ʳ⁾, length n: per-row mean of K_r.
    pub kernel_means: Vec<DVector<f64>>,
    /// Ξ_r = [ξ⁽ʳ⁾ − ξ⁽¹⁾, ..., ξ⁽ʳ⁾ − ξ⁽ᶜ⁾], n × c.
    pub mean_diffs: Vec<DMatrix<f64>>,
    /// diag(n_1, ..., n_c).
    pub size_diag: DMatrix<f64>,
}

/// Split a training Gram matrix into its per-class quantities.
pub fn kernel_class_quantities(
    k_full: &DMatrix<f64>,
    labels: &[usize],
) -> Result<KernelClassQuantities> {
    let n = k_full.nrows();
    if k_full.ncols() != n || labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "kernel_class_quantities: Gram is {}x{}, {} labels",
            k_full.nrows(),
            k_full.ncols(),
            labels.len()
        )));
    }
    let c = *labels.iter().max().ok_or_else(|| Error::InvalidInput("no labels".into()))?;
    let mut class_cols = vec![Vec::new(); c];
    for (j, &l) in labels.iter().enumerate() {
        if l == 0 {
            return Err(Error::InvalidInput("class labels must start at 1".into()));
        }
        class_cols[l - 1].push(j);
    }
    let mut sizes = Vec::with_capacity(c);
    let mut class_blocks = Vec::with_capacity(c);
    let mut kernel_means = Vec::with_capacity(c);
    for (r, cols) in class_cols.iter().enumerate() {
        if cols.is_empty() {
            return Err(Error::InvalidInput(format!("class {} has no samples", r + 1)));
        }
        let block = k_full.select_columns(cols);
        let mean = block.column_mean();
        sizes.push(cols.len());
        class_blocks.push(block);
        kernel_means.push(mean);
    }
    let mut mean_diffs = Vec::with_capacity(c);
    for r in 0..c {
        let mut m = DMatrix::zeros(n, c);
        for l in 0..c {
            m.set_column(l, &(&kernel_means[r] - &kernel_means[l]));
        }
        mean_diffs.push(m);
    }
    let size_diag =
        DMatrix::from_diagonal(&DVector::from_iterator(c, sizes.iter().map(|&s| s as f64)));
    Ok(KernelClassQuantities { sizes, class_blocks, kernel_means, mean_diffs, size_diag })
}

/// `Δ_W = Σ_r n_r K_r H_r K_rᵀ` with H_r the per-class centering matrix.
pub fn feature_within_scatter(q: &KernelClassQuantities) -> DMatrix<f64> {
    let n = q.kernel_means[0].len();
    let mut s = DMatrix::zeros(n, n);
    for r in 0..q.sizes.len() {
        // K_r H_r = K_r with its row means removed; H is idempotent so the
        // centered block times its own transpose equals K_r H_r K_rᵀ.
        let mut centered = q.class_blocks[r].clone();
        for mut col in centered.column_iter_mut() {
            col -= &q.kernel_means[r];
        }
        s += &centered * centered.transpose() * q.sizes[r] as f64;
    }
    s
}

/// `Δ_B = Σ_r n_r Ξ_r N Ξ_rᵀ`.
pub fn feature_between_scatter(q: &KernelClassQuantities) -> DMatrix<f64> {
    let n = q.kernel_means[0].len();
    let mut s = DMatrix::zeros(n, n);
    for r in 0..q.sizes.len() {
        let m = &q.mean_diffs[r];
        s += m * &q.size_diag * m.transpose() * q.sizes[r] as f64;
    }
    s
}

/// `Δ̂_B = Σ_r n_r Ξ_r A_r N Ξ_rᵀ`.
pub fn weighted_feature_between_scatter(
    q: &KernelClassQuantities,
    w: &WeightMatrix,
) -> Result<DMatrix<f64>> {
    let c = q.sizes.len();
    w.check_classes(c)?;
    let n = q.kernel_means[0].len();
    let mut s = DMatrix::zeros(n, n);
    for r in 0..c {
        let a_r = w.row_diag(r + 1);
        let m = &q.mean_diffs[r];
        s += m * a_r * &q.size_diag * m.transpose() * q.sizes[r] as f64;
    }
    Ok(s)
}

/// Weighted feature-space between scatter with per-row Frobenius-squared
/// normalization, the form the automatic weighting loop optimizes.
pub fn normalized_weighted_feature_between_scatter(
    q: &KernelClassQuantities,
    w: &WeightMatrix,
) -> Result<DMatrix<f64>> {
    let c = q.sizes.len();
    w.check_classes(c)?;
    let n = q.kernel_means[0].len();
    let mut s = DMatrix::zeros(n, n);
    for r in 0..c {
        let mut a_r = w.row_diag(r + 1);
        let norm_sq: f64 = a_r.diagonal().iter().map(|x| x * x).sum();
        if norm_sq == 0.0 {
            return Err(Error::DegenerateWeights(format!(
                "weight row for class {} is all zero",
                r + 1
            )));
        }
        a_r /= norm_sq;
        let m = &q.mean_diffs[r];
        s += m * a_r * &q.size_diag * m.transpose() * q.sizes[r] as f64;
    }
    Ok(s)
}

/// Maximal informative subspace dimension for a feature-space fit.
pub fn feature_rank_bound(data: &LabeledDataset) -> usize {
    data.len().min(data.num_classes() - 1)
}

fn check_p(p: usize, bound: usize) -> Result<()> {
    if p == 0 || p > bound {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension p = {p} outside [1, {bound}] (rank bound)"
        )));
    }
    Ok(())
}

fn fit_feature_space(
    train: &LabeledDataset,
    kernel: &KernelSpec,
    delta_b: impl FnOnce(&KernelClassQuantities) -> Result<DMatrix<f64>>,
    p: usize,
    ridge: f64,
    method: String,
) -> Result<DiscriminantModel> {
    check_p(p, feature_rank_bound(train))?;
    let k_full = gram(kernel, train.samples(), train.samples())?;
    let q = kernel_class_quantities(&k_full, train.labels())?;
    let d_w = feature_within_scatter(&q);
    let d_b = delta_b(&q)?;
    let eig = generalized_eig(&d_b, &d_w, ridge)?;
    Ok(DiscriminantModel::new_feature_space(
        eig.eigenvectors.columns(0, p).into_owned(),
        eig.eigenvalues.rows(0, p).into_owned(),
        TrainRef { samples: train.samples().clone(), kernel: kernel.clone() },
        method,
    ))
}

/// Fit kernel FDA: the p leading generalized eigenvectors of (Δ_B, Δ_W).
pub fn fit_kfda(
    train: &LabeledDataset,
    kernel: &KernelSpec,
    p: usize,
    ridge: f64,
) -> Result<DiscriminantModel> {
    fit_feature_space(
        train,
        kernel,
        |q| Ok(feature_between_scatter(q)),
        p,
        ridge,
        "kfda".to_string(),
    )
}

/// Fit weighted kernel FDA: the p leading generalized eigenvectors of
/// (Δ̂_B, Δ_W).
pub fn fit_weighted_kfda(
    train: &LabeledDataset,
    kernel: &KernelSpec,
    w: &WeightMatrix,
    p: usize,
    ridge: f64,
) -> Result<DiscriminantModel> {
    if w.alpha().sum() == 0.0 {
        return Err(Error::DegenerateWeights(format!(
            "all class-pair weights are zero (scheme {})",
            w.scheme()
        )));
    }
    let method = format!("w-kfda:{}", w.scheme());
    fit_feature_space(train, kernel, |q| weighted_feature_between_scatter(q, w), p, ridge, method)
}

/// Out-of-sample projection `Yᵀ K(X_train, X_t)` after the model's
/// standardizer.
pub fn kernel_project(model: &DiscriminantModel, x_t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let train_ref = model.train_ref.as_ref().ok_or_else(|| {
        Error::Unsupported("kernel_project() needs a feature-space model".into())
    })?;
    let z = match &model.standardizer {
        Some(s) => s.transform_matrix(x_t)?,
        None => x_t.clone(),
    };
    if z.nrows() != train_ref.samples.nrows() {
        return Err(Error::InvalidInput(format!(
            "model expects {} features, data has {}",
            train_ref.samples.nrows(),
            z.nrows()
        )));
    }
    let k = gram(&train_ref.kernel, &train_ref.samples, &z)?;
    Ok(model.basis.transpose() * k)
}
