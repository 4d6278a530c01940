//! Class-pair weight matrices for weighted discriminant analysis.
//!
//! Manual schemes: APAC (approximate pairwise Bayes accuracy), powered
//! distance, confused-distance maximization (CDM), k-nearest neighbor
//! classes, cosine of class means, and the feature-space cosine built from a
//! normalized kernel between class means.

use std::fmt;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{ClassStatistics, LabeledDataset};
use crate::error::{Error, Result};
use crate::kfda::{gram, KernelSpec};
use crate::linalg::erf;

/// Tag naming the scheme a weight matrix came from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum WeightScheme {
    /// All-ones off-diagonal; reduces weighted FDA to plain FDA.
    Uniform,
    Apac,
    Pow { m: u32 },
    Cdm,
    Knn { k: usize },
    Cosine,
    KernelCosine { kernel: KernelSpec },
    /// Learned by the alternating-optimization loop with sparsity budget k.
    Auto { k: usize },
    Custom(String),
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Uniform => write!(f, "uniform"),
            WeightScheme::Apac => write!(f, "apac"),
            WeightScheme::Pow { m } => write!(f, "pow(m={m})"),
            WeightScheme::Cdm => write!(f, "cdm"),
            WeightScheme::Knn { k } => write!(f, "knn(k={k})"),
            WeightScheme::Cosine => write!(f, "cw"),
            WeightScheme::KernelCosine { .. } => write!(f, "cw-kernel"),
            WeightScheme::Auto { k } => write!(f, "aw(k={k})"),
            WeightScheme::Custom(s) => write!(f, "{s}"),
        }
    }
}

/// A c×c matrix of nonnegative class-pair weights with zero diagonal.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightMatrix {
    alpha: DMatrix<f64>,
    scheme: WeightScheme,
}

impl WeightMatrix {
    /// Validate and wrap a weight matrix: square, finite, nonnegative
    /// entries, zero diagonal.
    pub fn new(alpha: DMatrix<f64>, scheme: WeightScheme) -> Result<Self> {
        if alpha.nrows() != alpha.ncols() {
            return Err(Error::InvalidInput(format!(
                "weight matrix must be square, got {}x{}",
                alpha.nrows(),
                alpha.ncols()
            )));
        }
        for i in 0..alpha.nrows() {
            for j in 0..alpha.ncols() {
                let v = alpha[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "weight ({}, {}) = {v} is not a finite nonnegative number",
                        i + 1,
                        j + 1
                    )));
                }
            }
            if alpha[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "weight matrix diagonal must be zero (class {})",
                    i + 1
                )));
            }
        }
        Ok(Self { alpha, scheme })
    }

    /// All-ones off-diagonal weights for `c` classes.
    pub fn uniform(c: usize) -> Self {
        let mut alpha = DMatrix::from_element(c, c, 1.0);
        alpha.fill_diagonal(0.0);
        Self { alpha, scheme: WeightScheme::Uniform }
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.nrows()
    }

    /// `A_r = diag(α_{r1}, ..., α_{rc})` for 1-based class id `r`.
    pub fn row_diag(&self, r: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.alpha.row(r - 1).transpose())
    }

    pub(crate) fn check_classes(&self, c: usize) -> Result<()> {
        if self.alpha.nrows() != c {
            return Err(Error::InvalidInput(format!(
                "weight matrix is for {} classes, data has {c}",
                self.alpha.nrows()
            )));
        }
        Ok(())
    }

    /// True if some row is entirely zero (such a matrix cannot drive a
    /// normalized weighted fit).
    pub fn has_zero_row(&self) -> Option<usize> {
        (0..self.alpha.nrows()).find(|&r| self.alpha.row(r).iter().all(|&v| v == 0.0))
    }

    /// Write as headerless CSV, c rows × c columns, 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for i in 0..self.alpha.nrows() {
            let row: Vec<String> =
                (0..self.alpha.ncols()).map(|j| format!("{:.16e}", self.alpha[(i, j)])).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Read a headerless c×c CSV written by [`WeightMatrix::write_csv`].
    pub fn read_csv(path: &Path, scheme: WeightScheme) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::Ingestion(format!(
                            "{}: line {}: non-numeric cell {cell:?}",
                            path.display(),
                            i + 1
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let c = rows.len();
        if c == 0 || rows.iter().any(|r| r.len() != c) {
            return Err(Error::Ingestion(format!(
                "{}: expected a square numeric matrix",
                path.display()
            )));
        }
        let alpha = DMatrix::from_fn(c, c, |i, j| rows[i][j]);
        WeightMatrix::new(alpha, scheme)
    }
}

/// Pairwise Euclidean distances between class means.
#[derive(Debug, Clone)]
pub struct ClassDistances {
    pub d: DMatrix<f64>,
}

impl ClassDistances {
    pub fn from_stats(stats: &ClassStatistics) -> Self {
        let c = stats.means.len();
        let d = DMatrix::from_fn(c, c, |r, l| (&stats.means[r] - &stats.means[l]).norm());
        Self { d }
    }

    pub fn num_classes(&self) -> usize {
        self.d.nrows()
    }

    fn require_positive_offdiag(&self, scheme: &str) -> Result<()> {
        let c = self.num_classes();
        for r in 0..c {
            for l in 0..c {
                if r != l && self.d[(r, l)] <= 0.0 {
                    return Err(Error::DegenerateGeometry(format!(
                        "{scheme}: classes {} and {} have coincident means",
                        r + 1,
                        l + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// APAC weights `α = erf(d / (2√2)) / (2d²)`, an approximation of the
/// pairwise Bayes error.
pub fn apac_weights(dist: &ClassDistances) -> Result<WeightMatrix> {
    dist.require_positive_offdiag("apac")?;
    let c = dist.num_classes();
    let alpha = DMatrix::from_fn(c, c, |r, l| {
        if r == l {
            0.0
        } else {
            let d = dist.d[(r, l)];
            erf(d / (2.0 * 2.0f64.sqrt())) / (2.0 * d * d)
        }
    });
    WeightMatrix::new(alpha, WeightScheme::Apac)
}

/// Powered-distance weights `α = d⁻ᵐ`, m ≥ 3.
pub fn pow_weights(dist: &ClassDistances, m: u32) -> Result<WeightMatrix> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!("pow weighting requires m >= 3, got {m}")));
    }
    dist.require_positive_offdiag("pow")?;
    let c = dist.num_classes();
    let alpha = DMatrix::from_fn(c, c, |r, l| {
        if r == l {
            0.0
        } else {
            dist.d[(r, l)].powi(-(m as i32))
        }
    });
    WeightMatrix::new(alpha, WeightScheme::Pow { m })
}

/// Training-set confusion counts under a regularized Gaussian quadratic
/// discriminant: `α_{rℓ} = n_{ℓ|r} / n_r`, zero diagonal.
///
/// Per-class covariance is regularized as `Σ_r + λI` with
/// `λ = 1e-3 · trace(Σ_r) / d`; priors are the empirical class fractions.
/// Perfectly separated classes yield an all-zero matrix, which downstream
/// weighted fits reject.
pub fn cdm_weights(train: &LabeledDataset) -> Result<WeightMatrix> {
    let c = train.num_classes();
    let d = train.dim();
    let n = train.len() as f64;
    let stats = crate::dataset::class_statistics(train)?;

    struct ClassModel {
        mean: DVector<f64>,
        chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
        log_det: f64,
        log_prior: f64,
    }

    let mut models = Vec::with_capacity(c);
    for r in 0..c {
        let n_r = stats.sizes[r];
        if n_r < 2 {
            return Err(Error::InvalidInput(format!(
                "cdm weighting needs >= 2 samples per class; class {} has {n_r}",
                r + 1
            )));
        }
        let block = &stats.centered[r];
        let mut cov = block * block.transpose() / n_r as f64;
        let lambda = 1e-3 * cov.trace() / d as f64;
        for i in 0..d {
            cov[(i, i)] += lambda;
        }
        let chol = cov.cholesky().ok_or_else(|| {
            Error::Numerical(format!(
                "cdm: regularized covariance of class {} is singular",
                r + 1
            ))
        })?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        models.push(ClassModel {
            mean: stats.means[r].clone(),
            chol,
            log_det,
            log_prior: (n_r as f64 / n).ln(),
        });
    }

    let mut counts = DMatrix::zeros(c, c);
    for j in 0..train.len() {
        let x = train.samples().column(j);
        let truth = train.labels()[j] - 1;
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (r, m) in models.iter().enumerate() {
            let diff = &x - &m.mean;
            let z = m.chol.l().solve_lower_triangular(&diff).ok_or_else(|| {
                Error::Numerical("cdm: triangular solve failed".into())
            })?;
            let score = m.log_prior - 0.5 * m.log_det - 0.5 * z.norm_squared();
            if score > best_score {
                best_score = score;
                best = r;
            }
        }
        if best != truth {
            counts[(truth, best)] += 1.0;
        }
    }
    for r in 0..c {
        let n_r = stats.sizes[r] as f64;
        for l in 0..c {
            counts[(r, l)] /= n_r;
        }
    }
    WeightMatrix::new(counts, WeightScheme::Cdm)
}

/// Indicator weights of the k nearest class means: `α_{rℓ} = 1` iff μ⁽ℓ⁾ is
/// among the k closest class means to μ⁽ʳ⁾, ties toward the lower class index.
pub fn knn_weights(dist: &ClassDistances, k: usize) -> Result<WeightMatrix> {
    let c = dist.num_classes();
    if c < 2 {
        return Err(Error::InvalidInput("knn weighting needs at least 2 classes".into()));
    }
    if k < 1 || k > c - 1 {
        return Err(Error::InvalidParameter(format!(
            "knn weighting requires k in [1, c-1] = [1, {}], got {k}",
            c - 1
        )));
    }
    let mut alpha = DMatrix::zeros(c, c);
    for r in 0..c {
        let mut others: Vec<usize> = (0..c).filter(|&l| l != r).collect();
        others.sort_by(|&a, &b| {
            dist.d[(r, a)].partial_cmp(&dist.d[(r, b)]).unwrap().then(a.cmp(&b))
        });
        for &l in others.iter().take(k) {
            alpha[(r, l)] = 1.0;
        }
    }
    WeightMatrix::new(alpha, WeightScheme::Knn { k })
}

/// Cosine weights `α = 0.5 · (1 + cos∠(μ⁽ʳ⁾, μ⁽ℓ⁾))`, in [0, 1] and symmetric.
pub fn cosine_weights(stats: &ClassStatistics) -> Result<WeightMatrix> {
    let c = stats.means.len();
    let norms: Vec<f64> = stats.means.iter().map(|m| m.norm()).collect();
    if let Some(r) = norms.iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "cosine weighting: class {} has a zero-norm mean; review whether \
             standardization shifted the class means onto the origin",
            r + 1
        )));
    }
    let alpha = DMatrix::from_fn(c, c, |r, l| {
        if r == l {
            0.0
        } else {
            let cos = stats.means[r].dot(&stats.means[l]) / (norms[r] * norms[l]);
            (0.5 * (1.0 + cos)).clamp(0.0, 1.0)
        }
    });
    WeightMatrix::new(alpha, WeightScheme::Cosine)
}

/// Feature-space cosine weights: the normalized kernel matrix
/// `K̂_{rℓ} = K_{rℓ} / √(K_{rr} K_{ℓℓ})` evaluated on the class means,
/// negatives clipped to 0, zero diagonal.
pub fn kernel_cosine_weights(stats: &ClassStatistics, kernel: &KernelSpec) -> Result<WeightMatrix> {
    let c = stats.means.len();
    let means = DMatrix::from_columns(&stats.means.iter().cloned().collect::<Vec<_>>());
    let k = gram(kernel, &means, &means)?;
    for r in 0..c {
        if k[(r, r)] <= 0.0 {
            return Err(Error::InvalidKernel(format!(
                "kernel self-similarity of class mean {} is nonpositive ({})",
                r + 1,
                k[(r, r)]
            )));
        }
    }
    let alpha = DMatrix::from_fn(c, c, |r, l| {
        if r == l {
            0.0
        } else {
            (k[(r, l)] / (k[(r, r)] * k[(l, l)]).sqrt()).clamp(0.0, 1.0)
        }
    });
    WeightMatrix::new(alpha, WeightScheme::KernelCosine { kernel: kernel.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{class_statistics, toy_three_class, LabeledDataset};
    use approx::assert_abs_diff_eq;

    fn fixture_distances() -> ClassDistances {
        ClassDistances::from_stats(&class_statistics(&toy_three_class()).unwrap())
    }

    #[test]
    fn fixture_distance_matrix() {
        let dist = fixture_distances();
        assert_abs_diff_eq!(dist.d[(0, 1)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.d[(0, 2)], 10.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(dist.d[(1, 2)], 10.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!(dist.d[(0, 0)], 0.0);
    }

    #[test]
    fn apac_values_on_fixture() {
        let w = apac_weights(&fixture_distances()).unwrap();
        // d = 2: erf(1/√2)/8, frozen from the numeric-integration oracle.
        assert_abs_diff_eq!(w.alpha()[(0, 1)], 0.0853362, epsilon = 1e-6);
        // d = √10: erf(√10 / (2√2)) / 20.
        assert_abs_diff_eq!(w.alpha()[(0, 2)], 0.0443077, epsilon = 1e-6);
        assert_eq!(w.alpha()[(0, 0)], 0.0);
        assert_eq!(w.alpha()[(0, 1)], w.alpha()[(1, 0)]);
    }

    #[test]
    fn apac_decreases_beyond_the_mode() {
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let d = 1.0 + i as f64 * 0.5;
            let a = erf(d / (2.0 * 2.0f64.sqrt())) / (2.0 * d * d);
            assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn pow_values() {
        let w = pow_weights(&fixture_distances(), 3).unwrap();
        assert_abs_diff_eq!(w.alpha()[(0, 1)], 0.125, epsilon = 0.0);
        assert_abs_diff_eq!(w.alpha()[(0, 2)], 10.0f64.powf(-1.5), epsilon = 1e-12);
        assert!(pow_weights(&fixture_distances(), 2).is_err());
    }

    #[test]
    fn pow_unit_distance_is_one_for_any_m() {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        for m in [3, 5, 9] {
            let w = pow_weights(&ClassDistances { d: d.clone() }, m).unwrap();
            assert_eq!(w.alpha()[(0, 1)], 1.0);
        }
    }

    #[test]
    fn degenerate_distance_is_an_error() {
        let d = DMatrix::zeros(2, 2);
        assert!(apac_weights(&ClassDistances { d: d.clone() }).is_err());
        assert!(pow_weights(&ClassDistances { d }, 3).is_err());
    }

    #[test]
    fn cdm_separated_classes_give_all_zero() {
        // Far-apart classes are perfectly classified: every weight is zero.
        let w = cdm_weights(&toy_three_class()).unwrap();
        assert_eq!(w.alpha().amax(), 0.0);
        assert!(w.has_zero_row().is_some());
    }

    #[test]
    fn cdm_rows_sum_to_misclassification_rate() {
        // Two heavily overlapping classes: row sums equal the per-class
        // training error of the QDA oracle, which is strictly positive here.
        let samples = DMatrix::from_column_slice(
            1,
            8,
            &[0.0, 1.0, 2.0, 3.0, 0.5, 1.5, 2.5, 3.5],
        );
        let data = LabeledDataset::new(samples, vec![1, 1, 1, 1, 2, 2, 2, 2]).unwrap();
        let w = cdm_weights(&data).unwrap();
        for r in 0..2 {
            let sum: f64 = w.alpha().row(r).iter().sum();
            assert!((0.0..=1.0).contains(&sum));
        }
        assert!(w.alpha().sum() > 0.0);
    }

    #[test]
    fn knn_pattern_on_fixture() {
        // Classes 1 and 2 are mutual nearest; class 3 ties between 1 and 2
        // at √10 and the lower index wins.
        let w = knn_weights(&fixture_distances(), 1).unwrap();
        let a = w.alpha();
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(2, 0)], 1.0);
        assert_eq!(a[(0, 2)], 0.0);
        assert_eq!(a[(1, 2)], 0.0);
        assert_eq!(a[(2, 1)], 0.0);
    }

    #[test]
    fn knn_row_sums_and_full_neighborhood() {
        let dist = fixture_distances();
        for k in 1..=2 {
            let w = knn_weights(&dist, k).unwrap();
            for r in 0..3 {
                let sum: f64 = w.alpha().row(r).iter().sum();
                assert_eq!(sum, k as f64);
            }
        }
        let w = knn_weights(&dist, 2).unwrap();
        assert!(w.alpha().iter().zip(WeightMatrix::uniform(3).alpha().iter()).all(|(a, b)| a == b));
        assert!(knn_weights(&dist, 0).is_err());
        assert!(knn_weights(&dist, 3).is_err());
    }

    #[test]
    fn cosine_values_on_fixture() {
        let w = cosine_weights(&class_statistics(&toy_three_class()).unwrap()).unwrap();
        // Dot-product oracle: μ₁·μ₂ = 4, ‖μ₁‖ = √2, ‖μ₂‖ = √10.
        let expect = 0.5 * (1.0 + 4.0 / (2.0f64.sqrt() * 10.0f64.sqrt()));
        assert_abs_diff_eq!(w.alpha()[(0, 1)], expect, epsilon = 1e-12);
        assert_abs_diff_eq!(w.alpha()[(0, 1)], 0.9472, epsilon = 1e-4);
        assert_eq!(w.alpha()[(0, 1)], w.alpha()[(1, 0)]);
        for v in w.alpha().iter() {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn cosine_parallel_and_orthogonal_means() {
        let samples = DMatrix::from_column_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 3.0]);
        let data = LabeledDataset::new(samples, vec![1, 1, 2, 2]).unwrap();
        let w = cosine_weights(&class_statistics(&data).unwrap()).unwrap();
        assert_abs_diff_eq!(w.alpha()[(0, 1)], 0.5, epsilon = 1e-12);

        let samples = DMatrix::from_column_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0]);
        let data = LabeledDataset::new(samples, vec![1, 1, 2, 2]).unwrap();
        let w = cosine_weights(&class_statistics(&data).unwrap()).unwrap();
        assert_abs_diff_eq!(w.alpha()[(0, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_norm_mean_is_an_error() {
        let samples = DMatrix::from_column_slice(2, 4, &[-1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 3.0]);
        let data = LabeledDataset::new(samples, vec![1, 1, 2, 2]).unwrap();
        assert!(cosine_weights(&class_statistics(&data).unwrap()).is_err());
    }

    #[test]
    fn kernel_cosine_rbf_on_fixture() {
        let stats = class_statistics(&toy_three_class()).unwrap();
        let w = kernel_cosine_weights(&stats, &KernelSpec::Rbf { gamma: 0.1 }).unwrap();
        // RBF self-similarity is 1, so K̂₁₂ = exp(-0.1 · d²₁₂) = exp(-0.4).
        assert_abs_diff_eq!(w.alpha()[(0, 1)], (-0.4f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.alpha()[(0, 1)], 0.670320, epsilon = 1e-6);
        assert_eq!(w.alpha()[(1, 1)], 0.0);
    }

    #[test]
    fn kernel_cosine_linear_equals_plain_cosine_shape() {
        // For the linear kernel, K̂ is exactly the cosine of the means, so
        // the weights match 2·cw − 1 mapped through the clipping rule.
        let stats = class_statistics(&toy_three_class()).unwrap();
        let w_lin = kernel_cosine_weights(&stats, &KernelSpec::Linear).unwrap();
        let w_cos = cosine_weights(&stats).unwrap();
        for r in 0..3 {
            for l in 0..3 {
                if r != l {
                    let cos = 2.0 * w_cos.alpha()[(r, l)] - 1.0;
                    assert_abs_diff_eq!(w_lin.alpha()[(r, l)], cos.clamp(0.0, 1.0), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let w = cosine_weights(&class_statistics(&toy_three_class()).unwrap()).unwrap();
        w.write_csv(&p).unwrap();
        let w2 = WeightMatrix::read_csv(&p, WeightScheme::Cosine).unwrap();
        assert_eq!(w.alpha(), w2.alpha());
    }

    #[test]
    fn rejects_negative_and_nonzero_diagonal() {
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 1)] = -1.0;
        assert!(WeightMatrix::new(alpha, WeightScheme::Custom("x".into())).is_err());
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 0)] = 1.0;
        assert!(WeightMatrix::new(alpha, WeightScheme::Custom("x".into())).is_err());
    }
}
