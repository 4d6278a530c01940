//! Input-space scatter matrices: within-class, between-class, weighted
//! between-class, and the Frobenius-normalized weighted form used by the
//! automatic weighting loop.
//!
//! The within-class scatter carries an n_r multiplier on each class block,
//! matching the matrix forms used throughout this crate:
//! `S_W = Σ_r n_r X̆_r X̆_rᵀ` and `Ŝ_B = Σ_r n_r M_r A_r N M_rᵀ`.

use nalgebra::DMatrix;

use crate::dataset::ClassStatistics;
use crate::error::{Error, Result};
use crate::weighting::WeightMatrix;

/// `S_W = Σ_r n_r X̆_r X̆_rᵀ`.
pub fn within_scatter(stats: &ClassStatistics) -> DMatrix<f64> {
    let d = stats.means[0].len();
    let mut s = DMatrix::zeros(d, d);
    for r in 0..stats.sizes.len() {
        let block = &stats.centered[r];
        s += block * block.transpose() * stats.sizes[r] as f64;
    }
    s
}

/// `S_B = Σ_r n_r M_r N M_rᵀ`.
pub fn between_scatter(stats: &ClassStatistics) -> DMatrix<f64> {
    let d = stats.means[0].len();
    let mut s = DMatrix::zeros(d, d);
    for r in 0..stats.sizes.len() {
        let m = &stats.mean_diffs[r];
        s += m * &stats.size_diag * m.transpose() * stats.sizes[r] as f64;
    }
    s
}

/// `Ŝ_B = Σ_r n_r M_r A_r N M_rᵀ` with `A_r = diag(row r of the weights)`.
pub fn weighted_between_scatter(stats: &ClassStatistics, w: &WeightMatrix) -> Result<DMatrix<f64>> {
    let c = stats.sizes.len();
    w.check_classes(c)?;
    let d = stats.means[0].len();
    let mut s = DMatrix::zeros(d, d);
    for r in 0..c {
        let a_r = w.row_diag(r + 1);
        let m = &stats.mean_diffs[r];
        s += m * a_r * &stats.size_diag * m.transpose() * stats.sizes[r] as f64;
    }
    Ok(s)
}

/// Weighted between-class scatter with per-row Frobenius-squared
/// normalization `Ă_r = A_r / ‖A_r‖²_F`, which keeps iteratively updated
/// weights from growing without bound.
pub fn normalized_weighted_between_scatter(
    stats: &ClassStatistics,
    w: &WeightMatrix,
) -> Result<DMatrix<f64>> {
    let c = stats.sizes.len();
    w.check_classes(c)?;
    let d = stats.means[0].len();
    let mut s = DMatrix::zeros(d, d);
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
        let m = &stats.mean_diffs[r];
        s += m * a_r * &stats.size_diag * m.transpose() * stats.sizes[r] as f64;
    }
    Ok(s)
}
