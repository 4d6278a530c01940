//! Shared numerical kernels: the symmetric-definite generalized eigensolver,
//! vectorization and Kronecker utilities, and the error function.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Result of a symmetric-definite generalized eigendecomposition `A v = λ (B + εI) v`.
///
/// Eigenvalues are sorted descending; column `k` of `eigenvectors` pairs with
/// `eigenvalues[k]` and the basis is B-orthonormal: `Vᵀ (B + εI) V = I`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenResult {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// The ridge actually added to the right-hand matrix.
    pub epsilon: f64,
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let scale = 1.0 + m.amax();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Numerical(format!(
                    "{name} is not symmetric: |{name}[{i},{j}] - {name}[{j},{i}]| = {}",
                    (m[(i, j)] - m[(j, i)]).abs()
                )));
            }
        }
    }
    Ok(())
}

/// Fix the sign of each eigenvector so its largest-magnitude component is
/// positive, ties going to the lowest index.
fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Solve the symmetric-definite generalized eigenproblem `(A, B + εI)`.
///
/// `ε = ridge · trace(B) / m`, falling back to an absolute floor of `1e-12`
/// when the trace is nonpositive. The route is Cholesky whitening: factor
/// `B + εI = L Lᵀ`, solve the ordinary symmetric problem for
/// `L⁻¹ A L⁻ᵀ`, and map eigenvectors back through `L⁻ᵀ`, which makes the
/// returned basis B-orthonormal by construction.
pub fn generalized_eig(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    ridge: f64,
) -> Result<GeneralizedEigenResult> {
    let m = a.nrows();
    if a.ncols() != m || b.nrows() != m || b.ncols() != m {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if ridge < 0.0 {
        return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {ridge}")));
    }
    check_symmetric(a, "A")?;
    check_symmetric(b, "B")?;

    let epsilon = if ridge > 0.0 {
        let t = b.trace();
        if t > 0.0 {
            ridge * t / m as f64
        } else {
            1e-12
        }
    } else {
        0.0
    };

    let mut b_reg = b.clone();
    for i in 0..m {
        b_reg[(i, i)] += epsilon;
    }

    let chol = b_reg.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "B + εI is not positive definite after regularization (m = {m}, ε = {epsilon:e}, trace(B) = {:e})",
            b.trace()
        ))
    })?;

    // C = L⁻¹ A L⁻ᵀ, symmetrized against rounding.
    let l = chol.l();
    let mut c = a.clone();
    l.solve_lower_triangular_mut(&mut c);
    c.transpose_mut();
    l.solve_lower_triangular_mut(&mut c);
    let c = (&c + c.transpose()) * 0.5;

    let eig = c.symmetric_eigen();

    // Sort descending and map back: v = L⁻ᵀ q.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    let mut eigenvalues = DVector::zeros(m);
    let mut q = DMatrix::zeros(m, m);
    for (k, &i) in order.iter().enumerate() {
        eigenvalues[k] = eig.eigenvalues[i];
        q.set_column(k, &eig.eigenvectors.column(i));
    }
    let mut eigenvectors = l.transpose().solve_upper_triangular(&q).ok_or_else(|| {
        Error::Numerical("back-substitution through the Cholesky factor failed".into())
    })?;

    // When B is ill-conditioned the round trip through L loses a few digits
    // of B-orthonormality; one Cholesky polish of the small Gram matrix
    // restores it without changing the spanned subspaces.
    let vbv = eigenvectors.transpose() * &b_reg * &eigenvectors;
    let vbv = (&vbv + vbv.transpose()) * 0.5;
    if let Some(chol_g) = vbv.cholesky() {
        if let Some(inv_lt) = chol_g.l().transpose().try_inverse() {
            eigenvectors *= inv_lt;
        }
    }
    fix_signs(&mut eigenvectors);

    Ok(GeneralizedEigenResult { eigenvalues, eigenvectors, epsilon })
}

/// Error function, odd by construction, absolute error below 1.5e-7.
///
/// Rational Chebyshev approximation of the complementary error function
/// (fractional error < 1.2e-7 everywhere).
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let tau = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    let erfc = tau;
    let e = 1.0 - erfc;
    if x >= 0.0 {
        e
    } else {
        -e
    }
}

/// Column-stacking vectorization (Magnus-Neudecker convention).
pub fn vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`]: reshape a column-stacked vector into `rows × cols`.
pub fn devec(v: &DVector<f64>, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    if v.len() != rows * cols {
        return Err(Error::InvalidInput(format!(
            "devec: vector of length {} cannot fill a {rows}x{cols} matrix",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Kronecker product `A ⊗ B`; block (i, j) equals `A[i,j] · B`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Cosines of the principal angles between the column spans of two bases
/// with the same ambient dimension, descending. Two spans coincide when all
/// cosines are 1.
pub fn principal_angle_cosines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::InvalidInput(format!(
            "bases live in different ambient dimensions ({} vs {})",
            a.nrows(),
            b.nrows()
        )));
    }
    let qa = orthonormal_columns(a);
    let qb = orthonormal_columns(b);
    let svd = (qa.transpose() * qb).svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().map(|v| v.min(1.0)).collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(DVector::from_vec(s))
}

/// Gram-Schmidt orthonormal basis of the (numerically nonzero) columns.
fn orthonormal_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for col in m.column_iter() {
        let mut v = col.into_owned();
        for q in &cols {
            let proj = q.dot(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm > 1e-12 * (1.0 + m.amax()) {
            cols.push(v / norm);
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
