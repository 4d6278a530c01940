//! Automatically weighted FDA and kernel FDA: alternating optimization over
//! the projection basis and per-class diagonal weight matrices, with
//! backtracking gradient steps and hard-threshold (ℓ0) projection.
//!
//! One outer iteration solves the generalized eigenproblem for the current
//! weights, then takes one Armijo-line-searched gradient step on each class's
//! weight vector, clips negatives, and projects onto the sparsity budget.
//! The between-class scatter is row-normalized by ‖A_r‖²_F throughout so the
//! weights cannot grow without bound.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{class_statistics, ClassStatistics, LabeledDataset};
use crate::error::{Error, Result};
use crate::fda::{input_rank_bound, DiscriminantModel, TrainRef};
use crate::kfda::{
    feature_rank_bound, feature_within_scatter, gram, kernel_class_quantities,
    KernelClassQuantities, KernelSpec,
};
use crate::linalg::generalized_eig;
use crate::scatter::within_scatter;
use crate::weighting::{WeightMatrix, WeightScheme};

/// Parameters of the alternating-optimization loop.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AwConfig {
    /// Sparsity budget per class: at most k nonzero weights in each A_r.
    pub k: usize,
    pub max_outer_iters: usize,
    /// Relative objective change below which the loop stops.
    pub tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Multiplicative backtracking factor in (0, 1).
    pub backtrack: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
}

impl AwConfig {
    /// Defaults for a given sparsity budget.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_outer_iters: 50,
            tol: 1e-6,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_backtracks: 30,
        }
    }

    fn validate(&self, c: usize) -> Result<()> {
        if self.k < 1 || self.k > c {
            return Err(Error::InvalidParameter(format!(
                "sparsity budget k = {} outside [1, c] = [1, {c}]",
                self.k
            )));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter("max_outer_iters must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return Err(Error::InvalidParameter("armijo_c1 must lie in (0, 1)".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter("backtrack factor must lie in (0, 1)".into()));
        }
        if !(self.initial_step >= 0.0) {
            return Err(Error::InvalidParameter("initial_step must be >= 0".into()));
        }
        Ok(())
    }
}

/// Objective trace and final weights of an alternating fit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitReport {
    /// f after each basis update; length equals `iterations`.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub weights: WeightMatrix,
}

impl FitReport {
    /// Structured text form for CLI output.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// The space-independent pieces the weight objective needs: per-class
/// mean-difference matrices (M_r in the input space, Ξ_r in the feature
/// space), class sizes, and the size diagonal.
struct WeightProblem<'a> {
    diffs: &'a [DMatrix<f64>],
    sizes: &'a [usize],
}

impl WeightProblem<'_> {
    fn classes(&self) -> usize {
        self.sizes.len()
    }

    /// `n_ℓ · ‖Bᵀ (column ℓ of M_r)‖²` for each ℓ: the per-pair contribution
    /// of class r at the current basis.
    fn pair_gains(&self, basis: &DMatrix<f64>, r: usize) -> DVector<f64> {
        let p = basis.transpose() * &self.diffs[r];
        DVector::from_iterator(
            self.classes(),
            (0..self.classes()).map(|l| self.sizes[l] as f64 * p.column(l).norm_squared()),
        )
    }

    /// Objective contribution of class r's weight row (the full objective is
    /// the sum over rows; rows do not interact).
    fn row_objective(&self, gains: &DVector<f64>, r: usize, a: &DVector<f64>) -> f64 {
        let s: f64 = a.iter().map(|x| x * x).sum();
        -(self.sizes[r] as f64 / s) * a.dot(gains)
    }

    /// f = −tr(Bᵀ Ŝ_B B) with the row-normalized weighted scatter.
    fn objective(&self, basis: &DMatrix<f64>, rows: &[DVector<f64>]) -> Result<f64> {
        let mut f = 0.0;
        for r in 0..self.classes() {
            let s: f64 = rows[r].iter().map(|x| x * x).sum();
            if s == 0.0 {
                return Err(Error::DegenerateWeights(format!(
                    "weight row for class {} is all zero",
                    r + 1
                )));
            }
            let gains = self.pair_gains(basis, r);
            f += self.row_objective(&gains, r, &rows[r]);
        }
        Ok(f)
    }

    /// Exact gradient of f with respect to the full c×c matrix A_r.
    ///
    /// With Ḡ = n_r M_rᵀ (−BBᵀ) M_r N and s = ‖A_r‖²_F the chain rule gives
    /// ∂f/∂A_r = Ḡ/s − (2⟨Ḡ, A_r⟩/s²)·A_r. (The normalization Jacobian is
    /// I/s − (2/s²)·vec(A_r)vec(A_r)ᵀ.)
    fn grad_full(&self, basis: &DMatrix<f64>, r: usize, a: &DVector<f64>) -> Result<DMatrix<f64>> {
        let s: f64 = a.iter().map(|x| x * x).sum();
        if s == 0.0 {
            return Err(Error::DegenerateWeights(format!(
                "weight row for class {} is all zero",
                r + 1
            )));
        }
        let c = self.classes();
        let p = basis.transpose() * &self.diffs[r];
        // Ḡ = −n_r Pᵀ P N.
        let mut gbar = p.transpose() * &p;
        for l in 0..c {
            let col_scale = self.sizes[l] as f64;
            for i in 0..c {
                gbar[(i, l)] *= -(self.sizes[r] as f64) * col_scale;
            }
        }
        let inner: f64 = (0..c).map(|l| a[l] * gbar[(l, l)]).sum();
        let mut grad = gbar / s;
        let coeff = 2.0 * inner / (s * s);
        for l in 0..c {
            grad[(l, l)] -= coeff * a[l];
        }
        Ok(grad)
    }
}

fn input_problem(stats: &ClassStatistics) -> WeightProblem<'_> {
    WeightProblem { diffs: &stats.mean_diffs, sizes: &stats.sizes }
}

fn feature_problem(q: &KernelClassQuantities) -> WeightProblem<'_> {
    WeightProblem { diffs: &q.mean_diffs, sizes: &q.sizes }
}

fn rows_of(w: &WeightMatrix) -> Vec<DVector<f64>> {
    (0..w.num_classes()).map(|r| w.alpha().row(r).transpose()).collect()
}

/// `f = −tr(Uᵀ Ŝ_B U)` with the Frobenius-normalized weighted scatter,
/// input space.
pub fn aw_objective_input(
    basis: &DMatrix<f64>,
    stats: &ClassStatistics,
    w: &WeightMatrix,
) -> Result<f64> {
    w.check_classes(stats.sizes.len())?;
    input_problem(stats).objective(basis, &rows_of(w))
}

/// `f = −tr(Yᵀ Δ̂_B Y)` with the Frobenius-normalized weighted scatter,
/// feature space.
pub fn aw_objective_feature(
    basis: &DMatrix<f64>,
    q: &KernelClassQuantities,
    w: &WeightMatrix,
) -> Result<f64> {
    w.check_classes(q.sizes.len())?;
    feature_problem(q).objective(basis, &rows_of(w))
}

/// Gradient of the input-space objective with respect to A_r (1-based class
/// id), as a full c×c matrix whose diagonal holds the free variables.
pub fn grad_weights_input(
    basis: &DMatrix<f64>,
    stats: &ClassStatistics,
    w: &WeightMatrix,
    r: usize,
) -> Result<DMatrix<f64>> {
    w.check_classes(stats.sizes.len())?;
    let a = w.alpha().row(r - 1).transpose();
    input_problem(stats).grad_full(basis, r - 1, &a)
}

/// Feature-space counterpart of [`grad_weights_input`], with Ξ_r in place of
/// M_r.
pub fn grad_weights_feature(
    basis: &DMatrix<f64>,
    q: &KernelClassQuantities,
    w: &WeightMatrix,
    r: usize,
) -> Result<DMatrix<f64>> {
    w.check_classes(q.sizes.len())?;
    let a = w.alpha().row(r - 1).transpose();
    feature_problem(q).grad_full(basis, r - 1, &a)
}

/// Hard-threshold projection: zero all but the k largest entries
/// (ties keep the lower index). `k = c` is the identity.
pub fn l0_project(a: &DVector<f64>, k: usize) -> DVector<f64> {
    let c = a.len();
    assert!(k >= 1 && k <= c, "sparsity budget k = {k} outside [1, {c}]");
    if k == c {
        return a.clone();
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| a[j].partial_cmp(&a[i]).unwrap().then(i.cmp(&j)));
    let mut out = DVector::zeros(c);
    for &i in order.iter().take(k) {
        out[i] = a[i];
    }
    out
}

/// Outcome of a backtracking line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub step: f64,
    /// True when no step within the backtracking budget satisfied the Armijo
    /// condition; the caller should leave the iterate unchanged.
    pub stalled: bool,
}

/// Largest step `η = η₀·βʲ` satisfying the Armijo decrease
/// `f(a − ηg) ≤ f(a) − c₁·η·‖g‖²_F`.
pub fn backtracking_line_search<F>(
    f_at: F,
    a: &DVector<f64>,
    gradient: &DVector<f64>,
    cfg: &AwConfig,
) -> LineSearchResult
where
    F: Fn(&DVector<f64>) -> f64,
{
    let f0 = f_at(a);
    let g_sq = gradient.norm_squared();
    let mut eta = cfg.initial_step;
    for _ in 0..=cfg.max_backtracks {
        let candidate = a - gradient * eta;
        let f1 = f_at(&candidate);
        if f1.is_finite() && f1 <= f0 - cfg.armijo_c1 * eta * g_sq {
            return LineSearchResult { step: eta, stalled: false };
        }
        eta *= cfg.backtrack;
    }
    LineSearchResult { step: 0.0, stalled: true }
}

/// One gradient-descent step with line search, nonnegativity clipping, and ℓ0
/// projection on a single class's weight vector. Rows are independent given a
/// fixed basis, so update order does not matter.
fn update_row(
    problem: &WeightProblem<'_>,
    basis: &DMatrix<f64>,
    r: usize,
    a: &DVector<f64>,
    cfg: &AwConfig,
) -> Result<DVector<f64>> {
    let gains = problem.pair_gains(basis, r);
    let grad_full = problem.grad_full(basis, r, a)?;
    let grad = grad_full.diagonal();
    let ls = backtracking_line_search(
        |v| problem.row_objective(&gains, r, v),
        a,
        &grad,
        cfg,
    );
    let mut stepped = if ls.stalled { a.clone() } else { a - grad * ls.step };
    for v in stepped.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mut projected = l0_project(&stepped, cfg.k);
    if projected.amax() == 0.0 {
        // Projection (or clipping) zeroed the row: restore the largest
        // pre-projection entry so the normalized scatter stays defined.
        let mut best = 0usize;
        for i in 0..stepped.len() {
            if stepped[i] > stepped[best] {
                best = i;
            }
        }
        if stepped[best] > 0.0 {
            projected[best] = stepped[best];
        } else {
            return Err(Error::DegenerateWeights(format!(
                "weight row for class {} vanished during the descent step",
                r + 1
            )));
        }
    }
    Ok(projected)
}

/// Assemble the row-normalized weighted scatter from raw weight rows.
fn normalized_scatter(
    diffs: &[DMatrix<f64>],
    sizes: &[usize],
    size_diag: &DMatrix<f64>,
    rows: &[DVector<f64>],
) -> Result<DMatrix<f64>> {
    let ambient = diffs[0].nrows();
    let mut s = DMatrix::zeros(ambient, ambient);
    for r in 0..sizes.len() {
        let norm_sq: f64 = rows[r].iter().map(|x| x * x).sum();
        if norm_sq == 0.0 {
            return Err(Error::DegenerateWeights(format!(
                "weight row for class {} is all zero",
                r + 1
            )));
        }
        let a = DMatrix::from_diagonal(&(&rows[r] / norm_sq));
        let m = &diffs[r];
        s += m * a * size_diag * m.transpose() * sizes[r] as f64;
    }
    Ok(s)
}

struct AlternatingOutcome {
    basis: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    report: FitReport,
}

/// The shared alternating loop; `within` is S_W or Δ_W, `diffs` M_r or Ξ_r.
fn alternate(
    diffs: &[DMatrix<f64>],
    sizes: &[usize],
    size_diag: &DMatrix<f64>,
    within: &DMatrix<f64>,
    p: usize,
    cfg: &AwConfig,
    ridge: f64,
) -> Result<AlternatingOutcome> {
    let c = sizes.len();
    cfg.validate(c)?;
    let problem = WeightProblem { diffs, sizes };

    // All-ones start: the first basis update reproduces the unweighted fit.
    let mut rows: Vec<DVector<f64>> = (0..c).map(|_| DVector::from_element(c, 1.0)).collect();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut basis = DMatrix::zeros(diffs[0].nrows(), p);
    let mut eigenvalues = DVector::zeros(p);

    for outer in 0..cfg.max_outer_iters {
        let s_hat = normalized_scatter(diffs, sizes, size_diag, &rows)?;
        let eig = generalized_eig(&s_hat, within, ridge)?;
        basis = eig.eigenvectors.columns(0, p).into_owned();
        eigenvalues = eig.eigenvalues.rows(0, p).into_owned();
        let f = problem.objective(&basis, &rows)?;
        if !f.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became non-finite at outer iteration {outer}"
            )));
        }
        if let Some(&prev) = trace.last() {
            if (f - prev).abs() / f.abs().max(1.0) < cfg.tol {
                trace.push(f);
                converged = true;
                break;
            }
        }
        trace.push(f);
        if outer + 1 == cfg.max_outer_iters {
            break;
        }
        for r in 0..c {
            rows[r] = update_row(&problem, &basis, r, &rows[r], cfg)?;
        }
    }

    // Exported weights follow the zero-diagonal convention; the self entry
    // never contributes to the scatter.
    let mut alpha = DMatrix::zeros(c, c);
    for r in 0..c {
        for l in 0..c {
            if l != r {
                alpha[(r, l)] = rows[r][l];
            }
        }
    }
    let weights = WeightMatrix::new(alpha, WeightScheme::Auto { k: cfg.k })?;
    let iterations = trace.len();
    Ok(AlternatingOutcome {
        basis,
        eigenvalues,
        report: FitReport { objective_trace: trace, converged, iterations, weights },
    })
}

/// Automatically weighted FDA in the input space.
pub fn fit_aw_fda(
    train: &LabeledDataset,
    p: usize,
    cfg: &AwConfig,
    ridge: f64,
) -> Result<(DiscriminantModel, FitReport)> {
    let bound = input_rank_bound(train);
    if p == 0 || p > bound {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension p = {p} outside [1, {bound}] (rank bound)"
        )));
    }
    let stats = class_statistics(train)?;
    let s_w = within_scatter(&stats);
    let outcome = alternate(
        &stats.mean_diffs,
        &stats.sizes,
        &stats.size_diag,
        &s_w,
        p,
        cfg,
        ridge,
    )?;
    let model = DiscriminantModel::new_input_space(
        outcome.basis,
        outcome.eigenvalues,
        format!("aw-fda(k={})", cfg.k),
    );
    Ok((model, outcome.report))
}

/// Automatically weighted kernel FDA.
pub fn fit_aw_kfda(
    train: &LabeledDataset,
    kernel: &KernelSpec,
    p: usize,
    cfg: &AwConfig,
    ridge: f64,
) -> Result<(DiscriminantModel, FitReport)> {
    let bound = feature_rank_bound(train);
    if p == 0 || p > bound {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension p = {p} outside [1, {bound}] (rank bound)"
        )));
    }
    let k_full = gram(kernel, train.samples(), train.samples())?;
    let q = kernel_class_quantities(&k_full, train.labels())?;
    let d_w = feature_within_scatter(&q);
    let outcome = alternate(&q.mean_diffs, &q.sizes, &q.size_diag, &d_w, p, cfg, ridge)?;
    let model = DiscriminantModel::new_feature_space(
        outcome.basis,
        outcome.eigenvalues,
        TrainRef { samples: train.samples().clone(), kernel: kernel.clone() },
        format!("aw-kfda(k={})", cfg.k),
    );
    Ok((model, outcome.report))
}
