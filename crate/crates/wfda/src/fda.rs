//! Fisher discriminant analysis in the input space, plain and weighted, plus
//! the fitted-model container shared with the feature-space variants.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{class_statistics, LabeledDataset, Standardizer};
use crate::error::{Error, Result};
use crate::kfda::KernelSpec;
use crate::linalg::generalized_eig;
use crate::scatter::{between_scatter, weighted_between_scatter, within_scatter};
use crate::weighting::WeightMatrix;

/// Whether a model projects with an input-space basis U (d×p) or with kernel
/// coefficients Y (n×p) over retained training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    InputSpace,
    FeatureSpace,
}

/// Training data retained by feature-space models for out-of-sample
/// projection.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainRef {
    /// The training matrix the Gram matrix was built on (post any
    /// standardization), d × n.
    pub samples: DMatrix<f64>,
    pub kernel: KernelSpec,
}

const MODEL_FORMAT: &str = "wfda-model";
const MODEL_VERSION: u32 = 1;

/// A fitted projection: basis U (input space) or coefficients Y (feature
/// space), the leading generalized eigenvalues, and an optional standardizer
/// applied before projection.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiscriminantModel {
    format: String,
    version: u32,
    pub kind: ModelKind,
    /// d×p basis (input space) or n×p coefficients (feature space).
    pub basis: DMatrix<f64>,
    pub p: usize,
    pub eigenvalues: DVector<f64>,
    pub standardizer: Option<Standardizer>,
    pub train_ref: Option<TrainRef>,
    /// Human-readable tag of the fitting method, carried into reports.
    pub method: String,
}

impl DiscriminantModel {
    pub(crate) fn new_input_space(
        basis: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        method: String,
    ) -> Self {
        let p = basis.ncols();
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            kind: ModelKind::InputSpace,
            basis,
            p,
            eigenvalues,
            standardizer: None,
            train_ref: None,
            method,
        }
    }

    pub(crate) fn new_feature_space(
        basis: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        train_ref: TrainRef,
        method: String,
    ) -> Self {
        let p = basis.ncols();
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            kind: ModelKind::FeatureSpace,
            basis,
            p,
            eigenvalues,
            standardizer: None,
            train_ref: Some(train_ref),
            method,
        }
    }

    /// Attach a standardizer that will be applied to raw data before
    /// projection.
    pub fn with_standardizer(mut self, s: Standardizer) -> Self {
        self.standardizer = Some(s);
        self
    }

    /// Persist as a self-describing JSON container.
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(f), self)
            .map_err(|e| Error::Io(std::io::Error::other(e)))
    }

    /// Load a model written by [`DiscriminantModel::save`], checking the
    /// container header.
    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let model: DiscriminantModel = serde_json::from_reader(std::io::BufReader::new(f))
            .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Ingestion(format!(
                "{}: not a model container (format {:?})",
                path.display(),
                model.format
            )));
        }
        if model.version != MODEL_VERSION {
            return Err(Error::Ingestion(format!(
                "{}: unsupported container version {}",
                path.display(),
                model.version
            )));
        }
        Ok(model)
    }
}

/// Maximal informative subspace dimension for an input-space fit.
pub fn input_rank_bound(data: &LabeledDataset) -> usize {
    data.dim().min(data.len() - 1).min(data.num_classes() - 1)
}

fn check_p(p: usize, bound: usize) -> Result<()> {
    if p == 0 || p > bound {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension p = {p} outside [1, {bound}] (rank bound)"
        )));
    }
    Ok(())
}

/// Fit plain FDA: the p leading generalized eigenvectors of (S_B, S_W).
pub fn fit_fda(train: &LabeledDataset, p: usize, ridge: f64) -> Result<DiscriminantModel> {
    check_p(p, input_rank_bound(train))?;
    let stats = class_statistics(train)?;
    let s_w = within_scatter(&stats);
    let s_b = between_scatter(&stats);
    let eig = generalized_eig(&s_b, &s_w, ridge)?;
    Ok(DiscriminantModel::new_input_space(
        eig.eigenvectors.columns(0, p).into_owned(),
        eig.eigenvalues.rows(0, p).into_owned(),
        "fda".to_string(),
    ))
}

/// Fit weighted FDA: the p leading generalized eigenvectors of (Ŝ_B, S_W).
pub fn fit_weighted_fda(
    train: &LabeledDataset,
    w: &WeightMatrix,
    p: usize,
    ridge: f64,
) -> Result<DiscriminantModel> {
    check_p(p, input_rank_bound(train))?;
    if w.alpha().sum() == 0.0 {
        return Err(Error::DegenerateWeights(format!(
            "all class-pair weights are zero (scheme {})",
            w.scheme()
        )));
    }
    let stats = class_statistics(train)?;
    let s_w = within_scatter(&stats);
    let s_b = weighted_between_scatter(&stats, w)?;
    let eig = generalized_eig(&s_b, &s_w, ridge)?;
    Ok(DiscriminantModel::new_input_space(
        eig.eigenvectors.columns(0, p).into_owned(),
        eig.eigenvalues.rows(0, p).into_owned(),
        format!("w-fda:{}", w.scheme()),
    ))
}

/// Project raw data through an input-space model: `Uᵀ x` after the model's
/// standardizer.
pub fn project(model: &DiscriminantModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if model.kind != ModelKind::InputSpace {
        return Err(Error::Unsupported(
            "project() needs an input-space model; use kernel_project() for feature-space models"
                .into(),
        ));
    }
    let z = match &model.standardizer {
        Some(s) => s.transform_matrix(x)?,
        None => {
            if x.nrows() != model.basis.nrows() {
                return Err(Error::InvalidInput(format!(
                    "model expects {} features, data has {}",
                    model.basis.nrows(),
                    x.nrows()
                )));
            }
            x.clone()
        }
    };
    if z.nrows() != model.basis.nrows() {
        return Err(Error::InvalidInput(format!(
            "model expects {} features, data has {}",
            model.basis.nrows(),
            z.nrows()
        )));
    }
    Ok(model.basis.transpose() * z)
}
