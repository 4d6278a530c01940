//! Evaluation harness: 1-NN accuracy in fitted subspaces, an experiment
//! matrix over all weighting methods in both spaces, and Fisherface / weight
//! exports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::autoweight::{fit_aw_fda, fit_aw_kfda, AwConfig};
use crate::dataset::{
    class_statistics, split, standardize_apply, standardize_fit, LabeledDataset, SplitSpec,
};
use crate::error::{Error, Result};
use crate::fda::{fit_fda, fit_weighted_fda, project, DiscriminantModel, ModelKind};
use crate::kfda::{fit_kfda, fit_weighted_kfda, kernel_project, KernelSpec};
use crate::pgm::{write_pgm, GrayImage};
use crate::weighting::{
    apac_weights, cdm_weights, cosine_weights, kernel_cosine_weights, knn_weights, pow_weights,
    ClassDistances, WeightMatrix,
};

/// Whether a query point may pick itself as its nearest neighbor. Training
/// accuracy uses `Exclude` (leave-one-out), matching accuracy figures below
/// 100% on the training set; `Allow` is the plain rule for disjoint queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfMatch {
    Allow,
    /// Skip training column j for query column j; only meaningful when the
    /// query set is the training set in the same order.
    Exclude,
}

/// Fraction of queries whose Euclidean 1-NN in the training embedding has a
/// matching label. Ties go to the lowest training index.
pub fn one_nn_accuracy(
    train_embedded: &DMatrix<f64>,
    train_labels: &[usize],
    query_embedded: &DMatrix<f64>,
    query_labels: &[usize],
    self_match: SelfMatch,
) -> Result<f64> {
    let n = train_embedded.ncols();
    let m = query_embedded.ncols();
    if n == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if train_labels.len() != n || query_labels.len() != m {
        return Err(Error::InvalidInput("label count does not match sample count".into()));
    }
    if train_embedded.nrows() != query_embedded.nrows() {
        return Err(Error::InvalidInput(format!(
            "embedding dimensions differ: train {} vs query {}",
            train_embedded.nrows(),
            query_embedded.nrows()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidInput("empty query set".into()));
    }
    if self_match == SelfMatch::Exclude && (m != n || n < 2) {
        return Err(Error::InvalidInput(
            "self-match exclusion requires the query set to be the training set (n >= 2)".into(),
        ));
    }
    let mut correct = 0usize;
    for i in 0..m {
        let q = query_embedded.column(i);
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if self_match == SelfMatch::Exclude && j == i {
                continue;
            }
            let dist = (train_embedded.column(j) - q).norm_squared();
            if best.map_or(true, |(d, _)| dist < d) {
                best = Some((dist, j));
            }
        }
        let (_, j) = best.expect("at least one candidate");
        if train_labels[j] == query_labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / m as f64)
}

/// Weighting scheme of one experiment row, orthogonal to the space it runs
/// in. `CosineV1` means input-space cosine weights applied to the kernel
/// scatter; `CosineV2` computes the cosine in the feature space.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum BaseMethod {
    Uniform,
    Apac,
    Pow,
    Cdm,
    Knn,
    Cosine,
    CosineV1,
    CosineV2,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Input,
    Feature,
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Space::Input => write!(f, "input"),
            Space::Feature => write!(f, "feature"),
        }
    }
}

/// One requested experiment: a weighting scheme in a space.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MethodSpec {
    pub base: BaseMethod,
    pub space: Space,
}

impl MethodSpec {
    /// Parse a method tag as accepted on the command line.
    pub fn parse(tag: &str) -> Result<Self> {
        let (base, space) = match tag {
            "fda" => (BaseMethod::Uniform, Space::Input),
            "apac" => (BaseMethod::Apac, Space::Input),
            "pow" => (BaseMethod::Pow, Space::Input),
            "cdm" => (BaseMethod::Cdm, Space::Input),
            "knn" => (BaseMethod::Knn, Space::Input),
            "cw" => (BaseMethod::Cosine, Space::Input),
            "aw" => (BaseMethod::Auto, Space::Input),
            "kfda" => (BaseMethod::Uniform, Space::Feature),
            "w-kfda:apac" => (BaseMethod::Apac, Space::Feature),
            "w-kfda:pow" => (BaseMethod::Pow, Space::Feature),
            "w-kfda:cdm" => (BaseMethod::Cdm, Space::Feature),
            "w-kfda:knn" => (BaseMethod::Knn, Space::Feature),
            "cw-kfda:v1" => (BaseMethod::CosineV1, Space::Feature),
            "cw-kfda:v2" => (BaseMethod::CosineV2, Space::Feature),
            "aw-kfda" => (BaseMethod::Auto, Space::Feature),
            other => {
                return Err(Error::InvalidParameter(format!("unknown method tag '{other}'")))
            }
        };
        Ok(Self { base, space })
    }

    /// The same scheme in the other space. In the feature space the plain
    /// cosine becomes the feature-space cosine (v2).
    pub fn in_space(&self, space: Space) -> Self {
        let base = match (&self.base, space) {
            (BaseMethod::Cosine, Space::Feature) => BaseMethod::CosineV2,
            (BaseMethod::CosineV1, Space::Input) | (BaseMethod::CosineV2, Space::Input) => {
                BaseMethod::Cosine
            }
            (b, _) => b.clone(),
        };
        Self { base, space }
    }

    fn display_tag(&self, params: &EvalParams) -> String {
        match (&self.base, self.space) {
            (BaseMethod::Uniform, Space::Input) => "fda".to_string(),
            (BaseMethod::Uniform, Space::Feature) => "kfda".to_string(),
            (BaseMethod::Apac, Space::Input) => "apac".to_string(),
            (BaseMethod::Apac, Space::Feature) => "w-kfda:apac".to_string(),
            (BaseMethod::Pow, Space::Input) => format!("pow(m={})", params.pow_m),
            (BaseMethod::Pow, Space::Feature) => format!("w-kfda:pow(m={})", params.pow_m),
            (BaseMethod::Cdm, Space::Input) => "cdm".to_string(),
            (BaseMethod::Cdm, Space::Feature) => "w-kfda:cdm".to_string(),
            (BaseMethod::Knn, Space::Input) => format!("kNN(k={})", params.knn_k),
            (BaseMethod::Knn, Space::Feature) => format!("w-kfda:kNN(k={})", params.knn_k),
            (BaseMethod::Cosine, Space::Input) => "cw".to_string(),
            (BaseMethod::Cosine, Space::Feature) | (BaseMethod::CosineV2, Space::Feature) => {
                "cw-kfda:v2".to_string()
            }
            (BaseMethod::CosineV1, Space::Feature) => "cw-kfda:v1".to_string(),
            (BaseMethod::CosineV1, Space::Input) | (BaseMethod::CosineV2, Space::Input) => {
                "cw".to_string()
            }
            (BaseMethod::Auto, Space::Input) => format!("aw(k={})", params.aw.k),
            (BaseMethod::Auto, Space::Feature) => format!("aw-kfda(k={})", params.aw.k),
        }
    }
}

/// Shared parameters of one experiment run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalParams {
    pub p: usize,
    pub ridge: f64,
    pub kernel: KernelSpec,
    pub pow_m: u32,
    pub knn_k: usize,
    pub aw: AwConfig,
}

impl EvalParams {
    pub fn new(p: usize, kernel: KernelSpec, aw_k: usize) -> Self {
        Self { p, ridge: 1e-9, kernel, pow_m: 3, knn_k: 1, aw: AwConfig::new(aw_k) }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentRow {
    pub method: String,
    pub space: Space,
    pub p: usize,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Set when this method failed; the other fields stay empty.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentReport {
    pub dataset_id: String,
    pub split: SplitSpec,
    pub kernel: KernelSpec,
    pub rows: Vec<ExperimentRow>,
}

/// Report serialization formats (flag-selectable on the command line).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# dataset={}", self.dataset_id).unwrap();
        writeln!(
            out,
            "# train_fraction={} seed={} stratified={}",
            self.split.train_fraction, self.split.seed, self.split.stratified
        )
        .unwrap();
        writeln!(out, "# kernel={}", self.kernel).unwrap();
        writeln!(out, "method,space,p,train_accuracy,test_accuracy,error").unwrap();
        for row in &self.rows {
            let fmt_acc = |a: Option<f64>| match a {
                Some(v) => format!("{v:.6}"),
                None => String::new(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                row.method,
                row.space,
                row.p,
                fmt_acc(row.train_accuracy),
                fmt_acc(row.test_accuracy),
                row.error.as_deref().unwrap_or("").replace(',', ";"),
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }

    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<()> {
        std::fs::write(path, self.render(format))?;
        Ok(())
    }
}

/// Compute the weight matrix a scheme calls for, on the (standardized)
/// training set.
fn scheme_weights(
    base: &BaseMethod,
    train: &LabeledDataset,
    params: &EvalParams,
) -> Result<Option<WeightMatrix>> {
    let stats = class_statistics(train)?;
    let dist = ClassDistances::from_stats(&stats);
    let w = match base {
        BaseMethod::Uniform | BaseMethod::Auto => return Ok(None),
        BaseMethod::Apac => apac_weights(&dist)?,
        BaseMethod::Pow => pow_weights(&dist, params.pow_m)?,
        BaseMethod::Cdm => cdm_weights(train)?,
        BaseMethod::Knn => knn_weights(&dist, params.knn_k)?,
        BaseMethod::Cosine | BaseMethod::CosineV1 => cosine_weights(&stats)?,
        BaseMethod::CosineV2 => kernel_cosine_weights(&stats, &params.kernel)?,
    };
    if let Some(r) = w.has_zero_row() {
        return Err(Error::DegenerateWeights(format!(
            "weight row for class {} is all zero",
            r + 1
        )));
    }
    Ok(Some(w))
}

/// Weight matrix a scheme computes on the (standardized) training set;
/// `None` for unweighted and automatically weighted methods.
pub fn method_weights(
    base: &BaseMethod,
    train: &LabeledDataset,
    params: &EvalParams,
) -> Result<Option<WeightMatrix>> {
    scheme_weights(base, train, params)
}

/// Fit one method on an already standardized training set.
pub fn fit_method(
    spec: &MethodSpec,
    train: &LabeledDataset,
    params: &EvalParams,
) -> Result<DiscriminantModel> {
    let weights = scheme_weights(&spec.base, train, params)?;
    match (spec.space, &spec.base, weights) {
        (Space::Input, BaseMethod::Auto, _) => {
            fit_aw_fda(train, params.p, &params.aw, params.ridge).map(|(m, _)| m)
        }
        (Space::Feature, BaseMethod::Auto, _) => {
            fit_aw_kfda(train, &params.kernel, params.p, &params.aw, params.ridge)
                .map(|(m, _)| m)
        }
        (Space::Input, _, None) => fit_fda(train, params.p, params.ridge),
        (Space::Input, _, Some(w)) => fit_weighted_fda(train, &w, params.p, params.ridge),
        (Space::Feature, _, None) => fit_kfda(train, &params.kernel, params.p, params.ridge),
        (Space::Feature, _, Some(w)) => {
            fit_weighted_kfda(train, &params.kernel, &w, params.p, params.ridge)
        }
    }
}

fn embed(model: &DiscriminantModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match model.kind {
        ModelKind::InputSpace => project(model, x),
        ModelKind::FeatureSpace => kernel_project(model, x),
    }
}

/// Run one split-standardize-fit-score pipeline per requested method.
/// Per-method failures land in the row instead of aborting the run.
pub fn run_experiment_matrix(
    data: &LabeledDataset,
    dataset_id: &str,
    methods: &[MethodSpec],
    split_spec: &SplitSpec,
    params: &EvalParams,
) -> Result<ExperimentReport> {
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods requested".into()));
    }
    let (train_raw, test_raw) = split(data, split_spec)?;
    let standardizer = standardize_fit(&train_raw)?;
    let train = standardize_apply(&standardizer, &train_raw)?;

    let mut rows = Vec::with_capacity(methods.len());
    for spec in methods {
        let method = spec.display_tag(params);
        let outcome = fit_method(spec, &train, params).and_then(|model| {
            let model = model.with_standardizer(standardizer.clone());
            let train_emb = embed(&model, train_raw.samples())?;
            let test_emb = embed(&model, test_raw.samples())?;
            let train_acc = one_nn_accuracy(
                &train_emb,
                train_raw.labels(),
                &train_emb,
                train_raw.labels(),
                SelfMatch::Exclude,
            )?;
            let test_acc = one_nn_accuracy(
                &train_emb,
                train_raw.labels(),
                &test_emb,
                test_raw.labels(),
                SelfMatch::Allow,
            )?;
            Ok((train_acc, test_acc))
        });
        rows.push(match outcome {
            Ok((train_acc, test_acc)) => ExperimentRow {
                method,
                space: spec.space,
                p: params.p,
                train_accuracy: Some(train_acc),
                test_accuracy: Some(test_acc),
                error: None,
            },
            Err(e) => ExperimentRow {
                method,
                space: spec.space,
                p: params.p,
                train_accuracy: None,
                test_accuracy: None,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(ExperimentReport {
        dataset_id: dataset_id.to_string(),
        split: split_spec.clone(),
        kernel: params.kernel.clone(),
        rows,
    })
}

fn round_half_up_u8(x: f64) -> u8 {
    (x + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Write the leading `count` basis columns as 8-bit PGM images
/// `fisherface_<k>.pgm` (min-max normalized per column). Only input-space
/// models have a pixel basis.
pub fn export_fisherfaces(
    model: &DiscriminantModel,
    width: usize,
    height: usize,
    count: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if model.kind != ModelKind::InputSpace {
        return Err(Error::Unsupported(
            "Fisherfaces exist only for input-space models; the kernel basis has no pixel form"
                .into(),
        ));
    }
    if width * height != model.basis.nrows() {
        return Err(Error::InvalidParameter(format!(
            "image shape {width}x{height} does not match feature dimension {}",
            model.basis.nrows()
        )));
    }
    let count = if count > model.p {
        log::warn!("requested {count} fisherfaces but the model has p = {}; clipping", model.p);
        model.p
    } else {
        count
    };
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::with_capacity(count);
    for k in 0..count {
        let col = model.basis.column(k);
        let min = col.min();
        let max = col.max();
        let range = max - min;
        let pixels: Vec<u8> = if range <= f64::EPSILON * max.abs().max(1.0) {
            vec![0u8; width * height]
        } else {
            col.iter().map(|&v| round_half_up_u8((v - min) / range * 255.0)).collect()
        };
        let image = GrayImage { width, height, pixels };
        let path = out_dir.join(format!("fisherface_{}.pgm", k + 1));
        write_pgm(&path, &image)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Headerless c×c CSV at full precision.
pub fn export_weights(w: &WeightMatrix, out_path: &Path) -> Result<()> {
    w.write_csv(out_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::toy_three_class;
    use crate::pgm::read_pgm;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::prelude::*;

    fn all_input_methods() -> Vec<MethodSpec> {
        ["fda", "apac", "pow", "cdm", "knn", "cw", "aw"]
            .iter()
            .map(|t| MethodSpec::parse(t).unwrap())
            .collect()
    }

    fn separable_data(rng: &mut impl Rng, per_class: usize) -> LabeledDataset {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let mut cols = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per_class {
                cols.push(DVector::from_vec(vec![
                    center[0] + rng.gen_range(-0.5..0.5),
                    center[1] + rng.gen_range(-0.5..0.5),
                ]));
                labels.push(c + 1);
            }
        }
        LabeledDataset::new(DMatrix::from_columns(&cols), labels).unwrap()
    }

    #[test]
    fn self_match_allowed_gives_perfect_train_accuracy() {
        let data = toy_three_class();
        let acc = one_nn_accuracy(
            data.samples(),
            data.labels(),
            data.samples(),
            data.labels(),
            SelfMatch::Allow,
        )
        .unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn single_training_point_is_a_constant_classifier() {
        let train = DMatrix::from_vec(1, 1, vec![0.0]);
        let queries = DMatrix::from_vec(1, 3, vec![-5.0, 0.0, 9.0]);
        let acc =
            one_nn_accuracy(&train, &[2], &queries, &[2, 2, 1], SelfMatch::Allow).unwrap();
        assert_abs_diff_eq!(acc, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn nearest_point_wins() {
        let train = DMatrix::from_vec(1, 2, vec![0.0, 2.0]);
        let query = DMatrix::from_vec(1, 1, vec![0.9]);
        let acc = one_nn_accuracy(&train, &[1, 2], &query, &[1], SelfMatch::Allow).unwrap();
        assert_eq!(acc, 1.0);
        let acc2 = one_nn_accuracy(&train, &[1, 2], &query, &[2], SelfMatch::Allow).unwrap();
        assert_eq!(acc2, 0.0);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // Query equidistant from both training points with different labels.
        let train = DMatrix::from_vec(1, 2, vec![-1.0, 1.0]);
        let query = DMatrix::from_vec(1, 1, vec![0.0]);
        let acc = one_nn_accuracy(&train, &[1, 2], &query, &[1], SelfMatch::Allow).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let train = DMatrix::<f64>::zeros(1, 0);
        let query = DMatrix::from_vec(1, 1, vec![0.0]);
        assert!(one_nn_accuracy(&train, &[], &query, &[1], SelfMatch::Allow).is_err());
    }

    #[test]
    fn accuracy_invariant_under_rotation_and_scaling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let data = separable_data(&mut rng, 5);
        let queries = separable_data(&mut rng, 3);
        let base = one_nn_accuracy(
            data.samples(),
            data.labels(),
            queries.samples(),
            queries.labels(),
            SelfMatch::Allow,
        )
        .unwrap();
        // Random rotation from QR of a random matrix, plus a positive scale.
        let raw = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let q = raw.qr().q();
        let scale = 3.7;
        let rotated_train = (&q * data.samples()) * scale;
        let rotated_query = (&q * queries.samples()) * scale;
        let rotated = one_nn_accuracy(
            &rotated_train,
            data.labels(),
            &rotated_query,
            queries.labels(),
            SelfMatch::Allow,
        )
        .unwrap();
        assert_eq!(base, rotated);
    }

    #[test]
    fn method_tags_parse_and_roundtrip_space() {
        let spec = MethodSpec::parse("cw").unwrap();
        assert_eq!(spec.base, BaseMethod::Cosine);
        let feature = spec.in_space(Space::Feature);
        assert_eq!(feature.base, BaseMethod::CosineV2);
        assert!(MethodSpec::parse("nope").is_err());
        for tag in [
            "fda", "apac", "pow", "cdm", "knn", "cw", "aw", "kfda", "w-kfda:apac",
            "w-kfda:pow", "w-kfda:cdm", "w-kfda:knn", "cw-kfda:v1", "cw-kfda:v2", "aw-kfda",
        ] {
            MethodSpec::parse(tag).unwrap();
        }
    }

    #[test]
    fn fda_on_separable_data_is_perfect() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let data = separable_data(&mut rng, 8);
        let split = SplitSpec { train_fraction: 0.66, seed: 4, stratified: true };
        let params = EvalParams::new(2, KernelSpec::Rbf { gamma: 0.5 }, 3);
        let report = run_experiment_matrix(
            &data,
            "separable",
            &[MethodSpec::parse("fda").unwrap()],
            &split,
            &params,
        )
        .unwrap();
        let row = &report.rows[0];
        assert_eq!(row.error, None);
        assert_eq!(row.train_accuracy, Some(1.0));
        assert_eq!(row.test_accuracy, Some(1.0));
    }

    #[test]
    fn cdm_degeneracy_is_recorded_in_the_row() {
        // Perfectly separated classes: the training confusion is diagonal and
        // every off-diagonal CDM weight vanishes.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let data = separable_data(&mut rng, 8);
        let split = SplitSpec { train_fraction: 0.66, seed: 4, stratified: true };
        let params = EvalParams::new(2, KernelSpec::Rbf { gamma: 0.5 }, 3);
        let report = run_experiment_matrix(
            &data,
            "separable",
            &[MethodSpec::parse("cdm").unwrap(), MethodSpec::parse("fda").unwrap()],
            &split,
            &params,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 2);
        let cdm_row = &report.rows[0];
        assert!(cdm_row.error.is_some(), "expected a degeneracy error");
        assert_eq!(cdm_row.train_accuracy, None);
        // The failure must not poison the other row.
        assert_eq!(report.rows[1].error, None);
    }

    #[test]
    fn identical_seed_gives_byte_identical_reports() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let data = separable_data(&mut rng, 6);
        let split = SplitSpec { train_fraction: 0.66, seed: 12, stratified: true };
        let params = EvalParams::new(2, KernelSpec::Rbf { gamma: 0.5 }, 3);
        let methods = all_input_methods();
        let a = run_experiment_matrix(&data, "x", &methods, &split, &params).unwrap();
        let b = run_experiment_matrix(&data, "x", &methods, &split, &params).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn report_row_order_matches_request_order() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let data = separable_data(&mut rng, 6);
        let split = SplitSpec { train_fraction: 0.66, seed: 2, stratified: true };
        let params = EvalParams::new(2, KernelSpec::Rbf { gamma: 0.5 }, 3);
        let methods = vec![
            MethodSpec::parse("cw").unwrap(),
            MethodSpec::parse("fda").unwrap(),
            MethodSpec::parse("kfda").unwrap(),
        ];
        let report = run_experiment_matrix(&data, "x", &methods, &split, &params).unwrap();
        let tags: Vec<_> = report.rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(tags, vec!["cw", "fda", "kfda"]);
        assert_eq!(report.rows[2].space, Space::Feature);
    }

    #[test]
    fn csv_report_has_one_line_per_row_plus_header() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let data = separable_data(&mut rng, 6);
        let split = SplitSpec { train_fraction: 0.66, seed: 2, stratified: true };
        let params = EvalParams::new(2, KernelSpec::Rbf { gamma: 0.5 }, 3);
        let methods = all_input_methods();
        let report = run_experiment_matrix(&data, "x", &methods, &split, &params).unwrap();
        let csv = report.to_csv();
        let data_lines =
            csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("method")).count();
        assert_eq!(data_lines, methods.len());
        let back: ExperimentReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn fisherface_affine_map_oracle() {
        // Column with min -1, max 1: -1 -> 0, 0 -> 128, 1 -> 255.
        let basis = DMatrix::from_vec(4, 1, vec![-1.0, 0.0, 1.0, 1.0]);
        let model = crate::fda::DiscriminantModel::new_input_space(
            basis,
            DVector::from_vec(vec![1.0]),
            "test".into(),
        );
        let dir = tempfile::tempdir().unwrap();
        let paths = export_fisherfaces(&model, 2, 2, 1, dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        let image = read_pgm(&paths[0]).unwrap();
        assert_eq!(image.pixels, vec![0, 128, 255, 255]);
    }

    #[test]
    fn constant_fisherface_column_maps_to_zero_image() {
        let basis = DMatrix::from_element(4, 1, 0.7);
        let model = crate::fda::DiscriminantModel::new_input_space(
            basis,
            DVector::from_vec(vec![1.0]),
            "test".into(),
        );
        let dir = tempfile::tempdir().unwrap();
        let paths = export_fisherfaces(&model, 2, 2, 1, dir.path()).unwrap();
        let image = read_pgm(&paths[0]).unwrap();
        assert_eq!(image.pixels, vec![0, 0, 0, 0]);
    }

    #[test]
    fn fisherface_count_clipped_and_kernel_rejected() {
        let basis = DMatrix::from_vec(4, 1, vec![-1.0, 0.0, 1.0, 0.5]);
        let model = crate::fda::DiscriminantModel::new_input_space(
            basis,
            DVector::from_vec(vec![1.0]),
            "test".into(),
        );
        let dir = tempfile::tempdir().unwrap();
        let paths = export_fisherfaces(&model, 2, 2, 9, dir.path()).unwrap();
        assert_eq!(paths.len(), 1);

        let data = toy_three_class();
        let kernel = KernelSpec::Rbf { gamma: 0.2 };
        let kmodel = crate::kfda::fit_kfda(&data, &kernel, 2, 1e-9).unwrap();
        let err = export_fisherfaces(&kmodel, 2, 3, 1, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn fisherface_shape_mismatch_rejected() {
        let basis = DMatrix::from_vec(4, 1, vec![-1.0, 0.0, 1.0, 0.5]);
        let model = crate::fda::DiscriminantModel::new_input_space(
            basis,
            DVector::from_vec(vec![1.0]),
            "test".into(),
        );
        let dir = tempfile::tempdir().unwrap();
        assert!(export_fisherfaces(&model, 3, 2, 1, dir.path()).is_err());
    }

    #[test]
    fn weight_export_roundtrip_with_fixture_value() {
        let data = toy_three_class();
        let stats = class_statistics(&data).unwrap();
        let w = cosine_weights(&stats).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.csv");
        export_weights(&w, &path).unwrap();
        let back = WeightMatrix::read_csv(&path, w.scheme().clone()).unwrap();
        assert_eq!(back.alpha(), w.alpha());
        assert_abs_diff_eq!(back.alpha()[(0, 1)], 0.9472, epsilon = 1e-4);
        for r in 0..3 {
            assert_eq!(back.alpha()[(r, r)], 0.0);
        }
    }
}
