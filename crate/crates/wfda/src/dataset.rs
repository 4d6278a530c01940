//! Labeled datasets: validation, per-class statistics, standardization,
//! stratified splitting, and ingestion from CSV files or PGM image directories.
//!
//! Samples are stored column-major: a `d × n` matrix whose columns are the
//! samples, with class labels in `{1, ..., c}`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pgm;

/// A column-major sample matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: DMatrix<f64>,
    labels: Vec<usize>,
    class_index: Vec<Vec<usize>>,
}

impl LabeledDataset {
    /// Validate and build a dataset. Labels must cover `{1, ..., c}` with at
    /// least one sample per class, and all values must be finite.
    pub fn new(samples: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        let n = samples.ncols();
        if labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} sample columns",
                labels.len(),
                n
            )));
        }
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no samples".into()));
        }
        let c = *labels.iter().max().unwrap();
        if labels.iter().any(|&l| l == 0) {
            return Err(Error::InvalidInput("class labels must start at 1".into()));
        }
        let mut class_index = vec![Vec::new(); c];
        for (j, &l) in labels.iter().enumerate() {
            class_index[l - 1].push(j);
        }
        if let Some(r) = class_index.iter().position(|ix| ix.is_empty()) {
            return Err(Error::InvalidInput(format!("class {} has no samples", r + 1)));
        }
        if let Some(bad) = samples.iter().position(|x| !x.is_finite()) {
            let (i, j) = (bad % samples.nrows(), bad / samples.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite value at feature {i}, sample {j}"
            )));
        }
        Ok(Self { samples, labels, class_index })
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        self.samples.nrows()
    }

    /// Sample count n.
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    /// Number of classes c.
    pub fn num_classes(&self) -> usize {
        self.class_index.len()
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Column indices of class `r` (1-based class id).
    pub fn class_columns(&self, r: usize) -> &[usize] {
        &self.class_index[r - 1]
    }

    /// Build a dataset by selecting columns, keeping the original labels.
    fn select(&self, cols: &[usize]) -> Result<Self> {
        let samples = self.samples.select_columns(cols);
        let labels = cols.iter().map(|&j| self.labels[j]).collect();
        LabeledDataset::new(samples, labels)
    }
}

/// Canonical 2-D toy problem: three classes of two points each, with
/// hand-checkable means (1,1), (3,1), (2,4) and pairwise mean distances
/// 2, √10, √10.
pub fn toy_three_class() -> LabeledDataset {
    let samples = DMatrix::from_columns(&[
        DVector::from_vec(vec![1.0, 0.0]),
        DVector::from_vec(vec![1.0, 2.0]),
        DVector::from_vec(vec![3.0, 0.0]),
        DVector::from_vec(vec![3.0, 2.0]),
        DVector::from_vec(vec![1.0, 4.0]),
        DVector::from_vec(vec![3.0, 4.0]),
    ]);
    LabeledDataset::new(samples, vec![1, 1, 2, 2, 3, 3]).unwrap()
}

/// Deterministic face-like image corpus for demos and desk-scale evaluation
/// when no real face dataset is on disk. Each class gets a smooth base
/// pattern (a sum of Gaussian blobs on the pixel grid); samples perturb it
/// with low-amplitude blobs and pixel noise. Pixel values lie in [0, 255].
pub fn synthetic_faces(
    classes: usize,
    per_class: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> LabeledDataset {
    use rand::Rng;
    use rand::SeedableRng;
    assert!(classes >= 2 && per_class >= 2 && width >= 4 && height >= 4);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = width * height;
    let blob = |cx: f64, cy: f64, sigma: f64, amp: f64, image: &mut [f64]| {
        for y in 0..height {
            for x in 0..width {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                image[y * width + x] += amp * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            }
        }
    };
    let mut cols = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for class in 0..classes {
        let mut base = vec![128.0; d];
        for _ in 0..6 {
            blob(
                rng.gen_range(0.0..width as f64),
                rng.gen_range(0.0..height as f64),
                rng.gen_range(2.0..(width.min(height) as f64 / 2.0)),
                rng.gen_range(-90.0..90.0),
                &mut base,
            );
        }
        for _ in 0..per_class {
            let mut image = base.clone();
            for _ in 0..2 {
                blob(
                    rng.gen_range(0.0..width as f64),
                    rng.gen_range(0.0..height as f64),
                    rng.gen_range(1.5..5.0),
                    rng.gen_range(-18.0..18.0),
                    &mut image,
                );
            }
            for v in image.iter_mut() {
                *v = (*v + rng.gen_range(-8.0..8.0)).clamp(0.0, 255.0);
            }
            cols.push(DVector::from_vec(image));
            labels.push(class + 1);
        }
    }
    LabeledDataset::new(DMatrix::from_columns(&cols), labels).unwrap()
}

/// Per-class sizes, means, centered blocks, mean-difference matrices, and the
/// class-size diagonal.
#[derive(Debug, Clone)]
pub struct ClassStatistics {
    /// n_r for each class.
    pub sizes: Vec<usize>,
    /// Class means μ⁽ʳ⁾, one d-vector per class.
    pub means: Vec<DVector<f64>>,
    /// Centered sample blocks, d × n_r per class.
    pub centered: Vec<DMatrix<f64>>,
    /// Mean-difference matrices M_r = [μ⁽ʳ⁾ − μ⁽¹⁾, ..., μ⁽ʳ⁾ − μ⁽ᶜ⁾], d × c.
    pub mean_diffs: Vec<DMatrix<f64>>,
    /// diag(n_1, ..., n_c).
    pub size_diag: DMatrix<f64>,
}

/// Compute per-class statistics of a dataset.
pub fn class_statistics(data: &LabeledDataset) -> Result<ClassStatistics> {
    let c = data.num_classes();
    let d = data.dim();
    let mut sizes = Vec::with_capacity(c);
    let mut means = Vec::with_capacity(c);
    let mut centered = Vec::with_capacity(c);
    for r in 1..=c {
        let cols = data.class_columns(r);
        if cols.is_empty() {
            return Err(Error::InvalidInput(format!("class {r} has no samples")));
        }
        let block = data.samples().select_columns(cols);
        let mean = block.column_mean();
        let mut cen = block;
        for mut col in cen.column_iter_mut() {
            col -= &mean;
        }
        sizes.push(cols.len());
        means.push(mean);
        centered.push(cen);
    }
    let mut mean_diffs = Vec::with_capacity(c);
    for r in 0..c {
        let mut m = DMatrix::zeros(d, c);
        for l in 0..c {
            m.set_column(l, &(&means[r] - &means[l]));
        }
        mean_diffs.push(m);
    }
    let size_diag =
        DMatrix::from_diagonal(&DVector::from_iterator(c, sizes.iter().map(|&s| s as f64)));
    Ok(ClassStatistics { sizes, means, centered, mean_diffs, size_diag })
}

/// Per-feature affine transform fitted on training data.
///
/// Uses the population (divide-by-n) convention for the standard deviation.
/// Constant features get their deviation floored at 1e-12 so the transform
/// maps them to zero.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub stddev: DVector<f64>,
}

const STDDEV_FLOOR: f64 = 1e-12;

/// Fit a standardizer on the given data (requires n ≥ 2).
pub fn standardize_fit(data: &LabeledDataset) -> Result<Standardizer> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("standardization needs n >= 2, got {n}")));
    }
    let d = data.dim();
    let mean = data.samples().column_mean();
    let mut stddev = DVector::zeros(d);
    let mut floored = Vec::new();
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..n {
            let v = data.samples()[(i, j)] - mean[i];
            acc += v * v;
        }
        let sd = (acc / n as f64).sqrt();
        if sd < STDDEV_FLOOR {
            floored.push(i);
            stddev[i] = STDDEV_FLOOR;
        } else {
            stddev[i] = sd;
        }
    }
    if !floored.is_empty() {
        log::warn!(
            "standardize_fit: {} constant feature(s) floored at {STDDEV_FLOOR:e}: {:?}",
            floored.len(),
            &floored[..floored.len().min(16)]
        );
    }
    Ok(Standardizer { mean, stddev })
}

impl Standardizer {
    /// Transform a raw sample matrix (d × m) in place conventions-free.
    pub fn transform_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.mean.len() {
            return Err(Error::InvalidInput(format!(
                "standardizer fitted on {} features, data has {}",
                self.mean.len(),
                x.nrows()
            )));
        }
        let mut out = x.clone();
        for j in 0..out.ncols() {
            for i in 0..out.nrows() {
                out[(i, j)] = (out[(i, j)] - self.mean[i]) / self.stddev[i];
            }
        }
        Ok(out)
    }
}

/// Apply a fitted standardizer to a dataset, preserving labels.
pub fn standardize_apply(s: &Standardizer, data: &LabeledDataset) -> Result<LabeledDataset> {
    let samples = s.transform_matrix(data.samples())?;
    LabeledDataset::new(samples, data.labels().to_vec())
}

/// Train/test split parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Deterministic train/test split. Stratified mode keeps every class present
/// on both sides (class size ≥ 2 required), with per-class round-half-up on
/// the train count.
pub fn split(data: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_cols = Vec::new();
    let mut test_cols = Vec::new();
    if spec.stratified {
        for r in 1..=data.num_classes() {
            let cols = data.class_columns(r);
            if cols.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "stratified split needs >= 2 samples per class; class {r} has {}",
                    cols.len()
                )));
            }
            let mut shuffled = cols.to_vec();
            shuffled.shuffle(&mut rng);
            let k = round_half_up(spec.train_fraction * cols.len() as f64)
                .clamp(1, cols.len() - 1);
            train_cols.extend_from_slice(&shuffled[..k]);
            test_cols.extend_from_slice(&shuffled[k..]);
        }
    } else {
        let n = data.len();
        if n < 2 {
            return Err(Error::InvalidInput("split needs at least 2 samples".into()));
        }
        let mut shuffled: Vec<usize> = (0..n).collect();
        shuffled.shuffle(&mut rng);
        let k = round_half_up(spec.train_fraction * n as f64).clamp(1, n - 1);
        train_cols.extend_from_slice(&shuffled[..k]);
        test_cols.extend_from_slice(&shuffled[k..]);
    }
    train_cols.sort_unstable();
    test_cols.sort_unstable();
    Ok((data.select(&train_cols)?, data.select(&test_cols)?))
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

/// Read a numeric CSV with one sample per row and a label column.
///
/// Distinct label strings map to class ids `1..=c`: numerically sorted when
/// every label parses as an integer, lexicographically otherwise.
pub fn ingest_csv(path: &Path, label_column: &LabelColumn, has_header: bool) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_path(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;

    let label_idx = match label_column {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(Error::InvalidParameter(
                    "label column by name requires a header row".into(),
                ));
            }
            reader
                .headers()
                .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| {
                    Error::Ingestion(format!("{}: no column named {name:?}", path.display()))
                })?
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut label_strings: Vec<String> = Vec::new();
    for (rownum, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            Error::Ingestion(format!("{}: record {}: {e}", path.display(), rownum + 1))
        })?;
        if label_idx >= record.len() {
            return Err(Error::Ingestion(format!(
                "{}: record {}: label column {label_idx} out of range ({} fields)",
                path.display(),
                rownum + 1,
                record.len()
            )));
        }
        let mut features = Vec::with_capacity(record.len() - 1);
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                label_strings.push(cell.trim().to_string());
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::Ingestion(format!(
                        "{}: record {}: non-numeric cell {:?} in column {i}",
                        path.display(),
                        rownum + 1,
                        cell
                    ))
                })?;
                features.push(v);
            }
        }
        if let Some(first) = rows.first() {
            if features.len() != first.len() {
                return Err(Error::Ingestion(format!(
                    "{}: record {}: {} features, expected {}",
                    path.display(),
                    rownum + 1,
                    features.len(),
                    first.len()
                )));
            }
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(Error::Ingestion(format!("{}: no data records", path.display())));
    }

    let mut distinct: Vec<String> = label_strings.clone();
    distinct.sort();
    distinct.dedup();
    let all_ints: Option<Vec<i64>> =
        distinct.iter().map(|s| s.parse::<i64>().ok()).collect();
    if let Some(mut ints) = all_ints {
        ints.sort_unstable();
        distinct = ints.iter().map(|i| i.to_string()).collect();
    }
    let id_of: BTreeMap<&str, usize> =
        distinct.iter().enumerate().map(|(i, s)| (s.as_str(), i + 1)).collect();
    let labels: Vec<usize> = label_strings
        .iter()
        .map(|s| {
            // Normalize integer labels so "07" and "7" agree.
            match s.parse::<i64>() {
                Ok(i) => id_of[i.to_string().as_str()],
                Err(_) => id_of[s.as_str()],
            }
        })
        .collect();

    let d = rows[0].len();
    let n = rows.len();
    let samples = DMatrix::from_fn(d, n, |i, j| rows[j][i]);
    LabeledDataset::new(samples, labels)
}

/// Read a `<root>/<class_name>/<image>.pgm` directory layout, resampling each
/// image to `width × height` (nearest neighbor) and flattening row-major.
///
/// Class directories and files are visited in sorted order, so class ids are
/// stable across runs.
pub fn ingest_image_dir(root: &Path, width: usize, height: usize) -> Result<LabeledDataset> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter("image dimensions must be positive".into()));
    }
    let mut class_dirs: Vec<_> = std::fs::read_dir(root)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", root.display())))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Ingestion(format!(
            "{}: no class subdirectories found",
            root.display()
        )));
    }

    let d = width * height;
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (class_id, dir) in class_dirs.iter().enumerate() {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::Ingestion(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.extension().map(|x| x.eq_ignore_ascii_case("pgm")).unwrap_or(false)
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Ingestion(format!(
                "{}: class directory has no .pgm files",
                dir.display()
            )));
        }
        for f in files {
            let img = pgm::read_pgm(&f)?;
            let img = pgm::resample_nearest(&img, width, height);
            columns.push(DVector::from_iterator(d, img.pixels.iter().map(|&p| p as f64)));
            labels.push(class_id + 1);
        }
    }
    LabeledDataset::new(DMatrix::from_columns(&columns), labels)
}
