//! Command-line wiring: `fit`, `transform`, `evaluate`, and `export`
//! subcommands over the library. Flags can be pre-loaded from an optional
//! TOML config file; explicit flags win.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::autoweight::{fit_aw_fda, fit_aw_kfda, AwConfig, FitReport};
use crate::dataset::{
    ingest_csv, ingest_image_dir, split, standardize_apply, standardize_fit, LabelColumn,
    LabeledDataset, SplitSpec,
};
use crate::error::{Error, Result};
use crate::evaluate::{
    export_fisherfaces, export_weights, run_experiment_matrix, BaseMethod, EvalParams,
    MethodSpec, ReportFormat, Space,
};
use crate::fda::DiscriminantModel;
use crate::kfda::{default_rbf_gamma, KernelSpec};
use crate::weighting::WeightMatrix;

#[derive(Parser, Debug)]
#[command(
    name = "wfda",
    about = "Weighted Fisher discriminant analysis in the input and feature spaces",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model on the training split and persist it with a fit report.
    Fit(FitArgs),
    /// Project a dataset through a persisted model.
    Transform(TransformArgs),
    /// Run the 1-NN experiment matrix over a list of methods.
    Evaluate(EvaluateArgs),
    /// Export Fisherface images or a weight matrix from fit artifacts.
    Export(ExportArgs),
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Numeric CSV with one sample per row.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Label column: a header name or a zero-based index.
    #[arg(long)]
    label_col: Option<String>,
    /// Treat the first CSV line as a header.
    #[arg(long)]
    has_header: bool,
    /// Directory of per-class subdirectories with PGM images.
    #[arg(long)]
    image_dir: Option<PathBuf>,
    /// Image width after resampling (image ingestion only).
    #[arg(long)]
    width: Option<usize>,
    /// Image height after resampling (image ingestion only).
    #[arg(long)]
    height: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct FitFlags {
    /// Method tag: fda, apac, pow, cdm, knn, cw, aw, kfda, w-kfda:<scheme>,
    /// cw-kfda:v1, cw-kfda:v2, aw-kfda.
    #[arg(long)]
    method: Option<String>,
    /// Subspace dimensionality.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    ridge: Option<f64>,
    /// Kernel family: linear, poly, rbf.
    #[arg(long)]
    kernel: Option<String>,
    /// RBF bandwidth; 0 selects 1/(d·mean feature variance) from the data.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    coef0: Option<f64>,
    /// POW exponent m.
    #[arg(long)]
    pow_m: Option<u32>,
    /// Neighborhood size for the kNN scheme.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Sparsity budget for automatic weighting.
    #[arg(long)]
    aw_k: Option<usize>,
    #[arg(long)]
    aw_iters: Option<usize>,
    #[arg(long)]
    aw_tol: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optional TOML file supplying any of the above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    flags: FitFlags,
    /// Directory receiving model.json and report.json.
    #[arg(long, default_value = "wfda-out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Persisted model container.
    #[arg(long)]
    model: PathBuf,
    /// Output CSV (embedded samples as columns).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    flags: FitFlags,
    /// Comma-separated method tags.
    #[arg(long)]
    methods: Option<String>,
    /// Space override: input, feature, or both.
    #[arg(long)]
    space: Option<String>,
    /// Report file format: csv or json.
    #[arg(long, default_value = "csv")]
    report_format: String,
    /// Report output path.
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(subcommand)]
    what: ExportKind,
}

#[derive(Subcommand, Debug)]
enum ExportKind {
    /// Leading basis columns as PGM images (input-space models only).
    Fisherfaces {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, default_value = "fisherfaces")]
        out_dir: PathBuf,
    },
    /// Weight matrix of a fit, as a headerless full-precision CSV.
    Weights {
        /// report.json written by `fit`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Fully resolved run configuration after merging flags and config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: MethodSpec,
    pub method_tag: String,
    pub p: usize,
    pub ridge: f64,
    pub kernel: KernelSpec,
    pub pow_m: u32,
    pub knn_k: usize,
    pub aw: AwConfig,
    pub split: SplitSpec,
}

/// Subset of flags a TOML config file may supply.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    method: Option<String>,
    p: Option<usize>,
    ridge: Option<f64>,
    kernel: Option<String>,
    gamma: Option<f64>,
    degree: Option<u32>,
    coef0: Option<f64>,
    pow_m: Option<u32>,
    knn_k: Option<usize>,
    aw_k: Option<usize>,
    aw_iters: Option<usize>,
    aw_tol: Option<f64>,
    train_fraction: Option<f64>,
    seed: Option<u64>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", p.display())))
        }
    }
}

/// Merge flags over the config file and fill defaults. `gamma = 0` is kept
/// as-is and resolved against the data later.
fn resolve_config(flags: &FitFlags) -> Result<RunConfig> {
    let file = load_file_config(flags.config.as_deref())?;
    let method_tag = flags
        .method
        .clone()
        .or(file.method)
        .ok_or_else(|| Error::InvalidParameter("--method is required".into()))?;
    let method = MethodSpec::parse(&method_tag)?;
    let kernel_name = flags.kernel.clone().or(file.kernel).unwrap_or_else(|| "rbf".into());
    let gamma = flags.gamma.or(file.gamma).unwrap_or(0.0);
    let kernel = match kernel_name.as_str() {
        "linear" => KernelSpec::Linear,
        "poly" => KernelSpec::Polynomial {
            degree: flags.degree.or(file.degree).unwrap_or(2),
            coef0: flags.coef0.or(file.coef0).unwrap_or(1.0),
        },
        "rbf" => KernelSpec::Rbf { gamma },
        other => {
            return Err(Error::InvalidParameter(format!("unknown kernel family '{other}'")))
        }
    };
    let mut aw = AwConfig::new(flags.aw_k.or(file.aw_k).unwrap_or(2));
    if let Some(iters) = flags.aw_iters.or(file.aw_iters) {
        aw.max_outer_iters = iters;
    }
    if let Some(tol) = flags.aw_tol.or(file.aw_tol) {
        aw.tol = tol;
    }
    Ok(RunConfig {
        method,
        method_tag,
        p: flags.p.or(file.p).unwrap_or(1),
        ridge: flags.ridge.or(file.ridge).unwrap_or(1e-9),
        kernel,
        pow_m: flags.pow_m.or(file.pow_m).unwrap_or(3),
        knn_k: flags.knn_k.or(file.knn_k).unwrap_or(1),
        aw,
        split: SplitSpec {
            train_fraction: flags.train_fraction.or(file.train_fraction).unwrap_or(0.66),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            stratified: true,
        },
    })
}

/// Load the dataset named by the source flags.
fn load_source(source: &SourceArgs) -> Result<(LabeledDataset, String)> {
    match (&source.csv, &source.image_dir) {
        (Some(path), None) => {
            let label = source
                .label_col
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("--label-col is required with --csv".into()))?;
            let column = match label.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(label.to_string()),
            };
            let has_header = source.has_header || matches!(column, LabelColumn::Name(_));
            let data = ingest_csv(path, &column, has_header)?;
            Ok((data, path.display().to_string()))
        }
        (None, Some(dir)) => {
            let width = source
                .width
                .ok_or_else(|| Error::InvalidParameter("--width is required with --image-dir".into()))?;
            let height = source.height.ok_or_else(|| {
                Error::InvalidParameter("--height is required with --image-dir".into())
            })?;
            let data = ingest_image_dir(dir, width, height)?;
            Ok((data, dir.display().to_string()))
        }
        (Some(_), Some(_)) => {
            Err(Error::InvalidParameter("--csv and --image-dir are mutually exclusive".into()))
        }
        (None, None) => Err(Error::InvalidParameter("one of --csv or --image-dir is required".into())),
    }
}

/// Replace a zero RBF bandwidth with the data-derived default.
fn resolve_kernel(kernel: &KernelSpec, train: &LabeledDataset) -> KernelSpec {
    match kernel {
        KernelSpec::Rbf { gamma } if *gamma == 0.0 => {
            KernelSpec::Rbf { gamma: default_rbf_gamma(train) }
        }
        k => k.clone(),
    }
}

/// Fit artifacts persisted next to the model: the method tag, the weight
/// matrix that drove the fit (when one exists), and the optimizer trace for
/// automatic weighting.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct FitRecord {
    pub method: String,
    pub weights: Option<WeightMatrix>,
    pub auto: Option<FitReport>,
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let cfg = resolve_config(&args.flags)?;
    let (data, _) = load_source(&args.source)?;
    let (train_raw, _test_raw) = split(&data, &cfg.split)?;
    let standardizer = standardize_fit(&train_raw)?;
    let train = standardize_apply(&standardizer, &train_raw)?;
    let kernel = resolve_kernel(&cfg.kernel, &train);
    let params = EvalParams {
        p: cfg.p,
        ridge: cfg.ridge,
        kernel: kernel.clone(),
        pow_m: cfg.pow_m,
        knn_k: cfg.knn_k,
        aw: cfg.aw.clone(),
    };

    let (model, record) = match (&cfg.method.base, cfg.method.space) {
        (BaseMethod::Auto, Space::Input) => {
            let (model, report) = fit_aw_fda(&train, cfg.p, &cfg.aw, cfg.ridge)?;
            let weights = report.weights.clone();
            (
                model,
                FitRecord {
                    method: cfg.method_tag.clone(),
                    weights: Some(weights),
                    auto: Some(report),
                },
            )
        }
        (BaseMethod::Auto, Space::Feature) => {
            let (model, report) = fit_aw_kfda(&train, &kernel, cfg.p, &cfg.aw, cfg.ridge)?;
            let weights = report.weights.clone();
            (
                model,
                FitRecord {
                    method: cfg.method_tag.clone(),
                    weights: Some(weights),
                    auto: Some(report),
                },
            )
        }
        _ => {
            let model = crate::evaluate::fit_method(&cfg.method, &train, &params)?;
            let weights = crate::evaluate::method_weights(&cfg.method.base, &train, &params)?;
            (model, FitRecord { method: cfg.method_tag.clone(), weights, auto: None })
        }
    };
    let model = model.with_standardizer(standardizer);

    std::fs::create_dir_all(&args.out_dir)?;
    let model_path = args.out_dir.join("model.json");
    model.save(&model_path)?;
    let report_path = args.out_dir.join("report.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&record).expect("record serialization cannot fail"),
    )?;
    println!("model written to {}", model_path.display());
    println!("report written to {}", report_path.display());
    Ok(())
}

fn write_embedding_csv(path: &Path, embedding: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..embedding.nrows() {
        for j in 0..embedding.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{:.16e}", embedding[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_transform(args: &TransformArgs) -> Result<()> {
    let model = DiscriminantModel::load(&args.model)?;
    let (data, _) = load_source(&args.source)?;
    let embedding = match model.kind {
        crate::fda::ModelKind::InputSpace => crate::fda::project(&model, data.samples())?,
        crate::fda::ModelKind::FeatureSpace => {
            crate::kfda::kernel_project(&model, data.samples())?
        }
    };
    write_embedding_csv(&args.out, &embedding)?;
    println!("embedding written to {} ({} columns)", args.out.display(), embedding.ncols());
    Ok(())
}

fn parse_methods(args: &EvaluateArgs) -> Result<Vec<MethodSpec>> {
    let raw = args
        .methods
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("--methods is required".into()))?;
    let tags: Vec<&str> = raw.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if tags.is_empty() {
        return Err(Error::InvalidParameter("--methods must list at least one method".into()));
    }
    let parsed: Result<Vec<MethodSpec>> = tags.iter().map(|t| MethodSpec::parse(t)).collect();
    let parsed = parsed?;
    match args.space.as_deref() {
        None => Ok(parsed),
        Some("input") => Ok(parsed.iter().map(|m| m.in_space(Space::Input)).collect()),
        Some("feature") => Ok(parsed.iter().map(|m| m.in_space(Space::Feature)).collect()),
        Some("both") => Ok(parsed
            .iter()
            .flat_map(|m| [m.in_space(Space::Input), m.in_space(Space::Feature)])
            .collect()),
        Some(other) => {
            Err(Error::InvalidParameter(format!("--space must be input, feature, or both, got '{other}'")))
        }
    }
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = match (&args.flags.method, &args.methods) {
        // evaluate does not need --method; give resolve_config a placeholder.
        (None, _) => {
            let mut flags = args.flags.clone();
            flags.method = Some("fda".into());
            resolve_config(&flags)?
        }
        _ => resolve_config(&args.flags)?,
    };
    let methods = parse_methods(args)?;
    let format = match args.report_format.as_str() {
        "csv" => ReportFormat::Csv,
        "json" => ReportFormat::Json,
        other => {
            return Err(Error::InvalidParameter(format!(
                "--report-format must be csv or json, got '{other}'"
            )))
        }
    };
    let (data, dataset_id) = load_source(&args.source)?;
    // Resolve an automatic RBF bandwidth against the standardized train split
    // so the report is self-contained.
    let (train_raw, _) = split(&data, &cfg.split)?;
    let standardizer = standardize_fit(&train_raw)?;
    let train = standardize_apply(&standardizer, &train_raw)?;
    let kernel = resolve_kernel(&cfg.kernel, &train);
    let params = EvalParams {
        p: cfg.p,
        ridge: cfg.ridge,
        kernel,
        pow_m: cfg.pow_m,
        knn_k: cfg.knn_k,
        aw: cfg.aw.clone(),
    };
    let report = run_experiment_matrix(&data, &dataset_id, &methods, &cfg.split, &params)?;
    report.write(&args.out, format)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    match &args.what {
        ExportKind::Fisherfaces { model, width, height, count, out_dir } => {
            let model = DiscriminantModel::load(model)?;
            let paths = export_fisherfaces(&model, *width, *height, *count, out_dir)?;
            println!("wrote {} fisherface image(s) to {}", paths.len(), out_dir.display());
            Ok(())
        }
        ExportKind::Weights { report, out } => {
            let text = std::fs::read_to_string(report)
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", report.display())))?;
            let record: FitRecord = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", report.display())))?;
            let weights = record.weights.ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "fit '{}' carries no weight matrix (unweighted method)",
                    record.method
                ))
            })?;
            export_weights(&weights, out)?;
            println!("weights written to {}", out.display());
            Ok(())
        }
    }
}

/// Parse the command line and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; real parse errors are
            // configuration errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Export(args) => cmd_export(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wfda: {e}");
            e.exit_code()
        }
    }
}
