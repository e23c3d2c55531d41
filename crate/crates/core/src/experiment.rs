//! Declarative experiments: TOML configs, seeded runs, noise sweeps,
//! reference-value comparisons and the files they leave behind.
//!
//! Every CSV written here has a header row and a fixed column order:
//!
//! | file | columns |
//! |------|---------|
//! | `results.csv` | `config_hash,name,model,seed,metric,value,train_value,n_gate,n_obs,c,n_copy,n_tot,n_lay,n_params,diverged` |
//! | `aggregate.csv` | `config_hash,name,model,metric,summary,value,mean,std,n_seeds` |
//! | sweep | `axis,value,model,metric_mean,metric_std,seeds` |
//! | reproduce | `table,row,reference,ours,delta,bound,status` |
//! | universality | `target,n_s,l2_error,relative_error` |
//! | complexity | `config,model,n_data,n_copy,n_tot,n_lay,n_gate,n_obs,c` |
//!
//! Result rows carry no wall time so that reruns at zero noise are
//! byte-identical; timings live in the per-seed JSON cards.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuits::ComplexityReport;
use crate::datasets::{
    gen_phase_dataset, gen_regression, gen_ring, load_csv, load_mnist_idx, CsvSchema, Dataset, DatasetCard, DatasetError,
    MnistOptions, PhaseGrid,
};
use crate::encoding::{amplitude_qubits, Input};
use crate::models::{sample_observables, sample_observables_cycled, ModelError, ModelSpec};
use crate::noise::NoiseSpec;
use crate::qsim::PauliString;
use crate::training::{optimize, MetricKind, Prepared, RunReport, TrainConfig, TrainError};
use crate::universality::{convergence, FitConfig, QuadratureGrid, Target, UniversalityError};

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable naming the root directory for run outputs.
pub const OUTPUT_ENV: &str = "DQNN_OUTPUT";
/// Held-out synthetic sets are generated with `seed + TEST_SEED_OFFSET`.
pub const TEST_SEED_OFFSET: u64 = 1000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {message}", path.display())]
    ConfigFile { path: PathBuf, message: String },
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("training diverged for seeds {0:?}")]
    Diverged(Vec<u64>),
    #[error(transparent)]
    Dataset(DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Universality(#[from] UniversalityError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<DatasetError> for ExperimentError {
    fn from(e: DatasetError) -> Self {
        if e.is_missing() {
            Self::MissingData(e.to_string())
        } else {
            Self::Dataset(e)
        }
    }
}

impl ExperimentError {
    /// 0 ok, 2 config, 3 divergence, 4 missing data, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ConfigFile { .. } | Self::Train(TrainError::Config(_)) => 2,
            Self::Diverged(_) => 3,
            Self::MissingData(_) => 4,
            _ => 1,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

fn config_err<T>(message: impl Into<String>) -> Result<T> {
    Err(ExperimentError::Config(message.into()))
}

// ---------------------------------------------------------------------------
// Config schema

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Also the default output subdirectory, so restricted to `[A-Za-z0-9._-]`.
    pub name: String,
    /// Series name in sweep tables; the model kind when absent.
    #[serde(default)]
    pub label: Option<String>,
    pub task: TaskConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    /// `train.seed` is replaced by each run seed.
    #[serde(default)]
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub summary: Summary,
    /// Output directory; relative paths are taken from the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Relative data paths are resolved against the directory holding the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskConfig {
    /// Without `n_test` the metric is measured on the training points.
    Regression {
        n_train: usize,
        #[serde(default)]
        n_test: Option<usize>,
    },
    Ring {
        n_train: usize,
        n_test: usize,
    },
    Csv {
        table: PathBuf,
        schema: PathBuf,
    },
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        classes: Vec<u8>,
        #[serde(default = "default_side")]
        side: usize,
        /// Keep this many training samples (seeded subsample); all when absent.
        #[serde(default)]
        n_train: Option<usize>,
        #[serde(default)]
        subsample_seed: u64,
        /// Drop the top-left pixel, which is blank for every digit.
        #[serde(default = "yes")]
        drop_corner: bool,
    },
    Phase {
        train: PhaseGrid,
        test: PhaseGrid,
    },
}

fn default_side() -> usize {
    16
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Dqnn {
        n_cir: usize,
        n_layers: usize,
        observables: ObservablePick,
        /// Circuit and observable draws use the run seed when absent.
        #[serde(default)]
        observable_seed: Option<u64>,
        #[serde(default = "yes")]
        final_sigmoid: bool,
    },
    Ccq {
        n_copy: usize,
        n_layers: usize,
    },
    Qcl {
        n_copy: usize,
        n_layers: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pick", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservablePick {
    AllZ,
    /// Distinct non-identity Pauli strings.
    Random { n_obs: usize },
    /// Every non-identity string once before any repeats; allows `n_obs > 4ⁿ − 1`.
    Cycled { n_obs: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Density matrices exactly when `p > 0`.
    #[default]
    Auto,
    Pure,
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub delta: f64,
    pub p: f64,
    /// Noise stream of run seed `s` is seeded with `seed_offset + s`.
    pub seed_offset: u64,
    pub backend: Backend,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { delta: 0.0, p: 0.0, seed_offset: 1000, backend: Backend::Auto }
    }
}

impl NoiseConfig {
    pub fn mixed(&self) -> bool {
        match self.backend {
            Backend::Auto => self.p > 0.0,
            Backend::Pure => false,
            Backend::Density => true,
        }
    }
}

/// How the per-seed metrics collapse into the headline value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summary {
    #[default]
    Mean,
    /// Best seed: highest accuracy or lowest relative error.
    Best,
}

/// `a.b.c=value`. The value is read as a TOML literal, falling back to a bare
/// string, so `train.iterations=50`, `seeds=[1,2]` and `model.kind=qcl` all work.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Override {
    pub path: String,
    pub value: String,
}

impl FromStr for Override {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        let (path, value) = s
            .split_once('=')
            .ok_or_else(|| ExperimentError::Config(format!("override {s:?} is not of the form key.path=value")))?;
        let path = path.trim().trim_start_matches("--").to_string();
        if path.is_empty() || path.split('.').any(str::is_empty) {
            return config_err(format!("override {s:?} has an empty key"));
        }
        Ok(Self { path, value: value.trim().to_string() })
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Missing keys are created; unknown ones are then rejected by the schema.
fn apply_override(root: &mut toml::Table, ov: &Override) -> Result<()> {
    let keys: Vec<&str> = ov.path.split('.').collect();
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut table = root;
    for k in parents {
        let entry = table.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ExperimentError::Config(format!("override {}: `{k}` is not a table", ov.path)))?;
    }
    if matches!(table.get(*last), Some(toml::Value::Table(_))) {
        return config_err(format!("override {}: a table cannot be replaced by a scalar", ov.path));
    }
    table.insert(last.to_string(), parse_literal(&ov.value));
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[Override]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; every failure names the path.
    pub fn load(path: &Path, overrides: &[Override]) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::ConfigFile { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml_str(&text, overrides)
            .map_err(|e| ExperimentError::ConfigFile { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return config_err(format!("schema_version {} unsupported, expected {SCHEMA_VERSION}", self.schema_version));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c)) {
            return config_err(format!("name {:?} must be non-empty and use only [A-Za-z0-9._-]", self.name));
        }
        if self.seeds.is_empty() {
            return config_err("seeds must not be empty");
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return config_err("seeds must be distinct");
        }
        self.train.validate()?;
        NoiseSpec::new(self.noise.delta, self.noise.p, 0).map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.noise.backend == Backend::Pure && self.noise.p > 0.0 {
            return config_err("decoherence (p > 0) needs the density backend, but backend = \"pure\"");
        }
        let positive = |what: &str, v: usize| if v == 0 { config_err(format!("{what} must be at least 1")) } else { Ok(()) };
        match &self.model {
            ModelConfig::Dqnn { n_cir, n_layers, observables, .. } => {
                positive("model.n_cir", *n_cir)?;
                positive("model.n_layers", *n_layers)?;
                if let ObservablePick::Random { n_obs } | ObservablePick::Cycled { n_obs } = observables {
                    positive("model.observables.n_obs", *n_obs)?;
                }
            }
            ModelConfig::Ccq { n_copy, n_layers } | ModelConfig::Qcl { n_copy, n_layers } => {
                positive("model.n_copy", *n_copy)?;
                positive("model.n_layers", *n_layers)?;
            }
        }
        match &self.task {
            TaskConfig::Regression { n_train, n_test } => {
                positive("task.n_train", *n_train)?;
                if let Some(n) = n_test {
                    positive("task.n_test", *n)?;
                }
            }
            TaskConfig::Ring { n_train, n_test } => {
                positive("task.n_train", *n_train)?;
                positive("task.n_test", *n_test)?;
            }
            TaskConfig::Mnist { classes, side, n_train, .. } => {
                if classes.len() < 2 {
                    return config_err("task.classes needs at least two digits");
                }
                positive("task.side", *side)?;
                if let Some(n) = n_train {
                    positive("task.n_train", *n)?;
                }
            }
            TaskConfig::Csv { .. } | TaskConfig::Phase { .. } => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (sorted keys, output directory
    /// excluded), so the hash ignores field order in the file.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let canonical = serde_json::to_string(&serde_json::to_value(&c).expect("config serializes")).expect("json");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.model.kind_label().to_string())
    }

    /// `output`, else `<root>/<name>` with `root` defaulting to `results`.
    pub fn output_dir(&self, root: Option<&Path>) -> PathBuf {
        self.output.clone().unwrap_or_else(|| root.unwrap_or(Path::new("results")).join(&self.name))
    }
}

impl ModelConfig {
    pub fn kind_label(&self) -> &'static str {
        match self {
            Self::Dqnn { .. } => "DQNN",
            Self::Ccq { .. } => "CCQ",
            Self::Qcl { .. } => "QCL",
        }
    }

    /// QCL angle-encodes features; the others amplitude-encode them.
    pub fn amplitude_encoded(&self) -> bool {
        !matches!(self, Self::Qcl { .. })
    }

    pub fn build(&self, data: &Dataset, seed: u64) -> Result<ModelSpec> {
        let first = data.samples.first().ok_or_else(|| ExperimentError::Config("empty training set".into()))?;
        let n_outputs = data.task.n_outputs();
        let n_qubits = match &first.input {
            Input::State(s) => s.n_qubits(),
            Input::Features(x) => amplitude_qubits(x.len()),
        };
        Ok(match *self {
            Self::Dqnn { n_cir, n_layers, ref observables, observable_seed, final_sigmoid } => {
                let obs_seed = observable_seed.unwrap_or(seed);
                let obs = match *observables {
                    ObservablePick::AllZ => vec![PauliString::all_z(n_qubits)],
                    ObservablePick::Random { n_obs } => sample_observables(n_qubits, n_obs, obs_seed)?,
                    ObservablePick::Cycled { n_obs } => sample_observables_cycled(n_qubits, n_obs, obs_seed),
                };
                ModelSpec::dqnn(n_qubits, n_cir, n_layers, obs, n_outputs, final_sigmoid, seed)?
            }
            Self::Ccq { n_copy, n_layers } => ModelSpec::ccq(n_qubits, n_copy, n_layers, n_outputs, seed)?,
            Self::Qcl { n_copy, n_layers } => match &first.input {
                Input::Features(x) => ModelSpec::qcl(x.len(), n_copy, n_layers, n_outputs, seed)?,
                Input::State(_) => return config_err("QCL needs classical features, the task provides quantum states"),
            },
        })
    }
}

impl TaskConfig {
    /// Whether the data depend on the run seed.
    pub fn seeded(&self) -> bool {
        matches!(self, Self::Regression { .. } | Self::Ring { .. })
    }

    /// `(train, evaluation)` sets. Relative paths are joined onto `base`.
    pub fn load(&self, base: &Path, seed: u64) -> Result<(Dataset, Dataset)> {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        Ok(match self {
            Self::Regression { n_train, n_test } => {
                let train = gen_regression(*n_train, seed);
                let test = match n_test {
                    Some(n) => gen_regression(*n, seed + TEST_SEED_OFFSET),
                    None => train.clone(),
                };
                (train, test)
            }
            Self::Ring { n_train, n_test } => (gen_ring(*n_train, seed), gen_ring(*n_test, seed + TEST_SEED_OFFSET)),
            Self::Csv { table, schema } => {
                let schema = CsvSchema::from_toml_file(&at(schema))?;
                load_csv(&at(table), &schema)?.split(schema.n_test, schema.split_seed)?
            }
            Self::Mnist { images, labels, test_images, test_labels, classes, side, n_train, subsample_seed, drop_corner } => {
                let opts = MnistOptions { classes: classes.clone(), side: *side };
                let mut train = load_mnist_idx(&at(images), &at(labels), &opts)?;
                let mut test = load_mnist_idx(&at(test_images), &at(test_labels), &opts)?;
                if *drop_corner {
                    train.drop_feature(0);
                    test.drop_feature(0);
                }
                if let Some(n) = n_train {
                    train = train.subsample(*n, *subsample_seed);
                }
                (train, test)
            }
            Self::Phase { train, test } => (gen_phase_dataset(train)?, gen_phase_dataset(test)?),
        })
    }
}

/// Offset applied to feature vectors whose norm would make amplitude encoding
/// ill-defined; applied to both sets together so their widths agree.
const FEATURE_OFFSET: f64 = 0.5;

fn prepare_features(model: &ModelConfig, train: &mut Dataset, test: &mut Dataset) {
    if !model.amplitude_encoded() {
        return;
    }
    let before = (train.n_features(), test.n_features());
    train.ensure_min_norm(FEATURE_OFFSET);
    test.ensure_min_norm(FEATURE_OFFSET);
    let after = (train.n_features(), test.n_features());
    if after.0 != before.0 && after.1 == before.1 {
        test.apply_shift(train.card.shift);
    } else if after.1 != before.1 && after.0 == before.0 {
        train.apply_shift(test.card.shift);
    }
}

// ---------------------------------------------------------------------------
// Runs

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub report: RunReport,
    pub train_data: DatasetCard,
    pub test_data: DatasetCard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub runs: Vec<SeedRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config_hash: String,
    pub name: String,
    pub model: String,
    pub seed: u64,
    pub metric: MetricKind,
    pub value: f64,
    pub train_value: f64,
    pub n_gate: usize,
    pub n_obs: usize,
    pub c: usize,
    pub n_copy: usize,
    pub n_tot: usize,
    pub n_lay: usize,
    pub n_params: usize,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub config_hash: String,
    pub name: String,
    pub model: String,
    pub metric: MetricKind,
    pub summary: Summary,
    pub value: f64,
    pub mean: f64,
    pub std: f64,
    pub n_seeds: usize,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl RunOutcome {
    pub fn metric(&self) -> MetricKind {
        self.runs[0].report.metric_kind
    }

    pub fn values(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.report.final_metric).collect()
    }

    pub fn mean(&self) -> f64 {
        mean_std(&self.values()).0
    }

    /// The headline number under the config's [`Summary`].
    pub fn summary_value(&self) -> f64 {
        let v = self.values();
        match (self.config.summary, self.metric()) {
            (Summary::Mean, _) => mean_std(&v).0,
            (Summary::Best, MetricKind::Accuracy) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            (Summary::Best, MetricKind::RelativeError) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn complexity(&self) -> ComplexityReport {
        self.runs[0].report.complexity
    }

    pub fn diverged_seeds(&self) -> Vec<u64> {
        self.runs.iter().filter(|r| r.report.diverged).map(|r| r.seed).collect()
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.runs
            .iter()
            .map(|r| {
                let c = r.report.complexity;
                ResultRow {
                    config_hash: self.config_hash.clone(),
                    name: self.config.name.clone(),
                    model: self.config.label(),
                    seed: r.seed,
                    metric: r.report.metric_kind,
                    value: r.report.final_metric,
                    train_value: r.report.train_metric,
                    n_gate: c.n_gate,
                    n_obs: c.n_obs,
                    c: c.c,
                    n_copy: c.n_copy,
                    n_tot: c.n_tot,
                    n_lay: c.n_lay,
                    n_params: r.report.param_count,
                    diverged: r.report.diverged,
                }
            })
            .collect()
    }

    pub fn aggregate(&self) -> AggregateRow {
        let (mean, std) = mean_std(&self.values());
        AggregateRow {
            config_hash: self.config_hash.clone(),
            name: self.config.name.clone(),
            model: self.config.label(),
            metric: self.metric(),
            summary: self.config.summary,
            value: self.summary_value(),
            mean,
            std,
            n_seeds: self.runs.len(),
        }
    }
}

fn run_seed(cfg: &ExperimentConfig, data: (Dataset, Dataset), seed: u64) -> Result<SeedRun> {
    let (mut train, mut test) = data;
    prepare_features(&cfg.model, &mut train, &mut test);
    let model = cfg.model.build(&train, seed)?;
    let mixed = cfg.noise.mixed();
    let train_prep = Prepared::new(&model, &train, mixed)?;
    let test_prep = Prepared::new(&model, &test, mixed)?;
    let noise = NoiseSpec::new(cfg.noise.delta, cfg.noise.p, cfg.noise.seed_offset.wrapping_add(seed))
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
    let report = optimize(
        &model,
        &model.init_params(seed),
        &train_prep,
        &test_prep,
        &train_cfg,
        (!noise.is_silent()).then_some(&noise),
    )?;
    Ok(SeedRun { seed, report, train_data: train.card, test_data: test.card })
}

/// Trains one model per seed, in parallel, returning runs in seed order.
/// Divergence is reported through [`RunOutcome::diverged_seeds`], not as an error.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let shared = if cfg.task.seeded() { None } else { Some(cfg.task.load(base, 0)?) };
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let data = match &shared {
                Some(d) => d.clone(),
                None => cfg.task.load(base, seed)?,
            };
            run_seed(cfg, data, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutcome { config: cfg.clone(), config_hash: cfg.hash(), runs })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))?;
    Ok(())
}

pub const RESULT_COLUMNS: [&str; 15] = [
    "config_hash",
    "name",
    "model",
    "seed",
    "metric",
    "value",
    "train_value",
    "n_gate",
    "n_obs",
    "c",
    "n_copy",
    "n_tot",
    "n_lay",
    "n_params",
    "diverged",
];
pub const AGGREGATE_COLUMNS: [&str; 9] = ["config_hash", "name", "model", "metric", "summary", "value", "mean", "std", "n_seeds"];
pub const SWEEP_COLUMNS: [&str; 6] = ["axis", "value", "model", "metric_mean", "metric_std", "seeds"];
pub const REPRO_COLUMNS: [&str; 7] = ["table", "row", "reference", "ours", "delta", "bound", "status"];
pub const UNIVERSALITY_COLUMNS: [&str; 4] = ["target", "n_s", "l2_error", "relative_error"];
pub const COMPLEXITY_COLUMNS: [&str; 9] = ["config", "model", "n_data", "n_copy", "n_tot", "n_lay", "n_gate", "n_obs", "c"];

#[derive(Serialize)]
struct RunCard<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    run: &'a SeedRun,
}

/// Writes `config.json`, `results.csv`, `aggregate.csv` and `cards/seed-<s>.json` under `dir`.
pub fn write_run(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir.join("cards")).map_err(|e| ExperimentError::io(dir, e))?;
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, serde_json::to_string_pretty(&outcome.config)?).map_err(|e| ExperimentError::io(&cfg_path, e))?;
    write_csv(&dir.join("results.csv"), &outcome.rows(), &RESULT_COLUMNS)?;
    write_csv(&dir.join("aggregate.csv"), &[outcome.aggregate()], &AGGREGATE_COLUMNS)?;
    for r in &outcome.runs {
        let card = RunCard { config_hash: &outcome.config_hash, config: &outcome.config, run: r };
        let p = dir.join("cards").join(format!("seed-{}.json", r.seed));
        fs::write(&p, serde_json::to_string_pretty(&card)?).map_err(|e| ExperimentError::io(&p, e))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Delta,
    P,
}

impl FromStr for Axis {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Self::Delta),
            "p" => Ok(Self::P),
            _ => config_err(format!("unknown sweep axis {s:?}; expected delta or p")),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Delta => "delta",
            Self::P => "p",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub model: String,
    pub metric_mean: f64,
    pub metric_std: f64,
    pub seeds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub axis: Axis,
    pub value: f64,
    pub outcome: RunOutcome,
}

impl SweepPoint {
    pub fn row(&self) -> SweepRow {
        let (metric_mean, metric_std) = mean_std(&self.outcome.values());
        SweepRow {
            axis: self.axis,
            value: self.value,
            model: self.outcome.config.label(),
            metric_mean,
            metric_std,
            seeds: self.outcome.runs.len(),
        }
    }
}

/// Runs every config at every axis value; points are ordered config-major.
pub fn sweep(configs: &[(ExperimentConfig, PathBuf)], axis: Axis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return config_err("sweep needs at least one value");
    }
    for (cfg, _) in configs {
        if axis == Axis::P && cfg.noise.backend == Backend::Pure {
            return config_err(format!("{}: a p sweep needs the density backend, but backend = \"pure\"", cfg.name));
        }
    }
    let mut points = Vec::new();
    for (cfg, base) in configs {
        for &v in values {
            let mut c = cfg.clone();
            match axis {
                Axis::Delta => c.noise.delta = v,
                Axis::P => c.noise.p = v,
            }
            points.push(SweepPoint { axis, value: v, outcome: run(&c, base)? });
        }
    }
    Ok(points)
}

pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let rows: Vec<SweepRow> = points.iter().map(SweepPoint::row).collect();
    write_csv(path, &rows, &SWEEP_COLUMNS)
}

// ---------------------------------------------------------------------------
// Reference tables

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    IIa,
    IIb,
    IIISubset,
    NoiseFigs,
}

impl FromStr for TableId {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "II-a" => Ok(Self::IIa),
            "II-b" => Ok(Self::IIb),
            "III-subset" => Ok(Self::IIISubset),
            "noise-figs" => Ok(Self::NoiseFigs),
            _ => config_err(format!("unknown table {s:?}; expected II-a, II-b, III-subset or noise-figs")),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IIa => "II-a",
            Self::IIb => "II-b",
            Self::IIISubset => "III-subset",
            Self::NoiseFigs => "noise-figs",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Above(f64),
    /// Reported for comparison only.
    Info,
}

impl Bound {
    pub fn check(self, v: f64) -> Option<bool> {
        match self {
            Self::AtMost(b) => Some(v <= b),
            Self::AtLeast(b) => Some(v >= b),
            Self::Above(b) => Some(v > b),
            Self::Info => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AtMost(b) => write!(f, "<= {b}"),
            Self::AtLeast(b) => write!(f, ">= {b}"),
            Self::Above(b) => write!(f, "> {b}"),
            Self::Info => f.write_str("none"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReproRow {
    pub table: TableId,
    pub row: String,
    pub reference: Option<f64>,
    pub ours: f64,
    pub bound: Bound,
}

impl ReproRow {
    pub fn pass(&self) -> Option<bool> {
        self.bound.check(self.ours)
    }

    pub fn status(&self) -> &'static str {
        match self.pass() {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        }
    }
}

#[derive(Serialize)]
struct ReproRecord<'a> {
    table: String,
    row: &'a str,
    reference: Option<f64>,
    ours: f64,
    delta: Option<f64>,
    bound: String,
    status: &'static str,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReproReport {
    pub rows: Vec<ReproRow>,
    pub runs: Vec<RunOutcome>,
    pub sweeps: Vec<SweepPoint>,
}

impl ReproReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass() != Some(false))
    }
}

pub fn write_repro(path: &Path, rows: &[ReproRow]) -> Result<()> {
    let records: Vec<ReproRecord> = rows
        .iter()
        .map(|r| ReproRecord {
            table: r.table.to_string(),
            row: &r.row,
            reference: r.reference,
            ours: r.ours,
            delta: r.reference.map(|p| r.ours - p),
            bound: r.bound.to_string(),
            status: r.status(),
        })
        .collect();
    write_csv(path, &records, &REPRO_COLUMNS)
}

pub const DELTA_VALUES: [f64; 4] = [0.0, 0.05, 0.1, 0.2];
pub const P_VALUES: [f64; 4] = [0.0, 0.01, 0.05, 0.1];

/// Fraction of seed-paired runs in which `pick(a, others)` holds.
pub fn paired_fraction(a: &RunOutcome, others: &[&RunOutcome], pick: impl Fn(f64, &[f64]) -> bool) -> f64 {
    let wins = a
        .runs
        .iter()
        .enumerate()
        .filter(|(i, r)| {
            let rivals: Vec<f64> = others.iter().map(|o| o.runs[*i].report.final_metric).collect();
            pick(r.report.final_metric, &rivals)
        })
        .count();
    wins as f64 / a.runs.len() as f64
}

fn load_all(dir: &Path, names: &[&str], overrides: &[Override]) -> Result<Vec<(ExperimentConfig, PathBuf)>> {
    names
        .iter()
        .map(|n| Ok((ExperimentConfig::load(&dir.join(format!("{n}.toml")), overrides)?, dir.to_path_buf())))
        .collect()
}

/// Runs the committed configs behind one reference table and compares them
/// with the published values. `overrides` apply to every config.
pub fn reproduce(table: TableId, configs_dir: &Path, overrides: &[Override]) -> Result<ReproReport> {
    let mut report = ReproReport::default();
    let mut rows_for = |names: &[(&str, &str, Option<f64>, Bound)]| -> Result<Vec<RunOutcome>> {
        let cfgs = load_all(configs_dir, &names.iter().map(|n| n.0).collect::<Vec<_>>(), overrides)?;
        let mut outs = Vec::new();
        for ((cfg, base), (_, row, reference, bound)) in cfgs.iter().zip(names) {
            let out = run(cfg, base)?;
            report.rows.push(ReproRow { table, row: row.to_string(), reference: *reference, ours: out.summary_value(), bound: *bound });
            outs.push(out);
        }
        Ok(outs)
    };
    match table {
        TableId::IIa => {
            report.runs = rows_for(&[
                ("regression-dqnn1", "DQNN1 relative error", Some(0.0679), Bound::AtMost(0.10)),
                ("regression-dqnn4", "DQNN4 relative error", Some(0.0546), Bound::AtMost(0.08)),
                ("regression-qcl", "QCL relative error", Some(0.0821), Bound::Info),
                ("regression-ccq", "CCQ relative error", Some(0.1292), Bound::Info),
            ])?;
        }
        TableId::IIb => {
            let outs = rows_for(&[
                ("ring-dqnn1", "DQNN1 accuracy", Some(0.9140), Bound::AtLeast(0.88)),
                ("ring-dqnn4", "DQNN4 accuracy", Some(0.9763), Bound::AtLeast(0.93)),
                ("ring-qcl", "QCL accuracy", Some(0.7418), Bound::Info),
                ("ring-ccq", "CCQ accuracy", Some(0.7520), Bound::Info),
            ])?;
            let frac = paired_fraction(&outs[1], &[&outs[2], &outs[3]], |a, o| o.iter().all(|&b| a > b));
            report.rows.push(ReproRow {
                table,
                row: "seeds where DQNN4 beats QCL and CCQ".into(),
                reference: None,
                ours: frac,
                bound: Bound::AtLeast(0.8),
            });
            report.runs = outs;
        }
        TableId::IIISubset => {
            report.runs = rows_for(&[
                ("mnist2", "MNIST2 test accuracy", Some(0.9905), Bound::AtLeast(0.97)),
                ("wine", "Wine best-of-seeds test accuracy", Some(1.0), Bound::AtLeast(0.95)),
                ("breast-cancer", "Breast cancer best-of-seeds test accuracy", Some(0.9574), Bound::AtLeast(0.92)),
            ])?;
        }
        TableId::NoiseFigs => {
            let cfgs = load_all(configs_dir, &["regression-dqnn1", "regression-qcl", "regression-ccq"], overrides)?;
            let coherent = sweep(&cfgs, Axis::Delta, &DELTA_VALUES)?;
            report.rows.extend(coherent_rows(&coherent));
            let decoherence = sweep(&cfgs, Axis::P, &P_VALUES)?;
            report.rows.extend(decoherence_rows(&decoherence));
            report.sweeps = coherent.into_iter().chain(decoherence).collect();
        }
    }
    Ok(report)
}

/// Groups config-major sweep points by series.
pub fn by_series(points: &[SweepPoint]) -> Vec<(String, Vec<&SweepPoint>)> {
    let mut out: Vec<(String, Vec<&SweepPoint>)> = Vec::new();
    for p in points {
        let label = p.outcome.config.label();
        match out.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(p),
            None => out.push((label, vec![p])),
        }
    }
    out
}

/// First series against the rest at each Δ, then per-series monotonicity of the mean.
pub fn coherent_rows(points: &[SweepPoint]) -> Vec<ReproRow> {
    let series = by_series(points);
    let mut rows = Vec::new();
    let Some(((lead, lead_pts), rest)) = series.split_first() else { return rows };
    for (i, p) in lead_pts.iter().enumerate() {
        let rivals: Vec<&RunOutcome> = rest.iter().map(|(_, v)| &v[i].outcome).collect();
        rows.push(ReproRow {
            table: TableId::NoiseFigs,
            row: format!("delta={}: seeds where {lead} error <= every baseline", p.value),
            reference: None,
            ours: paired_fraction(&p.outcome, &rivals, |a, o| o.iter().all(|&b| a <= b)),
            bound: Bound::AtLeast(0.7),
        });
    }
    for (label, pts) in &series {
        let means: Vec<f64> = pts.iter().map(|p| p.outcome.mean()).collect();
        let monotone = means.windows(2).all(|w| w[1] >= w[0]);
        rows.push(ReproRow {
            table: TableId::NoiseFigs,
            row: format!("{label} mean error non-decreasing in delta"),
            reference: None,
            ours: f64::from(u8::from(monotone)),
            bound: Bound::AtLeast(1.0),
        });
    }
    rows
}

/// At the largest p: margin of every baseline mean over the first series' mean.
pub fn decoherence_rows(points: &[SweepPoint]) -> Vec<ReproRow> {
    let series = by_series(points);
    let Some(((lead, lead_pts), rest)) = series.split_first() else { return Vec::new() };
    let last = lead_pts.last().expect("non-empty series");
    rest.iter()
        .map(|(label, pts)| ReproRow {
            table: TableId::NoiseFigs,
            row: format!("p={}: {label} mean error minus {lead} mean error", last.value),
            reference: None,
            ours: pts.last().expect("non-empty series").outcome.mean() - last.outcome.mean(),
            bound: Bound::Above(0.0),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Universality and complexity tables

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalityRow {
    pub target: String,
    pub n_s: usize,
    pub l2_error: f64,
    pub relative_error: f64,
}

/// Convergence table of sigmoid-basis fits on a `side × side` input grid over `[-half, half]²`.
pub fn universality_demo(
    target_id: &str,
    n_s: &[usize],
    side: usize,
    half: f64,
    cfg: &FitConfig,
) -> Result<Vec<UniversalityRow>> {
    let target = Target::from_id(target_id)?;
    let grid = QuadratureGrid::square(side, half)?;
    let norm = grid.norm(&target.values(&grid)?);
    let fits = convergence(&grid, &target, n_s, cfg)?;
    Ok(fits
        .iter()
        .map(|f| UniversalityRow {
            target: target_id.to_string(),
            n_s: f.n_s(),
            l2_error: f.error,
            relative_error: if norm > 0.0 { f.error / norm } else { f.error },
        })
        .collect())
}

pub fn write_universality(path: &Path, rows: &[UniversalityRow]) -> Result<()> {
    write_csv(path, rows, &UNIVERSALITY_COLUMNS)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub config: String,
    pub model: String,
    pub n_data: usize,
    pub n_copy: usize,
    pub n_tot: usize,
    pub n_lay: usize,
    pub n_gate: usize,
    pub n_obs: usize,
    pub c: usize,
}

/// The cost of the model a config builds for its first seed.
pub fn complexity_row(cfg: &ExperimentConfig, base: &Path) -> Result<ComplexityRow> {
    let seed = cfg.seeds[0];
    let (mut train, mut test) = cfg.task.load(base, seed)?;
    prepare_features(&cfg.model, &mut train, &mut test);
    let c = cfg.model.build(&train, seed)?.complexity();
    Ok(ComplexityRow {
        config: cfg.name.clone(),
        model: cfg.label(),
        n_data: c.n_data,
        n_copy: c.n_copy,
        n_tot: c.n_tot,
        n_lay: c.n_lay,
        n_gate: c.n_gate,
        n_obs: c.n_obs,
        c: c.c,
    })
}

pub fn write_complexity(path: &Path, rows: &[ComplexityRow]) -> Result<()> {
    write_csv(path, rows, &COMPLEXITY_COLUMNS)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "tiny"
seeds = [0, 1]

[task]
kind = "regression"
n_train = 12

[model]
kind = "dqnn"
n_cir = 2
n_layers = 1
observables = { pick = "all-z" }

[train]
iterations = 3
"#;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(MINIMAL, &[]).unwrap()
    }

    fn ov(s: &str) -> Override {
        s.parse().unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = tiny();
        assert_eq!(c.noise, NoiseConfig::default());
        assert_eq!(c.train.iterations, 3);
        assert_eq!(c.train.learning_rate, TrainConfig::default().learning_rate);
        assert_eq!(c.summary, Summary::Mean);
        assert_eq!(c.label(), "DQNN");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in ["bogus = 1\n", "[noise]\ndelt = 0.1\n"] {
            let text = format!("{MINIMAL}{extra}");
            assert!(matches!(ExperimentConfig::from_toml_str(&text, &[]), Err(ExperimentError::Config(_))), "{extra}");
        }
        let text = MINIMAL.replace("n_layers = 1", "n_layers = 1\nn_copy = 2");
        assert!(ExperimentConfig::from_toml_str(&text, &[]).is_err());
    }

    #[test]
    fn validation_errors() {
        let bad = [
            MINIMAL.replace("schema_version = 1", "schema_version = 2"),
            MINIMAL.replace("seeds = [0, 1]", "seeds = []"),
            MINIMAL.replace("seeds = [0, 1]", "seeds = [3, 3]"),
            MINIMAL.replace("name = \"tiny\"", "name = \"a/b\""),
            MINIMAL.replace("n_cir = 2", "n_cir = 0"),
            format!("{MINIMAL}\n[noise]\np = 0.1\nbackend = \"pure\"\n"),
            format!("{MINIMAL}\n[noise]\ndelta = -1.0\n"),
        ];
        for text in bad {
            let e = ExperimentConfig::from_toml_str(&text, &[]).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{e}");
        }
    }

    #[test]
    fn overrides_reach_nested_and_defaulted_fields() {
        let c = ExperimentConfig::from_toml_str(
            MINIMAL,
            &[ov("--train.iterations=7"), ov("noise.delta=0.05"), ov("seeds=[4]"), ov("train.loss=ce")],
        )
        .unwrap();
        assert_eq!((c.train.iterations, c.noise.delta, c.seeds.clone()), (7, 0.05, vec![4]));
        assert_eq!(c.train.loss, crate::training::LossKind::Ce);
        let text = MINIMAL.replace("observables = { pick = \"all-z\" }", "observables = { pick = \"random\", n_obs = 2 }");
        let c = ExperimentConfig::from_toml_str(&text, &[ov("model.observables.n_obs=3")]).unwrap();
        assert!(matches!(c.model, ModelConfig::Dqnn { observables: ObservablePick::Random { n_obs: 3 }, .. }));

        assert!(ExperimentConfig::from_toml_str(MINIMAL, &[ov("train.itrations=7")]).is_err());
        assert!(ExperimentConfig::from_toml_str(MINIMAL, &[ov("train=7")]).is_err());
        assert!(ExperimentConfig::from_toml_str(MINIMAL, &[ov("name.x=7")]).is_err());
        assert!("novalue".parse::<Override>().is_err());
        assert!("a..b=1".parse::<Override>().is_err());
    }

    #[test]
    fn hash_ignores_order_and_output() {
        let reordered = r#"
seeds = [0, 1]
name = "tiny"
[train]
iterations = 3
[model]
observables = { pick = "all-z" }
n_layers = 1
n_cir = 2
kind = "dqnn"
[task]
n_train = 12
kind = "regression"
"#;
        let a = tiny();
        let mut b = ExperimentConfig::from_toml_str(&format!("schema_version = 1\n{reordered}"), &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        b.output = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.train.iterations = 4;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn zero_iterations_aggregate_is_the_untrained_metric() {
        let c = ExperimentConfig::from_toml_str(MINIMAL, &[ov("seeds=[1]"), ov("train.iterations=0")]).unwrap();
        let out = run(&c, Path::new(".")).unwrap();
        let (train, _) = c.task.load(Path::new("."), 1).unwrap();
        let model = c.model.build(&train, 1).unwrap();
        let prep = Prepared::new(&model, &train, false).unwrap();
        let untrained = crate::training::evaluate(&model, &model.init_params(1).0, &prep, None).unwrap();
        assert_eq!(out.aggregate().value, untrained);
        assert_eq!(out.aggregate().std, 0.0);
    }

    #[test]
    fn reruns_write_identical_rows() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny();
        for sub in ["a", "b"] {
            write_run(&dir.path().join(sub), &run(&c, Path::new(".")).unwrap()).unwrap();
        }
        for f in ["results.csv", "aggregate.csv"] {
            let a = fs::read(dir.path().join("a").join(f)).unwrap();
            assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
        }
        let text = fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), RESULT_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 3);
        assert!(dir.path().join("a/cards/seed-1.json").exists());
    }

    #[test]
    fn sweep_rows_and_zero_point_consistency() {
        let c = tiny();
        let pts = sweep(&[(c.clone(), ".".into())], Axis::Delta, &[0.0, 0.1]).unwrap();
        assert_eq!(pts.len(), 2);
        let plain = run(&c, Path::new(".")).unwrap();
        assert_eq!(pts[0].row().metric_mean, plain.aggregate().mean);
        assert_ne!(pts[1].row().metric_mean, plain.aggregate().mean);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_sweep(&p, &pts).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), "axis,value,model,metric_mean,metric_std,seeds");
        assert!(text.lines().nth(1).unwrap().starts_with("delta,0.0,DQNN,"));

        let mut pure = c;
        pure.noise.backend = Backend::Pure;
        assert_eq!(sweep(&[(pure, ".".into())], Axis::P, &[0.1]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn density_sweep_point_matches_pure_at_zero_p() {
        let mut c = tiny();
        c.seeds = vec![2];
        let pure = run(&c, Path::new(".")).unwrap();
        c.noise.backend = Backend::Density;
        let mixed = run(&c, Path::new(".")).unwrap();
        assert!((pure.mean() - mixed.mean()).abs() < 1e-9);
    }

    #[test]
    fn missing_data_maps_to_exit_four() {
        let text = r#"
schema_version = 1
name = "csv"
seeds = [0]
[task]
kind = "csv"
table = "nowhere.csv"
schema = "nowhere.schema.toml"
[model]
kind = "ccq"
n_copy = 1
n_layers = 1
"#;
        let c = ExperimentConfig::from_toml_str(text, &[]).unwrap();
        assert_eq!(run(&c, Path::new("/nonexistent")).unwrap_err().exit_code(), 4);
        let e = ExperimentConfig::load(Path::new("/nonexistent/x.toml"), &[]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("/nonexistent/x.toml"));
    }

    #[test]
    fn summaries_and_bounds() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
        assert_eq!(Bound::AtMost(0.1).check(0.1), Some(true));
        assert_eq!(Bound::Above(0.0).check(0.0), Some(false));
        assert_eq!(Bound::Info.check(3.0), None);
        assert_eq!("II-b".parse::<TableId>().unwrap().to_string(), "II-b");
        assert!("IV".parse::<TableId>().is_err());
        let mut c = tiny();
        c.summary = Summary::Best;
        let out = run(&c, Path::new(".")).unwrap();
        let v = out.values();
        assert_eq!(out.summary_value(), v[0].min(v[1]));
    }

    #[test]
    fn committed_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|e| e == "toml") {
                let c = ExperimentConfig::load(&p, &[]).unwrap();
                assert_eq!(p.file_stem().unwrap().to_str().unwrap(), c.name);
                n += 1;
            }
        }
        assert!(n >= 11);
    }
}
