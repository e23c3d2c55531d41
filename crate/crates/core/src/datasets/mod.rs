//! Task data: synthetic generators, UCI CSV and MNIST IDX loaders, and
//! spin-chain ground states for phase recognition.
//!
//! Every dataset carries a [`DatasetCard`] whose [`Recipe`] regenerates it.

mod mnist;
mod spin;
mod synthetic;
mod uci;

pub use mnist::{bilinear_resize, load_mnist_idx, read_idx_images, read_idx_labels, IdxImages, MnistOptions};
pub use spin::{
    apply_hamiltonian, gen_phase_dataset, haldane_ground_state, GroundState, PhaseGrid, Polynomial,
    SpinChainSpec, string_order, string_order_contour,
};
pub use synthetic::{gen_regression, gen_ring, regression_target, ring_label};
pub use uci::{load_csv, CsvSchema};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{DataPoint, Input, Label};
use crate::qsim::Statevector;

/// Smallest admissible feature norm before a dataset gets an offset feature.
pub const KAPPA_FLOOR: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{0}: no samples")]
    Empty(String),
    #[error("bad IDX data: {0}")]
    Idx(String),
    #[error("spin chain: {0}")]
    Spin(String),
    #[error("invalid dataset request: {0}")]
    Invalid(String),
    #[error("card: {0}")]
    Card(#[from] serde_json::Error),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// Whether the error means the data source is absent rather than malformed.
    pub fn is_missing(&self) -> bool {
        matches!(self, Self::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Binary,
    Multiclass(usize),
}

impl Task {
    pub fn n_outputs(self) -> usize {
        match self {
            Task::Multiclass(k) => k,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Full,
}

/// Affine change applied to features before encoding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameShift {
    None,
    /// Appends a constant feature, which bounds every norm below by its value.
    OffsetFeature(f64),
}

/// How to rebuild a dataset from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Recipe {
    Regression { m: usize, seed: u64 },
    Ring { m: usize, seed: u64 },
    Csv { path: PathBuf, schema: CsvSchema },
    Mnist { images: PathBuf, labels: PathBuf, options: MnistOptions },
    Phase { grid: PhaseGrid },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetCard {
    pub name: String,
    pub source: String,
    pub transform: String,
    pub recipe: Recipe,
    pub split: Split,
    pub n_samples: usize,
    pub n_features: usize,
    pub kappa1: f64,
    pub kappa2: f64,
    pub shift: FrameShift,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<DataPoint>,
    pub task: Task,
    pub card: DatasetCard,
}

fn feature_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Dataset {
    pub(crate) fn new(samples: Vec<DataPoint>, task: Task, card: DatasetCard) -> Self {
        let mut d = Self { samples, task, card };
        d.refresh_card();
        d
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        match self.samples.first().map(|s| &s.input) {
            Some(Input::Features(x)) => x.len(),
            Some(Input::State(s)) => s.dim(),
            None => 0,
        }
    }

    /// Updates sample count, dimension and the observed norm range.
    fn refresh_card(&mut self) {
        self.card.n_samples = self.samples.len();
        self.card.n_features = self.n_features();
        let norms = self.samples.iter().filter_map(|s| match &s.input {
            Input::Features(x) => Some(feature_norm(x)),
            Input::State(_) => None,
        });
        let (lo, hi) = norms.fold((f64::INFINITY, 0.0f64), |(lo, hi), n| (lo.min(n), hi.max(n)));
        if lo.is_finite() {
            self.card.kappa1 = lo;
            self.card.kappa2 = hi;
        }
    }

    /// Applies the frame translation: appends `offset` as an extra feature when the
    /// smallest norm is below [`KAPPA_FLOOR`], and records the decision.
    pub fn ensure_min_norm(&mut self, offset: f64) {
        let min = self
            .samples
            .iter()
            .filter_map(|s| match &s.input {
                Input::Features(x) => Some(feature_norm(x)),
                Input::State(_) => None,
            })
            .fold(f64::INFINITY, f64::min);
        if min.is_finite() && min < KAPPA_FLOOR {
            self.apply_shift(FrameShift::OffsetFeature(offset));
        }
    }

    pub fn apply_shift(&mut self, shift: FrameShift) {
        if let FrameShift::OffsetFeature(c) = shift {
            for s in &mut self.samples {
                if let Input::Features(x) = &mut s.input {
                    x.push(c);
                }
            }
            self.card.notes.push(format!("appended constant feature {c} so that every norm is at least {c}"));
        }
        self.card.shift = shift;
        self.refresh_card();
    }

    /// Drops feature `index` from every sample.
    pub fn drop_feature(&mut self, index: usize) {
        for s in &mut self.samples {
            if let Input::Features(x) = &mut s.input {
                if index < x.len() {
                    x.remove(index);
                }
            }
        }
        self.card.notes.push(format!("dropped feature {index}"));
        self.refresh_card();
    }

    /// Seeded permutation split into `(train, test)` with `n_test` test samples.
    pub fn split(self, n_test: usize, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
        if n_test > self.samples.len() {
            return Err(DatasetError::Invalid(format!(
                "cannot hold out {n_test} of {} samples",
                self.samples.len()
            )));
        }
        use rand::seq::SliceRandom;
        let mut idx: Vec<usize> = (0..self.samples.len()).collect();
        idx.shuffle(&mut crate::rng::rng_for(seed, &[0x5911]));
        let (test_idx, train_idx) = idx.split_at(n_test);
        let pick = |ids: &[usize], split: Split| {
            let mut sorted = ids.to_vec();
            sorted.sort_unstable();
            let mut card = self.card.clone();
            card.split = split;
            card.notes.push(format!("seeded split, seed {seed}, {n_test} held out"));
            Dataset::new(sorted.iter().map(|&i| self.samples[i].clone()).collect(), self.task, card)
        };
        Ok((pick(train_idx, Split::Train), pick(test_idx, Split::Test)))
    }

    /// Keeps the first `n` samples of a seeded permutation.
    pub fn subsample(self, n: usize, seed: u64) -> Dataset {
        if n >= self.samples.len() {
            return self;
        }
        let mut idx = rand::seq::index::sample(&mut crate::rng::rng_for(seed, &[0x5ab5]), self.samples.len(), n).into_vec();
        idx.sort_unstable();
        let mut card = self.card.clone();
        card.notes.push(format!("seeded subsample of {n}, seed {seed}"));
        Dataset::new(idx.into_iter().map(|i| self.samples[i].clone()).collect(), self.task, card)
    }

    /// Columnar text: a `#` header, then one sample per line, features then label.
    /// State inputs store their real amplitudes.
    pub fn to_text(&self) -> Result<String, DatasetError> {
        let kind = match self.samples.first().map(|s| &s.input) {
            Some(Input::State(_)) => "state",
            _ => "features",
        };
        let task = match self.task {
            Task::Regression => "regression".to_string(),
            Task::Binary => "binary".to_string(),
            Task::Multiclass(k) => format!("multiclass:{k}"),
        };
        let mut out = format!("# dqnn-dataset v1 input={kind} task={task} n={} d={}\n", self.len(), self.n_features());
        for (i, s) in self.samples.iter().enumerate() {
            let values: Vec<f64> = match &s.input {
                Input::Features(x) => x.clone(),
                Input::State(st) => {
                    if st.amplitudes().iter().any(|a| a.im.abs() > 1e-12) {
                        return Err(DatasetError::Invalid(format!("sample {i}: complex amplitudes cannot be stored")));
                    }
                    st.amplitudes().iter().map(|a| a.re).collect()
                }
            };
            for v in values {
                write!(out, "{v:?},").expect("string write");
            }
            match s.label {
                Label::Real(y) => writeln!(out, "{y:?}"),
                Label::Class(k) => writeln!(out, "{k}"),
            }
            .expect("string write");
        }
        Ok(out)
    }

    pub fn from_text(text: &str, card: DatasetCard, origin: &Path) -> Result<Dataset, DatasetError> {
        let bad = |line: usize, m: &str| DatasetError::Malformed { path: origin.to_path_buf(), line, message: m.into() };
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let field = |key: &str| {
            head.split_whitespace()
                .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| bad(1, &format!("header lacks {key}=")))
        };
        if !head.starts_with("# dqnn-dataset v1") {
            return Err(bad(1, "not a dqnn-dataset v1 file"));
        }
        let is_state = field("input")? == "state";
        let task = match field("task")? {
            "regression" => Task::Regression,
            "binary" => Task::Binary,
            t => Task::Multiclass(
                t.strip_prefix("multiclass:").and_then(|k| k.parse().ok()).ok_or_else(|| bad(1, "unknown task"))?,
            ),
        };
        let d: usize = field("d")?.parse().map_err(|_| bad(1, "bad d"))?;
        let mut samples = Vec::new();
        for (i, l) in lines.enumerate() {
            let line = i + 2;
            let vals: Vec<&str> = l.split(',').collect();
            if vals.len() != d + 1 {
                return Err(bad(line, &format!("expected {} columns, got {}", d + 1, vals.len())));
            }
            let x = vals[..d]
                .iter()
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad(line, "bad number")))
                .collect::<Result<Vec<_>, _>>()?;
            let label = if task == Task::Regression {
                Label::Real(vals[d].trim().parse().map_err(|_| bad(line, "bad label"))?)
            } else {
                Label::Class(vals[d].trim().parse().map_err(|_| bad(line, "bad class label"))?)
            };
            let input = if is_state {
                let amps = x.iter().map(|&v| C64::new(v, 0.0)).collect();
                Input::State(Statevector::from_amplitudes(amps).map_err(|e| bad(line, &e.to_string()))?)
            } else {
                Input::Features(x)
            };
            samples.push(DataPoint { input, label });
        }
        Ok(Dataset::new(samples, task, card))
    }

    /// Writes `<stem>.csv` and `<stem>.card.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), DatasetError> {
        fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
        let data = dir.join(format!("{stem}.csv"));
        let card = dir.join(format!("{stem}.card.json"));
        fs::write(&data, self.to_text()?).map_err(|e| DatasetError::io(&data, e))?;
        fs::write(&card, serde_json::to_string_pretty(&self.card)?).map_err(|e| DatasetError::io(&card, e))?;
        Ok((data, card))
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Dataset, DatasetError> {
        let data = dir.join(format!("{stem}.csv"));
        let card = dir.join(format!("{stem}.card.json"));
        let card_text = fs::read_to_string(&card).map_err(|e| DatasetError::io(&card, e))?;
        let text = fs::read_to_string(&data).map_err(|e| DatasetError::io(&data, e))?;
        Dataset::from_text(&text, serde_json::from_str(&card_text)?, &data)
    }
}

/// Rebuilds the full (unsplit) dataset described by a recipe.
pub fn from_recipe(recipe: &Recipe) -> Result<Dataset, DatasetError> {
    match recipe {
        Recipe::Regression { m, seed } => Ok(gen_regression(*m, *seed)),
        Recipe::Ring { m, seed } => Ok(gen_ring(*m, *seed)),
        Recipe::Csv { path, schema } => load_csv(path, schema),
        Recipe::Mnist { images, labels, options } => load_mnist_idx(images, labels, options),
        Recipe::Phase { grid } => gen_phase_dataset(grid),
    }
}

pub(crate) fn blank_card(name: &str, source: &str, transform: &str, recipe: Recipe) -> DatasetCard {
    DatasetCard {
        name: name.into(),
        source: source.into(),
        transform: transform.into(),
        recipe,
        split: Split::Full,
        n_samples: 0,
        n_features: 0,
        kappa1: 0.0,
        kappa2: 0.0,
        shift: FrameShift::None,
        notes: Vec::new(),
    }
}
