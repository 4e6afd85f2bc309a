//! From-scratch binary classifiers over (sigma, gamma, t) features:
//! splitting, standardization, training, persistence and evaluation.

mod knn;
mod linear_svm;
mod logistic;
mod mlp;
mod naive_bayes;

pub use knn::KnnModel;
pub use linear_svm::LinSvmModel;
pub use logistic::LogRegModel;
pub use mlp::MlpModel;
pub use naive_bayes::GnbModel;

use crate::error::{CoreError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{BufRead, Write};

pub const N_FEATURES: usize = 3;

/// Labeled rows of (sigma, gamma, t) features.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub x: Vec<[f64; N_FEATURES]>,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn from_rows(rows: impl IntoIterator<Item = ([f64; N_FEATURES], u8)>) -> Result<Self> {
        let mut ds = Dataset::default();
        for (x, y) in rows {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::InvalidDataset(format!(
                    "non-finite feature in row {:?}",
                    x
                )));
            }
            if y > 1 {
                return Err(CoreError::InvalidDataset(format!(
                    "label must be 0 or 1, got {y}"
                )));
            }
            ds.x.push(x);
            ds.y.push(y);
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.y.iter().filter(|&&y| y == 1).count();
        [self.len() - ones, ones]
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: indices.iter().map(|&i| self.x[i]).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Reads a `sigma,gamma,t,H` CSV with header.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut ds = Dataset::default();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if ln == 0 || line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(CoreError::InvalidDataset(format!(
                    "line {} has {} fields, expected 4",
                    ln + 1,
                    parts.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    CoreError::InvalidDataset(format!("bad number `{s}` on line {}", ln + 1))
                })
            };
            let x = [parse(parts[0])?, parse(parts[1])?, parse(parts[2])?];
            let h = parse(parts[3])?;
            if h != 0.0 && h != 1.0 {
                return Err(CoreError::InvalidDataset(format!(
                    "label must be 0 or 1 on line {}",
                    ln + 1
                )));
            }
            ds.x.push(x);
            ds.y.push(h as u8);
        }
        Ok(ds)
    }
}

/// Disjoint, exhaustive 60/20/20 split indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Uniform seeded permutation followed by a contiguous 60/20/20 cut.
pub fn split(dataset: &Dataset, seed: u64) -> Result<SplitIndices> {
    let n = dataset.len();
    if n < 5 {
        return Err(CoreError::InvalidDataset(format!(
            "need at least 5 rows to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (n as f64 * 0.6).floor() as usize;
    let n_val = (n as f64 * 0.8).floor() as usize - n_train;
    let test = order.split_off(n_train + n_val);
    let mut train = order;
    let validation = train.split_off(n_train);
    Ok(SplitIndices {
        train,
        validation,
        test,
        seed,
    })
}

/// Per-feature mean and standard deviation, computed from training rows
/// only.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
}

impl Standardizer {
    pub fn fit(xs: &[[f64; N_FEATURES]]) -> Self {
        let n = xs.len().max(1) as f64;
        let mut mean = [0.0; N_FEATURES];
        for x in xs {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; N_FEATURES];
        for x in xs {
            for f in 0..N_FEATURES {
                let d = x[f] - mean[f];
                var[f] += d * d;
            }
        }
        let mut std = [0.0; N_FEATURES];
        for f in 0..N_FEATURES {
            let s = (var[f] / n).sqrt();
            // Constant features standardize to zero rather than blow up.
            std[f] = if s > 1e-12 { s } else { 1.0 };
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut z = [0.0; N_FEATURES];
        for f in 0..N_FEATURES {
            z[f] = (x[f] - self.mean[f]) / self.std[f];
        }
        z
    }

    pub fn apply_all(&self, xs: &[[f64; N_FEATURES]]) -> Vec<[f64; N_FEATURES]> {
        xs.iter().map(|x| self.apply(x)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Knn,
    Gnb,
    LogReg,
    LinSvm,
    Mlp,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Knn,
        Variant::Gnb,
        Variant::LogReg,
        Variant::LinSvm,
        Variant::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Knn => "knn",
            Variant::Gnb => "gnb",
            Variant::LogReg => "logreg",
            Variant::LinSvm => "linsvm",
            Variant::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(Variant::Knn),
            "gnb" | "nb" | "naive_bayes" => Ok(Variant::Gnb),
            "logreg" | "logistic" => Ok(Variant::LogReg),
            "linsvm" | "svm" => Ok(Variant::LinSvm),
            "mlp" | "nn" => Ok(Variant::Mlp),
            other => Err(CoreError::InvalidInput(format!(
                "unknown model variant `{other}`"
            ))),
        }
    }
}

/// Training hyperparameters. Defaults follow the shipped configuration:
/// KNN with k = 5, logistic regression by full-batch gradient descent,
/// a linear SVM trained with 20 epochs of Pegasos-style subgradient
/// descent at lambda = 1e-4, and the 3-32-32-1 network (ReLU hidden
/// layers, dropout 0.2, learning rate 1e-3, batch size 32, 100 epochs).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub seed: u64,
    pub knn_k: usize,
    pub logreg_lr: f64,
    pub logreg_epochs: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub mlp_hidden: usize,
    pub mlp_dropout: f64,
    pub mlp_lr: f64,
    pub mlp_batch: usize,
    pub mlp_epochs: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            seed: 0,
            knn_k: 5,
            logreg_lr: 1.0,
            logreg_epochs: 500,
            svm_lambda: 1e-4,
            svm_epochs: 20,
            mlp_hidden: 32,
            mlp_dropout: 0.2,
            mlp_lr: 1e-3,
            mlp_batch: 32,
            mlp_epochs: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Knn(KnnModel),
    Gnb(GnbModel),
    LogReg(LogRegModel),
    LinSvm(LinSvmModel),
    Mlp(MlpModel),
}

/// A trained classifier: variant-specific parameters plus the
/// standardization learned from the training split.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Classifier {
    pub variant: Variant,
    pub standardizer: Standardizer,
    pub params: ModelParams,
}

/// Trains one variant. Validation rows are used for epoch-level
/// monitoring; the network retains the parameters of its best validation
/// epoch.
pub fn fit(variant: Variant, train: &Dataset, validation: &Dataset, hp: &Hyper) -> Result<Classifier> {
    if train.x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CoreError::InvalidDataset("non-finite feature".into()));
    }
    let counts = train.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(CoreError::DegenerateLabels);
    }
    let standardizer = Standardizer::fit(&train.x);
    let xs = standardizer.apply_all(&train.x);
    let xv = standardizer.apply_all(&validation.x);

    let params = match variant {
        Variant::Knn => ModelParams::Knn(knn::fit(&xs, &train.y, hp.knn_k)?),
        Variant::Gnb => ModelParams::Gnb(naive_bayes::fit(&xs, &train.y)),
        Variant::LogReg => ModelParams::LogReg(logistic::fit(&xs, &train.y, hp)?),
        Variant::LinSvm => ModelParams::LinSvm(linear_svm::fit(&xs, &train.y, hp)),
        Variant::Mlp => ModelParams::Mlp(mlp::fit(&xs, &train.y, &xv, &validation.y, hp)?),
    };
    Ok(Classifier {
        variant,
        standardizer,
        params,
    })
}

impl Classifier {
    /// Deterministic 0/1 prediction for one feature vector.
    pub fn predict(&self, features: &[f64; N_FEATURES]) -> Result<u8> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput(format!(
                "non-finite feature in {features:?}"
            )));
        }
        let z = self.standardizer.apply(features);
        Ok(match &self.params {
            ModelParams::Knn(m) => m.predict(&z),
            ModelParams::Gnb(m) => m.predict(&z),
            ModelParams::LogReg(m) => m.predict(&z),
            ModelParams::LinSvm(m) => m.predict(&z),
            ModelParams::Mlp(m) => m.predict(&z),
        })
    }

    pub fn predict_all(&self, xs: &[[f64; N_FEATURES]]) -> Result<Vec<u8>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// Per-class and weighted-average evaluation scores.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: [ClassMetrics; 2],
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    /// Set when a zero-support or zero-prediction class forced a 0 score.
    pub zero_division: bool,
}

/// Confusion-count metrics from parallel truth/prediction slices.
pub fn confusion_metrics(y_true: &[u8], y_pred: &[u8]) -> Metrics {
    assert_eq!(y_true.len(), y_pred.len());
    let n = y_true.len();
    let mut counts = [[0usize; 2]; 2]; // counts[truth][pred]
    for (&t, &p) in y_true.iter().zip(y_pred) {
        counts[t as usize][p as usize] += 1;
    }
    let correct = counts[0][0] + counts[1][1];
    let accuracy = correct as f64 / n as f64;

    let mut zero_division = false;
    let mut per_class = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        support: 0,
    }; 2];
    for c in 0..2 {
        let tp = counts[c][c];
        let support = counts[c][0] + counts[c][1];
        let predicted = counts[0][c] + counts[1][c];
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else {
            zero_division = true;
            0.0
        };
        let recall = if support > 0 {
            tp as f64 / support as f64
        } else {
            zero_division = true;
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class[c] = ClassMetrics {
            precision,
            recall,
            f1,
            support,
        };
    }
    let weight = |c: usize| per_class[c].support as f64 / n as f64;
    Metrics {
        accuracy,
        per_class,
        precision_weighted: weight(0) * per_class[0].precision + weight(1) * per_class[1].precision,
        recall_weighted: weight(0) * per_class[0].recall + weight(1) * per_class[1].recall,
        f1_weighted: weight(0) * per_class[0].f1 + weight(1) * per_class[1].f1,
        zero_division,
    }
}

pub fn evaluate(model: &Classifier, test: &Dataset) -> Result<Metrics> {
    if test.is_empty() {
        return Err(CoreError::InvalidDataset("empty test set".into()));
    }
    let preds = model.predict_all(&test.x)?;
    Ok(confusion_metrics(&test.y, &preds))
}

/// Metrics report: `model,accuracy,precision,recall,f1` with weighted
/// averages in the table cells.
pub fn write_metrics_csv<W: Write>(rows: &[(Variant, Metrics)], mut w: W) -> Result<()> {
    writeln!(w, "model,accuracy,precision,recall,f1")?;
    for (variant, m) in rows {
        writeln!(
            w,
            "{},{:.4},{:.4},{:.4},{:.4}",
            variant.as_str(),
            m.accuracy,
            m.precision_weighted,
            m.recall_weighted,
            m.f1_weighted
        )?;
    }
    Ok(())
}

const MODEL_FORMAT: &str = "healcrete-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    format: String,
    version: u32,
    checksum: String,
    model: Classifier,
}

fn model_checksum(model: &Classifier) -> Result<String> {
    let payload = serde_json::to_string(model)
        .map_err(|e| CoreError::CorruptModel {
            section: "model".into(),
            detail: e.to_string(),
        })?;
    let mut hasher = Sha256::new();
    hasher.update(payload.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

/// Serializes a trained model into a versioned, checksummed envelope.
pub fn persist(model: &Classifier) -> Result<Vec<u8>> {
    let envelope = ModelEnvelope {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        checksum: model_checksum(model)?,
        model: model.clone(),
    };
    serde_json::to_vec_pretty(&envelope).map_err(|e| CoreError::CorruptModel {
        section: "envelope".into(),
        detail: e.to_string(),
    })
}

/// Restores a model persisted by [`persist`], verifying version and
/// checksum.
pub fn load(bytes: &[u8]) -> Result<Classifier> {
    let envelope: ModelEnvelope =
        serde_json::from_slice(bytes).map_err(|e| CoreError::CorruptModel {
            section: "envelope".into(),
            detail: e.to_string(),
        })?;
    if envelope.format != MODEL_FORMAT {
        return Err(CoreError::CorruptModel {
            section: "format".into(),
            detail: format!("unexpected format tag `{}`", envelope.format),
        });
    }
    if envelope.version != MODEL_VERSION {
        return Err(CoreError::CorruptModel {
            section: "version".into(),
            detail: format!(
                "model version {} does not match supported version {}",
                envelope.version, MODEL_VERSION
            ),
        });
    }
    let checksum = model_checksum(&envelope.model)?;
    if checksum != envelope.checksum {
        return Err(CoreError::CorruptModel {
            section: "checksum".into(),
            detail: "integrity checksum mismatch".into(),
        });
    }
    Ok(envelope.model)
}

#[cfg(test)]
mod tests;
