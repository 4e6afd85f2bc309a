//! Logistic regression trained by full-batch gradient descent on the
//! cross-entropy loss for a fixed epoch budget.

use super::{Hyper, N_FEATURES};
use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogRegModel {
    pub w: [f64; N_FEATURES],
    pub b: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn fit(xs: &[[f64; N_FEATURES]], ys: &[u8], hp: &Hyper) -> Result<LogRegModel> {
    let n = xs.len() as f64;
    let mut w = [0.0; N_FEATURES];
    let mut b = 0.0;
    for _ in 0..hp.logreg_epochs {
        let mut gw = [0.0; N_FEATURES];
        let mut gb = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let z = dot(&w, x) + b;
            let err = sigmoid(z) - y as f64;
            for f in 0..N_FEATURES {
                gw[f] += err * x[f];
            }
            gb += err;
        }
        for f in 0..N_FEATURES {
            w[f] -= hp.logreg_lr * gw[f] / n;
        }
        b -= hp.logreg_lr * gb / n;
        if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
            return Err(CoreError::TrainingDivergence(
                "logistic regression weights went non-finite".into(),
            ));
        }
    }
    Ok(LogRegModel { w, b })
}

fn dot(w: &[f64; N_FEATURES], x: &[f64; N_FEATURES]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl LogRegModel {
    pub fn probability(&self, z: &[f64; N_FEATURES]) -> f64 {
        sigmoid(dot(&self.w, z) + self.b)
    }

    /// Probability thresholded at one half; the tie goes to label 1.
    pub fn predict(&self, z: &[f64; N_FEATURES]) -> u8 {
        u8::from(self.probability(z) >= 0.5)
    }
}
