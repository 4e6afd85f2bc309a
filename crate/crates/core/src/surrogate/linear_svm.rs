//! Linear soft-margin SVM trained by Pegasos-style stochastic subgradient
//! descent on the L2-regularized hinge loss.

use super::{Hyper, N_FEATURES};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinSvmModel {
    pub w: [f64; N_FEATURES],
    pub b: f64,
}

pub fn fit(xs: &[[f64; N_FEATURES]], ys: &[u8], hp: &Hyper) -> LinSvmModel {
    let lambda = hp.svm_lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x53_56_4d); // "SVM" stream
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut w = [0.0; N_FEATURES];
    let mut b = 0.0;
    let radius = 1.0 / lambda.sqrt();
    let mut t = 0usize;
    for _ in 0..hp.svm_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = if ys[i] == 1 { 1.0 } else { -1.0 };
            let margin = y * (dot(&w, &xs[i]) + b);
            let shrink = 1.0 - eta * lambda;
            for f in 0..N_FEATURES {
                w[f] *= shrink;
            }
            if margin < 1.0 {
                for f in 0..N_FEATURES {
                    w[f] += eta * y * xs[i][f];
                }
                b += eta * y;
            }
            // Project onto the ball that contains the optimum.
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let scale = radius / norm;
                for f in 0..N_FEATURES {
                    w[f] *= scale;
                }
            }
        }
    }
    LinSvmModel { w, b }
}

fn dot(a: &[f64; N_FEATURES], b: &[f64; N_FEATURES]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinSvmModel {
    pub fn margin(&self, z: &[f64; N_FEATURES]) -> f64 {
        dot(&self.w, z) + self.b
    }

    /// Margin thresholded at zero; zero margin maps to label 1.
    pub fn predict(&self, z: &[f64; N_FEATURES]) -> u8 {
        u8::from(self.margin(z) >= 0.0)
    }
}
