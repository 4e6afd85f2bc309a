//! Gaussian naive Bayes with per-class feature means and variances.

use super::N_FEATURES;
use serde::{Deserialize, Serialize};

const VAR_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GnbModel {
    pub log_prior: [f64; 2],
    pub mean: [[f64; N_FEATURES]; 2],
    pub var: [[f64; N_FEATURES]; 2],
}

pub fn fit(xs: &[[f64; N_FEATURES]], ys: &[u8]) -> GnbModel {
    let mut count = [0usize; 2];
    let mut mean = [[0.0; N_FEATURES]; 2];
    for (x, &y) in xs.iter().zip(ys) {
        let c = y as usize;
        count[c] += 1;
        for f in 0..N_FEATURES {
            mean[c][f] += x[f];
        }
    }
    for c in 0..2 {
        let n = count[c].max(1) as f64;
        mean[c].iter_mut().for_each(|m| *m /= n);
    }
    let mut var = [[0.0; N_FEATURES]; 2];
    for (x, &y) in xs.iter().zip(ys) {
        let c = y as usize;
        for f in 0..N_FEATURES {
            let d = x[f] - mean[c][f];
            var[c][f] += d * d;
        }
    }
    for c in 0..2 {
        let n = count[c].max(1) as f64;
        for f in 0..N_FEATURES {
            var[c][f] = (var[c][f] / n).max(VAR_FLOOR);
        }
    }
    let total = (count[0] + count[1]) as f64;
    GnbModel {
        log_prior: [
            (count[0] as f64 / total).ln(),
            (count[1] as f64 / total).ln(),
        ],
        mean,
        var,
    }
}

impl GnbModel {
    fn log_likelihood(&self, c: usize, z: &[f64; N_FEATURES]) -> f64 {
        let mut ll = self.log_prior[c];
        for f in 0..N_FEATURES {
            let v = self.var[c][f];
            let d = z[f] - self.mean[c][f];
            ll += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - d * d / (2.0 * v);
        }
        ll
    }

    /// Class with the larger posterior; exact ties resolve to 1.
    pub fn predict(&self, z: &[f64; N_FEATURES]) -> u8 {
        u8::from(self.log_likelihood(1, z) >= self.log_likelihood(0, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Symmetric unit-variance clusters at feature means +-m put the
    /// closed-form Gaussian discriminant boundary at the midpoint 0.
    #[test]
    fn decision_boundary_at_cluster_midpoint() {
        let m = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..500 {
            let mut noise = || -> f64 {
                // Sum of uniforms as a cheap symmetric noise source.
                (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0
            };
            xs.push([-m + noise(), -m + noise(), -m + noise()]);
            ys.push(0);
            xs.push([m + noise(), m + noise(), m + noise()]);
            ys.push(1);
        }
        let model = fit(&xs, &ys);
        for s in [0.5, 1.0, 3.0] {
            assert_eq!(model.predict(&[s, s, s]), 1);
            assert_eq!(model.predict(&[-s, -s, -s]), 0);
        }
        // Predictions flip with the feature sign.
        for i in 0..20 {
            let x = xs[i];
            let flipped = [-x[0], -x[1], -x[2]];
            assert_eq!(model.predict(&x), 1 - model.predict(&flipped));
        }
    }
}
