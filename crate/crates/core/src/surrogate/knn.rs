//! k-nearest-neighbor classifier over standardized features.

use super::N_FEATURES;
use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<[f64; N_FEATURES]>,
    pub labels: Vec<u8>,
}

pub fn fit(xs: &[[f64; N_FEATURES]], ys: &[u8], k: usize) -> Result<KnnModel> {
    if k == 0 {
        return Err(CoreError::InvalidConfig("knn k must be at least 1".into()));
    }
    Ok(KnnModel {
        k,
        points: xs.to_vec(),
        labels: ys.to_vec(),
    })
}

impl KnnModel {
    /// Majority vote over the k nearest stored points (Euclidean distance,
    /// index-ordered ties); a vote tie falls back to the single nearest
    /// neighbor's label.
    pub fn predict(&self, z: &[f64; N_FEATURES]) -> u8 {
        let k = self.k.min(self.points.len());
        // Bounded insertion keeps the k smallest (distance, index) pairs in
        // order; k is small so the shift is cheap.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, p) in self.points.iter().enumerate() {
            let mut dist2 = 0.0;
            for f in 0..N_FEATURES {
                let d = z[f] - p[f];
                dist2 += d * d;
            }
            if best.len() == k && dist2 >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(d, _)| d <= dist2);
            best.insert(pos, (dist2, i));
            best.truncate(k);
        }
        let ones: usize = best
            .iter()
            .filter(|&&(_, i)| self.labels[i] == 1)
            .count();
        let zeros = best.len() - ones;
        match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => self.labels[best[0].1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_nn_memorizes() {
        let m = fit(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], &[0, 1], 1).unwrap();
        assert_eq!(m.predict(&[0.1, 0.0, 0.0]), 0);
        assert_eq!(m.predict(&[0.9, 1.0, 1.0]), 1);
        assert_eq!(m.predict(&[0.0, 0.0, 0.0]), 0);
    }

    #[test]
    fn vote_tie_falls_back_to_nearest() {
        let m = fit(
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]],
            &[1, 0, 0, 1],
            2,
        )
        .unwrap();
        // Neighbors of 0.1: indices 0 (label 1) and 1 (label 0); tie, the
        // nearest is index 0.
        assert_eq!(m.predict(&[0.1, 0.0, 0.0]), 1);
    }
}
