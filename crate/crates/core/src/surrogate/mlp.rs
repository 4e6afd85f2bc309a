//! 3-32-32-1 multilayer perceptron: ReLU hidden layers, sigmoid output,
//! binary cross-entropy, dropout on hidden activations during training,
//! Adam updates over seed-shuffled mini-batches, and best-validation-epoch
//! parameter retention.

use super::{Hyper, N_FEATURES};
use crate::error::{CoreError, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpModel {
    pub hidden: usize,
    /// First layer weights, hidden x 3 row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Second layer weights, hidden x hidden row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    /// Output weights, 1 x hidden.
    pub w3: Vec<f64>,
    pub b3: f64,
}

struct Gradients {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: f64,
}

impl Gradients {
    fn zeros(h: usize) -> Self {
        Gradients {
            w1: vec![0.0; h * N_FEATURES],
            b1: vec![0.0; h],
            w2: vec![0.0; h * h],
            b2: vec![0.0; h],
            w3: vec![0.0; h],
            b3: 0.0,
        }
    }

    fn clear(&mut self) {
        self.w1.iter_mut().for_each(|v| *v = 0.0);
        self.b1.iter_mut().for_each(|v| *v = 0.0);
        self.w2.iter_mut().for_each(|v| *v = 0.0);
        self.b2.iter_mut().for_each(|v| *v = 0.0);
        self.w3.iter_mut().for_each(|v| *v = 0.0);
        self.b3 = 0.0;
    }
}

/// Adam moment buffers, one pair per parameter block.
struct Adam {
    m: Gradients,
    v: Gradients,
    t: u64,
    lr: f64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(h: usize, lr: f64) -> Self {
        Adam {
            m: Gradients::zeros(h),
            v: Gradients::zeros(h),
            t: 0,
            lr,
        }
    }

    fn update(&mut self, params: &mut MlpModel, grads: &Gradients) {
        self.t += 1;
        let bias1 = 1.0 - BETA1.powi(self.t as i32);
        let bias2 = 1.0 - BETA2.powi(self.t as i32);
        let lr = self.lr;
        let step = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let mh = *m / bias1;
            let vh = *v / bias2;
            *p -= lr * mh / (vh.sqrt() + ADAM_EPS);
        };
        for i in 0..params.w1.len() {
            step(&mut params.w1[i], grads.w1[i], &mut self.m.w1[i], &mut self.v.w1[i]);
        }
        for i in 0..params.b1.len() {
            step(&mut params.b1[i], grads.b1[i], &mut self.m.b1[i], &mut self.v.b1[i]);
        }
        for i in 0..params.w2.len() {
            step(&mut params.w2[i], grads.w2[i], &mut self.m.w2[i], &mut self.v.w2[i]);
        }
        for i in 0..params.b2.len() {
            step(&mut params.b2[i], grads.b2[i], &mut self.m.b2[i], &mut self.v.b2[i]);
        }
        for i in 0..params.w3.len() {
            step(&mut params.w3[i], grads.w3[i], &mut self.m.w3[i], &mut self.v.w3[i]);
        }
        step(&mut params.b3, grads.b3, &mut self.m.b3, &mut self.v.b3);
    }
}

fn init_model(h: usize, rng: &mut ChaCha8Rng) -> MlpModel {
    // Uniform init scaled by fan-in.
    let mut uniform = |fan_in: usize, count: usize| -> Vec<f64> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        (0..count).map(|_| rng.gen_range(-bound..bound)).collect()
    };
    MlpModel {
        hidden: h,
        w1: uniform(N_FEATURES, h * N_FEATURES),
        b1: vec![0.0; h],
        w2: uniform(h, h * h),
        b2: vec![0.0; h],
        w3: uniform(h, h),
        b3: 0.0,
    }
}

struct Workspace {
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    mask1: Vec<f64>,
    mask2: Vec<f64>,
    dz2: Vec<f64>,
    dz1: Vec<f64>,
}

impl Workspace {
    fn new(h: usize) -> Self {
        Workspace {
            z1: vec![0.0; h],
            h1: vec![0.0; h],
            z2: vec![0.0; h],
            h2: vec![0.0; h],
            mask1: vec![1.0; h],
            mask2: vec![1.0; h],
            dz2: vec![0.0; h],
            dz1: vec![0.0; h],
        }
    }
}

/// Forward pass to the output logit; dropout masks of 1.0 give inference
/// behavior.
fn forward(model: &MlpModel, x: &[f64; N_FEATURES], ws: &mut Workspace) -> f64 {
    let h = model.hidden;
    for i in 0..h {
        let mut z = model.b1[i];
        for f in 0..N_FEATURES {
            z += model.w1[i * N_FEATURES + f] * x[f];
        }
        ws.z1[i] = z;
        ws.h1[i] = z.max(0.0) * ws.mask1[i];
    }
    for i in 0..h {
        let mut z = model.b2[i];
        for j in 0..h {
            z += model.w2[i * h + j] * ws.h1[j];
        }
        ws.z2[i] = z;
        ws.h2[i] = z.max(0.0) * ws.mask2[i];
    }
    let mut z3 = model.b3;
    for j in 0..h {
        z3 += model.w3[j] * ws.h2[j];
    }
    z3
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy from the logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn accumulate_gradients(
    model: &MlpModel,
    x: &[f64; N_FEATURES],
    dz3: f64,
    ws: &mut Workspace,
    grads: &mut Gradients,
) {
    let h = model.hidden;
    for j in 0..h {
        grads.w3[j] += dz3 * ws.h2[j];
        ws.dz2[j] = dz3 * model.w3[j] * ws.mask2[j] * if ws.z2[j] > 0.0 { 1.0 } else { 0.0 };
    }
    grads.b3 += dz3;
    for i in 0..h {
        let d = ws.dz2[i];
        if d != 0.0 {
            for j in 0..h {
                grads.w2[i * h + j] += d * ws.h1[j];
            }
            grads.b2[i] += d;
        }
    }
    for j in 0..h {
        let mut acc = 0.0;
        for i in 0..h {
            acc += ws.dz2[i] * model.w2[i * h + j];
        }
        ws.dz1[j] = acc * ws.mask1[j] * if ws.z1[j] > 0.0 { 1.0 } else { 0.0 };
    }
    for i in 0..h {
        let d = ws.dz1[i];
        if d != 0.0 {
            for f in 0..N_FEATURES {
                grads.w1[i * N_FEATURES + f] += d * x[f];
            }
            grads.b1[i] += d;
        }
    }
}

fn mean_loss(model: &MlpModel, xs: &[[f64; N_FEATURES]], ys: &[u8], ws: &mut Workspace) -> f64 {
    if xs.is_empty() {
        return f64::INFINITY;
    }
    ws.mask1.iter_mut().for_each(|v| *v = 1.0);
    ws.mask2.iter_mut().for_each(|v| *v = 1.0);
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = forward(model, x, ws);
        total += bce_from_logit(z, y as f64);
    }
    total / xs.len() as f64
}

pub fn fit(
    xs: &[[f64; N_FEATURES]],
    ys: &[u8],
    x_val: &[[f64; N_FEATURES]],
    y_val: &[u8],
    hp: &Hyper,
) -> Result<MlpModel> {
    let h = hp.mlp_hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x4d_4c_50); // "MLP" stream
    let mut model = init_model(h, &mut rng);
    let mut adam = Adam::new(h, hp.mlp_lr);
    let mut grads = Gradients::zeros(h);
    let mut ws = Workspace::new(h);
    let keep = 1.0 - hp.mlp_dropout;

    let mut best = model.clone();
    let mut best_val = mean_loss(&model, x_val, y_val, &mut ws);

    let mut order: Vec<usize> = (0..xs.len()).collect();
    for _ in 0..hp.mlp_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.mlp_batch.max(1)) {
            grads.clear();
            let mut batch_loss = 0.0;
            for &i in batch {
                // Inverted dropout: active only in training.
                for m in ws.mask1.iter_mut().chain(ws.mask2.iter_mut()) {
                    *m = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
                }
                let z = forward(&model, &xs[i], &mut ws);
                batch_loss += bce_from_logit(z, ys[i] as f64);
                let dz3 = (sigmoid(z) - ys[i] as f64) / batch.len() as f64;
                accumulate_gradients(&model, &xs[i], dz3, &mut ws, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(CoreError::TrainingDivergence(
                    "network loss went non-finite".into(),
                ));
            }
            adam.update(&mut model, &grads);
        }
        let val_loss = mean_loss(&model, x_val, y_val, &mut ws);
        if val_loss.is_finite() && val_loss < best_val {
            best_val = val_loss;
            best = model.clone();
        }
    }
    // Without validation rows the final epoch wins.
    if !best_val.is_finite() {
        best = model;
    }
    Ok(best)
}

impl MlpModel {
    pub fn probability(&self, z: &[f64; N_FEATURES]) -> f64 {
        let mut ws = Workspace::new(self.hidden);
        sigmoid(forward(self, z, &mut ws))
    }

    /// Probability thresholded at one half; the tie goes to label 1.
    pub fn predict(&self, z: &[f64; N_FEATURES]) -> u8 {
        u8::from(self.probability(z) >= 0.5)
    }
}
