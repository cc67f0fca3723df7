use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{FeatureVector, INPUTS, STEPS_PER_DAY, STEPS_PER_WEEK};
use super::ForecastError;

const MAGIC: &[u8; 8] = b"TRMLPNET";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { hidden: vec![8, 8], epochs: 10, learning_rate: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major `n_out × n_in`.
    w: Vec<f64>,
    b: Vec<f64>,
}

/// Feed-forward network with ReLU hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    in_mean: Vec<f64>,
    in_std: Vec<f64>,
    out_mean: f64,
    out_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    /// Mean squared error in kW² before the first update.
    pub initial_mse: f64,
    pub final_mse: f64,
}

fn mean_std(vals: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = vals.clone().count() as f64;
    let mean = vals.clone().sum::<f64>() / n;
    let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

impl MlpModel {
    /// Seeded He-style uniform initialization; normalization statistics come
    /// from `data` and stay fixed afterwards.
    fn init(data: &[(FeatureVector, f64)], hidden: &[usize], seed: u64) -> Self {
        let inputs: Vec<[f64; INPUTS]> = data.iter().map(|(f, _)| f.inputs()).collect();
        let (mut in_mean, mut in_std) = (Vec::with_capacity(INPUTS), Vec::with_capacity(INPUTS));
        for c in 0..INPUTS {
            let (m, s) = mean_std(inputs.iter().map(|x| x[c]));
            in_mean.push(m);
            in_std.push(s);
        }
        let (out_mean, out_std) = mean_std(data.iter().map(|d| d.1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![INPUTS];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|s| {
                let limit = (6.0 / s[0] as f64).sqrt();
                Layer { n_in: s[0], n_out: s[1], w: (0..s[0] * s[1]).map(|_| rng.random_range(-limit..limit)).collect(), b: vec![0.0; s[1]] }
            })
            .collect();
        MlpModel { layers, in_mean, in_std, out_mean, out_std }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![INPUTS];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    fn normalize(&self, f: &FeatureVector) -> Vec<f64> {
        f.inputs().iter().zip(self.in_mean.iter().zip(&self.in_std)).map(|(x, (m, s))| (x - m) / s).collect()
    }

    /// Activations of every layer, input first.
    fn forward(&self, x: Vec<f64>) -> Vec<Vec<f64>> {
        let mut acts = vec![x];
        for (li, l) in self.layers.iter().enumerate() {
            let a = acts.last().unwrap();
            let last = li + 1 == self.layers.len();
            let out = (0..l.n_out)
                .map(|o| {
                    let z = l.b[o] + l.w[o * l.n_in..(o + 1) * l.n_in].iter().zip(a).map(|(w, x)| w * x).sum::<f64>();
                    if last { z } else { z.max(0.0) }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Unclamped prediction in kW.
    fn raw(&self, f: &FeatureVector) -> f64 {
        let acts = self.forward(self.normalize(f));
        acts.last().unwrap()[0] * self.out_std + self.out_mean
    }

    pub fn predict(&self, f: &FeatureVector) -> f64 {
        self.raw(f).max(0.0)
    }

    pub fn mse(&self, data: &[(FeatureVector, f64)]) -> f64 {
        data.iter().map(|(f, y)| (self.raw(f) - y).powi(2)).sum::<f64>() / data.len().max(1) as f64
    }

    fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Gradient of `½ (output − target)²` in normalized units, parameters in
    /// layer order (weights then biases).
    fn backprop(&self, f: &FeatureVector, y: f64, grad: &mut [f64]) {
        let acts = self.forward(self.normalize(f));
        let target = (y - self.out_mean) / self.out_std;
        let mut delta = vec![acts.last().unwrap()[0] - target];
        let mut base = self.param_count();
        for (li, l) in self.layers.iter().enumerate().rev() {
            base -= l.w.len() + l.b.len();
            let a_in = &acts[li];
            for o in 0..l.n_out {
                for k in 0..l.n_in {
                    grad[base + o * l.n_in + k] = delta[o] * a_in[k];
                }
                grad[base + l.w.len() + o] = delta[o];
            }
            if li > 0 {
                delta = (0..l.n_in)
                    .map(|k| {
                        let s: f64 = (0..l.n_out).map(|o| l.w[o * l.n_in + k] * delta[o]).sum();
                        if a_in[k] > 0.0 { s } else { 0.0 }
                    })
                    .collect();
            }
        }
    }

    /// Plain Adam with batch size one.
    fn fit(&mut self, data: &[(FeatureVector, f64)], epochs: usize, lr: f64, seed: u64) -> Result<(), ForecastError> {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let np = self.param_count();
        let (mut m, mut v) = (vec![0.0; np], vec![0.0; np]);
        let mut grad = vec![0.0; np];
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = 0i32;
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (f, y) = &data[i];
                self.backprop(f, *y, &mut grad);
                t += 1;
                let (c1, c2) = (1.0 - B1.powi(t), 1.0 - B2.powi(t));
                let mut p = 0;
                for l in &mut self.layers {
                    for w in l.w.iter_mut().chain(l.b.iter_mut()) {
                        m[p] = B1 * m[p] + (1.0 - B1) * grad[p];
                        v[p] = B2 * v[p] + (1.0 - B2) * grad[p] * grad[p];
                        *w -= lr * (m[p] / c1) / ((v[p] / c2).sqrt() + EPS);
                        p += 1;
                    }
                }
            }
            if !self.is_finite() {
                return Err(ForecastError::NonFiniteLoss);
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ForecastError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ForecastError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend(FORMAT_VERSION.to_le_bytes());
        out.extend((self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend((l.n_in as u32).to_le_bytes());
            out.extend((l.n_out as u32).to_le_bytes());
        }
        let floats = self
            .layers
            .iter()
            .flat_map(|l| l.w.iter().chain(&l.b))
            .chain(&self.in_mean)
            .chain(&self.in_std)
            .chain([&self.out_mean, &self.out_std]);
        for v in floats {
            out.extend(v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ForecastError> {
        let bad = |why: &str| ForecastError::Checkpoint(why.to_string());
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8], ForecastError> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
            pos += n;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(bad("not a model checkpoint"));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
        let version = u32_at(take(4)?);
        if version != FORMAT_VERSION as usize {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let nl = u32_at(take(4)?);
        let mut shapes = Vec::with_capacity(nl);
        for _ in 0..nl {
            shapes.push((u32_at(take(4)?), u32_at(take(4)?)));
        }
        if shapes.first().map(|s| s.0) != Some(INPUTS) || shapes.last().map(|s| s.1) != Some(1) {
            return Err(bad("unexpected layer shapes"));
        }
        let mut f = |n: usize| -> Result<Vec<f64>, ForecastError> {
            (0..n).map(|_| Ok(f64::from_le_bytes(take(8)?.try_into().unwrap()))).collect()
        };
        let mut layers = Vec::with_capacity(nl);
        for &(n_in, n_out) in &shapes {
            layers.push(Layer { n_in, n_out, w: f(n_in * n_out)?, b: f(n_out)? });
        }
        let in_mean = f(INPUTS)?;
        let in_std = f(INPUTS)?;
        let tail = f(2)?;
        Ok(MlpModel { layers, in_mean, in_std, out_mean: tail[0], out_std: tail[1] })
    }
}

/// Trains a fresh network on `data` (at least one week of samples).
pub fn train_mlp(data: &[(FeatureVector, f64)], cfg: &TrainConfig) -> Result<(MlpModel, TrainReport), ForecastError> {
    if data.len() < STEPS_PER_WEEK {
        return Err(ForecastError::InsufficientData { have: data.len(), need: STEPS_PER_WEEK });
    }
    let mut model = MlpModel::init(data, &cfg.hidden, cfg.seed);
    let initial_mse = model.mse(data);
    model.fit(data, cfg.epochs, cfg.learning_rate, cfg.seed.wrapping_add(1))?;
    let final_mse = model.mse(data);
    if !final_mse.is_finite() {
        return Err(ForecastError::NonFiniteLoss);
    }
    Ok((model, TrainReport { initial_mse, final_mse }))
}

/// Forecast for each remaining step of the day, clamped at zero.
pub fn predict_horizon(model: &MlpModel, features: &[FeatureVector]) -> Vec<f64> {
    features.iter().map(|f| model.predict(f)).collect()
}

/// Fine-tunes on exactly one day of new samples with the same optimizer
/// settings; normalization statistics are left untouched.
pub fn retrain_online(model: &MlpModel, day: &[(FeatureVector, f64)], cfg: &TrainConfig) -> Result<MlpModel, ForecastError> {
    if day.len() != STEPS_PER_DAY {
        return Err(ForecastError::WrongDayLength(day.len()));
    }
    let mut m = model.clone();
    m.fit(day, cfg.epochs, cfg.learning_rate, cfg.seed.wrapping_add(2))?;
    Ok(m)
}
