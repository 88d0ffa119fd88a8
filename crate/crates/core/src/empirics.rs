//! Do trained weights behave like Gaussian random matrices?
//!
//! Small `[2, n, 1]` networks are trained by plain mini-batch SGD on a fixed
//! two-input regression target. Each trained weight matrix is then summarized
//! by a fitted Gaussian, and its spectral norm is compared with the Gaussian
//! prediction `σ̂(√N + √n)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{spectral_norm, LinalgError, Matrix};
use crate::network::{Activation, Architecture, Network, NetworkError};
use crate::random::{gaussian_matrix, RngStream};

/// Default training-set size.
pub const DEFAULT_DATASET_SIZE: usize = 15_625;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmpiricsError {
    #[error("training architecture must be [2, n, 1], got {0:?}")]
    BadArchitecture(Vec<usize>),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("learning rate must be nonnegative and finite, got {0}")]
    BadLearningRate(f64),
    #[error("training diverged at epoch {epoch} (loss {loss}); try a smaller learning rate")]
    Diverged { epoch: usize, loss: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("network list is empty")]
    NoNetworks,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One regression example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: [f64; 2],
    pub target: f64,
}

/// The regression target `sin(3x₁)·cos(2x₂) + 0.5·x₁x₂`.
pub fn target_function(x1: f64, x2: f64) -> f64 {
    (3.0 * x1).sin() * (2.0 * x2).cos() + 0.5 * x1 * x2
}

/// `size` inputs uniform on `[−2, 2]²` with their targets.
pub fn generate_dataset(size: usize, seed: u64) -> Vec<Sample> {
    let mut stream = RngStream::new(seed);
    (0..size)
        .map(|_| {
            let x1 = stream.next_range(-2.0, 2.0);
            let x2 = stream.next_range(-2.0, 2.0);
            Sample {
                input: [x1, x2],
                target: target_function(x1, x2),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub arch: Architecture,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dataset_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::with_hidden(64)
    }
}

impl TrainConfig {
    /// `[2, hidden, 1]` tanh network with the default schedule.
    pub fn with_hidden(hidden: usize) -> Self {
        TrainConfig {
            arch: Architecture::new(vec![2, hidden, 1], Activation::Tanh).expect("valid widths"),
            epochs: 100,
            learning_rate: 0.01,
            batch_size: 32,
            dataset_size: DEFAULT_DATASET_SIZE,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EmpiricsError> {
        let w = self.arch.widths();
        if w.len() != 3 || w[0] != 2 || w[2] != 1 {
            return Err(EmpiricsError::BadArchitecture(w.to_vec()));
        }
        if self.batch_size == 0 {
            return Err(EmpiricsError::NotPositive("batch_size"));
        }
        if self.dataset_size == 0 {
            return Err(EmpiricsError::NotPositive("dataset_size"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(EmpiricsError::BadLearningRate(self.learning_rate));
        }
        Ok(())
    }
}

/// Initial weights `N(0, 1/fan_in)` per layer, zero biases. The recorded
/// `sigma_w` is the first layer's.
pub fn init_network(arch: &Architecture, seed: u64) -> Result<Network, EmpiricsError> {
    let mut stream = RngStream::derive(seed, 0);
    let w = arch.widths();
    let weights = (1..w.len())
        .map(|l| gaussian_matrix(&mut stream, w[l], w[l - 1], 1.0 / (w[l - 1] as f64).sqrt()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(NetworkError::from)?;
    let biases = w[1..].iter().map(|&n| vec![0.0; n]).collect();
    Ok(Network::from_parts(
        arch.clone(),
        weights,
        biases,
        1.0 / (w[0] as f64).sqrt(),
        0.0,
    )?)
}

/// Gradients with the same layout as the network parameters; weight
/// gradients are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net.weights().iter().map(|w| vec![0.0; w.data().len()]).collect(),
            biases: net.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

fn check_io(net: &Network) -> Result<(), EmpiricsError> {
    let a = net.arch();
    if a.input_dim() != 2 || a.output_dim() != 1 {
        return Err(EmpiricsError::BadArchitecture(a.widths().to_vec()));
    }
    Ok(())
}

/// Mean-squared error `(1/B) Σ (f(x) − t)²` over `batch` and its gradient by
/// backpropagation.
pub fn loss_and_gradient(net: &Network, batch: &[Sample]) -> Result<(f64, Gradients), EmpiricsError> {
    check_io(net)?;
    if batch.is_empty() {
        return Err(EmpiricsError::EmptyDataset);
    }
    let act = net.arch().activation();
    let weights = net.weights();
    let biases = net.biases();
    let layers = weights.len();
    let scale = 1.0 / batch.len() as f64;
    let mut grads = Gradients::zeros_like(net);
    let mut loss = 0.0;

    let mut pre: Vec<Vec<f64>> = vec![Vec::new(); layers];
    let mut post: Vec<Vec<f64>> = vec![Vec::new(); layers + 1];
    for sample in batch {
        post[0] = sample.input.to_vec();
        for l in 0..layers {
            let mut z = weights[l].mat_vec(&post[l]);
            for (zi, bi) in z.iter_mut().zip(&biases[l]) {
                *zi += bi;
            }
            post[l + 1] = if l + 1 < layers {
                z.iter().map(|&v| act.eval(v)).collect()
            } else {
                z.clone()
            };
            pre[l] = z;
        }
        let err = post[layers][0] - sample.target;
        loss += err * err * scale;

        let mut delta = vec![2.0 * err * scale];
        for l in (0..layers).rev() {
            let cols = weights[l].cols();
            let gw = &mut grads.weights[l];
            for (i, d) in delta.iter().enumerate() {
                grads.biases[l][i] += d;
                for (j, h) in post[l].iter().enumerate() {
                    gw[i * cols + j] += d * h;
                }
            }
            if l > 0 {
                let mut back = weights[l].transpose_mat_vec(&delta);
                for (b, z) in back.iter_mut().zip(&pre[l - 1]) {
                    *b *= act.derivative(*z);
                }
                delta = back;
            }
        }
    }
    Ok((loss, grads))
}

pub fn mean_squared_error(net: &Network, data: &[Sample]) -> Result<f64, EmpiricsError> {
    check_io(net)?;
    if data.is_empty() {
        return Err(EmpiricsError::EmptyDataset);
    }
    let mut total = 0.0;
    for s in data {
        let y = net.forward(&s.input)?[0];
        total += (y - s.target).powi(2);
    }
    Ok(total / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    pub final_mse: f64,
}

/// Mini-batch SGD on mean-squared error. Batches are reshuffled every epoch
/// from a stream derived from `cfg.seed`; the result is fully determined by
/// the config and the data.
pub fn train_sgd(cfg: &TrainConfig, data: &[Sample]) -> Result<TrainOutcome, EmpiricsError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(EmpiricsError::EmptyDataset);
    }
    let mut net = init_network(&cfg.arch, cfg.seed)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffler = RngStream::derive(cfg.seed, 1);
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        shuffler.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let (loss, grads) = loss_and_gradient(&net, &batch)?;
            epoch_loss += loss * chunk.len() as f64;
            if cfg.learning_rate == 0.0 {
                continue;
            }
            for (w, g) in net.weights.iter_mut().zip(&grads.weights) {
                for (wi, gi) in w.data_mut().iter_mut().zip(g) {
                    *wi -= cfg.learning_rate * gi;
                }
            }
            for (b, g) in net.biases.iter_mut().zip(&grads.biases) {
                for (bi, gi) in b.iter_mut().zip(g) {
                    *bi -= cfg.learning_rate * gi;
                }
            }
        }
        let epoch_loss = epoch_loss / data.len() as f64;
        let params_finite = net.weights.iter().all(|w| w.check_finite().is_ok())
            && net.biases.iter().flatten().all(|b| b.is_finite());
        if !epoch_loss.is_finite() || !params_finite {
            return Err(EmpiricsError::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
    }
    let final_mse = mean_squared_error(&net, data)?;
    if !final_mse.is_finite() {
        return Err(EmpiricsError::Diverged {
            epoch: cfg.epochs,
            loss: final_mse,
        });
    }
    Ok(TrainOutcome {
        network: net,
        final_mse,
    })
}

/// Maximum-likelihood Gaussian over all entries of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mean: f64,
    pub std: f64,
    pub sample_count: usize,
}

pub fn fit_gaussian(m: &Matrix) -> GaussianFit {
    let data = m.data();
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    GaussianFit {
        mean,
        std: var.sqrt(),
        sample_count: data.len(),
    }
}

/// Spectral norm predicted from the entry spread alone:
/// `σ̂·(√max(N, n) + √min(N, n))`, with `σ̂` the std of the mean-centered
/// entries.
pub fn estimated_norm(m: &Matrix) -> f64 {
    let fit = fit_gaussian(m);
    let (r, c) = (m.rows() as f64, m.cols() as f64);
    fit.std * (r.max(c).sqrt() + r.min(c).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRow {
    /// Index of the network in the input list.
    pub network: usize,
    /// 1-based weight-layer index.
    pub layer: usize,
    pub rows: usize,
    pub cols: usize,
    pub true_norm: f64,
    pub estimated_norm: f64,
    pub relative_error: f64,
}

/// One row per weight matrix per network.
pub fn norm_comparison_report(nets: &[Network]) -> Result<Vec<NormRow>, EmpiricsError> {
    if nets.is_empty() {
        return Err(EmpiricsError::NoNetworks);
    }
    let mut rows = Vec::new();
    for (network, net) in nets.iter().enumerate() {
        for (l, w) in net.weights().iter().enumerate() {
            let true_norm = spectral_norm(w)?;
            let est = estimated_norm(w);
            rows.push(NormRow {
                network,
                layer: l + 1,
                rows: w.rows(),
                cols: w.cols(),
                true_norm,
                estimated_norm: est,
                relative_error: (est - true_norm).abs() / true_norm,
            });
        }
    }
    Ok(rows)
}

/// Equal-width histogram over `[min, max]` of the entries, as
/// `(bin_center, count)`. A constant matrix puts every entry in one bin.
pub fn weight_histogram(m: &Matrix, bins: usize) -> Result<Vec<(f64, usize)>, EmpiricsError> {
    if bins < 2 {
        return Err(EmpiricsError::TooFewBins(bins));
    }
    let data = m.data();
    let (mut lo, mut hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in data {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + (k as f64 + 0.5) * width, c))
        .collect())
}
