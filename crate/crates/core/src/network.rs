//! Fully-connected feed-forward networks.
//!
//! A network with widths `[n₀, n₁, …, n_{L+1}]` computes
//!
//! ```text
//! h₀ = x,   h_l = σ(W_l h_{l−1} + b_l)  for l = 1..L,   y = W_{L+1} h_L + b_{L+1}
//! ```
//!
//! with `W_l` of shape `n_l × n_{l−1}`. The output layer is affine; the
//! activation is only applied on hidden layers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{mat_mul, LinalgError, Matrix};
use crate::random::{gaussian_matrix, RandomError, RngStream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("architecture needs at least an input and an output layer, got {0} widths")]
    TooFewLayers(usize),
    #[error("layer {index} has width 0")]
    ZeroWidth { index: usize },
    #[error("sigma_w must be positive and finite, got {0}")]
    BadSigmaW(f64),
    #[error("sigma_b must be nonnegative and finite, got {0}")]
    BadSigmaB(f64),
    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: String,
        expected: String,
        got: String,
    },
    #[error("input has length {got}, network expects {expected}")]
    InputDimension { expected: usize, got: usize },
    #[error("unknown activation `{0}` (expected relu, tanh, sigmoid, hard_tanh or identity)")]
    UnknownActivation(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Random(#[from] RandomError),
    #[error("malformed network document: {0}")]
    Json(String),
}

/// Element-wise activation. Every variant is 1-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    HardTanh,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::HardTanh,
        Activation::Identity,
    ];

    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::HardTanh => z.clamp(-1.0, 1.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at `z`. The kinks of relu (0) and hard_tanh (±1) get 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::HardTanh => {
                if z.abs() < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::HardTanh => "hard_tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s || (s == "hardtanh" && *a == Activation::HardTanh))
            .ok_or_else(|| NetworkError::UnknownActivation(s.to_string()))
    }
}

pub fn activation_apply(a: Activation, v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| a.eval(z)).collect()
}

/// Layer widths plus the hidden-layer activation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    widths: Vec<usize>,
    activation: Activation,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self, NetworkError> {
        if widths.len() < 2 {
            return Err(NetworkError::TooFewLayers(widths.len()));
        }
        if let Some(index) = widths.iter().position(|&w| w == 0) {
            return Err(NetworkError::ZeroWidth { index });
        }
        Ok(Architecture { widths, activation })
    }

    /// `depth` hidden layers of `width` neurons between `n_in` inputs and
    /// `n_out` outputs.
    pub fn constant_width(
        n_in: usize,
        width: usize,
        depth: usize,
        n_out: usize,
        activation: Activation,
    ) -> Result<Self, NetworkError> {
        let mut widths = Vec::with_capacity(depth + 2);
        widths.push(n_in);
        widths.extend(std::iter::repeat_n(width, depth));
        widths.push(n_out);
        Architecture::new(widths, activation)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn with_activation(&self, activation: Activation) -> Self {
        Architecture {
            widths: self.widths.clone(),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    /// Number of weight matrices, `L + 1`.
    pub fn num_weight_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn hidden_neurons(&self) -> usize {
        self.widths[1..self.widths.len() - 1].iter().sum()
    }
}

/// A network with concrete weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    pub(crate) weights: Vec<Matrix>,
    pub(crate) biases: Vec<Vec<f64>>,
    sigma_w: f64,
    sigma_b: f64,
}

fn check_sigmas(sigma_w: f64, sigma_b: f64) -> Result<(), NetworkError> {
    if !(sigma_w > 0.0 && sigma_w.is_finite()) {
        return Err(NetworkError::BadSigmaW(sigma_w));
    }
    if !(sigma_b >= 0.0 && sigma_b.is_finite()) {
        return Err(NetworkError::BadSigmaB(sigma_b));
    }
    Ok(())
}

impl Network {
    /// Assembles a network from explicit parameters, checking every shape.
    pub fn from_parts(
        arch: Architecture,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        sigma_w: f64,
        sigma_b: f64,
    ) -> Result<Self, NetworkError> {
        check_sigmas(sigma_w, sigma_b)?;
        let layers = arch.num_weight_layers();
        if weights.len() != layers || biases.len() != layers {
            return Err(NetworkError::Shape {
                what: "layer count".into(),
                expected: layers.to_string(),
                got: format!("{} weights, {} biases", weights.len(), biases.len()),
            });
        }
        let w = arch.widths();
        for l in 0..layers {
            if weights[l].shape() != (w[l + 1], w[l]) {
                return Err(NetworkError::Shape {
                    what: format!("weights[{}]", l + 1),
                    expected: format!("{}x{}", w[l + 1], w[l]),
                    got: format!("{}x{}", weights[l].rows(), weights[l].cols()),
                });
            }
            if biases[l].len() != w[l + 1] {
                return Err(NetworkError::Shape {
                    what: format!("biases[{}]", l + 1),
                    expected: w[l + 1].to_string(),
                    got: biases[l].len().to_string(),
                });
            }
            if biases[l].iter().any(|b| !b.is_finite()) {
                return Err(NetworkError::NonFinite(format!("biases[{}]", l + 1)));
            }
        }
        Ok(Network {
            arch,
            weights,
            biases,
            sigma_w,
            sigma_b,
        })
    }

    /// Samples weights `N(0, sigma_w²)` layer by layer (row-major), then
    /// biases `N(0, sigma_b²)` layer by layer. With `sigma_b == 0` biases are
    /// exactly zero and no draws are spent on them.
    pub fn sample(
        arch: &Architecture,
        sigma_w: f64,
        sigma_b: f64,
        stream: &mut RngStream,
    ) -> Result<Self, NetworkError> {
        check_sigmas(sigma_w, sigma_b)?;
        let w = arch.widths();
        let weights = (1..w.len())
            .map(|l| gaussian_matrix(stream, w[l], w[l - 1], sigma_w))
            .collect::<Result<Vec<_>, _>>()?;
        let biases = (1..w.len())
            .map(|l| {
                (0..w[l])
                    .map(|_| {
                        if sigma_b > 0.0 {
                            sigma_b * stream.next_standard_normal()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Network::from_parts(arch.clone(), weights, biases, sigma_w, sigma_b)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn sigma_b(&self) -> f64 {
        self.sigma_b
    }

    /// Same network with every weight matrix multiplied by `c`.
    pub fn with_scaled_weights(&self, c: f64) -> Result<Self, NetworkError> {
        let weights = self
            .weights
            .iter()
            .map(|w| w.scaled(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Network { weights, ..self.clone() })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
        if x.len() != self.arch.input_dim() {
            return Err(NetworkError::InputDimension {
                expected: self.arch.input_dim(),
                got: x.len(),
            });
        }
        let act = self.arch.activation();
        let last = self.weights.len() - 1;
        let mut h = x.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.mat_vec(&h);
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi;
                if l < last {
                    *zi = act.eval(*zi);
                }
            }
            h = z;
        }
        Ok(h)
    }

    /// Forward pass on many inputs at once; `inputs` holds one point per
    /// column (`n₀ × K`), the result one output per column.
    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Matrix, NetworkError> {
        if inputs.rows() != self.arch.input_dim() {
            return Err(NetworkError::InputDimension {
                expected: self.arch.input_dim(),
                got: inputs.rows(),
            });
        }
        let act = self.arch.activation();
        let last = self.weights.len() - 1;
        let k = inputs.cols();
        let mut h = inputs.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = mat_mul(w, &h)?;
            for (row, bi) in z.data_mut().chunks_exact_mut(k).zip(b) {
                for v in row {
                    *v += bi;
                    if l < last {
                        *v = act.eval(*v);
                    }
                }
            }
            z.check_finite()?;
            h = z;
        }
        Ok(h)
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            widths: self.arch.widths().to_vec(),
            activation: self.arch.activation(),
            sigma_w: self.sigma_w,
            sigma_b: self.sigma_b,
            weights: self.weights.iter().map(Matrix::to_rows).collect(),
            biases: self.biases.clone(),
        }
    }

    pub fn from_document(doc: NetworkDocument) -> Result<Self, NetworkError> {
        let arch = Architecture::new(doc.widths, doc.activation)?;
        let weights = doc
            .weights
            .iter()
            .map(|rows| Matrix::from_rows(rows))
            .collect::<Result<Vec<_>, _>>()?;
        Network::from_parts(arch, weights, doc.biases, doc.sigma_w, doc.sigma_b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDocument =
            serde_json::from_str(text).map_err(|e| NetworkError::Json(e.to_string()))?;
        Network::from_document(doc)
    }
}

/// On-disk JSON layout of a [`Network`]; weight matrices are nested
/// row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub sigma_w: f64,
    #[serde(default)]
    pub sigma_b: f64,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

pub fn sample_network(
    arch: &Architecture,
    sigma_w: f64,
    sigma_b: f64,
    stream: &mut RngStream,
) -> Result<Network, NetworkError> {
    Network::sample(arch, sigma_w, sigma_b, stream)
}

pub fn forward(net: &Network, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
    net.forward(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream_new;

    fn identity_net(width: usize, depth: usize, act: Activation) -> Network {
        let arch = Architecture::constant_width(width, width, depth, width, act).unwrap();
        let layers = arch.num_weight_layers();
        Network::from_parts(
            arch,
            vec![Matrix::identity(width); layers],
            vec![vec![0.0; width]; layers],
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn architecture_validation() {
        assert_eq!(
            Architecture::new(vec![3], Activation::Relu),
            Err(NetworkError::TooFewLayers(1))
        );
        assert_eq!(
            Architecture::new(vec![3, 0, 1], Activation::Relu),
            Err(NetworkError::ZeroWidth { index: 1 })
        );
        let a = Architecture::constant_width(2, 100, 3, 2, Activation::Tanh).unwrap();
        assert_eq!(a.widths(), &[2, 100, 100, 100, 2]);
        assert_eq!(a.depth(), 3);
        assert_eq!(a.num_weight_layers(), 4);
        assert_eq!(a.hidden_neurons(), 300);
    }

    #[test]
    fn activation_values() {
        assert_eq!(activation_apply(Activation::Relu, &[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(activation_apply(Activation::Tanh, &[0.0]), vec![0.0]);
        assert_eq!(activation_apply(Activation::HardTanh, &[-3.0, 0.5, 2.0]), vec![-1.0, 0.5, 1.0]);
        assert_eq!(Activation::Sigmoid.eval(0.0), 0.5);
        assert_eq!("hard_tanh".parse::<Activation>().unwrap(), Activation::HardTanh);
        assert!("swish".parse::<Activation>().is_err());
    }

    #[test]
    fn activations_are_one_lipschitz() {
        let mut s = stream_new(17);
        for act in Activation::ALL {
            for _ in 0..10_000 {
                let u = 6.0 * s.next_standard_normal();
                let v = u + s.next_standard_normal();
                assert!((act.eval(u) - act.eval(v)).abs() <= (u - v).abs() * (1.0 + 1e-15));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_respects_sigma_b() {
        let arch = Architecture::new(vec![3, 7, 2], Activation::Relu).unwrap();
        let a = Network::sample(&arch, 1.0, 0.0, &mut stream_new(1)).unwrap();
        let b = Network::sample(&arch, 1.0, 0.0, &mut stream_new(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.biases().iter().flatten().all(|&x| x == 0.0));
        let c = Network::sample(&arch, 1.0, 0.5, &mut stream_new(1)).unwrap();
        assert!(c.biases().iter().flatten().any(|&x| x != 0.0));
        // weights are drawn before biases, so they are unaffected by sigma_b
        assert_eq!(a.weights(), c.weights());
        assert!(Network::sample(&arch, 0.0, 0.0, &mut stream_new(1)).is_err());
        assert!(Network::sample(&arch, 1.0, -0.1, &mut stream_new(1)).is_err());
    }

    #[test]
    fn sampled_weight_variance() {
        let arch = Architecture::new(vec![2, 300, 2], Activation::Relu).unwrap();
        let net = Network::sample(&arch, 1.0, 0.0, &mut stream_new(300)).unwrap();
        let w = net.weights()[0].data();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn forward_identity_and_relu() {
        let net = identity_net(3, 2, Activation::Identity);
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![1.0, -2.0, 0.5]);

        let arch = Architecture::new(vec![1, 1, 1], Activation::Relu).unwrap();
        let net = Network::from_parts(
            arch,
            vec![Matrix::from_rows(&[[-1.0]]).unwrap(), Matrix::from_rows(&[[1.0]]).unwrap()],
            vec![vec![0.0], vec![0.0]],
            1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(net.forward(&[5.0]).unwrap(), vec![0.0]);
        assert_eq!(
            net.forward(&[1.0, 2.0]).unwrap_err(),
            NetworkError::InputDimension { expected: 1, got: 2 }
        );
    }

    #[test]
    fn output_layer_has_no_activation() {
        let arch = Architecture::new(vec![1, 1, 1], Activation::Relu).unwrap();
        let net = Network::from_parts(
            arch,
            vec![Matrix::from_rows(&[[1.0]]).unwrap(), Matrix::from_rows(&[[-1.0]]).unwrap()],
            vec![vec![0.0], vec![0.0]],
            1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![-2.0]);
    }

    #[test]
    fn from_parts_rejects_bad_shapes() {
        let arch = Architecture::new(vec![2, 3], Activation::Relu).unwrap();
        let err = Network::from_parts(arch.clone(), vec![Matrix::zeros(2, 3)], vec![vec![0.0; 3]], 1.0, 0.0)
            .unwrap_err();
        assert!(matches!(err, NetworkError::Shape { .. }));
        let err = Network::from_parts(arch, vec![Matrix::zeros(3, 2)], vec![vec![0.0; 2]], 1.0, 0.0)
            .unwrap_err();
        assert!(err.to_string().contains("biases[1]"));
    }

    #[test]
    fn batch_forward_matches_pointwise() {
        let arch = Architecture::new(vec![2, 9, 4, 3], Activation::Tanh).unwrap();
        let net = Network::sample(&arch, 1.0, 0.3, &mut stream_new(8)).unwrap();
        let pts = [[0.1, -0.4], [2.0, 1.0], [-3.0, 0.25]];
        let batch = Matrix::from_fn(2, 3, |i, j| pts[j][i]).unwrap();
        let out = net.forward_batch(&batch).unwrap();
        for (j, p) in pts.iter().enumerate() {
            let y = net.forward(p).unwrap();
            for i in 0..3 {
                assert!((out.get(i, j) - y[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let arch = Architecture::new(vec![2, 4, 1], Activation::HardTanh).unwrap();
        let net = Network::sample(&arch, 0.7, 0.2, &mut stream_new(4)).unwrap();
        let text = net.to_json();
        assert!(text.contains("\"activation\": \"hard_tanh\""));
        assert_eq!(Network::from_json(&text).unwrap(), net);
        assert!(matches!(Network::from_json("{\"widths\": [2]}"), Err(NetworkError::Json(_))));
    }
}
