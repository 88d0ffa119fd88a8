//! Output-trajectory length as an expressiveness measure.
//!
//! A one-dimensional input path is discretized into a polyline, pushed through
//! the network point by point, and the arc length of the image is compared to
//! the input arc length. That ratio (the stretch) can never exceed the
//! network's Lipschitz constant.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{exact_upper_bound, rmt_lower_bound, BoundsError};
use crate::linalg::Matrix;
use crate::network::{Activation, Architecture, Network, NetworkError};
use crate::random::RngStream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("points {index} and {next} coincide")]
    RepeatedPoint { index: usize, next: usize },
    #[error("point {index} has dimension {got}, expected {expected}")]
    Dimension { index: usize, expected: usize, got: usize },
    #[error("invalid circle parameters: {0}")]
    BadCircle(String),
    #[error("width and depth ranges must be nonempty")]
    EmptyRange,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// A discretized path in input space.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<Vec<f64>>,
    closed: bool,
}

impl Trajectory {
    pub fn new(points: Vec<Vec<f64>>, closed: bool) -> Result<Self, TrajectoryError> {
        if points.len() < 3 {
            return Err(TrajectoryError::TooFewPoints {
                min: 3,
                got: points.len(),
            });
        }
        let dim = points[0].len();
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(TrajectoryError::Dimension {
                    index,
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        let n = points.len();
        let pairs = if closed { n } else { n - 1 };
        for index in 0..pairs {
            let next = (index + 1) % n;
            if points[index] == points[next] {
                return Err(TrajectoryError::RepeatedPoint { index, next });
            }
        }
        Ok(Trajectory { points, closed })
    }

    /// Closed circle of `radius` in the first two coordinates, sampled at
    /// `num_points` equally spaced angles.
    pub fn circle(dim: usize, radius: f64, num_points: usize) -> Result<Self, TrajectoryError> {
        if dim < 2 {
            return Err(TrajectoryError::BadCircle(format!("dim must be >= 2, got {dim}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(TrajectoryError::BadCircle(format!("radius must be positive, got {radius}")));
        }
        if num_points < 8 {
            return Err(TrajectoryError::BadCircle(format!(
                "num_points must be >= 8, got {num_points}"
            )));
        }
        let points = (0..num_points)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / num_points as f64;
                let mut p = vec![0.0; dim];
                p[0] = radius * theta.cos();
                p[1] = radius * theta.sin();
                p
            })
            .collect();
        Trajectory::new(points, true)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points, self.closed)
    }

    pub fn scaled(&self, c: f64) -> Result<Self, TrajectoryError> {
        let points = self
            .points
            .iter()
            .map(|p| p.iter().map(|x| x * c).collect())
            .collect();
        Trajectory::new(points, self.closed)
    }

    /// Points as the columns of a `dim × len` matrix.
    fn as_columns(&self) -> Matrix {
        let n = self.len();
        Matrix::from_fn(self.dim(), n, |i, j| self.points[j][i]).expect("finite points")
    }
}

pub fn circle_trajectory(dim: usize, radius: f64, num_points: usize) -> Result<Trajectory, TrajectoryError> {
    Trajectory::circle(dim, radius, num_points)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Sum of consecutive Euclidean distances, plus the closing segment when
/// `closed`. Panics on fewer than two points.
pub fn polyline_length<P: AsRef<[f64]>>(points: &[P], closed: bool) -> f64 {
    assert!(points.len() >= 2, "polyline needs at least two points");
    let open: f64 = points
        .windows(2)
        .map(|w| distance(w[0].as_ref(), w[1].as_ref()))
        .sum();
    if closed {
        open + distance(points[points.len() - 1].as_ref(), points[0].as_ref())
    } else {
        open
    }
}

/// Length of the image polyline `{f(p) : p ∈ traj}` in input order.
pub fn output_trajectory_length(net: &Network, traj: &Trajectory) -> Result<f64, TrajectoryError> {
    if traj.dim() != net.arch().input_dim() {
        return Err(TrajectoryError::Dimension {
            index: 0,
            expected: net.arch().input_dim(),
            got: traj.dim(),
        });
    }
    let out = net.forward_batch(&traj.as_columns())?;
    let (rows, n) = out.shape();
    let column = |j: usize| -> Vec<f64> { (0..rows).map(|i| out.get(i, j)).collect() };
    let mut length = 0.0;
    let mut prev = column(0);
    let first = prev.clone();
    for j in 1..n {
        let cur = column(j);
        length += distance(&prev, &cur);
        prev = cur;
    }
    if traj.is_closed() {
        length += distance(&prev, &first);
    }
    Ok(length)
}

/// Output length divided by input length.
pub fn stretch_ratio(net: &Network, traj: &Trajectory) -> Result<f64, TrajectoryError> {
    Ok(output_trajectory_length(net, traj)? / traj.length())
}

/// `(σ_w n / √(n+1))^{L+1}`, the normalized trajectory-growth factor for a
/// relu network of constant width `n` and `depth_l` hidden layers, with the
/// implied constant taken as 1.
pub fn rmt_trajectory_lower(n: usize, depth_l: usize, sigma_w: f64) -> f64 {
    assert!(n >= 1, "width must be positive");
    assert!(sigma_w > 0.0 && sigma_w.is_finite(), "sigma_w must be positive");
    let n = n as f64;
    (sigma_w * n / (n + 1.0).sqrt()).powi(depth_l as i32 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpressivenessRow {
    pub width: usize,
    pub depth: usize,
    pub stretch_ratio: f64,
    pub rmt_lower: f64,
    pub exact_upper: f64,
}

/// For every `(width, depth)` cell, samples a relu network
/// `[d, width × depth, d]` (`d` the trajectory dimension, zero biases) from
/// substream `(master_seed, cell index)` and records its stretch ratio
/// alongside the closed-form lower estimate and the exact upper bound.
/// Rows are ordered width-major.
pub fn expressiveness_correlation(
    widths: &[usize],
    depths: &[usize],
    sigma_w: f64,
    master_seed: u64,
    traj: &Trajectory,
) -> Result<Vec<ExpressivenessRow>, TrajectoryError> {
    expressiveness_correlation_with_bias(widths, depths, sigma_w, 0.0, master_seed, traj)
}

/// As [`expressiveness_correlation`], with biases drawn from `N(0, sigma_b²)`.
pub fn expressiveness_correlation_with_bias(
    widths: &[usize],
    depths: &[usize],
    sigma_w: f64,
    sigma_b: f64,
    master_seed: u64,
    traj: &Trajectory,
) -> Result<Vec<ExpressivenessRow>, TrajectoryError> {
    if widths.is_empty() || depths.is_empty() {
        return Err(TrajectoryError::EmptyRange);
    }
    let d = traj.dim();
    let cells: Vec<(usize, usize)> = widths
        .iter()
        .flat_map(|&w| depths.iter().map(move |&l| (w, l)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(index, &(width, depth))| {
            let arch = Architecture::constant_width(d, width, depth, d, Activation::Relu)?;
            let mut stream = RngStream::derive(master_seed, index as u64);
            let net = Network::sample(&arch, sigma_w, sigma_b, &mut stream)?;
            Ok(ExpressivenessRow {
                width,
                depth,
                stretch_ratio: stretch_ratio(&net, traj)?,
                rmt_lower: rmt_lower_bound(&arch, sigma_w),
                exact_upper: exact_upper_bound(&net)?,
            })
        })
        .collect()
}

/// Least-squares slope, intercept and Pearson correlation of `ln y` against
/// `ln x`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy / (sxx * syy).sqrt())
}
