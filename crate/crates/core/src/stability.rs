//! Lyapunov-based stability certificates for `ẋ = A x + f(x)` with a network
//! `f` in the loop.
//!
//! With `P` the SPD solution of `P A + Aᵀ P = −Q`, the Lyapunov function
//! `V(x) = xᵀ P x` decreases along trajectories whenever the Lipschitz constant
//! of `f` (with `f(0) = 0`) is at most `λ_min(Q) / (2 λ_max(P))`. The check is
//! sufficient only: an uncertified network may still give a stable system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{exact_upper_bound, rmt_upper_bound, BoundsError};
use crate::linalg::{is_hurwitz, is_spd, lyapunov_solve, sym_eigs, LinalgError, Matrix};
use crate::network::{Architecture, Network, NetworkError};
use crate::random::RngStream;

/// The state matrix used for the closed-loop example: eigenvalues
/// `−2700 ± 1558.8i`.
pub const EXAMPLE_STATE_MATRIX: [[f64; 2]; 2] = [[0.0, 2700.0], [-3600.0, -5400.0]];

pub fn example_state_matrix() -> Matrix {
    Matrix::from_rows(&EXAMPLE_STATE_MATRIX).expect("finite constant")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("state matrix is not Hurwitz")]
    NotHurwitz,
    #[error("Q is not symmetric positive definite")]
    QNotSpd,
    #[error("Lyapunov solution is not positive definite")]
    PNotSpd,
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A Hurwitz state matrix together with its Lyapunov certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySystem {
    a: Matrix,
    q: Matrix,
    p: Matrix,
    threshold: f64,
}

impl StabilitySystem {
    pub fn new(a: Matrix, q: Matrix) -> Result<Self, StabilityError> {
        if !a.is_square() {
            return Err(StabilityError::Dimension {
                what: "A must be square; columns",
                expected: a.rows(),
                got: a.cols(),
            });
        }
        if q.shape() != a.shape() {
            return Err(StabilityError::Dimension {
                what: "Q",
                expected: a.rows(),
                got: q.rows(),
            });
        }
        if !is_spd(&q)? {
            return Err(StabilityError::QNotSpd);
        }
        match is_hurwitz(&a) {
            Ok(true) => {}
            Ok(false) | Err(LinalgError::Indeterminate(_)) => return Err(StabilityError::NotHurwitz),
            Err(e) => return Err(e.into()),
        }
        let p = lyapunov_solve(&a, &q)?;
        if !is_spd(&p)? {
            return Err(StabilityError::PNotSpd);
        }
        let q_min = sym_eigs(&q)?[0];
        let p_max = *sym_eigs(&p)?.last().unwrap();
        Ok(StabilitySystem {
            a,
            q,
            p,
            threshold: q_min / (2.0 * p_max),
        })
    }

    /// `Q = I`.
    pub fn with_identity_q(a: Matrix) -> Result<Self, StabilityError> {
        let n = a.rows();
        StabilitySystem::new(a, Matrix::identity(n))
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    /// Largest Lipschitz constant of `f` that the certificate tolerates.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    fn check_net(&self, net: &Network) -> Result<(), StabilityError> {
        let arch = net.arch();
        if arch.input_dim() != self.dim() {
            return Err(StabilityError::Dimension {
                what: "network input",
                expected: self.dim(),
                got: arch.input_dim(),
            });
        }
        if arch.output_dim() != self.dim() {
            return Err(StabilityError::Dimension {
                what: "network output",
                expected: self.dim(),
                got: arch.output_dim(),
            });
        }
        Ok(())
    }

    /// `d/dt (xᵀPx) = xᵀ(PA + AᵀP)x + 2xᵀP f(x)` along the closed loop.
    pub fn lyapunov_derivative(&self, net: &Network, x: &[f64]) -> Result<f64, StabilityError> {
        self.check_net(net)?;
        let fx = net.forward(x)?;
        let ax = self.a.mat_vec(x);
        let px = self.p.mat_vec(x);
        // xᵀ(PA + AᵀP)x = 2 (Px)ᵀ(Ax)
        let linear: f64 = 2.0 * px.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>();
        let coupling: f64 = 2.0 * px.iter().zip(&fx).map(|(a, b)| a * b).sum::<f64>();
        Ok(linear + coupling)
    }
}

pub fn system_new(a: Matrix, q: Matrix) -> Result<StabilitySystem, StabilityError> {
    StabilitySystem::new(a, q)
}

/// Which Lipschitz upper bound to compare against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificationMode {
    /// Product of spectral norms of the actual weights.
    Exact,
    /// Closed-form Gaussian estimate from the architecture and `σ_w`.
    Rmt,
}

/// `true` when the selected Lipschitz bound is at most the system threshold.
pub fn certify_network(
    sys: &StabilitySystem,
    net: &Network,
    mode: CertificationMode,
) -> Result<bool, StabilityError> {
    sys.check_net(net)?;
    let bound = match mode {
        CertificationMode::Exact => exact_upper_bound(net)?,
        CertificationMode::Rmt => rmt_upper_bound(net.arch(), net.sigma_w()),
    };
    Ok(bound <= sys.threshold())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Likelihood {
    pub trials: usize,
    pub certified: usize,
}

impl Likelihood {
    pub fn percent(&self) -> f64 {
        100.0 * self.certified as f64 / self.trials as f64
    }
}

/// Samples `trials` networks (trial `k` uses substream `(master_seed, k)`,
/// zero biases) and counts how many are certified in exact mode.
pub fn stability_likelihood(
    sys: &StabilitySystem,
    arch: &Architecture,
    sigma_w: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Likelihood, StabilityError> {
    stability_likelihood_with_mode(sys, arch, sigma_w, trials, master_seed, CertificationMode::Exact)
}

pub fn stability_likelihood_with_mode(
    sys: &StabilitySystem,
    arch: &Architecture,
    sigma_w: f64,
    trials: usize,
    master_seed: u64,
    mode: CertificationMode,
) -> Result<Likelihood, StabilityError> {
    if trials == 0 {
        return Err(StabilityError::NoTrials);
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut stream = RngStream::derive(master_seed, k as u64);
            let net = Network::sample(arch, sigma_w, 0.0, &mut stream)?;
            certify_network(sys, &net, mode)
        })
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(Likelihood {
        trials,
        certified: outcomes.iter().filter(|&&c| c).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;
    use crate::random::stream_new;

    #[test]
    fn negative_identity_system() {
        let sys = StabilitySystem::with_identity_q(Matrix::identity(2).scaled(-1.0).unwrap()).unwrap();
        assert!(sys.p().sub(&Matrix::diag(&[0.5, 0.5]).unwrap()).unwrap().max_abs() < 1e-15);
        assert!((sys.threshold() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn example_system_threshold() {
        let sys = StabilitySystem::with_identity_q(example_state_matrix()).unwrap();
        let resid = mat_residual(&sys);
        assert!(resid <= 1e-8 * sys.q().frobenius_norm());
        // λ_max(P) from the closed-form 2×2 symmetric eigenvalue formula
        let p = sys.p();
        let (a, b, d) = (p.get(0, 0), p.get(0, 1), p.get(1, 1));
        let lam_max = 0.5 * (a + d) + (0.25 * (a - d).powi(2) + b * b).sqrt();
        assert!((sys.threshold() - 1.0 / (2.0 * lam_max)).abs() < 1e-9 * sys.threshold());
        assert!(sys.threshold() > 0.0);
    }

    fn mat_residual(sys: &StabilitySystem) -> f64 {
        let pa = crate::linalg::mat_mul(sys.p(), sys.a()).unwrap();
        let atp = crate::linalg::mat_mul(&sys.a().transpose(), sys.p()).unwrap();
        pa.add(&atp).unwrap().add(sys.q()).unwrap().frobenius_norm()
    }

    #[test]
    fn rejects_unstable_and_bad_q() {
        assert_eq!(
            StabilitySystem::with_identity_q(Matrix::identity(2)).unwrap_err(),
            StabilityError::NotHurwitz
        );
        let a = Matrix::identity(2).scaled(-1.0).unwrap();
        let bad_q = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert_eq!(StabilitySystem::new(a.clone(), bad_q).unwrap_err(), StabilityError::QNotSpd);
        assert!(matches!(
            StabilitySystem::new(a, Matrix::identity(3)),
            Err(StabilityError::Dimension { .. })
        ));
    }

    #[test]
    fn zero_network_is_certified() {
        let sys = StabilitySystem::with_identity_q(example_state_matrix()).unwrap();
        let arch = Architecture::new(vec![2, 5, 2], Activation::Tanh).unwrap();
        let net = Network::sample(&arch, 1e-3, 0.0, &mut stream_new(1))
            .unwrap()
            .with_scaled_weights(0.0)
            .unwrap();
        assert!(certify_network(&sys, &net, CertificationMode::Exact).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let sys = StabilitySystem::with_identity_q(example_state_matrix()).unwrap();
        let arch = Architecture::new(vec![3, 5, 2], Activation::Tanh).unwrap();
        let net = Network::sample(&arch, 1.0, 0.0, &mut stream_new(1)).unwrap();
        assert!(matches!(
            certify_network(&sys, &net, CertificationMode::Exact),
            Err(StabilityError::Dimension { what: "network input", .. })
        ));
    }

    #[test]
    fn wide_single_layer_is_certified_in_rmt_mode() {
        let sys = StabilitySystem::with_identity_q(example_state_matrix()).unwrap();
        let arch = Architecture::new(vec![2, 300, 2], Activation::Tanh).unwrap();
        let net = Network::sample(&arch, 1.0, 0.0, &mut stream_new(2)).unwrap();
        let rmt = rmt_upper_bound(&arch, 1.0);
        assert_eq!(
            certify_network(&sys, &net, CertificationMode::Rmt).unwrap(),
            sys.threshold() >= rmt
        );
        assert!(sys.threshold() >= rmt);
    }

    #[test]
    fn scaling_down_never_uncertifies() {
        let sys = StabilitySystem::with_identity_q(example_state_matrix()).unwrap();
        let arch = Architecture::new(vec![2, 300, 2], Activation::Relu).unwrap();
        for seed in 0..10 {
            let net = Network::sample(&arch, 1.0, 0.0, &mut stream_new(seed)).unwrap();
            let before = certify_network(&sys, &net, CertificationMode::Exact).unwrap();
            for c in [0.9, 0.5, 0.1] {
                let after = certify_network(&sys, &net.with_scaled_weights(c).unwrap(), CertificationMode::Exact)
                    .unwrap();
                assert!(!before || after);
            }
        }
    }

    #[test]
    fn likelihood_is_deterministic() {
        let sys = StabilitySystem::with_identity_q(example_state_matrix()).unwrap();
        let arch = Architecture::constant_width(2, 20, 2, 2, Activation::Tanh).unwrap();
        let a = stability_likelihood(&sys, &arch, 0.3, 40, 99).unwrap();
        let b = stability_likelihood(&sys, &arch, 0.3, 40, 99).unwrap();
        assert_eq!(a, b);
        assert!(stability_likelihood(&sys, &arch, 0.3, 0, 99).is_err());
        let one = stability_likelihood(&sys, &arch, 1.0, 1, 5).unwrap();
        assert!(one.percent() == 0.0 || one.percent() == 100.0);
    }
}
