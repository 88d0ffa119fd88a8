//! Dense small-matrix linear algebra.
//!
//! Everything here works on [`Matrix`], a row-major `f64` matrix whose entries
//! are always finite. The routines are sized for the matrices that show up in
//! Lipschitz analysis of fully-connected networks: weight matrices of a few
//! hundred rows, and state matrices of control systems with a handful of states.

use std::fmt;

use thiserror::Error;

/// Relative tolerance used by every symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest state dimension accepted by [`lyapunov_solve`].
pub const MAX_LYAPUNOV_DIM: usize = 64;

const POWER_ITER_TOL: f64 = 1e-13;
const POWER_ITER_CAP: usize = 100_000;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("data length {len} does not match shape {rows}x{cols}")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:e}")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("power iteration did not converge after {iterations} steps (estimate {estimate}, relative change {residual:e})")]
    NotConverged {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },
    #[error("Jacobi eigenvalue iteration did not converge (off-diagonal norm {off_norm:e})")]
    EigenNotConverged { off_norm: f64 },
    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("no unique Lyapunov solution (A and -A share an eigenvalue)")]
    NoUniqueLyapunovSolution,
    #[error("Lyapunov solver supports n <= {MAX_LYAPUNOV_DIM}, got n = {n}")]
    TooLarge { n: usize },
    #[error("Hurwitz test is indeterminate: {0}")]
    Indeterminate(Box<LinalgError>),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense real matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        let m = Matrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            if row.len() != c {
                return Err(LinalgError::BadLength {
                    rows: r,
                    cols: c,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::new(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::diag(&vec![1.0; n]).expect("identity of positive size")
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Matrix::new(n, n, data)
    }

    /// Builds a matrix entry by entry from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Matrix> {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "add",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "sub",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `self · x`. Panics if `x.len() != cols`.
    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mat_vec: vector length mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · y`. Panics if `y.len() != rows`.
    pub fn transpose_mat_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "transpose_mat_vec: vector length mismatch");
        let mut out = vec![0.0; self.cols];
        for (row, yi) in self.data.chunks_exact(self.cols).zip(y) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        out
    }

    /// Largest `|m_ij - m_ji|` over the matrix.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(LinalgError::NonFinite {
                row: k / self.cols,
                col: k % self.cols,
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} ", self.rows, self.cols)?;
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

fn require_square(op: &'static str, m: &Matrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(LinalgError::NotSquare {
            op,
            rows: m.rows,
            cols: m.cols,
        })
    }
}

fn require_symmetric(m: &Matrix) -> Result<()> {
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL * m.max_abs().max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotSymmetric { max_asymmetry: asym });
    }
    Ok(())
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "mat_mul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, m) = (a.rows, b.cols);
    let mut data = vec![0.0; n * m];
    // i-k-j order keeps the inner loop contiguous in both b and the output
    for i in 0..n {
        let out = &mut data[i * m..(i + 1) * m];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            for (o, bkj) in out.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Matrix::new(n, m, data)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value of `m`.
///
/// Power iteration on `mᵀm`, applied as a product with `m` followed by a
/// product with `mᵀ` so the Gram matrix is never formed. The Rayleigh estimate
/// `‖m v‖²` is accepted once its relative change stays below `1e-13` for two
/// consecutive steps.
///
/// Two fixed start vectors are run: the normalized all-ones vector and a
/// golden-ratio pattern. A structured matrix can make either one exactly
/// orthogonal to the dominant singular vector; taking the larger of the two
/// converged values removes that failure mode while keeping the result a pure
/// function of `m`.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    let ones = vec![1.0; m.cols];
    let golden: Vec<f64> = (0..m.cols)
        .map(|i| {
            let frac = ((i as f64 + 1.0) * 0.618_033_988_749_894_9).fract();
            if i % 2 == 0 {
                0.5 + frac
            } else {
                -0.5 - frac
            }
        })
        .collect();
    let a = power_iteration(m, ones)?;
    let b = power_iteration(m, golden)?;
    Ok(a.max(b))
}

fn power_iteration(m: &Matrix, mut v: Vec<f64>) -> Result<f64> {
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut prev: Option<f64> = None;
    let mut quiet_steps = 0;
    let mut last_change = f64::INFINITY;
    let mut estimate = 0.0;
    for _ in 0..POWER_ITER_CAP {
        let w = m.mat_vec(&v);
        estimate = w.iter().map(|x| x * x).sum::<f64>();
        if estimate == 0.0 {
            return Ok(0.0);
        }
        let z = m.transpose_mat_vec(&w);
        let nz = norm2(&z);
        if nz == 0.0 {
            return Ok(0.0);
        }
        v = z.into_iter().map(|x| x / nz).collect();

        if let Some(p) = prev {
            last_change = (estimate - p).abs() / estimate;
            if last_change < POWER_ITER_TOL {
                quiet_steps += 1;
                if quiet_steps >= 2 {
                    return Ok(estimate.sqrt());
                }
            } else {
                quiet_steps = 0;
            }
        }
        prev = Some(estimate);
    }
    Err(LinalgError::NotConverged {
        iterations: POWER_ITER_CAP,
        estimate: estimate.sqrt(),
        residual: last_change,
    })
}

/// Eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations.
pub fn sym_eigs(m: &Matrix) -> Result<Vec<f64>> {
    require_square("sym_eigs", m)?;
    require_symmetric(m)?;
    let n = m.rows;
    // work on the exactly symmetric part
    let mut a = m.data.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
    let threshold = JACOBI_TOL * m.frobenius_norm();
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    if !converged && off_norm(&a) > threshold {
        return Err(LinalgError::EigenNotConverged { off_norm: off_norm(&a) });
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| x.total_cmp(y));
    Ok(eigs)
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    require_square("solve_linear", a)?;
    if b.rows != a.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "solve_linear",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let n = a.rows;
    let m = b.cols;
    let mut lu = a.data.clone();
    let mut x = b.data.clone();
    let tiny = a.max_abs() * n as f64 * f64::EPSILON;

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, lu[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= tiny || pivot_abs == 0.0 {
            return Err(LinalgError::Singular { pivot: col });
        }
        if pivot_row != col {
            for k in 0..n {
                lu.swap(col * n + k, pivot_row * n + k);
            }
            for k in 0..m {
                x.swap(col * m + k, pivot_row * m + k);
            }
        }
        let pivot = lu[col * n + col];
        for r in (col + 1)..n {
            let factor = lu[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[r * n + col] = 0.0;
            for k in (col + 1)..n {
                lu[r * n + k] -= factor * lu[col * n + k];
            }
            for k in 0..m {
                x[r * m + k] -= factor * x[col * m + k];
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[col * n + col];
        for k in 0..m {
            let mut s = x[col * m + k];
            for j in (col + 1)..n {
                s -= lu[col * n + j] * x[j * m + k];
            }
            x[col * m + k] = s / pivot;
        }
    }
    Matrix::new(n, m, x)
}

/// Solves the continuous Lyapunov equation `P·A + Aᵀ·P = −Q`.
///
/// The equation is vectorized column-major as
/// `(I ⊗ Aᵀ + Aᵀ ⊗ I)·vec(P) = −vec(Q)` and handed to [`solve_linear`]. The
/// dense Kronecker system is `n² × n²`, hence the `n ≤ 64` limit.
pub fn lyapunov_solve(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    require_square("lyapunov_solve", a)?;
    let n = a.rows;
    if n > MAX_LYAPUNOV_DIM {
        return Err(LinalgError::TooLarge { n });
    }
    if q.shape() != a.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "lyapunov_solve",
            left: a.shape(),
            right: q.shape(),
        });
    }
    require_symmetric(q)?;

    let nn = n * n;
    let mut k = vec![0.0; nn * nn];
    let mut rhs = vec![0.0; nn];
    // row index i + j·n holds the (i, j) entry of PA + AᵀP
    for j in 0..n {
        for i in 0..n {
            let r = i + j * n;
            for s in 0..n {
                // (AᵀP)[i,j] = Σ_s A[s,i]·P[s,j]
                k[r * nn + (s + j * n)] += a.get(s, i);
                // (PA)[i,j] = Σ_s P[i,s]·A[s,j]
                k[r * nn + (i + s * n)] += a.get(s, j);
            }
            rhs[r] = -q.get(i, j);
        }
    }
    let kron = Matrix::new(nn, nn, k)?;
    let rhs = Matrix::new(nn, 1, rhs)?;
    let vec_p = match solve_linear(&kron, &rhs) {
        Ok(v) => v,
        Err(LinalgError::Singular { .. }) => return Err(LinalgError::NoUniqueLyapunovSolution),
        Err(e) => return Err(e),
    };
    Matrix::from_fn(n, n, |i, j| 0.5 * (vec_p.data[i + j * n] + vec_p.data[j + i * n]))
}

/// Positive definiteness by attempted Cholesky factorization.
pub fn is_spd(m: &Matrix) -> Result<bool> {
    require_square("is_spd", m)?;
    require_symmetric(m)?;
    let n = m.rows;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Ok(false);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(true)
}

/// Lyapunov characterization: `a` is Hurwitz iff `P·a + aᵀ·P = −I` has an SPD
/// solution.
pub fn is_hurwitz(a: &Matrix) -> Result<bool> {
    require_square("is_hurwitz", a)?;
    let p = lyapunov_solve(a, &Matrix::identity(a.rows))
        .map_err(|e| LinalgError::Indeterminate(Box::new(e)))?;
    is_spd(&p)
}
