//! Quadrature, dense least squares, and special functions.
//!
//! The least-squares path is the numerical core of the estimator: both
//! estimation steps reduce to a small, possibly rank-deficient system
//! solved in the minimum-norm sense. The default factorization is a
//! column-pivoted Householder QR completed to a complete orthogonal
//! decomposition when the numerical rank drops; a normal-equations
//! Cholesky route is available behind a flag for comparison.

use crate::error::{Error, Result};

/// Row-major dense matrix. Dimensions here are small (at most a few
/// hundred rows, a handful of columns), so no attempt is made at blocking.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    /// Single-column matrix from a vector.
    pub fn from_column(v: &[f64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Column as a fresh vector (matrices here are tiny).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// One assembled estimating system `A x = b` (`b` may have several columns).
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LsSolution {
    /// Minimum-norm least-squares solution, `p x q`.
    pub x: DenseMatrix,
    /// Numerical rank at the pivot tolerance.
    pub rank: usize,
    /// Frobenius norm of `A x - b`.
    pub residual_norm: f64,
    /// Cheap conditioning surrogate: ratio of extreme `|R_kk|` magnitudes.
    pub cond_estimate: f64,
}

/// Factorization route for [`solve_min_norm_ls_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsMethod {
    /// Column-pivoted QR, completed orthogonal decomposition on rank drop.
    ColPivQr,
    /// Normal equations with Cholesky. Faster, squares the condition
    /// number; falls back to QR when the normal matrix is not positive
    /// definite.
    NormalCholesky,
}

/// Composite trapezoid rule over `n + 1` equispaced samples:
/// `(h/2) (u_0 + u_n + 2 sum_{j=1}^{n-1} u_j)`.
pub fn trapezoid(samples: &[f64], h: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(
            "trapezoid needs at least two samples".into(),
        ));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("trapezoid step must be positive".into()));
    }
    let n = samples.len() - 1;
    let mut middle = 0.0;
    for &u in &samples[1..n] {
        middle += u;
    }
    Ok(0.5 * h * (samples[0] + samples[n] + 2.0 * middle))
}

/// Minimum-norm least squares by column-pivoted QR.
pub fn solve_min_norm_ls(a: &DenseMatrix, b: &DenseMatrix) -> Result<LsSolution> {
    solve_min_norm_ls_with(a, b, LsMethod::ColPivQr)
}

/// Minimum-norm least squares with an explicit factorization choice.
pub fn solve_min_norm_ls_with(
    a: &DenseMatrix,
    b: &DenseMatrix,
    method: LsMethod,
) -> Result<LsSolution> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidInput("empty system matrix".into()));
    }
    if b.rows() != a.rows() {
        return Err(Error::InvalidInput(format!(
            "rhs has {} rows, matrix has {}",
            b.rows(),
            a.rows()
        )));
    }
    if a.data().iter().any(|v| !v.is_finite()) || b.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry in system".into()));
    }
    match method {
        LsMethod::ColPivQr => Ok(qr_min_norm(a, b, 0.0)),
        LsMethod::NormalCholesky => {
            Ok(normal_cholesky(a, b).unwrap_or_else(|| qr_min_norm(a, b, 0.0)))
        }
    }
}

/// Minimum-norm least squares with a caller-chosen relative rank cutoff:
/// pivots below `rel_tol` times the largest pivot are treated as zero and
/// the solution is completed in minimum-norm fashion over the kept
/// directions. Useful when the rows of `a` are near-copies by
/// construction and the small pivots carry no information.
pub fn solve_min_norm_ls_rank_tol(
    a: &DenseMatrix,
    b: &DenseMatrix,
    rel_tol: f64,
) -> Result<LsSolution> {
    if !(0.0..1.0).contains(&rel_tol) {
        return Err(Error::InvalidInput(format!(
            "relative rank cutoff must lie in [0, 1), got {rel_tol}"
        )));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidInput("empty system matrix".into()));
    }
    if b.rows() != a.rows() {
        return Err(Error::InvalidInput(format!(
            "rhs has {} rows, matrix has {}",
            b.rows(),
            a.rows()
        )));
    }
    if a.data().iter().any(|v| !v.is_finite()) || b.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry in system".into()));
    }
    Ok(qr_min_norm(a, b, rel_tol))
}

/// Pivot tolerance: `max(m, p) * eps * |largest pivot|`.
fn rank_tolerance(rows: usize, cols: usize, max_pivot: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * max_pivot
}

/// Householder QR with column pivoting, rank detection, and minimum-norm
/// completion for the rank-deficient case. `rel_tol` widens the rank
/// cutoff beyond the machine-level default.
fn qr_min_norm(a: &DenseMatrix, b: &DenseMatrix, rel_tol: f64) -> LsSolution {
    let m = a.rows();
    let p = a.cols();
    let q = b.cols();
    let kmax = m.min(p);

    let mut r = a.clone();
    let mut qtb = b.clone();
    let mut perm: Vec<usize> = (0..p).collect();

    for k in 0..kmax {
        // Column norms are recomputed exactly; the systems here are far
        // too small for downdating tricks to matter.
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..p {
            let norm: f64 = (k..m).map(|i| r.at(i, j) * r.at(i, j)).sum();
            if norm > best_norm {
                best_norm = norm;
                best = j;
            }
        }
        if best != k {
            for i in 0..m {
                let tmp = r.at(i, k);
                r.set(i, k, r.at(i, best));
                r.set(i, best, tmp);
            }
            perm.swap(k, best);
        }

        let norm_x = best_norm.max(0.0).sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let alpha = if r.at(k, k) >= 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = (k..m).map(|i| r.at(i, k)).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;

        for j in k..p {
            let dot: f64 = (k..m).map(|i| v[i - k] * r.at(i, j)).sum();
            let s = beta * dot;
            for i in k..m {
                let val = r.at(i, j) - s * v[i - k];
                r.set(i, j, val);
            }
        }
        r.set(k, k, alpha);
        for i in k + 1..m {
            r.set(i, k, 0.0);
        }
        for j in 0..q {
            let dot: f64 = (k..m).map(|i| v[i - k] * qtb.at(i, j)).sum();
            let s = beta * dot;
            for i in k..m {
                let val = qtb.at(i, j) - s * v[i - k];
                qtb.set(i, j, val);
            }
        }
    }

    let diags: Vec<f64> = (0..kmax).map(|k| r.at(k, k).abs()).collect();
    let dmax = diags.iter().cloned().fold(0.0, f64::max);
    let tol = rank_tolerance(m, p, dmax).max(rel_tol * dmax);
    let rank = diags.iter().take_while(|&&d| d > tol).count();
    let cond_estimate = if dmax == 0.0 {
        f64::INFINITY
    } else {
        let dmin = diags.iter().cloned().fold(f64::INFINITY, f64::min);
        if dmin == 0.0 { f64::INFINITY } else { dmax / dmin }
    };

    let mut x = DenseMatrix::zeros(p, q);
    if rank > 0 {
        if rank == p {
            // Full column rank: ordinary triangular back-substitution.
            for col in 0..q {
                let mut y = vec![0.0; p];
                for i in (0..p).rev() {
                    let mut s = qtb.at(i, col);
                    for j in i + 1..p {
                        s -= r.at(i, j) * y[j];
                    }
                    y[i] = s / r.at(i, i);
                }
                for i in 0..p {
                    x.set(perm[i], col, y[i]);
                }
            }
        } else {
            // Rank-deficient: factor R1^T = Q2 T (R1 is rank x p) so the
            // minimum-norm solution is y = Q2 [T^-T c; 0].
            let mut rt = DenseMatrix::zeros(p, rank);
            for i in 0..rank {
                for j in 0..p {
                    rt.set(j, i, r.at(i, j));
                }
            }
            let (q2, t) = qr_thin(&rt);
            for col in 0..q {
                // Forward-substitute T^T w = c.
                let mut w = vec![0.0; rank];
                for i in 0..rank {
                    let mut s = qtb.at(i, col);
                    for j in 0..i {
                        s -= t.at(j, i) * w[j];
                    }
                    w[i] = s / t.at(i, i);
                }
                for i in 0..p {
                    let mut s = 0.0;
                    for j in 0..rank {
                        s += q2.at(i, j) * w[j];
                    }
                    x.set(perm[i], col, s);
                }
            }
        }
    }

    let residual_norm = a.matmul(&x).frobenius_distance(b);
    LsSolution { x, rank, residual_norm, cond_estimate }
}

/// Thin unpivoted Householder QR of a full-column-rank `n x r` matrix,
/// returning explicit `Q` (`n x r`) and `T` (`r x r` upper triangular).
fn qr_thin(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let r = a.cols();
    let mut work = a.clone();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(r);

    for k in 0..r {
        let norm_x: f64 = (k..n).map(|i| work.at(i, k) * work.at(i, k)).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            vs.push(vec![0.0; n - k]);
            continue;
        }
        let alpha = if work.at(k, k) >= 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = (k..n).map(|i| work.at(i, k)).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
        for j in k..r {
            let dot: f64 = (k..n).map(|i| v[i - k] * work.at(i, j)).sum();
            let s = beta * dot;
            for i in k..n {
                let val = work.at(i, j) - s * v[i - k];
                work.set(i, j, val);
            }
        }
        work.set(k, k, alpha);
        for i in k + 1..n {
            work.set(i, k, 0.0);
        }
        vs.push(v);
    }

    let mut t = DenseMatrix::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            t.set(i, j, work.at(i, j));
        }
    }

    // Accumulate Q = H_0 ... H_{r-1} applied to the first r identity columns.
    let mut qm = DenseMatrix::zeros(n, r);
    for j in 0..r {
        qm.set(j, j, 1.0);
    }
    for k in (0..r).rev() {
        let v = &vs[k];
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        for j in 0..r {
            let dot: f64 = (k..n).map(|i| v[i - k] * qm.at(i, j)).sum();
            let s = beta * dot;
            for i in k..n {
                let val = qm.at(i, j) - s * v[i - k];
                qm.set(i, j, val);
            }
        }
    }
    (qm, t)
}

/// Normal-equations route. Returns `None` when Cholesky breaks down.
fn normal_cholesky(a: &DenseMatrix, b: &DenseMatrix) -> Option<LsSolution> {
    let p = a.cols();
    let q = b.cols();
    let at = a.transpose();
    let g = at.matmul(a);
    let rhs = at.matmul(b);

    // Cholesky G = L L^T.
    let mut l = DenseMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let mut s = g.at(i, j);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k);
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.at(j, j));
            }
        }
    }

    let mut x = DenseMatrix::zeros(p, q);
    for col in 0..q {
        let mut y = vec![0.0; p];
        for i in 0..p {
            let mut s = rhs.at(i, col);
            for k in 0..i {
                s -= l.at(i, k) * y[k];
            }
            y[i] = s / l.at(i, i);
        }
        let mut z = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = y[i];
            for k in i + 1..p {
                s -= l.at(k, i) * z[k];
            }
            z[i] = s / l.at(i, i);
        }
        for i in 0..p {
            x.set(i, col, z[i]);
        }
    }

    let diags: Vec<f64> = (0..p).map(|i| l.at(i, i)).collect();
    let dmax = diags.iter().cloned().fold(0.0, f64::max);
    let dmin = diags.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual_norm = a.matmul(&x).frobenius_distance(b);
    Some(LsSolution {
        x,
        rank: p,
        residual_norm,
        // Cholesky diagonals square-root the normal-matrix spectrum, so
        // their ratio is on the same scale as the QR estimate.
        cond_estimate: if dmin > 0.0 { (dmax / dmin) * (dmax / dmin) } else { f64::INFINITY },
    })
}

/// Modified Bessel function of the first kind, order zero:
/// `I_0(z) = sum_k (z^2/4)^k / (k!)^2`.
pub fn bessel_i0(z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "bessel_i0 expects a nonnegative argument, got {z}"
        )));
    }
    let w = 0.25 * z * z;
    let mut term = 1.0;
    let mut acc = 1.0;
    for k in 1..500 {
        term *= w / ((k * k) as f64);
        acc += term;
        if term < acc * 1e-17 {
            break;
        }
    }
    Ok(acc)
}
