//! Ensemble moment tables: the sufficient statistics kept from a
//! simulation pass.
//!
//! The raw ensemble (`m` initial conditions x `N` paths x `n + 1` times)
//! is never materialized. For each initial condition `xi_i` and each
//! observation index `k` the tables hold ensemble means of
//!
//! ```text
//! x_k^e                     tracked moment exponents e
//! Q_j(k), x_k Q_j(k),
//! Q_j(k) Q_l(k)             residual monomials j, l
//! ```
//!
//! where `Q_j(k)` is the per-path running trapezoid of `x^j` over
//! `[0, k h]`. The second group makes the squared martingale residual
//!
//! ```text
//! E (x_k - xi - sum_j c_j Q_j(k))^2
//! ```
//!
//! an exact quadratic form in the drift coefficients `c`, so the
//! diffusion-step right-hand side can be evaluated at any fitted drift and
//! any truncation point without revisiting trajectories.
//!
//! Vector-valued slow blocks keep the same statistics with monomials
//! replaced by components: means, second moments, and the mixed
//! `Q`-statistics needed for the matrix residual.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::params::MonomialParam;

/// Moment statistics for a scalar slow variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMomentTable {
    h: f64,
    n: usize,
    paths: usize,
    ics: Vec<f64>,
    exponents: Vec<u32>,
    resid_exponents: Vec<u32>,
    /// `[ic][exponent][k]`, curve-contiguous.
    moments: Vec<f64>,
    /// `[ic][resid exponent][k]`: mean of `Q_j(k)`.
    qmean: Vec<f64>,
    /// `[ic][resid exponent][k]`: mean of `x_k Q_j(k)`.
    qcross: Vec<f64>,
    /// `[ic][upper-triangle pair][k]`: mean of `Q_j(k) Q_l(k)`.
    qgram: Vec<f64>,
}

/// Flat index of the unordered pair `(a, b)`, `a <= b < d`, in an
/// upper-triangle layout.
#[inline]
pub(crate) fn tri_index(a: usize, b: usize, d: usize) -> usize {
    debug_assert!(a <= b && b < d);
    a * d - a * (a + 1) / 2 + b
}

pub(crate) fn tri_len(d: usize) -> usize {
    d * (d + 1) / 2
}

impl ScalarMomentTable {
    /// Builds a table from raw mean arrays. Primarily for synthetic-data
    /// tests; simulation uses the streaming accumulator.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        h: f64,
        n: usize,
        paths: usize,
        ics: Vec<f64>,
        exponents: Vec<u32>,
        resid_exponents: Vec<u32>,
        moments: Vec<f64>,
        qmean: Vec<f64>,
        qcross: Vec<f64>,
        qgram: Vec<f64>,
    ) -> Result<Self> {
        let m = ics.len();
        let e = exponents.len();
        let p = resid_exponents.len();
        if !(h > 0.0) || n == 0 || m == 0 {
            return Err(Error::InvalidInput("degenerate table shape".into()));
        }
        if !exponents.windows(2).all(|w| w[0] < w[1])
            || !resid_exponents.windows(2).all(|w| w[0] < w[1])
        {
            return Err(Error::InvalidInput("exponents must be sorted".into()));
        }
        let rows = n + 1;
        if moments.len() != m * e * rows
            || qmean.len() != m * p * rows
            || qcross.len() != m * p * rows
            || qgram.len() != m * tri_len(p) * rows
        {
            return Err(Error::InvalidInput("table array length mismatch".into()));
        }
        Ok(Self { h, n, paths, ics, exponents, resid_exponents, moments, qmean, qcross, qgram })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn ics(&self) -> &[f64] {
        &self.ics
    }

    pub fn num_ics(&self) -> usize {
        self.ics.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn resid_exponents(&self) -> &[u32] {
        &self.resid_exponents
    }

    fn exponent_slot(&self, exponent: u32) -> Result<usize> {
        self.exponents
            .iter()
            .position(|&e| e == exponent)
            .ok_or(Error::MissingExponent(exponent))
    }

    fn resid_slot(&self, exponent: u32) -> Result<usize> {
        self.resid_exponents
            .iter()
            .position(|&e| e == exponent)
            .ok_or(Error::MissingExponent(exponent))
    }

    /// Ensemble moment curve `k -> E(x_k^exponent)` for one initial
    /// condition, as a contiguous slice of length `n + 1`.
    pub fn moment_curve(&self, ic: usize, exponent: u32) -> Result<&[f64]> {
        let e = self.exponent_slot(exponent)?;
        let rows = self.n + 1;
        let base = (ic * self.exponents.len() + e) * rows;
        Ok(&self.moments[base..base + rows])
    }

    pub fn moment(&self, ic: usize, exponent: u32, k: usize) -> Result<f64> {
        Ok(self.moment_curve(ic, exponent)?[k])
    }

    /// Second moment of the martingale residual
    /// `x_k - xi - sum_j c_j Q_j(k)` under the given drift.
    pub fn residual_second_moment(
        &self,
        ic: usize,
        k: usize,
        drift: &MonomialParam,
    ) -> Result<f64> {
        let xi = self.ics[ic];
        let mu1 = self.moment(ic, 1, k)?;
        let mu2 = self.moment(ic, 2, k)?;
        let mut acc = mu2 - 2.0 * xi * mu1 + xi * xi;
        if drift.is_empty() {
            return Ok(acc);
        }
        let p = self.resid_exponents.len();
        let rows = self.n + 1;
        let slots: Vec<usize> = drift
            .index_set()
            .iter()
            .map(|&j| self.resid_slot(j))
            .collect::<Result<_>>()?;
        let coeffs = drift.coefficients();
        for (a, &sa) in slots.iter().enumerate() {
            let qm = self.qmean[(ic * p + sa) * rows + k];
            let qc = self.qcross[(ic * p + sa) * rows + k];
            acc += 2.0 * coeffs[a] * (xi * qm - qc);
            for (b, &sb) in slots.iter().enumerate() {
                let (lo, hi) = if sa <= sb { (sa, sb) } else { (sb, sa) };
                let gram =
                    self.qgram[(ic * tri_len(p) + tri_index(lo, hi, p)) * rows + k];
                acc += coeffs[a] * coeffs[b] * gram;
            }
        }
        Ok(acc)
    }
}

/// Moment statistics for a vector slow variable (linear drift model).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMomentTable {
    h: f64,
    n: usize,
    paths: usize,
    dim: usize,
    ics: Vec<Vec<f64>>,
    /// `[ic][component][k]`: mean of `X_c(k)`.
    mean: Vec<f64>,
    /// `[ic][pair][k]`: mean of `X_c X_d`, upper triangle.
    second: Vec<f64>,
    /// `[ic][component][k]`: mean of `Q_c(k)`, the running trapezoid of `X_c`.
    qmean: Vec<f64>,
    /// `[ic][c * dim + d][k]`: mean of `Q_c X_d` (full matrix).
    qcross: Vec<f64>,
    /// `[ic][pair][k]`: mean of `Q_c Q_d`, upper triangle.
    qgram: Vec<f64>,
}

impl VectorMomentTable {
    /// Builds a table from raw mean arrays. Primarily for synthetic-data
    /// tests; simulation uses the streaming accumulator.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        h: f64,
        n: usize,
        paths: usize,
        ics: Vec<Vec<f64>>,
        dim: usize,
        mean: Vec<f64>,
        second: Vec<f64>,
        qmean: Vec<f64>,
        qcross: Vec<f64>,
        qgram: Vec<f64>,
    ) -> Result<Self> {
        let m = ics.len();
        if !(h > 0.0) || n == 0 || m == 0 || dim == 0 {
            return Err(Error::InvalidInput("degenerate table shape".into()));
        }
        if ics.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInput(
                "initial condition dimension mismatch".into(),
            ));
        }
        let rows = n + 1;
        if mean.len() != m * dim * rows
            || second.len() != m * tri_len(dim) * rows
            || qmean.len() != m * dim * rows
            || qcross.len() != m * dim * dim * rows
            || qgram.len() != m * tri_len(dim) * rows
        {
            return Err(Error::InvalidInput("table array length mismatch".into()));
        }
        Ok(Self { h, n, paths, dim, ics, mean, second, qmean, qcross, qgram })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ics(&self) -> &[Vec<f64>] {
        &self.ics
    }

    pub fn num_ics(&self) -> usize {
        self.ics.len()
    }

    /// Mean curve `k -> E(X_c(k))`, contiguous slice of length `n + 1`.
    pub fn mean_curve(&self, ic: usize, component: usize) -> &[f64] {
        let rows = self.n + 1;
        let base = (ic * self.dim + component) * rows;
        &self.mean[base..base + rows]
    }

    pub fn mean_at(&self, ic: usize, component: usize, k: usize) -> f64 {
        self.mean_curve(ic, component)[k]
    }

    /// Second moment of the vector martingale residual
    /// `X_k - xi + A Q(k)` (drift model `dX = -A X dt`), as a `dim x dim`
    /// matrix.
    pub fn residual_outer_moment(&self, ic: usize, k: usize, a_hat: &DenseMatrix) -> DenseMatrix {
        let d = self.dim;
        assert_eq!(a_hat.rows(), d);
        assert_eq!(a_hat.cols(), d);
        let rows = self.n + 1;
        let xi = &self.ics[ic];

        let mval = |c: usize| self.mean[(ic * d + c) * rows + k];
        let sval = |a: usize, b: usize| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            self.second[(ic * tri_len(d) + tri_index(lo, hi, d)) * rows + k]
        };
        let qm = |c: usize| self.qmean[(ic * d + c) * rows + k];
        let qc = |c: usize, x: usize| self.qcross[(ic * d * d + c * d + x) * rows + k];
        let qg = |a: usize, b: usize| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            self.qgram[(ic * tri_len(d) + tri_index(lo, hi, d)) * rows + k]
        };

        // E[(X - xi)(X - xi)^T] + A E[Q (X - xi)^T]
        //   + E[(X - xi) Q^T] A^T + A E[Q Q^T] A^T
        let mut out = DenseMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                let mut v = sval(r, c) - mval(r) * xi[c] - xi[r] * mval(c) + xi[r] * xi[c];
                for l in 0..d {
                    // (A E[Q (X - xi)^T])_{rc}
                    v += a_hat.at(r, l) * (qc(l, c) - qm(l) * xi[c]);
                    // (E[(X - xi) Q^T] A^T)_{rc}
                    v += (qc(l, r) - qm(l) * xi[r]) * a_hat.at(c, l);
                    for s in 0..d {
                        v += a_hat.at(r, l) * qg(l, s) * a_hat.at(c, s);
                    }
                }
                out.set(r, c, v);
            }
        }
        out
    }
}

/// Either table variant, as produced by the simulator.
#[derive(Debug, Clone)]
pub enum MomentTable {
    Scalar(ScalarMomentTable),
    Vector(VectorMomentTable),
}

impl MomentTable {
    pub fn as_scalar(&self) -> Result<&ScalarMomentTable> {
        match self {
            MomentTable::Scalar(t) => Ok(t),
            MomentTable::Vector(_) => {
                Err(Error::InvalidInput("expected a scalar moment table".into()))
            }
        }
    }

    pub fn as_vector(&self) -> Result<&VectorMomentTable> {
        match self {
            MomentTable::Vector(t) => Ok(t),
            MomentTable::Scalar(_) => {
                Err(Error::InvalidInput("expected a vector moment table".into()))
            }
        }
    }
}

/// Running sums for one initial condition of a scalar table. Values are
/// accumulated per chunk of paths in ascending path order and merged in
/// ascending chunk order, which fixes the floating-point reduction tree
/// independently of thread count.
#[derive(Debug, Clone)]
pub(crate) struct ScalarAccum {
    pub rows: usize,
    pub moments: Vec<f64>,
    pub qmean: Vec<f64>,
    pub qcross: Vec<f64>,
    pub qgram: Vec<f64>,
}

impl ScalarAccum {
    pub fn new(rows: usize, num_exp: usize, num_resid: usize) -> Self {
        Self {
            rows,
            moments: vec![0.0; num_exp * rows],
            qmean: vec![0.0; num_resid * rows],
            qcross: vec![0.0; num_resid * rows],
            qgram: vec![0.0; tri_len(num_resid) * rows],
        }
    }

    /// Adds one path's observation at index `k`. `pows[e]` is `x_k^e`
    /// indexed by raw exponent value, `quads` the running per-path
    /// quadratures aligned with the residual exponents, `exps` the tracked
    /// exponent list.
    #[inline]
    pub fn record(&mut self, k: usize, exps: &[u32], pows: &[f64], quads: &[f64]) {
        for (ei, &e) in exps.iter().enumerate() {
            self.moments[ei * self.rows + k] += pows[e as usize];
        }
        let x = pows[1];
        for (p, &q) in quads.iter().enumerate() {
            self.qmean[p * self.rows + k] += q;
            self.qcross[p * self.rows + k] += x * q;
        }
        let mut slot = 0;
        for a in 0..quads.len() {
            for b in a..quads.len() {
                self.qgram[slot * self.rows + k] += quads[a] * quads[b];
                slot += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &ScalarAccum) {
        for (s, o) in self.moments.iter_mut().zip(&other.moments) {
            *s += o;
        }
        for (s, o) in self.qmean.iter_mut().zip(&other.qmean) {
            *s += o;
        }
        for (s, o) in self.qcross.iter_mut().zip(&other.qcross) {
            *s += o;
        }
        for (s, o) in self.qgram.iter_mut().zip(&other.qgram) {
            *s += o;
        }
    }
}

/// Running sums for one initial condition of a vector table.
#[derive(Debug, Clone)]
pub(crate) struct VectorAccum {
    pub rows: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub second: Vec<f64>,
    pub qmean: Vec<f64>,
    pub qcross: Vec<f64>,
    pub qgram: Vec<f64>,
}

impl VectorAccum {
    pub fn new(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            mean: vec![0.0; dim * rows],
            second: vec![0.0; tri_len(dim) * rows],
            qmean: vec![0.0; dim * rows],
            qcross: vec![0.0; dim * dim * rows],
            qgram: vec![0.0; tri_len(dim) * rows],
        }
    }

    /// Adds one path's observation at index `k`: slow state `x` and the
    /// running componentwise quadratures `quads`.
    #[inline]
    pub fn record(&mut self, k: usize, x: &[f64], quads: &[f64]) {
        let d = self.dim;
        for c in 0..d {
            self.mean[c * self.rows + k] += x[c];
            self.qmean[c * self.rows + k] += quads[c];
        }
        let mut slot = 0;
        for a in 0..d {
            for b in a..d {
                self.second[slot * self.rows + k] += x[a] * x[b];
                self.qgram[slot * self.rows + k] += quads[a] * quads[b];
                slot += 1;
            }
        }
        for a in 0..d {
            for b in 0..d {
                self.qcross[(a * d + b) * self.rows + k] += quads[a] * x[b];
            }
        }
    }

    pub fn merge(&mut self, other: &VectorAccum) {
        for (s, o) in self.mean.iter_mut().zip(&other.mean) {
            *s += o;
        }
        for (s, o) in self.second.iter_mut().zip(&other.second) {
            *s += o;
        }
        for (s, o) in self.qmean.iter_mut().zip(&other.qmean) {
            *s += o;
        }
        for (s, o) in self.qcross.iter_mut().zip(&other.qcross) {
            *s += o;
        }
        for (s, o) in self.qgram.iter_mut().zip(&other.qgram) {
            *s += o;
        }
    }
}

/// Assembles the final scalar table from per-initial-condition sums.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finalize_scalar(
    h: f64,
    n: usize,
    paths: usize,
    ics: Vec<f64>,
    exponents: Vec<u32>,
    resid_exponents: Vec<u32>,
    accums: Vec<ScalarAccum>,
) -> ScalarMomentTable {
    let rows = n + 1;
    let m = ics.len();
    let ne = exponents.len();
    let np = resid_exponents.len();
    let inv = 1.0 / paths as f64;
    let mut moments = Vec::with_capacity(m * ne * rows);
    let mut qmean = Vec::with_capacity(m * np * rows);
    let mut qcross = Vec::with_capacity(m * np * rows);
    let mut qgram = Vec::with_capacity(m * tri_len(np) * rows);
    for (i, acc) in accums.iter().enumerate() {
        for (ei, &e) in exponents.iter().enumerate() {
            for k in 0..rows {
                let v = if k == 0 {
                    // All paths start exactly at xi, so the initial moment
                    // is known in closed form; summation would lose ulps.
                    ics[i].powi(e as i32)
                } else {
                    acc.moments[ei * rows + k] * inv
                };
                moments.push(v);
            }
        }
        for p in 0..np {
            for k in 0..rows {
                qmean.push(acc.qmean[p * rows + k] * inv);
            }
        }
        for p in 0..np {
            for k in 0..rows {
                qcross.push(acc.qcross[p * rows + k] * inv);
            }
        }
        for s in 0..tri_len(np) {
            for k in 0..rows {
                qgram.push(acc.qgram[s * rows + k] * inv);
            }
        }
    }
    ScalarMomentTable {
        h,
        n,
        paths,
        ics,
        exponents,
        resid_exponents,
        moments,
        qmean,
        qcross,
        qgram,
    }
}

/// Assembles the final vector table from per-initial-condition sums.
pub(crate) fn finalize_vector(
    h: f64,
    n: usize,
    paths: usize,
    ics: Vec<Vec<f64>>,
    dim: usize,
    accums: Vec<VectorAccum>,
) -> VectorMomentTable {
    let rows = n + 1;
    let m = ics.len();
    let inv = 1.0 / paths as f64;
    let mut mean = Vec::with_capacity(m * dim * rows);
    let mut second = Vec::with_capacity(m * tri_len(dim) * rows);
    let mut qmean = Vec::with_capacity(m * dim * rows);
    let mut qcross = Vec::with_capacity(m * dim * dim * rows);
    let mut qgram = Vec::with_capacity(m * tri_len(dim) * rows);
    for (i, acc) in accums.iter().enumerate() {
        for c in 0..dim {
            for k in 0..rows {
                let v = if k == 0 { ics[i][c] } else { acc.mean[c * rows + k] * inv };
                mean.push(v);
            }
        }
        let mut slot = 0;
        for a in 0..dim {
            for b in a..dim {
                for k in 0..rows {
                    let v = if k == 0 {
                        ics[i][a] * ics[i][b]
                    } else {
                        acc.second[slot * rows + k] * inv
                    };
                    second.push(v);
                }
                slot += 1;
            }
        }
        for c in 0..dim {
            for k in 0..rows {
                qmean.push(acc.qmean[c * rows + k] * inv);
            }
        }
        for cd in 0..dim * dim {
            for k in 0..rows {
                qcross.push(acc.qcross[cd * rows + k] * inv);
            }
        }
        for s in 0..tri_len(dim) {
            for k in 0..rows {
                qgram.push(acc.qgram[s * rows + k] * inv);
            }
        }
    }
    VectorMomentTable { h, n, paths, dim, ics, mean, second, qmean, qcross, qgram }
}
