//! Monomial parameterizations of drift and diffusion coefficients.

use crate::error::{Error, Result};

/// A function of the form `sum_j c_j x^j` over a sorted set of exponents.
///
/// Both the drift `f(x; theta)` and the squared diffusion coefficient
/// `g(x; sigma)` are represented this way; estimation recovers the
/// coefficient vector for a fixed exponent set.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialParam {
    index_set: Vec<u32>,
    coefficients: Vec<f64>,
}

impl MonomialParam {
    /// Builds a parameterization from exponents and matching coefficients.
    ///
    /// The exponent list must be strictly increasing and the coefficients
    /// finite. An empty index set represents the zero function.
    pub fn new(index_set: Vec<u32>, coefficients: Vec<f64>) -> Result<Self> {
        if index_set.len() != coefficients.len() {
            return Err(Error::InvalidInput(format!(
                "exponent/coefficient length mismatch: {} vs {}",
                index_set.len(),
                coefficients.len()
            )));
        }
        if !index_set.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "exponents must be strictly increasing".into(),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self { index_set, coefficients })
    }

    /// The zero function (empty exponent set).
    pub fn zero() -> Self {
        Self { index_set: Vec::new(), coefficients: Vec::new() }
    }

    pub fn index_set(&self) -> &[u32] {
        &self.index_set
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    /// Evaluates `sum_j c_j x^j`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (&j, &c) in self.index_set.iter().zip(&self.coefficients) {
            acc += c * x.powi(j as i32);
        }
        acc
    }

    /// Coefficient attached to exponent `j`, if present.
    pub fn coefficient(&self, j: u32) -> Option<f64> {
        self.index_set
            .iter()
            .position(|&e| e == j)
            .map(|i| self.coefficients[i])
    }
}

/// Output name of the drift coefficient on `x^j`.
pub fn drift_param_name(j: u32) -> String {
    format!("drift_{j}")
}

/// Output name of the squared-diffusion coefficient on `x^j`.
pub fn diff_param_name(j: u32) -> String {
    format!("diff_{j}")
}

/// Output name of entry (i, j) of the drift matrix, 1-based.
pub fn drift_matrix_name(i: usize, j: usize) -> String {
    format!("a_{}{}", i + 1, j + 1)
}

/// Output name of entry (i, j) of the diffusion matrix, 1-based.
///
/// The matrix is symmetric, so only entries with `i <= j` are reported.
pub fn diff_matrix_name(i: usize, j: usize) -> String {
    format!("sigma_{}{}", i + 1, j + 1)
}
