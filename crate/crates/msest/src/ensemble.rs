//! Ensemble configuration: step size, horizon, path count, initial
//! conditions, and the master seed.

use crate::error::{Error, Result};

/// Configuration of one simulated ensemble: `paths` trajectories from each
/// of the listed slow-state initial conditions, observed on the grid
/// `t_k = k h`, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub h: f64,
    pub n: usize,
    pub paths: usize,
    pub ics: Vec<Vec<f64>>,
    pub master_seed: u64,
    /// Substep override for deterministic fast/slow systems; when absent
    /// the model default applies.
    pub ode_substep: Option<f64>,
}

impl EnsembleConfig {
    pub fn new(h: f64, n: usize, paths: usize, ics: Vec<Vec<f64>>, master_seed: u64) -> Result<Self> {
        let cfg = Self { h, n, paths, ics, master_seed, ode_substep: None };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Convenience constructor for scalar slow states.
    pub fn scalar(h: f64, n: usize, paths: usize, ics: &[f64], master_seed: u64) -> Result<Self> {
        Self::new(h, n, paths, ics.iter().map(|&x| vec![x]).collect(), master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidInput("step h must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("need at least one step".into()));
        }
        if self.paths == 0 {
            return Err(Error::InvalidInput("need at least one path".into()));
        }
        if self.ics.is_empty() {
            return Err(Error::InvalidInput("need at least one initial condition".into()));
        }
        let dim = self.ics[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("empty initial condition".into()));
        }
        for ic in &self.ics {
            if ic.len() != dim {
                return Err(Error::InvalidInput("initial conditions of mixed dimension".into()));
            }
            if ic.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite initial condition".into()));
            }
        }
        if let Some(s) = self.ode_substep {
            if !(s > 0.0) {
                return Err(Error::InvalidInput("substep must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn ic_dim(&self) -> usize {
        self.ics[0].len()
    }

    /// Final time `n h`.
    pub fn t_final(&self) -> f64 {
        self.n as f64 * self.h
    }
}

/// `m` equally spaced points on `[min, max]`, endpoints included.
pub fn linspace(min: f64, max: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5 * (min + max)],
        _ => {
            let step = (max - min) / (m - 1) as f64;
            (0..m).map(|i| min + i as f64 * step).collect()
        }
    }
}

/// `m` points of a near-square lattice on `[min, max]^2`, row-major,
/// truncated to exactly `m` entries.
pub fn grid_2d(min: f64, max: f64, m: usize) -> Vec<Vec<f64>> {
    if m == 0 {
        return Vec::new();
    }
    let nx = (m as f64).sqrt().floor().max(1.0) as usize;
    let ny = m.div_ceil(nx);
    let xs = linspace(min, max, nx);
    let ys = linspace(min, max, ny);
    let mut out = Vec::with_capacity(m);
    'outer: for &y in &ys {
        for &x in &xs {
            out.push(vec![x, y]);
            if out.len() == m {
                break 'outer;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints_and_spacing() {
        let v = linspace(-2.0, 2.0, 5);
        assert_eq!(v, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(linspace(0.0, 1.0, 1), vec![0.5]);
    }

    #[test]
    fn grid_2d_exact_count() {
        let g = grid_2d(-2.0, 2.0, 150);
        assert_eq!(g.len(), 150);
        assert!(g.iter().all(|p| p.len() == 2));
        assert_eq!(g[0], vec![-2.0, -2.0]);
        // All points inside the box.
        assert!(g.iter().all(|p| p.iter().all(|&c| (-2.0..=2.0).contains(&c))));
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::scalar(1e-3, 10, 5, &[0.0, 1.0], 1).is_ok());
        assert!(EnsembleConfig::scalar(0.0, 10, 5, &[0.0], 1).is_err());
        assert!(EnsembleConfig::scalar(1e-3, 0, 5, &[0.0], 1).is_err());
        assert!(EnsembleConfig::scalar(1e-3, 10, 0, &[0.0], 1).is_err());
        assert!(EnsembleConfig::scalar(1e-3, 10, 5, &[], 1).is_err());
        assert!(EnsembleConfig::new(1e-3, 10, 5, vec![vec![0.0], vec![0.0, 1.0]], 1).is_err());
    }
}
