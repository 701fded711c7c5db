//! Model specifications: the systems trajectories are generated from.
//!
//! A model is a slow block, optionally coupled to a fast block, each with
//! drift and diffusion evaluated blockwise. Scale separation enters only
//! through the model's own coefficient functions (any `1/eps` factors are
//! baked into the closures when the model is built), so the integrators
//! stay generic.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Drift or diffusion evaluator: `(slow, fast, out)`. For diffusion, `out`
/// is the row-major `dim x noise_dim` block matrix.
pub type FieldFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Samples the fast-block initial condition for one trajectory.
pub type SamplerFn = Arc<dyn Fn(&mut ChaCha8Rng, &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// One block, no scale parameter.
    SingleScaleSde,
    /// Slow/fast SDE with scale parameter `eps`.
    FastSlowSde,
    /// Deterministic slow/fast system (no noise anywhere); integrated with
    /// substepped RK4 instead of Euler-Maruyama.
    FastSlowOde,
}

#[derive(Clone)]
pub struct ModelSpec {
    kind: ModelKind,
    slow_dim: usize,
    fast_dim: usize,
    epsilon: Option<f64>,
    slow_noise_dim: usize,
    fast_noise_dim: usize,
    slow_drift: FieldFn,
    slow_diffusion: Option<FieldFn>,
    fast_drift: Option<FieldFn>,
    fast_diffusion: Option<FieldFn>,
    fast_ic_sampler: Option<SamplerFn>,
    default_substep: Option<f64>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("kind", &self.kind)
            .field("slow_dim", &self.slow_dim)
            .field("fast_dim", &self.fast_dim)
            .field("epsilon", &self.epsilon)
            .field("slow_noise_dim", &self.slow_noise_dim)
            .field("fast_noise_dim", &self.fast_noise_dim)
            .finish()
    }
}

impl ModelSpec {
    pub fn builder(kind: ModelKind, slow_dim: usize) -> ModelSpecBuilder {
        ModelSpecBuilder {
            kind,
            slow_dim,
            fast_dim: 0,
            epsilon: None,
            slow_noise_dim: 0,
            fast_noise_dim: 0,
            slow_drift: None,
            slow_diffusion: None,
            fast_drift: None,
            fast_diffusion: None,
            fast_ic_sampler: None,
            default_substep: None,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn slow_dim(&self) -> usize {
        self.slow_dim
    }

    pub fn fast_dim(&self) -> usize {
        self.fast_dim
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn slow_noise_dim(&self) -> usize {
        self.slow_noise_dim
    }

    pub fn fast_noise_dim(&self) -> usize {
        self.fast_noise_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.slow_noise_dim + self.fast_noise_dim
    }

    pub fn state_dim(&self) -> usize {
        self.slow_dim + self.fast_dim
    }

    /// Default RK4 substep for deterministic fast/slow systems.
    pub fn default_substep(&self) -> Option<f64> {
        self.default_substep
    }

    #[inline]
    pub fn eval_slow_drift(&self, slow: &[f64], fast: &[f64], out: &mut [f64]) {
        (self.slow_drift)(slow, fast, out);
    }

    #[inline]
    pub fn eval_slow_diffusion(&self, slow: &[f64], fast: &[f64], out: &mut [f64]) {
        if let Some(g) = &self.slow_diffusion {
            g(slow, fast, out);
        }
    }

    #[inline]
    pub fn eval_fast_drift(&self, slow: &[f64], fast: &[f64], out: &mut [f64]) {
        if let Some(g) = &self.fast_drift {
            g(slow, fast, out);
        }
    }

    #[inline]
    pub fn eval_fast_diffusion(&self, slow: &[f64], fast: &[f64], out: &mut [f64]) {
        if let Some(g) = &self.fast_diffusion {
            g(slow, fast, out);
        }
    }

    /// Draws the fast-block initial condition into `out`.
    pub fn sample_fast_ic(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        if let Some(s) = &self.fast_ic_sampler {
            s(rng, out);
        }
    }
}

pub struct ModelSpecBuilder {
    kind: ModelKind,
    slow_dim: usize,
    fast_dim: usize,
    epsilon: Option<f64>,
    slow_noise_dim: usize,
    fast_noise_dim: usize,
    slow_drift: Option<FieldFn>,
    slow_diffusion: Option<FieldFn>,
    fast_drift: Option<FieldFn>,
    fast_diffusion: Option<FieldFn>,
    fast_ic_sampler: Option<SamplerFn>,
    default_substep: Option<f64>,
}

impl ModelSpecBuilder {
    pub fn epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn fast_dim(mut self, dim: usize) -> Self {
        self.fast_dim = dim;
        self
    }

    pub fn slow_drift(mut self, f: FieldFn) -> Self {
        self.slow_drift = Some(f);
        self
    }

    pub fn slow_diffusion(mut self, noise_dim: usize, g: FieldFn) -> Self {
        self.slow_noise_dim = noise_dim;
        self.slow_diffusion = Some(g);
        self
    }

    pub fn fast_drift(mut self, f: FieldFn) -> Self {
        self.fast_drift = Some(f);
        self
    }

    pub fn fast_diffusion(mut self, noise_dim: usize, g: FieldFn) -> Self {
        self.fast_noise_dim = noise_dim;
        self.fast_diffusion = Some(g);
        self
    }

    pub fn fast_ic_sampler(mut self, s: SamplerFn) -> Self {
        self.fast_ic_sampler = Some(s);
        self
    }

    pub fn default_substep(mut self, h_int: f64) -> Self {
        self.default_substep = Some(h_int);
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        if self.slow_dim == 0 {
            return Err(Error::InvalidInput("slow block must be nonempty".into()));
        }
        let slow_drift = self
            .slow_drift
            .ok_or_else(|| Error::InvalidInput("slow drift is required".into()))?;
        match self.kind {
            ModelKind::SingleScaleSde => {
                if self.fast_dim != 0 {
                    return Err(Error::InvalidInput(
                        "single-scale model cannot have a fast block".into(),
                    ));
                }
                if self.epsilon.is_some() {
                    return Err(Error::InvalidInput(
                        "single-scale model takes no scale parameter".into(),
                    ));
                }
            }
            ModelKind::FastSlowSde | ModelKind::FastSlowOde => {
                match self.epsilon {
                    Some(e) if e > 0.0 => {}
                    _ => {
                        return Err(Error::InvalidInput(
                            "fast/slow model needs a positive scale parameter".into(),
                        ))
                    }
                }
                if self.kind == ModelKind::FastSlowOde
                    && (self.slow_noise_dim != 0 || self.fast_noise_dim != 0)
                {
                    return Err(Error::InvalidInput(
                        "deterministic fast/slow model cannot carry noise".into(),
                    ));
                }
            }
        }
        if self.fast_dim > 0 && self.fast_drift.is_none() {
            return Err(Error::InvalidInput("fast block needs a drift".into()));
        }
        if self.fast_dim > 0 && self.fast_ic_sampler.is_none() {
            return Err(Error::InvalidInput(
                "fast block needs an initial-condition sampler".into(),
            ));
        }
        if self.fast_noise_dim > 0 && self.fast_dim == 0 {
            return Err(Error::InvalidInput("fast noise without fast block".into()));
        }
        Ok(ModelSpec {
            kind: self.kind,
            slow_dim: self.slow_dim,
            fast_dim: self.fast_dim,
            epsilon: self.epsilon,
            slow_noise_dim: self.slow_noise_dim,
            fast_noise_dim: self.fast_noise_dim,
            slow_drift,
            slow_diffusion: self.slow_diffusion,
            fast_drift: self.fast_drift,
            fast_diffusion: self.fast_diffusion,
            fast_ic_sampler: self.fast_ic_sampler,
            default_substep: self.default_substep,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noop() -> FieldFn {
        Arc::new(|_s: &[f64], _f: &[f64], out: &mut [f64]| out.fill(0.0))
    }

    #[test]
    fn single_scale_rejects_fast_block_and_epsilon() {
        assert!(ModelSpec::builder(ModelKind::SingleScaleSde, 1)
            .slow_drift(noop())
            .fast_dim(1)
            .build()
            .is_err());
        assert!(ModelSpec::builder(ModelKind::SingleScaleSde, 1)
            .slow_drift(noop())
            .epsilon(0.1)
            .build()
            .is_err());
    }

    #[test]
    fn fast_slow_requires_positive_epsilon() {
        assert!(ModelSpec::builder(ModelKind::FastSlowSde, 1)
            .slow_drift(noop())
            .build()
            .is_err());
        assert!(ModelSpec::builder(ModelKind::FastSlowSde, 1)
            .slow_drift(noop())
            .epsilon(-1.0)
            .build()
            .is_err());
    }

    #[test]
    fn deterministic_kind_rejects_noise() {
        let r = ModelSpec::builder(ModelKind::FastSlowOde, 1)
            .epsilon(0.1)
            .slow_drift(noop())
            .slow_diffusion(1, noop())
            .build();
        assert!(r.is_err());
    }

    #[test]
    fn fast_block_needs_drift_and_sampler() {
        let r = ModelSpec::builder(ModelKind::FastSlowSde, 1)
            .epsilon(0.1)
            .slow_drift(noop())
            .fast_dim(1)
            .build();
        assert!(r.is_err());
    }

    #[test]
    fn valid_fast_slow_builds() {
        let m = ModelSpec::builder(ModelKind::FastSlowSde, 1)
            .epsilon(0.1)
            .slow_drift(noop())
            .fast_dim(1)
            .fast_drift(noop())
            .fast_diffusion(1, noop())
            .fast_ic_sampler(Arc::new(|_rng, out| out.fill(0.0)))
            .build()
            .unwrap();
        assert_eq!(m.state_dim(), 2);
        assert_eq!(m.noise_dim(), 1);
    }
}
