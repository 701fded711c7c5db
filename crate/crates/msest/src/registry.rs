//! Benchmark model registry: named systems with adjustable parameters,
//! default experiment sizes, and (where known) the effective drift and
//! diffusion coefficients of the coarse-grained dynamics.
//!
//! Truth values use the convention `dX = f dt + sqrt(g) dW` with
//! `f = sum drift_j x^j` and `g = sum diff_j x^j`; vector models use
//! `dX = -A X dt + Sigma^{1/2} dW` with entries `a_ij` and `sigma_ij`.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{FieldFn, ModelKind, ModelSpec, SamplerFn};
use crate::numerics::bessel_i0;
use crate::params::{diff_matrix_name, diff_param_name, drift_matrix_name, drift_param_name};
use crate::simulate::rk4_autonomous;

type ParamMap = BTreeMap<String, f64>;
type BuildFn = fn(&ParamMap) -> Result<ModelSpec>;
type TruthFn = fn(&ParamMap) -> ParamMap;

/// Default experiment shape for a registered model.
#[derive(Debug, Clone)]
pub struct ExperimentDefaults {
    pub h: f64,
    pub n: usize,
    pub paths: usize,
    pub num_ics: usize,
    pub ic_min: f64,
    pub ic_max: f64,
    pub drift_exponents: Vec<u32>,
    pub diff_exponents: Vec<u32>,
}

/// A named benchmark system.
pub struct RegisteredModel {
    name: &'static str,
    summary: &'static str,
    params: &'static [(&'static str, f64)],
    build: BuildFn,
    truth: Option<TruthFn>,
    defaults: ExperimentDefaults,
}

impl std::fmt::Debug for RegisteredModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegisteredModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}


impl RegisteredModel {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn summary(&self) -> &'static str {
        self.summary
    }

    /// Parameter names with their default values.
    pub fn param_defaults(&self) -> &'static [(&'static str, f64)] {
        self.params
    }

    pub fn defaults(&self) -> &ExperimentDefaults {
        &self.defaults
    }

    /// Whether closed-form effective coefficients are registered.
    pub fn has_truth(&self) -> bool {
        self.truth.is_some()
    }

    /// Merges overrides into the defaults, rejecting unknown names.
    pub fn resolve_params(&self, overrides: &ParamMap) -> Result<ParamMap> {
        for key in overrides.keys() {
            if !self.params.iter().any(|(n, _)| n == key) {
                return Err(Error::Config(format!(
                    "model `{}` has no parameter `{key}` (available: {})",
                    self.name,
                    self.params
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
        }
        let mut out = ParamMap::new();
        for (name, default) in self.params {
            let v = overrides.get(*name).copied().unwrap_or(*default);
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter `{name}` must be finite")));
            }
            out.insert((*name).to_string(), v);
        }
        Ok(out)
    }

    pub fn build(&self, overrides: &ParamMap) -> Result<ModelSpec> {
        let p = self.resolve_params(overrides)?;
        (self.build)(&p)
    }

    /// Effective coefficients of the coarse-grained dynamics for these
    /// parameter values, keyed by estimator output names. Entries are
    /// omitted when no closed form is known; models without any known
    /// coefficients report an error.
    pub fn effective_truth(&self, overrides: &ParamMap) -> Result<ParamMap> {
        let p = self.resolve_params(overrides)?;
        match self.truth {
            Some(f) => Ok(f(&p)),
            None => Err(Error::TruthUnavailable(format!(
                "no closed-form coefficients registered for `{}`",
                self.name
            ))),
        }
    }
}

fn pv(p: &ParamMap, key: &str) -> f64 {
    *p.get(key).expect("resolved parameter")
}

fn normal_sampler(sds: Vec<f64>) -> SamplerFn {
    Arc::new(move |rng, out| {
        for (o, sd) in out.iter_mut().zip(&sds) {
            let z: f64 = rng.sample(StandardNormal);
            *o = sd * z;
        }
    })
}

// --- single-scale scalar models ---

fn build_ou(p: &ParamMap) -> Result<ModelSpec> {
    let a = pv(p, "A");
    let sigma = pv(p, "sigma");
    if sigma <= 0.0 {
        return Err(Error::Config("sigma must be positive".into()));
    }
    ModelSpec::builder(ModelKind::SingleScaleSde, 1)
        .slow_drift(Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
            out[0] = -a * s[0];
        }) as FieldFn)
        .slow_diffusion(
            1,
            Arc::new(move |_s: &[f64], _f: &[f64], out: &mut [f64]| out[0] = sigma.sqrt()),
        )
        .build()
}

fn truth_ou(p: &ParamMap) -> ParamMap {
    let mut t = ParamMap::new();
    t.insert(drift_param_name(1), -pv(p, "A"));
    t.insert(diff_param_name(0), pv(p, "sigma"));
    t
}

fn build_landau_stuart(p: &ParamMap) -> Result<ModelSpec> {
    let a = pv(p, "A");
    let b = pv(p, "B");
    let sa = pv(p, "sigma_a");
    let sb = pv(p, "sigma_b");
    if sa <= 0.0 || sb < 0.0 {
        return Err(Error::Config("diffusion coefficients must be positive".into()));
    }
    ModelSpec::builder(ModelKind::SingleScaleSde, 1)
        .slow_drift(Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
            let x = s[0];
            out[0] = a * x - b * x * x * x;
        }) as FieldFn)
        .slow_diffusion(
            1,
            Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
                out[0] = (sa + sb * s[0] * s[0]).sqrt();
            }),
        )
        .build()
}

fn truth_landau_stuart(p: &ParamMap) -> ParamMap {
    let mut t = ParamMap::new();
    t.insert(drift_param_name(1), pv(p, "A"));
    t.insert(drift_param_name(3), -pv(p, "B"));
    t.insert(diff_param_name(0), pv(p, "sigma_a"));
    t.insert(diff_param_name(2), pv(p, "sigma_b"));
    t
}

// --- fast Ornstein-Uhlenbeck forcings ---

fn fast_ou_block(eps: f64) -> (FieldFn, FieldFn, SamplerFn) {
    let drift = Arc::new(move |_s: &[f64], f: &[f64], out: &mut [f64]| {
        out[0] = -f[0] / (eps * eps);
    }) as FieldFn;
    let diff = Arc::new(move |_s: &[f64], _f: &[f64], out: &mut [f64]| {
        out[0] = std::f64::consts::SQRT_2 / eps;
    }) as FieldFn;
    // Stationary law of the fast variable is standard normal.
    (drift, diff, normal_sampler(vec![1.0]))
}

fn build_fast_ou(p: &ParamMap) -> Result<ModelSpec> {
    let a = pv(p, "A");
    let sigma = pv(p, "sigma");
    let eps = pv(p, "epsilon");
    if sigma <= 0.0 || eps <= 0.0 {
        return Err(Error::Config("sigma and epsilon must be positive".into()));
    }
    let (fd, fg, fic) = fast_ou_block(eps);
    ModelSpec::builder(ModelKind::FastSlowSde, 1)
        .epsilon(eps)
        .slow_drift(Arc::new(move |s: &[f64], f: &[f64], out: &mut [f64]| {
            out[0] = sigma.sqrt() / eps * f[0] + a * s[0];
        }) as FieldFn)
        .fast_dim(1)
        .fast_drift(fd)
        .fast_diffusion(1, fg)
        .fast_ic_sampler(fic)
        .build()
}

fn truth_fast_ou(p: &ParamMap) -> ParamMap {
    let mut t = ParamMap::new();
    t.insert(drift_param_name(1), pv(p, "A"));
    t.insert(diff_param_name(0), 2.0 * pv(p, "sigma"));
    t
}

fn build_fast_ou_ls(p: &ParamMap) -> Result<ModelSpec> {
    let a = pv(p, "A");
    let b = pv(p, "B");
    let sa = pv(p, "sigma_a");
    let sb = pv(p, "sigma_b");
    let eps = pv(p, "epsilon");
    if sa <= 0.0 || sb < 0.0 || eps <= 0.0 {
        return Err(Error::Config("diffusion amplitudes and epsilon must be positive".into()));
    }
    let (fd, fg, fic) = fast_ou_block(eps);
    // The x-dependent noise amplitude feeds back an extra sigma_b x into
    // the effective drift; the bare drift subtracts it so the effective
    // law is exactly A x - B x^3.
    ModelSpec::builder(ModelKind::FastSlowSde, 1)
        .epsilon(eps)
        .slow_drift(Arc::new(move |s: &[f64], f: &[f64], out: &mut [f64]| {
            let x = s[0];
            out[0] =
                (sa + sb * x * x).sqrt() / eps * f[0] + (a - sb) * x - b * x * x * x;
        }) as FieldFn)
        .fast_dim(1)
        .fast_drift(fd)
        .fast_diffusion(1, fg)
        .fast_ic_sampler(fic)
        .build()
}

fn truth_fast_ou_ls(p: &ParamMap) -> ParamMap {
    let mut t = ParamMap::new();
    t.insert(drift_param_name(1), pv(p, "A"));
    t.insert(drift_param_name(3), -pv(p, "B"));
    t.insert(diff_param_name(0), 2.0 * pv(p, "sigma_a"));
    t.insert(diff_param_name(2), 2.0 * pv(p, "sigma_b"));
    t
}

// --- overdamped Langevin dynamics in rapidly oscillating potentials ---

fn build_langevin_1d(p: &ParamMap) -> Result<ModelSpec> {
    let alpha = pv(p, "alpha");
    let sigma = pv(p, "sigma");
    let eps = pv(p, "epsilon");
    if sigma <= 0.0 || eps <= 0.0 {
        return Err(Error::Config("sigma and epsilon must be positive".into()));
    }
    ModelSpec::builder(ModelKind::FastSlowSde, 1)
        .epsilon(eps)
        .slow_drift(Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
            out[0] = -alpha * s[0] + (s[0] / eps).sin() / eps;
        }) as FieldFn)
        .slow_diffusion(
            1,
            Arc::new(move |_s: &[f64], _f: &[f64], out: &mut [f64]| {
                out[0] = (2.0 * sigma).sqrt();
            }),
        )
        .build()
}

/// Homogenized mobility of a `cos` cell potential of amplitude `amp` at
/// temperature `sigma`: `1 / (I0(amp / sigma))^2`.
fn cell_mobility(amp: f64, sigma: f64) -> f64 {
    let i0 = bessel_i0(amp / sigma).expect("positive argument");
    1.0 / (i0 * i0)
}

fn truth_langevin_1d(p: &ParamMap) -> ParamMap {
    let alpha = pv(p, "alpha");
    let sigma = pv(p, "sigma");
    let k = cell_mobility(1.0, sigma);
    let mut t = ParamMap::new();
    t.insert(drift_param_name(1), -alpha * k);
    t.insert(diff_param_name(0), 2.0 * sigma * k);
    t
}

fn build_langevin_2d(p: &ParamMap) -> Result<ModelSpec> {
    let m11 = pv(p, "m11");
    let m12 = pv(p, "m12");
    let m22 = pv(p, "m22");
    let sigma = pv(p, "sigma");
    let eps = pv(p, "epsilon");
    if sigma <= 0.0 || eps <= 0.0 {
        return Err(Error::Config("sigma and epsilon must be positive".into()));
    }
    ModelSpec::builder(ModelKind::FastSlowSde, 2)
        .epsilon(eps)
        .slow_drift(Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
            out[0] = -(m11 * s[0] + m12 * s[1]) + (s[0] / eps).sin() / eps;
            out[1] = -(m12 * s[0] + m22 * s[1]) + 0.5 * (s[1] / eps).sin() / eps;
        }) as FieldFn)
        .slow_diffusion(
            2,
            Arc::new(move |_s: &[f64], _f: &[f64], out: &mut [f64]| {
                let g = (2.0 * sigma).sqrt();
                out.copy_from_slice(&[g, 0.0, 0.0, g]);
            }),
        )
        .build()
}

fn truth_langevin_2d(p: &ParamMap) -> ParamMap {
    let sigma = pv(p, "sigma");
    let k1 = cell_mobility(1.0, sigma);
    let k2 = cell_mobility(0.5, sigma);
    let mut t = ParamMap::new();
    t.insert(drift_matrix_name(0, 0), k1 * pv(p, "m11"));
    t.insert(drift_matrix_name(0, 1), k1 * pv(p, "m12"));
    t.insert(drift_matrix_name(1, 0), k2 * pv(p, "m12"));
    t.insert(drift_matrix_name(1, 1), k2 * pv(p, "m22"));
    t.insert(diff_matrix_name(0, 0), 2.0 * sigma * k1);
    t.insert(diff_matrix_name(0, 1), 0.0);
    t.insert(diff_matrix_name(1, 1), 2.0 * sigma * k2);
    t
}

// --- passive tracer in a cellular flow ---

/// Effective diffusivity `2 D` of the tracer at molecular diffusivity
/// `kappa = 0.1` (numerical reference value; no closed form exists).
const TAYLOR_GREEN_SIGMA_AT_01: f64 = 0.684;

fn build_taylor_green(p: &ParamMap) -> Result<ModelSpec> {
    let kappa = pv(p, "kappa");
    let eps = pv(p, "epsilon");
    if kappa <= 0.0 || eps <= 0.0 {
        return Err(Error::Config("kappa and epsilon must be positive".into()));
    }
    ModelSpec::builder(ModelKind::FastSlowSde, 2)
        .epsilon(eps)
        .slow_drift(Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
            let y1 = s[0] / eps;
            let y2 = s[1] / eps;
            out[0] = -y1.sin() * y2.cos() / eps;
            out[1] = y1.cos() * y2.sin() / eps;
        }) as FieldFn)
        .slow_diffusion(
            2,
            Arc::new(move |_s: &[f64], _f: &[f64], out: &mut [f64]| {
                let g = (2.0 * kappa).sqrt();
                out.copy_from_slice(&[g, 0.0, 0.0, g]);
            }),
        )
        .build()
}

fn truth_taylor_green(p: &ParamMap) -> ParamMap {
    let mut t = ParamMap::new();
    t.insert(drift_matrix_name(0, 0), 0.0);
    t.insert(drift_matrix_name(0, 1), 0.0);
    t.insert(drift_matrix_name(1, 0), 0.0);
    t.insert(drift_matrix_name(1, 1), 0.0);
    if (pv(p, "kappa") - 0.1).abs() < 1e-12 {
        t.insert(diff_matrix_name(0, 0), TAYLOR_GREEN_SIGMA_AT_01);
        t.insert(diff_matrix_name(0, 1), 0.0);
        t.insert(diff_matrix_name(1, 1), TAYLOR_GREEN_SIGMA_AT_01);
    }
    t
}

// --- Galerkin-truncated advection model ---

fn build_trunc_burgers(p: &ParamMap) -> Result<ModelSpec> {
    let nu = pv(p, "nu");
    let q1 = pv(p, "q1");
    let q2 = pv(p, "q2");
    let eps = pv(p, "epsilon");
    if q1 <= 0.0 || q2 <= 0.0 || eps <= 0.0 {
        return Err(Error::Config("q1, q2, epsilon must be positive".into()));
    }
    // Stationary spreads of the leading-order fast modes.
    let sd1 = q1 / 6f64.sqrt();
    let sd2 = q2 / 4.0;
    ModelSpec::builder(ModelKind::FastSlowSde, 1)
        .epsilon(eps)
        .slow_drift(Arc::new(move |s: &[f64], f: &[f64], out: &mut [f64]| {
            let x = s[0];
            out[0] = nu * x - (x * f[0] + f[0] * f[1]) / (2.0 * eps);
        }) as FieldFn)
        .fast_dim(2)
        .fast_drift(Arc::new(move |s: &[f64], f: &[f64], out: &mut [f64]| {
            let x = s[0];
            let (y1, y2) = (f[0], f[1]);
            out[0] = nu * y1 - 3.0 * y1 / (eps * eps) - (2.0 * x * y2 - x * x) / (2.0 * eps);
            out[1] = nu * y2 - 8.0 * y2 / (eps * eps) + 3.0 * x * y1 / (2.0 * eps);
        }) as FieldFn)
        .fast_diffusion(
            2,
            Arc::new(move |_s: &[f64], _f: &[f64], out: &mut [f64]| {
                out.copy_from_slice(&[q1 / eps, 0.0, 0.0, q2 / eps]);
            }),
        )
        .fast_ic_sampler(normal_sampler(vec![sd1, sd2]))
        .build()
}

fn truth_trunc_burgers(p: &ParamMap) -> ParamMap {
    let nu = pv(p, "nu");
    let q1 = pv(p, "q1");
    let q2 = pv(p, "q2");
    let mut t = ParamMap::new();
    t.insert(drift_param_name(1), nu + q1 * q1 / 396.0 + q2 * q2 / 352.0);
    t.insert(drift_param_name(3), -1.0 / 12.0);
    t.insert(diff_param_name(0), q1 * q1 * q2 * q2 / 2112.0);
    t.insert(diff_param_name(2), q1 * q1 / 36.0);
    t
}

// --- deterministic chaotic forcing ---

fn lorenz_fast_field(y: &[f64], out: &mut [f64]) {
    out[0] = 10.0 * (y[1] - y[0]);
    out[1] = 28.0 * y[0] - y[1] - y[0] * y[2];
    out[2] = y[0] * y[1] - 8.0 / 3.0 * y[2];
}

fn build_lorenz(p: &ParamMap) -> Result<ModelSpec> {
    let nu = pv(p, "nu");
    let lambda = pv(p, "lambda");
    let eps = pv(p, "epsilon");
    if eps <= 0.0 {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    let eps2 = eps * eps;
    let sampler: SamplerFn = Arc::new(move |rng, out| {
        // Start near the attractor: jitter around (1, 1, 1), then run the
        // uncoupled fast system for 10 fast time units.
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o = 1.0 + 0.1 * z;
        }
        rk4_autonomous(lorenz_fast_field, out, 0.01, 1000);
    });
    ModelSpec::builder(ModelKind::FastSlowOde, 1)
        .epsilon(eps)
        .slow_drift(Arc::new(move |s: &[f64], f: &[f64], out: &mut [f64]| {
            let x = s[0];
            out[0] = x - x * x * x + lambda / eps * (1.0 + nu * x * x) * f[1];
        }) as FieldFn)
        .fast_dim(3)
        .fast_drift(Arc::new(move |_s: &[f64], f: &[f64], out: &mut [f64]| {
            lorenz_fast_field(f, out);
            for o in out.iter_mut() {
                *o /= eps2;
            }
        }) as FieldFn)
        .fast_ic_sampler(sampler)
        .default_substep(eps2 * 1e-2)
        .build()
}

fn truth_lorenz(p: &ParamMap) -> ParamMap {
    let mut t = ParamMap::new();
    if pv(p, "nu") == 0.0 {
        // Additive forcing leaves the bistable drift untouched.
        t.insert(drift_param_name(1), 1.0);
        t.insert(drift_param_name(3), -1.0);
    } else {
        // Multiplicative forcing shifts the cubic coefficients, but no
        // quintic term appears.
        t.insert(drift_param_name(5), 0.0);
    }
    t
}

const LORENZ_DEFAULT_EPSILON: f64 = 0.031622776601683794;

fn registry() -> &'static Vec<RegisteredModel> {
    static REG: OnceLock<Vec<RegisteredModel>> = OnceLock::new();
    REG.get_or_init(|| {
        vec![
            RegisteredModel {
                name: "ou",
                summary: "linear mean reversion with constant noise",
                params: &[("A", 0.5), ("sigma", 0.5)],
                build: build_ou,
                truth: Some(truth_ou),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 1000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![1],
                    diff_exponents: vec![0],
                },
            },
            RegisteredModel {
                name: "landau_stuart",
                summary: "bistable cubic drift with quadratic noise amplitude",
                params: &[("A", 3.0), ("B", 2.0), ("sigma_a", 1.5), ("sigma_b", 1.3)],
                build: build_landau_stuart,
                truth: Some(truth_landau_stuart),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 1000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![1, 3],
                    diff_exponents: vec![0, 2],
                },
            },
            RegisteredModel {
                name: "fast_ou",
                summary: "linear slow variable forced by a fast Ornstein-Uhlenbeck mode",
                params: &[("A", -0.5), ("sigma", 0.5), ("epsilon", 0.1)],
                build: build_fast_ou,
                truth: Some(truth_fast_ou),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 2000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![1],
                    diff_exponents: vec![0],
                },
            },
            RegisteredModel {
                name: "fast_ou_ls",
                summary: "cubic slow variable with state-dependent fast forcing",
                params: &[
                    ("A", 1.0),
                    ("B", 2.0),
                    ("sigma_a", 0.81),
                    ("sigma_b", 0.49),
                    ("epsilon", 0.1),
                ],
                build: build_fast_ou_ls,
                truth: Some(truth_fast_ou_ls),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 2000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![1, 3],
                    diff_exponents: vec![0, 2],
                },
            },
            RegisteredModel {
                name: "langevin_1d",
                summary: "mean-reverting diffusion in a rapidly oscillating potential",
                params: &[("alpha", 1.0), ("sigma", 0.5), ("epsilon", 0.1)],
                build: build_langevin_1d,
                truth: Some(truth_langevin_1d),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    // The initial layer of the two-scale potential decays
                    // like 1/t in the diffusion estimate; t = 6 puts it
                    // well below the headline tolerance.
                    n: 6000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![1],
                    diff_exponents: vec![0],
                },
            },
            RegisteredModel {
                name: "langevin_2d",
                summary: "planar linear drift in a separable oscillating potential",
                params: &[
                    ("m11", 2.0),
                    ("m12", 2.0),
                    ("m22", 3.0),
                    ("sigma", 1.5),
                    ("epsilon", 0.1),
                ],
                build: build_langevin_2d,
                truth: Some(truth_langevin_2d),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 1000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![],
                    diff_exponents: vec![],
                },
            },
            RegisteredModel {
                name: "taylor_green",
                summary: "passive tracer in a cellular flow",
                params: &[("kappa", 0.1), ("epsilon", 0.1)],
                build: build_taylor_green,
                truth: Some(truth_taylor_green),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 1000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![],
                    diff_exponents: vec![],
                },
            },
            RegisteredModel {
                name: "trunc_burgers",
                summary: "leading mode of a truncated stochastic advection equation",
                params: &[("nu", 1.0), ("q1", 1.0), ("q2", 1.0), ("epsilon", 0.1)],
                build: build_trunc_burgers,
                truth: Some(truth_trunc_burgers),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 2000,
                    paths: 5000,
                    num_ics: 150,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![1, 3],
                    diff_exponents: vec![0, 2],
                },
            },
            RegisteredModel {
                name: "lorenz_chaotic",
                summary: "bistable slow variable driven by a chaotic fast subsystem",
                params: &[
                    ("nu", 0.0),
                    ("lambda", 2.0 / 45.0),
                    ("epsilon", LORENZ_DEFAULT_EPSILON),
                ],
                build: build_lorenz,
                truth: Some(truth_lorenz),
                defaults: ExperimentDefaults {
                    h: 1e-3,
                    n: 2000,
                    paths: 500,
                    num_ics: 50,
                    ic_min: -2.0,
                    ic_max: 2.0,
                    drift_exponents: vec![1, 3],
                    diff_exponents: vec![0],
                },
            },
        ]
    })
}

/// All registered model names, in registry order.
pub fn model_names() -> Vec<&'static str> {
    registry().iter().map(|m| m.name).collect()
}

/// Finds a model by name.
pub fn lookup(name: &str) -> Result<&'static RegisteredModel> {
    registry()
        .iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::UnknownModel {
            name: name.to_string(),
            available: model_names().join(", "),
        })
}
