//! Trajectory generation and streaming moment accumulation.
//!
//! Stochastic systems advance with Euler-Maruyama at the observation step
//! `h`; deterministic fast/slow systems advance with classical RK4 using
//! substeps well below the fast time scale. Ensembles stream through
//! [`generate_moment_table`]: per-path data is folded into moment sums on
//! the fly and discarded, so memory stays at `O(m n)` regardless of path
//! count.
//!
//! Reproducibility contract: every `(ic, path)` pair draws from its own
//! counter-derived generator (see [`crate::rng`]), paths are accumulated
//! in fixed chunks in ascending path order, and chunks merge in ascending
//! order. Results are bit-identical across runs and across worker counts.

use rayon::prelude::*;

use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::moments::{
    finalize_scalar, finalize_vector, MomentTable, ScalarAccum, ScalarMomentTable, VectorAccum,
    VectorMomentTable,
};
use crate::rng::trajectory_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Paths per accumulation chunk. Fixed so the reduction tree does not
/// depend on the number of workers.
const PATH_CHUNK: usize = 256;

/// One recorded trajectory of a scalar slow variable: `n + 1` samples on
/// the uniform grid `t_k = k h`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStream {
    h: f64,
    values: Vec<f64>,
}

impl TrajectoryStream {
    pub fn new(h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput("step must be positive".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two samples".into()));
        }
        Ok(Self { h, values })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of steps (samples minus one).
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Scratch space reused across steps and paths.
struct StepBufs {
    dslow: Vec<f64>,
    dfast: Vec<f64>,
    gslow: Vec<f64>,
    gfast: Vec<f64>,
}

impl StepBufs {
    fn new(model: &ModelSpec) -> Self {
        Self {
            dslow: vec![0.0; model.slow_dim()],
            dfast: vec![0.0; model.fast_dim()],
            gslow: vec![0.0; model.slow_dim() * model.slow_noise_dim()],
            gfast: vec![0.0; model.fast_dim() * model.fast_noise_dim()],
        }
    }
}

/// One Euler-Maruyama update in place. `z_slow`/`z_fast` are standard
/// normal draws; the `sqrt(h)` scaling happens here.
fn em_advance(
    model: &ModelSpec,
    slow: &mut [f64],
    fast: &mut [f64],
    h: f64,
    z_slow: &[f64],
    z_fast: &[f64],
    bufs: &mut StepBufs,
) {
    let sqrt_h = h.sqrt();
    model.eval_slow_drift(slow, fast, &mut bufs.dslow);
    if model.fast_dim() > 0 {
        model.eval_fast_drift(slow, fast, &mut bufs.dfast);
    }
    if model.slow_noise_dim() > 0 {
        model.eval_slow_diffusion(slow, fast, &mut bufs.gslow);
    }
    if model.fast_noise_dim() > 0 {
        model.eval_fast_diffusion(slow, fast, &mut bufs.gfast);
    }

    let ns = model.slow_noise_dim();
    for i in 0..slow.len() {
        let mut v = slow[i] + h * bufs.dslow[i];
        for j in 0..ns {
            v += sqrt_h * bufs.gslow[i * ns + j] * z_slow[j];
        }
        slow[i] = v;
    }
    let nf = model.fast_noise_dim();
    for i in 0..fast.len() {
        let mut v = fast[i] + h * bufs.dfast[i];
        for j in 0..nf {
            v += sqrt_h * bufs.gfast[i * nf + j] * z_fast[j];
        }
        fast[i] = v;
    }
}

/// Classical RK4 update of the coupled deterministic field, in place,
/// split into `ceil(h / h_int)` substeps.
fn rk4_advance(
    model: &ModelSpec,
    slow: &mut [f64],
    fast: &mut [f64],
    h: f64,
    h_int: f64,
    work: &mut Rk4Bufs,
) {
    let nsub = (h / h_int).ceil().max(1.0) as usize;
    let hs = h / nsub as f64;
    for _ in 0..nsub {
        rk4_single(model, slow, fast, hs, work);
    }
}

struct Rk4Bufs {
    k1s: Vec<f64>,
    k1f: Vec<f64>,
    k2s: Vec<f64>,
    k2f: Vec<f64>,
    k3s: Vec<f64>,
    k3f: Vec<f64>,
    k4s: Vec<f64>,
    k4f: Vec<f64>,
    ts: Vec<f64>,
    tf: Vec<f64>,
}

impl Rk4Bufs {
    fn new(model: &ModelSpec) -> Self {
        let ds = model.slow_dim();
        let df = model.fast_dim();
        Self {
            k1s: vec![0.0; ds],
            k1f: vec![0.0; df],
            k2s: vec![0.0; ds],
            k2f: vec![0.0; df],
            k3s: vec![0.0; ds],
            k3f: vec![0.0; df],
            k4s: vec![0.0; ds],
            k4f: vec![0.0; df],
            ts: vec![0.0; ds],
            tf: vec![0.0; df],
        }
    }
}

fn rk4_single(model: &ModelSpec, slow: &mut [f64], fast: &mut [f64], hs: f64, w: &mut Rk4Bufs) {
    let eval = |s: &[f64], f: &[f64], os: &mut [f64], of: &mut [f64]| {
        model.eval_slow_drift(s, f, os);
        if !f.is_empty() {
            model.eval_fast_drift(s, f, of);
        }
    };
    let shift = |base_s: &[f64],
                 base_f: &[f64],
                 ks: &[f64],
                 kf: &[f64],
                 c: f64,
                 os: &mut [f64],
                 of: &mut [f64]| {
        for i in 0..base_s.len() {
            os[i] = base_s[i] + c * ks[i];
        }
        for i in 0..base_f.len() {
            of[i] = base_f[i] + c * kf[i];
        }
    };

    eval(slow, fast, &mut w.k1s, &mut w.k1f);
    shift(slow, fast, &w.k1s, &w.k1f, 0.5 * hs, &mut w.ts, &mut w.tf);
    eval(&w.ts, &w.tf, &mut w.k2s, &mut w.k2f);
    shift(slow, fast, &w.k2s, &w.k2f, 0.5 * hs, &mut w.ts, &mut w.tf);
    eval(&w.ts, &w.tf, &mut w.k3s, &mut w.k3f);
    shift(slow, fast, &w.k3s, &w.k3f, hs, &mut w.ts, &mut w.tf);
    eval(&w.ts, &w.tf, &mut w.k4s, &mut w.k4f);

    let c = hs / 6.0;
    for i in 0..slow.len() {
        slow[i] += c * (w.k1s[i] + 2.0 * w.k2s[i] + 2.0 * w.k3s[i] + w.k4s[i]);
    }
    for i in 0..fast.len() {
        fast[i] += c * (w.k1f[i] + 2.0 * w.k2f[i] + 2.0 * w.k3f[i] + w.k4f[i]);
    }
}

/// Single Euler-Maruyama step of the full state `[slow | fast]` with
/// standard normal draws `[z_slow | z_fast]`.
pub fn em_step(model: &ModelSpec, state: &[f64], h: f64, noise: &[f64]) -> Result<Vec<f64>> {
    if state.len() != model.state_dim() {
        return Err(Error::InvalidInput(format!(
            "state has {} entries, model expects {}",
            state.len(),
            model.state_dim()
        )));
    }
    if noise.len() != model.noise_dim() {
        return Err(Error::InvalidInput(format!(
            "noise has {} entries, model expects {}",
            noise.len(),
            model.noise_dim()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let mut slow = state[..model.slow_dim()].to_vec();
    let mut fast = state[model.slow_dim()..].to_vec();
    let mut bufs = StepBufs::new(model);
    let (z_slow, z_fast) = noise.split_at(model.slow_noise_dim());
    em_advance(model, &mut slow, &mut fast, h, z_slow, z_fast, &mut bufs);
    if !slow.iter().chain(fast.iter()).all(|v| v.is_finite()) {
        return Err(Error::IntegrationDiverged { ic: 0, path: 0, step: 0 });
    }
    slow.extend_from_slice(&fast);
    Ok(slow)
}

/// Advances the full state of a deterministic system by `h` using RK4
/// substeps of size at most `h_int`.
pub fn rk4_substep_integrate(
    model: &ModelSpec,
    state: &[f64],
    h: f64,
    h_int: f64,
) -> Result<Vec<f64>> {
    if model.noise_dim() != 0 {
        return Err(Error::InvalidInput(
            "RK4 integration applies to deterministic systems only".into(),
        ));
    }
    if state.len() != model.state_dim() {
        return Err(Error::InvalidInput(format!(
            "state has {} entries, model expects {}",
            state.len(),
            model.state_dim()
        )));
    }
    if !(h > 0.0) || !(h_int > 0.0) {
        return Err(Error::InvalidInput("steps must be positive".into()));
    }
    let mut slow = state[..model.slow_dim()].to_vec();
    let mut fast = state[model.slow_dim()..].to_vec();
    let mut work = Rk4Bufs::new(model);
    rk4_advance(model, &mut slow, &mut fast, h, h_int, &mut work);
    if !slow.iter().chain(fast.iter()).all(|v| v.is_finite()) {
        return Err(Error::IntegrationDiverged { ic: 0, path: 0, step: 0 });
    }
    slow.extend_from_slice(&fast);
    Ok(slow)
}

/// Classical RK4 for an autonomous field given as a closure; used by
/// fast-block initializers that need a private burn-in integration.
pub fn rk4_autonomous(
    field: impl Fn(&[f64], &mut [f64]),
    state: &mut [f64],
    dt: f64,
    steps: usize,
) {
    let d = state.len();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for _ in 0..steps {
        field(state, &mut k1);
        for i in 0..d {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        field(&tmp, &mut k2);
        for i in 0..d {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        field(&tmp, &mut k3);
        for i in 0..d {
            tmp[i] = state[i] + dt * k3[i];
        }
        field(&tmp, &mut k4);
        for i in 0..d {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// Integrator dispatch per path step.
enum Stepper {
    Em,
    Rk4 { h_int: f64 },
}

struct PathEngine<'m> {
    model: &'m ModelSpec,
    stepper: Stepper,
    bufs: StepBufs,
    rk4: Rk4Bufs,
    z_slow: Vec<f64>,
    z_fast: Vec<f64>,
}

impl<'m> PathEngine<'m> {
    fn new(model: &'m ModelSpec, cfg: &EnsembleConfig) -> Self {
        let stepper = match model.kind() {
            ModelKind::FastSlowOde => {
                let h_int = cfg
                    .ode_substep
                    .or(model.default_substep())
                    .unwrap_or(cfg.h);
                Stepper::Rk4 { h_int }
            }
            _ => Stepper::Em,
        };
        Self {
            model,
            stepper,
            bufs: StepBufs::new(model),
            rk4: Rk4Bufs::new(model),
            z_slow: vec![0.0; model.slow_noise_dim()],
            z_fast: vec![0.0; model.fast_noise_dim()],
        }
    }

    /// Advances `(slow, fast)` by one observation step, drawing noise from
    /// `rng` in the contract order (slow block first).
    #[inline]
    fn step(&mut self, slow: &mut [f64], fast: &mut [f64], h: f64, rng: &mut ChaCha8Rng) {
        match self.stepper {
            Stepper::Em => {
                for z in self.z_slow.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                for z in self.z_fast.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                em_advance(self.model, slow, fast, h, &self.z_slow, &self.z_fast, &mut self.bufs);
            }
            Stepper::Rk4 { h_int } => {
                rk4_advance(self.model, slow, fast, h, h_int, &mut self.rk4);
            }
        }
    }
}

fn all_finite(slow: &[f64], fast: &[f64]) -> bool {
    slow.iter().all(|v| v.is_finite()) && fast.iter().all(|v| v.is_finite())
}

/// Simulates one path of a scalar slow variable and records it; the
/// `(ic_index, path_index)` pair fixes the random stream exactly as in
/// ensemble generation.
pub fn generate_path(
    model: &ModelSpec,
    ic: f64,
    h: f64,
    n: usize,
    master_seed: u64,
    ic_index: usize,
    path_index: usize,
) -> Result<TrajectoryStream> {
    if model.slow_dim() != 1 {
        return Err(Error::InvalidInput(
            "path recording applies to scalar slow variables".into(),
        ));
    }
    let cfg = EnsembleConfig::scalar(h, n, 1, &[ic], master_seed)?;
    let mut engine = PathEngine::new(model, &cfg);
    let mut rng = trajectory_rng(master_seed, ic_index, path_index);
    let mut slow = vec![ic];
    let mut fast = vec![0.0; model.fast_dim()];
    model.sample_fast_ic(&mut rng, &mut fast);
    let mut values = Vec::with_capacity(n + 1);
    values.push(ic);
    for step in 1..=n {
        engine.step(&mut slow, &mut fast, h, &mut rng);
        if !all_finite(&slow, &fast) {
            return Err(Error::IntegrationDiverged { ic: ic_index, path: path_index, step });
        }
        values.push(slow[0]);
    }
    TrajectoryStream::new(h, values)
}

/// Streams an ensemble into a moment table.
///
/// `exponents` lists the moments to track (must include 1 and 2; exponent
/// 0 is implied where needed); `resid_exponents` lists the drift monomials
/// whose path quadrature statistics are retained for the diffusion step.
/// Vector slow blocks track componentwise statistics instead and ignore
/// both lists.
pub fn generate_moment_table(
    model: &ModelSpec,
    cfg: &EnsembleConfig,
    exponents: &[u32],
    resid_exponents: &[u32],
) -> Result<MomentTable> {
    if model.slow_dim() == 1 {
        Ok(MomentTable::Scalar(scalar_moment_table(model, cfg, exponents, resid_exponents)?))
    } else {
        Ok(MomentTable::Vector(vector_moment_table(model, cfg)?))
    }
}

/// Scalar-case ensemble driver.
pub fn scalar_moment_table(
    model: &ModelSpec,
    cfg: &EnsembleConfig,
    exponents: &[u32],
    resid_exponents: &[u32],
) -> Result<ScalarMomentTable> {
    cfg.validate()?;
    if model.slow_dim() != 1 {
        return Err(Error::InvalidInput("scalar table needs a scalar slow block".into()));
    }
    if cfg.ic_dim() != 1 {
        return Err(Error::InvalidInput(
            "initial conditions must be scalar for this model".into(),
        ));
    }
    let mut exps: Vec<u32> = exponents.to_vec();
    exps.sort_unstable();
    exps.dedup();
    if !exps.contains(&1) || !exps.contains(&2) {
        return Err(Error::InvalidInput(
            "tracked exponents must include 1 and 2".into(),
        ));
    }
    let mut resid: Vec<u32> = resid_exponents.to_vec();
    resid.sort_unstable();
    resid.dedup();

    let rows = cfg.n + 1;
    let max_exp = exps
        .iter()
        .chain(resid.iter())
        .copied()
        .max()
        .unwrap_or(1) as usize;
    let resid_idx: Vec<usize> = resid.iter().map(|&e| e as usize).collect();

    let accums: Vec<ScalarAccum> = cfg
        .ics
        .par_iter()
        .enumerate()
        .map(|(ic_index, ic)| -> Result<ScalarAccum> {
            let chunk_bounds: Vec<(usize, usize)> = (0..cfg.paths)
                .step_by(PATH_CHUNK)
                .map(|s| (s, (s + PATH_CHUNK).min(cfg.paths)))
                .collect();
            let partials: Vec<ScalarAccum> = chunk_bounds
                .into_par_iter()
                .map(|(start, end)| -> Result<ScalarAccum> {
                    let mut acc = ScalarAccum::new(rows, exps.len(), resid.len());
                    let mut engine = PathEngine::new(model, cfg);
                    let mut pows = vec![0.0; max_exp + 1];
                    let mut quads = vec![0.0; resid.len()];
                    let mut prev = vec![0.0; resid.len()];
                    let mut fast = vec![0.0; model.fast_dim()];
                    for path in start..end {
                        let mut rng = trajectory_rng(cfg.master_seed, ic_index, path);
                        let mut slow = vec![ic[0]];
                        model.sample_fast_ic(&mut rng, &mut fast);
                        fill_powers(ic[0], &mut pows);
                        quads.fill(0.0);
                        for step in 1..=cfg.n {
                            for (p, &e) in resid_idx.iter().enumerate() {
                                prev[p] = pows[e];
                            }
                            engine.step(&mut slow, &mut fast, cfg.h, &mut rng);
                            if !all_finite(&slow, &fast) {
                                return Err(Error::IntegrationDiverged {
                                    ic: ic_index,
                                    path,
                                    step,
                                });
                            }
                            fill_powers(slow[0], &mut pows);
                            for (p, &e) in resid_idx.iter().enumerate() {
                                quads[p] += 0.5 * cfg.h * (prev[p] + pows[e]);
                            }
                            acc.record(step, &exps, &pows, &quads);
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total = ScalarAccum::new(rows, exps.len(), resid.len());
            for p in &partials {
                total.merge(p);
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;

    let ics: Vec<f64> = cfg.ics.iter().map(|v| v[0]).collect();
    Ok(finalize_scalar(cfg.h, cfg.n, cfg.paths, ics, exps, resid, accums))
}

/// Vector-case ensemble driver (componentwise statistics for the linear
/// matrix model).
pub fn vector_moment_table(model: &ModelSpec, cfg: &EnsembleConfig) -> Result<VectorMomentTable> {
    cfg.validate()?;
    let d = model.slow_dim();
    if d < 2 {
        return Err(Error::InvalidInput("vector table needs slow dimension >= 2".into()));
    }
    if cfg.ic_dim() != d {
        return Err(Error::InvalidInput(format!(
            "initial conditions have dimension {}, model expects {d}",
            cfg.ic_dim()
        )));
    }
    let rows = cfg.n + 1;

    let accums: Vec<VectorAccum> = cfg
        .ics
        .par_iter()
        .enumerate()
        .map(|(ic_index, ic)| -> Result<VectorAccum> {
            let chunk_bounds: Vec<(usize, usize)> = (0..cfg.paths)
                .step_by(PATH_CHUNK)
                .map(|s| (s, (s + PATH_CHUNK).min(cfg.paths)))
                .collect();
            let partials: Vec<VectorAccum> = chunk_bounds
                .into_par_iter()
                .map(|(start, end)| -> Result<VectorAccum> {
                    let mut acc = VectorAccum::new(rows, d);
                    let mut engine = PathEngine::new(model, cfg);
                    let mut quads = vec![0.0; d];
                    let mut prev = vec![0.0; d];
                    let mut fast = vec![0.0; model.fast_dim()];
                    for path in start..end {
                        let mut rng = trajectory_rng(cfg.master_seed, ic_index, path);
                        let mut slow = ic.clone();
                        model.sample_fast_ic(&mut rng, &mut fast);
                        quads.fill(0.0);
                        for step in 1..=cfg.n {
                            prev.copy_from_slice(&slow);
                            engine.step(&mut slow, &mut fast, cfg.h, &mut rng);
                            if !all_finite(&slow, &fast) {
                                return Err(Error::IntegrationDiverged {
                                    ic: ic_index,
                                    path,
                                    step,
                                });
                            }
                            for c in 0..d {
                                quads[c] += 0.5 * cfg.h * (prev[c] + slow[c]);
                            }
                            acc.record(step, &slow, &quads);
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total = VectorAccum::new(rows, d);
            for p in &partials {
                total.merge(p);
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(finalize_vector(cfg.h, cfg.n, cfg.paths, cfg.ics.clone(), d, accums))
}

#[inline]
fn fill_powers(x: f64, pows: &mut [f64]) {
    pows[0] = 1.0;
    for e in 1..pows.len() {
        pows[e] = pows[e - 1] * x;
    }
}
