//! Classical single-trajectory estimators: drift MLE for a linear model,
//! quadratic-variation diffusion estimators, and subsampling.
//!
//! These assume the observed path solves the effective equation exactly.
//! Applied to multiscale data they are biased unless the observation step
//! is subsampled into the homogenization regime, which is the comparison
//! the ensemble estimator is benchmarked against.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numerics::{solve_min_norm_ls_rank_tol, trapezoid, DenseMatrix};
use crate::params::MonomialParam;
use crate::simulate::{generate_path, TrajectoryStream};

/// Paths per accumulation chunk in streaming drivers; fixed so results do
/// not depend on worker count.
const PATH_CHUNK: usize = 32;

/// Keeps every `delta`-th sample (floor rule: indices `0, delta, ...,
/// floor(n/delta) * delta`), with the effective step `delta * h`.
pub fn subsample(path: &TrajectoryStream, delta: usize) -> Result<TrajectoryStream> {
    if delta == 0 {
        return Err(Error::InvalidInput("subsampling stride must be positive".into()));
    }
    if delta >= path.n() {
        return Err(Error::InvalidInput(format!(
            "stride {delta} leaves no increments for a path of {} steps",
            path.n()
        )));
    }
    let kept: Vec<f64> = path.values().iter().copied().step_by(delta).collect();
    TrajectoryStream::new(path.h() * delta as f64, kept)
}

/// Maximum-likelihood estimate of `a` in `dx = a x dt + const dW` from one
/// discretely observed path:
/// `a_hat = sum x_i (x_{i+1} - x_i) / (h sum x_i^2)`.
pub fn mle_linear_drift(path: &TrajectoryStream) -> Result<f64> {
    let v = path.values();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut moved = false;
    for i in 0..path.n() {
        let dx = v[i + 1] - v[i];
        if dx != 0.0 {
            moved = true;
        }
        num += v[i] * dx;
        den += v[i] * v[i];
    }
    if !moved {
        return Err(Error::DegeneratePath("constant path has no drift information".into()));
    }
    if den == 0.0 {
        return Err(Error::DegeneratePath(
            "path visits only the origin; drift scale is unidentifiable".into(),
        ));
    }
    Ok(num / (path.h() * den))
}

/// Quadratic-variation estimate of a constant diffusion coefficient `g` in
/// `dx = f dt + sqrt(g) dW`: mean squared increment per unit time.
pub fn qvp_constant(path: &TrajectoryStream) -> Result<f64> {
    let v = path.values();
    let mut acc = 0.0;
    for i in 0..path.n() {
        let dx = v[i + 1] - v[i];
        acc += dx * dx;
    }
    Ok(acc / (path.n() as f64 * path.h()))
}

/// Stride list used when no explicit one is configured.
pub const DEFAULT_DELTA_LIST: [usize; 6] = [1, 2, 4, 8, 16, 32];

/// Relative rank cutoff for the stacked stride system.
const STRIDE_RANK_TOL: f64 = 1e-3;

/// Sufficient statistics for [`qvp_multi`]: per-stride sums of total
/// squared increments plus full-resolution sums of each monomial along the
/// paths, so the stacked system can be assembled after one pass.
#[derive(Debug, Clone)]
struct QvAccum {
    exps: Vec<u32>,
    deltas: Vec<usize>,
    n: usize,
    qv: Vec<f64>,
    curves: Vec<f64>,
    count: u64,
}

impl QvAccum {
    fn new(exps: Vec<u32>, deltas: Vec<usize>, n: usize) -> Self {
        let qv = vec![0.0; deltas.len()];
        let curves = vec![0.0; exps.len() * (n + 1)];
        Self { exps, deltas, n, qv, curves, count: 0 }
    }

    fn add_path(&mut self, path: &TrajectoryStream) -> Result<()> {
        if path.n() != self.n {
            return Err(Error::InvalidInput(format!(
                "path has {} steps, expected {}",
                path.n(),
                self.n
            )));
        }
        let v = path.values();
        for (k, &delta) in self.deltas.iter().enumerate() {
            let kept = self.n / delta;
            let mut acc = 0.0;
            for i in 0..kept {
                let dx = v[(i + 1) * delta] - v[i * delta];
                acc += dx * dx;
            }
            self.qv[k] += acc;
        }
        let stride = self.n + 1;
        for (c, &e) in self.exps.iter().enumerate() {
            let row = &mut self.curves[c * stride..(c + 1) * stride];
            for (slot, &x) in row.iter_mut().zip(v) {
                *slot += x.powi(e as i32);
            }
        }
        self.count += 1;
        Ok(())
    }

    fn merge(&mut self, other: &QvAccum) {
        for (s, o) in self.qv.iter_mut().zip(&other.qv) {
            *s += o;
        }
        for (s, o) in self.curves.iter_mut().zip(&other.curves) {
            *s += o;
        }
        self.count += other.count;
    }

    fn solve(&self, h: f64) -> Result<MonomialParam> {
        if self.count == 0 {
            return Err(Error::InvalidInput("no paths supplied".into()));
        }
        let paths = self.count as f64;
        let stride = self.n + 1;
        let means: Vec<f64> = self.curves.iter().map(|s| s / paths).collect();
        let mut a = DenseMatrix::zeros(self.deltas.len(), self.exps.len());
        let mut b = Vec::with_capacity(self.deltas.len());
        for (k, &delta) in self.deltas.iter().enumerate() {
            let end = (self.n / delta) * delta;
            for c in 0..self.exps.len() {
                let curve = &means[c * stride..c * stride + end + 1];
                a.set(k, c, trapezoid(curve, h)?);
            }
            b.push(self.qv[k] / paths);
        }
        // Every stride integrates the same ensemble over (almost) the same
        // horizon, so the rows agree up to the floor-rule tail and carry
        // one informative direction. A wide rank cutoff keeps the solve on
        // that direction instead of amplifying sampling noise through the
        // near-copies.
        let sol = solve_min_norm_ls_rank_tol(&a, &DenseMatrix::from_column(&b), STRIDE_RANK_TOL)?;
        MonomialParam::new(self.exps.clone(), sol.x.column(0))
    }
}

fn validate_qv_inputs(j_g: &[u32], delta_list: &[usize], n: usize) -> Result<()> {
    if j_g.is_empty() {
        return Err(Error::InvalidInput("empty diffusion basis".into()));
    }
    if !j_g.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput(
            "diffusion exponents must be strictly increasing".into(),
        ));
    }
    if delta_list.is_empty() {
        return Err(Error::InvalidInput("empty stride list".into()));
    }
    if delta_list.len() < j_g.len() {
        return Err(Error::InvalidInput(format!(
            "{} strides cannot identify {} diffusion parameters",
            delta_list.len(),
            j_g.len()
        )));
    }
    for &d in delta_list {
        if d == 0 {
            return Err(Error::InvalidInput("subsampling stride must be positive".into()));
        }
        if d >= n {
            return Err(Error::InvalidInput(format!(
                "stride {d} leaves no increments for a path of {n} steps"
            )));
        }
    }
    Ok(())
}

/// Multi-stride quadratic-variation estimate of `g(x) = sum theta_j x^j`.
///
/// Each stride `delta` contributes one aggregated equation: the average
/// over paths of the total squared increment at that stride equals
/// `sum_j theta_j` times the time integral (trapezoid over the spanned
/// time, full observation resolution) of the ensemble mean of `x^j`. The
/// stacked system, one row per stride, is solved by minimum-norm least
/// squares. Requires at least as many strides as basis exponents and
/// equal-length paths.
pub fn qvp_multi(
    paths: &[TrajectoryStream],
    j_g: &[u32],
    delta_list: &[usize],
) -> Result<MonomialParam> {
    if paths.is_empty() {
        return Err(Error::InvalidInput("no paths supplied".into()));
    }
    let n = paths[0].n();
    let h = paths[0].h();
    validate_qv_inputs(j_g, delta_list, n)?;
    let mut acc = QvAccum::new(j_g.to_vec(), delta_list.to_vec(), n);
    for path in paths {
        if path.h() != h {
            return Err(Error::InvalidInput("paths must share one observation step".into()));
        }
        acc.add_path(path)?;
    }
    acc.solve(h)
}

/// Streaming variant of [`qvp_multi`]: simulates `num_paths` trajectories
/// of the model from one initial condition and accumulates the per-stride
/// statistics without retaining paths. Deterministic for fixed seed
/// regardless of worker count.
#[allow(clippy::too_many_arguments)]
pub fn qvp_multi_ensemble(
    model: &ModelSpec,
    ic: f64,
    h: f64,
    n: usize,
    num_paths: usize,
    master_seed: u64,
    j_g: &[u32],
    delta_list: &[usize],
) -> Result<MonomialParam> {
    validate_qv_inputs(j_g, delta_list, n)?;
    if num_paths == 0 {
        return Err(Error::InvalidInput("need at least one path".into()));
    }
    let chunk_bounds: Vec<(usize, usize)> = (0..num_paths)
        .step_by(PATH_CHUNK)
        .map(|s| (s, (s + PATH_CHUNK).min(num_paths)))
        .collect();
    let partials: Vec<QvAccum> = chunk_bounds
        .into_par_iter()
        .map(|(start, end)| -> Result<QvAccum> {
            let mut acc = QvAccum::new(j_g.to_vec(), delta_list.to_vec(), n);
            for path_index in start..end {
                let path = generate_path(model, ic, h, n, master_seed, 0, path_index)?;
                acc.add_path(&path)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = QvAccum::new(j_g.to_vec(), delta_list.to_vec(), n);
    for p in &partials {
        total.merge(p);
    }
    total.solve(h)
}

/// One row of a subsampling sweep: both classical estimators applied to
/// the same path subsampled at stride `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: usize,
    /// Effective observation step `delta * h`.
    pub delta_h: f64,
    /// Linear drift coefficient from the MLE.
    pub mle_drift: f64,
    /// Constant diffusion coefficient from quadratic variation.
    pub qvp_diff: f64,
}

/// Applies MLE and quadratic variation to one simulated path across a
/// list of subsampling strides.
pub fn subsampling_sweep(
    model: &ModelSpec,
    ic: f64,
    h: f64,
    n: usize,
    master_seed: u64,
    deltas: &[usize],
) -> Result<Vec<SweepRow>> {
    if deltas.is_empty() {
        return Err(Error::InvalidInput("empty stride list".into()));
    }
    let path = generate_path(model, ic, h, n, master_seed, 0, 0)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let sub = if delta == 1 { path.clone() } else { subsample(&path, delta)? };
        rows.push(SweepRow {
            delta,
            delta_h: sub.h(),
            mle_drift: mle_linear_drift(&sub)?,
            qvp_diff: qvp_constant(&sub)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelKind, ModelSpec};
    use std::sync::Arc;

    fn stream(h: f64, v: &[f64]) -> TrajectoryStream {
        TrajectoryStream::new(h, v.to_vec()).unwrap()
    }

    #[test]
    fn subsample_keeps_floor_indices() {
        let p = stream(0.5, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let s = subsample(&p, 2).unwrap();
        assert_eq!(s.values(), &[0.0, 2.0, 4.0, 6.0]);
        assert!((s.h() - 1.0).abs() < 1e-15);
        let s3 = subsample(&p, 3).unwrap();
        assert_eq!(s3.values(), &[0.0, 3.0, 6.0]);
    }

    #[test]
    fn subsample_rejects_degenerate_strides() {
        let p = stream(0.5, &[0.0, 1.0, 2.0]);
        assert!(subsample(&p, 0).is_err());
        assert!(subsample(&p, 2).is_err());
    }

    #[test]
    fn mle_hand_values() {
        let p = stream(1.0, &[1.0, 2.0]);
        assert!((mle_linear_drift(&p).unwrap() - 1.0).abs() < 1e-15);
        // num = 1*1 + 2*1 = 3, den = 0.5 * (1 + 4) = 2.5.
        let p2 = stream(0.5, &[1.0, 2.0, 3.0]);
        assert!((mle_linear_drift(&p2).unwrap() - 1.2).abs() < 1e-15);
    }

    #[test]
    fn mle_rejects_uninformative_paths() {
        assert!(matches!(
            mle_linear_drift(&stream(0.1, &[2.0, 2.0, 2.0])),
            Err(Error::DegeneratePath(_))
        ));
        assert!(matches!(
            mle_linear_drift(&stream(0.1, &[0.0, 0.0])),
            Err(Error::DegeneratePath(_))
        ));
    }

    #[test]
    fn qvp_hand_value() {
        // Increments 1 and 2, spanned time 1.0.
        let p = stream(0.5, &[0.0, 1.0, 3.0]);
        assert!((qvp_constant(&p).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn constant_basis_single_stride_matches_qvp_constant() {
        let p = stream(0.5, &[0.0, 1.0, 3.0, 2.5, 4.0]);
        let est = qvp_multi(std::slice::from_ref(&p), &[0], &[1]).unwrap();
        let direct = qvp_constant(&p).unwrap();
        let got = est.coefficient(0).unwrap();
        assert!((got - direct).abs() < 1e-12 * direct.abs(), "{got} vs {direct}");
    }

    #[test]
    fn constant_basis_reduces_to_mean_qvp_across_paths() {
        // One stride, constant basis: the row reads theta_0 * T = mean
        // total squared increment, so theta_0 is the plain mean of the
        // per-path quadratic-variation estimates.
        let paths = vec![
            stream(0.25, &[0.0, 0.5, 0.1, 0.9, 0.4]),
            stream(0.25, &[1.0, 0.2, 0.7, 0.3, 0.8]),
            stream(0.25, &[-0.5, 0.0, -0.9, -0.2, -0.6]),
        ];
        let est = qvp_multi(&paths, &[0], &[2]).unwrap();
        let mean: f64 = paths
            .iter()
            .map(|p| qvp_constant(&subsample(p, 2).unwrap()).unwrap())
            .sum::<f64>()
            / paths.len() as f64;
        let got = est.coefficient(0).unwrap();
        assert!((got - mean).abs() < 1e-12 * mean.abs().max(1.0), "{got} vs {mean}");
    }

    #[test]
    fn stride_list_must_cover_basis() {
        let p = stream(0.1, &[0.0, 1.0, 0.5, 1.5, 0.8]);
        let err = qvp_multi(std::slice::from_ref(&p), &[0, 2], &[1]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn mismatched_path_lengths_are_rejected() {
        let paths =
            vec![stream(0.1, &[0.0, 1.0, 0.5, 1.5, 0.8]), stream(0.1, &[0.0, 1.0, 0.5])];
        assert!(matches!(qvp_multi(&paths, &[0], &[1]), Err(Error::InvalidInput(_))));
    }

    fn ou_model(a: f64, g: f64) -> ModelSpec {
        ModelSpec::builder(ModelKind::SingleScaleSde, 1)
            .slow_drift(Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
                out[0] = a * s[0];
            }))
            .slow_diffusion(
                1,
                Arc::new(move |_s: &[f64], _f: &[f64], out: &mut [f64]| out[0] = g.sqrt()),
            )
            .build()
            .unwrap()
    }

    #[test]
    fn streaming_matches_in_memory_accumulation() {
        let model = ou_model(-0.5, 0.5);
        let n = 400;
        let h = 0.01;
        let num_paths = 70;
        let streamed =
            qvp_multi_ensemble(&model, 0.8, h, n, num_paths, 99, &[0, 2], &[1, 2]).unwrap();
        let paths: Vec<TrajectoryStream> = (0..num_paths)
            .map(|j| generate_path(&model, 0.8, h, n, 99, 0, j).unwrap())
            .collect();
        let direct = qvp_multi(&paths, &[0, 2], &[1, 2]).unwrap();
        for &e in &[0u32, 2] {
            let a = streamed.coefficient(e).unwrap();
            let b = direct.coefficient(e).unwrap();
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "exponent {e}: {a} vs {b}");
        }
    }

    fn landau_stuart_model(a: f64, b: f64, ga: f64, gb: f64) -> ModelSpec {
        ModelSpec::builder(ModelKind::SingleScaleSde, 1)
            .slow_drift(Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
                out[0] = a * s[0] - b * s[0] * s[0] * s[0];
            }))
            .slow_diffusion(
                1,
                Arc::new(move |s: &[f64], _f: &[f64], out: &mut [f64]| {
                    out[0] = (ga + gb * s[0] * s[0]).sqrt();
                }),
            )
            .build()
            .unwrap()
    }

    #[test]
    fn recovers_state_dependent_amplitude_on_single_scale_data() {
        let model = landau_stuart_model(1.0, 2.0, 1.62, 0.98);
        let est =
            qvp_multi_ensemble(&model, 0.5, 1e-3, 5000, 300, 7, &[0, 2], &[1, 2, 4]).unwrap();
        let t0 = est.coefficient(0).unwrap();
        let t2 = est.coefficient(2).unwrap();
        assert!((t0 - 1.62).abs() / 1.62 < 0.10, "theta_0 {t0}");
        assert!((t2 - 0.98).abs() / 0.98 < 0.10, "theta_2 {t2}");
    }

    #[test]
    fn single_scale_estimates_tighten_with_more_paths() {
        let model = landau_stuart_model(1.0, 2.0, 1.62, 0.98);
        let err = |num_paths: usize| {
            let est = qvp_multi_ensemble(&model, 0.5, 1e-3, 2000, num_paths, 11, &[0, 2], &[
                1, 2, 4,
            ])
            .unwrap();
            let e0 = (est.coefficient(0).unwrap() - 1.62).abs() / 1.62;
            let e2 = (est.coefficient(2).unwrap() - 0.98).abs() / 0.98;
            e0 + e2
        };
        assert!(err(200) < err(2), "more paths should reduce the error");
    }

    #[test]
    fn streaming_deterministic_across_worker_counts() {
        let model = ou_model(-0.5, 0.5);
        let reference =
            qvp_multi_ensemble(&model, 0.8, 0.01, 200, 80, 5, &[0], &[1]).unwrap();
        for workers in [1usize, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
            let got = pool
                .install(|| qvp_multi_ensemble(&model, 0.8, 0.01, 200, 80, 5, &[0], &[1]))
                .unwrap();
            assert_eq!(
                got.coefficient(0).unwrap().to_bits(),
                reference.coefficient(0).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn mle_on_noiseless_exponential_path_matches_closed_form() {
        // x_i = exp(a i h) gives a_hat = (exp(a h) - 1) / h exactly.
        let a = -0.7;
        let h = 0.05;
        let v: Vec<f64> = (0..=400).map(|i| (a * i as f64 * h).exp()).collect();
        let est = mle_linear_drift(&stream(h, &v)).unwrap();
        let expected = ((a * h).exp() - 1.0) / h;
        assert!((est - expected).abs() < 1e-12 * expected.abs(), "{est} vs {expected}");
        assert!((est - a).abs() < 0.02);
    }

    #[test]
    fn qvp_on_straight_line_scales_with_step() {
        // Slope-a line: squared increments are (a h_eff)^2, so the
        // estimate is a^2 h_eff and vanishes under refinement.
        let a = 3.0;
        for h in [0.1, 0.01] {
            let v: Vec<f64> = (0..=50).map(|i| a * i as f64 * h).collect();
            let est = qvp_constant(&stream(h, &v)).unwrap();
            assert!((est - a * a * h).abs() < 1e-12, "h={h}: {est}");
        }
    }

    #[test]
    fn unsubsampled_qvp_underestimates_effective_diffusion_on_multiscale_data() {
        let reg = crate::registry::lookup("fast_ou").unwrap();
        let model = reg.build(&Default::default()).unwrap();
        let truth = reg.effective_truth(&Default::default()).unwrap()["diff_0"];
        let path = generate_path(&model, 0.5, 1e-3, 10_000, 23, 0, 0).unwrap();
        let est = qvp_constant(&path).unwrap();
        assert!(est < 0.5 * truth, "qvp {est} vs effective {truth}");
    }

    #[test]
    fn mle_recovers_ou_drift_from_long_path() {
        let model = ou_model(-0.5, 0.5);
        // T = 1000: MLE standard deviation ~ sqrt(2 |a| / T) ~ 0.03.
        let path = generate_path(&model, 1.0, 0.01, 100_000, 31, 0, 0).unwrap();
        let a = mle_linear_drift(&path).unwrap();
        assert!((a + 0.5).abs() < 0.16, "mle {a}");
        let g = qvp_constant(&path).unwrap();
        assert!((g - 0.5).abs() < 0.05, "qvp {g}");
    }

    #[test]
    fn sweep_produces_finite_rows() {
        let model = ou_model(-0.5, 0.5);
        let rows = subsampling_sweep(&model, 1.0, 0.01, 4000, 17, &[1, 2, 4, 8]).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.mle_drift.is_finite());
            assert!(r.qvp_diff.is_finite() && r.qvp_diff > 0.0);
        }
        assert!((rows[2].delta_h - 0.04).abs() < 1e-15);
    }
}
