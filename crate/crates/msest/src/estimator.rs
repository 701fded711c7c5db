//! Two-step parameter estimation from moment tables.
//!
//! Step one recovers drift coefficients from the averaged martingale
//! identity: for each initial condition `xi_i`,
//!
//! ```text
//! E(x_t - xi_i) = sum_j theta_j int_0^t E(x_s^j) ds,
//! ```
//!
//! one linear equation per initial condition, solved jointly in least
//! squares. Step two recovers diffusion coefficients from the Ito isometry
//! applied to the drift residual,
//!
//! ```text
//! E (x_t - xi_i - int_0^t f(x_s; theta_hat) ds)^2
//!     = sum_j sigma_j int_0^t E(x_s^j) ds.
//! ```
//!
//! Time integrals of moment curves are composite trapezoids, precomputed
//! once as prefix sums so estimates along a whole time grid reuse the same
//! table. The exponent-zero column is `t` itself and is assembled exactly.
//!
//! Vector slow variables use the matrix-valued analog for the linear model
//! `dX = -A X dt + Sigma^{1/2} dW`: drift from `A_hat P = B` in the
//! Frobenius norm, diffusion from the averaged residual outer product.

use std::collections::BTreeMap;

use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::moments::{MomentTable, ScalarMomentTable, VectorMomentTable};
use crate::numerics::{
    solve_min_norm_ls_with, DenseMatrix, LinearSystem, LsMethod, LsSolution,
};
use crate::params::{
    diff_matrix_name, diff_param_name, drift_matrix_name, drift_param_name, MonomialParam,
};
use crate::simulate::generate_moment_table;

/// Conditioning and fit quality of one least-squares solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub residual_norm: f64,
    pub cond_estimate: f64,
    pub rank: usize,
}

impl Diagnostics {
    /// Placeholder for estimation steps that were skipped (empty basis).
    pub fn empty() -> Self {
        Self { residual_norm: 0.0, cond_estimate: 0.0, rank: 0 }
    }
}

impl From<&LsSolution> for Diagnostics {
    fn from(s: &LsSolution) -> Self {
        Self {
            residual_norm: s.residual_norm,
            cond_estimate: s.cond_estimate,
            rank: s.rank,
        }
    }
}

/// Drift and diffusion recovered at one observation time.
#[derive(Debug, Clone)]
pub struct TwoStepEstimate {
    pub drift: MonomialParam,
    pub diffusion: MonomialParam,
    pub drift_diag: Diagnostics,
    pub diffusion_diag: Diagnostics,
}

/// Scalar two-step estimator bound to one moment table.
pub struct Estimator<'t> {
    table: &'t ScalarMomentTable,
    /// Trapezoid prefix integrals, `[exp_slot][ic][k]` flattened, where
    /// `prefix(e, i, k) = int_0^{kh} E(x_s^e) ds`.
    prefix: Vec<f64>,
}

impl<'t> Estimator<'t> {
    pub fn new(table: &'t ScalarMomentTable) -> Self {
        let rows = table.n() + 1;
        let m = table.num_ics();
        let exps = table.exponents();
        let mut prefix = vec![0.0; exps.len() * m * rows];
        for (slot, &e) in exps.iter().enumerate() {
            for i in 0..m {
                let base = (slot * m + i) * rows;
                if e == 0 {
                    for k in 0..rows {
                        prefix[base + k] = k as f64 * table.h();
                    }
                } else {
                    let curve = table.moment_curve(i, e).expect("tracked exponent");
                    let mut acc = 0.0;
                    for k in 1..rows {
                        acc += 0.5 * table.h() * (curve[k - 1] + curve[k]);
                        prefix[base + k] = acc;
                    }
                }
            }
        }
        Self { table, prefix }
    }

    pub fn table(&self) -> &ScalarMomentTable {
        self.table
    }

    /// `int_0^{kh} E(x_s^e) ds` for initial condition `ic`.
    pub fn prefix_integral(&self, ic: usize, exponent: u32, k: usize) -> Result<f64> {
        let rows = self.table.n() + 1;
        if ic >= self.table.num_ics() || k >= rows {
            return Err(Error::InvalidInput("index out of range".into()));
        }
        let slot = self
            .table
            .exponents()
            .iter()
            .position(|&e| e == exponent)
            .ok_or(Error::MissingExponent(exponent))?;
        Ok(self.prefix[(slot * self.table.num_ics() + ic) * rows + k])
    }

    fn check_up_to(&self, up_to: usize) -> Result<()> {
        if up_to == 0 || up_to > self.table.n() {
            return Err(Error::InvalidInput(format!(
                "estimation index {up_to} outside 1..={}",
                self.table.n()
            )));
        }
        Ok(())
    }

    /// Stacks the martingale identity at `t = up_to * h` over all initial
    /// conditions: one row per initial condition, one column per drift
    /// exponent.
    pub fn assemble_drift_system(&self, j_f: &[u32], up_to: usize) -> Result<LinearSystem> {
        self.check_up_to(up_to)?;
        if j_f.is_empty() {
            return Err(Error::InvalidInput("empty drift basis".into()));
        }
        let m = self.table.num_ics();
        let mut a = DenseMatrix::zeros(m, j_f.len());
        let mut b = DenseMatrix::zeros(m, 1);
        for i in 0..m {
            for (c, &e) in j_f.iter().enumerate() {
                a.set(i, c, self.prefix_integral(i, e, up_to)?);
            }
            let xi = self.table.ics()[i];
            b.set(i, 0, self.table.moment(i, 1, up_to)? - xi);
        }
        Ok(LinearSystem { a, b })
    }

    pub fn estimate_drift(&self, j_f: &[u32], up_to: usize) -> Result<(MonomialParam, Diagnostics)> {
        self.estimate_drift_with(j_f, up_to, LsMethod::ColPivQr)
    }

    pub fn estimate_drift_with(
        &self,
        j_f: &[u32],
        up_to: usize,
        method: LsMethod,
    ) -> Result<(MonomialParam, Diagnostics)> {
        if j_f.is_empty() {
            self.check_up_to(up_to)?;
            return Ok((MonomialParam::zero(), Diagnostics::empty()));
        }
        let sys = self.assemble_drift_system(j_f, up_to)?;
        let sol = solve_min_norm_ls_with(&sys.a, &sys.b, method)?;
        let param = MonomialParam::new(j_f.to_vec(), sol.x.column(0))?;
        Ok((param, Diagnostics::from(&sol)))
    }

    /// Stacks the Ito isometry at `t = up_to * h` using the residual
    /// against the supplied drift estimate.
    pub fn assemble_diffusion_system(
        &self,
        j_g: &[u32],
        drift: &MonomialParam,
        up_to: usize,
    ) -> Result<LinearSystem> {
        self.check_up_to(up_to)?;
        if j_g.is_empty() {
            return Err(Error::InvalidInput("empty diffusion basis".into()));
        }
        let m = self.table.num_ics();
        let mut a = DenseMatrix::zeros(m, j_g.len());
        let mut b = DenseMatrix::zeros(m, 1);
        for i in 0..m {
            for (c, &e) in j_g.iter().enumerate() {
                a.set(i, c, self.prefix_integral(i, e, up_to)?);
            }
            b.set(i, 0, self.table.residual_second_moment(i, up_to, drift)?);
        }
        Ok(LinearSystem { a, b })
    }

    pub fn estimate_diffusion(
        &self,
        j_g: &[u32],
        drift: &MonomialParam,
        up_to: usize,
    ) -> Result<(MonomialParam, Diagnostics)> {
        self.estimate_diffusion_with(j_g, drift, up_to, LsMethod::ColPivQr)
    }

    pub fn estimate_diffusion_with(
        &self,
        j_g: &[u32],
        drift: &MonomialParam,
        up_to: usize,
        method: LsMethod,
    ) -> Result<(MonomialParam, Diagnostics)> {
        if j_g.is_empty() {
            self.check_up_to(up_to)?;
            return Ok((MonomialParam::zero(), Diagnostics::empty()));
        }
        let sys = self.assemble_diffusion_system(j_g, drift, up_to)?;
        let sol = solve_min_norm_ls_with(&sys.a, &sys.b, method)?;
        let param = MonomialParam::new(j_g.to_vec(), sol.x.column(0))?;
        Ok((param, Diagnostics::from(&sol)))
    }

    /// Runs both steps at `t = up_to * h`. An empty basis skips its step
    /// and reports a zero parameter.
    pub fn estimate(&self, j_f: &[u32], j_g: &[u32], up_to: usize) -> Result<TwoStepEstimate> {
        let (drift, drift_diag) = self.estimate_drift(j_f, up_to)?;
        let (diffusion, diffusion_diag) = self.estimate_diffusion(j_g, &drift, up_to)?;
        Ok(TwoStepEstimate { drift, diffusion, drift_diag, diffusion_diag })
    }
}

/// Drift matrix estimate for the linear vector model `dX = -A X dt + ...`:
/// minimizes `|A_hat P - B|_F` where column `i` of `P` is
/// `int_0^t E X ds` and column `i` of `B` is `-(E X_t - xi_i)`.
pub fn estimate_drift_matrix(
    table: &VectorMomentTable,
    up_to: usize,
) -> Result<(DenseMatrix, Diagnostics)> {
    let d = table.dim();
    let m = table.num_ics();
    if up_to == 0 || up_to > table.n() {
        return Err(Error::InvalidInput(format!(
            "estimation index {up_to} outside 1..={}",
            table.n()
        )));
    }
    if m < d {
        return Err(Error::InvalidInput(format!(
            "matrix estimation needs at least {d} initial conditions, got {m}"
        )));
    }
    // Row i of `pt` is P's column i, so `pt` is P transposed; same for b.
    let mut pt = DenseMatrix::zeros(m, d);
    let mut bt = DenseMatrix::zeros(m, d);
    for i in 0..m {
        for c in 0..d {
            let curve = table.mean_curve(i, c);
            let mut acc = 0.0;
            for k in 1..=up_to {
                acc += 0.5 * table.h() * (curve[k - 1] + curve[k]);
            }
            pt.set(i, c, acc);
            bt.set(i, c, -(curve[up_to] - table.ics()[i][c]));
        }
    }
    let sol = solve_min_norm_ls_with(&pt, &bt, LsMethod::ColPivQr)?;
    Ok((sol.x.transpose(), Diagnostics::from(&sol)))
}

/// Diffusion matrix estimate: the residual outer second moment, averaged
/// over initial conditions, divided by `t`, then symmetrized.
pub fn estimate_diffusion_matrix(
    table: &VectorMomentTable,
    a_hat: &DenseMatrix,
    up_to: usize,
) -> Result<DenseMatrix> {
    let d = table.dim();
    if up_to == 0 || up_to > table.n() {
        return Err(Error::InvalidInput(format!(
            "estimation index {up_to} outside 1..={}",
            table.n()
        )));
    }
    if a_hat.rows() != d || a_hat.cols() != d {
        return Err(Error::InvalidInput("drift matrix shape mismatch".into()));
    }
    let t = up_to as f64 * table.h();
    let mut sum = DenseMatrix::zeros(d, d);
    for i in 0..table.num_ics() {
        let r = table.residual_outer_moment(i, up_to, a_hat);
        for a in 0..d {
            for b in 0..d {
                sum.set(a, b, sum.at(a, b) + r.at(a, b));
            }
        }
    }
    let scale = 1.0 / (t * table.num_ics() as f64);
    let mut out = DenseMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            out.set(a, b, 0.5 * scale * (sum.at(a, b) + sum.at(b, a)));
        }
    }
    Ok(out)
}

/// One time point of an estimate series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    /// Values aligned with [`EstimateSeries::param_names`].
    pub estimates: Vec<f64>,
    pub drift_diag: Diagnostics,
    pub diffusion_diag: Diagnostics,
}

/// Parameter estimates along a grid of observation times, from a single
/// simulation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSeries {
    pub param_names: Vec<String>,
    /// Reference values aligned with `param_names`, where known.
    pub truths: Vec<Option<f64>>,
    pub rows: Vec<SeriesRow>,
}

fn lookup_truths(names: &[String], truth: Option<&BTreeMap<String, f64>>) -> Vec<Option<f64>> {
    names
        .iter()
        .map(|n| truth.and_then(|t| t.get(n).copied()))
        .collect()
}

fn validate_grid(grid: &[usize], n: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    let mut prev = 0usize;
    for &k in grid {
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "time grid index {k} outside 1..={n}"
            )));
        }
        if k <= prev {
            return Err(Error::InvalidInput(
                "time grid indices must be strictly increasing".into(),
            ));
        }
        prev = k;
    }
    Ok(())
}

/// Simulates one ensemble and estimates parameters at each grid index
/// (`t = k h`). Scalar slow variables use the monomial bases `j_f`/`j_g`;
/// vector slow variables use the linear matrix model and ignore the bases.
pub fn estimate_series(
    model: &ModelSpec,
    cfg: &EnsembleConfig,
    j_f: &[u32],
    j_g: &[u32],
    time_grid: &[usize],
    truth: Option<&BTreeMap<String, f64>>,
) -> Result<EstimateSeries> {
    validate_grid(time_grid, cfg.n)?;
    let mut track: Vec<u32> = j_f.iter().chain(j_g.iter()).copied().chain([1, 2]).collect();
    track.sort_unstable();
    track.dedup();
    let table = generate_moment_table(model, cfg, &track, j_f)?;
    match table {
        MomentTable::Scalar(t) => scalar_series(&t, j_f, j_g, time_grid, truth),
        MomentTable::Vector(t) => vector_series(&t, time_grid, truth),
    }
}

/// Estimates over a time grid from an already-built scalar table.
pub fn scalar_series(
    table: &ScalarMomentTable,
    j_f: &[u32],
    j_g: &[u32],
    time_grid: &[usize],
    truth: Option<&BTreeMap<String, f64>>,
) -> Result<EstimateSeries> {
    validate_grid(time_grid, table.n())?;
    let est = Estimator::new(table);
    let mut names = Vec::new();
    for &j in j_f {
        names.push(drift_param_name(j));
    }
    for &j in j_g {
        names.push(diff_param_name(j));
    }
    let truths = lookup_truths(&names, truth);
    let mut rows = Vec::with_capacity(time_grid.len());
    for &k in time_grid {
        let e = est.estimate(j_f, j_g, k)?;
        let mut vals = Vec::with_capacity(names.len());
        vals.extend(e.drift.coefficients().iter().copied());
        vals.extend(e.diffusion.coefficients().iter().copied());
        rows.push(SeriesRow {
            t: k as f64 * table.h(),
            estimates: vals,
            drift_diag: e.drift_diag,
            diffusion_diag: e.diffusion_diag,
        });
    }
    Ok(EstimateSeries { param_names: names, truths, rows })
}

/// Estimates over a time grid from an already-built vector table. Reports
/// all drift entries and the upper triangle of the symmetric diffusion.
pub fn vector_series(
    table: &VectorMomentTable,
    time_grid: &[usize],
    truth: Option<&BTreeMap<String, f64>>,
) -> Result<EstimateSeries> {
    validate_grid(time_grid, table.n())?;
    let d = table.dim();
    let mut names = Vec::new();
    for i in 0..d {
        for j in 0..d {
            names.push(drift_matrix_name(i, j));
        }
    }
    for i in 0..d {
        for j in i..d {
            names.push(diff_matrix_name(i, j));
        }
    }
    let truths = lookup_truths(&names, truth);
    let mut rows = Vec::with_capacity(time_grid.len());
    for &k in time_grid {
        let (a_hat, drift_diag) = estimate_drift_matrix(table, k)?;
        let sigma = estimate_diffusion_matrix(table, &a_hat, k)?;
        let mut vals = Vec::with_capacity(names.len());
        for i in 0..d {
            for j in 0..d {
                vals.push(a_hat.at(i, j));
            }
        }
        for i in 0..d {
            for j in i..d {
                vals.push(sigma.at(i, j));
            }
        }
        rows.push(SeriesRow {
            t: k as f64 * table.h(),
            estimates: vals,
            drift_diag,
            diffusion_diag: Diagnostics::empty(),
        });
    }
    Ok(EstimateSeries { param_names: names, truths, rows })
}
