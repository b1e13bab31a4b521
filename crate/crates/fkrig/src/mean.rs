//! Local functional mean estimation: penalized weighted least squares over
//! per-year level functions plus seven space/time trend functions, with a
//! within-profile working correlation, GCV smoothing selection, and
//! evaluation of means, space/time derivative functions, and residuals.
//!
//! For a center (s0, d0) the model value for profile i at pressure p is
//!
//! ```text
//! sum_y 1{year_i = y} level_y(p)
//!   + dx * trend_x(p)  + dy * trend_y(p)
//!   + dx^2 * curv_x(p) + dy^2 * curv_y(p) + dx dy * curv_xy(p)
//!   + dd * trend_d(p)  + dd^2 * curv_d(p)
//! ```
//!
//! with (dx, dy) the signed zonal/meridional displacement in km and dd the
//! signed day-of-year offset. Every coefficient function lives in the cubic
//! spline space and carries a curvature penalty; a single multiplier `a`
//! scales the fixed penalty-ratio vector and is chosen by GCV.

use crate::basis::{BasisMatrix, BasisSystem};
use crate::error::{Error, Result};
use crate::geo::{
    day_difference, displacement_km, great_circle_km, select_neighbors, GeoPoint, KernelConfig,
    NeighborRule,
};
use crate::numeric::brent_min;
use crate::profile::{ProfileSet, ResidualProfile, ResidualProfileSet, Variable};
use crate::sparse::{analyze, leverage_trace, FillOrdering, LdlFactor, LdlSymbolic, SparseSymmetric};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Number of trend/curvature coefficient functions beyond the per-year levels.
pub const N_TREND_TERMS: usize = 7;

/// Exponential working correlation between measurements of one profile:
/// corr(p_j, p_k) = exp(-tau |p_j - p_k|), with a tridiagonal precision.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WorkingCorrelation {
    pub tau: f64,
}

impl Default for WorkingCorrelation {
    fn default() -> Self {
        Self { tau: 0.001 }
    }
}

impl WorkingCorrelation {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument("tau must be positive".into()));
        }
        Ok(Self { tau })
    }

    /// Independent measurements (identity working correlation).
    pub fn independent() -> Self {
        Self { tau: f64::INFINITY }
    }

    /// Tridiagonal precision of the correlation matrix for the given
    /// pressures: `(diagonal, superdiagonal)`. Built analytically from the
    /// Markov structure, never by inversion.
    pub fn precision(&self, pressures: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = pressures.len();
        if m == 1 || self.tau.is_infinite() {
            return (vec![1.0; m], vec![0.0; m.saturating_sub(1)]);
        }
        let rho: Vec<f64> = pressures
            .windows(2)
            .map(|w| (-self.tau * (w[1] - w[0])).exp())
            .collect();
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m - 1];
        for (j, &r) in rho.iter().enumerate() {
            let denom = 1.0 - r * r;
            diag[j] += 1.0 / denom;
            diag[j + 1] += 1.0 / denom;
            off[j] = -r / denom;
        }
        for d in diag.iter_mut().skip(1).take(m.saturating_sub(2)) {
            *d -= 1.0;
        }
        // boundary rows already correct: only one interval contributes
        (diag, off)
    }
}

/// Penalty ratios for (year levels, the seven trend terms) and the search
/// interval for the common multiplier `a`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// ratios for (levels, trend_x, trend_y, curv_x, curv_y, curv_xy,
    /// trend_d, curv_d)
    pub eta: [f64; 8],
    pub a_search: (f64, f64),
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            eta: [1.0, 1e8, 1e8, 1e13, 1e13, 1e13, 1e9, 1e13],
            a_search: (1e-3, 1e7),
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidArgument(
                "all penalty ratios must be positive".into(),
            ));
        }
        if !(self.a_search.0 > 0.0) || self.a_search.1 < self.a_search.0 {
            return Err(Error::InvalidArgument("bad smoothing search interval".into()));
        }
        Ok(())
    }

    /// Pin the multiplier instead of searching.
    pub fn fixed(a: f64) -> Self {
        Self {
            a_search: (a, a),
            ..Default::default()
        }
    }
}

/// Covariate vector (year indicators followed by the seven trend terms) of a
/// profile relative to a center.
pub fn design_covariates(
    location: GeoPoint,
    day: f64,
    year: i32,
    center: GeoPoint,
    day0: f64,
    years: &[i32],
) -> Result<DVector<f64>> {
    let year_idx = years
        .iter()
        .position(|&y| y == year)
        .ok_or(Error::UnmodeledYear { year })?;
    let (dx, dy) = displacement_km(center, location);
    let dd = day_difference(day, day0);
    let q = years.len() + N_TREND_TERMS;
    let mut c = DVector::zeros(q);
    c[year_idx] = 1.0;
    let t = years.len();
    c[t] = dx;
    c[t + 1] = dy;
    c[t + 2] = dx * dx;
    c[t + 3] = dy * dy;
    c[t + 4] = dx * dy;
    c[t + 5] = dd;
    c[t + 6] = dd * dd;
    Ok(c)
}

struct ProfileData {
    /// kernel weight / (n * m_i)
    alpha: f64,
    covariates: DVector<f64>,
    basis_rows: BasisMatrix,
    prec_diag: Vec<f64>,
    prec_off: Vec<f64>,
    values: Vec<f64>,
}

/// Assembled penalized normal equations for one center, reusable across
/// penalty multipliers (the sparsity pattern is fixed; only values change).
pub struct MeanSystem {
    center: GeoPoint,
    day0: f64,
    years: Vec<i32>,
    basis: BasisSystem,
    /// data part X' Sigma^-1 X on the union pattern
    g: SparseSymmetric,
    /// penalty part on the same pattern
    p: SparseSymmetric,
    rhs: DVector<f64>,
    symbolic: LdlSymbolic,
    profiles: Vec<ProfileData>,
    /// total number of measurements with positive weight
    n_obs: usize,
    h_space_used: f64,
}

impl MeanSystem {
    /// Select neighbors and assemble the system for one variable.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        profiles: &ProfileSet,
        variable: Variable,
        center: GeoPoint,
        day0: f64,
        basis: &BasisSystem,
        kernel: KernelConfig,
        wcorr: WorkingCorrelation,
        smoothing: &SmoothingConfig,
        years: &[i32],
    ) -> Result<Self> {
        smoothing.validate()?;
        if years.is_empty() {
            return Err(Error::InvalidArgument("no modeled years".into()));
        }
        let nb = select_neighbors(profiles, center, day0, NeighborRule::Kernel(kernel), years)?;

        let mut data = Vec::with_capacity(nb.len());
        for (&idx, &w) in nb.indices.iter().zip(&nb.weights) {
            let prof = &profiles[idx];
            let Some(values) = prof.values(variable) else {
                continue;
            };
            let covariates =
                design_covariates(prof.location, prof.day, prof.year, center, day0, years)?;
            let pressures = prof.pressures();
            let basis_rows = basis.eval_matrix(&pressures, 0)?;
            let (prec_diag, prec_off) = wcorr.precision(&pressures);
            data.push(ProfileData {
                alpha: w, // weight; normalized by n * m_i below
                covariates,
                basis_rows,
                prec_diag,
                prec_off,
                values,
            });
        }
        if data.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no {variable} data near ({:.2}, {:.2})",
                center.lon(),
                center.lat()
            )));
        }
        let n = data.len() as f64;
        let mut n_obs = 0usize;
        for d in data.iter_mut() {
            let m = d.values.len();
            d.alpha /= n * m as f64;
            n_obs += m;
        }

        let q = years.len() + N_TREND_TERMS;
        let m_basis = basis.n_basis();
        let dim = q * m_basis;

        // data part: sum_i alpha_i (c_i c_i^T) kron (Phi_i^T Q_i Phi_i)
        let mut g_map: HashMap<(u32, u32), f64> = HashMap::new();
        let mut rhs = DVector::zeros(dim);
        for d in &data {
            accumulate_profile(d, q, m_basis, &mut g_map, &mut rhs);
        }

        // penalty part: block-diagonal eta_r * Omega
        let omega = basis.gram(2)?;
        let mut p_map: HashMap<(u32, u32), f64> = HashMap::new();
        let order = basis.order();
        for r in 0..q {
            let eta = if r < years.len() {
                smoothing.eta[0]
            } else {
                smoothing.eta[1 + (r - years.len())]
            };
            for u in 0..m_basis {
                for v in u..(u + order).min(m_basis) {
                    let key = ((r * m_basis + u) as u32, (r * m_basis + v) as u32);
                    *p_map.entry(key).or_insert(0.0) += eta * omega[(u, v)];
                }
            }
        }

        // shared union pattern with explicit zeros on the complement
        let mut g_trip: Vec<(usize, usize, f64)> = g_map
            .iter()
            .map(|(&(i, j), &v)| (i as usize, j as usize, v))
            .collect();
        let mut p_trip: Vec<(usize, usize, f64)> = p_map
            .iter()
            .map(|(&(i, j), &v)| (i as usize, j as usize, v))
            .collect();
        for (&(i, j), _) in &p_map {
            if !g_map.contains_key(&(i, j)) {
                g_trip.push((i as usize, j as usize, 0.0));
            }
        }
        for (&(i, j), _) in &g_map {
            if !p_map.contains_key(&(i, j)) {
                p_trip.push((i as usize, j as usize, 0.0));
            }
        }
        let g = SparseSymmetric::from_triplets(dim, g_trip)?;
        let p = SparseSymmetric::from_triplets(dim, p_trip)?;
        debug_assert!(g.same_pattern(&p));
        let symbolic = analyze(&g, FillOrdering::ReverseCuthillMcKee);

        Ok(Self {
            center,
            day0,
            years: years.to_vec(),
            basis: basis.clone(),
            g,
            p,
            rhs,
            symbolic,
            profiles: data,
            n_obs,
            h_space_used: nb.h_space_used,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_profiles(&self) -> usize {
        self.profiles.len()
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// The penalized matrix B = X' Sigma^-1 X + a * P.
    pub fn penalized_matrix(&self, a: f64) -> SparseSymmetric {
        self.g.scale_add(&self.p, a)
    }

    pub fn data_matrix(&self) -> &SparseSymmetric {
        &self.g
    }

    fn factorize(&self, a: f64) -> Result<LdlFactor> {
        self.symbolic.factor(&self.penalized_matrix(a))
    }

    /// Solve for the stacked coefficient vector at the given multiplier.
    pub fn solve(&self, a: f64) -> Result<DVector<f64>> {
        Ok(self.factorize(a)?.solve(&self.rhs))
    }

    /// Weighted residual sum of squares r' Sigma^-1 r at coefficients `coef`.
    pub fn weighted_rss(&self, coef: &DVector<f64>) -> f64 {
        let q = self.years.len() + N_TREND_TERMS;
        let m_basis = self.basis.n_basis();
        let mut total = 0.0;
        for d in &self.profiles {
            let m = d.values.len();
            let mut r = vec![0.0; m];
            for j in 0..m {
                let row = &d.basis_rows.rows[j];
                let mut fit = 0.0;
                for (r_blk, c) in d.covariates.iter().enumerate().take(q) {
                    if *c == 0.0 {
                        continue;
                    }
                    let base = r_blk * m_basis + row.first;
                    let mut dot = 0.0;
                    for (t, v) in row.values.iter().enumerate() {
                        dot += v * coef[base + t];
                    }
                    fit += c * dot;
                }
                r[j] = d.values[j] - fit;
            }
            total += d.alpha * tridiag_quadratic(&d.prec_diag, &d.prec_off, &r);
        }
        total
    }

    /// GCV score at multiplier `a`, with the hat-matrix trace computed from
    /// the Takahashi selected inverse.
    pub fn gcv(&self, a: f64) -> Result<f64> {
        let factor = self.factorize(a)?;
        let coef = factor.solve(&self.rhs);
        let num = self.weighted_rss(&coef);
        let tr = self.hat_trace(&factor)?;
        let n = self.n_obs as f64;
        if tr >= n {
            return Err(Error::DegenerateSmoothing {
                trace: tr,
                n: self.n_obs,
            });
        }
        Ok(num / (1.0 - tr / n).powi(2))
    }

    /// tr(A) = tr(B^-1 X' Sigma^-1 X) for a factor of B.
    pub fn hat_trace(&self, factor: &LdlFactor) -> Result<f64> {
        leverage_trace(&factor.selected_inverse(), &self.g)
    }

    /// Dense design pieces (X, Sigma^-1, y) for small diagnostic problems.
    pub fn dense_design(&self) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let q = self.years.len() + N_TREND_TERMS;
        let m_basis = self.basis.n_basis();
        let dim = q * m_basis;
        let n: usize = self.profiles.iter().map(|d| d.values.len()).sum();
        let mut x = DMatrix::zeros(n, dim);
        let mut w = DMatrix::zeros(n, n);
        let mut y = DVector::zeros(n);
        let mut row0 = 0usize;
        for d in &self.profiles {
            let m = d.values.len();
            for j in 0..m {
                let row = &d.basis_rows.rows[j];
                for (r_blk, c) in d.covariates.iter().enumerate().take(q) {
                    for (t, v) in row.values.iter().enumerate() {
                        x[(row0 + j, r_blk * m_basis + row.first + t)] = c * v;
                    }
                }
                y[row0 + j] = d.values[j];
            }
            for j in 0..m {
                w[(row0 + j, row0 + j)] = d.alpha * d.prec_diag[j];
                if j + 1 < m {
                    w[(row0 + j, row0 + j + 1)] = d.alpha * d.prec_off[j];
                    w[(row0 + j + 1, row0 + j)] = d.alpha * d.prec_off[j];
                }
            }
            row0 += m;
        }
        (x, w, y)
    }

    /// Minimize GCV over the multiplier by Brent search in log(a).
    pub fn select_multiplier(&self, smoothing: &SmoothingConfig) -> Result<(f64, f64)> {
        let (lo, hi) = smoothing.a_search;
        if lo == hi {
            return Ok((lo, self.gcv(lo)?));
        }
        let res = brent_min(
            |t| self.gcv(t.exp()).unwrap_or(f64::INFINITY),
            lo.ln(),
            hi.ln(),
            1e-3,
            30,
        );
        let a = res.x_min.exp();
        let score = self.gcv(a)?;
        Ok((a, score))
    }
}

fn accumulate_profile(
    d: &ProfileData,
    q: usize,
    m_basis: usize,
    g_map: &mut HashMap<(u32, u32), f64>,
    rhs: &mut DVector<f64>,
) {
    let m = d.values.len();
    // qy = Q_i y, for the right-hand side
    let mut qy = vec![0.0; m];
    for j in 0..m {
        qy[j] = d.prec_diag[j] * d.values[j];
        if j > 0 {
            qy[j] += d.prec_off[j - 1] * d.values[j - 1];
        }
        if j + 1 < m {
            qy[j] += d.prec_off[j] * d.values[j + 1];
        }
    }
    // active covariate blocks (year indicator + nonzero trends)
    let act: Vec<(usize, f64)> = d
        .covariates
        .iter()
        .enumerate()
        .take(q)
        .filter(|(_, c)| **c != 0.0)
        .map(|(r, c)| (r, *c))
        .collect();

    let mut add_pair = |j: usize, k: usize, qv: f64| {
        let rj = &d.basis_rows.rows[j];
        let rk = &d.basis_rows.rows[k];
        for &(rb, cr) in &act {
            for &(sb, cs) in &act {
                let scale = d.alpha * qv * cr * cs;
                // the mirrored ordered pair produces the lower-triangle
                // contribution, so only gi <= gj is stored
                for (tj, vj) in rj.values.iter().enumerate() {
                    let gi = rb * m_basis + rj.first + tj;
                    for (tk, vk) in rk.values.iter().enumerate() {
                        let gj = sb * m_basis + rk.first + tk;
                        if gi <= gj {
                            *g_map.entry((gi as u32, gj as u32)).or_insert(0.0) +=
                                scale * vj * vk;
                        }
                    }
                }
            }
        }
    };
    for j in 0..m {
        add_pair(j, j, d.prec_diag[j]);
        if j + 1 < m && d.prec_off[j] != 0.0 {
            add_pair(j, j + 1, d.prec_off[j]);
            add_pair(j + 1, j, d.prec_off[j]);
        }
    }
    // rhs += alpha * (c kron Phi)' Q y
    for j in 0..m {
        let row = &d.basis_rows.rows[j];
        for &(rb, cr) in &act {
            let base = rb * m_basis + row.first;
            for (t, v) in row.values.iter().enumerate() {
                rhs[base + t] += d.alpha * cr * v * qy[j];
            }
        }
    }
}

fn tridiag_quadratic(diag: &[f64], off: &[f64], r: &[f64]) -> f64 {
    let m = r.len();
    let mut total = 0.0;
    for j in 0..m {
        total += diag[j] * r[j] * r[j];
        if j + 1 < m {
            total += 2.0 * off[j] * r[j] * r[j + 1];
        }
    }
    total
}

/// Which mean function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanSelector {
    Year(i32),
    /// average of the per-year level functions
    Averaged,
}

/// Fitted local mean: one coefficient row per year level and per trend term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanFit {
    pub center: GeoPoint,
    pub day0: f64,
    pub years: Vec<i32>,
    pub basis: BasisSystem,
    /// (years + 7) x n_basis
    pub coef: DMatrix<f64>,
    pub multiplier: f64,
    pub gcv: f64,
    pub n_profiles: usize,
    pub n_obs: usize,
    pub h_space_used: f64,
}

/// Fit the local mean around `(center, day0)` for one variable.
#[allow(clippy::too_many_arguments)]
pub fn fit_mean(
    profiles: &ProfileSet,
    variable: Variable,
    center: GeoPoint,
    day0: f64,
    basis: &BasisSystem,
    kernel: KernelConfig,
    wcorr: WorkingCorrelation,
    smoothing: &SmoothingConfig,
    years: &[i32],
) -> Result<MeanFit> {
    let system = MeanSystem::build(
        profiles, variable, center, day0, basis, kernel, wcorr, smoothing, years,
    )?;
    let (a, gcv) = system.select_multiplier(smoothing)?;
    let coef_vec = system.solve(a)?;
    let q = years.len() + N_TREND_TERMS;
    let m_basis = basis.n_basis();
    let mut coef = DMatrix::zeros(q, m_basis);
    for r in 0..q {
        for c in 0..m_basis {
            coef[(r, c)] = coef_vec[r * m_basis + c];
        }
    }
    Ok(MeanFit {
        center,
        day0,
        years: years.to_vec(),
        basis: basis.clone(),
        coef,
        multiplier: a,
        gcv,
        n_profiles: system.n_profiles(),
        n_obs: system.n_obs(),
        h_space_used: system.h_space_used,
    })
}

/// Space/time derivative fields of the year-averaged mean at a set of
/// pressures, read off the trend coefficient functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceTimeDerivatives {
    pub d_zonal: Vec<f64>,
    pub d_meridional: Vec<f64>,
    pub d2_zonal: Vec<f64>,
    pub d2_meridional: Vec<f64>,
    pub d2_cross: Vec<f64>,
    pub d_day: Vec<f64>,
    pub d2_day: Vec<f64>,
}

impl MeanFit {
    fn row_coefficients(&self, row: usize) -> DVector<f64> {
        self.coef.row(row).transpose()
    }

    fn eval_row(&self, row: usize, pressures: &[f64], deriv: usize) -> Result<Vec<f64>> {
        let coefs = self.row_coefficients(row);
        let mat = self.basis.eval_matrix(pressures, deriv)?;
        Ok((0..pressures.len()).map(|i| mat.row_dot(i, &coefs)).collect())
    }

    /// Evaluate the selected mean function (or the year average) at the
    /// given pressures and derivative order.
    pub fn eval(&self, selector: MeanSelector, pressures: &[f64], deriv: usize) -> Result<Vec<f64>> {
        match selector {
            MeanSelector::Year(y) => {
                let row = self
                    .years
                    .iter()
                    .position(|&yy| yy == y)
                    .ok_or(Error::UnmodeledYear { year: y })?;
                self.eval_row(row, pressures, deriv)
            }
            MeanSelector::Averaged => {
                let mut acc = vec![0.0; pressures.len()];
                for row in 0..self.years.len() {
                    let v = self.eval_row(row, pressures, deriv)?;
                    for (a, b) in acc.iter_mut().zip(v) {
                        *a += b;
                    }
                }
                let n = self.years.len() as f64;
                acc.iter_mut().for_each(|a| *a /= n);
                Ok(acc)
            }
        }
    }

    /// Coefficient row for the averaged mean (for downstream linear
    /// functionals).
    pub fn averaged_coefficients(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.basis.n_basis());
        for row in 0..self.years.len() {
            acc += self.row_coefficients(row);
        }
        acc / self.years.len() as f64
    }

    /// Coefficient row for one year's level function.
    pub fn year_coefficients(&self, year: i32) -> Result<DVector<f64>> {
        let row = self
            .years
            .iter()
            .position(|&yy| yy == year)
            .ok_or(Error::UnmodeledYear { year })?;
        Ok(self.row_coefficients(row))
    }

    /// First- and second-order space/time derivatives of the mean at the
    /// center, as functions of pressure.
    pub fn space_time_derivatives(&self, pressures: &[f64]) -> Result<SpaceTimeDerivatives> {
        let t = self.years.len();
        let get = |row: usize, scale: f64| -> Result<Vec<f64>> {
            Ok(self
                .eval_row(row, pressures, 0)?
                .into_iter()
                .map(|v| scale * v)
                .collect())
        };
        Ok(SpaceTimeDerivatives {
            d_zonal: get(t, 1.0)?,
            d_meridional: get(t + 1, 1.0)?,
            d2_zonal: get(t + 2, 2.0)?,
            d2_meridional: get(t + 3, 2.0)?,
            d2_cross: get(t + 4, 1.0)?,
            d_day: get(t + 5, 1.0)?,
            d2_day: get(t + 6, 2.0)?,
        })
    }

    /// Model value for a profile at its own covariates, at the given
    /// pressures.
    pub fn predict_profile(
        &self,
        location: GeoPoint,
        day: f64,
        year: i32,
        pressures: &[f64],
    ) -> Result<Vec<f64>> {
        let c = design_covariates(location, day, year, self.center, self.day0, &self.years)?;
        let mat = self.basis.eval_matrix(pressures, 0)?;
        let mut out = vec![0.0; pressures.len()];
        for (r, cr) in c.iter().enumerate() {
            if *cr == 0.0 {
                continue;
            }
            let coefs = self.row_coefficients(r);
            for (j, o) in out.iter_mut().enumerate() {
                *o += cr * mat.row_dot(j, &coefs);
            }
        }
        Ok(out)
    }
}

/// Index of the mean fit nearest to a location (ties broken by smallest
/// (lat, lon) of the fit center).
pub fn nearest_fit(fits: &[MeanFit], location: GeoPoint) -> Option<usize> {
    fits.iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = great_circle_km(a.center, location);
            let db = great_circle_km(b.center, location);
            da.partial_cmp(&db)
                .unwrap()
                .then_with(|| {
                    (a.center.lat(), a.center.lon())
                        .partial_cmp(&(b.center.lat(), b.center.lon()))
                        .unwrap()
                })
        })
        .map(|(i, _)| i)
}

/// Residuals of every profile against the nearest fitted mean.
///
/// Profiles missing the variable are skipped (salinity residuals only exist
/// where salinity passed quality control).
pub fn compute_residuals(
    profiles: &ProfileSet,
    fits: &[MeanFit],
    variable: Variable,
) -> Result<ResidualProfileSet> {
    if fits.is_empty() {
        return Err(Error::InvalidArgument("no mean fits supplied".into()));
    }
    let mut out = Vec::new();
    for prof in profiles.iter() {
        let Some(values) = prof.values(variable) else {
            continue;
        };
        let fit = &fits[nearest_fit(fits, prof.location).unwrap()];
        let pressures = prof.pressures();
        let fitted = fit.predict_profile(prof.location, prof.day, prof.year, &pressures)?;
        let residuals = values
            .iter()
            .zip(&fitted)
            .map(|(y, f)| y - f)
            .collect::<Vec<_>>();
        out.push(ResidualProfile {
            id: prof.id.clone(),
            location: prof.location,
            day: prof.day,
            year: prof.year,
            mode: prof.mode,
            pressures,
            residuals,
        });
    }
    Ok(ResidualProfileSet {
        variable,
        profiles: out,
    })
}
