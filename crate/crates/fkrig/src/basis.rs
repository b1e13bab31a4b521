//! Cubic B-spline basis over the pressure domain [0, 2000] dbar: evaluation
//! with derivatives, Gram and curvature-penalty matrices, and definite
//! integrals of the basis functions.
//!
//! The basis is clamped: boundary breakpoints are repeated `order` times, so
//! `n_basis = breakpoints + order - 2`. All quadrature is 4-point
//! Gauss-Legendre per breakpoint interval, which is exact for the piecewise
//! polynomials involved.

use crate::error::{Error, Result};
use crate::numeric::{GL4_NODES, GL4_WEIGHTS};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const PRESSURE_MIN: f64 = 0.0;
pub const PRESSURE_MAX: f64 = 2000.0;

/// Clamped B-spline basis on [0, 2000].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisSystem {
    order: usize,
    breakpoints: Vec<f64>,
    knots: Vec<f64>,
}

/// Nonzero basis evaluations at one point: `values[j]` is basis function
/// `first + j` (at most `order` of them).
#[derive(Debug, Clone)]
pub struct BasisRow {
    pub first: usize,
    pub values: Vec<f64>,
}

/// Row-sparse evaluation of the basis at many points.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub n_basis: usize,
    pub rows: Vec<BasisRow>,
}

impl BasisMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.n_basis);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.values.iter().enumerate() {
                m[(i, row.first + j)] = *v;
            }
        }
        m
    }

    /// Dot product of row `i` with a coefficient vector.
    pub fn row_dot(&self, i: usize, coef: &DVector<f64>) -> f64 {
        let row = &self.rows[i];
        row.values
            .iter()
            .enumerate()
            .map(|(j, v)| v * coef[row.first + j])
            .sum()
    }
}

impl BasisSystem {
    /// Cubic basis with `n_breakpoints` equispaced breakpoints over [0, 2000].
    pub fn uniform(n_breakpoints: usize) -> Result<Self> {
        if n_breakpoints < 2 {
            return Err(Error::InvalidArgument(
                "basis needs at least 2 breakpoints".into(),
            ));
        }
        let step = (PRESSURE_MAX - PRESSURE_MIN) / (n_breakpoints - 1) as f64;
        let mut breakpoints: Vec<f64> = (0..n_breakpoints)
            .map(|i| PRESSURE_MIN + step * i as f64)
            .collect();
        *breakpoints.last_mut().unwrap() = PRESSURE_MAX;
        Self::with_breakpoints(4, breakpoints)
    }

    /// Basis of the given order over explicit breakpoints spanning [0, 2000].
    pub fn with_breakpoints(order: usize, breakpoints: Vec<f64>) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument("order must be at least 2".into()));
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument(
                "basis needs at least 2 breakpoints".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints[0] != PRESSURE_MIN || *breakpoints.last().unwrap() != PRESSURE_MAX {
            return Err(Error::InvalidArgument(format!(
                "breakpoints must span [{PRESSURE_MIN}, {PRESSURE_MAX}]"
            )));
        }
        let mut knots = Vec::with_capacity(breakpoints.len() + 2 * (order - 1));
        for _ in 0..order - 1 {
            knots.push(breakpoints[0]);
        }
        knots.extend_from_slice(&breakpoints);
        for _ in 0..order - 1 {
            knots.push(*breakpoints.last().unwrap());
        }
        Ok(Self {
            order,
            breakpoints,
            knots,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_basis(&self) -> usize {
        self.breakpoints.len() + self.order - 2
    }

    fn check_domain(&self, p: f64) -> Result<()> {
        if !(PRESSURE_MIN..=PRESSURE_MAX).contains(&p) || !p.is_finite() {
            return Err(Error::Domain {
                value: p,
                lo: PRESSURE_MIN,
                hi: PRESSURE_MAX,
            });
        }
        Ok(())
    }

    /// Index of the breakpoint interval containing `p` (last interval for
    /// `p == 2000`).
    fn interval_of(&self, p: f64) -> usize {
        let idx = self.breakpoints.partition_point(|b| *b <= p);
        idx.saturating_sub(1).min(self.breakpoints.len() - 2)
    }

    /// Evaluate the nonzero basis functions (derivative order 0..=2) at `p`.
    pub fn eval_at(&self, p: f64, deriv: usize) -> Result<BasisRow> {
        self.check_domain(p)?;
        if deriv > 2 {
            return Err(Error::InvalidArgument(format!(
                "derivative order {deriv} not supported (0..=2)"
            )));
        }
        let interval = self.interval_of(p);
        let span = interval + self.order - 1;
        let ders = self.ders_basis_funs(span, p, deriv);
        Ok(BasisRow {
            first: interval,
            values: ders[deriv].clone(),
        })
    }

    /// Evaluate the basis at many pressures.
    pub fn eval_matrix(&self, pressures: &[f64], deriv: usize) -> Result<BasisMatrix> {
        let rows = pressures
            .iter()
            .map(|&p| self.eval_at(p, deriv))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisMatrix {
            n_basis: self.n_basis(),
            rows,
        })
    }

    /// All derivatives 0..=`max_deriv` of the nonzero basis functions at `p`,
    /// as `(first_index, table)` with `table[d][j]`.
    pub fn eval_all_derivs(&self, p: f64, max_deriv: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        self.check_domain(p)?;
        let interval = self.interval_of(p);
        let span = interval + self.order - 1;
        Ok((interval, self.ders_basis_funs(span, p, max_deriv)))
    }

    /// The NURBS-book derivative algorithm for the `order` basis functions
    /// that are nonzero on the span.
    fn ders_basis_funs(&self, span: usize, u: f64, n_ders: usize) -> Vec<Vec<f64>> {
        let p = self.order - 1;
        let knots = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - knots[span + 1 - j];
            right[j] = knots[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let n_ders = n_ders.min(p);
        let mut ders = vec![vec![0.0; p + 1]; n_ders + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0].iter_mut().for_each(|v| *v = 0.0);
            a[1].iter_mut().for_each(|v| *v = 0.0);
            a[0][0] = 1.0;
            for k in 1..=n_ders {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize {
                    k - 1
                } else {
                    p - r
                };
                for j in j1..=j2 {
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                    d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=n_ders {
            for j in 0..=p {
                ders[k][j] *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    /// Gram matrix of basis derivatives: entry (j, k) is the integral of
    /// `chi_j^(deriv) * chi_k^(deriv)` over [0, 2000]. Symmetric, positive
    /// semidefinite, banded with bandwidth `order - 1`.
    pub fn gram(&self, deriv: usize) -> Result<DMatrix<f64>> {
        if deriv != 0 && deriv != 2 {
            return Err(Error::InvalidArgument(format!(
                "gram matrix supports derivative order 0 or 2, got {deriv}"
            )));
        }
        let n = self.n_basis();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..self.breakpoints.len() - 1 {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let span = i + self.order - 1;
            for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                let u = mid + half * x;
                let ders = self.ders_basis_funs(span, u, deriv);
                let vals = &ders[deriv.min(self.order - 1)];
                for r in 0..self.order {
                    for c in r..self.order {
                        g[(i + r, i + c)] += w * half * vals[r] * vals[c];
                    }
                }
            }
        }
        for r in 0..n {
            for c in 0..r {
                g[(r, c)] = g[(c, r)];
            }
        }
        Ok(g)
    }

    /// Vector of definite integrals of each basis function over [p_lo, p_hi].
    pub fn integral_vector(&self, p_lo: f64, p_hi: f64) -> Result<DVector<f64>> {
        self.check_domain(p_lo)?;
        self.check_domain(p_hi)?;
        if p_lo >= p_hi {
            return Err(Error::InvalidArgument(format!(
                "integral bounds must satisfy p_lo < p_hi, got [{p_lo}, {p_hi}]"
            )));
        }
        let mut out = DVector::zeros(self.n_basis());
        for i in 0..self.breakpoints.len() - 1 {
            let a = self.breakpoints[i].max(p_lo);
            let b = self.breakpoints[i + 1].min(p_hi);
            if a >= b {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let span = i + self.order - 1;
            for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                let u = mid + half * x;
                let ders = self.ders_basis_funs(span, u, 0);
                for r in 0..self.order {
                    out[i + r] += w * half * ders[0][r];
                }
            }
        }
        Ok(out)
    }

    /// Coefficients representing the linear function `a + b p` exactly
    /// (Greville abscissae).
    pub fn linear_coefficients(&self, a: f64, b: f64) -> DVector<f64> {
        let p = self.order - 1;
        DVector::from_iterator(
            self.n_basis(),
            (0..self.n_basis()).map(|k| {
                let greville: f64 =
                    self.knots[k + 1..k + 1 + p].iter().sum::<f64>() / p as f64;
                a + b * greville
            }),
        )
    }
}
