//! Box-constrained quasi-Newton minimization: limited-memory BFGS directions
//! with gradient projection onto the bounds and an Armijo backtracking line
//! search along the projected path. Gradients are central finite differences,
//! so objectives only need function values.

#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// convergence on the projected-gradient infinity norm
    pub grad_tol: f64,
    /// convergence on relative objective decrease
    pub f_tol_rel: f64,
    pub memory: usize,
    pub fd_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-5,
            f_tol_rel: 1e-10,
            memory: 8,
            fd_step: 6e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub grad_inf_norm: f64,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

fn projected_gradient(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| {
            if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f` over the box [lower, upper].
pub fn minimize_box<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &OptimOptions,
) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut evaluations = 0usize;

    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let mut fx = eval(&x, &mut evaluations);
    let mut grad = fd_gradient(&mut eval, &x, lower, upper, opts.fd_step, &mut evaluations);

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut small_steps = 0usize;
    let mut pg_norm = inf_norm(&projected_gradient(&x, &grad, lower, upper));

    while iterations < opts.max_iter {
        iterations += 1;
        let pg = projected_gradient(&x, &grad, lower, upper);
        pg_norm = inf_norm(&pg);
        if pg_norm <= opts.grad_tol {
            converged = true;
            break;
        }

        // two-loop recursion on the full gradient
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        if !s_hist.is_empty() {
            let m = s_hist.len();
            let mut alpha = vec![0.0; m];
            for i in (0..m).rev() {
                alpha[i] = rho_hist[i] * dot(&s_hist[i], &d);
                for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                    *dj -= alpha[i] * yj;
                }
            }
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            for dj in d.iter_mut() {
                *dj *= gamma.max(1e-12);
            }
            for i in 0..m {
                let beta = rho_hist[i] * dot(&y_hist[i], &d);
                for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                    *dj += (alpha[i] - beta) * sj;
                }
            }
        }
        if dot(&d, &grad) > -1e-14 * inf_norm(&d) * inf_norm(&grad) {
            d = grad.iter().map(|g| -g).collect();
        }

        // Armijo backtracking along the projected path
        let mut step = 1.0;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        for _ in 0..50 {
            let mut cand: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut cand, lower, upper);
            let shift: Vec<f64> = cand.iter().zip(&x).map(|(c, xi)| c - xi).collect();
            if inf_norm(&shift) < 1e-15 * (1.0 + inf_norm(&x)) {
                break;
            }
            let fc = eval(&cand, &mut evaluations);
            let decrease = dot(&grad, &shift);
            if fc <= fx + 1e-4 * decrease || (decrease >= 0.0 && fc < fx) {
                x_new = cand;
                f_new = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if accepted && step == 1.0 {
            // the unit step already passes: expand toward the line minimum so
            // the curvature pair s'y stays positive and the Hessian model
            // keeps learning (a short stale direction would otherwise crawl)
            let mut t = 2.0;
            for _ in 0..30 {
                let mut cand: Vec<f64> =
                    x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
                project(&mut cand, lower, upper);
                let shift: Vec<f64> = cand.iter().zip(&x).map(|(c, xi)| c - xi).collect();
                if inf_norm(&shift) < 1e-15 * (1.0 + inf_norm(&x)) {
                    break;
                }
                let fc = eval(&cand, &mut evaluations);
                if fc < f_new {
                    x_new = cand;
                    f_new = fc;
                    t *= 2.0;
                } else {
                    break;
                }
            }
        }
        if !accepted {
            if !s_hist.is_empty() {
                // stale curvature information; retry from steepest descent
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                continue;
            }
            converged = pg_norm <= 10.0 * opts.grad_tol;
            break;
        }

        let grad_new = fd_gradient(&mut eval, &x_new, lower, upper, opts.fd_step, &mut evaluations);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * inf_norm(&s) * inf_norm(&y) {
            s_hist.push(s);
            y_hist.push(y);
            rho_hist.push(1.0 / sy);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
        }

        let df = fx - f_new;
        x = x_new;
        fx = f_new;
        grad = grad_new;
        if df.abs() <= opts.f_tol_rel * (fx.abs() + 1.0) {
            small_steps += 1;
            if small_steps >= 3 {
                converged = true;
                pg_norm = inf_norm(&projected_gradient(&x, &grad, lower, upper));
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    OptimResult {
        x,
        f: fx,
        iterations,
        evaluations,
        converged,
        grad_inf_norm: pg_norm,
    }
}

fn fd_gradient<E>(
    eval: &mut E,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    step: f64,
    evaluations: &mut usize,
) -> Vec<f64>
where
    E: FnMut(&[f64], &mut usize) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut xp = x.to_vec();
    for i in 0..n {
        let h = step * (1.0 + x[i].abs());
        let hi = (x[i] + h).min(upper[i]);
        let lo = (x[i] - h).max(lower[i]);
        if hi - lo < 1e-300 {
            g[i] = 0.0;
            continue;
        }
        xp[i] = hi;
        let f_hi = eval(&xp, evaluations);
        xp[i] = lo;
        let f_lo = eval(&xp, evaluations);
        xp[i] = x[i];
        g[i] = (f_hi - f_lo) / (hi - lo);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_interior_minimum() {
        let r = minimize_box(
            |x| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2),
            &[4.0, 4.0],
            &[-10.0, -10.0],
            &[10.0, 10.0],
            &OptimOptions::default(),
        );
        assert!(r.converged);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_relative_eq!(r.x[1], -0.5, epsilon = 1e-4);
    }

    #[test]
    fn minimum_pinned_to_bound() {
        let r = minimize_box(
            |x| (x[0] + 3.0).powi(2),
            &[2.0],
            &[-1.0],
            &[5.0],
            &OptimOptions::default(),
        );
        assert!(r.converged);
        assert_relative_eq!(r.x[0], -1.0, epsilon = 1e-10);
    }

    #[test]
    fn rosenbrock_in_a_box() {
        let r = minimize_box(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            &OptimOptions {
                max_iter: 500,
                ..Default::default()
            },
        );
        assert!(r.f < 1e-7, "f = {}", r.f);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(r.x[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn descent_never_increases_objective() {
        let f = |x: &[f64]| x[0].powi(4) + (x[1] - 2.0).powi(2) + (x[0] * x[1]).powi(2);
        let start = [1.5, -1.0];
        let f0 = f(&start);
        let r = minimize_box(
            f,
            &start,
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &OptimOptions::default(),
        );
        assert!(r.f <= f0);
    }
}
