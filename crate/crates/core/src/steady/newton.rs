//! Damped Gauss-Newton iteration with SVD least-squares steps.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{rhs_1d, MFState};
use crate::error::{Error, Result};
use crate::model::EffectiveParams;
use crate::stability::jacobian;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when the max-norm residual drops below this.
    pub tol: f64,
    /// When the line search stalls, the iterate is still accepted below this
    /// residual (rounding floor of the residual evaluation).
    pub floor_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            floor_tol: 1e-10,
            max_iter: 200,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussNewtonOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Minimizes `|r(x)|^2`. Each step solves `J d = -r`, by LU when `J` is square
/// and invertible and in the SVD least-squares sense otherwise, then halves
/// the step until the merit function decreases.
pub fn gauss_newton<R, J>(x0: &[f64], residual: R, jac: J, opts: &NewtonOptions) -> GaussNewtonOutcome
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
{
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut res = max_norm(&r);
    let mut merit = sum_sq(&r);
    for it in 0..opts.max_iter {
        if res < opts.tol {
            return GaussNewtonOutcome {
                x,
                residual: res,
                iterations: it,
                converged: true,
            };
        }
        let m = jac(&x);
        let b = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
        let lu_step = if m.is_square() {
            m.clone().lu().solve(&b).filter(|d| d.iter().all(|v| v.is_finite()))
        } else {
            None
        };
        let step = match lu_step {
            Some(d) => d,
            None => {
                let svd = m.svd(true, true);
                let cutoff = 1e-14 * svd.singular_values.max();
                let Ok(d) = svd.solve(&b, cutoff) else {
                    break;
                };
                d
            }
        };
        if step.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            let rt = residual(&trial);
            let mt = sum_sq(&rt);
            if mt < merit {
                x = trial;
                r = rt;
                merit = mt;
                res = max_norm(&r);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return GaussNewtonOutcome {
                x,
                residual: res,
                iterations: it + 1,
                converged: res < opts.floor_tol,
            };
        }
    }
    GaussNewtonOutcome {
        converged: res < opts.tol,
        x,
        residual: res,
        iterations: opts.max_iter,
    }
}

/// Residual vector used to locate fixed points: the five time derivatives
/// and, without spin decay, the spin-length constraint `(S^2 - N^2) / 2N`.
fn fixed_point_residual(v: &[f64], p: &EffectiveParams) -> Vec<f64> {
    let x = MFState::from_slice(v);
    let mut r = rhs_1d(&x, p).to_array().to_vec();
    if p.gamma == 0.0 {
        let n = p.n_spins;
        r.push((x.s_x * x.s_x + x.s_y * x.s_y + x.w * x.w - n * n) / (2.0 * n));
    }
    r
}

fn fixed_point_jacobian(v: &[f64], p: &EffectiveParams) -> DMatrix<f64> {
    let x = MFState::from_slice(v);
    let j = jacobian(&x, p);
    let rows = if p.gamma == 0.0 { 6 } else { 5 };
    let mut m = DMatrix::zeros(rows, 5);
    m.view_mut((0, 0), (5, 5)).copy_from(&j);
    if rows == 6 {
        let n = p.n_spins;
        m[(5, 2)] = x.s_x / n;
        m[(5, 3)] = x.s_y / n;
        m[(5, 4)] = x.w / n;
    }
    m
}

/// Solves `rhs_1d(x) = 0` from `seed`. Returns the root, its max-norm
/// residual (time derivatives only) and the number of iterations taken.
pub fn newton_solve(seed: &MFState, p: &EffectiveParams, opts: &NewtonOptions) -> Result<(MFState, f64, usize)> {
    if !seed.is_finite() {
        return Err(Error::Precondition("seed must be finite".into()));
    }
    let out = gauss_newton(
        &seed.to_array(),
        |v| fixed_point_residual(v, p),
        |v| fixed_point_jacobian(v, p),
        opts,
    );
    let x = MFState::from_slice(&out.x);
    let residual = max_norm(&rhs_1d(&x, p).to_array());
    if out.converged && x.is_finite() {
        Ok((x, residual, out.iterations))
    } else {
        Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.residual,
            last: x,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_nonlinear_system() {
        // intersection of a circle and a line
        let out = gauss_newton(
            &[2.0, 0.5],
            |v| vec![v[0] * v[0] + v[1] * v[1] - 1.0, v[0] - v[1]],
            |v| DMatrix::from_row_slice(2, 2, &[2.0 * v[0], 2.0 * v[1], 1.0, -1.0]),
            &NewtonOptions::default(),
        );
        assert!(out.converged);
        let h = 0.5f64.sqrt();
        assert!((out.x[0] - h).abs() < 1e-12 && (out.x[1] - h).abs() < 1e-12);
    }

    #[test]
    fn rootless_problem_reports_failure() {
        let out = gauss_newton(
            &[3.0],
            |v| vec![v[0] * v[0] + 1.0],
            |v| DMatrix::from_element(1, 1, 2.0 * v[0]),
            &NewtonOptions::default(),
        );
        assert!(!out.converged);
        assert!(out.residual >= 1.0 - 1e-12);
    }

    #[test]
    fn dark_state_is_found_from_nearby_seed() {
        let p = EffectiveParams {
            delta_ph: 0.5,
            kappa: 0.5,
            g_tilde: 1.0,
            ..Default::default()
        };
        let seed = MFState::new(0.01, -0.02, 0.05, 0.03, -0.99);
        let (x, r, _) = newton_solve(&seed, &p, &NewtonOptions::default()).unwrap();
        assert!(r < 1e-12);
        assert!(x.max_abs_diff(&MFState::new(0.0, 0.0, 0.0, 0.0, -1.0)) < 1e-10);
    }
}
