//! Dormand-Prince 5(4) with the classic fourth-order continuous extension.
//!
//! Works on flat real vectors; the mean-field front ends pack their states
//! into one.

use crate::error::{Error, Result};

/// Tolerances and sampling for [`dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Number of uniform intervals in the output grid; `n_samples + 1` states
    /// are returned including the initial one.
    pub n_samples: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_steps: 10_000_000,
            n_samples: 512,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn samples(mut self, n_samples: usize) -> Self {
        self.n_samples = n_samples;
        self
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Samples of an autonomous trajectory on a uniform grid over `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct Samples {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

fn scaled_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &IntegrateOptions) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(f: &mut F, y0: &[f64], k1: &[f64], opts: &IntegrateOptions, t_end: f64) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = y0.len();
    let scale: Vec<f64> = y0.iter().map(|y| opts.abs_tol + opts.rel_tol * y.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&scale).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(k1);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(t_end);
    let y1: Vec<f64> = y0.iter().zip(k1).map(|(y, k)| y + h0 * k).collect();
    let mut k2 = vec![0.0; n];
    f(&y1, &mut k2);
    let diff: Vec<f64> = k2.iter().zip(k1).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(t_end)
}

/// Integrates `dy/dt = f(y)` from `t = 0` to `t_end`, returning the solution on
/// `opts.n_samples + 1` uniformly spaced times (dense output, no step clamping).
pub fn dopri5<F>(mut f: F, y0: &[f64], t_end: f64, opts: &IntegrateOptions) -> Result<Samples>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be positive and finite, got {t_end}")));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    let n = y0.len();
    let n_samples = opts.n_samples.max(1);
    let dt_out = t_end / n_samples as f64;

    let mut times = Vec::with_capacity(n_samples + 1);
    let mut states = Vec::with_capacity(n_samples + 1);
    times.push(0.0);
    states.push(y0.to_vec());
    let mut next_out = 1usize;

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(&y, &mut k1);
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    let mut t = 0.0;
    let mut h = initial_step(&mut f, &y, &k1, opts, t_end);
    let mut steps = 0usize;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::StepBudget {
                t,
                max_steps: opts.max_steps,
            });
        }
        steps += 1;
        let last_step = t + h >= t_end;
        if last_step {
            h = t_end - t;
        }

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(&tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(&tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(&tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(&y_new, &mut k7);
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }

        let mut e = scaled_norm(&err, &y, &y_new, opts);
        if !e.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            e = f64::INFINITY;
        }

        if e <= 1.0 {
            let t_new = if last_step { t_end } else { t + h };
            // dense output over (t, t_new]
            while next_out <= n_samples {
                let t_out = if next_out == n_samples {
                    t_end
                } else {
                    next_out as f64 * dt_out
                };
                if t_out > t_new {
                    break;
                }
                let theta = ((t_out - t) / h).clamp(0.0, 1.0);
                let theta1 = 1.0 - theta;
                let mut out = vec![0.0; n];
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    let r4 = ydiff - h * k7[i] - bspl;
                    let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    out[i] = y[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
                }
                times.push(t_out);
                states.push(out);
                next_out += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            let fac = if e == 0.0 {
                10.0
            } else {
                (0.9 * e.powf(-0.2)).clamp(0.2, 10.0)
            };
            h *= fac;
        } else {
            let fac = if e.is_finite() {
                (0.9 * e.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            h *= fac;
        }

        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StiffTrajectory { t, last_state: y });
        }
    }

    Ok(Samples { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn harmonic_oscillator_on_dense_grid() {
        let opts = IntegrateOptions::default().samples(1000);
        let out = dopri5(oscillator, &[1.0, 0.0], 20.0, &opts).unwrap();
        assert_eq!(out.times.len(), 1001);
        assert_eq!(*out.times.last().unwrap(), 20.0);
        let max_err = out
            .times
            .iter()
            .zip(&out.states)
            .map(|(t, y)| (y[0] - t.cos()).abs().max((y[1] + t.sin()).abs()))
            .fold(0.0, f64::max);
        assert!(max_err < 1e-8, "dense output error {max_err:e}");
    }

    #[test]
    fn times_are_strictly_increasing() {
        let out = dopri5(oscillator, &[1.0, 0.0], 3.0, &IntegrateOptions::default()).unwrap();
        assert!(out.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(out.times.len(), out.states.len());
    }

    #[test]
    fn exponential_decay_endpoint() {
        let out = dopri5(|y, dy| dy[0] = -2.0 * y[0], &[1.0], 5.0, &IntegrateOptions::default()).unwrap();
        let end = out.states.last().unwrap()[0];
        assert!((end - (-10.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn blow_up_reports_underflow_with_last_state() {
        // y' = y^2 from y = 1 blows up at t = 1
        let err = dopri5(|y, dy| dy[0] = y[0] * y[0], &[1.0], 2.0, &IntegrateOptions::default()).unwrap_err();
        match err {
            Error::StiffTrajectory { t, last_state } => {
                assert!(t < 1.0 && t > 0.99);
                assert!(last_state[0] > 1e3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(dopri5(oscillator, &[1.0, 0.0], 0.0, &IntegrateOptions::default()).is_err());
        let bad = IntegrateOptions::with_tolerances(0.0, 1e-9);
        assert!(dopri5(oscillator, &[1.0, 0.0], 1.0, &bad).is_err());
    }
}
