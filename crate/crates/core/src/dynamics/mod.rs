//! Mean-field equations of motion and their time integration.
//!
//! The single-cavity model uses a collective spin of length `N`
//! (`s_x^2 + s_y^2 + w^2 = N^2`); the array model in [`two_d`] uses per-site
//! spins of length one. A single cavity seen through the array equations is
//! therefore the `N = 1` case.

pub mod ode;
pub mod two_d;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::EffectiveParams;
pub use ode::IntegrateOptions;
pub use two_d::{integrate_2d, rhs_2d, State2D};

/// Cavity quadratures and collective spin of the single-mode model.
///
/// `alpha = alpha_r + i alpha_i`, `s = (s_x - i s_y) / 2`, `w` is the inversion.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MFState {
    pub alpha_r: f64,
    pub alpha_i: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub w: f64,
}

impl MFState {
    pub const fn new(alpha_r: f64, alpha_i: f64, s_x: f64, s_y: f64, w: f64) -> Self {
        Self {
            alpha_r,
            alpha_i,
            s_x,
            s_y,
            w,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.alpha_r, self.alpha_i, self.s_x, self.s_y, self.w]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha_r * self.alpha_r + self.alpha_i * self.alpha_i
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &MFState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(
            self.alpha_r * k,
            self.alpha_i * k,
            self.s_x * k,
            self.s_y * k,
            self.w * k,
        )
    }

    pub fn plus(&self, other: &MFState) -> Self {
        let a = self.to_array();
        let b = other.to_array();
        Self::new(a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3], a[4] + b[4])
    }
}

/// Time derivative of the single-cavity mean-field state.
///
/// With `gamma > 0` each spin relaxes towards its ground state, which for the
/// collective spin reads `-gamma/2` on `s` and `-gamma (w + N)` on `w`.
pub fn rhs_1d(x: &MFState, p: &EffectiveParams) -> MFState {
    let shift = p.lambda * x.w + p.delta_ph;
    let spin_freq = p.delta_at + 2.0 * p.lambda * x.alpha_sq();
    let gt = p.g_tilde;
    let mut d = MFState {
        alpha_r: -p.kappa * x.alpha_r + shift * x.alpha_i - 0.5 * gt * x.s_y + p.eta_i,
        alpha_i: -shift * x.alpha_r - p.kappa * x.alpha_i - 0.5 * gt * x.s_x - p.eta_r,
        s_x: -2.0 * gt * x.w * x.alpha_i - spin_freq * x.s_y,
        s_y: -2.0 * gt * x.w * x.alpha_r + spin_freq * x.s_x,
        w: 2.0 * gt * (x.alpha_r * x.s_y + x.alpha_i * x.s_x),
    };
    if p.gamma != 0.0 {
        d.s_x -= 0.5 * p.gamma * x.s_x;
        d.s_y -= 0.5 * p.gamma * x.s_y;
        d.w -= p.gamma * (x.w + p.n_spins);
    }
    d
}

/// `s_x^2 + s_y^2 + w^2`.
pub fn spin_norm(x: &MFState) -> f64 {
    x.s_x * x.s_x + x.s_y * x.s_y + x.w * x.w
}

/// Uniformly sampled solution of an initial value problem.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// Largest deviation of the conserved spin length from its initial value;
    /// `None` when spin decay breaks the conservation law.
    pub conservation_drift: Option<f64>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

/// Integrates the single-cavity equations over `[0, t_end]` with the given
/// tolerances and the default 512-interval output grid.
pub fn integrate(
    state0: &MFState,
    p: &EffectiveParams,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory<MFState>> {
    integrate_with(state0, p, t_end, &IntegrateOptions::with_tolerances(rel_tol, abs_tol))
}

pub fn integrate_with(
    state0: &MFState,
    p: &EffectiveParams,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory<MFState>> {
    let opts = IntegrateOptions {
        n_samples: opts.n_samples.max(512),
        ..*opts
    };
    let out = ode::dopri5(
        |y, dy| {
            let d = rhs_1d(&MFState::from_slice(y), p);
            dy.copy_from_slice(&d.to_array());
        },
        &state0.to_array(),
        t_end,
        &opts,
    )?;
    let states: Vec<MFState> = out.states.iter().map(|v| MFState::from_slice(v)).collect();
    let conservation_drift = (p.gamma == 0.0).then(|| {
        let s0 = spin_norm(&states[0]);
        states.iter().map(|s| (spin_norm(s) - s0).abs()).fold(0.0, f64::max)
    });
    Ok(Trajectory {
        times: out.times,
        states,
        conservation_drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Settling {
    Settled,
    /// Still moving at the end of the run; a limit-cycle candidate.
    NonStationary,
}

/// A run has settled when the vector field at the final sample is below `1e-8`
/// and no component moved more than `1e-7` over the last tenth of the samples.
pub fn settle_status(traj: &Trajectory<MFState>, p: &EffectiveParams) -> Settling {
    let last = traj.last();
    if rhs_1d(last, p).max_abs() >= 1e-8 {
        return Settling::NonStationary;
    }
    let tail = (traj.len() / 10).max(2);
    let window = &traj.states[traj.len() - tail..];
    let spread = (0..5)
        .map(|k| {
            let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                let v = s.to_array()[k];
                (lo.min(v), hi.max(v))
            });
            hi - lo
        })
        .fold(0.0, f64::max);
    if spread < 1e-7 {
        Settling::Settled
    } else {
        Settling::NonStationary
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base() -> EffectiveParams {
        EffectiveParams {
            delta_ph: 0.5,
            kappa: 0.5,
            eta_r: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn unpumped_empty_cavity_is_static() {
        let p = EffectiveParams {
            delta_at: 0.3,
            delta_ph: 0.5,
            lambda: 1.0,
            g_tilde: 2.0,
            kappa: 0.5,
            ..Default::default()
        };
        let d = rhs_1d(&MFState::new(0.0, 0.0, 0.0, 0.0, 0.7), &p);
        assert_eq!(d, MFState::default());
    }

    #[test]
    fn pump_alone_drives_imaginary_quadrature() {
        let p = EffectiveParams {
            eta_r: 1.0,
            n_spins: 2.0,
            ..Default::default()
        };
        let d = rhs_1d(&MFState::new(0.0, 0.0, 0.0, 0.0, 2.0), &p);
        assert_eq!(d, MFState::new(0.0, -1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_evaluated_derivative() {
        // state (1, 0, 1, 0, 0), delta_ph = 0.5, g = 1, kappa = 0.5, eta_r = 1:
        // d alpha_r = -0.5*1 + 0.5*0 - 0.5*0 + 0          = -0.5
        // d alpha_i = -0.5*1 - 0.5*0 - 0.5*1 - 1          = -2.0
        // d s_x     = -2*1*0*0 - 0*0                      =  0
        // d s_y     = -2*1*0*1 + 0*1                      =  0
        // d w       = 2*1*(1*0 + 0*1)                     =  0
        let p = EffectiveParams { g_tilde: 1.0, ..base() };
        let d = rhs_1d(&MFState::new(1.0, 0.0, 1.0, 0.0, 0.0), &p);
        assert_eq!(d, MFState::new(-0.5, -2.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn spin_norm_examples() {
        assert_eq!(spin_norm(&MFState::new(0.0, 0.0, 3.0, 0.0, 0.0)), 9.0);
        assert_eq!(spin_norm(&MFState::new(0.0, 0.0, 0.0, 0.0, -3.0)), 9.0);
        // the cavity quadratures do not enter
        assert_eq!(spin_norm(&MFState::new(1.0, 1.0, 1.0, 1.0, 1.0)), 3.0);
    }

    #[test]
    fn spin_length_is_an_exact_invariant_of_the_vector_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = EffectiveParams {
                delta_at: rng.gen_range(-3.0..3.0),
                delta_ph: rng.gen_range(-3.0..3.0),
                lambda: rng.gen_range(-5.0..5.0),
                g_tilde: rng.gen_range(-3.0..3.0),
                kappa: rng.gen_range(0.0..2.0),
                gamma: 0.0,
                eta_r: rng.gen_range(-2.0..2.0),
                eta_i: rng.gen_range(-2.0..2.0),
                n_spins: 1.0,
            };
            let x = MFState::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let d = rhs_1d(&x, &p);
            let dot = x.s_x * d.s_x + x.s_y * d.s_y + x.w * d.w;
            let scale = (x.s_x * d.s_x).abs() + (x.s_y * d.s_y).abs() + (x.w * d.w).abs();
            assert!(dot.abs() <= 1e-12 * scale.max(1.0), "dot {dot:e} scale {scale:e}");
        }
    }

    #[test]
    fn spin_decay_pulls_towards_ground_state() {
        let p = EffectiveParams {
            gamma: 0.4,
            n_spins: 2.0,
            ..Default::default()
        };
        let d = rhs_1d(&MFState::new(0.0, 0.0, 1.0, -1.0, 0.5), &p);
        assert_eq!(d, MFState::new(0.0, 0.0, -0.2, 0.2, -0.4 * 2.5));
        assert_eq!(rhs_1d(&MFState::new(0.0, 0.0, 0.0, 0.0, -2.0), &p), MFState::default());
    }

    #[test]
    fn unpumped_lossy_cavity_relaxes_to_a_pole() {
        let n = 1.0;
        let p = EffectiveParams {
            g_tilde: 1.0,
            kappa: 0.5,
            n_spins: n,
            ..Default::default()
        };
        let x0 = MFState::new(0.1, 0.0, 0.6, 0.0, 0.8).scaled(n);
        let traj = integrate(&x0, &p, 200.0, 1e-10, 1e-12).unwrap();
        let end = traj.last();
        assert!(end.alpha_r.abs().max(end.alpha_i.abs()) < 1e-6);
        assert!(end.s_x.abs().max(end.s_y.abs()) < 1e-6);
        assert!((end.w.abs() - n).abs() < 1e-6);
        assert_eq!(settle_status(&traj, &p), Settling::Settled);
    }

    #[test]
    fn sampling_grid_is_uniform_and_at_least_512() {
        let traj = integrate(&MFState::new(0.0, 0.0, 0.0, 0.0, -1.0), &base(), 10.0, 1e-9, 1e-11).unwrap();
        assert!(traj.len() >= 513);
        let dt = traj.times[1] - traj.times[0];
        assert!(traj.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() < 1e-12));
    }

    #[test]
    fn tighter_tolerance_shrinks_endpoint_error() {
        // g_tilde = 0 decouples the cavity, which is then a linear driven
        // oscillator with a closed-form solution.
        let p = EffectiveParams {
            delta_ph: 1.3,
            kappa: 0.2,
            eta_r: 0.7,
            eta_i: -0.4,
            ..Default::default()
        };
        let z = num_complex::Complex64::new(p.kappa, p.delta_ph);
        let eta = num_complex::Complex64::new(p.eta_r, p.eta_i);
        let a0 = num_complex::Complex64::new(1.0, 0.5);
        // d alpha/dt = -z alpha - i eta  =>  alpha(t) = a_inf + (a0 - a_inf) e^{-z t}
        let a_inf = -num_complex::Complex64::i() * eta / z;
        let t_end = 15.0;
        let exact = a_inf + (a0 - a_inf) * (-z * t_end).exp();
        let x0 = MFState::new(a0.re, a0.im, 0.0, 0.0, -1.0);
        let err_at = |tol: f64| {
            let end = *integrate(&x0, &p, t_end, tol, tol * 1e-2).unwrap().last();
            (end.alpha_r - exact.re).abs().max((end.alpha_i - exact.im).abs())
        };
        let coarse = err_at(1e-5);
        let fine = err_at(1e-8);
        assert!(fine < coarse / 50.0, "coarse {coarse:e} fine {fine:e}");
        assert!(fine < 1e-7);
    }
}
