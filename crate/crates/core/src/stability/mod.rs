//! Linear stability of fixed points, Hopf detection and limit cycles.

mod cycle;
mod hopf;

use nalgebra::Matrix5;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::MFState;
use crate::model::EffectiveParams;
use crate::steady::{Stability, SteadyBranch};

pub use cycle::{cycle_integrate_options, find_limit_cycle, find_limit_cycle_with, CycleDiagnostics, LimitCycle};
pub use hopf::{hopf_scan, HopfPoint};

/// Threshold on `|Re y|` separating stable, marginal and unstable modes.
pub const GROWTH_TOL: f64 = 1e-8;

/// Linearization of the single-cavity vector field around `x`. Rows and
/// columns are ordered `(alpha_r, alpha_i, s_x, s_y, w)`.
pub fn jacobian(x: &MFState, p: &EffectiveParams) -> Matrix5<f64> {
    let (ar, ai, sx, sy, w) = (x.alpha_r, x.alpha_i, x.s_x, x.s_y, x.w);
    let k = p.kappa;
    let l = p.lambda;
    let g = p.g_tilde;
    let shift = p.delta_ph + l * w;
    let spin_freq = p.delta_at + 2.0 * l * (ar * ar + ai * ai);
    let half_gamma = 0.5 * p.gamma;
    #[rustfmt::skip]
    let m = Matrix5::new(
        -k,                              shift,                           0.0,         -0.5 * g,    l * ai,
        -shift,                          -k,                              -0.5 * g,    0.0,         -l * ar,
        -4.0 * l * ar * sy,              -2.0 * g * w - 4.0 * l * ai * sy, -half_gamma, -spin_freq,  -2.0 * g * ai,
        -2.0 * g * w + 4.0 * l * ar * sx, 4.0 * l * ai * sx,              spin_freq,   -half_gamma, -2.0 * g * ar,
        2.0 * g * sy,                    2.0 * g * sx,                    2.0 * g * ai, 2.0 * g * ar, -p.gamma,
    );
    m
}

/// Eigenvalues of the Jacobian at a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: [Complex64; 5],
    /// Eigenvalue of smallest magnitude; the spin-length zero mode when the
    /// spin is conserved.
    pub zero_mode_index: usize,
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues with the zero mode removed when `exclude_zero_mode`.
    pub fn relevant(&self, exclude_zero_mode: bool) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(i, _)| !exclude_zero_mode || *i != self.zero_mode_index)
            .map(|(_, z)| *z)
            .collect()
    }

    /// Largest real part among modes with `|Im| > im_tol`, with its `|Im|`.
    pub fn leading_oscillatory(&self, exclude_zero_mode: bool, im_tol: f64) -> Option<(f64, f64)> {
        self.relevant(exclude_zero_mode)
            .into_iter()
            .filter(|z| z.im.abs() > im_tol)
            .map(|z| (z.re, z.im.abs()))
            .max_by(|a, b| a.0.total_cmp(&b.0))
    }
}

pub fn spectrum(x: &MFState, p: &EffectiveParams) -> Option<Spectrum> {
    let m = jacobian(x, p);
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let eig = m.complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    let mut eigenvalues = [Complex64::new(0.0, 0.0); 5];
    for (dst, src) in eigenvalues.iter_mut().zip(eig.iter()) {
        *dst = *src;
    }
    // deterministic order: by real part, then imaginary part
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let zero_mode_index = eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Some(Spectrum {
        eigenvalues,
        zero_mode_index,
    })
}

/// Stability verdict of a fixed point. Without spin decay the mode that
/// changes the conserved spin length is discarded first.
pub fn classify_state(x: &MFState, p: &EffectiveParams) -> (Stability, Option<Spectrum>) {
    let Some(spec) = spectrum(x, p) else {
        return (Stability::Unknown, None);
    };
    let verdict = verdict(&spec, p.gamma == 0.0);
    (verdict, Some(spec))
}

pub fn verdict(spec: &Spectrum, exclude_zero_mode: bool) -> Stability {
    let modes = spec.relevant(exclude_zero_mode);
    if modes.iter().any(|z| z.re > GROWTH_TOL) {
        Stability::Unstable
    } else if modes.iter().all(|z| z.re < -GROWTH_TOL) {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

pub fn classify(branch: &SteadyBranch, p: &EffectiveParams) -> Stability {
    classify_state(&branch.state, p).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rhs_1d;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central-difference Jacobian of the vector field.
    fn fd_jacobian(x: &MFState, p: &EffectiveParams, h: f64) -> Matrix5<f64> {
        let mut m = Matrix5::zeros();
        for j in 0..5 {
            let mut up = x.to_array();
            let mut dn = x.to_array();
            up[j] += h;
            dn[j] -= h;
            let fu = rhs_1d(&MFState::from_slice(&up), p).to_array();
            let fd = rhs_1d(&MFState::from_slice(&dn), p).to_array();
            for i in 0..5 {
                m[(i, j)] = (fu[i] - fd[i]) / (2.0 * h);
            }
        }
        m
    }

    #[test]
    fn linear_model_has_no_lambda_entries() {
        let p = EffectiveParams {
            delta_ph: 0.5,
            kappa: 0.5,
            g_tilde: 1.3,
            eta_r: 1.0,
            ..Default::default()
        };
        let m = jacobian(&MFState::new(0.0, 0.0, -0.3, 0.1, 0.9), &p);
        assert_eq!(m[(0, 3)], -0.65);
        assert_eq!(m[(0, 4)], 0.0);
        assert_eq!(m[(1, 4)], 0.0);
        assert_eq!(m[(0, 1)], 0.5);
        assert_eq!(m[(1, 0)], -0.5);
    }

    #[test]
    fn trace_is_twice_the_cavity_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let p = EffectiveParams {
                delta_at: rng.gen_range(-1.0..1.0),
                lambda: rng.gen_range(-3.0..3.0),
                g_tilde: rng.gen_range(-2.0..2.0),
                kappa: rng.gen_range(0.0..2.0),
                ..Default::default()
            };
            let x = MFState::new(rng.gen(), rng.gen(), rng.gen(), rng.gen(), rng.gen());
            assert!((jacobian(&x, &p).trace() + 2.0 * p.kappa).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..1000 {
            let p = EffectiveParams {
                delta_at: rng.gen_range(-2.0..2.0),
                delta_ph: rng.gen_range(-2.0..2.0),
                lambda: rng.gen_range(-5.0..5.0),
                g_tilde: rng.gen_range(-3.0..3.0),
                kappa: rng.gen_range(0.0..2.0),
                gamma: rng.gen_range(0.0..1.0),
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
            let a = jacobian(&x, &p);
            let n = fd_jacobian(&x, &p, 1e-6);
            let rel = (a - n).norm() / a.norm().max(1.0);
            assert!(rel < 1e-5, "relative mismatch {rel:e}");
        }
    }

    #[test]
    fn dark_state_of_unpumped_cavity_is_stable() {
        let p = EffectiveParams {
            delta_ph: 0.5,
            g_tilde: 1.0,
            kappa: 0.5,
            ..Default::default()
        };
        let (v, spec) = classify_state(&MFState::new(0.0, 0.0, 0.0, 0.0, -1.0), &p);
        assert_eq!(v, Stability::Stable);
        assert!(spec.unwrap().eigenvalues.iter().any(|z| z.norm() < 1e-14));
        // the inverted pole is unstable
        let (v, _) = classify_state(&MFState::new(0.0, 0.0, 0.0, 0.0, 1.0), &p);
        assert_eq!(v, Stability::Unstable);
    }

    #[test]
    fn zero_mode_is_kept_with_spin_decay() {
        let p = EffectiveParams {
            delta_ph: 0.5,
            g_tilde: 1.0,
            kappa: 0.5,
            gamma: 0.2,
            ..Default::default()
        };
        let (v, spec) = classify_state(&MFState::new(0.0, 0.0, 0.0, 0.0, -1.0), &p);
        assert_eq!(v, Stability::Stable);
        assert!(spec.unwrap().eigenvalues.iter().all(|z| z.re < -0.05));
    }
}
