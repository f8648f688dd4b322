//! Mean-field equations of the two-dimensional array.
//!
//! Row mode `a_i` couples to every spin of row `i`, column mode `b_nu` to every
//! spin of column `nu`. Repeated spatial indices are summed: the row equation
//! sums its bracket over the columns of that row, including the `-1` inside
//! the cross term `lambda * beta_nu * (w_{i nu} - 1)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ode::{self, IntegrateOptions};
use super::Trajectory;
use crate::error::{Error, Result};
use crate::model::Params2D;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row fields, column fields and per-site spins (row-major `n_rows x n_cols`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State2D {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub w: Vec<f64>,
}

impl State2D {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            alpha: vec![Complex64::new(0.0, 0.0); n_rows],
            beta: vec![Complex64::new(0.0, 0.0); n_cols],
            s: vec![Complex64::new(0.0, 0.0); n_rows * n_cols],
            w: vec![0.0; n_rows * n_cols],
        }
    }

    /// Empty cavities, all spins in the ground state.
    pub fn dark(n_rows: usize, n_cols: usize) -> Self {
        Self {
            w: vec![-1.0; n_rows * n_cols],
            ..Self::zeros(n_rows, n_cols)
        }
    }

    pub fn n_rows(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_cols(&self) -> usize {
        self.beta.len()
    }

    pub fn site(&self, i: usize, nu: usize) -> usize {
        i * self.n_cols() + nu
    }

    pub fn check_shape(&self, p: &Params2D) -> Result<()> {
        let sites = p.n_rows * p.n_cols;
        if self.alpha.len() != p.n_rows || self.beta.len() != p.n_cols || self.s.len() != sites || self.w.len() != sites
        {
            return Err(Error::Shape(format!(
                "state has {} rows, {} cols, {} spins; parameters expect {}x{}",
                self.alpha.len(),
                self.beta.len(),
                self.s.len(),
                p.n_rows,
                p.n_cols
            )));
        }
        Ok(())
    }

    /// Per-site `w^2 + 4|s|^2`.
    pub fn local_spin_lengths(&self) -> Vec<f64> {
        self.s
            .iter()
            .zip(&self.w)
            .map(|(s, w)| w * w + 4.0 * s.norm_sqr())
            .collect()
    }

    /// `W^2 + 4|Sigma|^2` of the summed spin.
    pub fn global_spin_length(&self) -> f64 {
        let big_w: f64 = self.w.iter().sum();
        let sigma: Complex64 = self.s.iter().sum();
        big_w * big_w + 4.0 * sigma.norm_sqr()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * (self.alpha.len() + self.beta.len() + self.s.len()) + self.w.len());
        for z in self.alpha.iter().chain(&self.beta).chain(&self.s) {
            v.push(z.re);
            v.push(z.im);
        }
        v.extend_from_slice(&self.w);
        v
    }

    pub fn from_vec(v: &[f64], n_rows: usize, n_cols: usize) -> Self {
        let sites = n_rows * n_cols;
        let cplx = |k: usize| Complex64::new(v[2 * k], v[2 * k + 1]);
        let alpha = (0..n_rows).map(cplx).collect();
        let beta = (n_rows..n_rows + n_cols).map(cplx).collect();
        let s = (n_rows + n_cols..n_rows + n_cols + sites).map(cplx).collect();
        let off = 2 * (n_rows + n_cols + sites);
        Self {
            alpha,
            beta,
            s,
            w: v[off..off + sites].to_vec(),
        }
    }
}

/// Time derivative of the array state.
pub fn rhs_2d(x: &State2D, p: &Params2D) -> Result<State2D> {
    x.check_shape(p)?;
    let (nr, nc) = (p.n_rows, p.n_cols);
    let lam = p.lambda;
    let mut d = State2D::zeros(nr, nc);

    for i in 0..nr {
        let mut acc = (p.delta_ph_a - I * p.kappa) * x.alpha[i] + p.eta;
        for nu in 0..nc {
            let k = x.site(i, nu);
            acc += lam * x.w[k] * x.alpha[i] + p.g_tilde_a * x.s[k] + lam * x.beta[nu] * (x.w[k] - 1.0);
        }
        d.alpha[i] = -I * acc;
    }
    for nu in 0..nc {
        let mut acc = (p.delta_ph_b - I * p.kappa) * x.beta[nu] + p.eta;
        for i in 0..nr {
            let k = x.site(i, nu);
            acc += lam * x.w[k] * x.beta[nu] + p.g_tilde_b * x.s[k] + lam * x.alpha[i] * (x.w[k] - 1.0);
        }
        d.beta[nu] = -I * acc;
    }
    for i in 0..nr {
        for nu in 0..nc {
            let k = x.site(i, nu);
            let field = x.alpha[i] + x.beta[nu];
            let drive = p.g_tilde_a * x.alpha[i] + p.g_tilde_b * x.beta[nu];
            let freq = p.delta_at - I * (0.5 * p.gamma) + 2.0 * lam * field.norm_sqr();
            d.s[k] = -I * (freq * x.s[k] - drive * x.w[k]);
            // i dw = 2 (s* G - s G*) - i gamma (w + 1)
            d.w[k] = 4.0 * (x.s[k].conj() * drive).im - p.gamma * (x.w[k] + 1.0);
        }
    }
    Ok(d)
}

/// Per-site `d(w^2 + 4|s|^2)/dt` evaluated from the vector field.
pub fn local_conservation_rates(x: &State2D, dx: &State2D) -> Vec<f64> {
    x.s.iter()
        .zip(&x.w)
        .zip(dx.s.iter().zip(&dx.w))
        .map(|((s, w), (ds, dw))| 2.0 * w * dw + 8.0 * (s.conj() * ds).re)
        .collect()
}

/// `d(W^2 + 4|Sigma|^2)/dt` of the summed spin.
pub fn global_conservation_rate(x: &State2D, dx: &State2D) -> f64 {
    let big_w: f64 = x.w.iter().sum();
    let d_big_w: f64 = dx.w.iter().sum();
    let sigma: Complex64 = x.s.iter().sum();
    let d_sigma: Complex64 = dx.s.iter().sum();
    2.0 * big_w * d_big_w + 8.0 * (sigma.conj() * d_sigma).re
}

/// Integrates the array equations. The drift reported is the largest change
/// of any per-site spin length over the samples.
pub fn integrate_2d(
    state0: &State2D,
    p: &Params2D,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory<State2D>> {
    state0.check_shape(p)?;
    let (nr, nc) = (p.n_rows, p.n_cols);
    let opts = IntegrateOptions {
        n_samples: opts.n_samples.max(512),
        ..*opts
    };
    let out = ode::dopri5(
        |y, dy| {
            let x = State2D::from_vec(y, nr, nc);
            let d = rhs_2d(&x, p).expect("shape checked before integration");
            dy.copy_from_slice(&d.to_vec());
        },
        &state0.to_vec(),
        t_end,
        &opts,
    )?;
    let states: Vec<State2D> = out.states.iter().map(|v| State2D::from_vec(v, nr, nc)).collect();
    let conservation_drift = (p.gamma == 0.0).then(|| {
        let l0 = states[0].local_spin_lengths();
        states
            .iter()
            .flat_map(|s| {
                s.local_spin_lengths()
                    .into_iter()
                    .zip(&l0)
                    .map(|(l, l0)| (l - l0).abs())
            })
            .fold(0.0, f64::max)
    });
    Ok(Trajectory {
        times: out.times,
        states,
        conservation_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{rhs_1d, MFState};
    use crate::model::EffectiveParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_params(rng: &mut impl Rng, nr: usize, nc: usize, gamma: f64) -> Params2D {
        Params2D {
            g_tilde_a: rng.gen_range(-2.0..2.0),
            g_tilde_b: rng.gen_range(-2.0..2.0),
            delta_ph_a: rng.gen_range(-1.0..1.0),
            delta_ph_b: rng.gen_range(-1.0..1.0),
            delta_at: rng.gen_range(-1.0..1.0),
            lambda: rng.gen_range(-2.0..2.0),
            kappa: rng.gen_range(0.0..1.0),
            gamma,
            eta: c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            n_rows: nr,
            n_cols: nc,
        }
    }

    fn random_state(rng: &mut impl Rng, nr: usize, nc: usize) -> State2D {
        let mut cz = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        State2D {
            alpha: (0..nr).map(|_| cz()).collect(),
            beta: (0..nc).map(|_| cz()).collect(),
            s: (0..nr * nc).map(|_| cz() * 0.5).collect(),
            w: (0..nr * nc).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn dark_state_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = random_params(&mut rng, 3, 2, 0.3);
        p.eta = c(0.0, 0.0);
        let d = rhs_2d(&State2D::dark(3, 2), &p).unwrap();
        assert!(d.to_vec().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_mismatch_is_a_contract_violation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_params(&mut rng, 2, 2, 0.0);
        assert!(matches!(rhs_2d(&State2D::dark(2, 3), &p), Err(Error::Shape(_))));
    }

    #[test]
    fn single_site_matches_single_cavity_spin_equations() {
        // One row, one column, equal couplings, alpha = beta: the spin sees the
        // single-cavity field alpha + beta with a unit-length spin.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = rng.gen_range(-2.0..2.0);
            let gamma = rng.gen_range(0.0..0.5);
            let mut p = random_params(&mut rng, 1, 1, gamma);
            p.g_tilde_a = g;
            p.g_tilde_b = g;
            let mut x = random_state(&mut rng, 1, 1);
            x.beta[0] = x.alpha[0];
            let d2 = rhs_2d(&x, &p).unwrap();

            let field = x.alpha[0] + x.beta[0];
            let p1 = EffectiveParams {
                delta_at: p.delta_at,
                delta_ph: 0.0,
                lambda: p.lambda,
                g_tilde: g,
                kappa: p.kappa,
                gamma: p.gamma,
                eta_r: 0.0,
                eta_i: 0.0,
                n_spins: 1.0,
            };
            let x1 = MFState::new(field.re, field.im, 2.0 * x.s[0].re, -2.0 * x.s[0].im, x.w[0]);
            let d1 = rhs_1d(&x1, &p1);
            let ds1 = c(d1.s_x, -d1.s_y) * 0.5;
            assert!((ds1 - d2.s[0]).norm() < 1e-12, "{ds1} vs {}", d2.s[0]);
            assert!((d1.w - d2.w[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_row_without_nonlinearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = random_params(&mut rng, 1, 2, 0.0);
        p.lambda = 0.0;
        let x = random_state(&mut rng, 1, 2);
        let d = rhs_2d(&x, &p).unwrap();
        for nu in 0..2 {
            let expect =
                -I * p.delta_at * x.s[nu] + I * (p.g_tilde_a * x.alpha[0] + p.g_tilde_b * x.beta[nu]) * x.w[nu];
            assert!((d.s[nu] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn local_and_global_conservation_without_spin_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (nr, nc) = (rng.gen_range(1..4), rng.gen_range(1..4));
            let p = random_params(&mut rng, nr, nc, 0.0);
            let mut x = random_state(&mut rng, nr, nc);
            let d = rhs_2d(&x, &p).unwrap();
            for r in local_conservation_rates(&x, &d) {
                assert!(r.abs() < 1e-12, "local rate {r:e}");
            }
            // the summed spin is conserved whenever every site sees the same
            // field, i.e. uniform row and column amplitudes
            let (a, b) = (x.alpha[0], x.beta[0]);
            x.alpha.iter_mut().for_each(|z| *z = a);
            x.beta.iter_mut().for_each(|z| *z = b);
            let d = rhs_2d(&x, &p).unwrap();
            let g = global_conservation_rate(&x, &d);
            assert!(g.abs() < 1e-12 * (nr * nc) as f64, "global rate {g:e}");
        }
    }

    #[test]
    fn spin_decay_breaks_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_params(&mut rng, 2, 2, 0.5);
        let mut x = random_state(&mut rng, 2, 2);
        x.w.iter_mut().for_each(|w| *w = 0.3);
        let d = rhs_2d(&x, &p).unwrap();
        assert!(local_conservation_rates(&x, &d).iter().any(|r| r.abs() > 1e-3));
        assert!(global_conservation_rate(&x, &d).abs() > 1e-3);
    }

    #[test]
    fn packing_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_state(&mut rng, 2, 3);
        assert_eq!(State2D::from_vec(&x.to_vec(), 2, 3), x);
    }

    #[test]
    fn integration_keeps_site_spin_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_params(&mut rng, 2, 2, 0.0);
        let mut x = random_state(&mut rng, 2, 2);
        for k in 0..4 {
            let l = x.local_spin_lengths()[k].sqrt();
            x.s[k] /= l;
            x.w[k] /= l;
        }
        let traj = integrate_2d(&x, &p, 20.0, &IntegrateOptions::default()).unwrap();
        assert!(traj.conservation_drift.unwrap() < 1e-8);
    }
}
