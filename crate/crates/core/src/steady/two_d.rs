//! Fixed points of the array under the homogeneous and two-site cluster
//! ansätze. Spins use the per-site normalization `w^2 + 4|s|^2 = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::newton::{gauss_newton, NewtonOptions};
use super::ACCEPT_RESIDUAL;
use crate::dynamics::{rhs_2d, State2D};
use crate::error::{Error, Result};
use crate::model::Params2D;
use crate::poly;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HomogeneousKind {
    /// `g_a alpha + g_b beta = 0`, upper inversion.
    DriveZeroUpper,
    /// `g_a alpha + g_b beta = 0`, lower inversion.
    DriveZeroLower,
    /// `w = 0`, spin on the equator.
    InversionZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousFixedPoint {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub s: Complex64,
    pub w: f64,
    pub kind: HomogeneousKind,
    /// Max-norm of the full array vector field at the uniform state.
    pub residual: f64,
}

impl HomogeneousFixedPoint {
    pub fn to_state(&self, p: &Params2D) -> State2D {
        let sites = p.n_rows * p.n_cols;
        State2D {
            alpha: vec![self.alpha; p.n_rows],
            beta: vec![self.beta; p.n_cols],
            s: vec![self.s; sites],
            w: vec![self.w; sites],
        }
    }
}

/// Coupling solved for at the transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CriticalParam {
    #[default]
    GTildeA,
    GTildeB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Homogeneous2D {
    pub fixed_points: Vec<HomogeneousFixedPoint>,
    /// Smallest positive coupling at which the drive-free branch reaches
    /// `|s|^2 = 1/4`, all other parameters fixed.
    pub g1_star: Option<f64>,
    pub critical_param: CriticalParam,
}

fn state_residual(x: &State2D, p: &Params2D) -> Result<f64> {
    let d = rhs_2d(x, p)?;
    Ok(d.to_vec().iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Field amplitudes for a given uniform spin.
fn fields(p: &Params2D, s: Complex64) -> Option<(Complex64, Complex64)> {
    let da = p.delta_ph_a - I * p.kappa;
    let db = p.delta_ph_b - I * p.kappa;
    if da.norm() == 0.0 || db.norm() == 0.0 {
        return None;
    }
    let nc = p.n_cols as f64;
    let nr = p.n_rows as f64;
    Some((
        -(p.g_tilde_a * nc * s + p.eta) / da,
        -(p.g_tilde_b * nr * s + p.eta) / db,
    ))
}

/// `s` on the drive-free branch, or `None` when the linear system is singular.
pub fn drive_free_spin(p: &Params2D) -> Option<Complex64> {
    let (ga, gb) = (p.g_tilde_a, p.g_tilde_b);
    let da = p.delta_ph_a - I * p.kappa;
    let db = p.delta_ph_b - I * p.kappa;
    let nc = p.n_cols as f64;
    let nr = p.n_rows as f64;
    let den = ga * ga * nc * db + gb * gb * nr * da;
    if den.norm() == 0.0 {
        return None;
    }
    Some(-p.eta * (ga * db + gb * da) / den)
}

/// Polynomial in the chosen coupling `x` whose roots are the couplings with
/// `|s|^2 = 1/4` on the drive-free branch.
fn critical_polynomial(p: &Params2D, which: CriticalParam) -> Vec<f64> {
    let (g_other, d_own, d_other, n_own, n_other) = match which {
        CriticalParam::GTildeA => (
            p.g_tilde_b,
            p.delta_ph_a,
            p.delta_ph_b,
            p.n_cols as f64,
            p.n_rows as f64,
        ),
        CriticalParam::GTildeB => (
            p.g_tilde_a,
            p.delta_ph_b,
            p.delta_ph_a,
            p.n_rows as f64,
            p.n_cols as f64,
        ),
    };
    let k2 = p.kappa * p.kappa;
    let e2 = p.eta.norm_sqr();
    let a = [d_own * g_other, d_other];
    let b = [g_other, 1.0];
    let c = [d_own * n_other * g_other * g_other, 0.0, d_other * n_own];
    let d = [n_other * g_other * g_other, 0.0, n_own];
    let lhs: Vec<f64> = poly::mul(&a, &a)
        .iter()
        .zip(poly::mul(&b, &b))
        .map(|(u, v)| 4.0 * e2 * (u + k2 * v))
        .collect();
    let rhs: Vec<f64> = poly::mul(&c, &c)
        .iter()
        .zip(poly::mul(&d, &d))
        .map(|(u, v)| u + k2 * v)
        .collect();
    let mut out = vec![0.0; lhs.len().max(rhs.len())];
    for (k, v) in lhs.iter().enumerate() {
        out[k] += v;
    }
    for (k, v) in rhs.iter().enumerate() {
        out[k] -= v;
    }
    out
}

fn with_coupling(p: &Params2D, which: CriticalParam, x: f64) -> Params2D {
    let mut q = *p;
    match which {
        CriticalParam::GTildeA => q.g_tilde_a = x,
        CriticalParam::GTildeB => q.g_tilde_b = x,
    }
    q
}

/// Fixed points of the homogeneous ansatz (`alpha_i = alpha`, `beta_nu = beta`,
/// uniform spin) for `lambda = delta_at = gamma = 0`, plus the critical
/// coupling of the drive-free branch.
pub fn homogeneous_2d(p: &Params2D, which: CriticalParam) -> Result<Homogeneous2D> {
    p.validate()?;
    if p.lambda != 0.0 || p.delta_at != 0.0 || p.gamma != 0.0 {
        return Err(Error::Precondition(
            "homogeneous_2d requires lambda = 0, delta_at = 0 and gamma = 0".into(),
        ));
    }
    let mut fixed_points = Vec::new();
    let push = |s: Complex64, w: f64, kind: HomogeneousKind, out: &mut Vec<HomogeneousFixedPoint>| -> Result<()> {
        if let Some((alpha, beta)) = fields(p, s) {
            let mut fp = HomogeneousFixedPoint {
                alpha,
                beta,
                s,
                w,
                kind,
                residual: 0.0,
            };
            fp.residual = state_residual(&fp.to_state(p), p)?;
            if fp.residual <= ACCEPT_RESIDUAL {
                out.push(fp);
            }
        }
        Ok(())
    };

    if let Some(s) = drive_free_spin(p) {
        let disc = 1.0 - 4.0 * s.norm_sqr();
        if disc >= -1e-12 {
            let w = disc.max(0.0).sqrt();
            push(s, w, HomogeneousKind::DriveZeroUpper, &mut fixed_points)?;
            push(s, -w, HomogeneousKind::DriveZeroLower, &mut fixed_points)?;
        }
    }

    // w = 0, |s| = 1/2: the drive G = c1 s + c0 must be parallel to s
    let da = p.delta_ph_a - I * p.kappa;
    let db = p.delta_ph_b - I * p.kappa;
    if da.norm() > 0.0 && db.norm() > 0.0 {
        let (ga, gb) = (p.g_tilde_a, p.g_tilde_b);
        let (nc, nr) = (p.n_cols as f64, p.n_rows as f64);
        let c1 = -ga * ga * nc / da - gb * gb * nr / db;
        let c0 = -p.eta * (ga / da + gb / db);
        if c0.norm() > 0.0 {
            let q = -c1.im / (2.0 * c0.norm());
            if q.abs() <= 1.0 {
                let psi = c0.arg();
                let a = q.asin();
                for phi in [psi - a, psi - std::f64::consts::PI + a] {
                    let s = 0.5 * Complex64::from_polar(1.0, phi);
                    let drive = c1 * s + c0;
                    if drive.norm() > 1e-12 {
                        push(s, 0.0, HomogeneousKind::InversionZero, &mut fixed_points)?;
                    }
                }
            }
        }
    }

    let g1_star = poly::real_roots(&critical_polynomial(p, which))
        .into_iter()
        .filter(|x| *x > 1e-12)
        .map(|x| polish_critical(p, which, x))
        .find(|x| {
            drive_free_spin(&with_coupling(p, which, *x))
                .map(|s| (s.norm_sqr() - 0.25).abs() < 1e-9)
                .unwrap_or(false)
        });
    Ok(Homogeneous2D {
        fixed_points,
        g1_star,
        critical_param: which,
    })
}

/// Secant refinement of `|s(x)|^2 = 1/4`.
fn polish_critical(p: &Params2D, which: CriticalParam, x0: f64) -> f64 {
    let f = |x: f64| {
        drive_free_spin(&with_coupling(p, which, x))
            .map(|s| s.norm_sqr() - 0.25)
            .unwrap_or(f64::NAN)
    };
    let mut a = x0;
    let mut b = x0 * (1.0 + 1e-7) + 1e-12;
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..20 {
        if !fb.is_finite() || fb == fa || fb.abs() < 1e-15 {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        a = b;
        fa = fb;
        b = c;
        fb = f(b);
    }
    if fb.is_finite() && fb.abs() <= f(x0).abs() {
        b
    } else {
        x0
    }
}

/// Two inequivalent spins arranged as a checkerboard; fields uniform along
/// rows (`alpha`) and columns (`beta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub s1: Complex64,
    pub s2: Complex64,
    pub w1: f64,
    pub w2: f64,
}

impl ClusterState {
    pub fn to_vec(&self) -> [f64; 10] {
        [
            self.alpha.re,
            self.alpha.im,
            self.beta.re,
            self.beta.im,
            self.s1.re,
            self.s1.im,
            self.w1,
            self.s2.re,
            self.s2.im,
            self.w2,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            alpha: Complex64::new(v[0], v[1]),
            beta: Complex64::new(v[2], v[3]),
            s1: Complex64::new(v[4], v[5]),
            w1: v[6],
            s2: Complex64::new(v[7], v[8]),
            w2: v[9],
        }
    }

    /// The corresponding full array state, spin 1 on sites with even `i + nu`.
    pub fn to_state(&self, p: &Params2D) -> State2D {
        let mut x = State2D::zeros(p.n_rows, p.n_cols);
        x.alpha.fill(self.alpha);
        x.beta.fill(self.beta);
        for i in 0..p.n_rows {
            for nu in 0..p.n_cols {
                let k = x.site(i, nu);
                let (s, w) = if (i + nu) % 2 == 0 {
                    (self.s1, self.w1)
                } else {
                    (self.s2, self.w2)
                };
                x.s[k] = s;
                x.w[k] = w;
            }
        }
        x
    }
}

/// Vector field of the cluster ansatz: every row (column) mode sees half of
/// its `n_cols` (`n_rows`) spins of each kind.
pub fn cluster_rhs(x: &ClusterState, p: &Params2D) -> ClusterState {
    let lam = p.lambda;
    let hc = 0.5 * p.n_cols as f64;
    let hr = 0.5 * p.n_rows as f64;
    let wsum = x.w1 + x.w2;
    let ssum = x.s1 + x.s2;
    let ia = (p.delta_ph_a - I * p.kappa + lam * hc * wsum) * x.alpha
        + p.g_tilde_a * hc * ssum
        + p.eta
        + lam * x.beta * hc * (wsum - 2.0);
    let ib = (p.delta_ph_b - I * p.kappa + lam * hr * wsum) * x.beta
        + p.g_tilde_b * hr * ssum
        + p.eta
        + lam * x.alpha * hr * (wsum - 2.0);
    let field = x.alpha + x.beta;
    let drive = p.g_tilde_a * x.alpha + p.g_tilde_b * x.beta;
    let freq = p.delta_at - I * (0.5 * p.gamma) + 2.0 * lam * field.norm_sqr();
    let ds = |s: Complex64, w: f64| -I * (freq * s - drive * w);
    let dw = |s: Complex64, w: f64| 4.0 * (s.conj() * drive).im - p.gamma * (w + 1.0);
    ClusterState {
        alpha: -I * ia,
        beta: -I * ib,
        s1: ds(x.s1, x.w1),
        s2: ds(x.s2, x.w2),
        w1: dw(x.s1, x.w1),
        w2: dw(x.s2, x.w2),
    }
}

pub fn cluster_residual(x: &ClusterState, p: &Params2D) -> f64 {
    cluster_rhs(x, p).to_vec().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterFixedPoint {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub s1: Complex64,
    pub s2: Complex64,
    pub w1: f64,
    pub w2: f64,
    pub residual: f64,
}

impl ClusterFixedPoint {
    pub fn state(&self) -> ClusterState {
        ClusterState {
            alpha: self.alpha,
            beta: self.beta,
            s1: self.s1,
            s2: self.s2,
            w1: self.w1,
            w2: self.w2,
        }
    }

    pub fn spin_asymmetry(&self) -> (f64, f64) {
        ((self.w1 - self.w2).abs(), (self.s1 - self.s2).norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub roots: Vec<ClusterFixedPoint>,
    pub seeds_tried: usize,
    pub seeds_failed: usize,
}

/// Number of structured antiferromagnetic seeds added to the random ones.
pub const AF_SEEDS: usize = 8;

fn cluster_system(v: &[f64], p: &Params2D) -> Vec<f64> {
    let x = ClusterState::from_slice(v);
    let mut r = cluster_rhs(&x, p).to_vec().to_vec();
    if p.gamma == 0.0 {
        r.push(x.w1 * x.w1 + 4.0 * x.s1.norm_sqr() - 1.0);
        r.push(x.w2 * x.w2 + 4.0 * x.s2.norm_sqr() - 1.0);
    }
    r
}

fn cluster_jacobian(v: &[f64], p: &Params2D) -> DMatrix<f64> {
    let m = if p.gamma == 0.0 { 12 } else { 10 };
    let mut jac = DMatrix::zeros(m, 10);
    let mut x = v.to_vec();
    for j in 0..10 {
        let h = 1e-7 * (1.0 + v[j].abs());
        x[j] = v[j] + h;
        let up = cluster_system(&x, p);
        x[j] = v[j] - h;
        let dn = cluster_system(&x, p);
        x[j] = v[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - dn[i]) / (2.0 * h);
        }
    }
    jac
}

fn random_spin(rng: &mut ChaCha8Rng) -> (Complex64, f64) {
    let w: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (0.5 * (1.0 - w * w).sqrt() * Complex64::from_polar(1.0, phi), w)
}

/// Field seeds consistent with the linear part of the field equations.
fn seed_fields(p: &Params2D, s1: Complex64, s2: Complex64) -> (Complex64, Complex64) {
    let ssum = s1 + s2;
    let da = p.delta_ph_a - I * p.kappa;
    let db = p.delta_ph_b - I * p.kappa;
    let a = if da.norm() > 0.0 {
        -(p.g_tilde_a * 0.5 * p.n_cols as f64 * ssum + p.eta) / da
    } else {
        Complex64::new(0.0, 0.0)
    };
    let b = if db.norm() > 0.0 {
        -(p.g_tilde_b * 0.5 * p.n_rows as f64 * ssum + p.eta) / db
    } else {
        Complex64::new(0.0, 0.0)
    };
    (a, b)
}

/// Newton-solves the cluster equations from `n_random` seeds uniform on the
/// spin spheres plus [`AF_SEEDS`] seeds with `w1 = -w2`, and deduplicates the
/// converged roots (radius 1e-6, max-norm).
pub fn cluster_2d(p: &Params2D, n_random: usize, seed: u64) -> Result<ClusterReport> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<ClusterState> = Vec::with_capacity(n_random + AF_SEEDS);
    for _ in 0..n_random {
        let (s1, w1) = random_spin(&mut rng);
        let (s2, w2) = random_spin(&mut rng);
        let (alpha, beta) = seed_fields(p, s1, s2);
        seeds.push(ClusterState {
            alpha,
            beta,
            s1,
            s2,
            w1,
            w2,
        });
    }
    for k in 0..AF_SEEDS {
        let w: f64 = [0.95, 0.6, -0.6, -0.95][k % 4];
        let phase = if k < 4 { 0.0 } else { std::f64::consts::FRAC_PI_2 };
        let r = 0.5 * (1.0 - w * w).sqrt();
        let s1 = r * Complex64::from_polar(1.0, phase);
        let s2 = -s1;
        let (alpha, beta) = seed_fields(p, s1, s2);
        seeds.push(ClusterState {
            alpha,
            beta,
            s1,
            s2,
            w1: w,
            w2: -w,
        });
    }
    let opts = NewtonOptions::default();
    let mut roots: Vec<ClusterFixedPoint> = Vec::new();
    let mut failed = 0;
    for s in &seeds {
        let out = gauss_newton(&s.to_vec(), |v| cluster_system(v, p), |v| cluster_jacobian(v, p), &opts);
        let x = ClusterState::from_slice(&out.x);
        let residual = cluster_residual(&x, p);
        if !out.converged || !residual.is_finite() || residual > ACCEPT_RESIDUAL {
            failed += 1;
            continue;
        }
        let xv = x.to_vec();
        let dup = roots
            .iter()
            .any(|r| r.state().to_vec().iter().zip(&xv).all(|(a, b)| (a - b).abs() < 1e-6));
        if !dup {
            roots.push(ClusterFixedPoint {
                alpha: x.alpha,
                beta: x.beta,
                s1: x.s1,
                s2: x.s2,
                w1: x.w1,
                w2: x.w2,
                residual,
            });
        }
    }
    Ok(ClusterReport {
        roots,
        seeds_tried: seeds.len(),
        seeds_failed: failed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSurvey {
    pub draws: usize,
    pub roots: usize,
    pub seeds_tried: usize,
    pub seeds_failed: usize,
    /// Largest `|w1 - w2|` over all converged roots.
    pub max_w_asymmetry: f64,
    /// Largest `|s1 - s2|` over all converged roots.
    pub max_s_asymmetry: f64,
}

/// Array parameters drawn uniformly: `g_tilde_a, g_tilde_b` in `[0.2, 3]`,
/// photon detunings and `lambda` in `[-1.5, 1.5]`, `delta_at` in `[-1, 1]`,
/// `kappa` in `[0.2, 1]`, `gamma` in `[0.05, 0.5]`, real pump in `[0.5, 1.5]`.
pub fn random_cluster_params(rng: &mut ChaCha8Rng, n_rows: usize, n_cols: usize) -> Params2D {
    Params2D {
        g_tilde_a: rng.gen_range(0.2..3.0),
        g_tilde_b: rng.gen_range(0.2..3.0),
        delta_ph_a: rng.gen_range(-1.5..1.5),
        delta_ph_b: rng.gen_range(-1.5..1.5),
        delta_at: rng.gen_range(-1.0..1.0),
        lambda: rng.gen_range(-1.5..1.5),
        kappa: rng.gen_range(0.2..1.0),
        gamma: rng.gen_range(0.05..0.5),
        eta: Complex64::new(rng.gen_range(0.5..1.5), 0.0),
        n_rows,
        n_cols,
    }
}

/// Runs [`cluster_2d`] on `draws` random parameter sets and records the
/// largest sublattice asymmetry among the converged roots.
pub fn cluster_survey(
    n_rows: usize,
    n_cols: usize,
    draws: usize,
    n_random: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<ClusterSurvey> {
    use rayon::prelude::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<Params2D> = (0..draws)
        .map(|_| random_cluster_params(&mut rng, n_rows, n_cols))
        .collect();
    let reports = super::with_pool(jobs, || {
        params
            .par_iter()
            .enumerate()
            .map(|(i, p)| cluster_2d(p, n_random, seed.wrapping_add(i as u64 + 1)))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut out = ClusterSurvey {
        draws,
        roots: 0,
        seeds_tried: 0,
        seeds_failed: 0,
        max_w_asymmetry: 0.0,
        max_s_asymmetry: 0.0,
    };
    for r in &reports {
        out.roots += r.roots.len();
        out.seeds_tried += r.seeds_tried;
        out.seeds_failed += r.seeds_failed;
        for root in &r.roots {
            let (dw, ds) = root.spin_asymmetry();
            out.max_w_asymmetry = out.max_w_asymmetry.max(dw);
            out.max_s_asymmetry = out.max_s_asymmetry.max(ds);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn base() -> Params2D {
        Params2D {
            g_tilde_a: 0.7,
            g_tilde_b: 0.7,
            delta_ph_a: 0.5,
            delta_ph_b: 0.5,
            delta_at: 0.0,
            lambda: 0.0,
            kappa: 0.5,
            gamma: 0.0,
            eta: Complex64::new(1.0, 0.0),
            n_rows: 2,
            n_cols: 2,
        }
    }

    #[test]
    fn small_survey_is_symmetric_and_reproducible() {
        let a = cluster_survey(2, 2, 6, 16, 11, None).unwrap();
        let b = cluster_survey(2, 2, 6, 16, 11, Some(2)).unwrap();
        assert_eq!(a, b);
        assert!(a.roots > 0);
        assert!(a.max_w_asymmetry < 1e-8 && a.max_s_asymmetry < 1e-8, "{a:?}");
    }

    #[test]
    fn single_row_recovers_single_cavity_threshold() {
        let mut p = base();
        p.n_rows = 1;
        p.n_cols = 4;
        p.g_tilde_b = 0.0;
        p.eta = Complex64::new(0.6, 0.8);
        let h = homogeneous_2d(&p, CriticalParam::GTildeA).unwrap();
        assert!((h.g1_star.unwrap() - 2.0 * 1.0 / 4.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_array_has_equal_fields() {
        let mut p = base();
        p.g_tilde_a = 1.5;
        p.g_tilde_b = 1.5;
        let h = homogeneous_2d(&p, CriticalParam::GTildeA).unwrap();
        assert!(!h.fixed_points.is_empty());
        for fp in &h.fixed_points {
            assert!((fp.alpha - fp.beta).norm() < 1e-12);
            assert!(fp.residual < 1e-12);
        }
    }

    #[test]
    fn asymmetric_threshold_is_self_consistent() {
        let mut p = base();
        p.g_tilde_b = 0.3;
        p.delta_ph_b = -0.2;
        p.n_rows = 3;
        let h = homogeneous_2d(&p, CriticalParam::GTildeA).unwrap();
        let g = h.g1_star.unwrap();
        let s = drive_free_spin(&with_coupling(&p, CriticalParam::GTildeA, g)).unwrap();
        assert!((s.norm_sqr() - 0.25).abs() < 1e-10);
        let hb = homogeneous_2d(&p, CriticalParam::GTildeB).unwrap();
        let gb = hb.g1_star.unwrap();
        let s = drive_free_spin(&with_coupling(&p, CriticalParam::GTildeB, gb)).unwrap();
        assert!((s.norm_sqr() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn homogeneous_requires_linear_model() {
        let mut p = base();
        p.lambda = 0.1;
        assert!(homogeneous_2d(&p, CriticalParam::GTildeA).is_err());
    }

    #[test]
    fn cluster_rhs_matches_array_on_checkerboard() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = Params2D {
                g_tilde_a: rng.gen_range(-1.0..1.0),
                g_tilde_b: rng.gen_range(-1.0..1.0),
                delta_ph_a: rng.gen_range(-1.0..1.0),
                delta_ph_b: rng.gen_range(-1.0..1.0),
                delta_at: rng.gen_range(-1.0..1.0),
                lambda: rng.gen_range(-1.0..1.0),
                kappa: rng.gen_range(0.0..1.0),
                gamma: rng.gen_range(0.0..1.0),
                eta: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                n_rows: 2 * rng.gen_range(1..3),
                n_cols: 2 * rng.gen_range(1..3),
            };
            let x = ClusterState::from_slice(&(0..10).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
            let full = rhs_2d(&x.to_state(&p), &p).unwrap();
            let d = cluster_rhs(&x, &p);
            let expect = d.to_state(&p);
            for (a, b) in full.to_vec().iter().zip(expect.to_vec()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dark_cluster_root() {
        let mut p = base();
        p.eta = Complex64::new(0.0, 0.0);
        p.gamma = 0.4;
        let r = cluster_2d(&p, 16, 1).unwrap();
        assert!(!r.roots.is_empty());
        for root in &r.roots {
            assert!((root.w1 + 1.0).abs() < 1e-10 && (root.w2 + 1.0).abs() < 1e-10);
            assert!(root.alpha.norm() < 1e-10 && root.s1.norm() < 1e-10);
        }
    }

    #[test]
    fn cluster_roots_are_uniform_with_decay() {
        let mut p = base();
        p.gamma = 0.3;
        p.g_tilde_a = 1.1;
        p.g_tilde_b = 1.1;
        let r = cluster_2d(&p, 32, 2).unwrap();
        assert!(!r.roots.is_empty());
        for root in &r.roots {
            let (dw, ds) = root.spin_asymmetry();
            assert!(dw < 1e-8 && ds < 1e-8);
            assert!((root.alpha - root.beta).norm() < 1e-8);
        }
    }

    #[test]
    fn lossless_cluster_admits_staggered_roots() {
        // without decay, w = 0 with opposite transverse spins solves the equations
        let p = base();
        let x = ClusterState {
            alpha: seed_fields(&p, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).0,
            beta: seed_fields(&p, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).1,
            s1: Complex64::new(0.0, 0.0),
            s2: Complex64::new(0.0, 0.0),
            w1: 0.0,
            w2: 0.0,
        };
        let drive = p.g_tilde_a * x.alpha + p.g_tilde_b * x.beta;
        let dir = drive / drive.norm();
        let y = ClusterState {
            s1: 0.5 * dir,
            s2: -0.5 * dir,
            ..x
        };
        assert!(cluster_residual(&y, &p) < 1e-12);
        assert!((y.s1 - y.s2).norm() > 0.5);
    }
}
