//! Fixed points of the mean-field equations.
//!
//! Without nonlinearity and atomic detuning the fixed points are known in
//! closed form (the empty-cavity pair and the `w = 0` pair parametrized by an
//! angle). With atomic detuning they are roots of a quartic in `w`; with
//! nonlinearity but no atomic detuning they are roots of a quartic times the
//! empty-cavity quadratic. Everything else falls back to seeded Newton.
//!
//! Closed forms are written for a real pump. A complex pump is handled by the
//! U(1) symmetry `alpha, s, eta -> e^{i phi} (alpha, s, eta)` of the equations.

mod newton;
mod sweep;
mod two_d;

use serde::{Deserialize, Serialize};

use crate::dynamics::{rhs_1d, spin_norm, MFState};
use crate::error::{Error, Result};
use crate::model::EffectiveParams;
use crate::poly;
use crate::stability::classify_state;

pub use newton::{gauss_newton, newton_solve, GaussNewtonOutcome, NewtonOptions};
pub(crate) use sweep::with_pool;
pub use sweep::{continuation_sweep, sweep_grid, BranchEvent, EventKind, SweepOptions, SweepPoint, SweepResult, Track};
pub use two_d::{
    cluster_2d, cluster_residual, cluster_rhs, cluster_survey, homogeneous_2d, random_cluster_params,
    ClusterFixedPoint, ClusterReport, ClusterState, ClusterSurvey, CriticalParam, Homogeneous2D, HomogeneousFixedPoint,
    HomogeneousKind,
};

/// Largest residual accepted for a reported fixed point.
pub const ACCEPT_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchKind {
    TrivialAlphaZero,
    ThetaPlus,
    ThetaMinus,
    QuarticRoot(usize),
    LambdaPoly(usize),
    Numeric,
}

impl BranchKind {
    pub fn label(&self) -> String {
        match self {
            BranchKind::TrivialAlphaZero => "alpha_zero".into(),
            BranchKind::ThetaPlus => "theta_plus".into(),
            BranchKind::ThetaMinus => "theta_minus".into(),
            BranchKind::QuarticRoot(k) => format!("quartic_{k}"),
            BranchKind::LambdaPoly(k) => format!("lambda_poly_{k}"),
            BranchKind::Numeric => "numeric".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alpha_zero" => Some(BranchKind::TrivialAlphaZero),
            "theta_plus" => Some(BranchKind::ThetaPlus),
            "theta_minus" => Some(BranchKind::ThetaMinus),
            "numeric" => Some(BranchKind::Numeric),
            _ => {
                if let Some(k) = s.strip_prefix("quartic_") {
                    k.parse().ok().map(BranchKind::QuarticRoot)
                } else {
                    s.strip_prefix("lambda_poly_")?.parse().ok().map(BranchKind::LambdaPoly)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
    Unknown,
}

impl Stability {
    pub fn label(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
            Stability::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stable" => Some(Stability::Stable),
            "unstable" => Some(Stability::Unstable),
            "marginal" => Some(Stability::Marginal),
            "unknown" => Some(Stability::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyBranch {
    pub state: MFState,
    pub branch: BranchKind,
    pub g_tilde: f64,
    /// Max-norm of the time derivative at `state`.
    pub residual: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoints {
    pub g1_star: f64,
    pub g2_star: Option<f64>,
}

/// Max-norm of `rhs_1d` at `x`.
pub fn residual(x: &MFState, p: &EffectiveParams) -> f64 {
    rhs_1d(x, p).max_abs()
}

fn require_lossless_spin(p: &EffectiveParams, what: &str) -> Result<()> {
    if p.gamma != 0.0 {
        return Err(Error::Precondition(format!("{what} requires gamma = 0")));
    }
    Ok(())
}

/// Pump phase and the parameters with the pump rotated onto the real axis.
fn real_pump_frame(p: &EffectiveParams) -> (EffectiveParams, f64) {
    let phi = if p.eta_i == 0.0 { 0.0 } else { p.eta_i.atan2(p.eta_r) };
    let mut q = *p;
    if phi != 0.0 {
        q.eta_r = p.eta_abs();
        q.eta_i = 0.0;
    }
    (q, phi)
}

/// Applies `alpha -> e^{i phi} alpha`, `s -> e^{i phi} s`.
fn rotate(x: &MFState, phi: f64) -> MFState {
    if phi == 0.0 {
        return *x;
    }
    let (sn, cs) = phi.sin_cos();
    MFState::new(
        x.alpha_r * cs - x.alpha_i * sn,
        x.alpha_r * sn + x.alpha_i * cs,
        x.s_x * cs + x.s_y * sn,
        x.s_y * cs - x.s_x * sn,
        x.w,
    )
}

/// Polishes a candidate, then keeps it only if it is a physical fixed point.
fn accept(candidate: MFState, kind: BranchKind, p: &EffectiveParams) -> Option<SteadyBranch> {
    if !candidate.is_finite() {
        return None;
    }
    let mut x = candidate;
    let mut r = residual(&x, p);
    if r > 1e-13 {
        if let Ok((y, ry, _)) = newton_solve(&x, p, &NewtonOptions::default()) {
            if ry < r && y.max_abs_diff(&x) < 1e-6 * (1.0 + x.max_abs()) {
                x = y;
                r = ry;
            }
        }
    }
    let n = p.n_spins;
    if r > ACCEPT_RESIDUAL || x.w.abs() > n * (1.0 + 1e-9) {
        return None;
    }
    Some(SteadyBranch {
        state: x,
        branch: kind,
        g_tilde: p.g_tilde,
        residual: r,
        stability: classify_state(&x, p).0,
    })
}

/// The empty-cavity pair `alpha = 0`, `s_x = -2 eta_r / g`, `s_y = 2 eta_i / g`,
/// `w = +-sqrt(N^2 - 4|eta|^2 / g^2)`; requires only `delta_at = 0`.
fn alpha_zero_states(p: &EffectiveParams) -> Vec<MFState> {
    let g = p.g_tilde;
    if g == 0.0 {
        return Vec::new();
    }
    let n = p.n_spins;
    let disc = n * n - 4.0 * p.eta_sq() / (g * g);
    if disc < -1e-12 * n * n {
        return Vec::new();
    }
    let w = disc.max(0.0).sqrt();
    let sx = -2.0 * p.eta_r / g;
    let sy = 2.0 * p.eta_i / g;
    vec![MFState::new(0.0, 0.0, sx, sy, w), MFState::new(0.0, 0.0, sx, sy, -w)]
}

/// Empty-cavity fixed points for `lambda = 0`, `delta_at = 0`; upper
/// inversion first. Exist for `g_tilde >= 2|eta|/N`.
pub fn trivial_branch(p: &EffectiveParams) -> Result<Vec<SteadyBranch>> {
    p.validate()?;
    if p.lambda != 0.0 || p.delta_at != 0.0 {
        return Err(Error::Precondition(
            "trivial_branch requires lambda = 0 and delta_at = 0".into(),
        ));
    }
    require_lossless_spin(p, "trivial_branch")?;
    Ok(alpha_zero_states(p)
        .into_iter()
        .filter_map(|x| accept(x, BranchKind::TrivialAlphaZero, p))
        .collect())
}

/// `w = 0` fixed points for `lambda = 0`, `delta_at = 0`. With the spin at
/// angle `theta` (`s_x = N cos`, `s_y = -N sin`) the field equations reduce to
/// `z + kappa cos = delta_ph sin`, `z = kappa g N / (2 eta)`, a quadratic in
/// `cos theta`. `ThetaPlus` has `sin theta > 0`. Exist for `g_tilde <= g2*`.
pub fn theta_branch(p: &EffectiveParams) -> Result<Vec<SteadyBranch>> {
    p.validate()?;
    if p.lambda != 0.0 || p.delta_at != 0.0 {
        return Err(Error::Precondition(
            "theta_branch requires lambda = 0 and delta_at = 0".into(),
        ));
    }
    require_lossless_spin(p, "theta_branch")?;
    let (q, phi) = real_pump_frame(p);
    let eta = q.eta_r;
    if eta == 0.0 {
        return Ok(Vec::new());
    }
    let n = q.n_spins;
    let g = q.g_tilde;
    let k = q.kappa;
    let d = q.delta_ph;
    let a = k * k + d * d;
    if a == 0.0 {
        return Ok(Vec::new());
    }
    let z = k * g * n / (2.0 * eta);
    let disc = d * d * (a - z * z);
    if disc < 0.0 {
        return Ok(Vec::new());
    }
    let root = disc.sqrt();
    let mut angles: Vec<(f64, f64)> = Vec::new();
    if d == 0.0 {
        let c = -z / k;
        if c.abs() <= 1.0 + 1e-12 {
            let c = c.clamp(-1.0, 1.0);
            let s = (1.0 - c * c).sqrt();
            angles.push((c, s));
            angles.push((c, -s));
        }
    } else {
        for c in [(-k * z + root) / a, (-k * z - root) / a] {
            if c.abs() <= 1.0 + 1e-12 {
                let c = c.clamp(-1.0, 1.0);
                // the sign of sin follows from the unsquared relation
                let s = (z + k * c) / d;
                angles.push((c, s));
            }
        }
    }
    let mut out = Vec::new();
    for (c, s) in angles {
        let sx = n * c;
        let sy = -n * s;
        let denom = 2.0 * a;
        let ar = (k * g * n * s - d * (g * n * c + 2.0 * eta)) / denom;
        let ai = -(d * g * n * s + k * (g * n * c + 2.0 * eta)) / denom;
        let x = rotate(&MFState::new(ar, ai, sx, sy, 0.0), phi);
        let kind = if s >= 0.0 {
            BranchKind::ThetaPlus
        } else {
            BranchKind::ThetaMinus
        };
        if let Some(b) = accept(x, kind, p) {
            out.push(b);
        }
    }
    Ok(out)
}

/// `g1* = 2|eta|/N` and `g2* = g1* sqrt(1 + (delta_ph/kappa)^2)`.
pub fn transition_points(p: &EffectiveParams) -> Result<TransitionPoints> {
    p.validate()?;
    if p.lambda != 0.0 || p.delta_at != 0.0 {
        return Err(Error::Precondition(
            "transition_points requires lambda = 0 and delta_at = 0".into(),
        ));
    }
    let g1 = 2.0 * p.eta_abs() / p.n_spins;
    let g2 = (p.kappa > 0.0).then(|| g1 * (1.0 + (p.delta_ph / p.kappa).powi(2)).sqrt());
    Ok(TransitionPoints {
        g1_star: g1,
        g2_star: g2,
    })
}

/// Coefficients (lowest degree first) of the quartic in `w` for `lambda = 0`:
/// `(w^2 - N^2)(g^4 w^2 + 2 D_ph D_at g^2 w + D_at^2 (kappa^2 + D_ph^2)) + 4 g^2 |eta|^2 w^2`.
pub fn quartic_coefficients(p: &EffectiveParams) -> [f64; 5] {
    let g2 = p.g_tilde * p.g_tilde;
    let n2 = p.n_spins * p.n_spins;
    let a = g2 * g2;
    let b = 2.0 * p.delta_ph * p.delta_at * g2;
    let c = p.delta_at * p.delta_at * (p.kappa * p.kappa + p.delta_ph * p.delta_ph);
    let e = 4.0 * g2 * p.eta_sq();
    [-c * n2, -b * n2, c - a * n2 + e, b, a]
}

/// Real roots of the `lambda = 0` quartic with `|w| <= N`, with multiplicity.
pub fn quartic_physical_roots(p: &EffectiveParams) -> Vec<f64> {
    let n = p.n_spins;
    poly::real_roots(&quartic_coefficients(p))
        .into_iter()
        .filter(|w| w.abs() <= n * (1.0 + 1e-9))
        .collect()
}

/// All fixed points for `lambda = 0`, from the real physical roots of the
/// quartic in `w`. Labels index the roots in ascending `w`.
pub fn quartic_w_branch(p: &EffectiveParams) -> Result<Vec<SteadyBranch>> {
    p.validate()?;
    if p.lambda != 0.0 {
        return Err(Error::Precondition("quartic_w_branch requires lambda = 0".into()));
    }
    require_lossless_spin(p, "quartic_w_branch")?;
    let roots = quartic_physical_roots(p);
    let mut out: Vec<SteadyBranch> = Vec::new();
    if p.delta_at == 0.0 {
        // w = 0 roots belong to the angle family, the others to the empty cavity
        let theta = theta_branch(p)?;
        let mut theta_iter = theta.into_iter();
        let zero_tol = 1e-7 * p.n_spins;
        for (k, w) in roots.iter().enumerate() {
            let found = if w.abs() <= zero_tol {
                theta_iter.next().map(|b| b.state)
            } else {
                alpha_zero_states(p)
                    .into_iter()
                    .find(|x| (x.w - w).abs() < 1e-6 * p.n_spins)
            };
            if let Some(x) = found {
                if let Some(b) = accept(x, BranchKind::QuarticRoot(k), p) {
                    out.push(b);
                }
            }
        }
        return Ok(out);
    }
    let g = p.g_tilde;
    let k = p.kappa;
    for (idx, &w) in roots.iter().enumerate() {
        let e = p.delta_ph + g * g * w / p.delta_at;
        let det = k * k + e * e;
        if det == 0.0 {
            continue;
        }
        let ar = (k * p.eta_i - e * p.eta_r) / det;
        let ai = -(e * p.eta_i + k * p.eta_r) / det;
        let sx = 2.0 * g * w * ar / p.delta_at;
        let sy = -2.0 * g * w * ai / p.delta_at;
        let x = MFState::new(ar, ai, sx, sy, w);
        if let Some(b) = accept(x, BranchKind::QuarticRoot(idx), p) {
            if !out.iter().any(|o| o.state.max_abs_diff(&b.state) < 1e-7) {
                out.push(b);
            }
        }
    }
    Ok(out)
}

/// Coefficients of the quartic `Q(w)` whose roots are the `alpha != 0` fixed
/// points for `delta_at = 0`, `lambda != 0` and a real pump:
/// `g^2 (4 kappa^2 w^2 + (lambda w^2 + 2 D_ph w + lambda N^2)^2) - 4 eta^2 lambda^2 (N^2 - w^2)`.
pub fn lambda_quartic_coefficients(p: &EffectiveParams) -> [f64; 5] {
    let g2 = p.g_tilde * p.g_tilde;
    let l = p.lambda;
    let d = p.delta_ph;
    let n2 = p.n_spins * p.n_spins;
    let e2 = p.eta_sq();
    let k2 = p.kappa * p.kappa;
    [
        g2 * l * l * n2 * n2 - 4.0 * e2 * l * l * n2,
        4.0 * g2 * l * d * n2,
        g2 * (4.0 * k2 + 4.0 * d * d + 2.0 * l * l * n2) + 4.0 * e2 * l * l,
        4.0 * g2 * l * d,
        g2 * l * l,
    ]
}

/// The sixth-order polynomial: the empty-cavity quadratic
/// `g^2 (w^2 - N^2) + 4 eta^2` times [`lambda_quartic_coefficients`].
pub fn lambda_sextic_coefficients(p: &EffectiveParams) -> Vec<f64> {
    let g2 = p.g_tilde * p.g_tilde;
    let n2 = p.n_spins * p.n_spins;
    let quad = [4.0 * p.eta_sq() - g2 * n2, 0.0, g2];
    poly::mul(&quad, &lambda_quartic_coefficients(p))
}

/// `w^2 (lambda^2 |alpha|^2 + g^2) - lambda^2 |alpha|^2 N^2`, which vanishes
/// at every `alpha != 0` fixed point with `delta_at = 0`.
pub fn lambda_identity_residual(x: &MFState, p: &EffectiveParams) -> f64 {
    let l2n = p.lambda * p.lambda * x.alpha_sq();
    let n2 = p.n_spins * p.n_spins;
    (x.w * x.w * (l2n + p.g_tilde * p.g_tilde) - l2n * n2) / n2.max(1.0)
}

/// All fixed points for `delta_at = 0`, `lambda != 0`: the empty-cavity pair
/// and the physical roots of the `alpha != 0` quartic (labelled by ascending
/// `w`). Every `alpha != 0` root satisfies the identity of
/// [`lambda_identity_residual`] to 1e-8.
pub fn lambda_poly_branch(p: &EffectiveParams) -> Result<Vec<SteadyBranch>> {
    p.validate()?;
    if p.delta_at != 0.0 || p.lambda == 0.0 {
        return Err(Error::Precondition(
            "lambda_poly_branch requires delta_at = 0 and lambda != 0".into(),
        ));
    }
    require_lossless_spin(p, "lambda_poly_branch")?;
    let (q, phi) = real_pump_frame(p);
    let n = q.n_spins;
    let g = q.g_tilde;
    let l = q.lambda;
    let k = q.kappa;
    let eta = q.eta_r;
    let mut out: Vec<SteadyBranch> = alpha_zero_states(p)
        .into_iter()
        .filter_map(|x| accept(x, BranchKind::TrivialAlphaZero, p))
        .collect();
    let push = |x: MFState, kind: BranchKind, out: &mut Vec<SteadyBranch>| {
        if let Some(b) = accept(rotate(&x, phi), kind, p) {
            if !out.iter().any(|o| o.state.max_abs_diff(&b.state) < 1e-7) {
                out.push(b);
            }
        }
    };
    if g == 0.0 {
        // spins decouple: w = +-N, s = 0, the field sees the shifted detuning
        for (idx, w) in [-n, n].into_iter().enumerate() {
            let f = q.delta_ph + l * w;
            let det = k * k + f * f;
            if det > 0.0 {
                let x = MFState::new(-eta * f / det, -eta * k / det, 0.0, 0.0, w);
                push(x, BranchKind::LambdaPoly(idx), &mut out);
            }
        }
        return Ok(out);
    }
    // roots near w = 0 scale like lambda N / g; solve in w / scale so the
    // real-root test sees them at order one
    let scale = n * (l.abs() / g.abs()).min(1.0);
    let scaled: Vec<f64> = lambda_quartic_coefficients(&q)
        .iter()
        .enumerate()
        .map(|(i, c)| c * scale.powi(i as i32))
        .collect();
    let roots: Vec<f64> = poly::real_roots(&scaled)
        .into_iter()
        .map(|u| u * scale)
        .filter(|w| w.abs() < n && *w != 0.0)
        .collect();
    for (idx, w) in roots.into_iter().enumerate() {
        let n_ph = g * g * w * w / (l * l * (n * n - w * w));
        let f = q.delta_ph + l * (n * n + w * w) / (2.0 * w);
        let det = k * k + f * f;
        if det == 0.0 || n_ph == 0.0 {
            continue;
        }
        let ar = -eta * f / det;
        let ai = -eta * k / det;
        let sx = g * w * ar / (l * n_ph);
        let sy = -g * w * ai / (l * n_ph);
        let x = MFState::new(ar, ai, sx, sy, w);
        if lambda_identity_residual(&x, &q).abs() < 1e-8 {
            push(x, BranchKind::LambdaPoly(idx), &mut out);
        }
    }
    Ok(out)
}

/// Deterministic seeds covering the spin sphere, each paired with the field
/// that solves the (linear) cavity equations for that spin.
fn numeric_seeds(p: &EffectiveParams) -> Vec<MFState> {
    let n = p.n_spins;
    let mut seeds = Vec::new();
    let n_w = 9;
    let n_phi = 8;
    for i in 0..n_w {
        let w = n * (-1.0 + 2.0 * (i as f64 + 0.5) / n_w as f64);
        let r = (n * n - w * w).max(0.0).sqrt();
        for j in 0..n_phi {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let (sx, sy) = (r * ph.cos(), r * ph.sin());
            let f = p.delta_ph + p.lambda * w;
            let det = p.kappa * p.kappa + f * f;
            let (ar, ai) = if det > 0.0 {
                let u = 0.5 * p.g_tilde * sy - p.eta_i;
                let v = 0.5 * p.g_tilde * sx + p.eta_r;
                // -k ar + f ai = u, -f ar - k ai = v
                ((-p.kappa * u - f * v) / det, (f * u - p.kappa * v) / det)
            } else {
                (0.0, 0.0)
            };
            seeds.push(MFState::new(ar, ai, sx, sy, w));
        }
    }
    seeds.push(MFState::new(0.0, 0.0, 0.0, 0.0, -n));
    seeds.push(MFState::new(0.0, 0.0, 0.0, 0.0, n));
    seeds
}

/// Fixed points located by Newton from a fixed family of seeds, deduplicated.
/// Used for `lambda != 0` together with `delta_at != 0`, and for `gamma > 0`.
pub fn numeric_branches(p: &EffectiveParams) -> Result<Vec<SteadyBranch>> {
    p.validate()?;
    let mut out: Vec<SteadyBranch> = Vec::new();
    for seed in numeric_seeds(p) {
        if let Ok((x, r, _)) = newton_solve(&seed, p, &NewtonOptions::default()) {
            if r > ACCEPT_RESIDUAL || x.w.abs() > p.n_spins * (1.0 + 1e-9) {
                continue;
            }
            if p.gamma > 0.0 && spin_norm(&x) > p.n_spins * p.n_spins * (1.0 + 1e-9) {
                continue;
            }
            if out
                .iter()
                .any(|o| o.state.max_abs_diff(&x) < 1e-7 * (1.0 + x.max_abs()))
            {
                continue;
            }
            out.push(SteadyBranch {
                state: x,
                branch: BranchKind::Numeric,
                g_tilde: p.g_tilde,
                residual: r,
                stability: classify_state(&x, p).0,
            });
        }
    }
    out.sort_by(|a, b| a.state.w.total_cmp(&b.state.w));
    Ok(out)
}

/// All fixed points at `p`, using the closed form or polynomial route that
/// applies and seeded Newton otherwise.
pub fn steady_branches(p: &EffectiveParams) -> Result<Vec<SteadyBranch>> {
    p.validate()?;
    if p.gamma > 0.0 {
        return numeric_branches(p);
    }
    match (p.lambda == 0.0, p.delta_at == 0.0) {
        (true, true) => {
            let mut v = trivial_branch(p)?;
            v.extend(theta_branch(p)?);
            Ok(v)
        }
        (true, false) => quartic_w_branch(p),
        (false, true) => lambda_poly_branch(p),
        (false, false) => numeric_branches(p),
    }
}

/// Refines `seed` to a fixed point by damped Newton and classifies it.
pub fn newton_refine(seed: &MFState, p: &EffectiveParams) -> Result<SteadyBranch> {
    p.validate()?;
    let (x, r, _) = newton_solve(seed, p, &NewtonOptions::default())?;
    Ok(SteadyBranch {
        state: x,
        branch: BranchKind::Numeric,
        g_tilde: p.g_tilde,
        residual: r,
        stability: classify_state(&x, p).0,
    })
}
