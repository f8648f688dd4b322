//! Leading-order large-`lambda` solutions near `g1* = 2 eta / N` and
//! power-law fits of the inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EffectiveParams;
use crate::steady::{lambda_poly_branch, BranchKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSolution {
    pub s_x0: f64,
    pub w0_plus: f64,
    pub w0_minus: f64,
    /// `|alpha|^2 lambda^2` at leading order.
    pub alpha2_leading: f64,
    pub branch_side: Side,
}

pub fn g1_star(eta: f64, n: f64) -> f64 {
    2.0 * eta / n
}

/// Physical order-zero `s_x`: `-2 eta / g` above `g1*`,
/// `(eta / g)(1 - sqrt(1 + 2 g^2 N^2 / eta^2))` below, both at `g1*`.
pub fn sx0(g: f64, eta: f64, n: f64) -> Vec<f64> {
    let g1 = g1_star(eta, n);
    let above = -2.0 * eta / g;
    let below = (eta / g) * (1.0 - (1.0 + 2.0 * g * g * n * n / (eta * eta)).sqrt());
    if (g - g1).abs() <= 1e-14 * g1 {
        vec![above, below]
    } else if g > g1 {
        vec![above]
    } else {
        vec![below]
    }
}

/// The discarded root `(eta / g)(1 + sqrt(1 + 2 g^2 N^2 / eta^2))`, which
/// exceeds `N` at large coupling.
pub fn sx0_rejected(g: f64, eta: f64, n: f64) -> f64 {
    (eta / g) * (1.0 + (1.0 + 2.0 * g * g * n * n / (eta * eta)).sqrt())
}

/// `(+w, -w)` with `w = N sqrt(N/eta) sqrt(g - g1*)` above and
/// `w = N sqrt(N/(3 eta)) sqrt(g1* - g)` below.
pub fn w0(g: f64, eta: f64, n: f64) -> (f64, f64) {
    let g1 = g1_star(eta, n);
    let w = if g >= g1 {
        n * (n / eta).sqrt() * (g - g1).sqrt()
    } else {
        n * (n / (3.0 * eta)).sqrt() * (g1 - g).sqrt()
    };
    (w, -w)
}

/// `|alpha|^2 = (g1* - g)(10 eta / N + 13 g) / (27 lambda^2)` below `g1*`,
/// zero above.
pub fn alpha2_asymptotic(g: f64, eta: f64, n: f64, lambda: f64) -> f64 {
    let g1 = g1_star(eta, n);
    if g >= g1 {
        return 0.0;
    }
    (g1 - g) * (10.0 * eta / n + 13.0 * g) / (27.0 * lambda * lambda)
}

pub fn asymptotic_solution(g: f64, eta: f64, n: f64) -> AsymptoticSolution {
    let g1 = g1_star(eta, n);
    let side = if g >= g1 { Side::Above } else { Side::Below };
    let sx = sx0(g, eta, n);
    let (wp, wm) = w0(g, eta, n);
    AsymptoticSolution {
        s_x0: sx[0],
        w0_plus: wp,
        w0_minus: wm,
        alpha2_leading: alpha2_asymptotic(g, eta, n, 1.0),
        branch_side: side,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub n_samples: usize,
}

/// Least-squares fit of `log|w| = exponent * log|g - g1*| + log(amplitude)`.
/// Needs at least eight samples on one side of `g1*` with relative distance
/// in `[1e-4, 5e-2]`.
pub fn fit_critical_exponent(samples: &[(f64, f64)], g1: f64) -> Result<PowerLawFit> {
    if samples.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 samples, got {}", samples.len())));
    }
    let above = samples[0].0 > g1;
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(g, w) in samples {
        if (g > g1) != above {
            return Err(Error::Fit("samples straddle the critical point".into()));
        }
        let rel = (g - g1).abs() / g1.abs();
        if !(1e-4 * (1.0 - 1e-12)..=5e-2 * (1.0 + 1e-12)).contains(&rel) {
            return Err(Error::Fit(format!("relative distance {rel:e} outside [1e-4, 5e-2]")));
        }
        if w == 0.0 || !w.is_finite() {
            return Err(Error::Fit("zero or non-finite order parameter".into()));
        }
        xs.push((g - g1).abs().ln());
        ys.push(w.abs().ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    Ok(PowerLawFit {
        exponent: slope,
        amplitude: (my - slope * mx).exp(),
        n_samples: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub g_tilde: f64,
    pub w_exact: f64,
    pub w_asymptotic: f64,
    pub alpha2_exact: f64,
    pub alpha2_asymptotic: f64,
}

/// Exact solution tracked by the asymptotic formulas at coupling `g`: the
/// empty-cavity root with `w > 0` above `g1*`, the nonzero-field root of
/// smallest `|w|` (taken with `w > 0`) below. Requires `delta_at = 0`,
/// `lambda != 0` and a real pump.
pub fn exact_scaling_point(p: &EffectiveParams) -> Result<Option<(f64, f64)>> {
    if p.eta_i != 0.0 {
        return Err(Error::Precondition("scaling comparison requires a real pump".into()));
    }
    let g1 = g1_star(p.eta_r, p.n_spins);
    let branches = lambda_poly_branch(p)?;
    let pick = if p.g_tilde >= g1 {
        branches
            .iter()
            .filter(|b| b.branch == BranchKind::TrivialAlphaZero && b.state.w >= 0.0)
            .max_by(|a, b| a.state.w.total_cmp(&b.state.w))
    } else {
        branches
            .iter()
            .filter(|b| matches!(b.branch, BranchKind::LambdaPoly(_)) && b.state.w > 0.0)
            .min_by(|a, b| a.state.w.total_cmp(&b.state.w))
    };
    Ok(pick.map(|b| (b.state.w, b.state.alpha_sq())))
}

pub fn scaling_table(p_base: &EffectiveParams, g_values: &[f64]) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::with_capacity(g_values.len());
    for &g in g_values {
        let p = p_base.with_g_tilde(g);
        let Some((w_exact, a2)) = exact_scaling_point(&p)? else {
            continue;
        };
        rows.push(ScalingRow {
            g_tilde: g,
            w_exact,
            w_asymptotic: w0(g, p.eta_r, p.n_spins).0,
            alpha2_exact: a2,
            alpha2_asymptotic: alpha2_asymptotic(g, p.eta_r, p.n_spins, p.lambda),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big_lambda(lambda: f64) -> EffectiveParams {
        EffectiveParams {
            delta_ph: 0.5,
            kappa: 0.5,
            eta_r: 1.0,
            lambda,
            ..Default::default()
        }
    }

    #[test]
    fn sx0_matches_at_threshold_and_limits() {
        let v = sx0(2.0, 1.0, 1.0);
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| (x + 1.0).abs() < 1e-14));
        assert!(sx0(1e-8, 1.0, 1.0)[0].abs() < 1e-7);
        let far = sx0(1e8, 1.0, 1.0)[0];
        assert!(far < 0.0 && far > -1e-7);
        assert!((sx0_rejected(1e8, 1.0, 1.0) - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn sx0_below_is_decreasing() {
        let vals: Vec<f64> = (1..=200).map(|i| sx0(0.01 * i as f64, 1.0, 1.0)[0]).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn w0_amplitude_ratio() {
        let (up, _) = w0(2.01, 1.0, 1.0);
        let (dn, _) = w0(1.99, 1.0, 1.0);
        assert!((up / dn - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(w0(2.0, 1.0, 1.0).0, 0.0);
    }

    #[test]
    fn alpha2_examples() {
        assert_eq!(alpha2_asymptotic(2.0, 1.0, 1.0, 10.0), 0.0);
        assert_eq!(alpha2_asymptotic(2.5, 1.0, 1.0, 10.0), 0.0);
        let v = alpha2_asymptotic(0.0, 1.0, 1.0, 10.0);
        assert!((v - 10.0 * 2.0 / 27.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn exact_power_law_fit() {
        let s: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let d = 2.0 * 1e-3 * (1.3f64).powi(k);
                (2.0 + d, 3.0 * d.sqrt())
            })
            .collect();
        let f = fit_critical_exponent(&s, 2.0).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
        assert!((f.amplitude - 3.0).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let few: Vec<(f64, f64)> = (1..5).map(|k| (2.0 + 0.001 * k as f64, 1.0)).collect();
        assert!(fit_critical_exponent(&few, 2.0).is_err());
        let mut mixed: Vec<(f64, f64)> = (1..10).map(|k| (2.0 + 0.001 * k as f64, 1.0)).collect();
        mixed[3].0 = 1.99;
        assert!(fit_critical_exponent(&mixed, 2.0).is_err());
        let zeros: Vec<(f64, f64)> = (1..10).map(|k| (2.0 + 0.001 * k as f64, 0.0)).collect();
        assert!(fit_critical_exponent(&zeros, 2.0).is_err());
    }

    #[test]
    fn exact_solution_follows_square_root_law() {
        let p = big_lambda(100.0);
        let check = |g: f64| {
            let (w, _) = exact_scaling_point(&p.with_g_tilde(g)).unwrap().unwrap();
            let pred = w0(g, 1.0, 1.0).0;
            assert!((w - pred).abs() < 0.05 * pred, "g = {g}: {w} vs {pred}");
        };
        for rel in [1e-4, 1e-3, 5e-3, 1e-2, 2e-2] {
            check(2.0 * (1.0 + rel));
        }
        // below g1* the leading term needs lambda * rel >~ 1
        for rel in [1e-2, 2e-2] {
            check(2.0 * (1.0 - rel));
        }
    }

    #[test]
    fn error_shrinks_with_lambda() {
        let g = 2.0 * (1.0 - 0.01);
        let pred = w0(g, 1.0, 1.0).0;
        let errs: Vec<f64> = [10.0, 30.0, 100.0, 300.0]
            .iter()
            .map(|&l| {
                let (w, _) = exact_scaling_point(&big_lambda(l).with_g_tilde(g)).unwrap().unwrap();
                (w - pred).abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }
}
