use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_with, settle_status, spin_norm, IntegrateOptions, MFState, Settling};
use crate::error::{Error, Result};
use crate::model::EffectiveParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleDiagnostics {
    pub n_peaks: usize,
    /// Maxima per period.
    pub stride: usize,
    /// `(max - min) / mean` of the period estimates.
    pub spacing_spread: f64,
    /// Spread of the last five same-phase maxima relative to the `w` range.
    pub amplitude_spread: f64,
    /// Period estimated separately from the first and second halves of the
    /// peak sequence.
    pub period_halves: (f64, f64),
    /// Largest `|S^2 - S^2(0)|` over the measured window when `gamma = 0`.
    pub spin_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub period: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Samples over the last full period, starting and ending at a maximum of
    /// `w`.
    pub orbit: Vec<MFState>,
    pub orbit_times: Vec<f64>,
    pub converged: bool,
    pub diagnostics: CycleDiagnostics,
}

/// Interpolated local maxima `(t, w, index)` of a uniformly sampled signal.
fn peaks(times: &[f64], w: &[f64]) -> Vec<(f64, f64, usize)> {
    let mut out = Vec::new();
    for i in 1..w.len().saturating_sub(1) {
        let (y0, y1, y2) = (w[i - 1], w[i], w[i + 1]);
        if !(y1 > y0 && y1 >= y2) {
            continue;
        }
        let h = times[i] - times[i - 1];
        let curv = y0 - 2.0 * y1 + y2;
        let (dt, val) = if curv != 0.0 {
            let delta = 0.5 * (y0 - y2) / curv;
            (delta * h, y1 - 0.25 * (y0 - y2) * delta)
        } else {
            (0.0, y1)
        };
        out.push((times[i] + dt, val, i));
    }
    out
}

/// Smallest stride `k` such that every maximum repeats `k` maxima later, in
/// value to within 1% of the oscillation range and in time to within 1% of
/// the mean repeat time. Orbits with several maxima per period have `k > 1`.
fn peak_stride(pk: &[(f64, f64, usize)], range: f64) -> Option<usize> {
    (1..=MAX_STRIDE).filter(|k| pk.len() > 3 * k).find(|&k| {
        let gaps: Vec<f64> = pk.windows(k + 1).map(|w| w[k].0 - w[0].0).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        pk.windows(k + 1).all(|w| (w[k].1 - w[0].1).abs() <= 0.01 * range)
            && gaps.iter().all(|g| (g - mean).abs() <= 0.01 * mean)
    })
}

const MAX_STRIDE: usize = 8;

/// Tolerances used for cycle detection; tighter than the trajectory defaults
/// so the spin norm survives long transients.
pub fn cycle_integrate_options() -> IntegrateOptions {
    IntegrateOptions::with_tolerances(1e-12, 1e-14)
}

/// Integrates through `t_transient`, then looks for periodic motion of `w`
/// over `t_measure`. Returns `None` when the trajectory settles on a fixed
/// point. Maxima are grouped by the smallest stride at which their values
/// repeat; the period is the mean time between a maximum and its repeat. The
/// cycle is converged when at least five periods are seen, the last five
/// repeats agree to 1% of the oscillation range and the period estimates vary
/// by at most 1%.
pub fn find_limit_cycle(
    p: &EffectiveParams,
    state0: &MFState,
    t_transient: f64,
    t_measure: f64,
) -> Result<Option<LimitCycle>> {
    find_limit_cycle_with(p, state0, t_transient, t_measure, &cycle_integrate_options())
}

pub fn find_limit_cycle_with(
    p: &EffectiveParams,
    state0: &MFState,
    t_transient: f64,
    t_measure: f64,
    opts: &IntegrateOptions,
) -> Result<Option<LimitCycle>> {
    if !(t_measure > 0.0) || t_transient < 0.0 {
        return Err(Error::Precondition("t_measure must be > 0 and t_transient >= 0".into()));
    }
    let start = if t_transient > 0.0 {
        *integrate_with(state0, p, t_transient, opts)?.last()
    } else {
        *state0
    };
    let n_samples = ((t_measure * 64.0).ceil() as usize).clamp(4096, 400_000);
    let traj = integrate_with(&start, p, t_measure, &opts.samples(n_samples))?;
    if settle_status(&traj, p) == Settling::Settled {
        return Ok(None);
    }
    let w: Vec<f64> = traj.states.iter().map(|s| s.w).collect();
    let (w_min, w_max) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let range = w_max - w_min;
    if range <= 1e-6 * p.n_spins {
        return Ok(None);
    }
    let pk = peaks(&traj.times, &w);
    let spin_drift = (p.gamma == 0.0).then(|| {
        let s0 = spin_norm(state0);
        traj.states
            .iter()
            .map(|s| (spin_norm(s) - s0).abs())
            .fold(0.0, f64::max)
    });
    let stride = peak_stride(&pk, range);
    let k = stride.unwrap_or(1);
    if pk.len() < k + 2 {
        let period = if pk.len() >= 2 {
            pk[pk.len() - 1].0 - pk[0].0
        } else {
            t_measure
        };
        return Ok(Some(LimitCycle {
            period,
            w_min,
            w_max,
            orbit: traj.states.clone(),
            orbit_times: traj.times.clone(),
            converged: false,
            diagnostics: CycleDiagnostics {
                n_peaks: pk.len(),
                stride: k,
                spacing_spread: f64::INFINITY,
                amplitude_spread: f64::INFINITY,
                period_halves: (period, period),
                spin_drift,
            },
        }));
    }
    let spacings: Vec<f64> = pk.windows(k + 1).map(|w| w[k].0 - w[0].0).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let period = mean(&spacings);
    let (smin, smax) = spacings
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let spacing_spread = (smax - smin) / period;
    let same_phase: Vec<f64> = pk.iter().rev().step_by(k).take(5).map(|p| p.1).collect();
    let (amin, amax) = same_phase
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let amplitude_spread = (amax - amin) / range;
    let half = spacings.len() / 2;
    let period_halves = if half >= 1 {
        (mean(&spacings[..half]), mean(&spacings[half..]))
    } else {
        (period, period)
    };
    let converged = stride.is_some()
        && pk.len() > 5 * k
        && same_phase.len() == 5
        && amplitude_spread <= 0.01
        && spacing_spread <= 0.01;
    let i0 = pk[pk.len() - 1 - k].2;
    let i1 = pk[pk.len() - 1].2;
    let orbit = traj.states[i0..=i1].to_vec();
    let t0 = traj.times[i0];
    let orbit_times = traj.times[i0..=i1].iter().map(|t| t - t0).collect();
    Ok(Some(LimitCycle {
        period,
        w_min,
        w_max,
        orbit,
        orbit_times,
        converged,
        diagnostics: CycleDiagnostics {
            n_peaks: pk.len(),
            stride: k,
            spacing_spread,
            amplitude_spread,
            period_halves,
            spin_drift,
        },
    }))
}
