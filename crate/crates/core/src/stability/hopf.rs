use serde::{Deserialize, Serialize};

use super::spectrum;
use crate::dynamics::MFState;
use crate::error::{Error, Result};
use crate::model::EffectiveParams;
use crate::steady::{continuation_sweep, steady_branches, BranchKind, SweepOptions};

/// Minimum `|Im y|` for a crossing pair to count as oscillatory.
const IM_TOL: f64 = 1e-6;
const MIN_RELATIVE_FREQUENCY: f64 = 1e-3;
/// Distance, relative to `N + |x|`, under which two steady states are taken
/// to coincide at a candidate crossing.
const COLLISION_TOL: f64 = 1e-3;

/// A complex pair crossing the imaginary axis along a tracked branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub g_tilde: f64,
    /// `|Im y|` of the crossing pair: the frequency of the emerging cycle.
    pub im_pair: f64,
    /// `Re y` of the pair at the reported coupling.
    pub re_pair: f64,
    pub branch: BranchKind,
    pub state: MFState,
    /// True when the pair gains a positive real part with increasing `g_tilde`.
    pub destabilizing: bool,
}

fn leading_pair(x: &MFState, p: &EffectiveParams) -> Option<(f64, f64)> {
    spectrum(x, p)?.leading_oscillatory(p.gamma == 0.0, IM_TOL)
}

/// Scans `[g_lo, g_hi]` for Hopf bifurcations. Every branch is tracked across
/// the grid; a sign change in the real part of its leading complex pair is
/// bisected in `g_tilde` (re-solving all branches at each midpoint and keeping
/// the one nearest the interpolated state) and kept if the pair is still
/// complex with vanishing real part and no other branch meets it there.
pub fn hopf_scan(
    p_base: &EffectiveParams,
    g_lo: f64,
    g_hi: f64,
    steps: usize,
    opts: &SweepOptions,
) -> Result<Vec<HopfPoint>> {
    if g_lo == g_hi {
        return Ok(Vec::new());
    }
    if steps < 3 {
        return Err(Error::Precondition("hopf_scan needs at least 3 steps".into()));
    }
    let sweep = continuation_sweep(p_base, g_lo, g_hi, steps, opts)?;
    let mut out: Vec<HopfPoint> = Vec::new();
    for track in &sweep.tracks {
        let series = sweep.track_states(track);
        for pair in track.members.windows(2).zip(series.windows(2)) {
            let (idx, states) = pair;
            if idx[1].0 != idx[0].0 + 1 {
                continue;
            }
            let (g0, b0) = states[0];
            let (g1, b1) = states[1];
            let p0 = p_base.with_g_tilde(g0);
            let p1 = p_base.with_g_tilde(g1);
            let (Some((re0, _)), Some((re1, _))) = (leading_pair(&b0.state, &p0), leading_pair(&b1.state, &p1)) else {
                continue;
            };
            if (re0 > 0.0) == (re1 > 0.0) {
                continue;
            }
            if let Some(h) = bisect(p_base, (g0, b0.state, re0), (g1, b1.state, re1), b0.branch) {
                if !out
                    .iter()
                    .any(|o| (o.g_tilde - h.g_tilde).abs() < 1e-8 && o.state.max_abs_diff(&h.state) < 1e-6)
                {
                    out.push(h);
                }
            }
        }
    }
    out.sort_by(|a, b| a.g_tilde.total_cmp(&b.g_tilde));
    Ok(out)
}

fn bisect(
    p_base: &EffectiveParams,
    mut lo: (f64, MFState, f64),
    mut hi: (f64, MFState, f64),
    label: BranchKind,
) -> Option<HopfPoint> {
    let destabilizing = hi.2 > 0.0;
    for _ in 0..80 {
        if hi.0 - lo.0 <= 1e-11 * (1.0 + lo.0.abs()) {
            break;
        }
        let g = 0.5 * (lo.0 + hi.0);
        let p = p_base.with_g_tilde(g);
        let guess = lo.1.scaled(0.5).plus(&hi.1.scaled(0.5));
        let branches = steady_branches(&p).ok()?;
        let b = branches
            .iter()
            .min_by(|a, b| a.state.max_abs_diff(&guess).total_cmp(&b.state.max_abs_diff(&guess)))?;
        let (re, _) = leading_pair(&b.state, &p)?;
        if (re > 0.0) == (lo.2 > 0.0) {
            lo = (g, b.state, re);
        } else {
            hi = (g, b.state, re);
        }
    }
    let end = if lo.2.abs() <= hi.2.abs() { lo } else { hi };
    let p = p_base.with_g_tilde(end.0);
    let (re, im) = leading_pair(&end.1, &p)?;
    if re.abs() >= 1e-6 || im <= IM_TOL {
        return None;
    }
    // a pair whose frequency vanishes on the scale of the spectrum sits at a
    // double-zero degeneracy, not a Hopf point
    let radius = spectrum(&end.1, &p)?.spectral_radius();
    if im < MIN_RELATIVE_FREQUENCY * radius {
        return None;
    }
    // crossings where another branch meets this one, on either side of the
    // final bracket, are steady-state bifurcations rather than Hopf points
    let scale = COLLISION_TOL * (p.n_spins + end.1.max_abs());
    for (g, x) in [(lo.0, lo.1), (hi.0, hi.1)] {
        let others = steady_branches(&p_base.with_g_tilde(g)).ok()?;
        let meets = others.iter().any(|b| {
            let d = b.state.max_abs_diff(&x);
            d > 1e-12 * (1.0 + x.max_abs()) && d < scale
        });
        if meets {
            return None;
        }
    }
    Some(HopfPoint {
        g_tilde: end.0,
        im_pair: im,
        re_pair: re,
        branch: label,
        state: end.1,
        destabilizing,
    })
}
