//! Phase-diagram boundaries along a parameter axis: the bistable window
//! `[g1*, g2*]` against `lambda` and the four-solution window against
//! `delta_at`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EffectiveParams;
use crate::stability::hopf_scan;
use crate::steady::{quartic_physical_roots, steady_branches, sweep_grid, BranchKind, SweepOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionAxis {
    Lambda,
    DeltaAt,
}

impl RegionAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lambda" => Some(Self::Lambda),
            "delta_at" => Some(Self::DeltaAt),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::DeltaAt => "delta_at",
        }
    }
}

/// Boundaries found inside the scanned range that could not be located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionFlag {
    /// The field-carrying branch still exists at `g_hi`.
    G2AboveRange,
    /// The four-root window reaches `g_lo`.
    RegionRBelowRange,
    /// The four-root window reaches `g_hi`.
    RegionRAboveRange,
    /// Four roots occur on several disjoint intervals; the hull is reported.
    RegionRDisjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub axis: RegionAxis,
    pub axis_value: f64,
    pub g1_star: f64,
    pub g2_star: Option<f64>,
    pub region_ii_width: Option<f64>,
    pub region_r_interval: Option<[f64; 2]>,
    pub hopf_points: Vec<f64>,
    pub flags: Vec<RegionFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOptions {
    pub g_lo: f64,
    pub g_hi: f64,
    /// Grid points used to bracket each boundary before bisection.
    pub steps: usize,
    /// Also scan each axis value for Hopf points.
    pub hopf: bool,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            g_lo: 0.0,
            g_hi: 4.0,
            steps: 200,
            hopf: false,
        }
    }
}

fn has_field_branch(p: &EffectiveParams) -> Result<bool> {
    Ok(steady_branches(p)?
        .iter()
        .any(|b| b.branch != BranchKind::TrivialAlphaZero))
}

fn four_roots(p: &EffectiveParams) -> bool {
    quartic_physical_roots(p).len() == 4
}

/// Bisects a change of `pred` between `a` (where it equals `pa`) and `b`.
fn bisect_edge(mut a: f64, mut b: f64, pa: bool, pred: &dyn Fn(f64) -> Result<bool>) -> Result<f64> {
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
        let m = 0.5 * (a + b);
        if pred(m)? == pa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Grid scan plus bisection: every coupling where `pred` switches value, with
/// the value just above it.
type Edges = (Vec<bool>, Vec<(f64, bool)>);

fn edges(grid: &[f64], pred: &dyn Fn(f64) -> Result<bool>) -> Result<Edges> {
    let vals = grid.iter().map(|&g| pred(g)).collect::<Result<Vec<bool>>>()?;
    let mut out = Vec::new();
    for i in 1..grid.len() {
        if vals[i] != vals[i - 1] {
            out.push((bisect_edge(grid[i - 1], grid[i], vals[i - 1], pred)?, vals[i]));
        }
    }
    Ok((vals, out))
}

fn with_axis(p: &EffectiveParams, axis: RegionAxis, v: f64) -> EffectiveParams {
    match axis {
        RegionAxis::Lambda => p.with_lambda(v),
        RegionAxis::DeltaAt => p.with_delta_at(v),
    }
}

fn region_report(p: &EffectiveParams, axis: RegionAxis, opts: &RegionOptions) -> Result<RegionReport> {
    let value = match axis {
        RegionAxis::Lambda => p.lambda,
        RegionAxis::DeltaAt => p.delta_at,
    };
    let grid = sweep_grid(opts.g_lo, opts.g_hi, opts.steps);
    let g1 = 2.0 * p.eta_abs() / p.n_spins;
    let mut flags = Vec::new();
    let (mut g2, mut width, mut region_r) = (None, None, None);
    match axis {
        RegionAxis::Lambda => {
            let pred = |g: f64| has_field_branch(&p.with_g_tilde(g));
            let (vals, found) = edges(&grid, &pred)?;
            if *vals.last().unwrap_or(&false) {
                flags.push(RegionFlag::G2AboveRange);
            } else if let Some(&(g, _)) = found.iter().rev().find(|(_, above)| !above) {
                g2 = Some(g);
                width = Some((g - g1).max(0.0));
            }
        }
        RegionAxis::DeltaAt => {
            let pred = |g: f64| Ok(four_roots(&p.with_g_tilde(g)));
            let (vals, found) = edges(&grid, &pred)?;
            let lo = if vals[0] {
                flags.push(RegionFlag::RegionRBelowRange);
                Some(grid[0])
            } else {
                found.iter().find(|(_, above)| *above).map(|e| e.0)
            };
            let hi = if *vals.last().unwrap_or(&false) {
                flags.push(RegionFlag::RegionRAboveRange);
                grid.last().copied()
            } else {
                found.iter().rev().find(|(_, above)| !above).map(|e| e.0)
            };
            if found.iter().filter(|(_, above)| *above).count() > 1 {
                flags.push(RegionFlag::RegionRDisjoint);
            }
            if let (Some(a), Some(b)) = (lo, hi) {
                region_r = Some([a, b]);
            }
        }
    }
    let hopf_points = if opts.hopf {
        hopf_scan(p, opts.g_lo, opts.g_hi, opts.steps, &SweepOptions::default())?
            .into_iter()
            .map(|h| h.g_tilde)
            .collect()
    } else {
        Vec::new()
    };
    Ok(RegionReport {
        axis,
        axis_value: value,
        g1_star: g1,
        g2_star: g2,
        region_ii_width: width,
        region_r_interval: region_r,
        hopf_points,
        flags,
    })
}

/// One report per axis value. Along `lambda` (which needs `delta_at = 0`) the
/// upper edge `g2*` of the field-carrying branches is bisected on branch
/// existence; `g1* = 2 |eta| / N` is where the empty-cavity states appear for
/// every `lambda`. Along `delta_at` (which needs `lambda = 0`) the coupling
/// window with four physical quartic roots is bisected. Boundaries outside
/// `[g_lo, g_hi]` are flagged rather than extrapolated.
pub fn region_boundaries(
    p_base: &EffectiveParams,
    axis: RegionAxis,
    values: &[f64],
    opts: &RegionOptions,
    sweep: &SweepOptions,
) -> Result<Vec<RegionReport>> {
    p_base.validate()?;
    if !(opts.g_hi > opts.g_lo) || opts.steps < 2 {
        return Err(Error::Precondition(
            "region scan needs g_hi > g_lo and steps >= 2".into(),
        ));
    }
    if p_base.gamma != 0.0 {
        return Err(Error::Precondition("region boundaries require gamma = 0".into()));
    }
    match axis {
        RegionAxis::Lambda if p_base.delta_at != 0.0 => {
            return Err(Error::Precondition("lambda axis requires delta_at = 0".into()));
        }
        RegionAxis::DeltaAt if p_base.lambda != 0.0 => {
            return Err(Error::Precondition("delta_at axis requires lambda = 0".into()));
        }
        _ => {}
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("axis values must be finite".into()));
    }
    crate::steady::with_pool(sweep.jobs, || {
        values
            .par_iter()
            .map(|&v| region_report(&with_axis(p_base, axis, v), axis, opts))
            .collect::<Result<Vec<_>>>()
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> EffectiveParams {
        EffectiveParams {
            delta_ph: 0.5,
            kappa: 0.5,
            eta_r: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn linear_g2_matches_closed_form() {
        let r = region_boundaries(
            &base(),
            RegionAxis::Lambda,
            &[0.0],
            &RegionOptions::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        let g2 = r[0].g2_star.unwrap();
        assert!((g2 / r[0].g1_star - 2f64.sqrt()).abs() < 1e-9, "{g2}");
    }

    #[test]
    fn region_ii_shrinks_with_lambda() {
        let lams = [0.1, 0.3, 1.0, 3.0, 10.0, 100.0];
        let r = region_boundaries(
            &base(),
            RegionAxis::Lambda,
            &lams,
            &RegionOptions::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        let w: Vec<f64> = r.iter().map(|x| x.region_ii_width.unwrap()).collect();
        assert!(w[0] > 0.0);
        assert!(w.windows(2).all(|p| p[1] <= p[0] + 1e-4), "{w:?}");
        assert!(w[5] < 0.02 * 2.0, "{w:?}");
    }

    #[test]
    fn region_r_present_then_absent() {
        let r = region_boundaries(
            &base(),
            RegionAxis::DeltaAt,
            &[0.5, 3.9],
            &RegionOptions::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        let [a, b] = r[0].region_r_interval.unwrap();
        assert!(b > a);
        assert!(four_roots(&base().with_delta_at(0.5).with_g_tilde(0.5 * (a + b))));
        assert!(r[1].region_r_interval.is_none());
    }

    #[test]
    fn flags_boundary_outside_range() {
        let opts = RegionOptions {
            g_hi: 2.5,
            ..Default::default()
        };
        let r = region_boundaries(&base(), RegionAxis::Lambda, &[0.0], &opts, &SweepOptions::default()).unwrap();
        assert!(r[0].g2_star.is_none());
        assert_eq!(r[0].flags, vec![RegionFlag::G2AboveRange]);
    }

    #[test]
    fn rejects_mismatched_axis() {
        let p = base().with_lambda(1.0);
        assert!(region_boundaries(
            &p,
            RegionAxis::DeltaAt,
            &[0.5],
            &RegionOptions::default(),
            &SweepOptions::default()
        )
        .is_err());
    }
}
