//! Parameter stepping in `g_tilde` with branch tracking.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{newton_solve, steady_branches, BranchKind, NewtonOptions, SteadyBranch};
use crate::error::{Error, Result};
use crate::model::EffectiveParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub g_tilde: f64,
    pub branches: Vec<SteadyBranch>,
    /// Solver diagnostic when the point could not be computed.
    pub error: Option<String>,
}

/// One branch followed across consecutive sweep points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    /// Branch label at the point where the track starts.
    pub label: BranchKind,
    /// `(point index, branch index within that point)`.
    pub members: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Born,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchEvent {
    pub kind: EventKind,
    pub track: usize,
    /// Sweep index at which the branch first appears or is first missing.
    pub index: usize,
    pub g_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub tracks: Vec<Track>,
    pub events: Vec<BranchEvent>,
}

impl SweepResult {
    pub fn branch(&self, point: usize, branch: usize) -> &SteadyBranch {
        &self.points[point].branches[branch]
    }

    /// `(g_tilde, branch)` along a track.
    pub fn track_states(&self, track: &Track) -> Vec<(f64, SteadyBranch)> {
        track
            .members
            .iter()
            .map(|&(i, j)| (self.points[i].g_tilde, self.points[i].branches[j]))
            .collect()
    }
}

/// Uniform grid of `steps` values; a zero-width range gives one value.
pub fn sweep_grid(g_lo: f64, g_hi: f64, steps: usize) -> Vec<f64> {
    if g_lo == g_hi {
        return vec![g_lo];
    }
    (0..steps)
        .map(|k| {
            if k + 1 == steps {
                g_hi
            } else {
                g_lo + (g_hi - g_lo) * k as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

pub(crate) fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn sign_mismatch(a: f64, b: f64) -> u8 {
    u8::from((a >= 0.0) != (b >= 0.0))
}

/// Computes every branch at each `g_tilde` of the grid (in parallel) and then
/// links branches across the grid. A track is continued by polishing its last
/// state at the new coupling and taking the nearest computed branch; ties are
/// broken by agreement in the sign of `w`, then of `s_x`.
pub fn continuation_sweep(
    p_base: &EffectiveParams,
    g_lo: f64,
    g_hi: f64,
    steps: usize,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    p_base.validate()?;
    if !(g_lo.is_finite() && g_hi.is_finite()) {
        return Err(Error::Precondition("sweep range must be finite".into()));
    }
    if steps < 2 && g_lo != g_hi {
        return Err(Error::Precondition("sweep needs at least 2 steps".into()));
    }
    let grid = sweep_grid(g_lo, g_hi, steps);
    let points: Vec<SweepPoint> = with_pool(opts.jobs, || {
        grid.par_iter()
            .enumerate()
            .map(|(index, &g)| match steady_branches(&p_base.with_g_tilde(g)) {
                Ok(branches) => SweepPoint {
                    index,
                    g_tilde: g,
                    branches,
                    error: None,
                },
                Err(e) => SweepPoint {
                    index,
                    g_tilde: g,
                    branches: Vec::new(),
                    error: Some(e.to_string()),
                },
            })
            .collect()
    })?;

    let mut tracks: Vec<Track> = Vec::new();
    let mut events = Vec::new();
    let mut alive: Vec<usize> = Vec::new();
    for (i, point) in points.iter().enumerate() {
        let p = p_base.with_g_tilde(point.g_tilde);
        let mut pairs: Vec<(f64, u8, u8, usize, usize)> = Vec::new();
        for (slot, &t) in alive.iter().enumerate() {
            let &(pi, bj) = tracks[t].members.last().expect("tracks are never empty");
            let prev = points[pi].branches[bj].state;
            let (predicted, radius) = match newton_solve(&prev, &p, &NewtonOptions::default()) {
                Ok((x, _, _)) => (x, 1e-6 * (1.0 + x.max_abs())),
                Err(_) => (prev, 0.1 * (p.n_spins + prev.max_abs())),
            };
            for (j, b) in point.branches.iter().enumerate() {
                let d = predicted.max_abs_diff(&b.state);
                if d <= radius {
                    pairs.push((
                        d,
                        sign_mismatch(prev.w, b.state.w),
                        sign_mismatch(prev.s_x, b.state.s_x),
                        slot,
                        j,
                    ));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut slot_done = vec![false; alive.len()];
        let mut branch_done = vec![false; point.branches.len()];
        for (_, _, _, slot, j) in pairs {
            if slot_done[slot] || branch_done[j] {
                continue;
            }
            slot_done[slot] = true;
            branch_done[j] = true;
            tracks[alive[slot]].members.push((i, j));
        }
        let mut next_alive = Vec::new();
        for (slot, &t) in alive.iter().enumerate() {
            if slot_done[slot] {
                next_alive.push(t);
            } else {
                events.push(BranchEvent {
                    kind: EventKind::Lost,
                    track: t,
                    index: i,
                    g_tilde: point.g_tilde,
                });
            }
        }
        for (j, b) in point.branches.iter().enumerate() {
            if branch_done[j] {
                continue;
            }
            let id = tracks.len();
            tracks.push(Track {
                id,
                label: b.branch,
                members: vec![(i, j)],
            });
            if i > 0 {
                events.push(BranchEvent {
                    kind: EventKind::Born,
                    track: id,
                    index: i,
                    g_tilde: point.g_tilde,
                });
            }
            next_alive.push(id);
        }
        alive = next_alive;
    }
    Ok(SweepResult { points, tracks, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::Stability;

    fn base() -> EffectiveParams {
        EffectiveParams {
            delta_ph: 0.5,
            kappa: 0.5,
            eta_r: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(sweep_grid(1.0, 1.0, 10), vec![1.0]);
        let g = sweep_grid(0.0, 1.0, 5);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn zero_width_sweep_is_one_column() {
        let r = continuation_sweep(&base(), 2.5, 2.5, 7, &SweepOptions::default()).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].branches.len(), 4);
    }

    #[test]
    fn region_two_has_three_intensities() {
        let r = continuation_sweep(&base(), 2.1, 2.7, 4, &SweepOptions { jobs: Some(2) }).unwrap();
        for pt in &r.points {
            let mut a2: Vec<f64> = pt.branches.iter().map(|b| b.state.alpha_sq()).collect();
            a2.sort_by(|a, b| a.total_cmp(b));
            a2.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            assert_eq!(a2.len(), 3, "g = {}", pt.g_tilde);
        }
    }

    #[test]
    fn tracks_follow_branches_and_record_losses() {
        let r = continuation_sweep(&base(), 1.0, 3.4, 49, &SweepOptions::default()).unwrap();
        // the angle pair disappears beyond g2*, the empty-cavity pair appears at g1*
        assert!(r.events.iter().any(|e| e.kind == EventKind::Lost && e.g_tilde > 2.8));
        assert!(r
            .events
            .iter()
            .any(|e| e.kind == EventKind::Born && e.g_tilde >= 2.0 && e.g_tilde < 2.1));
        for t in &r.tracks {
            let states = r.track_states(t);
            for w in states.windows(2) {
                assert!(w[0].1.state.max_abs_diff(&w[1].1.state) < 0.5);
            }
        }
        let stable_at_end = r
            .points
            .last()
            .unwrap()
            .branches
            .iter()
            .filter(|b| b.stability == Stability::Stable)
            .count();
        assert_eq!(stable_at_end, 1);
    }

    #[test]
    fn parallel_and_serial_agree() {
        let a = continuation_sweep(&base(), 0.5, 3.0, 11, &SweepOptions { jobs: Some(1) }).unwrap();
        let b = continuation_sweep(&base(), 0.5, 3.0, 11, &SweepOptions { jobs: Some(4) }).unwrap();
        assert_eq!(a, b);
    }
}
