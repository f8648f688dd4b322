//! Plain-text output formats and their readers. Every float is written with
//! 17 significant digits so files reload bit-for-bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::asymptotics::ScalingRow;
use crate::dynamics::{MFState, State2D, Trajectory};
use crate::error::{Error, Result};
use crate::model::EffectiveParams;
use crate::stability::{HopfPoint, Spectrum};
use crate::steady::{residual, BranchKind, Stability, SweepResult};

pub const TRAJECTORY_HEADER: &str = "t,alpha_r,alpha_i,s_x,s_y,w";
pub const BLOCH_HEADER: &str = "t,s_x,s_y,w";
pub const SWEEP_HEADER: &str = "g_tilde,branch,alpha2,w,s_x,s_y,residual,stability";
pub const STABILITY_HEADER: &str = "g_tilde,branch,re_y1,re_y2,re_y3,re_y4,re_y5,im_y1,im_y2,im_y3,im_y4,im_y5,verdict";
pub const SCALING_HEADER: &str = "g_tilde,w_exact,w_asymptotic,alpha2_exact,alpha2_asymptotic";

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt).collect::<Vec<_>>().join(",")
}

pub fn write_trajectory_csv(out: &mut impl Write, traj: &Trajectory<MFState>) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        writeln!(out, "{}", join([*t, s.alpha_r, s.alpha_i, s.s_x, s.s_y, s.w]))?;
    }
    Ok(())
}

/// Spin components divided by `N`, for plotting on the unit sphere.
pub fn write_bloch_csv(out: &mut impl Write, times: &[f64], states: &[MFState], n_spins: f64) -> Result<()> {
    writeln!(out, "{BLOCH_HEADER}")?;
    for (t, s) in times.iter().zip(states) {
        writeln!(out, "{}", join([*t, s.s_x / n_spins, s.s_y / n_spins, s.w / n_spins]))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Sample2D<'a> {
    t: f64,
    #[serde(flatten)]
    state: &'a State2D,
}

/// One JSON object per line: `t`, `alpha`, `beta`, `s` (as `[re, im]`) and `w`.
pub fn write_trajectory_2d_jsonl(out: &mut impl Write, traj: &Trajectory<State2D>) -> Result<()> {
    for (t, state) in traj.times.iter().zip(&traj.states) {
        serde_json::to_writer(&mut *out, &Sample2D { t: *t, state })?;
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub g_tilde: f64,
    pub branch: String,
    pub alpha2: f64,
    pub w: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub residual: f64,
    pub stability: String,
}

pub fn sweep_rows(sweep: &SweepResult) -> Vec<SweepRow> {
    sweep
        .points
        .iter()
        .flat_map(|pt| {
            pt.branches.iter().map(move |b| SweepRow {
                g_tilde: pt.g_tilde,
                branch: b.branch.label(),
                alpha2: b.state.alpha_sq(),
                w: b.state.w,
                s_x: b.state.s_x,
                s_y: b.state.s_y,
                residual: b.residual,
                stability: b.stability.label().into(),
            })
        })
        .collect()
}

pub fn write_sweep_csv(out: &mut impl Write, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt(r.g_tilde),
            r.branch,
            join([r.alpha2, r.w, r.s_x, r.s_y, r.residual]),
            r.stability
        )?;
    }
    Ok(())
}

fn parse_field(line: usize, name: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(line, name, format!("not a number: {s}")))
}

fn read_lines(input: impl BufRead, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    let mut lines = input.lines().enumerate();
    let first = lines.next().map(|(_, l)| l).transpose()?;
    if first.as_deref().map(str::trim) != Some(header) {
        return Err(Error::config(1, "header", format!("expected `{header}`")));
    }
    let width = header.split(',').count();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Err(Error::config(
                i + 1,
                "row",
                format!("expected {width} fields, got {}", fields.len()),
            ));
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

pub fn read_sweep_csv(input: impl BufRead) -> Result<Vec<SweepRow>> {
    read_lines(input, SWEEP_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            if BranchKind::parse(&f[1]).is_none() {
                return Err(Error::config(line, "branch", format!("unknown branch: {}", f[1])));
            }
            if Stability::parse(&f[7]).is_none() {
                return Err(Error::config(line, "stability", format!("unknown verdict: {}", f[7])));
            }
            Ok(SweepRow {
                g_tilde: parse_field(line, "g_tilde", &f[0])?,
                branch: f[1].clone(),
                alpha2: parse_field(line, "alpha2", &f[2])?,
                w: parse_field(line, "w", &f[3])?,
                s_x: parse_field(line, "s_x", &f[4])?,
                s_y: parse_field(line, "s_y", &f[5])?,
                residual: parse_field(line, "residual", &f[6])?,
                stability: f[7].clone(),
            })
        })
        .collect()
}

pub fn read_trajectory_csv(input: impl BufRead) -> Result<(Vec<f64>, Vec<MFState>)> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (line, f) in read_lines(input, TRAJECTORY_HEADER)? {
        let v = f
            .iter()
            .zip(TRAJECTORY_HEADER.split(','))
            .map(|(s, name)| parse_field(line, name, s))
            .collect::<Result<Vec<f64>>>()?;
        times.push(v[0]);
        states.push(MFState::from_slice(&v[1..]));
    }
    Ok((times, states))
}

pub fn write_stability_csv(
    out: &mut impl Write,
    rows: &[(f64, BranchKind, Option<Spectrum>, Stability)],
) -> Result<()> {
    writeln!(out, "{STABILITY_HEADER}")?;
    for (g, branch, spec, verdict) in rows {
        let (re, im): (Vec<f64>, Vec<f64>) = match spec {
            Some(s) => s.eigenvalues.iter().map(|z| (z.re, z.im)).unzip(),
            None => (vec![f64::NAN; 5], vec![f64::NAN; 5]),
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt(*g),
            branch.label(),
            join(re),
            join(im),
            verdict.label()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfRecord {
    pub g_tilde: f64,
    pub im_pair: f64,
    pub branch: String,
}

pub fn hopf_records(points: &[HopfPoint]) -> Vec<HopfRecord> {
    points
        .iter()
        .map(|h| HopfRecord {
            g_tilde: h.g_tilde,
            im_pair: h.im_pair,
            branch: h.branch.label(),
        })
        .collect()
}

pub fn write_scaling_csv(out: &mut impl Write, rows: &[ScalingRow]) -> Result<()> {
    writeln!(out, "{SCALING_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{}",
            join([
                r.g_tilde,
                r.w_exact,
                r.w_asymptotic,
                r.alpha2_exact,
                r.alpha2_asymptotic
            ])
        )?;
    }
    Ok(())
}

/// Cavity field solving the stationary cavity equations for the given spin,
/// or `None` when the field is undetermined (`kappa = 0` at resonance).
pub fn stationary_field(s_x: f64, s_y: f64, w: f64, p: &EffectiveParams) -> Option<(f64, f64)> {
    let f = p.delta_ph + p.lambda * w;
    let det = p.kappa * p.kappa + f * f;
    if det == 0.0 {
        return None;
    }
    let u = 0.5 * p.g_tilde * s_y - p.eta_i;
    let v = 0.5 * p.g_tilde * s_x + p.eta_r;
    Some(((-p.kappa * u - f * v) / det, (f * u - p.kappa * v) / det))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    pub line: usize,
    pub residual: f64,
    pub alpha2_error: f64,
    pub sum_rule_error: f64,
    pub ok: bool,
}

/// Rebuilds each sweep row's state at its coupling and re-checks it: the
/// field from the cavity equations must reproduce `alpha2`, the full state
/// must be stationary, and with `gamma = 0` the spin must lie on the sphere.
pub fn check_sweep_rows(rows: &[SweepRow], p_base: &EffectiveParams, tol: f64) -> Vec<RowCheck> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let p = p_base.with_g_tilde(r.g_tilde);
            let n2 = p.n_spins * p.n_spins;
            let sum_rule_error = if p.gamma == 0.0 {
                (r.s_x * r.s_x + r.s_y * r.s_y + r.w * r.w - n2).abs() / n2
            } else {
                0.0
            };
            let (res, a2_err) = match stationary_field(r.s_x, r.s_y, r.w, &p) {
                Some((ar, ai)) => {
                    let x = MFState::new(ar, ai, r.s_x, r.s_y, r.w);
                    let a2 = x.alpha_sq();
                    (residual(&x, &p), (a2 - r.alpha2).abs() / (1.0 + r.alpha2))
                }
                None => (f64::INFINITY, f64::INFINITY),
            };
            RowCheck {
                line: i + 2,
                residual: res,
                alpha2_error: a2_err,
                sum_rule_error,
                ok: res <= tol && a2_err <= tol && sum_rule_error <= tol,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::continuation_sweep;

    fn base() -> EffectiveParams {
        EffectiveParams {
            delta_ph: 0.5,
            kappa: 0.5,
            eta_r: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.0f64.sqrt(), 1e-300, 6.02e23] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn sweep_csv_round_trips_and_validates() {
        let sweep = continuation_sweep(&base(), 0.1, 3.5, 30, &Default::default()).unwrap();
        let rows = sweep_rows(&sweep);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let back = read_sweep_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
        let checks = check_sweep_rows(&back, &base(), 1e-8);
        assert!(checks.iter().all(|c| c.ok), "{:?}", checks.iter().find(|c| !c.ok));
    }

    #[test]
    fn tampered_row_fails_validation() {
        let sweep = continuation_sweep(&base(), 1.0, 1.0, 1, &Default::default()).unwrap();
        let mut rows = sweep_rows(&sweep);
        rows[0].w += 1e-3;
        assert!(!check_sweep_rows(&rows, &base(), 1e-8)[0].ok);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let traj = crate::dynamics::integrate(
            &MFState::new(0.1, 0.0, 0.6, 0.0, -0.8),
            &base().with_g_tilde(1.0),
            2.0,
            1e-9,
            1e-11,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let (t, s) = read_trajectory_csv(&buf[..]).unwrap();
        assert_eq!(t, traj.times);
        assert_eq!(s, traj.states);
    }

    #[test]
    fn reader_reports_bad_lines() {
        let text = format!("{TRAJECTORY_HEADER}\n0,1,2,3,4,5\n1,2,x,4,5,6\n");
        match read_trajectory_csv(text.as_bytes()) {
            Err(Error::Config { line, key, .. }) => assert_eq!((line, key.as_str()), (3, "alpha_i")),
            other => panic!("{other:?}"),
        }
        assert!(read_trajectory_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn two_d_lines_are_json() {
        let p = crate::model::Params2D {
            g_tilde_a: 1.0,
            g_tilde_b: 0.5,
            delta_ph_a: 0.5,
            delta_ph_b: 0.5,
            delta_at: 0.0,
            lambda: 0.0,
            kappa: 0.5,
            gamma: 0.0,
            eta: num_complex::Complex64::new(1.0, 0.0),
            n_rows: 2,
            n_cols: 2,
        };
        let traj = crate::dynamics::integrate_2d(&State2D::dark(2, 2), &p, 1.0, &Default::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_2d_jsonl(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["t"], 0.0);
        assert_eq!(first["w"].as_array().unwrap().len(), 4);
        assert_eq!(text.lines().count(), traj.len());
    }
}
