//! Command-line front end shared by the `cavity-mf` binary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::{fit_critical_exponent, g1_star, scaling_table, PowerLawFit, ScalingRow};
use crate::config::{ConfigFile, Mode, SweepAxis};
use crate::dynamics::{integrate_2d, integrate_with, settle_status, IntegrateOptions, MFState, State2D};
use crate::error::{Error, Result};
use crate::io;
use crate::model::{EffectiveParams, Params2D};
use crate::regions::{region_boundaries, RegionAxis, RegionOptions, RegionReport};
use crate::stability::{classify_state, find_limit_cycle, hopf_scan};
use crate::steady::{
    cluster_2d, cluster_survey, continuation_sweep, homogeneous_2d, steady_branches, transition_points, BranchEvent,
    CriticalParam, SweepOptions, TransitionPoints,
};

#[derive(Debug, Parser)]
#[command(
    name = "cavity-mf",
    version,
    about = "Mean-field dynamics and bifurcations of a pumped cavity array"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration (`key = value` per line).
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    /// Override or add a configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Main output file; companion files are written next to it. Standard
    /// output when absent.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, env = "CAVITY_MF_JOBS", global = true)]
    pub jobs: Option<usize>,
    /// Print a one-line summary per sweep point.
    #[arg(long, short = 'v', global = true)]
    pub verbose: bool,
    /// Seed for random initial states and parameter draws.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Effective parameters as JSON.
    DeriveParams,
    /// Integrate the equations of motion.
    Evolve,
    /// All fixed points at one coupling.
    Steady,
    /// Fixed points tracked across a coupling range.
    Sweep,
    /// Eigenvalues along a sweep, Hopf points and optional limit cycle.
    Stability,
    /// Exact solutions against the large-lambda expansion, with power-law fits.
    Asymptotics,
    /// Fixed points of the two-site cluster equations.
    Cluster2d,
    /// Homogeneous fixed points of the array and the critical coupling.
    Homog2d,
    /// Phase-diagram boundaries along a lambda or delta_at grid.
    Regions,
    /// Re-check a sweep or trajectory CSV against the configured parameters.
    Validate { file: PathBuf },
    /// Dispatch on the `mode` key of the configuration.
    Run,
}

/// 2 for bad input, 3 for numerical failure.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::StiffTrajectory { .. } | Error::StepBudget { .. } | Error::NoConvergence { .. } | Error::Fit(_) => 3,
        _ => 2,
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Ctx {
    cfg: ConfigFile,
    output: Option<PathBuf>,
    jobs: Option<usize>,
    verbose: bool,
    seed: u64,
}

impl Ctx {
    fn sweep_opts(&self) -> SweepOptions {
        SweepOptions { jobs: self.jobs }
    }

    /// Writer for the main output.
    fn main_out(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(std::io::stdout())),
        })
    }

    /// Companion file `<stem>.<suffix>` next to the main output, if any.
    fn companion(&self, suffix: &str) -> Result<Option<Box<dyn Write>>> {
        let Some(p) = &self.output else {
            return Ok(None);
        };
        Ok(Some(Box::new(BufWriter::new(File::create(companion_path(p, suffix))?))))
    }

    fn say(&self, line: impl AsRef<str>) {
        if self.verbose {
            println!("{}", line.as_ref());
        }
    }
}

pub fn companion_path(main: &Path, suffix: &str) -> PathBuf {
    let stem = main
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    main.with_file_name(format!("{stem}.{suffix}"))
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Runs one command. `Ok(false)` means the run finished but a check failed.
pub fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    for s in &cli.global.set {
        cfg.set(s)?;
    }
    let seed = match cli.global.seed {
        Some(s) => s,
        None => cfg.u64_or("seed", 0)?,
    };
    let output = cli
        .global
        .output
        .clone()
        .or_else(|| cfg.str("output").map(PathBuf::from));
    let ctx = Ctx {
        cfg,
        output,
        jobs: cli.global.jobs,
        verbose: cli.global.verbose,
        seed,
    };
    let mode = match cli.command {
        Command::DeriveParams => Mode::DeriveParams,
        Command::Evolve => Mode::Evolve,
        Command::Steady => Mode::SteadyState,
        Command::Sweep => Mode::Sweep,
        Command::Stability => Mode::Stability,
        Command::Asymptotics => Mode::Asymptotics,
        Command::Cluster2d => Mode::Cluster2D,
        Command::Homog2d => Mode::Homogeneous2D,
        Command::Regions => Mode::Regions,
        Command::Validate { file } => return validate(&ctx, &file),
        Command::Run => ctx
            .cfg
            .mode()?
            .ok_or_else(|| Error::config(crate::config::CLI_LINE, "mode", "run needs a mode key"))?,
    };
    match mode {
        Mode::DeriveParams => derive_params(&ctx),
        Mode::Evolve => evolve(&ctx),
        Mode::SteadyState => steady(&ctx),
        Mode::Sweep => sweep(&ctx),
        Mode::Stability => stability(&ctx),
        Mode::Asymptotics => asymptotics(&ctx),
        Mode::Cluster2D => cluster(&ctx),
        Mode::Homogeneous2D => homog(&ctx),
        Mode::Regions => regions(&ctx),
    }
}

fn derive_params(ctx: &Ctx) -> Result<bool> {
    let p = ctx.cfg.effective_params()?;
    write_json(&mut ctx.main_out()?, &p)?;
    Ok(true)
}

fn integrate_options(cfg: &ConfigFile) -> Result<IntegrateOptions> {
    let d = IntegrateOptions::default();
    Ok(
        IntegrateOptions::with_tolerances(cfg.f64_or("rel_tol", d.rel_tol)?, cfg.f64_or("abs_tol", d.abs_tol)?)
            .samples(cfg.usize_or("n_samples", d.n_samples)?),
    )
}

/// Random point on the spin sphere of radius `n` with a field in the unit
/// square.
fn random_state(rng: &mut ChaCha8Rng, n: f64) -> MFState {
    let w: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - w * w).sqrt();
    MFState::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        n * r * phi.cos(),
        n * r * phi.sin(),
        n * w,
    )
}

fn initial_state(ctx: &Ctx, p: &EffectiveParams) -> Result<MFState> {
    let c = &ctx.cfg;
    if c.bool_or("random_start", false)? {
        return Ok(random_state(&mut ChaCha8Rng::seed_from_u64(ctx.seed), p.n_spins));
    }
    Ok(MFState::new(
        c.f64_or("alpha_r0", 0.0)?,
        c.f64_or("alpha_i0", 0.0)?,
        c.f64_or("s_x0", 0.0)?,
        c.f64_or("s_y0", 0.0)?,
        c.f64_or("w0", -p.n_spins)?,
    ))
}

fn is_array_run(cfg: &ConfigFile) -> bool {
    ["n_rows", "n_cols", "g_tilde_a", "g_tilde_b", "delta_ph_a", "delta_ph_b"]
        .iter()
        .any(|k| cfg.contains(k))
}

fn evolve(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let t_end = c.f64_or("t_end", 100.0)?;
    let opts = integrate_options(c)?;
    if is_array_run(c) {
        let p = c.params_2d()?;
        let x0 = initial_state_2d(ctx, &p)?;
        let traj = integrate_2d(&x0, &p, t_end, &opts)?;
        io::write_trajectory_2d_jsonl(&mut ctx.main_out()?, &traj)?;
        ctx.say(format!(
            "t_end={t_end} samples={} drift={:?}",
            traj.len(),
            traj.conservation_drift
        ));
        return Ok(true);
    }
    let p = c.effective_params()?;
    let x0 = initial_state(ctx, &p)?;
    let traj = integrate_with(&x0, &p, t_end, &opts)?;
    let bloch = c.bool_or("bloch", false)?;
    if bloch && ctx.output.is_none() {
        let mut out = ctx.main_out()?;
        io::write_bloch_csv(&mut out, &traj.times, &traj.states, p.n_spins)?;
        out.flush()?;
    } else {
        let mut out = ctx.main_out()?;
        io::write_trajectory_csv(&mut out, &traj)?;
        out.flush()?;
        if bloch {
            if let Some(mut b) = ctx.companion("bloch.csv")? {
                io::write_bloch_csv(&mut b, &traj.times, &traj.states, p.n_spins)?;
                b.flush()?;
            }
        }
    }
    ctx.say(format!(
        "t_end={t_end} samples={} settled={:?} drift={:?}",
        traj.len(),
        settle_status(&traj, &p),
        traj.conservation_drift
    ));
    Ok(true)
}

fn initial_state_2d(ctx: &Ctx, p: &Params2D) -> Result<State2D> {
    let c = &ctx.cfg;
    let mut x = State2D::zeros(p.n_rows, p.n_cols);
    if c.bool_or("random_start", false)? {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        for k in 0..x.w.len() {
            let w: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            x.w[k] = w;
            x.s[k] = 0.5 * (1.0 - w * w).sqrt() * num_complex::Complex64::from_polar(1.0, phi);
        }
        return Ok(x);
    }
    let a = num_complex::Complex64::new(c.f64_or("alpha_r0", 0.0)?, c.f64_or("alpha_i0", 0.0)?);
    let s = 0.5 * num_complex::Complex64::new(c.f64_or("s_x0", 0.0)?, -c.f64_or("s_y0", 0.0)?);
    let w = c.f64_or("w0", -1.0)?;
    x.alpha.iter_mut().for_each(|v| *v = a);
    x.beta.iter_mut().for_each(|v| *v = a);
    x.s.iter_mut().for_each(|v| *v = s);
    x.w.iter_mut().for_each(|v| *v = w);
    Ok(x)
}

fn steady(ctx: &Ctx) -> Result<bool> {
    let p = ctx.cfg.effective_params()?;
    let branches = steady_branches(&p)?;
    let rows: Vec<io::SweepRow> = branches
        .iter()
        .map(|b| io::SweepRow {
            g_tilde: p.g_tilde,
            branch: b.branch.label(),
            alpha2: b.state.alpha_sq(),
            w: b.state.w,
            s_x: b.state.s_x,
            s_y: b.state.s_y,
            residual: b.residual,
            stability: b.stability.label().into(),
        })
        .collect();
    let mut out = ctx.main_out()?;
    io::write_sweep_csv(&mut out, &rows)?;
    out.flush()?;
    ctx.say(format!("g_tilde={} branches={}", p.g_tilde, rows.len()));
    Ok(true)
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    params: &'a EffectiveParams,
    axis: &'a SweepAxis,
    transition_points: Option<TransitionPoints>,
    regions: Option<RegionReport>,
    tracks: usize,
    events: &'a [BranchEvent],
    failed_points: Vec<(usize, String)>,
}

/// Region boundaries of the current parameters over the swept range, when
/// the parameters sit on one of the two region axes.
fn local_regions(p: &EffectiveParams, axis: &SweepAxis, opts: &SweepOptions) -> Result<Option<RegionReport>> {
    if p.gamma != 0.0 || axis.lo == axis.hi {
        return Ok(None);
    }
    let which = match (p.lambda == 0.0, p.delta_at == 0.0) {
        (_, true) => RegionAxis::Lambda,
        (true, false) => RegionAxis::DeltaAt,
        _ => return Ok(None),
    };
    let value = if which == RegionAxis::Lambda {
        p.lambda
    } else {
        p.delta_at
    };
    let ropts = RegionOptions {
        g_lo: axis.lo.min(axis.hi),
        g_hi: axis.lo.max(axis.hi),
        steps: axis.steps.max(2),
        hopf: false,
    };
    Ok(region_boundaries(p, which, &[value], &ropts, opts)?.pop())
}

fn sweep(ctx: &Ctx) -> Result<bool> {
    let p = ctx.cfg.effective_params()?;
    let axis = ctx.cfg.sweep_axis(&p)?;
    let res = continuation_sweep(&p, axis.lo, axis.hi, axis.steps, &ctx.sweep_opts())?;
    let rows = io::sweep_rows(&res);
    let mut out = ctx.main_out()?;
    io::write_sweep_csv(&mut out, &rows)?;
    out.flush()?;
    for pt in &res.points {
        let stable = pt
            .branches
            .iter()
            .filter(|b| b.stability == crate::Stability::Stable)
            .count();
        ctx.say(format!(
            "g_tilde={} branches={} stable={}{}",
            io::fmt(pt.g_tilde),
            pt.branches.len(),
            stable,
            pt.error.as_deref().map(|e| format!(" error={e}")).unwrap_or_default()
        ));
    }
    if let Some(mut s) = ctx.companion("summary.json")? {
        let tp = (p.lambda == 0.0 && p.delta_at == 0.0)
            .then(|| transition_points(&p))
            .transpose()?;
        let summary = SweepSummary {
            params: &p,
            axis: &axis,
            transition_points: tp,
            regions: local_regions(&p, &axis, &ctx.sweep_opts())?,
            tracks: res.tracks.len(),
            events: &res.events,
            failed_points: res
                .points
                .iter()
                .filter_map(|pt| pt.error.clone().map(|e| (pt.index, e)))
                .collect(),
        };
        write_json(&mut s, &summary)?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct CycleSummary {
    found: bool,
    converged: bool,
    period: Option<f64>,
    w_min: Option<f64>,
    w_max: Option<f64>,
    diagnostics: Option<crate::stability::CycleDiagnostics>,
}

fn stability(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let p = c.effective_params()?;
    let axis = c.sweep_axis(&p)?;
    let res = continuation_sweep(&p, axis.lo, axis.hi, axis.steps, &ctx.sweep_opts())?;
    let mut rows = Vec::new();
    for pt in &res.points {
        let q = p.with_g_tilde(pt.g_tilde);
        for b in &pt.branches {
            let (verdict, spec) = classify_state(&b.state, &q);
            rows.push((pt.g_tilde, b.branch, spec, verdict));
        }
    }
    let mut out = ctx.main_out()?;
    io::write_stability_csv(&mut out, &rows)?;
    out.flush()?;
    let hopf = if axis.lo != axis.hi && axis.steps >= 3 {
        hopf_scan(&p, axis.lo, axis.hi, axis.steps, &ctx.sweep_opts())?
    } else {
        Vec::new()
    };
    for h in &hopf {
        ctx.say(format!(
            "hopf g_tilde={} im_pair={} branch={}",
            io::fmt(h.g_tilde),
            io::fmt(h.im_pair),
            h.branch.label()
        ));
    }
    if let Some(mut s) = ctx.companion("hopf.json")? {
        write_json(&mut s, &io::hopf_records(&hopf))?;
    }
    if let Some(t_measure) = c.f64("t_measure")? {
        let t_transient = c.f64_or("t_transient", 300.0)?;
        let x0 = initial_state(ctx, &p)?;
        let cycle = find_limit_cycle(&p, &x0, t_transient, t_measure)?;
        let summary = CycleSummary {
            found: cycle.is_some(),
            converged: cycle.as_ref().is_some_and(|l| l.converged),
            period: cycle.as_ref().map(|l| l.period),
            w_min: cycle.as_ref().map(|l| l.w_min),
            w_max: cycle.as_ref().map(|l| l.w_max),
            diagnostics: cycle.as_ref().map(|l| l.diagnostics),
        };
        ctx.say(format!(
            "cycle found={} converged={} period={:?}",
            summary.found, summary.converged, summary.period
        ));
        if let Some(mut s) = ctx.companion("cycle.json")? {
            write_json(&mut s, &summary)?;
        }
        if let (Some(l), Some(mut o)) = (cycle, ctx.companion("orbit.csv")?) {
            let traj = crate::dynamics::Trajectory {
                times: l.orbit_times,
                states: l.orbit,
                conservation_drift: l.diagnostics.spin_drift,
            };
            io::write_trajectory_csv(&mut o, &traj)?;
            o.flush()?;
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct FitSummary {
    g1_star: f64,
    above: std::result::Result<PowerLawFit, String>,
    below: std::result::Result<PowerLawFit, String>,
    amplitude_ratio: Option<f64>,
}

/// Couplings at relative distances log-spaced over the fit window, on one
/// side of `g1`.
pub fn fit_couplings(g1: f64, points: usize, above: bool) -> Vec<f64> {
    let (lo, hi) = (1e-4f64.ln(), 5e-2f64.ln());
    (0..points)
        .map(|k| {
            let rel = (lo + (hi - lo) * k as f64 / (points.max(2) - 1) as f64).exp();
            if above {
                g1 * (1.0 + rel)
            } else {
                g1 * (1.0 - rel)
            }
        })
        .collect()
}

fn asymptotics(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let p = c.effective_params()?;
    let g1 = g1_star(p.eta_r, p.n_spins);
    let points = c.usize_or("fit_points", 24)?;
    let side = c.str("side").unwrap_or("both");
    if !["both", "above", "below"].contains(&side) {
        return Err(Error::config(
            crate::config::CLI_LINE,
            "side",
            "expected both, above or below",
        ));
    }
    let fit_side = |above: bool| -> Result<(Vec<ScalingRow>, std::result::Result<PowerLawFit, String>)> {
        let rows = scaling_table(&p, &fit_couplings(g1, points, above))?;
        let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.g_tilde, r.w_exact)).collect();
        Ok((rows, fit_critical_exponent(&samples, g1).map_err(|e| e.to_string())))
    };
    let (mut rows, mut above, mut below) = (Vec::new(), Err("not requested".into()), Err("not requested".into()));
    if side != "below" {
        let (r, f) = fit_side(true)?;
        rows.extend(r);
        above = f;
    }
    if side != "above" {
        let (r, f) = fit_side(false)?;
        rows.extend(r);
        below = f;
    }
    if c.contains("g_lo") {
        let axis = c.sweep_axis(&p)?;
        rows = scaling_table(&p, &crate::steady::sweep_grid(axis.lo, axis.hi, axis.steps))?;
    }
    rows.sort_by(|a, b| a.g_tilde.total_cmp(&b.g_tilde));
    let mut out = ctx.main_out()?;
    io::write_scaling_csv(&mut out, &rows)?;
    out.flush()?;
    let ratio = match (&above, &below) {
        (Ok(a), Ok(b)) => Some(a.amplitude / b.amplitude),
        _ => None,
    };
    let summary = FitSummary {
        g1_star: g1,
        above,
        below,
        amplitude_ratio: ratio,
    };
    ctx.say(format!(
        "exponent above={:?} below={:?} ratio={:?}",
        summary.above.as_ref().map(|f| f.exponent),
        summary.below.as_ref().map(|f| f.exponent),
        ratio
    ));
    if let Some(mut s) = ctx.companion("fit.json")? {
        write_json(&mut s, &summary)?;
    }
    Ok(true)
}

fn cluster(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let draws = c.usize_or("draws", 1)?;
    let seeds = c.usize_or("cluster_seeds", 64)?;
    let mut out = ctx.main_out()?;
    if draws <= 1 {
        let p = c.params_2d()?;
        let report = cluster_2d(&p, seeds, ctx.seed)?;
        ctx.say(format!(
            "roots={} failed={}/{}",
            report.roots.len(),
            report.seeds_failed,
            report.seeds_tried
        ));
        write_json(&mut out, &report)?;
    } else {
        let n_rows = c.usize_or("n_rows", 2)?;
        let n_cols = c.usize_or("n_cols", 2)?;
        let survey = cluster_survey(n_rows, n_cols, draws, seeds, ctx.seed, ctx.jobs)?;
        ctx.say(format!(
            "draws={} roots={} max_w_asymmetry={:e} max_s_asymmetry={:e}",
            survey.draws, survey.roots, survey.max_w_asymmetry, survey.max_s_asymmetry
        ));
        write_json(&mut out, &survey)?;
    }
    Ok(true)
}

fn homog(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let p = c.params_2d()?;
    let which = match c.str("critical_param").unwrap_or("g_tilde_a") {
        "g_tilde_a" => CriticalParam::GTildeA,
        "g_tilde_b" => CriticalParam::GTildeB,
        other => {
            return Err(Error::config(
                crate::config::CLI_LINE,
                "critical_param",
                format!("expected g_tilde_a or g_tilde_b, got {other}"),
            ))
        }
    };
    let h = homogeneous_2d(&p, which)?;
    ctx.say(format!("fixed_points={} g1_star={:?}", h.fixed_points.len(), h.g1_star));
    write_json(&mut ctx.main_out()?, &h)?;
    Ok(true)
}

fn regions(ctx: &Ctx) -> Result<bool> {
    let c = &ctx.cfg;
    let p = c.effective_params()?;
    let (axis, values) = match (c.f64_list("lambda_grid")?, c.f64_list("delta_at_grid")?) {
        (Some(v), None) => (RegionAxis::Lambda, v),
        (None, Some(v)) => (RegionAxis::DeltaAt, v),
        _ => {
            return Err(Error::config(
                crate::config::CLI_LINE,
                "lambda_grid",
                "regions needs exactly one of lambda_grid or delta_at_grid",
            ))
        }
    };
    let scale = c.g_scale(&p)?;
    let d = RegionOptions::default();
    let opts = RegionOptions {
        g_lo: c.f64_or("g_lo", d.g_lo / scale)? * scale,
        g_hi: c.f64_or("g_hi", d.g_hi / scale)? * scale,
        steps: c.usize_or("region_steps", d.steps)?,
        hopf: c.bool_or("hopf", false)?,
    };
    let reports = region_boundaries(&p, axis, &values, &opts, &ctx.sweep_opts())?;
    for r in &reports {
        ctx.say(format!(
            "{}={} g2_star={:?} width={:?} region_r={:?} hopf={:?}",
            axis.name(),
            r.axis_value,
            r.g2_star,
            r.region_ii_width,
            r.region_r_interval,
            r.hopf_points
        ));
    }
    write_json(&mut ctx.main_out()?, &reports)?;
    Ok(true)
}

#[derive(Serialize)]
struct ValidationReport {
    kind: &'static str,
    rows: usize,
    failures: usize,
    max_residual: f64,
    max_spin_error: f64,
    first_failure_line: Option<usize>,
}

/// Round-trip check of a written sweep or trajectory file against the
/// configured parameters. Fails (exit 3) when any row does not re-check.
fn validate(ctx: &Ctx, file: &Path) -> Result<bool> {
    let p = ctx.cfg.effective_params()?;
    let header = {
        let text = std::fs::read_to_string(file)?;
        text.lines().next().unwrap_or_default().trim().to_string()
    };
    let reader = || -> Result<BufReader<File>> { Ok(BufReader::new(File::open(file)?)) };
    let report = if header == io::SWEEP_HEADER {
        let rows = io::read_sweep_csv(reader()?)?;
        let checks = io::check_sweep_rows(&rows, &p, 1e-8);
        let bad: Vec<_> = checks.iter().filter(|c| !c.ok).collect();
        ValidationReport {
            kind: "sweep",
            rows: rows.len(),
            failures: bad.len(),
            max_residual: checks.iter().map(|c| c.residual).fold(0.0, f64::max),
            max_spin_error: checks.iter().map(|c| c.sum_rule_error).fold(0.0, f64::max),
            first_failure_line: bad.first().map(|c| c.line),
        }
    } else if header == io::TRAJECTORY_HEADER {
        let (times, states) = io::read_trajectory_csv(reader()?)?;
        let n2 = p.n_spins * p.n_spins;
        let s0 = states.first().map(crate::dynamics::spin_norm).unwrap_or(n2);
        let mut failures = 0;
        let mut first = None;
        let mut max_spin = 0.0f64;
        for (i, (t, s)) in times.iter().zip(&states).enumerate() {
            let drift = if p.gamma == 0.0 {
                (crate::dynamics::spin_norm(s) - s0).abs() / n2
            } else {
                0.0
            };
            max_spin = max_spin.max(drift);
            let ordered = i == 0 || *t > times[i - 1];
            if !ordered || !s.is_finite() || drift > 1e-8 {
                failures += 1;
                first.get_or_insert(i + 2);
            }
        }
        ValidationReport {
            kind: "trajectory",
            rows: states.len(),
            failures,
            max_residual: 0.0,
            max_spin_error: max_spin,
            first_failure_line: first,
        }
    } else {
        return Err(Error::config(
            1,
            "header",
            format!("unrecognized file header: {header}"),
        ));
    };
    let ok = report.failures == 0;
    write_json(&mut ctx.main_out()?, &report)?;
    Ok(ok)
}
