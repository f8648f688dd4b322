//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Model parameters are given
//! either physically (`g`, `omega_rabi`, `delta_e`, ...) and converted by
//! adiabatic elimination, or directly through the effective keys `delta_at`,
//! `delta_ph`, `lambda`, `g_tilde`, which take precedence. Frequencies are
//! dimensionless in the unit named by `unit`; nothing is rescaled.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_effective_params, EffectiveParams, Params2D, PhysicalParams};

/// Line number used for values supplied on the command line.
pub const CLI_LINE: usize = 0;

const PHYSICAL_KEYS: &[&str] = &["g", "omega_rabi", "delta_e", "delta_s", "delta_cavity", "omega_aux"];
const EFFECTIVE_KEYS: &[&str] = &["delta_at", "delta_ph", "lambda", "g_tilde"];
const SHARED_KEYS: &[&str] = &["kappa", "gamma", "eta_r", "eta_i", "n_spins"];
const RUN_KEYS: &[&str] = &[
    "mode",
    "unit",
    "output",
    "seed",
    "g_lo",
    "g_hi",
    "steps",
    "g_units",
    "t_end",
    "rel_tol",
    "abs_tol",
    "n_samples",
    "alpha_r0",
    "alpha_i0",
    "s_x0",
    "s_y0",
    "w0",
    "random_start",
    "t_transient",
    "t_measure",
    "lambda_grid",
    "delta_at_grid",
    "region_steps",
    "g_tilde_a",
    "g_tilde_b",
    "delta_ph_a",
    "delta_ph_b",
    "n_rows",
    "n_cols",
    "cluster_seeds",
    "draws",
    "critical_param",
    "side",
    "fit_points",
    "bloch",
    "hopf",
];

fn is_known(key: &str) -> bool {
    [PHYSICAL_KEYS, EFFECTIVE_KEYS, SHARED_KEYS, RUN_KEYS]
        .iter()
        .any(|set| set.contains(&key))
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    DeriveParams,
    Evolve,
    SteadyState,
    Sweep,
    Stability,
    Asymptotics,
    Cluster2D,
    Homogeneous2D,
    Regions,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "derive-params" | "derive_params" => Mode::DeriveParams,
            "evolve" => Mode::Evolve,
            "steady" => Mode::SteadyState,
            "sweep" => Mode::Sweep,
            "stability" => Mode::Stability,
            "asymptotics" => Mode::Asymptotics,
            "cluster2d" => Mode::Cluster2D,
            "homog2d" => Mode::Homogeneous2D,
            "regions" => Mode::Regions,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::DeriveParams => "derive-params",
            Mode::Evolve => "evolve",
            Mode::SteadyState => "steady",
            Mode::Sweep => "sweep",
            Mode::Stability => "stability",
            Mode::Asymptotics => "asymptotics",
            Mode::Cluster2D => "cluster2d",
            Mode::Homogeneous2D => "homog2d",
            Mode::Regions => "regions",
        }
    }
}

/// Parsed assignments, validated against the known key set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::config(line, content, "expected `key = value`"));
            };
            cfg.insert(line, k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn insert(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        if key.is_empty() {
            return Err(Error::config(line, key, "empty key"));
        }
        if !is_known(key) {
            return Err(Error::config(line, key, "unknown key"));
        }
        if value.is_empty() {
            return Err(Error::config(line, key, "missing value"));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
        Ok(())
    }

    /// Applies a `key=value` override given on the command line.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(Error::config(CLI_LINE, assignment, "expected `key=value`"));
        };
        self.insert(CLI_LINE, k.trim(), v.trim())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.line).unwrap_or(CLI_LINE)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(Error::config(e.line, key, format!("not a finite number: {}", e.value))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        let Some(e) = self.entries.get(key) else {
            return Ok(default);
        };
        e.value
            .parse::<usize>()
            .map_err(|_| Error::config(e.line, key, format!("not a non-negative integer: {}", e.value)))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        let Some(e) = self.entries.get(key) else {
            return Ok(default);
        };
        e.value
            .parse::<u64>()
            .map_err(|_| Error::config(e.line, key, format!("not a non-negative integer: {}", e.value)))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        let Some(e) = self.entries.get(key) else {
            return Ok(default);
        };
        match e.value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(Error::config(e.line, key, format!("not a boolean: {v}"))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::config(e.line, key, format!("bad list element: {}", s.trim())))
            })
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    pub fn mode(&self) -> Result<Option<Mode>> {
        let Some(e) = self.entries.get("mode") else {
            return Ok(None);
        };
        Mode::parse(&e.value)
            .map(Some)
            .ok_or_else(|| Error::config(e.line, "mode", format!("unknown mode: {}", e.value)))
    }

    pub fn physical_params(&self) -> Result<Option<PhysicalParams>> {
        if !PHYSICAL_KEYS.iter().any(|k| self.contains(k)) {
            return Ok(None);
        }
        let Some(delta_e) = self.f64("delta_e")? else {
            let key = PHYSICAL_KEYS
                .iter()
                .find(|k| self.contains(k))
                .copied()
                .unwrap_or("delta_e");
            return Err(Error::config(
                self.line(key),
                "delta_e",
                "physical parameters need delta_e",
            ));
        };
        Ok(Some(PhysicalParams {
            g: self.f64_or("g", 0.0)?,
            omega_rabi: self.f64_or("omega_rabi", 0.0)?,
            delta_e,
            delta_s: self.f64_or("delta_s", 0.0)?,
            delta_cavity: self.f64_or("delta_cavity", 0.0)?,
            omega_aux: self.f64_or("omega_aux", 0.0)?,
        }))
    }

    /// Effective single-cavity parameters: derived from the physical keys when
    /// present, then overridden by any effective key.
    pub fn effective_params(&self) -> Result<EffectiveParams> {
        let kappa = self.f64_or("kappa", 0.0)?;
        let gamma = self.f64_or("gamma", 0.0)?;
        let eta = Complex64::new(self.f64_or("eta_r", 0.0)?, self.f64_or("eta_i", 0.0)?);
        let n = self.f64_or("n_spins", 1.0)?;
        let mut p = match self.physical_params()? {
            Some(phys) => derive_effective_params(&phys, kappa, gamma, eta, n)
                .map_err(|e| Error::config(self.line("delta_e"), "delta_e", e.to_string()))?,
            None => EffectiveParams {
                kappa,
                gamma,
                eta_r: eta.re,
                eta_i: eta.im,
                n_spins: n,
                ..Default::default()
            },
        };
        if let Some(v) = self.f64("delta_at")? {
            p.delta_at = v;
        }
        if let Some(v) = self.f64("delta_ph")? {
            p.delta_ph = v;
        }
        if let Some(v) = self.f64("lambda")? {
            p.lambda = v;
        }
        if let Some(v) = self.f64("g_tilde")? {
            p.g_tilde = v;
        }
        p.validate().map_err(|e| {
            let key = ["kappa", "gamma", "n_spins"]
                .into_iter()
                .find(|k| self.contains(k))
                .unwrap_or("kappa");
            Error::config(self.line(key), key, e.to_string())
        })?;
        Ok(p)
    }

    /// Array parameters. Row/column couplings and detunings default to the
    /// single-cavity `g_tilde` and `delta_ph`.
    pub fn params_2d(&self) -> Result<Params2D> {
        let p = self.effective_params()?;
        let q = Params2D {
            g_tilde_a: self.f64_or("g_tilde_a", p.g_tilde)?,
            g_tilde_b: self.f64_or("g_tilde_b", p.g_tilde)?,
            delta_ph_a: self.f64_or("delta_ph_a", p.delta_ph)?,
            delta_ph_b: self.f64_or("delta_ph_b", p.delta_ph)?,
            delta_at: p.delta_at,
            lambda: p.lambda,
            kappa: p.kappa,
            gamma: p.gamma,
            eta: p.eta(),
            n_rows: self.usize_or("n_rows", 1)?,
            n_cols: self.usize_or("n_cols", 1)?,
        };
        q.validate()
            .map_err(|e| Error::config(self.line("n_rows"), "n_rows", e.to_string()))?;
        Ok(q)
    }

    /// Multiplier turning configured couplings into absolute `g_tilde`:
    /// `g_units = reduced` means values are given as `g N / (2 |eta|)`.
    pub fn g_scale(&self, p: &EffectiveParams) -> Result<f64> {
        match self.str("g_units").unwrap_or("absolute") {
            "absolute" => Ok(1.0),
            "reduced" => {
                if p.eta_abs() == 0.0 {
                    return Err(Error::config(
                        self.line("g_units"),
                        "g_units",
                        "reduced units need a nonzero pump",
                    ));
                }
                Ok(2.0 * p.eta_abs() / p.n_spins)
            }
            other => Err(Error::config(
                self.line("g_units"),
                "g_units",
                format!("expected absolute or reduced, got {other}"),
            )),
        }
    }

    pub fn sweep_axis(&self, p: &EffectiveParams) -> Result<SweepAxis> {
        let scale = self.g_scale(p)?;
        let lo = self
            .f64("g_lo")?
            .ok_or_else(|| Error::config(CLI_LINE, "g_lo", "sweep needs g_lo"))?;
        let hi = self.f64_or("g_hi", lo)?;
        let steps = self.usize_or("steps", 101)?;
        if steps < 1 {
            return Err(Error::config(self.line("steps"), "steps", "steps must be >= 1"));
        }
        if steps < 2 && lo != hi {
            return Err(Error::config(
                self.line("steps"),
                "steps",
                "a nonzero range needs steps >= 2",
            ));
        }
        Ok(SweepAxis {
            name: "g_tilde".into(),
            lo: lo * scale,
            hi: hi * scale,
            steps,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut c = ConfigFile::parse("# fig 3\nkappa = 0.5 # loss\n\neta_r=1\ndelta_ph = 0.5\n").unwrap();
        c.set("g_tilde=1.5").unwrap();
        let p = c.effective_params().unwrap();
        assert_eq!((p.kappa, p.eta_r, p.delta_ph, p.g_tilde), (0.5, 1.0, 0.5, 1.5));
        assert_eq!(p.n_spins, 1.0);
    }

    #[test]
    fn derives_then_overrides() {
        let c = ConfigFile::parse(
            "g = 1\nomega_rabi = 1\ndelta_e = -4\ndelta_s = -0.25\ndelta_cavity = -0.125\nlambda = 2\n",
        )
        .unwrap();
        let p = c.effective_params().unwrap();
        assert_eq!(p.delta_at, 0.0);
        assert_eq!(p.delta_ph, 0.0);
        assert_eq!(p.g_tilde, 0.25);
        assert_eq!(p.lambda, 2.0);
    }

    #[test]
    fn errors_carry_line_and_key() {
        match ConfigFile::parse("kappa = 1\nbogus = 2\n") {
            Err(Error::Config { line, key, .. }) => assert_eq!((line, key.as_str()), (2, "bogus")),
            other => panic!("{other:?}"),
        }
        match ConfigFile::parse("kappa 1\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let c = ConfigFile::parse("\nkappa = abc\n").unwrap();
        match c.effective_params() {
            Err(Error::Config { line, key, .. }) => assert_eq!((line, key.as_str()), (2, "kappa")),
            other => panic!("{other:?}"),
        }
        let c = ConfigFile::parse("g = 1\ndelta_e = 0\n").unwrap();
        assert!(matches!(c.effective_params(), Err(Error::Config { line: 2, .. })));
        let c = ConfigFile::parse("kappa = -1\n").unwrap();
        assert!(matches!(c.effective_params(), Err(Error::Config { .. })));
    }

    #[test]
    fn reduced_units_and_lists() {
        let c = ConfigFile::parse(
            "eta_r = 2\nn_spins = 4\ng_units = reduced\ng_lo = 0\ng_hi = 2\nsteps = 5\nlambda_grid = 0.1, 1,10\n",
        )
        .unwrap();
        let p = c.effective_params().unwrap();
        let ax = c.sweep_axis(&p).unwrap();
        assert_eq!((ax.lo, ax.hi, ax.steps), (0.0, 2.0, 5));
        assert_eq!(c.f64_list("lambda_grid").unwrap().unwrap(), vec![0.1, 1.0, 10.0]);
        assert_eq!(
            ConfigFile::parse("mode = sweep").unwrap().mode().unwrap(),
            Some(Mode::Sweep)
        );
        assert!(ConfigFile::parse("mode = dance").unwrap().mode().is_err());
    }
}
