//! Parameter types and the adiabatic elimination of the excited level.
//!
//! All frequencies are dimensionless. A run picks a reference rate (usually the
//! pump amplitude) and every value is expressed in units of it; nothing in the
//! crate rescales implicitly.
//!
//! The scalar offset term produced by the elimination commutes with every
//! mean-field variable and is not represented. The bare level frequencies
//! (transverse drive, excited and s-state) only ever enter through the detunings
//! `delta_e` and `delta_s`, so they are not stored either.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw three-level-atom frequencies in the frame rotating at `omega_aux`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Cavity coupling of the g-e transition.
    pub g: f64,
    /// Rabi frequency of the classical s-e drive.
    pub omega_rabi: f64,
    /// Excited-state detuning; must be nonzero.
    pub delta_e: f64,
    /// s-state detuning.
    pub delta_s: f64,
    /// Cavity detuning from the frame frequency.
    pub delta_cavity: f64,
    /// Frame frequency. Pinned to the pump frequency so the pumped Hamiltonian
    /// is time independent; kept for provenance only.
    pub omega_aux: f64,
}

/// Constants of the reduced nonlinear Jaynes-Cummings model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub delta_at: f64,
    pub delta_ph: f64,
    pub lambda: f64,
    pub g_tilde: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub eta_r: f64,
    pub eta_i: f64,
    /// Collective spin length. Real-valued: it acts as a classical spin length.
    pub n_spins: f64,
}

impl Default for EffectiveParams {
    fn default() -> Self {
        Self {
            delta_at: 0.0,
            delta_ph: 0.0,
            lambda: 0.0,
            g_tilde: 0.0,
            kappa: 0.0,
            gamma: 0.0,
            eta_r: 0.0,
            eta_i: 0.0,
            n_spins: 1.0,
        }
    }
}

impl EffectiveParams {
    pub fn eta(&self) -> Complex64 {
        Complex64::new(self.eta_r, self.eta_i)
    }

    /// `eta_r^2 + eta_i^2`.
    pub fn eta_sq(&self) -> f64 {
        self.eta_r * self.eta_r + self.eta_i * self.eta_i
    }

    pub fn eta_abs(&self) -> f64 {
        self.eta_r.hypot(self.eta_i)
    }

    pub fn with_g_tilde(mut self, g_tilde: f64) -> Self {
        self.g_tilde = g_tilde;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_delta_at(mut self, delta_at: f64) -> Self {
        self.delta_at = delta_at;
        self
    }

    pub fn is_finite(&self) -> bool {
        [
            self.delta_at,
            self.delta_ph,
            self.lambda,
            self.g_tilde,
            self.kappa,
            self.gamma,
            self.eta_r,
            self.eta_i,
            self.n_spins,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::Domain("non-finite parameter".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::Domain(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if self.gamma < 0.0 {
            return Err(Error::Domain(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.n_spins <= 0.0 {
            return Err(Error::Domain(format!("n_spins must be > 0, got {}", self.n_spins)));
        }
        Ok(())
    }
}

/// Parameters of the two-dimensional array: `n_rows` horizontal modes (`a`),
/// `n_cols` vertical modes (`b`), one spin at every crossing. Spins are
/// normalized per site (`w^2 + 4|s|^2 = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params2D {
    pub g_tilde_a: f64,
    pub g_tilde_b: f64,
    pub delta_ph_a: f64,
    pub delta_ph_b: f64,
    pub delta_at: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub eta: Complex64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl Params2D {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::Domain("n_rows and n_cols must be >= 1".into()));
        }
        if self.kappa < 0.0 || self.gamma < 0.0 {
            return Err(Error::Domain("decay rates must be >= 0".into()));
        }
        Ok(())
    }
}

/// Adiabatically eliminates the excited level:
///
/// ```text
/// delta_at = delta_s - omega^2 / delta_e
/// lambda   = -g^2 / (2 delta_e)
/// delta_ph = delta_cavity + lambda
/// g_tilde  = -g omega / delta_e
/// ```
pub fn derive_effective_params(
    phys: &PhysicalParams,
    kappa: f64,
    gamma: f64,
    eta: Complex64,
    n_spins: f64,
) -> Result<EffectiveParams> {
    if phys.delta_e == 0.0 {
        return Err(Error::Domain("adiabatic elimination singular: delta_e = 0".into()));
    }
    let lambda = -phys.g * phys.g / (2.0 * phys.delta_e);
    Ok(EffectiveParams {
        delta_at: phys.delta_s - phys.omega_rabi * phys.omega_rabi / phys.delta_e,
        delta_ph: phys.delta_cavity + lambda,
        lambda,
        g_tilde: -phys.g * phys.omega_rabi / phys.delta_e,
        kappa,
        gamma,
        eta_r: eta.re,
        eta_i: eta.im,
        n_spins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phys(g: f64, omega_rabi: f64, delta_e: f64, delta_s: f64, delta_cavity: f64) -> PhysicalParams {
        PhysicalParams {
            g,
            omega_rabi,
            delta_e,
            delta_s,
            delta_cavity,
            omega_aux: 0.0,
        }
    }

    fn derive(p: PhysicalParams) -> EffectiveParams {
        derive_effective_params(&p, 0.5, 0.0, Complex64::new(1.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn zero_cavity_coupling_removes_nonlinearity() {
        let e = derive(phys(0.0, 1.0, 10.0, 2.0, 1.0));
        assert_eq!(e.delta_at, 2.0 - 0.1);
        assert_eq!(e.delta_ph, 1.0);
        assert_eq!(e.lambda, 0.0);
        assert_eq!(e.g_tilde, 0.0);
    }

    #[test]
    fn zero_drive_gives_pure_dispersive_shift() {
        let e = derive(phys(1.0, 0.0, 2.0, 0.0, 0.0));
        assert_eq!(e.delta_at, 0.0);
        assert_eq!(e.delta_ph, -0.25);
        assert_eq!(e.lambda, -0.25);
        assert_eq!(e.g_tilde, 0.0);
    }

    #[test]
    fn resonant_choice_cancels_detunings() {
        // delta_at = -0.25 - 1/(-4) = 0, lambda = -1/(2*-4) = 1/8,
        // delta_ph = -1/8 + 1/8 = 0, g_tilde = -1/(-4) = 1/4
        let e = derive(phys(1.0, 1.0, -4.0, -0.25, -0.125));
        assert_eq!(e.delta_at, 0.0);
        assert_eq!(e.delta_ph, 0.0);
        assert_eq!(e.lambda, 0.125);
        assert_eq!(e.g_tilde, 0.25);
    }

    #[test]
    fn decay_pump_and_spin_number_pass_through() {
        let e =
            derive_effective_params(&phys(1.0, 2.0, 3.0, 0.0, 0.0), 0.7, 0.2, Complex64::new(1.5, -0.5), 4.0).unwrap();
        assert_eq!(
            (e.kappa, e.gamma, e.eta_r, e.eta_i, e.n_spins),
            (0.7, 0.2, 1.5, -0.5, 4.0)
        );
        assert_eq!(e.eta_sq(), 1.5 * 1.5 + 0.25);
    }

    #[test]
    fn singular_elimination_is_rejected() {
        let err = derive_effective_params(&phys(1.0, 1.0, 0.0, 0.0, 0.0), 0.5, 0.0, Complex64::new(1.0, 0.0), 1.0);
        assert!(matches!(err, Err(Error::Domain(m)) if m.contains("adiabatic elimination singular")));
    }

    #[test]
    fn validation_rejects_negative_rates() {
        let p = EffectiveParams {
            kappa: -0.1,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = EffectiveParams {
            n_spins: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn photon_shift_equals_nonlinearity(
            g in -5.0..5.0f64, om in -5.0..5.0f64, de in 0.1..20.0f64,
            sign in prop::bool::ANY, ds in -3.0..3.0f64, dc in -3.0..3.0f64,
        ) {
            let de = if sign { de } else { -de };
            let e = derive(phys(g, om, de, ds, dc));
            let scale = dc.abs().max(e.lambda.abs()).max(f64::MIN_POSITIVE);
            prop_assert!((e.delta_ph - dc - e.lambda).abs() <= 4.0 * f64::EPSILON * scale);
            if g != 0.0 {
                prop_assert_eq!(e.lambda.signum(), -de.signum());
            }
            if g * om != 0.0 {
                prop_assert_eq!(e.g_tilde.signum(), -(g * om * de).signum());
            }
            let again = derive(phys(g, om, de, ds, dc));
            prop_assert_eq!(e.lambda.to_bits(), again.lambda.to_bits());
            prop_assert_eq!(e.delta_at.to_bits(), again.delta_at.to_bits());
            prop_assert_eq!(e.g_tilde.to_bits(), again.g_tilde.to_bits());
        }
    }
}
