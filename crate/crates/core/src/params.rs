//! Physical parameter set and unit conventions.
//!
//! All frequencies and rates are in μeV with ħ = 1, so times are in ħ/μeV.
//! The same types work unchanged in "g-units" (every rate divided by g, time
//! in ħ/g) by simply passing g = 1.
//!
//! Internally every computation runs in a frame where the cavity frequency is
//! zero. The original `omega_d` and `omega_c` are stored untouched, and
//! [`SystemParams::to_reporting`] shifts internal frequencies back.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// The five rates/frequencies of the dot–cavity model plus the cavity
/// frequency that fixes the reporting frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    omega_d: f64,
    omega_c: f64,
    g: f64,
    kappa: f64,
    gamma: f64,
    gamma_p: f64,
}

/// Complex frequencies ω̃_d = ω_d − i(γ/2 + γ_p) and ω̃_c = ω_c − iκ/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequencies {
    pub omega_d_tilde: Complex64,
    pub omega_c_tilde: Complex64,
}

impl SystemParams {
    pub fn new(
        omega_d: f64,
        omega_c: f64,
        g: f64,
        kappa: f64,
        gamma: f64,
        gamma_p: f64,
    ) -> Result<Self> {
        for (name, value) in [
            ("omega_d", omega_d),
            ("omega_c", omega_c),
            ("g", g),
            ("kappa", kappa),
            ("gamma", gamma),
            ("gamma_p", gamma_p),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
        }
        for (name, value) in [("g", g), ("kappa", kappa), ("gamma", gamma), ("gamma_p", gamma_p)] {
            if value < 0.0 {
                return Err(Error::NegativeRate { name, value });
            }
        }
        Ok(Self { omega_d, omega_c, g, kappa, gamma, gamma_p })
    }

    /// Cavity at zero frequency, dot at `detuning`.
    pub fn detuned(detuning: f64, g: f64, kappa: f64, gamma: f64, gamma_p: f64) -> Result<Self> {
        Self::new(detuning, 0.0, g, kappa, gamma, gamma_p)
    }

    pub fn resonant(g: f64, kappa: f64, gamma: f64, gamma_p: f64) -> Result<Self> {
        Self::new(0.0, 0.0, g, kappa, gamma, gamma_p)
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    /// ω_d − ω_c.
    pub fn detuning(&self) -> f64 {
        self.omega_d - self.omega_c
    }

    /// Zero coupling. Only the dedicated bypass paths accept this.
    pub fn is_decoupled(&self) -> bool {
        self.g == 0.0
    }

    /// True when the excitation can eventually leave the dot–cavity system.
    pub fn has_escape(&self) -> bool {
        self.kappa > 0.0 || self.gamma > 0.0
    }

    pub fn require_escape(&self) -> Result<()> {
        if self.has_escape() {
            Ok(())
        } else {
            Err(Error::NoEscapeChannel)
        }
    }

    /// Largest of the rates and the detuning magnitude; used to build
    /// dimensionless tolerances.
    pub fn scale(&self) -> f64 {
        [self.g, self.kappa, self.gamma, self.gamma_p, self.detuning().abs()]
            .into_iter()
            .fold(0.0_f64, f64::max)
    }

    pub fn with_gamma_p(&self, gamma_p: f64) -> Result<Self> {
        Self::new(self.omega_d, self.omega_c, self.g, self.kappa, self.gamma, gamma_p)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.omega_d, self.omega_c, self.g, kappa, self.gamma, self.gamma_p)
    }

    /// Multiplies every frequency and rate by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.omega_d * s,
            self.omega_c * s,
            self.g * s,
            self.kappa * s,
            self.gamma * s,
            self.gamma_p * s,
        )
    }

    /// Complex frequencies in the reporting frame.
    pub fn complex_frequencies(&self) -> ComplexFrequencies {
        ComplexFrequencies {
            omega_d_tilde: Complex64::new(self.omega_d, -(0.5 * self.gamma + self.gamma_p)),
            omega_c_tilde: Complex64::new(self.omega_c, -0.5 * self.kappa),
        }
    }

    /// Complex frequencies in the internal frame (ω_c shifted to zero).
    pub fn internal_frequencies(&self) -> ComplexFrequencies {
        ComplexFrequencies {
            omega_d_tilde: Complex64::new(self.detuning(), -(0.5 * self.gamma + self.gamma_p)),
            omega_c_tilde: Complex64::new(0.0, -0.5 * self.kappa),
        }
    }

    /// Internal-frame frequency to reporting frame.
    pub fn to_reporting(&self, k_internal: f64) -> f64 {
        k_internal + self.omega_c
    }

    /// Reporting-frame frequency to internal frame.
    pub fn to_internal(&self, k: f64) -> f64 {
        k - self.omega_c
    }
}
