//! Physical inputs and the dimensionless grating parameters derived from them.

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant (J s).
pub const H: f64 = 6.626_070_15e-34;
/// Speed of light (m/s).
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Converts a polarizability volume `α/(4πε₀)` in m³ to SI units (C m²/V).
pub fn polarizability_from_volume(volume_m3: f64) -> f64 {
    4.0 * std::f64::consts::PI * EPS0 * volume_m3
}

/// Converts a polarizability volume in Å³ to SI units (C m²/V).
pub fn polarizability_from_angstrom3(volume_a3: f64) -> f64 {
    polarizability_from_volume(volume_a3 * 1e-30)
}

/// Laser and particle inputs, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSetup {
    /// Running-wave laser power (W).
    pub power: f64,
    /// Beam waist along the molecular beam's transverse vertical axis (m).
    pub waist_y: f64,
    /// Beam waist along the flight direction (m).
    pub waist_z: f64,
    /// Laser wavelength (m).
    pub wavelength: f64,
    /// Polarizability in SI units (C m²/V).
    pub polarizability: f64,
    /// Absorption cross-section (m²).
    pub cross_section: f64,
    /// Longitudinal velocity (m/s).
    pub velocity: f64,
    /// Particle mass (kg).
    pub mass: f64,
}

impl BeamSetup {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("waist_y", self.waist_y),
            ("waist_z", self.waist_z),
            ("wavelength", self.wavelength),
            ("polarizability", self.polarizability),
            ("velocity", self.velocity),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [("power", self.power), ("cross_section", self.cross_section)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Laser angular frequency `2πc/λ`.
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * C / self.wavelength
    }

    /// Grating period `λ/2`.
    pub fn period(&self) -> f64 {
        0.5 * self.wavelength
    }

    /// Ratio `n₀/φ₀ = 2 c ε₀ σ / (ω α)`, independent of power, waist and velocity.
    pub fn absorption_to_phase_ratio(&self) -> f64 {
        2.0 * C * EPS0 * self.cross_section / (self.omega() * self.polarizability)
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{name} is not finite")))
    }
}

/// Peak eikonal phase `φ₀ = 4 α P / (√(2π) ε₀ ħ c w_y v)`.
pub fn derive_phi0(setup: &BeamSetup) -> Result<f64> {
    setup.validate()?;
    let v = 4.0 / (2.0 * std::f64::consts::PI).sqrt() * setup.polarizability * setup.power
        / (EPS0 * HBAR * C * setup.waist_y * setup.velocity);
    finite("phi0", v)
}

/// Mean photon number at the antinode `n₀ = 8 σ P / (√(2π) ħ ω w_y v)`.
pub fn derive_n0(setup: &BeamSetup) -> Result<f64> {
    setup.validate()?;
    let v = 8.0 / (2.0 * std::f64::consts::PI).sqrt() * setup.cross_section * setup.power
        / (HBAR * setup.omega() * setup.waist_y * setup.velocity);
    finite("n0", v)
}

/// Dimensionless grating strengths plus excited-state ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingParameters {
    pub phi0: f64,
    pub n0: f64,
    pub eta_p: f64,
    pub eta_a: f64,
    /// Grating period (m); only used when converting back to physical units.
    pub period: f64,
}

impl GratingParameters {
    /// Ground-state-only parameters (η_p = η_a = 1) with unit period.
    pub fn new(phi0: f64, n0: f64) -> Result<Self> {
        Self {
            phi0,
            n0,
            eta_p: 1.0,
            eta_a: 1.0,
            period: 1.0,
        }
        .validated()
    }

    pub fn with_eta(mut self, eta_p: f64, eta_a: f64) -> Result<Self> {
        self.eta_p = eta_p;
        self.eta_a = eta_a;
        self.validated()
    }

    pub fn with_period(mut self, period: f64) -> Result<Self> {
        self.period = period;
        self.validated()
    }

    pub fn from_setup(setup: &BeamSetup) -> Result<Self> {
        Self::new(derive_phi0(setup)?, derive_n0(setup)?)?.with_period(setup.period())
    }

    pub fn validated(self) -> Result<Self> {
        if !self.phi0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "phi0 must be finite, got {}",
                self.phi0
            )));
        }
        if !(self.n0.is_finite() && self.n0 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "n0 must be >= 0, got {}",
                self.n0
            )));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidInput(format!(
                "period must be > 0, got {}",
                self.period
            )));
        }
        if !(self.eta_a.is_finite() && self.eta_a >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "eta_a must be >= 0, got {}",
                self.eta_a
            )));
        }
        if !(self.eta_p.is_finite() && self.eta_p >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "eta_p must be >= 0, got {}",
                self.eta_p
            )));
        }
        Ok(self)
    }

    /// Whether both excited-state ratios equal one.
    pub fn is_uniform(&self) -> bool {
        self.eta_p == 1.0 && self.eta_a == 1.0
    }
}

/// Length and time scales of a three-grating setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerScales {
    pub talbot_length: f64,
    pub de_broglie_wavelength: f64,
    pub separation: f64,
    pub talbot_parameter: f64,
    pub interaction_time: f64,
}

pub fn derive_scales(setup: &BeamSetup, separation: f64) -> Result<InterferometerScales> {
    setup.validate()?;
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grating separation must be positive, got {separation}"
        )));
    }
    let lambda_db = H / (setup.mass * setup.velocity);
    let d = setup.period();
    let talbot_length = d * d / lambda_db;
    Ok(InterferometerScales {
        talbot_length,
        de_broglie_wavelength: lambda_db,
        separation,
        talbot_parameter: separation / talbot_length,
        interaction_time: (std::f64::consts::PI / 2.0).sqrt() * setup.waist_z / setup.velocity,
    })
}
