//! Position-space measurement operators of the standing-wave grating and the
//! plane-wave diffraction amplitudes they produce.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::params::GratingParameters;
use crate::specfun::{bessel_cutoff, bessel_i_sequence};

/// Default Poisson tail tolerance for truncating sums over absorption counts.
pub const LADDER_TAIL_TOL: f64 = 1e-10;

/// Dropped diffraction amplitudes must stay below this modulus.
pub const AMPLITUDE_TOL: f64 = 1e-10;

/// Grating parameters together with a fixed number of absorbed photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementProfile {
    pub grating: GratingParameters,
    pub ell: u32,
}

impl MeasurementProfile {
    pub fn new(grating: GratingParameters, ell: u32) -> Self {
        Self { grating, ell }
    }

    pub fn value(&self, x: f64) -> C64 {
        m_ell(x, self)
    }
}

/// `ln(ℓ!)` by direct summation; ℓ stays small here.
pub fn ln_factorial(ell: u32) -> f64 {
    (2..=ell).map(|k| (k as f64).ln()).sum()
}

/// Measurement operator `M_ℓ(x)` at position `x` (units of the period).
pub fn m_ell(x: f64, profile: &MeasurementProfile) -> C64 {
    let g = &profile.grating;
    let c = (PI * x).cos();
    let c2 = c * c;
    let unitary = C64::new(-0.5 * g.n0 * c2, g.phi0 * c2).exp();
    if profile.ell == 0 {
        return unitary;
    }
    let ell = profile.ell as i32;
    if g.n0 == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let amp = (0.5 * (ell as f64 * g.n0.ln() - ln_factorial(profile.ell))).exp();
    unitary * amp * c.powi(ell)
}

/// Poisson probability of absorbing `ell` photons at position `x`.
pub fn absorption_probability(x: f64, ell: u32, grating: &GratingParameters) -> f64 {
    let c = (PI * x).cos();
    poisson(grating.n0 * c * c, ell)
}

/// `e^{-n} n^ℓ / ℓ!`.
pub fn poisson(n: f64, ell: u32) -> f64 {
    if n == 0.0 {
        return if ell == 0 { 1.0 } else { 0.0 };
    }
    (-n + ell as f64 * n.ln() - ln_factorial(ell)).exp()
}

/// Smallest `L` with `Σ_{ℓ>L} poisson(n0, ℓ) < tol`.
pub fn poisson_cutoff(n0: f64, tol: f64) -> usize {
    if n0 <= 0.0 {
        return 0;
    }
    let top = (n0 + 20.0 * n0.sqrt() + 60.0).ceil() as usize;
    let terms: Vec<f64> = (0..=top as u32).map(|l| poisson(n0, l)).collect();
    let mut tail = 0.0;
    let mut suffix = vec![0.0; top + 2];
    for l in (0..=top).rev() {
        tail += terms[l];
        suffix[l] = tail;
    }
    (0..=top).find(|&l| suffix[l + 1] < tol).unwrap_or(top)
}

/// Ladder truncation used throughout: Poisson tail below [`LADDER_TAIL_TOL`].
pub fn ladder_cutoff(grating: &GratingParameters) -> usize {
    poisson_cutoff(grating.n0, LADDER_TAIL_TOL)
}

/// Momentum-space amplitudes keyed by the transfer in units of `ħ k_L`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffractionAmplitudes {
    pub amplitudes: BTreeMap<i64, C64>,
}

impl DiffractionAmplitudes {
    pub fn get(&self, offset: i64) -> C64 {
        self.amplitudes.get(&offset).copied().unwrap_or_default()
    }

    pub fn total_probability(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Diffraction amplitudes of `M_ℓ` acting on a plane wave, Bessel orders `|ν| <= cutoff`.
pub fn plane_wave_diffraction(
    profile: &MeasurementProfile,
    cutoff: usize,
) -> Result<DiffractionAmplitudes> {
    let g = &profile.grating;
    let a = C64::new(-0.25 * g.n0, 0.5 * g.phi0);
    let seq = bessel_i_sequence(cutoff + 1, a)?;
    let ell = profile.ell;
    let prefactor = if ell == 0 {
        1.0
    } else if g.n0 == 0.0 {
        0.0
    } else {
        (0.5 * (ell as f64 * g.n0.ln() - ln_factorial(ell)) - ell as f64 * 2f64.ln()).exp()
    };
    let ea = a.exp();
    let dropped = (ea * seq[cutoff + 1]).norm() * prefactor * 2f64.powi(ell as i32);
    let monotone_tail = (cutoff + 1) as f64 > a.norm();
    if !(dropped < AMPLITUDE_TOL && monotone_tail) {
        return Err(Error::CutoffTooSmall { cutoff, dropped });
    }
    let mut out = DiffractionAmplitudes::default();
    if prefactor == 0.0 {
        return Ok(out);
    }
    for nu in -(cutoff as i64)..=(cutoff as i64) {
        let bessel = ea * seq[nu.unsigned_abs() as usize] * prefactor;
        for n in 0..=ell {
            let offset = 2 * nu + ell as i64 - 2 * n as i64;
            *out.amplitudes.entry(offset).or_default() += bessel * binomial(ell, n);
        }
    }
    Ok(out)
}

/// Bessel cutoff guaranteeing [`AMPLITUDE_TOL`] for a given grating.
pub fn default_diffraction_cutoff(grating: &GratingParameters) -> usize {
    let a = (0.25 * grating.n0).hypot(0.5 * grating.phi0);
    bessel_cutoff(a)
}
