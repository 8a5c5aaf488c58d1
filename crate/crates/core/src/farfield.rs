//! Far-field diffraction of a point source collimated by a slit, with the
//! light grating directly behind the slit.
//!
//! Screen positions are in units of the diffraction-peak separation `Δx`, the
//! slit width in units of the grating period `d`, and `ε = d/Δx`. All
//! densities share the prefactor `ε/(π D/d)`, under which the Fourier-series
//! form, the Kirchhoff integral and the Wigner-function route coincide.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grating::{ladder_cutoff, m_ell, MeasurementProfile};
use crate::params::GratingParameters;
use crate::quad::GaussLegendre;
use crate::specfun::sine_integral;
use crate::talbot::{adaptive_row, b_row, Absorption, Variant};

/// Nodes per Gauss-Legendre panel.
pub const PANEL_NODES: usize = 16;
/// Default panel width in q (units of d), i.e. 128 nodes per unit q.
pub const PANEL_WIDTH: f64 = 0.125;
/// Minimum aperture samples for the Kirchhoff integral.
pub const KIRCHHOFF_MIN_SAMPLES: usize = 4096;
/// Largest `d/Δx` for which the Fraunhofer form is considered valid.
pub const FRAUNHOFER_LIMIT: f64 = 1e-2;
const FOURIER_JMAX_START: usize = 16;
const FOURIER_JMAX_LIMIT: usize = 1024;
const IMAG_REL_TOL: f64 = 1e-8;

/// Shape of the detector resolution kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKernel {
    Gaussian,
    /// Boxcar of full width `√12 σ` (same variance as the Gaussian).
    Boxcar,
}

/// Far-field geometry and grating.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldConfig {
    /// Slit width over grating period, `D/d`.
    pub collimator_ratio: f64,
    /// `d/Δx`.
    pub fraunhofer_ratio: f64,
    pub grating: GratingParameters,
    /// Screen positions in units of `Δx`.
    pub screen: Vec<f64>,
    /// Detector resolution in units of `Δx`.
    pub detector_sigma: f64,
    pub detector: DetectorKernel,
    pub variant: Variant,
    /// Panel width of the composite q quadrature.
    pub panel_width: f64,
}

impl FarFieldConfig {
    pub fn new(
        collimator_ratio: f64,
        fraunhofer_ratio: f64,
        grating: GratingParameters,
        screen: Vec<f64>,
    ) -> Result<Self> {
        Self {
            collimator_ratio,
            fraunhofer_ratio,
            grating,
            screen,
            detector_sigma: 0.1,
            detector: DetectorKernel::Gaussian,
            variant: Variant::Quantum,
            panel_width: PANEL_WIDTH,
        }
        .validated()
    }

    /// Separation given through the Talbot parameter, `Δx = d L/L_T`.
    pub fn from_talbot_parameter(
        collimator_ratio: f64,
        talbot_parameter: f64,
        grating: GratingParameters,
        screen: Vec<f64>,
    ) -> Result<Self> {
        if !(talbot_parameter > 0.0) {
            return Err(Error::InvalidInput(format!(
                "talbot parameter must be positive, got {talbot_parameter}"
            )));
        }
        Self::new(collimator_ratio, 1.0 / talbot_parameter, grating, screen)
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.collimator_ratio.is_finite() && self.collimator_ratio > 0.0) {
            return Err(Error::InvalidInput(format!(
                "collimator ratio D/d must be positive, got {}",
                self.collimator_ratio
            )));
        }
        if !(self.fraunhofer_ratio.is_finite() && self.fraunhofer_ratio > 0.0) {
            return Err(Error::InvalidInput(format!(
                "d/dx must be positive, got {}",
                self.fraunhofer_ratio
            )));
        }
        if self.screen.is_empty() {
            return Err(Error::InvalidInput("empty screen grid".into()));
        }
        if !(self.detector_sigma >= 0.0) {
            return Err(Error::InvalidInput("detector sigma must be >= 0".into()));
        }
        if !(self.panel_width > 0.0 && self.panel_width <= 1.0 / 4.0) {
            return Err(Error::Resolution(format!(
                "q panel width {} gives fewer than 64 nodes per unit q",
                self.panel_width
            )));
        }
        Ok(self)
    }

    fn prefactor(&self) -> f64 {
        self.fraunhofer_ratio / (PI * self.collimator_ratio)
    }
}

/// Uniform screen grid `[-half_width, half_width]` with `points` samples.
pub fn screen_grid(half_width: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (points - 1) as f64)
        .collect()
}

/// Density on the screen.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenDensity {
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    pub absorption: Absorption,
    pub variant: Variant,
    pub smoothed: bool,
    pub normalization: String,
    pub warnings: Vec<String>,
}

impl ScreenDensity {
    pub fn peak(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy scaled so that the maximum equals one.
    pub fn normalized_to_peak(&self) -> Self {
        let p = self.peak();
        let mut out = self.clone();
        if p > 0.0 {
            out.values.iter_mut().for_each(|v| *v /= p);
            out.normalization = format!("{}; divided by peak {p:.6e}", self.normalization);
        }
        out
    }

    /// Positions of strict local maxima above `rel` times the peak.
    pub fn local_maxima(&self, rel: f64) -> Vec<f64> {
        let p = self.peak();
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > rel * p)
            .map(|i| self.positions[i])
            .collect()
    }
}

fn q_nodes(config: &FarFieldConfig, half: f64) -> Vec<(f64, f64)> {
    GaussLegendre::new(PANEL_NODES).composite(&[-half, 0.0, half], config.panel_width)
}

/// `sin(π A k)/k` with the `k → 0` limit `π A`.
fn slit_factor(a: f64, k: f64) -> f64 {
    if k.abs() < 1e-12 {
        PI * a
    } else {
        (PI * a * k).sin() / k
    }
}

fn fourier_form(
    config: &FarFieldConfig,
    absorption: Absorption,
    chirp: f64,
    variant: Variant,
) -> Result<Vec<C64>> {
    let dd = config.collimator_ratio;
    let eps = config.fraunhofer_ratio * chirp;
    let nodes = q_nodes(config, dd);
    let g: Vec<(f64, f64, C64)> = nodes
        .par_iter()
        .map(|&(q, w)| {
            let row = adaptive_row(
                |jm| b_row(q, absorption, &config.grating, variant, jm),
                FOURIER_JMAX_START,
                FOURIER_JMAX_LIMIT,
            )?;
            let a = dd - q.abs();
            let mut acc = C64::new(0.0, 0.0);
            for j in -(row.jmax as i64)..=row.jmax as i64 {
                acc += row.get(j) * slit_factor(a, j as f64 - 2.0 * q * eps);
            }
            Ok((q, w, acc))
        })
        .collect::<Result<_>>()?;
    let pre = config.prefactor();
    Ok(config
        .screen
        .par_iter()
        .map(|&x| {
            let s: C64 = g
                .iter()
                .map(|&(q, w, v)| w * v * C64::from_polar(1.0, 2.0 * PI * q * x))
                .sum();
            pre * s
        })
        .collect())
}

fn into_density(
    raw: Vec<C64>,
    config: &FarFieldConfig,
    absorption: Absorption,
    variant: Variant,
    normalization: &str,
) -> Result<ScreenDensity> {
    let peak = raw.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let imag = raw.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if imag > IMAG_REL_TOL * peak.max(1e-300) {
        return Err(Error::NonRealSignal(imag));
    }
    Ok(ScreenDensity {
        positions: config.screen.clone(),
        values: raw.into_iter().map(|v| v.re).collect(),
        absorption,
        variant,
        smoothed: false,
        normalization: normalization.into(),
        warnings: Vec::new(),
    })
}

/// Screen density from the Talbot-coefficient series.
pub fn farfield_density(config: &FarFieldConfig, absorption: Absorption) -> Result<ScreenDensity> {
    let raw = fourier_form(config, absorption, 1.0, config.variant)?;
    into_density(
        raw,
        config,
        absorption,
        config.variant,
        "prefactor (d/dx)/(pi D/d), Talbot series",
    )
}

/// Screen density from the Fresnel-Kirchhoff integral over the aperture.
///
/// The classical variant is obtained by reversing the sign of the quadratic
/// phase, which mirrors `B_j(q)` to `B_j(-q)`.
pub fn farfield_kirchhoff(
    config: &FarFieldConfig,
    absorption: Absorption,
) -> Result<ScreenDensity> {
    let ells: Vec<u32> = match absorption {
        Absorption::Conditional(l) => vec![l],
        Absorption::Unconditional => (0..=ladder_cutoff(&config.grating) as u32).collect(),
    };
    let half = 0.5 * config.collimator_ratio;
    let panels = KIRCHHOFF_MIN_SAMPLES.div_ceil(PANEL_NODES);
    let width = config.collimator_ratio / panels as f64;
    let nodes = GaussLegendre::new(PANEL_NODES).composite(&[-half, half], width);
    let eps = config.fraunhofer_ratio;
    let chirp = match config.variant {
        Variant::Quantum => 1.0,
        Variant::Classical => -1.0,
    };
    let xmax = config.screen.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let step = width / PANEL_NODES as f64;
    let advance = 2.0 * PI * (xmax + 2.0 * eps * half) * step;
    if advance > PI / 4.0 {
        return Err(Error::Resolution(format!(
            "aperture phase advances {advance:.3} rad per sample (limit pi/4)"
        )));
    }
    let apertures: Vec<Vec<C64>> = ells
        .iter()
        .map(|&l| {
            let prof = MeasurementProfile::new(config.grating, l);
            nodes.iter().map(|&(q, w)| w * m_ell(q, &prof)).collect()
        })
        .collect();
    let pre = eps / config.collimator_ratio;
    let values: Vec<f64> = config
        .screen
        .par_iter()
        .map(|&x| {
            let phases: Vec<C64> = nodes
                .iter()
                .map(|&(q, _)| C64::from_polar(1.0, 2.0 * PI * (q * x + chirp * eps * q * q)))
                .collect();
            apertures
                .iter()
                .map(|ap| {
                    let s: C64 = ap.iter().zip(&phases).map(|(a, p)| a * p).sum();
                    pre * s.norm_sqr()
                })
                .sum()
        })
        .collect();
    Ok(ScreenDensity {
        positions: config.screen.clone(),
        values,
        absorption,
        variant: config.variant,
        smoothed: false,
        normalization: "prefactor (d/dx)/(D/d), Kirchhoff integral".into(),
        warnings: Vec::new(),
    })
}

/// Fraunhofer limit of the series form; independent of the variant.
pub fn fraunhofer_density(
    config: &FarFieldConfig,
    absorption: Absorption,
) -> Result<ScreenDensity> {
    let raw = fourier_form(config, absorption, 0.0, config.variant)?;
    let mut out = into_density(
        raw,
        config,
        absorption,
        config.variant,
        "prefactor (d/dx)/(pi D/d), Fraunhofer limit",
    )?;
    if config.fraunhofer_ratio > FRAUNHOFER_LIMIT {
        out.warnings.push(format!(
            "d/dx = {} exceeds {FRAUNHOFER_LIMIT}; Fraunhofer limit not reliable",
            config.fraunhofer_ratio
        ));
    }
    Ok(out)
}

/// Screen density from the Wigner function behind slit and grating, sheared by
/// free flight, with the position integral done numerically.
pub fn phase_space_density(
    config: &FarFieldConfig,
    absorption: Absorption,
) -> Result<ScreenDensity> {
    let ells: Vec<u32> = match absorption {
        Absorption::Conditional(l) => vec![l],
        Absorption::Unconditional => (0..=ladder_cutoff(&config.grating) as u32).collect(),
    };
    let dd = config.collimator_ratio;
    let eps = config.fraunhofer_ratio;
    let sign = match config.variant {
        Variant::Quantum => 1.0,
        Variant::Classical => -1.0,
    };
    let rule = GaussLegendre::new(PANEL_NODES);
    let s_nodes = q_nodes(config, dd);
    let profiles: Vec<MeasurementProfile> = ells
        .iter()
        .map(|&l| MeasurementProfile::new(config.grating, l))
        .collect();
    // F(s) = ∫ dx e^{-4πiεxs} W(x, s), with W the collimated two-point function
    let f: Vec<(f64, f64, C64)> = s_nodes
        .par_iter()
        .map(|&(s, w)| {
            let half = 0.5 * (dd - s.abs());
            let mut acc = C64::new(0.0, 0.0);
            for (x, wx) in rule.composite(&[-half, half], config.panel_width) {
                let k: C64 = profiles
                    .iter()
                    .map(|p| m_ell(x - 0.5 * s, p) * m_ell(x + 0.5 * s, p).conj())
                    .sum();
                acc += wx * k * C64::from_polar(1.0, -4.0 * PI * sign * eps * x * s);
            }
            (s, w, acc)
        })
        .collect();
    let pre = eps / dd;
    let raw: Vec<C64> = config
        .screen
        .par_iter()
        .map(|&x| {
            let s: C64 = f
                .iter()
                .map(|&(s, w, v)| w * v * C64::from_polar(1.0, 2.0 * PI * s * x))
                .sum();
            pre * s
        })
        .collect();
    into_density(
        raw,
        config,
        absorption,
        config.variant,
        "prefactor (d/dx)/(D/d), phase-space route",
    )
}

/// Convolves with the detector response, renormalizing each source column so
/// that the discrete integral is preserved.
pub fn apply_detector_resolution(
    density: &ScreenDensity,
    sigma: f64,
    kernel: DetectorKernel,
) -> Result<ScreenDensity> {
    let mut out = density.clone();
    out.smoothed = true;
    if sigma == 0.0 {
        return Ok(out);
    }
    let x = &density.positions;
    if x.len() < 2 {
        return Err(Error::Resolution("need at least two screen points".into()));
    }
    let h = x[1] - x[0];
    let uniform = x
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
    if !uniform || h <= 0.0 {
        return Err(Error::Resolution(
            "screen grid must be uniform and increasing".into(),
        ));
    }
    if h >= sigma / 4.0 {
        return Err(Error::Resolution(format!(
            "grid spacing {h} not below sigma/4 = {}",
            sigma / 4.0
        )));
    }
    let weight = |d: f64| -> f64 {
        match kernel {
            DetectorKernel::Gaussian => (-0.5 * (d / sigma).powi(2)).exp(),
            DetectorKernel::Boxcar => {
                if d.abs() <= 0.5 * 12f64.sqrt() * sigma {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    let n = x.len();
    let mut values = vec![0.0; n];
    for k in 0..n {
        let norm: f64 = (0..n).map(|i| weight(x[i] - x[k])).sum();
        for (i, v) in values.iter_mut().enumerate() {
            *v += density.values[k] * weight(x[i] - x[k]) / norm;
        }
    }
    out.values = values;
    Ok(out)
}

/// Wigner function sampled on a uniform phase-space grid; `p` in units of `h/d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Row-major `[x][p]`.
    pub values: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn get(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.p.len() + ip]
    }
}

/// Wigner-space kernel of the slit: `sin(2π(D - 2|x|)p₀)/(π p₀)` inside the
/// aperture, zero outside; momenta in units of `h/d`.
pub fn collimation_kernel(x: f64, p0: f64, collimator_ratio: f64) -> f64 {
    let a = collimator_ratio - 2.0 * x.abs();
    if a < 0.0 {
        return 0.0;
    }
    if p0 == 0.0 {
        2.0 * a
    } else {
        (2.0 * PI * a * p0).sin() / (PI * p0)
    }
}

/// Applies the slit to a Wigner function: momentum convolution with the
/// collimation kernel, averaged over each momentum cell so that very wide
/// slits reduce to the identity.
pub fn collimation_transform(
    grid: &PhaseSpaceGrid,
    collimator_ratio: f64,
) -> Result<PhaseSpaceGrid> {
    let np = grid.p.len();
    if np < 2 || grid.x.is_empty() || grid.values.len() != np * grid.x.len() {
        return Err(Error::Resolution(
            "phase-space grid is empty or inconsistent".into(),
        ));
    }
    let dp = grid.p[1] - grid.p[0];
    if !(dp > 0.0)
        || grid
            .p
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dp).abs() > 1e-9 * dp)
    {
        return Err(Error::Resolution("momentum grid must be uniform".into()));
    }
    let mut values = vec![0.0; grid.values.len()];
    for (ix, &x) in grid.x.iter().enumerate() {
        let a = collimator_ratio - 2.0 * x.abs();
        if a < 0.0 {
            continue;
        }
        let k = 2.0 * PI * a;
        let cell: Vec<f64> = (0..np)
            .map(|m| {
                let lo = (m as f64 - 0.5) * dp;
                let hi = (m as f64 + 0.5) * dp;
                (sine_integral(k * hi) - sine_integral(k * lo)) / PI
            })
            .collect();
        let row = &grid.values[ix * np..(ix + 1) * np];
        for i in 0..np {
            let mut acc = 0.0;
            for (kk, w) in row.iter().enumerate() {
                let m = (i as i64 - kk as i64).unsigned_abs() as usize;
                acc += w * cell[m];
            }
            values[ix * np + i] = acc;
        }
    }
    Ok(PhaseSpaceGrid {
        x: grid.x.clone(),
        p: grid.p.clone(),
        values,
    })
}

/// Relative L² distance between two densities on the same grid.
pub fn relative_l2(a: &ScreenDensity, b: &ScreenDensity) -> f64 {
    let num: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let den: f64 = b.values.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
