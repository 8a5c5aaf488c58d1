//! Sectioned TOML configuration with units spelled out in the key names.

use serde::{Deserialize, Serialize};

use mwdiff::dynamics::Envelope;
use mwdiff::farfield::DetectorKernel;
use mwdiff::params::{
    derive_n0, derive_phi0, derive_scales, polarizability_from_angstrom3, BeamSetup,
    GratingParameters, InterferometerScales, AMU,
};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grating: GratingSection,
    pub beam: Option<BeamSection>,
    pub interferometer: InterferometerSection,
    pub talbot: TalbotSection,
    pub farfield: FarFieldSection,
    pub ladder: LadderSection,
    pub rabi: RabiSection,
}

/// Explicit grating strengths; `phi0`/`n0` fall back to values derived from `[beam]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GratingSection {
    pub phi0: Option<f64>,
    pub n0: Option<f64>,
    /// When set, `phi0 = phi0_per_n0 * n0` so phase and absorption scale together in sweeps.
    pub phi0_per_n0: Option<f64>,
    pub eta_p: f64,
    pub eta_a: f64,
}

impl Default for GratingSection {
    fn default() -> Self {
        Self {
            phi0: None,
            n0: None,
            phi0_per_n0: None,
            eta_p: 1.0,
            eta_a: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub power_w: f64,
    pub waist_y_um: f64,
    pub waist_z_um: f64,
    pub wavelength_nm: f64,
    pub polarizability_a3: f64,
    pub cross_section_m2: f64,
    pub velocity_m_s: f64,
    pub mass_amu: f64,
}

impl BeamSection {
    pub fn setup(&self) -> BeamSetup {
        BeamSetup {
            power: self.power_w,
            waist_y: self.waist_y_um * 1e-6,
            waist_z: self.waist_z_um * 1e-6,
            wavelength: self.wavelength_nm * 1e-9,
            polarizability: polarizability_from_angstrom3(self.polarizability_a3),
            cross_section: self.cross_section_m2,
            velocity: self.velocity_m_s,
            mass: self.mass_amu * AMU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferometerSection {
    pub open_fraction: f64,
    /// `L/L_T`; derived from `separation_m` and `[beam]` when absent.
    pub talbot_parameter: Option<f64>,
    pub separation_m: Option<f64>,
    pub shift_points: usize,
    /// Visibility scan over `L/L_T`; disabled when `scan_points` is 0.
    pub scan_min: f64,
    pub scan_max: f64,
    pub scan_points: usize,
    /// Relative rms spread of the forward velocity; 0 disables averaging.
    pub velocity_spread: f64,
    pub velocity_nodes: usize,
}

impl Default for InterferometerSection {
    fn default() -> Self {
        Self {
            open_fraction: 0.42,
            talbot_parameter: None,
            separation_m: None,
            shift_points: 256,
            scan_min: 0.01,
            scan_max: 2.0,
            scan_points: 0,
            velocity_spread: 0.0,
            velocity_nodes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TalbotSection {
    pub xi_points: usize,
    pub jmax: usize,
}

impl Default for TalbotSection {
    fn default() -> Self {
        Self {
            xi_points: 64,
            jmax: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FarFieldMethod {
    Series,
    Kirchhoff,
    Fraunhofer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorShape {
    Gaussian,
    Boxcar,
}

impl DetectorShape {
    pub fn kernel(self) -> DetectorKernel {
        match self {
            DetectorShape::Gaussian => DetectorKernel::Gaussian,
            DetectorShape::Boxcar => DetectorKernel::Boxcar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FarFieldSection {
    /// `D/d`
    pub collimator_ratio: f64,
    /// `d/Δx`
    pub fraunhofer_ratio: f64,
    /// Screen half-width in units of `Δx`.
    pub screen_half_width: f64,
    pub screen_points: usize,
    /// Detector resolution in units of `Δx`.
    pub detector_sigma: f64,
    pub detector: DetectorShape,
    pub method: FarFieldMethod,
}

impl Default for FarFieldSection {
    fn default() -> Self {
        Self {
            collimator_ratio: 10.0,
            fraunhofer_ratio: 1e-3,
            screen_half_width: 3.0,
            screen_points: 601,
            detector_sigma: 0.1,
            detector: DetectorShape::Gaussian,
            method: FarFieldMethod::Series,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeShape {
    Gaussian,
    Constant,
}

impl EnvelopeShape {
    pub fn envelope(self) -> Envelope {
        match self {
            EnvelopeShape::Gaussian => Envelope::Gaussian,
            EnvelopeShape::Constant => Envelope::Constant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderMethod {
    Ode,
    Analytic,
    FirstAbsorption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    pub envelope: EnvelopeShape,
    pub method: LadderMethod,
    /// Samples per period along each line.
    pub points: usize,
    /// Line offsets `ξ = (x' - x)/d`.
    pub xi: Vec<f64>,
}

impl Default for LadderSection {
    fn default() -> Self {
        Self {
            envelope: EnvelopeShape::Constant,
            method: LadderMethod::Ode,
            points: 64,
            xi: vec![0.0, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RabiSection {
    /// `Ω₀ t_L`
    pub pulse_area_rad: f64,
    /// `Δ t_L`
    pub detuning_rad: f64,
    /// `τ / t_L`
    pub lifetime_ratio: f64,
    pub points: usize,
    /// Also compute the near-field signal of ground-state molecules.
    pub kdtli: bool,
}

impl Default for RabiSection {
    fn default() -> Self {
        Self {
            pulse_area_rad: 4.0 * std::f64::consts::PI,
            detuning_rad: 0.0,
            lifetime_ratio: 1.0,
            points: 256,
            kdtli: false,
        }
    }
}

impl Config {
    pub fn from_toml_value(value: toml::Value) -> Result<Self, CliError> {
        value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    /// Grating strengths, preferring explicit values over `[beam]`-derived ones.
    pub fn grating(&self) -> Result<GratingParameters, CliError> {
        let derived = |f: fn(&BeamSetup) -> mwdiff::Result<f64>| -> Result<Option<f64>, CliError> {
            self.beam
                .as_ref()
                .map(|b| f(&b.setup()))
                .transpose()
                .map_err(CliError::from)
        };
        let n0 = match self.grating.n0 {
            Some(v) => v,
            None => derived(derive_n0)?.unwrap_or(0.0),
        };
        let phi0 = match (self.grating.phi0, self.grating.phi0_per_n0) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "grating.phi0 and grating.phi0_per_n0 are mutually exclusive".into(),
                ))
            }
            (Some(v), None) => v,
            (None, Some(r)) => r * n0,
            (None, None) => derived(derive_phi0)?.unwrap_or(0.0),
        };
        let g =
            GratingParameters::new(phi0, n0)?.with_eta(self.grating.eta_p, self.grating.eta_a)?;
        match &self.beam {
            Some(b) => Ok(g.with_period(b.setup().period())?),
            None => Ok(g),
        }
    }

    pub fn scales(&self) -> Result<Option<InterferometerScales>, CliError> {
        match (&self.beam, self.interferometer.separation_m) {
            (Some(b), Some(sep)) => Ok(Some(derive_scales(&b.setup(), sep)?)),
            _ => Ok(None),
        }
    }

    /// `L/L_T`, explicit or derived from the beam and grating separation.
    pub fn talbot_parameter(&self) -> Result<f64, CliError> {
        if let Some(t) = self.interferometer.talbot_parameter {
            return Ok(t);
        }
        self.scales()?.map(|s| s.talbot_parameter).ok_or_else(|| {
            CliError::Config(
                "set interferometer.talbot_parameter or both [beam] and interferometer.separation_m"
                    .into(),
            )
        })
    }
}

/// One swept parameter, `key=start:stop:count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Config(format!(
                "sweep '{s}' is not of the form key=start:stop:count"
            ))
        };
        let (key, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 || !key.contains('.') {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let values = (0..count)
            .map(|i| {
                if count == 1 {
                    start
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect();
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// Cartesian product of the sweep axes, first axis slowest.
pub fn sweep_points(axes: &[SweepAxis]) -> Vec<Vec<(String, f64)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((axis.key.clone(), v));
                    q
                })
            })
            .collect();
    }
    points
}

/// Sets `section.key` in a raw configuration table.
pub fn set_key(root: &mut toml::Value, key: &str, value: f64) -> Result<(), CliError> {
    let (section, field) = key
        .split_once('.')
        .ok_or_else(|| CliError::Config(format!("sweep key '{key}' needs a section")))?;
    let table = root
        .as_table_mut()
        .ok_or_else(|| CliError::Config("configuration root is not a table".into()))?;
    let sec = table
        .entry(section)
        .or_insert_with(|| toml::Value::Table(Default::default()))
        .as_table_mut()
        .ok_or_else(|| CliError::Config(format!("'{section}' is not a section")))?;
    let v = if value.fract() == 0.0 && value.abs() < 1e15 && integer_field(field) {
        toml::Value::Integer(value as i64)
    } else {
        toml::Value::Float(value)
    };
    sec.insert(field.to_string(), v);
    Ok(())
}

fn integer_field(field: &str) -> bool {
    field.ends_with("points") || field.ends_with("nodes") || field == "jmax"
}
