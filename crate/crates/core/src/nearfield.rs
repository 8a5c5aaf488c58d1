//! Three-grating near-field interferometer with a light grating in the middle.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grating::ln_factorial;
use crate::kernel::{Channel, KernelModel};
use crate::params::GratingParameters;
use crate::quad::GaussLegendre;
use crate::specfun::{bessel_i_sequence, sinc};
use crate::talbot::{
    b_row, line_coefficient, sample_line, select_channel, Absorption, Variant, DEFAULT_JMAX,
    MIN_ORACLE_POINTS, TAIL_TOL,
};

/// Default number of shift samples per period.
pub const DEFAULT_SHIFT_POINTS: usize = 256;
/// Largest Fourier-order cutoff tried before giving up.
pub const MAX_JMAX: usize = 512;
/// Tolerated imaginary residue of the synthesized signal.
pub const IMAG_TOL: f64 = 1e-10;

/// Where the Talbot coefficients come from.
#[derive(Clone)]
pub enum CoefficientSource {
    ClosedForm {
        variant: Variant,
        absorption: Absorption,
    },
    Kernel {
        model: Arc<dyn KernelModel>,
        channel: Channel,
        points: usize,
        cache: Arc<LineCache>,
    },
}

/// Sampled kernel lines keyed by `ξ mod 2`.
#[derive(Debug, Default)]
pub struct LineCache {
    lines: Mutex<HashMap<i64, Arc<Vec<C64>>>>,
}

impl LineCache {
    fn key(xi: f64) -> i64 {
        (xi.rem_euclid(2.0) * 1e9).round() as i64 % 2_000_000_000
    }

    fn get_or_sample(
        &self,
        model: &dyn KernelModel,
        channel: Channel,
        xi: f64,
        points: usize,
    ) -> Result<Arc<Vec<C64>>> {
        let key = Self::key(xi);
        if let Some(line) = self.lines.lock().unwrap().get(&key) {
            return Ok(line.clone());
        }
        let line = Arc::new(select_channel(&sample_line(model, xi, points)?, channel)?);
        self.lines.lock().unwrap().insert(key, line.clone());
        Ok(line)
    }
}

impl std::fmt::Debug for CoefficientSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl CoefficientSource {
    pub fn quantum() -> Self {
        Self::ClosedForm {
            variant: Variant::Quantum,
            absorption: Absorption::Unconditional,
        }
    }

    pub fn classical() -> Self {
        Self::ClosedForm {
            variant: Variant::Classical,
            absorption: Absorption::Unconditional,
        }
    }

    pub fn conditional(ell: u32) -> Self {
        Self::ClosedForm {
            variant: Variant::Quantum,
            absorption: Absorption::Conditional(ell),
        }
    }

    pub fn kernel(model: Arc<dyn KernelModel>, channel: Channel) -> Self {
        Self::Kernel {
            model,
            channel,
            points: MIN_ORACLE_POINTS,
            cache: Arc::default(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::ClosedForm {
                variant,
                absorption,
            } => format!("{} ell={}", variant.name(), absorption.label()),
            Self::Kernel { model, channel, .. } => {
                let ch = match channel {
                    Channel::Index(c) => c.to_string(),
                    Channel::Sum => "sum".into(),
                };
                format!("kernel [{}] channel={}", model.describe(), ch)
            }
        }
    }

    /// `B_j(ξ)` from this source.
    pub fn coefficient(&self, j: i64, xi: f64, grating: &GratingParameters) -> Result<C64> {
        match self {
            Self::ClosedForm {
                variant,
                absorption,
            } => Ok(b_row(
                xi,
                *absorption,
                grating,
                *variant,
                j.unsigned_abs() as usize,
            )?
            .get(j)),
            Self::Kernel {
                model,
                channel,
                points,
                cache,
            } => {
                let line = cache.get_or_sample(model.as_ref(), *channel, xi, *points)?;
                line_coefficient(&line, j)
            }
        }
    }
}

/// Inputs of a near-field signal computation.
#[derive(Debug, Clone)]
pub struct KdtliConfig {
    pub open_fraction: f64,
    pub talbot_parameter: f64,
    pub grating: GratingParameters,
    pub source: CoefficientSource,
    pub shift_points: usize,
    /// Initial Fourier-order cutoff; doubled while the tail check fails.
    pub jmax: usize,
}

impl KdtliConfig {
    pub fn new(
        open_fraction: f64,
        talbot_parameter: f64,
        grating: GratingParameters,
    ) -> Result<Self> {
        Self {
            open_fraction,
            talbot_parameter,
            grating,
            source: CoefficientSource::quantum(),
            shift_points: DEFAULT_SHIFT_POINTS,
            jmax: DEFAULT_JMAX,
        }
        .validated()
    }

    pub fn with_source(mut self, source: CoefficientSource) -> Self {
        self.source = source;
        self
    }

    pub fn with_talbot_parameter(mut self, talbot_parameter: f64) -> Result<Self> {
        self.talbot_parameter = talbot_parameter;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.open_fraction > 0.0 && self.open_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "open fraction must lie in (0, 1), got {}",
                self.open_fraction
            )));
        }
        if !(self.talbot_parameter.is_finite() && self.talbot_parameter > 0.0) {
            return Err(Error::InvalidInput(format!(
                "talbot parameter must be positive, got {}",
                self.talbot_parameter
            )));
        }
        if self.shift_points == 0 {
            return Err(Error::InvalidInput("need at least one shift point".into()));
        }
        Ok(self)
    }

    /// Fourier component `S_j = f² sinc²(jπf) B_{2j}(j L/L_T)`.
    pub fn component(&self, j: i64) -> Result<C64> {
        let f = self.open_fraction;
        let s = sinc(j as f64 * PI * f);
        let b = self
            .source
            .coefficient(2 * j, j as f64 * self.talbot_parameter, &self.grating)?;
        Ok(f * f * s * s * b)
    }
}

/// Sampled fringe signal and its Fourier components.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeSignal {
    pub shifts: Vec<f64>,
    pub values: Vec<f64>,
    pub jmax: usize,
    /// `S_j` for `j = -jmax..=jmax`.
    pub components: Vec<C64>,
    pub mean: f64,
    pub label: String,
}

impl FringeSignal {
    pub fn component(&self, j: i64) -> C64 {
        if j.unsigned_abs() as usize > self.jmax {
            return C64::new(0.0, 0.0);
        }
        self.components[(j + self.jmax as i64) as usize]
    }

    /// Number of `j > 0` harmonics with `|S_j / S_0|` above `threshold`.
    pub fn harmonic_count(&self, threshold: f64) -> usize {
        let s0 = self.component(0).norm();
        (1..=self.jmax as i64)
            .filter(|&j| self.component(j).norm() > threshold * s0)
            .count()
    }

    /// Sinusoidal visibility `2 Re(S_1) / S_0`.
    pub fn sinusoidal_visibility(&self) -> Result<f64> {
        visibility_from(self.component(0), self.component(1))
    }
}

fn visibility_from(s0: C64, s1: C64) -> Result<f64> {
    if !(s0.re.abs() > 1e-300) {
        return Err(Error::UndefinedVisibility(
            "zeroth Fourier component vanishes".into(),
        ));
    }
    Ok(2.0 * s1.re / s0.re)
}

fn components_with_cutoff(config: &KdtliConfig, jmax: usize) -> Result<Vec<C64>> {
    (-(jmax as i64)..=jmax as i64)
        .into_par_iter()
        .map(|j| config.component(j))
        .collect()
}

/// Computes the fringe signal, growing the Fourier cutoff until its tail is negligible.
pub fn kdtli_signal(config: &KdtliConfig) -> Result<FringeSignal> {
    let mut jmax = config.jmax.max(4);
    let components = loop {
        let comps = components_with_cutoff(config, jmax)?;
        let n = comps.len();
        let edge = comps[..4]
            .iter()
            .chain(&comps[n - 4..])
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if edge < TAIL_TOL {
            break comps;
        }
        if jmax >= MAX_JMAX {
            return Err(Error::CutoffTooSmall {
                cutoff: jmax,
                dropped: edge,
            });
        }
        jmax = (2 * jmax).min(MAX_JMAX);
    };
    synthesize(config, jmax, components)
}

fn synthesize(config: &KdtliConfig, jmax: usize, components: Vec<C64>) -> Result<FringeSignal> {
    let n = config.shift_points;
    let shifts: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let mut values = Vec::with_capacity(n);
    let mut worst_imag: f64 = 0.0;
    for &x in &shifts {
        let mut acc = C64::new(0.0, 0.0);
        for (idx, c) in components.iter().enumerate() {
            let j = idx as f64 - jmax as f64;
            acc += c * C64::from_polar(1.0, 2.0 * PI * j * x);
        }
        worst_imag = worst_imag.max(acc.im.abs());
        values.push(acc.re);
    }
    if worst_imag > IMAG_TOL {
        return Err(Error::NonRealSignal(worst_imag));
    }
    let mean = components[jmax].re;
    Ok(FringeSignal {
        shifts,
        values,
        jmax,
        components,
        mean,
        label: config.source.label(),
    })
}

/// `2 Re(S_1)/S_0` without synthesizing the whole signal.
pub fn sinusoidal_visibility(config: &KdtliConfig) -> Result<f64> {
    visibility_from(config.component(0)?, config.component(1)?)
}

/// `(S_max - S_min)/(S_max + S_min)` of a sampled signal.
pub fn visibility_minmax(signal: &FringeSignal) -> Result<f64> {
    if signal.values.len() < DEFAULT_SHIFT_POINTS {
        return Err(Error::Resolution(format!(
            "{} shift samples, need at least {DEFAULT_SHIFT_POINTS}",
            signal.values.len()
        )));
    }
    let hi = signal
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = signal.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi + lo == 0.0 {
        return Err(Error::UndefinedVisibility("signal vanishes".into()));
    }
    Ok((hi - lo) / (hi + lo))
}

/// Mean conditional transmission `f² B_0(0; ℓ)` from its modified-Bessel closed form.
pub fn mean_transmission(ell: u32, grating: &GratingParameters, open_fraction: f64) -> Result<f64> {
    let n0 = grating.n0;
    let seq = bessel_i_sequence(ell as usize + 1, C64::new(-0.5 * n0, 0.0))?;
    let mut sum = 0.0;
    for n in 0..=ell {
        for r in 0..=n {
            let order = (2 * r as i64 - n as i64).unsigned_abs() as usize;
            let w = (-(ln_factorial(r) + ln_factorial(n - r) + ln_factorial(ell - n))).exp()
                / 2f64.powi(n as i32);
            sum += seq[order].re * w;
        }
    }
    let f2 = open_fraction * open_fraction;
    Ok(f2 * (-0.5 * n0).exp() * (0.5 * n0).powi(ell as i32) * sum)
}

/// Signal averaged over a Gaussian velocity spread `Δv/v`; the Talbot
/// parameter scales as `1/v`.
pub fn velocity_averaged_signal(
    config: &KdtliConfig,
    relative_spread: f64,
    nodes: usize,
) -> Result<FringeSignal> {
    if !(0.0..0.3).contains(&relative_spread) {
        return Err(Error::InvalidInput(format!(
            "relative velocity spread must lie in [0, 0.3), got {relative_spread}"
        )));
    }
    if relative_spread == 0.0 || nodes <= 1 {
        return kdtli_signal(config);
    }
    // Gauss-Legendre over ±4σ of the velocity distribution
    let rule = GaussLegendre::new(nodes);
    let mut acc: Option<FringeSignal> = None;
    let mut total_weight = 0.0;
    for (u, w) in rule.on(-4.0, 4.0) {
        let weight = w * (-0.5 * u * u).exp();
        let v = 1.0 + relative_spread * u;
        let cfg = config
            .clone()
            .with_talbot_parameter(config.talbot_parameter / v)?;
        let s = kdtli_signal(&cfg)?;
        total_weight += weight;
        acc = Some(match acc {
            None => scale_signal(s, weight),
            Some(prev) => add_signals(prev, scale_signal(s, weight)),
        });
    }
    let mut out = scale_signal(acc.expect("at least two nodes"), 1.0 / total_weight);
    out.label = format!("{} dv/v={}", config.source.label(), relative_spread);
    Ok(out)
}

fn scale_signal(mut s: FringeSignal, w: f64) -> FringeSignal {
    s.values.iter_mut().for_each(|v| *v *= w);
    s.components.iter_mut().for_each(|c| *c *= w);
    s.mean *= w;
    s
}

fn add_signals(a: FringeSignal, b: FringeSignal) -> FringeSignal {
    let jmax = a.jmax.max(b.jmax);
    let components = (-(jmax as i64)..=jmax as i64)
        .map(|j| a.component(j) + b.component(j))
        .collect();
    FringeSignal {
        values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
        shifts: a.shifts,
        jmax,
        components,
        mean: a.mean + b.mean,
        label: a.label,
    }
}
