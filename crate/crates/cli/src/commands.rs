//! Single-point command implementations producing output tables.

use std::sync::Arc;

use mwdiff::dynamics::{LadderAnalytic, LadderConfig, LadderFirstAbsorption, LadderOde};
use mwdiff::farfield::{
    apply_detector_resolution, farfield_density, farfield_kirchhoff, fraunhofer_density,
    screen_grid, FarFieldConfig,
};
use mwdiff::grating::ladder_cutoff;
use mwdiff::kernel::{Channel, KernelModel, TwoPointKernel};
use mwdiff::nearfield::{velocity_averaged_signal, CoefficientSource, KdtliConfig};
use mwdiff::params::GratingParameters;
use mwdiff::rabi::{rabi_kdtli, rabi_solve, RabiConfig};
use mwdiff::talbot::{default_xi_grid, Absorption, TalbotCoefficientSet, Variant};

use crate::config::{Config, FarFieldMethod, LadderMethod};
use crate::error::CliError;
use crate::table::{self, Cell, Table};

/// Which absorption channels a command reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllSelection {
    One(u32),
    All,
    Sum,
}

impl std::str::FromStr for EllSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Self::All),
            "sum" => Ok(Self::Sum),
            n => n
                .parse()
                .map(Self::One)
                .map_err(|_| format!("expected N, 'all' or 'sum', got '{n}'")),
        }
    }
}

impl EllSelection {
    pub fn label(&self) -> String {
        match self {
            Self::One(l) => l.to_string(),
            Self::All => "all".into(),
            Self::Sum => "sum".into(),
        }
    }

    /// Absorption channels, `All` meaning every conditional channel up to the
    /// ladder cutoff.
    pub fn absorptions(&self, grating: &GratingParameters) -> Vec<Absorption> {
        match self {
            Self::One(l) => vec![Absorption::Conditional(*l)],
            Self::All => (0..=ladder_cutoff(grating) as u32)
                .map(Absorption::Conditional)
                .collect(),
            Self::Sum => vec![Absorption::Unconditional],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub variant: Variant,
    pub ell: EllSelection,
}

pub fn curve_label(variant: Variant, absorption: Absorption) -> String {
    format!("{} ell={}", variant.name(), absorption.label())
}

fn channel(absorption: Absorption) -> Channel {
    match absorption {
        Absorption::Conditional(l) => Channel::Index(l as usize),
        Absorption::Unconditional => Channel::Sum,
    }
}

/// Closed-form coefficients for uniform gratings, the 1F1 ladder kernel otherwise.
pub fn coefficient_source(
    grating: &GratingParameters,
    variant: Variant,
    absorption: Absorption,
) -> Result<CoefficientSource, CliError> {
    if grating.is_uniform() {
        return Ok(CoefficientSource::ClosedForm {
            variant,
            absorption,
        });
    }
    if variant == Variant::Classical {
        return Err(CliError::Config(
            "the classical variant is only defined for eta_p = eta_a = 1".into(),
        ));
    }
    let cfg = LadderConfig::new(*grating, mwdiff::dynamics::Envelope::Constant)?;
    let model: Arc<dyn KernelModel> = Arc::new(LadderAnalytic::new(&cfg)?);
    Ok(CoefficientSource::kernel(model, channel(absorption)))
}

pub fn derive_params(config: &Config) -> Result<Vec<Table>, CliError> {
    let beam = config
        .beam
        .as_ref()
        .ok_or_else(|| CliError::Config("derive-params needs a [beam] section".into()))?;
    let setup = beam.setup();
    let g = config.grating()?;
    let mut t = Table::new("parameters", table::PARAMETERS);
    let mut row = |name: &str, value: f64, unit: &str| {
        t.push(vec![name.into(), value.into(), unit.into()]);
    };
    row("phi0", g.phi0, "rad");
    row("n0", g.n0, "1");
    row("n0_over_phi0", setup.absorption_to_phase_ratio(), "1");
    row("period", setup.period(), "m");
    if let Some(s) = config.scales()? {
        row("de_broglie_wavelength", s.de_broglie_wavelength, "m");
        row("talbot_length", s.talbot_length, "m");
        row("separation", s.separation, "m");
        row("talbot_parameter", s.talbot_parameter, "1");
        row("interaction_time", s.interaction_time, "s");
    }
    Ok(vec![t])
}

pub fn talbot(config: &Config, sel: Selection) -> Result<Vec<Table>, CliError> {
    let g = config.grating()?;
    if !g.is_uniform() {
        return Err(CliError::Config(
            "talbot tables use the closed forms; use the ladder command for eta != 1".into(),
        ));
    }
    let xi = default_xi_grid(config.talbot.xi_points);
    let selections: Vec<(Variant, Absorption)> = sel
        .ell
        .absorptions(&g)
        .into_iter()
        .map(|a| (sel.variant, a))
        .collect();
    let set = TalbotCoefficientSet::build(&g, &xi, config.talbot.jmax, &selections)?;
    let mut t = Table::new("talbot", table::TALBOT);
    for tab in &set.tables {
        for (x, row) in set.xi.iter().zip(&tab.rows) {
            for j in -(set.jmax as i64)..=set.jmax as i64 {
                let v = row.get(j);
                t.push(vec![
                    tab.variant.name().into(),
                    tab.absorption.label().into(),
                    Cell::Int(j),
                    (*x).into(),
                    v.re.into(),
                    v.im.into(),
                ]);
            }
        }
    }
    Ok(vec![t])
}

fn kdtli_base(config: &Config, grating: GratingParameters) -> Result<KdtliConfig, CliError> {
    let mut kd = KdtliConfig::new(
        config.interferometer.open_fraction,
        config.talbot_parameter()?,
        grating,
    )?;
    kd.shift_points = config.interferometer.shift_points;
    Ok(kd.validated()?)
}

/// Signal samples, Fourier components and visibilities of one near-field curve.
pub fn push_signal(
    signal_table: &mut Table,
    harmonics: &mut Table,
    label: &str,
    talbot_parameter: f64,
    signal: &mwdiff::nearfield::FringeSignal,
) {
    for (x, v) in signal.shifts.iter().zip(&signal.values) {
        signal_table.push(vec![
            label.into(),
            talbot_parameter.into(),
            (*x).into(),
            (*v).into(),
        ]);
    }
    let s0 = signal.component(0).norm();
    let last = (1..=signal.jmax as i64)
        .rev()
        .find(|&j| signal.component(j).norm() > 1e-12 * s0)
        .unwrap_or(0);
    for j in 0..=last {
        let c = signal.component(j);
        let ratio = if s0 > 0.0 { c.norm() / s0 } else { 0.0 };
        harmonics.push(vec![
            label.into(),
            Cell::Int(j),
            c.re.into(),
            c.im.into(),
            ratio.into(),
        ]);
    }
}

pub fn kdtli(config: &Config, sel: Selection) -> Result<Vec<Table>, CliError> {
    let g = config.grating()?;
    let base = kdtli_base(config, g)?;
    let tau = base.talbot_parameter;
    let mut signal = Table::new("kdtli_signal", table::SIGNAL);
    let mut harmonics = Table::new("kdtli_harmonics", table::HARMONICS);
    let mut vis = Table::new("kdtli_visibility", table::VISIBILITY);
    let ifm = &config.interferometer;
    for absorption in sel.ell.absorptions(&g) {
        let label = curve_label(sel.variant, absorption);
        let kd = base
            .clone()
            .with_source(coefficient_source(&g, sel.variant, absorption)?);
        let s = velocity_averaged_signal(&kd, ifm.velocity_spread, ifm.velocity_nodes)?;
        push_signal(&mut signal, &mut harmonics, &label, tau, &s);
        vis.push(vec![
            label.as_str().into(),
            tau.into(),
            g.n0.into(),
            s.sinusoidal_visibility()?.into(),
        ]);
        for t in scan_grid(ifm.scan_min, ifm.scan_max, ifm.scan_points) {
            let v = velocity_averaged_signal(
                &kd.clone().with_talbot_parameter(t)?,
                ifm.velocity_spread,
                ifm.velocity_nodes,
            )?
            .sinusoidal_visibility()?;
            vis.push(vec![label.as_str().into(), t.into(), g.n0.into(), v.into()]);
        }
    }
    Ok(vec![signal, harmonics, vis])
}

/// `points` values from `lo` to `hi` inclusive.
pub fn scan_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn farfield_config(
    config: &Config,
    grating: GratingParameters,
    variant: Variant,
) -> Result<FarFieldConfig, CliError> {
    let ff = &config.farfield;
    let mut c = FarFieldConfig::new(
        ff.collimator_ratio,
        ff.fraunhofer_ratio,
        grating,
        screen_grid(ff.screen_half_width, ff.screen_points),
    )?;
    c.detector_sigma = ff.detector_sigma;
    c.detector = ff.detector.kernel();
    c.variant = variant;
    Ok(c.validated()?)
}

/// Raw and detector-smoothed screen density rows for one curve.
pub fn push_farfield(
    t: &mut Table,
    label: &str,
    cfg: &FarFieldConfig,
    method: FarFieldMethod,
    absorption: Absorption,
) -> Result<(), CliError> {
    let raw = match method {
        FarFieldMethod::Series => farfield_density(cfg, absorption)?,
        FarFieldMethod::Kirchhoff => farfield_kirchhoff(cfg, absorption)?,
        FarFieldMethod::Fraunhofer => fraunhofer_density(cfg, absorption)?,
    };
    for w in &raw.warnings {
        eprintln!("warning: {w}");
    }
    let smooth = apply_detector_resolution(&raw, cfg.detector_sigma, cfg.detector)?;
    for ((x, r), s) in raw.positions.iter().zip(&raw.values).zip(&smooth.values) {
        t.push(vec![label.into(), (*x).into(), (*r).into(), (*s).into()]);
    }
    Ok(())
}

pub fn farfield(config: &Config, sel: Selection) -> Result<Vec<Table>, CliError> {
    let g = config.grating()?;
    if !g.is_uniform() {
        return Err(CliError::Config(
            "far-field densities need eta_p = eta_a = 1".into(),
        ));
    }
    let cfg = farfield_config(config, g, sel.variant)?;
    let mut t = Table::new("farfield", table::FARFIELD);
    for absorption in sel.ell.absorptions(&g) {
        let label = curve_label(sel.variant, absorption);
        push_farfield(&mut t, &label, &cfg, config.farfield.method, absorption)?;
    }
    Ok(vec![t])
}

pub fn ladder(config: &Config, sel: Selection) -> Result<Vec<Table>, CliError> {
    let g = config.grating()?;
    let ld = &config.ladder;
    let lc = LadderConfig::new(g, ld.envelope.envelope())?;
    let model: Box<dyn KernelModel> = match ld.method {
        LadderMethod::Ode => Box::new(LadderOde { config: lc }),
        LadderMethod::Analytic => Box::new(LadderAnalytic::new(&lc)?),
        LadderMethod::FirstAbsorption => Box::new(LadderFirstAbsorption {
            grating: g,
            ladder_max: lc.ladder_max,
            panels: 8,
        }),
    };
    let kernel = TwoPointKernel::sample(model.as_ref(), &ld.xi, ld.points)?;
    let mut t = Table::new("ladder_kernel", table::KERNEL);
    let channels: Vec<(String, Vec<usize>)> = match sel.ell {
        EllSelection::One(l) => {
            if l as usize >= kernel.channels {
                return Err(CliError::Config(format!(
                    "ell = {l} exceeds the ladder cutoff {}",
                    kernel.channels - 1
                )));
            }
            vec![(l.to_string(), vec![l as usize])]
        }
        EllSelection::All => (0..kernel.channels)
            .map(|c| (c.to_string(), vec![c]))
            .collect(),
        EllSelection::Sum => vec![("sum".into(), (0..kernel.channels).collect())],
    };
    for (label, chs) in &channels {
        for (k, xi) in kernel.xi.iter().enumerate() {
            for i in 0..kernel.points {
                let v: mwdiff::C64 = chs.iter().map(|&c| kernel.get(c, k, i)).sum();
                let x = i as f64 / kernel.points as f64;
                t.push(vec![
                    label.as_str().into(),
                    (*xi).into(),
                    x.into(),
                    v.re.into(),
                    v.im.into(),
                ]);
            }
        }
    }
    let mut p = Table::new("ladder_diagnostics", table::PARAMETERS);
    p.push(vec![
        "ladder_max".into(),
        (lc.ladder_max as f64).into(),
        "1".into(),
    ]);
    p.push(vec![
        "hermiticity_error".into(),
        kernel.hermiticity_error().into(),
        "1".into(),
    ]);
    if let Some(d) = kernel.trace_defect() {
        p.push(vec!["trace_defect".into(), d.into(), "1".into()]);
    }
    Ok(vec![t, p])
}

pub fn rabi_config(config: &Config) -> Result<RabiConfig, CliError> {
    let r = &config.rabi;
    Ok(RabiConfig::new(
        r.pulse_area_rad,
        r.detuning_rad,
        r.lifetime_ratio,
    )?)
}

pub fn rabi(config: &Config) -> Result<Vec<Table>, CliError> {
    let rc = rabi_config(config)?;
    let solved = rabi_solve(&rc, &[0.0], config.rabi.points)?;
    let mut t = Table::new("rabi_transmission", table::TRANSMISSION);
    for (x, p) in solved.positions.iter().zip(&solved.populations) {
        t.push(vec![
            "rabi".into(),
            (*x).into(),
            p[0].into(),
            p[1].into(),
            p[2].into(),
        ]);
    }
    let mut out = vec![t];
    if config.rabi.kdtli {
        let kd = kdtli_base(config, GratingParameters::new(0.0, 0.0)?)?;
        let s = rabi_kdtli(&rc, &kd)?;
        let mut signal = Table::new("rabi_signal", table::SIGNAL);
        let mut harmonics = Table::new("rabi_harmonics", table::HARMONICS);
        push_signal(&mut signal, &mut harmonics, "rabi", kd.talbot_parameter, &s);
        out.push(signal);
        out.push(harmonics);
    }
    Ok(out)
}
