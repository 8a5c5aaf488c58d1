//! Fixed parameter sets reproducing the published figure classes.

use std::f64::consts::PI;

use rayon::prelude::*;

use mwdiff::grating::absorption_probability;
use mwdiff::nearfield::{kdtli_signal, sinusoidal_visibility, KdtliConfig};
use mwdiff::params::GratingParameters;
use mwdiff::rabi::{populations, rabi_kdtli, RabiConfig};
use mwdiff::talbot::{Absorption, Variant};

use crate::commands::{coefficient_source, curve_label, push_farfield, push_signal, scan_grid};
use crate::config::{Config, FarFieldMethod};
use crate::error::CliError;
use crate::table::{self, Table};

/// Tables plus a standalone plot script.
pub struct FigureOutput {
    pub tables: Vec<Table>,
    pub script: String,
}

pub const FIGURES: [u32; 5] = [1, 2, 4, 5, 6];

pub fn figure(id: u32) -> Result<FigureOutput, CliError> {
    match id {
        1 => figure1(),
        2 => figure2(),
        4 => figure4(),
        5 => figure5(),
        6 => figure6(),
        _ => Err(CliError::Config(format!(
            "no figure {id}; available: 1, 2, 4, 5, 6"
        ))),
    }
}

fn grating(phi0: f64, n0: f64) -> Result<GratingParameters, CliError> {
    Ok(GratingParameters::new(phi0, n0)?)
}

fn visibility_rows(
    t: &mut Table,
    label: &str,
    base: &KdtliConfig,
    taus: &[f64],
) -> Result<(), CliError> {
    let values = taus
        .par_iter()
        .map(|&tau| sinusoidal_visibility(&base.clone().with_talbot_parameter(tau)?))
        .collect::<mwdiff::Result<Vec<_>>>()?;
    for (tau, v) in taus.iter().zip(values) {
        t.push(vec![
            label.into(),
            (*tau).into(),
            base.grating.n0.into(),
            v.into(),
        ]);
    }
    Ok(())
}

fn figure1() -> Result<FigureOutput, CliError> {
    let f = 0.42;
    let taus = scan_grid(0.01, 3.0, 300);
    let mut t = Table::new("visibility", table::VISIBILITY);
    let curves = [
        ("a", 0.0, Variant::Quantum, Absorption::Unconditional),
        ("a", 1.0, Variant::Quantum, Absorption::Unconditional),
        ("a", 1.0, Variant::Classical, Absorption::Unconditional),
        ("b", 1.0, Variant::Quantum, Absorption::Conditional(0)),
        ("b", 1.0, Variant::Quantum, Absorption::Conditional(1)),
        ("b", 1.0, Variant::Quantum, Absorption::Conditional(2)),
    ];
    for (panel, n0, variant, absorption) in curves {
        let g = grating(PI, n0)?;
        let base =
            KdtliConfig::new(f, 1.0, g)?.with_source(coefficient_source(&g, variant, absorption)?);
        let label = format!("{panel} n0={n0} {}", curve_label(variant, absorption));
        visibility_rows(&mut t, &label, &base, &taus)?;
    }
    Ok(FigureOutput {
        tables: vec![t],
        script: plot_script(
            "visibility.csv",
            "talbot_parameter",
            "v_sin",
            "L/L_T",
            "sinusoidal visibility",
            "panel",
        ),
    })
}

fn figure2() -> Result<FigureOutput, CliError> {
    let f = 0.42;
    let g = grating(PI, 1.0)?;
    let mut signal = Table::new("signal", table::SIGNAL);
    let mut harmonics = Table::new("harmonics", table::HARMONICS);
    for tau in [3.25, 4.25] {
        for absorption in [
            Absorption::Conditional(0),
            Absorption::Conditional(1),
            Absorption::Conditional(2),
            Absorption::Unconditional,
        ] {
            let kd = KdtliConfig::new(f, tau, g)?.with_source(coefficient_source(
                &g,
                Variant::Quantum,
                absorption,
            )?);
            let s = kdtli_signal(&kd)?;
            let label = format!("tau={tau} {}", curve_label(Variant::Quantum, absorption));
            push_signal(&mut signal, &mut harmonics, &label, tau, &s);
        }
    }
    Ok(FigureOutput {
        tables: vec![signal, harmonics],
        script: plot_script(
            "signal.csv",
            "x_shift",
            "signal",
            "x_s/d",
            "transmitted fraction",
            "stack",
        ),
    })
}

fn figure4() -> Result<FigureOutput, CliError> {
    let config = Config::default();
    let mut t = Table::new("farfield", table::FARFIELD);
    let curves = [
        ("a", 0.0, Absorption::Unconditional),
        ("a", 2.0, Absorption::Unconditional),
        ("b", 0.0, Absorption::Unconditional),
        ("b", 10.0, Absorption::Unconditional),
        ("c", 2.0, Absorption::Conditional(0)),
        ("c", 2.0, Absorption::Conditional(1)),
        ("c", 2.0, Absorption::Conditional(2)),
        ("c", 2.0, Absorption::Unconditional),
    ];
    for (panel, n0, absorption) in curves {
        let cfg = crate::commands::farfield_config(&config, grating(2.5, n0)?, Variant::Quantum)?;
        let label = format!(
            "{panel} n0={n0} {}",
            curve_label(Variant::Quantum, absorption)
        );
        push_farfield(&mut t, &label, &cfg, FarFieldMethod::Series, absorption)?;
    }
    Ok(FigureOutput {
        tables: vec![t],
        script: plot_script("farfield.csv", "x", "smoothed", "x/dx", "density", "panel"),
    })
}

fn figure5() -> Result<FigureOutput, CliError> {
    let f = 0.42;
    let models = [
        ("eta=1", 1.0, 1.0),
        ("eta_a=1.5", 1.0, 1.5),
        ("eta_p=1.5", 1.5, 1.0),
    ];
    let mut t = Table::new("visibility", table::VISIBILITY);
    let taus = scan_grid(0.02, 3.0, 150);
    for (name, eta_p, eta_a) in models {
        let g = grating(1.25 * 1.5, 1.5)?.with_eta(eta_p, eta_a)?;
        let base = KdtliConfig::new(f, 1.0, g)?.with_source(coefficient_source(
            &g,
            Variant::Quantum,
            Absorption::Unconditional,
        )?);
        visibility_rows(&mut t, &format!("a {name}"), &base, &taus)?;
    }
    for (name, eta_p, eta_a) in models {
        let rows = scan_grid(0.0, 4.0, 41)
            .into_par_iter()
            .map(|n0| {
                let g = grating(1.25 * n0, n0)?.with_eta(eta_p, eta_a)?;
                let kd = KdtliConfig::new(f, 2.2, g)?.with_source(coefficient_source(
                    &g,
                    Variant::Quantum,
                    Absorption::Unconditional,
                )?);
                Ok((n0, sinusoidal_visibility(&kd)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        for (n0, v) in rows {
            t.push(vec![
                format!("b {name}").into(),
                2.2.into(),
                n0.into(),
                v.into(),
            ]);
        }
    }
    Ok(FigureOutput {
        tables: vec![t],
        script: plot_script_fig5(),
    })
}

fn figure6() -> Result<FigureOutput, CliError> {
    let mut trans = Table::new("transmission", table::TRANSMISSION);
    let cfg = RabiConfig::new(4.0 * PI, 0.0, 1.0)?;
    for (i, p) in rabi_populations(&cfg, 256)?.into_iter().enumerate() {
        let x = i as f64 / 256.0;
        trans.push(vec![
            "a rabi area=4pi".into(),
            x.into(),
            p[0].into(),
            p[1].into(),
            p[2].into(),
        ]);
    }
    let ladder = grating(0.0, 1.2)?;
    for i in 0..256 {
        let x = i as f64 / 256.0;
        let p0 = absorption_probability(x, 0, &ladder);
        trans.push(vec![
            "a ladder ell=0 n0=1.2".into(),
            x.into(),
            p0.into(),
            (1.0 - p0).into(),
            0.0.into(),
        ]);
    }
    let mut signal = Table::new("signal", table::SIGNAL);
    let mut harmonics = Table::new("harmonics", table::HARMONICS);
    let kd = KdtliConfig::new(0.1, 2.0, grating(0.0, 0.0)?)?;
    for (panel, k) in [("b", 1), ("c", 2), ("d", 3), ("e", 4)] {
        let rc = RabiConfig::new(2.0 * PI * k as f64, 0.0, 1.0)?;
        let s = rabi_kdtli(&rc, &kd)?;
        push_signal(
            &mut signal,
            &mut harmonics,
            &format!("{panel} area={}pi", 2 * k),
            2.0,
            &s,
        );
    }
    Ok(FigureOutput {
        tables: vec![trans, signal, harmonics],
        script: plot_script(
            "signal.csv",
            "x_shift",
            "signal",
            "x_s/d",
            "ground-state signal",
            "panel",
        ),
    })
}

fn rabi_populations(cfg: &RabiConfig, points: usize) -> Result<Vec<[f64; 3]>, CliError> {
    Ok((0..points)
        .into_par_iter()
        .map(|i| populations(cfg, i as f64 / points as f64))
        .collect::<mwdiff::Result<Vec<_>>>()?)
}

fn plot_script(file: &str, x: &str, y: &str, xlabel: &str, ylabel: &str, group: &str) -> String {
    format!(
        r##"import csv
import sys
from collections import OrderedDict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = csv.DictReader(line for line in open(here / "{file}") if not line.startswith("#"))
curves = OrderedDict()
for r in rows:
    curves.setdefault(r["curve"], ([], []))
    curves[r["curve"]][0].append(float(r["{x}"]))
    curves[r["curve"]][1].append(float(r["{y}"]))

groups = OrderedDict()
for name in curves:
    groups.setdefault(name.split(" ")[0], []).append(name)

fig, axes = plt.subplots(len(groups), 1, figsize=(6, 3 * len(groups)), squeeze=False)
for ax, (g, names) in zip(axes[:, 0], groups.items()):
    for name in names:
        ax.plot(*curves[name], label=name)
    ax.set_title("{group} " + g)
    ax.set_xlabel("{xlabel}")
    ax.set_ylabel("{ylabel}")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(here / (sys.argv[1] if len(sys.argv) > 1 else "figure.pdf"))
"##
    )
}

fn plot_script_fig5() -> String {
    r##"import csv
import sys
from collections import OrderedDict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = csv.DictReader(line for line in open(here / "visibility.csv") if not line.startswith("#"))
curves = OrderedDict()
for r in rows:
    panel = r["curve"].split(" ")[0]
    x = float(r["talbot_parameter"] if panel == "a" else r["n0"])
    curves.setdefault(r["curve"], ([], []))
    curves[r["curve"]][0].append(x)
    curves[r["curve"]][1].append(float(r["v_sin"]))

fig, (a, b) = plt.subplots(2, 1, figsize=(6, 6))
for name, (x, y) in curves.items():
    (a if name.startswith("a ") else b).plot(x, y, label=name)
a.set_xlabel("L/L_T")
b.set_xlabel("n0 (phi0 = 1.25 n0, L/L_T = 2.2)")
for ax in (a, b):
    ax.set_ylabel("sinusoidal visibility")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(here / (sys.argv[1] if len(sys.argv) > 1 else "figure.pdf"))
"##
    .to_string()
}
