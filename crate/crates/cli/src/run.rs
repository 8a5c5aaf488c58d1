//! Argument parsing, sweep execution and artifact writing.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use mwdiff::talbot::Variant;

use crate::commands::{self, EllSelection, Selection};
use crate::config::{set_key, sweep_points, Config, SweepAxis};
use crate::error::CliError;
use crate::figures;
use crate::table::{self, Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Quantum,
    Classical,
}

#[derive(Debug, Parser)]
#[command(
    name = "mwdiff",
    version,
    about = "Matter-wave diffraction at absorptive light gratings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "MWDIFF_OUT", default_value = "mwdiff-out")]
    pub out: PathBuf,

    /// Parameter sweep `section.key=start:stop:count`; repeat for a grid.
    #[arg(long, global = true, value_parser = parse_sweep)]
    pub sweep: Vec<SweepAxis>,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,

    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[arg(long, global = true, value_enum, default_value = "quantum")]
    pub variant: VariantArg,

    /// Absorption channel: a photon number, `all`, or `sum`.
    #[arg(long, global = true, default_value = "sum", value_parser = parse_ell)]
    pub ell: EllSelection,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Grating and interferometer parameters from physical inputs.
    DeriveParams,
    /// Talbot coefficient tables.
    Talbot,
    /// Near-field fringe signal and visibility.
    Kdtli,
    /// Far-field screen density.
    Farfield,
    /// Photon-absorption ladder kernels.
    Ladder,
    /// Three-level Rabi model.
    Rabi,
    /// Reproduce a figure class (1, 2, 4, 5 or 6).
    Figure { id: u32 },
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::DeriveParams => "derive-params".into(),
            Command::Talbot => "talbot".into(),
            Command::Kdtli => "kdtli".into(),
            Command::Farfield => "farfield".into(),
            Command::Ladder => "ladder".into(),
            Command::Rabi => "rabi".into(),
            Command::Figure { id } => format!("figure {id}"),
        }
    }
}

fn parse_sweep(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_ell(s: &str) -> Result<EllSelection, String> {
    s.parse()
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    schema: String,
    rows: usize,
}

#[derive(Serialize)]
struct ManifestPoint {
    index: usize,
    values: Vec<(String, f64)>,
    parameters: serde_json::Value,
}

#[derive(Serialize)]
struct Manifest {
    version: &'static str,
    command: String,
    format: Format,
    variant: String,
    ell: String,
    points: Vec<ManifestPoint>,
    files: Vec<ManifestFile>,
}

struct PointResult {
    values: Vec<(String, f64)>,
    config: Config,
    tables: Vec<Table>,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cli.jobs)))?;
    pool.install(|| match cli.command {
        Command::Figure { id } => run_figure(cli, id),
        _ => run_command(cli),
    })
}

fn load_raw(cli: &Cli) -> Result<toml::Value, CliError> {
    match &cli.config {
        None => Ok(toml::Value::Table(Default::default())),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", path.display()),
                ))
            })?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

fn selection(cli: &Cli) -> Selection {
    Selection {
        variant: match cli.variant {
            VariantArg::Quantum => Variant::Quantum,
            VariantArg::Classical => Variant::Classical,
        },
        ell: cli.ell,
    }
}

fn execute(command: &Command, config: &Config, sel: Selection) -> Result<Vec<Table>, CliError> {
    match command {
        Command::DeriveParams => commands::derive_params(config),
        Command::Talbot => commands::talbot(config, sel),
        Command::Kdtli => commands::kdtli(config, sel),
        Command::Farfield => commands::farfield(config, sel),
        Command::Ladder => commands::ladder(config, sel),
        Command::Rabi => commands::rabi(config),
        Command::Figure { .. } => unreachable!("figures are dispatched separately"),
    }
}

fn run_command(cli: &Cli) -> Result<(), CliError> {
    let raw = load_raw(cli)?;
    let sel = selection(cli);
    let points = sweep_points(&cli.sweep);
    // parse every point before computing so configuration errors surface first
    let configs = points
        .iter()
        .map(|p| {
            let mut v = raw.clone();
            for (k, x) in p {
                set_key(&mut v, k, *x)?;
            }
            Config::from_toml_value(v)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results = points
        .into_par_iter()
        .zip(configs)
        .map(|(values, config)| {
            let tables = execute(&cli.command, &config, sel)?;
            Ok(PointResult {
                values,
                config,
                tables,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_outputs(cli, &results, None)
}

fn run_figure(cli: &Cli, id: u32) -> Result<(), CliError> {
    if !cli.sweep.is_empty() {
        return Err(CliError::Config("figure commands take no sweeps".into()));
    }
    if cli.config.is_some() {
        return Err(CliError::Config(
            "figure commands use fixed parameter sets and take no configuration".into(),
        ));
    }
    let out = figures::figure(id)?;
    let result = PointResult {
        values: Vec::new(),
        config: Config::default(),
        tables: out.tables,
    };
    write_outputs(cli, &[result], Some(out.script))
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| {
        CliError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn write_outputs(
    cli: &Cli,
    results: &[PointResult],
    script: Option<String>,
) -> Result<(), CliError> {
    let dir = &cli.out;
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", dir.display()),
        ))
    })?;
    let is_figure = matches!(cli.command, Command::Figure { .. });
    let swept = results.len() > 1 || !cli.sweep.is_empty();
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let sel = selection(cli);
    let mut files = Vec::new();
    let mut points = Vec::new();
    for (idx, r) in results.iter().enumerate() {
        let parameters = if is_figure {
            serde_json::Value::Null
        } else {
            serde_json::to_value(&r.config).expect("configuration serializes")
        };
        let mut meta = vec![
            ("version".to_string(), VERSION.to_string()),
            ("command".to_string(), cli.command.name()),
        ];
        if !is_figure {
            meta.push(("variant".into(), sel.variant.name().into()));
            meta.push(("ell".into(), sel.ell.label()));
            meta.push(("parameters".into(), parameters.to_string()));
        }
        if swept {
            meta.push(("point".into(), idx.to_string()));
        }
        for t in &r.tables {
            let name = if swept {
                format!("{}_p{idx:03}.{ext}", t.stem)
            } else {
                format!("{}.{ext}", t.stem)
            };
            let body = match cli.format {
                Format::Csv => t.to_csv(&meta),
                Format::Json => t.to_json(&meta),
            };
            write_file(dir, &name, &body)?;
            files.push(ManifestFile {
                path: name,
                schema: t.schema.name.into(),
                rows: t.rows.len(),
            });
        }
        points.push(ManifestPoint {
            index: idx,
            values: r.values.clone(),
            parameters,
        });
    }
    if swept {
        let mut t = Table::new("sweep", table::SWEEP);
        for (idx, r) in results.iter().enumerate() {
            for (k, v) in &r.values {
                t.push(vec![Cell::Int(idx as i64), k.as_str().into(), (*v).into()]);
            }
        }
        let meta = vec![
            ("version".to_string(), VERSION.to_string()),
            ("command".to_string(), cli.command.name()),
        ];
        let name = format!("sweep.{ext}");
        let body = match cli.format {
            Format::Csv => t.to_csv(&meta),
            Format::Json => t.to_json(&meta),
        };
        write_file(dir, &name, &body)?;
        files.push(ManifestFile {
            path: name,
            schema: "sweep".into(),
            rows: t.rows.len(),
        });
    }
    if let Some(s) = script {
        write_file(dir, "plot.py", &s)?;
        files.push(ManifestFile {
            path: "plot.py".into(),
            schema: "script".into(),
            rows: 0,
        });
    }
    let manifest = Manifest {
        version: VERSION,
        command: cli.command.name(),
        format: cli.format,
        variant: sel.variant.name().into(),
        ell: sel.ell.label(),
        points,
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(dir, "manifest.json", &text)
}
