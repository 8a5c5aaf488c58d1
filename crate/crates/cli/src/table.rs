//! Tabular outputs, their CSV/JSON encodings and the schema parser.

use std::fmt::Write as _;

use serde::Serialize;

/// Column type in a schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Text,
}

/// Named column layout of one output table kind.
#[derive(Debug, Clone, Copy)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [(&'static str, Kind)],
}

use Kind::{Float as F, Int as I, Text as T};

pub const PARAMETERS: Schema = Schema {
    name: "parameters",
    columns: &[("name", T), ("value", F), ("unit", T)],
};
pub const TALBOT: Schema = Schema {
    name: "talbot",
    columns: &[
        ("variant", T),
        ("ell", T),
        ("j", I),
        ("xi", F),
        ("re", F),
        ("im", F),
    ],
};
pub const SIGNAL: Schema = Schema {
    name: "signal",
    columns: &[
        ("curve", T),
        ("talbot_parameter", F),
        ("x_shift", F),
        ("signal", F),
    ],
};
pub const VISIBILITY: Schema = Schema {
    name: "visibility",
    columns: &[
        ("curve", T),
        ("talbot_parameter", F),
        ("n0", F),
        ("v_sin", F),
    ],
};
pub const HARMONICS: Schema = Schema {
    name: "harmonics",
    columns: &[("curve", T), ("j", I), ("re", F), ("im", F), ("ratio", F)],
};
pub const FARFIELD: Schema = Schema {
    name: "farfield",
    columns: &[("curve", T), ("x", F), ("density", F), ("smoothed", F)],
};
pub const KERNEL: Schema = Schema {
    name: "kernel",
    columns: &[("ell", T), ("xi", F), ("x", F), ("re", F), ("im", F)],
};
pub const TRANSMISSION: Schema = Schema {
    name: "transmission",
    columns: &[("curve", T), ("x", F), ("p0", F), ("p1", F), ("p2", F)],
};
pub const SWEEP: Schema = Schema {
    name: "sweep",
    columns: &[("point", I), ("key", T), ("value", F)],
};

pub const SCHEMAS: &[Schema] = &[
    PARAMETERS,
    TALBOT,
    SIGNAL,
    VISIBILITY,
    HARMONICS,
    FARFIELD,
    KERNEL,
    TRANSMISSION,
    SWEEP,
];

pub fn schema(name: &str) -> Option<Schema> {
    SCHEMAS.iter().copied().find(|s| s.name == name)
}

/// One cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// An output table: file stem, schema and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub stem: String,
    pub schema: Schema,
    pub rows: Vec<Vec<Cell>>,
}

impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Table {
    pub fn new(stem: impl Into<String>, schema: Schema) -> Self {
        Self {
            stem: stem.into(),
            schema,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.schema.columns.len());
        self.rows.push(row);
    }

    /// CSV text with `# key: value` metadata lines above the header.
    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "# schema: {}", self.schema.name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.schema.columns.iter().map(|c| c.0))
            .expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(format_cell))
                .expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory write");
        out.push_str(std::str::from_utf8(&body).expect("cells are UTF-8"));
        out
    }

    pub fn to_json(&self, meta: &[(String, String)]) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema: &'a str,
            meta: std::collections::BTreeMap<&'a str, &'a str>,
            columns: Vec<&'a str>,
            rows: &'a [Vec<Cell>],
        }
        let doc = Doc {
            schema: self.schema.name,
            meta: meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
            columns: self.schema.columns.iter().map(|c| c.0).collect(),
            rows: &self.rows,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

/// Fixed-width float formatting keeps outputs byte-stable.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        "0.000000000000e0".into()
    } else {
        format!("{v:.12e}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Text(s) => s.clone(),
    }
}

/// A CSV file read back through its schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub meta: Vec<(String, String)>,
    pub schema: Schema,
    pub rows: Vec<Vec<Cell>>,
}

/// Parses CSV text produced by [`Table::to_csv`], checking it against its schema.
pub fn parse_csv(text: &str) -> Result<ParsedTable, String> {
    let mut meta = Vec::new();
    let mut body = text;
    while let Some(rest) = body.strip_prefix("# ") {
        let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| format!("bad metadata line '# {line}'"))?;
        meta.push((k.to_string(), v.to_string()));
        body = tail;
    }
    let name = meta
        .iter()
        .find(|(k, _)| k == "schema")
        .map(|(_, v)| v.clone())
        .ok_or("missing schema metadata")?;
    let schema = schema(&name).ok_or_else(|| format!("unknown schema '{name}'"))?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?;
    let expected: Vec<&str> = schema.columns.iter().map(|c| c.0).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(format!("header {header:?} does not match schema {name}"));
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("row {n}: {e}"))?;
        let row = record
            .iter()
            .zip(schema.columns)
            .map(|(f, (col, kind))| match kind {
                Kind::Int => f
                    .parse()
                    .map(Cell::Int)
                    .map_err(|_| format!("row {n}: {col} not an integer")),
                Kind::Float => f
                    .parse()
                    .map(Cell::Float)
                    .map_err(|_| format!("row {n}: {col} not a float")),
                Kind::Text => Ok(Cell::Text(f.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(ParsedTable { meta, schema, rows })
}
