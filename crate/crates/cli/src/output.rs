//! CSV and JSON writers. Every file starts with the tool version, the unit
//! convention and the full parameter set.

use std::fmt::Write as _;

use qdcav_core::params::SystemParams;
use serde_json::{json, Map, Value};

use crate::args::{Format, Units};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(&'static str),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => number(*x),
            Cell::Text(s) => (*s).to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json_number(*x),
            Cell::Text(s) => Value::from(*s),
        }
    }
}

/// One result document: scalar summary entries plus an optional table.
#[derive(Debug, Clone)]
pub struct Document {
    pub command: &'static str,
    pub units: Units,
    pub params: Option<SystemParams>,
    pub summary: Vec<(&'static str, f64)>,
    pub notes: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Document {
    pub fn new(command: &'static str, units: Units, params: Option<SystemParams>) -> Self {
        Self { command, units, params, summary: Vec::new(), notes: Vec::new(), columns: Vec::new(), rows: Vec::new() }
    }

    pub fn scalar(mut self, key: &'static str, value: f64) -> Self {
        self.summary.push((key, value));
        self
    }

    pub fn has_table(&self) -> bool {
        !self.columns.is_empty()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# qdcav {VERSION} {}", self.command).unwrap();
        writeln!(out, "# units: {}", units_label(self.units)).unwrap();
        if let Some(p) = &self.params {
            writeln!(out, "# params: {}", params_line(p)).unwrap();
        }
        for note in &self.notes {
            writeln!(out, "# note: {note}").unwrap();
        }
        if self.has_table() {
            for (k, v) in &self.summary {
                writeln!(out, "# {k}={}", number(*v)).unwrap();
            }
            writeln!(out, "{}", self.columns.join(",")).unwrap();
            for row in &self.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(out, "{}", cells.join(",")).unwrap();
            }
        } else {
            writeln!(out, "quantity,value").unwrap();
            for (k, v) in &self.summary {
                writeln!(out, "{k},{}", number(*v)).unwrap();
            }
        }
        out
    }

    fn json(&self) -> String {
        let mut doc = Map::new();
        doc.insert("tool".into(), json!("qdcav"));
        doc.insert("version".into(), json!(VERSION));
        doc.insert("command".into(), json!(self.command));
        doc.insert("units".into(), json!(units_label(self.units)));
        if let Some(p) = &self.params {
            doc.insert("params".into(), params_json(p));
        }
        if !self.notes.is_empty() {
            doc.insert("notes".into(), json!(self.notes));
        }
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| ((*k).to_string(), json_number(*v))).collect();
        doc.insert("summary".into(), Value::Object(summary));
        if self.has_table() {
            doc.insert("columns".into(), json!(self.columns));
            let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
            doc.insert("rows".into(), Value::Array(rows));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialise");
        s.push('\n');
        s
    }
}

pub fn units_label(units: Units) -> &'static str {
    match units {
        Units::Uev => "ueV, hbar = 1, time in hbar/ueV",
        Units::G => "g, hbar = 1, time in tau_g = hbar/g",
    }
}

fn params_line(p: &SystemParams) -> String {
    format!(
        "omega_d={},omega_c={},g={},kappa={},gamma={},gamma_p={}",
        number(p.omega_d()),
        number(p.omega_c()),
        number(p.g()),
        number(p.kappa()),
        number(p.gamma()),
        number(p.gamma_p())
    )
}

fn params_json(p: &SystemParams) -> Value {
    // explicit order; serde_json::Map sorts keys anyway
    json!({
        "omega_d": p.omega_d(),
        "omega_c": p.omega_c(),
        "g": p.g(),
        "kappa": p.kappa(),
        "gamma": p.gamma(),
        "gamma_p": p.gamma_p(),
    })
}

/// 17 significant digits, enough to round-trip any f64.
pub fn number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}
