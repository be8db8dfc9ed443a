//! Result tables and their CSV / JSON renderings.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a CSV
//! cell parses back to the exact value stored in the JSON summary. Infinite
//! values are `inf` / `-inf` in CSV and `null` in JSON.

use serde_json::{json, Map, Value};

use reset_ldp_core::rare_event::EstimateResult;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }

    pub fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(runtime)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).map_err(runtime)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
        String::from_utf8(bytes).map_err(runtime)
    }

    /// Rows as JSON objects keyed by column name.
    pub fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub const ESTIMATE_COLUMNS: [&str; 14] = [
    "method",
    "T",
    "epsilon",
    "lambda",
    "kernel",
    "n_replicas",
    "estimate",
    "ci_low",
    "ci_high",
    "empirical_rate",
    "rate_lo",
    "rate_hi",
    "ess",
    "seed",
];

pub fn estimate_row(r: &EstimateResult) -> Vec<Cell> {
    vec![
        Cell::text(r.method.to_string()),
        Cell::Num(r.t),
        Cell::Num(r.epsilon),
        Cell::Num(r.lambda),
        Cell::text(&r.kernel),
        Cell::Int(r.n_replicas),
        Cell::Num(r.estimate),
        Cell::Num(r.ci_low),
        Cell::Num(r.ci_high),
        Cell::Num(r.empirical_rate),
        Cell::Num(r.rate_lo),
        Cell::Num(r.rate_hi),
        Cell::opt(r.ess),
        Cell::Int(r.seed),
    ]
}

/// The summary row of a rate curve: the predicted `I(f)` in every rate column.
pub fn predicted_row(predicted: f64, epsilon: f64, lambda: f64, kernel: &str, seed: u64) -> Vec<Cell> {
    vec![
        Cell::text("predicted"),
        Cell::Empty,
        Cell::Num(epsilon),
        Cell::Num(lambda),
        Cell::text(kernel),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Num(predicted),
        Cell::Num(predicted),
        Cell::Num(predicted),
        Cell::Empty,
        Cell::Int(seed),
    ]
}

/// Diagnostics of an estimate that do not fit the CSV schema.
pub fn estimate_diagnostics(r: &EstimateResult) -> Value {
    json!({
        "T": r.t,
        "is_mode": r.is_mode,
        "hits": r.hits,
        "rate_is_lower_bound": r.rate_is_lower_bound,
        "unreliable": r.unreliable,
    })
}

/// Parses a CSV cell back into the JSON value it was rendered from.
pub fn csv_cell_to_json(cell: &str) -> Value {
    if cell.is_empty() || cell == "inf" || cell == "-inf" || cell == "nan" {
        return Value::Null;
    }
    if let Ok(n) = cell.parse::<u64>() {
        return json!(n);
    }
    if let Ok(x) = cell.parse::<f64>() {
        return json!(x);
    }
    match cell {
        "true" => json!(true),
        "false" => json!(false),
        _ => json!(cell),
    }
}
