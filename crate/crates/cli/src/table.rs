//! Machine-readable output tables. Column and row order are deterministic;
//! CSV applies presentation rounding per cell, JSON carries full precision.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::plan::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    /// `decimals` controls CSV presentation; JSON always emits the raw
    /// value.
    Float {
        value: f64,
        decimals: Option<u8>,
    },
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn rounded(value: f64, decimals: u8) -> Self {
        Cell::Float {
            value,
            decimals: Some(decimals),
        }
    }

    pub fn full(value: f64) -> Self {
        Cell::Float {
            value,
            decimals: None,
        }
    }

    /// Integer cell when the value is a whole number, fixed-point otherwise.
    /// Used for counts that become fractional under fractional counting.
    pub fn count(value: f64, decimals: u8) -> Self {
        if value.fract() == 0.0 && value.abs() < 9e15 {
            Cell::Int(value as i64)
        } else {
            Cell::rounded(value, decimals)
        }
    }

    fn to_csv_field(&self) -> String {
        match self {
            Cell::Text(s) => csv_escape(s),
            Cell::Int(v) => v.to_string(),
            Cell::Float { value, decimals } => match decimals {
                Some(d) => format!("{value:.prec$}", prec = *d as usize),
                None => format!("{value}"),
            },
            Cell::Bool(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json_value(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(v) => json!(v),
            Cell::Float { value, .. } => json!(value),
            Cell::Bool(v) => json!(v),
            Cell::Empty => Value::Null,
        }
    }
}

fn csv_escape(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// One emitted table: ordered columns, rows of scalar cells, and footnote
/// lines for warnings such as tie inflation or entity overlap.
#[derive(Debug, Clone, Default)]
pub struct OutputTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub footnotes: Vec<String>,
}

impl OutputTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            footnotes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn push_footnote(&mut self, note: impl Into<String>) {
        self.footnotes.push(note.into());
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::to_csv_field).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        for note in &self.footnotes {
            let _ = writeln!(out, "# {note}");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| (c.clone(), cell.to_json_value()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({
            "table": self.name,
            "rows": rows,
            "footnotes": self.footnotes,
        })
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => {
                let mut s =
                    serde_json::to_string_pretty(&self.to_json()).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

/// Renders several tables into one stream: CSV separates them with a name
/// comment, JSON emits an array.
pub fn render_tables(tables: &[OutputTable], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            for (i, table) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                if tables.len() > 1 {
                    let _ = writeln!(out, "# table: {}", table.name);
                }
                out.push_str(&table.to_csv());
            }
            out
        }
        OutputFormat::Json => {
            let values: Vec<Value> = tables.iter().map(OutputTable::to_json).collect();
            let body = if values.len() == 1 {
                serde_json::to_string_pretty(&values[0])
            } else {
                serde_json::to_string_pretty(&Value::Array(values))
            };
            let mut s = body.expect("tables serialize");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rounds_only_at_presentation() {
        let mut t = OutputTable::new("t", &["entity", "pp", "z"]);
        t.push_row(vec![
            Cell::text("CN"),
            Cell::rounded(1.668_729, 2),
            Cell::rounded(2.059_8, 3),
        ]);
        t.push_footnote("note");
        let csv = t.to_csv();
        assert_eq!(csv, "entity,pp,z\nCN,1.67,2.060\n# note\n");

        let json = t.to_json();
        assert_eq!(json["rows"][0]["pp"], json!(1.668_729));
    }

    #[test]
    fn count_cells_keep_integers_integral() {
        assert_eq!(Cell::count(504_695.0, 2).to_csv_field(), "504695");
        assert_eq!(Cell::count(2.5, 2).to_csv_field(), "2.50");
    }

    #[test]
    fn text_with_commas_is_quoted() {
        assert_eq!(
            Cell::text("Business, Finance").to_csv_field(),
            "\"Business, Finance\""
        );
    }
}
