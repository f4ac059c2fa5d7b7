//! CSV tables, JSON sidecars and gnuplot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    /// Floats carry 17 significant digits so they round-trip exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.header.iter().zip(row).map(|(h, c)| (h.to_string(), c.to_json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Everything a run emits.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub stem: String,
    pub table: Table,
    pub meta: Value,
    /// gnuplot script reading `<stem>.csv`.
    pub plot: String,
}

/// Writes the artifact into `dir`. The metadata sidecar is always written.
pub fn write_outputs(dir: &Path, artifact: &Artifact, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    let stem = &artifact.stem;
    if formats.contains(&Format::Csv) {
        put(format!("{stem}.csv"), artifact.table.to_csv()?)?;
    }
    if formats.contains(&Format::Json) {
        put(format!("{stem}.json"), pretty(&artifact.table.to_json()))?;
    }
    if formats.contains(&Format::Gnuplot) {
        put(format!("{stem}.gp"), artifact.plot.clone().into_bytes())?;
    }
    put(format!("{stem}.meta.json"), pretty(&artifact.meta))?;
    Ok(written)
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json values serialize");
    out.push(b'\n');
    out
}

/// Common header of the plotting scripts.
pub(crate) fn gnuplot_preamble(stem: &str, title: &str) -> String {
    format!(
        "# {title}\n# usage: gnuplot {stem}.gp\nset datafile separator ','\nset terminal pngcairo size 1000,600\nset output '{stem}.png'\nset key autotitle columnhead\nset grid\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23] {
            let s = Cell::Num(v).render();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(Cell::Empty.render(), "");
    }

    #[test]
    fn csv_quotes_text() {
        let t = Table { header: vec!["omega", "diagnostics"], rows: vec![vec![Cell::Num(0.5), Cell::Text("a, b".into())]] };
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "omega,diagnostics\n5.0000000000000000e-1,\"a, b\"\n");
    }
}
