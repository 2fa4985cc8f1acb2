use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::args::TableFormat;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

macro_rules! cell_from {
    ($($t:ty => $v:ident via $conv:expr),* $(,)?) => {
        $(impl From<$t> for Cell {
            fn from(x: $t) -> Self {
                Cell::$v($conv(x))
            }
        })*
    };
}

cell_from! {
    i64 => Int via |x| x,
    u64 => Int via |x: u64| x as i64,
    usize => Int via |x: usize| x as i64,
    u32 => Int via |x: u32| x as i64,
    f64 => Float via |x| x,
    bool => Bool via |x| x,
    String => Text via |x| x,
    &str => Text via |x: &str| x.to_string(),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => (*v).into(),
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Text(s) => s.clone().into(),
            Cell::Bool(b) => (*b).into(),
        }
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::table::Cell::from($x)),*]
    };
}

/// A named table with a header row; written as CSV or JSON lines.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Table {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path, format: TableFormat) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        let ctx = || format!("writing {}", path.display());
        match format {
            TableFormat::Csv => {
                let mut w = csv::Writer::from_path(&path).with_context(ctx)?;
                w.write_record(&self.header).with_context(ctx)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::csv)).with_context(ctx)?;
                }
                w.flush().with_context(ctx)?;
            }
            TableFormat::Jsonl => {
                let mut w = BufWriter::new(File::create(&path).with_context(ctx)?);
                for r in &self.rows {
                    let fields: Vec<String> = self
                        .header
                        .iter()
                        .zip(r)
                        .map(|(k, v)| format!("{}:{}", serde_json::Value::from(k.as_str()), v.json()))
                        .collect();
                    writeln!(w, "{{{}}}", fields.join(",")).with_context(ctx)?;
                }
                w.flush().with_context(ctx)?;
            }
        }
        Ok(path)
    }
}
