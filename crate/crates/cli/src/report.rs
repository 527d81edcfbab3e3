//! Reports rendered as JSON, CSV or `key: value` text.

use deductive_rd::format::{round12, sig12};
use deductive_rd::rates::Rate;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// A rate; text output adds the unit.
    Bits(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Facts(Vec<String>),
    Nums(Vec<f64>),
    Null,
}

impl Cell {
    pub fn rate(r: Rate) -> Cell {
        Cell::Bits(r.bits())
    }

    pub fn facts<T: ToString>(facts: &[T]) -> Cell {
        Cell::Facts(facts.iter().map(ToString::to_string).collect())
    }

    pub fn opt_depth(d: Option<usize>) -> Cell {
        match d {
            Some(d) => Cell::Int(d as u64),
            None => Cell::Text("inf".into()),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) | Cell::Bits(x) => float_json(*x),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Facts(v) => Value::from(v.clone()),
            Cell::Nums(v) => Value::Array(v.iter().map(|x| float_json(*x)).collect()),
            Cell::Null => Value::Null,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) | Cell::Bits(x) => sig12(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Facts(v) => v.join(" "),
            Cell::Nums(v) => v.iter().map(|x| sig12(*x)).collect::<Vec<_>>().join(" "),
            Cell::Null => String::new(),
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Bits(x) if x.is_finite() => format!("{} bits", sig12(*x)),
            Cell::Facts(v) => format!("{{{}}}", v.join(", ")),
            Cell::Nums(v) => format!(
                "[{}]",
                v.iter().map(|x| sig12(*x)).collect::<Vec<_>>().join(", ")
            ),
            other => other.csv(),
        }
    }
}

fn float_json(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
    } else {
        Value::from(sig12(x))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub fields: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, key: &str, value: Cell) -> Self {
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn push(&mut self, key: &str, value: Cell) {
        self.fields.push((key.to_string(), value));
    }

    pub fn table(mut self, columns: &[&str], rows: Vec<Vec<Cell>>) -> Self {
        self.columns = columns.iter().map(|c| c.to_string()).collect();
        self.rows = rows;
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    /// Fields as keys; the table, if any, under `rows`.
    pub fn to_json(&self) -> String {
        let mut map = Map::new();
        for (k, v) in &self.fields {
            map.insert(k.clone(), v.json());
        }
        if !self.columns.is_empty() {
            let rows = self
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(r.iter().map(Cell::json))
                            .collect(),
                    )
                })
                .collect();
            map.insert("rows".into(), Value::Array(rows));
        }
        let mut out = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable");
        out.push('\n');
        out
    }

    /// The table when there is one, otherwise `key,value` rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.columns.is_empty() {
            w.write_record(["key", "value"]).expect("write to memory");
            for (k, v) in &self.fields {
                w.write_record([k.clone(), v.csv()])
                    .expect("write to memory");
            }
        } else {
            w.write_record(&self.columns).expect("write to memory");
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::csv))
                    .expect("write to memory");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            out.push_str(&format!("{k}: {}\n", v.text()));
        }
        if !self.columns.is_empty() {
            out.push_str(&self.columns.join("\t"));
            out.push('\n');
            for r in &self.rows {
                out.push_str(&r.iter().map(Cell::text).collect::<Vec<_>>().join("\t"));
                out.push('\n');
            }
        }
        out
    }
}
