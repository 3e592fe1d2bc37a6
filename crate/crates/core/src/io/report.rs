//! Command reports with a machine (JSON) and an aligned text rendering.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::model::QualityVector;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i64),
    Num(f64),
    Bool(bool),
    List(Vec<String>),
    Counts(Vec<u32>),
    Quality(QualityVector),
    Null,
}

impl Cell {
    pub fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => x.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::List(v) => v.join(","),
            Cell::Counts(v) => {
                let parts: Vec<String> = v.iter().map(u32::to_string).collect();
                format!("[{}]", parts.join(","))
            }
            Cell::Quality(q) => q.to_string(),
            Cell::Null => "-".into(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<QualityVector> for Cell {
    fn from(q: QualityVector) -> Self {
        Cell::Quality(q)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Str(v) => s.serialize_str(v),
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Num(v) => s.serialize_f64(*v),
            Cell::Bool(v) => s.serialize_bool(*v),
            Cell::List(v) => v.serialize(s),
            Cell::Counts(v) => v.serialize(s),
            Cell::Quality(q) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("w", &q.w)?;
                m.serialize_entry("counts", &q.counts)?;
                m.end()
            }
            Cell::Null => s.serialize_unit(),
        }
    }
}

/// Ordered key/value record; serialized as a JSON object in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record(pub Vec<(String, Cell)>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for Record {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Infeasible,
    Invalid,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Infeasible => 1,
            Status::Invalid | Status::Error => 2,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Infeasible => "infeasible",
            Status::Invalid => "invalid",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub summary: Record,
    pub entries: Vec<Record>,
}

/// Hex SHA-256 over the inputs, each length-prefixed so that boundaries count.
pub fn digest_inputs<'a>(inputs: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    pub fn new(command: &str, inputs_digest: String) -> Self {
        Self {
            command: command.to_string(),
            inputs_digest,
            status: Status::Ok,
            message: None,
            summary: Record::new(),
            entries: Vec::new(),
        }
    }

    pub fn machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "command: {}\ninputs: {}\nstatus: {}\n",
            self.command,
            self.inputs_digest,
            self.status.as_str()
        );
        if let Some(m) = &self.message {
            out.push_str(&format!("message: {m}\n"));
        }
        for (k, v) in &self.summary.0 {
            out.push_str(&format!("{k}: {}\n", v.text()));
        }
        if self.entries.is_empty() {
            if self.status == Status::Infeasible {
                out.push_str("no feasible system\n");
            }
            return out;
        }
        out.push('\n');
        out.push_str(&table(&self.entries));
        out
    }
}

fn table(rows: &[Record]) -> String {
    let header: Vec<String> = rows[0].0.iter().map(|(k, _)| k.clone()).collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.0.iter().map(|(_, v)| v.text()).collect())
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in row.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
        }
        format!("{}\n", s.trim_end())
    };
    let mut out = line(&header);
    for row in &cells {
        out.push_str(&line(row));
    }
    out
}
