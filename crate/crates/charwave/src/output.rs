//! CSV and JSON writers. Floats are always written with 17 significant
//! digits so that a rerun reproduces every file byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::CliError;

/// `1.2345678901234567e-3`; non-finite values as `inf`, `-inf`, `NaN`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with fixed-width float formatting; non-finite floats become
/// `null`.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats(PrettyFormatter::new()));
    // Serializing plain data into a Vec cannot fail.
    value.serialize(&mut ser).expect("report serialization");
    out.push(b'\n');
    out
}

/// Single-line variant, used inside CSV cells.
pub fn to_json_compact<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CompactFormatter);
    value.serialize(&mut ser).expect("compact serialization");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Column-oriented CSV table.
pub struct Table {
    header: Vec<String>,
    body: String,
}

pub enum Cell<'a> {
    F(f64),
    I(usize),
    S(&'a str),
    B(bool),
    Opt(Option<f64>),
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.header.len());
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                self.body.push(',');
            }
            match c {
                Cell::F(v) => self.body.push_str(&fmt_f64(*v)),
                Cell::I(v) => write!(self.body, "{v}").unwrap(),
                Cell::S(s) => self.body.push_str(s),
                Cell::B(b) => self.body.push_str(if *b { "true" } else { "false" }),
                Cell::Opt(Some(v)) => self.body.push_str(&fmt_f64(*v)),
                Cell::Opt(None) => {}
            }
        }
        self.body.push('\n');
    }

    pub fn floats(&mut self, values: &[f64]) {
        let cells: Vec<Cell> = values.iter().map(|&v| Cell::F(v)).collect();
        self.row(&cells);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = self.header.join(",");
        s.push('\n');
        s.push_str(&self.body);
        s.into_bytes()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let v: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn json_numbers_are_valid_and_nonfinite_is_null() {
        let bytes = to_json(&(0.1, f64::INFINITY, [1e-300, 3.0]));
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back[0].as_f64(), Some(0.1));
        assert!(back[1].is_null());
        assert_eq!(back[2][1].as_f64(), Some(3.0));
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.row(&[Cell::I(1), Cell::Opt(None), Cell::B(true)]);
        assert_eq!(t.to_bytes(), b"a,b,c\n1,,true\n");
    }
}
