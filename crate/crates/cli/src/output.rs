//! JSON and CSV writers. Every float is printed with 17 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

pub const SCHEMA: &str = "shiftcover/v1";

/// Compact JSON with `{:.16e}` floats, which round-trip every `f64`.
struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Artifact envelope: schema tag, artifact kind, then the body's fields.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema: &'static str,
    pub kind: &'static str,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn artifact_json<T: Serialize>(kind: &'static str, body: &T) -> serde_json::Result<Vec<u8>> {
    to_json(&Envelope {
        schema: SCHEMA,
        kind,
        body,
    })
}

/// CSV with a header row; each row is already formatted.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, -7.25e12, 0.0] {
            let bytes = to_json(&x).unwrap();
            let back: f64 = serde_json::from_slice(&bytes).unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn envelope_shape() {
        #[derive(Serialize)]
        struct B {
            x: u32,
        }
        let v: serde_json::Value = serde_json::from_slice(&artifact_json("demo", &B { x: 3 }).unwrap()).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["kind"], "demo");
        assert_eq!(v["x"], 3);
    }
}
