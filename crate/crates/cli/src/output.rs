//! Deterministic JSON serialization.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

/// Compact formatter that prints every float with 17 significant digits.
/// Non-finite values never reach it; serde_json writes them as `null`.
struct FixedPrecision;

impl Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedPrecision);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = String::from_utf8(to_json_bytes(&vec![0.1, 190.0, -2.5e-10]).unwrap()).unwrap();
        assert_eq!(
            s.trim(),
            "[1.0000000000000001e-1,1.9000000000000000e2,-2.5000000000000002e-10]"
        );
    }

    #[test]
    fn values_parse_back_exactly() {
        let xs = vec![std::f64::consts::PI, 1e-300, 123456.789, f64::MIN_POSITIVE];
        let bytes = to_json_bytes(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, xs);
    }

    #[test]
    fn non_finite_is_null() {
        let s = String::from_utf8(to_json_bytes(&[f64::NAN, 1.0]).unwrap()).unwrap();
        assert!(s.starts_with("[null,"));
    }
}
