//! Deterministic serialization for reports: floats print with 17 significant
//! digits so identical runs produce byte-identical JSON and CSV.

use serde::Serialize;
use serde_json::ser::Formatter;

struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        write!(writer, "{}", fmt_float(value))
    }
}

/// One float, 17 significant digits, locale-free.
pub fn fmt_float(value: f64) -> String {
    if value.is_nan() {
        return "null".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "1e999".into() } else { "-1e999".into() };
    }
    if value == value.trunc() && value.abs() < 1e15 {
        return format!("{:.1}", value);
    }
    format!("{:.16e}", value)
}

/// Serialize any report to JSON text with fixed float formatting.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value.serialize(&mut ser).expect("report serialization cannot fail");
    String::from_utf8(out).expect("serialized JSON is utf-8")
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    // round-trip through Value to re-indent while keeping float text via
    // the custom formatter on the final pass
    let compact = to_json_string(value);
    let v: serde_json::Value = serde_json::from_str(&compact).expect("own JSON parses");
    let mut out = Vec::new();
    let pretty = serde_json::ser::PrettyFormatter::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Pretty17 { inner: pretty });
    v.serialize(&mut ser).expect("report serialization cannot fail");
    String::from_utf8(out).expect("serialized JSON is utf-8")
}

struct Pretty17<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl Formatter for Pretty17<'_> {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        write!(writer, "{}", fmt_float(value))
    }
    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Minimal CSV escaping: quote fields containing commas or quotes.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(3.0), "3.0");
        assert_eq!(fmt_float(f64::INFINITY), "1e999");
    }

    #[test]
    fn deterministic_json() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
        }
        let s = S { a: 1.0 / 3.0, b: vec![0.1, 2.0] };
        assert_eq!(to_json_string(&s), to_json_string(&S { a: 1.0 / 3.0, b: vec![0.1, 2.0] }));
        assert!(to_json_string(&s).contains("3.3333333333333331e-1"));
    }
}
