//! Plain CSV emission with shortest round-trip numbers.

use std::fmt::Write;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        // Debug switches to exponent notation for very large or small magnitudes
        format!("{x:?}")
    }
}

pub struct CsvWriter {
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            if c.contains([',', '"', '\n']) {
                let _ = write!(self.buf, "\"{}\"", c.replace('"', "\"\""));
            } else {
                self.buf.push_str(c);
            }
        }
        self.buf.push('\n');
    }

    pub fn numbers(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| num(*v)).collect();
        self.row(&cells);
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5, 0.0, 5e-324] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1e-20), "1e-20");
    }

    #[test]
    fn quoting() {
        let mut w = CsvWriter::new(&["name", "pass"]);
        w.row(&["a,b".into(), "true".into()]);
        assert_eq!(w.finish(), "name,pass\n\"a,b\",true\n");
    }
}
