//! CSV output with a `#`-prefixed metadata header.

use std::io::Write;

use crate::spec::BenchSpec;
use crate::BenchError;

pub const BUILD_ID: &str = env!("MEMSVD_BUILD_ID");

/// A row type with a fixed column schema.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub(crate) fn float(x: f64) -> String {
    format!("{x:.6e}")
}

/// Writes the metadata comments, the header row and every record.
pub fn write_csv<R: CsvRow>(out: &mut impl Write, spec: &BenchSpec, rows: &[R]) -> Result<(), BenchError> {
    writeln!(out, "# memsvd bench {}", spec.mode)?;
    writeln!(out, "# config: {}", spec.describe())?;
    writeln!(out, "# seed: {}", spec.seed)?;
    writeln!(out, "# build: {BUILD_ID}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Pair(u32, f64);

    impl CsvRow for Pair {
        const HEADER: &'static [&'static str] = &["n", "x"];
        fn fields(&self) -> Vec<String> {
            vec![self.0.to_string(), float(self.1)]
        }
    }

    #[test]
    fn header_then_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &BenchSpec::default(), &[Pair(1, 0.5), Pair(2, 1.25)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[..4].iter().all(|l| l.starts_with('#')));
        assert!(lines[1].contains("n_c=10") && lines[2] == "# seed: 0");
        assert_eq!(&lines[4..], &["n,x", "1,5.000000e-1", "2,1.250000e0"]);
    }
}
