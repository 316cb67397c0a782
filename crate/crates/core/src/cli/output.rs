//! CSV formatting and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::linalg::{CMatrix, RMatrix};

/// 17 significant digits, '.' decimal separator, round-trips every f64.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(values: impl Iterator<Item = String>) -> String {
    values.collect::<Vec<_>>().join(",")
}

/// Header `time,p_1,…,p_N` followed by one row per (time, distribution).
pub fn probability_table<'a>(rows: impl Iterator<Item = (f64, &'a [f64])>, n: usize) -> String {
    let mut out = String::from("time");
    for i in 1..=n {
        out.push_str(&format!(",p_{i}"));
    }
    out.push('\n');
    for (t, p) in rows {
        out.push_str(&fmt_value(t));
        for &x in p {
            out.push(',');
            out.push_str(&fmt_value(x));
        }
        out.push('\n');
    }
    out
}

/// Real matrix; header `c1,…,cD`, one line per row.
pub fn real_matrix(m: &RMatrix) -> String {
    let mut out = join((1..=m.ncols()).map(|c| format!("c{c}")));
    out.push('\n');
    for r in m.row_iter() {
        out.push_str(&join(r.iter().map(|&x| fmt_value(x))));
        out.push('\n');
    }
    out
}

/// Complex matrix as parallel real/imaginary columns; header `c1_re,c1_im,…`.
pub fn complex_matrix(m: &CMatrix) -> String {
    let mut out = join((1..=m.ncols()).map(|c| format!("c{c}_re,c{c}_im")));
    out.push('\n');
    for r in m.row_iter() {
        out.push_str(&join(r.iter().map(|z| format!("{},{}", fmt_value(z.re), fmt_value(z.im)))));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Parses a CSV body produced by this module back into numeric rows.
pub fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|x| x.parse().expect("numeric cell")).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_value(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_value(1.0 / 3.0), "3.3333333333333331e-1");
    }

    proptest! {
        #[test]
        fn values_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = fmt_value(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn complex_layout() {
        let m = CMatrix::from_row_slice(1, 2, &[num_complex::Complex64::new(1.0, -2.0), num_complex::Complex64::new(0.0, 0.5)]);
        let text = complex_matrix(&m);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "c1_re,c1_im,c2_re,c2_im");
        assert_eq!(parse_rows(&text), vec![vec![1.0, -2.0, 0.0, 0.5]]);
    }
}
