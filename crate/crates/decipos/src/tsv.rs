//! Small helpers shared by the TSV readers/writers.
//!
//! All on-disk formats follow the same conventions: UTF-8, LF line ends,
//! `#`-prefixed header lines (`#key=value`), tab-separated data rows.
//! Readers skip header keys they do not recognize so files can carry extra
//! provenance without breaking older consumers.

use crate::error::{Error, Result};

/// Format a float with 17 significant digits, enough to round-trip any f64
/// exactly through parsing.
pub(crate) fn fmt_f64_exact(x: f64) -> String {
    format!("{x:.16e}")
}

/// Iterate over the lines of `text`, rejecting carriage returns (all formats
/// are LF-only) and yielding `(line_number, line)` with 1-based numbering.
/// A trailing newline does not produce a final empty line.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let trailing_empty = text.ends_with('\n') || text.is_empty();
    let count = text.split('\n').count();
    text.split('\n')
        .enumerate()
        .filter(move |&(i, _)| !(trailing_empty && i == count - 1))
        .map(|(i, line)| (i + 1, line))
}

pub(crate) fn reject_cr(lineno: usize, line: &str) -> Result<()> {
    if line.contains('\r') {
        Err(Error::parse(
            lineno,
            "carriage return found; expected LF line endings",
        ))
    } else {
        Ok(())
    }
}

/// Split a `#key=value` header line. Returns `None` for `#` lines that are
/// not in key=value form (treated as plain comments).
pub(crate) fn header_kv(line: &str) -> Option<(&str, &str)> {
    let rest = line.strip_prefix('#')?;
    let (k, v) = rest.split_once('=')?;
    Some((k.trim(), v))
}

/// Split a data row into exactly `n` tab-separated fields.
pub(crate) fn fields(lineno: usize, line: &str, n: usize) -> Result<Vec<&str>> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != n {
        return Err(Error::parse(
            lineno,
            format!("expected {n} tab-separated fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

pub(crate) fn parse_num<T: std::str::FromStr>(lineno: usize, what: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(lineno, format!("invalid {what}: {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_drop_trailing_newline_only() {
        let got: Vec<_> = lines("a\nb\n").collect();
        assert_eq!(got, vec![(1, "a"), (2, "b")]);
        let got: Vec<_> = lines("a\n\nb").collect();
        assert_eq!(got, vec![(1, "a"), (2, ""), (3, "b")]);
        assert_eq!(lines("").count(), 0);
    }

    #[test]
    fn f64_formatting_round_trips_exactly() {
        for x in [0.1, 1.0 / 3.0, 2.5e-300, -7.234e17, f64::MIN_POSITIVE] {
            let s = fmt_f64_exact(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn header_kv_splits_on_first_equals() {
        assert_eq!(header_kv("#tags=A,B"), Some(("tags", "A,B")));
        assert_eq!(header_kv("#note=a=b"), Some(("note", "a=b")));
        assert_eq!(header_kv("# plain comment"), None);
        assert_eq!(header_kv("data"), None);
    }
}
