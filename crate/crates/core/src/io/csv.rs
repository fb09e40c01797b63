use std::path::Path;

use crate::error::{Error, Result};

use super::{read_bytes, write_atomic};

/// Parses newline- and/or comma-delimited decimal numbers. Blank lines are
/// skipped; `skip_header` drops the first line.
pub fn parse_csv(text: &str, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(usize::from(skip_header)) {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        let mut column = 1;
        for field in line.split(',') {
            let token = field.trim();
            let lead = field.len() - field.trim_start().len();
            let value = token.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                column: column + lead,
                message: format!("not a number: `{token}`"),
            })?;
            row.push(value);
            column += field.chars().count() + 1;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_csv_rows(path: impl AsRef<Path>, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        column: 0,
        message: format!("invalid UTF-8: {e}"),
    })?;
    parse_csv(&text, skip_header)
}

/// All values in file order.
pub fn read_csv(path: impl AsRef<Path>, skip_header: bool) -> Result<Vec<f64>> {
    Ok(read_csv_rows(path, skip_header)?
        .into_iter()
        .flatten()
        .collect())
}

/// One row per line, 17 significant digits per value.
pub fn format_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<()> {
    write_atomic(path.as_ref(), format_csv(rows).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_lines_and_commas() {
        assert_eq!(
            parse_csv("1.5\n2.5\n", false).unwrap(),
            vec![vec![1.5], vec![2.5]]
        );
        assert_eq!(
            parse_csv("x\n1, 2,3\r\n\n-4e2,5,6\n", true).unwrap(),
            vec![vec![1.0, 2.0, 3.0], vec![-400.0, 5.0, 6.0]]
        );
    }

    #[test]
    fn reports_line_and_column() {
        match parse_csv("1,abc", false) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(column, 3);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_csv("1\n2\n3, nan?", false) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 4)),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_csv("1,,2", false).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        let rows = vec![vec![0.1, -2.0 / 3.0], vec![1e-300, 6.02e23]];
        write_csv(&p, &rows).unwrap();
        assert_eq!(read_csv_rows(&p, false).unwrap(), rows);
        assert_eq!(
            read_csv(&p, false).unwrap(),
            vec![0.1, -2.0 / 3.0, 1e-300, 6.02e23]
        );
    }

    proptest! {
        #[test]
        fn format_parse_is_exact(v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..50)) {
            let rows: Vec<Vec<f64>> = v.iter().map(|x| vec![*x]).collect();
            let back = parse_csv(&format_csv(&rows), false).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
