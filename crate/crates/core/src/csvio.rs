//! Reading point and data files; writing result tables.
//!
//! Inputs are comma-separated numbers with optional `#` comment lines and an
//! optional header row (recognized by a non-numeric first field).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::points::Points;

/// Numeric rows of a CSV source, with 1-based line numbers.
fn numeric_rows<R: Read>(source: R, name: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let mut rows = Vec::new();
    let mut first = true;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
                    return Err(parse_err(line, format!("field {} is not finite", bad + 1)));
                }
                rows.push((line, v));
            }
            // a leading non-numeric row is a header
            Err(_) if first && rows.is_empty() => {}
            Err(e) => return Err(parse_err(line, format!("not a number: {e}"))),
        }
        first = false;
    }
    Ok(rows)
}

fn check_width(rows: &[(usize, Vec<f64>)], width: usize, name: &str) -> Result<()> {
    for (line, r) in rows {
        if r.len() != width {
            return Err(Error::Parse {
                path: name.to_string(),
                line: *line,
                message: format!("expected {width} fields, found {}", r.len()),
            });
        }
    }
    Ok(())
}

/// Data rows `x₁, …, x_p, y`. `dim` fixes p; otherwise it is taken from the
/// first row.
pub fn read_dataset<R: Read>(source: R, name: &str, dim: Option<usize>) -> Result<Dataset> {
    let rows = numeric_rows(source, name)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: name.to_string(),
            line: 0,
            message: "no data rows".to_string(),
        });
    }
    let width = match dim {
        Some(p) => p + 1,
        None => rows[0].1.len(),
    };
    if width < 2 {
        return Err(Error::Parse {
            path: name.to_string(),
            line: rows[0].0,
            message: "data rows need at least one coordinate and a response".to_string(),
        });
    }
    check_width(&rows, width, name)?;
    let p = width - 1;
    let mut pts = Points::with_capacity(p, rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for (_, r) in &rows {
        pts.push(&r[..p])?;
        ys.push(r[p]);
    }
    Dataset::new(pts, ys)
}

/// Query rows `x₁, …, x_p`; an empty source yields no points.
pub fn read_points<R: Read>(source: R, name: &str, dim: usize) -> Result<Points> {
    let rows = numeric_rows(source, name)?;
    check_width(&rows, dim, name)?;
    let mut pts = Points::with_capacity(dim, rows.len());
    for (_, r) in &rows {
        pts.push(r)?;
    }
    Ok(pts)
}

pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn coord_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("x{i}")).collect()
}

/// A CSV table with `#` comment lines ahead of the header.
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            comments: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(f);
        self.write(&mut buf)?;
        buf.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_data_with_header_and_comments() {
        let text = "# made by hand\nx1,y\n0.1, 2.0\n\n0.5,3.5\n";
        let d = read_dataset(text.as_bytes(), "d.csv", None).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.points().row(1), &[0.5]);
        assert_eq!(d.responses(), &[2.0, 3.5]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "0.1,2.0\n0.2,abc\n";
        match read_dataset(text.as_bytes(), "d.csv", None) {
            Err(Error::Parse { path, line, .. }) => assert_eq!((path.as_str(), line), ("d.csv", 2)),
            other => panic!("{other:?}"),
        }
        let text = "# c\n0.1,0.2,1.0\n0.3,1.0\n";
        match read_dataset(text.as_bytes(), "d.csv", None) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 3"));
            }
            other => panic!("{other:?}"),
        }
        assert!(read_dataset("0.1,nan\n".as_bytes(), "d", None).is_err());
        assert!(read_dataset("".as_bytes(), "d", None).is_err());
        assert!(read_points("0.1,0.2\n".as_bytes(), "q", 1).is_err());
    }

    #[test]
    fn empty_query_file() {
        assert!(read_points("".as_bytes(), "q", 2).unwrap().is_empty());
        assert!(read_points("x1,x2\n".as_bytes(), "q", 2).unwrap().is_empty());
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.comments.push("seed = 1".into());
        t.rows.push(vec!["1".into(), "x,y".into()]);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# seed = 1\na,b\n1,\"x,y\"\n");
    }
}
