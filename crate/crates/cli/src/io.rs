//! Point CSV format: header `x1,...,xd`, one point per row, every value
//! written with 17 significant digits so a write/read cycle is bit exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use manifold_boundary::PointCloud;

use crate::error::CliError;

pub fn format_coord(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_points<W: Write>(out: W, cloud: &PointCloud) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let header: Vec<String> = (1..=cloud.ambient_dim()).map(|j| format!("x{j}")).collect();
    w.write_record(&header)?;
    for p in cloud.points() {
        w.write_record(p.iter().map(|&x| format_coord(x)))?;
    }
    w.flush()
        .map_err(|e| CliError::input(format!("write failed: {e}")))?;
    Ok(())
}

pub fn write_points_file(path: &Path, cloud: &PointCloud) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_points(BufWriter::new(f), cloud)
}

/// Raw rows of a point CSV; every row has the header's width.
pub fn read_rows<R: Read>(input: R) -> Result<(usize, Vec<f64>), CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let d = rdr.headers()?.len();
    if d == 0 {
        return Err(CliError::input("point CSV has an empty header"));
    }
    let mut coords = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (col, field) in record.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| {
                CliError::input(format!(
                    "line {line}, column {}: cannot parse {field:?} as a number",
                    col + 1
                ))
            })?;
            if !x.is_finite() {
                return Err(CliError::input(format!(
                    "line {line}, column {}: non-finite value {field:?}",
                    col + 1
                )));
            }
            coords.push(x);
        }
    }
    if coords.is_empty() {
        return Err(CliError::input("point CSV contains no points"));
    }
    Ok((d, coords))
}

pub fn read_points<R: Read>(input: R, intrinsic_dim: usize) -> Result<PointCloud, CliError> {
    let (d, coords) = read_rows(input)?;
    PointCloud::new(coords, d, intrinsic_dim).map_err(CliError::from)
}

pub fn read_points_file(path: &Path, intrinsic_dim: usize) -> Result<PointCloud, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_points(f, intrinsic_dim)
}

pub fn write_json_file<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Writes JSON to `path`, or to standard output when no path is given.
pub fn emit_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    match path {
        Some(p) => write_json_file(p, value),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            writeln!(lock).map_err(|e| CliError::input(e.to_string()))?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_reports_position() {
        let data = "x1,x2\n1.0,2.0\n3.0,abc\n";
        let err = read_points(data.as_bytes(), 1).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 3, column 2"), "{err}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let data = "x1,x2\n1.0,2.0\n3.0\n";
        assert_eq!(read_points(data.as_bytes(), 1).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn empty_input() {
        assert_eq!(read_points("".as_bytes(), 1).unwrap_err().exit_code(), 2);
        assert_eq!(
            read_points("x1,x2\n".as_bytes(), 1)
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn header_and_layout() {
        let cloud = PointCloud::new(vec![0.1, -2.0, 3.5, 1e-300, 7.0, 8.0], 2, 1).unwrap();
        let mut buf = Vec::new();
        write_points(&mut buf, &cloud).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x1,x2"));
        assert_eq!(
            lines.next(),
            Some("1.0000000000000001e-1,-2.0000000000000000e0")
        );
        assert!(!text.contains('\r'));
    }
}
