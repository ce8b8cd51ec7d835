//! File plumbing: atomic writes, line-numbered parsing and the CSV layouts
//! shared by the library and the CLI.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rls::{LeverageScores, SamplingDistribution};
use crate::synthdata::Dataset;

/// Writes through a temporary sibling file and renames it into place, so a
/// failed write never leaves a partial file at `path`.
pub fn write_atomic(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Parameter(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn read_lines<T>(path: &Path, f: impl FnOnce(BufReader<File>, &Path) -> Result<T>) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    f(BufReader::new(file), path)
}

/// Line reader that remembers the current 1-based line number for errors.
pub struct LineReader<'a, R> {
    inner: std::io::Lines<R>,
    path: &'a Path,
    line: usize,
}

impl<'a, R: BufRead> LineReader<'a, R> {
    pub fn new(r: R, path: &'a Path) -> Self {
        Self {
            inner: r.lines(),
            path,
            line: 0,
        }
    }

    pub fn line_number(&self) -> usize {
        self.line
    }

    pub fn error(&self, msg: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            msg,
        }
    }

    pub fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(l)) => {
                self.line += 1;
                Ok(Some(l))
            }
            Some(Err(e)) => Err(Error::io(self.path, e)),
        }
    }

    pub fn expect_line(&mut self) -> Result<String> {
        match self.next_line()? {
            Some(l) => Ok(l),
            None => {
                self.line += 1;
                Err(self.error("unexpected end of file".into()))
            }
        }
    }

    /// Parses a comma-separated row of reals at the current line.
    pub fn parse_row(&self, line: &str) -> Result<Vec<f64>> {
        line.split(',')
            .enumerate()
            .map(|(col, field)| {
                let field = field.trim();
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.error(format!("column {}: '{field}' is not a finite number", col + 1)))
            })
            .collect()
    }

    pub fn expect_row(&mut self, width: usize) -> Result<Vec<f64>> {
        let line = self.expect_line()?;
        let row = self.parse_row(&line)?;
        if row.len() != width {
            return Err(self.error(format!("expected {width} values, found {}", row.len())));
        }
        Ok(row)
    }
}

pub(crate) fn write_csv_row(w: &mut impl Write, row: &[f64]) -> std::io::Result<()> {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            w.write_all(b",")?;
        }
        write!(w, "{v}")?;
    }
    writeln!(w)
}

/// Reads a numeric CSV. With `has_header` the first line is skipped; blank
/// lines are ignored and every row must have the same width.
pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<Matrix> {
    read_lines(path, |r, path| {
        let mut lines = LineReader::new(r, path);
        if has_header {
            lines.expect_line()?;
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        while let Some(line) = lines.next_line()? {
            if line.trim().is_empty() {
                continue;
            }
            let row = lines.parse_row(&line)?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(lines.error(format!(
                        "row has {} values, earlier rows have {}",
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        Ok(Matrix::from_rows(&rows)?)
    })
}

pub fn write_matrix_csv(path: &Path, header: Option<&str>, m: &Matrix) -> Result<()> {
    write_atomic(path, |w| {
        if let Some(h) = header {
            writeln!(w, "{h}")?;
        }
        for row in m.row_iter() {
            write_csv_row(w, row)?;
        }
        Ok(())
    })
}

fn point_header(dim: usize) -> &'static str {
    match dim {
        1 => "x",
        2 => "x,y",
        _ => "",
    }
}

/// Dataset CSV: columns `x[,y],mode_label` with 1-based labels.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let dim = data.points.cols();
    if dim > 2 {
        return Err(Error::Shape("dataset files hold 1D or 2D points".into()));
    }
    write_atomic(path, |w| {
        writeln!(w, "{},mode_label", point_header(dim))?;
        for (row, label) in data.points.row_iter().zip(&data.labels) {
            for v in row {
                write!(w, "{v},")?;
            }
            writeln!(w, "{}", label + 1)?;
        }
        Ok(())
    })
}

/// Reads a dataset CSV back into points and zero-based labels.
pub fn read_dataset_csv(path: &Path) -> Result<(Matrix, Vec<usize>)> {
    read_lines(path, |r, path| {
        let mut lines = LineReader::new(r, path);
        let header = lines.expect_line()?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.last() != Some(&"mode_label") || cols.len() < 2 || cols.len() > 3 {
            return Err(lines.error("expected header 'x[,y],mode_label'".into()));
        }
        let dim = cols.len() - 1;
        let mut data = Vec::new();
        let mut labels = Vec::new();
        while let Some(line) = lines.next_line()? {
            if line.trim().is_empty() {
                continue;
            }
            let row = lines.parse_row(&line)?;
            if row.len() != dim + 1 {
                return Err(lines.error(format!("expected {} values, found {}", dim + 1, row.len())));
            }
            let label = row[dim];
            if label < 1.0 || label.fract() != 0.0 {
                return Err(lines.error(format!("mode label {label} is not a positive integer")));
            }
            data.extend_from_slice(&row[..dim]);
            labels.push(label as usize - 1);
        }
        Ok((Matrix::from_vec(labels.len(), dim, data)?, labels))
    })
}

/// Scores CSV: `index,score,prob`.
pub fn write_scores_csv(path: &Path, scores: &LeverageScores, dist: &SamplingDistribution) -> Result<()> {
    if scores.scores.len() != dist.len() {
        return Err(Error::Shape("scores and distribution differ in length".into()));
    }
    write_atomic(path, |w| {
        writeln!(w, "index,score,prob")?;
        for (i, (s, p)) in scores.scores.iter().zip(dist.probs()).enumerate() {
            writeln!(w, "{i},{s},{p}")?;
        }
        Ok(())
    })
}

/// Reads a scores CSV into `(scores, probs)`.
pub fn read_scores_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = read_matrix_csv(path, true)?;
    if m.rows() > 0 && m.cols() != 3 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "expected columns index,score,prob".into(),
        });
    }
    Ok((m.column(1), m.column(2)))
}

/// Writes 1D/2D points with an `x[,y]` header.
pub fn write_points_csv(path: &Path, points: &Matrix) -> Result<()> {
    let header = point_header(points.cols());
    write_matrix_csv(path, (!header.is_empty()).then_some(header), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::make_ring;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ring.csv");
        let d = make_ring(200, 7).unwrap();
        write_dataset_csv(&path, &d).unwrap();
        let (points, labels) = read_dataset_csv(&path).unwrap();
        assert_eq!(points, d.points);
        assert_eq!(labels, d.labels);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,mode_label\n"));
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let err = write_atomic(&path, |w| {
            writeln!(w, "partial")?;
            Err(std::io::Error::other("boom"))
        });
        assert!(err.is_err());
        assert!(!path.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn ragged_csv_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        fs::write(&path, "a,b\n1,2\n3,4\n5\n").unwrap();
        match read_matrix_csv(&path, true).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
        fs::write(&path, "1,2\n3,x\n").unwrap();
        assert!(matches!(
            read_matrix_csv(&path, false).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }
}
