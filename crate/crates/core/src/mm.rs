//! Matrix Market coordinate-format reader and writer.
//!
//! Writing always produces `coordinate real general` with 17 significant
//! digits, which round-trips every finite `f64` exactly. Reading accepts
//! `real`, `integer` and `pattern` fields with `general`, `symmetric` or
//! `skew-symmetric` symmetry.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

pub fn write_matrix_market<W: Write>(out: W, a: &SparseMatrix) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix_market_file(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let file = fs::File::create(path.as_ref())?;
    write_matrix_market(file, a)
}

pub fn read_matrix_market<R: Read>(input: R) -> Result<SparseMatrix> {
    parse(BufReader::new(input), None)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    parse(BufReader::new(file), Some(path))
}

fn parse<R: BufRead>(reader: R, path: Option<&Path>) -> Result<SparseMatrix> {
    let err = |line: usize, msg: String| Error::MatrixMarket {
        path: path.map(Path::to_path_buf),
        line,
        msg,
    };

    let mut lines = reader.lines().enumerate();
    let (_, banner) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?;
    let banner = banner?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("bad banner: {banner}")));
    }
    if tokens[2] != "coordinate" {
        return Err(err(1, format!("unsupported format '{}'", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let Some((nrows, ncols, nnz)) = size else {
            if parts.len() != 3 {
                return Err(err(lineno, format!("bad size line: {line}")));
            }
            let p = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| err(lineno, format!("bad size '{s}': {e}")))
            };
            let parsed = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
            triplets.reserve(parsed.2);
            size = Some(parsed);
            continue;
        };
        let expected = if field == Field::Pattern { 2 } else { 3 };
        if parts.len() != expected {
            return Err(err(lineno, format!("expected {expected} fields: {line}")));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|e| err(lineno, format!("bad row index: {e}")))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|e| err(lineno, format!("bad column index: {e}")))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(err(lineno, format!("index ({i}, {j}) out of range")));
        }
        let v = match field {
            Field::Pattern => 1.0,
            Field::Integer => parts[2]
                .parse::<i64>()
                .map_err(|e| err(lineno, format!("bad integer value: {e}")))? as f64,
            Field::Real => parts[2]
                .parse::<f64>()
                .map_err(|e| err(lineno, format!("bad real value: {e}")))?,
        };
        triplets.push((i - 1, j - 1, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((j - 1, i - 1, v)),
                Symmetry::SkewSymmetric => triplets.push((j - 1, i - 1, -v)),
            }
        }
        let stored = triplets.len();
        if symmetry == Symmetry::General && stored > nnz {
            return Err(err(lineno, format!("more than {nnz} entries")));
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| err(0, "missing size line".into()))?;
    if symmetry == Symmetry::General && triplets.len() != nnz {
        return Err(err(
            0,
            format!("expected {nnz} entries, found {}", triplets.len()),
        ));
    }
    SparseMatrix::from_triplets(nrows, ncols, &triplets)
}
