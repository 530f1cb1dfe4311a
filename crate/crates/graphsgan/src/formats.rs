//! Plain-text graph, matrix, label and split files, plus the fake-probability
//! CSV. Every parser reports the file and 1-based line of the first problem.
//!
//! Blank lines and lines starting with `#` are ignored everywhere except CSV.

use std::fmt::Display;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use graphsgan_core::dataset::Split;
use graphsgan_core::Tensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Content { path: PathBuf, message: String },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, line: usize, message: impl Display) -> Self {
        FormatError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        }
    }

    fn content(path: &Path, message: impl Display) -> Self {
        FormatError::Content {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// `(1-based line number, whitespace-separated fields)` of every data line.
fn data_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_owned).collect()))
        .collect())
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, s: &str, what: &str) -> Result<T>
where
    T::Err: Display,
{
    s.parse()
        .map_err(|e| FormatError::parse(path, line, format!("bad {what} {s:?}: {e}")))
}

fn expect_fields(path: &Path, line: usize, fields: &[String], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(FormatError::parse(path, line, format!("expected {n} fields, found {}", fields.len())));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
        }
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| FormatError::io(path, e))
}

fn finish(path: &Path, w: BufWriter<fs::File>) -> Result<()> {
    w.into_inner()
        .map_err(|e| FormatError::io(path, e.into_error()))?
        .sync_all()
        .map_err(|e| FormatError::io(path, e))
}

/// Undirected edges `i j`, 0-based.
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    data_lines(path)?
        .into_iter()
        .map(|(line, f)| {
            expect_fields(path, line, &f, 2)?;
            Ok((field(path, line, &f[0], "node id")?, field(path, line, &f[1], "node id")?))
        })
        .collect()
}

pub fn write_edge_list(path: &Path, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
    let mut w = create(path)?;
    for (i, j) in edges {
        writeln!(w, "{i} {j}").map_err(|e| FormatError::io(path, e))?;
    }
    finish(path, w)
}

/// Dense matrix: a `rows cols` header, then one whitespace-separated row per
/// line. Values are written in shortest round-trip form.
pub fn read_dense_matrix(path: &Path) -> Result<Tensor> {
    let lines = data_lines(path)?;
    let Some((hline, header)) = lines.first() else {
        return Err(FormatError::content(path, "missing `rows cols` header"));
    };
    expect_fields(path, *hline, header, 2)?;
    let rows: usize = field(path, *hline, &header[0], "row count")?;
    let cols: usize = field(path, *hline, &header[1], "column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    for (line, f) in &lines[1..] {
        expect_fields(path, *line, f, cols)?;
        for s in f {
            data.push(field::<f64>(path, *line, s, "value")?);
        }
    }
    if lines.len() - 1 != rows {
        return Err(FormatError::content(path, format!("header declares {rows} rows, found {}", lines.len() - 1)));
    }
    Ok(Tensor::from_vec(rows, cols, data).expect("shape checked"))
}

pub fn write_dense_matrix(path: &Path, x: &Tensor) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| FormatError::io(path, e);
    writeln!(w, "{} {}", x.rows(), x.cols()).map_err(io)?;
    for r in 0..x.rows() {
        let row: Vec<String> = x.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(" ")).map_err(io)?;
    }
    finish(path, w)
}

/// Sparse matrix: a `rows cols` header, then `row col value` triplets.
/// Missing entries are zero; a repeated entry is an error.
pub fn read_sparse_matrix(path: &Path) -> Result<Tensor> {
    let lines = data_lines(path)?;
    let Some((hline, header)) = lines.first() else {
        return Err(FormatError::content(path, "missing `rows cols` header"));
    };
    expect_fields(path, *hline, header, 2)?;
    let rows: usize = field(path, *hline, &header[0], "row count")?;
    let cols: usize = field(path, *hline, &header[1], "column count")?;
    let mut x = Tensor::zeros(rows, cols);
    let mut seen = std::collections::HashSet::new();
    for (line, f) in &lines[1..] {
        expect_fields(path, *line, f, 3)?;
        let r: usize = field(path, *line, &f[0], "row")?;
        let c: usize = field(path, *line, &f[1], "column")?;
        if r >= rows || c >= cols {
            return Err(FormatError::parse(path, *line, format!("entry ({r}, {c}) outside {rows}x{cols}")));
        }
        if !seen.insert((r, c)) {
            return Err(FormatError::parse(path, *line, format!("entry ({r}, {c}) repeated")));
        }
        x.set(r, c, field(path, *line, &f[2], "value")?);
    }
    Ok(x)
}

pub fn write_sparse_matrix(path: &Path, x: &Tensor) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| FormatError::io(path, e);
    writeln!(w, "{} {}", x.rows(), x.cols()).map_err(io)?;
    for r in 0..x.rows() {
        for (c, v) in x.row(r).iter().enumerate() {
            if *v != 0.0 {
                writeln!(w, "{r} {c} {v}").map_err(io)?;
            }
        }
    }
    finish(path, w)
}

/// `node label` lines covering nodes `0..n` exactly once each.
pub fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let mut labels = vec![None; n];
    for (line, f) in data_lines(path)? {
        expect_fields(path, line, &f, 2)?;
        let node: usize = field(path, line, &f[0], "node id")?;
        if node >= n {
            return Err(FormatError::parse(path, line, format!("node {node} outside 0..{n}")));
        }
        if labels[node].replace(field(path, line, &f[1], "label")?).is_some() {
            return Err(FormatError::parse(path, line, format!("node {node} labeled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.ok_or_else(|| FormatError::content(path, format!("node {v} has no label"))))
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = create(path)?;
    for (v, l) in labels.iter().enumerate() {
        writeln!(w, "{v} {l}").map_err(|e| FormatError::io(path, e))?;
    }
    finish(path, w)
}

/// `node train|val|test` lines; nodes not listed belong to no split.
pub fn read_split(path: &Path, n: usize) -> Result<Split> {
    let mut split = Split::empty(n);
    let mut seen = vec![false; n];
    for (line, f) in data_lines(path)? {
        expect_fields(path, line, &f, 2)?;
        let node: usize = field(path, line, &f[0], "node id")?;
        if node >= n {
            return Err(FormatError::parse(path, line, format!("node {node} outside 0..{n}")));
        }
        if std::mem::replace(&mut seen[node], true) {
            return Err(FormatError::parse(path, line, format!("node {node} listed twice")));
        }
        let mask = match f[1].as_str() {
            "train" => &mut split.train,
            "val" => &mut split.val,
            "test" => &mut split.test,
            other => return Err(FormatError::parse(path, line, format!("unknown split {other:?}"))),
        };
        mask[node] = true;
    }
    Ok(split)
}

pub fn write_split(path: &Path, split: &Split) -> Result<()> {
    let mut w = create(path)?;
    for v in 0..split.train.len() {
        let name = if split.train[v] {
            "train"
        } else if split.val[v] {
            "val"
        } else if split.test[v] {
            "test"
        } else {
            continue;
        };
        writeln!(w, "{v} {name}").map_err(|e| FormatError::io(path, e))?;
    }
    finish(path, w)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct FakeRow {
    node: usize,
    p_fake: f64,
}

/// CSV with header `node,p_fake`, one row per node `0..n`.
pub fn read_p_fake(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| FormatError::content(path, e))?;
    let mut values = vec![None; n];
    for (k, row) in reader.deserialize::<FakeRow>().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| FormatError::parse(path, line, e))?;
        if row.node >= n {
            return Err(FormatError::parse(path, line, format!("node {} outside 0..{n}", row.node)));
        }
        if !(0.0..=1.0).contains(&row.p_fake) {
            return Err(FormatError::parse(path, line, format!("p_fake {} outside [0, 1]", row.p_fake)));
        }
        if values[row.node].replace(row.p_fake).is_some() {
            return Err(FormatError::parse(path, line, format!("node {} listed twice", row.node)));
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(v, p)| p.ok_or_else(|| FormatError::content(path, format!("node {v} has no p_fake"))))
        .collect()
}

pub fn write_p_fake(path: &Path, p_fake: &[f64]) -> Result<()> {
    create(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| FormatError::content(path, e))?;
    for (node, &p) in p_fake.iter().enumerate() {
        w.serialize(FakeRow { node, p_fake: p }).map_err(|e| FormatError::content(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        let x = Tensor::from_vec(2, 3, vec![0.1, -1e-300, 3.0, f64::MAX, 1.0 / 3.0, -0.0]).unwrap();
        write_dense_matrix(&p, &x).unwrap();
        assert_eq!(read_dense_matrix(&p).unwrap(), x);
    }

    #[test]
    fn truncated_matrix_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        fs::write(&p, "2 3\n1 2 3\n4 5\n").unwrap();
        let err = read_dense_matrix(&p).unwrap_err().to_string();
        assert!(err.contains("m.txt:3"), "{err}");
    }

    #[test]
    fn sparse_round_trip_and_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.txt");
        let x = Tensor::from_vec(2, 3, vec![0.0, 1.0, 0.0, 2.5, 0.0, 0.0]).unwrap();
        write_sparse_matrix(&p, &x).unwrap();
        assert_eq!(read_sparse_matrix(&p).unwrap(), x);
        fs::write(&p, "2 2\n0 5 1\n").unwrap();
        assert!(read_sparse_matrix(&p).unwrap_err().to_string().contains("s.txt:2"));
    }

    #[test]
    fn labels_must_cover_every_node() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        fs::write(&p, "# comment\n0 1\n2 0\n").unwrap();
        assert!(read_labels(&p, 3).unwrap_err().to_string().contains("node 1 has no label"));
        write_labels(&p, &[1, 0, 2]).unwrap();
        assert_eq!(read_labels(&p, 3).unwrap(), vec![1, 0, 2]);
    }

    #[test]
    fn split_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("split.txt");
        let mut s = Split::empty(4);
        s.train[0] = true;
        s.val[2] = true;
        s.test[3] = true;
        write_split(&p, &s).unwrap();
        assert_eq!(read_split(&p, 4).unwrap(), s);
        fs::write(&p, "0 holdout\n").unwrap();
        assert!(read_split(&p, 4).is_err());
    }

    #[test]
    fn p_fake_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pf.csv");
        write_p_fake(&p, &[0.25, 0.0, 1.0]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "node,p_fake\n0,0.25\n1,0.0\n2,1.0\n");
        assert_eq!(read_p_fake(&p, 3).unwrap(), vec![0.25, 0.0, 1.0]);
        assert!(read_p_fake(&p, 4).is_err());
    }

    #[test]
    fn edge_list_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "0 1\n1 x\n").unwrap();
        assert!(read_edge_list(&p).unwrap_err().to_string().contains("e.txt:2"));
    }
}
