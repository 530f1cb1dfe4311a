//! Dataset loading from disk.
//!
//! A dataset directory holds `edges.txt`, `labels.txt`, one of
//! `features.txt` (dense) or `features.sparse.txt` (triplets), and optionally
//! `split.txt`. Without a split file a seeded split is drawn.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use graphsgan_core::dataset::{make_split, Dataset, DatasetError, SplitConfig};
use graphsgan_core::{Graph, GraphError, Tensor};
use serde::Serialize;
use thiserror::Error;

use crate::formats::{self, FormatError};

pub const EDGES_FILE: &str = "edges.txt";
pub const FEATURES_FILE: &str = "features.txt";
pub const SPARSE_FEATURES_FILE: &str = "features.sparse.txt";
pub const LABELS_FILE: &str = "labels.txt";
pub const SPLIT_FILE: &str = "split.txt";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: GraphError,
    },
    #[error("{dir}: {source}")]
    Dataset {
        dir: PathBuf,
        #[source]
        source: DatasetError,
    },
    #[error("{0}: neither {FEATURES_FILE} nor {SPARSE_FEATURES_FILE} exists")]
    MissingFeatures(PathBuf),
    #[error("{path}:{line}: {message}")]
    Citation { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn dataset_name(dir: &Path) -> String {
    dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
}

pub fn load_dataset_dir(dir: &Path, split_cfg: &SplitConfig, seed: u64) -> Result<Dataset, LoadError> {
    let dense = dir.join(FEATURES_FILE);
    let sparse = dir.join(SPARSE_FEATURES_FILE);
    let features = if dense.exists() {
        formats::read_dense_matrix(&dense)?
    } else if sparse.exists() {
        formats::read_sparse_matrix(&sparse)?
    } else {
        return Err(LoadError::MissingFeatures(dir.to_path_buf()));
    };
    let n = features.rows();
    let edges_path = dir.join(EDGES_FILE);
    let edges = formats::read_edge_list(&edges_path)?;
    let graph = Graph::build(n, &edges).map_err(|source| LoadError::Graph {
        path: edges_path.clone(),
        source,
    })?;
    if graph.edge_count() < edges.len() {
        log::warn!(
            "{}: {} duplicate edge line(s) ignored",
            edges_path.display(),
            edges.len() - graph.edge_count()
        );
    }
    let labels = formats::read_labels(&dir.join(LABELS_FILE), n)?;
    let class_count = labels.iter().max().map_or(0, |&m| m + 1);
    let split_path = dir.join(SPLIT_FILE);
    let split = if split_path.exists() {
        formats::read_split(&split_path, n)?
    } else {
        make_split(&labels, class_count, split_cfg, seed)
    };
    Dataset::new(dataset_name(dir), graph, features, labels, class_count, split).map_err(|source| LoadError::Dataset {
        dir: dir.to_path_buf(),
        source,
    })
}

/// Writes the directory layout read by [`load_dataset_dir`], dense features
/// and the split included.
pub fn write_dataset_dir(dir: &Path, data: &Dataset) -> Result<(), LoadError> {
    fs::create_dir_all(dir).map_err(|source| LoadError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    formats::write_edge_list(&dir.join(EDGES_FILE), data.graph.edges())?;
    formats::write_dense_matrix(&dir.join(FEATURES_FILE), &data.features)?;
    formats::write_labels(&dir.join(LABELS_FILE), &data.labels)?;
    formats::write_split(&dir.join(SPLIT_FILE), &data.split)?;
    Ok(())
}

/// What a citation load kept and dropped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CitationStats {
    pub nodes: usize,
    pub features: usize,
    /// Class names in index order (sorted).
    pub classes: Vec<String>,
    /// Non-empty lines of the link file.
    pub raw_links: usize,
    /// Distinct undirected edges kept.
    pub edges: usize,
    /// Links naming a paper absent from the content file.
    pub dangling_links: usize,
    pub self_links: usize,
}

/// Reads `<name>.content` (`id f_1 .. f_d class` per line) and `<name>.cites`
/// (`cited citing` per line) from `dir`. Nodes are numbered in content-file
/// order and links to unknown papers are dropped.
pub fn load_citation(dir: &Path, name: &str, split_cfg: &SplitConfig, seed: u64) -> Result<(Dataset, CitationStats), LoadError> {
    let content_path = dir.join(format!("{name}.content"));
    let cites_path = dir.join(format!("{name}.cites"));
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| LoadError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let bad = |path: &Path, line: usize, message: String| LoadError::Citation {
        path: path.to_path_buf(),
        line,
        message,
    };

    let content = read(&content_path)?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut width = None;
    for (k, line) in content.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(bad(&content_path, k + 1, "expected an id, features and a class".into()));
        }
        let d = fields.len() - 2;
        if *width.get_or_insert(d) != d {
            return Err(bad(&content_path, k + 1, format!("{d} features, earlier rows have {}", width.unwrap())));
        }
        if ids.insert(fields[0].to_owned(), rows.len()).is_some() {
            return Err(bad(&content_path, k + 1, format!("paper {} listed twice", fields[0])));
        }
        let row = fields[1..=d]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| bad(&content_path, k + 1, format!("bad feature {s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
        class_names.push(fields[d + 1].to_owned());
    }
    let classes: Vec<String> = class_names.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels: Vec<usize> = class_names
        .iter()
        .map(|c| classes.binary_search(c).expect("class collected"))
        .collect();
    let n = rows.len();
    let features = Tensor::from_vec(n, width.unwrap_or(0), rows.into_iter().flatten().collect()).expect("uniform rows");

    let cites = read(&cites_path)?;
    let mut raw_links = 0;
    let mut dangling_links = 0;
    let mut self_links = 0;
    let mut edges = Vec::new();
    for (k, line) in cites.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(bad(&cites_path, k + 1, format!("expected 2 ids, found {}", fields.len())));
        }
        raw_links += 1;
        match (ids.get(fields[0]), ids.get(fields[1])) {
            (Some(&a), Some(&b)) if a == b => self_links += 1,
            (Some(&a), Some(&b)) => edges.push((a.min(b), a.max(b))),
            _ => dangling_links += 1,
        }
    }
    if dangling_links > 0 {
        log::warn!("{}: dropped {dangling_links} link(s) to unknown papers", cites_path.display());
    }
    edges.sort_unstable();
    edges.dedup();
    let graph = Graph::build(n, &edges).map_err(|source| LoadError::Graph { path: cites_path, source })?;
    let stats = CitationStats {
        nodes: n,
        features: features.cols(),
        classes: classes.clone(),
        raw_links,
        edges: graph.edge_count(),
        dangling_links,
        self_links,
    };
    let split = make_split(&labels, classes.len(), split_cfg, seed);
    let data = Dataset::new(name.to_owned(), graph, features, labels, classes.len(), split).map_err(|source| LoadError::Dataset {
        dir: dir.to_path_buf(),
        source,
    })?;
    Ok((data, stats))
}
