//! Hypergraph container plus JSON / edgelist ingestion.
//!
//! Hyperedges are stored as sorted, duplicate-free node lists. Duplicate
//! hyperedges are legal and stay distinct: each one becomes its own vertex in
//! the bipartite expansion.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    num_nodes: usize,
    hyperedges: Vec<Vec<usize>>,
    features: Option<Array2<f64>>,
    labels: Option<Vec<usize>>,
}

/// On-disk JSON layout.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypergraphFile {
    num_nodes: usize,
    hyperedges: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<i64>>,
}

/// Companion inputs for the edgelist format, which only carries hyperedges.
#[derive(Debug, Clone, Default)]
pub struct EdgelistOptions {
    pub num_nodes: usize,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum InputFormat {
    Json,
    Edgelist(EdgelistOptions),
    /// The UCI `zoo.data` table; see [`crate::datasets::zoo_from_uci`].
    UciZoo,
}

impl Hypergraph {
    /// Validates and normalizes raw parts. Node indices inside each hyperedge
    /// are sorted and deduplicated; anything else that is wrong is an error.
    pub fn new(
        num_nodes: usize,
        hyperedges: Vec<Vec<usize>>,
        features: Option<Array2<f64>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let raw = hyperedges
            .into_iter()
            .map(|e| e.into_iter().map(|v| v as i64).collect())
            .collect();
        Self::from_raw(num_nodes, raw, features, labels)
    }

    fn from_raw(
        num_nodes: usize,
        hyperedges: Vec<Vec<i64>>,
        features: Option<Array2<f64>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let mut edges = Vec::with_capacity(hyperedges.len());
        for (pos, edge) in hyperedges.into_iter().enumerate() {
            if edge.is_empty() {
                return Err(Error::EmptyHyperedge(pos));
            }
            let mut members = Vec::with_capacity(edge.len());
            for v in edge {
                if v < 0 || v as u64 >= num_nodes as u64 {
                    return Err(Error::NodeOutOfRange {
                        index: v,
                        num_nodes,
                    });
                }
                members.push(v as usize);
            }
            members.sort_unstable();
            members.dedup();
            edges.push(members);
        }
        if let Some(x) = &features {
            if x.nrows() != num_nodes {
                return Err(Error::LengthMismatch {
                    what: "feature rows",
                    expected: num_nodes,
                    actual: x.nrows(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("features"));
            }
        }
        if let Some(y) = &labels {
            if y.len() != num_nodes {
                return Err(Error::LengthMismatch {
                    what: "labels",
                    expected: num_nodes,
                    actual: y.len(),
                });
            }
        }
        Ok(Self {
            num_nodes,
            hyperedges: edges,
            features,
            labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    /// Nodes plus hyperedges: the vertex count of the bipartite expansion.
    pub fn num_entities(&self) -> usize {
        self.num_nodes + self.hyperedges.len()
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn hyperedge(&self, e: usize) -> &[usize] {
        &self.hyperedges[e]
    }

    pub fn features(&self) -> Option<&Array2<f64>> {
        self.features.as_ref()
    }

    pub fn require_features(&self) -> Result<&Array2<f64>> {
        self.features.as_ref().ok_or(Error::MissingFeatures)
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.features.as_ref().map(|x| x.ncols())
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels.as_deref().ok_or(Error::MissingLabels)
    }

    /// Largest label plus one, or zero without labels.
    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|y| y.iter().max())
            .map_or(0, |&c| c + 1)
    }

    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        self.features = Some(features);
        Self::new(self.num_nodes, self.hyperedges, self.features, self.labels)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        self.labels = Some(labels);
        Self::new(self.num_nodes, self.hyperedges, self.features, self.labels)
    }

    /// Membership relations `(node, hyperedge)` in hyperedge-major order.
    pub fn memberships(&self) -> Vec<(usize, usize)> {
        self.hyperedges
            .iter()
            .enumerate()
            .flat_map(|(e, members)| members.iter().map(move |&v| (v, e)))
            .collect()
    }

    pub fn num_memberships(&self) -> usize {
        self.hyperedges.iter().map(Vec::len).sum()
    }

    /// Hyperedges incident to each node, in increasing hyperedge order.
    pub fn incident_hyperedges(&self) -> Vec<Vec<usize>> {
        let mut incident = vec![Vec::new(); self.num_nodes];
        for (e, members) in self.hyperedges.iter().enumerate() {
            for &v in members {
                incident[v].push(e);
            }
        }
        incident
    }

    /// Node degree = incident hyperedge count; hyperedge degree = member count.
    pub fn degrees(&self) -> (Vec<usize>, Vec<usize>) {
        let mut node = vec![0usize; self.num_nodes];
        for members in &self.hyperedges {
            for &v in members {
                node[v] += 1;
            }
        }
        let edge = self.hyperedges.iter().map(Vec::len).collect();
        (node, edge)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: HypergraphFile =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let features = match file.features {
            Some(rows) => Some(rows_to_matrix(rows, file.num_nodes)?),
            None => None,
        };
        let labels = match file.labels {
            Some(y) => Some(
                y.into_iter()
                    .map(|c| {
                        usize::try_from(c)
                            .map_err(|_| Error::Malformed(format!("negative label {c}")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        Self::from_raw(file.num_nodes, file.hyperedges, features, labels)
    }

    pub fn to_json_string(&self) -> String {
        let file = HypergraphFile {
            num_nodes: self.num_nodes,
            hyperedges: self
                .hyperedges
                .iter()
                .map(|e| e.iter().map(|&v| v as i64).collect())
                .collect(),
            features: self
                .features
                .as_ref()
                .map(|x| x.rows().into_iter().map(|r| r.to_vec()).collect()),
            labels: self
                .labels
                .as_ref()
                .map(|y| y.iter().map(|&c| c as i64).collect()),
        };
        serde_json::to_string(&file).expect("hypergraph serialization cannot fail")
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    /// Parses the hyperedge lines of an edgelist file. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_edgelist_str(
        text: &str,
        num_nodes: usize,
        features: Option<Array2<f64>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let edge = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<i64>().map_err(|_| {
                        Error::Malformed(format!("line {}: bad node index {tok:?}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            edges.push(edge);
        }
        Self::from_raw(num_nodes, edges, features, labels)
    }
}

fn rows_to_matrix(rows: Vec<Vec<f64>>, expected_rows: usize) -> Result<Array2<f64>> {
    if rows.len() != expected_rows {
        return Err(Error::LengthMismatch {
            what: "feature rows",
            expected: expected_rows,
            actual: rows.len(),
        });
    }
    let ncols = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * ncols);
    for row in rows {
        if row.len() != ncols {
            return Err(Error::LengthMismatch {
                what: "feature columns",
                expected: ncols,
                actual: row.len(),
            });
        }
        flat.extend(row);
    }
    Array2::from_shape_vec((expected_rows, ncols), flat)
        .map_err(|e| Error::Malformed(e.to_string()))
}

/// Header-free CSV of reals, one row per node.
pub fn parse_features_csv(text: &str) -> Result<Array2<f64>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::Malformed(format!("features line {}: bad value {tok:?}", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    rows_to_matrix(rows, n)
}

/// One non-negative integer label per line.
pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, tok)| {
            tok.parse::<usize>()
                .map_err(|_| Error::Malformed(format!("labels line {}: bad label {tok:?}", i + 1)))
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_hypergraph(path: impl AsRef<Path>, format: &InputFormat) -> Result<Hypergraph> {
    let path = path.as_ref();
    let text = read(path)?;
    match format {
        InputFormat::Json => Hypergraph::from_json_str(&text),
        InputFormat::UciZoo => crate::datasets::zoo_from_uci(&text),
        InputFormat::Edgelist(opts) => {
            let features = opts
                .features
                .as_deref()
                .map(|p| read(p).and_then(|t| parse_features_csv(&t)))
                .transpose()?;
            let labels = opts
                .labels
                .as_deref()
                .map(|p| read(p).and_then(|t| parse_labels(&t)))
                .transpose()?;
            Hypergraph::from_edgelist_str(&text, opts.num_nodes, features, labels)
        }
    }
}
