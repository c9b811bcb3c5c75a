//! Undirected simple graphs with optional node features and labels, plus the
//! edge-list file loader.

use std::collections::BTreeSet;
use std::path::Path;

use crate::dense::Mat;
use crate::error::{Error, Result};

/// Order-independent fingerprint of a graph's vertex count and edge set,
/// used to guard weight caches against stale inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GraphHash(pub u64);

/// Undirected simple graph. Edges are stored once in canonical form
/// `(u, v)` with `u < v`, sorted lexicographically; adjacency lists are
/// sorted ascending. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
    features: Option<Mat>,
    labels: Option<Vec<usize>>,
    num_classes: Option<usize>,
}

impl Graph {
    /// Builds a graph from a raw pair list: pairs are symmetrized,
    /// duplicates collapsed and self-loops dropped.
    ///
    /// Fails if any vertex index is outside `[0, num_vertices)`.
    pub fn new(num_vertices: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Graph> {
        let mut canonical = BTreeSet::new();
        for (a, b) in pairs {
            if a as usize >= num_vertices || b as usize >= num_vertices {
                return Err(Error::Graph(format!(
                    "edge ({a}, {b}) references a vertex outside [0, {num_vertices})"
                )));
            }
            if a == b {
                continue; // self-loops in input are dropped
            }
            canonical.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<(u32, u32)> = canonical.into_iter().collect();
        let mut adjacency = vec![Vec::new(); num_vertices];
        for &(u, v) in &edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            num_vertices,
            edges,
            adjacency,
            features: None,
            labels: None,
            num_classes: None,
        })
    }

    /// Attaches a dense feature matrix (one row per vertex).
    pub fn with_features(mut self, features: Mat) -> Result<Graph> {
        if features.rows() != self.num_vertices {
            return Err(Error::Shape(format!(
                "feature matrix has {} rows for {} vertices",
                features.rows(),
                self.num_vertices
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    /// Attaches per-vertex class labels; the class count is `max + 1`.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Graph> {
        if labels.len() != self.num_vertices {
            return Err(Error::Shape(format!(
                "label vector has {} entries for {} vertices",
                labels.len(),
                self.num_vertices
            )));
        }
        let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        self.labels = Some(labels);
        self.num_classes = Some(num_classes);
        Ok(self)
    }

    #[must_use]
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    #[must_use]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: `(u, v)` with `u < v`, sorted lexicographically.
    #[must_use]
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Sorted neighbors of `v`.
    #[must_use]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    #[must_use]
    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    #[must_use]
    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        u != v && self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    /// Position of edge `{u, v}` in the canonical edge list.
    #[must_use]
    pub fn edge_index(&self, u: u32, v: u32) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    #[must_use]
    pub fn features(&self) -> Option<&Mat> {
        self.features.as_ref()
    }

    #[must_use]
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    #[must_use]
    pub fn num_classes(&self) -> Option<usize> {
        self.num_classes
    }

    /// FNV-1a fingerprint of the vertex count and sorted edge list. Stable
    /// across edge input order because construction canonicalizes edges.
    #[must_use]
    pub fn hash(&self) -> GraphHash {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut absorb = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        absorb(self.num_vertices as u64);
        for &(u, v) in &self.edges {
            absorb(u64::from(u));
            absorb(u64::from(v));
        }
        GraphHash(h)
    }
}

/// A graph loaded from disk together with the original vertex IDs: the file's
/// IDs are remapped to the dense range `[0, N)` in ascending order, and
/// `original_ids[i]` is the file ID of vertex `i`.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub original_ids: Vec<u64>,
}

/// Reads an edge-list file: one integer pair per line, separated by
/// whitespace and/or commas; lines starting with `#` or `%` (and blank
/// lines) are ignored. Vertex IDs may be arbitrary non-negative integers and
/// are remapped densely.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut raw_pairs: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty());
        let a = tokens.next();
        let b = tokens.next();
        let extra = tokens.next();
        let (Some(a), Some(b), None) = (a, b, extra) else {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected exactly two vertex IDs, got {trimmed:?}"),
            ));
        };
        let parse = |tok: &str| {
            tok.parse::<u64>().map_err(|_| {
                Error::parse(path, line_no, format!("invalid vertex ID {tok:?}"))
            })
        };
        raw_pairs.push((parse(a)?, parse(b)?));
    }

    let mut original_ids: Vec<u64> = raw_pairs
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect();
    original_ids.sort_unstable();
    original_ids.dedup();
    if original_ids.len() > u32::MAX as usize {
        return Err(Error::Graph("too many vertices for u32 indexing".into()));
    }
    let remap = |id: u64| original_ids.binary_search(&id).unwrap() as u32;
    let pairs: Vec<(u32, u32)> = raw_pairs
        .iter()
        .map(|&(a, b)| (remap(a), remap(b)))
        .collect();
    let graph = Graph::new(original_ids.len(), pairs)?;
    Ok(LoadedGraph {
        graph,
        original_ids,
    })
}
