//! Per-edge torsion weights `|log T(K_{x,y})|`: parallel precomputation over
//! a whole graph, a versioned binary cache, and a text export.

use std::path::Path;

use rayon::prelude::*;

use crate::binio::{Reader, Writer};
use crate::complex::local_complex;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphHash};
use crate::spectral::log_analytic_torsion;

const MAGIC: [u8; 4] = *b"TORW";
const VERSION: u32 = 1;

/// Complete table of torsion weights for one graph at one `(l_sub, n)`
/// setting: one entry per edge plus one self entry per vertex. Immutable
/// after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionWeightTable {
    l_sub: u32,
    n: u32,
    graph_hash: GraphHash,
    edges: Vec<(u32, u32)>,
    edge_weights: Vec<f64>,
    self_weights: Vec<f64>,
}

impl TorsionWeightTable {
    #[must_use]
    pub fn l_sub(&self) -> u32 {
        self.l_sub
    }

    #[must_use]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[must_use]
    pub fn graph_hash(&self) -> GraphHash {
        self.graph_hash
    }

    #[must_use]
    pub fn num_vertices(&self) -> usize {
        self.self_weights.len()
    }

    /// Canonical edge list the table was built over.
    #[must_use]
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Edge weights parallel to [`TorsionWeightTable::edges`].
    #[must_use]
    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Self weights indexed by vertex.
    #[must_use]
    pub fn self_weights(&self) -> &[f64] {
        &self.self_weights
    }

    /// Weight of the pair `(x, y)`: the self weight when `x = y`, the edge
    /// weight when `{x, y}` is an edge, `None` otherwise.
    #[must_use]
    pub fn weight(&self, x: u32, y: u32) -> Option<f64> {
        if x == y {
            return self.self_weights.get(x as usize).copied();
        }
        let key = (x.min(y), x.max(y));
        self.edges
            .binary_search(&key)
            .ok()
            .map(|i| self.edge_weights[i])
    }

    /// Copy of a table with every weight replaced by one constant — lets
    /// tests isolate the aggregation arithmetic from the torsion values.
    #[cfg(test)]
    pub(crate) fn with_uniform_weights(other: &Self, w: f64) -> Self {
        Self {
            l_sub: other.l_sub,
            n: other.n,
            graph_hash: other.graph_hash,
            edges: other.edges.clone(),
            edge_weights: vec![w; other.edge_weights.len()],
            self_weights: vec![w; other.self_weights.len()],
        }
    }

    /// Text export: one `x y weight` line per pair (self pairs as `x x`),
    /// sorted lexicographically, weights at 17 significant digits.
    #[must_use]
    pub fn export_text(&self) -> String {
        let mut lines: Vec<(u32, u32, f64)> = self
            .edges
            .iter()
            .zip(&self.edge_weights)
            .map(|(&(u, v), &w)| (u, v, w))
            .chain(
                self.self_weights
                    .iter()
                    .enumerate()
                    .map(|(x, &w)| (x as u32, x as u32, w)),
            )
            .collect();
        lines.sort_by_key(|&(u, v, _)| (u, v));
        let mut out = String::new();
        for (u, v, w) in lines {
            out.push_str(&format!("{u} {v} {w:.16e}\n"));
        }
        out
    }
}

/// `|log T(K_{x,y})|` for one pair: build the local complex, take the
/// analytic torsion, apply the absolute value. `x = y` gives the self
/// weight over the ball complex `K_{x,x}`.
pub fn torsion_edge_weight(g: &Graph, x: u32, y: u32, l_sub: u32, n: usize) -> Result<f64> {
    let k = local_complex(g, x, y, l_sub, n)?;
    Ok(log_analytic_torsion(&k)?.abs())
}

/// Computes the full weight table for a graph. Edges are evaluated as
/// independent parallel tasks writing disjoint slots, so the result is
/// deterministic and independent of worker count. Any single-pair failure
/// aborts the whole computation, identifying the pair.
pub fn precompute_weights(g: &Graph, l_sub: u32, n: usize) -> Result<TorsionWeightTable> {
    if g.num_vertices() == 0 {
        return Err(Error::Graph("cannot weight an empty graph".into()));
    }
    let wrap = |x: u32, y: u32| {
        move |e: Error| Error::Weight {
            x,
            y,
            source: Box::new(e),
        }
    };
    let edge_weights: Vec<f64> = g
        .edges()
        .par_iter()
        .map(|&(x, y)| torsion_edge_weight(g, x, y, l_sub, n).map_err(wrap(x, y)))
        .collect::<Result<_>>()?;
    let self_weights: Vec<f64> = (0..g.num_vertices() as u32)
        .into_par_iter()
        .map(|x| torsion_edge_weight(g, x, x, l_sub, n).map_err(wrap(x, x)))
        .collect::<Result<_>>()?;
    Ok(TorsionWeightTable {
        l_sub,
        n: n as u32,
        graph_hash: g.hash(),
        edges: g.edges().to_vec(),
        edge_weights,
        self_weights,
    })
}

/// Writes the table as a versioned little-endian binary cache.
pub fn save_table(t: &TorsionWeightTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = Writer::new();
    w.bytes(&MAGIC);
    w.u32(VERSION);
    w.u32(t.l_sub);
    w.u32(t.n);
    w.u64(t.graph_hash.0);
    w.u64(t.self_weights.len() as u64);
    w.u64(t.edges.len() as u64);
    for (&(u, v), &weight) in t.edges.iter().zip(&t.edge_weights) {
        w.u32(u);
        w.u32(v);
        w.f64(weight);
    }
    for &weight in &t.self_weights {
        w.f64(weight);
    }
    w.write_to(path)
}

/// Loads a cache written by [`save_table`] and validates it against the
/// graph it is about to serve: magic, version, and graph fingerprint must
/// all match, and the stored edge list must equal the graph's.
pub fn load_table(path: impl AsRef<Path>, g: &Graph) -> Result<TorsionWeightTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;

    let mut cursor = Reader::new(&bytes, path);
    let magic = cursor.take(4)?;
    if magic != MAGIC {
        return Err(Error::parse(path, 0, "not a TORW weight cache"));
    }
    let version = cursor.u32()?;
    if version != VERSION {
        return Err(Error::parse(
            path,
            0,
            format!("unsupported cache version {version}"),
        ));
    }
    let l_sub = cursor.u32()?;
    let n = cursor.u32()?;
    let graph_hash = GraphHash(cursor.u64()?);
    let num_vertices = cursor.u64()? as usize;
    let num_edges = cursor.u64()? as usize;

    if graph_hash != g.hash() {
        return Err(Error::Cache(
            "weight cache was built for a different graph (fingerprint mismatch)".into(),
        ));
    }
    if num_vertices != g.num_vertices() || num_edges != g.num_edges() {
        return Err(Error::Cache(format!(
            "cache covers {num_vertices} vertices / {num_edges} edges, graph has {} / {}",
            g.num_vertices(),
            g.num_edges()
        )));
    }

    let mut edges = Vec::with_capacity(num_edges);
    let mut edge_weights = Vec::with_capacity(num_edges);
    for _ in 0..num_edges {
        let u = cursor.u32()?;
        let v = cursor.u32()?;
        let w = cursor.f64()?;
        edges.push((u, v));
        edge_weights.push(w);
    }
    let mut self_weights = Vec::with_capacity(num_vertices);
    for _ in 0..num_vertices {
        self_weights.push(cursor.f64()?);
    }
    cursor.finish()?;
    if edges != g.edges() {
        return Err(Error::Cache(
            "cache edge list does not match the graph despite equal fingerprints".into(),
        ));
    }
    Ok(TorsionWeightTable {
        l_sub,
        n,
        graph_hash,
        edges,
        edge_weights,
        self_weights,
    })
}
