//! Oriented simplicial complexes: clique expansion of a graph up to a given
//! order, and the local complex `K_{x,y}` built from the `l_sub`-hop
//! neighborhoods of an edge's endpoints.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// An oriented simplicial complex.
///
/// Simplices are stored per dimension as strictly increasing tuples of
/// *local* vertex indices, in lexicographic order; `vertex_ids` maps local
/// indices to ambient graph vertices and is itself strictly increasing, so
/// local order and ambient-ID order agree. The fixed lexicographic order of
/// each dimension's list is the canonical orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    dimension: usize,
    simplices: Vec<Vec<Vec<u32>>>,
    vertex_ids: Vec<u32>,
}

impl SimplicialComplex {
    /// Dimension of the complex (highest non-empty simplex level).
    #[must_use]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Simplices of dimension `p` as strictly increasing local-index tuples
    /// in lexicographic order. Empty for `p > dimension`.
    #[must_use]
    pub fn simplices(&self, p: usize) -> &[Vec<u32>] {
        self.simplices.get(p).map_or(&[], Vec::as_slice)
    }

    /// Number of `p`-simplices.
    #[must_use]
    pub fn num_simplices(&self, p: usize) -> usize {
        self.simplices(p).len()
    }

    /// Map from local vertex indices to ambient graph vertices.
    #[must_use]
    pub fn vertex_ids(&self) -> &[u32] {
        &self.vertex_ids
    }

    /// The ambient-ID form of simplex `i` of dimension `p`.
    #[must_use]
    pub fn ambient_simplex(&self, p: usize, i: usize) -> Vec<u32> {
        self.simplices[p][i]
            .iter()
            .map(|&v| self.vertex_ids[v as usize])
            .collect()
    }

    /// Position of a local-index tuple among the `p`-simplices.
    #[must_use]
    pub fn simplex_index(&self, p: usize, simplex: &[u32]) -> Option<usize> {
        self.simplices(p)
            .binary_search_by(|s| s.as_slice().cmp(simplex))
            .ok()
    }

    /// Checks the structural invariants: strictly increasing tuples, strict
    /// lexicographic order within each dimension, strictly increasing
    /// `vertex_ids`, and closure under faces.
    pub fn validate(&self) -> Result<()> {
        if self.vertex_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Complex("vertex_ids not strictly increasing".into()));
        }
        for (p, level) in self.simplices.iter().enumerate() {
            for s in level {
                if s.len() != p + 1 {
                    return Err(Error::Complex(format!(
                        "dimension-{p} simplex with {} vertices",
                        s.len()
                    )));
                }
                if s.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Complex(format!(
                        "simplex {s:?} not strictly increasing"
                    )));
                }
                if s.iter().any(|&v| v as usize >= self.vertex_ids.len()) {
                    return Err(Error::Complex(format!("simplex {s:?} out of range")));
                }
            }
            if level.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Complex(format!(
                    "dimension-{p} simplices not in strict lexicographic order"
                )));
            }
        }
        for p in 1..=self.dimension {
            for s in self.simplices(p) {
                for omit in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(omit);
                    if self.simplex_index(p - 1, &face).is_none() {
                        return Err(Error::Complex(format!(
                            "face {face:?} of {s:?} is missing"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the clique complex of `g` up to order `n`: the `p`-simplices
/// (`p ≤ n`) are exactly the `(p+1)`-cliques of `g`. The resulting dimension
/// is `min(n, largest clique − 1)`.
pub fn clique_expand(g: &Graph, n: usize) -> Result<SimplicialComplex> {
    if n == 0 {
        return Err(Error::Complex("complex order n must be ≥ 1".into()));
    }
    let adjacency: Vec<&[u32]> = (0..g.num_vertices() as u32)
        .map(|v| g.neighbors(v))
        .collect();
    let simplices = enumerate_cliques(&adjacency, n);
    Ok(from_levels(
        simplices,
        (0..g.num_vertices() as u32).collect(),
    ))
}

/// Builds the local complex `K_{x,y}`: the clique complex (order `n`) of the
/// subgraph induced by `{x, y} ∪ {v : dist(v,x) ≤ l_sub or dist(v,y) ≤ l_sub}`.
///
/// `x = y` is permitted and yields the `l_sub`-hop ball around `x` alone
/// (the self-pair complex `K_{x,x}`); for `x ≠ y` the pair must be an edge.
pub fn local_complex(g: &Graph, x: u32, y: u32, l_sub: u32, n: usize) -> Result<SimplicialComplex> {
    let nv = g.num_vertices();
    if x as usize >= nv || y as usize >= nv {
        return Err(Error::Complex(format!(
            "pair ({x}, {y}) references a vertex outside [0, {nv})"
        )));
    }
    if x != y && !g.has_edge(x, y) {
        return Err(Error::Complex(format!("({x}, {y}) is not an edge")));
    }
    if n == 0 {
        return Err(Error::Complex("complex order n must be ≥ 1".into()));
    }

    let mut in_ball = vec![false; nv];
    mark_ball(g, x, l_sub, &mut in_ball);
    if y != x {
        mark_ball(g, y, l_sub, &mut in_ball);
    }
    let vertex_ids: Vec<u32> = (0..nv as u32).filter(|&v| in_ball[v as usize]).collect();

    // Induced subgraph in local indices; neighbor lists stay sorted because
    // vertex_ids is ascending and g's adjacency is sorted.
    let mut local_index = vec![u32::MAX; nv];
    for (i, &v) in vertex_ids.iter().enumerate() {
        local_index[v as usize] = i as u32;
    }
    let adjacency: Vec<Vec<u32>> = vertex_ids
        .iter()
        .map(|&v| {
            g.neighbors(v)
                .iter()
                .filter(|&&u| in_ball[u as usize])
                .map(|&u| local_index[u as usize])
                .collect()
        })
        .collect();
    let adjacency_refs: Vec<&[u32]> = adjacency.iter().map(Vec::as_slice).collect();
    let simplices = enumerate_cliques(&adjacency_refs, n);
    Ok(from_levels(simplices, vertex_ids))
}

/// Marks every vertex within `l_sub` hops of `start` (including `start`).
fn mark_ball(g: &Graph, start: u32, l_sub: u32, in_ball: &mut [bool]) {
    let mut dist = vec![u32::MAX; g.num_vertices()];
    let mut queue = VecDeque::new();
    dist[start as usize] = 0;
    in_ball[start as usize] = true;
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize];
        if d == l_sub {
            continue;
        }
        for &u in g.neighbors(v) {
            if dist[u as usize] == u32::MAX {
                dist[u as usize] = d + 1;
                in_ball[u as usize] = true;
                queue.push_back(u);
            }
        }
    }
}

/// Depth-first clique enumeration over sorted adjacency, restricted to
/// higher-indexed neighbors and truncated at order `n`. Each clique is
/// produced exactly once, and within each size the production order is
/// lexicographic, so no post-sorting is needed.
fn enumerate_cliques(adjacency: &[&[u32]], n: usize) -> Vec<Vec<Vec<u32>>> {
    let mut levels: Vec<Vec<Vec<u32>>> = vec![Vec::new(); n + 1];
    let mut current: Vec<u32> = Vec::with_capacity(n + 1);
    for v in 0..adjacency.len() as u32 {
        current.push(v);
        levels[0].push(current.clone());
        if n >= 1 {
            let candidates: Vec<u32> = adjacency[v as usize]
                .iter()
                .copied()
                .filter(|&u| u > v)
                .collect();
            extend_clique(adjacency, n, &mut current, &candidates, &mut levels);
        }
        current.pop();
    }
    levels
}

fn extend_clique(
    adjacency: &[&[u32]],
    n: usize,
    current: &mut Vec<u32>,
    candidates: &[u32],
    levels: &mut [Vec<Vec<u32>>],
) {
    for (i, &u) in candidates.iter().enumerate() {
        current.push(u);
        levels[current.len() - 1].push(current.clone());
        if current.len() <= n {
            let narrowed = intersect_sorted(&candidates[i + 1..], adjacency[u as usize]);
            extend_clique(adjacency, n, current, &narrowed, levels);
        }
        current.pop();
    }
}

/// Intersection of two ascending slices.
fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn from_levels(mut levels: Vec<Vec<Vec<u32>>>, vertex_ids: Vec<u32>) -> SimplicialComplex {
    while levels.len() > 1 && levels.last().is_some_and(Vec::is_empty) {
        levels.pop();
    }
    let complex = SimplicialComplex {
        dimension: levels.len() - 1,
        simplices: levels,
        vertex_ids,
    };
    debug_assert!(complex.validate().is_ok());
    complex
}
