//! Independent oracles and generators for the acceptance suite.
//!
//! Everything here is deliberately written from scratch against plain
//! adjacency matrices — subset-scan clique enumeration, naive boundary
//! assembly, a cyclic Jacobi eigensolver, a fraction-free determinant —
//! so the production pipeline is checked against a second, unrelated
//! implementation rather than against itself.

use std::time::Instant;

use rand::seq::SliceRandom as _;
use rand::Rng as _;
use rand_chacha::ChaCha8Rng;

use torgnn::dense::Mat;
use torgnn::graph::Graph;

// ---------------------------------------------------------------------------
// Criterion bookkeeping
// ---------------------------------------------------------------------------

/// Collects failures for one acceptance criterion and prints exactly one
/// PASS/FAIL line when finished.
pub struct Criterion {
    id: usize,
    title: &'static str,
    failures: Vec<String>,
    start: Instant,
}

impl Criterion {
    pub fn new(id: usize, title: &'static str) -> Criterion {
        Criterion {
            id,
            title,
            failures: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    /// Prints the single PASS/FAIL line and panics on failure. A runtime
    /// budget (seconds) is enforced as part of the criterion.
    pub fn finish(mut self, budget_s: Option<f64>) {
        let elapsed = self.start.elapsed().as_secs_f64();
        if let Some(budget) = budget_s {
            if elapsed > budget {
                self.failures
                    .push(format!("runtime {elapsed:.1} s exceeded budget {budget:.0} s"));
            }
        }
        if self.failures.is_empty() {
            println!(
                "criterion {:>2} ({}): PASS [{elapsed:.1} s]",
                self.id, self.title
            );
        } else {
            println!(
                "criterion {:>2} ({}): FAIL [{elapsed:.1} s] — {} problem(s), first: {}",
                self.id,
                self.title,
                self.failures.len(),
                self.failures[0]
            );
            panic!(
                "criterion {} failed:\n{}",
                self.id,
                self.failures.join("\n")
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Brute-force simplicial pipeline (criteria 1, 3, 5)
// ---------------------------------------------------------------------------

/// Dense symmetric adjacency, the oracle's only view of a graph.
pub fn adjacency(num_vertices: usize, edges: &[(u32, u32)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; num_vertices]; num_vertices];
    for &(u, v) in edges {
        adj[u as usize][v as usize] = true;
        adj[v as usize][u as usize] = true;
    }
    adj
}

/// Every clique of size ≤ `max_order + 1`, found by scanning all vertex
/// subsets (bitmask enumeration, so `num_vertices ≤ ~20`). Level `p` holds
/// the (p+1)-cliques sorted lexicographically; empty top levels are trimmed.
pub fn oracle_simplices(adj: &[Vec<bool>], max_order: usize) -> Vec<Vec<Vec<u32>>> {
    let n = adj.len();
    assert!(n <= 20, "subset scan is exponential in the vertex count");
    let mut levels: Vec<Vec<Vec<u32>>> = vec![Vec::new(); max_order + 1];
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > max_order + 1 {
            continue;
        }
        let members: Vec<u32> = (0..n as u32).filter(|v| mask >> v & 1 == 1).collect();
        let is_clique = members
            .iter()
            .enumerate()
            .all(|(i, &u)| members[i + 1..].iter().all(|&v| adj[u as usize][v as usize]));
        if is_clique {
            levels[size - 1].push(members);
        }
    }
    for level in &mut levels {
        level.sort();
    }
    while levels.len() > 1 && levels.last().is_some_and(Vec::is_empty) {
        levels.pop();
    }
    levels
}

/// Naive dense boundary matrix of dimension `p ≥ 1`: one column per
/// p-simplex, faces located by linear scan, signs alternating in the
/// position of the omitted vertex.
pub fn oracle_boundary(levels: &[Vec<Vec<u32>>], p: usize) -> Vec<Vec<f64>> {
    let rows = levels[p - 1].len();
    let cols = levels[p].len();
    let mut b = vec![vec![0.0; cols]; rows];
    for (j, simplex) in levels[p].iter().enumerate() {
        for omit in 0..simplex.len() {
            let mut face = simplex.clone();
            face.remove(omit);
            let i = levels[p - 1]
                .iter()
                .position(|f| *f == face)
                .expect("faces of a clique are cliques");
            b[i][j] = if omit % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    b
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if m.is_empty() {
        return Vec::new();
    }
    let (r, c) = (m.len(), m[0].len());
    let mut t = vec![vec![0.0; r]; c];
    for i in 0..r {
        for j in 0..c {
            t[j][i] = m[i][j];
        }
    }
    t
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let r = a.len();
    let inner = if r == 0 { 0 } else { a[0].len() };
    let c = if b.is_empty() { 0 } else { b[0].len() };
    let mut out = vec![vec![0.0; c]; r];
    for i in 0..r {
        for k in 0..inner {
            for j in 0..c {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn add_into(a: &mut [Vec<f64>], b: &[Vec<f64>]) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += y;
        }
    }
}

/// Dense `L_p = B_pᵀ B_p + B_{p+1} B_{p+1}ᵀ` from the oracle boundaries.
pub fn oracle_laplacian(levels: &[Vec<Vec<u32>>], p: usize) -> Vec<Vec<f64>> {
    let size = levels[p].len();
    let mut l = vec![vec![0.0; size]; size];
    if p >= 1 {
        let b = oracle_boundary(levels, p);
        add_into(&mut l, &matmul(&transpose(&b), &b));
    }
    if p + 1 < levels.len() {
        let b = oracle_boundary(levels, p + 1);
        add_into(&mut l, &matmul(&b, &transpose(&b)));
    }
    l
}

/// Cyclic Jacobi eigensolver for small symmetric matrices; returns the
/// eigenvalues in ascending order.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for row in &mut a {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                let (row_p, row_q) = (&mut head[p], &mut tail[0]);
                for (apk, aqk) in row_p.iter_mut().zip(row_q.iter_mut()) {
                    let (vp, vq) = (*apk, *aqk);
                    *apk = c * vp - s * vq;
                    *aqk = s * vp + c * vq;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Log pseudo-determinant under the documented zero policy: eigenvalues at
/// or below `max(1e-10, 1e-8·λ_max)` count as zero; the empty product is 1.
pub fn oracle_log_pseudo_det(eigenvalues: &[f64]) -> f64 {
    let lambda_max = eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let tol = (1e-8 * lambda_max).max(1e-10);
    eigenvalues
        .iter()
        .filter(|&&l| l > tol)
        .map(|&l| l.ln())
        .sum()
}

/// The full brute-force route: subsets → naive boundaries → dense
/// Laplacians → Jacobi → `(1/2) Σ_p (−1)^{p+1} · p · log|L_p|`.
pub fn oracle_log_torsion(num_vertices: usize, edges: &[(u32, u32)], n: usize) -> f64 {
    let adj = adjacency(num_vertices, edges);
    let levels = oracle_simplices(&adj, n);
    let mut sum = 0.0;
    for p in 1..levels.len() {
        let eigs = jacobi_eigenvalues(oracle_laplacian(&levels, p));
        let sign = if (p + 1) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * p as f64 * oracle_log_pseudo_det(&eigs);
    }
    0.5 * sum
}

// ---------------------------------------------------------------------------
// Matrix-tree oracle (criterion 2)
// ---------------------------------------------------------------------------

/// Number of spanning trees by Kirchhoff's theorem: the determinant of the
/// Laplacian with row and column 0 deleted, computed exactly with
/// fraction-free (Bareiss) elimination in `i128`.
pub fn spanning_tree_count(num_vertices: usize, edges: &[(u32, u32)]) -> i128 {
    assert!(num_vertices >= 1);
    let n = num_vertices - 1;
    if n == 0 {
        return 1;
    }
    let mut m = vec![vec![0i128; n]; n];
    for &(u, v) in edges {
        let (u, v) = (u as usize, v as usize);
        if u >= 1 {
            m[u - 1][u - 1] += 1;
        }
        if v >= 1 {
            m[v - 1][v - 1] += 1;
        }
        if u >= 1 && v >= 1 {
            m[u - 1][v - 1] -= 1;
            m[v - 1][u - 1] -= 1;
        }
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(pivot) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, pivot);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

// ---------------------------------------------------------------------------
// Graph generators
// ---------------------------------------------------------------------------

/// Erdős–Rényi `G(n, p)`.
pub fn random_graph(num_vertices: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..num_vertices as u32 {
        for v in u + 1..num_vertices as u32 {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(num_vertices, edges).expect("generated pairs are in range")
}

/// `G(n, p)` plus a random spanning chain, so the result is connected.
pub fn random_connected_graph(num_vertices: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges: Vec<(u32, u32)> = random_graph(num_vertices, p, rng).edges().to_vec();
    let mut order: Vec<u32> = (0..num_vertices as u32).collect();
    order.shuffle(rng);
    for i in 1..order.len() {
        let j = rng.random_range(0..i);
        edges.push((order[i], order[j]));
    }
    Graph::new(num_vertices, edges).expect("generated pairs are in range")
}

/// Stochastic block model over equal-size blocks; returns the graph and the
/// block label of every vertex.
pub fn stochastic_block_model(
    num_blocks: usize,
    block_size: usize,
    p_within: f64,
    p_between: f64,
    rng: &mut ChaCha8Rng,
) -> (Graph, Vec<usize>) {
    let n = num_blocks * block_size;
    let labels: Vec<usize> = (0..n).map(|v| v / block_size).collect();
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            let p = if labels[u as usize] == labels[v as usize] {
                p_within
            } else {
                p_between
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    (
        Graph::new(n, edges).expect("generated pairs are in range"),
        labels,
    )
}

/// One-hot class features with uniform noise on every component.
pub fn noisy_onehot_features(
    labels: &[usize],
    num_classes: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Mat {
    let mut m = Mat::zeros(labels.len(), num_classes);
    for (v, &label) in labels.iter().enumerate() {
        let row = m.row_mut(v);
        for (c, value) in row.iter_mut().enumerate() {
            let base = if c == label { 1.0 } else { 0.0 };
            *value = base + noise * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
    m
}

/// Connects every isolated vertex to its successor (mod N), so the graph can
/// round-trip through an edge-list file. Sparse random graphs occasionally
/// leave a vertex with no neighbours; this touches only those.
pub fn connect_isolated(g: &Graph) -> Graph {
    let n = g.num_vertices();
    let mut edges = g.edges().to_vec();
    for v in 0..n as u32 {
        if g.degree(v) == 0 {
            edges.push((v, (v + 1) % n as u32));
        }
    }
    Graph::new(n, edges).expect("patched pairs are in range")
}

/// Applies a random vertex permutation to a graph's edge list; returns the
/// permuted graph and the permutation used (`perm[old] = new`).
pub fn permuted_graph(g: &Graph, rng: &mut ChaCha8Rng) -> (Graph, Vec<u32>) {
    let n = g.num_vertices();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let edges: Vec<(u32, u32)> = g
        .edges()
        .iter()
        .map(|&(u, v)| (perm[u as usize], perm[v as usize]))
        .collect();
    (
        Graph::new(n, edges).expect("a permutation keeps pairs in range"),
        perm,
    )
}
