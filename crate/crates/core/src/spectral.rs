//! Boundary matrices, Hodge Laplacians, eigenvalue spectra, Betti numbers,
//! pseudo-determinants and the analytic torsion of a simplicial complex.
//!
//! Two independent Laplacian constructions are provided: [`hodge_laplacian`]
//! multiplies boundary matrices (`L_p = B_pᵀB_p + B_{p+1}B_{p+1}ᵀ`), while
//! [`entrywise_laplacian`] assembles the same matrix directly from simplex
//! adjacency and relative orientation. They must agree entry for entry,
//! which the test suite exploits as a cross-check.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::complex::SimplicialComplex;
use crate::dense::Mat;
use crate::error::{Error, Result};

/// Sparse signed boundary matrix `B_p` mapping `p`-chains to `(p−1)`-chains.
///
/// Rows are indexed by `(p−1)`-simplices and columns by `p`-simplices, both
/// in the complex's canonical (lexicographic) order. Each column holds the
/// `p+1` faces of one simplex with alternating signs.
#[derive(Clone, Debug)]
pub struct BoundaryMatrix {
    p: usize,
    rows: usize,
    cols: usize,
    col_entries: Vec<Vec<(usize, i8)>>,
}

impl BoundaryMatrix {
    #[must_use]
    pub fn p(&self) -> usize {
        self.p
    }

    #[must_use]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[must_use]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The `(row, sign)` entries of column `j`, in ascending row order.
    #[must_use]
    pub fn col(&self, j: usize) -> &[(usize, i8)] {
        &self.col_entries[j]
    }

    /// Dense row-major `{−1, 0, +1}` form.
    #[must_use]
    pub fn to_dense(&self) -> Vec<i64> {
        let mut out = vec![0i64; self.rows * self.cols];
        for (j, entries) in self.col_entries.iter().enumerate() {
            for &(r, s) in entries {
                out[r * self.cols + j] = i64::from(s);
            }
        }
        out
    }
}

/// Dense symmetric integer matrix (a Hodge Laplacian before eigensolving).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMat {
    n: usize,
    data: Vec<i64>,
}

impl IntMat {
    #[must_use]
    pub fn zeros(n: usize) -> IntMat {
        IntMat {
            n,
            data: vec![0; n * n],
        }
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major entries.
    #[must_use]
    pub fn data(&self) -> &[i64] {
        &self.data
    }

    /// Conversion to floating point for eigensolving.
    #[must_use]
    pub fn to_mat(&self) -> Mat {
        let data: Vec<f64> = self.data.iter().map(|&v| v as f64).collect();
        Mat::from_vec(self.n, self.n, data).expect("square by construction")
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = i64;

    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.n + j]
    }
}

/// Zero-eigenvalue classification policy: `λ` counts as zero iff
/// `λ ≤ max(abs, rel · λ_max)`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroTol {
    pub abs: f64,
    pub rel: f64,
}

impl Default for ZeroTol {
    fn default() -> ZeroTol {
        ZeroTol {
            abs: 1e-10,
            rel: 1e-8,
        }
    }
}

impl ZeroTol {
    /// The resolved threshold for a spectrum whose largest eigenvalue is
    /// `lambda_max`.
    #[must_use]
    pub fn threshold(&self, lambda_max: f64) -> f64 {
        self.abs.max(self.rel * lambda_max)
    }
}

/// The spectrum of one Hodge Laplacian `L_p` with its derived quantities.
#[derive(Clone, Debug)]
pub struct HodgeSpectrum {
    /// Laplacian dimension `p`.
    pub p: usize,
    /// Eigenvalues sorted ascending; values within tolerance of zero are
    /// clamped to exactly zero.
    pub eigenvalues: Vec<f64>,
    /// The resolved zero threshold used for classification.
    pub zero_tol: f64,
    /// Multiplicity of zero eigenvalues (the Betti number `β_p`).
    pub betti: usize,
    /// `Σ log λ` over nonzero eigenvalues; `0` for an empty product.
    pub log_pseudo_det: f64,
}

impl HodgeSpectrum {
    /// `ζ'_p(0) = −log|L_p|`.
    #[must_use]
    pub fn zeta_prime_zero(&self) -> f64 {
        -self.log_pseudo_det
    }
}

/// Builds the signed boundary matrix `B_p` of a complex,
/// `∂_p σ = Σ_i (−1)^i [v_0,…,v̂_i,…,v_p]` over the canonical ordering.
pub fn boundary_matrix(k: &SimplicialComplex, p: usize) -> Result<BoundaryMatrix> {
    if p == 0 || p > k.dimension() {
        return Err(Error::DimensionOutOfRange {
            p,
            dim: k.dimension(),
        });
    }
    let rows = k.num_simplices(p - 1);
    let cols = k.num_simplices(p);
    let mut col_entries = Vec::with_capacity(cols);
    for simplex in k.simplices(p) {
        let mut entries = Vec::with_capacity(p + 1);
        for omit in 0..=p {
            let mut face = simplex.clone();
            face.remove(omit);
            let row = k.simplex_index(p - 1, &face).ok_or_else(|| {
                Error::Complex(format!("face {face:?} of {simplex:?} is missing"))
            })?;
            let sign = if omit % 2 == 0 { 1i8 } else { -1i8 };
            entries.push((row, sign));
        }
        entries.sort_unstable_by_key(|&(r, _)| r);
        col_entries.push(entries);
    }
    Ok(BoundaryMatrix {
        p,
        rows,
        cols,
        col_entries,
    })
}

/// True iff `b_prev · b` is the zero matrix over the integers
/// (the `∂∘∂ = 0` identity for consecutive boundary matrices).
#[must_use]
pub fn compose_is_zero(b_prev: &BoundaryMatrix, b: &BoundaryMatrix) -> bool {
    debug_assert_eq!(b_prev.cols(), b.rows());
    let mut acc = vec![0i64; b_prev.rows()];
    for j in 0..b.cols() {
        acc.fill(0);
        for &(mid, s) in b.col(j) {
            for &(r, s2) in b_prev.col(mid) {
                acc[r] += i64::from(s) * i64::from(s2);
            }
        }
        if acc.iter().any(|&v| v != 0) {
            return false;
        }
    }
    true
}

/// `m += bᵀ · b` (Gram matrix of columns), accumulated row-wise in exact
/// integer arithmetic.
fn add_upper_product(m: &mut IntMat, b: &BoundaryMatrix) {
    let mut row_entries: Vec<Vec<(usize, i8)>> = vec![Vec::new(); b.rows()];
    for j in 0..b.cols() {
        for &(r, s) in b.col(j) {
            row_entries[r].push((j, s));
        }
    }
    for entries in &row_entries {
        for &(j1, s1) in entries {
            for &(j2, s2) in entries {
                m[(j1, j2)] += i64::from(s1) * i64::from(s2);
            }
        }
    }
}

/// `m += b · bᵀ` (Gram matrix of rows), accumulated column-wise.
fn add_lower_product(m: &mut IntMat, b: &BoundaryMatrix) {
    for j in 0..b.cols() {
        for &(r1, s1) in b.col(j) {
            for &(r2, s2) in b.col(j) {
                m[(r1, r2)] += i64::from(s1) * i64::from(s2);
            }
        }
    }
}

/// The Hodge Laplacian `L_p = B_pᵀB_p + B_{p+1}B_{p+1}ᵀ` with the
/// conventions `B_0 ≡ 0` and `B_{dim+1} ≡ 0`; so `L_0` is the graph
/// Laplacian of the 1-skeleton and `L_dim = B_dimᵀB_dim`.
pub fn hodge_laplacian(k: &SimplicialComplex, p: usize) -> Result<IntMat> {
    if p > k.dimension() {
        return Err(Error::DimensionOutOfRange {
            p,
            dim: k.dimension(),
        });
    }
    let mut m = IntMat::zeros(k.num_simplices(p));
    if p >= 1 {
        add_upper_product(&mut m, &boundary_matrix(k, p)?);
    }
    if p < k.dimension() {
        add_lower_product(&mut m, &boundary_matrix(k, p + 1)?);
    }
    Ok(m)
}

/// Assembles `L_p` directly from simplex adjacency, without forming any
/// boundary matrix; an independent oracle for [`hodge_laplacian`].
///
/// Rules: for `p = 0`, diagonal = vertex degree in the 1-skeleton and
/// off-diagonal = −1 exactly on edges. For `p ≥ 1`, diagonal = (number of
/// cofaces) + p + 1; two distinct simplices sharing a coface contribute 0;
/// simplices that are only lower-adjacent contribute the product of the
/// signs their shared face carries in each of them.
pub fn entrywise_laplacian(k: &SimplicialComplex, p: usize) -> Result<IntMat> {
    if p > k.dimension() {
        return Err(Error::DimensionOutOfRange {
            p,
            dim: k.dimension(),
        });
    }
    let n = k.num_simplices(p);
    let mut m = IntMat::zeros(n);

    if p == 0 {
        for edge in k.simplices(1) {
            let (u, v) = (edge[0] as usize, edge[1] as usize);
            m[(u, u)] += 1;
            m[(v, v)] += 1;
            m[(u, v)] = -1;
            m[(v, u)] = -1;
        }
        return Ok(m);
    }

    let simplices = k.simplices(p);
    let cofaces: HashSet<&[u32]> = k.simplices(p + 1).iter().map(Vec::as_slice).collect();

    // Upper degree of each p-simplex: how many (p+1)-simplices contain it.
    let mut upper_degree = vec![0i64; n];
    for coface in k.simplices(p + 1) {
        for omit in 0..coface.len() {
            let mut face = coface.clone();
            face.remove(omit);
            let idx = k
                .simplex_index(p, &face)
                .ok_or_else(|| Error::Complex(format!("face {face:?} missing")))?;
            upper_degree[idx] += 1;
        }
    }
    for (i, &d) in upper_degree.iter().enumerate() {
        m[(i, i)] = d + p as i64 + 1;
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let entry = off_diagonal_entry(&simplices[i], &simplices[j], &cofaces);
            m[(i, j)] = entry;
            m[(j, i)] = entry;
        }
    }
    Ok(m)
}

/// Off-diagonal rule for `p ≥ 1`: see [`entrywise_laplacian`].
fn off_diagonal_entry(a: &[u32], b: &[u32], cofaces: &HashSet<&[u32]>) -> i64 {
    // Shared face of two distinct p-simplices has p vertices iff they are
    // lower-adjacent; anything smaller contributes nothing.
    let shared: Vec<u32> = intersect(a, b);
    if shared.len() + 1 != a.len() {
        return 0;
    }
    // Upper-adjacent (their union is a stored coface): contributions from
    // B_pᵀB_p and B_{p+1}B_{p+1}ᵀ cancel exactly.
    let union = merge(a, b);
    if cofaces.contains(union.as_slice()) {
        return 0;
    }
    let sign = |simplex: &[u32]| -> i64 {
        let extra = simplex
            .iter()
            .position(|v| !shared.contains(v))
            .expect("exactly one extra vertex");
        if extra % 2 == 0 {
            1
        } else {
            -1
        }
    };
    sign(a) * sign(b)
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().copied().filter(|v| b.contains(v)).collect()
}

fn merge(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = a.iter().chain(b.iter()).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Full spectrum of a symmetric matrix with zero classification.
///
/// `p` only annotates the result. Fails if the iterative eigensolver does
/// not converge.
pub fn spectrum(p: usize, m: &Mat, policy: ZeroTol) -> Result<HodgeSpectrum> {
    debug_assert_eq!(m.rows(), m.cols(), "spectrum requires a square matrix");
    let n = m.rows();
    let mut eigenvalues: Vec<f64> = if n == 0 {
        Vec::new()
    } else {
        let dm = nalgebra::DMatrix::from_row_slice(n, n, m.data());
        let eig = dm
            .try_symmetric_eigen(f64::EPSILON, 128 * n.max(32))
            .ok_or(Error::Eigensolver { size: n })?;
        eig.eigenvalues.iter().copied().collect()
    };
    eigenvalues.sort_unstable_by(f64::total_cmp);
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let zero_tol = policy.threshold(lambda_max);
    let mut betti = 0;
    let mut log_pseudo_det = 0.0;
    for lambda in &mut eigenvalues {
        if *lambda <= zero_tol {
            *lambda = 0.0;
            betti += 1;
        } else {
            log_pseudo_det += lambda.ln();
        }
    }
    Ok(HodgeSpectrum {
        p,
        eigenvalues,
        zero_tol,
        betti,
        log_pseudo_det,
    })
}

/// Spectra of every `L_p`, `p = 0..=dimension`, under one policy.
pub fn hodge_spectra(k: &SimplicialComplex, policy: ZeroTol) -> Result<Vec<HodgeSpectrum>> {
    if k.num_simplices(0) == 0 {
        return Err(Error::Complex("empty complex".into()));
    }
    (0..=k.dimension())
        .map(|p| spectrum(p, &hodge_laplacian(k, p)?.to_mat(), policy))
        .collect()
}

/// `log T(K) = (1/2) Σ_{p=0}^{n} (−1)^{p+1} · p · log|L_p|` over
/// pseudo-determinants. For a 1-dimensional complex this is
/// `(1/2) log|L_1|`; for a 2-dimensional one, `(1/2) log|L_1| − log|L_2|`.
pub fn log_analytic_torsion(k: &SimplicialComplex) -> Result<f64> {
    let spectra = hodge_spectra(k, ZeroTol::default())?;
    Ok(log_torsion_from_spectra(&spectra))
}

/// The torsion sum evaluated on precomputed spectra.
#[must_use]
pub fn log_torsion_from_spectra(spectra: &[HodgeSpectrum]) -> f64 {
    let mut sum = 0.0;
    for s in spectra {
        if s.p == 0 {
            continue; // weighted by p = 0
        }
        let sign = if (s.p + 1) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * s.p as f64 * s.log_pseudo_det;
    }
    0.5 * sum
}

/// Betti numbers `β_0..β_dim` as zero-eigenvalue multiplicities.
pub fn betti_numbers(k: &SimplicialComplex) -> Result<Vec<usize>> {
    Ok(hodge_spectra(k, ZeroTol::default())?
        .iter()
        .map(|s| s.betti)
        .collect())
}

/// Human-readable dump of a complex and all its Laplacians: one simplex per
/// line (ambient vertex IDs) in dimension-separated sections, then each
/// `L_p` as row-major decimal text.
pub fn dump_complex(k: &SimplicialComplex) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# simplicial complex: dimension {}", k.dimension());
    for p in 0..=k.dimension() {
        let _ = writeln!(out, "# dimension {p} ({} simplices)", k.num_simplices(p));
        for i in 0..k.num_simplices(p) {
            let amb = k.ambient_simplex(p, i);
            let text: Vec<String> = amb.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{}", text.join(" "));
        }
    }
    for p in 0..=k.dimension() {
        let l = hodge_laplacian(k, p)?;
        let _ = writeln!(out, "# L_{p} ({0}x{0})", l.n());
        for i in 0..l.n() {
            let row: Vec<String> = (0..l.n()).map(|j| l[(i, j)].to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{clique_expand, local_complex};
    use crate::graph::Graph;
    use approx::assert_abs_diff_eq;

    fn triangle_graph() -> Graph {
        Graph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    fn single_edge() -> SimplicialComplex {
        clique_expand(&Graph::new(2, [(0, 1)]).unwrap(), 1).unwrap()
    }

    fn hollow_triangle() -> SimplicialComplex {
        clique_expand(&triangle_graph(), 1).unwrap()
    }

    fn filled_triangle() -> SimplicialComplex {
        clique_expand(&triangle_graph(), 2).unwrap()
    }

    #[test]
    fn boundary_of_single_edge() {
        let b = boundary_matrix(&single_edge(), 1).unwrap();
        assert_eq!(b.rows(), 2);
        assert_eq!(b.cols(), 1);
        assert_eq!(b.col(0), &[(0, -1), (1, 1)]);
    }

    #[test]
    fn boundary_of_filled_triangle() {
        let b = boundary_matrix(&filled_triangle(), 2).unwrap();
        // Edge rows [0,1],[0,2],[1,2]: ∂[0,1,2] = [1,2] − [0,2] + [0,1].
        assert_eq!(b.col(0), &[(0, 1), (1, -1), (2, 1)]);
        assert_eq!(b.to_dense(), vec![1, -1, 1]);
    }

    #[test]
    fn boundary_rejects_out_of_range_dimension() {
        assert!(boundary_matrix(&hollow_triangle(), 2).is_err());
        assert!(boundary_matrix(&hollow_triangle(), 0).is_err());
    }

    #[test]
    fn hodge_l0_of_triangle_is_graph_laplacian() {
        let l = hodge_laplacian(&hollow_triangle(), 0).unwrap();
        assert_eq!(l.data(), &[2, -1, -1, -1, 2, -1, -1, -1, 2]);
    }

    #[test]
    fn hodge_l1_of_single_edge() {
        let l = hodge_laplacian(&single_edge(), 1).unwrap();
        assert_eq!(l.data(), &[2]);
    }

    #[test]
    fn hodge_l2_of_filled_triangle() {
        let l = hodge_laplacian(&filled_triangle(), 2).unwrap();
        assert_eq!(l.data(), &[3]);
    }

    #[test]
    fn hollow_triangle_l1_by_hand() {
        let l = hodge_laplacian(&hollow_triangle(), 1).unwrap();
        assert_eq!(l.data(), &[2, 1, -1, 1, 2, 1, -1, 1, 2]);
    }

    #[test]
    fn entrywise_matches_hodge_on_worked_examples() {
        for (k, dims) in [
            (hollow_triangle(), 1usize),
            (filled_triangle(), 2),
            (single_edge(), 1),
        ] {
            for p in 0..=dims {
                let a = entrywise_laplacian(&k, p).unwrap();
                let b = hodge_laplacian(&k, p).unwrap();
                assert_eq!(a, b, "p = {p}");
            }
        }
    }

    #[test]
    fn entrywise_diagonals_follow_coface_rule() {
        let filled = entrywise_laplacian(&filled_triangle(), 1).unwrap();
        for i in 0..3 {
            assert_eq!(filled[(i, i)], 3, "one coface + p + 1");
        }
        let hollow = entrywise_laplacian(&hollow_triangle(), 1).unwrap();
        for i in 0..3 {
            assert_eq!(hollow[(i, i)], 2, "no cofaces + p + 1");
        }
    }

    #[test]
    fn spectrum_of_identity_and_zero() {
        let id = Mat::from_vec(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let s = spectrum(0, &id, ZeroTol::default()).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert_eq!(s.betti, 0);
        assert_abs_diff_eq!(s.log_pseudo_det, 0.0);

        let z = Mat::zeros(2, 2);
        let s = spectrum(1, &z, ZeroTol::default()).unwrap();
        assert_eq!(s.betti, 2);
        assert_abs_diff_eq!(s.log_pseudo_det, 0.0, epsilon = 0.0);
    }

    #[test]
    fn spectrum_of_triangle_l0() {
        let l = hodge_laplacian(&hollow_triangle(), 0).unwrap();
        let s = spectrum(0, &l.to_mat(), ZeroTol::default()).unwrap();
        assert_eq!(s.betti, 1);
        assert_abs_diff_eq!(s.eigenvalues[0], 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(s.eigenvalues[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[2], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.log_pseudo_det, 9f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.zeta_prime_zero(), -(9f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_torsion_constants() {
        let half_log = |x: f64| 0.5 * x.ln();
        assert_abs_diff_eq!(
            log_analytic_torsion(&single_edge()).unwrap(),
            half_log(2.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            log_analytic_torsion(&hollow_triangle()).unwrap(),
            3f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            log_analytic_torsion(&filled_triangle()).unwrap(),
            half_log(3.0),
            epsilon = 1e-12
        );
        let p3 = clique_expand(&Graph::new(3, [(0, 1), (1, 2)]).unwrap(), 1).unwrap();
        assert_abs_diff_eq!(
            log_analytic_torsion(&p3).unwrap(),
            half_log(3.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn betti_numbers_of_standard_shapes() {
        let c4 = clique_expand(
            &Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap(),
            1,
        )
        .unwrap();
        assert_eq!(betti_numbers(&c4).unwrap(), vec![1, 1]);

        let two_edges = clique_expand(&Graph::new(4, [(0, 1), (2, 3)]).unwrap(), 1).unwrap();
        assert_eq!(betti_numbers(&two_edges).unwrap()[0], 2);

        assert_eq!(betti_numbers(&filled_triangle()).unwrap(), vec![1, 0, 0]);
    }

    #[test]
    fn empty_complex_is_rejected() {
        let empty = clique_expand(&Graph::new(0, []).unwrap(), 1).unwrap();
        assert!(log_analytic_torsion(&empty).is_err());
        assert!(betti_numbers(&empty).is_err());
    }

    #[test]
    fn torsion_of_edgeless_complex_is_zero() {
        let k = clique_expand(&Graph::new(3, []).unwrap(), 2).unwrap();
        assert_eq!(k.dimension(), 0);
        assert_abs_diff_eq!(log_analytic_torsion(&k).unwrap(), 0.0, epsilon = 0.0);
        assert_eq!(betti_numbers(&k).unwrap(), vec![3]);
    }

    #[test]
    fn dump_contains_sections_and_matrices() {
        let text = dump_complex(&filled_triangle()).unwrap();
        assert!(text.contains("# dimension 0 (3 simplices)"));
        assert!(text.contains("# dimension 2 (1 simplices)"));
        assert!(text.contains("# L_2 (1x1)"));
        assert!(text.contains("\n3\n") || text.ends_with("\n3\n"));
        assert!(text.contains("0 1 2"));
    }

    #[test]
    fn local_complex_torsion_via_spectral_stack() {
        // Triangle edge with n=2 gives the filled triangle: (1/2) log 3.
        let g = triangle_graph();
        let k = local_complex(&g, 0, 1, 1, 2).unwrap();
        assert_abs_diff_eq!(
            log_analytic_torsion(&k).unwrap(),
            0.5 * 3f64.ln(),
            epsilon = 1e-12
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn graph_strategy() -> impl Strategy<Value = Graph> {
            (2usize..=8)
                .prop_flat_map(|n| {
                    let bits = proptest::collection::vec(any::<bool>(), n * (n - 1) / 2);
                    (Just(n), bits)
                })
                .prop_map(|(n, bits)| {
                    let mut edges = Vec::new();
                    let mut k = 0;
                    for u in 0..n as u32 {
                        for v in (u + 1)..n as u32 {
                            if bits[k] {
                                edges.push((u, v));
                            }
                            k += 1;
                        }
                    }
                    Graph::new(n, edges).unwrap()
                })
        }

        /// Rank of an integer matrix by fraction-free (Bareiss) elimination.
        fn integer_rank(mut m: Vec<i128>, rows: usize, cols: usize) -> usize {
            let mut rank = 0;
            let mut prev_pivot = 1i128;
            for col in 0..cols {
                let Some(pivot_row) = (rank..rows).find(|&r| m[r * cols + col] != 0) else {
                    continue;
                };
                for c in 0..cols {
                    m.swap(rank * cols + c, pivot_row * cols + c);
                }
                let pivot = m[rank * cols + col];
                for r in (rank + 1)..rows {
                    let lead = m[r * cols + col];
                    for c in 0..cols {
                        let val = m[r * cols + c] * pivot - lead * m[rank * cols + c];
                        m[r * cols + c] = val / prev_pivot;
                    }
                }
                prev_pivot = pivot;
                rank += 1;
            }
            rank
        }

        fn rank_of_boundary(k: &SimplicialComplex, p: usize) -> usize {
            if p == 0 || p > k.dimension() || k.num_simplices(p) == 0 {
                return 0;
            }
            let b = boundary_matrix(k, p).unwrap();
            let dense: Vec<i128> = b.to_dense().iter().map(|&v| i128::from(v)).collect();
            integer_rank(dense, b.rows(), b.cols())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn boundary_composition_vanishes(g in graph_strategy(), n in 2usize..=3) {
                let k = clique_expand(&g, n).unwrap();
                for p in 2..=k.dimension() {
                    let b_prev = boundary_matrix(&k, p - 1).unwrap();
                    let b = boundary_matrix(&k, p).unwrap();
                    prop_assert!(compose_is_zero(&b_prev, &b));
                }
            }

            #[test]
            fn laplacians_are_psd_and_constructions_agree(g in graph_strategy(), n in 1usize..=3) {
                let k = clique_expand(&g, n).unwrap();
                for p in 0..=k.dimension() {
                    let hodge = hodge_laplacian(&k, p).unwrap();
                    let entry = entrywise_laplacian(&k, p).unwrap();
                    prop_assert_eq!(&hodge, &entry, "p = {}", p);
                    let s = spectrum(p, &hodge.to_mat(), ZeroTol::default()).unwrap();
                    prop_assert!(s.eigenvalues.iter().all(|&l| l >= 0.0));
                    prop_assert_eq!(
                        s.betti + s.eigenvalues.iter().filter(|&&l| l > s.zero_tol).count(),
                        hodge.n()
                    );
                }
            }

            #[test]
            fn spectral_pairing_of_up_and_down_products(g in graph_strategy()) {
                // Nonzero spectra of B₁ᵀB₁ and B₁B₁ᵀ coincide; for 1-dim
                // complexes that is log|L_1| = log pseudo-det L_0.
                let k = clique_expand(&g, 1).unwrap();
                if k.dimension() == 1 {
                    let l0 = spectrum(0, &hodge_laplacian(&k, 0).unwrap().to_mat(), ZeroTol::default()).unwrap();
                    let l1 = spectrum(1, &hodge_laplacian(&k, 1).unwrap().to_mat(), ZeroTol::default()).unwrap();
                    prop_assert!((l0.log_pseudo_det - l1.log_pseudo_det).abs() < 1e-8,
                        "l0 {} vs l1 {}", l0.log_pseudo_det, l1.log_pseudo_det);
                }
            }

            #[test]
            fn betti_agrees_with_integer_rank_nullity(g in graph_strategy(), n in 1usize..=3) {
                let k = clique_expand(&g, n).unwrap();
                let spectra = hodge_spectra(&k, ZeroTol::default()).unwrap();
                for (p, s) in spectra.iter().enumerate() {
                    let dim_c = k.num_simplices(p);
                    let expected = dim_c - rank_of_boundary(&k, p) - rank_of_boundary(&k, p + 1);
                    prop_assert_eq!(s.betti, expected, "p = {}", p);
                }
            }

            #[test]
            fn relabeling_leaves_torsion_invariant(g in graph_strategy(), n in 1usize..=2, seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let base = log_analytic_torsion(&clique_expand(&g, n).unwrap()).unwrap();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut perm: Vec<u32> = (0..g.num_vertices() as u32).collect();
                perm.shuffle(&mut rng);
                let edges: Vec<(u32, u32)> = g
                    .edges()
                    .iter()
                    .map(|&(u, v)| (perm[u as usize], perm[v as usize]))
                    .collect();
                let relabeled = Graph::new(g.num_vertices(), edges).unwrap();
                let permuted = log_analytic_torsion(&clique_expand(&relabeled, n).unwrap()).unwrap();
                prop_assert!((base - permuted).abs() <= 1e-8, "{} vs {}", base, permuted);
            }
        }
    }
}
