//! Forward passes: torsion-weighted aggregation, message-passing layers,
//! the link and node heads, and the two loss functions.

use crate::dense::{axpy, Mat};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::model::{Mlp, ModelParams};
use crate::weights::TorsionWeightTable;

/// Elementwise activation of a message-passing layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, m: &mut Mat) {
        if self == Activation::Relu {
            m.map_inplace(|v| v.max(0.0));
        }
    }
}

/// Checks that a weight table was built for exactly this graph.
fn check_table(g: &Graph, table: &TorsionWeightTable) -> Result<()> {
    if table.graph_hash() != g.hash() || table.num_vertices() != g.num_vertices() {
        return Err(Error::Cache(
            "weight table does not match the graph it is applied to".into(),
        ));
    }
    Ok(())
}

/// The symmetric torsion-weighted aggregation operator applied to a row
/// matrix: `out_x = Σ_{y ∈ N(x) ∪ {x}} [d(x)d(y)]^{−1/2} · w(x,y) · p_y`,
/// with degrees clamped to ≥ 1 so isolated vertices keep their self term.
///
/// Accumulation order is fixed (self terms, then edges in canonical order),
/// so results are bit-reproducible.
pub fn aggregate(g: &Graph, table: &TorsionWeightTable, p: &Mat) -> Result<Mat> {
    check_table(g, table)?;
    let n = g.num_vertices();
    if p.rows() != n {
        return Err(Error::Shape(format!(
            "aggregation input has {} rows for {n} vertices",
            p.rows()
        )));
    }
    let inv_sqrt_deg: Vec<f64> = (0..n as u32)
        .map(|v| 1.0 / (g.degree(v).max(1) as f64).sqrt())
        .collect();
    let mut out = Mat::zeros(n, p.cols());
    for (x, &inv) in inv_sqrt_deg.iter().enumerate() {
        let c = table.self_weights()[x] * inv * inv;
        axpy(out.row_mut(x), c, p.row(x));
    }
    debug_assert_eq!(table.edges(), g.edges());
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        let c = table.edge_weights()[i] * inv_sqrt_deg[u as usize] * inv_sqrt_deg[v as usize];
        // Split borrows: rows u and v are disjoint because u < v.
        let (u, v) = (u as usize, v as usize);
        axpy_row_pair(&mut out, u, v, c, p);
    }
    Ok(out)
}

/// `out[u] += c · p[v]` and `out[v] += c · p[u]` for one undirected edge.
fn axpy_row_pair(out: &mut Mat, u: usize, v: usize, c: f64, p: &Mat) {
    debug_assert!(u < v);
    let cols = out.cols();
    let data = out.data_mut();
    let (head, tail) = data.split_at_mut(v * cols);
    let row_u = &mut head[u * cols..(u + 1) * cols];
    let row_v = &mut tail[..cols];
    for ((ou, ov), (pu, pv)) in row_u
        .iter_mut()
        .zip(row_v.iter_mut())
        .zip(p.row(u).iter().zip(p.row(v)))
    {
        *ou += c * pv;
        *ov += c * pu;
    }
}

/// One message-passing layer:
/// `h_x = σ( Σ_{y ∈ N(x) ∪ {x}} [d(x)d(y)]^{−1/2} · w(x,y) · W·h_y )`.
pub fn forward_layer(
    h_prev: &Mat,
    g: &Graph,
    table: &TorsionWeightTable,
    w: &Mat,
    activation: Activation,
) -> Result<Mat> {
    if h_prev.cols() != w.rows() {
        return Err(Error::Shape(format!(
            "layer input width {} does not match weight rows {}",
            h_prev.cols(),
            w.rows()
        )));
    }
    let projected = h_prev.matmul(w);
    let mut out = aggregate(g, table, &projected)?;
    activation.apply(&mut out);
    Ok(out)
}

/// Cached activations of a full forward pass: `activations[0]` is the input
/// (features or embedding) and `activations[l]` is the output of layer `l`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub activations: Vec<Mat>,
}

impl ForwardCache {
    /// Final node representations.
    #[must_use]
    pub fn output(&self) -> &Mat {
        self.activations.last().expect("at least the input layer")
    }
}

/// Runs every message-passing layer (ReLU on hidden layers, identity on the
/// last one, which feeds the task heads) and caches all activations.
pub fn full_forward(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
) -> Result<ForwardCache> {
    let h0 = match (&params.embed, g.features()) {
        (Some(e), _) => e.clone(),
        (None, Some(f)) => f.clone(),
        (None, None) => {
            return Err(Error::Shape(
                "model has no embedding table and the graph has no features".into(),
            ))
        }
    };
    if h0.rows() != g.num_vertices() {
        return Err(Error::Shape(format!(
            "input has {} rows for {} vertices",
            h0.rows(),
            g.num_vertices()
        )));
    }
    let mut activations = vec![h0];
    let last = params.layers.len().saturating_sub(1);
    for (l, w) in params.layers.iter().enumerate() {
        let activation = if l == last {
            Activation::Identity
        } else {
            Activation::Relu
        };
        let h = forward_layer(activations.last().unwrap(), g, table, w, activation)?;
        activations.push(h);
    }
    Ok(ForwardCache { activations })
}

/// `σ(z)` with the usual numerically stable split.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target, in the stable
/// `max(z,0) − z·t + ln(1 + e^{−|z|})` form.
pub(crate) fn bce_from_logit(z: f64, target: bool) -> f64 {
    let t = f64::from(u8::from(target));
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

/// The `4h` link-pair feature `(h_x + h_y, h_x ⊙ h_y, h_x, h_y)` for each
/// pair, as one row per pair.
pub(crate) fn build_pair_features(h: &Mat, pairs: &[(u32, u32)]) -> Mat {
    let width = h.cols();
    let mut u = Mat::zeros(pairs.len(), 4 * width);
    for (row, &(x, y)) in pairs.iter().enumerate() {
        let hx = h.row(x as usize);
        let hy = h.row(y as usize);
        let out = u.row_mut(row);
        for i in 0..width {
            out[i] = hx[i] + hy[i];
            out[width + i] = hx[i] * hy[i];
            out[2 * width + i] = hx[i];
            out[3 * width + i] = hy[i];
        }
    }
    u
}

/// MLP head forward over a batch of rows: returns the post-ReLU hidden
/// activations and the linear outputs.
pub(crate) fn mlp_forward(mlp: &Mlp, u: &Mat) -> Result<(Mat, Mat)> {
    if u.cols() != mlp.w1.rows() {
        return Err(Error::Shape(format!(
            "head input width {} does not match W1 rows {}",
            u.cols(),
            mlp.w1.rows()
        )));
    }
    let mut a1 = u.matmul(&mlp.w1);
    add_row_broadcast(&mut a1, &mlp.b1);
    a1.map_inplace(|v| v.max(0.0));
    let mut out = a1.matmul(&mlp.w2);
    add_row_broadcast(&mut out, &mlp.b2);
    Ok((a1, out))
}

/// Adds a `1 × k` bias row to every row of `m`.
pub(crate) fn add_row_broadcast(m: &mut Mat, bias: &Mat) {
    debug_assert_eq!(bias.rows(), 1);
    debug_assert_eq!(bias.cols(), m.cols());
    for i in 0..m.rows() {
        axpy(m.row_mut(i), 1.0, bias.row(0));
    }
}

/// Link-head probability for one pair of representations.
pub fn link_score(h_x: &[f64], h_y: &[f64], mlp: &Mlp) -> Result<f64> {
    if h_x.len() != h_y.len() {
        return Err(Error::Shape(format!(
            "pair representations differ in width: {} vs {}",
            h_x.len(),
            h_y.len()
        )));
    }
    let h = Mat::from_rows(&[h_x.to_vec(), h_y.to_vec()])?;
    let u = build_pair_features(&h, &[(0, 1)]);
    let (_, out) = mlp_forward(mlp, &u)?;
    Ok(sigmoid(out[(0, 0)]))
}

/// Node-head logits for one representation.
pub fn node_logits(h_x: &[f64], mlp: &Mlp) -> Result<Vec<f64>> {
    let u = Mat::from_rows(&[h_x.to_vec()])?;
    let (_, out) = mlp_forward(mlp, &u)?;
    Ok(out.row(0).to_vec())
}

/// Index of the largest entry; ties break to the lowest index.
#[must_use]
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean binary cross-entropy of probabilities against binary targets.
pub fn bce_loss(probabilities: &[f64], targets: &[bool]) -> Result<f64> {
    if probabilities.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} probabilities vs {} targets",
            probabilities.len(),
            targets.len()
        )));
    }
    if probabilities.is_empty() {
        return Err(Error::Metric("loss of an empty batch".into()));
    }
    let sum: f64 = probabilities
        .iter()
        .zip(targets)
        .map(|(&p, &t)| if t { -p.ln() } else { -(-p).ln_1p() })
        .sum();
    Ok(sum / probabilities.len() as f64)
}

/// Mean softmax cross-entropy of logit rows against integer class targets,
/// computed through log-sum-exp.
pub fn softmax_ce_loss(logits: &Mat, targets: &[usize]) -> Result<f64> {
    if logits.rows() != targets.len() {
        return Err(Error::Shape(format!(
            "{} logit rows vs {} targets",
            logits.rows(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::Metric("loss of an empty batch".into()));
    }
    let mut sum = 0.0;
    for (i, &t) in targets.iter().enumerate() {
        let row = logits.row(i);
        if t >= row.len() {
            return Err(Error::Shape(format!(
                "target class {t} out of range for {} logits",
                row.len()
            )));
        }
        sum += log_sum_exp(row) - row[t];
    }
    Ok(sum / targets.len() as f64)
}

pub(crate) fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = row.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln()
}

/// Loss of a link batch under the current parameters (forward only); the
/// finite-difference oracle in the tests differentiates exactly this.
pub fn link_loss(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    pairs: &[(u32, u32)],
    targets: &[bool],
) -> Result<f64> {
    if pairs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} pairs vs {} targets",
            pairs.len(),
            targets.len()
        )));
    }
    if pairs.is_empty() {
        return Err(Error::Metric("loss of an empty batch".into()));
    }
    let mlp = params
        .mlp_link
        .as_ref()
        .ok_or_else(|| Error::Shape("model has no link head".into()))?;
    let cache = full_forward(params, g, table)?;
    let u = build_pair_features(cache.output(), pairs);
    let (_, out) = mlp_forward(mlp, &u)?;
    let sum: f64 = out
        .data()
        .iter()
        .zip(targets)
        .map(|(&z, &t)| bce_from_logit(z, t))
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// Loss of a node batch under the current parameters (forward only).
pub fn node_loss(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    nodes: &[u32],
    labels: &[usize],
) -> Result<f64> {
    if nodes.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} nodes vs {} labels",
            nodes.len(),
            labels.len()
        )));
    }
    if nodes.is_empty() {
        return Err(Error::Metric("loss of an empty batch".into()));
    }
    let mlp = params
        .mlp_node
        .as_ref()
        .ok_or_else(|| Error::Shape("model has no node head".into()))?;
    let cache = full_forward(params, g, table)?;
    let u = gather_rows(cache.output(), nodes);
    let (_, logits) = mlp_forward(mlp, &u)?;
    softmax_ce_loss(&logits, labels)
}

/// Copies the listed rows of `m` into a new matrix.
pub(crate) fn gather_rows(m: &Mat, rows: &[u32]) -> Mat {
    let mut out = Mat::zeros(rows.len(), m.cols());
    for (i, &r) in rows.iter().enumerate() {
        out.row_mut(i).copy_from_slice(m.row(r as usize));
    }
    out
}

/// Scores a list of pairs with a trained model (one full forward pass).
pub fn predict_link_scores(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    pairs: &[(u32, u32)],
) -> Result<Vec<f64>> {
    let mlp = params
        .mlp_link
        .as_ref()
        .ok_or_else(|| Error::Shape("model has no link head".into()))?;
    let cache = full_forward(params, g, table)?;
    let u = build_pair_features(cache.output(), pairs);
    let (_, out) = mlp_forward(mlp, &u)?;
    Ok(out.data().iter().map(|&z| sigmoid(z)).collect())
}

/// Predicts a class for every vertex with a trained model.
pub fn predict_node_classes(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
) -> Result<Vec<usize>> {
    let mlp = params
        .mlp_node
        .as_ref()
        .ok_or_else(|| Error::Shape("model has no node head".into()))?;
    let cache = full_forward(params, g, table)?;
    let (_, logits) = mlp_forward(mlp, cache.output())?;
    Ok((0..logits.rows()).map(|i| argmax(logits.row(i))).collect())
}
