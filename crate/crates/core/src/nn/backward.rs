//! Manual reverse-mode differentiation of the two task losses.
//!
//! The forward pass caches every activation; the backward pass consumes the
//! cache and produces gradients shaped exactly like [`ModelParams`]. The
//! aggregation operator is symmetric, so its adjoint is itself — both message
//! directions of an edge reuse [`aggregate`].

use crate::dense::{axpy, Mat};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::forward::{
    aggregate, bce_from_logit, build_pair_features, full_forward, gather_rows, log_sum_exp,
    mlp_forward, sigmoid, ForwardCache,
};
use crate::nn::model::{Mlp, ModelParams};
use crate::weights::TorsionWeightTable;

/// Loss and exact analytic gradients of the link objective over a batch of
/// pairs with binary targets.
pub fn link_loss_grad(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    pairs: &[(u32, u32)],
    targets: &[bool],
) -> Result<(f64, ModelParams)> {
    if pairs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} pairs vs {} targets",
            pairs.len(),
            targets.len()
        )));
    }
    if pairs.is_empty() {
        return Err(Error::Metric("gradient of an empty batch".into()));
    }
    let mlp = params
        .mlp_link
        .as_ref()
        .ok_or_else(|| Error::Shape("model has no link head".into()))?;
    let cache = full_forward(params, g, table)?;
    let h_last = cache.output();
    let u = build_pair_features(h_last, pairs);
    let (a1, out) = mlp_forward(mlp, &u)?;

    // d loss / d logit = (σ(z) − t) / B; the loss itself comes for free.
    let batch = pairs.len() as f64;
    let mut loss = 0.0;
    let mut d_out = Mat::zeros(out.rows(), 1);
    for (i, &t) in targets.iter().enumerate() {
        let z = out[(i, 0)];
        loss += bce_from_logit(z, t);
        d_out[(i, 0)] = (sigmoid(z) - f64::from(u8::from(t))) / batch;
    }
    loss /= batch;

    let mut grads = params.zeros_like();
    let d_u = mlp_backward(mlp, &u, &a1, &d_out, grads.mlp_link.as_mut().unwrap());

    // Scatter pair-feature gradients back onto node representations:
    // u = (h_x + h_y, h_x ⊙ h_y, h_x, h_y).
    let width = h_last.cols();
    let mut d_h = Mat::zeros(h_last.rows(), width);
    for (r, &(x, y)) in pairs.iter().enumerate() {
        let dr = d_u.row(r).to_vec();
        let (x, y) = (x as usize, y as usize);
        for i in 0..width {
            let (s, pr) = (dr[i], dr[width + i]);
            d_h[(x, i)] += s + pr * h_last[(y, i)] + dr[2 * width + i];
            d_h[(y, i)] += s + pr * h_last[(x, i)] + dr[3 * width + i];
        }
    }

    message_passing_backward(params, g, table, &cache, d_h, &mut grads)?;
    check_finite(&grads)?;
    Ok((loss, grads))
}

/// Loss and exact analytic gradients of the node-classification objective
/// over a batch of vertices with integer labels.
pub fn node_loss_grad(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    nodes: &[u32],
    labels: &[usize],
) -> Result<(f64, ModelParams)> {
    if nodes.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} nodes vs {} labels",
            nodes.len(),
            labels.len()
        )));
    }
    if nodes.is_empty() {
        return Err(Error::Metric("gradient of an empty batch".into()));
    }
    let mlp = params
        .mlp_node
        .as_ref()
        .ok_or_else(|| Error::Shape("model has no node head".into()))?;
    let cache = full_forward(params, g, table)?;
    let h_last = cache.output();
    let u = gather_rows(h_last, nodes);
    let (a1, logits) = mlp_forward(mlp, &u)?;

    // d loss / d logits = (softmax − onehot) / B via log-sum-exp.
    let batch = nodes.len() as f64;
    let mut loss = 0.0;
    let mut d_out = Mat::zeros(logits.rows(), logits.cols());
    for (i, &t) in labels.iter().enumerate() {
        let row = logits.row(i);
        if t >= row.len() {
            return Err(Error::Shape(format!(
                "target class {t} out of range for {} logits",
                row.len()
            )));
        }
        let lse = log_sum_exp(row);
        loss += lse - row[t];
        let d_row = d_out.row_mut(i);
        for (j, &z) in row.iter().enumerate() {
            let onehot = f64::from(u8::from(j == t));
            d_row[j] = ((z - lse).exp() - onehot) / batch;
        }
    }
    loss /= batch;

    let mut grads = params.zeros_like();
    let d_u = mlp_backward(mlp, &u, &a1, &d_out, grads.mlp_node.as_mut().unwrap());

    let mut d_h = Mat::zeros(h_last.rows(), h_last.cols());
    for (i, &node) in nodes.iter().enumerate() {
        axpy(d_h.row_mut(node as usize), 1.0, d_u.row(i));
    }

    message_passing_backward(params, g, table, &cache, d_h, &mut grads)?;
    check_finite(&grads)?;
    Ok((loss, grads))
}

/// Backward through one MLP head. Fills the head's gradient tensors and
/// returns the gradient with respect to the head input.
fn mlp_backward(mlp: &Mlp, u: &Mat, a1: &Mat, d_out: &Mat, grad: &mut Mlp) -> Mat {
    grad.b2 = colsum(d_out);
    grad.w2 = a1.matmul_tn(d_out);
    let mut d_a1 = d_out.matmul_nt(&mlp.w2);
    relu_mask(&mut d_a1, a1);
    grad.b1 = colsum(&d_a1);
    grad.w1 = u.matmul_tn(&d_a1);
    d_a1.matmul_nt(&mlp.w1)
}

/// Backward through every message-passing layer, consuming the gradient with
/// respect to the final node representations. Fills `grads.layers` and, for
/// featureless models, `grads.embed`.
fn message_passing_backward(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    cache: &ForwardCache,
    mut d_h: Mat,
    grads: &mut ModelParams,
) -> Result<()> {
    let last = params.layers.len().saturating_sub(1);
    for l in (0..params.layers.len()).rev() {
        if l != last {
            // Hidden layers applied ReLU; the final layer is linear.
            relu_mask(&mut d_h, &cache.activations[l + 1]);
        }
        // h = act(A · (h_in · W)) and A is symmetric, so the adjoint of the
        // aggregation step is the aggregation step.
        let d_p = aggregate(g, table, &d_h)?;
        grads.layers[l] = cache.activations[l].matmul_tn(&d_p);
        if l > 0 || params.embed.is_some() {
            d_h = d_p.matmul_nt(&params.layers[l]);
        }
    }
    if params.embed.is_some() {
        grads.embed = Some(d_h);
    }
    Ok(())
}

/// Zeroes gradient entries whose forward activation was clamped by ReLU.
/// Post-activations are a valid mask: output > 0 iff pre-activation > 0.
fn relu_mask(d: &mut Mat, post: &Mat) {
    debug_assert_eq!(d.rows(), post.rows());
    debug_assert_eq!(d.cols(), post.cols());
    for (dv, &pv) in d.data_mut().iter_mut().zip(post.data()) {
        if pv <= 0.0 {
            *dv = 0.0;
        }
    }
}

/// Column sums as a `1 × k` row (bias gradients).
fn colsum(m: &Mat) -> Mat {
    let mut out = Mat::zeros(1, m.cols());
    for i in 0..m.rows() {
        axpy(out.row_mut(0), 1.0, m.row(i));
    }
    out
}

/// Rejects non-finite gradients, naming the offending tensor.
fn check_finite(grads: &ModelParams) -> Result<()> {
    for (name, tensor) in grads.tensor_names().into_iter().zip(grads.tensors()) {
        if !tensor.is_finite() {
            return Err(Error::NonFiniteGradient { layer: name });
        }
    }
    Ok(())
}
