//! Torsion-weighted message passing, task heads, loss functions, manual
//! reverse-mode differentiation, the Adam optimizer, and the two training
//! loops.
//!
//! Everything here is plain `f64` on the CPU. Forward passes cache their
//! activations; [`backward`] consumes those caches to produce exact analytic
//! gradients, which a finite-difference oracle cross-checks in the test
//! suite. Training is single-threaded and bit-reproducible under a seed.

mod adam;
mod backward;
mod forward;
mod model;
mod train;

pub use adam::{adam_step, AdamState};
pub use backward::{link_loss_grad, node_loss_grad};
pub use forward::{
    aggregate, argmax, bce_loss, forward_layer, full_forward, link_loss, link_score, node_logits,
    node_loss, predict_link_scores, predict_node_classes, softmax_ce_loss, Activation,
    ForwardCache,
};
pub use model::{
    assign_flat, flatten_params, init_link_model, init_node_model, load_model, save_model, Mlp,
    ModelParams,
};
pub use train::{train_link, train_node, History, TrainConfig};
