//! The two training loops: minibatch link prediction and full-batch node
//! classification, both seeded and bit-reproducible.

use rand::seq::SliceRandom as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;

use crate::datasets::{LinkSample, LinkSplit, NodeSplit};
use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::{accuracy, auc};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::backward::{link_loss_grad, node_loss_grad};
use crate::nn::forward::{predict_link_scores, predict_node_classes};
use crate::nn::model::{init_link_model, init_node_model, ModelParams};
use crate::weights::TorsionWeightTable;

/// Hyperparameters of one training run.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.lr
            )));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch record of a training run. `best_epoch` indexes the epoch whose
/// parameters were returned, or `None` when no epoch produced a usable
/// validation metric (the final parameters are returned then).
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub val_metric: Vec<f64>,
    pub best_epoch: Option<usize>,
}

fn check_divergence(loss: f64, params: &ModelParams, epoch: usize) -> Result<()> {
    if !loss.is_finite() || !params.is_finite() {
        return Err(Error::Divergence { epoch });
    }
    Ok(())
}

fn sample_pairs(samples: &[LinkSample]) -> (Vec<(u32, u32)>, Vec<bool>) {
    (
        samples.iter().map(|s| (s.x, s.y)).collect(),
        samples.iter().map(|s| s.label).collect(),
    )
}

/// Validation AUC of the current model, or NaN when the validation set is
/// empty or single-class (such an epoch is never selected as best).
fn val_auc(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    val: &[LinkSample],
) -> Result<f64> {
    if val.is_empty() {
        return Ok(f64::NAN);
    }
    let (pairs, labels) = sample_pairs(val);
    let scores = predict_link_scores(params, g, table, &pairs)?;
    Ok(auc(&scores, &labels).unwrap_or(f64::NAN))
}

/// Trains a link-prediction model on the split's observed graph with
/// minibatch Adam. Returns the parameters of the best validation epoch
/// (ties to the earliest) and the loss/metric history.
pub fn train_link(
    split: &LinkSplit,
    table: &TorsionWeightTable,
    cfg: &TrainConfig,
) -> Result<(ModelParams, History)> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::Dataset("link split has no training samples".into()));
    }
    let g = &split.observed_graph;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let feature_dim = g.features().map(Mat::cols);
    let mut params = init_link_model(feature_dim, g.num_vertices(), cfg.hidden, &mut rng);
    let mut state = AdamState::new(cfg.lr, &params);

    let mut history = History {
        train_loss: Vec::with_capacity(cfg.epochs),
        val_metric: Vec::with_capacity(cfg.epochs),
        best_epoch: None,
    };
    let mut best: Option<(f64, ModelParams)> = None;
    let mut order: Vec<usize> = (0..split.train.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<LinkSample> = chunk.iter().map(|&i| split.train[i]).collect();
            let (pairs, targets) = sample_pairs(&batch);
            let (loss, grads) = link_loss_grad(&params, g, table, &pairs, &targets)
                .map_err(|e| e.in_stage("nn"))?;
            check_divergence(loss, &params, epoch)?;
            adam_step(&mut params, &grads, &mut state)?;
            loss_sum += loss * chunk.len() as f64;
        }
        check_divergence(0.0, &params, epoch)?;
        let epoch_loss = loss_sum / split.train.len() as f64;
        let metric = val_auc(&params, g, table, &split.val)?;
        history.train_loss.push(epoch_loss);
        history.val_metric.push(metric);
        let improved = metric.is_finite() && best.as_ref().map_or(true, |(b, _)| metric > *b);
        if improved {
            best = Some((metric, params.clone()));
            history.best_epoch = Some(epoch);
        }
    }

    let final_params = match best {
        Some((_, p)) => p,
        None => params,
    };
    Ok((final_params, history))
}

/// Trains a node-classification model full-batch on the split's training
/// vertices. Returns the parameters of the best validation-accuracy epoch
/// (ties to the earliest) and the history.
pub fn train_node(
    g: &Graph,
    table: &TorsionWeightTable,
    split: &NodeSplit,
    cfg: &TrainConfig,
) -> Result<(ModelParams, History)> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::Dataset("node split has no training vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let feature_dim = g.features().map(Mat::cols);
    let mut params = init_node_model(
        feature_dim,
        g.num_vertices(),
        cfg.hidden,
        split.num_classes,
        &mut rng,
    );
    let mut state = AdamState::new(cfg.lr, &params);

    let train_labels: Vec<usize> = split
        .train
        .iter()
        .map(|&v| split.labels[v as usize])
        .collect();
    let val_labels: Vec<usize> = split
        .val
        .iter()
        .map(|&v| split.labels[v as usize])
        .collect();

    let mut history = History {
        train_loss: Vec::with_capacity(cfg.epochs),
        val_metric: Vec::with_capacity(cfg.epochs),
        best_epoch: None,
    };
    let mut best: Option<(f64, ModelParams)> = None;

    for epoch in 0..cfg.epochs {
        let (loss, grads) = node_loss_grad(&params, g, table, &split.train, &train_labels)
            .map_err(|e| e.in_stage("nn"))?;
        check_divergence(loss, &params, epoch)?;
        adam_step(&mut params, &grads, &mut state)?;
        check_divergence(loss, &params, epoch)?;

        let metric = if split.val.is_empty() {
            f64::NAN
        } else {
            let predicted = predict_node_classes(&params, g, table)?;
            let on_val: Vec<usize> = split.val.iter().map(|&v| predicted[v as usize]).collect();
            accuracy(&on_val, &val_labels).unwrap_or(f64::NAN)
        };
        history.train_loss.push(loss);
        history.val_metric.push(metric);
        let improved = metric.is_finite() && best.as_ref().map_or(true, |(b, _)| metric > *b);
        if improved {
            best = Some((metric, params.clone()));
            history.best_epoch = Some(epoch);
        }
    }

    let final_params = match best {
        Some((_, p)) => p,
        None => params,
    };
    Ok((final_params, history))
}
