//! End-to-end steps driven by a [`RunConfig`]: train, label, binarize,
//! evaluate, and threshold sweeps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{load_mnist_split, Checkpoint, Dataset, RunConfig};
use crate::snn::{AdaptiveThreshold, Network, MNIST_INPUTS};
use crate::train::{
    self, assign_labels, binarize_weights, evaluate, init_network, Backend, EvalReport, LabelAssignment, TrainSummary,
    WeightMode,
};

pub fn load_train(cfg: &RunConfig) -> Result<Dataset> {
    load_mnist_split(&cfg.data_dir, true)
}

pub fn load_test(cfg: &RunConfig) -> Result<Dataset> {
    load_mnist_split(&cfg.data_dir, false)
}

fn first(n: usize, data: &Dataset) -> Vec<usize> {
    (0..n.min(data.len())).collect()
}

/// Trains a fresh network on the first `n_train` samples. `on_checkpoint`
/// is called every `checkpoint_every` samples (if nonzero).
pub fn train_network(
    cfg: &RunConfig,
    data: &Dataset,
    mut on_checkpoint: impl FnMut(usize, &Network) -> Result<()>,
) -> Result<(Network, TrainSummary)> {
    let tp = cfg.train_params();
    let mut net = init_network(MNIST_INPUTS, cfg.n_exc, cfg.network_params(), &tp, cfg.seed)?;
    let every = cfg.train.checkpoint_every;
    let summary = train::train_unsupervised(
        &mut net,
        data,
        &first(cfg.n_train, data),
        &tp,
        &cfg.present_params(),
        cfg.seed,
        |k, n| {
            if every > 0 && k % every == 0 {
                on_checkpoint(k, n)?;
            }
            Ok(())
        },
    )?;
    Ok((net, summary))
}

pub fn to_checkpoint(net: &Network, labels: Option<&LabelAssignment>) -> Checkpoint {
    Checkpoint {
        weights: net.weights.clone(),
        theta: net.theta.theta.clone(),
        labels: labels.map(|l| l.labels.clone()),
    }
}

pub fn from_checkpoint(cfg: &RunConfig, ck: &Checkpoint) -> Result<Network> {
    if ck.weights.n_input() != MNIST_INPUTS {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} inputs, expected {MNIST_INPUTS}",
            ck.weights.n_input()
        )));
    }
    let n_exc = ck.weights.n_exc();
    let topo = crate::snn::build_topology(n_exc)?;
    let mut theta = AdaptiveThreshold::new(n_exc, &cfg.theta);
    theta.theta = ck.theta.clone();
    Network::new(topo, ck.weights.clone(), theta, cfg.network_params())
}

/// Labels read back from a checkpoint; silent neurons cannot be told apart
/// from class-0 neurons after the round trip, so `silent` is recounted as 0.
pub fn labels_of(ck: &Checkpoint) -> Result<LabelAssignment> {
    ck.labels
        .clone()
        .map(|labels| LabelAssignment { labels, silent: 0 })
        .ok_or_else(|| Error::Checkpoint("checkpoint has no labels; run `label` first".into()))
}

pub fn label_network(cfg: &RunConfig, net: &Network, data: &Dataset) -> Result<LabelAssignment> {
    assign_labels(net, data, &first(cfg.n_label, data), &cfg.present_params(), cfg.seed)
}

/// Copy of `net` with weights binarized at `threshold_frac` and set to `w_max`.
pub fn binarized(net: &Network, threshold_frac: f64) -> Result<Network> {
    let bits = binarize_weights(&net.weights, threshold_frac)?;
    Ok(net.with_binary_weights(&bits))
}

pub fn evaluate_network(
    cfg: &RunConfig,
    net: &Network,
    labels: &LabelAssignment,
    data: &Dataset,
    weight_mode: WeightMode,
) -> Result<EvalReport> {
    let backend = match cfg.mode {
        crate::snn::Mode::Reference => Backend::Reference,
        crate::snn::Mode::Skyrmion => Backend::Skyrmion(&cfg.device),
    };
    evaluate(
        net,
        data,
        &first(cfg.n_test, data),
        labels,
        backend,
        weight_mode,
        &cfg.present_params(),
        cfg.seed,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub threshold_frac: f64,
    pub ones_fraction: f64,
    pub accuracy: Option<f64>,
}

/// Binarizes at every threshold, relabels the binary network and evaluates it.
pub fn sweep_threshold(
    cfg: &RunConfig,
    net: &Network,
    train_data: &Dataset,
    test_data: &Dataset,
    thresholds: &[f64],
) -> Result<Vec<SweepPoint>> {
    thresholds
        .iter()
        .map(|&th| {
            let bin = binarized(net, th)?;
            let ones = bin.weights.as_slice().iter().filter(|&&w| w > 0.0).count();
            let labels = label_network(cfg, &bin, train_data)?;
            let report = evaluate_network(cfg, &bin, &labels, test_data, WeightMode::Binary)?;
            Ok(SweepPoint {
                threshold_frac: th,
                ones_fraction: ones as f64 / bin.weights.as_slice().len().max(1) as f64,
                accuracy: report.accuracy,
            })
        })
        .collect()
}
