//! Unsupervised training, weight post-processing, labeling and evaluation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::seed::{stream_rng, streams};
use crate::snn::{
    build_topology_with_inputs, encode_poisson_rates_steps, AdaptiveThreshold, BitMatrix, DeviceConfig, Mode,
    Network, NetworkParams, PoissonEncoderParams, PresentationOutcome, PreTraces, ReferenceState, StdpParams,
    ThetaParams, WeightMatrix,
};

pub const N_CLASSES: usize = 10;

/// How one image is shown to the network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresentParams {
    pub dt_ms: f64,
    pub encoder: PoissonEncoderParams,
    /// Presentations with fewer excitatory spikes are repeated with a
    /// higher input rate.
    pub min_exc_spikes: u32,
    /// Added to `rate_scale` on every repeat.
    pub rate_boost: f64,
    pub max_boosts: u32,
}

impl Default for PresentParams {
    fn default() -> Self {
        PresentParams {
            dt_ms: 0.5,
            encoder: PoissonEncoderParams::default(),
            min_exc_spikes: 5,
            rate_boost: 0.125,
            max_boosts: 8,
        }
    }
}

impl PresentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ms > 0.0 && self.dt_ms.is_finite()) {
            return Err(Error::param("dt_ms", "must be > 0"));
        }
        self.encoder.validate()?;
        if !(self.rate_boost >= 0.0 && self.rate_boost.is_finite()) {
            return Err(Error::param("rate_boost", "must be >= 0"));
        }
        Ok(())
    }

    fn rest_steps(&self) -> usize {
        (self.encoder.rest_ms / self.dt_ms).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub stdp: StdpParams,
    pub theta: ThetaParams,
    /// Initial weights are uniform in `[0, init_max_weight]`.
    pub init_max_weight: f64,
    /// Target sum of every excitatory neuron's input-weight column.
    pub norm_target: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            stdp: StdpParams::default(),
            theta: ThetaParams::default(),
            init_max_weight: 0.3,
            norm_target: 78.0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        self.stdp.validate()?;
        self.theta.validate()?;
        if !(0.0..=self.stdp.w_max).contains(&self.init_max_weight) {
            return Err(Error::param("init_max_weight", "must lie in [0, w_max]"));
        }
        if !(self.norm_target > 0.0 && self.norm_target.is_finite()) {
            return Err(Error::param("norm_target", "must be > 0"));
        }
        Ok(())
    }
}

/// Untrained network with random input weights drawn from the init stream.
pub fn init_network(n_input: usize, n_exc: usize, params: NetworkParams, train: &TrainParams, seed: u64) -> Result<Network> {
    train.validate()?;
    let topo = build_topology_with_inputs(n_input, n_exc)?;
    let mut rng = stream_rng(seed, streams::INIT, 0);
    let weights = WeightMatrix::random(n_input, n_exc, train.stdp.w_max, train.init_max_weight, &mut rng);
    Network::new(topo, weights, AdaptiveThreshold::new(n_exc, &train.theta), params)
}

/// Scales every column to sum to `target`, then clamps to `[0, w_max]`.
/// All-zero columns are left as they are. Returns how many were skipped.
pub fn normalize_weights(weights: &mut WeightMatrix, target: f64) -> Result<usize> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::param("target", "column target must be > 0"));
    }
    let mut skipped = 0;
    for j in 0..weights.n_exc() {
        let sum = weights.column_sum(j);
        if sum > 0.0 {
            weights.scale_column(j, target / sum);
        } else {
            skipped += 1;
        }
    }
    Ok(skipped)
}

/// Bit is set iff `w / w_max >= threshold_frac` (ties round up).
pub fn binarize_weights(weights: &WeightMatrix, threshold_frac: f64) -> Result<BitMatrix> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::param("threshold_frac", "must lie in (0, 1)"));
    }
    let w_max = weights.w_max();
    BitMatrix::from_vec(
        weights.n_input(),
        weights.n_exc(),
        weights.as_slice().iter().map(|w| w / w_max >= threshold_frac).collect(),
    )
}

/// Mass fraction of weights in the lowest and highest tenth of `[0, w_max]`.
pub fn extreme_decile_mass(weights: &WeightMatrix) -> f64 {
    let w_max = weights.w_max();
    let data = weights.as_slice();
    if data.is_empty() {
        return 0.0;
    }
    let n = data
        .iter()
        .filter(|&&w| {
            let x = w / w_max;
            x < 0.1 || x >= 0.9
        })
        .count();
    n as f64 / data.len() as f64
}

/// Ten-bin histogram of `w / w_max`, the last bin closed.
pub fn weight_histogram(weights: &WeightMatrix) -> [u64; 10] {
    let mut h = [0u64; 10];
    for &w in weights.as_slice() {
        let b = ((w / weights.w_max()) * 10.0).floor().clamp(0.0, 9.0) as usize;
        h[b] += 1;
    }
    h
}

/// Mean over neurons of the share of column mass carried by its top tenth
/// of inputs. Uniform random columns give about 0.19.
pub fn receptive_field_selectivity(weights: &WeightMatrix) -> f64 {
    let k = (weights.n_input() / 10).max(1);
    let mut acc = 0.0;
    for j in 0..weights.n_exc() {
        let mut col = weights.column(j);
        let sum: f64 = col.iter().sum();
        if sum <= 0.0 {
            continue;
        }
        col.sort_by(|a, b| b.total_cmp(a));
        acc += col[..k].iter().sum::<f64>() / sum;
    }
    acc / weights.n_exc().max(1) as f64
}

/// Which simulator runs inference.
#[derive(Clone, Copy, Debug)]
pub enum Backend<'a> {
    Reference,
    Skyrmion(&'a DeviceConfig),
}

impl Backend<'_> {
    pub fn mode(&self) -> Mode {
        match self {
            Backend::Reference => Mode::Reference,
            Backend::Skyrmion(_) => Mode::Skyrmion,
        }
    }
}

/// Frozen presentation from rest, repeated at higher rates while the
/// excitatory layer stays below `min_exc_spikes`.
pub fn present(net: &Network, image: &[u8], backend: Backend<'_>, p: &PresentParams, rng_seed: (u64, u64, u64)) -> Result<PresentationOutcome> {
    let mut rng = stream_rng(rng_seed.0, rng_seed.1, rng_seed.2);
    let mut boosts = 0;
    loop {
        let rate = p.encoder.rate_scale + boosts as f64 * p.rate_boost;
        let steps = encode_poisson_rates_steps(image, rate, p.encoder.presentation_ms, p.dt_ms, &mut rng);
        let out = match backend {
            Backend::Reference => net.run_reference(&steps, 0, p.dt_ms, false)?,
            Backend::Skyrmion(dev) => net.run_skyrmion(dev, &steps, 0, p.dt_ms, false)?.outcome,
        };
        if out.total_exc() >= p.min_exc_spikes || boosts >= p.max_boosts {
            return Ok(out);
        }
        boosts += 1;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TrainSummary {
    pub samples: usize,
    pub boosts: u64,
    pub mean_exc_spikes: f64,
}

/// Sequential STDP training over `indices` of `data`. The callback sees the
/// network after every sample (1-based count) and decides on checkpoints.
pub fn train_unsupervised(
    net: &mut Network,
    data: &Dataset,
    indices: &[usize],
    train: &TrainParams,
    present: &PresentParams,
    seed: u64,
    mut after_sample: impl FnMut(usize, &Network) -> Result<()>,
) -> Result<TrainSummary> {
    train.validate()?;
    present.validate()?;
    if (net.weights.w_max() - train.stdp.w_max).abs() > 0.0 {
        return Err(Error::param("w_max", "network and STDP disagree on w_max"));
    }
    let mut summary = TrainSummary::default();
    if indices.is_empty() {
        return Ok(summary);
    }
    let mut state = ReferenceState::at_rest(&net.topology, &net.params, present.dt_ms);
    let mut traces = PreTraces::new(net.topology.n_input, train.stdp.tau_pre);
    let rest = present.rest_steps();
    let mut total_spikes = 0u64;
    normalize_weights(&mut net.weights, train.norm_target)?;
    for (k, &idx) in indices.iter().enumerate() {
        let image = data.image(idx)?;
        let mut rng = stream_rng(seed, streams::TRAIN, k as u64);
        let mut boosts = 0;
        loop {
            let rate = present.encoder.rate_scale + boosts as f64 * present.rate_boost;
            let steps = encode_poisson_rates_steps(image, rate, present.encoder.presentation_ms, present.dt_ms, &mut rng);
            let out = net.run_learning(&mut state, &mut traces, &train.stdp, &steps, rest)?;
            if !net.weights.all_finite() || net.theta.theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFinite(format!("network state after training sample {k}")));
            }
            if out.total_exc() >= present.min_exc_spikes || boosts >= present.max_boosts {
                total_spikes += out.total_exc() as u64;
                break;
            }
            boosts += 1;
        }
        summary.boosts += boosts as u64;
        normalize_weights(&mut net.weights, train.norm_target)?;
        summary.samples = k + 1;
        after_sample(k + 1, net)?;
    }
    summary.mean_exc_spikes = total_spikes as f64 / summary.samples as f64;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelAssignment {
    /// Class of every excitatory neuron.
    pub labels: Vec<u8>,
    /// Neurons that never fired during labeling; they fall back to class 0.
    pub silent: usize,
}

/// Spike counts of every excitatory neuron for each listed image, run in
/// parallel with per-image RNG streams keyed by dataset index.
fn responses(net: &Network, data: &Dataset, indices: &[usize], backend: Backend<'_>, p: &PresentParams, seed: u64, stream: u64) -> Result<Vec<PresentationOutcome>> {
    p.validate()?;
    indices
        .par_iter()
        .map(|&idx| present(net, data.image(idx)?, backend, p, (seed, stream, idx as u64)))
        .collect()
}

/// Labels each neuron with the class of highest mean response.
pub fn assign_labels(net: &Network, data: &Dataset, indices: &[usize], p: &PresentParams, seed: u64) -> Result<LabelAssignment> {
    let outs = responses(net, data, indices, Backend::Reference, p, seed, streams::LABEL)?;
    let n_exc = net.topology.n_exc;
    let mut sums = vec![[0u64; N_CLASSES]; n_exc];
    let mut per_class = [0u64; N_CLASSES];
    for (&idx, out) in indices.iter().zip(&outs) {
        let c = data.label(idx)? as usize;
        per_class[c] += 1;
        for (j, &k) in out.exc_counts.iter().enumerate() {
            sums[j][c] += k as u64;
        }
    }
    Ok(labels_from_sums(&sums, &per_class))
}

pub(crate) fn labels_from_sums(sums: &[[u64; N_CLASSES]], per_class: &[u64; N_CLASSES]) -> LabelAssignment {
    let mut labels = Vec::with_capacity(sums.len());
    let mut silent = 0;
    for row in sums {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..N_CLASSES {
            if per_class[c] == 0 {
                continue;
            }
            let mean = row[c] as f64 / per_class[c] as f64;
            if best.is_none_or(|(_, m)| mean > m) {
                best = Some((c, mean));
            }
        }
        match best {
            Some((c, m)) if m > 0.0 => labels.push(c as u8),
            _ => {
                labels.push(0);
                silent += 1;
            }
        }
    }
    LabelAssignment { labels, silent }
}

/// Argmax over classes of summed spikes of neurons with that label; ties go
/// to the lower class.
pub fn predict(exc_counts: &[u32], labels: &[u8]) -> u8 {
    let mut votes = [0u64; N_CLASSES];
    for (&k, &l) in exc_counts.iter().zip(labels) {
        votes[l as usize] += k as u64;
    }
    let mut best = 0;
    for c in 1..N_CLASSES {
        if votes[c] > votes[best] {
            best = c;
        }
    }
    best as u8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Analog,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `None` when no images were evaluated.
    pub accuracy: Option<f64>,
    /// Rows are true classes, columns predictions.
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
    pub mean_spikes_per_presentation: Option<f64>,
    pub weight_mode: WeightMode,
    pub mode: Mode,
    pub n_images: usize,
    pub silent_neurons: usize,
}

impl EvalReport {
    pub fn from_confusion(
        confusion: [[u64; N_CLASSES]; N_CLASSES],
        total_spikes: u64,
        weight_mode: WeightMode,
        mode: Mode,
        silent_neurons: usize,
    ) -> Self {
        let n: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..N_CLASSES).map(|c| confusion[c][c]).sum();
        EvalReport {
            accuracy: (n > 0).then(|| correct as f64 / n as f64),
            confusion,
            mean_spikes_per_presentation: (n > 0).then(|| total_spikes as f64 / n as f64),
            weight_mode,
            mode,
            n_images: n as usize,
            silent_neurons,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_confusion_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "true")?;
        for c in 0..N_CLASSES {
            write!(w, ",pred_{c}")?;
        }
        writeln!(w)?;
        for (t, row) in self.confusion.iter().enumerate() {
            write!(w, "{t}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Frozen evaluation; the network is only read.
pub fn evaluate(
    net: &Network,
    data: &Dataset,
    indices: &[usize],
    labels: &LabelAssignment,
    backend: Backend<'_>,
    weight_mode: WeightMode,
    p: &PresentParams,
    seed: u64,
) -> Result<EvalReport> {
    if labels.labels.len() != net.topology.n_exc {
        return Err(Error::param("labels", "one label per excitatory neuron required"));
    }
    let outs = responses(net, data, indices, backend, p, seed, streams::EVAL)?;
    let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
    let mut spikes = 0u64;
    for (&idx, out) in indices.iter().zip(&outs) {
        let truth = data.label(idx)? as usize;
        confusion[truth][predict(&out.exc_counts, &labels.labels) as usize] += 1;
        spikes += out.total_exc() as u64;
    }
    Ok(EvalReport::from_confusion(confusion, spikes, weight_mode, backend.mode(), labels.silent))
}

/// Per-image predictions, used to compare backends image by image.
pub fn predictions(net: &Network, data: &Dataset, indices: &[usize], labels: &LabelAssignment, backend: Backend<'_>, p: &PresentParams, seed: u64) -> Result<Vec<u8>> {
    let outs = responses(net, data, indices, backend, p, seed, streams::EVAL)?;
    Ok(outs.iter().map(|o| predict(&o.exc_counts, &labels.labels)).collect())
}
