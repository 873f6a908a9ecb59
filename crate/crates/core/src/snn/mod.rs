//! Three-layer spiking network: Poisson input, excitatory layer with
//! plastic input weights, one-to-one inhibitory partners providing lateral
//! inhibition.
//!
//! Two execution modes share the same [`Network`]:
//! - [`Mode::Reference`] steps membrane equations on a fixed `dt` grid and
//!   is the only mode that learns;
//! - [`Mode::Skyrmion`] compiles the network onto nanotracks, gates and
//!   skyrmion neurons and replays the same step-binned input as skyrmion
//!   injections through the device simulator.

pub mod encoder;
pub mod params;
pub mod reference;
pub mod skyrmion;
pub mod stdp;
pub mod topology;
pub mod weights;

use serde::{Deserialize, Serialize};

pub use encoder::{encode_poisson, encode_poisson_rates, encode_poisson_rates_steps, SpikeTrains, StepInputs};
pub use params::{
    AdaptiveThreshold, Dynamics, LifParams, NetworkParams, PoissonEncoderParams, StdpParams, ThetaParams,
};
pub use reference::{step_reference, ReferenceState, StepContext, StepSpikes};
pub use skyrmion::{DeviceConfig, DeviceLayout, SkyrmionMapping, SkyrmionRun};
pub use stdp::{stdp_update, PlasticityEvent, PreTraces};
pub use topology::{build_topology, build_topology_with_inputs, NetworkTopology, MNIST_INPUTS};
pub use weights::{BitMatrix, WeightMatrix};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Reference,
    Skyrmion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Exc,
    Inh,
}

/// One spike. Times are ms from the start of the presentation in both modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub neuron: u32,
    pub layer: Layer,
    pub time_ms: f64,
}

/// Sorts records by (time, layer, neuron), the order used when comparing
/// rasters from different modes.
pub fn canonical_raster(records: &mut [SpikeRecord]) {
    records.sort_by(|a, b| {
        a.time_ms
            .total_cmp(&b.time_ms)
            .then(a.layer.cmp(&b.layer))
            .then(a.neuron.cmp(&b.neuron))
    });
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresentationOutcome {
    pub exc_counts: Vec<u32>,
    pub inh_spikes: u64,
    pub input_spikes: usize,
    /// Filled only when recording was requested.
    pub records: Vec<SpikeRecord>,
}

impl PresentationOutcome {
    pub fn total_exc(&self) -> u32 {
        self.exc_counts.iter().sum()
    }
}

/// Topology, learned state and fixed parameters of one network.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub topology: NetworkTopology,
    pub weights: WeightMatrix,
    pub theta: AdaptiveThreshold,
    pub params: NetworkParams,
}

impl Network {
    pub fn new(topology: NetworkTopology, weights: WeightMatrix, theta: AdaptiveThreshold, params: NetworkParams) -> Result<Self> {
        if weights.n_input() != topology.n_input || weights.n_exc() != topology.n_exc {
            return Err(Error::param("weights", "shape does not match topology"));
        }
        if theta.theta.len() != topology.n_exc {
            return Err(Error::param("theta", "length does not match n_exc"));
        }
        params.validate()?;
        Ok(Network {
            topology,
            weights,
            theta,
            params,
        })
    }

    /// Copy with the input weights replaced by `bits` at full strength.
    pub fn with_binary_weights(&self, bits: &BitMatrix) -> Self {
        Network {
            weights: WeightMatrix::from_bits(bits, self.weights.w_max()),
            ..self.clone()
        }
    }

    /// Inference run in the reference mode from a resting state.
    pub fn run_reference(&self, inputs: &StepInputs, rest_steps: usize, dt: f64, record: bool) -> Result<PresentationOutcome> {
        let mut state = ReferenceState::at_rest(&self.topology, &self.params, dt);
        let mut frozen = Frozen {
            weights: &self.weights,
            theta: &self.theta.theta,
        };
        simulate(&self.topology, &self.params, &mut frozen, &mut state, inputs, rest_steps, record)
    }

    /// Learning run: STDP on the input weights and homeostasis on theta.
    /// `state` and `traces` carry over between presentations.
    pub fn run_learning(
        &mut self,
        state: &mut ReferenceState,
        traces: &mut PreTraces,
        stdp: &StdpParams,
        inputs: &StepInputs,
        rest_steps: usize,
    ) -> Result<PresentationOutcome> {
        let mut learner = Learner {
            weights: &mut self.weights,
            theta: &mut self.theta,
            traces,
            stdp,
        };
        simulate(&self.topology, &self.params, &mut learner, state, inputs, rest_steps, false)
    }

    /// Inference on the device model. Requires binary weights.
    pub fn run_skyrmion(
        &self,
        device: &DeviceConfig,
        inputs: &StepInputs,
        rest_steps: usize,
        dt: f64,
        record: bool,
    ) -> Result<SkyrmionRun> {
        skyrmion::run(self, device, inputs, rest_steps, dt, record)
    }
}

trait Plasticity {
    fn weights(&self) -> &[f64];
    fn w_max(&self) -> f64;
    fn theta(&self) -> &[f64];
    fn after_step(&mut self, _t: f64, _dt: f64, _inputs: &[u32], _exc_spikes: &[u32]) {}
}

struct Frozen<'a> {
    weights: &'a WeightMatrix,
    theta: &'a [f64],
}

impl Plasticity for Frozen<'_> {
    fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }
    fn w_max(&self) -> f64 {
        self.weights.w_max()
    }
    fn theta(&self) -> &[f64] {
        self.theta
    }
}

struct Learner<'a> {
    weights: &'a mut WeightMatrix,
    theta: &'a mut AdaptiveThreshold,
    traces: &'a mut PreTraces,
    stdp: &'a StdpParams,
}

impl Plasticity for Learner<'_> {
    fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }
    fn w_max(&self) -> f64 {
        self.weights.w_max()
    }
    fn theta(&self) -> &[f64] {
        &self.theta.theta
    }

    // Post spikes of this step were caused by earlier input, so they see the
    // traces before this step's presynaptic spikes are added.
    fn after_step(&mut self, t: f64, dt: f64, inputs: &[u32], exc_spikes: &[u32]) {
        for &j in exc_spikes {
            stdp::potentiate_column(self.weights, self.traces, j as usize, t, self.stdp);
        }
        for &i in inputs {
            self.traces.on_pre(i as usize, t);
        }
        self.theta.decay(dt);
        for &j in exc_spikes {
            self.theta.on_spike(j as usize);
        }
    }
}

fn simulate<P: Plasticity>(
    topology: &NetworkTopology,
    params: &NetworkParams,
    plast: &mut P,
    state: &mut ReferenceState,
    inputs: &StepInputs,
    rest_steps: usize,
    record: bool,
) -> Result<PresentationOutcome> {
    let dt = state.dt();
    let t0 = state.time_ms();
    let mut out = StepSpikes::default();
    let mut outcome = PresentationOutcome {
        exc_counts: vec![0; topology.n_exc],
        input_spikes: inputs.total(),
        ..PresentationOutcome::default()
    };
    for k in 0..inputs.n_steps() + rest_steps {
        let step_inputs = inputs.step(k);
        let t = state.time_ms();
        {
            let ctx = StepContext {
                topology,
                params,
                weights: plast.weights(),
                w_max: plast.w_max(),
                theta: plast.theta(),
            };
            step_reference(state, &ctx, step_inputs, &mut out)?;
        }
        plast.after_step(t, dt, step_inputs, &out.exc);
        for &j in &out.exc {
            outcome.exc_counts[j as usize] += 1;
        }
        outcome.inh_spikes += out.inh.len() as u64;
        if record {
            let rel = t - t0;
            outcome.records.extend(out.exc.iter().map(|&j| SpikeRecord {
                neuron: j,
                layer: Layer::Exc,
                time_ms: rel,
            }));
            outcome.records.extend(out.inh.iter().map(|&j| SpikeRecord {
                neuron: j,
                layer: Layer::Inh,
                time_ms: rel,
            }));
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    fn small_net() -> Network {
        let topo = build_topology_with_inputs(784, 5).unwrap();
        let mut rng = stream_rng(1, 0, 0);
        let w = WeightMatrix::random(784, 5, 1.0, 0.3, &mut rng);
        Network::new(topo, w, AdaptiveThreshold::new(5, &ThetaParams::default()), NetworkParams::default()).unwrap()
    }

    #[test]
    fn blank_image_gives_no_excitatory_spikes() {
        let net = small_net();
        let mut rng = stream_rng(1, 1, 0);
        let trains = encode_poisson(&[0u8; 784], &PoissonEncoderParams::default(), &mut rng);
        let out = net.run_reference(&trains.to_steps(0.5), 300, 0.5, true).unwrap();
        assert_eq!(out.total_exc(), 0);
        assert!(out.records.is_empty());
    }

    #[test]
    fn bright_image_drives_spikes_and_learning_moves_weights() {
        let mut net = small_net();
        let mut rng = stream_rng(1, 1, 0);
        let img: Vec<u8> = (0..784).map(|i| if (i / 28) % 4 == 0 { 255 } else { 0 }).collect();
        let p = PoissonEncoderParams {
            rate_scale: 1.0,
            ..PoissonEncoderParams::default()
        };
        let steps = encode_poisson(&img, &p, &mut rng).to_steps(0.5);
        let frozen = net.run_reference(&steps, 300, 0.5, false).unwrap();
        assert!(frozen.total_exc() > 0);

        let before = net.weights.clone();
        let mut state = ReferenceState::at_rest(&net.topology, &net.params, 0.5);
        let mut traces = PreTraces::new(784, 20.0);
        let learned = net
            .run_learning(&mut state, &mut traces, &StdpParams::default(), &steps, 300)
            .unwrap();
        assert!(learned.total_exc() > 0);
        assert_ne!(before, net.weights);
        assert!(net.weights.within_bounds());
        assert!(net.theta.theta.iter().any(|t| *t > 0.0));
    }
}
