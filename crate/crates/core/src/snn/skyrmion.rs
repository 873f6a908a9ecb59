//! Compiles a binary-weight [`Network`] onto the device simulator.
//!
//! Layout per network:
//! - one input track per pixel ending in a junction tree that copies every
//!   skyrmion onto `n_exc` synapse tracks;
//! - synapse track (i, j) carries the gate holding bit (i, j) and ends in
//!   excitatory neuron j;
//! - excitatory neuron j emits onto an output track ending in inhibitory
//!   neuron j (threshold 1), which removes `inhibit_amount` counts from every
//!   other excitatory neuron when it fires.

use serde::{Deserialize, Serialize};

use super::{Dynamics, Layer, Network, PresentationOutcome, SpikeRecord, StepInputs};
use crate::cells::{BinarySynapse, SkyrmionNeuron};
use crate::device::{Counters, DeviceSim, DriveParams, Terminal, TrackGeometry};
use crate::energy::{EnergyLedger, MaterialParams};
use crate::error::{Error, Result};
use crate::snn::BitMatrix;
use crate::units::{ms_to_ns, NS_PER_MS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceLayout {
    pub input_track_nm: f64,
    pub synapse_track_nm: f64,
    /// Gate position along the synapse track.
    pub gate_position_nm: f64,
    pub output_track_nm: f64,
    pub junction_stage_nm: f64,
    pub width_nm: f64,
    pub thickness_nm: f64,
    pub min_spacing_nm: f64,
    pub conversion_delay_ns: f64,
}

impl Default for DeviceLayout {
    fn default() -> Self {
        DeviceLayout {
            input_track_nm: 1000.0,
            synapse_track_nm: 1000.0,
            gate_position_nm: 500.0,
            output_track_nm: 1000.0,
            junction_stage_nm: 100.0,
            width_nm: 50.0,
            thickness_nm: 1.0,
            min_spacing_nm: 30.0,
            conversion_delay_ns: SkyrmionNeuron::DEFAULT_CONVERSION_DELAY_NS,
        }
    }
}

impl DeviceLayout {
    /// Idealized wiring with no transit or conversion delay.
    pub fn zero_delay() -> Self {
        DeviceLayout {
            input_track_nm: 0.0,
            synapse_track_nm: 0.0,
            gate_position_nm: 0.0,
            output_track_nm: 0.0,
            junction_stage_nm: 0.0,
            conversion_delay_ns: 0.0,
            ..DeviceLayout::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("input_track_nm", self.input_track_nm),
            ("synapse_track_nm", self.synapse_track_nm),
            ("output_track_nm", self.output_track_nm),
            ("junction_stage_nm", self.junction_stage_nm),
            ("conversion_delay_ns", self.conversion_delay_ns),
            ("min_spacing_nm", self.min_spacing_nm),
        ];
        for (name, v) in lengths {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.width_nm > 0.0) || !(self.thickness_nm > 0.0) {
            return Err(Error::param("width_nm", "track cross-section must be positive"));
        }
        if !(0.0..=self.synapse_track_nm).contains(&self.gate_position_nm) {
            return Err(Error::param("gate_position_nm", "must lie on the synapse track"));
        }
        Ok(())
    }

    fn track(&self, length_nm: f64) -> TrackGeometry {
        TrackGeometry::plain(length_nm, self.width_nm, self.thickness_nm, self.min_spacing_nm)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub drive: DriveParams,
    pub material: MaterialParams,
    pub layout: DeviceLayout,
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        self.drive.validate()?;
        self.material.validate()?;
        self.layout.validate()
    }
}

/// Integer quantities the device network needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SkyrmionMapping {
    pub bits: BitMatrix,
    /// Skyrmion count at which each excitatory neuron fires.
    pub thresholds: Vec<u32>,
    pub inhibit_amount: u32,
    pub refractory_ns: f64,
}

impl SkyrmionMapping {
    /// Every weight must be exactly 0 or `w_max`. The threshold is the
    /// membrane distance from rest to threshold counted in unit EPSPs.
    pub fn from_network(net: &Network) -> Result<Self> {
        let w_max = net.weights.w_max();
        let data = net.weights.as_slice();
        if let Some(w) = data.iter().find(|&&w| w != 0.0 && w != w_max) {
            return Err(Error::Config {
                key: "weights".into(),
                reason: format!("skyrmion mode needs binary weights, found {w}"),
            });
        }
        let bits = BitMatrix::from_vec(
            net.weights.n_input(),
            net.weights.n_exc(),
            data.iter().map(|&w| w == w_max).collect(),
        )?;
        let unit = net.params.unit_epsp();
        let exc = &net.params.exc;
        let thresholds = net
            .theta
            .theta
            .iter()
            .map(|th| {
                let n = ((exc.v_thresh_base + th - exc.v_rest) / unit).round();
                n.max(1.0) as u32
            })
            .collect();
        let inhibit_amount = (net.params.inh_to_exc_weight / w_max).ceil().max(0.0) as u32;
        Ok(SkyrmionMapping {
            bits,
            thresholds,
            inhibit_amount,
            refractory_ns: ms_to_ns(exc.refractory),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SkyrmionRun {
    pub outcome: PresentationOutcome,
    pub ledger: EnergyLedger,
    pub counters: Counters,
}

pub(crate) fn run(
    net: &Network,
    device: &DeviceConfig,
    inputs: &StepInputs,
    rest_steps: usize,
    dt: f64,
    record: bool,
) -> Result<SkyrmionRun> {
    if let Dynamics::IntegrateFire { leak: true } = net.params.dynamics {
        return Err(Error::Config {
            key: "dynamics".into(),
            reason: "skyrmion neurons do not leak".into(),
        });
    }
    device.validate()?;
    crate::device::moving_velocity(&device.drive)?;
    let mapping = SkyrmionMapping::from_network(net)?;
    let (mut sim, input_tracks) = build(net, device, &mapping)?;
    let n_exc = net.topology.n_exc;

    for k in 0..inputs.n_steps() + rest_steps {
        let t_ns = ms_to_ns(k as f64 * dt);
        for &i in inputs.step(k) {
            sim.inject_skyrmion(input_tracks[i as usize], t_ns)?;
        }
        sim.advance_until(t_ns)?;
    }
    sim.run_until_idle()?;

    let mut outcome = PresentationOutcome {
        exc_counts: vec![0; n_exc],
        input_spikes: inputs.total(),
        ..PresentationOutcome::default()
    };
    for (t_ns, id) in sim.take_fires() {
        let (layer, neuron) = if id < n_exc { (Layer::Exc, id) } else { (Layer::Inh, id - n_exc) };
        match layer {
            Layer::Exc => outcome.exc_counts[neuron] += 1,
            Layer::Inh => outcome.inh_spikes += 1,
        }
        if record {
            outcome.records.push(SpikeRecord {
                neuron: neuron as u32,
                layer,
                time_ms: t_ns / NS_PER_MS,
            });
        }
    }
    Ok(SkyrmionRun {
        outcome,
        ledger: sim.ledger().clone(),
        counters: sim.counters(),
    })
}

fn build(net: &Network, device: &DeviceConfig, mapping: &SkyrmionMapping) -> Result<(DeviceSim, Vec<usize>)> {
    let n_exc = net.topology.n_exc;
    let n_input = net.topology.n_input;
    let layout = &device.layout;
    let drive = device.drive;
    let mut sim = DeviceSim::new(device.material);

    for &th in &mapping.thresholds {
        sim.add_neuron(SkyrmionNeuron::new(th, mapping.refractory_ns, layout.conversion_delay_ns)?);
    }
    for _ in 0..n_exc {
        sim.add_neuron(SkyrmionNeuron::new(1, 0.0, 0.0)?);
    }
    for j in 0..n_exc {
        let out = sim.add_track(layout.track(layout.output_track_nm), drive, Terminal::Neuron(n_exc + j))?;
        sim.connect_output(j, out)?;
        let targets = net.topology.inh_targets(j).collect();
        sim.set_inhibition(n_exc + j, targets, mapping.inhibit_amount)?;
    }

    let mut input_tracks = Vec::with_capacity(n_input);
    for i in 0..n_input {
        let mut branches = Vec::with_capacity(n_exc);
        for j in 0..n_exc {
            let t = sim.add_track(layout.track(layout.synapse_track_nm), drive, Terminal::Neuron(j))?;
            sim.add_gate(t, layout.gate_position_nm, BinarySynapse::new(mapping.bits.get(i, j)))?;
            branches.push(t);
        }
        let trunk = sim.add_track(
            layout.track(layout.input_track_nm),
            drive,
            Terminal::Junction {
                branches,
                stage_length_nm: layout.junction_stage_nm,
            },
        )?;
        input_tracks.push(trunk);
    }
    Ok((sim, input_tracks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{build_topology_with_inputs, AdaptiveThreshold, NetworkParams, ThetaParams, WeightMatrix};

    fn net(bits: Vec<bool>, n_input: usize, n_exc: usize) -> Network {
        let topo = build_topology_with_inputs(n_input, n_exc).unwrap();
        let w = WeightMatrix::from_bits(&BitMatrix::from_vec(n_input, n_exc, bits).unwrap(), 1.0);
        let params = NetworkParams {
            dynamics: Dynamics::IntegrateFire { leak: false },
            ..NetworkParams::default()
        };
        Network::new(topo, w, AdaptiveThreshold::new(n_exc, &ThetaParams::default()), params).unwrap()
    }

    #[test]
    fn analog_weights_are_rejected() {
        let mut n = net(vec![true; 4], 2, 2);
        n.weights.set_clamped(0, 0, 0.5);
        let err = SkyrmionMapping::from_network(&n).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn default_mapping_counts() {
        let n = net(vec![true; 4], 2, 2);
        let m = SkyrmionMapping::from_network(&n).unwrap();
        // 13 mV over 0.65 mV per unit
        assert_eq!(m.thresholds, vec![20, 20]);
        assert_eq!(m.inhibit_amount, 17);
    }

    #[test]
    fn stalled_drive_is_an_error() {
        let n = net(vec![true; 4], 2, 2);
        let mut dev = DeviceConfig::default();
        dev.drive.current_density = 1e7;
        let steps = StepInputs::from_nested(vec![vec![0]]);
        let err = n.run_skyrmion(&dev, &steps, 0, 0.5, false).unwrap_err();
        assert!(matches!(err, Error::StalledTransport { .. }));
    }

    #[test]
    fn blocked_synapses_never_reach_the_neuron() {
        let n = net(vec![false; 4], 2, 2);
        let steps = StepInputs::from_nested((0..50).map(|_| vec![0, 1]).collect());
        let run = n.run_skyrmion(&DeviceConfig::default(), &steps, 0, 0.5, false).unwrap();
        assert_eq!(run.outcome.total_exc(), 0);
        assert_eq!(run.counters.injected, 100);
        assert_eq!(run.counters.annihilated, 200);
        assert!(run.ledger.total_fj() > 0.0);
    }

    #[test]
    fn open_synapses_fire_after_threshold_arrivals() {
        let n = net(vec![true, false], 1, 2);
        let steps = StepInputs::from_nested((0..20).map(|_| vec![0]).collect());
        let run = n.run_skyrmion(&DeviceConfig::default(), &steps, 10, 0.5, true).unwrap();
        assert_eq!(run.outcome.exc_counts, vec![1, 0]);
        assert_eq!(run.outcome.inh_spikes, 1);
    }
}
