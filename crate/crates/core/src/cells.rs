//! The binary VCMA synapse and the count-to-threshold skyrmion neuron.

use serde::{Deserialize, Serialize};

use crate::device::duplication_stages;
use crate::error::{Error, Result};

/// Gate voltage that raises the VCMA barrier under an electrode.
pub const GATE_BLOCK_V: f64 = 5.0;

/// Synapse whose weight is the complementary voltage pair on gates G0/G1.
///
/// Weight 1 is (G0 = 0 V, G1 = 5 V): the skyrmion passes G0 toward the neuron.
/// Weight 0 is (G0 = 5 V, G1 = 0 V): it is steered into the reset branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySynapse {
    weight_bit: bool,
    g0_volts: f64,
    g1_volts: f64,
}

impl BinarySynapse {
    pub fn new(bit: bool) -> Self {
        let mut s = BinarySynapse {
            weight_bit: false,
            g0_volts: 0.0,
            g1_volts: 0.0,
        };
        s.set_weight(bit);
        s
    }

    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Self::new(false)),
            1 => Ok(Self::new(true)),
            other => Err(Error::param("weight_bit", format!("must be 0 or 1, got {other}"))),
        }
    }

    pub fn set_weight(&mut self, bit: bool) -> &mut Self {
        self.weight_bit = bit;
        if bit {
            self.g0_volts = 0.0;
            self.g1_volts = GATE_BLOCK_V;
        } else {
            self.g0_volts = GATE_BLOCK_V;
            self.g1_volts = 0.0;
        }
        self
    }

    pub fn weight_bit(&self) -> bool {
        self.weight_bit
    }

    /// `(G0, G1)` in volts.
    pub fn gate_voltages(&self) -> (f64, f64) {
        (self.g0_volts, self.g1_volts)
    }
}

/// Result of delivering one skyrmion to the neuron region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integration {
    /// No domain wall pair to push against; the skyrmion is lost.
    Discarded,
    Integrated { count: u32 },
    /// Count reached threshold; the caller must invoke `fire_and_reset`.
    Fire,
}

/// Timing of the consequences of a fire.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FireOutcome {
    pub fired_at_ns: f64,
    /// When the output skyrmion appears on the output track.
    pub output_at_ns: f64,
    /// When the spin polarizer re-nucleates the pinned domain wall pair.
    pub nucleation_at_ns: f64,
}

/// Integrate-and-fire neuron realized by a pinned domain wall pair that is
/// depinned after `threshold` skyrmions accumulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkyrmionNeuron {
    threshold: u32,
    count: u32,
    dwp_present: bool,
    refractory_ns: f64,
    conversion_delay_ns: f64,
    last_fire_ns: Option<f64>,
}

impl SkyrmionNeuron {
    pub const DEFAULT_THRESHOLD: u32 = 4;
    pub const DEFAULT_CONVERSION_DELAY_NS: f64 = 1.0;

    pub fn new(threshold: u32, refractory_ns: f64, conversion_delay_ns: f64) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::param("threshold", "must be >= 1"));
        }
        if !(refractory_ns >= 0.0 && refractory_ns.is_finite()) {
            return Err(Error::param("refractory_ns", "must be finite and >= 0"));
        }
        if !(conversion_delay_ns >= 0.0 && conversion_delay_ns.is_finite()) {
            return Err(Error::param("conversion_delay_ns", "must be finite and >= 0"));
        }
        Ok(SkyrmionNeuron {
            threshold,
            count: 0,
            dwp_present: true,
            refractory_ns,
            conversion_delay_ns,
            last_fire_ns: None,
        })
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn dwp_present(&self) -> bool {
        self.dwp_present
    }

    pub fn refractory_ns(&self) -> f64 {
        self.refractory_ns
    }

    pub fn conversion_delay_ns(&self) -> f64 {
        self.conversion_delay_ns
    }

    pub fn last_fire_ns(&self) -> Option<f64> {
        self.last_fire_ns
    }

    pub fn integrate_arrival(&mut self, _t_ns: f64) -> Integration {
        if !self.dwp_present {
            return Integration::Discarded;
        }
        self.count += 1;
        if self.count >= self.threshold {
            Integration::Fire
        } else {
            Integration::Integrated { count: self.count }
        }
    }

    /// Depins the domain wall pair: clears the count and removes the DWP
    /// until the nucleation at `t + refractory`.
    pub fn fire_and_reset(&mut self, t_ns: f64) -> Result<FireOutcome> {
        if !self.dwp_present {
            return Err(Error::Invariant("fire requested without a pinned DWP".into()));
        }
        if self.count < self.threshold {
            return Err(Error::Invariant(format!(
                "fire requested at count {} below threshold {}",
                self.count, self.threshold
            )));
        }
        self.count = 0;
        self.dwp_present = false;
        self.last_fire_ns = Some(t_ns);
        Ok(FireOutcome {
            fired_at_ns: t_ns,
            output_at_ns: t_ns + self.conversion_delay_ns,
            nucleation_at_ns: t_ns + self.refractory_ns,
        })
    }

    /// Spin-polarizer reset: a fresh DWP is pinned at the notch.
    pub fn nucleate(&mut self) {
        self.dwp_present = true;
        self.count = 0;
    }

    pub fn apply_inhibition(&mut self, amount: u32) {
        self.count = self.count.saturating_sub(amount);
    }
}

/// Fan-out of one output to `n_targets` post-neurons via Y-junction stages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanoutSpec {
    pub n_targets: usize,
    pub stage_delay_ns: f64,
}

impl FanoutSpec {
    pub fn stages(&self) -> u32 {
        duplication_stages(self.n_targets)
    }

    pub fn total_delay_ns(&self) -> f64 {
        self.stages() as f64 * self.stage_delay_ns
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_weight_drives_complementary_gates() {
        let mut s = BinarySynapse::new(false);
        assert_eq!(s.gate_voltages(), (5.0, 0.0));
        s.set_weight(true);
        assert_eq!(s.gate_voltages(), (0.0, 5.0));
        let before = s;
        s.set_weight(true);
        assert_eq!(s, before);
        assert!(BinarySynapse::from_bit(2).is_err());
        assert!(BinarySynapse::from_bit(1).unwrap().weight_bit());
    }

    #[test]
    fn threshold_four_fires_on_fourth() {
        let mut n = SkyrmionNeuron::new(4, 5.0, 1.0).unwrap();
        for k in 1..=3 {
            assert_eq!(n.integrate_arrival(k as f64), Integration::Integrated { count: k });
        }
        assert_eq!(n.integrate_arrival(4.0), Integration::Fire);
    }

    #[test]
    fn threshold_one_fires_immediately() {
        let mut n = SkyrmionNeuron::new(1, 5.0, 1.0).unwrap();
        assert_eq!(n.integrate_arrival(0.0), Integration::Fire);
    }

    #[test]
    fn fire_schedule_and_reset() {
        let mut n = SkyrmionNeuron::new(2, 5.0, 1.0).unwrap();
        n.integrate_arrival(99.0);
        assert_eq!(n.integrate_arrival(100.0), Integration::Fire);
        let out = n.fire_and_reset(100.0).unwrap();
        assert_eq!(out.output_at_ns, 101.0);
        assert_eq!(out.nucleation_at_ns, 105.0);
        assert_eq!(n.count(), 0);
        assert!(!n.dwp_present());
        // refractory: discarded and count unchanged
        assert_eq!(n.integrate_arrival(102.0), Integration::Discarded);
        assert_eq!(n.count(), 0);
        n.nucleate();
        assert_eq!(n.integrate_arrival(105.0), Integration::Integrated { count: 1 });
    }

    #[test]
    fn firing_without_dwp_is_an_invariant_error() {
        let mut n = SkyrmionNeuron::new(1, 5.0, 1.0).unwrap();
        n.integrate_arrival(0.0);
        n.fire_and_reset(0.0).unwrap();
        assert!(matches!(n.fire_and_reset(0.5), Err(Error::Invariant(_))));
        let mut fresh = SkyrmionNeuron::new(3, 5.0, 1.0).unwrap();
        assert!(matches!(fresh.fire_and_reset(0.0), Err(Error::Invariant(_))));
    }

    #[test]
    fn inhibition_floors_at_zero() {
        let mut n = SkyrmionNeuron::new(10, 5.0, 1.0).unwrap();
        for t in 0..3 {
            n.integrate_arrival(t as f64);
        }
        n.apply_inhibition(2);
        assert_eq!(n.count(), 1);
        n.apply_inhibition(0);
        assert_eq!(n.count(), 1);
        n.apply_inhibition(5);
        assert_eq!(n.count(), 0);
        assert!(n.dwp_present());
    }

    #[test]
    fn rejects_zero_threshold() {
        assert!(SkyrmionNeuron::new(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fanout_stages() {
        let f = FanoutSpec {
            n_targets: 5,
            stage_delay_ns: 2.0,
        };
        assert_eq!(f.stages(), 3);
        assert_eq!(f.total_delay_ns(), 6.0);
    }
}
