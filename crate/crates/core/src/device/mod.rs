//! Behavioral model of skyrmion transport on nanotracks.
//!
//! Skyrmions drift at a constant velocity set by the drive current once the
//! current exceeds the depinning density. Everything else (gates, junctions,
//! neuron notches) is an event on the track timeline.

mod event;
mod geometry;
mod sim;

pub use event::{write_event_log, DeviceEvent, EventKind};
pub use geometry::{Feature, FeatureKind, Segment, TrackGeometry};
pub use sim::{Counters, DeviceSim, GateId, NeuronId, Skyrmion, SkyrmionId, Terminal, TrackId};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Spin-current drive applied to a track.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveParams {
    /// Drive current density J in A/m².
    pub current_density: f64,
    /// Mobility in m³/(A·s), so that v = mobility · J.
    pub mobility: f64,
    /// Depinning current density in A/m².
    pub depin_density: f64,
}

impl Default for DriveParams {
    /// 6e10 A/m² at 1.25e-9 m³/(A·s) gives the 75 m/s drift figure.
    fn default() -> Self {
        DriveParams {
            current_density: 6e10,
            mobility: 1.25e-9,
            depin_density: 1e8,
        }
    }
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !self.current_density.is_finite() || self.current_density < 0.0 {
            return Err(Error::param(
                "current_density",
                format!("must be finite and >= 0, got {}", self.current_density),
            ));
        }
        if !self.depin_density.is_finite() || self.depin_density <= 0.0 {
            return Err(Error::param(
                "depin_density",
                format!("must be finite and > 0, got {}", self.depin_density),
            ));
        }
        if !self.mobility.is_finite() || self.mobility <= 0.0 {
            return Err(Error::param(
                "mobility",
                format!("must be finite and > 0, got {}", self.mobility),
            ));
        }
        Ok(())
    }

    pub(crate) fn stalled(&self) -> Error {
        Error::StalledTransport {
            current_density: self.current_density,
            depin_density: self.depin_density,
        }
    }
}

/// Drift velocity in m/s: `mobility · J` above depinning, exactly zero below.
pub fn velocity_from_drive(d: &DriveParams) -> Result<f64> {
    d.validate()?;
    if d.current_density >= d.depin_density {
        Ok(d.mobility * d.current_density)
    } else {
        Ok(0.0)
    }
}

/// Velocity that must be nonzero, as required by anything that moves a skyrmion.
pub(crate) fn moving_velocity(d: &DriveParams) -> Result<f64> {
    let v = velocity_from_drive(d)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(d.stalled())
    }
}

/// Transit time in ns over `length_nm`.
pub fn propagation_delay(length_nm: f64, d: &DriveParams) -> Result<f64> {
    if !length_nm.is_finite() || length_nm < 0.0 {
        return Err(Error::param(
            "length",
            format!("must be finite and >= 0, got {length_nm}"),
        ));
    }
    let v = moving_velocity(d)?;
    Ok(units::s_to_ns(units::nm_to_m(length_nm) / v))
}

/// Outcome of a skyrmion reaching a synapse gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Continue toward the neuron region.
    Pass,
    /// Steered into the reset branch and annihilated.
    Annihilate,
}

/// Routing rule of the VCMA gate pair: weight 1 opens G0, weight 0 opens the reset branch.
pub fn route_at_synapse_gate(weight_bit: bool) -> Route {
    if weight_bit {
        Route::Pass
    } else {
        Route::Annihilate
    }
}

/// Binary-tree realization of an n-way fan-out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DuplicationPlan {
    pub branches: usize,
    pub stages: u32,
}

/// Stage count for duplicating one skyrmion onto `n_branches` tracks.
pub fn plan_duplication(n_branches: usize) -> Result<DuplicationPlan> {
    if n_branches == 0 {
        return Err(Error::param("n_branches", "must be >= 1"));
    }
    Ok(DuplicationPlan {
        branches: n_branches,
        stages: duplication_stages(n_branches),
    })
}

/// ceil(log2 n) for n >= 1.
pub fn duplication_stages(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn drive(j: f64) -> DriveParams {
        DriveParams {
            current_density: j,
            ..DriveParams::default()
        }
    }

    #[test]
    fn calibrated_velocity_is_75() {
        assert_relative_eq!(
            velocity_from_drive(&DriveParams::default()).unwrap(),
            75.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_and_subthreshold_drive_do_not_move() {
        assert_eq!(velocity_from_drive(&drive(0.0)).unwrap(), 0.0);
        assert_eq!(velocity_from_drive(&drive(5e7)).unwrap(), 0.0);
    }

    #[test]
    fn negative_drive_is_rejected() {
        assert!(matches!(
            velocity_from_drive(&drive(-1.0)),
            Err(Error::Parameter { name: "current_density", .. })
        ));
    }

    #[test]
    fn velocity_is_linear_above_depinning() {
        for j in [1e8, 3.3e9, 6e10, 2e11] {
            let v1 = velocity_from_drive(&drive(j)).unwrap();
            let v2 = velocity_from_drive(&drive(2.0 * j)).unwrap();
            assert_relative_eq!(v2, 2.0 * v1, max_relative = 1e-12);
        }
    }

    #[test]
    fn delays() {
        let d = DriveParams::default();
        assert_relative_eq!(
            propagation_delay(1000.0, &d).unwrap(),
            1000.0 / 75.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            propagation_delay(500.0, &d).unwrap(),
            6.666_666_666_666_667,
            max_relative = 1e-12
        );
        assert_eq!(propagation_delay(0.0, &d).unwrap(), 0.0);
        assert!(matches!(
            propagation_delay(10.0, &drive(5e7)),
            Err(Error::StalledTransport { .. })
        ));
    }

    #[test]
    fn gate_routing() {
        assert_eq!(route_at_synapse_gate(true), Route::Pass);
        assert_eq!(route_at_synapse_gate(false), Route::Annihilate);
    }

    #[test]
    fn duplication_stage_counts() {
        assert_eq!(plan_duplication(1).unwrap().stages, 0);
        assert_eq!(plan_duplication(2).unwrap().stages, 1);
        assert_eq!(plan_duplication(4).unwrap().stages, 2);
        assert_eq!(plan_duplication(5).unwrap().stages, 3);
        assert_eq!(plan_duplication(100).unwrap().stages, 7);
        assert!(plan_duplication(0).is_err());
        // brute-force oracle: smallest s with 2^s >= n
        for n in 1..2000usize {
            let s = (0..).find(|s| (1usize << s) >= n).unwrap();
            assert_eq!(duplication_stages(n), s, "n={n}");
        }
    }
}
