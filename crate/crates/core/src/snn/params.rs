use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membrane dynamics used by the clock-driven reference mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Conductance-based leaky integrate-and-fire with exponential synapses.
    Conductance,
    /// Current-based integrate-and-fire: every unit of weight adds
    /// `unit_epsp_mv`, inhibition subtracts, and the membrane never drops
    /// below rest. `leak` toggles decay toward rest with `tau_membrane`.
    IntegrateFire { leak: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifParams {
    pub v_rest: f64,
    pub v_reset: f64,
    pub v_thresh_base: f64,
    pub e_exc: f64,
    pub e_inh: f64,
    pub tau_membrane: f64,
    pub tau_exc_conductance: f64,
    pub tau_inh_conductance: f64,
    pub refractory: f64,
}

impl LifParams {
    pub fn excitatory() -> Self {
        LifParams {
            v_rest: -65.0,
            v_reset: -65.0,
            v_thresh_base: -52.0,
            e_exc: 0.0,
            e_inh: -100.0,
            tau_membrane: 100.0,
            tau_exc_conductance: 1.0,
            tau_inh_conductance: 2.0,
            refractory: 5.0,
        }
    }

    pub fn inhibitory() -> Self {
        LifParams {
            v_rest: -60.0,
            v_reset: -45.0,
            v_thresh_base: -40.0,
            e_exc: 0.0,
            e_inh: -85.0,
            tau_membrane: 10.0,
            tau_exc_conductance: 1.0,
            tau_inh_conductance: 2.0,
            refractory: 2.0,
        }
    }

    pub fn validate(&self, block: &'static str) -> Result<()> {
        if !(self.v_reset < self.v_thresh_base) {
            return Err(Error::param(block, "v_reset must be below v_thresh_base"));
        }
        for v in [
            self.tau_membrane,
            self.tau_exc_conductance,
            self.tau_inh_conductance,
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(block, "time constants must be > 0"));
            }
        }
        if !(self.refractory >= 0.0) {
            return Err(Error::param(block, "refractory must be >= 0"));
        }
        Ok(())
    }

    /// Peak depolarization from rest caused by one unit-weight excitatory
    /// event: the conductance impulse `tau_exc` times the driving force,
    /// spread over the membrane time constant.
    pub fn unit_epsp_mv(&self) -> f64 {
        (self.e_exc - self.v_rest) * self.tau_exc_conductance / self.tau_membrane
    }
}

impl Default for LifParams {
    fn default() -> Self {
        Self::excitatory()
    }
}

/// Everything about the network that is not a learned weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkParams {
    pub exc: LifParams,
    pub inh: LifParams,
    /// Weight of each excitatory -> inhibitory one-to-one synapse.
    pub exc_to_inh_weight: f64,
    /// Weight of each inhibitory -> excitatory synapse (all but the partner).
    pub inh_to_exc_weight: f64,
    pub dynamics: Dynamics,
    /// Depolarization per unit weight for [`Dynamics::IntegrateFire`] and the
    /// skyrmion-count mapping. `None` derives it from `exc`.
    pub unit_epsp_mv: Option<f64>,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            exc: LifParams::excitatory(),
            inh: LifParams::inhibitory(),
            exc_to_inh_weight: 10.4,
            inh_to_exc_weight: 17.0,
            dynamics: Dynamics::Conductance,
            unit_epsp_mv: None,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        self.exc.validate("exc")?;
        self.inh.validate("inh")?;
        if !(self.exc_to_inh_weight >= 0.0 && self.inh_to_exc_weight >= 0.0) {
            return Err(Error::param("weights", "fixed weights must be >= 0"));
        }
        if let Some(u) = self.unit_epsp_mv {
            if !(u > 0.0 && u.is_finite()) {
                return Err(Error::param("unit_epsp_mv", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn unit_epsp(&self) -> f64 {
        self.unit_epsp_mv.unwrap_or_else(|| self.exc.unit_epsp_mv())
    }
}

/// Homeostatic threshold offsets of the excitatory layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveThreshold {
    pub theta: Vec<f64>,
    pub theta_plus: f64,
    pub tau_theta: f64,
}

impl AdaptiveThreshold {
    pub fn new(n_exc: usize, p: &ThetaParams) -> Self {
        AdaptiveThreshold {
            theta: vec![0.0; n_exc],
            theta_plus: p.theta_plus,
            tau_theta: p.tau_theta,
        }
    }

    /// Decays every offset over `dt` then adds `theta_plus` per spike.
    pub fn update(&mut self, spike_counts: &[u32], dt: f64) {
        let decay = (-dt / self.tau_theta).exp();
        for (th, &k) in self.theta.iter_mut().zip(spike_counts) {
            *th = *th * decay + k as f64 * self.theta_plus;
        }
    }

    pub fn decay(&mut self, dt: f64) {
        let decay = (-dt / self.tau_theta).exp();
        for th in &mut self.theta {
            *th *= decay;
        }
    }

    pub fn on_spike(&mut self, exc: usize) {
        self.theta[exc] += self.theta_plus;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaParams {
    pub theta_plus: f64,
    pub tau_theta: f64,
}

impl Default for ThetaParams {
    fn default() -> Self {
        ThetaParams {
            theta_plus: 0.05,
            tau_theta: 1e7,
        }
    }
}

impl ThetaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_plus >= 0.0) {
            return Err(Error::param("theta_plus", "must be >= 0"));
        }
        if !(self.tau_theta > 0.0) {
            return Err(Error::param("tau_theta", "must be > 0"));
        }
        Ok(())
    }
}

/// Post-synaptically triggered STDP with a target presynaptic trace and
/// soft upper bound: `dw = eta (x_pre - x_tar) (w_max - w)^mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StdpParams {
    pub tau_pre: f64,
    pub eta: f64,
    pub x_tar: f64,
    pub mu_exp: f64,
    pub w_max: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        StdpParams {
            tau_pre: 20.0,
            eta: 0.02,
            x_tar: 0.4,
            mu_exp: 1.0,
            w_max: 1.0,
        }
    }
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::param("eta", "must be > 0"));
        }
        if !(self.w_max > 0.0) {
            return Err(Error::param("w_max", "must be > 0"));
        }
        if !(self.tau_pre > 0.0) {
            return Err(Error::param("tau_pre", "must be > 0"));
        }
        if !(self.mu_exp >= 0.0) {
            return Err(Error::param("mu_exp", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoissonEncoderParams {
    /// Hz per intensity unit (0-255).
    pub rate_scale: f64,
    pub presentation_ms: f64,
    pub rest_ms: f64,
}

impl Default for PoissonEncoderParams {
    fn default() -> Self {
        PoissonEncoderParams {
            rate_scale: 0.25,
            presentation_ms: 350.0,
            rest_ms: 150.0,
        }
    }
}

impl PoissonEncoderParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_scale >= 0.0 && self.rate_scale.is_finite()) {
            return Err(Error::param("rate_scale", "must be >= 0"));
        }
        if !(self.presentation_ms > 0.0 && self.rest_ms > 0.0) {
            return Err(Error::param("presentation_ms", "durations must be > 0"));
        }
        Ok(())
    }
}
