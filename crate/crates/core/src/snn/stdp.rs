use super::params::StdpParams;
use super::weights::WeightMatrix;

/// Presynaptic traces, decayed lazily: each input stores its value at the
/// time of its last spike.
#[derive(Clone, Debug, PartialEq)]
pub struct PreTraces {
    tau: f64,
    value: Vec<f64>,
    last: Vec<f64>,
}

impl PreTraces {
    pub fn new(n_input: usize, tau: f64) -> Self {
        PreTraces {
            tau,
            value: vec![0.0; n_input],
            last: vec![0.0; n_input],
        }
    }

    pub fn value_at(&self, input: usize, t: f64) -> f64 {
        let v = self.value[input];
        if v == 0.0 {
            0.0
        } else {
            v * (-(t - self.last[input]) / self.tau).exp()
        }
    }

    pub fn on_pre(&mut self, input: usize, t: f64) {
        self.value[input] = self.value_at(input, t) + 1.0;
        self.last[input] = t;
    }

    pub fn reset(&mut self) {
        self.value.iter_mut().for_each(|v| *v = 0.0);
        self.last.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Shifts stored timestamps when the caller's clock restarts at zero.
    pub fn rebase(&mut self, now: f64) {
        self.last.iter_mut().for_each(|t| *t -= now);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlasticityEvent {
    Pre { input: usize, t: f64 },
    Post { exc: usize, t: f64 },
}

/// Applies events in order: pre spikes bump traces, post spikes move the
/// whole input column of that neuron.
pub fn stdp_update(weights: &mut WeightMatrix, traces: &mut PreTraces, events: &[PlasticityEvent], params: &StdpParams) {
    for e in events {
        match *e {
            PlasticityEvent::Pre { input, t } => traces.on_pre(input, t),
            PlasticityEvent::Post { exc, t } => potentiate_column(weights, traces, exc, t, params),
        }
    }
}

pub(crate) fn potentiate_column(weights: &mut WeightMatrix, traces: &PreTraces, exc: usize, t: f64, p: &StdpParams) {
    let w_max = weights.w_max();
    for i in 0..weights.n_input() {
        let x = traces.value_at(i, t);
        let w = weights.get(i, exc);
        let headroom = (w_max - w).max(0.0);
        let dw = p.eta * (x - p.x_tar) * soft_bound(headroom, p.mu_exp);
        weights.set_clamped(i, exc, w + dw);
    }
}

#[inline]
fn soft_bound(headroom: f64, mu: f64) -> f64 {
    if mu == 1.0 {
        headroom
    } else {
        headroom.powf(mu)
    }
}
