//! Clock-driven reference dynamics.

use super::params::{Dynamics, LifParams, NetworkParams};
use super::topology::NetworkTopology;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LayerState {
    pub v: Vec<f64>,
    pub ge: Vec<f64>,
    pub gi: Vec<f64>,
    /// Absolute time (ms) before which the neuron ignores input.
    pub refractory_until: Vec<f64>,
}

impl LayerState {
    fn at_rest(n: usize, p: &LifParams) -> Self {
        LayerState {
            v: vec![p.v_rest; n],
            ge: vec![0.0; n],
            gi: vec![0.0; n],
            refractory_until: vec![f64::NEG_INFINITY; n],
        }
    }
}

/// Membrane state of both neuron layers plus the step clock.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceState {
    step: u64,
    dt: f64,
    pub exc: LayerState,
    pub inh: LayerState,
}

impl ReferenceState {
    pub fn at_rest(topology: &NetworkTopology, params: &NetworkParams, dt: f64) -> Self {
        ReferenceState {
            step: 0,
            dt,
            exc: LayerState::at_rest(topology.n_exc, &params.exc),
            inh: LayerState::at_rest(topology.n_inh(), &params.inh),
        }
    }

    /// Time (ms) of the next step to be taken.
    pub fn time_ms(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Restarts the clock without touching membrane state.
    pub fn rewind_clock(&mut self) {
        let now = self.time_ms();
        for r in self
            .exc
            .refractory_until
            .iter_mut()
            .chain(self.inh.refractory_until.iter_mut())
        {
            *r -= now;
        }
        self.step = 0;
    }
}

/// Read-only view of what a step needs from the network.
pub struct StepContext<'a> {
    pub topology: &'a NetworkTopology,
    pub params: &'a NetworkParams,
    /// Row-major input weights.
    pub weights: &'a [f64],
    pub w_max: f64,
    pub theta: &'a [f64],
}

/// Spikes emitted by one step, ascending neuron id within each layer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepSpikes {
    pub exc: Vec<u32>,
    pub inh: Vec<u32>,
}

impl StepSpikes {
    pub fn clear(&mut self) {
        self.exc.clear();
        self.inh.clear();
    }
}

/// Advances the network by one step of `dt` ms with `inputs` spiking at
/// the start of the step. Returns the spikes in `out`.
pub fn step_reference(
    state: &mut ReferenceState,
    ctx: &StepContext<'_>,
    inputs: &[u32],
    out: &mut StepSpikes,
) -> Result<()> {
    if !(state.dt > 0.0) {
        return Err(Error::param("dt", "must be > 0"));
    }
    out.clear();
    match ctx.params.dynamics {
        Dynamics::Conductance => step_conductance(state, ctx, inputs, out)?,
        Dynamics::IntegrateFire { leak } => step_integrate_fire(state, ctx, inputs, leak, out)?,
    }
    state.step += 1;
    Ok(())
}

fn integrate_layer(
    layer: &mut LayerState,
    p: &LifParams,
    theta: Option<&[f64]>,
    t: f64,
    dt: f64,
    spikes: &mut Vec<u32>,
) -> Result<()> {
    let decay_e = (-dt / p.tau_exc_conductance).exp();
    let decay_i = (-dt / p.tau_inh_conductance).exp();
    for j in 0..layer.v.len() {
        let refractory = t < layer.refractory_until[j];
        if !refractory {
            let v = layer.v[j];
            let dv = ((p.v_rest - v) + layer.ge[j] * (p.e_exc - v) + layer.gi[j] * (p.e_inh - v))
                / p.tau_membrane;
            layer.v[j] = v + dt * dv;
        }
        layer.ge[j] *= decay_e;
        layer.gi[j] *= decay_i;
        if !layer.v[j].is_finite() {
            return Err(Error::NonFinite(format!("membrane potential of neuron {j} at {t} ms")));
        }
        let thresh = p.v_thresh_base + theta.map_or(0.0, |th| th[j]);
        if !refractory && layer.v[j] >= thresh {
            layer.v[j] = p.v_reset;
            layer.refractory_until[j] = t + p.refractory;
            spikes.push(j as u32);
        }
    }
    Ok(())
}

fn step_conductance(
    state: &mut ReferenceState,
    ctx: &StepContext<'_>,
    inputs: &[u32],
    out: &mut StepSpikes,
) -> Result<()> {
    let t = state.time_ms();
    let dt = state.dt;
    let p = ctx.params;
    integrate_layer(&mut state.exc, &p.exc, Some(ctx.theta), t, dt, &mut out.exc)?;
    integrate_layer(&mut state.inh, &p.inh, None, t, dt, &mut out.inh)?;

    let n_exc = ctx.topology.n_exc;
    for &i in inputs {
        let row = &ctx.weights[i as usize * n_exc..(i as usize + 1) * n_exc];
        for (g, w) in state.exc.ge.iter_mut().zip(row) {
            *g += w;
        }
    }
    for &j in &out.exc {
        state.inh.ge[ctx.topology.exc_to_inh(j as usize)] += p.exc_to_inh_weight;
    }
    for &k in &out.inh {
        for e in ctx.topology.inh_targets(k as usize) {
            state.exc.gi[e] += p.inh_to_exc_weight;
        }
    }
    Ok(())
}

/// Leak-free (optionally leaky) current-based counting neuron. The
/// inhibitory layer is a relay: each inhibitory neuron fires in the same
/// step as its partner and immediately lowers every other excitatory
/// membrane, floored at rest.
fn step_integrate_fire(
    state: &mut ReferenceState,
    ctx: &StepContext<'_>,
    inputs: &[u32],
    leak: bool,
    out: &mut StepSpikes,
) -> Result<()> {
    let t = state.time_ms();
    let dt = state.dt;
    let p = &ctx.params.exc;
    let unit = ctx.params.unit_epsp();
    let n_exc = ctx.topology.n_exc;
    let exc = &mut state.exc;

    if leak {
        let f = dt / p.tau_membrane;
        for j in 0..n_exc {
            if t >= exc.refractory_until[j] {
                exc.v[j] += (p.v_rest - exc.v[j]) * f;
            }
        }
    }
    for &i in inputs {
        let row = &ctx.weights[i as usize * n_exc..(i as usize + 1) * n_exc];
        for j in 0..n_exc {
            if t >= exc.refractory_until[j] {
                exc.v[j] += row[j] / ctx.w_max * unit;
            }
        }
    }
    for j in 0..n_exc {
        if !exc.v[j].is_finite() {
            return Err(Error::NonFinite(format!("membrane potential of neuron {j} at {t} ms")));
        }
        if t >= exc.refractory_until[j] && exc.v[j] >= p.v_thresh_base + ctx.theta[j] {
            exc.v[j] = p.v_reset;
            exc.refractory_until[j] = t + p.refractory;
            out.exc.push(j as u32);
        }
    }
    out.inh.extend(out.exc.iter().map(|&j| ctx.topology.exc_to_inh(j as usize) as u32));
    let drop = ctx.params.inh_to_exc_weight / ctx.w_max * unit;
    for &k in &out.inh {
        for e in ctx.topology.inh_targets(k as usize) {
            exc.v[e] = (exc.v[e] - drop).max(p.v_rest);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::topology::build_topology_with_inputs;

    fn ctx_parts(dynamics: Dynamics) -> (NetworkTopology, NetworkParams) {
        let topo = build_topology_with_inputs(1, 1).unwrap();
        let params = NetworkParams {
            dynamics,
            ..NetworkParams::default()
        };
        (topo, params)
    }

    #[test]
    fn resting_state_is_a_fixed_point() {
        let (topo, params) = ctx_parts(Dynamics::Conductance);
        let mut s = ReferenceState::at_rest(&topo, &params, 0.5);
        let ctx = StepContext {
            topology: &topo,
            params: &params,
            weights: &[0.5],
            w_max: 1.0,
            theta: &[0.0],
        };
        let mut out = StepSpikes::default();
        for _ in 0..1000 {
            step_reference(&mut s, &ctx, &[], &mut out).unwrap();
            assert!(out.exc.is_empty());
        }
        assert_eq!(s.exc.v[0], -65.0);
        assert_eq!(s.inh.v[0], -60.0);
    }

    /// Constant suprathreshold drive: with ge held fixed the membrane relaxes
    /// exponentially toward v_inf = (v_rest + g E_exc) / (1 + g) with time
    /// constant tau / (1 + g), so each inter-spike interval is the refractory
    /// period plus the closed-form charging time from reset to threshold.
    #[test]
    fn constant_drive_period_matches_closed_form() {
        let (topo, params) = ctx_parts(Dynamics::Conductance);
        let p = params.exc;
        let g = 0.5;
        let v_inf = (p.v_rest + g * p.e_exc) / (1.0 + g);
        let tau_eff = p.tau_membrane / (1.0 + g);
        let charge = tau_eff * ((v_inf - p.v_reset) / (v_inf - p.v_thresh_base)).ln();
        let expected = p.refractory + charge;

        for dt in [0.01, 0.005] {
            let mut s = ReferenceState::at_rest(&topo, &params, dt);
            let ctx = StepContext {
                topology: &topo,
                params: &params,
                weights: &[0.0],
                w_max: 1.0,
                theta: &[0.0],
            };
            let mut out = StepSpikes::default();
            let mut times = Vec::new();
            let steps = (400.0 / dt) as usize;
            for _ in 0..steps {
                s.exc.ge[0] = g;
                let t = s.time_ms();
                step_reference(&mut s, &ctx, &[], &mut out).unwrap();
                if !out.exc.is_empty() {
                    times.push(t);
                }
                // keep the partner inhibitory neuron from feeding back
                s.inh.ge[0] = 0.0;
            }
            assert!(times.len() >= 3);
            for w in times.windows(2).skip(1) {
                let period = w[1] - w[0];
                // the spike lands on the first grid point past threshold
                assert!((period - expected).abs() < 2.0 * dt + 0.01 * expected * dt, "dt {dt}: {period} vs {expected}");
            }
        }
    }

    #[test]
    fn halving_dt_moves_spikes_less_than_dt() {
        let (topo, params) = ctx_parts(Dynamics::Conductance);
        let run = |dt: f64| {
            let mut s = ReferenceState::at_rest(&topo, &params, dt);
            let ctx = StepContext {
                topology: &topo,
                params: &params,
                weights: &[0.0],
                w_max: 1.0,
                theta: &[0.0],
            };
            let mut out = StepSpikes::default();
            let mut times = Vec::new();
            for _ in 0..(200.0 / dt) as usize {
                s.exc.ge[0] = 0.4;
                s.inh.ge[0] = 0.0;
                let t = s.time_ms();
                step_reference(&mut s, &ctx, &[], &mut out).unwrap();
                if !out.exc.is_empty() {
                    times.push(t);
                }
            }
            times
        };
        let coarse = run(0.1);
        let fine = run(0.05);
        assert!(!coarse.is_empty());
        assert_eq!(coarse.len(), fine.len());
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a - b).abs() < 0.1, "{a} vs {b}");
        }
    }

    #[test]
    fn integrate_fire_counts_inputs() {
        let topo = build_topology_with_inputs(1, 2).unwrap();
        let mut params = NetworkParams {
            dynamics: Dynamics::IntegrateFire { leak: false },
            unit_epsp_mv: Some(1.0),
            inh_to_exc_weight: 2.0,
            ..NetworkParams::default()
        };
        params.exc.v_rest = 0.0;
        params.exc.v_reset = 0.0;
        params.exc.v_thresh_base = 3.0;
        let mut s = ReferenceState::at_rest(&topo, &params, 1.0);
        let ctx = StepContext {
            topology: &topo,
            params: &params,
            weights: &[1.0, 0.0],
            w_max: 1.0,
            theta: &[0.0, 0.0],
        };
        let mut out = StepSpikes::default();
        for k in 0..3 {
            step_reference(&mut s, &ctx, &[0], &mut out).unwrap();
            assert_eq!(out.exc.is_empty(), k < 2);
        }
        assert_eq!(out.inh, vec![0]);
        assert_eq!(s.exc.v[0], 0.0);
    }

    #[test]
    fn non_finite_state_fails_fast() {
        let (topo, params) = ctx_parts(Dynamics::Conductance);
        let mut s = ReferenceState::at_rest(&topo, &params, 0.5);
        s.exc.v[0] = f64::NAN;
        let ctx = StepContext {
            topology: &topo,
            params: &params,
            weights: &[0.0],
            w_max: 1.0,
            theta: &[0.0],
        };
        let mut out = StepSpikes::default();
        assert!(matches!(
            step_reference(&mut s, &ctx, &[], &mut out),
            Err(Error::NonFinite(_))
        ));
    }
}
