use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MNIST_INPUTS: usize = 784;

/// Input layer fully connected to the excitatory layer; excitatory to
/// inhibitory one-to-one; each inhibitory neuron inhibits every excitatory
/// neuron except its own partner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub n_input: usize,
    pub n_exc: usize,
}

impl NetworkTopology {
    pub fn n_inh(&self) -> usize {
        self.n_exc
    }

    pub fn input_edges(&self) -> usize {
        self.n_input * self.n_exc
    }

    pub fn exc_to_inh_edges(&self) -> usize {
        self.n_exc
    }

    pub fn inh_to_exc_edges(&self) -> usize {
        self.n_exc * (self.n_exc - 1)
    }

    pub fn exc_to_inh(&self, exc: usize) -> usize {
        exc
    }

    pub fn inhibits(&self, inh: usize, exc: usize) -> bool {
        inh != exc && inh < self.n_exc && exc < self.n_exc
    }

    pub fn inh_targets(&self, inh: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_exc).filter(move |&e| e != inh)
    }

    /// Row-major `n_inh x n_exc` inhibition mask.
    pub fn inh_to_exc_mask(&self) -> Vec<bool> {
        let n = self.n_exc;
        (0..n * n).map(|k| self.inhibits(k / n, k % n)).collect()
    }
}

/// MNIST-sized topology with `n_exc` excitatory neurons.
pub fn build_topology(n_exc: usize) -> Result<NetworkTopology> {
    build_topology_with_inputs(MNIST_INPUTS, n_exc)
}

pub fn build_topology_with_inputs(n_input: usize, n_exc: usize) -> Result<NetworkTopology> {
    if n_exc == 0 {
        return Err(Error::param("n_exc", "must be >= 1"));
    }
    if n_input == 0 {
        return Err(Error::param("n_input", "must be >= 1"));
    }
    Ok(NetworkTopology { n_input, n_exc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_counts() {
        let t = build_topology(4).unwrap();
        assert_eq!(t.input_edges(), 784 * 4);
        assert_eq!(t.exc_to_inh_edges(), 4);
        assert_eq!(t.inh_to_exc_edges(), 12);
        let mask = t.inh_to_exc_mask();
        assert_eq!(mask.iter().filter(|m| **m).count(), 12);
        for i in 0..4 {
            assert!(!mask[i * 4 + i]);
            assert_eq!(t.inh_targets(i).count(), 3);
        }
    }

    #[test]
    fn single_neuron_has_no_inhibition() {
        let t = build_topology(1).unwrap();
        assert_eq!(t.inh_to_exc_edges(), 0);
        assert_eq!(t.inh_targets(0).count(), 0);
    }

    #[test]
    fn zero_neurons_rejected() {
        assert!(build_topology(0).is_err());
    }
}
