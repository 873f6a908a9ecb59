use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense input -> excitatory weights, row-major (`n_input` rows of `n_exc`),
/// every entry in `[0, w_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n_input: usize,
    n_exc: usize,
    w_max: f64,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(n_input: usize, n_exc: usize, w_max: f64) -> Self {
        WeightMatrix {
            n_input,
            n_exc,
            w_max,
            data: vec![0.0; n_input * n_exc],
        }
    }

    pub fn from_vec(n_input: usize, n_exc: usize, w_max: f64, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_input * n_exc {
            return Err(Error::param(
                "weights",
                format!("expected {} entries, got {}", n_input * n_exc, data.len()),
            ));
        }
        if let Some(w) = data.iter().find(|w| !(**w >= 0.0 && **w <= w_max)) {
            return Err(Error::param("weights", format!("entry {w} outside [0, {w_max}]")));
        }
        Ok(WeightMatrix {
            n_input,
            n_exc,
            w_max,
            data,
        })
    }

    /// Uniform in `[0, init_max)`.
    pub fn random<R: Rng>(n_input: usize, n_exc: usize, w_max: f64, init_max: f64, rng: &mut R) -> Self {
        let data = (0..n_input * n_exc)
            .map(|_| rng.random::<f64>() * init_max.min(w_max))
            .collect();
        WeightMatrix {
            n_input,
            n_exc,
            w_max,
            data,
        }
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn n_exc(&self) -> usize {
        self.n_exc
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, input: usize, exc: usize) -> f64 {
        self.data[input * self.n_exc + exc]
    }

    /// Stores `w` clamped into `[0, w_max]`.
    #[inline]
    pub fn set_clamped(&mut self, input: usize, exc: usize, w: f64) {
        self.data[input * self.n_exc + exc] = w.clamp(0.0, self.w_max);
    }

    #[inline]
    pub fn row(&self, input: usize) -> &[f64] {
        &self.data[input * self.n_exc..(input + 1) * self.n_exc]
    }

    pub fn column_sum(&self, exc: usize) -> f64 {
        (0..self.n_input).map(|i| self.get(i, exc)).sum()
    }

    pub fn column(&self, exc: usize) -> Vec<f64> {
        (0..self.n_input).map(|i| self.get(i, exc)).collect()
    }

    pub fn scale_column(&mut self, exc: usize, factor: f64) {
        for i in 0..self.n_input {
            let w = self.get(i, exc) * factor;
            self.set_clamped(i, exc, w);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|w| w.is_finite())
    }

    pub fn within_bounds(&self) -> bool {
        self.data.iter().all(|w| *w >= 0.0 && *w <= self.w_max)
    }

    /// Matrix with every set bit at `w_max` and the rest at zero.
    pub fn from_bits(bits: &BitMatrix, w_max: f64) -> Self {
        WeightMatrix {
            n_input: bits.n_input,
            n_exc: bits.n_exc,
            w_max,
            data: bits.bits.iter().map(|&b| if b { w_max } else { 0.0 }).collect(),
        }
    }
}

/// Binarized view of a [`WeightMatrix`], same layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    n_input: usize,
    n_exc: usize,
    bits: Vec<bool>,
}

impl BitMatrix {
    pub fn from_vec(n_input: usize, n_exc: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != n_input * n_exc {
            return Err(Error::param("bits", "length does not match shape"));
        }
        Ok(BitMatrix { n_input, n_exc, bits })
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn n_exc(&self) -> usize {
        self.n_exc
    }

    #[inline]
    pub fn get(&self, input: usize, exc: usize) -> bool {
        self.bits[input * self.n_exc + exc]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn from_fn(n_input: usize, n_exc: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..n_input * n_exc).map(|k| f(k / n_exc, k % n_exc)).collect();
        BitMatrix { n_input, n_exc, bits }
    }
}
