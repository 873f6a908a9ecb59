use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::params::PoissonEncoderParams;

/// Per-input spike times in ms, each train sorted, all in `[0, duration)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeTrains {
    pub duration_ms: f64,
    pub trains: Vec<Vec<f64>>,
}

impl SpikeTrains {
    pub fn total_spikes(&self) -> usize {
        self.trains.iter().map(Vec::len).sum()
    }

    /// Bins spikes onto a `dt` grid. An input fires at most once per step,
    /// so coincident spikes in one bin merge.
    pub fn to_steps(&self, dt_ms: f64) -> StepInputs {
        let n_steps = (self.duration_ms / dt_ms).ceil() as usize;
        let mut per_step: Vec<Vec<u32>> = vec![Vec::new(); n_steps];
        for (i, train) in self.trains.iter().enumerate() {
            let mut last = usize::MAX;
            for &t in train {
                let k = ((t / dt_ms).floor() as usize).min(n_steps.saturating_sub(1));
                if k != last {
                    per_step[k].push(i as u32);
                    last = k;
                }
            }
        }
        StepInputs::from_nested(per_step)
    }
}

/// Active inputs per time step (ascending input id within a step).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepInputs {
    offsets: Vec<usize>,
    inputs: Vec<u32>,
}

impl StepInputs {
    pub fn from_nested(per_step: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(per_step.len() + 1);
        let mut inputs = Vec::new();
        offsets.push(0);
        for mut s in per_step {
            s.sort_unstable();
            s.dedup();
            inputs.extend(s);
            offsets.push(inputs.len());
        }
        StepInputs { offsets, inputs }
    }

    pub fn n_steps(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn step(&self, k: usize) -> &[u32] {
        if k + 1 >= self.offsets.len() {
            return &[];
        }
        &self.inputs[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn total(&self) -> usize {
        self.inputs.len()
    }
}

/// Independent Poisson trains with rate `intensity · rate_scale` Hz over the
/// presentation window.
pub fn encode_poisson<R: Rng>(image: &[u8], params: &PoissonEncoderParams, rng: &mut R) -> SpikeTrains {
    encode_poisson_rates(image, params.rate_scale, params.presentation_ms, rng)
}

/// Encodes and bins onto the `dt_ms` grid in one go.
pub fn encode_poisson_rates_steps<R: Rng>(image: &[u8], rate_scale: f64, duration_ms: f64, dt_ms: f64, rng: &mut R) -> StepInputs {
    encode_poisson_rates(image, rate_scale, duration_ms, rng).to_steps(dt_ms)
}

pub fn encode_poisson_rates<R: Rng>(image: &[u8], rate_scale: f64, duration_ms: f64, rng: &mut R) -> SpikeTrains {
    let trains = image
        .iter()
        .map(|&px| {
            let rate_per_ms = px as f64 * rate_scale / 1000.0;
            poisson_times(rate_per_ms, duration_ms, rng)
        })
        .collect();
    SpikeTrains { duration_ms, trains }
}

fn poisson_times<R: Rng>(rate_per_ms: f64, duration_ms: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if rate_per_ms <= 0.0 {
        return out;
    }
    let gaps = Exp::new(rate_per_ms).expect("positive rate");
    let mut t = gaps.sample(rng);
    while t < duration_ms {
        out.push(t);
        t += gaps.sample(rng);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    #[test]
    fn zero_intensity_is_silent() {
        let mut rng = stream_rng(1, 0, 0);
        let s = encode_poisson(&[0, 0, 0], &PoissonEncoderParams::default(), &mut rng);
        assert_eq!(s.total_spikes(), 0);
    }

    #[test]
    fn expected_count_at_full_intensity() {
        // 255 * 0.25 Hz * 0.350 s = 22.3125
        let p = PoissonEncoderParams::default();
        let mut rng = stream_rng(7, 0, 0);
        let trials = 4000;
        let total: usize = (0..trials)
            .map(|_| encode_poisson(&[255], &p, &mut rng).total_spikes())
            .sum();
        let mean = total as f64 / trials as f64;
        // standard error sqrt(22.3/4000) ~ 0.075
        assert!((mean - 22.3125).abs() < 0.3, "mean {mean}");
    }

    #[test]
    fn same_seed_same_trains() {
        let img: Vec<u8> = (0..=255).collect();
        let p = PoissonEncoderParams::default();
        let a = encode_poisson(&img, &p, &mut stream_rng(3, 1, 2));
        let b = encode_poisson(&img, &p, &mut stream_rng(3, 1, 2));
        assert_eq!(a, b);
        let c = encode_poisson(&img, &p, &mut stream_rng(3, 1, 3));
        assert_ne!(a, c);
    }

    #[test]
    fn binning_merges_coincident_spikes() {
        let s = SpikeTrains {
            duration_ms: 2.0,
            trains: vec![vec![0.1, 0.2, 1.6], vec![0.4]],
        };
        let steps = s.to_steps(0.5);
        assert_eq!(steps.n_steps(), 4);
        assert_eq!(steps.step(0), &[0, 1]);
        assert_eq!(steps.step(1), &[] as &[u32]);
        assert_eq!(steps.step(3), &[0]);
    }
}
