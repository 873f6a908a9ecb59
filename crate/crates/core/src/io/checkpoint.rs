//! `SKYCKPT v1` checkpoints: a text header line, then little-endian f64
//! weights (row-major), f64 theta, and one label byte per excitatory neuron.

use std::path::Path;

use crate::error::{Error, Result};
use crate::snn::WeightMatrix;

pub const MAGIC: &str = "SKYCKPT";
pub const VERSION: &str = "v1";
/// Label byte of a neuron that has not been labeled yet.
pub const UNASSIGNED: u8 = 0xFF;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub weights: WeightMatrix,
    pub theta: Vec<f64>,
    /// `None` before labeling.
    pub labels: Option<Vec<u8>>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n_in = self.weights.n_input();
        let n_exc = self.weights.n_exc();
        if self.theta.len() != n_exc {
            return Err(Error::Checkpoint(format!("{} theta values for {n_exc} neurons", self.theta.len())));
        }
        if let Some(l) = &self.labels {
            if l.len() != n_exc || l.iter().any(|&c| c > 9) {
                return Err(Error::Checkpoint("labels must be one class 0-9 per neuron".into()));
            }
        }
        let mut out = format!("{MAGIC} {VERSION} {n_in} {n_exc}\n").into_bytes();
        out.reserve((n_in * n_exc + n_exc) * 8 + n_exc);
        for w in self.weights.as_slice().iter().chain(&self.theta) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        match &self.labels {
            Some(l) => out.extend_from_slice(l),
            None => out.extend(std::iter::repeat_n(UNASSIGNED, n_exc)),
        }
        Ok(out)
    }

    /// `w_max` is not stored; it comes from the run configuration.
    pub fn from_bytes(bytes: &[u8], w_max: f64) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Checkpoint("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Checkpoint("header is not text".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.first() != Some(&MAGIC) {
            return Err(Error::Checkpoint(format!("bad magic in header `{header}`")));
        }
        match fields.get(1) {
            Some(&VERSION) => {}
            Some(v) => return Err(Error::CheckpointVersion(v.to_string())),
            None => return Err(Error::Checkpoint("header has no version".into())),
        }
        if fields.len() != 4 {
            return Err(Error::Checkpoint(format!("header `{header}` needs 4 fields")));
        }
        let dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Checkpoint(format!("bad dimension `{s}` in header")))
        };
        let (n_in, n_exc) = (dim(fields[2])?, dim(fields[3])?);
        let n_w = n_in
            .checked_mul(n_exc)
            .ok_or_else(|| Error::Checkpoint("dimensions overflow".into()))?;
        let body = &bytes[nl + 1..];
        let expected = (n_w + n_exc) * 8 + n_exc;
        if body.len() != expected {
            return Err(Error::Checkpoint(format!(
                "size mismatch: expected {expected} payload bytes, found {}",
                body.len()
            )));
        }
        let mut floats = body[..(n_w + n_exc) * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let data: Vec<f64> = floats.by_ref().take(n_w).collect();
        let theta: Vec<f64> = floats.collect();
        if data.iter().chain(&theta).any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite value in payload".into()));
        }
        let weights = WeightMatrix::from_vec(n_in, n_exc, w_max, data)
            .map_err(|e| Error::Checkpoint(format!("weights: {e}")))?;
        let raw = &body[(n_w + n_exc) * 8..];
        let labels = if raw.iter().all(|&b| b == UNASSIGNED) && n_exc > 0 {
            None
        } else if let Some(b) = raw.iter().find(|&&b| b > 9) {
            return Err(Error::Checkpoint(format!("label byte {b} out of range")));
        } else {
            Some(raw.to_vec())
        };
        Ok(Checkpoint { weights, theta, labels })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, w_max: f64) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, w_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            weights: WeightMatrix::from_vec(2, 3, 1.0, vec![0.0, 0.1, 0.2, 0.3, 1.0, 0.5]).unwrap(),
            theta: vec![0.0, 1.5, -0.0],
            labels: Some(vec![9, 0, 4]),
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        assert!(bytes.starts_with(b"SKYCKPT v1 2 3\n"));
        let back = Checkpoint::from_bytes(&bytes, 1.0).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.theta[2].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn unlabeled_round_trip() {
        let c = Checkpoint { labels: None, ..sample() };
        let back = Checkpoint::from_bytes(&c.to_bytes().unwrap(), 1.0).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn version_two_is_unsupported() {
        let mut bytes = sample().to_bytes().unwrap();
        bytes[9] = b'2';
        assert!(matches!(
            Checkpoint::from_bytes(&bytes, 1.0),
            Err(Error::CheckpointVersion(v)) if v == "v2"
        ));
    }

    #[test]
    fn truncated_payload_is_size_mismatch() {
        let bytes = sample().to_bytes().unwrap();
        let err = Checkpoint::from_bytes(&bytes[..bytes.len() - 5], 1.0).unwrap_err();
        assert!(err.to_string().contains("size mismatch"), "{err}");
    }
}
