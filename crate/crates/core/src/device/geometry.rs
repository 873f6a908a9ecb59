use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length_nm: f64,
    pub width_nm: f64,
    pub thickness_nm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Gate,
    Notch,
    Junction,
    CouplingRegion,
    AnnihilationTerminal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub position_nm: f64,
    pub kind: FeatureKind,
}

/// Physical layout of one nanotrack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackGeometry {
    pub segments: Vec<Segment>,
    pub features: Vec<Feature>,
    /// Minimum skyrmion-skyrmion separation along the track.
    pub min_spacing_nm: f64,
}

impl TrackGeometry {
    /// Single uniform segment with no features.
    pub fn plain(length_nm: f64, width_nm: f64, thickness_nm: f64, min_spacing_nm: f64) -> Self {
        TrackGeometry {
            segments: vec![Segment {
                length_nm,
                width_nm,
                thickness_nm,
            }],
            features: Vec::new(),
            min_spacing_nm,
        }
    }

    pub fn length_nm(&self) -> f64 {
        self.segments.iter().map(|s| s.length_nm).sum()
    }

    /// Zero-length segments are allowed: they model an idealized
    /// delay-free connection.
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Geometry("track has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length_nm >= 0.0 && s.length_nm.is_finite()) {
                return Err(Error::Geometry(format!(
                    "segment {i}: length must be >= 0, got {}",
                    s.length_nm
                )));
            }
            if !(s.width_nm > 0.0 && s.thickness_nm > 0.0) {
                return Err(Error::Geometry(format!(
                    "segment {i}: width and thickness must be > 0"
                )));
            }
        }
        if !(self.min_spacing_nm > 0.0 && self.min_spacing_nm.is_finite()) {
            return Err(Error::Geometry(format!(
                "min_spacing must be > 0, got {}",
                self.min_spacing_nm
            )));
        }
        let len = self.length_nm();
        for f in &self.features {
            if !(0.0..=len).contains(&f.position_nm) {
                return Err(Error::Geometry(format!(
                    "{:?} at {} nm lies outside track of length {len} nm",
                    f.kind, f.position_nm
                )));
            }
        }
        let notches = self
            .features
            .iter()
            .filter(|f| f.kind == FeatureKind::Notch)
            .count();
        if notches > 1 {
            return Err(Error::Geometry(format!(
                "at most one notch per track, found {notches}"
            )));
        }
        Ok(())
    }

    /// Splits the first `distance_nm` of the track into per-segment pieces
    /// of `(covered length, cross-section m²)`.
    pub(crate) fn covered_pieces(&self, distance_nm: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut remaining = distance_nm.max(0.0);
        self.segments.iter().filter_map(move |s| {
            if remaining <= 0.0 {
                return None;
            }
            let piece = remaining.min(s.length_nm);
            remaining -= piece;
            (piece > 0.0).then(|| {
                (
                    piece,
                    crate::units::cross_section_m2(s.width_nm, s.thickness_nm),
                )
            })
        })
    }
}
