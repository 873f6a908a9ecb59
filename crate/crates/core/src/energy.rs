//! Per-event energy accounting.
//!
//! Transport is Joule heating of the drive current in the occupied track
//! segment for the transit time: `E = rho · J² · A · L · (L / v)`, which with
//! `v = mu · J` reduces to `rho · A · L² · J / mu`. Domain-wall nucleation and
//! Y-junction duplication are fixed per-event constants.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::device::{duplication_stages, moving_velocity, DriveParams};
use crate::error::{Error, Result};
use crate::units;

/// Per-spike energy of TrueNorth-class CMOS hardware (about 26 pJ), the
/// comparison point for the skyrmion figures.
pub const DEFAULT_BASELINE_PER_SPIKE_FJ: f64 = 26_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    /// Resistivity of the heavy-metal layer, Ω·m.
    pub resistivity: f64,
    /// Track cross-section (width · thickness), m².
    pub cross_section_m2: f64,
    /// Spin-polarizer DWP nucleation at neuron reset, fJ.
    pub nucleation_energy_fj: f64,
    /// One Y-junction duplication stage, fJ.
    pub duplication_energy_fj: f64,
    /// Extra cost of annihilating a skyrmion in a reset branch, fJ.
    pub gate_energy_fj: f64,
    /// DWP-to-skyrmion conversion at the output terminal, fJ.
    pub conversion_energy_fj: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            resistivity: 1e-7,
            cross_section_m2: 5e-17,
            nucleation_energy_fj: 0.5,
            duplication_energy_fj: 0.1,
            gate_energy_fj: 0.0,
            conversion_energy_fj: 0.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("resistivity", self.resistivity),
            ("cross_section_m2", self.cross_section_m2),
            ("nucleation_energy_fj", self.nucleation_energy_fj),
            ("duplication_energy_fj", self.duplication_energy_fj),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("gate_energy_fj", self.gate_energy_fj),
            ("conversion_energy_fj", self.conversion_energy_fj),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Transport energy in fJ over `length_nm` using the material cross-section.
pub fn transport_energy(length_nm: f64, d: &DriveParams, m: &MaterialParams) -> Result<f64> {
    transport_energy_with_area(length_nm, m.cross_section_m2, d, m.resistivity)
}

pub(crate) fn transport_energy_with_area(
    length_nm: f64,
    area_m2: f64,
    d: &DriveParams,
    resistivity: f64,
) -> Result<f64> {
    let v = moving_velocity(d)?;
    if !(length_nm >= 0.0 && length_nm.is_finite()) {
        return Err(Error::param("length", format!("must be >= 0, got {length_nm}")));
    }
    let l = units::nm_to_m(length_nm);
    let j = d.current_density;
    let joules = resistivity * j * j * area_m2 * l * (l / v);
    Ok(units::j_to_fj(joules))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyCategory {
    Transport,
    Nucleation,
    Duplication,
    Gate,
}

impl EnergyCategory {
    pub const ALL: [EnergyCategory; 4] = [
        EnergyCategory::Transport,
        EnergyCategory::Nucleation,
        EnergyCategory::Duplication,
        EnergyCategory::Gate,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnergyCategory::Transport => "transport",
            EnergyCategory::Nucleation => "nucleation",
            EnergyCategory::Duplication => "duplication",
            EnergyCategory::Gate => "gate",
        }
    }
}

/// What produced a ledger entry, finer-grained than the category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySource {
    Transit,
    ResetNucleation,
    OutputConversion,
    Duplication,
    GateAnnihilation,
}

impl EnergySource {
    pub fn category(self) -> EnergyCategory {
        match self {
            EnergySource::Transit => EnergyCategory::Transport,
            EnergySource::ResetNucleation | EnergySource::OutputConversion => {
                EnergyCategory::Nucleation
            }
            EnergySource::Duplication => EnergyCategory::Duplication,
            EnergySource::GateAnnihilation => EnergyCategory::Gate,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnergySource::Transit => "transit",
            EnergySource::ResetNucleation => "reset_nucleation",
            EnergySource::OutputConversion => "output_conversion",
            EnergySource::Duplication => "duplication",
            EnergySource::GateAnnihilation => "gate_annihilation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntry {
    pub time_ns: f64,
    pub source: EnergySource,
    pub energy_fj: f64,
    pub subject: u64,
}

impl EnergyEntry {
    pub fn category(&self) -> EnergyCategory {
        self.source.category()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    entries: Vec<EnergyEntry>,
    totals: [f64; 4],
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, time_ns: f64, source: EnergySource, energy_fj: f64, subject: u64) -> Result<()> {
        if !(energy_fj >= 0.0 && energy_fj.is_finite()) {
            return Err(Error::Invariant(format!(
                "ledger entry must be finite and >= 0, got {energy_fj}"
            )));
        }
        self.totals[source.category().index()] += energy_fj;
        self.entries.push(EnergyEntry {
            time_ns,
            source,
            energy_fj,
            subject,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[EnergyEntry] {
        &self.entries
    }

    pub fn category_total(&self, c: EnergyCategory) -> f64 {
        self.totals[c.index()]
    }

    pub fn total_fj(&self) -> f64 {
        self.totals.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Appends `other`; totals add, so merge order only moves rounding.
    pub fn merge(&mut self, other: &EnergyLedger) {
        self.entries.extend_from_slice(&other.entries);
        for (a, b) in self.totals.iter_mut().zip(other.totals) {
            *a += b;
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time_ns,category,source,energy_fj,subject")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.time_ns,
                e.category().as_str(),
                e.source.as_str(),
                e.energy_fj,
                e.subject
            )?;
        }
        Ok(())
    }
}

/// Segment lengths a single spike travels, plus its fan-out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikePath {
    /// Synapse, neuron region and output segments, nm. Each segment is driven
    /// only while the skyrmion occupies it.
    pub segments_nm: Vec<f64>,
    pub fanout: usize,
}

impl Default for SpikePath {
    /// 1 µm synapse-to-neuron path plus 1 µm output path, no fan-out.
    fn default() -> Self {
        SpikePath {
            segments_nm: vec![1000.0, 1000.0],
            fanout: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeEnergy {
    pub transport_fj: f64,
    pub nucleation_fj: f64,
    pub duplication_fj: f64,
    pub total_fj: f64,
}

/// Energy of one spike from synapse to output, including one reset
/// nucleation and any duplication stages.
pub fn spike_energy(path: &SpikePath, d: &DriveParams, m: &MaterialParams) -> Result<SpikeEnergy> {
    if path.fanout == 0 {
        return Err(Error::param("fanout", "must be >= 1"));
    }
    let mut transport_fj = 0.0;
    for &len in &path.segments_nm {
        transport_fj += transport_energy(len, d, m)?;
    }
    let nucleation_fj = m.nucleation_energy_fj + m.conversion_energy_fj;
    let duplication_fj = duplication_stages(path.fanout) as f64 * m.duplication_energy_fj;
    Ok(SpikeEnergy {
        transport_fj,
        nucleation_fj,
        duplication_fj,
        total_fj: transport_fj + nucleation_fj + duplication_fj,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryTotals {
    pub transport: f64,
    pub nucleation: f64,
    pub duplication: f64,
    pub gate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub totals_fj: CategoryTotals,
    pub total_fj: f64,
    pub entries: usize,
    pub fired_spikes: u64,
    /// `None` when nothing fired.
    pub per_spike_fj: Option<f64>,
    pub baseline_per_spike_fj: f64,
    /// baseline / ours.
    pub ratio_vs_baseline: Option<f64>,
    pub at_least_three_orders: Option<bool>,
}

pub fn report_and_compare(ledger: &EnergyLedger, fired_spikes: u64, baseline_per_spike_fj: f64) -> EnergyReport {
    let total = ledger.total_fj();
    let per_spike = (fired_spikes > 0).then(|| total / fired_spikes as f64);
    let ratio = per_spike.filter(|p| *p > 0.0).map(|p| baseline_per_spike_fj / p);
    EnergyReport {
        totals_fj: CategoryTotals {
            transport: ledger.category_total(EnergyCategory::Transport),
            nucleation: ledger.category_total(EnergyCategory::Nucleation),
            duplication: ledger.category_total(EnergyCategory::Duplication),
            gate: ledger.category_total(EnergyCategory::Gate),
        },
        total_fj: total,
        entries: ledger.len(),
        fired_spikes,
        per_spike_fj: per_spike,
        baseline_per_spike_fj,
        ratio_vs_baseline: ratio,
        at_least_three_orders: ratio.map(|r| r >= 1e3),
    }
}
