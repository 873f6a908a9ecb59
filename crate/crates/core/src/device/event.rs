use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

/// Kinds of device events. The first seven are the physical events; the rest
/// record bookkeeping decisions so that nothing happens silently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Injection,
    Arrival,
    GatePass,
    GateAnnihilate,
    Duplication,
    Fire,
    Nucleation,
    InjectionDeferred,
    ArrivalDiscarded,
    TerminalAnnihilate,
    Inhibition,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Injection => "injection",
            EventKind::Arrival => "arrival",
            EventKind::GatePass => "gate_pass",
            EventKind::GateAnnihilate => "gate_annihilate",
            EventKind::Duplication => "duplication",
            EventKind::Fire => "fire",
            EventKind::Nucleation => "nucleation",
            EventKind::InjectionDeferred => "injection_deferred",
            EventKind::ArrivalDiscarded => "arrival_discarded",
            EventKind::TerminalAnnihilate => "terminal_annihilate",
            EventKind::Inhibition => "inhibition",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One processed event.
///
/// `subjects` are the ids involved, in a kind-specific order:
/// skyrmion first, then track/gate/neuron (see [`DeviceSim`](super::DeviceSim)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceEvent {
    pub time_ns: f64,
    pub seq: u64,
    pub kind: EventKind,
    pub subjects: Vec<u64>,
}

impl fmt::Display for DeviceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},", self.time_ns, self.seq, self.kind)?;
        for (i, s) in self.subjects.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Writes the event log as `time_ns,seq,kind,subjects` lines, subjects
/// separated by `;`.
pub fn write_event_log<W: Write>(mut out: W, events: &[DeviceEvent]) -> std::io::Result<()> {
    writeln!(out, "time_ns,seq,kind,subjects")?;
    for e in events {
        writeln!(out, "{e}")?;
    }
    Ok(())
}
