//! Device scenario files (`.scn`): one directive per line, `#` comments.
//!
//! ```text
//! material nucleation_energy_fj=0.5
//! drive current_density=6e10
//! neuron n0 threshold=4 refractory_ns=20 conversion_ns=1
//! track in length_nm=750 terminal=neuron:n0
//! gate in position_nm=375 bit=1
//! inject in at_ns=0 count=4 every_ns=2
//! run until_ns=100
//! ```
//!
//! `drive` applies to the tracks declared after it. Terminals are `sink`,
//! `annihilate`, `neuron:<name>` or `junction:<a>+<b>+...@<stage_nm>` (the
//! branch tracks must already exist). Other directives: `output <neuron>
//! track=<track>`, `inhibit <neuron> targets=<a>+<b> amount=<n>`. Without a
//! `run` line the scenario runs until idle.

use std::collections::HashMap;
use std::path::Path;

use crate::cells::{BinarySynapse, SkyrmionNeuron};
use crate::device::{Counters, DeviceEvent, DeviceSim, DriveParams, Terminal, TrackGeometry, TrackId};
use crate::energy::{EnergyLedger, MaterialParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub events: Vec<DeviceEvent>,
    pub counters: Counters,
    pub ledger: EnergyLedger,
    /// `(time_ns, neuron name)` of every fire, in order.
    pub fires: Vec<(f64, String)>,
}

struct Line<'a> {
    no: usize,
    directive: &'a str,
    name: Option<&'a str>,
    kv: HashMap<&'a str, &'a str>,
}

impl<'a> Line<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Scenario {
            line: self.no,
            reason: reason.into(),
        }
    }

    fn name(&self) -> Result<&'a str> {
        self.name.ok_or_else(|| self.err(format!("`{}` needs a name", self.directive)))
    }

    fn raw(&self, key: &str) -> Result<&'a str> {
        self.kv
            .get(key)
            .copied()
            .ok_or_else(|| self.err(format!("missing `{key}=`")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.kv.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| self.err(format!("`{key}` is not a number: `{v}`"))),
        }
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| self.err(format!("`{key}` is not a number: `{v}`")))
    }

    fn u32_or(&self, key: &str, default: u32) -> Result<u32> {
        match self.kv.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| self.err(format!("`{key}` is not a count: `{v}`"))),
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.kv.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(self.err(format!("unknown key `{k}` for `{}`", self.directive))),
            None => Ok(()),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Line<'_>>> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let directive = words.next().expect("non-empty line");
        let mut name = None;
        let mut kv = HashMap::new();
        for w in words {
            match w.split_once('=') {
                Some((k, v)) => {
                    if kv.insert(k, v).is_some() {
                        return Err(Error::Scenario {
                            line: no,
                            reason: format!("duplicate key `{k}`"),
                        });
                    }
                }
                None if name.is_none() && kv.is_empty() => name = Some(w),
                None => {
                    return Err(Error::Scenario {
                        line: no,
                        reason: format!("expected key=value, found `{w}`"),
                    })
                }
            }
        }
        lines.push(Line { no, directive, name, kv });
    }
    Ok(lines)
}

fn material(lines: &[Line<'_>]) -> Result<MaterialParams> {
    let mut m = MaterialParams::default();
    for l in lines.iter().filter(|l| l.directive == "material") {
        l.only(&[
            "resistivity",
            "cross_section_m2",
            "nucleation_energy_fj",
            "duplication_energy_fj",
            "gate_energy_fj",
            "conversion_energy_fj",
        ])?;
        m.resistivity = l.f64_or("resistivity", m.resistivity)?;
        m.cross_section_m2 = l.f64_or("cross_section_m2", m.cross_section_m2)?;
        m.nucleation_energy_fj = l.f64_or("nucleation_energy_fj", m.nucleation_energy_fj)?;
        m.duplication_energy_fj = l.f64_or("duplication_energy_fj", m.duplication_energy_fj)?;
        m.gate_energy_fj = l.f64_or("gate_energy_fj", m.gate_energy_fj)?;
        m.conversion_energy_fj = l.f64_or("conversion_energy_fj", m.conversion_energy_fj)?;
        m.validate().map_err(|e| l.err(e.to_string()))?;
    }
    Ok(m)
}

/// Parses and runs a scenario. The event log is always recorded.
pub fn run_scenario(text: &str) -> Result<ScenarioOutcome> {
    let lines = tokenize(text)?;
    let mut sim = DeviceSim::new(material(&lines)?).with_event_log(true);
    let mut drive = DriveParams::default();
    let mut neurons: HashMap<&str, usize> = HashMap::new();
    let mut neuron_names: Vec<String> = Vec::new();
    let mut tracks: HashMap<&str, TrackId> = HashMap::new();
    let mut until: Option<f64> = None;
    let mut injections: Vec<(f64, TrackId)> = Vec::new();

    for l in &lines {
        let wrap = |e: Error| match e {
            Error::Scenario { .. } | Error::StalledTransport { .. } => e,
            other => l.err(other.to_string()),
        };
        match l.directive {
            "material" => {}
            "drive" => {
                l.only(&["current_density", "mobility", "depin_density"])?;
                drive = DriveParams {
                    current_density: l.f64_or("current_density", drive.current_density)?,
                    mobility: l.f64_or("mobility", drive.mobility)?,
                    depin_density: l.f64_or("depin_density", drive.depin_density)?,
                };
                drive.validate().map_err(wrap)?;
            }
            "neuron" => {
                l.only(&["threshold", "refractory_ns", "conversion_ns"])?;
                let name = l.name()?;
                if neurons.contains_key(name) {
                    return Err(l.err(format!("neuron `{name}` declared twice")));
                }
                let cell = SkyrmionNeuron::new(
                    l.u32_or("threshold", SkyrmionNeuron::DEFAULT_THRESHOLD)?,
                    l.f64_or("refractory_ns", 0.0)?,
                    l.f64_or("conversion_ns", SkyrmionNeuron::DEFAULT_CONVERSION_DELAY_NS)?,
                )
                .map_err(wrap)?;
                neurons.insert(name, sim.add_neuron(cell));
                neuron_names.push(name.to_string());
            }
            "track" => {
                l.only(&["length_nm", "width_nm", "thickness_nm", "spacing_nm", "terminal"])?;
                let name = l.name()?;
                if tracks.contains_key(name) {
                    return Err(l.err(format!("track `{name}` declared twice")));
                }
                let geom = TrackGeometry::plain(
                    l.f64("length_nm")?,
                    l.f64_or("width_nm", 50.0)?,
                    l.f64_or("thickness_nm", 1.0)?,
                    l.f64_or("spacing_nm", 30.0)?,
                );
                let terminal = parse_terminal(l, l.kv.get("terminal").copied().unwrap_or("sink"), &neurons, &tracks)?;
                let id = sim.add_track(geom, drive, terminal).map_err(wrap)?;
                tracks.insert(name, id);
            }
            "gate" => {
                l.only(&["position_nm", "bit"])?;
                let t = lookup(l, &tracks, l.name()?, "track")?;
                let bit = match l.raw("bit")? {
                    "0" => false,
                    "1" => true,
                    b => return Err(l.err(format!("bit must be 0 or 1, got `{b}`"))),
                };
                sim.add_gate(t, l.f64("position_nm")?, BinarySynapse::new(bit)).map_err(wrap)?;
            }
            "output" => {
                l.only(&["track"])?;
                let n = lookup(l, &neurons, l.name()?, "neuron")?;
                let t = lookup(l, &tracks, l.raw("track")?, "track")?;
                sim.connect_output(n, t).map_err(wrap)?;
            }
            "inhibit" => {
                l.only(&["targets", "amount"])?;
                let n = lookup(l, &neurons, l.name()?, "neuron")?;
                let targets = l
                    .raw("targets")?
                    .split('+')
                    .map(|s| lookup(l, &neurons, s, "neuron"))
                    .collect::<Result<Vec<_>>>()?;
                sim.set_inhibition(n, targets, l.u32_or("amount", 1)?).map_err(wrap)?;
            }
            "inject" => {
                l.only(&["at_ns", "count", "every_ns"])?;
                let t = lookup(l, &tracks, l.name()?, "track")?;
                let at = l.f64("at_ns")?;
                let every = l.f64_or("every_ns", 0.0)?;
                if !(at >= 0.0 && every >= 0.0 && at.is_finite() && every.is_finite()) {
                    return Err(l.err("injection times must be finite and >= 0"));
                }
                for k in 0..l.u32_or("count", 1)? {
                    injections.push((at + k as f64 * every, t));
                }
            }
            "run" => {
                l.only(&["until_ns"])?;
                if until.is_some() {
                    return Err(l.err("more than one `run` line"));
                }
                until = Some(l.f64_or("until_ns", f64::INFINITY)?);
            }
            other => return Err(l.err(format!("unknown directive `{other}`"))),
        }
    }

    injections.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut events = Vec::new();
    for (t, track) in injections {
        events.extend(sim.advance_until(t)?);
        sim.inject_skyrmion(track, t)?;
    }
    match until {
        Some(t) if t.is_finite() => events.extend(sim.advance_until(t)?),
        _ => events.extend(sim.run_until_idle()?),
    }
    let fires = sim
        .take_fires()
        .into_iter()
        .map(|(t, id)| (t, neuron_names[id].clone()))
        .collect();
    Ok(ScenarioOutcome {
        events,
        counters: sim.counters(),
        ledger: sim.ledger().clone(),
        fires,
    })
}

pub fn run_scenario_file(path: &Path) -> Result<ScenarioOutcome> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    run_scenario(&text)
}

fn lookup(l: &Line<'_>, map: &HashMap<&str, usize>, name: &str, what: &str) -> Result<usize> {
    map.get(name)
        .copied()
        .ok_or_else(|| l.err(format!("unknown {what} `{name}`")))
}

fn parse_terminal(l: &Line<'_>, spec: &str, neurons: &HashMap<&str, usize>, tracks: &HashMap<&str, TrackId>) -> Result<Terminal> {
    match spec.split_once(':') {
        None if spec == "sink" => Ok(Terminal::Sink),
        None if spec == "annihilate" => Ok(Terminal::Annihilate),
        Some(("neuron", n)) => Ok(Terminal::Neuron(lookup(l, neurons, n, "neuron")?)),
        Some(("junction", rest)) => {
            let (names, stage) = rest.split_once('@').unwrap_or((rest, "0"));
            let stage_length_nm = stage
                .parse()
                .map_err(|_| l.err(format!("bad junction stage length `{stage}`")))?;
            let branches = names
                .split('+')
                .map(|s| lookup(l, tracks, s, "track"))
                .collect::<Result<Vec<_>>>()?;
            Ok(Terminal::Junction {
                branches,
                stage_length_nm,
            })
        }
        _ => Err(l.err(format!("unknown terminal `{spec}`"))),
    }
}
