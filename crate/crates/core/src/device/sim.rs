use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::event::{DeviceEvent, EventKind};
use super::geometry::{Feature, FeatureKind, TrackGeometry};
use super::{duplication_stages, route_at_synapse_gate, velocity_from_drive, DriveParams, Route};
use crate::cells::{BinarySynapse, Integration, SkyrmionNeuron};
use crate::energy::{transport_energy_with_area, EnergyLedger, EnergySource, MaterialParams};
use crate::error::{Error, Result};

pub type TrackId = usize;
pub type NeuronId = usize;
pub type GateId = usize;
pub type SkyrmionId = u64;

/// Where a skyrmion goes when it reaches the end of a track.
#[derive(Clone, Debug, PartialEq)]
pub enum Terminal {
    /// Leaves the modeled region; counted as delivered.
    Sink,
    /// Reset branch: the skyrmion is destroyed.
    Annihilate,
    /// Neuron region behind a pinning notch.
    Neuron(NeuronId),
    /// Y-junction tree duplicating onto every branch track.
    Junction {
        branches: Vec<TrackId>,
        stage_length_nm: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Origin {
    External,
    Duplicate,
}

/// A skyrmion currently on a track (or waiting for its injection slot).
#[derive(Clone, Debug, PartialEq)]
pub struct Skyrmion {
    pub id: SkyrmionId,
    pub track: TrackId,
    /// Time it entered its current track.
    pub entered_ns: f64,
    pub created_ns: f64,
    origin: Origin,
}

#[derive(Clone, Debug)]
struct Gate {
    position_nm: f64,
    synapse: BinarySynapse,
}

#[derive(Clone, Debug)]
struct Track {
    geometry: TrackGeometry,
    drive: DriveParams,
    /// m/s, numerically equal to nm/ns.
    velocity: f64,
    gates: Vec<Gate>,
    terminal: Terminal,
    /// Sorted injection times already granted on this track.
    reserved: Vec<f64>,
}

impl Track {
    fn transit_ns(&self, distance_nm: f64) -> f64 {
        distance_nm / self.velocity
    }
}

#[derive(Clone, Debug)]
struct NeuronSlot {
    cell: SkyrmionNeuron,
    output: Option<TrackId>,
    inhibits: Vec<NeuronId>,
    inhibit_amount: u32,
}

#[derive(Clone, Copy, Debug)]
enum Action {
    NoteDeferral { sk: SkyrmionId, track: TrackId },
    Inject { sk: SkyrmionId },
    ReachGate { sk: SkyrmionId, gate: GateId },
    ReachEnd { sk: SkyrmionId },
    DuplicationStage { sk: SkyrmionId, stage: u32 },
    Nucleate { neuron: NeuronId },
    Inhibit { neuron: NeuronId, amount: u32 },
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    time: f64,
    seq: u64,
    action: Action,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so the max-heap pops the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Running skyrmion bookkeeping.
///
/// `duplication_created` counts the net skyrmions added by junctions: an
/// n-way split retires the original and issues n fresh ids, adding n - 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub injected: u64,
    pub duplication_created: u64,
    pub delivered: u64,
    pub annihilated: u64,
    pub deferred: u64,
    pub discarded: u64,
    pub fired: u64,
    pub inhibitions: u64,
}

/// Single-threaded discrete-event simulator of skyrmion nanotracks.
///
/// Event subjects in the log:
/// injection/injection_deferred `[skyrmion, track]`, gate events
/// `[skyrmion, track, gate]`, arrival `[skyrmion, track]` or
/// `[skyrmion, track, neuron]`, arrival_discarded `[skyrmion, neuron]`,
/// duplication `[skyrmion, stage]`, fire/nucleation `[neuron]`,
/// inhibition `[neuron, amount]`.
#[derive(Clone, Debug)]
pub struct DeviceSim {
    now: f64,
    next_seq: u64,
    next_log_seq: u64,
    next_id: SkyrmionId,
    queue: BinaryHeap<Pending>,
    tracks: Vec<Track>,
    neurons: Vec<NeuronSlot>,
    waiting: BTreeMap<SkyrmionId, Skyrmion>,
    flying: BTreeMap<SkyrmionId, Skyrmion>,
    material: MaterialParams,
    ledger: EnergyLedger,
    counters: Counters,
    logging: bool,
    buffer: Vec<DeviceEvent>,
    fires: Vec<(f64, NeuronId)>,
}

impl DeviceSim {
    pub fn new(material: MaterialParams) -> Self {
        DeviceSim {
            now: 0.0,
            next_seq: 0,
            next_log_seq: 0,
            next_id: 0,
            queue: BinaryHeap::new(),
            tracks: Vec::new(),
            neurons: Vec::new(),
            waiting: BTreeMap::new(),
            flying: BTreeMap::new(),
            material,
            ledger: EnergyLedger::new(),
            counters: Counters::default(),
            logging: true,
            buffer: Vec::new(),
            fires: Vec::new(),
        }
    }

    /// Disabling the log makes `advance_until` return nothing but keeps
    /// counters, ledger and fire records.
    pub fn with_event_log(mut self, enabled: bool) -> Self {
        self.logging = enabled;
        self
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn in_flight(&self) -> u64 {
        self.flying.len() as u64
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn neuron(&self, id: NeuronId) -> Option<&SkyrmionNeuron> {
        self.neurons.get(id).map(|n| &n.cell)
    }

    pub fn track_geometry(&self, id: TrackId) -> Option<&TrackGeometry> {
        self.tracks.get(id).map(|t| &t.geometry)
    }

    pub fn track_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// Fires since the last call, as `(time_ns, neuron)` in processing order.
    pub fn take_fires(&mut self) -> Vec<(f64, NeuronId)> {
        std::mem::take(&mut self.fires)
    }

    pub fn add_neuron(&mut self, cell: SkyrmionNeuron) -> NeuronId {
        self.neurons.push(NeuronSlot {
            cell,
            output: None,
            inhibits: Vec::new(),
            inhibit_amount: 0,
        });
        self.neurons.len() - 1
    }

    /// Adds a track. Tracks whose drive is below depinning can be built but
    /// refuse injections.
    pub fn add_track(&mut self, mut geometry: TrackGeometry, drive: DriveParams, terminal: Terminal) -> Result<TrackId> {
        let velocity = velocity_from_drive(&drive)?;
        let len = geometry.length_nm();
        let terminal_feature = match &terminal {
            Terminal::Sink => None,
            Terminal::Annihilate => Some(FeatureKind::AnnihilationTerminal),
            Terminal::Neuron(n) => {
                if *n >= self.neurons.len() {
                    return Err(Error::Geometry(format!("terminal references unknown neuron {n}")));
                }
                Some(FeatureKind::Notch)
            }
            Terminal::Junction {
                branches,
                stage_length_nm,
            } => {
                if branches.is_empty() {
                    return Err(Error::param("n_branches", "junction needs at least one branch"));
                }
                if let Some(b) = branches.iter().find(|b| **b >= self.tracks.len()) {
                    return Err(Error::Geometry(format!("junction references unknown track {b}")));
                }
                if !(*stage_length_nm >= 0.0 && stage_length_nm.is_finite()) {
                    return Err(Error::param("stage_length", "must be finite and >= 0"));
                }
                Some(FeatureKind::Junction)
            }
        };
        if let Some(kind) = terminal_feature {
            if !geometry.features.iter().any(|f| f.kind == kind) {
                geometry.features.push(Feature {
                    position_nm: len,
                    kind,
                });
            }
        }
        geometry.validate()?;
        self.tracks.push(Track {
            geometry,
            drive,
            velocity,
            gates: Vec::new(),
            terminal,
            reserved: Vec::new(),
        });
        Ok(self.tracks.len() - 1)
    }

    pub fn add_gate(&mut self, track: TrackId, position_nm: f64, synapse: BinarySynapse) -> Result<GateId> {
        let t = self.track_mut(track)?;
        let len = t.geometry.length_nm();
        if !(0.0..=len).contains(&position_nm) {
            return Err(Error::Geometry(format!(
                "gate at {position_nm} nm outside track of length {len} nm"
            )));
        }
        let idx = t.gates.partition_point(|g| g.position_nm <= position_nm);
        t.gates.insert(idx, Gate { position_nm, synapse });
        t.geometry.features.push(Feature {
            position_nm,
            kind: FeatureKind::Gate,
        });
        Ok(idx)
    }

    /// Gates are indexed in position order.
    pub fn set_gate_weight(&mut self, track: TrackId, gate: GateId, bit: bool) -> Result<()> {
        let t = self.track_mut(track)?;
        let g = t
            .gates
            .get_mut(gate)
            .ok_or_else(|| Error::Geometry(format!("track {track} has no gate {gate}")))?;
        g.synapse.set_weight(bit);
        Ok(())
    }

    pub fn connect_output(&mut self, neuron: NeuronId, track: TrackId) -> Result<()> {
        if track >= self.tracks.len() {
            return Err(Error::Geometry(format!("unknown output track {track}")));
        }
        self.neuron_mut(neuron)?.output = Some(track);
        Ok(())
    }

    /// On every fire of `neuron`, each target's count drops by `amount`.
    pub fn set_inhibition(&mut self, neuron: NeuronId, targets: Vec<NeuronId>, amount: u32) -> Result<()> {
        if let Some(t) = targets.iter().find(|t| **t >= self.neurons.len()) {
            return Err(Error::Geometry(format!("inhibition targets unknown neuron {t}")));
        }
        let slot = self.neuron_mut(neuron)?;
        slot.inhibits = targets;
        slot.inhibit_amount = amount;
        Ok(())
    }

    /// Injects a new skyrmion at the start of `track` at time `t_ns`.
    ///
    /// If the entrance is not clear by `min_spacing` the injection is
    /// deferred to the earliest legal time and an `injection_deferred`
    /// event is logged at the requested time.
    pub fn inject_skyrmion(&mut self, track: TrackId, t_ns: f64) -> Result<Skyrmion> {
        if !(t_ns >= self.now) {
            return Err(Error::param(
                "t",
                format!("injection time {t_ns} ns precedes simulation time {} ns", self.now),
            ));
        }
        self.schedule_injection(track, t_ns, Origin::External)
    }

    /// Processes every event with time <= `t_end` in (time, seq) order.
    pub fn advance_until(&mut self, t_end: f64) -> Result<Vec<DeviceEvent>> {
        if !(t_end >= self.now) {
            return Err(Error::param(
                "t_end",
                format!("{t_end} ns precedes simulation time {} ns", self.now),
            ));
        }
        while let Some(p) = self.queue.peek() {
            if p.time > t_end {
                break;
            }
            let p = self.queue.pop().expect("peeked");
            self.now = p.time;
            self.process(p)?;
        }
        self.now = t_end;
        Ok(std::mem::take(&mut self.buffer))
    }

    /// Runs until the queue is empty; time stops at the last event.
    pub fn run_until_idle(&mut self) -> Result<Vec<DeviceEvent>> {
        let mut out = Vec::new();
        while let Some(p) = self.queue.peek() {
            let t = p.time;
            out.extend(self.advance_until(t)?);
        }
        Ok(out)
    }

    /// Position along its current track, clamped to the track.
    pub fn position_nm(&self, id: SkyrmionId) -> Option<f64> {
        let s = self.flying.get(&id)?;
        let t = &self.tracks[s.track];
        let d = (self.now - s.entered_ns).max(0.0) * t.velocity;
        Some(d.min(t.geometry.length_nm()))
    }

    pub fn skyrmions(&self) -> impl Iterator<Item = &Skyrmion> {
        self.flying.values()
    }

    /// Checks that no two skyrmions that have entered the same track are
    /// closer than its `min_spacing`.
    pub fn check_spacing(&self) -> Result<()> {
        let mut per_track: BTreeMap<TrackId, Vec<f64>> = BTreeMap::new();
        for s in self.flying.values() {
            if s.entered_ns <= self.now {
                per_track
                    .entry(s.track)
                    .or_default()
                    .push(self.position_nm(s.id).expect("flying"));
            }
        }
        for (track, mut pos) in per_track {
            let t = &self.tracks[track];
            // Zero-length tracks hold skyrmions only for an instant.
            if t.geometry.length_nm() == 0.0 {
                continue;
            }
            pos.sort_by(f64::total_cmp);
            let min = t.geometry.min_spacing_nm * (1.0 - 1e-9);
            for w in pos.windows(2) {
                if w[1] - w[0] < min && w[1] < t.geometry.length_nm() {
                    return Err(Error::Invariant(format!(
                        "spacing violated on track {track}: {} nm < {} nm",
                        w[1] - w[0],
                        t.geometry.min_spacing_nm
                    )));
                }
            }
        }
        Ok(())
    }

    fn track_mut(&mut self, id: TrackId) -> Result<&mut Track> {
        self.tracks
            .get_mut(id)
            .ok_or_else(|| Error::Geometry(format!("unknown track {id}")))
    }

    fn neuron_mut(&mut self, id: NeuronId) -> Result<&mut NeuronSlot> {
        self.neurons
            .get_mut(id)
            .ok_or_else(|| Error::Geometry(format!("unknown neuron {id}")))
    }

    fn push(&mut self, time: f64, action: Action) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Pending { time, seq, action });
    }

    fn emit(&mut self, kind: EventKind, subjects: &[u64]) {
        if !self.logging {
            return;
        }
        let seq = self.next_log_seq;
        self.next_log_seq += 1;
        self.buffer.push(DeviceEvent {
            time_ns: self.now,
            seq,
            kind,
            subjects: subjects.to_vec(),
        });
    }

    /// Earliest time >= `t` at least one spacing gap away from every
    /// reservation on the track; reserves it.
    fn reserve_slot(&mut self, track: TrackId, t: f64) -> Result<f64> {
        let now = self.now;
        let tr = self.track_mut(track)?;
        if tr.velocity <= 0.0 {
            return Err(tr.drive.stalled());
        }
        let gap = tr.transit_ns(tr.geometry.min_spacing_nm);
        let tol = gap * 1e-9;
        // Reservations older than one gap can no longer conflict.
        let stale = tr.reserved.partition_point(|r| *r < now - gap);
        tr.reserved.drain(..stale);
        let mut candidate = t;
        let mut i = tr.reserved.partition_point(|r| *r <= candidate - gap + tol);
        while i < tr.reserved.len() {
            let r = tr.reserved[i];
            if r - candidate >= gap - tol {
                break;
            }
            candidate = candidate.max(r + gap);
            i += 1;
        }
        let at = tr.reserved.partition_point(|r| *r <= candidate);
        tr.reserved.insert(at, candidate);
        Ok(candidate)
    }

    fn schedule_injection(&mut self, track: TrackId, t: f64, origin: Origin) -> Result<Skyrmion> {
        let at = self.reserve_slot(track, t)?;
        let id = self.next_id;
        self.next_id += 1;
        let s = Skyrmion {
            id,
            track,
            entered_ns: at,
            created_ns: at,
            origin,
        };
        match origin {
            Origin::External => {
                self.waiting.insert(id, s.clone());
            }
            Origin::Duplicate => {
                self.flying.insert(id, s.clone());
            }
        }
        if at > t {
            self.push(t, Action::NoteDeferral { sk: id, track });
        }
        self.push(at, Action::Inject { sk: id });
        Ok(s)
    }

    fn schedule_next_feature(&mut self, sk: SkyrmionId, next_gate: GateId) {
        let s = &self.flying[&sk];
        let tr = &self.tracks[s.track];
        let (time, action) = match tr.gates.get(next_gate) {
            Some(g) => (
                s.entered_ns + tr.transit_ns(g.position_nm),
                Action::ReachGate { sk, gate: next_gate },
            ),
            None => (
                s.entered_ns + tr.transit_ns(tr.geometry.length_nm()),
                Action::ReachEnd { sk },
            ),
        };
        self.push(time.max(self.now), action);
    }

    fn charge_transport(&mut self, sk: SkyrmionId, track: TrackId, distance_nm: f64) -> Result<()> {
        let tr = &self.tracks[track];
        let mut energy = 0.0;
        for (len, area) in tr.geometry.covered_pieces(distance_nm) {
            energy += transport_energy_with_area(len, area, &tr.drive, self.material.resistivity)?;
        }
        if distance_nm > 0.0 {
            self.ledger.record(self.now, EnergySource::Transit, energy, sk)?;
        }
        Ok(())
    }

    fn process(&mut self, p: Pending) -> Result<()> {
        match p.action {
            Action::NoteDeferral { sk, track } => {
                self.counters.deferred += 1;
                self.emit(EventKind::InjectionDeferred, &[sk, track as u64]);
            }
            Action::Inject { sk } => {
                if let Some(s) = self.waiting.remove(&sk) {
                    debug_assert_eq!(s.origin, Origin::External);
                    self.counters.injected += 1;
                    self.flying.insert(sk, s);
                }
                let track = self.flying[&sk].track;
                self.emit(EventKind::Injection, &[sk, track as u64]);
                self.schedule_next_feature(sk, 0);
            }
            Action::ReachGate { sk, gate } => {
                let track = self.flying[&sk].track;
                let g = &self.tracks[track].gates[gate];
                let pos = g.position_nm;
                match route_at_synapse_gate(g.synapse.weight_bit()) {
                    Route::Pass => {
                        self.emit(EventKind::GatePass, &[sk, track as u64, gate as u64]);
                        self.schedule_next_feature(sk, gate + 1);
                    }
                    Route::Annihilate => {
                        self.emit(EventKind::GateAnnihilate, &[sk, track as u64, gate as u64]);
                        self.charge_transport(sk, track, pos)?;
                        self.ledger.record(
                            self.now,
                            EnergySource::GateAnnihilation,
                            self.material.gate_energy_fj,
                            sk,
                        )?;
                        self.flying.remove(&sk);
                        self.counters.annihilated += 1;
                    }
                }
            }
            Action::ReachEnd { sk } => {
                let track = self.flying[&sk].track;
                let len = self.tracks[track].geometry.length_nm();
                self.charge_transport(sk, track, len)?;
                match self.tracks[track].terminal.clone() {
                    Terminal::Sink => {
                        self.emit(EventKind::Arrival, &[sk, track as u64]);
                        self.flying.remove(&sk);
                        self.counters.delivered += 1;
                    }
                    Terminal::Annihilate => {
                        self.emit(EventKind::TerminalAnnihilate, &[sk, track as u64]);
                        self.flying.remove(&sk);
                        self.counters.annihilated += 1;
                    }
                    Terminal::Neuron(n) => {
                        self.emit(EventKind::Arrival, &[sk, track as u64, n as u64]);
                        self.flying.remove(&sk);
                        self.counters.delivered += 1;
                        match self.neurons[n].cell.integrate_arrival(self.now) {
                            Integration::Discarded => {
                                self.counters.discarded += 1;
                                self.emit(EventKind::ArrivalDiscarded, &[sk, n as u64]);
                            }
                            Integration::Integrated { .. } => {}
                            Integration::Fire => self.fire(n)?,
                        }
                    }
                    Terminal::Junction { .. } => self.duplication_stage(sk, 0)?,
                }
            }
            Action::DuplicationStage { sk, stage } => self.duplication_stage(sk, stage)?,
            Action::Nucleate { neuron } => {
                self.neurons[neuron].cell.nucleate();
                self.emit(EventKind::Nucleation, &[neuron as u64]);
                self.ledger.record(
                    self.now,
                    EnergySource::ResetNucleation,
                    self.material.nucleation_energy_fj,
                    neuron as u64,
                )?;
            }
            Action::Inhibit { neuron, amount } => {
                self.neurons[neuron].cell.apply_inhibition(amount);
                self.counters.inhibitions += 1;
                self.emit(EventKind::Inhibition, &[neuron as u64, amount as u64]);
            }
        }
        Ok(())
    }

    /// `stage` 0 is the arrival at the junction; stages 1..=k are the
    /// binary splits, each one stage-length transit after the previous.
    fn duplication_stage(&mut self, sk: SkyrmionId, stage: u32) -> Result<()> {
        let track = self.flying[&sk].track;
        let (branches, stage_len) = match &self.tracks[track].terminal {
            Terminal::Junction {
                branches,
                stage_length_nm,
            } => (branches.clone(), *stage_length_nm),
            _ => return Err(Error::Invariant("duplication on a non-junction track".into())),
        };
        let stages = duplication_stages(branches.len());
        if stage > 0 {
            self.emit(EventKind::Duplication, &[sk, stage as u64]);
            self.ledger.record(
                self.now,
                EnergySource::Duplication,
                self.material.duplication_energy_fj,
                sk,
            )?;
        }
        if stage < stages {
            let delay = self.tracks[track].transit_ns(stage_len);
            self.push(self.now + delay, Action::DuplicationStage { sk, stage: stage + 1 });
            return Ok(());
        }
        self.flying.remove(&sk);
        self.counters.duplication_created += branches.len() as u64 - 1;
        for b in branches {
            self.schedule_injection(b, self.now, Origin::Duplicate)?;
        }
        Ok(())
    }

    fn fire(&mut self, n: NeuronId) -> Result<()> {
        let out = self.neurons[n].cell.fire_and_reset(self.now)?;
        self.counters.fired += 1;
        self.fires.push((self.now, n));
        self.emit(EventKind::Fire, &[n as u64]);
        self.ledger.record(
            self.now,
            EnergySource::OutputConversion,
            self.material.conversion_energy_fj,
            n as u64,
        )?;
        if let Some(track) = self.neurons[n].output {
            self.schedule_injection(track, out.output_at_ns, Origin::External)?;
        }
        self.push(out.nucleation_at_ns, Action::Nucleate { neuron: n });
        let amount = self.neurons[n].inhibit_amount;
        for i in 0..self.neurons[n].inhibits.len() {
            let target = self.neurons[n].inhibits[i];
            self.push(self.now, Action::Inhibit { neuron: target, amount });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plain(len: f64) -> TrackGeometry {
        TrackGeometry::plain(len, 50.0, 1.0, 30.0)
    }

    fn sim() -> DeviceSim {
        DeviceSim::new(MaterialParams::default())
    }

    fn conserved(s: &DeviceSim) -> bool {
        let c = s.counters();
        c.injected + c.duplication_created == s.in_flight() + c.delivered + c.annihilated
    }

    #[test]
    fn empty_sim_advances_quietly() {
        let mut s = sim();
        assert!(s.advance_until(100.0).unwrap().is_empty());
        assert_eq!(s.now(), 100.0);
        assert!(s.advance_until(50.0).is_err());
    }

    #[test]
    fn single_arrival_on_plain_track() {
        let mut s = sim();
        let t = s.add_track(plain(750.0), DriveParams::default(), Terminal::Sink).unwrap();
        s.inject_skyrmion(t, 0.0).unwrap();
        let ev = s.advance_until(5.0).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, EventKind::Injection);
        assert_relative_eq!(s.position_nm(0).unwrap(), 375.0, max_relative = 1e-12);
        let ev = s.advance_until(100.0).unwrap();
        let arrivals: Vec<_> = ev.iter().filter(|e| e.kind == EventKind::Arrival).collect();
        assert_eq!(arrivals.len(), 1);
        assert_relative_eq!(arrivals[0].time_ns, 10.0, max_relative = 1e-12);
        assert!(conserved(&s));
    }

    #[test]
    fn simultaneous_injections_are_spaced() {
        let mut s = sim();
        let t = s.add_track(plain(750.0), DriveParams::default(), Terminal::Sink).unwrap();
        let a = s.inject_skyrmion(t, 0.0).unwrap();
        let b = s.inject_skyrmion(t, 0.0).unwrap();
        assert_eq!(a.created_ns, 0.0);
        assert_relative_eq!(b.created_ns, 30.0 / 75.0, max_relative = 1e-12);
        let ev = s.run_until_idle().unwrap();
        assert_eq!(ev.iter().filter(|e| e.kind == EventKind::InjectionDeferred).count(), 1);
        assert_eq!(ev.iter().filter(|e| e.kind == EventKind::Arrival).count(), 2);
        assert_eq!(s.counters().deferred, 1);
    }

    #[test]
    fn stalled_track_refuses_injection() {
        let mut s = sim();
        let d = DriveParams {
            current_density: 5e7,
            ..DriveParams::default()
        };
        let t = s.add_track(plain(750.0), d, Terminal::Sink).unwrap();
        assert!(matches!(s.inject_skyrmion(t, 0.0), Err(Error::StalledTransport { .. })));
    }

    #[test]
    fn weight_zero_gate_annihilates_everything() {
        let mut s = sim();
        let n = s.add_neuron(SkyrmionNeuron::new(4, 5.0, 1.0).unwrap());
        let t = s.add_track(plain(1000.0), DriveParams::default(), Terminal::Neuron(n)).unwrap();
        s.add_gate(t, 500.0, BinarySynapse::new(false)).unwrap();
        for k in 0..100 {
            s.inject_skyrmion(t, k as f64).unwrap();
        }
        s.run_until_idle().unwrap();
        let c = s.counters();
        assert_eq!(c.delivered, 0);
        assert_eq!(c.annihilated, 100);
        let gate_entries = s
            .ledger()
            .entries()
            .iter()
            .filter(|e| e.source == EnergySource::GateAnnihilation)
            .count();
        assert_eq!(gate_entries, 100);
        assert_eq!(s.neuron(n).unwrap().count(), 0);
        assert!(conserved(&s));
    }

    #[test]
    fn neuron_fires_on_fourth_and_resets() {
        let mut s = sim();
        let n = s.add_neuron(SkyrmionNeuron::new(4, 5.0, 1.0).unwrap());
        let t = s.add_track(plain(1000.0), DriveParams::default(), Terminal::Neuron(n)).unwrap();
        let out = s.add_track(plain(1000.0), DriveParams::default(), Terminal::Sink).unwrap();
        s.connect_output(n, out).unwrap();
        for k in 0..4 {
            s.inject_skyrmion(t, 10.0 * k as f64).unwrap();
        }
        let ev = s.run_until_idle().unwrap();
        let fires: Vec<_> = ev.iter().filter(|e| e.kind == EventKind::Fire).collect();
        assert_eq!(fires.len(), 1);
        let fire_t = 30.0 + 1000.0 / 75.0;
        assert_relative_eq!(fires[0].time_ns, fire_t, max_relative = 1e-12);
        let nuc = ev.iter().find(|e| e.kind == EventKind::Nucleation).unwrap();
        assert_relative_eq!(nuc.time_ns, fire_t + 5.0, max_relative = 1e-12);
        // output skyrmion appears after the conversion delay
        let out_inj = ev
            .iter()
            .filter(|e| e.kind == EventKind::Injection && e.subjects[1] == out as u64)
            .collect::<Vec<_>>();
        assert_eq!(out_inj.len(), 1);
        assert_relative_eq!(out_inj[0].time_ns, fire_t + 1.0, max_relative = 1e-12);
        assert_eq!(s.counters().delivered, 5);
        assert!(conserved(&s));
    }

    #[test]
    fn burst_within_refractory_fires_once() {
        let mut s = sim();
        let n = s.add_neuron(SkyrmionNeuron::new(4, 100.0, 1.0).unwrap());
        let t = s.add_track(plain(0.0), DriveParams::default(), Terminal::Neuron(n)).unwrap();
        for k in 0..8 {
            s.inject_skyrmion(t, k as f64).unwrap();
        }
        s.run_until_idle().unwrap();
        assert_eq!(s.counters().fired, 1);
        assert_eq!(s.counters().discarded, 4);
    }

    #[test]
    fn junction_duplicates_with_stage_delays() {
        for (n, stages) in [(1usize, 0u32), (2, 1), (5, 3)] {
            let mut s = sim();
            let branches: Vec<_> = (0..n)
                .map(|_| s.add_track(plain(0.0), DriveParams::default(), Terminal::Sink).unwrap())
                .collect();
            let trunk = s
                .add_track(
                    plain(0.0),
                    DriveParams::default(),
                    Terminal::Junction {
                        branches: branches.clone(),
                        stage_length_nm: 75.0,
                    },
                )
                .unwrap();
            let orig = s.inject_skyrmion(trunk, 0.0).unwrap();
            let ev = s.run_until_idle().unwrap();
            let dups = ev.iter().filter(|e| e.kind == EventKind::Duplication).count();
            assert_eq!(dups as u32, stages);
            let arrivals: Vec<_> = ev.iter().filter(|e| e.kind == EventKind::Arrival).collect();
            assert_eq!(arrivals.len(), n);
            for a in &arrivals {
                assert_relative_eq!(a.time_ns, stages as f64, epsilon = 1e-12);
                assert_ne!(a.subjects[0], orig.id);
            }
            let c = s.counters();
            assert_eq!(c.duplication_created, n as u64 - 1);
            assert!(conserved(&s));
        }
    }

    #[test]
    fn inhibition_reduces_target_count() {
        let mut s = sim();
        let a = s.add_neuron(SkyrmionNeuron::new(1, 0.0, 0.0).unwrap());
        let b = s.add_neuron(SkyrmionNeuron::new(10, 0.0, 0.0).unwrap());
        s.set_inhibition(a, vec![b], 2).unwrap();
        let ta = s.add_track(plain(0.0), DriveParams::default(), Terminal::Neuron(a)).unwrap();
        let tb = s.add_track(plain(0.0), DriveParams::default(), Terminal::Neuron(b)).unwrap();
        for k in 0..3 {
            s.inject_skyrmion(tb, k as f64).unwrap();
        }
        s.advance_until(5.0).unwrap();
        assert_eq!(s.neuron(b).unwrap().count(), 3);
        s.inject_skyrmion(ta, 6.0).unwrap();
        s.advance_until(10.0).unwrap();
        assert_eq!(s.neuron(b).unwrap().count(), 1);
    }

    #[test]
    fn events_are_time_ordered_with_strictly_increasing_seq() {
        let mut s = sim();
        let n = s.add_neuron(SkyrmionNeuron::new(2, 3.0, 1.0).unwrap());
        let t = s.add_track(plain(400.0), DriveParams::default(), Terminal::Neuron(n)).unwrap();
        s.add_gate(t, 100.0, BinarySynapse::new(true)).unwrap();
        for k in [7.0, 0.0, 3.5, 0.0, 12.0] {
            s.inject_skyrmion(t, k).unwrap();
        }
        let ev = s.run_until_idle().unwrap();
        for w in ev.windows(2) {
            assert!(w[0].time_ns <= w[1].time_ns);
            assert!(w[0].seq < w[1].seq);
        }
    }
}
