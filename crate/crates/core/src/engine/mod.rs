//! Single-run discrete-event core.
//!
//! Time is integer microseconds. One run is a strictly sequential event
//! loop; given the same configuration and seed it produces the same
//! [`RunLog`] bit for bit.
//!
//! Geometry and shadowing are piecewise constant between mobility ticks.
//! Each transmission captures the link matrix that was current when it
//! started, so every later use of its received power (carrier sensing,
//! LTE-V2X RSSI sensing, interference at other receivers) agrees.

mod queue;

pub use queue::{Event, EventKind, EventQueue};

use std::collections::{BTreeMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use rand_chacha::ChaCha8Rng;

use crate::channel::{self, average_sinr_db, decide_reception, noise_floor_dbm, LinkBudgetConfig, PerCurve, ShadowingField};
use crate::error::{ConfigError, Error};
use crate::mac::itsg5::{airtime_us, cca_busy, Action, CsmaConfig, CsmaState};
use crate::mac::ltev2x::{self, tti_of, tti_start, Rssi, Selection, SpsConfig, SpsState, OCCUPIED_US, TTI_US};
use crate::results::{HistogramConfig, PrrHistogram};
use crate::rng::{Seed, Stream};
use crate::scenario::{self, distance_m, RoadConfig, Vehicle};
use crate::traffic::{Cam, CamGenerator, TrafficConfig, TrafficMode};
use crate::{dbm_to_mw, mw_to_dbm, Micros, Tech};

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowingConfig {
    pub sigma_db: f64,
    pub decorr_m: f64,
}

impl Default for ShadowingConfig {
    fn default() -> Self {
        ShadowingConfig { sigma_db: 3.0, decorr_m: 25.0 }
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub road: RoadConfig,
    pub link: LinkBudgetConfig,
    pub shadowing: ShadowingConfig,
    pub per_itsg5: PerCurve,
    pub per_ltev2x: PerCurve,
    pub csma: CsmaConfig,
    pub sps: SpsConfig,
    pub traffic: TrafficConfig,
    pub mode: TrafficMode,
    pub itsg5_fraction: f64,
    pub warm_up_s: f64,
    pub measure_s: f64,
    pub mobility_update_ms: f64,
    /// Receivers weaker than `noise - relevance_margin_db` are not evaluated.
    pub relevance_margin_db: f64,
    pub histogram: HistogramConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            road: RoadConfig::default(),
            link: LinkBudgetConfig::default(),
            shadowing: ShadowingConfig::default(),
            per_itsg5: PerCurve::itsg5_default(),
            per_ltev2x: PerCurve::ltev2x_default(),
            csma: CsmaConfig::default(),
            sps: SpsConfig::default(),
            traffic: TrafficConfig::default(),
            mode: TrafficMode::Standard,
            itsg5_fraction: 1.0,
            warm_up_s: 1.0,
            measure_s: 10.0,
            mobility_update_ms: 100.0,
            relevance_margin_db: 10.0,
            histogram: HistogramConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn collect_errors(&self, errors: &mut Vec<ConfigError>) {
        self.road.validate(errors);
        self.link.validate(errors);
        self.csma.validate(errors);
        self.sps.validate(errors);
        self.traffic.validate(errors);
        self.histogram.validate(errors);
        let mut bad = |key, message: &str| {
            errors.push(ConfigError::OutOfRange { key, message: message.to_string() })
        };
        if !(self.shadowing.sigma_db >= 0.0) {
            bad("shadowing_sigma_db", "must be >= 0");
        }
        if !(self.shadowing.decorr_m > 0.0) {
            bad("shadowing_decorr_m", "must be > 0");
        }
        if !(0.0..=1.0).contains(&self.itsg5_fraction) {
            bad("itsg5_fraction", "must be in [0, 1]");
        }
        if !(self.warm_up_s >= 0.0) {
            bad("warm_up_s", "must be >= 0");
        }
        if !(self.measure_s > 0.0) {
            bad("measure_s", "must be > 0");
        }
        if !(self.mobility_update_ms > 0.0) {
            bad("mobility_update_ms", "must be > 0");
        }
        if !(self.relevance_margin_db >= 0.0) {
            bad("relevance_margin_db", "must be >= 0");
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let mut errors = Vec::new();
        self.collect_errors(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    fn per_curve(&self, tech: Tech) -> &PerCurve {
        match tech {
            Tech::ItsG5 => &self.per_itsg5,
            Tech::LteV2x => &self.per_ltev2x,
        }
    }
}

/// Per-technology CAM accounting over the measurement window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Counters {
    pub generated: u64,
    pub transmitted: u64,
    /// Superseded in the MAC queue by a newer CAM before reaching the air.
    pub replaced: u64,
    /// Still queued when the run ended.
    pub unsent: u64,
}

/// One finished transmission and what its receivers made of it.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub node: usize,
    pub tech: Tech,
    pub start_us: Micros,
    pub end_us: Micros,
    pub counted: bool,
    /// Relevant receivers within the histogram range.
    pub receivers: u64,
    pub successes: u64,
    pub half_duplex_failures: u64,
}

/// Detailed traces for property checks.
#[derive(Debug, Clone, Default)]
pub struct Instrumentation {
    /// Per vehicle, every carrier-sense busy/idle transition. ITS-G5 only.
    pub cca: Vec<Vec<(Micros, bool)>>,
    /// Per vehicle, start time of every transmission.
    pub tx_starts: Vec<Vec<Micros>>,
    pub selections: Vec<Selection>,
    pub deliveries: Vec<DeliveryRecord>,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub vehicles: Vec<Vehicle>,
    pub histogram: PrrHistogram,
    pub counters: BTreeMap<Tech, Counters>,
    /// Transmissions per vehicle over the whole run, warm-up included.
    pub tx_per_vehicle: Vec<u64>,
    pub measured_s: f64,
    pub trace: Vec<String>,
    pub instrumentation: Option<Instrumentation>,
}

impl RunLog {
    /// Hash of the measured results, for determinism checks.
    pub fn digest(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for tech in Tech::ALL {
            for b in self.histogram.bins(tech) {
                (b.opportunities, b.successes).hash(&mut h);
            }
        }
        self.counters.hash(&mut h);
        self.tx_per_vehicle.hash(&mut h);
        h.finish()
    }

    pub fn counters(&self, tech: Tech) -> Counters {
        self.counters.get(&tech).copied().unwrap_or_default()
    }
}

/// Total in-band power from linear contributions plus noise.
pub fn total_power_dbm(contributions_mw: impl IntoIterator<Item = f64>, noise_dbm: f64) -> f64 {
    mw_to_dbm(dbm_to_mw(noise_dbm) + contributions_mw.into_iter().sum::<f64>())
}

/// Overlap of two half-open intervals.
pub fn overlap_us(a: (Micros, Micros), b: (Micros, Micros)) -> Micros {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

/// Pairwise distances and received powers, row = transmitter.
#[derive(Debug)]
struct LinkMatrix {
    n: usize,
    dist: Vec<f64>,
    rx_dbm: Vec<f64>,
    rx_mw: Vec<f64>,
}

impl LinkMatrix {
    fn build(vehicles: &[Vehicle], road: &RoadConfig, link: &LinkBudgetConfig, shadow: &ShadowingField) -> Self {
        let n = vehicles.len();
        let mut dist = vec![0.0; n * n];
        let mut rx_dbm = vec![f64::NEG_INFINITY; n * n];
        let mut rx_mw = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = distance_m(&vehicles[i], &vehicles[j], road);
                let p = channel::link_rx_power_dbm(d, shadow.get(i, j), link);
                let mw = dbm_to_mw(p);
                for k in [i * n + j, j * n + i] {
                    dist[k] = d;
                    rx_dbm[k] = p;
                    rx_mw[k] = mw;
                }
            }
        }
        LinkMatrix { n, dist, rx_dbm, rx_mw }
    }

    fn idx(&self, tx: usize, rx: usize) -> usize {
        tx * self.n + rx
    }
}

#[derive(Debug)]
struct Transmission {
    id: usize,
    node: usize,
    tech: Tech,
    start: Micros,
    end: Micros,
    counted: bool,
    links: Rc<LinkMatrix>,
}

impl Transmission {
    fn rx_mw(&self, rx: usize) -> f64 {
        self.links.rx_mw[self.links.idx(self.node, rx)]
    }

    fn rx_dbm(&self, rx: usize) -> f64 {
        self.links.rx_dbm[self.links.idx(self.node, rx)]
    }

    fn airtime(&self) -> Micros {
        self.end - self.start
    }
}

struct Node {
    tech: Tech,
    generator: CamGenerator,
    csma: CsmaState<Cam>,
    sps: Option<SpsState>,
    lte_pending: Option<(Cam, u64)>,
    transmitting: Option<usize>,
    cca_busy: bool,
    last_tx_tti: Option<u64>,
}

/// A configured run. Use [`run`] for the common case; build a
/// `Simulation` directly to place vehicles by hand, override traffic
/// periods or switch on tracing.
pub struct Simulation<'a> {
    cfg: &'a SimConfig,
    seed: Seed,
    vehicles: Vec<Vehicle>,
    period_overrides: BTreeMap<usize, Micros>,
    shadowing_enabled: bool,
    instrument: bool,
    trace: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a SimConfig, seed: Seed) -> Result<Self, Error> {
        cfg.validate()?;
        let mut rng = seed.stream(Stream::Placement);
        let vehicles = scenario::spawn(&cfg.road, cfg.itsg5_fraction, &mut rng);
        Ok(Self::assemble(cfg, seed, vehicles))
    }

    /// Runs with an explicit vehicle set; ids must be `0..n` in order.
    pub fn with_vehicles(cfg: &'a SimConfig, seed: Seed, vehicles: Vec<Vehicle>) -> Result<Self, Error> {
        cfg.validate()?;
        if vehicles.iter().enumerate().any(|(i, v)| v.id != i) {
            return Err(Error::Run("vehicle ids must be 0..n in order".into()));
        }
        Ok(Self::assemble(cfg, seed, vehicles))
    }

    fn assemble(cfg: &'a SimConfig, seed: Seed, vehicles: Vec<Vehicle>) -> Self {
        Simulation {
            cfg,
            seed,
            vehicles,
            period_overrides: BTreeMap::new(),
            shadowing_enabled: true,
            instrument: false,
            trace: false,
        }
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    /// Fixes one vehicle's CAM period. LTE-V2X periods must be whole TTIs.
    pub fn set_period(&mut self, vehicle: usize, period_us: Micros) -> Result<&mut Self, Error> {
        if vehicle >= self.vehicles.len() || period_us == 0 {
            return Err(Error::Run(format!("bad period override for vehicle {vehicle}")));
        }
        if self.vehicles[vehicle].tech == Tech::LteV2x && !period_us.is_multiple_of(TTI_US) {
            return Err(Error::Run("LTE-V2X period must be a multiple of 1 ms".into()));
        }
        self.period_overrides.insert(vehicle, period_us);
        Ok(self)
    }

    /// Forces every link's shadowing to 0 dB.
    pub fn without_shadowing(&mut self) -> &mut Self {
        self.shadowing_enabled = false;
        self
    }

    pub fn instrument(&mut self, on: bool) -> &mut Self {
        self.instrument = on;
        self
    }

    pub fn trace(&mut self, on: bool) -> &mut Self {
        self.trace = on;
        self
    }

    pub fn run(&self) -> RunLog {
        Runner::new(self).run()
    }
}

/// Simulates one configuration with one seed.
pub fn run(cfg: &SimConfig, seed: Seed) -> Result<RunLog, Error> {
    Ok(Simulation::new(cfg, seed)?.run())
}

struct Runner<'a> {
    cfg: &'a SimConfig,
    vehicles: Vec<Vehicle>,
    nodes: Vec<Node>,
    shadow: ShadowingField,
    links: Rc<LinkMatrix>,
    queue: EventQueue,
    now: Micros,
    active: Vec<usize>,
    recent: VecDeque<Transmission>,
    next_tx_id: usize,
    noise_dbm: f64,
    noise_mw: f64,
    its_airtime: Micros,
    max_airtime: Micros,
    measure_start: Micros,
    measure_end: Micros,
    stop_at: Micros,
    mobility_us: Micros,
    rng_traffic: ChaCha8Rng,
    rng_backoff: ChaCha8Rng,
    rng_sps: ChaCha8Rng,
    rng_reception: ChaCha8Rng,
    rng_shadow: ChaCha8Rng,
    histogram: PrrHistogram,
    counters: BTreeMap<Tech, Counters>,
    tx_per_vehicle: Vec<u64>,
    trace: Option<Vec<String>>,
    inst: Option<Instrumentation>,
    interferers: Vec<(f64, f64)>,
}

fn secs_to_us(s: f64) -> Micros {
    (s * 1e6).round() as Micros
}

impl<'a> Runner<'a> {
    fn new(sim: &Simulation<'a>) -> Self {
        let cfg = sim.cfg;
        let n = sim.vehicles.len();
        let mut rng_traffic = sim.seed.stream(Stream::Traffic);
        let mut rng_shadow = sim.seed.stream(Stream::Shadowing);
        let shadow = if sim.shadowing_enabled && cfg.shadowing.sigma_db > 0.0 {
            ShadowingField::new(n, cfg.shadowing.sigma_db, cfg.shadowing.decorr_m, &mut rng_shadow)
        } else {
            ShadowingField::zero(n)
        };
        let nodes = sim
            .vehicles
            .iter()
            .map(|v| {
                let mut generator = CamGenerator::new(v.id, v.tech, cfg.mode, &cfg.traffic, &mut rng_traffic);
                if let Some(&p) = sim.period_overrides.get(&v.id) {
                    generator = generator.with_period(p);
                }
                let sps = (v.tech == Tech::LteV2x)
                    .then(|| SpsState::new(v.id, (generator.period_us() / TTI_US).max(1), n, &cfg.sps));
                Node {
                    tech: v.tech,
                    generator,
                    csma: CsmaState::new(),
                    sps,
                    lte_pending: None,
                    transmitting: None,
                    cca_busy: false,
                    last_tx_tti: None,
                }
            })
            .collect();
        let links = Rc::new(LinkMatrix::build(&sim.vehicles, &cfg.road, &cfg.link, &shadow));
        let noise_dbm = noise_floor_dbm(&cfg.link);
        let its_airtime = airtime_us(cfg.traffic.payload_bytes, &cfg.csma);
        let measure_start = secs_to_us(cfg.warm_up_s);
        let measure_end = measure_start + secs_to_us(cfg.measure_s);
        let max_period = sim.period_overrides.values().copied().chain([cfg.traffic.max_period_us()]).max().unwrap_or(0);
        Runner {
            cfg,
            vehicles: sim.vehicles.clone(),
            nodes,
            shadow,
            links,
            queue: EventQueue::new(),
            now: 0,
            active: Vec::new(),
            recent: VecDeque::new(),
            next_tx_id: 0,
            noise_dbm,
            noise_mw: dbm_to_mw(noise_dbm),
            its_airtime,
            max_airtime: its_airtime.max(OCCUPIED_US),
            measure_start,
            measure_end,
            stop_at: measure_end + max_period + 2 * TTI_US,
            mobility_us: ((cfg.mobility_update_ms * 1000.0).round() as Micros).max(1),
            rng_traffic,
            rng_backoff: sim.seed.stream(Stream::Backoff),
            rng_sps: sim.seed.stream(Stream::Sps),
            rng_reception: sim.seed.stream(Stream::Reception),
            rng_shadow,
            histogram: PrrHistogram::new(&cfg.histogram),
            counters: Tech::ALL.iter().map(|&t| (t, Counters::default())).collect(),
            tx_per_vehicle: vec![0; n],
            trace: sim.trace.then(Vec::new),
            inst: sim.instrument.then(|| Instrumentation {
                cca: vec![Vec::new(); n],
                tx_starts: vec![Vec::new(); n],
                ..Default::default()
            }),
            interferers: Vec::new(),
        }
    }

    fn log(&mut self, kind: &str, subject: impl std::fmt::Display) {
        if let Some(t) = self.trace.as_mut() {
            t.push(format!("{} {} {}", self.now, kind, subject));
        }
    }

    fn counted(&self, cam: &Cam) -> bool {
        cam.generated_us >= self.measure_start && cam.generated_us < self.measure_end
    }

    fn counter(&mut self, tech: Tech) -> &mut Counters {
        self.counters.get_mut(&tech).expect("all techs present")
    }

    fn run(mut self) -> RunLog {
        let initial = self.vehicles.clone();
        if !self.vehicles.is_empty() {
            for v in 0..self.nodes.len() {
                let t = self.nodes[v].generator.next_generation_us();
                if t < self.measure_end {
                    self.queue.schedule(t, EventKind::CamGeneration { vehicle: v });
                }
            }
            if self.nodes.iter().any(|n| n.tech == Tech::LteV2x) {
                self.queue.schedule(0, EventKind::TtiBoundary { tti: 0 });
            }
            self.queue.schedule(self.mobility_us, EventKind::MobilityUpdate);
            self.queue.schedule(self.stop_at, EventKind::RunEnd);
        }

        while let Some(ev) = self.queue.pop() {
            debug_assert!(ev.time_us >= self.now, "event out of order");
            self.now = ev.time_us;
            match ev.kind {
                EventKind::CamGeneration { vehicle } => self.on_generation(vehicle),
                EventKind::AccessTimer { vehicle, token } => self.on_access_timer(vehicle, token),
                EventKind::TxEnd { tx } => self.on_tx_end(tx),
                EventKind::TtiBoundary { tti } => self.on_tti(tti),
                EventKind::MobilityUpdate => self.on_mobility(),
                EventKind::RunEnd => {
                    self.log("RunEnd", "global");
                    break;
                }
            }
        }

        for v in 0..self.nodes.len() {
            let node = &self.nodes[v];
            let pending: Vec<Cam> = node.csma.pending().copied().into_iter().chain(node.lte_pending.map(|p| p.0)).collect();
            let tech = node.tech;
            for cam in pending {
                if self.counted(&cam) {
                    self.counter(tech).unsent += 1;
                }
            }
        }

        RunLog {
            vehicles: initial,
            histogram: self.histogram,
            counters: self.counters,
            tx_per_vehicle: self.tx_per_vehicle,
            measured_s: self.cfg.measure_s,
            trace: self.trace.unwrap_or_default(),
            instrumentation: self.inst,
        }
    }

    fn on_generation(&mut self, v: usize) {
        let cam = self.nodes[v].generator.generate(self.now, &self.cfg.traffic, &mut self.rng_traffic);
        let next = self.nodes[v].generator.next_generation_us();
        if next < self.measure_end {
            self.queue.schedule(next, EventKind::CamGeneration { vehicle: v });
        }
        self.log("CamGeneration", v);
        let tech = self.nodes[v].tech;
        if self.counted(&cam) {
            self.counter(tech).generated += 1;
        }
        let replaced = match tech {
            Tech::ItsG5 => {
                let (replaced, action) = self.nodes[v].csma.on_packet_ready(self.now, cam, &self.cfg.csma);
                self.apply(v, action);
                replaced
            }
            Tech::LteV2x => {
                let now_tti = tti_of(self.now);
                let sps = self.nodes[v].sps.as_mut().expect("LTE node has SPS state");
                let outcome = sps.on_period_boundary(now_tti, &self.cfg.sps, &mut self.rng_sps);
                let tx_tti = sps.next_tx_tti(now_tti).expect("resource selected");
                if let (ltev2x::PeriodOutcome::Reselected(sel), Some(inst)) = (outcome, self.inst.as_mut()) {
                    inst.selections.push(sel);
                }
                self.nodes[v].lte_pending.replace((cam, tx_tti)).map(|p| p.0)
            }
        };
        if let Some(old) = replaced {
            if self.counted(&old) {
                self.counter(tech).replaced += 1;
            }
        }
    }

    fn apply(&mut self, v: usize, action: Action<Cam>) {
        match action {
            Action::None => {}
            Action::ArmTimer { at, token } => self.queue.schedule(at, EventKind::AccessTimer { vehicle: v, token }),
            Action::Transmit(cam) => {
                let end = self.now + self.its_airtime;
                self.start_tx(v, cam, end);
                self.refresh_cca();
            }
        }
    }

    fn on_access_timer(&mut self, v: usize, token: u64) {
        let action = self.nodes[v].csma.on_timer(token);
        self.apply(v, action);
    }

    fn start_tx(&mut self, v: usize, cam: Cam, end: Micros) {
        let id = self.next_tx_id;
        self.next_tx_id += 1;
        let counted = self.counted(&cam);
        let tech = self.nodes[v].tech;
        self.recent.push_back(Transmission {
            id,
            node: v,
            tech,
            start: self.now,
            end,
            counted,
            links: Rc::clone(&self.links),
        });
        self.active.push(id);
        self.nodes[v].transmitting = Some(id);
        self.tx_per_vehicle[v] += 1;
        if counted {
            self.counter(tech).transmitted += 1;
        }
        if let Some(inst) = self.inst.as_mut() {
            inst.tx_starts[v].push(self.now);
        }
        self.log("TxStart", v);
        self.queue.schedule(end, EventKind::TxEnd { tx: id });
    }

    fn tx(&self, id: usize) -> &Transmission {
        let first = self.recent.front().expect("transmission retained").id;
        &self.recent[id - first]
    }

    /// In-band power at `node` from every transmission on air, plus noise.
    fn power_view_mw(&self, node: usize) -> f64 {
        self.noise_mw
            + self
                .active
                .iter()
                .map(|&id| self.tx(id))
                .filter(|t| t.node != node)
                .map(|t| t.rx_mw(node))
                .sum::<f64>()
    }

    /// Whether `node` is receiving an ITS-G5 frame above the preamble
    /// detection level.
    fn preamble_busy(&self, node: usize) -> bool {
        let Some(thr) = self.cfg.csma.preamble_detect_dbm else { return false };
        self.active
            .iter()
            .map(|&id| self.tx(id))
            .any(|t| t.node != node && t.tech == Tech::ItsG5 && t.rx_dbm(node) >= thr)
    }

    /// Re-evaluates carrier sensing at every ITS-G5 station.
    fn refresh_cca(&mut self) {
        for v in 0..self.nodes.len() {
            if self.nodes[v].tech != Tech::ItsG5 {
                continue;
            }
            let busy = cca_busy(mw_to_dbm(self.power_view_mw(v)), &self.cfg.csma) || self.preamble_busy(v);
            if busy == self.nodes[v].cca_busy {
                continue;
            }
            self.nodes[v].cca_busy = busy;
            if let Some(inst) = self.inst.as_mut() {
                inst.cca[v].push((self.now, busy));
            }
            self.log(if busy { "CcaBusy" } else { "CcaIdle" }, v);
            let action = self.nodes[v].csma.on_channel(self.now, busy, &self.cfg.csma, &mut self.rng_backoff);
            self.apply(v, action);
        }
    }

    fn on_tx_end(&mut self, id: usize) {
        let (node, counted) = {
            let t = self.tx(id);
            (t.node, t.counted)
        };
        self.active.retain(|&a| a != id);
        self.nodes[node].transmitting = None;
        self.log("TxEnd", node);
        if counted || self.inst.is_some() {
            self.deliver(id);
        }
        self.refresh_cca();
        if self.nodes[node].tech == Tech::ItsG5 {
            let action = self.nodes[node].csma.on_transmission_complete(self.now, &self.cfg.csma);
            self.apply(node, action);
        }
        self.prune();
    }

    fn prune(&mut self) {
        let horizon = self.now.saturating_sub(self.max_airtime + 2 * TTI_US);
        while let Some(front) = self.recent.front() {
            if front.end < horizon && !self.active.contains(&front.id) {
                self.recent.pop_front();
            } else {
                break;
            }
        }
    }

    /// Draws the outcome at every relevant receiver of the transmitter's
    /// technology and records counted outcomes in the histogram.
    fn deliver(&mut self, id: usize) {
        let cfg = self.cfg;
        let d = self.tx(id);
        let (dnode, dtech, span, airtime, counted) = (d.node, d.tech, (d.start, d.end), d.airtime() as f64, d.counted);
        let links = Rc::clone(&d.links);
        // (interfering node, its link matrix, overlap share of our airtime)
        let overlapping: Vec<(usize, Rc<LinkMatrix>, f64)> = self
            .recent
            .iter()
            .filter(|o| o.id != id)
            .filter_map(|o| {
                let ov = overlap_us(span, (o.start, o.end));
                (ov > 0).then(|| (o.node, Rc::clone(&o.links), ov as f64 / airtime))
            })
            .collect();
        let cutoff = self.noise_dbm - cfg.relevance_margin_db;
        let curve = cfg.per_curve(dtech);
        let mut record = DeliveryRecord {
            node: dnode,
            tech: dtech,
            start_us: span.0,
            end_us: span.1,
            counted,
            receivers: 0,
            successes: 0,
            half_duplex_failures: 0,
        };
        let mut interferers = std::mem::take(&mut self.interferers);
        for rx in 0..self.nodes.len() {
            if rx == dnode || self.nodes[rx].tech != dtech {
                continue;
            }
            let k = links.idx(dnode, rx);
            let power = links.rx_dbm[k];
            let dist = links.dist[k];
            if power < cutoff || self.histogram.bin_index(dist).is_none() {
                continue;
            }
            let half_duplex = overlapping.iter().any(|(o, _, _)| *o == rx);
            let success = if half_duplex {
                record.half_duplex_failures += 1;
                false
            } else {
                interferers.clear();
                interferers.extend(overlapping.iter().map(|(o, l, frac)| (l.rx_dbm[l.idx(*o, rx)], *frac)));
                let sinr = average_sinr_db(power, &interferers, self.noise_dbm);
                decide_reception(curve.lookup(sinr), &mut self.rng_reception)
            };
            record.receivers += 1;
            record.successes += success as u64;
            if counted {
                self.histogram.record(dtech, dist, success);
            }
        }
        self.interferers = interferers;
        if let Some(inst) = self.inst.as_mut() {
            inst.deliveries.push(record);
        }
    }

    fn on_tti(&mut self, tti: u64) {
        if tti >= 1 {
            self.sense_tti(tti - 1);
        }
        let mut started = false;
        for v in 0..self.nodes.len() {
            if let Some((cam, at)) = self.nodes[v].lte_pending {
                if at == tti {
                    self.nodes[v].lte_pending = None;
                    self.nodes[v].last_tx_tti = Some(tti);
                    self.start_tx(v, cam, self.now + OCCUPIED_US);
                    started = true;
                }
            }
        }
        if started {
            self.refresh_cca();
        }
        let next = tti_start(tti + 1);
        if next < self.stop_at {
            self.queue.schedule(next, EventKind::TtiBoundary { tti: tti + 1 });
        }
    }

    /// RSSI measurement and control-information decoding for a finished TTI.
    fn sense_tti(&mut self, tti: u64) {
        let window = (tti_start(tti), tti_start(tti) + OCCUPIED_US);
        let on_air: Vec<(usize, Micros)> = self
            .recent
            .iter()
            .filter_map(|o| {
                let ov = overlap_us(window, (o.start, o.end));
                (ov > 0).then_some((o.id, ov))
            })
            .collect();
        for v in 0..self.nodes.len() {
            if self.nodes[v].tech != Tech::LteV2x {
                continue;
            }
            let blind = self.nodes[v].last_tx_tti == Some(tti);
            let rssi = if blind {
                Rssi::Blind
            } else {
                let signals = on_air
                    .iter()
                    .map(|&(o, ov)| (self.tx(o), ov))
                    .filter(|(t, _)| t.node != v)
                    .map(|(t, ov)| (t.rx_mw(v), ov));
                Rssi::Measured(ltev2x::window_average_mw(signals, OCCUPIED_US, self.noise_dbm))
            };
            let heard: Vec<(usize, f64)> = if blind {
                Vec::new()
            } else {
                on_air
                    .iter()
                    .map(|&(o, _)| self.tx(o))
                    .filter(|t| t.tech == Tech::LteV2x && t.start == window.0 && t.node != v)
                    .map(|t| (t.node, t.rx_dbm(v)))
                    .collect()
            };
            let sps = self.nodes[v].sps.as_mut().expect("LTE node has SPS state");
            sps.record_rssi(tti, rssi);
            for (from, p) in heard {
                sps.decode_reservation(from, tti, p, &self.cfg.sps);
            }
        }
    }

    fn on_mobility(&mut self) {
        let dt_s = self.mobility_us as f64 * 1e-6;
        scenario::advance(&mut self.vehicles, &self.cfg.road, dt_s);
        let moved = vec![self.cfg.road.speed_mps * dt_s; self.vehicles.len()];
        self.shadow.update(&moved, &mut self.rng_shadow);
        self.links = Rc::new(LinkMatrix::build(&self.vehicles, &self.cfg.road, &self.cfg.link, &self.shadow));
        self.log("MobilityUpdate", "global");
        let next = self.now + self.mobility_us;
        if next < self.stop_at {
            self.queue.schedule(next, EventKind::MobilityUpdate);
        }
    }
}

/// Checks that every transmission start in `tx_starts` was preceded by an
/// unbroken idle window of `aifs_us` in the station's CCA transition log.
/// Returns the offending start times.
pub fn csma_safety_violations(cca: &[(Micros, bool)], tx_starts: &[Micros], aifs_us: Micros) -> Vec<Micros> {
    tx_starts
        .iter()
        .copied()
        .filter(|&t| {
            let window_start = t.saturating_sub(aifs_us);
            if t < aifs_us {
                return true;
            }
            // state at window_start: last transition at or before it
            let idle_at_start = !cca.iter().take_while(|&&(ts, _)| ts <= window_start).last().is_some_and(|&(_, b)| b);
            let busy_inside = cca.iter().any(|&(ts, b)| b && ts > window_start && ts < t);
            !idle_at_start || busy_inside
        })
        .collect()
}
