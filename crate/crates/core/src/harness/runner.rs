//! Event loop tying the network, workload, learning agents and mobility
//! together for one arm of one seed.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;

use super::config::{ArmSpec, ModelSpec, ScenarioConfig};
use super::metrics::{CounterRow, EpochRow, MetricsRow, MetricsTable};
use super::{ConfigError, HarnessError, RunError};
use crate::ccn::{
    apply_pins, on_data, on_interest, CcnNode, ContentCatalog, ContentName, Data, ForwardingAction,
    Interest,
};
use crate::fel::{
    compute_reward, grant_access, place_tasks, AgentConfig, CostModel, DomainCost, FelAgent,
    LearningTask, NetworkSnapshot, PlacementMode, RetrievalRecord,
};
use crate::mobility::{
    d2d_availability, handover, redirect_latency, HandoverAction, HandoverScheme, LinkSelector,
    MobileRequester,
};
use crate::sim::{Engine, RandomStream, SimTime};
use crate::topology::{build_community, form_fog_domains, LinkKind, NodeId, NodeKind, Topology};
use crate::workload::{RequestGenerator, RequestModel, RequesterProfile};

#[derive(Debug, Clone)]
enum Ev {
    Issue { requester: NodeId, name: ContentName },
    Interest { at: NodeId, from: NodeId, interest: Interest },
    Data { at: NodeId, from: NodeId, data: Data },
    PitExpiry { node: NodeId },
    Fill { node: NodeId, name: ContentName },
    Epoch { agent: usize, periodic: bool },
    Handover { requester: NodeId, to_ap: NodeId },
    Flush,
}

/// PIT lifecycle events, recorded when tracing is on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    PitOpen { node: NodeId, name: ContentName, at: SimTime },
    PitClose { node: NodeId, name: ContentName, at: SimTime },
}

/// Network features switched on for one run.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub scenario: String,
    pub scheme: String,
    pub run_seed: u64,
    pub pit_lifetime: u64,
    /// Interests are only issued strictly before this time.
    pub issue_until: SimTime,
    pub fel: Option<FelRuntime>,
    pub link_epsilon: Option<f64>,
    pub handover: HandoverScheme,
    pub recent_window: usize,
}

#[derive(Debug, Clone)]
pub struct FelRuntime {
    pub agent: AgentConfig,
    pub epoch_ms: u64,
    pub ticket_threshold: u64,
    pub grant_all: bool,
    pub hold_ms: u64,
    pub placement: Option<(LearningTask, CostTemplate)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTemplate {
    pub compute_price: f64,
    pub caching_cost: f64,
    pub comm_delay_penalty: f64,
}

#[derive(Debug, Clone)]
struct Pending {
    label: String,
    name: ContentName,
    issued_at: SimTime,
    link: Option<LinkKind>,
    arm: Option<LinkKind>,
    candidate: String,
}

#[derive(Debug, Clone, Copy)]
struct Redirect {
    old_ap: NodeId,
    gateway: NodeId,
}

#[derive(Debug, Default, Clone)]
struct Counters {
    issued: u64,
    delivered: u64,
    expired: u64,
    local_hits: u64,
    d2d_hits: u64,
    d2d_probe_misses: u64,
    redirects: u64,
    handovers: u64,
    lost_in_handover: u64,
    prefetch_issued: u64,
    prefetch_completed: u64,
    epochs: u64,
}

/// Outcome of one run.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub table: MetricsTable,
    pub records: Vec<RetrievalRecord>,
    pub trace: Vec<TraceEvent>,
    pub selectors: BTreeMap<NodeId, LinkSelector>,
    pub agents: Vec<FelAgent>,
    /// Per node: store capacity and the largest occupancy seen.
    pub cs_peak: BTreeMap<NodeId, (usize, usize)>,
    pub issued: u64,
    pub delivered: u64,
    pub expired: u64,
}

pub struct Simulation {
    topo: Topology,
    catalog: ContentCatalog,
    nodes: Vec<CcnNode>,
    engine: Engine<Ev>,
    settings: RunSettings,
    cloud: NodeId,
    generators: BTreeMap<NodeId, RequestGenerator>,
    labels: BTreeMap<NodeId, String>,
    mobiles: BTreeMap<NodeId, MobileRequester>,
    selectors: BTreeMap<NodeId, (LinkSelector, RandomStream)>,
    agents: Vec<FelAgent>,
    agent_of_bs: BTreeMap<NodeId, usize>,
    pending: BTreeMap<(NodeId, u64), Pending>,
    redirects: BTreeMap<NodeId, BTreeMap<ContentName, Redirect>>,
    last_served: BTreeMap<(NodeId, ContentName), NodeId>,
    fills: BTreeSet<(NodeId, ContentName)>,
    cs_peak: BTreeMap<NodeId, (usize, usize)>,
    records: Vec<RetrievalRecord>,
    rows: Vec<MetricsRow>,
    epoch_rows: Vec<EpochRow>,
    extra_counters: Vec<(String, String)>,
    counters: Counters,
    trace: Option<Vec<TraceEvent>>,
    scheduled_moves: Vec<(SimTime, NodeId, NodeId)>,
    next_id: u64,
    issuing: bool,
}

impl Simulation {
    /// Wires up CCN state over `topo`: routes toward the cloud, requesters
    /// on their current access point, the cloud holding the whole catalog.
    pub fn new(
        topo: Topology,
        catalog: ContentCatalog,
        settings: RunSettings,
    ) -> Result<Self, RunError> {
        let cloud = topo
            .cloud()
            .ok_or_else(|| RunError::Invariant("topology has no cloud node".into()))?;
        let prefixes = catalog.top_prefixes();
        let mut nodes = Vec::with_capacity(topo.len());
        for n in topo.nodes() {
            let mut node = CcnNode::new(n.id, n.cs_capacity, settings.pit_lifetime);
            if n.kind == NodeKind::Cloud {
                for item in catalog.items() {
                    node.cs.insert(&item.name, SimTime::ZERO);
                }
            } else {
                let next = match n.kind {
                    NodeKind::Requester => topo
                        .peers_by(n.id, LinkKind::Ran, NodeKind::AccessPoint)
                        .first()
                        .copied(),
                    _ => topo.route(n.id, cloud).ok().and_then(|(_, p)| p.get(1).copied()),
                };
                if let Some(hop) = next {
                    for p in &prefixes {
                        node.fib.set(p.clone(), hop);
                    }
                }
            }
            nodes.push(node);
        }
        let mut agents = Vec::new();
        let mut agent_of_bs = BTreeMap::new();
        if let Some(fel) = &settings.fel {
            for domain in form_fog_domains(&topo, fel.ticket_threshold) {
                agent_of_bs.insert(domain.anchor, agents.len());
                agents.push(FelAgent::new(domain, fel.agent.clone(), settings.run_seed)?);
            }
        }
        Ok(Simulation {
            topo,
            catalog,
            nodes,
            engine: Engine::new(),
            cloud,
            generators: BTreeMap::new(),
            labels: BTreeMap::new(),
            mobiles: BTreeMap::new(),
            selectors: BTreeMap::new(),
            agents,
            agent_of_bs,
            pending: BTreeMap::new(),
            redirects: BTreeMap::new(),
            last_served: BTreeMap::new(),
            fills: BTreeSet::new(),
            cs_peak: BTreeMap::new(),
            records: Vec::new(),
            rows: Vec::new(),
            epoch_rows: Vec::new(),
            extra_counters: Vec::new(),
            counters: Counters::default(),
            trace: None,
            scheduled_moves: Vec::new(),
            next_id: 0,
            issuing: true,
            settings,
        })
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    fn ensure_requester(&mut self, node: NodeId, home_ap: Option<NodeId>) -> Result<(), RunError> {
        if self.topo.node(node)?.kind != NodeKind::Requester {
            return Err(RunError::Invariant(format!("{node} is not a requester")));
        }
        if self.mobiles.contains_key(&node) {
            return Ok(());
        }
        let ap = match home_ap {
            Some(ap) => ap,
            None => self
                .nodes[node.0]
                .fib
                .entries()
                .first()
                .map(|e| e.next_hop)
                .ok_or_else(|| RunError::Invariant(format!("{node} has no access point")))?,
        };
        self.nodes[node.0].fib.redirect_all(ap);
        let mobile = MobileRequester::new(&self.topo, node, ap, self.settings.recent_window);
        if let Some(eps) = self.settings.link_epsilon {
            if !mobile.d2d_peers.is_empty() {
                let sel = LinkSelector::for_requester(&self.topo, node, eps);
                let stream = RandomStream::new(
                    self.settings.run_seed,
                    &format!("mobility/link/{}", self.topo.label(node)),
                );
                self.selectors.insert(node, (sel, stream));
            }
        }
        self.mobiles.insert(node, mobile);
        self.labels
            .entry(node)
            .or_insert_with(|| self.topo.label(node).to_string());
        Ok(())
    }

    /// Attaches a request generator to `profile.requester` at `home_ap`.
    pub fn add_requester(
        &mut self,
        profile: RequesterProfile,
        home_ap: NodeId,
    ) -> Result<(), RunError> {
        let node = profile.requester;
        self.labels.insert(node, profile.label.clone());
        self.ensure_requester(node, Some(home_ap))?;
        let generator = RequestGenerator::new(profile, &self.catalog, self.settings.run_seed)?;
        self.generators.insert(node, generator);
        Ok(())
    }

    /// Schedules a one-off request outside any generator.
    pub fn inject_request(
        &mut self,
        at: SimTime,
        requester: NodeId,
        name: ContentName,
    ) -> Result<(), RunError> {
        self.ensure_requester(requester, None)?;
        self.engine.schedule(at, Ev::Issue { requester, name })?;
        Ok(())
    }

    pub fn schedule_move(&mut self, at: SimTime, requester: NodeId, to_ap: NodeId) -> Result<(), RunError> {
        self.ensure_requester(requester, None)?;
        self.scheduled_moves.push((at, requester, to_ap));
        Ok(())
    }

    pub fn grant_all(&mut self) -> Result<(), RunError> {
        let reqs: Vec<(NodeId, NodeId)> = self.mobiles.iter().map(|(&n, m)| (n, m.current_ap)).collect();
        for (req, ap) in reqs {
            if let Some(i) = self.topo.base_station_of(ap).and_then(|bs| self.agent_of_bs.get(&bs)) {
                let id = self.agents[*i].domain_id().to_string();
                grant_access(&mut self.agents, req, &id, SimTime::ZERO)?;
            }
        }
        Ok(())
    }

    fn place(&mut self) {
        let Some((task, prices)) = self.settings.fel.as_ref().and_then(|f| f.placement.clone()) else {
            return;
        };
        if self.agents.is_empty() {
            return;
        }
        let domains: Vec<_> = self.agents.iter().map(|a| a.domain.clone()).collect();
        let tasks: Vec<LearningTask> = domains
            .iter()
            .map(|d| LearningTask {
                task_id: format!("task-{}", d.domain_id),
                ..task.clone()
            })
            .collect();
        let per_domain = domains
            .iter()
            .map(|d| DomainCost {
                compute_price: prices.compute_price,
                caching_cost: prices.caching_cost,
                comm_delay: self.topo.route_latency(d.anchor, self.cloud).unwrap_or(0) as f64,
            })
            .collect();
        let model = CostModel {
            per_domain,
            comm_delay_penalty: prices.comm_delay_penalty,
        };
        let p = place_tasks(&tasks, &domains, &model, Some(&self.topo));
        let mode = match p.mode {
            PlacementMode::Exact => "exact",
            PlacementMode::Greedy => "greedy",
        };
        self.extra_counters.push(("placement_mode".into(), mode.into()));
        self.extra_counters
            .push(("placed_tasks".into(), p.assignment.len().to_string()));
        self.extra_counters
            .push(("rejected_tasks".into(), p.rejected.len().to_string()));
        self.extra_counters
            .push(("placement_cost".into(), format!("{:.6}", p.total_cost)));
    }

    pub fn run(mut self) -> Result<RunOutput, RunError> {
        self.place();
        let starts: Vec<(NodeId, SimTime, ContentName)> = self
            .generators
            .iter_mut()
            .map(|(&n, g)| {
                let (at, name) = g.next_request(SimTime::ZERO);
                (n, at, name)
            })
            .collect();
        for (requester, at, name) in starts {
            if at < self.settings.issue_until {
                self.engine.schedule(at, Ev::Issue { requester, name })?;
            }
        }
        for agent in 0..self.agents.len() {
            self.engine.schedule(SimTime::ZERO, Ev::Epoch { agent, periodic: true })?;
        }
        let mut moves = std::mem::take(&mut self.scheduled_moves);
        moves.sort_by_key(|m| m.0);
        for (at, requester, to_ap) in moves {
            self.engine.schedule(at, Ev::Handover { requester, to_ap })?;
        }
        self.engine.schedule(self.settings.issue_until, Ev::Flush)?;

        while let Some(ev) = self.engine.pop_until(SimTime(u64::MAX)) {
            self.handle(ev.kind)?;
        }
        if self.counters.issued != self.counters.delivered + self.counters.expired {
            return Err(RunError::Invariant(format!(
                "issued {} != delivered {} + expired {}",
                self.counters.issued, self.counters.delivered, self.counters.expired
            )));
        }
        for n in &self.nodes {
            if !n.cs.check() {
                return Err(RunError::Invariant(format!("content store of {} broken", n.id)));
            }
        }
        Ok(self.finish())
    }

    fn finish(self) -> RunOutput {
        let s = &self.settings;
        let c = &self.counters;
        let mut counters: Vec<(String, String)> = vec![
            ("issued".into(), c.issued.to_string()),
            ("delivered".into(), c.delivered.to_string()),
            ("expired".into(), c.expired.to_string()),
            ("local_hits".into(), c.local_hits.to_string()),
            ("d2d_hits".into(), c.d2d_hits.to_string()),
            ("d2d_probe_misses".into(), c.d2d_probe_misses.to_string()),
            ("redirects".into(), c.redirects.to_string()),
            ("handovers".into(), c.handovers.to_string()),
            ("lost_in_handover".into(), c.lost_in_handover.to_string()),
            ("prefetch_issued".into(), c.prefetch_issued.to_string()),
            ("prefetch_completed".into(), c.prefetch_completed.to_string()),
            ("epochs".into(), c.epochs.to_string()),
            ("events".into(), self.engine.processed().to_string()),
        ];
        let sum = |f: fn(&CcnNode) -> u64| self.nodes.iter().map(f).sum::<u64>().to_string();
        counters.push(("cs_hits".into(), sum(|n| n.counters.cs_hits)));
        counters.push(("aggregated".into(), sum(|n| n.counters.aggregated)));
        counters.push(("forwarded".into(), sum(|n| n.counters.forwarded)));
        counters.push(("unsolicited_data".into(), sum(|n| n.counters.unsolicited_data)));
        counters.push(("rejected_inserts".into(), sum(|n| n.counters.rejected_inserts)));
        counters.push(("pit_expiries".into(), sum(|n| n.counters.pit_expiries)));
        counters.extend(self.extra_counters.iter().cloned());
        let counters = counters
            .into_iter()
            .map(|(k, v)| CounterRow {
                scenario: s.scenario.clone(),
                run_seed: s.run_seed,
                counter: format!("{}.{k}", s.scheme),
                value: v,
            })
            .collect();
        RunOutput {
            table: MetricsTable {
                rows: self.rows,
                counters,
                epochs: self.epoch_rows,
            },
            records: self.records,
            trace: self.trace.unwrap_or_default(),
            selectors: self.selectors.into_iter().map(|(n, (s, _))| (n, s)).collect(),
            agents: self.agents,
            cs_peak: self.cs_peak,
            issued: c.issued,
            delivered: c.delivered,
            expired: c.expired,
        }
    }

    fn now(&self) -> SimTime {
        self.engine.now()
    }

    fn latency(&self, a: NodeId, b: NodeId) -> Result<u64, RunError> {
        self.topo
            .direct_link(a, b)
            .map(|l| l.latency)
            .ok_or_else(|| RunError::Invariant(format!("no link between {a} and {b}")))
    }

    fn send_interest(&mut self, from: NodeId, to: NodeId, interest: Interest, extra: u64) -> Result<(), RunError> {
        let at = self.now().plus(extra + self.latency(from, to)?);
        self.engine.schedule(
            at,
            Ev::Interest {
                at: to,
                from,
                interest,
            },
        )?;
        Ok(())
    }

    fn send_data(&mut self, from: NodeId, to: NodeId, data: Data) -> Result<(), RunError> {
        let at = self.now().plus(self.latency(from, to)?);
        self.engine.schedule(at, Ev::Data { at: to, from, data })?;
        Ok(())
    }

    fn data_for(&self, name: &ContentName, producer: NodeId) -> Data {
        Data {
            name: name.clone(),
            size_bytes: self.catalog.get(name).map_or(0, |i| i.size_bytes),
            producer,
        }
    }

    fn track_cs(&mut self, node: NodeId) {
        let cs = &self.nodes[node.0].cs;
        let e = self.cs_peak.entry(node).or_insert((cs.capacity(), 0));
        e.1 = e.1.max(cs.len());
    }

    fn note(&mut self, ev: TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(ev);
        }
    }

    fn handle(&mut self, ev: Ev) -> Result<(), RunError> {
        match ev {
            Ev::Issue { requester, name } => self.on_issue(requester, name),
            Ev::Interest { at, from, interest } => self.on_interest_at(at, from, interest),
            Ev::Data { at, from, data } => self.on_data_at(at, from, data),
            Ev::PitExpiry { node } => self.expire(node),
            Ev::Fill { node, name } => {
                self.fills.remove(&(node, name.clone()));
                if self.nodes[node.0].cs.pending_pins().contains(&name) {
                    let now = self.now();
                    self.nodes[node.0].cs.insert(&name, now);
                    self.counters.prefetch_completed += 1;
                    self.track_cs(node);
                }
                Ok(())
            }
            Ev::Epoch { agent, periodic } => self.on_epoch(agent, periodic),
            Ev::Handover { requester, to_ap } => self.on_handover(requester, to_ap),
            Ev::Flush => {
                self.issuing = false;
                debug!(
                    "{}/{} seed {}: issuing stopped at {}, {} requests outstanding",
                    self.settings.scenario,
                    self.settings.scheme,
                    self.settings.run_seed,
                    self.now(),
                    self.pending.len()
                );
                Ok(())
            }
        }
    }

    fn schedule_next(&mut self, requester: NodeId, closed_loop_event: bool) -> Result<(), RunError> {
        if !self.issuing {
            return Ok(());
        }
        let now = self.now();
        let Some(g) = self.generators.get_mut(&requester) else {
            return Ok(());
        };
        if g.closed_loop() != closed_loop_event {
            return Ok(());
        }
        let (at, name) = g.next_request(now);
        if at < self.settings.issue_until {
            self.engine.schedule(at, Ev::Issue { requester, name })?;
        }
        Ok(())
    }

    fn current_candidate(&self, requester: NodeId) -> String {
        self.mobiles
            .get(&requester)
            .and_then(|m| self.topo.base_station_of(m.current_ap))
            .and_then(|bs| self.agent_of_bs.get(&bs))
            .and_then(|&i| self.agents[i].active_candidate())
            .map_or_else(String::new, |c| c.to_string())
    }

    fn on_issue(&mut self, requester: NodeId, name: ContentName) -> Result<(), RunError> {
        if !self.issuing {
            return Ok(());
        }
        self.schedule_next(requester, false)?;
        let now = self.now();
        self.next_id += 1;
        let nonce = self.next_id;
        self.counters.issued += 1;
        if let Some(m) = self.mobiles.get_mut(&requester) {
            m.note_request(&name);
        }
        let candidate = self.current_candidate(requester);
        let label = self.labels[&requester].clone();
        self.pending.insert(
            (requester, nonce),
            Pending {
                label,
                name: name.clone(),
                issued_at: now,
                link: None,
                arm: None,
                candidate,
            },
        );
        let interest = Interest {
            name: name.clone(),
            requester,
            nonce,
            issued_at: now,
        };
        self.expire(requester)?;
        match on_interest(&mut self.nodes[requester.0], &interest, requester, now)? {
            ForwardingAction::ReplyData => {
                self.counters.local_hits += 1;
                let data = self.data_for(&name, requester);
                self.deliver(requester, nonce, &data)
            }
            ForwardingAction::Aggregate => {
                if let Some(p) = self.pending.get_mut(&(requester, nonce)) {
                    p.link = Some(LinkKind::Ran);
                }
                Ok(())
            }
            ForwardingAction::Forward { next_hop } => {
                self.opened(requester, &name)?;
                self.dispatch(requester, next_hop, interest)
            }
        }
    }

    /// Sends a requester's own Interest out: through a redirect tunnel, to a
    /// D2D peer, or up the RAN.
    fn dispatch(&mut self, requester: NodeId, ap: NodeId, interest: Interest) -> Result<(), RunError> {
        let key = (requester, interest.nonce);
        if let Some(r) = self
            .redirects
            .get_mut(&requester)
            .and_then(|m| m.remove(&interest.name))
        {
            return self.tunnel(requester, ap, interest, r);
        }
        let mut arm = None;
        if let Some((sel, stream)) = self.selectors.get_mut(&requester) {
            arm = Some(sel.select(stream));
        }
        let mut link = LinkKind::Ran;
        let mut extra = 0;
        let mut target = ap;
        if arm == Some(LinkKind::D2d) {
            let peers = self.mobiles[&requester].d2d_peers.clone();
            let nodes = &self.nodes;
            match d2d_availability(&peers, &interest.name, |p, n| nodes[p.0].cs.contains(n)) {
                Some(peer) => {
                    target = peer;
                    link = LinkKind::D2d;
                    self.counters.d2d_hits += 1;
                }
                None => {
                    let probe = peers
                        .iter()
                        .filter_map(|&p| self.topo.link_between(requester, p, LinkKind::D2d))
                        .map(|l| l.latency)
                        .min()
                        .unwrap_or(0);
                    extra = 2 * probe;
                    self.counters.d2d_probe_misses += 1;
                }
            }
        }
        if let Some(p) = self.pending.get_mut(&key) {
            p.link = Some(link);
            p.arm = arm;
        }
        self.send_interest(requester, target, interest, extra)
    }

    fn tunnel(
        &mut self,
        requester: NodeId,
        ap: NodeId,
        interest: Interest,
        r: Redirect,
    ) -> Result<(), RunError> {
        let key = (requester, interest.nonce);
        let serving = self
            .last_served
            .get(&(requester, interest.name.clone()))
            .copied()
            .filter(|&s| s != requester && self.nodes[s.0].cs.contains(&interest.name))
            .unwrap_or(self.cloud);
        let one_way = redirect_latency(&self.topo, requester, ap, r.gateway, r.old_ap, serving)
            .or_else(|_| redirect_latency(&self.topo, requester, ap, r.gateway, r.old_ap, self.cloud))?;
        self.counters.redirects += 1;
        if let Some(p) = self.pending.get_mut(&key) {
            p.link = Some(LinkKind::Ran);
            p.arm = self.selectors.contains_key(&requester).then_some(LinkKind::Ran);
        }
        let data = self.data_for(&interest.name, serving);
        let at = self.now().plus(2 * one_way);
        self.engine.schedule(
            at,
            Ev::Data {
                at: requester,
                from: ap,
                data,
            },
        )?;
        Ok(())
    }

    fn opened(&mut self, node: NodeId, name: &ContentName) -> Result<(), RunError> {
        let at = self.now();
        self.note(TraceEvent::PitOpen {
            node,
            name: name.clone(),
            at,
        });
        let when = at.plus(self.settings.pit_lifetime);
        self.engine.schedule(when, Ev::PitExpiry { node })?;
        Ok(())
    }

    fn on_interest_at(&mut self, at: NodeId, from: NodeId, interest: Interest) -> Result<(), RunError> {
        let now = self.now();
        self.expire(at)?;
        match on_interest(&mut self.nodes[at.0], &interest, from, now)? {
            ForwardingAction::ReplyData => {
                let data = self.data_for(&interest.name, at);
                self.send_data(at, from, data)
            }
            ForwardingAction::Aggregate => Ok(()),
            ForwardingAction::Forward { next_hop } => {
                self.opened(at, &interest.name)?;
                self.send_interest(at, next_hop, interest, 0)
            }
        }
    }

    fn on_data_at(&mut self, at: NodeId, from: NodeId, data: Data) -> Result<(), RunError> {
        if let Some(m) = self.mobiles.get(&at) {
            if self.topo.kind(from) == NodeKind::AccessPoint && from != m.current_ap {
                // Radio contact with the old access point is gone.
                self.counters.lost_in_handover += 1;
                return Ok(());
            }
        }
        let now = self.now();
        self.expire(at)?;
        let acts = on_data(&mut self.nodes[at.0], &data, now);
        if acts.unsolicited {
            return Ok(());
        }
        self.track_cs(at);
        self.note(TraceEvent::PitClose {
            node: at,
            name: data.name.clone(),
            at: now,
        });
        for (face, nonce) in acts.forwards {
            if face == at {
                self.deliver(at, nonce, &data)?;
            } else {
                self.send_data(at, face, data.clone())?;
            }
        }
        Ok(())
    }

    fn deliver(&mut self, requester: NodeId, nonce: u64, data: &Data) -> Result<(), RunError> {
        let Some(p) = self.pending.remove(&(requester, nonce)) else {
            return Ok(());
        };
        let now = self.now();
        let latency = now.millis() - p.issued_at.millis();
        self.counters.delivered += 1;
        self.last_served
            .insert((requester, p.name.clone()), data.producer);
        if let (Some(arm), Some((sel, _))) = (p.arm, self.selectors.get_mut(&requester)) {
            sel.record(arm, latency);
        }
        self.records.push(RetrievalRecord {
            requester,
            name: p.name.clone(),
            issued_at: p.issued_at,
            satisfied_at: now,
            served_by: data.producer,
        });
        self.rows.push(MetricsRow {
            scenario: self.settings.scenario.clone(),
            run_seed: self.settings.run_seed,
            requester: p.label,
            request_id: nonce,
            content_name: p.name.to_string(),
            issue_ms: p.issued_at.millis(),
            satisfy_ms: now.millis(),
            latency_ms: latency,
            served_by: self.topo.label(data.producer).to_string(),
            cache_hit_node_kind: self.topo.kind(data.producer).as_str().to_string(),
            link_kind: p.link.map_or_else(String::new, |l| l.as_str().to_string()),
            scheme: self.settings.scheme.clone(),
            epoch_candidate: p.candidate,
        });
        self.schedule_next(requester, true)
    }

    /// Drops expired PIT entries at `node`, failing any of its own requests
    /// they carried.
    fn expire(&mut self, node: NodeId) -> Result<(), RunError> {
        let now = self.now();
        let dead = self.nodes[node.0].expire_pit(now);
        for entry in dead {
            self.note(TraceEvent::PitClose {
                node,
                name: entry.name.clone(),
                at: now,
            });
            for (face, nonce) in entry.downstreams {
                if face == node && self.pending.remove(&(node, nonce)).is_some() {
                    self.counters.expired += 1;
                    self.schedule_next(node, true)?;
                }
            }
        }
        Ok(())
    }

    fn domain_requesters(&self, anchor: NodeId) -> BTreeSet<NodeId> {
        self.mobiles
            .iter()
            .filter(|(_, m)| self.topo.base_station_of(m.current_ap) == Some(anchor))
            .map(|(&n, _)| n)
            .collect()
    }

    fn on_epoch(&mut self, i: usize, periodic: bool) -> Result<(), RunError> {
        if periodic && !self.issuing {
            return Ok(());
        }
        let now = self.now();
        let anchor = self.agents[i].anchor();
        let since = self.agents[i].last_epoch_at();
        let reqs = self.domain_requesters(anchor);
        let start = if since == SimTime::ZERO {
            0
        } else {
            self.records.partition_point(|r| r.satisfied_at <= since)
        };
        let window: Vec<RetrievalRecord> = self.records[start..]
            .iter()
            .filter(|r| reqs.contains(&r.requester))
            .cloned()
            .collect();
        let mut snap = NetworkSnapshot::from_records(since, now, window.iter(), &reqs);
        let node = &self.nodes[anchor.0];
        snap.cache_contents
            .insert(anchor, node.cs.names().cloned().collect());
        snap.hit_counts.insert(anchor, node.counters.cs_hits);
        let reward = compute_reward(&snap, &self.agents[i].last_reward());
        let capacity = self.nodes[anchor.0].cs.capacity();
        let strategy = self.agents[i].update_strategy(&snap, reward, &window, capacity);
        self.counters.epochs += 1;
        self.epoch_rows.push(EpochRow {
            scenario: self.settings.scenario.clone(),
            run_seed: self.settings.run_seed,
            scheme: self.settings.scheme.clone(),
            domain: strategy.domain_id.clone(),
            epoch: self.agents[i].epochs(),
            at_ms: now.millis(),
            reward: reward.value,
            candidate: strategy.params.to_string(),
        });
        for (node, pins) in &strategy.pins {
            self.pin(*node, pins)?;
        }
        if periodic {
            let epoch_ms = self.settings.fel.as_ref().map_or(1000, |f| f.epoch_ms);
            self.engine
                .schedule(now.plus(epoch_ms), Ev::Epoch { agent: i, periodic: true })?;
        }
        Ok(())
    }

    /// Installs `pins` at `node` and prefetches what is missing from the
    /// nearest upstream holder.
    fn pin(&mut self, node: NodeId, pins: &BTreeSet<ContentName>) -> Result<(), RunError> {
        let missing = apply_pins(&mut self.nodes[node.0], pins)?;
        for name in missing {
            if !self.fills.insert((node, name.clone())) {
                continue;
            }
            let mut dist = 0;
            let mut cur = node;
            loop {
                let next = self.nodes[cur.0]
                    .fib
                    .longest_prefix_match(&name)
                    .unwrap_or(self.cloud);
                dist += self
                    .topo
                    .direct_link(cur, next)
                    .map_or_else(|| self.topo.route_latency(cur, next), |l| Ok(l.latency))?;
                if next == self.cloud || self.nodes[next.0].cs.contains(&name) {
                    break;
                }
                cur = next;
            }
            self.counters.prefetch_issued += 1;
            let at = self.now().plus(2 * dist);
            self.engine.schedule(at, Ev::Fill { node, name })?;
        }
        Ok(())
    }

    fn on_handover(&mut self, requester: NodeId, to_ap: NodeId) -> Result<(), RunError> {
        let now = self.now();
        let fel_active = !self.agents.is_empty();
        let scheme = self.settings.handover;
        let mobile = self
            .mobiles
            .get_mut(&requester)
            .ok_or_else(|| RunError::Invariant(format!("{requester} is not a known requester")))?;
        let plan = handover(&self.topo, mobile, to_ap, scheme, fel_active, now)?;
        self.counters.handovers += 1;
        debug!(
            "handover {} {} -> {} at {now} ({scheme})",
            self.topo.label(requester),
            self.topo.label(plan.event.from_ap),
            self.topo.label(to_ap)
        );
        let mut lost: Vec<(ContentName, u64)> = Vec::new();
        for action in plan.actions {
            match action {
                HandoverAction::Reattach { requester, to_ap } => {
                    self.nodes[requester.0].fib.redirect_all(to_ap);
                }
                HandoverAction::AbandonPit { at, requester } => {
                    lost = self.nodes[at.0].forget_downstream(requester);
                    for (name, _) in &lost {
                        if !self.nodes[at.0].pit.contains_key(name) {
                            self.note(TraceEvent::PitClose {
                                node: at,
                                name: name.clone(),
                                at: now,
                            });
                        }
                    }
                }
                HandoverAction::PinUpstream { node, mut names } => {
                    names.extend(lost.iter().map(|(n, _)| n.clone()));
                    match self.agent_of_bs.get(&node) {
                        Some(&i) => {
                            let until = now.plus(self.settings.fel.as_ref().map_or(0, |f| f.hold_ms));
                            self.agents[i].hold(names, until);
                        }
                        None => {
                            let cap = self.nodes[node.0].cs.capacity();
                            let mut pins = self.nodes[node.0].cs.pin_set();
                            pins.extend(names);
                            let pins: BTreeSet<ContentName> = pins.into_iter().take(cap).collect();
                            self.pin(node, &pins)?;
                        }
                    }
                }
                HandoverAction::ArmRedirect {
                    mut names,
                    old_ap,
                    gateway,
                } => {
                    names.extend(lost.iter().map(|(n, _)| n.clone()));
                    let r = Redirect { old_ap, gateway };
                    self.redirects
                        .insert(requester, names.into_iter().map(|n| (n, r)).collect());
                }
                HandoverAction::TriggerEpoch { anchor } => {
                    if let Some(&agent) = self.agent_of_bs.get(&anchor) {
                        self.engine.schedule(now, Ev::Epoch { agent, periodic: false })?;
                    }
                }
            }
        }
        // Re-express requests stranded at the old access point.
        for (name, nonce) in lost {
            let Some(p) = self.pending.get(&(requester, nonce)) else {
                continue;
            };
            let interest = Interest {
                name,
                requester,
                nonce,
                issued_at: p.issued_at,
            };
            if let Some(r) = self
                .redirects
                .get_mut(&requester)
                .and_then(|m| m.remove(&interest.name))
            {
                self.tunnel(requester, to_ap, interest, r)?;
            } else {
                self.send_interest(requester, to_ap, interest, 0)?;
            }
        }
        Ok(())
    }
}

fn settings_for(cfg: &ScenarioConfig, arm: &ArmSpec, seed: u64, pit_lifetime: u64) -> RunSettings {
    let fel = arm.fel.then(|| FelRuntime {
        agent: AgentConfig {
            k: cfg.fel.k,
            candidates: cfg.fel.candidates.clone(),
            epsilon: cfg.fel.epsilon,
        },
        epoch_ms: cfg.fel.epoch_ms,
        ticket_threshold: cfg.fel.ticket_threshold,
        grant_all: cfg.fel.grant_all,
        hold_ms: cfg.fel.hold_ms,
        placement: Some((
            LearningTask {
                task_id: String::new(),
                cycles: cfg.placement.task_cycles,
                data_bytes: cfg.placement.task_data_bytes,
                delay_sensitive: cfg.placement.delay_sensitive,
            },
            CostTemplate {
                compute_price: cfg.placement.compute_price,
                caching_cost: cfg.placement.caching_cost,
                comm_delay_penalty: cfg.placement.comm_delay_penalty,
            },
        )),
    });
    RunSettings {
        scenario: cfg.name.clone(),
        scheme: arm.name.clone(),
        run_seed: seed,
        pit_lifetime,
        issue_until: SimTime(cfg.duration_ms),
        fel,
        link_epsilon: arm.link_selection.then_some(cfg.mobility.link_epsilon),
        handover: arm.handover,
        recent_window: cfg.mobility.recent_window,
    }
}

/// Builds the simulation for one arm without running it.
pub fn build_arm(cfg: &ScenarioConfig, arm: &ArmSpec, seed: u64) -> Result<Simulation, HarnessError> {
    cfg.validate()?;
    let mut spec = cfg.topology.clone();
    spec.bs_cs_capacity = arm.bs_cs_capacity;
    let topo = build_community(&spec)
        .map_err(|e| ConfigError::field("topology", e.to_string()))?;
    let catalog = ContentCatalog::two_class(cfg.catalog.items_per_class, cfg.catalog.size_bytes);
    let cloud = topo.cloud().expect("built topologies have a cloud");
    let pit_lifetime = match cfg.pit_lifetime_ms {
        Some(v) => v,
        None => {
            let mut worst = 0;
            for r in topo.nodes_of_kind(NodeKind::Requester) {
                worst = worst.max(topo.route_latency(r, cloud).map_err(RunError::from)?);
            }
            4 * worst
        }
    };
    let settings = settings_for(cfg, arm, seed, pit_lifetime);
    let communities = topo.communities.clone();
    let mut sim = Simulation::new(topo, catalog, settings)?;
    let mut by_label = BTreeMap::new();
    for r in &cfg.requesters {
        let c = &communities[r.community];
        let node = c.requesters[r.slot];
        let class_slice = sim.catalog.slice(r.class);
        let model = match &r.model {
            ModelSpec::Zipf { exponent, mean_ms } => RequestModel::Zipf {
                exponent: *exponent,
                mean_interarrival: *mean_ms,
            },
            ModelSpec::Periodic {
                period_ms,
                playlist,
            } => RequestModel::Periodic {
                period: *period_ms,
                playlist: playlist.iter().map(|&i| class_slice[i].clone()).collect(),
            },
        };
        let profile = RequesterProfile {
            requester: node,
            label: r.label.clone(),
            model,
            class: r.class,
        };
        sim.add_requester(profile, c.aps[r.ap])
            .map_err(|e| ConfigError::field(format!("requesters.{}", r.label), e.to_string()))?;
        by_label.insert(r.label.as_str(), (node, r.community));
    }
    for mv in &cfg.mobility.moves {
        let (node, community) = by_label[mv.requester.as_str()];
        sim.schedule_move(SimTime(mv.at_ms), node, communities[community].aps[mv.to_ap])?;
    }
    if arm.fel && cfg.fel.grant_all {
        sim.grant_all()?;
    }
    Ok(sim)
}

/// Runs one arm of `cfg` under `seed`.
pub fn run_arm(cfg: &ScenarioConfig, arm: &ArmSpec, seed: u64) -> Result<RunOutput, HarnessError> {
    Ok(build_arm(cfg, arm, seed)?.run()?)
}

/// Runs every arm of `cfg` under `seed` and merges the tables.
pub fn run_scenario_seed(cfg: &ScenarioConfig, seed: u64) -> Result<MetricsTable, HarnessError> {
    let mut table = MetricsTable::default();
    for arm in &cfg.arms {
        table.extend(run_arm(cfg, arm, seed)?.table);
    }
    Ok(table)
}

/// Runs every arm under the configured seed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsTable, HarnessError> {
    run_scenario_seed(cfg, cfg.seed)
}
