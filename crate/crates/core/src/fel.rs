//! Fog-enabled edge learning: retrieval records, permission grants, network
//! snapshots, rewards, the per-domain caching-strategy agent and learning
//! task placement.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ccn::ContentName;
use crate::sim::{RandomStream, SimTime};
use crate::topology::{FogDomain, NodeId, NodeKind, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FelError {
    #[error("unknown fog domain {0}")]
    UnknownDomain(String),
    #[error("candidate grid is empty")]
    EmptyGrid,
    #[error("candidate weights must be finite and non-negative")]
    BadCandidate,
}

/// Desensitized record of one satisfied request: node indices only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalRecord {
    pub requester: NodeId,
    pub name: ContentName,
    pub issued_at: SimTime,
    pub satisfied_at: SimTime,
    pub served_by: NodeId,
}

impl RetrievalRecord {
    pub fn latency(&self) -> u64 {
        self.satisfied_at.millis() - self.issued_at.millis()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermissionGrant {
    pub requester: NodeId,
    pub agent: String,
    pub granted_at: SimTime,
    pub active: bool,
}

/// Aggregated view of one domain over the window `(window_start, taken_at]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkSnapshot {
    pub window_start: SimTime,
    pub taken_at: SimTime,
    pub cache_contents: BTreeMap<NodeId, Vec<ContentName>>,
    pub hit_counts: BTreeMap<NodeId, u64>,
    pub request_counts: BTreeMap<ContentName, u64>,
    pub mean_latency: BTreeMap<NodeId, f64>,
    pub latency_sum: u64,
    pub satisfied: u64,
}

impl NetworkSnapshot {
    /// Folds the records of `requesters` satisfied inside the window.
    pub fn from_records<'a, I>(
        window_start: SimTime,
        taken_at: SimTime,
        records: I,
        requesters: &BTreeSet<NodeId>,
    ) -> Self
    where
        I: IntoIterator<Item = &'a RetrievalRecord>,
    {
        let mut snap = NetworkSnapshot {
            window_start,
            taken_at,
            ..Default::default()
        };
        let mut per_req: BTreeMap<NodeId, (u64, u64)> = BTreeMap::new();
        for r in records {
            if !in_window(r.satisfied_at, window_start, taken_at) || !requesters.contains(&r.requester)
            {
                continue;
            }
            *snap.request_counts.entry(r.name.clone()).or_default() += 1;
            snap.latency_sum += r.latency();
            snap.satisfied += 1;
            let e = per_req.entry(r.requester).or_default();
            e.0 += r.latency();
            e.1 += 1;
        }
        snap.mean_latency = per_req
            .into_iter()
            .map(|(n, (sum, cnt))| (n, sum as f64 / cnt as f64))
            .collect();
        snap
    }

    pub fn is_empty(&self) -> bool {
        self.satisfied == 0
    }
}

fn in_window(t: SimTime, start: SimTime, end: SimTime) -> bool {
    // The first window also admits t = 0.
    (t > start || (start == SimTime::ZERO && t == start)) && t <= end
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reward {
    pub value: f64,
    pub initial: bool,
    /// No traffic in the window; value repeated from the previous reward.
    pub carried: bool,
}

impl Reward {
    pub const INITIAL: Reward = Reward {
        value: 0.0,
        initial: true,
        carried: false,
    };
}

/// Negative mean latency over the window; an empty window carries the last
/// reward forward.
pub fn compute_reward(snapshot: &NetworkSnapshot, last: &Reward) -> Reward {
    if snapshot.is_empty() {
        return Reward {
            carried: true,
            ..*last
        };
    }
    Reward {
        value: -(snapshot.latency_sum as f64 / snapshot.satisfied as f64),
        initial: false,
        carried: false,
    }
}

/// Linear scoring weights: popularity (`alpha`) and granted-requester
/// personalization (`beta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub alpha: f64,
    pub beta: f64,
}

impl Candidate {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Candidate { alpha, beta }
    }

    pub fn default_grid() -> Vec<Candidate> {
        vec![
            Candidate::new(1.0, 0.0),
            Candidate::new(1.0, 1.0),
            Candidate::new(1.0, 4.0),
            Candidate::new(0.0, 1.0),
        ]
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.alpha, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSchedule {
    Constant(f64),
    /// epsilon = 1 / n at the n-th epoch (n >= 1).
    Anneal,
}

impl EpsilonSchedule {
    pub fn at(&self, epoch: u64) -> f64 {
        match *self {
            EpsilonSchedule::Constant(e) => e,
            EpsilonSchedule::Anneal => 1.0 / epoch.max(1) as f64,
        }
    }
}

/// Epsilon-greedy choice over a fixed arm set, maximizing mean reward.
/// Untried arms are pulled first, in index order, when exploiting.
#[derive(Debug, Clone)]
pub struct EpsilonGreedy {
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl EpsilonGreedy {
    pub fn new(arms: usize) -> Self {
        EpsilonGreedy {
            sums: vec![0.0; arms],
            counts: vec![0; arms],
        }
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.sums[arm] / self.counts[arm] as f64)
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn choose(&self, epsilon: f64, stream: &mut RandomStream) -> usize {
        if self.arms() > 1 && stream.next_uniform() < epsilon {
            return stream.next_index(self.arms());
        }
        if let Some(untried) = self.counts.iter().position(|&c| c == 0) {
            return untried;
        }
        let mut best = 0;
        for arm in 1..self.arms() {
            let (m, b) = (self.sums[arm] / self.counts[arm] as f64, self.sums[best] / self.counts[best] as f64);
            if m > b {
                best = arm;
            }
        }
        best
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.sums[arm] += reward;
        self.counts[arm] += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachingStrategy {
    pub domain_id: String,
    pub pins: BTreeMap<NodeId, BTreeSet<ContentName>>,
    pub k: usize,
    pub params: Candidate,
}

/// Top-`budget` names by `score`, keeping prior pins on ties and then
/// falling back to canonical order. Zero-score names are only kept if they
/// were already pinned.
pub fn rank_top_k(
    scores: &BTreeMap<ContentName, f64>,
    prior: &BTreeSet<ContentName>,
    budget: usize,
) -> BTreeSet<ContentName> {
    let mut pool: Vec<(&ContentName, f64)> = scores
        .iter()
        .filter(|(_, &s)| s > 0.0)
        .map(|(n, &s)| (n, s))
        .collect();
    for p in prior {
        if !scores.get(p).is_some_and(|&s| s > 0.0) {
            pool.push((p, 0.0));
        }
    }
    pool.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| prior.contains(b.0).cmp(&prior.contains(a.0)))
            .then_with(|| a.0.cmp(b.0))
    });
    pool.into_iter().take(budget).map(|(n, _)| n.clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: u64,
    pub at: SimTime,
    pub reward: Reward,
    pub candidate: Candidate,
    pub pins: BTreeSet<ContentName>,
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub k: usize,
    pub candidates: Vec<Candidate>,
    pub epsilon: EpsilonSchedule,
}

/// One learning agent bound to a fog domain.
#[derive(Debug, Clone)]
pub struct FelAgent {
    pub domain: FogDomain,
    config: AgentConfig,
    selector: EpsilonGreedy,
    stream: RandomStream,
    grants: BTreeMap<NodeId, PermissionGrant>,
    active: Option<usize>,
    last_reward: Reward,
    last_epoch_at: SimTime,
    epochs: u64,
    prior: BTreeSet<ContentName>,
    sticky: BTreeMap<ContentName, SimTime>,
    pub history: Vec<EpochLog>,
}

impl FelAgent {
    pub fn new(domain: FogDomain, config: AgentConfig, master_seed: u64) -> Result<Self, FelError> {
        if config.candidates.is_empty() {
            return Err(FelError::EmptyGrid);
        }
        if config
            .candidates
            .iter()
            .any(|c| !(c.alpha.is_finite() && c.beta.is_finite() && c.alpha >= 0.0 && c.beta >= 0.0))
        {
            return Err(FelError::BadCandidate);
        }
        let stream = RandomStream::new(master_seed, &format!("fel/{}", domain.domain_id));
        Ok(FelAgent {
            selector: EpsilonGreedy::new(config.candidates.len()),
            domain,
            config,
            stream,
            grants: BTreeMap::new(),
            active: None,
            last_reward: Reward::INITIAL,
            last_epoch_at: SimTime::ZERO,
            epochs: 0,
            prior: BTreeSet::new(),
            sticky: BTreeMap::new(),
            history: Vec::new(),
        })
    }

    pub fn domain_id(&self) -> &str {
        &self.domain.domain_id
    }

    pub fn anchor(&self) -> NodeId {
        self.domain.anchor
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn active_candidate(&self) -> Option<Candidate> {
        self.active.map(|i| self.config.candidates[i])
    }

    pub fn last_reward(&self) -> Reward {
        self.last_reward
    }

    pub fn last_epoch_at(&self) -> SimTime {
        self.last_epoch_at
    }

    pub fn epochs(&self) -> u64 {
        self.epochs
    }

    pub fn selector(&self) -> &EpsilonGreedy {
        &self.selector
    }

    pub fn current_pins(&self) -> &BTreeSet<ContentName> {
        &self.prior
    }

    pub fn is_granted(&self, requester: NodeId) -> bool {
        self.grants.get(&requester).is_some_and(|g| g.active)
    }

    pub fn granted(&self) -> BTreeSet<NodeId> {
        self.grants
            .values()
            .filter(|g| g.active)
            .map(|g| g.requester)
            .collect()
    }

    pub fn revoke(&mut self, requester: NodeId) {
        if let Some(g) = self.grants.get_mut(&requester) {
            g.active = false;
        }
    }

    /// Keeps `names` pinned at the anchor until `until` regardless of score.
    pub fn hold(&mut self, names: impl IntoIterator<Item = ContentName>, until: SimTime) {
        for n in names {
            let e = self.sticky.entry(n).or_insert(until);
            *e = (*e).max(until);
        }
    }

    pub fn held(&self) -> impl Iterator<Item = &ContentName> + '_ {
        self.sticky.keys()
    }

    /// Scores every name seen in the window: alpha x domain-wide count plus
    /// beta x count among granted requesters.
    pub fn scores(
        &self,
        params: Candidate,
        snapshot: &NetworkSnapshot,
        records: &[RetrievalRecord],
    ) -> BTreeMap<ContentName, f64> {
        let granted = self.granted();
        let mut personal: BTreeMap<&ContentName, u64> = BTreeMap::new();
        for r in records {
            if granted.contains(&r.requester)
                && in_window(r.satisfied_at, snapshot.window_start, snapshot.taken_at)
            {
                *personal.entry(&r.name).or_default() += 1;
            }
        }
        let mut names: BTreeSet<&ContentName> = snapshot.request_counts.keys().collect();
        names.extend(personal.keys().copied());
        names
            .into_iter()
            .map(|n| {
                let all = snapshot.request_counts.get(n).copied().unwrap_or(0) as f64;
                let mine = personal.get(n).copied().unwrap_or(0) as f64;
                (n.clone(), params.alpha * all + params.beta * mine)
            })
            .collect()
    }

    /// One strategy update. Credits `reward` to the candidate that was
    /// active over the window, picks the next candidate epsilon-greedily and
    /// ranks names for the anchor. `records` is the domain's record log;
    /// only granted requesters' entries feed the personalized term.
    pub fn update_strategy(
        &mut self,
        snapshot: &NetworkSnapshot,
        reward: Reward,
        records: &[RetrievalRecord],
        anchor_capacity: usize,
    ) -> CachingStrategy {
        self.epochs += 1;
        if let Some(prev) = self.active {
            self.selector.record(prev, reward.value);
        }
        let epsilon = self.config.epsilon.at(self.epochs);
        let choice = self.selector.choose(epsilon, &mut self.stream);
        self.active = Some(choice);
        let params = self.config.candidates[choice];

        let now = snapshot.taken_at;
        self.sticky.retain(|_, until| *until > now);
        let budget = self.config.k.min(anchor_capacity);
        let held: BTreeSet<ContentName> = self.sticky.keys().take(budget).cloned().collect();
        let scores = self.scores(params, snapshot, records);
        let mut pins = rank_top_k(&scores, &self.prior, budget - held.len());
        pins.extend(held);
        debug_assert!(pins.len() <= budget);

        self.prior = pins.clone();
        self.last_reward = reward;
        self.last_epoch_at = now;
        self.history.push(EpochLog {
            epoch: self.epochs,
            at: now,
            reward,
            candidate: params,
            pins: pins.clone(),
        });
        CachingStrategy {
            domain_id: self.domain.domain_id.clone(),
            pins: BTreeMap::from([(self.domain.anchor, pins)]),
            k: self.config.k,
            params,
        }
    }
}

/// Records a grant from `requester` to the agent owning `domain_id`.
pub fn grant_access(
    agents: &mut [FelAgent],
    requester: NodeId,
    domain_id: &str,
    now: SimTime,
) -> Result<PermissionGrant, FelError> {
    let agent = agents
        .iter_mut()
        .find(|a| a.domain.domain_id == domain_id)
        .ok_or_else(|| FelError::UnknownDomain(domain_id.to_string()))?;
    let grant = PermissionGrant {
        requester,
        agent: domain_id.to_string(),
        granted_at: now,
        active: true,
    };
    agent.grants.insert(requester, grant.clone());
    Ok(grant)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningTask {
    pub task_id: String,
    pub cycles: u64,
    pub data_bytes: u64,
    pub delay_sensitive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainCost {
    pub compute_price: f64,
    pub caching_cost: f64,
    pub comm_delay: f64,
}

/// Per-domain prices, aligned with the `domains` slice given to
/// [`place_tasks`].
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub per_domain: Vec<DomainCost>,
    pub comm_delay_penalty: f64,
}

impl CostModel {
    pub fn cost(&self, task: &LearningTask, domain: usize) -> f64 {
        let d = &self.per_domain[domain];
        let delay = if task.delay_sensitive {
            self.comm_delay_penalty * d.comm_delay
        } else {
            0.0
        };
        d.compute_price * task.cycles as f64 + d.caching_cost * task.data_bytes as f64 + delay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    Capacity,
    InvalidTask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMode {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub mode: PlacementMode,
    /// task id -> domain id (model parallelism across domains).
    pub assignment: BTreeMap<String, String>,
    pub rejected: BTreeMap<String, RejectReason>,
    /// task id -> data shards per member node (data parallelism inside a domain).
    pub shards: BTreeMap<String, Vec<(NodeId, u64)>>,
    pub total_cost: f64,
}

/// Combination count at or below which placement is solved exactly.
pub const EXACT_PLACEMENT_LIMIT: usize = 12;

/// Assigns learning tasks to fog domains under capacity. Small instances
/// are enumerated exhaustively (most tasks placed, then least cost); larger
/// ones go greedy by descending cycles.
pub fn place_tasks(
    tasks: &[LearningTask],
    domains: &[FogDomain],
    cost_model: &CostModel,
    topology: Option<&Topology>,
) -> Placement {
    assert_eq!(
        cost_model.per_domain.len(),
        domains.len(),
        "cost model must price every domain"
    );
    let valid: Vec<bool> = tasks.iter().map(|t| t.cycles > 0).collect();
    let (mode, choice) = if tasks.len() * domains.len() <= EXACT_PLACEMENT_LIMIT {
        (PlacementMode::Exact, exact_assign(tasks, &valid, domains, cost_model))
    } else {
        (PlacementMode::Greedy, greedy_assign(tasks, &valid, domains, cost_model))
    };

    let mut placement = Placement {
        mode,
        assignment: BTreeMap::new(),
        rejected: BTreeMap::new(),
        shards: BTreeMap::new(),
        total_cost: assignment_cost(tasks, &choice, cost_model),
    };
    for (i, task) in tasks.iter().enumerate() {
        match choice[i] {
            Some(d) => {
                placement
                    .assignment
                    .insert(task.task_id.clone(), domains[d].domain_id.clone());
                placement
                    .shards
                    .insert(task.task_id.clone(), shard(task.data_bytes, &domains[d], topology));
            }
            None => {
                let reason = if valid[i] {
                    RejectReason::Capacity
                } else {
                    RejectReason::InvalidTask
                };
                placement.rejected.insert(task.task_id.clone(), reason);
            }
        }
    }
    placement
}

/// Sum of per-task costs in task order.
pub fn assignment_cost(tasks: &[LearningTask], choice: &[Option<usize>], model: &CostModel) -> f64 {
    tasks
        .iter()
        .zip(choice)
        .filter_map(|(t, c)| c.map(|d| model.cost(t, d)))
        .sum()
}

fn exact_assign(
    tasks: &[LearningTask],
    valid: &[bool],
    domains: &[FogDomain],
    model: &CostModel,
) -> Vec<Option<usize>> {
    let options = domains.len() + 1;
    let mut digits = vec![0usize; tasks.len()];
    let mut best: Option<(usize, f64, Vec<Option<usize>>)> = None;
    loop {
        // Digit d < domains.len() places on domain d; the last digit rejects.
        let choice: Vec<Option<usize>> = digits
            .iter()
            .zip(valid)
            .map(|(&d, &ok)| (ok && d < domains.len()).then_some(d))
            .collect();
        let invalid_pick = digits.iter().zip(valid).any(|(&d, &ok)| !ok && d < domains.len());
        if !invalid_pick && fits(tasks, &choice, domains) {
            let placed = choice.iter().flatten().count();
            let cost = assignment_cost(tasks, &choice, model);
            let better = match &best {
                None => true,
                Some((bp, bc, _)) => placed > *bp || (placed == *bp && cost < *bc),
            };
            if better {
                best = Some((placed, cost, choice));
            }
        }
        // odometer
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return best.map(|b| b.2).unwrap_or_else(|| vec![None; tasks.len()]);
            }
            digits[pos] += 1;
            if digits[pos] < options {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn fits(tasks: &[LearningTask], choice: &[Option<usize>], domains: &[FogDomain]) -> bool {
    let mut used = vec![0u64; domains.len()];
    for (t, c) in tasks.iter().zip(choice) {
        if let Some(d) = c {
            used[*d] += t.cycles;
        }
    }
    used.iter().zip(domains).all(|(u, d)| *u <= d.capacity)
}

fn greedy_assign(
    tasks: &[LearningTask],
    valid: &[bool],
    domains: &[FogDomain],
    model: &CostModel,
) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by(|&a, &b| tasks[b].cycles.cmp(&tasks[a].cycles).then(a.cmp(&b)));
    let mut remaining: Vec<u64> = domains.iter().map(|d| d.capacity).collect();
    let mut choice = vec![None; tasks.len()];
    for i in order {
        if !valid[i] {
            continue;
        }
        let best = (0..domains.len())
            .filter(|&d| remaining[d] >= tasks[i].cycles)
            .min_by(|&a, &b| {
                model
                    .cost(&tasks[i], a)
                    .partial_cmp(&model.cost(&tasks[i], b))
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
        if let Some(d) = best {
            remaining[d] -= tasks[i].cycles;
            choice[i] = Some(d);
        }
    }
    choice
}

/// Equal data shards over the domain's fog entities (any member when it
/// has none, the anchor when it has no members).
fn shard(bytes: u64, domain: &FogDomain, topology: Option<&Topology>) -> Vec<(NodeId, u64)> {
    let mut workers: Vec<NodeId> = match topology {
        Some(t) => domain
            .members
            .iter()
            .copied()
            .filter(|m| t.kind(*m) == NodeKind::FogEntity)
            .collect(),
        None => Vec::new(),
    };
    if workers.is_empty() {
        workers = domain.members.iter().copied().collect();
    }
    if workers.is_empty() {
        workers.push(domain.anchor);
    }
    let n = workers.len() as u64;
    workers
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w, bytes / n + u64::from((i as u64) < bytes % n)))
        .collect()
}
