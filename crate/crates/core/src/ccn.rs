//! Content-centric forwarding state kept on every node.
//!
//! The node-level operations (`on_interest`, `on_data`, `cs_insert`,
//! `apply_pins`) are pure state transitions; moving packets between nodes
//! is the simulation's job.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sim::SimTime;
use crate::topology::NodeId;

pub const MAX_NAME_BYTES: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CcnError {
    #[error("invalid content name {0:?}: {1}")]
    InvalidName(String, &'static str),
    #[error("duplicate catalog name {0}")]
    DuplicateName(ContentName),
    #[error("no catalog name matches keywords {0:?}")]
    NoMatch(Vec<String>),
    #[error("keyword list is empty")]
    EmptyKeywords,
    #[error("no FIB route for {0}")]
    NoRoute(ContentName),
    #[error("{requested} pins exceed content store capacity {capacity}")]
    PinOverflow { requested: usize, capacity: usize },
}

/// Hierarchical name, stored in canonical `/a/b/c` form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ContentName(String);

impl ContentName {
    pub fn from_components<I, S>(parts: I) -> Result<Self, CcnError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut s = String::new();
        for p in parts {
            let p = p.as_ref();
            if p.is_empty() {
                return Err(CcnError::InvalidName(s, "empty component"));
            }
            if p.contains('/') {
                return Err(CcnError::InvalidName(p.to_string(), "'/' inside component"));
            }
            s.push('/');
            s.push_str(p);
        }
        if s.is_empty() {
            return Err(CcnError::InvalidName(s, "no components"));
        }
        if s.len() > MAX_NAME_BYTES {
            return Err(CcnError::InvalidName(s, "longer than 1024 bytes"));
        }
        Ok(ContentName(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn components(&self) -> impl Iterator<Item = &str> + '_ {
        self.0[1..].split('/')
    }

    pub fn depth(&self) -> usize {
        self.components().count()
    }

    /// Component-wise prefix test.
    pub fn has_prefix(&self, prefix: &ContentName) -> bool {
        let mut mine = self.components();
        prefix.components().all(|p| mine.next() == Some(p))
    }
}

impl FromStr for ContentName {
    type Err = CcnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s
            .strip_prefix('/')
            .ok_or_else(|| CcnError::InvalidName(s.to_string(), "must start with '/'"))?;
        ContentName::from_components(rest.split('/'))
    }
}

impl fmt::Display for ContentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ContentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentName({})", self.0)
    }
}

// Canonical-form byte order.
impl Ord for ContentName {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl PartialOrd for ContentName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContentClass {
    TypeA,
    TypeB,
}

impl ContentClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ContentClass::TypeA => "TypeA",
            ContentClass::TypeB => "TypeB",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentItem {
    pub name: ContentName,
    pub size_bytes: u64,
    pub class: ContentClass,
}

#[derive(Debug, Clone, Default)]
pub struct ContentCatalog {
    items: Vec<ContentItem>,
    index: BTreeMap<ContentName, usize>,
}

impl ContentCatalog {
    pub fn new(items: Vec<ContentItem>) -> Result<Self, CcnError> {
        let mut index = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            if index.insert(it.name.clone(), i).is_some() {
                return Err(CcnError::DuplicateName(it.name.clone()));
            }
        }
        Ok(ContentCatalog { items, index })
    }

    /// `per_class` items under `/typeA/item000..` and `/typeB/item000..`,
    /// named so that canonical order equals popularity rank.
    pub fn two_class(per_class: usize, size_bytes: u64) -> Self {
        let mut items = Vec::with_capacity(2 * per_class);
        for (class, prefix) in [(ContentClass::TypeA, "typeA"), (ContentClass::TypeB, "typeB")] {
            for i in 0..per_class {
                items.push(ContentItem {
                    name: ContentName::from_components([prefix.to_string(), format!("item{i:03}")])
                        .expect("generated names are valid"),
                    size_bytes,
                    class,
                });
            }
        }
        ContentCatalog::new(items).expect("generated names are unique")
    }

    pub fn items(&self) -> &[ContentItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, name: &ContentName) -> Option<&ContentItem> {
        self.index.get(name).map(|&i| &self.items[i])
    }

    pub fn contains(&self, name: &ContentName) -> bool {
        self.index.contains_key(name)
    }

    /// Names of one class in catalog order; Zipf rank i is element i-1.
    pub fn slice(&self, class: ContentClass) -> Vec<ContentName> {
        self.items
            .iter()
            .filter(|it| it.class == class)
            .map(|it| it.name.clone())
            .collect()
    }

    /// Distinct first components, used as FIB prefixes.
    pub fn top_prefixes(&self) -> Vec<ContentName> {
        let set: BTreeSet<ContentName> = self
            .items
            .iter()
            .map(|it| {
                ContentName::from_components(it.name.components().take(1))
                    .expect("non-empty name")
            })
            .collect();
        set.into_iter().collect()
    }
}

/// Resolves user keywords to the catalog name containing all of them as
/// whole components (case-insensitive). Ambiguity goes to the shallowest
/// name, then the canonically smallest.
pub fn translate<S: AsRef<str>>(
    keywords: &[S],
    catalog: &ContentCatalog,
) -> Result<ContentName, CcnError> {
    if keywords.is_empty() {
        return Err(CcnError::EmptyKeywords);
    }
    let wanted: Vec<String> = keywords.iter().map(|k| k.as_ref().to_lowercase()).collect();
    catalog
        .items
        .iter()
        .map(|it| &it.name)
        .filter(|name| {
            let parts: Vec<String> = name.components().map(str::to_lowercase).collect();
            wanted.iter().all(|w| parts.contains(w))
        })
        .min_by(|a, b| a.depth().cmp(&b.depth()).then_with(|| a.cmp(b)))
        .cloned()
        .ok_or_else(|| CcnError::NoMatch(wanted))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interest {
    pub name: ContentName,
    pub requester: NodeId,
    pub nonce: u64,
    pub issued_at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Data {
    pub name: ContentName,
    pub size_bytes: u64,
    pub producer: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CsEntry {
    last_access: SimTime,
    touch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvictionOutcome {
    Refreshed,
    Inserted,
    Evicted(ContentName),
    Rejected,
}

/// Bounded item cache: LRU over unpinned entries, pins never evicted.
/// Pins whose content has not arrived yet wait in `pending_pins`.
#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    entries: BTreeMap<ContentName, CsEntry>,
    pinned: BTreeSet<ContentName>,
    pending_pins: BTreeSet<ContentName>,
    touches: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        ContentStore {
            capacity,
            entries: BTreeMap::new(),
            pinned: BTreeSet::new(),
            pending_pins: BTreeSet::new(),
            touches: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &ContentName) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &ContentName> + '_ {
        self.entries.keys()
    }

    pub fn pinned(&self) -> &BTreeSet<ContentName> {
        &self.pinned
    }

    pub fn pending_pins(&self) -> &BTreeSet<ContentName> {
        &self.pending_pins
    }

    /// Every pin, present or awaiting prefetch.
    pub fn pin_set(&self) -> BTreeSet<ContentName> {
        self.pinned.union(&self.pending_pins).cloned().collect()
    }

    fn touch(&mut self) -> u64 {
        self.touches += 1;
        self.touches
    }

    /// Hit test; refreshes recency on hit.
    pub fn lookup(&mut self, name: &ContentName, now: SimTime) -> bool {
        let touch = self.touch();
        match self.entries.get_mut(name) {
            Some(e) => {
                e.last_access = now;
                e.touch = touch;
                true
            }
            None => false,
        }
    }

    pub fn insert(&mut self, name: &ContentName, now: SimTime) -> EvictionOutcome {
        let touch = self.touch();
        let entry = CsEntry {
            last_access: now,
            touch,
        };
        if let Some(e) = self.entries.get_mut(name) {
            *e = entry;
            return EvictionOutcome::Refreshed;
        }
        let becomes_pinned = self.pending_pins.contains(name);
        let outcome = if self.entries.len() < self.capacity {
            EvictionOutcome::Inserted
        } else {
            let victim = self
                .entries
                .iter()
                .filter(|(n, _)| !self.pinned.contains(*n))
                .min_by_key(|(_, e)| (e.last_access, e.touch))
                .map(|(n, _)| n.clone());
            match victim {
                Some(v) => {
                    self.entries.remove(&v);
                    EvictionOutcome::Evicted(v)
                }
                None => return EvictionOutcome::Rejected,
            }
        };
        self.entries.insert(name.clone(), entry);
        if becomes_pinned {
            self.pending_pins.remove(name);
            self.pinned.insert(name.clone());
        }
        outcome
    }

    /// Replaces the pin set. Returns the pins whose content is absent and
    /// must be fetched.
    pub fn set_pins(&mut self, names: &BTreeSet<ContentName>) -> Result<Vec<ContentName>, CcnError> {
        if names.len() > self.capacity {
            return Err(CcnError::PinOverflow {
                requested: names.len(),
                capacity: self.capacity,
            });
        }
        self.pinned.clear();
        self.pending_pins.clear();
        let mut missing = Vec::new();
        for n in names {
            if self.entries.contains_key(n) {
                self.pinned.insert(n.clone());
            } else {
                self.pending_pins.insert(n.clone());
                missing.push(n.clone());
            }
        }
        Ok(missing)
    }

    /// Structural invariants; used by property tests and debug assertions.
    pub fn check(&self) -> bool {
        self.entries.len() <= self.capacity
            && self.pinned.iter().all(|p| self.entries.contains_key(p))
            && self.pending_pins.is_disjoint(&self.pinned)
    }
}

/// Offers `name` to the store. Thin wrapper kept for symmetry with the
/// other node operations.
pub fn cs_insert(store: &mut ContentStore, name: &ContentName, now: SimTime) -> EvictionOutcome {
    store.insert(name, now)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitEntry {
    pub name: ContentName,
    pub downstreams: Vec<(NodeId, u64)>,
    pub created_at: SimTime,
    pub lifetime: u64,
}

impl PitEntry {
    pub fn expires_at(&self) -> SimTime {
        self.created_at.plus(self.lifetime)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: ContentName,
    pub next_hop: NodeId,
}

#[derive(Debug, Clone, Default)]
pub struct Fib {
    entries: Vec<FibEntry>,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces the route for `prefix`.
    pub fn set(&mut self, prefix: ContentName, next_hop: NodeId) {
        match self.entries.iter_mut().find(|e| e.prefix == prefix) {
            Some(e) => e.next_hop = next_hop,
            None => self.entries.push(FibEntry { prefix, next_hop }),
        }
    }

    pub fn entries(&self) -> &[FibEntry] {
        &self.entries
    }

    /// Points every route at `next_hop`.
    pub fn redirect_all(&mut self, next_hop: NodeId) {
        for e in &mut self.entries {
            e.next_hop = next_hop;
        }
    }

    pub fn longest_prefix_match(&self, name: &ContentName) -> Option<NodeId> {
        self.entries
            .iter()
            .filter(|e| name.has_prefix(&e.prefix))
            .max_by_key(|e| e.prefix.depth())
            .map(|e| e.next_hop)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub cs_hits: u64,
    pub cs_misses: u64,
    pub aggregated: u64,
    pub forwarded: u64,
    pub unsolicited_data: u64,
    pub rejected_inserts: u64,
    pub pit_expiries: u64,
}

/// Per-node forwarding and caching state.
#[derive(Debug, Clone)]
pub struct CcnNode {
    pub id: NodeId,
    pub cs: ContentStore,
    pub pit: BTreeMap<ContentName, PitEntry>,
    pub fib: Fib,
    pub pit_lifetime: u64,
    pub counters: NodeCounters,
}

impl CcnNode {
    pub fn new(id: NodeId, cs_capacity: usize, pit_lifetime: u64) -> Self {
        CcnNode {
            id,
            cs: ContentStore::new(cs_capacity),
            pit: BTreeMap::new(),
            fib: Fib::new(),
            pit_lifetime,
            counters: NodeCounters::default(),
        }
    }

    /// Drops entries whose lifetime ended at or before `now`.
    pub fn expire_pit(&mut self, now: SimTime) -> Vec<PitEntry> {
        let dead: Vec<ContentName> = self
            .pit
            .values()
            .filter(|e| e.expires_at() <= now)
            .map(|e| e.name.clone())
            .collect();
        let out: Vec<PitEntry> = dead.iter().filter_map(|n| self.pit.remove(n)).collect();
        self.counters.pit_expiries += out.len() as u64;
        out
    }

    /// Removes every downstream record pointing at `face`; returns the
    /// names that lost a record. Entries left without downstreams go away.
    pub fn forget_downstream(&mut self, face: NodeId) -> Vec<(ContentName, u64)> {
        let mut lost = Vec::new();
        self.pit.retain(|name, e| {
            e.downstreams.retain(|&(d, nonce)| {
                if d == face {
                    lost.push((name.clone(), nonce));
                    false
                } else {
                    true
                }
            });
            !e.downstreams.is_empty()
        });
        lost
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForwardingAction {
    ReplyData,
    Aggregate,
    Forward { next_hop: NodeId },
}

/// Interest processing. `from` is the downstream face the Interest came in
/// on; a node originating its own Interest passes its own id.
pub fn on_interest(
    node: &mut CcnNode,
    interest: &Interest,
    from: NodeId,
    now: SimTime,
) -> Result<ForwardingAction, CcnError> {
    if node.cs.lookup(&interest.name, now) {
        node.counters.cs_hits += 1;
        return Ok(ForwardingAction::ReplyData);
    }
    node.counters.cs_misses += 1;
    if let Some(entry) = node.pit.get_mut(&interest.name) {
        if now < entry.expires_at() {
            entry.downstreams.push((from, interest.nonce));
            node.counters.aggregated += 1;
            return Ok(ForwardingAction::Aggregate);
        }
    }
    let next_hop = node
        .fib
        .longest_prefix_match(&interest.name)
        .ok_or_else(|| CcnError::NoRoute(interest.name.clone()))?;
    node.pit.insert(
        interest.name.clone(),
        PitEntry {
            name: interest.name.clone(),
            downstreams: vec![(from, interest.nonce)],
            created_at: now,
            lifetime: node.pit_lifetime,
        },
    );
    node.counters.forwarded += 1;
    Ok(ForwardingAction::Forward { next_hop })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataActions {
    /// Downstream `(face, nonce)` records to send the Data to. A face equal
    /// to the node's own id means local delivery.
    pub forwards: Vec<(NodeId, u64)>,
    pub cached: Option<EvictionOutcome>,
    pub unsolicited: bool,
}

pub fn on_data(node: &mut CcnNode, data: &Data, now: SimTime) -> DataActions {
    match node.pit.remove(&data.name) {
        Some(entry) => {
            // Nodes without a store just relay.
            let cached = (node.cs.capacity() > 0).then(|| node.cs.insert(&data.name, now));
            if cached == Some(EvictionOutcome::Rejected) {
                node.counters.rejected_inserts += 1;
            }
            DataActions {
                forwards: entry.downstreams,
                cached,
                unsolicited: false,
            }
        }
        None => {
            node.counters.unsolicited_data += 1;
            DataActions {
                forwards: Vec::new(),
                cached: None,
                unsolicited: true,
            }
        }
    }
}

/// Installs a strategy's pin set on the node. Returns the names to prefetch.
pub fn apply_pins(
    node: &mut CcnNode,
    names: &BTreeSet<ContentName>,
) -> Result<Vec<ContentName>, CcnError> {
    node.cs.set_pins(names)
}
