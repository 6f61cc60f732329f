//! Requester mobility: handover planning for the two schemes, D2D peer
//! lookup and the RAN/D2D link selector.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ccn::ContentName;
use crate::sim::{RandomStream, SimTime};
use crate::topology::{LinkKind, NodeId, NodeKind, Topology, TopologyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MobilityError {
    #[error("handover to the access point already in use ({0})")]
    SameAccessPoint(NodeId),
    #[error("{0} and {1} share no base station or gateway")]
    NoSharedAncestor(NodeId, NodeId),
    #[error("{0} is not an access point")]
    NotAnAccessPoint(NodeId),
    #[error("{0} has no RAN link to {1}")]
    NotReachable(NodeId, NodeId),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HandoverScheme {
    BaselineRedirect,
    FelUpstreamCache,
}

impl HandoverScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            HandoverScheme::BaselineRedirect => "BaselineRedirect",
            HandoverScheme::FelUpstreamCache => "FelUpstreamCache",
        }
    }
}

impl fmt::Display for HandoverScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HandoverScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" | "baselineredirect" => Ok(HandoverScheme::BaselineRedirect),
            "fel" | "felupstreamcache" => Ok(HandoverScheme::FelUpstreamCache),
            other => Err(format!("unknown handover scheme '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityLabel {
    Home,
    Moved,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobileRequester {
    pub node: NodeId,
    pub home_ap: NodeId,
    pub current_ap: NodeId,
    pub d2d_peers: Vec<NodeId>,
    recent: VecDeque<ContentName>,
    window: usize,
}

impl MobileRequester {
    pub fn new(topology: &Topology, node: NodeId, home_ap: NodeId, window: usize) -> Self {
        MobileRequester {
            node,
            home_ap,
            current_ap: home_ap,
            d2d_peers: topology.peers_by(node, LinkKind::D2d, NodeKind::Requester),
            recent: VecDeque::with_capacity(window + 1),
            window,
        }
    }

    pub fn label(&self) -> MobilityLabel {
        if self.current_ap == self.home_ap {
            MobilityLabel::Home
        } else {
            MobilityLabel::Moved
        }
    }

    /// Remembers `name` among the last `window` distinct requested names.
    pub fn note_request(&mut self, name: &ContentName) {
        self.recent.retain(|n| n != name);
        self.recent.push_back(name.clone());
        while self.recent.len() > self.window {
            self.recent.pop_front();
        }
    }

    pub fn recent(&self) -> impl Iterator<Item = &ContentName> + '_ {
        self.recent.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandoverEvent {
    pub requester: NodeId,
    pub from_ap: NodeId,
    pub to_ap: NodeId,
    pub at: SimTime,
    pub scheme: HandoverScheme,
}

/// What the simulation must do to carry out one handover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HandoverAction {
    /// Point the requester's routes at the new access point.
    Reattach { requester: NodeId, to_ap: NodeId },
    /// Drop the requester's downstream records from the old AP's PIT and
    /// re-express those requests.
    AbandonPit { at: NodeId, requester: NodeId },
    /// FEL: keep these names pinned at the upstream base station.
    PinUpstream { node: NodeId, names: BTreeSet<ContentName> },
    /// Baseline: route the first post-handover request for each name
    /// through the old access point.
    ArmRedirect {
        names: BTreeSet<ContentName>,
        old_ap: NodeId,
        gateway: NodeId,
    },
    /// Event-driven learning epoch on the domain anchored at `anchor`.
    TriggerEpoch { anchor: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandoverPlan {
    pub event: HandoverEvent,
    pub actions: Vec<HandoverAction>,
}

/// Validates a move of `mobile` to `to_ap` and lists its effects. Updates
/// the requester's attachment and label.
pub fn handover(
    topology: &Topology,
    mobile: &mut MobileRequester,
    to_ap: NodeId,
    scheme: HandoverScheme,
    fel_active: bool,
    now: SimTime,
) -> Result<HandoverPlan, MobilityError> {
    let from_ap = mobile.current_ap;
    if to_ap == from_ap {
        return Err(MobilityError::SameAccessPoint(to_ap));
    }
    if topology.node(to_ap)?.kind != NodeKind::AccessPoint {
        return Err(MobilityError::NotAnAccessPoint(to_ap));
    }
    if topology.link_between(mobile.node, to_ap, LinkKind::Ran).is_none() {
        return Err(MobilityError::NotReachable(mobile.node, to_ap));
    }
    let old_bs = topology.base_station_of(from_ap);
    let new_bs = topology.base_station_of(to_ap);
    let old_gw = old_bs.and_then(|b| topology.gateway_of(b));
    let new_gw = new_bs.and_then(|b| topology.gateway_of(b));
    let shares_bs = old_bs.is_some() && old_bs == new_bs;
    let shares_gw = old_gw.is_some() && old_gw == new_gw;
    if !shares_bs && !shares_gw {
        return Err(MobilityError::NoSharedAncestor(from_ap, to_ap));
    }
    let upstream = new_bs.expect("access point with a shared ancestor has a base station");
    let gateway = new_gw.ok_or(MobilityError::NoSharedAncestor(from_ap, to_ap))?;

    mobile.current_ap = to_ap;
    let names: BTreeSet<ContentName> = mobile.recent().cloned().collect();
    let mut actions = vec![
        HandoverAction::Reattach {
            requester: mobile.node,
            to_ap,
        },
        HandoverAction::AbandonPit {
            at: from_ap,
            requester: mobile.node,
        },
    ];
    match scheme {
        HandoverScheme::FelUpstreamCache => actions.push(HandoverAction::PinUpstream {
            node: upstream,
            names,
        }),
        HandoverScheme::BaselineRedirect => actions.push(HandoverAction::ArmRedirect {
            names,
            old_ap: from_ap,
            gateway,
        }),
    }
    if fel_active {
        actions.push(HandoverAction::TriggerEpoch { anchor: upstream });
    }
    Ok(HandoverPlan {
        event: HandoverEvent {
            requester: mobile.node,
            from_ap,
            to_ap,
            at: now,
            scheme,
        },
        actions,
    })
}

/// One-way latency of the redirected path
/// requester -> new AP -> gateway -> old AP -> serving node.
pub fn redirect_latency(
    topology: &Topology,
    requester: NodeId,
    new_ap: NodeId,
    gateway: NodeId,
    old_ap: NodeId,
    serving: NodeId,
) -> Result<u64, TopologyError> {
    Ok(topology.route_latency(requester, new_ap)?
        + topology.route_latency(new_ap, gateway)?
        + topology.route_latency(gateway, old_ap)?
        + topology.route_latency(old_ap, serving)?)
}

/// First D2D peer (ascending id) whose store holds `name`.
pub fn d2d_availability<F>(peers: &[NodeId], name: &ContentName, holds: F) -> Option<NodeId>
where
    F: Fn(NodeId, &ContentName) -> bool,
{
    let mut sorted = peers.to_vec();
    sorted.sort();
    sorted.into_iter().find(|&p| holds(p, name))
}

/// Epsilon-greedy choice between RAN and D2D minimizing observed latency.
#[derive(Debug, Clone)]
pub struct LinkSelector {
    pub requester: NodeId,
    epsilon: f64,
    has_ran: bool,
    has_d2d: bool,
    sums: [u64; 2],
    counts: [u64; 2],
    log: Vec<(LinkKind, u64)>,
}

fn slot(kind: LinkKind) -> usize {
    match kind {
        LinkKind::D2d => 1,
        _ => 0,
    }
}

impl LinkSelector {
    pub fn new(requester: NodeId, epsilon: f64, has_ran: bool, has_d2d: bool) -> Self {
        assert!((0.0..=1.0).contains(&epsilon), "epsilon must lie in [0, 1]");
        LinkSelector {
            requester,
            epsilon,
            has_ran,
            has_d2d,
            sums: [0; 2],
            counts: [0; 2],
            log: Vec::new(),
        }
    }

    pub fn for_requester(topology: &Topology, requester: NodeId, epsilon: f64) -> Self {
        let has = |k| topology.incident(requester).any(|l| l.kind == k);
        LinkSelector::new(requester, epsilon, has(LinkKind::Ran), has(LinkKind::D2d))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn count(&self, kind: LinkKind) -> u64 {
        self.counts[slot(kind)]
    }

    pub fn mean(&self, kind: LinkKind) -> Option<f64> {
        let i = slot(kind);
        (self.counts[i] > 0).then(|| self.sums[i] as f64 / self.counts[i] as f64)
    }

    /// Every `(arm, latency)` observation in order.
    pub fn log(&self) -> &[(LinkKind, u64)] {
        &self.log
    }

    pub fn select(&self, stream: &mut RandomStream) -> LinkKind {
        match (self.has_ran, self.has_d2d) {
            (true, false) | (false, false) => return LinkKind::Ran,
            (false, true) => return LinkKind::D2d,
            (true, true) => {}
        }
        if self.counts[0] == 0 {
            return LinkKind::Ran;
        }
        if self.counts[1] == 0 {
            return LinkKind::D2d;
        }
        if stream.next_uniform() < self.epsilon {
            return if stream.next_index(2) == 0 {
                LinkKind::Ran
            } else {
                LinkKind::D2d
            };
        }
        // Compare means by cross-multiplication to stay in integers.
        let ran = u128::from(self.sums[0]) * u128::from(self.counts[1]);
        let d2d = u128::from(self.sums[1]) * u128::from(self.counts[0]);
        if d2d < ran {
            LinkKind::D2d
        } else {
            LinkKind::Ran
        }
    }

    pub fn record(&mut self, kind: LinkKind, latency: u64) {
        let i = slot(kind);
        self.sums[i] += latency;
        self.counts[i] += 1;
        self.log.push((kind, latency));
    }
}

/// Free-function form of [`LinkSelector::select`].
pub fn select_link(selector: &LinkSelector, stream: &mut RandomStream) -> LinkKind {
    selector.select(stream)
}
