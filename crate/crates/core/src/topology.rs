//! 5G network graph: requesters behind access points, base stations with a
//! co-located fog entity, gateways and one shared cloud origin.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Requester,
    AccessPoint,
    BaseStation,
    Gateway,
    Cloud,
    FogEntity,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Requester => "Requester",
            NodeKind::AccessPoint => "AccessPoint",
            NodeKind::BaseStation => "BaseStation",
            NodeKind::Gateway => "Gateway",
            NodeKind::Cloud => "Cloud",
            NodeKind::FogEntity => "FogEntity",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    pub idle_compute: u64,
    /// Content Store capacity in items. `usize::MAX` for the cloud origin.
    pub cs_capacity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkKind {
    Wired,
    Ran,
    D2d,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Wired => "Wired",
            LinkKind::Ran => "RAN",
            LinkKind::D2d => "D2D",
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub latency: u64,
    pub kind: LinkKind,
}

impl Link {
    pub fn other(&self, n: NodeId) -> Option<NodeId> {
        if self.a == n {
            Some(self.b)
        } else if self.b == n {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FogDomain {
    pub domain_id: String,
    pub members: BTreeSet<NodeId>,
    pub anchor: NodeId,
    pub capacity: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("invalid community spec: {0}")]
    InvalidSpec(String),
    #[error("invalid link {a}-{b}: {reason}")]
    InvalidLink { a: NodeId, b: NodeId, reason: String },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no path from {0} to {1}")]
    Unreachable(NodeId, NodeId),
    #[error("topology invariant violated: {0}")]
    Invariant(String),
}

/// Parameters for [`build_community`]. Latencies are milliseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunitySpec {
    pub communities: usize,
    pub requesters_per_community: usize,
    pub aps_per_community: usize,
    pub latency_requester_ap: u64,
    pub latency_ap_bs: u64,
    pub latency_bs_gateway: u64,
    pub latency_gateway_cloud: u64,
    pub latency_fog_access: u64,
    /// When set, requesters of one community form a full D2D mesh.
    pub latency_d2d: Option<u64>,
    pub requester_cs_capacity: usize,
    pub ap_cs_capacity: usize,
    pub bs_cs_capacity: usize,
    pub fog_cs_capacity: usize,
    pub gateway_cs_capacity: usize,
    pub requester_idle_compute: u64,
    pub ap_idle_compute: u64,
    pub bs_idle_compute: u64,
    pub fog_idle_compute: u64,
}

impl Default for CommunitySpec {
    fn default() -> Self {
        CommunitySpec {
            communities: 5,
            requesters_per_community: 2,
            aps_per_community: 1,
            latency_requester_ap: 2,
            latency_ap_bs: 5,
            latency_bs_gateway: 10,
            latency_gateway_cloud: 20,
            latency_fog_access: 1,
            latency_d2d: None,
            requester_cs_capacity: 0,
            ap_cs_capacity: 0,
            bs_cs_capacity: 0,
            fog_cs_capacity: 0,
            gateway_cs_capacity: 0,
            requester_idle_compute: 0,
            ap_idle_compute: 2,
            bs_idle_compute: 8,
            fog_idle_compute: 64,
        }
    }
}

/// Node ids of one built community, in construction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Community {
    pub requesters: Vec<NodeId>,
    pub aps: Vec<NodeId>,
    pub bs: NodeId,
    pub fog: NodeId,
    pub gateway: NodeId,
}

#[derive(Debug, Clone, Default)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    adjacency: Vec<Vec<usize>>,
    pub domains: Vec<FogDomain>,
    pub communities: Vec<Community>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(
        &mut self,
        label: impl Into<String>,
        kind: NodeKind,
        idle_compute: u64,
        cs_capacity: usize,
    ) -> NodeId {
        let id = NodeId(self.nodes.len());
        let cs_capacity = if kind == NodeKind::Cloud {
            usize::MAX
        } else {
            cs_capacity
        };
        self.nodes.push(Node {
            id,
            label: label.into(),
            kind,
            idle_compute,
            cs_capacity,
        });
        self.adjacency.push(Vec::new());
        id
    }

    pub fn add_link(
        &mut self,
        a: NodeId,
        b: NodeId,
        latency: u64,
        kind: LinkKind,
    ) -> Result<(), TopologyError> {
        let bad = |reason: &str| TopologyError::InvalidLink {
            a,
            b,
            reason: reason.to_string(),
        };
        self.node(a)?;
        self.node(b)?;
        if a == b {
            return Err(bad("self-loop"));
        }
        if latency == 0 {
            return Err(bad("latency must be positive"));
        }
        if self.link_between(a, b, kind).is_some() {
            return Err(bad("duplicate link of the same kind"));
        }
        let idx = self.links.len();
        self.links.push(Link { a, b, latency, kind });
        self.adjacency[a.0].push(idx);
        self.adjacency[b.0].push(idx);
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, TopologyError> {
        self.nodes.get(id.0).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut Node, TopologyError> {
        self.nodes.get_mut(id.0).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.label == label).map(|n| n.id)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.kind == kind).map(|n| n.id)
    }

    pub fn cloud(&self) -> Option<NodeId> {
        self.nodes_of_kind(NodeKind::Cloud).next()
    }

    /// Links incident to `n`, in insertion order.
    pub fn incident(&self, n: NodeId) -> impl Iterator<Item = &Link> + '_ {
        self.adjacency[n.0].iter().map(move |&i| &self.links[i])
    }

    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = (NodeId, &Link)> + '_ {
        self.incident(n)
            .map(move |l| (l.other(n).expect("incident link"), l))
    }

    pub fn link_between(&self, a: NodeId, b: NodeId, kind: LinkKind) -> Option<&Link> {
        self.adjacency.get(a.0)?.iter().map(|&i| &self.links[i]).find(|l| {
            l.kind == kind && ((l.a == a && l.b == b) || (l.a == b && l.b == a))
        })
    }

    /// Cheapest direct link between two nodes regardless of kind.
    pub fn direct_link(&self, a: NodeId, b: NodeId) -> Option<&Link> {
        self.incident(a)
            .filter(|l| l.other(a) == Some(b))
            .min_by_key(|l| (l.latency, l.kind))
    }

    /// Neighbours of kind `kind` reached over links of kind `link`, ascending id.
    pub fn peers_by(&self, n: NodeId, link: LinkKind, kind: NodeKind) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .neighbors(n)
            .filter(|(m, l)| l.kind == link && self.kind(*m) == kind)
            .map(|(m, _)| m)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// The base station an access point hangs off.
    pub fn base_station_of(&self, ap: NodeId) -> Option<NodeId> {
        self.neighbors(ap)
            .filter(|(m, _)| self.kind(*m) == NodeKind::BaseStation)
            .map(|(m, _)| m)
            .min()
    }

    pub fn gateway_of(&self, bs: NodeId) -> Option<NodeId> {
        self.neighbors(bs)
            .filter(|(m, _)| self.kind(*m) == NodeKind::Gateway)
            .map(|(m, _)| m)
            .min()
    }

    pub fn fog_of(&self, bs: NodeId) -> Option<NodeId> {
        self.neighbors(bs)
            .filter(|(m, _)| self.kind(*m) == NodeKind::FogEntity)
            .map(|(m, _)| m)
            .min()
    }

    /// Minimum latency over any path, all link kinds.
    pub fn path_latency(&self, src: NodeId, dst: NodeId) -> Result<u64, TopologyError> {
        self.node(src)?;
        self.node(dst)?;
        let dist = self.dijkstra(src, |_, _| true).0;
        dist[dst.0].ok_or(TopologyError::Unreachable(src, dst))
    }

    /// Forwarding route over Wired and RAN links, never transiting a requester.
    /// Returns the hop sequence including both endpoints.
    pub fn route(&self, src: NodeId, dst: NodeId) -> Result<(u64, Vec<NodeId>), TopologyError> {
        self.node(src)?;
        self.node(dst)?;
        let (dist, prev) = self.dijkstra(src, |via, l| {
            l.kind != LinkKind::D2d && (via == src || self.kind(via) != NodeKind::Requester)
        });
        let total = dist[dst.0].ok_or(TopologyError::Unreachable(src, dst))?;
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = prev[cur.0].expect("reachable node has predecessor");
            path.push(cur);
        }
        path.reverse();
        Ok((total, path))
    }

    pub fn route_latency(&self, src: NodeId, dst: NodeId) -> Result<u64, TopologyError> {
        self.route(src, dst).map(|(l, _)| l)
    }

    fn dijkstra<F>(&self, src: NodeId, usable: F) -> (Vec<Option<u64>>, Vec<Option<NodeId>>)
    where
        F: Fn(NodeId, &Link) -> bool,
    {
        let n = self.nodes.len();
        let mut dist: Vec<Option<u64>> = vec![None; n];
        let mut prev: Vec<Option<NodeId>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src.0] = Some(0);
        heap.push(Reverse((0u64, src)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if done[u.0] {
                continue;
            }
            done[u.0] = true;
            for (v, l) in self.neighbors(u) {
                if !usable(u, l) {
                    continue;
                }
                let nd = d + l.latency;
                if dist[v.0].is_none_or(|cur| nd < cur) {
                    dist[v.0] = Some(nd);
                    prev[v.0] = Some(u);
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        (dist, prev)
    }

    /// Checks the structural invariants every simulated topology must hold.
    pub fn validate(&self) -> Result<(), TopologyError> {
        for l in &self.links {
            if l.a == l.b || l.latency == 0 {
                return Err(TopologyError::Invariant(format!(
                    "bad link {}-{}",
                    l.a, l.b
                )));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            let dup = self.links[..i].iter().any(|m| {
                m.kind == l.kind
                    && ((m.a == l.a && m.b == l.b) || (m.a == l.b && m.b == l.a))
            });
            if dup {
                return Err(TopologyError::Invariant(format!(
                    "duplicate {} link {}-{}",
                    l.kind, l.a, l.b
                )));
            }
        }
        if let Some(first) = self.nodes.first() {
            let (dist, _) = self.dijkstra(first.id, |_, l| l.kind != LinkKind::D2d);
            if let Some(n) = self.nodes.iter().find(|n| dist[n.id.0].is_none()) {
                return Err(TopologyError::Invariant(format!(
                    "{} unreachable over wired/RAN links",
                    n.label
                )));
            }
        }
        for n in self.nodes_of_kind(NodeKind::Requester) {
            let attached = self.neighbors(n).any(|(m, l)| {
                l.kind == LinkKind::Ran
                    && matches!(self.kind(m), NodeKind::AccessPoint | NodeKind::BaseStation)
            });
            if !attached {
                return Err(TopologyError::Invariant(format!(
                    "requester {} has no RAN attachment",
                    self.label(n)
                )));
            }
        }
        Ok(())
    }
}

/// Builds `communities` chains Requester—AP—BS—Gateway—Cloud sharing one
/// cloud node, with a fog entity hanging off each base station.
pub fn build_community(spec: &CommunitySpec) -> Result<Topology, TopologyError> {
    let invalid = |m: &str| Err(TopologyError::InvalidSpec(m.to_string()));
    if spec.communities < 1 {
        return invalid("communities must be >= 1");
    }
    if spec.requesters_per_community < 1 {
        return invalid("requesters_per_community must be >= 1");
    }
    if spec.aps_per_community < 1 {
        return invalid("aps_per_community must be >= 1");
    }
    let latencies = [
        ("requester-ap", spec.latency_requester_ap),
        ("ap-bs", spec.latency_ap_bs),
        ("bs-gateway", spec.latency_bs_gateway),
        ("gateway-cloud", spec.latency_gateway_cloud),
        ("fog-access", spec.latency_fog_access),
    ];
    for (name, l) in latencies {
        if l == 0 {
            return Err(TopologyError::InvalidSpec(format!(
                "{name} latency must be > 0"
            )));
        }
    }
    if spec.latency_d2d == Some(0) {
        return invalid("d2d latency must be > 0");
    }

    let mut t = Topology::new();
    let cloud = t.add_node("cloud", NodeKind::Cloud, 0, usize::MAX);
    for c in 0..spec.communities {
        let gw = t.add_node(format!("gw-{c}"), NodeKind::Gateway, 0, spec.gateway_cs_capacity);
        let bs = t.add_node(
            format!("bs-{c}"),
            NodeKind::BaseStation,
            spec.bs_idle_compute,
            spec.bs_cs_capacity,
        );
        let fog = t.add_node(
            format!("fog-{c}"),
            NodeKind::FogEntity,
            spec.fog_idle_compute,
            spec.fog_cs_capacity,
        );
        t.add_link(gw, cloud, spec.latency_gateway_cloud, LinkKind::Wired)?;
        t.add_link(bs, gw, spec.latency_bs_gateway, LinkKind::Wired)?;
        t.add_link(bs, fog, spec.latency_fog_access, LinkKind::Wired)?;
        let mut aps = Vec::with_capacity(spec.aps_per_community);
        for a in 0..spec.aps_per_community {
            let ap = t.add_node(
                format!("ap-{c}-{a}"),
                NodeKind::AccessPoint,
                spec.ap_idle_compute,
                spec.ap_cs_capacity,
            );
            t.add_link(ap, bs, spec.latency_ap_bs, LinkKind::Wired)?;
            aps.push(ap);
        }
        let mut requesters = Vec::with_capacity(spec.requesters_per_community);
        for r in 0..spec.requesters_per_community {
            let req = t.add_node(
                format!("req-{c}-{r}"),
                NodeKind::Requester,
                spec.requester_idle_compute,
                spec.requester_cs_capacity,
            );
            for &ap in &aps {
                t.add_link(req, ap, spec.latency_requester_ap, LinkKind::Ran)?;
            }
            requesters.push(req);
        }
        if let Some(d2d) = spec.latency_d2d {
            for i in 0..requesters.len() {
                for j in i + 1..requesters.len() {
                    t.add_link(requesters[i], requesters[j], d2d, LinkKind::D2d)?;
                }
            }
        }
        t.communities.push(Community {
            requesters,
            aps,
            bs,
            fog,
            gateway: gw,
        });
    }
    t.validate()?;
    Ok(t)
}

/// One domain per base station. Members are the base station and its
/// directly attached APs, fog entities and requesters whose idle compute
/// meets `ticket_threshold`.
pub fn form_fog_domains(topology: &Topology, ticket_threshold: u64) -> Vec<FogDomain> {
    topology
        .nodes_of_kind(NodeKind::BaseStation)
        .map(|bs| {
            let mut candidates = vec![bs];
            candidates.extend(topology.neighbors(bs).filter_map(|(m, _)| {
                matches!(
                    topology.kind(m),
                    NodeKind::AccessPoint | NodeKind::FogEntity | NodeKind::Requester
                )
                .then_some(m)
            }));
            let members: BTreeSet<NodeId> = candidates
                .into_iter()
                .filter(|&m| topology.nodes[m.0].idle_compute >= ticket_threshold)
                .collect();
            let capacity = members
                .iter()
                .map(|m| topology.nodes[m.0].idle_compute)
                .sum();
            FogDomain {
                domain_id: format!("fog-{}", topology.label(bs)),
                members,
                anchor: bs,
                capacity,
            }
        })
        .collect()
}
