//! Scenario configuration: typed fields, INI parsing and serialization.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::ini::{self, Entry, Section};
use super::ConfigError;
use crate::ccn::ContentClass;
use crate::fel::{Candidate, EpsilonSchedule};
use crate::mobility::HandoverScheme;
use crate::topology::CommunitySpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub duration_ms: u64,
    /// PIT entry lifetime; `None` means four times the longest
    /// requester-to-cloud latency.
    pub pit_lifetime_ms: Option<u64>,
    pub topology: CommunitySpec,
    pub catalog: CatalogSpec,
    pub requesters: Vec<RequesterSpec>,
    pub fel: FelSettings,
    pub placement: PlacementSettings,
    pub mobility: MobilitySettings,
    pub arms: Vec<ArmSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogSpec {
    pub items_per_class: usize,
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequesterSpec {
    pub label: String,
    pub community: usize,
    pub slot: usize,
    /// Index of the home access point within the community.
    pub ap: usize,
    pub class: ContentClass,
    pub model: ModelSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Zipf { exponent: f64, mean_ms: u64 },
    /// `playlist` holds indices into the requester's class slice.
    Periodic { period_ms: u64, playlist: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FelSettings {
    pub k: usize,
    pub epoch_ms: u64,
    pub epsilon: EpsilonSchedule,
    pub candidates: Vec<Candidate>,
    pub ticket_threshold: u64,
    pub grant_all: bool,
    pub hold_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSettings {
    pub task_cycles: u64,
    pub task_data_bytes: u64,
    pub delay_sensitive: bool,
    pub compute_price: f64,
    pub caching_cost: f64,
    pub comm_delay_penalty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilitySettings {
    pub recent_window: usize,
    pub link_epsilon: f64,
    pub moves: Vec<MoveSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveSpec {
    pub requester: String,
    pub at_ms: u64,
    pub to_ap: usize,
}

/// One side of a comparison: the same workload run with different
/// network features switched on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmSpec {
    pub name: String,
    pub fel: bool,
    pub bs_cs_capacity: usize,
    pub link_selection: bool,
    pub handover: HandoverScheme,
}

impl Default for FelSettings {
    fn default() -> Self {
        FelSettings {
            k: 10,
            epoch_ms: 1000,
            epsilon: EpsilonSchedule::Anneal,
            candidates: Candidate::default_grid(),
            ticket_threshold: 16,
            grant_all: false,
            hold_ms: 5000,
        }
    }
}

impl Default for PlacementSettings {
    fn default() -> Self {
        PlacementSettings {
            task_cycles: 32,
            task_data_bytes: 1_000_000,
            delay_sensitive: true,
            compute_price: 0.01,
            caching_cost: 0.000_001,
            comm_delay_penalty: 0.1,
        }
    }
}

impl Default for MobilitySettings {
    fn default() -> Self {
        MobilitySettings {
            recent_window: 5,
            link_epsilon: 0.1,
            moves: Vec::new(),
        }
    }
}

fn class_str(c: ContentClass) -> &'static str {
    match c {
        ContentClass::TypeA => "A",
        ContentClass::TypeB => "B",
    }
}

fn parse_class(s: &str) -> Result<ContentClass, String> {
    match s {
        "A" | "a" | "typeA" => Ok(ContentClass::TypeA),
        "B" | "b" | "typeB" => Ok(ContentClass::TypeB),
        other => Err(format!("unknown class '{other}' (expected A or B)")),
    }
}

fn parse_candidate(s: &str) -> Result<Candidate, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("candidate '{s}' is not alpha:beta"))?;
    let alpha: f64 = a.parse().map_err(|_| format!("bad alpha in '{s}'"))?;
    let beta: f64 = b.parse().map_err(|_| format!("bad beta in '{s}'"))?;
    Ok(Candidate::new(alpha, beta))
}

fn parse_move(s: &str) -> Result<MoveSpec, String> {
    let bad = || format!("move '{s}' is not label@ms:ap");
    let (label, rest) = s.split_once('@').ok_or_else(bad)?;
    let (at, ap) = rest.split_once(':').ok_or_else(bad)?;
    Ok(MoveSpec {
        requester: label.to_string(),
        at_ms: at.parse().map_err(|_| bad())?,
        to_ap: ap.parse().map_err(|_| bad())?,
    })
}

/// Reads one section, remembering which keys were used so leftovers can
/// be reported as unknown.
struct Fields<'a> {
    section: &'a Section,
    used: BTreeSet<&'a str>,
}

impl<'a> Fields<'a> {
    fn new(section: &'a Section) -> Self {
        Fields {
            section,
            used: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.section.name)
    }

    fn raw(&mut self, key: &str) -> Option<&'a Entry> {
        let e = self.section.entries.iter().find(|e| e.key == key)?;
        self.used.insert(e.key.as_str());
        Some(e)
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|_| ConfigError::field(self.path(key), format!("cannot parse '{}'", e.value))),
        }
    }

    fn with<T>(
        &mut self,
        key: &str,
        default: T,
        f: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(e) => f(&e.value).map_err(|m| ConfigError::field(self.path(key), m)),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self
            .section
            .entries
            .iter()
            .find(|e| !self.used.contains(e.key.as_str()))
        {
            Some(e) => Err(ConfigError::field(self.path(&e.key), "unknown key")),
            None => Ok(()),
        }
    }
}

fn parse_requester(label: &str, value: &str) -> Result<RequesterSpec, String> {
    let mut community = None;
    let mut slot = None;
    let mut ap = 0usize;
    let mut class = None;
    let mut model = None;
    let mut exponent = 1.0f64;
    let mut mean_ms = None;
    let mut period_ms = None;
    let mut playlist = None;
    for tok in value.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| format!("token '{tok}' is not key=value"))?;
        let num = |v: &str| v.parse::<u64>().map_err(|_| format!("bad number '{v}' for {k}"));
        match k {
            "community" => community = Some(num(v)? as usize),
            "slot" => slot = Some(num(v)? as usize),
            "ap" => ap = num(v)? as usize,
            "class" => class = Some(parse_class(v)?),
            "model" => model = Some(v.to_string()),
            "exponent" => exponent = v.parse().map_err(|_| format!("bad exponent '{v}'"))?,
            "mean_ms" => mean_ms = Some(num(v)?),
            "period_ms" => period_ms = Some(num(v)?),
            "playlist" => {
                playlist = Some(
                    v.split(',')
                        .map(|i| i.parse::<usize>().map_err(|_| format!("bad playlist index '{i}'")))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            other => return Err(format!("unknown requester field '{other}'")),
        }
    }
    let model = match model.as_deref() {
        Some("zipf") => ModelSpec::Zipf {
            exponent,
            mean_ms: mean_ms.ok_or("zipf requester needs mean_ms")?,
        },
        Some("periodic") => ModelSpec::Periodic {
            period_ms: period_ms.ok_or("periodic requester needs period_ms")?,
            playlist: playlist.ok_or("periodic requester needs playlist")?,
        },
        Some(other) => return Err(format!("unknown model '{other}'")),
        None => return Err("missing model".into()),
    };
    Ok(RequesterSpec {
        label: label.to_string(),
        community: community.ok_or("missing community")?,
        slot: slot.ok_or("missing slot")?,
        ap,
        class: class.ok_or("missing class")?,
        model,
    })
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = ini::parse(text)?;
        let find = |name: &str| sections.iter().find(|s| s.name == name);
        let empty = |name: &str| Section {
            name: name.to_string(),
            line: 0,
            entries: Vec::new(),
        };

        let sc = find("scenario").ok_or_else(|| ConfigError::field("scenario", "missing section"))?;
        let mut f = Fields::new(sc);
        let name = f
            .raw("name")
            .map(|e| e.value.clone())
            .ok_or_else(|| ConfigError::field("scenario.name", "missing"))?;
        let seed = f.get("seed", 1u64)?;
        let duration_ms = f
            .raw("duration_ms")
            .ok_or_else(|| ConfigError::field("scenario.duration_ms", "missing"))?
            .value
            .parse()
            .map_err(|_| ConfigError::field("scenario.duration_ms", "not an integer"))?;
        let pit_lifetime_ms = f.with("pit_lifetime_ms", None, |v| {
            if v == "auto" {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| format!("cannot parse '{v}'"))
            }
        })?;
        f.finish()?;

        let d = CommunitySpec::default();
        let tsec = find("topology").cloned().unwrap_or_else(|| empty("topology"));
        let mut f = Fields::new(&tsec);
        let topology = CommunitySpec {
            communities: f.get("communities", d.communities)?,
            requesters_per_community: f.get("requesters_per_community", d.requesters_per_community)?,
            aps_per_community: f.get("aps_per_community", d.aps_per_community)?,
            latency_requester_ap: f.get("latency_requester_ap", d.latency_requester_ap)?,
            latency_ap_bs: f.get("latency_ap_bs", d.latency_ap_bs)?,
            latency_bs_gateway: f.get("latency_bs_gateway", d.latency_bs_gateway)?,
            latency_gateway_cloud: f.get("latency_gateway_cloud", d.latency_gateway_cloud)?,
            latency_fog_access: f.get("latency_fog_access", d.latency_fog_access)?,
            latency_d2d: f.with("latency_d2d", d.latency_d2d, |v| {
                if v == "none" {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| format!("cannot parse '{v}'"))
                }
            })?,
            requester_cs_capacity: f.get("requester_cs_capacity", d.requester_cs_capacity)?,
            ap_cs_capacity: f.get("ap_cs_capacity", d.ap_cs_capacity)?,
            bs_cs_capacity: f.get("bs_cs_capacity", d.bs_cs_capacity)?,
            fog_cs_capacity: f.get("fog_cs_capacity", d.fog_cs_capacity)?,
            gateway_cs_capacity: f.get("gateway_cs_capacity", d.gateway_cs_capacity)?,
            requester_idle_compute: f.get("requester_idle_compute", d.requester_idle_compute)?,
            ap_idle_compute: f.get("ap_idle_compute", d.ap_idle_compute)?,
            bs_idle_compute: f.get("bs_idle_compute", d.bs_idle_compute)?,
            fog_idle_compute: f.get("fog_idle_compute", d.fog_idle_compute)?,
        };
        f.finish()?;

        let csec = find("catalog").cloned().unwrap_or_else(|| empty("catalog"));
        let mut f = Fields::new(&csec);
        let catalog = CatalogSpec {
            items_per_class: f.get("items_per_class", 50usize)?,
            size_bytes: f.get("size_bytes", 1_000_000u64)?,
        };
        f.finish()?;

        let mut requesters = Vec::new();
        if let Some(rsec) = find("requesters") {
            for e in &rsec.entries {
                requesters.push(
                    parse_requester(&e.key, &e.value)
                        .map_err(|m| ConfigError::field(format!("requesters.{}", e.key), m))?,
                );
            }
        }

        let fd = FelSettings::default();
        let fsec = find("fel").cloned().unwrap_or_else(|| empty("fel"));
        let mut f = Fields::new(&fsec);
        let fel = FelSettings {
            k: f.get("k", fd.k)?,
            epoch_ms: f.get("epoch_ms", fd.epoch_ms)?,
            epsilon: f.with("epsilon", fd.epsilon, |v| {
                if v == "anneal" {
                    Ok(EpsilonSchedule::Anneal)
                } else {
                    v.parse()
                        .map(EpsilonSchedule::Constant)
                        .map_err(|_| format!("expected 'anneal' or a number, got '{v}'"))
                }
            })?,
            candidates: f.with("candidates", fd.candidates, |v| {
                v.split_whitespace().map(parse_candidate).collect()
            })?,
            ticket_threshold: f.get("ticket_threshold", fd.ticket_threshold)?,
            grant_all: f.get("grant_all", fd.grant_all)?,
            hold_ms: f.get("hold_ms", fd.hold_ms)?,
        };
        f.finish()?;

        let pd = PlacementSettings::default();
        let psec = find("placement").cloned().unwrap_or_else(|| empty("placement"));
        let mut f = Fields::new(&psec);
        let placement = PlacementSettings {
            task_cycles: f.get("task_cycles", pd.task_cycles)?,
            task_data_bytes: f.get("task_data_bytes", pd.task_data_bytes)?,
            delay_sensitive: f.get("delay_sensitive", pd.delay_sensitive)?,
            compute_price: f.get("compute_price", pd.compute_price)?,
            caching_cost: f.get("caching_cost", pd.caching_cost)?,
            comm_delay_penalty: f.get("comm_delay_penalty", pd.comm_delay_penalty)?,
        };
        f.finish()?;

        let md = MobilitySettings::default();
        let msec = find("mobility").cloned().unwrap_or_else(|| empty("mobility"));
        let mut f = Fields::new(&msec);
        let mobility = MobilitySettings {
            recent_window: f.get("recent_window", md.recent_window)?,
            link_epsilon: f.get("link_epsilon", md.link_epsilon)?,
            moves: f.with("moves", Vec::new(), |v| {
                v.split_whitespace().map(parse_move).collect()
            })?,
        };
        f.finish()?;

        let mut arms = Vec::new();
        for s in &sections {
            let Some(arm_name) = s.name.strip_prefix("arm.") else {
                continue;
            };
            let mut f = Fields::new(s);
            arms.push(ArmSpec {
                name: arm_name.to_string(),
                fel: f.get("fel", false)?,
                bs_cs_capacity: f.get("bs_cs_capacity", topology.bs_cs_capacity)?,
                link_selection: f.get("link_selection", false)?,
                handover: f.get("handover", HandoverScheme::BaselineRedirect)?,
            });
            f.finish()?;
        }
        for s in &sections {
            let known = [
                "scenario",
                "topology",
                "catalog",
                "requesters",
                "fel",
                "placement",
                "mobility",
            ];
            if !known.contains(&s.name.as_str()) && !s.name.starts_with("arm.") {
                return Err(ConfigError::field(s.name.clone(), "unknown section"));
            }
        }

        let cfg = ScenarioConfig {
            name,
            seed,
            duration_ms,
            pit_lifetime_ms,
            topology,
            catalog,
            requesters,
            fel,
            placement,
            mobility,
            arms,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks beyond syntax.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.topology;
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return Err(ConfigError::field("scenario.name", "must be non-empty plain text"));
        }
        if self.duration_ms == 0 {
            return Err(ConfigError::field("scenario.duration_ms", "must be > 0"));
        }
        if self.pit_lifetime_ms == Some(0) {
            return Err(ConfigError::field("scenario.pit_lifetime_ms", "must be > 0"));
        }
        for (key, v) in [
            ("communities", t.communities),
            ("requesters_per_community", t.requesters_per_community),
            ("aps_per_community", t.aps_per_community),
        ] {
            if v == 0 {
                return Err(ConfigError::field(format!("topology.{key}"), "must be >= 1"));
            }
        }
        for (key, v) in [
            ("latency_requester_ap", t.latency_requester_ap),
            ("latency_ap_bs", t.latency_ap_bs),
            ("latency_bs_gateway", t.latency_bs_gateway),
            ("latency_gateway_cloud", t.latency_gateway_cloud),
            ("latency_fog_access", t.latency_fog_access),
        ] {
            if v == 0 {
                return Err(ConfigError::field(format!("topology.{key}"), "must be > 0"));
            }
        }
        if t.latency_d2d == Some(0) {
            return Err(ConfigError::field("topology.latency_d2d", "must be > 0"));
        }
        if self.catalog.items_per_class == 0 {
            return Err(ConfigError::field("catalog.items_per_class", "must be >= 1"));
        }
        if self.requesters.is_empty() {
            return Err(ConfigError::field("requesters", "at least one requester is required"));
        }
        let mut slots = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for r in &self.requesters {
            let path = format!("requesters.{}", r.label);
            if !labels.insert(r.label.as_str()) {
                return Err(ConfigError::field(path, "duplicate label"));
            }
            if r.label.contains([',', '"', '@', ':']) || r.label.contains(char::is_whitespace) {
                return Err(ConfigError::field(path, "label may not contain , \" @ : or spaces"));
            }
            if r.community >= t.communities {
                return Err(ConfigError::field(path, "community out of range"));
            }
            if r.slot >= t.requesters_per_community {
                return Err(ConfigError::field(path, "slot out of range"));
            }
            if r.ap >= t.aps_per_community {
                return Err(ConfigError::field(path, "ap out of range"));
            }
            if !slots.insert((r.community, r.slot)) {
                return Err(ConfigError::field(path, "slot already taken"));
            }
            match &r.model {
                ModelSpec::Zipf { exponent, mean_ms } => {
                    if !(exponent.is_finite() && *exponent > 0.0) {
                        return Err(ConfigError::field(path, "exponent must be > 0"));
                    }
                    if *mean_ms == 0 {
                        return Err(ConfigError::field(path, "mean_ms must be > 0"));
                    }
                }
                ModelSpec::Periodic {
                    period_ms,
                    playlist,
                } => {
                    if *period_ms == 0 {
                        return Err(ConfigError::field(path, "period_ms must be > 0"));
                    }
                    if playlist.is_empty() {
                        return Err(ConfigError::field(path, "playlist is empty"));
                    }
                    if playlist.iter().any(|&i| i >= self.catalog.items_per_class) {
                        return Err(ConfigError::field(path, "playlist index beyond catalog"));
                    }
                }
            }
        }
        let f = &self.fel;
        if f.k == 0 {
            return Err(ConfigError::field("fel.k", "must be >= 1"));
        }
        if f.epoch_ms == 0 {
            return Err(ConfigError::field("fel.epoch_ms", "must be > 0"));
        }
        if let EpsilonSchedule::Constant(e) = f.epsilon {
            if !(0.0..=1.0).contains(&e) {
                return Err(ConfigError::field("fel.epsilon", "must lie in [0, 1]"));
            }
        }
        if f.candidates.is_empty() {
            return Err(ConfigError::field("fel.candidates", "grid is empty"));
        }
        if f.candidates
            .iter()
            .any(|c| !(c.alpha.is_finite() && c.beta.is_finite() && c.alpha >= 0.0 && c.beta >= 0.0))
        {
            return Err(ConfigError::field("fel.candidates", "weights must be finite and >= 0"));
        }
        let p = &self.placement;
        for (key, v) in [
            ("compute_price", p.compute_price),
            ("caching_cost", p.caching_cost),
            ("comm_delay_penalty", p.comm_delay_penalty),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::field(format!("placement.{key}"), "must be finite and >= 0"));
            }
        }
        let m = &self.mobility;
        if m.recent_window == 0 {
            return Err(ConfigError::field("mobility.recent_window", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&m.link_epsilon) {
            return Err(ConfigError::field("mobility.link_epsilon", "must lie in [0, 1]"));
        }
        for mv in &m.moves {
            if !labels.contains(mv.requester.as_str()) {
                return Err(ConfigError::field(
                    "mobility.moves",
                    format!("unknown requester '{}'", mv.requester),
                ));
            }
            if mv.to_ap >= t.aps_per_community {
                return Err(ConfigError::field("mobility.moves", "ap out of range"));
            }
            if mv.at_ms >= self.duration_ms {
                return Err(ConfigError::field("mobility.moves", "move after end of run"));
            }
        }
        if self.arms.is_empty() {
            return Err(ConfigError::field("arm", "at least one [arm.<name>] section is required"));
        }
        let mut names = BTreeSet::new();
        for a in &self.arms {
            if a.name.is_empty() || a.name.contains([',', '"']) || !names.insert(a.name.as_str()) {
                return Err(ConfigError::field(format!("arm.{}", a.name), "arm names must be unique plain text"));
            }
        }
        Ok(())
    }

    /// Renders the config in the format [`ScenarioConfig::parse`] reads.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let t = &self.topology;
        let _ = writeln!(s, "[scenario]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "duration_ms = {}", self.duration_ms);
        match self.pit_lifetime_ms {
            Some(v) => {
                let _ = writeln!(s, "pit_lifetime_ms = {v}");
            }
            None => {
                let _ = writeln!(s, "pit_lifetime_ms = auto");
            }
        }
        let _ = writeln!(s, "\n[topology]");
        let d2d = t.latency_d2d.map_or("none".to_string(), |v| v.to_string());
        for (k, v) in [
            ("communities", t.communities.to_string()),
            ("requesters_per_community", t.requesters_per_community.to_string()),
            ("aps_per_community", t.aps_per_community.to_string()),
            ("latency_requester_ap", t.latency_requester_ap.to_string()),
            ("latency_ap_bs", t.latency_ap_bs.to_string()),
            ("latency_bs_gateway", t.latency_bs_gateway.to_string()),
            ("latency_gateway_cloud", t.latency_gateway_cloud.to_string()),
            ("latency_fog_access", t.latency_fog_access.to_string()),
            ("latency_d2d", d2d),
            ("requester_cs_capacity", t.requester_cs_capacity.to_string()),
            ("ap_cs_capacity", t.ap_cs_capacity.to_string()),
            ("bs_cs_capacity", t.bs_cs_capacity.to_string()),
            ("fog_cs_capacity", t.fog_cs_capacity.to_string()),
            ("gateway_cs_capacity", t.gateway_cs_capacity.to_string()),
            ("requester_idle_compute", t.requester_idle_compute.to_string()),
            ("ap_idle_compute", t.ap_idle_compute.to_string()),
            ("bs_idle_compute", t.bs_idle_compute.to_string()),
            ("fog_idle_compute", t.fog_idle_compute.to_string()),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[catalog]");
        let _ = writeln!(s, "items_per_class = {}", self.catalog.items_per_class);
        let _ = writeln!(s, "size_bytes = {}", self.catalog.size_bytes);
        let _ = writeln!(s, "\n[requesters]");
        for r in &self.requesters {
            let model = match &r.model {
                ModelSpec::Zipf { exponent, mean_ms } => {
                    format!("model=zipf exponent={exponent:?} mean_ms={mean_ms}")
                }
                ModelSpec::Periodic {
                    period_ms,
                    playlist,
                } => {
                    let list: Vec<String> = playlist.iter().map(|i| i.to_string()).collect();
                    format!("model=periodic period_ms={period_ms} playlist={}", list.join(","))
                }
            };
            let _ = writeln!(
                s,
                "{} = community={} slot={} ap={} class={} {model}",
                r.label,
                r.community,
                r.slot,
                r.ap,
                class_str(r.class)
            );
        }
        let f = &self.fel;
        let _ = writeln!(s, "\n[fel]");
        let _ = writeln!(s, "k = {}", f.k);
        let _ = writeln!(s, "epoch_ms = {}", f.epoch_ms);
        match f.epsilon {
            EpsilonSchedule::Anneal => {
                let _ = writeln!(s, "epsilon = anneal");
            }
            EpsilonSchedule::Constant(e) => {
                let _ = writeln!(s, "epsilon = {e:?}");
            }
        }
        let grid: Vec<String> = f
            .candidates
            .iter()
            .map(|c| format!("{:?}:{:?}", c.alpha, c.beta))
            .collect();
        let _ = writeln!(s, "candidates = {}", grid.join(" "));
        let _ = writeln!(s, "ticket_threshold = {}", f.ticket_threshold);
        let _ = writeln!(s, "grant_all = {}", f.grant_all);
        let _ = writeln!(s, "hold_ms = {}", f.hold_ms);
        let p = &self.placement;
        let _ = writeln!(s, "\n[placement]");
        let _ = writeln!(s, "task_cycles = {}", p.task_cycles);
        let _ = writeln!(s, "task_data_bytes = {}", p.task_data_bytes);
        let _ = writeln!(s, "delay_sensitive = {}", p.delay_sensitive);
        let _ = writeln!(s, "compute_price = {:?}", p.compute_price);
        let _ = writeln!(s, "caching_cost = {:?}", p.caching_cost);
        let _ = writeln!(s, "comm_delay_penalty = {:?}", p.comm_delay_penalty);
        let m = &self.mobility;
        let _ = writeln!(s, "\n[mobility]");
        let _ = writeln!(s, "recent_window = {}", m.recent_window);
        let _ = writeln!(s, "link_epsilon = {:?}", m.link_epsilon);
        if !m.moves.is_empty() {
            let moves: Vec<String> = m
                .moves
                .iter()
                .map(|mv| format!("{}@{}:{}", mv.requester, mv.at_ms, mv.to_ap))
                .collect();
            let _ = writeln!(s, "moves = {}", moves.join(" "));
        }
        for a in &self.arms {
            let _ = writeln!(s, "\n[arm.{}]", a.name);
            let _ = writeln!(s, "fel = {}", a.fel);
            let _ = writeln!(s, "bs_cs_capacity = {}", a.bs_cs_capacity);
            let _ = writeln!(s, "link_selection = {}", a.link_selection);
            let _ = writeln!(s, "handover = {}", a.handover);
        }
        s
    }
}
