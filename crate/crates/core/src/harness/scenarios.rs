//! Built-in configurations for the three reference experiments.

use super::config::{
    ArmSpec, CatalogSpec, FelSettings, MobilitySettings, ModelSpec, MoveSpec, PlacementSettings,
    RequesterSpec, ScenarioConfig,
};
use crate::ccn::ContentClass;
use crate::mobility::HandoverScheme;
use crate::topology::CommunitySpec;

const DURATION_MS: u64 = 60_000;

fn zipf() -> ModelSpec {
    ModelSpec::Zipf {
        exponent: 1.0,
        mean_ms: 50,
    }
}

fn periodic(offset: usize) -> ModelSpec {
    ModelSpec::Periodic {
        period_ms: 100,
        playlist: (offset..offset + 8).collect(),
    }
}

fn arm(name: &str, fel: bool, bs: usize, link: bool, handover: HandoverScheme) -> ArmSpec {
    ArmSpec {
        name: name.to_string(),
        fel,
        bs_cs_capacity: bs,
        link_selection: link,
        handover,
    }
}

fn base(name: &str, seed: u64, topology: CommunitySpec) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        seed,
        duration_ms: DURATION_MS,
        pit_lifetime_ms: None,
        topology,
        catalog: CatalogSpec {
            items_per_class: 50,
            size_bytes: 1_000_000,
        },
        requesters: Vec::new(),
        fel: FelSettings::default(),
        placement: PlacementSettings::default(),
        mobility: MobilitySettings::default(),
        arms: Vec::new(),
    }
}

/// Five communities, one Zipf and one periodic requester each; cloud-only
/// delivery against FEL pinning at the base station.
pub fn scenario_a(seed: u64) -> ScenarioConfig {
    let mut cfg = base("A", seed, CommunitySpec::default());
    for c in 0..cfg.topology.communities {
        cfg.requesters.push(RequesterSpec {
            label: format!("c{c}-zipf"),
            community: c,
            slot: 0,
            ap: 0,
            class: ContentClass::TypeA,
            model: zipf(),
        });
        cfg.requesters.push(RequesterSpec {
            label: format!("c{c}-period"),
            community: c,
            slot: 1,
            ap: 0,
            class: ContentClass::TypeB,
            model: periodic(0),
        });
    }
    let k = cfg.fel.k;
    cfg.arms = vec![
        arm("cloud", false, 0, false, HandoverScheme::BaselineRedirect),
        arm("fel", true, k, false, HandoverScheme::FelUpstreamCache),
    ];
    cfg
}

/// Every base station joins the fog; one TypeA and one TypeB requester per
/// community, all granting personalization.
pub fn scenario_b(seed: u64) -> ScenarioConfig {
    let mut cfg = base("B", seed, CommunitySpec::default());
    cfg.fel.ticket_threshold = 0;
    cfg.fel.grant_all = true;
    for c in 0..cfg.topology.communities {
        let (a_model, b_model, a_kind, b_kind) = if c % 2 == 0 {
            (zipf(), periodic(0), "zipf", "period")
        } else {
            (periodic(0), zipf(), "period", "zipf")
        };
        cfg.requesters.push(RequesterSpec {
            label: format!("c{c}-{a_kind}-a"),
            community: c,
            slot: 0,
            ap: 0,
            class: ContentClass::TypeA,
            model: a_model,
        });
        cfg.requesters.push(RequesterSpec {
            label: format!("c{c}-{b_kind}-b"),
            community: c,
            slot: 1,
            ap: 0,
            class: ContentClass::TypeB,
            model: b_model,
        });
    }
    let k = cfg.fel.k;
    cfg.arms = vec![
        arm("nofel", false, 0, false, HandoverScheme::BaselineRedirect),
        arm("fel", true, k, false, HandoverScheme::FelUpstreamCache),
    ];
    cfg
}

/// Twenty mobile requesters with RAN and D2D links, each moving to the
/// neighbouring access point and back.
pub fn scenario_c(seed: u64) -> ScenarioConfig {
    let topology = CommunitySpec {
        requesters_per_community: 4,
        aps_per_community: 2,
        latency_d2d: Some(1),
        requester_cs_capacity: 4,
        ..CommunitySpec::default()
    };
    let mut cfg = base("C", seed, topology);
    let per = cfg.topology.requesters_per_community;
    for c in 0..cfg.topology.communities {
        let class = if c % 2 == 0 {
            ContentClass::TypeA
        } else {
            ContentClass::TypeB
        };
        for s in 0..per {
            let (model, kind) = if s % 2 == 0 {
                (zipf(), "zipf")
            } else {
                (periodic(2 * s), "period")
            };
            let label = format!("c{c}-r{s}-{kind}");
            let home = s % 2;
            let i = (c * per + s) as u64;
            cfg.mobility.moves.push(MoveSpec {
                requester: label.clone(),
                at_ms: DURATION_MS / 3 + i * 250,
                to_ap: 1 - home,
            });
            cfg.mobility.moves.push(MoveSpec {
                requester: label.clone(),
                at_ms: 2 * DURATION_MS / 3 + i * 250,
                to_ap: home,
            });
            cfg.requesters.push(RequesterSpec {
                label,
                community: c,
                slot: s,
                ap: home,
                class,
                model,
            });
        }
    }
    let k = cfg.fel.k;
    cfg.arms = vec![
        arm("baseline", false, k, false, HandoverScheme::BaselineRedirect),
        arm("fel", true, k, true, HandoverScheme::FelUpstreamCache),
    ];
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_community, form_fog_domains, LinkKind, NodeKind};

    #[test]
    fn scenario_a_shape() {
        let cfg = scenario_a(1);
        assert_eq!(cfg.topology.communities, 5);
        assert_eq!(build_community(&cfg.topology).unwrap().len(), 31);
        assert_eq!(cfg.requesters.len(), 10);
    }

    #[test]
    fn scenario_b_every_bs_in_fog() {
        let cfg = scenario_b(1);
        let t = build_community(&cfg.topology).unwrap();
        let domains = form_fog_domains(&t, cfg.fel.ticket_threshold);
        for bs in t.nodes_of_kind(NodeKind::BaseStation) {
            assert!(domains.iter().any(|d| d.members.contains(&bs)));
        }
    }

    #[test]
    fn scenario_c_requesters_have_two_link_kinds() {
        let cfg = scenario_c(1);
        assert_eq!(cfg.requesters.len(), 20);
        let t = build_community(&cfg.topology).unwrap();
        for r in t.nodes_of_kind(NodeKind::Requester) {
            let kinds: std::collections::BTreeSet<_> = t.incident(r).map(|l| l.kind).collect();
            assert_eq!(kinds, [LinkKind::Ran, LinkKind::D2d].into_iter().collect());
        }
        assert_eq!(cfg.mobility.moves.len(), 40);
    }
}
