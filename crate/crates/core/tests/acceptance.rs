//! Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use felsim_core::ccn::{ContentCatalog, ContentClass, ContentItem, ContentName};
use felsim_core::fel::{
    place_tasks, AgentConfig, Candidate, CostModel, DomainCost, EpsilonSchedule, LearningTask,
};
use felsim_core::harness::metrics::MetricsRow;
use felsim_core::harness::runner::{run_arm, FelRuntime, RunOutput, RunSettings, TraceEvent};
use felsim_core::harness::{scenarios, write_csv, ScenarioConfig, Simulation};
use felsim_core::topology::{build_community, CommunitySpec, FogDomain, NodeId, Topology};
use felsim_core::workload::{RequestModel, RequesterProfile, ZipfTable};
use felsim_core::{HandoverScheme, LinkKind, LinkSelector, RandomStream, SimTime};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

type Outcome = Result<String, String>;

fn mean(xs: &[u64]) -> f64 {
    xs.iter().sum::<u64>() as f64 / xs.len() as f64
}

fn arm_rows(cfg: &ScenarioConfig, arm: &str, seed: u64) -> Result<(Vec<MetricsRow>, f64), String> {
    let spec = cfg.arms.iter().find(|a| a.name == arm).ok_or("no such arm")?;
    let start = Instant::now();
    let out = run_arm(cfg, spec, seed).map_err(|e| e.to_string())?;
    Ok((out.table.rows, start.elapsed().as_secs_f64()))
}

fn fig6a() -> Outcome {
    let mut slowest: f64 = 0.0;
    let mut worst_gap = f64::INFINITY;
    for seed in SEEDS {
        let cfg = scenarios::scenario_a(seed);
        let topo = build_community(&cfg.topology).map_err(|e| e.to_string())?;
        let cloud = topo.cloud().unwrap();
        let mut series: BTreeMap<(String, &str), Vec<u64>> = BTreeMap::new();
        let mut run_time = 0.0;
        for arm in ["cloud", "fel"] {
            let (rows, secs) = arm_rows(&cfg, arm, seed)?;
            run_time += secs;
            // Latency identity: every request is served at the edge (BS) or
            // by the cloud, at round trip 2 x path latency.
            let (mut edge, mut far, mut total) = (0u64, 0u64, 0u64);
            let mut le = 0;
            let mut lc = 0;
            for r in &rows {
                let req = topo.find(&format!("req-{}", requester_slot(&r.requester))).unwrap();
                let ap = topo.find(&format!("ap-{}-0", community(&r.requester))).unwrap();
                let bs = topo.base_station_of(ap).unwrap();
                le = topo.path_latency(req, bs).unwrap();
                lc = topo.path_latency(req, cloud).unwrap();
                match r.cache_hit_node_kind.as_str() {
                    "BaseStation" => edge += 1,
                    "Cloud" => far += 1,
                    other => return Err(format!("seed {seed} {arm}: unexpected server kind {other}")),
                }
                total += r.latency_ms;
                let kind = if r.requester.ends_with("zipf") { "zipf" } else { "period" };
                series.entry((arm.to_string(), kind)).or_default().push(r.latency_ms);
            }
            if total != edge * 2 * le + far * 2 * lc {
                return Err(format!(
                    "seed {seed} {arm}: latency sum {total} != {edge}x2x{le} + {far}x2x{lc}"
                ));
            }
        }
        slowest = slowest.max(run_time);
        if run_time >= 60.0 {
            return Err(format!("seed {seed}: run took {run_time:.1}s"));
        }
        for kind in ["zipf", "period"] {
            let f = mean(&series[&("fel".to_string(), kind)]);
            let c = mean(&series[&("cloud".to_string(), kind)]);
            if f >= c {
                return Err(format!("seed {seed}: FEL-{kind} {f:.3} >= Cloud-{kind} {c:.3}"));
            }
            worst_gap = worst_gap.min(c - f);
        }
    }
    Ok(format!(
        "10/10 seeds FEL < Cloud on both series (smallest gap {worst_gap:.2} ms); latency identity exact on 20 arm-runs; slowest seed {slowest:.2}s"
    ))
}

/// "c3-zipf" -> "3-0"; requester slot follows the scenario A layout.
fn requester_slot(label: &str) -> String {
    let c = community(label);
    let slot = if label.ends_with("zipf") { 0 } else { 1 };
    format!("{c}-{slot}")
}

fn community(label: &str) -> usize {
    label[1..label.find('-').unwrap()].parse().unwrap()
}

fn fig6b() -> Outcome {
    let mut worst = f64::INFINITY;
    for seed in SEEDS {
        let cfg = scenarios::scenario_b(seed);
        let mut by: BTreeMap<(String, &str), Vec<u64>> = BTreeMap::new();
        for arm in ["nofel", "fel"] {
            let (rows, _) = arm_rows(&cfg, arm, seed)?;
            for r in rows {
                let class = if r.content_name.starts_with("/typeA/") { "A" } else { "B" };
                by.entry((arm.to_string(), class)).or_default().push(r.latency_ms);
            }
        }
        for class in ["A", "B"] {
            let f = mean(&by[&("fel".to_string(), class)]);
            let n = mean(&by[&("nofel".to_string(), class)]);
            if f >= n {
                return Err(format!("seed {seed}: type{class} FEL {f:.3} >= no-FEL {n:.3}"));
            }
            worst = worst.min(n - f);
        }
    }
    Ok(format!("10/10 seeds FEL < no-FEL for TypeA and TypeB (smallest gap {worst:.2} ms)"))
}

fn fig6c() -> Outcome {
    let mut fewest = usize::MAX;
    for seed in SEEDS {
        let cfg = scenarios::scenario_c(seed);
        let mut by: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
        for arm in ["baseline", "fel"] {
            let (rows, _) = arm_rows(&cfg, arm, seed)?;
            for r in rows {
                if arm == "baseline" && r.link_kind == "D2D" {
                    return Err(format!("seed {seed}: baseline row used D2D"));
                }
                by.entry((arm.to_string(), r.requester)).or_default().push(r.latency_ms);
            }
        }
        let wins = cfg
            .requesters
            .iter()
            .filter(|q| {
                let f = by.get(&("fel".to_string(), q.label.clone()));
                let b = by.get(&("baseline".to_string(), q.label.clone()));
                matches!((f, b), (Some(f), Some(b)) if mean(f) < mean(b))
            })
            .count();
        if cfg.requesters.len() != 20 || wins < 18 {
            return Err(format!("seed {seed}: FEL wins for {wins}/{} requesters", cfg.requesters.len()));
        }
        fewest = fewest.min(wins);
    }
    let mut lowest: f64 = 1.0;
    for seed in SEEDS {
        let mut stream = RandomStream::new(seed, "acceptance/d2d");
        let mut sel = LinkSelector::new(NodeId(0), 0.1, true, true);
        let mut d2d = 0;
        for i in 0..1000 {
            let arm = sel.select(&mut stream);
            if i >= 200 && arm == LinkKind::D2d {
                d2d += 1;
            }
            sel.record(arm, if arm == LinkKind::D2d { 12 } else { 30 });
        }
        let freq = d2d as f64 / 800.0;
        if freq < 0.85 {
            return Err(format!("seed {seed}: D2D frequency {freq:.3} < 0.85"));
        }
        lowest = lowest.min(freq);
    }
    Ok(format!(
        "FEL beats baseline for >= {fewest}/20 requesters on 10/10 seeds; D2D frequency over requests 200-1000 >= {lowest:.3}"
    ))
}

#[derive(Debug, Clone)]
struct NetCase {
    requesters: usize,
    aps: usize,
    d2d: bool,
    caps: [usize; 4],
    lifetime: u64,
    fel: bool,
    link: bool,
    fel_handover: bool,
    requests: Vec<(u64, usize, usize)>,
    mv: Option<(u64, usize)>,
    seed: u64,
}

fn net_case() -> impl Strategy<Value = NetCase> {
    (
        (1usize..=3, 1usize..=2, any::<bool>()),
        [0usize..=3, 0usize..=3, 0usize..=3, 0usize..=3],
        prop_oneof![5u64..40, 40u64..300],
        (any::<bool>(), any::<bool>(), any::<bool>()),
        proptest::collection::vec((0u64..400, 0usize..3, 0usize..6), 1..=50),
        proptest::option::of((0u64..400, 0usize..3)),
        any::<u64>(),
    )
        .prop_map(|((requesters, aps, d2d), caps, lifetime, (fel, link, fh), requests, mv, seed)| NetCase {
            requesters,
            aps,
            d2d,
            caps,
            lifetime,
            fel,
            link,
            fel_handover: fh,
            requests: requests
                .into_iter()
                .map(|(t, r, i)| (t, r % requesters, i))
                .collect(),
            mv: mv.map(|(t, r)| (t, r % requesters)),
            seed,
        })
}

fn run_net_case(case: &NetCase) -> Result<(RunOutput, Topology), String> {
    let spec = CommunitySpec {
        communities: 1,
        requesters_per_community: case.requesters,
        aps_per_community: case.aps,
        latency_d2d: case.d2d.then_some(1),
        requester_cs_capacity: case.caps[0],
        ap_cs_capacity: case.caps[1],
        bs_cs_capacity: case.caps[2],
        gateway_cs_capacity: case.caps[3],
        ..CommunitySpec::default()
    };
    let topo = build_community(&spec).map_err(|e| e.to_string())?;
    let catalog = ContentCatalog::two_class(3, 100);
    let settings = RunSettings {
        scenario: "P".into(),
        scheme: "p".into(),
        run_seed: case.seed,
        pit_lifetime: case.lifetime,
        issue_until: SimTime(1000),
        fel: case.fel.then(|| FelRuntime {
            agent: AgentConfig {
                k: 2,
                candidates: Candidate::default_grid(),
                epsilon: EpsilonSchedule::Anneal,
            },
            epoch_ms: 50,
            ticket_threshold: 0,
            grant_all: false,
            hold_ms: 100,
            placement: None,
        }),
        link_epsilon: case.link.then_some(0.1),
        handover: if case.fel_handover {
            HandoverScheme::FelUpstreamCache
        } else {
            HandoverScheme::BaselineRedirect
        },
        recent_window: 3,
    };
    let community = topo.communities[0].clone();
    let names: Vec<ContentName> = catalog.items().iter().map(|i| i.name.clone()).collect();
    let mut sim = Simulation::new(topo.clone(), catalog, settings).map_err(|e| e.to_string())?;
    sim.enable_trace();
    for &(t, r, i) in &case.requests {
        sim.inject_request(SimTime(t), community.requesters[r], names[i].clone())
            .map_err(|e| e.to_string())?;
    }
    if let (Some((t, r)), 2) = (case.mv, case.aps) {
        sim.schedule_move(SimTime(t), community.requesters[r], community.aps[1])
            .map_err(|e| e.to_string())?;
    }
    let out = sim.run().map_err(|e| e.to_string())?;
    Ok((out, topo))
}

fn check_net_case(case: &NetCase) -> Result<(), TestCaseError> {
    let (out, topo) = run_net_case(case).map_err(TestCaseError::fail)?;
    prop_assert!(topo.len() <= 10);
    let expired: u64 = out
        .table
        .counters
        .iter()
        .find(|c| c.counter == "p.expired")
        .map(|c| c.value.parse().unwrap())
        .unwrap();
    let delivered = out.table.rows.len() as u64;
    prop_assert_eq!(case.requests.len() as u64, delivered + expired, "conservation");
    // At most one outstanding upstream forward per (node, name).
    let mut open: BTreeSet<(NodeId, ContentName)> = BTreeSet::new();
    for ev in &out.trace {
        match ev {
            TraceEvent::PitOpen { node, name, .. } => {
                prop_assert!(open.insert((*node, name.clone())), "second forward while pending");
            }
            TraceEvent::PitClose { node, name, .. } => {
                prop_assert!(open.remove(&(*node, name.clone())), "close without open");
            }
        }
    }
    prop_assert!(open.is_empty(), "PIT entries left open after drain");
    for (node, (cap, peak)) in &out.cs_peak {
        prop_assert!(peak <= cap, "store at {} reached {} > {}", node, peak, cap);
    }
    Ok(())
}

fn conservation() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&net_case(), |c| check_net_case(&c))
        .map_err(|e| e.to_string())?;
    Ok("1000 random topologies (<= 10 nodes, <= 50 requests): issued = delivered + expired, one forward per pending name, stores within capacity".into())
}

fn learning_oracle() -> Outcome {
    let k = 5;
    let catalog = ContentCatalog::new(
        (0..20)
            .map(|i| ContentItem {
                name: format!("/typeA/item{i:03}").parse().unwrap(),
                size_bytes: 100,
                class: ContentClass::TypeA,
            })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let run = |fel: bool| -> Result<(RunOutput, NodeId), String> {
        let topo = build_community(&CommunitySpec {
            communities: 1,
            requesters_per_community: 3,
            bs_cs_capacity: k,
            ..CommunitySpec::default()
        })
        .map_err(|e| e.to_string())?;
        let bs = topo.communities[0].bs;
        let settings = RunSettings {
            scenario: "L".into(),
            scheme: if fel { "fel" } else { "lru" }.into(),
            run_seed: 42,
            pit_lifetime: 148,
            issue_until: SimTime(60_000),
            fel: fel.then(|| FelRuntime {
                agent: AgentConfig {
                    k,
                    candidates: vec![Candidate::new(1.0, 0.0)],
                    epsilon: EpsilonSchedule::Constant(0.0),
                },
                epoch_ms: 5000,
                ticket_threshold: 0,
                grant_all: false,
                hold_ms: 0,
                placement: None,
            }),
            link_epsilon: None,
            handover: HandoverScheme::FelUpstreamCache,
            recent_window: 5,
        };
        let c = topo.communities[0].clone();
        let mut sim = Simulation::new(topo, catalog.clone(), settings).map_err(|e| e.to_string())?;
        for (i, &r) in c.requesters.iter().enumerate() {
            sim.add_requester(
                RequesterProfile {
                    requester: r,
                    label: format!("z{i}"),
                    model: RequestModel::Zipf {
                        exponent: 1.0,
                        mean_interarrival: 20,
                    },
                    class: ContentClass::TypeA,
                },
                c.aps[0],
            )
            .map_err(|e| e.to_string())?;
        }
        Ok((sim.run().map_err(|e| e.to_string())?, bs))
    };
    let (fel, _) = run(true)?;
    let (lru, _) = run(false)?;

    let third = fel.agents[0].history.get(2).ok_or("fewer than 3 epochs")?;
    let (from, to) = (fel.agents[0].history[1].at.millis(), third.at.millis());
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for r in &fel.table.rows {
        if r.satisfy_ms > from && r.satisfy_ms <= to {
            *counts.entry(r.content_name.as_str()).or_default() += 1;
        }
    }
    let mut sorted: Vec<u64> = counts.values().copied().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let kth = sorted[k - 1];
    let pins: BTreeSet<String> = third.pins.iter().map(|n| n.to_string()).collect();
    let above: BTreeSet<String> = counts
        .iter()
        .filter(|(_, &c)| c > kth)
        .map(|(n, _)| n.to_string())
        .collect();
    let at_kth: BTreeSet<String> = counts
        .iter()
        .filter(|(_, &c)| c == kth)
        .map(|(n, _)| n.to_string())
        .collect();
    let top_k_ok = pins.len() == k
        && above.is_subset(&pins)
        && pins.iter().all(|p| above.contains(p) || at_kth.contains(p));
    if !top_k_ok {
        return Err(format!("epoch-3 pins {pins:?} are not a top-{k} of {counts:?}"));
    }
    let tie = above.len() + at_kth.len() > k;

    let hit_rate = |out: &RunOutput| {
        let steady: Vec<&MetricsRow> = out.table.rows.iter().filter(|r| r.issue_ms >= to).collect();
        let hits = steady
            .iter()
            .filter(|r| r.cache_hit_node_kind == "BaseStation")
            .count();
        hits as f64 / steady.len() as f64
    };
    let (hf, hl) = (hit_rate(&fel), hit_rate(&lru));
    if hf < hl {
        return Err(format!("pinned hit rate {hf:.4} < LRU {hl:.4}"));
    }
    Ok(format!(
        "epoch-3 pins equal brute-force top-{k} over ({from}, {to}] ms{}; steady hit rate {hf:.4} >= LRU {hl:.4}",
        if tie { " (boundary tie resolved within the tied set)" } else { ", no boundary tie" }
    ))
}

/// Independent optimum: depth-first over every task choice, most tasks
/// placed first, then least cost.
fn brute_force(
    tasks: &[LearningTask],
    caps: &mut [u64],
    model: &CostModel,
    i: usize,
) -> (usize, f64) {
    if i == tasks.len() {
        return (0, 0.0);
    }
    let mut best = brute_force(tasks, caps, model, i + 1);
    if tasks[i].cycles == 0 {
        return best;
    }
    for d in 0..caps.len() {
        if caps[d] >= tasks[i].cycles {
            caps[d] -= tasks[i].cycles;
            let (n, c) = brute_force(tasks, caps, model, i + 1);
            caps[d] += tasks[i].cycles;
            let cand = (n + 1, c + model.cost(&tasks[i], d));
            if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                best = cand;
            }
        }
    }
    best
}

fn placement_oracle() -> Outcome {
    let case = (1usize..=4, 1usize..=3)
        .prop_filter("exact regime", |(t, d)| t * d <= 12)
        .prop_flat_map(|(t, d)| {
            (
                proptest::collection::vec((0u64..20, 0u64..5, any::<bool>()), t),
                proptest::collection::vec((0u64..40, 0u32..5, 0u32..3, 0u32..30), d),
                0u32..3,
            )
        });
    let mut runner = TestRunner::new(Config {
        cases: 500,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&case, |(tasks, domains, penalty)| {
            let tasks: Vec<LearningTask> = tasks
                .iter()
                .enumerate()
                .map(|(i, &(cycles, bytes, ds))| LearningTask {
                    task_id: format!("t{i}"),
                    cycles,
                    data_bytes: bytes,
                    delay_sensitive: ds,
                })
                .collect();
            let doms: Vec<FogDomain> = domains
                .iter()
                .enumerate()
                .map(|(i, &(cap, ..))| FogDomain {
                    domain_id: format!("d{i}"),
                    members: BTreeSet::new(),
                    anchor: NodeId(i),
                    capacity: cap,
                })
                .collect();
            let model = CostModel {
                per_domain: domains
                    .iter()
                    .map(|&(_, p, c, delay)| DomainCost {
                        compute_price: f64::from(p),
                        caching_cost: f64::from(c),
                        comm_delay: f64::from(delay),
                    })
                    .collect(),
                comm_delay_penalty: f64::from(penalty),
            };
            let placement = place_tasks(&tasks, &doms, &model, None);
            let mut caps: Vec<u64> = doms.iter().map(|d| d.capacity).collect();
            let (placed, cost) = brute_force(&tasks, &mut caps, &model, 0);
            prop_assert_eq!(placement.assignment.len(), placed);
            prop_assert_eq!(placement.total_cost, cost);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("500 random instances with |tasks| x |domains| <= 12: placed count and total cost equal the brute-force optimum".into())
}

/// One requester, two access points under one base station; latencies
/// requester-AP 2, AP-BS 5, BS-gateway 10, gateway-cloud 20 ms. The
/// requester fetches x at t=0, moves to the second AP at t=100 and asks for
/// x again at t=1000.
fn mobility_first_request(scheme: HandoverScheme) -> Result<(u64, u64), String> {
    let fel = scheme == HandoverScheme::FelUpstreamCache;
    let topo = build_community(&CommunitySpec {
        communities: 1,
        requesters_per_community: 1,
        aps_per_community: 2,
        bs_cs_capacity: if fel { 10 } else { 0 },
        ..CommunitySpec::default()
    })
    .map_err(|e| e.to_string())?;
    let c = topo.communities[0].clone();
    let (req, ap0, ap1) = (c.requesters[0], c.aps[0], c.aps[1]);
    let cloud = topo.cloud().unwrap();
    // Independent expectation from shortest-path latencies.
    let pl = |a, b| topo.path_latency(a, b).unwrap();
    let expected = if fel {
        2 * pl(req, c.bs)
    } else {
        2 * (pl(req, ap1) + pl(ap1, c.gateway) + pl(c.gateway, ap0) + pl(ap0, cloud))
    };
    let catalog = ContentCatalog::two_class(5, 100);
    let x = catalog.items()[0].name.clone();
    let settings = RunSettings {
        scenario: "M".into(),
        scheme: scheme.to_string(),
        run_seed: 1,
        pit_lifetime: 4 * pl(req, cloud),
        issue_until: SimTime(2000),
        fel: fel.then(|| FelRuntime {
            agent: AgentConfig {
                k: 10,
                candidates: Candidate::default_grid(),
                epsilon: EpsilonSchedule::Anneal,
            },
            epoch_ms: 100_000,
            ticket_threshold: 0,
            grant_all: false,
            hold_ms: 5000,
            placement: None,
        }),
        link_epsilon: None,
        handover: scheme,
        recent_window: 5,
    };
    let mut sim = Simulation::new(topo, catalog, settings).map_err(|e| e.to_string())?;
    sim.inject_request(SimTime(0), req, x.clone()).map_err(|e| e.to_string())?;
    sim.schedule_move(SimTime(100), req, ap1).map_err(|e| e.to_string())?;
    sim.inject_request(SimTime(1000), req, x).map_err(|e| e.to_string())?;
    let out = sim.run().map_err(|e| e.to_string())?;
    let row = out
        .table
        .rows
        .iter()
        .find(|r| r.issue_ms == 1000)
        .ok_or("post-handover request not satisfied")?;
    Ok((row.latency_ms, expected))
}

fn mobility_fixture() -> Outcome {
    let (fel, fel_expected) = mobility_first_request(HandoverScheme::FelUpstreamCache)?;
    let (base, base_expected) = mobility_first_request(HandoverScheme::BaselineRedirect)?;
    if fel != 14 || fel != fel_expected {
        return Err(format!("FelUpstreamCache first request {fel} ms, expected 14 ({fel_expected})"));
    }
    if base <= 14 || base != base_expected {
        return Err(format!("BaselineRedirect first request {base} ms, expected {base_expected} > 14"));
    }
    Ok(format!("FelUpstreamCache = {fel} ms; BaselineRedirect = {base} ms (> 14)"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, cfg) in [
        scenarios::scenario_a(7),
        scenarios::scenario_b(8),
        scenarios::scenario_c(9),
    ]
    .into_iter()
    .enumerate()
    {
        // Go through the file format too.
        let cfg = ScenarioConfig::parse(&cfg.to_ini()).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for pass in 0..2 {
            let out = dir.path().join(format!("{i}-{pass}"));
            let table = felsim_core::run_scenario(&cfg).map_err(|e| e.to_string())?;
            write_csv(&table, &out).map_err(|e| e.to_string())?;
            let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| e.to_string());
            outputs.push((read("metrics.csv")?, read("counters.csv")?, read("epochs.csv")?));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("scenario {} seed {} differs between runs", cfg.name, cfg.seed));
        }
    }
    Ok("scenarios A, B, C run twice each: metrics.csv, counters.csv and epochs.csv byte-identical".into())
}

fn zipf_fidelity() -> Outcome {
    let mut notes = Vec::new();
    for n in [4usize, 100] {
        let table = ZipfTable::new(n, 1.0).map_err(|e| e.to_string())?;
        let mut stream = RandomStream::new(2024, &format!("acceptance/zipf/{n}"));
        let samples = 100_000u32;
        let mut counts = vec![0u64; n];
        for _ in 0..samples {
            counts[table.sample(&mut stream) - 1] += 1;
        }
        // Expected frequencies from the closed form, computed afresh.
        let h: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
        let stat: f64 = counts
            .iter()
            .enumerate()
            .map(|(i, &o)| {
                let e = f64::from(samples) / ((i + 1) as f64 * h);
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let critical = ChiSquared::new((n - 1) as f64)
            .map_err(|e| e.to_string())?
            .inverse_cdf(0.99);
        if stat >= critical {
            return Err(format!("N={n}: chi-square {stat:.2} >= critical {critical:.2}"));
        }
        notes.push(format!("N={n}: {stat:.2} < {critical:.2}"));
    }
    Ok(format!("chi-square at 0.01 with 10^5 samples: {}", notes.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("fig6a-ordinal", fig6a),
        ("fig6b-ordinal", fig6b),
        ("fig6c-ordinal", fig6c),
        ("ccn-conservation", conservation),
        ("learning-oracle", learning_oracle),
        ("placement-oracle", placement_oracle),
        ("mobility-fixture", mobility_fixture),
        ("determinism", determinism),
        ("zipf-fidelity", zipf_fidelity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
