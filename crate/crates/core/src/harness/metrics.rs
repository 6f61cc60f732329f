//! Per-request metrics rows and their CSV encoding.

use std::io;
use std::path::Path;

use csv::{QuoteStyle, ReaderBuilder, Terminator, WriterBuilder};

pub const METRICS_HEADER: [&str; 13] = [
    "scenario",
    "run_seed",
    "requester",
    "request_id",
    "content_name",
    "issue_ms",
    "satisfy_ms",
    "latency_ms",
    "served_by",
    "cache_hit_node_kind",
    "link_kind",
    "scheme",
    "epoch_candidate",
];

pub const COUNTERS_HEADER: [&str; 4] = ["scenario", "run_seed", "counter", "value"];

pub const EPOCHS_HEADER: [&str; 8] = [
    "scenario",
    "run_seed",
    "scheme",
    "domain",
    "epoch",
    "at_ms",
    "reward",
    "candidate",
];

/// One satisfied request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsRow {
    pub scenario: String,
    pub run_seed: u64,
    pub requester: String,
    pub request_id: u64,
    pub content_name: String,
    pub issue_ms: u64,
    pub satisfy_ms: u64,
    pub latency_ms: u64,
    pub served_by: String,
    pub cache_hit_node_kind: String,
    /// `RAN`, `D2D`, or empty for a hit in the requester's own store.
    pub link_kind: String,
    pub scheme: String,
    /// `alpha:beta` active in the requester's domain, empty without FEL.
    pub epoch_candidate: String,
}

impl MetricsRow {
    fn fields(&self) -> [String; 13] {
        [
            self.scenario.clone(),
            self.run_seed.to_string(),
            self.requester.clone(),
            self.request_id.to_string(),
            self.content_name.clone(),
            self.issue_ms.to_string(),
            self.satisfy_ms.to_string(),
            self.latency_ms.to_string(),
            self.served_by.clone(),
            self.cache_hit_node_kind.clone(),
            self.link_kind.clone(),
            self.scheme.clone(),
            self.epoch_candidate.clone(),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self, String> {
        if r.len() != METRICS_HEADER.len() {
            return Err(format!("expected {} fields, got {}", METRICS_HEADER.len(), r.len()));
        }
        let num = |i: usize| -> Result<u64, String> {
            r[i].parse()
                .map_err(|_| format!("{}: '{}' is not an integer", METRICS_HEADER[i], &r[i]))
        };
        Ok(MetricsRow {
            scenario: r[0].to_string(),
            run_seed: num(1)?,
            requester: r[2].to_string(),
            request_id: num(3)?,
            content_name: r[4].to_string(),
            issue_ms: num(5)?,
            satisfy_ms: num(6)?,
            latency_ms: num(7)?,
            served_by: r[8].to_string(),
            cache_hit_node_kind: r[9].to_string(),
            link_kind: r[10].to_string(),
            scheme: r[11].to_string(),
            epoch_candidate: r[12].to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRow {
    pub scenario: String,
    pub run_seed: u64,
    pub counter: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub scenario: String,
    pub run_seed: u64,
    pub scheme: String,
    pub domain: String,
    pub epoch: u64,
    pub at_ms: u64,
    pub reward: f64,
    pub candidate: String,
}

/// Everything one or more runs produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    pub counters: Vec<CounterRow>,
    pub epochs: Vec<EpochRow>,
}

impl MetricsTable {
    pub fn extend(&mut self, other: MetricsTable) {
        self.rows.extend(other.rows);
        self.counters.extend(other.counters);
        self.epochs.extend(other.epochs);
    }

    /// Canonical row order: seed, issue time, requester, request id. The
    /// sort is stable so equal keys keep insertion order.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (a.run_seed, a.issue_ms, &a.requester, a.request_id)
                .cmp(&(b.run_seed, b.issue_ms, &b.requester, b.request_id))
        });
        self.counters.sort_by(|a, b| (a.run_seed).cmp(&b.run_seed));
        self.epochs.sort_by(|a, b| (a.run_seed).cmp(&b.run_seed));
    }

    /// Value of `counter` for `seed`, if recorded.
    pub fn counter(&self, seed: u64, counter: &str) -> Option<&str> {
        self.counters
            .iter()
            .find(|c| c.run_seed == seed && c.counter == counter)
            .map(|c| c.value.as_str())
    }
}

fn writer<W: io::Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .quote_style(QuoteStyle::Necessary)
        .from_writer(w)
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Writes the per-request table: header plus rows in their current order.
pub fn write_metrics<W: io::Write>(rows: &[MetricsRow], w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(METRICS_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record(r.fields()).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_counters<W: io::Write>(rows: &[CounterRow], w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(COUNTERS_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([&r.scenario, &r.run_seed.to_string(), &r.counter, &r.value])
            .map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_epochs<W: io::Write>(rows: &[EpochRow], w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(EPOCHS_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.scenario.clone(),
            r.run_seed.to_string(),
            r.scheme.clone(),
            r.domain.clone(),
            r.epoch.to_string(),
            r.at_ms.to_string(),
            format!("{:?}", r.reward),
            r.candidate.clone(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// Writes `metrics.csv`, `counters.csv` and `epochs.csv` into `dir`,
/// sorting the table first.
pub fn write_csv(table: &MetricsTable, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut sorted = table.clone();
    sorted.sort();
    write_metrics(&sorted.rows, std::fs::File::create(dir.join("metrics.csv"))?)?;
    write_counters(&sorted.counters, std::fs::File::create(dir.join("counters.csv"))?)?;
    write_epochs(&sorted.epochs, std::fs::File::create(dir.join("epochs.csv"))?)?;
    Ok(())
}

/// Parses a per-request table, checking the header.
pub fn read_metrics<R: io::Read>(r: R) -> Result<Vec<MetricsRow>, String> {
    let mut rdr = ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(METRICS_HEADER.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    rdr.records()
        .map(|rec| rec.map_err(|e| e.to_string()).and_then(|r| MetricsRow::from_record(&r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: u64, seed: u64, issue: u64, who: &str) -> MetricsRow {
        MetricsRow {
            scenario: "A".into(),
            run_seed: seed,
            requester: who.into(),
            request_id: id,
            content_name: "/typeA/item001".into(),
            issue_ms: issue,
            satisfy_ms: issue + 14,
            latency_ms: 14,
            served_by: "bs-0".into(),
            cache_hit_node_kind: "BaseStation".into(),
            link_kind: "RAN".into(),
            scheme: "fel".into(),
            epoch_candidate: "1:0".into(),
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_metrics(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scenario,run_seed,requester,request_id,content_name,issue_ms,satisfy_ms,latency_ms,\
             served_by,cache_hit_node_kind,link_kind,scheme,epoch_candidate\n"
        );
    }

    #[test]
    fn quoting_and_round_trip() {
        let mut r = row(1, 1, 0, "c0,\"odd\"");
        r.link_kind.clear();
        r.epoch_candidate.clear();
        let rows = vec![r, row(2, 1, 5, "c1")];
        let mut buf = Vec::new();
        write_metrics(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"c0,\"\"odd\"\"\""));
        assert!(!text.contains('\r'));
        let back = read_metrics(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let mut again = Vec::new();
        write_metrics(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn sort_order() {
        let mut t = MetricsTable {
            rows: vec![row(3, 2, 0, "a"), row(2, 1, 5, "a"), row(1, 1, 5, "a"), row(4, 1, 5, "0")],
            ..Default::default()
        };
        t.sort();
        let ids: Vec<u64> = t.rows.iter().map(|r| r.request_id).collect();
        assert_eq!(ids, vec![4, 1, 2, 3]);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_metrics("a,b\n1,2\n".as_bytes()).is_err());
    }
}
