//! Request generation: Zipf-popularity and periodic-playlist requesters.

use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::ccn::{ContentCatalog, ContentClass, ContentName};
use crate::sim::{RandomStream, SimTime};
use crate::topology::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("zipf exponent must be > 0, got {0}")]
    Exponent(f64),
    #[error("interval must be > 0 ms")]
    Interval,
    #[error("playlist is empty")]
    EmptyPlaylist,
    #[error("{0} is not a {1} item")]
    OutsideClass(ContentName, &'static str),
    #[error("catalog has no {0} items")]
    EmptySlice(&'static str),
}

/// Precomputed inverse-CDF table for P(i) = i^-s / H(N, s), i in 1..=N.
#[derive(Debug, Clone)]
pub struct ZipfTable {
    cdf: Vec<f64>,
    exponent: f64,
}

impl ZipfTable {
    pub fn new(n: usize, exponent: f64) -> Result<Self, WorkloadError> {
        if exponent.is_nan() || exponent <= 0.0 {
            return Err(WorkloadError::Exponent(exponent));
        }
        assert!(n >= 1, "zipf table needs at least one item");
        let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-exponent)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        *cdf.last_mut().expect("n >= 1") = 1.0;
        Ok(ZipfTable { cdf, exponent })
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn probability(&self, rank: usize) -> f64 {
        assert!((1..=self.len()).contains(&rank));
        let prev = if rank == 1 { 0.0 } else { self.cdf[rank - 2] };
        self.cdf[rank - 1] - prev
    }

    /// Maps a uniform draw in `[0, 1)` to a 1-based rank.
    pub fn rank_for(&self, u: f64) -> usize {
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) + 1
    }

    pub fn sample(&self, stream: &mut RandomStream) -> usize {
        self.rank_for(stream.next_uniform())
    }
}

/// One-shot Zipf draw over `n` items. Builds the table each call; hot
/// paths should keep a [`ZipfTable`].
pub fn zipf_sample(n: usize, exponent: f64, stream: &mut RandomStream) -> Result<usize, WorkloadError> {
    Ok(ZipfTable::new(n, exponent)?.sample(stream))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RequestModel {
    Zipf { exponent: f64, mean_interarrival: u64 },
    Periodic { period: u64, playlist: Vec<ContentName> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequesterProfile {
    pub requester: NodeId,
    pub label: String,
    pub model: RequestModel,
    pub class: ContentClass,
}

impl RequesterProfile {
    pub fn validate(&self, catalog: &ContentCatalog) -> Result<(), WorkloadError> {
        if catalog.slice(self.class).is_empty() {
            return Err(WorkloadError::EmptySlice(self.class.as_str()));
        }
        match &self.model {
            RequestModel::Zipf {
                exponent,
                mean_interarrival,
            } => {
                if exponent.is_nan() || *exponent <= 0.0 {
                    return Err(WorkloadError::Exponent(*exponent));
                }
                if *mean_interarrival == 0 {
                    return Err(WorkloadError::Interval);
                }
            }
            RequestModel::Periodic { period, playlist } => {
                if *period == 0 {
                    return Err(WorkloadError::Interval);
                }
                if playlist.is_empty() {
                    return Err(WorkloadError::EmptyPlaylist);
                }
                for name in playlist {
                    if catalog.get(name).map(|it| it.class) != Some(self.class) {
                        return Err(WorkloadError::OutsideClass(name.clone(), self.class.as_str()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_zipf(&self) -> bool {
        matches!(self.model, RequestModel::Zipf { .. })
    }
}

/// Per-requester generator state. Names and gaps come from separate
/// substreams so two runs of one seed see the same name sequence even
/// when completion times differ.
#[derive(Debug, Clone)]
pub struct RequestGenerator {
    profile: RequesterProfile,
    slice: Vec<ContentName>,
    table: Option<ZipfTable>,
    cursor: usize,
    names: RandomStream,
    gaps: RandomStream,
}

impl RequestGenerator {
    pub fn new(
        profile: RequesterProfile,
        catalog: &ContentCatalog,
        master_seed: u64,
    ) -> Result<Self, WorkloadError> {
        profile.validate(catalog)?;
        let slice = catalog.slice(profile.class);
        let table = match &profile.model {
            RequestModel::Zipf { exponent, .. } => Some(ZipfTable::new(slice.len(), *exponent)?),
            RequestModel::Periodic { .. } => None,
        };
        let names = RandomStream::new(master_seed, &format!("workload/{}/names", profile.label));
        let gaps = RandomStream::new(master_seed, &format!("workload/{}/gaps", profile.label));
        Ok(RequestGenerator {
            profile,
            slice,
            table,
            cursor: 0,
            names,
            gaps,
        })
    }

    pub fn profile(&self) -> &RequesterProfile {
        &self.profile
    }

    /// Zipf requesters wait for the previous request to complete before
    /// drawing the next gap; periodic ones keep their fixed cadence.
    pub fn closed_loop(&self) -> bool {
        self.profile.is_zipf()
    }

    pub fn next_request(&mut self, now: SimTime) -> (SimTime, ContentName) {
        match &self.profile.model {
            RequestModel::Zipf {
                mean_interarrival, ..
            } => {
                let x: f64 = self.gaps.rng().sample(Exp1);
                let gap = (x * *mean_interarrival as f64).round() as u64;
                let rank = self
                    .table
                    .as_ref()
                    .expect("zipf generator has a table")
                    .sample(&mut self.names);
                (now.plus(gap), self.slice[rank - 1].clone())
            }
            RequestModel::Periodic { period, playlist } => {
                let name = playlist[self.cursor % playlist.len()].clone();
                self.cursor += 1;
                (now.plus(*period), name)
            }
        }
    }
}

/// Free-function form of [`RequestGenerator::next_request`].
pub fn next_request(generator: &mut RequestGenerator, now: SimTime) -> (SimTime, ContentName) {
    generator.next_request(now)
}
