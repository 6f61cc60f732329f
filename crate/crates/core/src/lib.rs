//! Discrete-event simulator for fog-enabled edge learning over a
//! content-centric network.

pub mod ccn;
pub mod fel;
pub mod harness;
pub mod mobility;
pub mod sim;
pub mod topology;
pub mod workload;

pub use ccn::{ContentCatalog, ContentClass, ContentName, ContentStore};
pub use fel::{Candidate, FelAgent, LearningTask, Placement};
pub use mobility::{HandoverScheme, LinkSelector, MobileRequester};
pub use sim::{Engine, RandomStream, SimError, SimTime};
pub use topology::{CommunitySpec, LinkKind, NodeId, NodeKind, Topology};
pub use harness::{run_scenario, ConfigError, HarnessError, MetricsTable, ScenarioConfig};
