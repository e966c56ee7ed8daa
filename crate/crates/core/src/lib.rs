//! Deterministic simulator for memory-augmented embodied object captioning.
//!
//! The crate models an agent moving on a 2D occupancy grid, observing objects
//! through a field-of-view cone, captioning them with a viewpoint-conditioned
//! stochastic captioner, associating detections to a persistent episodic
//! object memory, and choosing actions with one of three exploration policies
//! (disagreement-driven, frontier, random goal). Every run is reproducible
//! from its seeds, and every metric is recomputable from the episode log.

pub mod aggregator;
pub mod association;
pub mod episode;
pub mod explorer;
pub mod memory;
pub mod metrics;
pub mod oracle;
pub mod protocol;
pub mod world;

pub use association::{AssociationConfig, AssociationRecord, MatchTarget, MatchDecision};
pub use memory::{EpisodicMemory, ObjectEntry, PersistentId};
pub use oracle::{AttributeSet, Caption, Embedder, EmbeddingVector, NoiseModel, Vocabulary};
pub use protocol::StructuredOutput;
pub use world::{Action, AgentPose, Cell, GridMap, GridWorld, Heading, Point3, TrueObjectId};
