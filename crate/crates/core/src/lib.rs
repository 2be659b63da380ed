//! Incremental schema extraction for document stores.
//!
//! Mutation queries (insert, delete, update) are parsed from shell or
//! JSON-lines logs and applied one at a time to an [`EngineState`], which
//! keeps the extracted model current without rescanning documents. A batch
//! extractor over replayed documents serves as a reference implementation.

pub mod diff;
pub mod engine;
pub mod generator;
pub mod links;
pub mod oracle;
pub mod parser;
pub mod state;
pub mod types;
pub mod verify;

pub use diff::{diff_models, Change, ModelDiff};
pub use engine::{Action, ApplyError, ApplyReport, Rule, Warning};
pub use generator::{generate, GenConfig, Generator, Profile, Ratios};
pub use links::{detect_reference, refine_model, LinkMode};
pub use oracle::{extract_schema_batch, replay_documents, MaterializedStore, ReplayOutcome};
pub use parser::{parse_log, LogFormat, LogLine, MutationQuery, ParseError, UpdateOp};
pub use state::{EngineState, InvariantViolation, OccurrenceMetadata, SchemaModel, StateError};
pub use types::{AttrPath, TypeDescriptor, Value};
pub use verify::{verify_log, Divergence, VerifyReport};
