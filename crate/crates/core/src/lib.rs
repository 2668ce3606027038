//! Finite enumerated relational structures and the machinery built on top of
//! them: trees of 1-types, weak types and their tree closure, plus-structures,
//! type-respecting embeddings, hereditary-family checks, and small-scale
//! partition (arrows) searches.
//!
//! A structure here always carries its enumeration: the vertex set is
//! `0..size` and every embedding is strictly increasing on vertices. That
//! convention is load-bearing throughout; nothing in this crate works with
//! unordered structures.

pub mod amalgamation;
pub mod config;
pub mod error;
pub mod io;
pub mod outcome;
pub mod ramsey;
pub mod random;
pub mod respect;
pub mod structures;
pub mod typetrees;
pub mod weaktypes;

pub use config::SearchConfig;
pub use error::CoreError;
pub use outcome::{CheckOutcome, Verdict};
pub use structures::{Embedding, FamilyMode, HereditaryFamily, Language, Structure};
