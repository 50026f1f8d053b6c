//! Private information retrieval over graph-based replicated storage.
//!
//! Every file is stored on the two servers at the ends of its edge (or of each
//! parallel copy of it in a multigraph). The crate builds linear retrieval
//! schemes for such systems, verifies reliability and privacy of their
//! transcripts, and evaluates rate bounds.

pub mod bounds;
pub mod error;
pub mod graph;
pub mod protocol;
pub mod random;
pub mod schemes;
pub mod tables;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Family, FileId, GraphFlag, GraphSpec};
pub use protocol::{Coordinate, LinearForm, Request, RequestRef, Transcript};
pub use random::{FixedSource, Permutation, Randomness, SeededSource};
pub use schemes::{build_scheme, Orientation, Scheme, SchemeDescriptor};
pub use verify::{verify_scheme, VerifyConfig, VerifyReport};

/// Exact rate values.
pub type Rational = num_rational::Ratio<i64>;
