//! Linear retrieval protocols over GF(2): coordinates, request forms,
//! transcripts with explicit decoding plans, and answer evaluation.

mod form;
mod store;
mod transcript;

pub use form::{Coordinate, LinearForm};
pub use store::{
    answer_all, answer_bit, attribution_map, decode, measured_rate, planned_form, srp_attribution, symbolic_check,
    symbolic_decode_check, FileStore, PlanMismatch,
};
pub use transcript::{wire_key, Request, RequestRef, Transcript, TranscriptBuilder};
