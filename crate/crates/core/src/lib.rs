//! Cascaded coded distributed computing (CDC) built on cyclic 1-designs.
//!
//! The crate constructs `(K, N, Q, r, s)` CDC plans with `K = N = Q = n` and
//! `r = s = t` from the cyclic block design `B_i = {i, ..., i+t-1} mod n`,
//! runs the three MapReduce phases on a simulated multicast bus with exact
//! bit accounting, and evaluates every comparative communication-load formula
//! in exact rational arithmetic.
//!
//! Module map:
//! - [`finite_field`]: GF(2^T) arithmetic, exact linear solving.
//! - [`designs`]: cyclic block construction and t-design verification.
//! - [`scheme`]: placement, assignment, encoder matrices, both decoders.
//! - [`engine`]: map/shuffle/reduce execution and oracle verification.
//! - [`metrics`]: load formulas, inequality checks, sweep rows.

pub mod binomial;
pub mod designs;
pub mod engine;
pub mod finite_field;
pub mod metrics;
pub mod scheme;

pub use designs::{cyclic_blocks, verify_t_design, Design, DesignVerdict};
pub use engine::{run_simulation, ShuffleTranscript, VerificationReport, World};
pub use finite_field::{FieldElement, FieldMatrix, FieldSpec};
pub use scheme::{build_scheme, SchemeParams, SchemePlan};
