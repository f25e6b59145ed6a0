//! Sampled classification of metrics, projective relations between pairs
//! and identity checks.

mod classes;
mod identities;
mod relation;
mod sample;

pub use classes::{classify, Class};
pub use identities::{verify_identity, Identity, IdentityInputs, DEFAULT_PROBE};
pub use relation::{
    invariance_suite, projective_factor, projective_relation, Relation, INVARIANCE_CHECKS, RELATION_TOLERANCE,
    SHIFT_TOLERANCE,
};
pub use sample::{Perturbation, SampleBox, SampleSet, Settings};
