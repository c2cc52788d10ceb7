//! Context-tagged probability distributions, Shannon-entropy consistency
//! checks, and exactly solvable sequential experiments to exercise them.
//!
//! The organizing idea: a probability (and hence an entropy) is only defined
//! relative to a *context* — the full experimental arrangement. Within one
//! context, Shannon entropy obeys concavity and strong additivity; across
//! contexts those identities say nothing, so cross-context numbers are only
//! ever reported side by side with an explicit banner.
//!
//! * [`prob`] — contexts, alternative sets, (joint) distributions, and the
//!   calculus on them: marginalize, condition, compose, permute.
//! * [`entropy`] — Shannon entropy in bits or nats, conditional entropy,
//!   the two identity checks, and cross-context comparison reports.
//! * [`models`] — exact generators for photon filter chains, Stern–Gerlach
//!   spin chains, and ball-drawing processes, plus the built-in arrangements.
//! * [`dsl`] — a line-oriented text format for experiment files, with a
//!   round-tripping renderer and precise parse diagnostics.
//! * [`mc`] — a seeded, sharded Monte Carlo sampler that checks the analytic
//!   joints empirically.

#![forbid(unsafe_code)]

pub mod dsl;
pub mod entropy;
pub mod mc;
pub mod models;
pub mod prob;

pub use entropy::{
    compare_across_contexts, conditional_entropy, entropy, entropy_of, joint_entropy,
    property_report, CrossContextReport, EntropyConfig, EntropyError, EntropyReport,
    PropertyReport, Units, CROSS_CONTEXT_BANNER, PROPERTY_TOLERANCE,
};
pub use models::{builtin, builtin_contexts, ExperimentSpec, ModelError, DEFAULT_ALPHA};
pub use prob::{
    compose, require_same_context, AlternativeSet, Context, ContextTagged, Distribution,
    JointDistribution, ProbError, StageDistribution,
};
