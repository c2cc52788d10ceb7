//! Shannon entropy of context-tagged distributions, and the identities that
//! make it a consistent uncertainty measure *within* one context.
//!
//! Two checks matter here. Concavity: observing a stage cannot raise the
//! expected uncertainty about the rest, H[P(rest)] ≥ H[P(rest|stage)].
//! Strong additivity: the joint uncertainty decomposes through either stage,
//! H[P(all)] = H[P(stage)] + H[P(rest|stage)], whichever stage goes first.
//! Both are identities of probabilities tied to a single context, so every
//! entry point here goes through the same-context gate. Numbers from
//! *different* contexts can still be compared as numbers — but only via
//! [`CrossContextReport`], which carries [`CROSS_CONTEXT_BANNER`] so the
//! caveat cannot be silently dropped.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{
    Context, ContextTagged, Distribution, JointDistribution, ProbError, StageDistribution,
    ZERO_CUTOFF,
};

/// Absolute tolerance for the concavity and strong-additivity residuals.
pub const PROPERTY_TOLERANCE: f64 = 1e-9;

/// Caveat attached to every numerical comparison of entropies from different
/// contexts. The identities above say nothing about such pairs.
pub const CROSS_CONTEXT_BANNER: &str =
    "cross-context comparison — not a property of Shannon entropy";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("entropy scale must be finite and positive, got {0}")]
    InvalidScale(f64),
    #[error("both operands live in context '{0}'; within one context use an entropy report")]
    SameContext(String),
}

/// Logarithm base for entropy values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Bits => "bits",
            Units::Nats => "nats",
        })
    }
}

/// Units plus the positive constant K in H = −K Σ p·log p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConfig {
    units: Units,
    scale: f64,
}

impl EntropyConfig {
    pub fn new(units: Units, scale: f64) -> Result<Self, EntropyError> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(EntropyError::InvalidScale(scale));
        }
        Ok(Self { units, scale })
    }

    pub fn bits() -> Self {
        Self {
            units: Units::Bits,
            scale: 1.0,
        }
    }

    pub fn nats() -> Self {
        Self {
            units: Units::Nats,
            scale: 1.0,
        }
    }

    pub fn with_units(units: Units) -> Self {
        match units {
            Units::Bits => Self::bits(),
            Units::Nats => Self::nats(),
        }
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self::bits()
    }
}

/// H = −K Σ p·log p with 0·log 0 := 0.
///
/// Each term takes the log in the requested base directly, so distributions
/// whose probabilities are powers of two give bit-exact entropies in bits.
fn shannon(probs: &[f64], cfg: &EntropyConfig) -> f64 {
    let mut sum = 0.0;
    for &p in probs {
        if p > 0.0 {
            let p = p.min(1.0);
            sum += match cfg.units {
                Units::Bits => p * p.log2(),
                Units::Nats => p * p.ln(),
            };
        }
    }
    let h = -cfg.scale * sum;
    // a certain outcome has exactly zero uncertainty, not negative zero
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

/// Entropy of a single-stage distribution.
pub fn entropy(dist: &Distribution, cfg: &EntropyConfig) -> f64 {
    shannon(dist.probs(), cfg)
}

/// Entropy of the full joint, treating each cell as one outcome.
pub fn joint_entropy(joint: &JointDistribution, cfg: &EntropyConfig) -> f64 {
    shannon(joint.probs(), cfg)
}

/// Entropy of either shape of stage distribution.
pub fn entropy_of(dist: &StageDistribution, cfg: &EntropyConfig) -> f64 {
    shannon(dist.flat_probs(), cfg)
}

/// Expected remaining uncertainty after observing one stage:
/// Σᵢ P(aᵢ)·H[P(rest|aᵢ)], skipping outcomes of structurally zero probability.
pub fn conditional_entropy(
    joint: &JointDistribution,
    given: usize,
    cfg: &EntropyConfig,
) -> Result<f64, ProbError> {
    let marginal = joint.marginal_stage(given)?;
    let mut total = 0.0;
    for (i, &p) in marginal.probs().iter().enumerate() {
        if p <= ZERO_CUTOFF {
            continue;
        }
        let rest = joint.condition(given, i)?;
        total += p * entropy_of(&rest, cfg);
    }
    Ok(total)
}

/// Stage names other than `given`, joined for display.
fn rest_label(joint: &JointDistribution, given: usize) -> String {
    joint
        .stages()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != given)
        .map(|(_, s)| s.name())
        .collect::<Vec<_>>()
        .join("∧")
}

/// Marginal, conditional and joint entropies of one context's distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub context_id: String,
    pub units: Units,
    pub stage_entropies: Vec<StageEntropy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditional_entropies: Vec<ConditionalEntropy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntropy {
    pub stage: String,
    pub value: f64,
}

/// H[P(target|given)] within the report's context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEntropy {
    pub target: String,
    pub given: String,
    pub value: f64,
}

impl EntropyReport {
    pub fn for_distribution(dist: &Distribution, cfg: &EntropyConfig) -> Self {
        Self {
            context_id: dist.context().id().to_owned(),
            units: cfg.units(),
            stage_entropies: vec![StageEntropy {
                stage: dist.set().name().to_owned(),
                value: entropy(dist, cfg),
            }],
            conditional_entropies: Vec::new(),
            joint_entropy: None,
        }
    }

    pub fn for_joint(joint: &JointDistribution, cfg: &EntropyConfig) -> Result<Self, ProbError> {
        let mut stage_entropies = Vec::new();
        let mut conditional_entropies = Vec::new();
        for (i, set) in joint.stages().iter().enumerate() {
            stage_entropies.push(StageEntropy {
                stage: set.name().to_owned(),
                value: entropy(&joint.marginal_stage(i)?, cfg),
            });
            conditional_entropies.push(ConditionalEntropy {
                target: rest_label(joint, i),
                given: set.name().to_owned(),
                value: conditional_entropy(joint, i, cfg)?,
            });
        }
        Ok(Self {
            context_id: joint.context().id().to_owned(),
            units: cfg.units(),
            stage_entropies,
            conditional_entropies,
            joint_entropy: Some(joint_entropy(joint, cfg)),
        })
    }

    pub fn for_stage_distribution(
        dist: &StageDistribution,
        cfg: &EntropyConfig,
    ) -> Result<Self, ProbError> {
        match dist {
            StageDistribution::Single(d) => Ok(Self::for_distribution(d, cfg)),
            StageDistribution::Joint(j) => Self::for_joint(j, cfg),
        }
    }
}

/// One concavity check: H[P(target)] ≥ H[P(target|conditioned_on)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityCheck {
    pub conditioned_on: String,
    pub target: String,
    pub prior_entropy: f64,
    pub conditional_entropy: f64,
    /// prior − conditional; the identity requires this to be ≥ 0.
    pub difference: f64,
    pub holds: bool,
}

pub fn check_concavity(
    joint: &JointDistribution,
    given: usize,
    cfg: &EntropyConfig,
) -> Result<ConcavityCheck, ProbError> {
    let rest: Vec<usize> = (0..joint.stage_count()).filter(|&i| i != given).collect();
    let prior = entropy_of(&joint.marginalize(&rest)?, cfg);
    let conditional = conditional_entropy(joint, given, cfg)?;
    let difference = prior - conditional;
    Ok(ConcavityCheck {
        conditioned_on: joint.stages()[given].name().to_owned(),
        target: rest_label(joint, given),
        prior_entropy: prior,
        conditional_entropy: conditional,
        difference,
        holds: difference >= -PROPERTY_TOLERANCE,
    })
}

/// One chain-rule decomposition of the joint entropy, taking `first` first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub first: String,
    pub stage_entropy: f64,
    pub conditional_entropy: f64,
    pub sum: f64,
}

/// Strong additivity: the joint entropy equals every chain-rule decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongAdditivityCheck {
    pub joint_entropy: f64,
    pub decompositions: Vec<Decomposition>,
    /// Largest pairwise gap among the joint entropy and all decompositions.
    pub max_residual: f64,
    pub holds: bool,
}

pub fn check_strong_additivity(
    joint: &JointDistribution,
    cfg: &EntropyConfig,
) -> Result<StrongAdditivityCheck, ProbError> {
    let total = joint_entropy(joint, cfg);
    let mut decompositions = Vec::new();
    for (i, set) in joint.stages().iter().enumerate() {
        let stage = entropy(&joint.marginal_stage(i)?, cfg);
        let conditional = conditional_entropy(joint, i, cfg)?;
        decompositions.push(Decomposition {
            first: set.name().to_owned(),
            stage_entropy: stage,
            conditional_entropy: conditional,
            sum: stage + conditional,
        });
    }
    let mut low = total;
    let mut high = total;
    for d in &decompositions {
        low = low.min(d.sum);
        high = high.max(d.sum);
    }
    let max_residual = high - low;
    Ok(StrongAdditivityCheck {
        joint_entropy: total,
        decompositions,
        max_residual,
        holds: max_residual <= PROPERTY_TOLERANCE,
    })
}

/// Both identity checks for one joint distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub context_id: String,
    pub units: Units,
    pub concavity: Vec<ConcavityCheck>,
    pub strong_additivity: StrongAdditivityCheck,
    pub holds: bool,
}

pub fn property_report(
    joint: &JointDistribution,
    cfg: &EntropyConfig,
) -> Result<PropertyReport, ProbError> {
    let mut concavity = Vec::new();
    for i in 0..joint.stage_count() {
        concavity.push(check_concavity(joint, i, cfg)?);
    }
    let strong_additivity = check_strong_additivity(joint, cfg)?;
    let holds = concavity.iter().all(|c| c.holds) && strong_additivity.holds;
    Ok(PropertyReport {
        context_id: joint.context().id().to_owned(),
        units: cfg.units(),
        concavity,
        strong_additivity,
        holds,
    })
}

/// A numerical comparison of one quantity across two *different* contexts.
///
/// Constructing one for a shared context fails: within a context the
/// relations between entropies are the identities above, not a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossContextReport {
    pub a: String,
    pub b: String,
    pub quantity: String,
    pub values: [f64; 2],
    pub banner: String,
}

impl CrossContextReport {
    pub fn new(
        a: &Context,
        b: &Context,
        quantity: impl Into<String>,
        values: [f64; 2],
    ) -> Result<Self, EntropyError> {
        if a.id() == b.id() {
            return Err(EntropyError::SameContext(a.id().to_owned()));
        }
        Ok(Self {
            a: a.id().to_owned(),
            b: b.id().to_owned(),
            quantity: quantity.into(),
            values,
            banner: CROSS_CONTEXT_BANNER.to_owned(),
        })
    }

    pub fn difference(&self) -> f64 {
        self.values[0] - self.values[1]
    }
}

/// Compare the joint entropies of two contexts' distributions.
pub fn compare_across_contexts(
    a: &JointDistribution,
    b: &JointDistribution,
    cfg: &EntropyConfig,
) -> Result<CrossContextReport, EntropyError> {
    CrossContextReport::new(
        a.context(),
        b.context(),
        "joint entropy",
        [joint_entropy(a, cfg), joint_entropy(b, cfg)],
    )
}
