//! Context-tagged discrete probability calculus.
//!
//! Nothing in this module is a bare number: every [`Distribution`] and
//! [`JointDistribution`] carries the [`Context`] — the experimental
//! arrangement — it refers to. Marginalization, conditioning and product-rule
//! composition all stay inside that context; [`require_same_context`] is the
//! gate every identity check passes through before relating two quantities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Absolute tolerance for Σp = 1.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Slack below zero permitted for probabilities produced by arithmetic.
pub const LOWER_TOLERANCE: f64 = -1e-12;
/// At or below this, a probability is structurally zero for conditioning.
pub const ZERO_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("context id is empty")]
    EmptyContextId,
    #[error("alternative set '{set}' has no outcomes")]
    EmptyAlternativeSet { set: String },
    #[error("duplicate outcome '{outcome}' in set '{set}'")]
    DuplicateOutcome { set: String, outcome: String },
    #[error("set '{set}' has {expected} outcomes but {found} probabilities")]
    LengthMismatch {
        set: String,
        expected: usize,
        found: usize,
    },
    #[error("negative probability {value:e} at entry {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum} (off by {residual:e})")]
    NotNormalized { sum: f64, residual: f64 },
    #[error("a joint distribution needs at least two stages")]
    TooFewStages,
    #[error("duplicate stage name '{0}'")]
    DuplicateStageName(String),
    #[error("keep set is empty")]
    EmptyKeepSet,
    #[error("stage index {index} out of range for {stages} stages")]
    IndexOutOfRange { index: usize, stages: usize },
    #[error("set '{set}' has no outcome index {index}")]
    NoSuchOutcome { set: String, index: usize },
    #[error("cannot condition on '{outcome}': its probability {prob:e} is zero")]
    ConditionOnZeroProbability { outcome: String, prob: f64 },
    #[error("context mismatch: {}", ids.join(" vs "))]
    ContextMismatch { ids: Vec<String> },
    #[error("no conditional distribution for prior outcome '{outcome}'")]
    MissingConditional { outcome: String },
    #[error("conditional for '{outcome}' ranges over set '{found}', expected '{expected}'")]
    ConditionalSetMismatch {
        outcome: String,
        expected: String,
        found: String,
    },
    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),
}

/// One experimental arrangement.
///
/// Identity is the id string alone: two values with equal ids denote the same
/// context regardless of their descriptions, and no operation ever merges two
/// distinct contexts.
#[derive(Debug, Clone)]
pub struct Context {
    id: String,
    description: String,
}

impl Context {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Result<Self, ProbError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ProbError::EmptyContextId);
        }
        Ok(Self {
            id,
            description: description.into(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Context {}

impl std::hash::Hash for Context {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// An ordered set of mutually exclusive, exhaustive outcome labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternativeSet {
    name: String,
    outcomes: Vec<String>,
}

impl AlternativeSet {
    pub fn new<I, S>(name: impl Into<String>, outcomes: I) -> Result<Self, ProbError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        let outcomes: Vec<String> = outcomes.into_iter().map(Into::into).collect();
        if outcomes.is_empty() {
            return Err(ProbError::EmptyAlternativeSet { set: name });
        }
        let mut seen = BTreeSet::new();
        for outcome in &outcomes {
            if !seen.insert(outcome.as_str()) {
                return Err(ProbError::DuplicateOutcome {
                    set: name,
                    outcome: outcome.clone(),
                });
            }
        }
        Ok(Self { name, outcomes })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcome(&self, index: usize) -> Option<&str> {
        self.outcomes.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }
}

/// Anything that carries a context tag.
pub trait ContextTagged {
    fn context(&self) -> &Context;
}

/// Probabilities for one alternative set within one context.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    set: AlternativeSet,
    context: Context,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(set: AlternativeSet, context: Context, probs: Vec<f64>) -> Result<Self, ProbError> {
        let dist = Self {
            set,
            context,
            probs,
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn set(&self) -> &AlternativeSet {
        &self.set
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of an outcome by label.
    pub fn prob(&self, label: &str) -> Option<f64> {
        self.set.index_of(label).map(|i| self.probs[i])
    }

    pub fn validate(&self) -> Result<(), ProbError> {
        if self.probs.len() != self.set.len() {
            return Err(ProbError::LengthMismatch {
                set: self.set.name.clone(),
                expected: self.set.len(),
                found: self.probs.len(),
            });
        }
        validate_probs(&self.probs)
    }
}

impl ContextTagged for Distribution {
    fn context(&self) -> &Context {
        &self.context
    }
}

/// Probabilities over the product of several stage outcome sets, all within
/// one context. Cells are stored row-major: the last stage varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    stages: Vec<AlternativeSet>,
    context: Context,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(
        stages: Vec<AlternativeSet>,
        context: Context,
        probs: Vec<f64>,
    ) -> Result<Self, ProbError> {
        let joint = Self {
            stages,
            context,
            probs,
        };
        joint.validate()?;
        Ok(joint)
    }

    pub fn stages(&self) -> &[AlternativeSet] {
        &self.stages
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn stage_index(&self, name: &str) -> Option<usize> {
        self.stages.iter().position(|s| s.name() == name)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.stages.iter().map(AlternativeSet::len).collect()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Flat cell index for a multi-index, last stage fastest.
    pub fn flat_index(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.stages.len() {
            return None;
        }
        let mut flat = 0;
        for (i, set) in index.iter().zip(&self.stages) {
            if *i >= set.len() {
                return None;
            }
            flat = flat * set.len() + i;
        }
        Some(flat)
    }

    /// Multi-index for a flat cell index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.stages.len()];
        for (slot, set) in index.iter_mut().zip(&self.stages).rev() {
            *slot = flat % set.len();
            flat /= set.len();
        }
        index
    }

    pub fn prob(&self, index: &[usize]) -> Option<f64> {
        self.flat_index(index).map(|i| self.probs[i])
    }

    /// Outcome labels of one cell, in stage order.
    pub fn cell_labels(&self, flat: usize) -> Vec<&str> {
        self.multi_index(flat)
            .iter()
            .zip(&self.stages)
            .map(|(&i, set)| set.outcome(i).unwrap_or_default())
            .collect()
    }

    pub fn validate(&self) -> Result<(), ProbError> {
        if self.stages.len() < 2 {
            return Err(ProbError::TooFewStages);
        }
        let mut names = BTreeSet::new();
        for set in &self.stages {
            if !names.insert(set.name()) {
                return Err(ProbError::DuplicateStageName(set.name().to_owned()));
            }
        }
        let size: usize = self.stages.iter().map(AlternativeSet::len).product();
        if self.probs.len() != size {
            return Err(ProbError::LengthMismatch {
                set: self
                    .stages
                    .iter()
                    .map(AlternativeSet::name)
                    .collect::<Vec<_>>()
                    .join("∧"),
                expected: size,
                found: self.probs.len(),
            });
        }
        validate_probs(&self.probs)
    }

    /// Sum out every stage not in `keep`. The kept stages appear in their
    /// original order; keeping a single stage yields a plain distribution.
    pub fn marginalize(&self, keep: &[usize]) -> Result<StageDistribution, ProbError> {
        if keep.is_empty() {
            return Err(ProbError::EmptyKeepSet);
        }
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&i| i >= self.stages.len()) {
            return Err(ProbError::IndexOutOfRange {
                index: bad,
                stages: self.stages.len(),
            });
        }
        if kept.len() == self.stages.len() {
            return Ok(StageDistribution::Joint(self.clone()));
        }

        let kept_sets: Vec<AlternativeSet> = kept.iter().map(|&i| self.stages[i].clone()).collect();
        let size: usize = kept_sets.iter().map(AlternativeSet::len).product();
        let mut sums = vec![0.0; size];
        for (flat, &p) in self.probs.iter().enumerate() {
            let index = self.multi_index(flat);
            let mut out = 0;
            for &i in &kept {
                out = out * self.stages[i].len() + index[i];
            }
            sums[out] += p;
        }

        if let [set] = kept_sets.as_slice() {
            Distribution::new(set.clone(), self.context.clone(), sums).map(StageDistribution::Single)
        } else {
            JointDistribution::new(kept_sets, self.context.clone(), sums)
                .map(StageDistribution::Joint)
        }
    }

    /// Marginal distribution of a single stage.
    pub fn marginal_stage(&self, stage: usize) -> Result<Distribution, ProbError> {
        match self.marginalize(&[stage])? {
            StageDistribution::Single(d) => Ok(d),
            StageDistribution::Joint(_) => unreachable!("one kept stage yields a distribution"),
        }
    }

    /// Update on an observed outcome of one stage: probabilities of the
    /// remaining stages given that outcome, in the same context.
    pub fn condition(&self, stage: usize, outcome: usize) -> Result<StageDistribution, ProbError> {
        if stage >= self.stages.len() {
            return Err(ProbError::IndexOutOfRange {
                index: stage,
                stages: self.stages.len(),
            });
        }
        let set = &self.stages[stage];
        let label = set
            .outcome(outcome)
            .ok_or_else(|| ProbError::NoSuchOutcome {
                set: set.name().to_owned(),
                index: outcome,
            })?
            .to_owned();

        let mut marginal = 0.0;
        for (flat, &p) in self.probs.iter().enumerate() {
            if self.multi_index(flat)[stage] == outcome {
                marginal += p;
            }
        }
        if marginal <= ZERO_CUTOFF {
            return Err(ProbError::ConditionOnZeroProbability {
                outcome: label,
                prob: marginal,
            });
        }

        let rest: Vec<usize> = (0..self.stages.len()).filter(|&i| i != stage).collect();
        let rest_sets: Vec<AlternativeSet> = rest.iter().map(|&i| self.stages[i].clone()).collect();
        let size: usize = rest_sets.iter().map(AlternativeSet::len).product();
        let mut probs = vec![0.0; size];
        for (flat, &p) in self.probs.iter().enumerate() {
            let index = self.multi_index(flat);
            if index[stage] != outcome {
                continue;
            }
            let mut out = 0;
            for &i in &rest {
                out = out * self.stages[i].len() + index[i];
            }
            probs[out] = p / marginal;
        }

        if let [set] = rest_sets.as_slice() {
            Distribution::new(set.clone(), self.context.clone(), probs)
                .map(StageDistribution::Single)
        } else {
            JointDistribution::new(rest_sets, self.context.clone(), probs)
                .map(StageDistribution::Joint)
        }
    }

    /// Reorder stages. Cell values move with their outcome tuples, so the
    /// multiset of probabilities is unchanged.
    pub fn permute_stages(&self, perm: &[usize]) -> Result<JointDistribution, ProbError> {
        let s = self.stages.len();
        let mut seen = vec![false; s];
        if perm.len() != s || !perm.iter().all(|&i| i < s && !std::mem::replace(&mut seen[i], true))
        {
            return Err(ProbError::InvalidPermutation(s));
        }
        let new_stages: Vec<AlternativeSet> = perm.iter().map(|&i| self.stages[i].clone()).collect();
        let mut probs = vec![0.0; self.probs.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let index = self.multi_index(flat);
            let mut out = 0;
            for (&src, set) in perm.iter().zip(&new_stages) {
                out = out * set.len() + index[src];
            }
            probs[out] = p;
        }
        JointDistribution::new(new_stages, self.context.clone(), probs)
    }
}

impl ContextTagged for JointDistribution {
    fn context(&self) -> &Context {
        &self.context
    }
}

/// Result of reducing or generating a distribution over one or more stages.
#[derive(Debug, Clone, PartialEq)]
pub enum StageDistribution {
    Single(Distribution),
    Joint(JointDistribution),
}

impl StageDistribution {
    pub fn stage_count(&self) -> usize {
        match self {
            Self::Single(_) => 1,
            Self::Joint(j) => j.stage_count(),
        }
    }

    pub fn stage_sets(&self) -> Vec<&AlternativeSet> {
        match self {
            Self::Single(d) => vec![d.set()],
            Self::Joint(j) => j.stages().iter().collect(),
        }
    }

    pub fn flat_probs(&self) -> &[f64] {
        match self {
            Self::Single(d) => d.probs(),
            Self::Joint(j) => j.probs(),
        }
    }

    /// Outcome labels of one flat cell, in stage order.
    pub fn cell_labels(&self, flat: usize) -> Vec<&str> {
        match self {
            Self::Single(d) => vec![d.set().outcome(flat).unwrap_or_default()],
            Self::Joint(j) => j.cell_labels(flat),
        }
    }

    pub fn as_single(&self) -> Option<&Distribution> {
        match self {
            Self::Single(d) => Some(d),
            Self::Joint(_) => None,
        }
    }

    pub fn as_joint(&self) -> Option<&JointDistribution> {
        match self {
            Self::Joint(j) => Some(j),
            Self::Single(_) => None,
        }
    }

    pub fn into_single(self) -> Option<Distribution> {
        match self {
            Self::Single(d) => Some(d),
            Self::Joint(_) => None,
        }
    }

    pub fn into_joint(self) -> Option<JointDistribution> {
        match self {
            Self::Joint(j) => Some(j),
            Self::Single(_) => None,
        }
    }

    pub fn validate(&self) -> Result<(), ProbError> {
        match self {
            Self::Single(d) => d.validate(),
            Self::Joint(j) => j.validate(),
        }
    }
}

impl ContextTagged for StageDistribution {
    fn context(&self) -> &Context {
        match self {
            Self::Single(d) => d.context(),
            Self::Joint(j) => j.context(),
        }
    }
}

/// Check that a slice of probabilities is a distribution.
fn validate_probs(probs: &[f64]) -> Result<(), ProbError> {
    for (index, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < LOWER_TOLERANCE {
            return Err(ProbError::NegativeProbability { index, value: p });
        }
    }
    let sum: f64 = probs.iter().sum();
    let residual = (sum - 1.0).abs();
    if residual > SUM_TOLERANCE {
        return Err(ProbError::NotNormalized { sum, residual });
    }
    Ok(())
}

/// Product rule: combine a prior over one set with a conditional distribution
/// per prior outcome into the two-stage joint, all within one context.
///
/// Conditionals are keyed by prior outcome label; outcomes with zero prior
/// probability may omit theirs (those rows are zero).
pub fn compose(
    prior: &Distribution,
    conditionals: &BTreeMap<String, Distribution>,
) -> Result<JointDistribution, ProbError> {
    let mut tagged: Vec<&dyn ContextTagged> = vec![prior];
    for cond in conditionals.values() {
        tagged.push(cond);
    }
    require_same_context(&tagged)?;

    let reference = conditionals
        .values()
        .next()
        .map(|d| d.set().clone())
        .ok_or_else(|| ProbError::MissingConditional {
            outcome: prior
                .set()
                .outcomes()
                .first()
                .cloned()
                .unwrap_or_default(),
        })?;
    for (outcome, cond) in conditionals {
        if cond.set() != &reference {
            return Err(ProbError::ConditionalSetMismatch {
                outcome: outcome.clone(),
                expected: reference.name().to_owned(),
                found: cond.set().name().to_owned(),
            });
        }
    }

    let m = reference.len();
    let mut probs = vec![0.0; prior.set().len() * m];
    for (i, outcome) in prior.set().outcomes().iter().enumerate() {
        let p = prior.probs()[i];
        match conditionals.get(outcome) {
            Some(cond) => {
                for (j, &c) in cond.probs().iter().enumerate() {
                    probs[i * m + j] = p * c;
                }
            }
            None if p > 0.0 => {
                return Err(ProbError::MissingConditional {
                    outcome: outcome.clone(),
                });
            }
            None => {} // zero-probability row stays zero
        }
    }

    JointDistribution::new(
        vec![prior.set().clone(), reference],
        prior.context().clone(),
        probs,
    )
}

/// The same-context gate: ok iff every item carries the same context id.
pub fn require_same_context(items: &[&dyn ContextTagged]) -> Result<(), ProbError> {
    let mut distinct: Vec<String> = Vec::new();
    for item in items {
        let id = item.context().id();
        if !distinct.iter().any(|seen| seen == id) {
            distinct.push(id.to_owned());
        }
    }
    if distinct.len() > 1 {
        return Err(ProbError::ContextMismatch { ids: distinct });
    }
    Ok(())
}
