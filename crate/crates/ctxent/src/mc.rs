//! Seeded, sharded Monte Carlo verification of the analytic joints.
//!
//! Each sample walks the sequential model exactly as the generators do —
//! photon collapse, spin collapse, or ball draws — using the same probability
//! kernels, so structurally impossible outcomes (probability exactly zero)
//! are never sampled, not just rarely sampled.
//!
//! Reproducibility: shard `i` of a run draws from a ChaCha8 stream seeded
//! with a splitmix64-style mix of the master seed and `i`. Shard counts are
//! combined by elementwise addition, which is associative and commutative,
//! so results depend only on `(spec, n_samples, master_seed, shards)` and
//! never on thread count or merge order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{self, BallsProcessSpec, ExperimentSpec, ModelError, ModelSpec};
use crate::prob::{AlternativeSet, Context, ContextTagged, StageDistribution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("shard count must be at least 1")]
    ZeroShards,
    #[error("outcome spaces differ: {0}")]
    ShapeMismatch(String),
}

/// One reproducible sampling job.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub spec: ExperimentSpec,
    pub n_samples: u64,
    pub master_seed: u64,
    pub shards: u64,
}

impl SampleRun {
    pub fn new(
        spec: ExperimentSpec,
        n_samples: u64,
        master_seed: u64,
        shards: u64,
    ) -> Result<Self, McError> {
        if n_samples == 0 {
            return Err(McError::ZeroSamples);
        }
        if shards == 0 {
            return Err(McError::ZeroShards);
        }
        Ok(Self {
            spec,
            n_samples,
            master_seed,
            shards,
        })
    }
}

/// splitmix64 finalizer over the master seed offset by the shard index.
fn shard_seed(master: u64, shard: u64) -> u64 {
    let mut z = master ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Observed cell counts for an experiment's joint outcome space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalJoint {
    stages: Vec<AlternativeSet>,
    context: Context,
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalJoint {
    pub fn new(
        stages: Vec<AlternativeSet>,
        context: Context,
        counts: Vec<u64>,
    ) -> Result<Self, McError> {
        let size: usize = stages.iter().map(AlternativeSet::len).product();
        if counts.len() != size {
            return Err(McError::ShapeMismatch(format!(
                "{} cells for a {size}-cell outcome space",
                counts.len()
            )));
        }
        let n = counts.iter().sum();
        Ok(Self {
            stages,
            context,
            counts,
            n,
        })
    }

    pub fn stages(&self) -> &[AlternativeSet] {
        &self.stages
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Observed relative frequency p̂ of one flat cell.
    pub fn frequency(&self, cell: usize) -> f64 {
        self.counts[cell] as f64 / self.n as f64
    }

    /// Binomial standard error √(p̂(1−p̂)/n) of one flat cell.
    pub fn std_error(&self, cell: usize) -> f64 {
        let p = self.frequency(cell);
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// Outcome labels of one flat cell, in stage order.
    pub fn cell_labels(&self, mut flat: usize) -> Vec<&str> {
        let mut labels = vec![""; self.stages.len()];
        for (slot, set) in labels.iter_mut().zip(&self.stages).rev() {
            *slot = set.outcome(flat % set.len()).unwrap_or_default();
            flat /= set.len();
        }
        labels
    }
}

impl ContextTagged for EmpiricalJoint {
    fn context(&self) -> &Context {
        &self.context
    }
}

/// Per-sample walker with every table prebuilt.
enum Sampler<'a> {
    /// Polarization collapse; `None` is the absorbed state.
    Photon { init: f64, angles: Vec<f64> },
    Spin { init: f64, angles: Vec<f64> },
    Balls {
        spec: &'a BallsProcessSpec,
        start: Vec<usize>,
        value_index: Vec<BTreeMap<&'a str, usize>>,
    },
}

impl Sampler<'_> {
    fn build<'a>(
        spec: &'a ExperimentSpec,
        sets: &'a [AlternativeSet],
    ) -> Sampler<'a> {
        match &spec.model {
            ModelSpec::Photon(p) => Sampler::Photon {
                init: p.init_angle_deg,
                angles: p.filters.iter().map(|f| f.angle_deg).collect(),
            },
            ModelSpec::Spin(s) => Sampler::Spin {
                init: s.init_angle_deg,
                angles: s.axes.iter().map(|a| a.angle_deg).collect(),
            },
            ModelSpec::Balls(b) => Sampler::Balls {
                spec: b,
                start: models::initial_box(b),
                value_index: sets
                    .iter()
                    .map(|set| {
                        set.outcomes()
                            .iter()
                            .enumerate()
                            .map(|(i, v)| (v.as_str(), i))
                            .collect()
                    })
                    .collect(),
            },
        }
    }

    /// Walk one sample; returns the flat cell index.
    fn sample(&self, sizes: &[usize], rng: &mut ChaCha8Rng) -> usize {
        let mut cell = 0;
        match self {
            Sampler::Photon { init, angles } => {
                let mut state = Some(*init);
                for (&theta, &size) in angles.iter().zip(sizes) {
                    let pass = match state {
                        Some(phi) => {
                            let p = models::cos2_deg(theta - phi);
                            rng.gen::<f64>() < p
                        }
                        // absorbed photons never pass: exact zero, not "rare"
                        None => false,
                    };
                    state = if pass { Some(theta) } else { None };
                    cell = cell * size + usize::from(!pass);
                }
            }
            Sampler::Spin { init, angles } => {
                let mut spin = *init;
                for (&theta, &size) in angles.iter().zip(sizes) {
                    let up = rng.gen::<f64>() < models::born_up_deg(theta - spin);
                    spin = if up { theta } else { theta + 180.0 };
                    cell = cell * size + usize::from(!up);
                }
            }
            Sampler::Balls {
                spec,
                start,
                value_index,
            } => {
                let mut current = start.clone();
                for (stage, (st, &size)) in spec.stages.iter().zip(sizes).enumerate() {
                    // generate() already enumerated every reachable path, so
                    // the box cannot be empty and the attribute must exist
                    let pos = rng.gen_range(0..current.len());
                    let ball = &spec.universe[current[pos]];
                    let observed = ball.attributes[&st.observe].as_str();
                    let outcome = value_index[stage][observed];
                    current = models::refill_box(&spec.universe, &current, pos, observed, &st.refill);
                    cell = cell * size + outcome;
                }
            }
        }
        cell
    }
}

/// Run the job: walk `n_samples` paths across `shards` deterministic streams
/// and tally the joint outcome counts.
pub fn simulate(run: &SampleRun) -> Result<EmpiricalJoint, McError> {
    if run.n_samples == 0 {
        return Err(McError::ZeroSamples);
    }
    if run.shards == 0 {
        return Err(McError::ZeroShards);
    }
    // validates the spec and fixes the outcome space
    let analytic = run.spec.generate()?;
    let sets: Vec<AlternativeSet> = analytic.stage_sets().into_iter().cloned().collect();
    let sizes: Vec<usize> = sets.iter().map(AlternativeSet::len).collect();
    let cells: usize = sizes.iter().product();
    let sampler = Sampler::build(&run.spec, &sets);

    let base = run.n_samples / run.shards;
    let remainder = run.n_samples % run.shards;
    let counts = (0..run.shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(run.master_seed, shard));
            let quota = base + u64::from(shard < remainder);
            let mut counts = vec![0u64; cells];
            for _ in 0..quota {
                counts[sampler.sample(&sizes, &mut rng)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; cells],
            |mut acc, shard_counts| {
                for (a, c) in acc.iter_mut().zip(&shard_counts) {
                    *a += c;
                }
                acc
            },
        );

    EmpiricalJoint::new(sets, analytic.context().clone(), counts)
}

/// One cell's empirical-vs-analytic verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    pub outcomes: Vec<String>,
    pub analytic: f64,
    pub empirical: f64,
    pub std_error: f64,
    /// Acceptance bound max(4·SE, 10/n).
    pub bound: f64,
    pub pass: bool,
}

/// Cell-by-cell comparison of a sampling run against the analytic joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub context_id: String,
    pub n: u64,
    pub cells: Vec<CellCheck>,
    pub all_pass: bool,
}

/// Verdict per cell: |p̂ − p| ≤ max(4·SE, 10/n).
pub fn compare(
    emp: &EmpiricalJoint,
    analytic: &StageDistribution,
) -> Result<McComparison, McError> {
    if emp.context().id() != analytic.context().id() {
        return Err(McError::ShapeMismatch(format!(
            "context '{}' vs '{}'",
            emp.context().id(),
            analytic.context().id()
        )));
    }
    let analytic_sets = analytic.stage_sets();
    if emp.stages().len() != analytic_sets.len()
        || emp
            .stages()
            .iter()
            .zip(&analytic_sets)
            .any(|(a, b)| a != *b)
    {
        return Err(McError::ShapeMismatch(format!(
            "stage sets of '{}' do not match",
            emp.context().id()
        )));
    }

    let floor = 10.0 / emp.n() as f64;
    let probs = analytic.flat_probs();
    let mut cells = Vec::with_capacity(probs.len());
    let mut all_pass = true;
    for (i, &p) in probs.iter().enumerate() {
        let empirical = emp.frequency(i);
        let std_error = emp.std_error(i);
        let bound = (4.0 * std_error).max(floor);
        let pass = (empirical - p).abs() <= bound;
        all_pass &= pass;
        cells.push(CellCheck {
            outcomes: emp.cell_labels(i).iter().map(|s| (*s).to_owned()).collect(),
            analytic: p,
            empirical,
            std_error,
            bound,
            pass,
        });
    }
    Ok(McComparison {
        context_id: emp.context().id().to_owned(),
        n: emp.n(),
        cells,
        all_pass,
    })
}
