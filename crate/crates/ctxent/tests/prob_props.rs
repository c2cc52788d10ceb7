//! Property tests for the probability calculus: Bayes round-trips, product
//! rule factorizations, and stage-permutation invariance on random joints.

use std::collections::BTreeMap;

use ctxent::prob::{compose, AlternativeSet, Context, JointDistribution};
use proptest::prelude::*;

const BAYES_TOLERANCE: f64 = 1e-12;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random two-stage joints, 2×2 up to 5×5, with a sprinkling of zero cells.
/// Cells are either exactly zero or comfortably positive, so conditioning on
/// any outcome of positive marginal probability is well defined.
fn arb_joint() -> impl Strategy<Value = JointDistribution> {
    ((2usize..=5), (2usize..=5))
        .prop_flat_map(|(rows, cols)| {
            let cell = prop_oneof![
                4 => 0.01..1.0f64,
                1 => Just(0.0),
            ];
            (
                Just(rows),
                Just(cols),
                proptest::collection::vec(cell, rows * cols),
            )
        })
        .prop_filter_map("needs positive total", |(rows, cols, raw)| {
            let total: f64 = raw.iter().sum();
            if total < 0.5 {
                return None;
            }
            let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let stages = vec![
                AlternativeSet::new("A", labels("a", rows)).unwrap(),
                AlternativeSet::new("B", labels("b", cols)).unwrap(),
            ];
            let context = Context::new("fuzz", "randomized joint").unwrap();
            JointDistribution::new(stages, context, probs).ok()
        })
}

proptest! {
    /// Conditioning then multiplying back by the marginal recovers every
    /// joint cell: P(aᵢ)·P(bⱼ|aᵢ) = P(aᵢ∧bⱼ).
    #[test]
    fn bayes_round_trip(joint in arb_joint()) {
        for stage in 0..2 {
            let marginal = joint.marginal_stage(stage).unwrap();
            for (i, &p_i) in marginal.probs().iter().enumerate() {
                if p_i <= 1e-12 {
                    continue;
                }
                let cond = joint.condition(stage, i).unwrap();
                let cond = cond.as_single().unwrap();
                for (j, &c) in cond.probs().iter().enumerate() {
                    let index = if stage == 0 { [i, j] } else { [j, i] };
                    let cell = joint.prob(&index).unwrap();
                    prop_assert!(
                        (p_i * c - cell).abs() <= BAYES_TOLERANCE,
                        "stage {stage} outcome {i}: {} vs {}",
                        p_i * c,
                        cell
                    );
                }
            }
        }
    }

    /// Factorizing through either stage and composing again rebuilds the
    /// joint (up to reordering for the second-stage factorization).
    #[test]
    fn product_rule_factorizations_agree(joint in arb_joint()) {
        for stage in 0..2 {
            let marginal = joint.marginal_stage(stage).unwrap();
            let mut conditionals = BTreeMap::new();
            for (i, outcome) in marginal.set().outcomes().iter().enumerate() {
                if marginal.probs()[i] <= 1e-12 {
                    continue;
                }
                let cond = joint.condition(stage, i).unwrap().into_single().unwrap();
                conditionals.insert(outcome.clone(), cond);
            }
            let rebuilt = compose(&marginal, &conditionals).unwrap();
            let reference = if stage == 0 {
                joint.clone()
            } else {
                joint.permute_stages(&[1, 0]).unwrap()
            };
            prop_assert_eq!(rebuilt.stages(), reference.stages());
            for (a, b) in rebuilt.probs().iter().zip(reference.probs()) {
                prop_assert!((a - b).abs() <= BAYES_TOLERANCE, "{a} vs {b}");
            }
        }
    }

    /// Reordering stages moves cells with their outcome tuples and leaves
    /// every marginal untouched.
    #[test]
    fn permutation_preserves_marginals_and_cells(joint in arb_joint()) {
        let swapped = joint.permute_stages(&[1, 0]).unwrap();
        for stage in 0..2 {
            let direct = joint.marginal_stage(stage).unwrap();
            let via_swap = swapped.marginal_stage(1 - stage).unwrap();
            prop_assert_eq!(direct.probs(), via_swap.probs());
        }
        for (flat, &p) in joint.probs().iter().enumerate() {
            let idx = joint.multi_index(flat);
            prop_assert_eq!(swapped.prob(&[idx[1], idx[0]]).unwrap(), p);
        }
        // a permutation is its own inverse here
        let back = swapped.permute_stages(&[1, 0]).unwrap();
        prop_assert_eq!(&back, &joint);
    }

    /// Marginals of a valid joint are valid distributions summing to one.
    #[test]
    fn marginals_validate(joint in arb_joint()) {
        for stage in 0..2 {
            let marginal = joint.marginal_stage(stage).unwrap();
            marginal.validate().unwrap();
            let sum: f64 = marginal.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
        }
    }

    /// Conditioning yields valid distributions in the same context.
    #[test]
    fn conditionals_validate(joint in arb_joint()) {
        use ctxent::prob::ContextTagged;
        for stage in 0..2 {
            let marginal = joint.marginal_stage(stage).unwrap();
            for (i, &p_i) in marginal.probs().iter().enumerate() {
                if p_i <= 1e-12 {
                    continue;
                }
                let cond = joint.condition(stage, i).unwrap();
                cond.validate().unwrap();
                prop_assert_eq!(cond.context().id(), "fuzz");
            }
        }
    }
}
