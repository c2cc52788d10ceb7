//! The built-in verification suite: recompute every published entropy and
//! probability across all built-in arrangements and check each against its
//! two-decimal quote (± 0.005), its exact value, or its identity bound.

use std::collections::BTreeMap;
use std::error::Error;

use ctxent::entropy::{
    check_strong_additivity, compare_across_contexts, conditional_entropy, entropy, entropy_of,
    joint_entropy, CrossContextReport, EntropyConfig, CROSS_CONTEXT_BANNER,
};
use ctxent::models::{builtin_contexts, DEFAULT_ALPHA};
use ctxent::prob::{JointDistribution, StageDistribution};

use crate::report::{ContextBlock, SuiteBlock, SuiteRow};

/// Two-decimal quotes are honoured to half of the last printed digit.
const QUOTE_TOLERANCE: f64 = 0.005;
/// Identity residuals must vanish to within accumulated rounding.
const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Distributions claimed equal must agree entrywise this tightly.
const CELL_TOLERANCE: f64 = 1e-12;

pub struct SuiteOutcome {
    pub contexts: Vec<ContextBlock>,
    pub comparisons: Vec<CrossContextReport>,
    pub block: SuiteBlock,
}

/// Run every built-in arrangement at the default tilt and check the full
/// matrix of published values. `corrupt` deliberately breaks the first row,
/// for exercising the failure path end to end.
pub fn run_suite(corrupt: bool) -> Result<SuiteOutcome, Box<dyn Error>> {
    let cfg = EntropyConfig::bits();
    let mut contexts = Vec::new();
    let mut dists: BTreeMap<String, StageDistribution> = BTreeMap::new();
    for (name, spec) in builtin_contexts(DEFAULT_ALPHA) {
        let dist = spec.generate()?;
        contexts.push(ContextBlock::build(&dist, &cfg)?);
        dists.insert(name, dist);
    }
    let joint = |name: &str| -> &JointDistribution {
        dists[name].as_joint().expect("multi-stage builtin")
    };
    // first-stage entropy plus the remainder's conditional entropy
    let chain_sum = |j: &JointDistribution| -> Result<f64, Box<dyn Error>> {
        Ok(entropy(&j.marginal_stage(0)?, &cfg) + conditional_entropy(j, 0, &cfg)?)
    };
    let banner = || Some(CROSS_CONTEXT_BANNER.to_owned());

    let mut rows = Vec::new();
    let mut comparisons = Vec::new();

    // one blocking filter leaves no uncertainty
    rows.push(SuiteRow::verdict(
        "l_one",
        "H(B)",
        0.0,
        entropy_of(&dists["l_one"], &cfg),
        0.0,
        None,
    ));

    // inserting the diagonal filter re-opens the second outcome
    let l_two = joint("l_two");
    rows.push(SuiteRow::verdict(
        "l_two",
        "H(B)",
        0.81,
        entropy(&l_two.marginal_stage(1)?, &cfg),
        QUOTE_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "l_two",
        "H(B|A)",
        0.5,
        conditional_entropy(l_two, 0, &cfg)?,
        0.0,
        None,
    ));

    // tilted spin chains: measurement order changes the joint entropy
    let m = joint("m");
    let m_inv = joint("m_inv");
    rows.push(SuiteRow::verdict(
        "m",
        "H(A∧B)",
        1.20,
        joint_entropy(m, &cfg),
        QUOTE_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "m",
        "strong-additivity residual",
        0.0,
        check_strong_additivity(m, &cfg)?.max_residual,
        RESIDUAL_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "m_inv",
        "H(B∧A)",
        1.60,
        joint_entropy(m_inv, &cfg),
        QUOTE_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "m_inv",
        "strong-additivity residual",
        0.0,
        check_strong_additivity(m_inv, &cfg)?.max_residual,
        RESIDUAL_TOLERANCE,
        None,
    ));
    let m_cross = compare_across_contexts(m, m_inv, &cfg)?;
    rows.push(SuiteRow::verdict(
        "m vs m_inv",
        "joint-entropy difference",
        -0.40,
        m_cross.difference(),
        QUOTE_TOLERANCE,
        banner(),
    ));
    comparisons.push(m_cross);

    // colour/composition urn: both orders total exactly 1.5 bits
    let n = joint("n");
    let n_inv = joint("n_inv");
    rows.push(SuiteRow::verdict(
        "n",
        "H(A)",
        1.0,
        entropy(&n.marginal_stage(0)?, &cfg),
        0.0,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "n",
        "H(B|A)",
        0.5,
        conditional_entropy(n, 0, &cfg)?,
        0.0,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "n",
        "H(A) + H(B|A)",
        1.5,
        chain_sum(n)?,
        0.0,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "n_inv",
        "H(B) + H(A|B)",
        1.5,
        chain_sum(n_inv)?,
        0.0,
        None,
    ));
    let n_cross = compare_across_contexts(n, n_inv, &cfg)?;
    rows.push(SuiteRow::verdict(
        "n vs n_inv",
        "joint-entropy difference",
        0.0,
        n_cross.difference(),
        0.0,
        banner(),
    ));
    comparisons.push(n_cross);

    // removal urns: different first draws leave different total uncertainty
    let k = joint("k");
    let k_inv = joint("k_inv");
    rows.push(SuiteRow::verdict(
        "k",
        "H(A)",
        0.92,
        entropy(&k.marginal_stage(0)?, &cfg),
        QUOTE_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "k",
        "H(B|A)",
        0.67,
        conditional_entropy(k, 0, &cfg)?,
        QUOTE_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "k",
        "H(A) + H(B|A)",
        1.58,
        chain_sum(k)?,
        QUOTE_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "k_inv",
        "H(B) + H(A|B)",
        1.53,
        chain_sum(k_inv)?,
        QUOTE_TOLERANCE,
        None,
    ));

    // bisector-prepared spins: axis order is irrelevant
    let q = joint("q");
    let q_inv = joint("q_inv");
    rows.push(SuiteRow::verdict(
        "q",
        "H(A∧B)",
        0.83,
        joint_entropy(q, &cfg),
        QUOTE_TOLERANCE,
        None,
    ));
    rows.push(SuiteRow::verdict(
        "q_inv",
        "H(B∧A)",
        0.83,
        joint_entropy(q_inv, &cfg),
        QUOTE_TOLERANCE,
        None,
    ));
    let largest_gap = q
        .probs()
        .iter()
        .zip(q_inv.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    rows.push(SuiteRow::verdict(
        "q vs q_inv",
        "largest cell difference",
        0.0,
        largest_gap,
        CELL_TOLERANCE,
        banner(),
    ));
    comparisons.push(compare_across_contexts(q, q_inv, &cfg)?);

    // three-colour urn without replacement
    let l_u = joint("l_u");
    let red = l_u.stages()[0].index_of("red").expect("red outcome");
    let green = l_u.stages()[1].index_of("green").expect("green outcome");
    rows.push(SuiteRow::verdict(
        "l_u",
        "P(red∧green)",
        1.0 / 6.0,
        l_u.prob(&[red, green]).expect("cell"),
        0.0,
        None,
    ));
    let given_green = l_u
        .condition(1, green)?
        .into_single()
        .expect("one stage left");
    rows.push(SuiteRow::verdict(
        "l_u",
        "P(red|green)",
        0.5,
        given_green.prob("red").expect("red outcome"),
        0.0,
        None,
    ));

    if corrupt {
        let first = rows[0].clone();
        rows[0] = SuiteRow::verdict(
            first.context,
            first.quantity,
            first.expected,
            first.actual + 0.1,
            first.tolerance,
            first.banner,
        );
    }

    let all_pass = rows.iter().all(|r| r.pass);
    Ok(SuiteOutcome {
        contexts,
        comparisons,
        block: SuiteBlock { rows, all_pass },
    })
}
