//! Machine-readable report emitted by every subcommand, plus its
//! human-readable rendering.
//!
//! The JSON form is stable: `{version, units, contexts, comparisons}` with
//! optional `sampling` and `suite` blocks. Serialization round-trips exactly
//! — parsing an emitted report and re-emitting it reproduces the same value —
//! so downstream tooling can treat the numbers as authoritative.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ctxent::entropy::{
    property_report, CrossContextReport, EntropyConfig, EntropyReport, PropertyReport, Units,
};
use ctxent::mc::McComparison;
use ctxent::prob::{ContextTagged, ProbError, StageDistribution};
use serde::{Deserialize, Serialize};

/// Everything one invocation computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub units: Units,
    pub contexts: Vec<ContextBlock>,
    pub comparisons: Vec<CrossContextReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteBlock>,
}

impl Report {
    pub fn new(units: Units) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            units,
            contexts: Vec::new(),
            comparisons: Vec::new(),
            sampling: None,
            suite: None,
        }
    }
}

/// Probabilities, entropies and identity checks of one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub id: String,
    /// Outcome (or ∧-joined outcome tuple) → probability.
    pub probabilities: BTreeMap<String, f64>,
    pub entropies: EntropyReport,
    /// Absent for single-stage contexts, where the identities are vacuous.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<PropertyReport>,
}

impl ContextBlock {
    pub fn build(dist: &StageDistribution, cfg: &EntropyConfig) -> Result<Self, ProbError> {
        let mut probabilities = BTreeMap::new();
        for (flat, &p) in dist.flat_probs().iter().enumerate() {
            probabilities.insert(dist.cell_labels(flat).join("∧"), p);
        }
        let properties = match dist {
            StageDistribution::Single(_) => None,
            StageDistribution::Joint(j) => Some(property_report(j, cfg)?),
        };
        Ok(Self {
            id: dist.context().id().to_owned(),
            probabilities,
            entropies: EntropyReport::for_stage_distribution(dist, cfg)?,
            properties,
        })
    }

    /// `false` only if an identity check failed, which the arithmetic rules out.
    pub fn holds(&self) -> bool {
        self.properties.as_ref().map_or(true, |p| p.holds)
    }
}

/// Result of a seeded sampling run checked against the analytic cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingBlock {
    pub n: u64,
    pub seed: u64,
    pub shards: u64,
    pub comparison: McComparison,
}

/// One checked entry of the built-in suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    /// Context id, or `a vs b` for a cross-context entry.
    pub context: String,
    pub quantity: String,
    pub expected: f64,
    pub actual: f64,
    /// Permitted |actual − expected|; 0 demands bit-exact equality.
    pub tolerance: f64,
    /// Cross-context rows carry the banner with them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub banner: Option<String>,
    pub pass: bool,
}

impl SuiteRow {
    pub fn verdict(context: impl Into<String>, quantity: impl Into<String>, expected: f64, actual: f64, tolerance: f64, banner: Option<String>) -> Self {
        let pass = if tolerance == 0.0 {
            actual == expected
        } else {
            (actual - expected).abs() <= tolerance
        };
        Self {
            context: context.into(),
            quantity: quantity.into(),
            expected,
            actual,
            tolerance,
            banner,
            pass,
        }
    }
}

/// The full matrix of checked suite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteBlock {
    pub rows: Vec<SuiteRow>,
    pub all_pass: bool,
}

/// Render the whole report for terminal reading; numbers use six decimals.
pub fn render(report: &Report) -> String {
    let mut out = String::new();
    for block in &report.contexts {
        render_context(&mut out, block, report.units);
    }
    for cross in &report.comparisons {
        render_comparison(&mut out, cross);
    }
    if let Some(sampling) = &report.sampling {
        render_sampling(&mut out, sampling);
    }
    if let Some(suite) = &report.suite {
        render_suite(&mut out, suite, report.units);
    }
    out
}

fn pad(s: &str, width: usize) -> String {
    let len = s.chars().count();
    let mut padded = s.to_owned();
    for _ in len..width {
        padded.push(' ');
    }
    padded
}

fn render_context(out: &mut String, block: &ContextBlock, units: Units) {
    let _ = writeln!(out, "context {} ({units})", block.id);
    let width = block
        .probabilities
        .keys()
        .map(|k| k.chars().count())
        .max()
        .unwrap_or(0);
    let _ = writeln!(out, "  probabilities");
    for (cell, p) in &block.probabilities {
        let _ = writeln!(out, "    {}  {p:.6}", pad(cell, width));
    }
    let _ = writeln!(out, "  entropies of {} ({units})", block.id);
    let ent = &block.entropies;
    let mut lines: Vec<(String, f64)> = Vec::new();
    for stage in &ent.stage_entropies {
        lines.push((format!("H({})", stage.stage), stage.value));
    }
    for cond in &ent.conditional_entropies {
        lines.push((format!("H({}|{})", cond.target, cond.given), cond.value));
    }
    if let Some(joint) = ent.joint_entropy {
        let stages: Vec<&str> = ent.stage_entropies.iter().map(|s| s.stage.as_str()).collect();
        lines.push((format!("H({})", stages.join("∧")), joint));
    }
    let width = lines.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    for (label, value) in &lines {
        let _ = writeln!(out, "    {}  {value:.6}", pad(label, width));
    }
    match &block.properties {
        None => {
            let _ = writeln!(out, "  properties of {}: not applicable (single stage)", block.id);
        }
        Some(props) => {
            let _ = writeln!(out, "  properties of {}", block.id);
            for c in &props.concavity {
                let _ = writeln!(
                    out,
                    "    concavity given {}: H({t}) − H({t}|{g}) = {d:.6} — {verdict}",
                    c.conditioned_on,
                    t = c.target,
                    g = c.conditioned_on,
                    d = c.difference,
                    verdict = if c.holds { "holds" } else { "VIOLATED" },
                );
            }
            let sa = &props.strong_additivity;
            let _ = writeln!(
                out,
                "    strong additivity: joint {j:.6}, every decomposition within {r:.1e} — {verdict}",
                j = sa.joint_entropy,
                r = sa.max_residual,
                verdict = if sa.holds { "holds" } else { "VIOLATED" },
            );
            let _ = writeln!(
                out,
                "    {}",
                if props.holds {
                    "all identities hold"
                } else {
                    "IDENTITY VIOLATED"
                }
            );
        }
    }
}

fn render_comparison(out: &mut String, cross: &CrossContextReport) {
    let _ = writeln!(out, "{}", cross.banner);
    let _ = writeln!(out, "  {} in '{}': {:.6}", cross.quantity, cross.a, cross.values[0]);
    let _ = writeln!(out, "  {} in '{}': {:.6}", cross.quantity, cross.b, cross.values[1]);
    let _ = writeln!(
        out,
        "  difference ({} − {}): {:.6}",
        cross.a,
        cross.b,
        cross.difference()
    );
}

fn render_sampling(out: &mut String, sampling: &SamplingBlock) {
    let comparison = &sampling.comparison;
    let _ = writeln!(
        out,
        "sampling check for '{}': n = {}, seed = {}, shards = {}",
        comparison.context_id, sampling.n, sampling.seed, sampling.shards
    );
    let width = comparison
        .cells
        .iter()
        .map(|c| c.outcomes.join("∧").chars().count())
        .max()
        .unwrap_or(0)
        .max("outcomes".len());
    let _ = writeln!(
        out,
        "  {}  analytic  empirical  |diff|    bound     verdict",
        pad("outcomes", width)
    );
    for cell in &comparison.cells {
        let _ = writeln!(
            out,
            "  {}  {:.6}  {:.6}   {:.6}  {:.6}  {}",
            pad(&cell.outcomes.join("∧"), width),
            cell.analytic,
            cell.empirical,
            (cell.empirical - cell.analytic).abs(),
            cell.bound,
            if cell.pass { "pass" } else { "FAIL" },
        );
    }
    let _ = writeln!(
        out,
        "  {}",
        if comparison.all_pass {
            "all cells pass"
        } else {
            "STATISTICAL MISMATCH"
        }
    );
}

fn render_suite(out: &mut String, suite: &SuiteBlock, units: Units) {
    let _ = writeln!(out, "suite of built-in arrangements ({units})");
    let cw = suite
        .rows
        .iter()
        .map(|r| r.context.chars().count())
        .max()
        .unwrap_or(0)
        .max("context".len());
    let qw = suite
        .rows
        .iter()
        .map(|r| r.quantity.chars().count())
        .max()
        .unwrap_or(0)
        .max("quantity".len());
    let _ = writeln!(
        out,
        "  {}  {}  expected   actual     verdict",
        pad("context", cw),
        pad("quantity", qw)
    );
    for row in &suite.rows {
        let verdict = match (row.pass, row.tolerance == 0.0) {
            (true, true) => "pass (exact)",
            (true, false) => "pass",
            (false, _) => "FAIL",
        };
        let banner = row
            .banner
            .as_ref()
            .map(|b| format!("  [{b}]"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "  {}  {}  {:9.6}  {:9.6}  {verdict}{banner}",
            pad(&row.context, cw),
            pad(&row.quantity, qw),
            row.expected,
            row.actual,
        );
    }
    let _ = writeln!(
        out,
        "{}",
        if suite.all_pass {
            format!("all {} rows pass", suite.rows.len())
        } else {
            let failing: Vec<String> = suite
                .rows
                .iter()
                .filter(|r| !r.pass)
                .map(|r| format!("{}: {}", r.context, r.quantity))
                .collect();
            format!("{} row(s) FAILED: {}", failing.len(), failing.join(", "))
        }
    );
}
