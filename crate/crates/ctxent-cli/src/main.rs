//! `ctxent` — compute context-tagged probabilities and Shannon entropies for
//! experiment files, check the entropy identities, run seeded sampling
//! checks, and verify the full matrix of built-in arrangements.
//!
//! Exit codes are a stable contract:
//!   0 success, 1 input error, 2 expected-value or identity mismatch,
//!   3 statistical mismatch.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ctxent::dsl::{parse, ParseDiagnostic, SourceFile};
use ctxent::entropy::{
    conditional_entropy, entropy, joint_entropy, CrossContextReport, EntropyConfig, Units,
};
use ctxent::mc::{compare, simulate, EmpiricalJoint, SampleRun};
use ctxent::models::{alpha_parameterized, builtin, ExperimentSpec};
use ctxent::prob::{ContextTagged, StageDistribution};
use ctxent_cli::report::{render, ContextBlock, Report, SamplingBlock};
use ctxent_cli::suite::run_suite;

const SUCCESS: u8 = 0;
const INPUT_ERROR: u8 = 1;
const VALUE_MISMATCH: u8 = 2;
const STATISTICAL_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ctxent",
    version,
    about = "Probabilities and Shannon entropies of sequential experiments, \
             tagged by the context that defines them"
)]
struct Cli {
    /// Units for entropy values.
    #[arg(long, global = true, value_enum, env = "CTXENT_UNITS")]
    units: Option<UnitsArg>,
    /// Emit the report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum UnitsArg {
    Bits,
    Nats,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Bits => Units::Bits,
            UnitsArg::Nats => Units::Nats,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute one experiment's probabilities, entropies and identity checks.
    Run {
        /// Experiment description file.
        file: PathBuf,
        /// Tilt angle in radians; applies only to the built-in arrangements
        /// parameterized by it.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Compare one entropy across two different experiments.
    Compare {
        /// First experiment file.
        a: PathBuf,
        /// Second experiment file; its context id must differ.
        b: PathBuf,
    },
    /// Draw seeded samples from an experiment and check every cell against
    /// the analytic probability.
    Sample {
        /// Experiment description file.
        file: PathBuf,
        /// Number of samples.
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        /// Master seed; equal seeds give bit-identical counts.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Independent shards summed into the final counts.
        #[arg(long, default_value_t = 8)]
        shards: u64,
        /// Test hook: skew the counts so the check must fail.
        #[arg(long, hide = true)]
        perturb: bool,
    },
    /// Recompute the published value matrix across every built-in
    /// arrangement and verify each row.
    PaperSuite {
        /// Test hook: corrupt the first row so the failure path runs.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => SUCCESS,
                _ => INPUT_ERROR,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let units = cli.units.map(Units::from).unwrap_or_default();
    let code = match cli.command {
        Command::Run { file, alpha } => cmd_run(&file, alpha, units, cli.json),
        Command::Compare { a, b } => cmd_compare(&a, &b, units, cli.json),
        Command::Sample {
            file,
            n,
            seed,
            shards,
            perturb,
        } => cmd_sample(&file, n, seed, shards, perturb, units, cli.json),
        Command::PaperSuite { corrupt } => cmd_suite(corrupt, cli.units, cli.json),
    };
    ExitCode::from(code)
}

fn print_diagnostics(path: &Path, diagnostics: &[ParseDiagnostic]) {
    for d in diagnostics {
        eprintln!("{}:{d}", path.display());
    }
}

/// Read, parse and (if requested) re-tilt one experiment file.
fn load_spec(path: &Path, alpha: Option<f64>) -> Result<ExperimentSpec, u8> {
    let bytes = fs::read(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        INPUT_ERROR
    })?;
    let src = SourceFile::from_bytes(path.display().to_string(), &bytes).map_err(|d| {
        print_diagnostics(path, &d);
        INPUT_ERROR
    })?;
    let parsed = parse(&src).map_err(|d| {
        print_diagnostics(path, &d);
        INPUT_ERROR
    })?;
    print_diagnostics(path, &parsed.warnings);
    let mut spec = parsed.spec;
    if let Some(alpha) = alpha {
        if alpha_parameterized(&spec.id) {
            spec = builtin(&spec.id, alpha).expect("parameterized names are built in");
        } else {
            eprintln!(
                "warning: --alpha ignored: experiment '{}' has no tilt parameter",
                spec.id
            );
        }
    }
    Ok(spec)
}

fn generate(spec: &ExperimentSpec) -> Result<StageDistribution, u8> {
    spec.generate().map_err(|e| {
        eprintln!("experiment '{}': {e}", spec.id);
        INPUT_ERROR
    })
}

fn emit(report: &Report, json: bool) -> Result<(), u8> {
    if json {
        let text = serde_json::to_string_pretty(report).map_err(|e| {
            eprintln!("serializing report: {e}");
            INPUT_ERROR
        })?;
        println!("{text}");
    } else {
        print!("{}", render(report));
    }
    Ok(())
}

fn cmd_run(file: &Path, alpha: Option<f64>, units: Units, json: bool) -> u8 {
    let code = (|| {
        let spec = load_spec(file, alpha)?;
        let dist = generate(&spec)?;
        let cfg = EntropyConfig::with_units(units);
        let block = ContextBlock::build(&dist, &cfg).map_err(|e| {
            eprintln!("experiment '{}': {e}", spec.id);
            INPUT_ERROR
        })?;
        let holds = block.holds();
        let mut report = Report::new(units);
        report.contexts.push(block);
        emit(&report, json)?;
        Ok(if holds { SUCCESS } else { VALUE_MISMATCH })
    })();
    code.unwrap_or_else(|e| e)
}

/// The entropy of the final stage: plain for a single stage, conditional on
/// everything earlier for a joint.
fn final_stage_entropy(dist: &StageDistribution, cfg: &EntropyConfig) -> Result<f64, u8> {
    let report_err = |e| {
        eprintln!("conditioning failed: {e}");
        INPUT_ERROR
    };
    match dist {
        StageDistribution::Single(d) => Ok(entropy(d, cfg)),
        StageDistribution::Joint(j) if j.stage_count() == 2 => {
            conditional_entropy(j, 0, cfg).map_err(report_err)
        }
        StageDistribution::Joint(j) => {
            // chain rule: H(last | earlier) = H(all) − H(earlier)
            let earlier: Vec<usize> = (0..j.stage_count() - 1).collect();
            let prefix = j.marginalize(&earlier).map_err(report_err)?;
            Ok(joint_entropy(j, cfg) - ctxent::entropy::entropy_of(&prefix, cfg))
        }
    }
}

fn cmd_compare(a: &Path, b: &Path, units: Units, json: bool) -> u8 {
    let code = (|| {
        let spec_a = load_spec(a, None)?;
        let spec_b = load_spec(b, None)?;
        let dist_a = generate(&spec_a)?;
        let dist_b = generate(&spec_b)?;
        let cfg = EntropyConfig::with_units(units);

        let (quantity, values) = match (&dist_a, &dist_b) {
            (StageDistribution::Joint(ja), StageDistribution::Joint(jb)) => (
                "joint entropy",
                [joint_entropy(ja, &cfg), joint_entropy(jb, &cfg)],
            ),
            (StageDistribution::Single(sa), StageDistribution::Single(sb)) => {
                ("entropy", [entropy(sa, &cfg), entropy(sb, &cfg)])
            }
            _ => (
                "final-stage entropy",
                [
                    final_stage_entropy(&dist_a, &cfg)?,
                    final_stage_entropy(&dist_b, &cfg)?,
                ],
            ),
        };
        // refuses a shared context: that would be an identity, not a comparison
        let cross = CrossContextReport::new(dist_a.context(), dist_b.context(), quantity, values)
            .map_err(|e| {
                eprintln!("{e}");
                INPUT_ERROR
            })?;

        let mut report = Report::new(units);
        for dist in [&dist_a, &dist_b] {
            let block = ContextBlock::build(dist, &cfg).map_err(|e| {
                eprintln!("building report: {e}");
                INPUT_ERROR
            })?;
            report.contexts.push(block);
        }
        report.comparisons.push(cross);
        emit(&report, json)?;
        Ok(SUCCESS)
    })();
    code.unwrap_or_else(|e| e)
}

/// Test hook: move a tenth of the sample mass into the first cell.
fn perturbed(emp: &EmpiricalJoint) -> EmpiricalJoint {
    let mut counts = emp.counts().to_vec();
    counts[0] += (emp.n() / 10).max(1);
    EmpiricalJoint::new(emp.stages().to_vec(), emp.context().clone(), counts)
        .expect("same shape as the original")
}

fn cmd_sample(file: &Path, n: u64, seed: u64, shards: u64, perturb: bool, units: Units, json: bool) -> u8 {
    let code = (|| {
        let spec = load_spec(file, None)?;
        let run = SampleRun::new(spec.clone(), n, seed, shards).map_err(|e| {
            eprintln!("{e}");
            INPUT_ERROR
        })?;
        let mut empirical = simulate(&run).map_err(|e| {
            eprintln!("sampling '{}': {e}", spec.id);
            INPUT_ERROR
        })?;
        if perturb {
            empirical = perturbed(&empirical);
        }
        let analytic = generate(&spec)?;
        let comparison = compare(&empirical, &analytic).map_err(|e| {
            eprintln!("checking '{}': {e}", spec.id);
            INPUT_ERROR
        })?;
        let all_pass = comparison.all_pass;

        let cfg = EntropyConfig::with_units(units);
        let mut report = Report::new(units);
        let block = ContextBlock::build(&analytic, &cfg).map_err(|e| {
            eprintln!("building report: {e}");
            INPUT_ERROR
        })?;
        report.contexts.push(block);
        report.sampling = Some(SamplingBlock {
            n,
            seed,
            shards,
            comparison,
        });
        emit(&report, json)?;
        Ok(if all_pass {
            SUCCESS
        } else {
            STATISTICAL_MISMATCH
        })
    })();
    code.unwrap_or_else(|e| e)
}

fn cmd_suite(corrupt: bool, units_flag: Option<UnitsArg>, json: bool) -> u8 {
    // the published quotes are in bits; the suite always checks in bits
    if units_flag == Some(UnitsArg::Nats) {
        eprintln!("note: the suite checks two-decimal quotes in bits; --units nats ignored");
    }
    let code = (|| {
        let outcome = run_suite(corrupt).map_err(|e| {
            eprintln!("suite failed to run: {e}");
            INPUT_ERROR
        })?;
        let mut report = Report::new(Units::Bits);
        report.contexts = outcome.contexts;
        report.comparisons = outcome.comparisons;
        let all_pass = outcome.block.all_pass;
        if !all_pass {
            for row in outcome.block.rows.iter().filter(|r| !r.pass) {
                eprintln!(
                    "FAILED: {} {} = {:.6}, expected {:.6} (tolerance {})",
                    row.context, row.quantity, row.actual, row.expected, row.tolerance
                );
            }
        }
        report.suite = Some(outcome.block);
        emit(&report, json)?;
        Ok(if all_pass { SUCCESS } else { VALUE_MISMATCH })
    })();
    code.unwrap_or_else(|e| e)
}
