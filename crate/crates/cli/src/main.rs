//! `ruleshift`: generate datasets, solve instances, apply rewrite laws, and
//! score predictors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use ruleshift::eval::{
    load_predictions, render_table, run_baseline, score_with, Baseline, Coverage, EvalReport,
    ScoreError,
};
use ruleshift::genset::{self, Dataset, DatasetConfig, GenError, MANIFEST_FILE};
use ruleshift::inference::{self, Question};
use ruleshift::logic::{Attribute, Rule, RuleId, Theory};
use ruleshift::remote::{fetch_remote_predictions, Endpoint};
use ruleshift::rewrite::{self, Law, RewriteError, RewriteTrace};
use ruleshift::text::{self, Sentence};

const OUT_ENV: &str = "RULESHIFT_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Io = 2,
    Config = 3,
    Parse = 4,
    NotApplicable = 5,
    Scoring = 6,
}

#[derive(Debug)]
struct Failure {
    exit: Exit,
    message: String,
}

fn fail(exit: Exit, message: impl Into<String>) -> Failure {
    Failure {
        exit,
        message: message.into(),
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        let exit = match e {
            GenError::Io { .. } => Exit::Io,
            GenError::InvalidConfig(_) | GenError::VocabularyCollision(_) => Exit::Config,
            GenError::Json { .. } | GenError::Parse(_) => Exit::Parse,
            GenError::HashMismatch { .. } => Exit::Scoring,
            _ => Exit::Scoring,
        };
        fail(exit, e.to_string())
    }
}

impl From<ScoreError> for Failure {
    fn from(e: ScoreError) -> Self {
        let exit = match e {
            ScoreError::UnknownBaseline(_) => Exit::Config,
            _ => Exit::Scoring,
        };
        fail(exit, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ruleshift",
    version,
    about = "Perturbed rule-reasoning benchmarks: generate, solve, transform, evaluate"
)]
struct Cli {
    /// Echo effective configuration (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset of base groups and their eleven variants.
    Generate(GenerateArgs),
    /// Answer the questions of an instance file and show derivations.
    Solve(SolveArgs),
    /// Rewrite one rule with an equivalence law or a seeded law stack.
    Transform(TransformArgs),
    /// Score a baseline, a prediction file, or a remote endpoint.
    Evaluate(EvaluateArgs),
    /// Re-render a stored report as a table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of base groups.
    #[arg(long, default_value_t = 100)]
    groups: usize,
    /// Groups assigned to the training split; the rest are test groups.
    #[arg(long, default_value_t = 80)]
    train: usize,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Text file with one fact, rule, or question sentence per line.
    instance: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("how").required(true).args(["law", "stack"]))]
struct TransformArgs {
    /// Law to apply once at its canonical site.
    #[arg(long)]
    law: Option<String>,
    /// Number of seeded laws to stack (2 to 5).
    #[arg(long)]
    stack: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "stack")]
    seed: u64,
    /// Rule sentence, e.g. "If someone is green then they are cold."
    rule: String,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["baseline", "predictions", "endpoint"]))]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// oracle, chain-template, constant-true, constant-false, or random.
    #[arg(long)]
    baseline: Option<String>,
    /// Seed for the random baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Line-delimited prediction records.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// HTTP endpoint answering {"id", "prompt"} with {"id", "label"}.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value_t = 30_000, requires = "endpoint")]
    timeout_ms: u64,
    #[arg(long, default_value_t = 8, requires = "endpoint")]
    max_parallel: usize,
    /// Score unanswered remote questions as incorrect instead of failing.
    #[arg(long, requires = "endpoint")]
    permissive: bool,
    /// Predictor name recorded in the report (defaults to the source).
    #[arg(long)]
    name: Option<String>,
    /// Where to write the report JSON.
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report JSON written by `evaluate`.
    #[arg(long)]
    input: PathBuf,
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    fail(Exit::Io, format!("{}: {e}", path.display()))
}

fn cmd_generate(args: &GenerateArgs, verbose: u8) -> Result<String, Failure> {
    let config = DatasetConfig {
        groups: args.groups,
        train: args.train,
        seed: args.seed,
    };
    if verbose > 0 {
        eprintln!(
            "generate: groups={} train={} seed={} out={}",
            config.groups,
            config.train,
            config.seed,
            args.out.display()
        );
    }
    let dataset = genset::generate(&config)?;
    let manifest_path = args.out.join(MANIFEST_FILE);
    let already_present = manifest_path.exists();
    if already_present {
        let existing = Dataset::load(&args.out).map_err(|e| {
            fail(
                Exit::Config,
                format!("{} holds an unreadable dataset: {e}", args.out.display()),
            )
        })?;
        if existing != dataset {
            return Err(fail(
                Exit::Config,
                format!(
                    "{} already holds a different dataset; refusing to overwrite it",
                    args.out.display()
                ),
            ));
        }
    } else {
        dataset.write(&args.out)?;
    }
    let m = &dataset.manifest;
    let mut out = format!(
        "dataset: {} groups ({} train, {} test), seed {}, {} records\n",
        m.total_groups,
        m.train_group_ids.len(),
        m.test_group_ids.len(),
        m.seed,
        m.total_records
    );
    for (name, entry) in &m.files {
        let _ = writeln!(
            out,
            "  {name:<30} {:>5} records  sha256 {}",
            entry.records, entry.sha256
        );
    }
    let _ = writeln!(out, "manifest sha256 {}", dataset.manifest_hash());
    if already_present {
        let _ = writeln!(
            out,
            "identical dataset already present in {}",
            args.out.display()
        );
    } else {
        let _ = writeln!(out, "written to {}", args.out.display());
    }
    Ok(out)
}

fn parse_instance(source: &str) -> Result<(Theory, Vec<Question>), Failure> {
    let mut facts = Vec::new();
    let mut rules = Vec::new();
    let mut questions = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let sentence = text::parse_sentence(line).map_err(|e| {
            fail(
                Exit::Parse,
                format!(
                    "line {}: {e}\n  {line}\n  {:>w$}",
                    n + 1,
                    "^",
                    w = e.position + 1
                ),
            )
        })?;
        match sentence {
            Sentence::Fact(f) => facts.push(f),
            Sentence::Rule(body) => {
                let id = RuleId::positional(rules.len() + 1);
                rules.push(
                    Rule::new(id, body)
                        .map_err(|e| fail(Exit::Parse, format!("line {}: {e}", n + 1)))?,
                );
            }
            Sentence::Question(q) => questions.push(q),
        }
    }
    let entity = facts
        .first()
        .map(|f| f.entity().clone())
        .or_else(|| questions.first().map(|q| q.subject.clone()))
        .ok_or_else(|| fail(Exit::Parse, "instance has no facts and no questions"))?;
    let extra: Vec<Attribute> = questions.iter().map(|q| q.attribute.clone()).collect();
    let theory = Theory::inferring_vocabulary(entity, facts, rules, &extra)
        .map_err(|e| fail(Exit::Parse, e.to_string()))?;
    Ok((theory, questions))
}

fn cmd_solve(args: &SolveArgs) -> Result<String, Failure> {
    let source = fs::read_to_string(&args.instance).map_err(|e| io_fail(&args.instance, e))?;
    let (theory, questions) = parse_instance(&source)?;
    let summary = inference::summarize(&theory).map_err(|e| fail(Exit::Parse, e.to_string()))?;
    let mut out = String::new();
    let vocab: Vec<String> = theory.vocabulary.iter().map(ToString::to_string).collect();
    let _ = writeln!(
        out,
        "theory: {} facts, {} rules, entity {}, vocabulary {}",
        theory.facts.len(),
        theory.rules.len(),
        theory.entity,
        vocab.join(", ")
    );
    if summary.consistent {
        let _ = writeln!(out, "consistent: {} models", summary.model_count);
    } else {
        let _ = writeln!(
            out,
            "INCONSISTENT: no assignment satisfies the theory; every conclusion is withheld (F)"
        );
    }
    let mut labels = Vec::new();
    for (i, q) in questions.iter().enumerate() {
        if q.subject != theory.entity {
            return Err(fail(
                Exit::Parse,
                format!(
                    "question about {} in a theory about {}",
                    q.subject, theory.entity
                ),
            ));
        }
        let status = inference::entails(&theory, &q.attribute)
            .map_err(|e| fail(Exit::Parse, e.to_string()))?;
        let label = inference::answer(&theory, q).map_err(|e| fail(Exit::Parse, e.to_string()))?;
        labels.push(label.as_str());
        let _ = writeln!(
            out,
            "Q{}: {} -> {status}, {label}",
            i + 1,
            text::render_question(q)
        );
    }
    let _ = writeln!(out, "answers: {}", labels.join(","));
    match inference::forward_chain(&theory) {
        Ok(chain) => {
            let _ = writeln!(out, "trace:");
            for (b, branch) in chain.trace.branches.iter().enumerate() {
                let assumed: Vec<String> =
                    branch.assumptions.iter().map(ToString::to_string).collect();
                let _ = writeln!(
                    out,
                    "  branch {} assuming {}",
                    b + 1,
                    if assumed.is_empty() {
                        "nothing".into()
                    } else {
                        assumed.join(", ")
                    }
                );
                for step in &branch.steps {
                    let _ = writeln!(out, "    {}: {}", step.rule, step.derived);
                }
                if let Some(conflict) = &branch.conflict {
                    let by = conflict
                        .rule
                        .as_ref()
                        .map_or("facts".to_string(), ToString::to_string);
                    let _ = writeln!(out, "    closed: {by} contradicts {}", conflict.literal);
                }
            }
            let entailed: Vec<String> = chain.entailed.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "chained conclusions: {}",
                if chain.inconsistent {
                    "none (all branches closed)".into()
                } else {
                    entailed.join(", ")
                }
            );
        }
        Err(_) => {
            let _ = writeln!(out, "trace: unavailable (some rules are not implications between literal forms); answers come from model enumeration");
        }
    }
    Ok(out)
}

fn render_trace(trace: &RewriteTrace, out: &mut String) {
    for (i, step) in trace.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {}. {} at {}: {}  =>  {}",
            i + 1,
            step.law,
            step.site,
            step.before,
            step.after
        );
    }
}

fn cmd_transform(args: &TransformArgs, verbose: u8) -> Result<String, Failure> {
    let rule = text::parse_rule(RuleId::positional(1), &args.rule)
        .map_err(|e| fail(Exit::Parse, e.to_string()))?;
    let not_applicable = |e: RewriteError| match e {
        RewriteError::NotApplicable { .. } => fail(Exit::NotApplicable, e.to_string()),
        RewriteError::BadStackSize(_) | RewriteError::UnknownLaw(_) => {
            fail(Exit::Config, e.to_string())
        }
        other => fail(Exit::NotApplicable, other.to_string()),
    };
    let (rewritten, trace) = match (&args.law, args.stack) {
        (Some(name), _) => {
            let law: Law = name
                .parse()
                .map_err(|e: RewriteError| fail(Exit::Config, e.to_string()))?;
            if verbose > 0 {
                eprintln!("transform: law={law}");
            }
            rewrite::apply_laws(&rule, &[law]).map_err(not_applicable)?
        }
        (None, Some(k)) => {
            if verbose > 0 {
                eprintln!("transform: stack={k} seed={}", args.seed);
            }
            rewrite::stack_laws(&rule, k, args.seed).map_err(not_applicable)?
        }
        (None, None) => return Err(fail(Exit::Config, "one of --law or --stack is required")),
    };
    let rendered =
        text::render_rule(&rewritten).map_err(|e| fail(Exit::NotApplicable, e.to_string()))?;
    let verified = ruleshift::logic::equivalent(&rule.body, &rewritten.body)
        .map_err(|e| fail(Exit::NotApplicable, e.to_string()))?;
    let mut out = format!("{rendered}\nequivalent: {verified}\ntrace:\n");
    render_trace(&trace, &mut out);
    Ok(out)
}

fn cmd_evaluate(args: &EvaluateArgs, verbose: u8) -> Result<String, Failure> {
    let dataset = Dataset::load(&args.dataset)?;
    let mut coverage = Coverage::Strict;
    let mut preamble = String::new();
    let (source, predictions) = if let Some(name) = &args.baseline {
        let baseline: Baseline = name.parse()?;
        (
            baseline.name().to_string(),
            run_baseline(&dataset, baseline, args.seed)?,
        )
    } else if let Some(path) = &args.predictions {
        (path.display().to_string(), load_predictions(path)?)
    } else if let Some(url) = &args.endpoint {
        let endpoint = Endpoint {
            url: url.clone(),
            timeout: Duration::from_millis(args.timeout_ms),
            max_parallel: args.max_parallel.max(1),
        };
        let outcome = fetch_remote_predictions(&dataset, &endpoint);
        if !outcome.failures.is_empty() {
            let report = outcome.failure_report();
            if !args.permissive {
                return Err(fail(
                    Exit::Scoring,
                    format!("{} requests failed (use --permissive to score them as incorrect):\n{report}", outcome.failures.len()),
                ));
            }
            coverage = Coverage::Permissive;
            let _ = write!(
                preamble,
                "{} requests failed:\n{report}",
                outcome.failures.len()
            );
        }
        (url.clone(), outcome.predictions)
    } else {
        return Err(fail(
            Exit::Config,
            "one of --baseline, --predictions, --endpoint is required",
        ));
    };
    let predictor = args.name.clone().unwrap_or(source);
    if verbose > 0 {
        eprintln!(
            "evaluate: dataset={} predictor={predictor} report={}",
            args.dataset.display(),
            args.report.display()
        );
    }
    let report = score_with(&dataset, &predictor, &predictions, coverage)?;
    fs::write(&args.report, report.to_json()).map_err(|e| io_fail(&args.report, e))?;
    Ok(format!(
        "{preamble}{}report written to {}\n",
        render_table(&report),
        args.report.display()
    ))
}

fn cmd_report(args: &ReportArgs) -> Result<String, Failure> {
    let raw = fs::read_to_string(&args.input).map_err(|e| io_fail(&args.input, e))?;
    let report = EvalReport::from_json(&raw)
        .map_err(|e| fail(Exit::Parse, format!("{}: {e}", args.input.display())))?;
    Ok(render_table(&report))
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, cli.verbose),
        Command::Solve(a) => cmd_solve(a),
        Command::Transform(a) => cmd_transform(a, cli.verbose),
        Command::Evaluate(a) => cmd_evaluate(a, cli.verbose),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Config as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.exit as u8)
        }
    }
}
