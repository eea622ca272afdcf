use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use varagg::generator::{generate, GeneratorConfig, Shape};
use varagg::incidence::{bipartite_graph, coordinate_list};
use varagg::model::{
    read_model, validate, write_model, write_reduced, Model, ReducedModel, Severity,
};
use varagg::report::{
    bounds_report, reduced_metrics, render_report, structural_metrics, Report, ReportFormat,
};
use varagg::strategies::{run_strategy, StrategyKind};
use varagg::transform::check_equivalence;

#[derive(Parser)]
#[command(
    name = "varagg",
    version,
    about = "Variable aggregation presolve for nonlinear optimization models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate variables out of a model and report its structure before and after.
    Reduce {
        input: PathBuf,
        /// none, ld1, ecd2, ld2, d2, gr or lm.
        #[arg(long, default_value = "lm", value_parser = parse_method)]
        method: Method,
        /// Where to write the reduced model.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        report: Format,
        /// Write definitions inline instead of as a `defined` section.
        #[arg(long)]
        inline: bool,
        /// Print the incidence matrix of the input as `row col linear|nonlinear` lines on stderr.
        #[arg(long)]
        dump_incidence: bool,
        /// Compare the reduced model against the input at N random points.
        #[arg(long, value_name = "N", default_value_t = 0)]
        check: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report the structure of a model without changing it.
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        report: Format,
        #[arg(long)]
        dump_incidence: bool,
    },
    /// Write a synthetic ladder or cycle model.
    Gen {
        /// Number of equality constraints.
        #[arg(long, default_value_t = 20)]
        size: usize,
        /// Fraction of equalities with a nonlinear term.
        #[arg(long, default_value_t = 0.3)]
        nonlinear: f64,
        #[arg(long, value_enum, default_value_t = ShapeArg::Ladder)]
        shape: ShapeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy)]
enum Method {
    None,
    Strategy(StrategyKind),
}

fn parse_method(s: &str) -> Result<Method, String> {
    if s == "none" {
        return Ok(Method::None);
    }
    s.parse().map(Method::Strategy).map_err(|e| format!("{e}"))
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Table => ReportFormat::Table,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Ladder,
    Cycle,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn model(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn transform(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reduce {
            input,
            method,
            output,
            report,
            inline,
            dump_incidence,
            check,
            seed,
        } => reduce(
            &input,
            method,
            output.as_deref(),
            report.into(),
            inline,
            dump_incidence,
            check,
            seed,
        ),
        Command::Analyze {
            input,
            report,
            dump_incidence,
        } => analyze(&input, report.into(), dump_incidence),
        Command::Gen {
            size,
            nonlinear,
            shape,
            seed,
            output,
        } => gen(size, nonlinear, shape, seed, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<Model, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::model(format!("cannot read {}: {e}", path.display())))?;
    let model =
        read_model(&bytes).map_err(|e| Failure::model(format!("{}: {e}", path.display())))?;
    let mut errors = 0;
    for d in validate(&model) {
        eprintln!("{}: {d}", path.display());
        if d.severity == Severity::Error {
            errors += 1;
        }
    }
    if errors > 0 {
        return Err(Failure::model(format!(
            "{}: {errors} validation error(s)",
            path.display()
        )));
    }
    Ok(model)
}

fn dump(model: &Model) -> Result<(), Failure> {
    let g = bipartite_graph(
        &model.var_ids(),
        &model.constraints().map(|(c, _)| c.id).collect::<Vec<_>>(),
        model,
    )
    .map_err(|e| Failure::model(e.to_string()))?;
    eprint!("{}", coordinate_list(&g, model));
    Ok(())
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::model(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::model(format!("cannot write to stdout: {e}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn reduce(
    input: &Path,
    method: Method,
    output: Option<&Path>,
    format: ReportFormat,
    inline: bool,
    dump_incidence: bool,
    check: usize,
    seed: u64,
) -> Result<(), Failure> {
    let model = load(input)?;
    if dump_incidence {
        dump(&model)?;
    }
    let before = structural_metrics(&model);
    let (token, reduced, bounds) = match method {
        Method::None => (
            "none".to_string(),
            ReducedModel::identity(model.clone()),
            None,
        ),
        Method::Strategy(kind) => {
            let run = run_strategy(&model, kind).map_err(|e| Failure::transform(e.to_string()))?;
            for (i, round) in run.rounds.iter().enumerate() {
                if let Some(v) = round.check.violations.first() {
                    return Err(Failure::transform(format!(
                        "round {i} is not lower triangular: {v}"
                    )));
                }
            }
            let bounds = match run.lm() {
                Some(lm) => Some(
                    bounds_report(lm)
                        .map_err(|e| Failure::transform(format!("internal error: {e}")))?,
                ),
                None => None,
            };
            (kind.token().to_string(), run.reduced, bounds)
        }
    };

    if check > 0 {
        let rep = check_equivalence(&model, &reduced, check, seed);
        if !rep.is_ok() {
            for m in &rep.mismatches {
                eprintln!("mismatch: {m}");
            }
            if rep.evaluated < rep.requested {
                eprintln!(
                    "only {} of {} points could be evaluated ({} skipped)",
                    rep.evaluated, rep.requested, rep.skipped
                );
            }
            return Err(Failure {
                code: 3,
                message: "reduced model is not equivalent to the input".into(),
            });
        }
    }

    if let Some(path) = output {
        emit(&write_reduced(&reduced, inline), Some(path))?;
    }
    let report = Report {
        method: token,
        before,
        after: reduced_metrics(&reduced),
        bounds,
    };
    emit(&render_report(&report, format), None)
}

fn analyze(input: &Path, format: ReportFormat, dump_incidence: bool) -> Result<(), Failure> {
    let model = load(input)?;
    if dump_incidence {
        dump(&model)?;
    }
    let m = structural_metrics(&model);
    let report = Report {
        method: "none".into(),
        before: m,
        after: m,
        bounds: None,
    };
    emit(&render_report(&report, format), None)
}

fn gen(
    size: usize,
    nonlinear: f64,
    shape: ShapeArg,
    seed: u64,
    output: Option<&Path>,
) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&nonlinear) {
        return Err(Failure::model(format!(
            "--nonlinear must be in [0, 1], got {nonlinear}"
        )));
    }
    let shape = match shape {
        ShapeArg::Ladder => Shape::Ladder,
        ShapeArg::Cycle => Shape::Cycle,
    };
    let model = generate(&GeneratorConfig {
        size,
        nonlinear_fraction: nonlinear,
        shape,
        seed,
    });
    emit(&write_model(&model, false), output)
}
