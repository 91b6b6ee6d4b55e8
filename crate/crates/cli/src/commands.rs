use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use tuning_core::absorption::check_positivity;
use tuning_core::model::label_of;
use tuning_core::optimizer::solve_with_analysis;
use tuning_core::{
    cost_coefficients, degenerate_strategy, indicator, refute_with_random_strategies, sample_trajectory,
    simulate_with, validate_chain, validate_strategy, AbsorptionAnalysis, ChainSpec, EmbeddedChain,
    SimulationOptions, Strategy, TrajectoryEvent, TuningError, ValidationReport,
};

use crate::args::{Cli, Command, Format, StrategyArg, Which};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Tuning(#[from] TuningError),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "USAGE",
            CliError::Io { .. } => "IO_ERROR",
            CliError::Parse { .. } => "PARSE_ERROR",
            CliError::Tuning(e) => e.code(),
        }
    }

    /// 1: invalid model or strategy, 2: usage, 3: numerical failure.
    pub fn exit_status(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse { .. } => 2,
            CliError::Tuning(e) if e.is_numeric() => 3,
            CliError::Tuning(TuningError::InvalidModel(_) | TuningError::InvalidStrategy(_)) => 1,
            CliError::Tuning(_) => 2,
        }
    }

    pub fn document(&self) -> Value {
        let mut doc = json!({
            "error": { "code": self.code(), "message": self.to_string() }
        });
        if let CliError::Tuning(
            TuningError::InvalidModel(report)
            | TuningError::InvalidStrategy(report)
            | TuningError::BNotPositive(report),
        ) = self
        {
            doc["report"] = serde_json::to_value(report).expect("report serializes");
        }
        doc
    }
}

/// Result of a command: the document to emit and the exit status.
pub struct Outcome {
    pub body: String,
    pub status: u8,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome { body, status: 0 }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn load_model(path: &Path, echo: Option<&Path>) -> Result<ChainSpec, CliError> {
    let spec: ChainSpec = parse_json(path)?;
    if let Some(echo) = echo {
        write(echo, &to_json(&spec))?;
    }
    Ok(spec)
}

fn load_strategy(arg: &StrategyArg, n_internal: usize) -> Result<Strategy, CliError> {
    let strategy = match (&arg.strategy, &arg.degenerate) {
        (Some(path), _) => parse_json::<Strategy>(path)?,
        (None, Some(labels)) => degenerate_strategy(labels[0], labels[1], n_internal)?,
        (None, None) => return Err(CliError::Usage("a strategy is required".into())),
    };
    Ok(strategy.validated(n_internal)?)
}

fn format_or(cli_format: Option<Format>, default: Format, allowed: &[Format]) -> Result<Format, CliError> {
    let format = cli_format.unwrap_or(default);
    if allowed.contains(&format) {
        Ok(format)
    } else {
        Err(CliError::Usage(
            format!("{format:?} output is not supported by this command").to_lowercase(),
        ))
    }
}

/// CSV of a square table with state labels as header row and column.
pub fn table_csv(table: &[Vec<f64>]) -> String {
    let mut out = String::from("m0\\m1");
    for j in 0..table.len() {
        write!(out, ",{}", label_of(j)).unwrap();
    }
    out.push('\n');
    for (i, row) in table.iter().enumerate() {
        write!(out, "{}", label_of(i)).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn trajectory_csv(events: &[TrajectoryEvent]) -> String {
    let mut out = String::from("step,state,event_kind,income_delta\n");
    for e in events {
        writeln!(
            out,
            "{},{},{},{}",
            e.step,
            e.state,
            e.event_kind.as_str(),
            e.income_delta
        )
        .unwrap();
    }
    out
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let echo = cli.echo_model.as_deref();
    match &cli.command {
        Command::Validate { model, strategy } => {
            format_or(cli.format, Format::Json, &[Format::Json])?;
            let spec = load_model(&model.path, echo)?;
            let model_report = validate_chain(&spec);
            let strategy_report: Option<ValidationReport> = match strategy {
                Some(path) => Some(validate_strategy(&parse_json(path)?, spec.n_internal)),
                None => None,
            };
            let valid = model_report.is_ok() && strategy_report.as_ref().is_none_or(ValidationReport::is_ok);
            let body = to_json(&json!({
                "valid": valid,
                "model": model_report,
                "strategy": strategy_report,
            }));
            Ok(Outcome {
                body,
                status: if valid { 0 } else { 1 },
            })
        }
        Command::Analyze { model, epsilon } => {
            let format = format_or(cli.format, Format::Json, &[Format::Json, Format::Csv])?;
            let spec = load_model(&model.path, echo)?.validated()?;
            let analysis = AbsorptionAnalysis::compute(&spec)?;
            let body = match format {
                Format::Json => to_json(&json!({
                    "b": analysis.b,
                    "r": analysis.r,
                    "positivity": check_positivity(&analysis, *epsilon),
                })),
                Format::Csv => {
                    let mut out = String::from("state,b0,b1,r\n");
                    for (i, (b, r)) in analysis.b.iter().zip(&analysis.r).enumerate() {
                        writeln!(out, "{},{},{},{}", label_of(i), b[0], b[1], r).unwrap();
                    }
                    out
                }
            };
            Ok(Outcome::ok(body))
        }
        Command::Indicator {
            model,
            strategy,
            route,
        } => {
            format_or(cli.format, Format::Json, &[Format::Json])?;
            let spec = load_model(&model.path, echo)?.validated()?;
            let strategy = load_strategy(strategy, spec.n_internal)?;
            let analysis = AbsorptionAnalysis::compute(&spec)?;
            let value = indicator(&strategy, &spec, &analysis, *route)?;
            let chain = EmbeddedChain::new(&strategy, &spec, &analysis)?;
            Ok(Outcome::ok(to_json(&json!({
                "value": value,
                "route": route,
                "p_tilde": chain.p_tilde,
                "pi": chain.pi,
                "rho": chain.rho,
            }))))
        }
        Command::Table { model, which } => {
            let format = format_or(cli.format, Format::Csv, &[Format::Csv, Format::Json])?;
            let spec = load_model(&model.path, echo)?.validated()?;
            let analysis = AbsorptionAnalysis::compute(&spec)?;
            let tables = cost_coefficients(&spec, &analysis)?;
            let table = match which {
                Which::A => &tables.a_table,
                Which::B => &tables.b_table,
                Which::C => &tables.c_table,
            };
            Ok(Outcome::ok(match format {
                Format::Csv => table_csv(table),
                Format::Json => to_json(table),
            }))
        }
        Command::Solve {
            model,
            direction,
            refute_samples,
            seed,
            table_csv: table_path,
        } => {
            format_or(cli.format, Format::Json, &[Format::Json])?;
            let spec = load_model(&model.path, echo)?.validated()?;
            let analysis = AbsorptionAnalysis::compute(&spec)?;
            let control = solve_with_analysis(&spec, &analysis, *direction)?;
            let refutation = if *refute_samples > 0 {
                Some(refute_with_random_strategies(
                    &spec,
                    &control,
                    *refute_samples,
                    seed.seed,
                )?)
            } else {
                None
            };
            if let Some(path) = table_path {
                write(path, &table_csv(&control.c_table))?;
            }
            let mut doc = serde_json::to_value(&control).expect("control serializes");
            doc["refutation"] = serde_json::to_value(&refutation).expect("report serializes");
            Ok(Outcome::ok(to_json(&doc)))
        }
        Command::Simulate {
            model,
            strategy,
            cycles,
            replications,
            seed,
            cycle_limit,
        } => {
            format_or(cli.format, Format::Json, &[Format::Json])?;
            let spec = load_model(&model.path, echo)?.validated()?;
            let strategy = load_strategy(strategy, spec.n_internal)?;
            let options = SimulationOptions {
                replications: *replications,
                cycle_limit: *cycle_limit,
            };
            let stats = simulate_with(&spec, &strategy, *cycles, seed.seed, &options)?;
            let mut doc = serde_json::to_value(&stats).expect("stats serialize");
            doc["seed"] = json!(seed.seed);
            doc["replications"] = json!(replications);
            Ok(Outcome::ok(to_json(&doc)))
        }
        Command::Trajectory {
            model,
            strategy,
            max_steps,
            seed,
        } => {
            let format = format_or(cli.format, Format::Csv, &[Format::Csv, Format::Json])?;
            let spec = load_model(&model.path, echo)?.validated()?;
            let strategy = load_strategy(strategy, spec.n_internal)?;
            let events = sample_trajectory(&spec, &strategy, *max_steps, seed.seed)?;
            Ok(Outcome::ok(match format {
                Format::Csv => trajectory_csv(&events),
                Format::Json => to_json(&events),
            }))
        }
    }
}

pub fn emit(cli: &Cli, body: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(path) => write(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
