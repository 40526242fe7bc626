use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qhom::defect::{DefectClass, PairEnumeration};
use qhom::qhom::Evaluate;
use qhom_cli::spec::ExperimentName;
use qhom_cli::{CliError, ExperimentSpec, Report, Result, RunOptions};

#[derive(Parser)]
#[command(name = "qh", version, about = "Quasihomomorphism constructions, defect scans and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a map (or normalize elements of a group) at the given elements.
    Eval {
        #[arg(long, conflicts_with = "group", required_unless_present = "group")]
        map: Option<PathBuf>,
        #[arg(long)]
        group: Option<PathBuf>,
        /// Element text; whitespace-separated lists are split. Repeatable.
        #[arg(long = "word", required = true, allow_hyphen_values = true)]
        words: Vec<String>,
    },
    /// Scan the defect set of a map.
    Defect {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value = "ulam")]
        class: DefectClass,
        #[arg(long, default_value_t = 4)]
        radius: u32,
        /// Switch to random pairs drawn with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random pairs.
        #[arg(long, default_value_t = 10_000, requires = "seed")]
        count: usize,
        /// Search radius for geometric and algebraic decompositions.
        #[arg(long)]
        rho: Option<u32>,
        #[command(flatten)]
        output: Output,
    },
    /// Run the constructibility pipeline on a map into a finite group.
    Decompose {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 4)]
        radius: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Run an experiment spec.
    Experiment {
        spec: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Check spec files without running them.
    Validate {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
    },
}

#[derive(clap::Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record elapsed time in the report.
    #[arg(long)]
    timing: bool,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => qhom_cli::write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn finish(report: Report, out: Option<&PathBuf>) -> Result<ExitCode> {
    emit(&report.to_json(), out)?;
    for a in report.assertions.iter().filter(|a| !a.passed) {
        eprintln!("assertion failed: {} ({})", a.name, a.detail);
    }
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn map_value(path: &PathBuf) -> Result<Value> {
    let (spec, _) = qhom_cli::load_map(path)?;
    Ok(serde_json::to_value(spec).expect("serializable"))
}

fn run_generated(name: ExperimentName, parameters: Value, output: &Output) -> Result<ExitCode> {
    let spec = ExperimentSpec {
        name,
        parameters,
        output: None,
    };
    let report = qhom_cli::run(&spec, RunOptions { timing: output.timing, ..Default::default() })?;
    finish(report, output.out.as_ref())
}

fn split_words(words: &[String]) -> Vec<String> {
    words
        .iter()
        .flat_map(|w| {
            let parts: Vec<String> = w.split_whitespace().map(str::to_string).collect();
            if parts.is_empty() { vec![String::new()] } else { parts }
        })
        .collect()
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Eval { map, group, words } => {
            let words = split_words(&words);
            let out = if let Some(path) = map {
                let (_, f) = qhom_cli::load_map(&path)?;
                let (g, h) = (f.domain(), f.target());
                let mut values = Vec::new();
                for (i, w) in words.iter().enumerate() {
                    let x = g
                        .parse(w)
                        .map_err(|e| CliError::spec(format!("--word[{i}]"), e.to_string()))?;
                    let y = f.evaluate(&x).map_err(qhom_cli::error::running)?;
                    values.push(json!({"input": g.format(&x), "output": h.format(&y)}));
                }
                json!({"map": f.describe(), "values": values})
            } else {
                let path = group.expect("clap requires --map or --group");
                let (_, g) = qhom_cli::load_group(&path)?;
                let mut values = Vec::new();
                for (i, w) in words.iter().enumerate() {
                    let x = g
                        .parse(w)
                        .map_err(|e| CliError::spec(format!("--word[{i}]"), e.to_string()))?;
                    let norm = g.norm(&x).map_err(qhom_cli::error::running)?;
                    values.push(json!({"input": w, "normal_form": g.format(&x), "norm": norm}));
                }
                json!({"group": g.to_string(), "values": values})
            };
            emit(&(serde_json::to_string_pretty(&out).expect("json") + "\n"), None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Defect {
            map,
            class,
            radius,
            seed,
            count,
            rho,
            output,
        } => {
            let enumeration = match seed {
                Some(seed) => PairEnumeration::Random {
                    count,
                    max_len: radius,
                    seed,
                },
                None => PairEnumeration::Exhaustive { radius },
            };
            let mut params = json!({"map": map_value(&map)?, "class": class, "enumeration": enumeration});
            if let Some(r) = rho {
                params["rho"] = json!(r);
            }
            run_generated(ExperimentName::DefectScan, params, &output)
        }
        Command::Decompose { map, radius, output } => run_generated(
            ExperimentName::Decompose,
            json!({"map": map_value(&map)?, "radius": radius}),
            &output,
        ),
        Command::Experiment { spec, output } => {
            let parsed = qhom_cli::load_experiment(&spec)?;
            let report = qhom_cli::run(&parsed, RunOptions { timing: output.timing, ..Default::default() })?;
            let out = output.out.or_else(|| parsed.output.as_ref().map(PathBuf::from));
            finish(report, out.as_ref())
        }
        Command::Validate { specs } => {
            let diagnostics = qhom_cli::validate_files(&specs);
            let text = serde_json::to_string_pretty(&json!({"diagnostics": diagnostics})).expect("json") + "\n";
            emit(&text, None)?;
            Ok(if diagnostics.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            match &e {
                CliError::Spec(ds) => {
                    for d in ds {
                        eprintln!("spec error:{d}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
