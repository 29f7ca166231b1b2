use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use phuiguard::harness::{
    format_itemsets, format_phuis, hide, parse_itemsets, run_pipeline, select_sensitive, sweep,
    InputSpec, RunConfig, RunSettings, SelectionMode, SweepAxis,
};
use phuiguard::io::{write_dataset, write_utility_table, FormatKind};
use phuiguard::metrics::evaluate;
use phuiguard::miner::mine_phuis;
use phuiguard::model::parse_rational;
use phuiguard::sanitizer::{replay, Algorithm, SanitizeReport};
use phuiguard::synthetic::{generate_synthetic, SyntheticParams};
use phuiguard::{Dataset, Error, Itemset, Thresholds};

#[derive(Parser)]
#[command(
    name = "phuiguard",
    version,
    about = "Mine and hide periodic high-utility itemsets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every periodic high-utility itemset.
    Mine {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Write the list here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick sensitive itemsets from the mined PHUIs.
    Select {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hide the itemsets listed in a sensitive file.
    Sanitize {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long, default_value = "mu-map")]
        algo: Algorithm,
        #[arg(long)]
        sensitive_file: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare an original and a sanitized dataset.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Sanitized dataset, same format and utility table as the input.
        #[arg(long)]
        sanitized: PathBuf,
        #[arg(long)]
        sensitive_file: PathBuf,
        /// Edit log to replay against the input; must reproduce `--sanitized`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for metrics.json and metrics.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mine, select, sanitize, re-mine and evaluate in one go.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long, default_value = "mu-map")]
        algo: Algorithm,
        /// Pin the sensitive itemsets instead of sampling them.
        #[arg(long)]
        sensitive_file: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the pipeline over a grid of values, one CSV row per run.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        /// sep, minutil, maxper or prefix.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Defaults to all five algorithms.
        #[arg(long = "algo", value_delimiter = ',')]
        algos: Vec<Algorithm>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic dataset.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        transactions: usize,
        #[arg(long, default_value_t = 50)]
        items: u32,
        #[arg(long, default_value_t = 5)]
        avg_len: usize,
        #[arg(long, default_value_t = 10)]
        max_qty: u64,
        #[arg(long, default_value_t = 10)]
        max_eu: u64,
        /// Probability of planting item 1 on its stride.
        #[arg(long, default_value_t = 0.5)]
        bias: f64,
        #[arg(long, default_value_t = 0.0)]
        skew: f64,
        #[arg(long, default_value = "quantity")]
        format: FormatKind,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the utility table (quantity format only).
        #[arg(long)]
        utable: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "quantity")]
    format: FormatKind,
    /// Utility table, one `item eu` pair per line.
    #[arg(long)]
    utable: Option<PathBuf>,
}

impl InputArgs {
    fn spec(&self) -> InputSpec {
        InputSpec {
            path: self.input.clone(),
            format: self.format,
            utility_table: self.utable.clone(),
        }
    }

    fn load(&self) -> phuiguard::Result<Dataset> {
        self.spec().load()
    }
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    minutil: u64,
    #[arg(long, default_value_t = 1)]
    minper: usize,
    #[arg(long)]
    maxper: usize,
    /// Integer, decimal or fraction such as 5/3.
    #[arg(long, default_value = "1")]
    minavg: String,
    #[arg(long)]
    maxavg: String,
}

impl ThresholdArgs {
    fn build(&self) -> phuiguard::Result<Thresholds> {
        Thresholds::new(
            self.minutil,
            self.minper,
            self.maxper,
            parse_rational(&self.minavg).map_err(|e| Error::Config(format!("--minavg: {e}")))?,
            parse_rational(&self.maxavg).map_err(|e| Error::Config(format!("--maxavg: {e}")))?,
        )
    }
}

#[derive(Args)]
struct SelectionArgs {
    /// Fraction of the mined PHUIs to mark sensitive.
    #[arg(long, default_value_t = 0.05)]
    sep: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "random")]
    mode: SelectionMode,
}

fn read_itemsets(path: &Path) -> anyhow::Result<Vec<Itemset>> {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    Ok(parse_itemsets(&text)?)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_sanitized(dir: &Path, db: &Dataset, format: FormatKind) -> anyhow::Result<()> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    fs::write(dir.join("sanitized.txt"), write_dataset(db, format)).map_err(Error::from)?;
    if format == FormatKind::Quantity {
        fs::write(
            dir.join("sanitized_utility.txt"),
            write_utility_table(db.utilities()),
        )
        .map_err(Error::from)?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Mine {
            input,
            thresholds,
            out,
        } => {
            let db = input.load()?;
            let phuis = mine_phuis(&db, &thresholds.build()?)?;
            emit(out.as_deref(), &format_phuis(&phuis))
        }
        Command::Select {
            input,
            thresholds,
            selection,
            out,
        } => {
            let db = input.load()?;
            let phuis = mine_phuis(&db, &thresholds.build()?)?;
            let chosen = select_sensitive(&phuis, selection.sep, selection.seed, selection.mode)?;
            emit(out.as_deref(), &format_itemsets(&chosen))
        }
        Command::Sanitize {
            input,
            thresholds,
            algo,
            sensitive_file,
            out,
        } => {
            let db = input.load()?;
            let t = thresholds.build()?;
            let sensitive = read_itemsets(&sensitive_file)?;
            let phuis = mine_phuis(&db, &t)?;
            if let Some(x) = sensitive
                .iter()
                .find(|x| !phuis.iter().any(|r| &r.itemset == *x))
            {
                return Err(Error::NotSubset(x.clone()).into());
            }
            let (sanitized, report) = hide(db, &sensitive, &t, algo, &phuis)?;
            write_sanitized(&out, &sanitized, input.format)?;
            fs::write(out.join("report.jsonl"), report.to_jsonl()).map_err(Error::from)?;
            eprintln!(
                "{} edits, {} itemsets hidden",
                report.steps.len(),
                report.hidden_by.len()
            );
            Ok(())
        }
        Command::Evaluate {
            input,
            thresholds,
            sanitized,
            sensitive_file,
            report,
            out,
        } => {
            let t = thresholds.build()?;
            let original = input.load()?;
            let cleaned = InputSpec {
                path: sanitized,
                ..input.spec()
            }
            .load()?;
            if let Some(path) = report {
                let log =
                    SanitizeReport::from_jsonl(&fs::read_to_string(path).map_err(Error::from)?)?;
                if replay(&original, &log)? != cleaned {
                    return Err(Error::Invariant(
                        "replaying the report does not reproduce the sanitized dataset".into(),
                    )
                    .into());
                }
            }
            let sensitive = read_itemsets(&sensitive_file)?;
            let before = mine_phuis(&original, &t)?;
            let after = mine_phuis(&cleaned, &t)?;
            let metrics = evaluate(&original, &cleaned, &before, &sensitive, &after)?;
            let json = serde_json::to_string_pretty(&metrics).map_err(Error::from)? + "\n";
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(Error::from)?;
                fs::write(dir.join("metrics.json"), &json).map_err(Error::from)?;
                fs::write(dir.join("metrics.csv"), metrics.to_csv()).map_err(Error::from)?;
            }
            print!("{json}");
            Ok(())
        }
        Command::Pipeline {
            input,
            thresholds,
            selection,
            algo,
            sensitive_file,
            out,
        } => {
            let sensitive = sensitive_file.as_deref().map(read_itemsets).transpose()?;
            let config = RunConfig {
                input: input.spec(),
                settings: RunSettings {
                    thresholds: thresholds.build()?,
                    sep: selection.sep,
                    seed: selection.seed,
                    algorithm: algo,
                    mode: selection.mode,
                    sensitive,
                },
                out_dir: out,
            };
            let artifacts = run_pipeline(&config)?;
            let m = &artifacts.outcome.metrics;
            eprintln!(
                "PI {} SPI {} edits {} | HF {:.2}% MC {:.2}% AC {:.2}% | IUS {:.4} DUS {:.4} DSS {:.4}",
                artifacts.outcome.original_phuis.len(),
                artifacts.outcome.sensitive.len(),
                artifacts.outcome.report.steps.len(),
                m.hf_pct,
                m.mc_pct,
                m.ac_pct,
                m.ius,
                m.dus,
                m.dss
            );
            Ok(())
        }
        Command::Sweep {
            input,
            thresholds,
            selection,
            axis,
            values,
            algos,
            out,
        } => {
            let db = input.load()?;
            let template = RunSettings {
                thresholds: thresholds.build()?,
                sep: selection.sep,
                seed: selection.seed,
                algorithm: Algorithm::MuMap,
                mode: selection.mode,
                sensitive: None,
            };
            let algos = if algos.is_empty() {
                Algorithm::ALL.to_vec()
            } else {
                algos
            };
            let csv = sweep(&db, &template, axis, &values, &algos)?;
            emit(out.as_deref(), &csv)
        }
        Command::Gen {
            seed,
            transactions,
            items,
            avg_len,
            max_qty,
            max_eu,
            bias,
            skew,
            format,
            out,
            utable,
        } => {
            let mut params =
                SyntheticParams::new(seed, transactions, items, avg_len, max_qty, max_eu, bias);
            params.skew = skew;
            let db = generate_synthetic(&params)?;
            match (format, utable) {
                (FormatKind::Quantity, None) => {
                    bail!(Error::Config(
                        "the quantity format needs --utable for the table".into()
                    ))
                }
                (FormatKind::Quantity, Some(path)) => {
                    fs::write(path, write_utility_table(db.utilities())).map_err(Error::from)?
                }
                (FormatKind::Spmf, _) => {}
            }
            fs::write(out, write_dataset(&db, format)).map_err(Error::from)?;
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::root) {
        Some(Error::Parse { .. } | Error::InvalidDataset(_) | Error::Json(_)) => 3,
        Some(Error::Invariant(_)) => 4,
        Some(Error::Io(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
