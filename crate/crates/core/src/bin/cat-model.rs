use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cat_core::cli::{cmd_evaluate, cmd_explain, cmd_oracle_check, cmd_sweep, cmd_train, Overrides};
use cat_core::oracle::OracleConfig;
use cat_core::CatError;

#[derive(Parser)]
#[command(name = "cat-model", version, about = "Train, evaluate and explain concept-grouped Taylor models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct OverrideArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout_encoder: Option<f64>,
    #[arg(long)]
    dropout_taylor: Option<f64>,
    /// Feed preprocessed features straight into the Taylor network.
    #[arg(long)]
    bypass_encoders: bool,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            order: self.order,
            rank: self.rank,
            learning_rate: self.lr,
            dropout_encoder: self.dropout_encoder,
            dropout_taylor: self.dropout_taylor,
            bypass_encoders: self.bypass_encoders,
            patience: self.patience,
            batch_size: self.batch_size,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split, preprocess and train; writes model.json and history.csv.
    Train {
        data: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "cat-out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Score a CSV file with a trained model.
    Evaluate {
        archive: PathBuf,
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the polynomial, contribution and shape-function reports.
    Explain {
        archive: PathBuf,
        reference: PathBuf,
        #[arg(long, default_value = "cat-explain")]
        out: PathBuf,
    },
    /// Train every cell of a hyperparameter grid and rank them.
    Sweep {
        data: PathBuf,
        spec: PathBuf,
        grid: PathBuf,
        #[arg(long, default_value = "cat-sweep")]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Check the factored network against its dense and numeric oracles.
    OracleCheck {
        /// JSON file overriding the default sizes and tolerances.
        #[arg(long)]
        sizes: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_kronecker_order: bool,
    },
}

fn run(cli: Cli) -> Result<(), CatError> {
    match cli.command {
        Command::Train {
            data,
            spec,
            config,
            out,
            overrides,
        } => {
            let s = cmd_train(&data, &spec, config.as_deref(), &overrides.overrides(), &out)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            let h = &s.archive.history;
            println!(
                "trained {} epochs (best {}), {} parameters",
                h.epochs, h.best_epoch, s.param_count
            );
            for (split, metrics) in [("validation", &s.validation), ("test", &s.test)] {
                for m in metrics {
                    println!("{split} {} {:.4}", m.metric, m.value);
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Evaluate { archive, data, out } => {
            let s = cmd_evaluate(&archive, &data, out.as_deref())?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            for m in &s.metrics {
                println!("{} {:.4} (n={})", m.metric, m.value, m.count);
            }
        }
        Command::Explain { archive, reference, out } => {
            let s = cmd_explain(&archive, &reference, &out)?;
            print!("{}", s.polynomial);
            println!("wrote {} files to {}", s.files.len(), out.display());
        }
        Command::Sweep {
            data,
            spec,
            grid,
            out,
            overrides,
        } => {
            let board = cmd_sweep(&data, &spec, &grid, &overrides.overrides(), &out)?;
            print!("{}", board.to_csv());
        }
        Command::OracleCheck {
            sizes,
            seed,
            out,
            corrupt_kronecker_order,
        } => {
            let mut cfg = match sizes {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CatError::Config(format!("{}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| CatError::Config(format!("oracle sizes: {e}")))?
                }
                None => OracleConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.corrupt_kronecker_order |= corrupt_kronecker_order;
            let report = cmd_oracle_check(&cfg, out.as_deref())?;
            print!("{}", report.to_text());
            report.check()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {} {}", e.class(), e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
