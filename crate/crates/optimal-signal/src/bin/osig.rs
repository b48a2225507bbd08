use clap::{Parser, Subcommand};
use optimal_signal::cli::{cmd_backtest, cmd_fit, cmd_sweep, RunArgs};

/// Sharpe-optimal linear trading signals: fit, backtest, sweep.
#[derive(Parser)]
#[command(name = "osig", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit signal coefficients on the full dataset; writes fit_result.json.
    Fit(RunArgs),
    /// Rolling train-then-predict backtest; writes report.csv and metrics.json.
    Backtest {
        #[command(flatten)]
        args: RunArgs,
        /// Also render plot.svg (cumulative PnL, active intervals shaded).
        #[arg(long)]
        plot: bool,
    },
    /// One backtest per training size; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// Comma-separated training sizes, e.g. --sizes 250,500,750.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        sizes: Vec<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => args.resolve().and_then(|config| cmd_fit(&config)),
        Command::Backtest { args, plot } => args
            .resolve()
            .and_then(|config| cmd_backtest(&config, *plot)),
        Command::Sweep { args, sizes } => args
            .resolve()
            .and_then(|config| cmd_sweep(&config, sizes)),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
