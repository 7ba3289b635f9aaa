//! `tumulab` command-line front end.

mod commands;
mod output;
mod range;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use tumulab::{ErrorClass, SolverOptions};

#[derive(Parser, Debug)]
#[command(name = "tumulab", version, about = "Reversed Renyi correlation measures and hypothesis-testing exponents")]
pub struct Cli {
    /// Worker threads for parallel searches.
    #[arg(long, global = true, env = "TUMULAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One measure of a bipartite state.
    Measure(MeasureArgs),
    /// `L_alpha` or `I_alpha` over a range of orders.
    Sweep(SweepArgs),
    /// Umlaut, lautum or tumula information of a channel.
    Channel(ChannelArgs),
    /// Binary symmetric channel quantities over a crossover grid.
    BscCurve(BscArgs),
    /// Direct or reverse direct exponent formula of a state.
    Exponent(ExponentArgs),
    /// Finite-n hypothesis tests.
    Hyptest(HyptestArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Convergence tolerance on objective and iterates.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Random restarts on top of the deterministic starts.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    pub fn options(&self) -> Result<SolverOptions, commands::Failure> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(commands::Failure::input(format!("--tol {} outside (0, 1)", self.tol)));
        }
        Ok(SolverOptions { tol: self.tol, restarts: self.restarts, seed: self.seed, ..SolverOptions::default() })
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StateMeasure {
    Mutual,
    Lautum,
    Umlaut,
    Tumula,
    Prli,
    Prmi,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Non,
    Singly,
    Doubly,
}

impl From<VariantArg> for tumulab::Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Non => tumulab::Variant::Non,
            VariantArg::Singly => tumulab::Variant::Singly,
            VariantArg::Doubly => tumulab::Variant::Doubly,
        }
    }
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    /// State JSON: `{"dims": [dA, dB], "matrix": [[[re, im], ...], ...]}`.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub measure: StateMeasure,
    /// Required for `prli` and `prmi`.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Order for `prli` (in (0, 1]) and `prmi` (in (0, 1)).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CurveArg {
    Prli,
    Prmi,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "prli")]
    pub measure: CurveArg,
    /// Orders as `start:stop:step`.
    #[arg(long)]
    pub alpha: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChannelMeasure {
    Umlaut,
    Lautum,
    Tumula,
}

#[derive(Args, Debug)]
pub struct ChannelArgs {
    /// Channel JSON with `"type"` one of `classical`, `cq`, `quantum`.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub measure: ChannelMeasure,
    /// Random outer starts when the input grid is not exhaustive.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the exhaustive input grid.
    #[arg(long)]
    pub no_grid: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BscArgs {
    /// Crossover probabilities as `start:stop:step`, within (0, 0.5].
    #[arg(long)]
    pub eps: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Direct,
    Reverse,
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Rate `R > 0`.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Also report the extrapolated zero-rate limit.
    #[arg(long)]
    pub zero_rate: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct HyptestArgs {
    #[command(subcommand)]
    pub mode: HyptestMode,
}

#[derive(Subcommand, Debug)]
pub enum HyptestMode {
    /// Least type-II error between iid classical distributions.
    Classical {
        /// `{"p": [...]}` or `{"pxy": [[...]]}`.
        #[arg(long)]
        null: PathBuf,
        #[arg(long)]
        alt: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Least type-II error between iid quantum states.
    Quantum {
        /// Matrix JSON `{"matrix": ...}`.
        #[arg(long)]
        null: PathBuf,
        #[arg(long)]
        alt: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classical errors at type-I budget `exp(-nR)` over a range of `n`,
    /// with the empirical exponent.
    Trend {
        #[arg(long)]
        null: PathBuf,
        #[arg(long)]
        alt: PathBuf,
        #[arg(long)]
        rate: f64,
        /// Block lengths as `start:stop:step`.
        #[arg(long)]
        n: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Achievability test built from universal symmetric states.
    Achievability {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Finite-n bounds around the Sanov exponent.
    Sanov {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Fast,
    Full,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    pub level: LevelArg,
    /// Run only these check numbers, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Input => 1,
        ErrorClass::Consistency => 2,
        ErrorClass::Resource => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(exit_code(f.class))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tumulab::Error;

    #[test]
    fn error_classes_map_to_documented_codes() {
        let code = |e: Error| exit_code(commands::Failure::from(e).class);
        assert_eq!(code(Error::InvalidInput("x".into())), 1);
        assert_eq!(code(Error::Domain("x".into())), 1);
        assert_eq!(code(Error::Consistency("forms disagree".into())), 2);
        assert_eq!(code(Error::ResourceGuard("n".into())), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
