//! Command line front end: run benchmark grids, rank the persisted results,
//! and drive the statistical validity experiments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stratbench::harness::{
    rank_functions, run_suite, store_metadata, stratified_tables, ExperimentConfig, ResultStore,
    Strata,
};
use stratbench::optimizers::OptimizerConfig;
use stratbench::ranking::aggregate;
use stratbench::stattests::TestKind;
use stratbench::testfns::Registry;
use stratbench::validity::{
    be_moments, cells_to_csv, ks_normality_experiment, KsExperimentConfig, NullSource,
    Standardization,
};
use stratbench::{Error, Result};

#[derive(Parser)]
#[command(name = "stratbench", version, about = "Benchmark harness for black-box maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the registry of test functions
    List,
    /// Run an optimizer x function x repeat grid and persist the results
    Run(RunArgs),
    /// Rank optimizers from persisted results and print aggregate tables
    Rank(RankArgs),
    /// Validity experiments behind the rank-based protocol
    #[command(subcommand)]
    Validity(ValidityCommand),
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated function ids, or "all"
    #[arg(long, value_delimiter = ',', default_value = "all")]
    functions: Vec<String>,
    /// Comma-separated optimizer ids, or "all"
    #[arg(long, value_delimiter = ',', default_value = "all")]
    optimizers: Vec<String>,
    /// Repeats per (function, optimizer) cell
    #[arg(long, default_value_t = 30)]
    repeats: u32,
    /// Master seed; per-run seeds are derived from it
    #[arg(long)]
    seed: u64,
    /// Output path for the line-delimited run records
    #[arg(long)]
    out: PathBuf,
    /// Override the per-function evaluation budget
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct RankArgs {
    /// Run records written by `run`
    #[arg(long = "in")]
    input: PathBuf,
    /// Per-comparison significance level
    #[arg(long, default_value_t = 0.0005)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = StratifyArg::None)]
    stratify: StratifyArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    format: FormatArg,
    /// Pairwise test backing the ballots
    #[arg(long, value_enum, default_value_t = TestArg::U)]
    test: TestArg,
    /// Skip the AUC refinement of tie groups
    #[arg(long)]
    no_auc: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum StratifyArg {
    None,
    Dimension,
    Attribute,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    /// Mann-Whitney U
    U,
    /// Welch's t
    T,
}

#[derive(Subcommand)]
enum ValidityCommand {
    /// Rejection rates of a KS normality test on means of best-of-T draws
    Ks(KsArgs),
    /// Moments and Berry-Esseen quotient of the best-of-T distribution
    BerryEsseen {
        /// Emit one row per T in 1..=t_max
        #[arg(long, default_value_t = 100)]
        t_max: u32,
    },
}

#[derive(Args)]
struct KsArgs {
    #[arg(long = "t-values", value_delimiter = ',', default_value = "2,100")]
    t_values: Vec<u32>,
    #[arg(long = "n-values", value_delimiter = ',', default_value = "5,10,30")]
    n_values: Vec<u32>,
    /// KS tests per (T, n) cell
    #[arg(long, default_value_t = 200)]
    tests: u32,
    /// Sample means per test
    #[arg(long, default_value_t = 200)]
    samples: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standardize each test by its estimated mean/sd instead of the
    /// analytic values
    #[arg(long)]
    estimated: bool,
    /// Replace the best-of-T draws with unit normal draws (calibration
    /// control)
    #[arg(long)]
    control: bool,
}

fn main() {
    // die quietly when the consumer of a pipe goes away, like cat or grep
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::List => cmd_list(),
        Command::Run(args) => cmd_run(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Validity(ValidityCommand::Ks(args)) => cmd_ks(args),
        Command::Validity(ValidityCommand::BerryEsseen { t_max }) => cmd_berry_esseen(t_max),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn cmd_list() -> Result<()> {
    print!("{}", Registry::standard().manifest());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let registry = Registry::standard();
    let functions: Vec<String> = if args.functions == ["all"] {
        registry.ids().into_iter().map(str::to_string).collect()
    } else {
        args.functions
    };
    let optimizers: Vec<OptimizerConfig> = if args.optimizers == ["all"] {
        OptimizerConfig::standard()
    } else {
        args.optimizers
            .iter()
            .map(|id| OptimizerConfig::from_id(id))
            .collect::<Result<_>>()?
    };
    let mut config =
        ExperimentConfig::new(functions, optimizers, args.seed).with_repeats(args.repeats);
    if let Some(budget) = args.budget {
        config = config.with_budget(budget);
    }
    let store = run_suite(&config, &registry)?;
    for f in store.failures() {
        eprintln!(
            "failed: {}/{} repeat {} (seed {}): {}",
            f.function_id, f.optimizer_id, f.repeat, f.seed, f.message
        );
    }
    store.save(&args.out)?;
    println!("wrote {} records to {}", store.len(), args.out.display());
    if store.is_empty() {
        return Err(Error::MissingData("every run failed".into()));
    }
    Ok(())
}

/// Partition the stored optimizer ids for sectioned markdown output.
fn method_sections(store: &ResultStore) -> Vec<(String, Vec<String>)> {
    let (mut based, mut free) = (Vec::new(), Vec::new());
    for id in store.optimizer_ids() {
        match OptimizerConfig::from_id(&id) {
            Ok(cfg) if cfg.is_model_based() => based.push(id),
            _ => free.push(id),
        }
    }
    vec![("model-based".into(), based), ("model-free".into(), free)]
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let store = ResultStore::load(&args.input)
        .map_err(|e| Error::MissingData(format!("{}: {e}", args.input.display())))?;
    let kind = match args.test {
        TestArg::U => TestKind::MannWhitneyU,
        TestArg::T => TestKind::WelchT,
    };
    let ballots = rank_functions(&store, args.alpha, kind, !args.no_auc)?;
    let strata = match args.stratify {
        StratifyArg::None => None,
        StratifyArg::Dimension => Some(Strata::Dimension),
        StratifyArg::Attribute => Some(Strata::Attribute),
    };

    if args.format == FormatArg::Markdown {
        println!("## ballots\n");
        for (fid, ranking) in &ballots {
            println!("- {fid}: {}", ranking.notation());
        }
        println!();
    }

    match strata {
        None => {
            let owned: Vec<_> = ballots.values().cloned().collect();
            let table = aggregate(&owned)?;
            match args.format {
                FormatArg::Csv => print!("{}", table.to_csv()),
                FormatArg::Markdown => {
                    println!("## aggregate ({} ballots)\n", table.ballots());
                    print!("{}", table.to_markdown_sectioned(&method_sections(&store)));
                }
            }
        }
        Some(strata) => {
            let meta = store_metadata(&store);
            let out = stratified_tables(&ballots, &meta, strata)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            match args.format {
                FormatArg::Csv => {
                    println!("stratum,method,borda,firsts,top_three");
                    for (label, table) in &out.tables {
                        for name in table.order() {
                            let r = table.row(&name).expect("order lists existing rows");
                            println!(
                                "{label},{name},{},{},{}",
                                r.borda_total, r.firsts, r.top_three
                            );
                        }
                    }
                }
                FormatArg::Markdown => {
                    let sections = method_sections(&store);
                    for (label, table) in &out.tables {
                        println!("## {label} ({} ballots)\n", table.ballots());
                        print!("{}", table.to_markdown_sectioned(&sections));
                        println!();
                    }
                }
            }
        }
    }
    Ok(())
}

fn cmd_ks(args: KsArgs) -> Result<()> {
    let config = KsExperimentConfig {
        t_values: args.t_values,
        n_values: args.n_values,
        tests_per_cell: args.tests,
        samples_per_test: args.samples,
        standardization: if args.estimated {
            Standardization::Estimated
        } else {
            Standardization::Analytic
        },
        source: if args.control { NullSource::NormalControl } else { NullSource::OrderStatistic },
    };
    let cells = ks_normality_experiment(&config, args.seed)?;
    print!("{}", cells_to_csv(&cells));
    Ok(())
}

fn cmd_berry_esseen(t_max: u32) -> Result<()> {
    if t_max < 1 {
        return Err(Error::InvalidArgument("t-max must be >= 1".into()));
    }
    println!("T,mean,variance,rho,quotient");
    for t in 1..=t_max {
        let m = be_moments(t)?;
        println!("{t},{},{},{},{}", m.mean, m.variance, m.rho, m.quotient);
    }
    Ok(())
}
