use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use policy_lab::scenario::{
    builtin, builtin_names, load_scenario, render_report, run_experiment_with_seed, write_report, ReportFormat,
};

#[derive(Parser)]
#[command(
    name = "policy-lab",
    version,
    about = "Run reward-perturbation experiments on finite MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario and emit its report.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON scenario file.
    #[arg(required_unless_present_any = ["builtin", "list_builtins"], conflicts_with = "builtin")]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the names of the built-in scenarios and exit.
    #[arg(long)]
    list_builtins: bool,
    /// Run a built-in scenario by name.
    #[arg(long)]
    builtin: Option<String>,
}

const EXIT_VERDICT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    if args.list_builtins {
        for name in builtin_names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }

    let loaded = match (&args.builtin, &args.scenario) {
        (Some(name), _) => builtin(name),
        (None, Some(path)) => load_scenario(path),
        (None, None) => unreachable!("clap requires a scenario source"),
    };
    let scenario = match loaded {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let report = run_experiment_with_seed(&scenario, args.seed.unwrap_or(scenario.params.seed));
    match &args.out {
        Some(path) => {
            if let Err(e) = write_report(&report, args.format, path) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
        None => print!("{}", render_report(&report, args.format)),
    }

    for v in &report.verdicts {
        let mark = if v.holds { "ok  " } else { "FAIL" };
        eprintln!("{mark} {}: expected {}, observed {}", v.name, v.expected, v.observed);
    }
    eprintln!(
        "{}: {} runs, {} in {:.3}s",
        report.scenario_id,
        report.runs.len(),
        if report.all_hold {
            "all verdicts hold"
        } else {
            "some verdicts failed"
        },
        report.wall_clock.as_secs_f64()
    );
    if report.all_hold {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERDICT_FAILED)
    }
}
