//! Runs a scenario file, or every built-in when no path is given, and writes
//! each report as CSV under the system temp directory.
//!
//! ```text
//! cargo run --example run_scenario
//! cargo run --example run_scenario -- path/to/scenario.json
//! ```

use policy_lab::scenario::{builtin, builtin_names, load_scenario, run_experiment, write_report, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenarios = match std::env::args().nth(1) {
        Some(path) => vec![load_scenario(path)?],
        None => builtin_names().into_iter().map(builtin).collect::<Result<_, _>>()?,
    };
    let out_dir = std::env::temp_dir().join("policy-lab-reports");
    std::fs::create_dir_all(&out_dir)?;
    for scenario in &scenarios {
        let report = run_experiment(scenario);
        let path = out_dir.join(format!("{}.csv", report.scenario_id));
        write_report(&report, ReportFormat::Csv, &path)?;
        let failed: Vec<&str> = report.failed_verdicts().map(|v| v.name.as_str()).collect();
        println!(
            "{:<16} {:<22} {:>3} runs  {}  -> {}",
            report.scenario_id,
            report.experiment,
            report.runs.len(),
            if failed.is_empty() {
                "ok".to_string()
            } else {
                format!("FAILED {failed:?}")
            },
            path.display()
        );
    }
    Ok(())
}
