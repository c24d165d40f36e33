use crate::common::{CliError, CliResult};
use crate::SimulateArgs;
use esb_core::simulate::{run_experiment, write_experiment, SimConfig};
use serde::Deserialize;

#[derive(Deserialize)]
struct GridFile {
    configs: Vec<SimConfig>,
}

pub fn run(args: SimulateArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::input(format!("{}: {e}", args.config.display())))?;
    // accept either {"configs": [...]} or a bare array
    let grid: Vec<SimConfig> = match serde_json::from_str::<GridFile>(&text) {
        Ok(g) => g.configs,
        Err(_) => serde_json::from_str::<Vec<SimConfig>>(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", args.config.display())))?,
    };
    let outcome = run_experiment(&grid).map_err(CliError::from)?;
    write_experiment(&outcome, &args.out).map_err(CliError::from)?;
    for f in ["report.json", "report.csv", "trials.jsonl"] {
        println!("wrote {}", args.out.join(f).display());
    }
    let failures: usize = outcome.report.aggregates.iter().map(|a| a.failures).sum();
    if failures > 0 {
        eprintln!("warning: {failures} trial(s) failed; see trials.jsonl for error tags");
    }
    Ok(())
}
