use crate::common::{load_dataset, write_json_out, CliError, CliResult};
use crate::FitArgs;
use esb_core::search::run_chain;
use serde_json::json;

pub fn run(args: FitArgs) -> CliResult {
    let data = load_dataset(&args.data.data, args.data.format)?;
    let hyper = super::load_hyper(args.data.hyper.as_deref(), &data)?;
    let chain = super::load_chain(args.chain.as_deref(), args.seed)?;

    let samples = run_chain(&data, &hyper, &chain).map_err(CliError::from)?;

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::input(e.to_string()))?;
    let samples_path = args.out.join("samples.jsonl");
    samples
        .write_jsonl(&samples_path)
        .map_err(CliError::from)?;
    println!("wrote {}", samples_path.display());

    let map_model = samples.map_model().map_err(CliError::from)?;
    let map_freq = samples
        .visit_frequencies()
        .get(&map_model)
        .copied()
        .unwrap_or(0.0);
    let inclusion = samples.inclusion_probabilities().map_err(CliError::from)?;
    let sigma2_mean =
        samples.sigma2_draws.iter().sum::<f64>() / samples.sigma2_draws.len() as f64;

    let summary = json!({
        "schema_version": esb_core::SCHEMA_VERSION,
        "command": "fit",
        "config": {
            "data": args.data.data.display().to_string(),
            "format": args.data.format.as_str(),
            "hyper": hyper,
            "chain": chain,
        },
        "n": data.n(),
        "p": data.p(),
        "draws": samples.len(),
        "acceptance_rate": samples.acceptance_rate,
        "map_model": map_model,
        "map_visit_frequency": map_freq,
        "inclusion_probabilities": inclusion,
        "sigma2_posterior_mean": sigma2_mean,
        "warnings": hyper.warnings(),
        "outputs": { "samples": "samples.jsonl" },
    });
    write_json_out(&args.out.join("summary.json"), &summary)
}
