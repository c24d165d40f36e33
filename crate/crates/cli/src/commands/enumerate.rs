use crate::common::{load_dataset, write_json_out, CliError, CliResult};
use crate::EnumerateArgs;
use esb_core::search::enumerate_posterior;
use serde_json::json;

pub fn run(args: EnumerateArgs) -> CliResult {
    let data = load_dataset(&args.data.data, args.data.format)?;
    let hyper = super::load_hyper(args.data.hyper.as_deref(), &data)?;
    let table = enumerate_posterior(&data, &hyper).map_err(CliError::from)?;

    let entries: Vec<serde_json::Value> = table
        .entries
        .iter()
        .map(|(m, &prob)| json!({ "model": m, "prob": prob }))
        .collect();
    let singular: Vec<serde_json::Value> =
        table.singular.iter().map(|m| json!(m)).collect();
    let doc = json!({
        "schema_version": esb_core::SCHEMA_VERSION,
        "command": "enumerate",
        "config": {
            "data": args.data.data.display().to_string(),
            "format": args.data.format.as_str(),
            "hyper": hyper,
        },
        "p": table.p,
        "log_normalizer": table.log_normalizer,
        "entries": entries,
        "singular": singular,
        "warnings": hyper.warnings(),
    });
    write_json_out(&args.out, &doc)
}
