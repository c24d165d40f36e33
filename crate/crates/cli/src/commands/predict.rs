use crate::common::{load_dataset, write_json_out, CliError, CliResult};
use crate::PredictArgs;
use esb_core::numeric::count_models;
use esb_core::predict::{credible_interval_from_draws, predictive_mixture_sample};
use esb_core::rng::stream_rng;
use esb_core::search::{
    enumerate_posterior, run_chain, ModelPosteriorTable, PosteriorSamples, PosteriorSource,
    ENUM_GUARD,
};
use nalgebra::DMatrix;
use serde_json::json;
use std::path::Path;

/// Reads a CSV of prediction rows: header line, `p` numeric columns.
fn read_xtilde(path: &Path, p: usize) -> Result<DMatrix<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let width = rdr
        .headers()
        .map_err(|e| CliError::input(format!("{}: bad header: {e}", path.display())))?
        .len();
    if width != p {
        return Err(CliError::input(format!(
            "{}: expected {p} columns to match the design, found {width}",
            path.display()
        )));
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::input(format!("row {row}: {e}")))?;
        if rec.len() != width {
            return Err(CliError::input(format!(
                "row {row}: expected {width} fields, found {}",
                rec.len()
            )));
        }
        for field in rec.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("row {row}: non-numeric field")))?;
            rows.push(v);
        }
        count += 1;
    }
    if count == 0 {
        return Err(CliError::input(format!(
            "{}: no prediction rows",
            path.display()
        )));
    }
    Ok(DMatrix::from_row_slice(count, p, &rows))
}

pub fn run(args: PredictArgs) -> CliResult {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::input(format!(
            "interval level must lie in (0,1), got {}",
            args.level
        )));
    }
    if args.draws == 0 {
        return Err(CliError::input("need at least one predictive draw"));
    }
    let data = load_dataset(&args.data.data, args.data.format)?;
    let hyper = super::load_hyper(args.data.hyper.as_deref(), &data)?;
    let xtilde = read_xtilde(&args.xtilde, data.p())?;

    // resolve the posterior source: explicit table or draws, else exact
    // enumeration when feasible, else a fresh sampler run
    let mut table: Option<ModelPosteriorTable> = None;
    let mut samples: Option<PosteriorSamples> = None;
    let source_desc: String;
    if let Some(path) = &args.table {
        table = Some(ModelPosteriorTable::read_json(path).map_err(CliError::from)?);
        source_desc = format!("table:{}", path.display());
    } else if let Some(path) = &args.samples {
        samples =
            Some(PosteriorSamples::read_jsonl(path, data.p()).map_err(CliError::from)?);
        source_desc = format!("samples:{}", path.display());
    } else if count_models(data.p(), hyper.r) <= ENUM_GUARD {
        table = Some(enumerate_posterior(&data, &hyper).map_err(CliError::from)?);
        source_desc = "enumeration".to_string();
    } else {
        let chain = super::load_chain(args.chain.as_deref(), Some(args.seed))?;
        samples = Some(run_chain(&data, &hyper, &chain).map_err(CliError::from)?);
        source_desc = "chain".to_string();
    }
    let src = match (&table, &samples) {
        (Some(t), _) => PosteriorSource::Table(t),
        (_, Some(s)) => PosteriorSource::Samples(s),
        _ => unreachable!(),
    };

    let mut rng = stream_rng(args.seed, 1);
    let draws = predictive_mixture_sample(&src, &data, &hyper, &xtilde, args.draws, &mut rng)
        .map_err(CliError::from)?;

    let mut rows = Vec::with_capacity(xtilde.nrows());
    for r in 0..xtilde.nrows() {
        let col: Vec<f64> = draws.column(r).iter().cloned().collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let variance = if col.len() > 1 {
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() as f64 - 1.0)
        } else {
            0.0
        };
        let ci = credible_interval_from_draws(&col, args.level).map_err(CliError::from)?;
        rows.push(json!({
            "mean": mean,
            "variance": variance,
            "lower": ci.lower,
            "upper": ci.upper,
            "one_sided_upper": ci.one_sided_upper,
        }));
    }

    let doc = json!({
        "schema_version": esb_core::SCHEMA_VERSION,
        "command": "predict",
        "config": {
            "data": args.data.data.display().to_string(),
            "format": args.data.format.as_str(),
            "hyper": hyper,
            "xtilde": args.xtilde.display().to_string(),
            "source": source_desc,
            "seed": args.seed,
            "level": args.level,
            "draws": args.draws,
        },
        "rows": rows,
        "warnings": hyper.warnings(),
    });
    write_json_out(&args.out, &doc)
}
