pub mod check_theory;
pub mod enumerate;
pub mod fit;
pub mod predict;
pub mod simulate;

use crate::common::CliError;
use esb_core::{ChainConfig, HyperParams};
use std::path::Path;

/// Hyperparameters from file, or shape-derived defaults.
pub fn load_hyper(
    path: Option<&Path>,
    data: &esb_core::Dataset,
) -> Result<HyperParams, CliError> {
    let h = match path {
        Some(p) => HyperParams::from_json_file(p)
            .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
        None => HyperParams::default_for(data.n(), data.p()),
    };
    h.validate_for(data).map_err(CliError::from)?;
    for w in h.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(h)
}

/// Chain settings from file, or the default sampler run.
pub fn load_chain(path: Option<&Path>, seed_override: Option<u64>) -> Result<ChainConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<ChainConfig>(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?
        }
        None => ChainConfig::new(20_000, 5_000, 0),
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}
