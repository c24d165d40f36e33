use crate::common::{write_json_out, CliError, CliResult};
use crate::CheckTheoryArgs;
use esb_core::rng::stream_rng;
use esb_core::search::{enumerate_posterior, PosteriorSource};
use esb_core::simulate::{generate_instance, DesignKind, SignalMode, SimConfig};
use esb_core::theory::{
    bvm_distance, check_central_tail, check_noncentral_bounds, restricted_kappa,
    restricted_kappa_series,
};
use esb_core::ModelIndex;
use nalgebra::DMatrix;
use rand::Rng;
use serde_json::json;

/// Central two-sided grid points `(p, a)`.
const CENTRAL_GRID: [(usize, f64); 4] = [(10, 30.0), (20, 15.0), (50, 40.0), (5, 2.0)];

/// Noncentral points `(p, λ, c, ω)`; each yields an upper-tail, a
/// lower-tail and a rate-shape report.
const NONCENTRAL_GRID: [(usize, f64, f64, f64); 4] = [
    (10, 5.0, 30.0, 0.5),
    (5, 2.0, 4.0, 0.5),
    (20, 10.0, 50.0, 0.5),
    (10, 1.0, 8.0, 0.5),
];

pub fn run(args: CheckTheoryArgs) -> CliResult {
    if args.mc < 10_000 {
        return Err(CliError::input("need at least 10000 Monte Carlo draws"));
    }
    let mut checks: Vec<serde_json::Value> = Vec::new();
    let mut all_tail_ok = true;

    for (i, &(p, a)) in CENTRAL_GRID.iter().enumerate() {
        let mut rng = stream_rng(args.seed, 100 + i as u64);
        let rep = check_central_tail(p, a, args.mc, &mut rng);
        all_tail_ok &= rep.passed;
        checks.push(json!({
            "name": format!("central_tail_p{p}_a{a}"),
            "kind": "tail_bound",
            "report": rep,
        }));
    }

    for (i, &(p, lambda, c, omega)) in NONCENTRAL_GRID.iter().enumerate() {
        let mut rng = stream_rng(args.seed, 200 + i as u64);
        let reps = check_noncentral_bounds(p, lambda, c, omega, args.mc, &mut rng);
        all_tail_ok &= reps.upper_tail.passed && reps.lower_tail.passed;
        checks.push(json!({
            "name": format!("noncentral_upper_p{p}_l{lambda}_c{c}"),
            "kind": "tail_bound",
            "report": reps.upper_tail,
        }));
        checks.push(json!({
            "name": format!("noncentral_lower_p{p}_l{lambda}_c{c}"),
            "kind": "tail_bound",
            "report": reps.lower_tail,
        }));
        checks.push(json!({
            "name": format!("noncentral_rate_shape_p{p}_omega{omega}"),
            "kind": "rate_shape",
            "report": reps.lower_rate_shape,
        }));
    }

    // restricted eigenvalue: a seeded Gaussian design, then a duplicated
    // column that must force kappa(2) to zero
    let mut rng = stream_rng(args.seed, 300);
    let x = DMatrix::<f64>::from_fn(20, 8, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let series = restricted_kappa_series(&x, 3).map_err(CliError::from)?;
    let non_increasing = series.windows(2).all(|w| w[1].kappa <= w[0].kappa + 1e-12);
    checks.push(json!({
        "name": "restricted_kappa_series_gaussian_20x8",
        "kind": "kappa_series",
        "reports": series,
        "non_increasing": non_increasing,
    }));
    let mut x_dup = x.clone();
    let dup = x_dup.column(2).clone_owned();
    x_dup.set_column(5, &dup);
    let dup_report = restricted_kappa(&x_dup, 2).map_err(CliError::from)?;
    checks.push(json!({
        "name": "restricted_kappa_duplicated_column",
        "kind": "kappa_zero",
        "report": &dup_report,
        "near_zero": dup_report.kappa.abs() < 1e-8,
    }));

    // Gaussian-limit distance on a small synthetic instance with the true
    // error variance supplied
    let sim = SimConfig {
        n: 120,
        p: 8,
        s_star: 2,
        design: DesignKind::IidGaussian,
        signal: SignalMode::BetaMin { k: 3.0 },
        sigma0_sq: 1.0,
        replications: 1,
        seed: args.seed,
        hyper: None,
        chain: None,
    };
    let mut rng = stream_rng(args.seed, 400);
    let (data, beta_star) = generate_instance(&sim, &mut rng).map_err(CliError::from)?;
    let hyper = esb_core::HyperParams {
        r: 4,
        ..esb_core::HyperParams::default_for(data.n(), data.p())
    };
    let truth = ModelIndex::new(beta_star.iter().map(|&(j, _)| j).collect())
        .expect("distinct support");
    let table = enumerate_posterior(&data, &hyper).map_err(CliError::from)?;
    let bvm = bvm_distance(&data, &PosteriorSource::Table(&table), &truth, 1.0, &hyper)
        .map_err(CliError::from)?;
    checks.push(json!({
        "name": "bvm_distance_synthetic_n120_p8",
        "kind": "bvm",
        "report": bvm,
        "note": "true error variance supplied by the synthetic truth",
    }));

    let doc = json!({
        "schema_version": esb_core::SCHEMA_VERSION,
        "command": "check-theory",
        "config": { "seed": args.seed, "n_mc": args.mc },
        "all_tail_bounds_passed": all_tail_ok,
        "checks": checks,
    });
    write_json_out(&args.out, &doc)
}
