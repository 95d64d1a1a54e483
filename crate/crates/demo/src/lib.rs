//! Browser bindings. Every export takes plain numbers and strings and
//! returns a JSON string; failures come back as `{"error": "..."}`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mlnetreg::centrality::{community_centrality, eigenvector_centrality, CentralityOptions};
use mlnetreg::network::{assemble_supra, make_multiplex};
use mlnetreg::rng::derive_seed;
use mlnetreg::simulation::{self, AnRule, ExperimentConfig, ExperimentKind};
use mlnetreg::synth::{self, SbmSpec, WeightDist};
use mlnetreg::{io, Result};

/// Largest N the page accepts; keeps each call under a second or so.
pub const MAX_NODES: usize = 400;
pub const MAX_REPS: usize = 300;

fn respond<T: Serialize>(result: Result<T>) -> String {
    match result.and_then(|v| io::to_sorted_json(&v)) {
        Ok(s) => s,
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

fn bounded(name: &str, value: usize, lo: usize, hi: usize) -> Result<usize> {
    if (lo..=hi).contains(&value) {
        Ok(value)
    } else {
        Err(mlnetreg::Error::InvalidArgument(format!("{name} must be in [{lo}, {hi}], got {value}")))
    }
}

#[derive(Serialize)]
pub struct CentralityView {
    pub n_nodes: usize,
    pub n_layers: usize,
    pub a_n: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub labels: Vec<usize>,
    /// `C` as N rows of L entries.
    pub c: Vec<Vec<f64>>,
    pub z: Vec<f64>,
}

/// A multiplex of `layers` independent SBM layers with three balanced
/// communities and the given within/between edge probabilities.
pub fn centrality_view(
    n: usize,
    layers: usize,
    within: f64,
    between: f64,
    seed: u64,
    a_n_rule: &str,
) -> Result<CentralityView> {
    let n = bounded("N", n, 6, MAX_NODES)?;
    let layers = bounded("L", layers, 1, 4)?;
    let rule: AnRule = a_n_rule.parse()?;
    let labels = synth::balanced_labels(n, 3)?;
    let mats = (0..layers)
        .map(|l| {
            synth::sample_sbm_layer(&SbmSpec {
                labels: labels.clone(),
                conn_prob: synth::planted_partition(3, within, between),
                weight_dist: WeightDist::Uniform12,
                seed: derive_seed(seed, &[l as u64]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let b0 = assemble_supra(&make_multiplex(mats)?)?;
    let a_n = rule.value(n, layers);
    let bundle = eigenvector_centrality(&b0, n, layers, a_n, &CentralityOptions::default())?;
    let (_, z) = community_centrality(&bundle.c, &labels)?;
    Ok(CentralityView {
        n_nodes: n,
        n_layers: layers,
        a_n,
        lambda1: bundle.lambda1,
        lambda2: bundle.lambda2,
        gap: bundle.gap,
        labels: labels.labels().to_vec(),
        c: (0..n).map(|i| bundle.c.row(i).to_vec()).collect(),
        z,
    })
}

#[derive(Serialize)]
pub struct DistributionView {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub a_n_rule: AnRule,
    pub n_success: usize,
    pub n_failed: usize,
    pub mean_a_n_over_gap: f64,
    pub coefficients: Vec<simulation::CoefficientSummary>,
}

/// Monte Carlo distribution of the estimates for one experiment cell.
pub fn distribution_view(experiment: &str, n: usize, reps: usize, seed: u64, a_n_rule: &str) -> Result<DistributionView> {
    let kind: ExperimentKind = experiment.parse()?;
    if kind == ExperimentKind::SigmaMinStudy {
        return Err(mlnetreg::Error::InvalidArgument("use the sigma_min curve for that study".into()));
    }
    let mut config = ExperimentConfig::new(kind);
    config.n_values = vec![bounded("N", n, 20, MAX_NODES)?];
    config.n_reps = bounded("replications", reps, 1, MAX_REPS)?;
    config.a_n_rules = vec![a_n_rule.parse()?];
    config.master_seed = seed;
    config.threads = Some(1);
    let report = simulation::run_experiment(&config)?;
    // the RCFE comparison puts C-MNetR first; show the model being compared
    let cell = report.cells.last().expect("one cell per model");
    Ok(DistributionView {
        experiment: kind,
        n: cell.n,
        a_n_rule: cell.a_n_rule,
        n_success: cell.n_success,
        n_failed: cell.n_failed,
        mean_a_n_over_gap: cell.mean_a_n_over_gap,
        coefficients: cell.coefficients.clone(),
    })
}

/// `σ_min((I − P_X)V)` and `σ_min·√N` over a comma-separated list of N.
pub fn sigma_min_view(n_list: &str, seed: u64) -> Result<Vec<simulation::SigmaMinRow>> {
    let ns = n_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| mlnetreg::Error::InvalidArgument(format!("bad N '{s}'")))
                .and_then(|n| bounded("N", n, 20, MAX_NODES))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut config = ExperimentConfig::new(ExperimentKind::SigmaMinStudy);
    config.n_values = ns;
    config.master_seed = seed;
    simulation::sigma_min_study(&config)
}

#[wasm_bindgen]
pub fn explore_centrality(n: usize, layers: usize, within: f64, between: f64, seed: u32, a_n_rule: &str) -> String {
    respond(centrality_view(n, layers, within, between, seed as u64, a_n_rule))
}

#[wasm_bindgen]
pub fn estimate_distribution(experiment: &str, n: usize, reps: usize, seed: u32, a_n_rule: &str) -> String {
    respond(distribution_view(experiment, n, reps, seed as u64, a_n_rule))
}

#[wasm_bindgen]
pub fn sigma_min_curve(n_list: &str, seed: u32) -> String {
    respond(sigma_min_view(n_list, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn centrality_json_shape() {
        let v = parse(&explore_centrality(30, 2, 0.8, 0.1, 1, "sqrt-n"));
        assert_eq!(v["c"].as_array().unwrap().len(), 30);
        assert_eq!(v["z"].as_array().unwrap().len(), 30);
        assert!(v["gap"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn distribution_json_shape() {
        let v = parse(&estimate_distribution("ccmnetr-noiseless", 40, 12, 3, "sqrt-n"));
        assert_eq!(v["n_success"], 12);
        let names: Vec<&str> = v["coefficients"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["name"].as_str().unwrap())
            .collect();
        assert_eq!(names, ["x1", "x2", "z"]);
        let rcfe = parse(&estimate_distribution("rcfe-comparison", 40, 3, 3, "linear-n"));
        assert_eq!(rcfe["coefficients"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn sigma_min_rows() {
        let v = parse(&sigma_min_curve("30, 60", 2));
        assert_eq!(v.as_array().unwrap().len(), 4);
    }

    #[test]
    fn errors_are_reported_as_json() {
        assert!(parse(&explore_centrality(3, 2, 0.8, 0.1, 1, "sqrt-n"))["error"].is_string());
        assert!(parse(&estimate_distribution("nope", 40, 5, 1, "sqrt-n"))["error"].is_string());
        assert!(parse(&sigma_min_curve("30,x", 1))["error"].is_string());
        assert!(parse(&explore_centrality(30, 2, 0.8, 0.1, 1, "cube"))["error"].is_string());
    }
}
