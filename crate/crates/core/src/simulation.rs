//! Seeded Monte Carlo harness for the simulation studies.
//!
//! A replication is keyed by `(N, rep_index)`; all of its random draws are
//! seeded from `derive_seed(master_seed, [N, rep_index, component, ..])`, so a
//! replication's output does not depend on which thread runs it or in what
//! order. Aggregation always walks replications in key order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::centrality::{community_centrality, eigenvector_centrality, CentralityOptions, CommunityStructure};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, QrFactorization, DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL};
use crate::network::{assemble_supra, make_multiplex, perturb, NoiseSpec, NoiseStructure};
use crate::regression::{self, ModelKind, RegressionFit};
use crate::rng::derive_seed;
use crate::stats::{self, KsResult, QqPoint};
use crate::synth::{self, SbmSpec, WeightDist};

mod component {
    pub const LAYER: u64 = 1;
    pub const COVARIATES: u64 = 2;
    pub const RESPONSE: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const SIGMA_MIN_STUDY: u64 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CmnetrNoiseless,
    CcmnetrNoiseless,
    CmnetrNoisy,
    CcmnetrNoisy,
    RcfeComparison,
    SigmaMinStudy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::CmnetrNoiseless,
        ExperimentKind::CcmnetrNoiseless,
        ExperimentKind::CmnetrNoisy,
        ExperimentKind::CcmnetrNoisy,
        ExperimentKind::RcfeComparison,
        ExperimentKind::SigmaMinStudy,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::CmnetrNoiseless => "cmnetr-noiseless",
            ExperimentKind::CcmnetrNoiseless => "ccmnetr-noiseless",
            ExperimentKind::CmnetrNoisy => "cmnetr-noisy",
            ExperimentKind::CcmnetrNoisy => "ccmnetr-noisy",
            ExperimentKind::RcfeComparison => "rcfe-comparison",
            ExperimentKind::SigmaMinStudy => "sigma-min-study",
        }
    }

    pub fn is_noisy(self) -> bool {
        matches!(self, ExperimentKind::CmnetrNoisy | ExperimentKind::CcmnetrNoisy)
    }

    /// Layer construction used unless the config overrides it.
    pub fn default_layers(self) -> LayerDesign {
        if self.is_noisy() {
            LayerDesign::HeterogeneousWeights
        } else {
            LayerDesign::IdenticalUniform
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.label()).collect();
                Error::InvalidArgument(format!("unknown experiment '{s}'; expected one of {}", names.join(", ")))
            })
    }
}

/// Scaling rule for `a_N` in `C = a_N V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnRule {
    SqrtN,
    Pow(f64),
    LinearN,
    SqrtNL,
    Fixed(f64),
}

impl AnRule {
    pub fn value(self, n: usize, l: usize) -> f64 {
        let n = n as f64;
        match self {
            AnRule::SqrtN => n.sqrt(),
            AnRule::Pow(e) => n.powf(e),
            AnRule::LinearN => n,
            AnRule::SqrtNL => (n * l as f64).sqrt(),
            AnRule::Fixed(v) => v,
        }
    }
}

impl fmt::Display for AnRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnRule::SqrtN => f.write_str("sqrt-n"),
            AnRule::Pow(e) => write!(f, "pow:{e}"),
            AnRule::LinearN => f.write_str("linear-n"),
            AnRule::SqrtNL => f.write_str("sqrt-nl"),
            AnRule::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for AnRule {
    type Err = Error;

    /// Accepts `sqrt-n` (`sqrt`), `linear-n` (`n`), `sqrt-nl`, `pow:<e>` and `fixed:<v>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown a_N rule '{s}'"));
        let number = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let rule = match s {
            "sqrt-n" | "sqrt" => AnRule::SqrtN,
            "linear-n" | "n" => AnRule::LinearN,
            "sqrt-nl" => AnRule::SqrtNL,
            _ => match s.split_once(':') {
                Some(("pow", e)) => AnRule::Pow(number(e)?),
                Some(("fixed", v)) => {
                    let v = number(v)?;
                    if !(v > 0.0) {
                        return Err(bad());
                    }
                    AnRule::Fixed(v)
                }
                _ => return Err(bad()),
            },
        };
        Ok(rule)
    }
}

impl Serialize for AnRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerDesign {
    /// Every layer: 0.8/0.1 probabilities, Uniform(1, 2) weights.
    IdenticalUniform,
    /// Same probabilities; odd layers Uniform(1, 2), even layers Exp(1) rescaled to [1, 2].
    HeterogeneousWeights,
    /// Uniform(1, 2) weights; odd layers 0.8/0.1, even layers 0.5/0.25.
    DistinctProbabilities,
}

impl LayerDesign {
    fn layer(self, index: usize) -> (DenseMatrix, WeightDist) {
        let first = index % 2 == 0;
        match self {
            LayerDesign::IdenticalUniform => (synth::assortative_probabilities(), WeightDist::Uniform12),
            LayerDesign::HeterogeneousWeights => (
                synth::assortative_probabilities(),
                if first { WeightDist::Uniform12 } else { WeightDist::ExpRescaled },
            ),
            LayerDesign::DistinctProbabilities => (
                if first {
                    synth::assortative_probabilities()
                } else {
                    synth::weak_assortative_probabilities()
                },
                WeightDist::Uniform12,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Noise on every supra entry, interlayer identity blocks included.
    FullSymmetric,
    /// Noise confined to the `N x N` diagonal blocks, leaving the coupling
    /// between layers exact. The default.
    BlockDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueBeta {
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub z: f64,
}

impl Default for TrueBeta {
    fn default() -> Self {
        Self {
            x: vec![1.0, 2.0],
            c: vec![1.0, 2.0],
            z: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_values: Vec<usize>,
    pub a_n_rules: Vec<AnRule>,
    pub n_reps: usize,
    pub sigma_b: f64,
    pub sigma_y: f64,
    pub true_beta: TrueBeta,
    pub master_seed: u64,
    pub n_layers: usize,
    pub n_communities: usize,
    pub layer_design: LayerDesign,
    pub noise: NoiseKind,
    pub eigen_tol: f64,
    /// Worker threads; `None` uses every core. Never affects results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Desk-scale defaults: N in {100, 200, 500}, 500 replications.
    pub fn new(experiment: ExperimentKind) -> Self {
        let a_n_rule = match experiment {
            ExperimentKind::RcfeComparison => AnRule::LinearN,
            _ => AnRule::SqrtN,
        };
        Self {
            experiment,
            n_values: vec![100, 200, 500],
            a_n_rules: vec![a_n_rule],
            n_reps: 500,
            sigma_b: 0.25,
            sigma_y: 1.0,
            true_beta: TrueBeta::default(),
            master_seed: 0,
            n_layers: 2,
            n_communities: 3,
            layer_design: experiment.default_layers(),
            noise: NoiseKind::BlockDiagonal,
            eigen_tol: DEFAULT_EIGEN_TOL,
            threads: None,
        }
    }

    /// Full grid: N up to 1000, 1000 replications.
    pub fn full_scale(mut self) -> Self {
        self.n_values = vec![100, 200, 500, 1000];
        self.n_reps = 1000;
        self
    }

    pub fn n_covariates(&self) -> usize {
        self.true_beta.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_reps == 0 {
            return bad("n_reps must be at least 1".into());
        }
        if self.n_values.is_empty() || self.a_n_rules.is_empty() {
            return bad("need at least one N and one a_N rule".into());
        }
        if self.n_layers == 0 || self.n_communities == 0 {
            return bad("need at least one layer and one community".into());
        }
        if self.true_beta.c.len() != self.n_layers {
            return bad(format!(
                "true beta_C has {} entries for {} layers",
                self.true_beta.c.len(),
                self.n_layers
            ));
        }
        if !(self.sigma_b >= 0.0) || !(self.sigma_y >= 0.0) {
            return bad("noise levels must be nonnegative".into());
        }
        let min_n = self.n_covariates() + self.n_layers + self.n_communities;
        if let Some(n) = self.n_values.iter().find(|&&n| n <= min_n) {
            return bad(format!("N = {n} too small; need N > {min_n}"));
        }
        Ok(())
    }

    fn centrality_options(&self) -> CentralityOptions {
        CentralityOptions {
            tol: self.eigen_tol,
            max_iter: DEFAULT_EIGEN_MAX_ITER,
            ..CentralityOptions::default()
        }
    }
}

/// Outcome of one model fit within a replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub a_n_rule: AnRule,
    pub model: ModelKind,
    pub a_n: f64,
    /// Coefficients in report order (`x…`, then network terms); `None` if the fit failed.
    pub estimates: Option<Vec<f64>>,
    pub z_stat: Option<f64>,
    /// `(β̂_j − β_j) / (σ_y √[(XᵀX)⁻¹]_jj)` for each covariate.
    pub x_stats: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub rep: usize,
    /// Spectrum of the noiseless `B0`.
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub fits: Vec<FitRecord>,
}

fn coefficient_names(model: ModelKind, p: usize, l: usize, r: usize) -> Vec<String> {
    let xs = (1..=p).map(|j| format!("x{j}"));
    let net: Vec<String> = match model {
        ModelKind::CMNetR => (1..=l).map(|j| format!("c{j}")).collect(),
        ModelKind::CCMNetR => vec!["z".into()],
        ModelKind::RCFE => (1..=l)
            .map(|j| format!("c{j}"))
            .chain((1..=r).map(|j| format!("s{j}")))
            .collect(),
        ModelKind::CovariatesOnly => Vec::new(),
    };
    xs.chain(net).collect()
}

fn true_coefficients(config: &ExperimentConfig, model: ModelKind) -> Vec<f64> {
    let b = &config.true_beta;
    let net: Vec<f64> = match model {
        ModelKind::CMNetR => b.c.clone(),
        ModelKind::CCMNetR => vec![b.z],
        // y follows the C-MNetR truth, so the fixed effects are null
        ModelKind::RCFE => b.c.iter().copied().chain(std::iter::repeat_n(0.0, config.n_communities)).collect(),
        ModelKind::CovariatesOnly => Vec::new(),
    };
    b.x.iter().copied().chain(net).collect()
}

/// Multiplex supra matrix for one replication's layer draws.
fn draw_supra(
    config: &ExperimentConfig,
    design: LayerDesign,
    labels: &CommunityStructure,
    seed_path: &[u64],
) -> Result<DenseMatrix> {
    let layers = (0..config.n_layers)
        .map(|l| {
            let (conn_prob, weight_dist) = design.layer(l);
            let mut path = seed_path.to_vec();
            path.push(l as u64);
            synth::sample_sbm_layer(&SbmSpec {
                labels: labels.clone(),
                conn_prob,
                weight_dist,
                seed: derive_seed(config.master_seed, &path),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_supra(&make_multiplex(layers)?)
}

fn x_stats(fit: &RegressionFit, truth: &[f64], gram_inv_diag: &[f64], sigma_y: f64) -> Vec<f64> {
    if sigma_y == 0.0 {
        return Vec::new();
    }
    fit.beta_x
        .iter()
        .zip(truth)
        .zip(gram_inv_diag)
        .map(|((b, t), d)| (b - t) / (sigma_y * d.sqrt()))
        .collect()
}

/// One pass of the pipeline: layers, supra matrix, optional perturbation,
/// centrality, response from the noiseless centrality, and the fits.
pub fn run_replication(config: &ExperimentConfig, n: usize, rep_index: usize) -> Result<ReplicationRecord> {
    config.validate()?;
    if config.experiment == ExperimentKind::SigmaMinStudy {
        return Err(Error::InvalidArgument(
            "the sigma_min study has no replications; use sigma_min_study".into(),
        ));
    }
    let (nu, ru) = (n as u64, rep_index as u64);
    let l = config.n_layers;
    let p = config.n_covariates();
    let labels = synth::balanced_labels(n, config.n_communities)?;
    let b0 = draw_supra(config, config.layer_design, &labels, &[nu, ru, component::LAYER])?;
    let opts = config.centrality_options();
    let truth = eigenvector_centrality(&b0, n, l, 1.0, &opts)?;

    let noisy = config.experiment.is_noisy();
    let observed_v = if noisy {
        let structure = match config.noise {
            NoiseKind::FullSymmetric => NoiseStructure::FullSymmetric,
            NoiseKind::BlockDiagonal => NoiseStructure::BlockDiagonal { block_size: n },
        };
        let (b, _) = perturb(
            &b0,
            &NoiseSpec {
                sigma_b: config.sigma_b,
                structure,
                seed: derive_seed(config.master_seed, &[nu, ru, component::NOISE]),
            },
        )?;
        let observed_opts = CentralityOptions {
            allow_negative: true,
            gap_tol: Some(f64::NEG_INFINITY),
            ..opts
        };
        eigenvector_centrality(&b, n, l, 1.0, &observed_opts)?.v
    } else {
        truth.v.clone()
    };

    let x = synth::sample_covariates(n, p, derive_seed(config.master_seed, &[nu, ru, component::COVARIATES]));
    let gram_inv_diag = if x.cols() == 0 {
        Vec::new()
    } else {
        QrFactorization::new(&x)?.gram_inverse_diag()
    };
    let response_seed = derive_seed(config.master_seed, &[nu, ru, component::RESPONSE]);
    let beta = &config.true_beta;

    let mut fits = Vec::new();
    for &rule in &config.a_n_rules {
        let a_n = rule.value(n, l);
        let c_true = truth.v.scaled(a_n);
        let c_obs = observed_v.scaled(a_n);
        let mut record = |model: ModelKind, outcome: Result<RegressionFit>| {
            let (estimates, z_stat, xs, error) = match outcome {
                Ok(fit) => (
                    Some(fit.coefficients()),
                    fit.z_stat_z,
                    x_stats(&fit, &beta.x, &gram_inv_diag, config.sigma_y),
                    None,
                ),
                Err(e) => (None, None, Vec::new(), Some(e.to_string())),
            };
            fits.push(FitRecord {
                a_n_rule: rule,
                model,
                a_n,
                estimates,
                z_stat,
                x_stats: xs,
                error,
            });
        };
        match config.experiment {
            ExperimentKind::CmnetrNoiseless | ExperimentKind::CmnetrNoisy => {
                let y = synth::sample_response(&x, &c_true, &beta.x, &beta.c, config.sigma_y, response_seed)?;
                record(ModelKind::CMNetR, regression::fit_cmnetr(&x, &c_obs, &y));
            }
            ExperimentKind::CcmnetrNoiseless | ExperimentKind::CcmnetrNoisy => {
                let (_, z_true) = community_centrality(&c_true, &labels)?;
                let (_, z_obs) = community_centrality(&c_obs, &labels)?;
                let y = synth::sample_response(
                    &x,
                    &DenseMatrix::column_vector(&z_true),
                    &beta.x,
                    &[beta.z],
                    config.sigma_y,
                    response_seed,
                )?;
                record(ModelKind::CCMNetR, regression::fit_ccmnetr(&x, &z_obs, &y, beta.z));
            }
            ExperimentKind::RcfeComparison => {
                let y = synth::sample_response(&x, &c_true, &beta.x, &beta.c, config.sigma_y, response_seed)?;
                record(ModelKind::CMNetR, regression::fit_cmnetr(&x, &c_obs, &y));
                record(ModelKind::RCFE, regression::fit_rcfe(&x, &c_obs, labels.indicator(), &y));
            }
            ExperimentKind::SigmaMinStudy => unreachable!("rejected above"),
        }
    }
    Ok(ReplicationRecord {
        n,
        rep: rep_index,
        lambda1: truth.lambda1,
        lambda2: truth.lambda2,
        gap: truth.gap,
        fits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 when fewer than two estimates exist.
    pub sd: f64,
    pub sd_defined: bool,
    pub bias: f64,
    pub mse: f64,
    /// Estimates standardized by their own mean and sd; empty when undefined.
    pub qq: Vec<QqPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalitySummary {
    pub mean: f64,
    pub sd: f64,
    pub ks: KsResult,
    pub qq_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub a_n_rule: AnRule,
    pub a_n: f64,
    pub model: ModelKind,
    pub n_success: usize,
    pub n_failed: usize,
    /// Mean over successful replications of `a_N / δ` (δ from `B0`).
    pub mean_a_n_over_gap: f64,
    pub coefficients: Vec<CoefficientSummary>,
    /// Normality of the `β_Z` statistic (CC-MNetR only).
    pub z_stat: Option<NormalitySummary>,
    /// Normality of each standardized `β_X` estimate.
    pub x_stats: Vec<NormalitySummary>,
}

impl CellSummary {
    pub fn coefficient(&self, name: &str) -> Option<&CoefficientSummary> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub rep: usize,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub gap: Option<f64>,
    /// `a_N / δ` for each configured a_N rule, in config order.
    pub a_n_over_gap: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaMinRow {
    pub n: usize,
    pub variant: LayerDesign,
    pub sigma_min: f64,
    /// `σ_min · √N`; roughly constant when `σ_min = O(N^{-1/2})`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunRecord>,
    pub failed_replications: usize,
    pub sigma_min: Vec<SigmaMinRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_seconds: Option<f64>,
}

impl SimulationReport {
    pub fn cell(&self, n: usize, rule: AnRule, model: ModelKind) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.a_n_rule == rule && c.model == model)
    }
}

/// Wall-clock start; `None` where no clock exists (wasm32-unknown-unknown).
fn stopwatch() -> Option<std::time::Instant> {
    if cfg!(all(target_arch = "wasm32", target_os = "unknown")) {
        None
    } else {
        Some(std::time::Instant::now())
    }
}

fn normality(samples: &[f64]) -> Option<NormalitySummary> {
    let sd = stats::sample_sd(samples)?;
    let ks = stats::ks_test_standard_normal(samples).ok()?;
    let qq = stats::qq_data(samples, 0.0, 1.0).ok()?;
    Some(NormalitySummary {
        mean: stats::mean(samples),
        sd,
        ks,
        qq_correlation: stats::qq_correlation(&qq),
    })
}

fn summarize_coefficient(name: String, truth: f64, estimates: &[f64]) -> CoefficientSummary {
    let mean = stats::mean(estimates);
    let sd = stats::sample_sd(estimates);
    let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64;
    let qq = match sd {
        Some(s) if s > 0.0 => stats::qq_data(estimates, mean, s).unwrap_or_default(),
        _ => Vec::new(),
    };
    CoefficientSummary {
        name,
        truth,
        mean,
        sd: sd.unwrap_or(0.0),
        sd_defined: sd.is_some(),
        bias: mean - truth,
        mse,
        qq,
    }
}

fn run_all<T: Send>(
    threads: Option<usize>,
    keys: &[(usize, usize)],
    f: impl Fn(usize, usize) -> T + Sync + Send,
) -> Result<Vec<T>> {
    match threads {
        Some(t) if t <= 1 => Ok(keys.iter().map(|&(n, r)| f(n, r)).collect()),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                builder = builder.num_threads(t);
            }
            match builder.build() {
                Ok(pool) => Ok(pool.install(|| keys.par_iter().map(|&(n, r)| f(n, r)).collect())),
                // no threads available (e.g. wasm): run inline
                Err(_) => Ok(keys.iter().map(|&(n, r)| f(n, r)).collect()),
            }
        }
    }
}

/// Runs every `(N, replication)` pair and aggregates per `(N, a_N rule, model)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let started = stopwatch();
    if config.experiment == ExperimentKind::SigmaMinStudy {
        return Ok(SimulationReport {
            config: config.clone(),
            cells: Vec::new(),
            runs: Vec::new(),
            failed_replications: 0,
            sigma_min: sigma_min_study(config)?,
            wall_time_seconds: started.map(|t| t.elapsed().as_secs_f64()),
        });
    }
    let keys: Vec<(usize, usize)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.n_reps).map(move |r| (n, r)))
        .collect();
    // results come back in key order regardless of scheduling
    let results = run_all(config.threads, &keys, |n, r| run_replication(config, n, r))?;

    let failed_replications = results.iter().filter(|r| r.is_err()).count();
    if failed_replications == results.len() {
        return Err(Error::AllReplicationsFailed(failed_replications));
    }
    let runs = keys
        .iter()
        .zip(&results)
        .map(|(&(n, rep), res)| match res {
            Ok(rec) => RunRecord {
                n,
                rep,
                lambda1: Some(rec.lambda1),
                lambda2: Some(rec.lambda2),
                gap: Some(rec.gap),
                a_n_over_gap: config
                    .a_n_rules
                    .iter()
                    .map(|r| r.value(n, config.n_layers) / rec.gap)
                    .collect(),
                error: None,
            },
            Err(e) => RunRecord {
                n,
                rep,
                lambda1: None,
                lambda2: None,
                gap: None,
                a_n_over_gap: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();

    let models: Vec<ModelKind> = match config.experiment {
        ExperimentKind::CmnetrNoiseless | ExperimentKind::CmnetrNoisy => vec![ModelKind::CMNetR],
        ExperimentKind::CcmnetrNoiseless | ExperimentKind::CcmnetrNoisy => vec![ModelKind::CCMNetR],
        ExperimentKind::RcfeComparison => vec![ModelKind::CMNetR, ModelKind::RCFE],
        ExperimentKind::SigmaMinStudy => Vec::new(),
    };
    let p = config.n_covariates();
    let mut cells = Vec::new();
    for &n in &config.n_values {
        let recs: Vec<&ReplicationRecord> = results
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .filter(|r| r.n == n)
            .collect();
        let failed_reps = config.n_reps - recs.len();
        for &rule in &config.a_n_rules {
            for &model in &models {
                let fits: Vec<(&ReplicationRecord, &FitRecord)> = recs
                    .iter()
                    .flat_map(|rec| {
                        rec.fits
                            .iter()
                            .filter(|f| f.a_n_rule == rule && f.model == model)
                            .map(move |f| (*rec, f))
                    })
                    .collect();
                let ok: Vec<(&ReplicationRecord, &Vec<f64>)> = fits
                    .iter()
                    .filter_map(|(rec, f)| f.estimates.as_ref().map(|e| (*rec, e)))
                    .collect();
                let a_n = rule.value(n, config.n_layers);
                let names = coefficient_names(model, p, config.n_layers, config.n_communities);
                let truths = true_coefficients(config, model);
                let coefficients = if ok.is_empty() {
                    Vec::new()
                } else {
                    names
                        .into_iter()
                        .enumerate()
                        .map(|(j, name)| {
                            let est: Vec<f64> = ok.iter().map(|(_, e)| e[j]).collect();
                            summarize_coefficient(name, truths[j], &est)
                        })
                        .collect()
                };
                let z_stats: Vec<f64> = fits.iter().filter_map(|(_, f)| f.z_stat).collect();
                let x_stats = (0..p)
                    .filter_map(|j| {
                        let xs: Vec<f64> = fits.iter().filter_map(|(_, f)| f.x_stats.get(j).copied()).collect();
                        normality(&xs)
                    })
                    .collect();
                let mean_ratio = if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|(rec, _)| a_n / rec.gap).sum::<f64>() / ok.len() as f64
                };
                cells.push(CellSummary {
                    n,
                    a_n_rule: rule,
                    a_n,
                    model,
                    n_success: ok.len(),
                    n_failed: failed_reps + (fits.len() - ok.len()),
                    mean_a_n_over_gap: mean_ratio,
                    coefficients,
                    z_stat: if model == ModelKind::CCMNetR { normality(&z_stats) } else { None },
                    x_stats,
                });
            }
        }
    }
    Ok(SimulationReport {
        config: config.clone(),
        cells,
        runs,
        failed_replications,
        sigma_min: Vec::new(),
        wall_time_seconds: started.map(|t| t.elapsed().as_secs_f64()),
    })
}

/// `σ_min((I − P_X)V)` for one SBM draw per N, for identical layers and for
/// layers with distinct probability matrices.
pub fn sigma_min_study(config: &ExperimentConfig) -> Result<Vec<SigmaMinRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &config.n_values {
        let labels = synth::balanced_labels(n, config.n_communities)?;
        let x = synth::sample_covariates(
            n,
            config.n_covariates(),
            derive_seed(config.master_seed, &[n as u64, 0, component::SIGMA_MIN_STUDY, 0]),
        );
        for (k, variant) in [LayerDesign::IdenticalUniform, LayerDesign::DistinctProbabilities]
            .into_iter()
            .enumerate()
        {
            let b0 = draw_supra(
                config,
                variant,
                &labels,
                &[n as u64, 0, component::SIGMA_MIN_STUDY, 1 + k as u64],
            )?;
            let bundle = eigenvector_centrality(&b0, n, config.n_layers, 1.0, &config.centrality_options())?;
            let sigma_min = linalg::smallest_singular_value_residual(&x, &bundle.v)?;
            rows.push(SigmaMinRow {
                n,
                variant,
                sigma_min,
                scaled: sigma_min * (n as f64).sqrt(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_n_rules_round_trip_through_strings() {
        for rule in [AnRule::SqrtN, AnRule::Pow(0.8), AnRule::LinearN, AnRule::SqrtNL, AnRule::Fixed(2.5)] {
            assert_eq!(rule.to_string().parse::<AnRule>().unwrap(), rule);
        }
        assert_eq!("sqrt".parse::<AnRule>().unwrap(), AnRule::SqrtN);
        assert!("cube".parse::<AnRule>().is_err());
        assert!("fixed:-1".parse::<AnRule>().is_err());
        assert_eq!(AnRule::SqrtNL.value(56, 43), (56.0f64 * 43.0).sqrt());
        assert_eq!(AnRule::Pow(0.5).value(100, 2), 10.0);
    }

    #[test]
    fn experiment_names() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.label().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("table-9".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(ExperimentKind::CcmnetrNoiseless);
        c.n_values = vec![6];
        assert!(c.validate().is_err());
        c.n_values = vec![30];
        c.n_reps = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_exact_recovery() {
        let mut c = ExperimentConfig::new(ExperimentKind::CcmnetrNoiseless);
        c.sigma_y = 0.0;
        c.sigma_b = 0.0;
        let rec = run_replication(&c, 30, 0).unwrap();
        let est = rec.fits[0].estimates.as_ref().unwrap();
        for (e, t) in est.iter().zip([1.0, 2.0, 2.0]) {
            assert!((e - t).abs() < 1e-8, "{est:?}");
        }
        assert!(rec.fits[0].z_stat.is_none());
    }

    #[test]
    fn replications_are_deterministic() {
        let c = ExperimentConfig::new(ExperimentKind::CmnetrNoisy);
        assert_eq!(run_replication(&c, 30, 3).unwrap(), run_replication(&c, 30, 3).unwrap());
        assert_ne!(run_replication(&c, 30, 3).unwrap(), run_replication(&c, 30, 4).unwrap());
    }

    #[test]
    fn single_replication_flags_undefined_sd() {
        let mut c = ExperimentConfig::new(ExperimentKind::CcmnetrNoiseless);
        c.n_values = vec![30];
        c.n_reps = 1;
        c.threads = Some(1);
        let report = run_experiment(&c).unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.n_success, 1);
        for coef in &cell.coefficients {
            assert!(!coef.sd_defined);
            assert_eq!(coef.sd, 0.0);
            assert!(coef.qq.is_empty());
        }
    }
}
