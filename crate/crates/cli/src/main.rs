use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mlnetreg::centrality::{
    assumption_diagnostics, community_centrality, eigenvector_centrality, AssumptionDiagnostics, CentralityOptions,
    CommunityStructure,
};
use mlnetreg::io::{self, NetworkFormat, Table};
use mlnetreg::linalg::DenseMatrix;
use mlnetreg::pipeline::{self, DatasetBundle, ScaleMode, WiodOptions};
use mlnetreg::regression::{self, ModelKind, RegressionFit};
use mlnetreg::simulation::{self, AnRule, ExperimentConfig, ExperimentKind, NoiseKind};
use mlnetreg::Error;

const THREADS_VAR: &str = "MLNETREG_THREADS";

#[derive(Parser)]
#[command(name = "mlnetreg", version, about = "Multilayer network regression with eigenvector centrality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo experiment and write its JSON report.
    Simulate(SimulateArgs),
    /// Centrality (and community centrality) of a supra matrix.
    Centrality(CentralityArgs),
    /// Fit C-MNetR, CC-MNetR or RCFE.
    Fit(FitArgs),
    /// Variance inflation factors of a covariate table.
    Vif(VifArgs),
    /// Measured versions of the identifiability and spectral conditions.
    Diagnose(DiagnoseArgs),
    /// Input-output table workflow: scaling, VIF screening, F-test of Z.
    Wiod(WiodArgs),
    /// Write the synthetic 56-sector, 43-layer input-output fixture.
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// cmnetr-noiseless, ccmnetr-noiseless, cmnetr-noisy, ccmnetr-noisy, rcfe-comparison or sigma-min-study
    #[arg(long)]
    experiment: ExperimentKind,
    /// Comma-separated node counts [default: 100,200,500]
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Replications per N [default: 500]
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// a_N rules: sqrt-n, linear-n, sqrt-nl, pow:<e>, fixed:<v>; repeat or comma-separate
    #[arg(long = "a-n", value_delimiter = ',')]
    a_n: Vec<AnRule>,
    #[arg(long)]
    sigma_b: Option<f64>,
    #[arg(long)]
    sigma_y: Option<f64>,
    /// Noise structure for noisy experiments: full or block-diagonal
    #[arg(long, default_value = "block-diagonal")]
    noise: String,
    /// N in {100, 200, 500, 1000} with 1000 replications, unless overridden
    #[arg(long)]
    full_scale: bool,
    /// Include wall-clock time in the report (makes reports differ between runs)
    #[arg(long)]
    record_timing: bool,
    /// JSON report path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-coefficient mean/sd/bias/MSE table
    #[arg(long)]
    summary_csv: Option<PathBuf>,
    /// Standardized estimates against normal quantiles
    #[arg(long)]
    qq_csv: Option<PathBuf>,
    /// sigma_min table (sigma-min-study only)
    #[arg(long)]
    sigma_min_csv: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct NetworkArgs {
    /// Supra matrix file
    #[arg(long)]
    network: PathBuf,
    /// edge-list or dense
    #[arg(long, default_value = "edge-list")]
    format: NetworkFormat,
    /// Number of nodes N
    #[arg(long)]
    n: Option<usize>,
    /// Number of layers L
    #[arg(long)]
    layers: Option<usize>,
}

#[derive(Args)]
struct CentralityArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// Community labels; adds the community centrality Z
    #[arg(long)]
    communities: Option<PathBuf>,
    #[arg(long = "a-n", default_value = "sqrt-nl")]
    a_n: AnRule,
    /// Accept negative eigenvector entries (noisy matrices)
    #[arg(long)]
    allow_negative: bool,
    /// Output path: `.csv` writes the per-node table, anything else JSON; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FitModel {
    Cmnetr,
    Ccmnetr,
    Rcfe,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    model: FitModel,
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long)]
    covariates: PathBuf,
    /// Covariate columns to use [default: every numeric column except the response]
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long)]
    response: PathBuf,
    /// Response column [default: the file's only value column]
    #[arg(long)]
    response_column: Option<String>,
    #[arg(long)]
    communities: Option<PathBuf>,
    #[arg(long = "a-n", default_value = "sqrt-nl")]
    a_n: AnRule,
    /// Prepend a column of ones to X (not for rcfe)
    #[arg(long)]
    intercept: bool,
    /// Null value of beta_Z for the CC-MNetR statistic
    #[arg(long, default_value_t = 0.0)]
    beta_z_null: f64,
    #[arg(long)]
    allow_negative: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VifArgs {
    #[arg(long)]
    covariates: PathBuf,
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long)]
    covariates: PathBuf,
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Community labels [default: a single community]
    #[arg(long)]
    communities: Option<PathBuf>,
    #[arg(long = "a-n", default_value = "sqrt-nl")]
    a_n: AnRule,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WiodArgs {
    /// Raw directed flow matrix B_a
    #[arg(long)]
    flows: PathBuf,
    /// edge-list (directed rows) or dense
    #[arg(long, default_value = "dense")]
    flows_format: NetworkFormat,
    #[arg(long)]
    layers: Option<usize>,
    /// Covariates and response, one row per node (or per group with --average-by)
    #[arg(long)]
    covariates: PathBuf,
    #[arg(long, default_value = "GO")]
    response_column: String,
    #[arg(long)]
    communities: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    vif_threshold: f64,
    /// global or per-block
    #[arg(long, default_value = "global")]
    scale: ScaleMode,
    /// Average covariate rows that share this label column before fitting
    #[arg(long)]
    average_by: Option<String>,
    /// Covariates to exclude before screening
    #[arg(long, value_delimiter = ',')]
    drop: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Run(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult {
    emit(out, &io::to_sorted_json(value)?)
}

fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(usage(format!("{THREADS_VAR} must be a positive integer, got '{s}'"))),
        },
    }
}

fn simulate(a: SimulateArgs) -> CliResult {
    let mut config = ExperimentConfig::new(a.experiment);
    if a.full_scale {
        config = config.full_scale();
    }
    if let Some(ns) = a.n_list {
        config.n_values = ns;
    }
    if let Some(r) = a.reps {
        config.n_reps = r;
    }
    if !a.a_n.is_empty() {
        config.a_n_rules = a.a_n;
    }
    if let Some(s) = a.sigma_b {
        config.sigma_b = s;
    }
    if let Some(s) = a.sigma_y {
        config.sigma_y = s;
    }
    config.noise = match a.noise.as_str() {
        "full" => NoiseKind::FullSymmetric,
        "block-diagonal" => NoiseKind::BlockDiagonal,
        other => return Err(usage(format!("unknown noise structure '{other}'; expected full or block-diagonal"))),
    };
    config.master_seed = a.seed;
    config.threads = threads_from_env()?;
    config.validate().map_err(|e| usage(e.to_string()))?;

    let mut report = simulation::run_experiment(&config)?;
    if !a.record_timing {
        report.wall_time_seconds = None;
    }
    if let Some(p) = &a.summary_csv {
        fs::write(p, io::summary_csv(&report)?).map_err(|e| Failure::Run(e.into()))?;
    }
    if let Some(p) = &a.qq_csv {
        fs::write(p, io::qq_csv(&report)?).map_err(|e| Failure::Run(e.into()))?;
    }
    if let Some(p) = &a.sigma_min_csv {
        fs::write(p, io::sigma_min_csv(&report.sigma_min)?).map_err(|e| Failure::Run(e.into()))?;
    }
    if report.failed_replications > 0 {
        eprintln!(
            "warning: {} replication(s) failed and were excluded",
            report.failed_replications
        );
    }
    emit_json(a.out.as_deref(), &report)
}

fn load_net(n: &NetworkArgs, default_n: Option<usize>) -> CliResult<io::LoadedNetwork> {
    Ok(io::load_network(&n.network, n.format, n.n.or(default_n), n.layers)?)
}

fn load_comm(path: Option<&Path>, n: usize) -> CliResult<Option<CommunityStructure>> {
    let Some(p) = path else { return Ok(None) };
    let comm = io::load_communities(p)?;
    if comm.n_nodes() != n {
        return Err(Failure::Run(Error::DimensionMismatch(format!(
            "{} labels {} nodes, the network has {n}",
            p.display(),
            comm.n_nodes()
        ))));
    }
    Ok(Some(comm))
}

fn centrality_options(allow_negative: bool) -> CentralityOptions {
    CentralityOptions {
        allow_negative,
        ..CentralityOptions::default()
    }
}

#[derive(Serialize)]
struct CentralityReport {
    n_nodes: usize,
    n_layers: usize,
    a_n_rule: AnRule,
    a_n: f64,
    lambda1: f64,
    lambda2: f64,
    gap: f64,
    iterations: usize,
    /// `V` as N rows of L entries.
    v: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    z: Option<Vec<f64>>,
    community_labels: Option<Vec<usize>>,
}

fn rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn centrality(a: CentralityArgs) -> CliResult {
    let net = load_net(&a.net, None)?;
    let comm = load_comm(a.communities.as_deref(), net.n_nodes)?;
    let a_n = a.a_n.value(net.n_nodes, net.n_layers);
    let bundle = eigenvector_centrality(
        &net.supra,
        net.n_nodes,
        net.n_layers,
        a_n,
        &centrality_options(a.allow_negative),
    )?;
    let z = match &comm {
        Some(c) => Some(community_centrality(&bundle.c, c)?.1),
        None => None,
    };
    if a.out.as_deref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) {
        let csv = io::centrality_csv(&bundle.v, &bundle.c, comm.as_ref().zip(z.as_deref()))?;
        return emit(a.out.as_deref(), &csv);
    }
    emit_json(
        a.out.as_deref(),
        &CentralityReport {
            n_nodes: net.n_nodes,
            n_layers: net.n_layers,
            a_n_rule: a.a_n,
            a_n,
            lambda1: bundle.lambda1,
            lambda2: bundle.lambda2,
            gap: bundle.gap,
            iterations: bundle.iterations,
            v: rows(&bundle.v),
            c: rows(&bundle.c),
            z,
            community_labels: comm.map(|c| c.labels().to_vec()),
        },
    )
}

/// Covariate table restricted to `columns`, or to every column except `exclude`.
fn covariate_matrix(path: &Path, columns: Option<&[String]>, exclude: Option<&str>) -> CliResult<Table> {
    let table = io::load_table(path, None)?;
    let keep: Vec<&str> = match columns {
        Some(cols) => cols.iter().map(String::as_str).collect(),
        None => table
            .names
            .iter()
            .map(String::as_str)
            .filter(|n| Some(*n) != exclude)
            .collect(),
    };
    if keep.is_empty() {
        return Err(usage(format!("{} has no covariate columns", path.display())));
    }
    table.select(&keep).map_err(|e| usage(e.to_string()))
}

#[derive(Serialize)]
struct FitReport {
    model: ModelKind,
    a_n_rule: AnRule,
    a_n: f64,
    terms: Vec<String>,
    coefficients: Vec<f64>,
    fit: RegressionFit,
    lambda1: f64,
    lambda2: f64,
    gap: f64,
}

fn fit(a: FitArgs) -> CliResult {
    let resp_table = io::load_table(&a.response, None)?;
    let (resp_name, y) = io::response_column(&resp_table, a.response_column.as_deref(), &a.response)?;
    let same_file = a.response == a.covariates;
    let x_table = covariate_matrix(
        &a.covariates,
        a.columns.as_deref(),
        same_file.then_some(resp_name.as_str()),
    )?;
    let n = y.len();
    if x_table.n_rows() != n {
        return Err(Failure::Run(Error::DimensionMismatch(format!(
            "{} covariate rows but {n} responses",
            x_table.n_rows()
        ))));
    }
    let net = load_net(&a.net, Some(n))?;
    if net.n_nodes != n {
        return Err(Failure::Run(Error::DimensionMismatch(format!(
            "network has {} nodes, data has {n} rows",
            net.n_nodes
        ))));
    }
    let comm = load_comm(a.communities.as_deref(), n)?;
    if a.model != FitModel::Cmnetr && comm.is_none() {
        return Err(usage("--communities is required for ccmnetr and rcfe"));
    }
    if a.model == FitModel::Rcfe && a.intercept {
        return Err(usage("rcfe already spans the constant; drop --intercept"));
    }
    let a_n = a.a_n.value(n, net.n_layers);
    let bundle = eigenvector_centrality(&net.supra, n, net.n_layers, a_n, &centrality_options(a.allow_negative))?;

    let mut terms: Vec<String> = Vec::new();
    let x = if a.intercept {
        terms.push("intercept".into());
        DenseMatrix::hstack(&[&DenseMatrix::column_vector(&vec![1.0; n]), &x_table.values])?
    } else {
        x_table.values.clone()
    };
    terms.extend(x_table.names.iter().cloned());
    let layer_terms = (1..=net.n_layers).map(|l| format!("C{l}"));
    let fit = match a.model {
        FitModel::Cmnetr => {
            terms.extend(layer_terms);
            regression::fit_cmnetr(&x, &bundle.c, &y)?
        }
        FitModel::Ccmnetr => {
            terms.push("Z".into());
            let (_, z) = community_centrality(&bundle.c, comm.as_ref().expect("checked"))?;
            regression::fit_ccmnetr(&x, &z, &y, a.beta_z_null)?
        }
        FitModel::Rcfe => {
            let comm = comm.as_ref().expect("checked");
            terms.extend(layer_terms);
            terms.extend((1..=comm.n_communities()).map(|r| format!("S{r}")));
            regression::fit_rcfe(&x, &bundle.c, comm.indicator(), &y)?
        }
    };
    let mut fit = fit;
    fit.std_errors_naive = a.allow_negative;
    emit_json(
        a.out.as_deref(),
        &FitReport {
            model: fit.model,
            a_n_rule: a.a_n,
            a_n,
            terms,
            coefficients: fit.coefficients(),
            lambda1: bundle.lambda1,
            lambda2: bundle.lambda2,
            gap: bundle.gap,
            fit,
        },
    )
}

#[derive(Serialize)]
struct VifReport {
    columns: Vec<String>,
    vif: Vec<f64>,
}

fn vif(a: VifArgs) -> CliResult {
    let table = covariate_matrix(&a.covariates, a.columns.as_deref(), None)?;
    let v = regression::vif(&table.values)?;
    emit_json(
        a.out.as_deref(),
        &VifReport {
            columns: table.names,
            vif: v,
        },
    )
}

#[derive(Serialize)]
struct DiagnoseReport {
    n_nodes: usize,
    n_layers: usize,
    n_covariates: usize,
    a_n_rule: AnRule,
    a_n: f64,
    diagnostics: AssumptionDiagnostics,
}

fn diagnose(a: DiagnoseArgs) -> CliResult {
    let x = covariate_matrix(&a.covariates, a.columns.as_deref(), None)?;
    let net = load_net(&a.net, Some(x.n_rows()))?;
    if net.n_nodes != x.n_rows() {
        return Err(Failure::Run(Error::DimensionMismatch(format!(
            "network has {} nodes, covariates have {} rows",
            net.n_nodes,
            x.n_rows()
        ))));
    }
    let comm = match load_comm(a.communities.as_deref(), net.n_nodes)? {
        Some(c) => c,
        None => CommunityStructure::from_labels(vec![1; net.n_nodes])?,
    };
    let a_n = a.a_n.value(net.n_nodes, net.n_layers);
    let bundle = eigenvector_centrality(&net.supra, net.n_nodes, net.n_layers, a_n, &CentralityOptions::default())?;
    let diagnostics = assumption_diagnostics(&net.supra, &x.values, &bundle.v, &comm, a_n)?;
    emit_json(
        a.out.as_deref(),
        &DiagnoseReport {
            n_nodes: net.n_nodes,
            n_layers: net.n_layers,
            n_covariates: x.values.cols(),
            a_n_rule: a.a_n,
            a_n,
            diagnostics,
        },
    )
}

fn wiod(a: WiodArgs) -> CliResult {
    let table = io::load_table(&a.covariates, a.average_by.as_deref())?;
    let (response_name, response) = io::response_column(&table, Some(&a.response_column), &a.covariates)?;
    let candidates: Vec<&str> = table
        .names
        .iter()
        .map(String::as_str)
        .filter(|c| *c != response_name)
        .collect();
    let covariates = table.select(&candidates)?;
    let n = table.n_rows();
    let flows = io::load_flows(&a.flows, a.flows_format, Some(n), a.layers)?;
    let communities = io::load_communities(&a.communities)?;
    let mut provenance = vec![
        format!("flows: {}", a.flows.display()),
        format!("covariates: {}", a.covariates.display()),
        format!("communities: {}", a.communities.display()),
    ];
    if let Some(g) = &a.average_by {
        provenance.push(format!("covariates averaged by '{g}'"));
    }
    let bundle = DatasetBundle {
        flows: flows.supra,
        n_nodes: flows.n_nodes,
        n_layers: flows.n_layers,
        covariates,
        response_name,
        response,
        communities,
        provenance,
    };
    let opts = WiodOptions {
        vif_threshold: a.vif_threshold,
        scale: a.scale,
        drop: a.drop,
        ..WiodOptions::default()
    };
    let report = pipeline::wiod_pipeline(&bundle, &opts)?;
    emit_json(a.out.as_deref(), &report)
}

fn fixture(a: FixtureArgs) -> CliResult {
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::Run(e.into()))?;
    let fx = pipeline::synthetic_fixture(a.seed)?;
    let paths = pipeline::write_fixture(&fx, &a.out_dir)?;
    eprintln!(
        "wrote {}, {} and {}",
        paths.flows.display(),
        paths.covariates.display(),
        paths.communities.display()
    );
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Centrality(a) => centrality(a),
        Command::Fit(a) => fit(a),
        Command::Vif(a) => vif(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Wiod(a) => wiod(a),
        Command::Fixture(a) => fixture(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `mlnetreg --help` for usage");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
