//! The input-output regression workflow: symmetrize and scale a flow
//! network, compute centrality and community centrality, screen covariates
//! by VIF, and compare the covariate-only fit with the fit that adds `Z`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::centrality::{community_centrality, eigenvector_centrality, CentralityBundle, CentralityOptions, CommunityStructure};
use crate::error::{Error, Result};
use crate::io::{self, Table};
use crate::linalg::{self, DenseMatrix};
use crate::regression::{self, FTest, RegressionFit};
use crate::rng::{self, streams};
use crate::synth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// `b ↦ 2b / max(B)` over the whole supra matrix.
    Global,
    /// Each `N x N` block divided by its own maximum; zero blocks stay zero.
    PerBlock,
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(ScaleMode::Global),
            "per-block" => Ok(ScaleMode::PerBlock),
            _ => Err(Error::InvalidArgument(format!(
                "unknown scale mode '{s}'; expected global or per-block"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    /// Raw `NL x NL` flow matrix `B_a` (row supplies column).
    pub flows: DenseMatrix,
    pub n_nodes: usize,
    pub n_layers: usize,
    /// Candidate covariates, one row per node.
    pub covariates: Table,
    pub response_name: String,
    pub response: Vec<f64>,
    pub communities: CommunityStructure,
    /// Source files and preprocessing steps, in order.
    pub provenance: Vec<String>,
}

impl DatasetBundle {
    pub fn validate(&self) -> Result<()> {
        let (n, l) = (self.n_nodes, self.n_layers);
        if self.flows.shape() != (n * l, n * l) {
            return Err(Error::dims(format!(
                "flow matrix is {}x{}, expected {}x{} for N = {n}, L = {l}",
                self.flows.rows(),
                self.flows.cols(),
                n * l,
                n * l
            )));
        }
        if self.covariates.n_rows() != n || self.response.len() != n || self.communities.n_nodes() != n {
            return Err(Error::dims(format!(
                "row counts disagree: N = {n}, {} covariate rows, {} responses, {} community labels",
                self.covariates.n_rows(),
                self.response.len(),
                self.communities.n_nodes()
            )));
        }
        if let Some(k) = self.flows.data().iter().position(|v| *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "flows must be nonnegative; entry ({}, {}) is {}",
                k / (n * l) + 1,
                k % (n * l) + 1,
                self.flows.data()[k]
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WiodOptions {
    pub vif_threshold: f64,
    pub scale: ScaleMode,
    /// Covariates removed by name before screening.
    pub drop: Vec<String>,
    pub eigen_tol: f64,
}

impl Default for WiodOptions {
    fn default() -> Self {
        Self {
            vif_threshold: 5.0,
            scale: ScaleMode::Global,
            drop: Vec::new(),
            eigen_tol: linalg::DEFAULT_EIGEN_TOL,
        }
    }
}

/// `B = B_a + B_aᵀ`, scaled onto `[0, 2]`.
pub fn symmetrize_and_scale(flows: &DenseMatrix, n: usize, mode: ScaleMode) -> Result<DenseMatrix> {
    if !flows.is_square() || n == 0 || flows.rows() % n != 0 {
        return Err(Error::dims(format!(
            "{}x{} flow matrix does not split into {n}x{n} blocks",
            flows.rows(),
            flows.cols()
        )));
    }
    let b = flows.add(&flows.transpose())?;
    let dim = b.rows();
    match mode {
        ScaleMode::Global => {
            let max = b.data().iter().copied().fold(0.0, f64::max);
            if !(max > 0.0) {
                return Err(Error::DegenerateRange(max));
            }
            Ok(b.scaled(2.0 / max))
        }
        ScaleMode::PerBlock => {
            let l = dim / n;
            let mut factors = vec![0.0; l * l];
            for i in 0..dim {
                for j in 0..dim {
                    let f = &mut factors[(i / n) * l + j / n];
                    *f = f64::max(*f, b[(i, j)]);
                }
            }
            if factors.iter().all(|m| *m == 0.0) {
                return Err(Error::DegenerateRange(0.0));
            }
            Ok(DenseMatrix::from_fn(dim, dim, |i, j| {
                let m = factors[(i / n) * l + j / n];
                if m > 0.0 { 2.0 * b[(i, j)] / m } else { 0.0 }
            }))
        }
    }
}

/// Scaled network, its centrality at `a_N = √(NL)`, and `Z`.
pub fn network_covariates(
    flows: &DenseMatrix,
    n: usize,
    comm: &CommunityStructure,
    mode: ScaleMode,
    tol: f64,
) -> Result<(DenseMatrix, CentralityBundle, Vec<f64>)> {
    let b = symmetrize_and_scale(flows, n, mode)?;
    let l = b.rows() / n;
    let opts = CentralityOptions {
        tol,
        ..CentralityOptions::default()
    };
    let bundle = eigenvector_centrality(&b, n, l, ((n * l) as f64).sqrt(), &opts)?;
    let (_, z) = community_centrality(&bundle.c, comm)?;
    Ok((b, bundle, z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifRound {
    pub vifs: BTreeMap<String, f64>,
    pub dropped: Option<String>,
}

/// Repeatedly drops the covariate with the largest VIF while it exceeds
/// `threshold`. Returns the kept column indices and every round's VIFs.
/// Screening stops once a single covariate is left.
pub fn vif_screen(x: &DenseMatrix, names: &[String], threshold: f64) -> Result<(Vec<usize>, Vec<VifRound>)> {
    let mut kept: Vec<usize> = (0..x.cols()).collect();
    let mut rounds = Vec::new();
    while kept.len() >= 2 {
        let vifs = regression::vif(&x.select_columns(&kept))?;
        let (worst, &max) = vifs
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let dropped = (max > threshold).then(|| names[kept[worst]].clone());
        rounds.push(VifRound {
            vifs: kept.iter().zip(&vifs).map(|(&k, &v)| (names[k].clone(), v)).collect(),
            dropped: dropped.clone(),
        });
        if dropped.is_none() {
            break;
        }
        kept.remove(worst);
    }
    Ok((kept, rounds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rss: f64,
    pub sigma2_hat: f64,
    pub r_squared: f64,
    pub z_stat: Option<f64>,
}

impl NamedFit {
    fn new(terms: Vec<String>, fit: &RegressionFit) -> Self {
        Self {
            terms,
            coefficients: fit.coefficients(),
            std_errors: fit.std_errors.clone(),
            rss: fit.rss,
            sigma2_hat: fit.sigma2_hat,
            r_squared: fit.r_squared,
            z_stat: fit.z_stat_z,
        }
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms.iter().position(|t| t == term).map(|k| self.coefficients[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScore {
    pub node: usize,
    pub label: Option<String>,
    /// Row sum of `C` across layers.
    pub total_centrality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WiodReport {
    pub n_nodes: usize,
    pub n_layers: usize,
    pub n_communities: usize,
    pub scale: ScaleMode,
    pub a_n: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub a_n_over_gap: f64,
    /// `σ_min((I − P_X)V)` over the retained covariates; absent when `N ≤ P + L`.
    pub sigma_min_residual: Option<f64>,
    pub min_community_fraction: f64,
    pub response: String,
    pub candidates: Vec<String>,
    pub user_dropped: Vec<String>,
    pub vif_threshold: f64,
    pub vif_rounds: Vec<VifRound>,
    pub vif_dropped: Vec<String>,
    pub retained: Vec<String>,
    pub reduced: NamedFit,
    pub full: NamedFit,
    pub f_test: FTest,
    pub r_squared_gain: f64,
    /// `Z` for each community.
    pub community_z: Vec<f64>,
    /// Nodes by total centrality, highest first.
    pub ranking: Vec<NodeScore>,
    pub provenance: Vec<String>,
}

/// Runs the full workflow on a validated bundle.
pub fn wiod_pipeline(bundle: &DatasetBundle, opts: &WiodOptions) -> Result<WiodReport> {
    bundle.validate()?;
    let (n, l) = (bundle.n_nodes, bundle.n_layers);
    let names = &bundle.covariates.names;
    for d in &opts.drop {
        if !names.contains(d) {
            return Err(Error::InvalidArgument(format!("cannot drop unknown covariate '{d}'")));
        }
    }
    let candidates: Vec<String> = names.iter().filter(|c| !opts.drop.contains(c)).cloned().collect();
    if candidates.is_empty() {
        return Err(Error::NoCovariatesSurvive);
    }
    let cand_refs: Vec<&str> = candidates.iter().map(String::as_str).collect();
    let x_raw = bundle.covariates.select(&cand_refs)?.values;

    let (_, cent, z) = network_covariates(&bundle.flows, n, &bundle.communities, opts.scale, opts.eigen_tol)?;
    let x_std = regression::standardize(&x_raw)?.matrix;
    let y = regression::standardize(&DenseMatrix::column_vector(&bundle.response))
        .map_err(|e| match e {
            Error::ZeroVariance(_) => Error::InvalidArgument(format!("response '{}' is constant", bundle.response_name)),
            other => other,
        })?
        .matrix
        .into_data();

    let (kept, rounds) = vif_screen(&x_std, &candidates, opts.vif_threshold)?;
    if kept.is_empty() {
        return Err(Error::NoCovariatesSurvive);
    }
    let retained: Vec<String> = kept.iter().map(|&k| candidates[k].clone()).collect();
    let vif_dropped = rounds.iter().filter_map(|r| r.dropped.clone()).collect();
    let x_kept = x_std.select_columns(&kept);
    let ones = DenseMatrix::column_vector(&vec![1.0; n]);
    let w = DenseMatrix::hstack(&[&ones, &x_kept])?;

    let reduced_fit = regression::fit_covariates_only(&w, &y)?;
    let full_fit = regression::fit_ccmnetr(&w, &z, &y, 0.0)?;
    let f_test = regression::added_variable_f_test(&reduced_fit, &full_fit)?;
    let terms: Vec<String> = std::iter::once("intercept".to_string()).chain(retained.iter().cloned()).collect();
    let reduced = NamedFit::new(terms.clone(), &reduced_fit);
    let full = NamedFit::new(terms.into_iter().chain(["Z".to_string()]).collect(), &full_fit);

    let sigma_min_residual = if n > kept.len() + l {
        Some(linalg::smallest_singular_value_residual(&x_kept, &cent.v)?)
    } else {
        None
    };
    let community_z = (1..=bundle.communities.n_communities())
        .map(|r| {
            let i = bundle.communities.labels().iter().position(|&c| c == r).expect("nonempty");
            z[i]
        })
        .collect();
    let labels = bundle.covariates.row_labels.as_ref();
    let mut ranking: Vec<NodeScore> = (0..n)
        .map(|i| NodeScore {
            node: i + 1,
            label: labels.map(|ls| ls[i].clone()),
            total_centrality: cent.c.row(i).iter().sum(),
        })
        .collect();
    ranking.sort_by(|a, b| b.total_centrality.total_cmp(&a.total_centrality).then(a.node.cmp(&b.node)));

    Ok(WiodReport {
        n_nodes: n,
        n_layers: l,
        n_communities: bundle.communities.n_communities(),
        scale: opts.scale,
        a_n: cent.a_n,
        lambda1: cent.lambda1,
        lambda2: cent.lambda2,
        gap: cent.gap,
        a_n_over_gap: cent.a_n / cent.gap,
        sigma_min_residual,
        min_community_fraction: bundle.communities.min_fraction(),
        response: bundle.response_name.clone(),
        candidates,
        user_dropped: opts.drop.clone(),
        vif_threshold: opts.vif_threshold,
        vif_rounds: rounds,
        vif_dropped,
        retained,
        r_squared_gain: full.r_squared - reduced.r_squared,
        reduced,
        full,
        f_test,
        community_z,
        ranking,
        provenance: bundle.provenance.clone(),
    })
}

pub const FIXTURE_NODES: usize = 56;
pub const FIXTURE_LAYERS: usize = 43;
pub const FIXTURE_COMMUNITIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFixture {
    pub bundle: DatasetBundle,
    /// Covariates constructed as near-linear combinations of the others.
    pub collinear: Vec<String>,
}

/// A 56-node, 43-layer, 20-community stand-in for an inter-country
/// input-output table. `CAP` and `COMP` are near-linear combinations of
/// `VA`, `EMP` and `K`; the response loads on `VA`, `EMP`, `K` and `Z`.
pub fn synthetic_fixture(seed: u64) -> Result<SyntheticFixture> {
    let (n, l) = (FIXTURE_NODES, FIXTURE_LAYERS);
    let dim = n * l;
    let comm = synth::balanced_labels(n, FIXTURE_COMMUNITIES)?;
    let labels = comm.labels().to_vec();
    let mut rng = rng::generator(seed, streams::FIXTURE);
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let node_scale: Vec<f64> = (0..n).map(|_| (0.5 * gauss(&mut rng)).exp()).collect();
    let layer_scale: Vec<f64> = (0..l).map(|_| gauss(&mut rng).exp()).collect();
    let mut flows = DenseMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let (la, ia, lb, ib) = (a / n, a % n, b / n, b % n);
            let same = labels[ia] == labels[ib];
            let p = match (la == lb, same) {
                (true, true) => 0.7,
                (true, false) => 0.15,
                (false, true) => 0.02,
                (false, false) => 0.002,
            };
            let u: f64 = rng.random();
            let e: f64 = Exp1.sample(&mut rng);
            if u < p && a != b {
                let level = if la == lb { 10.0 * layer_scale[la] } else { 2.0 };
                flows[(a, b)] = level * node_scale[ia] * node_scale[ib] * (0.05 + e);
            }
        }
    }

    let (_, _, z) = network_covariates(&flows, n, &comm, ScaleMode::Global, linalg::DEFAULT_EIGEN_TOL)?;
    let z_std = regression::standardize(&DenseMatrix::column_vector(&z))?.matrix.into_data();
    let mut draw = || -> Vec<f64> { (0..n).map(|_| gauss(&mut rng)).collect() };
    let (va, emp, k, e1, e2, ey) = (draw(), draw(), draw(), draw(), draw(), draw());
    let cap: Vec<f64> = (0..n).map(|i| va[i] + k[i] + 0.05 * e1[i]).collect();
    let comp: Vec<f64> = (0..n).map(|i| emp[i] + 0.8 * va[i] + 0.8 * k[i] + 0.2 * e2[i]).collect();
    let go: Vec<f64> = (0..n)
        .map(|i| 2.0 * va[i] + emp[i] + 0.5 * k[i] + 1.5 * z_std[i] + 0.5 * ey[i])
        .collect();
    // put each column on its own raw scale; screening and fits are scale-free
    let raw = |v: &[f64], loc: f64, scale: f64| -> Vec<f64> { v.iter().map(|x| loc + scale * x).collect() };
    let names = ["VA", "CAP", "COMP", "EMP", "K"];
    let columns = [
        raw(&va, 500.0, 120.0),
        raw(&cap, 900.0, 300.0),
        raw(&comp, 300.0, 80.0),
        raw(&emp, 40.0, 9.0),
        raw(&k, 2000.0, 450.0),
    ];
    let covariates = Table {
        names: names.iter().map(|s| s.to_string()).collect(),
        values: DenseMatrix::from_columns(&columns)?,
        row_labels: Some((1..=n).map(|i| format!("S{i:02}")).collect()),
        lines: (2..n + 2).collect(),
    };
    Ok(SyntheticFixture {
        bundle: DatasetBundle {
            flows,
            n_nodes: n,
            n_layers: l,
            covariates,
            response_name: "GO".into(),
            response: raw(&go, 1500.0, 400.0),
            communities: comm,
            provenance: vec![format!("synthetic fixture, seed {seed}")],
        },
        collinear: vec!["CAP".into(), "COMP".into()],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixturePaths {
    pub flows: PathBuf,
    pub covariates: PathBuf,
    pub communities: PathBuf,
}

/// Writes a fixture as `flows.csv` (directed edge list), `covariates.csv`
/// (`node`, `GO` and the candidate covariates) and `communities.csv`.
pub fn write_fixture(fixture: &SyntheticFixture, dir: &Path) -> Result<FixturePaths> {
    let b = &fixture.bundle;
    let n = b.n_nodes;
    let mut flows = String::from("node_i,layer_i,node_j,layer_j,weight\n");
    for a in 0..b.flows.rows() {
        for (c, &w) in b.flows.row(a).iter().enumerate() {
            if w != 0.0 {
                flows.push_str(&format!("{},{},{},{},{w}\n", a % n + 1, a / n + 1, c % n + 1, c / n + 1));
            }
        }
    }
    let mut cov = format!("node,{}", b.response_name);
    for name in &b.covariates.names {
        cov.push(',');
        cov.push_str(name);
    }
    cov.push('\n');
    for i in 0..n {
        cov.push_str(&format!("{},{}", i + 1, b.response[i]));
        for v in b.covariates.values.row(i) {
            cov.push_str(&format!(",{v}"));
        }
        cov.push('\n');
    }
    let paths = FixturePaths {
        flows: dir.join("flows.csv"),
        covariates: dir.join("covariates.csv"),
        communities: dir.join("communities.csv"),
    };
    fs::write(&paths.flows, flows)?;
    fs::write(&paths.covariates, cov)?;
    fs::write(&paths.communities, io::communities_to_string(&b.communities))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_modes() {
        let flows = DenseMatrix::from_rows(&[[0.0, 1.0, 0.0, 0.0], [3.0, 0.0, 0.0, 0.5], [0.0, 0.0, 0.0, 2.0], [0.0, 0.0, 0.0, 0.0]])
            .unwrap();
        let g = symmetrize_and_scale(&flows, 2, ScaleMode::Global).unwrap();
        assert!(g.is_symmetric());
        assert_eq!(g.max_abs(), 2.0);
        assert_eq!(g[(0, 1)], 2.0);
        assert_eq!(g[(1, 3)], 0.25);
        let p = symmetrize_and_scale(&flows, 2, ScaleMode::PerBlock).unwrap();
        assert_eq!(p[(0, 1)], 2.0);
        assert_eq!(p[(1, 3)], 2.0);
        assert_eq!(p[(2, 3)], 2.0);
        assert!(p.is_symmetric());
        assert!(matches!(
            symmetrize_and_scale(&DenseMatrix::zeros(2, 2), 1, ScaleMode::Global),
            Err(Error::DegenerateRange(_))
        ));
    }

    #[test]
    fn scaling_is_idempotent_on_scaled_symmetric_input() {
        let b = DenseMatrix::from_rows(&[[0.0, 2.0, 0.5], [2.0, 0.0, 1.0], [0.5, 1.0, 0.0]]).unwrap();
        // B/2 symmetrized is B again, and max 2 leaves it unscaled
        let again = symmetrize_and_scale(&b.scaled(0.5), 3, ScaleMode::Global).unwrap();
        assert_eq!(again, b);
    }

    #[test]
    fn screen_with_infinite_threshold_keeps_all() {
        let x = synth::sample_covariates(40, 3, 1);
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let (kept, rounds) = vif_screen(&x, &names, f64::INFINITY).unwrap();
        assert_eq!(kept, vec![0, 1, 2]);
        assert_eq!(rounds.len(), 1);
        assert!(rounds[0].dropped.is_none());
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let x = synth::sample_covariates(30, 2, 4);
        let dup = DenseMatrix::hstack(&[&x, &x.select_columns(&[0])]).unwrap();
        let names: Vec<String> = ["a", "b", "a2"].iter().map(|s| s.to_string()).collect();
        assert!(matches!(vif_screen(&dup, &names, 5.0), Err(Error::RankDeficient { .. })));
    }
}
