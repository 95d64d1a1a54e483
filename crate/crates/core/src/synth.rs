//! Stochastic-block-model layers, edge weights and covariate/response draws.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::centrality::CommunityStructure;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{self, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightDist {
    /// Edge weights i.i.d. Uniform(1, 2).
    Uniform12,
    /// Edge weights i.i.d. Exp(1), then affinely rescaled onto [1, 2].
    ExpRescaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub labels: CommunityStructure,
    /// `R x R` symmetric edge probabilities.
    pub conn_prob: DenseMatrix,
    pub weight_dist: WeightDist,
    pub seed: u64,
}

impl SbmSpec {
    pub fn n_nodes(&self) -> usize {
        self.labels.n_nodes()
    }

    fn validate(&self) -> Result<()> {
        let r = self.labels.n_communities();
        if self.conn_prob.shape() != (r, r) {
            return Err(Error::dims(format!(
                "connection probabilities are {}x{}, expected {r}x{r}",
                self.conn_prob.rows(),
                self.conn_prob.cols()
            )));
        }
        self.conn_prob.check_symmetric()?;
        if let Some(p) = self.conn_prob.data().iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Probability matrix with `within` on the diagonal and `between` elsewhere.
pub fn planted_partition(r: usize, within: f64, between: f64) -> DenseMatrix {
    DenseMatrix::from_fn(r, r, |i, j| if i == j { within } else { between })
}

/// The three-community matrix used in the simulations: 0.8 within, 0.1 between.
pub fn assortative_probabilities() -> DenseMatrix {
    planted_partition(3, 0.8, 0.1)
}

/// The weaker alternative for the second layer: 0.5 within, 0.25 between.
pub fn weak_assortative_probabilities() -> DenseMatrix {
    planted_partition(3, 0.5, 0.25)
}

/// Contiguous balanced labels: `⌊N/R⌋` per community, the first `N mod R`
/// communities take one extra node.
pub fn balanced_labels(n: usize, r: usize) -> Result<CommunityStructure> {
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} nodes into {r} communities"
        )));
    }
    let base = n / r;
    let extra = n % r;
    let labels = (0..r)
        .flat_map(|c| std::iter::repeat_n(c + 1, base + usize::from(c < extra)))
        .collect();
    CommunityStructure::from_labels(labels)
}

/// One weighted SBM layer: zero diagonal, Bernoulli edges, weighted and mirrored.
pub fn sample_sbm_layer(spec: &SbmSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let n = spec.n_nodes();
    let labels = spec.labels.labels();
    let mut rng = rng::generator(spec.seed, streams::SBM_LAYER);
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = spec.conn_prob[(labels[i] - 1, labels[j] - 1)];
            // one uniform for the edge and one for the weight keeps draws aligned across probabilities
            let edge = rng.random::<f64>() < p;
            let w = match spec.weight_dist {
                WeightDist::Uniform12 => 1.0 + rng.random::<f64>(),
                WeightDist::ExpRescaled => {
                    let e: f64 = Exp1.sample(&mut rng);
                    e.max(f64::MIN_POSITIVE)
                }
            };
            if edge {
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
    }
    if spec.weight_dist == WeightDist::ExpRescaled && a.data().iter().any(|v| *v != 0.0) {
        a = rescale_to_unit_band(&a)?;
    }
    Ok(a)
}

/// Maps each nonzero entry `a` to `1 + (a − min)/(max − min)`, with min/max
/// over the nonzero entries. Zeros stay zero.
pub fn rescale_to_unit_band(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (min, max) = a
        .data()
        .iter()
        .filter(|v| **v != 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !min.is_finite() {
        return Err(Error::InvalidArgument("matrix has no nonzero entries".into()));
    }
    if max == min {
        return Err(Error::DegenerateRange(min));
    }
    let range = max - min;
    let data = a
        .data()
        .iter()
        .map(|&v| if v == 0.0 { 0.0 } else { 1.0 + (v - min) / range })
        .collect();
    DenseMatrix::new(a.rows(), a.cols(), data)
}

/// `N x P` matrix of i.i.d. standard normal entries.
pub fn sample_covariates(n: usize, p: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng::generator(seed, streams::COVARIATES);
    let data = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    DenseMatrix::new(n, p, data).expect("sized")
}

/// `y = X β_x + net β_net + ε` with `ε ~ N(0, σ_y² I)`.
pub fn sample_response(
    x: &DenseMatrix,
    net_covariate: &DenseMatrix,
    beta_x: &[f64],
    beta_net: &[f64],
    sigma_y: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if x.cols() != beta_x.len() || net_covariate.cols() != beta_net.len() || x.rows() != net_covariate.rows() {
        return Err(Error::dims(format!(
            "X {}x{} with {} coefficients, network covariate {}x{} with {}",
            x.rows(),
            x.cols(),
            beta_x.len(),
            net_covariate.rows(),
            net_covariate.cols(),
            beta_net.len()
        )));
    }
    if !(sigma_y >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_y must be nonnegative, got {sigma_y}")));
    }
    let mean_x = x.matvec(beta_x)?;
    let mean_net = net_covariate.matvec(beta_net)?;
    let mut rng = rng::generator(seed, streams::RESPONSE);
    Ok(mean_x
        .iter()
        .zip(&mean_net)
        .map(|(a, b)| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            a + b + sigma_y * eps
        })
        .collect())
}
