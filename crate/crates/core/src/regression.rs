//! Least-squares fits of the centrality regressions and the supporting
//! diagnostics (VIF, added-variable F-test, standardization).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, DenseMatrix, LeastSquaresResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `y = Xβ_X + Cβ_C + ε`
    #[serde(rename = "cmnetr")]
    CMNetR,
    /// `y = Xβ_X + Zβ_Z + ε`
    #[serde(rename = "ccmnetr")]
    CCMNetR,
    /// `y = Xβ_X + Cβ_C + Sβ_S + ε`
    #[serde(rename = "rcfe")]
    RCFE,
    /// `y = Xβ_X + ε`, the reduced model of the added-variable test.
    #[serde(rename = "covariates-only")]
    CovariatesOnly,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::CMNetR => "cmnetr",
            ModelKind::CCMNetR => "ccmnetr",
            ModelKind::RCFE => "rcfe",
            ModelKind::CovariatesOnly => "covariates-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub model: ModelKind,
    pub beta_x: Vec<f64>,
    /// `β_C` (C-MNetR), `[β_Z]` (CC-MNetR), `β_C ++ β_S` (RCFE), empty otherwise.
    pub beta_net: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// `rss / (N − q)` with `q` fitted columns.
    pub sigma2_hat: f64,
    /// Per-coefficient OLS standard errors, `beta_x` first.
    pub std_errors: Vec<f64>,
    /// `1 − rss / tss` with centered `tss`.
    pub r_squared: f64,
    /// `√(ZᵀZ/σ̂²)(β̃_Z − β_Z⁰)`; CC-MNetR only, omitted when `σ̂² = 0`.
    pub z_stat_z: Option<f64>,
    pub n_obs: usize,
    pub n_params: usize,
    /// Set when the network covariate was estimated from a noisy matrix, in
    /// which case the standard errors ignore the estimation error.
    #[serde(default)]
    pub std_errors_naive: bool,
}

impl RegressionFit {
    /// All coefficients, `beta_x` first.
    pub fn coefficients(&self) -> Vec<f64> {
        self.beta_x.iter().chain(&self.beta_net).copied().collect()
    }
}

fn centered_tss(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

fn assemble(model: ModelKind, p: usize, y: &[f64], ls: LeastSquaresResult) -> RegressionFit {
    let n = y.len();
    let q = ls.coefficients.len();
    let tss = centered_tss(y);
    let std_errors = ls
        .xtx_inverse_diag
        .iter()
        .map(|d| (ls.sigma2_hat * d).sqrt())
        .collect();
    let mut beta_x = ls.coefficients;
    let beta_net = beta_x.split_off(p);
    RegressionFit {
        model,
        beta_x,
        beta_net,
        r_squared: if tss > 0.0 { 1.0 - ls.rss / tss } else { f64::NAN },
        residuals: ls.residuals,
        rss: ls.rss,
        sigma2_hat: ls.sigma2_hat,
        std_errors,
        z_stat_z: None,
        n_obs: n,
        n_params: q,
        std_errors_naive: false,
    }
}

fn check_rows(x: &DenseMatrix, other: usize, y: &[f64]) -> Result<()> {
    if x.rows() != other || y.len() != other {
        return Err(Error::dims(format!(
            "row counts disagree: X has {}, network covariate {other}, y {}",
            x.rows(),
            y.len()
        )));
    }
    Ok(())
}

/// OLS on `W1 = (X, C)`. Pass the true `C` or an estimate `Ĉ`.
pub fn fit_cmnetr(x: &DenseMatrix, c: &DenseMatrix, y: &[f64]) -> Result<RegressionFit> {
    check_rows(x, c.rows(), y)?;
    let w = DenseMatrix::hstack(&[x, c])?;
    Ok(assemble(ModelKind::CMNetR, x.cols(), y, least_squares(&w, y)?))
}

/// OLS on `W2 = (X, Z)` plus the normal-approximation statistic for `β_Z`.
pub fn fit_ccmnetr(x: &DenseMatrix, z: &[f64], y: &[f64], beta_z_null: f64) -> Result<RegressionFit> {
    check_rows(x, z.len(), y)?;
    let w = DenseMatrix::hstack(&[x, &DenseMatrix::column_vector(z)])?;
    let mut fit = assemble(ModelKind::CCMNetR, x.cols(), y, least_squares(&w, y)?);
    // an exact fit leaves only rounding in the residuals
    let yty: f64 = y.iter().map(|v| v * v).sum();
    if fit.rss > 1e-24 * yty.max(f64::MIN_POSITIVE) {
        let ztz: f64 = z.iter().map(|v| v * v).sum();
        fit.z_stat_z = Some((ztz / fit.sigma2_hat).sqrt() * (fit.beta_net[0] - beta_z_null));
    }
    Ok(fit)
}

/// OLS on `(X, C, S)`; the community indicators play the role of an intercept.
pub fn fit_rcfe(x: &DenseMatrix, c: &DenseMatrix, s: &DenseMatrix, y: &[f64]) -> Result<RegressionFit> {
    check_rows(x, c.rows(), y)?;
    check_rows(x, s.rows(), y)?;
    let w = DenseMatrix::hstack(&[x, c, s])?;
    Ok(assemble(ModelKind::RCFE, x.cols(), y, least_squares(&w, y)?))
}

/// OLS on `X` alone.
pub fn fit_covariates_only(x: &DenseMatrix, y: &[f64]) -> Result<RegressionFit> {
    check_rows(x, y.len(), y)?;
    Ok(assemble(ModelKind::CovariatesOnly, x.cols(), y, least_squares(x, y)?))
}

/// Variance inflation factors `1/(1 − R_i²)`, each from regressing column `i`
/// on the remaining columns plus an intercept.
pub fn vif(x: &DenseMatrix) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if p < 2 {
        return Err(Error::InsufficientData { needed: 2, got: p });
    }
    let ones = DenseMatrix::column_vector(&vec![1.0; n]);
    (0..p)
        .map(|i| {
            let target = x.column(i);
            let tss = centered_tss(&target);
            if tss == 0.0 {
                return Err(Error::ZeroVariance(i));
            }
            let others: Vec<usize> = (0..p).filter(|&j| j != i).collect();
            let w = DenseMatrix::hstack(&[&ones, &x.select_columns(&others)])?;
            let fit = least_squares(&w, &target)?;
            let unexplained = fit.rss / tss;
            if unexplained <= 1e-12 {
                return Err(Error::RankDeficient { ratio: unexplained });
            }
            Ok(1.0 / unexplained)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTest {
    pub f_stat: f64,
    /// `(Δq, N − q_full)`.
    pub df: (usize, usize),
    pub p_value: f64,
}

/// Added-variable F-test comparing nested fits.
pub fn added_variable_f_test(reduced: &RegressionFit, full: &RegressionFit) -> Result<FTest> {
    if reduced.n_obs != full.n_obs || reduced.n_params > full.n_params || full.n_obs <= full.n_params {
        return Err(Error::dims(format!(
            "models are not nested: reduced ({} obs, {} params), full ({} obs, {} params)",
            reduced.n_obs, reduced.n_params, full.n_obs, full.n_params
        )));
    }
    let extra = full.n_params - reduced.n_params;
    let resid_df = full.n_obs - full.n_params;
    if extra == 0 {
        return Ok(FTest {
            f_stat: 0.0,
            df: (0, resid_df),
            p_value: 1.0,
        });
    }
    let f_stat = ((reduced.rss - full.rss) / extra as f64) / (full.rss / resid_df as f64);
    let p_value = FisherSnedecor::new(extra as f64, resid_df as f64)
        .map(|d| d.sf(f_stat))
        .unwrap_or(f64::NAN);
    Ok(FTest {
        f_stat,
        df: (extra, resid_df),
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub matrix: DenseMatrix,
    pub means: Vec<f64>,
    /// Sample standard deviations (divisor `N − 1`).
    pub sds: Vec<f64>,
}

/// Centers each column and scales it to unit sample variance.
pub fn standardize(m: &DenseMatrix) -> Result<Standardized> {
    let (n, p) = m.shape();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut means = Vec::with_capacity(p);
    let mut sds = Vec::with_capacity(p);
    for j in 0..p {
        let col = m.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if !(var > 0.0) {
            return Err(Error::ZeroVariance(j));
        }
        means.push(mean);
        sds.push(var.sqrt());
    }
    let matrix = DenseMatrix::from_fn(n, p, |i, j| (m[(i, j)] - means[j]) / sds[j]);
    Ok(Standardized { matrix, means, sds })
}
