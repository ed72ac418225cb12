//! Tests of `H0: rho(X,Z) = rho(Y,Z)` against `H1: rho(X,Z) > rho(Y,Z)`.
//!
//! The statistic is `D_n = rho1_hat - rho2_hat`. Its variance is estimated by
//! the delete-one jackknife (`asN`), by a class-stratified bootstrap, or by a
//! plug-in estimate of the first-order projection variance.

mod bootstrap;
mod jackknife;
pub mod normal;
mod permutation;
mod projection;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{concat_features, PairedDataset};
use crate::error::{CgcError, Result, Side};
use crate::gini::{gini_correlation_of, GiniEstimate};
use crate::rng::RngStream;

pub use bootstrap::{bootstrap_test, bootstrap_test_with, BootstrapOptions, BootstrapResult};
pub use jackknife::{jackknife, jackknife_variance, Jackknife};
pub use permutation::{permutation_independence_test, PermutationResult};
pub use projection::{projection_test, projection_variance};

/// Jackknife variances at or below this are treated as exact collinearity.
pub const DEGENERATE_VARIANCE_EPS: f64 = 1e-14;

/// The hypothesis every comparison tests, in words.
pub const HYPOTHESIS: &str = "H0: rho_g(X,Z) = rho_g(Y,Z)  vs  H1: rho_g(X,Z) > rho_g(Y,Z)";

/// Hypotheses of the added-value test, with `W = (X, Y)`.
pub const ADDED_VALUE_HYPOTHESIS: &str =
    "H0: rho_g(W,Z) = rho_g(X,Z)  vs  H1: rho_g(W,Z) > rho_g(X,Z),  W = (X, Y)";

/// Hypotheses of the permutation test of independence.
pub const INDEPENDENCE_HYPOTHESIS: &str = "H0: rho_g(X,Z) = 0  vs  H1: rho_g(X,Z) > 0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "asN")]
    AsN,
    #[serde(rename = "bootstrap")]
    Bootstrap,
    #[serde(rename = "projection")]
    Projection,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::AsN, Method::Bootstrap, Method::Projection];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::AsN => "asN",
            Method::Bootstrap => "bootstrap",
            Method::Projection => "projection",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asn" => Ok(Method::AsN),
            "bootstrap" => Ok(Method::Bootstrap),
            "projection" => Ok(Method::Projection),
            other => Err(CgcError::invalid(format!(
                "unknown method `{other}` (valid: asN, bootstrap, projection)"
            ))),
        }
    }
}

/// Outcome of one comparison of two Gini correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub rho1_hat: f64,
    pub rho2_hat: f64,
    pub d_n: f64,
    /// Estimated `var(D_n)`.
    pub variance_hat: f64,
    pub z_score: Option<f64>,
    pub p_value: f64,
    pub method: Method,
    pub alpha: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgcDifference {
    pub rho1_hat: f64,
    pub rho2_hat: f64,
    pub d_n: f64,
    pub x: GiniEstimate,
    pub y: GiniEstimate,
}

pub fn cgc_difference(d: &PairedDataset) -> Result<CgcDifference> {
    let x = gini_correlation_of(d.x(), d.classes()).map_err(|e| e.on_side(Side::X))?;
    let y = gini_correlation_of(d.y(), d.classes()).map_err(|e| e.on_side(Side::Y))?;
    Ok(CgcDifference {
        rho1_hat: x.rho,
        rho2_hat: y.rho,
        d_n: x.rho - y.rho,
        x,
        y,
    })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CgcError::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// One-sided normal-theory decision for `D_n` with variance `variance`.
pub(crate) fn normal_decision(
    diff: &CgcDifference,
    variance: f64,
    method: Method,
    alpha: f64,
) -> ComparisonResult {
    let se = variance.sqrt();
    let z = diff.d_n / se;
    ComparisonResult {
        rho1_hat: diff.rho1_hat,
        rho2_hat: diff.rho2_hat,
        d_n: diff.d_n,
        variance_hat: variance,
        z_score: Some(z),
        p_value: normal::normal_sf(z).clamp(0.0, 1.0),
        method,
        alpha,
        reject: diff.d_n > normal::upper_quantile(alpha) * se,
    }
}

/// Jackknife-studentized asymptotic normal test.
pub fn asn_test(d: &PairedDataset, alpha: f64) -> Result<ComparisonResult> {
    check_alpha(alpha)?;
    let diff = cgc_difference(d)?;
    let variance = jackknife_variance(d)?;
    if variance <= DEGENERATE_VARIANCE_EPS {
        return Err(CgcError::DegenerateVariance { variance });
    }
    Ok(normal_decision(&diff, variance, Method::AsN, alpha))
}

/// The pair `(W, X)` with `W = [x | y]`, used to ask whether `y` adds to `x`.
pub fn added_value_pair(d: &PairedDataset) -> PairedDataset {
    let w = concat_features(d);
    PairedDataset::with_names(
        w.features().to_owned(),
        d.x().to_owned(),
        w.feature_names().to_vec(),
        d.x_names().to_vec(),
        d.classes().clone(),
    )
    .expect("derived from a valid dataset")
}

#[derive(Debug, Clone, PartialEq)]
pub enum AddedValueOutcome {
    Asymptotic(ComparisonResult),
    Bootstrap(BootstrapResult),
}

impl AddedValueOutcome {
    pub fn p_value(&self) -> f64 {
        match self {
            AddedValueOutcome::Asymptotic(r) => r.p_value,
            AddedValueOutcome::Bootstrap(r) => r.p_value,
        }
    }
}

/// Test `H0: rho(W,Z) = rho(X,Z)` against `rho(W,Z) > rho(X,Z)`.
pub fn added_value_test(
    d: &PairedDataset,
    method: Method,
    alpha: f64,
    b: usize,
    rng: &RngStream,
) -> Result<AddedValueOutcome> {
    let pair = added_value_pair(d);
    match method {
        Method::AsN => asn_test(&pair, alpha).map(AddedValueOutcome::Asymptotic),
        Method::Projection => projection_test(&pair, alpha).map(AddedValueOutcome::Asymptotic),
        Method::Bootstrap => bootstrap_test(&pair, b, rng).map(AddedValueOutcome::Bootstrap),
    }
}
