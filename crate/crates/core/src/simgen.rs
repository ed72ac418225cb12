//! Data generators for the simulation designs.
//!
//! Fixed-size designs (`ex1a`, `ex1b`, `ex2a`, `ex2b`) have three classes and
//! emit exactly `n_k` rows per class, class 1 first. `ex3` draws a binary
//! label from a logistic model, so its class sizes are random.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{float_literal, quoted, FlatConfig};
use crate::data::{ClassIndex, PairedDataset};
use crate::error::{CgcError, Result};
use crate::rng::RngStream;

/// AR(1)-type correlation used by the normal and exponential mixtures.
pub const MIXTURE_AR_BASE: f64 = 0.7;
/// Correlation base of the logistic design's dependent variant.
pub const LOGISTIC_AR_BASE: f64 = 0.5;
/// Exponential rates of classes 1..3.
pub const EXP_RATES: [f64; 3] = [1.0, 2.0, 4.0];
/// Dimension of `V` in the logistic design; `X = V[0..5]`.
pub const LOGISTIC_DIM: usize = 10;
pub const LOGISTIC_ACTIVE: usize = 5;

const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Ex1a,
    Ex1b,
    Ex2a,
    Ex2b,
    Ex3,
}

impl Design {
    pub const ALL: [Design; 5] = [Design::Ex1a, Design::Ex1b, Design::Ex2a, Design::Ex2b, Design::Ex3];

    pub fn as_str(&self) -> &'static str {
        match self {
            Design::Ex1a => "ex1a",
            Design::Ex1b => "ex1b",
            Design::Ex2a => "ex2a",
            Design::Ex2b => "ex2b",
            Design::Ex3 => "ex3",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Design {
    type Err = CgcError;

    fn from_str(s: &str) -> Result<Self> {
        Design::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                CgcError::invalid(format!(
                    "unknown design `{s}` (valid designs: ex1a, ex1b, ex2a, ex2b, ex3)"
                ))
            })
    }
}

/// Covariance of `V` in the logistic design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaVariant {
    Independent,
    Ar,
}

impl FromStr for SigmaVariant {
    type Err = CgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independent" => Ok(SigmaVariant::Independent),
            "ar" => Ok(SigmaVariant::Ar),
            _ => Err(CgcError::invalid(format!(
                "unknown sigma_variant `{s}` (valid: independent, ar)"
            ))),
        }
    }
}

impl fmt::Display for SigmaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaVariant::Independent => "independent",
            SigmaVariant::Ar => "ar",
        })
    }
}

/// How the exponential parameters `1, 2, 4` are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpConvention {
    /// `Exp(lambda)` has mean `1 / lambda`.
    Rate,
    /// `Exp(lambda)` has mean `lambda`.
    Mean,
}

impl ExpConvention {
    fn rate(&self, parameter: f64) -> f64 {
        match self {
            ExpConvention::Rate => parameter,
            ExpConvention::Mean => 1.0 / parameter,
        }
    }
}

impl FromStr for ExpConvention {
    type Err = CgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rate" => Ok(ExpConvention::Rate),
            "mean" => Ok(ExpConvention::Mean),
            _ => Err(CgcError::invalid(format!(
                "unknown exp_convention `{s}` (valid: rate, mean)"
            ))),
        }
    }
}

impl fmt::Display for ExpConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpConvention::Rate => "rate",
            ExpConvention::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    pub dim: usize,
    pub base: f64,
}

/// `sigma[i][j] = base^|i - j|`.
pub fn ar_covariance(spec: CovarianceSpec) -> Array2<f64> {
    Array2::from_shape_fn((spec.dim, spec.dim), |(i, j)| {
        spec.base.powi(i.abs_diff(j) as i32)
    })
}

/// Symmetric positive semi-definite square root via eigendecomposition.
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero.
pub fn psd_sqrt(sigma: ArrayView2<f64>) -> Result<Array2<f64>> {
    let d = sigma.nrows();
    if sigma.ncols() != d {
        return Err(CgcError::invalid("covariance matrix must be square"));
    }
    let scale = sigma.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (sigma[[i, j]] - sigma[[j, i]]).abs() > 1e-12 * scale {
                return Err(CgcError::invalid(format!(
                    "covariance matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (sigma[[i, j]] + sigma[[j, i]]));
    let eig = SymmetricEigen::new(m);
    if let Some(bad) = eig.eigenvalues.iter().find(|&&l| l < -1e-10) {
        return Err(CgcError::invalid(format!(
            "covariance matrix has negative eigenvalue {bad:e}"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok(Array2::from_shape_fn((d, d), |(i, j)| 0.5 * (root[(i, j)] + root[(j, i)])))
}

fn standard_normal_vector(dim: usize, rng: &mut RngStream) -> Array1<f64> {
    Array1::from_shape_fn(dim, |_| rng.sample(StandardNormal))
}

/// `n` draws of `mean + S z` with `S` the symmetric root of `sigma`.
pub fn sample_mvnormal(
    mean: ArrayView1<f64>,
    sigma: ArrayView2<f64>,
    n: usize,
    rng: &mut RngStream,
) -> Result<Array2<f64>> {
    if sigma.nrows() != mean.len() {
        return Err(CgcError::invalid(format!(
            "mean has dimension {} but covariance is {}x{}",
            mean.len(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let root = psd_sqrt(sigma)?;
    let mut out = Array2::zeros((n, mean.len()));
    for mut row in out.rows_mut() {
        let z = standard_normal_vector(mean.len(), rng);
        row.assign(&(&mean + &root.dot(&z)));
    }
    Ok(out)
}

/// `dim` i.i.d. exponential draws with the given rate (mean `1 / rate`).
pub fn sample_exponential_vector(rate: f64, dim: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let exp = Exp::new(rate)
        .ok()
        .filter(|_| rate > 0.0)
        .ok_or_else(|| CgcError::invalid(format!("exponential rate must be > 0, got {rate}")))?;
    Ok((0..dim).map(|_| exp.sample(rng)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub design: Design,
    pub p: usize,
    pub q: usize,
    /// Per-class sizes; for `ex3` a single entry giving the total `n`.
    pub class_sizes: Vec<usize>,
    pub beta: f64,
    pub sigma_variant: SigmaVariant,
    pub exp_convention: ExpConvention,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(design: Design, p: usize, q: usize, class_sizes: Vec<usize>, beta: f64) -> Self {
        Self {
            design,
            p,
            q,
            class_sizes,
            beta,
            sigma_variant: SigmaVariant::Ar,
            exp_convention: ExpConvention::Rate,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CgcError::invalid(m));
        if self.p == 0 || self.q == 0 {
            return bad(format!("p and q must be >= 1, got ({}, {})", self.p, self.q));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        match self.design {
            Design::Ex3 => {
                if self.p != LOGISTIC_ACTIVE || self.q > LOGISTIC_DIM - LOGISTIC_ACTIVE {
                    return bad(format!(
                        "ex3 needs p = 5 and 1 <= q <= 5, got ({}, {})",
                        self.p, self.q
                    ));
                }
                // Below n = 6 every draw fails the class-size check, which
                // surfaces as a retry-exhaustion error at generation time.
                if self.class_sizes.len() != 1 || self.class_sizes[0] < 2 {
                    return bad("ex3 takes a single total sample size n >= 2".into());
                }
            }
            _ => {
                if self.class_sizes.len() != 3 {
                    return bad(format!(
                        "{} has three classes, got {} class sizes",
                        self.design,
                        self.class_sizes.len()
                    ));
                }
                if let Some(n) = self.class_sizes.iter().find(|&&n| n < 3) {
                    return bad(format!("class sizes must be >= 3, got {n}"));
                }
            }
        }
        Ok(())
    }

    /// Render as a flat config file.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        self.write_keys(&mut s, true);
        s
    }

    pub(crate) fn write_keys(&self, s: &mut String, with_beta: bool) {
        use std::fmt::Write;
        let _ = writeln!(s, "design = {}", quoted(self.design.as_str()));
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "q = {}", self.q);
        for (k, n) in self.class_sizes.iter().enumerate() {
            let _ = writeln!(s, "n{} = {}", k + 1, n);
        }
        if with_beta {
            let _ = writeln!(s, "beta = {}", float_literal(self.beta));
        }
        let _ = writeln!(s, "sigma_variant = {}", quoted(&self.sigma_variant.to_string()));
        let _ = writeln!(s, "exp_convention = {}", quoted(&self.exp_convention.to_string()));
        let _ = writeln!(s, "seed = {}", self.seed);
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = FlatConfig::parse(text)?;
        let out = Self::from_flat(&mut cfg)?;
        cfg.finish()?;
        Ok(out)
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = FlatConfig::read(path.as_ref())?;
        let out = Self::from_flat(&mut cfg)?;
        cfg.finish()?;
        Ok(out)
    }

    pub(crate) fn from_flat(cfg: &mut FlatConfig) -> Result<Self> {
        let design: Design = cfg
            .str("design")?
            .ok_or_else(|| CgcError::invalid("config: `design` is required"))?
            .parse()?;
        let mut class_sizes = Vec::new();
        if cfg.has("n") {
            class_sizes = cfg
                .list("n")?
                .unwrap_or_default()
                .iter()
                .map(|t| t.parse::<usize>().map_err(|_| CgcError::invalid(format!("config: bad class size `{t}`"))))
                .collect::<Result<_>>()?;
        }
        let mut k = 1;
        while let Some(n) = cfg.uint(&format!("n{k}"))? {
            class_sizes.push(n as usize);
            k += 1;
        }
        if class_sizes.is_empty() {
            return Err(CgcError::invalid("config: class sizes `n1`, `n2`, ... are required"));
        }
        let out = ScenarioConfig {
            design,
            p: cfg.uint("p")?.unwrap_or(1) as usize,
            q: cfg.uint("q")?.unwrap_or(1) as usize,
            class_sizes,
            beta: cfg.float("beta")?.unwrap_or(0.0),
            sigma_variant: cfg.str("sigma_variant")?.map(|s| s.parse()).transpose()?.unwrap_or(SigmaVariant::Ar),
            exp_convention: cfg
                .str("exp_convention")?
                .map(|s| s.parse())
                .transpose()?
                .unwrap_or(ExpConvention::Rate),
            seed: cfg.uint("seed")?.unwrap_or(0),
        };
        out.validate()?;
        Ok(out)
    }
}

fn class_labels(sizes: &[usize]) -> Vec<String> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n((k + 1).to_string(), n))
        .collect()
}

fn fixed_classes(sizes: &[usize]) -> Result<ClassIndex> {
    ClassIndex::from_labels(&class_labels(sizes))
}

/// Draw one dataset from a scenario.
pub fn gen_scenario(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<PairedDataset> {
    cfg.validate()?;
    match cfg.design {
        Design::Ex1a => gen_normal_independent(cfg, rng),
        Design::Ex1b => gen_exponential_independent(cfg, rng),
        Design::Ex2a => gen_normal_joint(cfg, rng),
        Design::Ex2b => gen_exponential_joint(cfg, rng),
        Design::Ex3 => gen_logistic(cfg, rng),
    }
}

fn ar(dim: usize, base: f64) -> Array2<f64> {
    ar_covariance(CovarianceSpec { dim, base })
}

/// X_k ~ N((2 + k) 1_p, S_p) + k beta 1_p and Y_k ~ N(k 1_q, S_q), k = 0, 1, 2.
fn gen_normal_independent(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<PairedDataset> {
    let (p, q) = (cfg.p, cfg.q);
    let rx = psd_sqrt(ar(p, MIXTURE_AR_BASE).view())?;
    let ry = psd_sqrt(ar(q, MIXTURE_AR_BASE).view())?;
    let n: usize = cfg.class_sizes.iter().sum();
    let mut x = Array2::zeros((n, p));
    let mut y = Array2::zeros((n, q));
    let mut row = 0;
    for (k, &nk) in cfg.class_sizes.iter().enumerate() {
        let kf = k as f64;
        for _ in 0..nk {
            let zx = standard_normal_vector(p, rng);
            let zy = standard_normal_vector(q, rng);
            x.row_mut(row).assign(&(rx.dot(&zx) + (2.0 + kf + kf * cfg.beta)));
            y.row_mut(row).assign(&(ry.dot(&zy) + kf));
            row += 1;
        }
    }
    PairedDataset::new(x, y, fixed_classes(&cfg.class_sizes)?)
}

fn exp_vector(cfg: &ScenarioConfig, class: usize, dim: usize, rng: &mut RngStream) -> Result<Array1<f64>> {
    let rate = cfg.exp_convention.rate(EXP_RATES[class]);
    Ok(Array1::from(sample_exponential_vector(rate, dim, rng)?))
}

/// X_k = S_p w + beta 1_p (classes 1, 2), X_3 = S_p w; Y_k = S_q w, with
/// w i.i.d. exponential at the class rate.
fn gen_exponential_independent(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<PairedDataset> {
    let (p, q) = (cfg.p, cfg.q);
    let rx = psd_sqrt(ar(p, MIXTURE_AR_BASE).view())?;
    let ry = psd_sqrt(ar(q, MIXTURE_AR_BASE).view())?;
    let n: usize = cfg.class_sizes.iter().sum();
    let mut x = Array2::zeros((n, p));
    let mut y = Array2::zeros((n, q));
    let mut row = 0;
    for (k, &nk) in cfg.class_sizes.iter().enumerate() {
        let shift = if k < 2 { cfg.beta } else { 0.0 };
        for _ in 0..nk {
            let wx = exp_vector(cfg, k, p, rng)?;
            let wy = exp_vector(cfg, k, q, rng)?;
            x.row_mut(row).assign(&(rx.dot(&wx) + shift));
            y.row_mut(row).assign(&ry.dot(&wy));
            row += 1;
        }
    }
    PairedDataset::new(x, y, fixed_classes(&cfg.class_sizes)?)
}

fn split_joint(joint: Array2<f64>, p: usize, classes: ClassIndex) -> Result<PairedDataset> {
    let x = joint.slice(s![.., ..p]).to_owned();
    let y = joint.slice(s![.., p..]).to_owned();
    PairedDataset::new(x, y, classes)
}

/// (X, Y)_k ~ N(mu_k, S_{p+q}) with mu_k = ((2 + k + k beta) 1_p, k 1_q).
fn gen_normal_joint(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<PairedDataset> {
    let (p, q) = (cfg.p, cfg.q);
    let root = psd_sqrt(ar(p + q, MIXTURE_AR_BASE).view())?;
    let n: usize = cfg.class_sizes.iter().sum();
    let mut joint = Array2::zeros((n, p + q));
    let mut row = 0;
    for (k, &nk) in cfg.class_sizes.iter().enumerate() {
        let kf = k as f64;
        let mean = Array1::from_shape_fn(p + q, |j| {
            if j < p {
                2.0 + kf + kf * cfg.beta
            } else {
                kf
            }
        });
        for _ in 0..nk {
            let z = standard_normal_vector(p + q, rng);
            joint.row_mut(row).assign(&(&mean + &root.dot(&z)));
            row += 1;
        }
    }
    split_joint(joint, p, fixed_classes(&cfg.class_sizes)?)
}

/// (X, Y)_k = S_{p+q} w_k + (beta 1_p, 0_q) for classes 1, 2; class 3 unshifted.
fn gen_exponential_joint(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<PairedDataset> {
    let (p, q) = (cfg.p, cfg.q);
    let root = psd_sqrt(ar(p + q, MIXTURE_AR_BASE).view())?;
    let n: usize = cfg.class_sizes.iter().sum();
    let mut joint = Array2::zeros((n, p + q));
    let mut row = 0;
    for (k, &nk) in cfg.class_sizes.iter().enumerate() {
        let shift = if k < 2 { cfg.beta } else { 0.0 };
        let offset = Array1::from_shape_fn(p + q, |j| if j < p { shift } else { 0.0 });
        for _ in 0..nk {
            let w = exp_vector(cfg, k, p + q, rng)?;
            joint.row_mut(row).assign(&(root.dot(&w) + &offset));
            row += 1;
        }
    }
    split_joint(joint, p, fixed_classes(&cfg.class_sizes)?)
}

/// Log-odds of `Z = 1` given `V`.
pub fn logistic_log_odds(v: ArrayView1<f64>) -> f64 {
    -3.0 + 2.0 * v[0] + 2.0 * v[1] + 2.0 * v[2] + 3.0 * v[3].sin() + 4.0 * v[4] * v[4]
}

/// V ~ N(0, S_10), Z in {1, -1} from the logistic model, X = V[0..5],
/// Y = V[5..5 + q]. Redrawn while either class has fewer than 3 rows.
fn gen_logistic(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<PairedDataset> {
    let n = cfg.class_sizes[0];
    let sigma = match cfg.sigma_variant {
        SigmaVariant::Independent => Array2::eye(LOGISTIC_DIM),
        SigmaVariant::Ar => ar(LOGISTIC_DIM, LOGISTIC_AR_BASE),
    };
    let root = psd_sqrt(sigma.view())?;
    for _ in 0..=MAX_REDRAWS {
        let mut v = Array2::zeros((n, LOGISTIC_DIM));
        let mut assign = Vec::with_capacity(n);
        for mut row in v.rows_mut() {
            let z = standard_normal_vector(LOGISTIC_DIM, rng);
            row.assign(&root.dot(&z));
            let prob = 1.0 / (1.0 + (-logistic_log_odds(row.view())).exp());
            assign.push(if rng.random::<f64>() < prob { 0 } else { 1 });
        }
        let positives = assign.iter().filter(|&&c| c == 0).count();
        if positives < 3 || n - positives < 3 {
            continue;
        }
        let classes = ClassIndex::from_assignments(assign, vec!["1".into(), "-1".into()])?;
        let x = v.slice(s![.., ..LOGISTIC_ACTIVE]).to_owned();
        let y = v.slice(s![.., LOGISTIC_ACTIVE..LOGISTIC_ACTIVE + cfg.q]).to_owned();
        return PairedDataset::new(x, y, classes);
    }
    Err(CgcError::RetryExhausted {
        what: "ex3 sample kept producing a class with fewer than 3 rows".into(),
        attempts: MAX_REDRAWS,
    })
}

/// Synthetic stand-in for a grouped real dataset: `x` carries strong class
/// structure, `y` is a noisy linear image of `x` with weaker class signal.
pub fn standin_dataset(
    class_sizes: &[usize],
    p: usize,
    q: usize,
    rng: &mut RngStream,
) -> Result<PairedDataset> {
    if p == 0 || q == 0 {
        return Err(CgcError::invalid("p and q must be >= 1"));
    }
    let k = class_sizes.len();
    let centers = Array2::from_shape_fn((k, p), |_| 1.5 * rng.sample::<f64, _>(StandardNormal));
    let mixing = Array2::from_shape_fn((q, p), |_| {
        rng.sample::<f64, _>(StandardNormal) / (p as f64).sqrt()
    });
    let root = psd_sqrt(ar(p, 0.5).view())?;
    let n: usize = class_sizes.iter().sum();
    let mut x = Array2::zeros((n, p));
    let mut y = Array2::zeros((n, q));
    let mut row = 0;
    for (c, &nc) in class_sizes.iter().enumerate() {
        for _ in 0..nc {
            let xi = &centers.row(c) + &root.dot(&standard_normal_vector(p, rng));
            let yi = 0.6 * mixing.dot(&xi) + standard_normal_vector(q, rng);
            x.row_mut(row).assign(&xi);
            y.row_mut(row).assign(&yi);
            row += 1;
        }
    }
    PairedDataset::new(x, y, fixed_classes(class_sizes)?)
}
