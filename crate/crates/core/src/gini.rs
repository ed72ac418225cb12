//! Pairwise distance kernels and the Gini estimators built on them.
//!
//! All pairwise sums are accumulated row by row in index order and the row
//! results are combined sequentially, so every value here is bit-identical
//! regardless of how many threads rayon uses.

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClassIndex, LabeledDataset};
use crate::error::{CgcError, Result};

/// Rows handed to one rayon task.
const ROW_BLOCK: usize = 16;

/// Euclidean distance with a compensated sum of squared differences.
#[inline]
pub fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        let t = d * d - comp;
        let s = sum + t;
        comp = (s - sum) - t;
        sum = s;
    }
    sum.sqrt()
}

/// `n choose 2` as a float.
#[inline]
pub fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSums {
    /// Sum of distances over all pairs `i < j`.
    pub total: f64,
    /// `row_sums[i] = sum over j != i` of the distance from row `i`.
    pub row_sums: Vec<f64>,
}

fn require_rows(m: &ArrayView2<f64>) -> Result<()> {
    if m.nrows() < 2 {
        return Err(CgcError::invalid(format!(
            "need at least 2 rows for pairwise distances, got {}",
            m.nrows()
        )));
    }
    Ok(())
}

pub fn distance_sums(m: ArrayView2<f64>) -> Result<DistanceSums> {
    require_rows(&m)?;
    let n = m.nrows();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .with_min_len(ROW_BLOCK)
        .map(|i| {
            let xi = m.row(i);
            let mut row = 0.0;
            let mut upper = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = euclidean(xi, m.row(j));
                row += d;
                if j > i {
                    upper += d;
                }
            }
            (row, upper)
        })
        .collect();
    Ok(DistanceSums {
        total: rows.iter().map(|r| r.1).sum(),
        row_sums: rows.into_iter().map(|r| r.0).collect(),
    })
}

/// Gini mean difference: the average distance over all `n choose 2` pairs.
pub fn gmd(m: ArrayView2<f64>) -> Result<f64> {
    let sums = distance_sums(m)?;
    Ok(sums.total / pairs(m.nrows()))
}

/// Pairwise sums split by class membership.
#[derive(Debug, Clone)]
pub(crate) struct ClassSums {
    pub total: f64,
    /// Sum over within-class pairs `i < j`, per class.
    pub class_totals: Vec<f64>,
    pub row_sums: Vec<f64>,
    /// Sum of distances from row `i` to the other members of its class.
    pub within_row_sums: Vec<f64>,
}

pub(crate) fn class_sums(m: ArrayView2<f64>, classes: &ClassIndex) -> ClassSums {
    let n = m.nrows();
    let class_of = classes.assignments();
    let rows: Vec<[f64; 4]> = (0..n)
        .into_par_iter()
        .with_min_len(ROW_BLOCK)
        .map(|i| {
            let xi = m.row(i);
            let ci = class_of[i];
            let mut acc = [0.0; 4];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = euclidean(xi, m.row(j));
                let same = class_of[j] == ci;
                acc[0] += d;
                if same {
                    acc[1] += d;
                }
                if j > i {
                    acc[2] += d;
                    if same {
                        acc[3] += d;
                    }
                }
            }
            acc
        })
        .collect();

    let mut class_totals = vec![0.0; classes.num_classes()];
    let mut total = 0.0;
    for (i, r) in rows.iter().enumerate() {
        total += r[2];
        class_totals[class_of[i]] += r[3];
    }
    ClassSums {
        total,
        class_totals,
        row_sums: rows.iter().map(|r| r[0]).collect(),
        within_row_sums: rows.iter().map(|r| r[1]).collect(),
    }
}

/// Sample Gini quantities for one predictor group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniEstimate {
    pub delta: f64,
    pub class_deltas: Vec<f64>,
    pub class_props: Vec<f64>,
    pub gcov: f64,
    pub rho: f64,
}

/// Assemble an estimate from raw pair sums.
///
/// `class_totals[k]` is the within-class pair sum of a class of size
/// `counts[k]`; `total` the pair sum over all `n = sum(counts)` rows.
pub(crate) fn estimate_from_sums(
    total: f64,
    class_totals: &[f64],
    counts: &[usize],
) -> Result<GiniEstimate> {
    let n: usize = counts.iter().sum();
    let delta = total / pairs(n);
    if !(delta > 0.0) {
        return Err(CgcError::DegeneratePredictor { side: None });
    }
    let class_deltas: Vec<f64> = class_totals
        .iter()
        .zip(counts)
        .map(|(&s, &nk)| s / pairs(nk))
        .collect();
    let class_props: Vec<f64> = counts.iter().map(|&nk| nk as f64 / n as f64).collect();
    let within: f64 = class_props
        .iter()
        .zip(&class_deltas)
        .map(|(p, d)| p * d)
        .sum();
    let gcov = delta - within;
    Ok(GiniEstimate {
        delta,
        class_deltas,
        class_props,
        gcov,
        rho: gcov / delta,
    })
}

/// Gini estimate of a feature matrix against a class partition.
pub fn gini_correlation_of(m: ArrayView2<f64>, classes: &ClassIndex) -> Result<GiniEstimate> {
    if m.nrows() != classes.n() {
        return Err(CgcError::invalid("feature rows and labels differ in length"));
    }
    let sums = class_sums(m, classes);
    estimate_from_sums(sums.total, &sums.class_totals, &classes.counts())
}

/// Categorical Gini covariance and correlation of a labeled dataset.
pub fn gini_correlation(d: &LabeledDataset) -> Result<GiniEstimate> {
    gini_correlation_of(d.features(), d.classes())
}

/// Dense symmetric matrix of pairwise distances, row-major.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(m: ArrayView2<f64>) -> Self {
        let n = m.nrows();
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n.max(1))
            .with_min_len(ROW_BLOCK)
            .enumerate()
            .for_each(|(i, row)| {
                let xi = m.row(i);
                for (j, v) in row.iter_mut().enumerate() {
                    if j != i {
                        *v = euclidean(xi, m.row(j));
                    }
                }
            });
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Sum over `i < j` of all pairs.
    pub fn total(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i)[i + 1..].iter().sum::<f64>())
            .sum()
    }

    /// Within-class pair sums under an arbitrary class assignment.
    pub fn class_totals(&self, class_of: &[usize], num_classes: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_classes];
        for i in 0..self.n {
            let ci = class_of[i];
            let row = self.row(i);
            let mut s = 0.0;
            for j in i + 1..self.n {
                if class_of[j] == ci {
                    s += row[j];
                }
            }
            out[ci] += s;
        }
        out
    }
}

fn double_centered(dm: &DistanceMatrix) -> Vec<f64> {
    let n = dm.n();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| dm.row(i).iter().sum::<f64>() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = dm.get(i, j) - row_means[i] - row_means[j] + grand;
        }
    }
    a
}

/// Biased (V-statistic) sample distance correlation. Returns 0 when either
/// input has zero distance variance.
pub fn distance_correlation(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    require_rows(&x)?;
    if x.nrows() != y.nrows() {
        return Err(CgcError::invalid("x and y differ in row count"));
    }
    let a = double_centered(&DistanceMatrix::new(x));
    let b = double_centered(&DistanceMatrix::new(y));
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let vxy = dot(&a, &b);
    let vxx = dot(&a, &a);
    let vyy = dot(&b, &b);
    let denom = (vxx * vyy).sqrt();
    if !(denom > 0.0) {
        return Ok(0.0);
    }
    Ok((vxy.max(0.0) / denom).sqrt())
}
