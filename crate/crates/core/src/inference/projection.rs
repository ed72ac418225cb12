//! Plug-in estimate of the first-order projection variance of `D_n`.
//!
//! For classes `k != l` and a class-`k` observation `(x, y)` the projected
//! kernel is
//!
//! ```text
//! h_kl(x, y) = [E|x - X_l| - E|x - X_k| - D_kl(F) + D_k(F)] / (2 D(F))
//!            - [E|y - Y_l| - E|y - Y_k| - D_kl(G) + D_k(G)] / (2 D(G))
//! ```
//!
//! with every expectation and Gini mean difference replaced by its sample
//! counterpart. Within-class means leave the observation itself out. The
//! estimate of the asymptotic variance of `sqrt(n) D_n` is
//! `16 * sum_{k != l} (p_k^2 p_l + p_l^2 p_k) var_i(h_kl)` over ordered pairs.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::data::{ClassIndex, PairedDataset};
use crate::error::{CgcError, Result, Side};
use crate::gini::{euclidean, pairs};
use crate::inference::{cgc_difference, check_alpha, normal_decision, ComparisonResult, Method};

/// Per-row mean distance to each class, the cross-class GMDs, and the
/// overall GMD of one predictor group.
struct ClassMeans {
    /// `row_means[i][l]`: mean distance from row `i` to class `l`, excluding `i`.
    row_means: Vec<Vec<f64>>,
    /// `cross[k][l]`: mean distance between classes; `cross[k][k]` is the
    /// within-class GMD.
    cross: Vec<Vec<f64>>,
    delta: f64,
}

fn class_means(m: ArrayView2<f64>, classes: &ClassIndex) -> Result<ClassMeans> {
    let n = m.nrows();
    let k = classes.num_classes();
    let class_of = classes.assignments();
    let counts = classes.counts();

    let row_sums: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    acc[class_of[j]] += euclidean(m.row(i), m.row(j));
                }
            }
            acc
        })
        .collect();

    let mut block = vec![vec![0.0; k]; k];
    for (i, sums) in row_sums.iter().enumerate() {
        for (l, s) in sums.iter().enumerate() {
            block[class_of[i]][l] += s;
        }
    }
    let total: f64 = block.iter().flatten().sum::<f64>() / 2.0;
    let delta = total / pairs(n);
    if !(delta > 0.0) {
        return Err(CgcError::DegeneratePredictor { side: None });
    }

    let cross = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    if a == b {
                        block[a][a] / (counts[a] * (counts[a] - 1)) as f64
                    } else {
                        block[a][b] / (counts[a] * counts[b]) as f64
                    }
                })
                .collect()
        })
        .collect();
    let row_means = row_sums
        .into_iter()
        .enumerate()
        .map(|(i, sums)| {
            sums.into_iter()
                .enumerate()
                .map(|(l, s)| {
                    let others = counts[l] - usize::from(class_of[i] == l);
                    s / others as f64
                })
                .collect()
        })
        .collect();
    Ok(ClassMeans {
        row_means,
        cross,
        delta,
    })
}

impl ClassMeans {
    fn projected(&self, i: usize, k: usize, l: usize) -> f64 {
        let r = &self.row_means[i];
        (r[l] - r[k] - self.cross[k][l] + self.cross[k][k]) / (2.0 * self.delta)
    }
}

/// Estimated asymptotic variance of `sqrt(n) * D_n`; divide by `n` for
/// `var(D_n)`.
pub fn projection_variance(d: &PairedDataset) -> Result<f64> {
    let classes = d.classes();
    let mx = class_means(d.x(), classes).map_err(|e| e.on_side(Side::X))?;
    let my = class_means(d.y(), classes).map_err(|e| e.on_side(Side::Y))?;
    let props = classes.proportions();
    let k = classes.num_classes();

    let mut sigma0 = 0.0;
    for a in 0..k {
        let members = classes.members(a);
        let nk = members.len() as f64;
        for b in 0..k {
            if a == b {
                continue;
            }
            let h: Vec<f64> = members
                .iter()
                .map(|&i| mx.projected(i, a, b) - my.projected(i, a, b))
                .collect();
            let mean = h.iter().sum::<f64>() / nk;
            let var = h.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nk - 1.0);
            let weight = props[a] * props[a] * props[b] + props[b] * props[b] * props[a];
            sigma0 += weight * var;
        }
    }
    Ok(16.0 * sigma0)
}

/// Normal-theory test studentized by the projection variance.
pub fn projection_test(d: &PairedDataset, alpha: f64) -> Result<ComparisonResult> {
    check_alpha(alpha)?;
    let diff = cgc_difference(d)?;
    let variance = projection_variance(d)? / d.n() as f64;
    if variance <= super::DEGENERATE_VARIANCE_EPS {
        return Err(CgcError::DegenerateVariance { variance });
    }
    Ok(normal_decision(&diff, variance, Method::Projection, alpha))
}
