use rayon::prelude::*;

use crate::data::{ClassIndex, PairedDataset};
use crate::error::{CgcError, Result, Side};
use crate::gini::{class_sums, estimate_from_sums, ClassSums};

/// Delete-one values of `D_n` and the jackknife variance built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Jackknife {
    pub leave_one_out: Vec<f64>,
    pub variance: f64,
}

/// `rho_hat` of the sample with row `i` removed, from the full-sample sums.
fn rho_without(sums: &ClassSums, classes: &ClassIndex, counts: &[usize], i: usize) -> Result<f64> {
    let k = classes.assignments()[i];
    let mut class_totals = sums.class_totals.clone();
    class_totals[k] -= sums.within_row_sums[i];
    let mut counts = counts.to_vec();
    counts[k] -= 1;
    estimate_from_sums(sums.total - sums.row_sums[i], &class_totals, &counts).map(|g| g.rho)
}

/// Jackknife of `D_n` in O(n^2): one pass of pairwise sums, then O(K) per
/// deleted row.
pub fn jackknife(d: &PairedDataset) -> Result<Jackknife> {
    let classes = d.classes();
    let min = classes.min_class_size();
    if min < 3 {
        return Err(CgcError::invalid(format!(
            "jackknife needs every class size >= 3, smallest class has {min}"
        )));
    }
    let counts = classes.counts();
    let sx = class_sums(d.x(), classes);
    let sy = class_sums(d.y(), classes);

    let leave_one_out = (0..d.n())
        .into_par_iter()
        .map(|i| {
            let rx = rho_without(&sx, classes, &counts, i).map_err(|e| e.on_side(Side::X))?;
            let ry = rho_without(&sy, classes, &counts, i).map_err(|e| e.on_side(Side::Y))?;
            Ok(rx - ry)
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = leave_one_out.len() as f64;
    let mean = leave_one_out.iter().sum::<f64>() / n;
    let ss: f64 = leave_one_out.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(Jackknife {
        leave_one_out,
        variance: (n - 1.0) / n * ss,
    })
}

pub fn jackknife_variance(d: &PairedDataset) -> Result<f64> {
    jackknife(d).map(|j| j.variance)
}
