use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{CgcError, Result};
use crate::gini::{estimate_from_sums, DistanceMatrix};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub rho_hat: f64,
    pub replicates: Vec<f64>,
    /// `(1 + #{replicate >= rho_hat}) / (R + 1)`.
    pub p_value: f64,
}

/// Permutation test of `rho_g(X, Z) = 0`.
///
/// Labels are shuffled `r` times; the distance matrix is built once since
/// only class membership changes between replicates. The observed value goes
/// through the same path as the replicates so that a permutation reproducing
/// the observed partition ties with it exactly.
pub fn permutation_independence_test(
    d: &LabeledDataset,
    r: usize,
    rng: &RngStream,
) -> Result<PermutationResult> {
    if r == 0 {
        return Err(CgcError::invalid("permutation count R must be >= 1"));
    }
    let classes = d.classes();
    let k = classes.num_classes();
    let counts = classes.counts();
    let dm = DistanceMatrix::new(d.features());
    let total = dm.total();
    let rho_of = |assign: &[usize]| {
        estimate_from_sums(total, &dm.class_totals(assign, k), &counts).map(|g| g.rho)
    };

    let rho_hat = rho_of(classes.assignments())?;
    let replicates = (0..r)
        .into_par_iter()
        .map(|rep| {
            let mut stream = rng.split(rep as u64);
            let mut assign = classes.assignments().to_vec();
            assign.shuffle(&mut stream);
            rho_of(&assign)
        })
        .collect::<Result<Vec<f64>>>()?;

    let exceed = replicates.iter().filter(|&&v| v >= rho_hat).count();
    Ok(PermutationResult {
        rho_hat,
        p_value: (1 + exceed) as f64 / (r + 1) as f64,
        replicates,
    })
}
