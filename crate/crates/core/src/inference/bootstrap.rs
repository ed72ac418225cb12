use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClassIndex, PairedDataset};
use crate::error::{CgcError, Result};
use crate::gini::{estimate_from_sums, DistanceMatrix};
use crate::inference::cgc_difference;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub b: usize,
    /// Redraws allowed for a replicate whose resample has a constant group.
    pub max_redraws: usize,
}

impl BootstrapOptions {
    pub fn new(b: usize) -> Self {
        Self { b, max_redraws: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Observed `D_n`.
    pub d0: f64,
    /// Centered replicate differences `u_b - mean(u)`.
    pub replicates: Vec<f64>,
    /// Mean of the uncentered replicate differences.
    pub u_mean: f64,
    pub p_value: f64,
    pub b: usize,
}

/// One resampled row: original index, multiplicity, class.
struct Draw {
    index: usize,
    count: f64,
    class: usize,
}

/// Within-class resample of every class, collapsed to multiplicities.
fn resample(classes: &ClassIndex, rng: &mut RngStream, counts: &mut [u32]) -> Vec<Draw> {
    counts.iter_mut().for_each(|c| *c = 0);
    for k in 0..classes.num_classes() {
        let members = classes.members(k);
        for _ in 0..members.len() {
            counts[members[rng.random_range(0..members.len())]] += 1;
        }
    }
    let class_of = classes.assignments();
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(index, &c)| Draw {
            index,
            count: c as f64,
            class: class_of[index],
        })
        .collect()
}

/// Pair sums of the resample for one group: overall and per class.
///
/// A row drawn `c` times contributes `c_a * c_b * d(a, b)` to every pair
/// with another row and nothing to its own duplicates.
fn resample_sums(dm: &DistanceMatrix, draws: &[Draw], num_classes: usize) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut class_totals = vec![0.0; num_classes];
    for (a, da) in draws.iter().enumerate() {
        let row = dm.row(da.index);
        let mut all = 0.0;
        let mut same = 0.0;
        for db in &draws[a + 1..] {
            let w = db.count * row[db.index];
            all += w;
            if db.class == da.class {
                same += w;
            }
        }
        total += da.count * all;
        class_totals[da.class] += da.count * same;
    }
    (total, class_totals)
}

pub fn bootstrap_test(d: &PairedDataset, b: usize, rng: &RngStream) -> Result<BootstrapResult> {
    bootstrap_test_with(d, BootstrapOptions::new(b), rng)
}

/// Class-stratified bootstrap of `D_n`.
///
/// Replicate `b` draws from `rng.split(b)`, so the result does not depend on
/// scheduling. `(x_i, y_i)` pairs are resampled jointly.
pub fn bootstrap_test_with(
    d: &PairedDataset,
    opts: BootstrapOptions,
    rng: &RngStream,
) -> Result<BootstrapResult> {
    if opts.b == 0 {
        return Err(CgcError::invalid("bootstrap replicate count B must be >= 1"));
    }
    let d0 = cgc_difference(d)?.d_n;
    let classes = d.classes();
    let k = classes.num_classes();
    let sizes = classes.counts();
    let dx = DistanceMatrix::new(d.x());
    let dy = DistanceMatrix::new(d.y());

    let u: Vec<f64> = (0..opts.b)
        .into_par_iter()
        .map_init(
            || vec![0u32; d.n()],
            |counts, rep| {
                let mut stream = rng.split(rep as u64);
                for _ in 0..=opts.max_redraws {
                    let draws = resample(classes, &mut stream, counts);
                    let (tx, cx) = resample_sums(&dx, &draws, k);
                    let (ty, cy) = resample_sums(&dy, &draws, k);
                    match (
                        estimate_from_sums(tx, &cx, &sizes),
                        estimate_from_sums(ty, &cy, &sizes),
                    ) {
                        (Ok(gx), Ok(gy)) => return Ok(gx.rho - gy.rho),
                        (Err(e), _) | (_, Err(e)) if e.is_degenerate() => continue,
                        (Err(e), _) | (_, Err(e)) => return Err(e),
                    }
                }
                Err(CgcError::RetryExhausted {
                    what: format!("bootstrap replicate {rep} kept drawing a constant group"),
                    attempts: opts.max_redraws,
                })
            },
        )
        .collect::<Result<Vec<f64>>>()?;

    let bf = opts.b as f64;
    let u_mean = u.iter().sum::<f64>() / bf;
    let replicates: Vec<f64> = u.iter().map(|v| v - u_mean).collect();
    let exceed = replicates.iter().filter(|&&v| v >= d0).count();
    Ok(BootstrapResult {
        d0,
        replicates,
        u_mean,
        p_value: exceed as f64 / bf,
        b: opts.b,
    })
}
