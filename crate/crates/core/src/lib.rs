//! Categorical Gini correlation: estimators, tests comparing how strongly two
//! predictor groups depend on a common categorical response, simulation
//! designs and a Monte Carlo harness.
//!
//! ```
//! use cgc::data::{ClassIndex, PairedDataset};
//! use cgc::inference::cgc_difference;
//! use ndarray::array;
//!
//! let classes = ClassIndex::from_labels(&["a", "a", "b", "b"]).unwrap();
//! let d = PairedDataset::new(
//!     array![[0.0], [0.0], [1.0], [1.0]],
//!     array![[0.0], [1.0], [0.0], [1.0]],
//!     classes,
//! )
//! .unwrap();
//! assert!((cgc_difference(&d).unwrap().d_n - 1.5).abs() < 1e-15);
//! ```

mod config;
pub mod data;
pub mod error;
pub mod gini;
pub mod harness;
pub mod inference;
pub mod json;
pub mod rng;
pub mod simgen;

pub use data::{ClassIndex, LabeledDataset, PairedDataset};
pub use error::{CgcError, Result};
pub use inference::{ComparisonResult, Method};
pub use rng::RngStream;
