//! Hierarchical-model geometry for high-dimensional data.
//!
//! The crate is `no_std` and only needs `alloc`. It provides:
//!
//! * [`geometry`]: normalized squared differences, unit-vector normalization
//!   and re-normalization against a reference mean.
//! * [`hierarchy`]: a seeded simulator for trees of isotropic Gaussian
//!   sub-distributions whose means and average variances obey the
//!   mean-variance constraint exactly, plus analytic predictions.
//! * [`shell`]: distinctive-shell fitting by alternating minimization.
//! * [`density`]: a one-dimensional Gaussian Parzen window over shell distances.
//! * [`learner`]: the Shell-One / Shell-Stacked one-class learners and
//!   max-score multiclass fusion.
//! * [`eval`]: AUROC, precision-recall curves and distance histograms.
//! * [`verify`]: measurement routines for every distance pattern the model
//!   predicts, bundled into a single pass/fail report.
//!
//! File formats, the command-line tool and thread pools live in the
//! companion `shellkit` crate.

#![no_std]
#![deny(missing_debug_implementations)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod density;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod hierarchy;
pub mod learner;
pub mod rng;
pub mod shell;
pub mod verify;

pub use density::{estimate_density, DensityModel};
pub use error::{Error, Result};
pub use eval::{auroc, pairwise_histogram, precision_recall, probe_histogram, HistogramReport, ScoredLabels};
pub use geometry::{nsd, renormalize, scale_perturb, unit_normalize, DatasetMatrix, NormMode, Vector};
pub use hierarchy::{build_hierarchy, HierarchySpec, HierarchyTree, NodeId, NodeParams, VarianceDecay};
pub use learner::{build_ancestor_means, classify, score, train, AncestorMeans, StackedShellModel, Stage};
pub use shell::{fit_shell, shell_distances, FitOptions, Shell};
