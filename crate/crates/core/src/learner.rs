//! Shell-One and Shell-Stacked one-class learners.
//!
//! Training re-normalizes the class features against each ancestor mean
//! `m_i`, fits a shell to the re-normalized rows and estimates a Parzen
//! density of the squared distances to its center. Scoring averages the
//! stage densities with weight `1/K`. With the single ancestor mean `0` the
//! learner is Shell-One.
//!
//! A trained model holds no reference to other models or shared state, so
//! models for different classes can be trained independently and fused
//! afterwards with [`classify`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::density::{estimate_density, DensityModel};
use crate::error::{Error, Result};
use crate::geometry::{self, renormalize, DatasetMatrix, Vector};
use crate::shell::{fit_shell, shell_distances, FitOptions};

/// Maximum deviation of an input row norm from 1.
pub const INPUT_NORM_TOL: f64 = 1e-6;

/// Ordered re-normalization means; the last entry is always the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AncestorMeans {
    means: Vec<Vector>,
}

impl AncestorMeans {
    /// `[0]`, giving Shell-One.
    pub fn shell_one(k: usize) -> Self {
        AncestorMeans { means: alloc::vec![Vector::zeros(k)] }
    }

    /// Uses `means` as given; the final entry must be exactly zero.
    pub fn new(means: Vec<Vector>) -> Result<Self> {
        let last = means.last().ok_or(Error::Empty("ancestor means"))?;
        let k = last.dim();
        if let Some(bad) = means.iter().find(|m| m.dim() != k) {
            return Err(Error::DimensionMismatch { expected: k, found: bad.dim() });
        }
        if !last.is_zero() {
            return Err(Error::invalid("ancestor means", "last mean must be the zero vector"));
        }
        Ok(AncestorMeans { means })
    }

    /// Uses known ancestor means directly, nearest first, and appends `0`.
    pub fn from_ancestors(mut ancestors: Vec<Vector>, k: usize) -> Result<Self> {
        ancestors.push(Vector::zeros(k));
        AncestorMeans::new(ancestors)
    }

    pub fn means(&self) -> &[Vector] {
        &self.means
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.means[0].dim()
    }
}

/// Builds `m_i = (m + sum_{j<=i} aux_j) / (i + 1)` with the auxiliary means
/// ranked by increasing distance to `train_mean`, then appends `0`.
pub fn build_ancestor_means(train_mean: &[f64], aux_means: &[Vector]) -> Result<AncestorMeans> {
    let k = train_mean.len();
    if k == 0 {
        return Err(Error::Empty("train mean"));
    }
    for a in aux_means {
        if a.dim() != k {
            return Err(Error::DimensionMismatch { expected: k, found: a.dim() });
        }
    }
    let mut ranked: Vec<(f64, &Vector)> = aux_means.iter().map(|a| (geometry::sq_dist(a, train_mean), a)).collect();
    // Stable sort keeps caller order for equidistant means.
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut sum: Vec<f64> = train_mean.to_vec();
    let mut means = Vec::with_capacity(ranked.len() + 1);
    for (i, (_, a)) in ranked.iter().enumerate() {
        for (s, x) in sum.iter_mut().zip(a.iter()) {
            *s += x;
        }
        let denom = (i + 2) as f64;
        means.push(Vector::from_vec_unchecked(sum.iter().map(|s| s / denom).collect()));
    }
    means.push(Vector::zeros(k));
    Ok(AncestorMeans { means })
}

/// One re-normalization stage: mean `m`, shell center and distance density.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub m: Vector,
    pub center: Vector,
    pub density: DensityModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedShellModel {
    pub class_label: String,
    pub lambda: f64,
    pub stages: Vec<Stage>,
}

impl StackedShellModel {
    pub fn new(class_label: String, lambda: f64, stages: Vec<Stage>) -> Result<Self> {
        let first = stages.first().ok_or(Error::Empty("model stages"))?;
        let k = first.m.dim();
        for s in &stages {
            for d in [s.m.dim(), s.center.dim()] {
                if d != k {
                    return Err(Error::DimensionMismatch { expected: k, found: d });
                }
            }
        }
        Ok(StackedShellModel { class_label, lambda, stages })
    }

    pub fn dim(&self) -> usize {
        self.stages[0].m.dim()
    }

    /// Number of stages `K`.
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    /// Squared distance of `f` to each stage's shell center after re-normalization.
    pub fn stage_distances(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_input(f, self.dim())?;
        self.stages
            .iter()
            .map(|s| {
                let r = renormalize(f, &s.m)?;
                Ok(geometry::sq_dist(&r, &s.center))
            })
            .collect()
    }

    pub fn score(&self, f: &[f64]) -> Result<f64> {
        check_input(f, self.dim())?;
        let k = self.stages.len() as f64;
        let mut y = 0.0;
        for s in &self.stages {
            let r = renormalize(f, &s.m)?;
            y += s.density.eval(geometry::sq_dist(&r, &s.center)) / k;
        }
        Ok(y)
    }

    pub fn score_rows(&self, data: &DatasetMatrix) -> Result<Vec<f64>> {
        data.rows().enumerate().map(|(i, r)| self.score(r).map_err(|e| e.at_row(i))).collect()
    }
}

fn check_input(f: &[f64], k: usize) -> Result<()> {
    if f.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: f.len() });
    }
    let n = geometry::norm(f);
    if (n - 1.0).abs() > INPUT_NORM_TOL {
        return Err(Error::NormViolation { row: 0, norm: n });
    }
    Ok(())
}

/// Trains a stacked shell model on unit-vector-normalized class features.
pub fn train(
    features: &DatasetMatrix,
    means: &AncestorMeans,
    class_label: impl Into<String>,
    lambda: f64,
    opts: &FitOptions,
) -> Result<StackedShellModel> {
    if features.dim() != means.dim() {
        return Err(Error::DimensionMismatch { expected: means.dim(), found: features.dim() });
    }
    features.check_unit_rows(INPUT_NORM_TOL)?;
    if features.n_rows() == 1 {
        log::warn!("training on a single instance; the fitted shell has zero radius");
    }
    let mut stages = Vec::with_capacity(means.len());
    for m in means.means() {
        let renorm = features.renormalized(m)?;
        let shell = fit_shell(&renorm, lambda, opts)?;
        let x = shell_distances(&renorm, &shell)?;
        let density = estimate_density(&x)?;
        stages.push(Stage { m: m.clone(), center: shell.center, density });
    }
    StackedShellModel::new(class_label.into(), lambda, stages)
}

pub fn score(model: &StackedShellModel, f: &[f64]) -> Result<f64> {
    model.score(f)
}

/// Index of the highest-scoring model; ties go to the earliest model.
pub fn classify_index(models: &[StackedShellModel], f: &[f64]) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::Empty("models"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, m) in models.iter().enumerate() {
        let s = m.score(f)?;
        if s > best.1 {
            best = (i, s);
        }
    }
    Ok(best.0)
}

/// Label of the highest-scoring model.
pub fn classify<'a>(models: &'a [StackedShellModel], f: &[f64]) -> Result<&'a str> {
    classify_index(models, f).map(|i| models[i].class_label.as_str())
}
