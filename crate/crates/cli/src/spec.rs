//! Hierarchy spec files and ground-truth sidecars.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use shellkit_core::{HierarchySpec, HierarchyTree, NodeId, VarianceDecay, Vector};

use crate::dataset::load_dataset;

pub const TRUTH_FORMAT: &str = "shellkit-truth-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecayField {
    Constant(f64),
    PerLevel(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub k: usize,
    pub depth: usize,
    pub branching: usize,
    #[serde(default = "one")]
    pub root_variance: f64,
    pub variance_decay: DecayField,
    /// `"zero"` or a path to a one-row vector CSV, relative to the spec file.
    #[serde(default = "zero")]
    pub root_mean: String,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn zero() -> String {
    "zero".into()
}

impl Default for SpecFile {
    fn default() -> Self {
        SpecFile {
            k: 4096,
            depth: 3,
            branching: 3,
            root_variance: 1.0,
            variance_decay: DecayField::Constant(0.5),
            root_mean: zero(),
            seed: 2024,
        }
    }
}

impl SpecFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid spec {}", path.display()))
    }

    /// Validated core spec. Relative `root_mean` paths resolve against `base`.
    pub fn to_spec(&self, base: Option<&Path>) -> Result<HierarchySpec> {
        let decay = match &self.variance_decay {
            DecayField::Constant(d) => VarianceDecay::Constant(*d),
            DecayField::PerLevel(v) => VarianceDecay::PerLevel(v.clone()),
        };
        let root_mean = if self.root_mean == "zero" {
            Vector::zeros(self.k)
        } else {
            let mut p = PathBuf::from(&self.root_mean);
            if p.is_relative() {
                if let Some(b) = base {
                    p = b.join(p);
                }
            }
            let ds = load_dataset(&p, false).with_context(|| format!("loading root mean {}", p.display()))?;
            if ds.matrix.n_rows() != 1 {
                bail!("root mean file {} must hold exactly one row, found {}", p.display(), ds.matrix.n_rows());
            }
            Vector::new(ds.matrix.row(0).to_vec())?
        };
        let spec = HierarchySpec {
            k: self.k,
            depth: self.depth,
            branching: self.branching,
            root_mean,
            root_avg_variance: self.root_variance,
            variance_decay: decay,
            seed: self.seed,
        };
        spec.validate().context("invalid hierarchy spec")?;
        Ok(spec)
    }
}

/// Loads `path`, or the default spec when absent.
pub fn load_spec(path: Option<&Path>) -> Result<HierarchySpec> {
    match path {
        Some(p) => SpecFile::load(p)?.to_spec(p.parent()),
        None => SpecFile::default().to_spec(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub avg_variance: f64,
    pub mean: Vec<f64>,
}

/// Ground truth written next to simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub format: String,
    pub k: usize,
    pub tree_seed: u64,
    pub sample_seed: u64,
    pub instance_norm: f64,
    pub nodes: Vec<TruthNode>,
    /// Generating node of every row, in file order.
    pub row_nodes: Vec<NodeId>,
    pub unit_normalized: bool,
    pub scale_range: Option<(f64, f64)>,
}

impl Truth {
    pub fn new(tree: &HierarchyTree, sample_seed: u64, row_nodes: Vec<NodeId>) -> Self {
        Truth {
            format: TRUTH_FORMAT.into(),
            k: tree.dim(),
            tree_seed: tree.spec().seed,
            sample_seed,
            instance_norm: tree.instance_norm(),
            nodes: tree
                .nodes()
                .iter()
                .map(|n| TruthNode { id: n.id, parent: n.parent, depth: n.depth, avg_variance: n.avg_variance, mean: n.mean.to_vec() })
                .collect(),
            row_nodes,
            unit_normalized: false,
            scale_range: None,
        }
    }
}
