//! Synthetic hierarchical-model data.
//!
//! A [`HierarchyTree`] is a tree of isotropic Gaussian distributions. Each
//! child shrinks its parent's average variance by a decay factor and moves
//! its mean by a random direction of length exactly `sqrt(k * (v_parent -
//! v_child))`, so
//!
//! ```text
//! v_child + ||mu_child - mu_parent||^2 / k == v_parent
//! ```
//!
//! holds at every edge up to floating-point rounding. Variances here use the
//! averaged-by-dimension semantics of raw data.
//!
//! When the tree has no more non-root nodes than dimensions, the offset
//! directions are additionally made exactly orthonormal (Gram-Schmidt over
//! the random draws), so mean-to-mean distances equal their expectations
//! instead of carrying `O(1/sqrt(k))` cross terms. Larger trees use the raw
//! random directions.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, DatasetMatrix, NormMode, Vector};
use crate::rng;

pub type NodeId = usize;

/// Relative tolerance for the floating-point form of exact identities.
pub const EXACT_REL_TOL: f64 = 1e-12;

/// How average variance shrinks from one level to the next.
#[derive(Debug, Clone, PartialEq)]
pub enum VarianceDecay {
    Constant(f64),
    /// One factor per level; entry `i` is applied to children at depth `i + 1`.
    PerLevel(Vec<f64>),
}

impl VarianceDecay {
    pub fn at_level(&self, child_depth: usize) -> f64 {
        match self {
            VarianceDecay::Constant(d) => *d,
            VarianceDecay::PerLevel(v) => v[child_depth - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchySpec {
    pub k: usize,
    /// Number of levels below the root.
    pub depth: usize,
    pub branching: usize,
    pub root_mean: Vector,
    pub root_avg_variance: f64,
    pub variance_decay: VarianceDecay,
    pub seed: u64,
}

impl HierarchySpec {
    /// Zero-mean root with unit average variance.
    pub fn new(k: usize, depth: usize, branching: usize, decay: f64, seed: u64) -> Self {
        HierarchySpec {
            k,
            depth,
            branching,
            root_mean: Vector::zeros(k.max(1)),
            root_avg_variance: 1.0,
            variance_decay: VarianceDecay::Constant(decay),
            seed,
        }
    }

    pub fn with_root_mean(mut self, root_mean: Vector) -> Self {
        self.root_mean = root_mean;
        self
    }

    pub fn with_root_variance(mut self, v: f64) -> Self {
        self.root_avg_variance = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "dimension must be at least 1"));
        }
        if self.depth == 0 {
            return Err(Error::invalid("depth", "depth must be at least 1"));
        }
        if self.branching == 0 {
            return Err(Error::invalid("branching", "branching must be at least 1"));
        }
        if self.root_mean.dim() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: self.root_mean.dim() });
        }
        if !(self.root_avg_variance > 0.0 && self.root_avg_variance.is_finite()) {
            return Err(Error::invalid("root_avg_variance", "must be positive and finite"));
        }
        let decays: Vec<f64> = match &self.variance_decay {
            VarianceDecay::Constant(d) => alloc::vec![*d],
            VarianceDecay::PerLevel(v) => {
                if v.len() != self.depth {
                    return Err(Error::invalid(
                        "variance_decay",
                        alloc::format!("expected {} per-level factors, found {}", self.depth, v.len()),
                    ));
                }
                v.clone()
            }
        };
        for d in decays {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::invalid("variance_decay", alloc::format!("{d} is outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeParams {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub mean: Vector,
    pub avg_variance: f64,
    pub depth: usize,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTree {
    nodes: Vec<NodeParams>,
    spec: HierarchySpec,
}

fn non_root_count(spec: &HierarchySpec) -> usize {
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..spec.depth {
        level = level.saturating_mul(spec.branching);
        total = total.saturating_add(level);
    }
    total
}

/// Random unit direction orthogonal to every vector in `basis`, which it joins.
fn orthonormal_direction(rng: &mut rng::StreamRng, k: usize, basis: &mut Vec<Vec<f64>>) -> Vec<f64> {
    loop {
        let mut g = rng::unit_direction(rng, k);
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for b in basis.iter() {
                let d = geometry::dot(&g, b);
                g.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = geometry::norm(&g);
        if n > 1e-6 {
            g.iter_mut().for_each(|x| *x /= n);
            basis.push(g.clone());
            return g;
        }
    }
}

/// Builds the tree breadth-first from stream 0 of `spec.seed`.
pub fn build_hierarchy(spec: HierarchySpec) -> Result<HierarchyTree> {
    spec.validate()?;
    let k = spec.k;
    let mut rng = rng::stream_rng(spec.seed, 0);
    let mut nodes = Vec::new();
    nodes.push(NodeParams {
        id: 0,
        parent: None,
        mean: spec.root_mean.clone(),
        avg_variance: spec.root_avg_variance,
        depth: 0,
        children: Vec::new(),
    });
    let mut basis: Option<Vec<Vec<f64>>> = (non_root_count(&spec) <= k).then(Vec::new);
    let mut frontier: Vec<NodeId> = alloc::vec![0];
    for level in 1..=spec.depth {
        let decay = spec.variance_decay.at_level(level);
        let mut next = Vec::new();
        for &pid in &frontier {
            for _ in 0..spec.branching {
                let parent = &nodes[pid];
                let v_child = decay * parent.avg_variance;
                let radius = libm::sqrt(k as f64 * (parent.avg_variance - v_child));
                let dir = match basis.as_mut() {
                    Some(b) => orthonormal_direction(&mut rng, k, b),
                    None => rng::unit_direction(&mut rng, k),
                };
                let mean: Vec<f64> = parent.mean.iter().zip(&dir).map(|(m, u)| m + radius * u).collect();
                let id = nodes.len();
                nodes.push(NodeParams {
                    id,
                    parent: Some(pid),
                    mean: Vector::new(mean)?,
                    avg_variance: v_child,
                    depth: level,
                    children: Vec::new(),
                });
                nodes[pid].children.push(id);
                next.push(id);
            }
        }
        frontier = next;
    }
    Ok(HierarchyTree { nodes, spec })
}

impl HierarchyTree {
    pub fn spec(&self) -> &HierarchySpec {
        &self.spec
    }

    pub fn nodes(&self) -> &[NodeParams] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.k
    }

    pub fn root(&self) -> &NodeParams {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeParams> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.children.is_empty()).map(|n| n.id).collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| !n.children.is_empty()).map(|n| n.id).collect()
    }

    /// Path from `id` up to the root, inclusive on both ends.
    pub fn ancestors(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let mut out = alloc::vec![id];
        let mut cur = self.node(id)?;
        while let Some(p) = cur.parent {
            out.push(p);
            cur = &self.nodes[p];
        }
        Ok(out)
    }

    /// Ancestor of `id` at tree depth `depth`.
    pub fn ancestor_at_depth(&self, id: NodeId, depth: usize) -> Result<NodeId> {
        let node = self.node(id)?;
        if depth > node.depth {
            return Err(Error::invalid("depth", "ancestor depth exceeds node depth"));
        }
        let path = self.ancestors(id)?;
        Ok(path[node.depth - depth])
    }

    pub fn is_ancestor_of(&self, ancestor: NodeId, id: NodeId) -> Result<bool> {
        self.node(ancestor)?;
        Ok(self.ancestors(id)?.contains(&ancestor))
    }

    /// Leaves in the subtree rooted at `id`.
    pub fn subtree_leaves(&self, id: NodeId) -> Result<Vec<NodeId>> {
        self.node(id)?;
        let mut out = Vec::new();
        let mut stack = alloc::vec![id];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.children.is_empty() {
                out.push(n);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        Ok(out)
    }

    /// Lowest common ancestor of two nodes.
    pub fn lca(&self, i: NodeId, j: NodeId) -> Result<NodeId> {
        let (mut a, mut b) = (self.node(i)?, self.node(j)?);
        while a.depth > b.depth {
            a = &self.nodes[a.parent.expect("non-root has parent")];
        }
        while b.depth > a.depth {
            b = &self.nodes[b.parent.expect("non-root has parent")];
        }
        while a.id != b.id {
            a = &self.nodes[a.parent.expect("distinct nodes share the root")];
            b = &self.nodes[b.parent.expect("distinct nodes share the root")];
        }
        Ok(a.id)
    }

    /// Average variance of the lowest common ancestor.
    pub fn lca_avg_variance(&self, i: NodeId, j: NodeId) -> Result<f64> {
        Ok(self.nodes[self.lca(i, j)?].avg_variance)
    }

    /// Predicted NSD between instances of `i` and `j`: twice the LCA variance.
    pub fn predicted_nsd(&self, i: NodeId, j: NodeId) -> Result<f64> {
        Ok(2.0 * self.lca_avg_variance(i, j)?)
    }

    /// Expected l2 norm of any instance, `sqrt(k * (v_root + ||mu_root||^2 / k))`.
    pub fn instance_norm(&self) -> f64 {
        let root = self.root();
        let k = self.spec.k as f64;
        libm::sqrt(k * root.avg_variance + geometry::dot(&root.mean, &root.mean))
    }

    /// Mean of node `id` expressed in the unit-vector-normalized frame.
    pub fn normalized_mean(&self, id: NodeId) -> Result<Vector> {
        let s = self.instance_norm();
        let node = self.node(id)?;
        Ok(Vector::from_vec_unchecked(node.mean.iter().map(|x| x / s).collect()))
    }

    /// Checks the strict variance chain and the per-edge mean-variance identity.
    pub fn check_invariants(&self) -> Result<()> {
        for node in &self.nodes[1..] {
            let parent = &self.nodes[node.parent.expect("non-root")];
            if !(node.avg_variance < parent.avg_variance && node.avg_variance > 0.0) {
                return Err(Error::invalid("avg_variance", alloc::format!("node {} breaks the variance chain", node.id)));
            }
            let d = geometry::nsd(&node.mean, &parent.mean, NormMode::AveragedByK)?;
            let want = parent.avg_variance - node.avg_variance;
            if (d - want).abs() > EXACT_REL_TOL * parent.avg_variance {
                return Err(Error::invalid("mean", alloc::format!("node {} breaks the mean-variance identity", node.id)));
            }
        }
        Ok(())
    }
}

/// Draws `n` instances of node `id`'s Gaussian using stream `id + 1` of `seed`.
pub fn sample_instances(tree: &HierarchyTree, id: NodeId, n: usize, seed: u64) -> Result<DatasetMatrix> {
    let node = tree.node(id)?;
    if n == 0 {
        return Err(Error::Empty("sample count"));
    }
    let mut rng = rng::stream_rng(seed, id as u64 + 1);
    let sd = libm::sqrt(node.avg_variance);
    let k = tree.dim();
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..n {
        for &m in node.mean.iter() {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            data.push(m + sd * z);
        }
    }
    Ok(DatasetMatrix::from_parts_unchecked(n, k, data))
}

/// Samples `per_node` instances from each node in `ids`, returning the stacked
/// rows and the node id of every row.
pub fn sample_nodes(tree: &HierarchyTree, ids: &[NodeId], per_node: usize, seed: u64) -> Result<(DatasetMatrix, Vec<NodeId>)> {
    let mut parts = Vec::with_capacity(ids.len());
    let mut labels = Vec::with_capacity(ids.len() * per_node);
    for &id in ids {
        parts.push(sample_instances(tree, id, per_node, seed)?);
        labels.extend(core::iter::repeat_n(id, per_node));
    }
    let refs: Vec<&DatasetMatrix> = parts.iter().collect();
    Ok((DatasetMatrix::concat(&refs)?, labels))
}

/// Multiplies each row by an independent log-uniform scale in `[lo, hi]`.
pub fn perturb_scales(data: &DatasetMatrix, lo: f64, hi: f64, seed: u64) -> Result<DatasetMatrix> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::invalid("scale range", "need 0 < lo <= hi < inf"));
    }
    let mut rng = rng::stream_rng(seed, u64::MAX);
    let (ln_lo, ln_hi) = (libm::log(lo), libm::log(hi));
    let k = data.dim();
    let mut out = data.as_slice().to_vec();
    for row in out.chunks_exact_mut(k) {
        let s = libm::exp(ln_lo + (ln_hi - ln_lo) * rng.random::<f64>());
        row.iter_mut().for_each(|x| *x *= s);
    }
    DatasetMatrix::new(data.n_rows(), k, out)
}

/// One internal node's mean-variance comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVarianceRow {
    pub node: NodeId,
    /// `v_parent`.
    pub actual: f64,
    /// Mean over children of `v_child + d^2(mu_child - mu_parent)`.
    pub predicted: f64,
    pub error_ratio: f64,
}

impl MeanVarianceRow {
    fn new(node: NodeId, actual: f64, predicted: f64) -> Self {
        MeanVarianceRow { node, actual, predicted, error_ratio: (predicted - actual).abs() / actual }
    }
}

/// Mean-variance check using the tree's own parameters.
pub fn mean_variance_from_parameters(tree: &HierarchyTree) -> Vec<MeanVarianceRow> {
    tree.internal_nodes()
        .into_iter()
        .map(|pid| {
            let parent = &tree.nodes[pid];
            let sum: f64 = parent
                .children
                .iter()
                .map(|&c| {
                    let child = &tree.nodes[c];
                    child.avg_variance + geometry::sq_dist(&child.mean, &parent.mean) / tree.dim() as f64
                })
                .sum();
            MeanVarianceRow::new(pid, parent.avg_variance, sum / parent.children.len() as f64)
        })
        .collect()
}

/// Mean-variance check using sample estimates.
///
/// Every leaf receives `samples_per_leaf` instances. A child's mean and
/// average variance are estimated from the pooled instances of its subtree
/// (unbiased per-dimension variance), and compared against the true parent
/// parameters.
pub fn verify_mean_variance(tree: &HierarchyTree, samples_per_leaf: usize, seed: u64) -> Result<Vec<MeanVarianceRow>> {
    if samples_per_leaf < 2 {
        return Err(Error::invalid("samples_per_leaf", "variance needs at least 2 samples"));
    }
    let k = tree.dim();
    let leaves = tree.leaves();
    let mut leaf_samples: Vec<Option<DatasetMatrix>> = alloc::vec![None; tree.len()];
    for &l in &leaves {
        leaf_samples[l] = Some(sample_instances(tree, l, samples_per_leaf, seed)?);
    }
    let mut rows = Vec::new();
    for pid in tree.internal_nodes() {
        let parent = &tree.nodes[pid];
        let mut total = 0.0;
        for &c in &parent.children {
            let parts: Vec<&DatasetMatrix> = tree
                .subtree_leaves(c)?
                .into_iter()
                .map(|l| leaf_samples[l].as_ref().expect("leaf sampled"))
                .collect();
            let pooled = DatasetMatrix::concat(&parts)?;
            let mean = pooled.mean();
            let ss: f64 = pooled.rows().map(|r| geometry::sq_dist(r, &mean)).sum();
            let v_hat = ss / ((pooled.n_rows() - 1) as f64 * k as f64);
            total += v_hat + geometry::sq_dist(&mean, &parent.mean) / k as f64;
        }
        rows.push(MeanVarianceRow::new(pid, parent.avg_variance, total / parent.children.len() as f64));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, depth: usize, branching: usize, decay: f64) -> HierarchySpec {
        HierarchySpec::new(k, depth, branching, decay, 11)
    }

    #[test]
    fn child_offset_forced_by_constraint() {
        let tree = build_hierarchy(spec(4, 1, 1, 0.36)).unwrap();
        let child = &tree.nodes()[1];
        assert!((child.avg_variance - 0.36).abs() < 1e-15);
        let r = libm::sqrt(geometry::sq_dist(&child.mean, &tree.root().mean));
        assert!((r - 1.6).abs() < 1e-12, "offset norm {r}");
    }

    #[test]
    fn small_trees_get_orthonormal_offsets() {
        // 12 non-root nodes fit in 16 dimensions: offsets are exactly orthogonal.
        let tree = build_hierarchy(spec(16, 2, 3, 0.5)).unwrap();
        for a in tree.leaves() {
            for b in tree.leaves() {
                let got = geometry::nsd(&tree.node(a).unwrap().mean, &tree.node(b).unwrap().mean, NormMode::AveragedByK).unwrap();
                let want = tree.predicted_nsd(a, b).unwrap() - 2.0 * tree.node(a).unwrap().avg_variance;
                assert!((got - want).abs() < 1e-12, "{a} {b}: {got} vs {want}");
            }
        }
        // 39 non-root nodes exceed 16 dimensions: offsets fall back to random directions.
        let big = build_hierarchy(spec(16, 3, 3, 0.5)).unwrap();
        big.check_invariants().unwrap();
    }

    #[test]
    fn single_edge_tree() {
        let tree = build_hierarchy(spec(8, 1, 1, 0.5)).unwrap();
        assert_eq!(tree.len(), 2);
        let d = geometry::nsd(&tree.nodes()[1].mean, &tree.root().mean, NormMode::AveragedByK).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        tree.check_invariants().unwrap();
    }

    #[test]
    fn deterministic_given_seed() {
        let a = build_hierarchy(spec(32, 3, 2, 0.5)).unwrap();
        let b = build_hierarchy(spec(32, 3, 2, 0.5)).unwrap();
        assert_eq!(a, b);
        let mut other = spec(32, 3, 2, 0.5);
        other.seed = 12;
        assert_ne!(a, build_hierarchy(other).unwrap());
        assert_eq!(sample_instances(&a, 5, 3, 9).unwrap(), sample_instances(&b, 5, 3, 9).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        for d in [0.0, 1.0, 1.5, -0.2] {
            assert!(build_hierarchy(spec(4, 2, 2, d)).is_err());
        }
        assert!(build_hierarchy(spec(4, 0, 2, 0.5)).is_err());
        assert!(build_hierarchy(spec(4, 2, 0, 0.5)).is_err());
        let mut s = spec(4, 2, 2, 0.5);
        s.variance_decay = VarianceDecay::PerLevel(alloc::vec![0.5]);
        assert!(build_hierarchy(s.clone()).is_err());
        s.variance_decay = VarianceDecay::PerLevel(alloc::vec![0.5, 0.9]);
        let t = build_hierarchy(s).unwrap();
        let leaf = t.leaves()[0];
        assert!((t.node(leaf).unwrap().avg_variance - 0.45).abs() < 1e-15);
    }

    #[test]
    fn variance_chain_strictly_decreases() {
        let tree = build_hierarchy(spec(16, 4, 2, 0.7)).unwrap();
        tree.check_invariants().unwrap();
        for leaf in tree.leaves() {
            let path = tree.ancestors(leaf).unwrap();
            for w in path.windows(2) {
                assert!(tree.nodes()[w[0]].avg_variance < tree.nodes()[w[1]].avg_variance);
            }
        }
    }

    #[test]
    fn lca_examples() {
        let tree = build_hierarchy(spec(8, 2, 2, 0.5)).unwrap();
        // ids: 0 root; 1,2 depth 1; 3,4 under 1; 5,6 under 2
        assert_eq!(tree.lca_avg_variance(1, 2).unwrap(), 1.0);
        assert_eq!(tree.lca_avg_variance(3, 3).unwrap(), 0.25);
        assert_eq!(tree.lca_avg_variance(1, 4).unwrap(), 0.5);
        assert_eq!(tree.lca(3, 4).unwrap(), 1);
        assert_eq!(tree.lca(3, 6).unwrap(), 0);
        assert_eq!(tree.predicted_nsd(3, 4).unwrap(), 1.0);
        assert_eq!(tree.predicted_nsd(5, 5).unwrap(), 0.5);
        assert_eq!(tree.lca(3, 99), Err(Error::UnknownNode(99)));
        assert!(sample_instances(&tree, 99, 2, 0).is_err());
    }

    #[test]
    fn sample_average_nsd_to_mean() {
        let tree = build_hierarchy(spec(4096, 1, 1, 0.5)).unwrap();
        let x = sample_instances(&tree, 1, 1000, 3).unwrap();
        let mu = &tree.nodes()[1].mean;
        let avg: f64 = x.rows().map(|r| geometry::nsd(r, mu, NormMode::AveragedByK).unwrap()).sum::<f64>() / 1000.0;
        assert!((avg - 0.5).abs() < 0.01, "{avg}");
    }

    #[test]
    fn vanishing_variance_collapses_to_mean() {
        let s = spec(16, 1, 1, 0.5).with_root_variance(2e-12);
        let tree = build_hierarchy(s).unwrap();
        let x = sample_instances(&tree, 1, 20, 1).unwrap();
        let mu = &tree.nodes()[1].mean;
        for r in x.rows() {
            assert!(r.iter().zip(mu.iter()).all(|(a, b)| (a - b).abs() < 1e-4));
        }
    }

    #[test]
    fn compound_gaussian_effective_variance() {
        // Child means spread with variance s2 around mu, instances with s1:
        // pooled instances behave like one distribution with v = s1 + s2.
        let (k, s1, s2) = (2048usize, 0.3, 0.2);
        let mut rng = rng::stream_rng(42, 0);
        let mu: Vec<f64> = rng::gaussian_vec(&mut rng, k);
        let mut instances = Vec::new();
        for _ in 0..60 {
            let m: Vec<f64> = mu.iter().map(|x| x + libm::sqrt(s2) * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            let a: Vec<f64> = m.iter().map(|x| x + libm::sqrt(s1) * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            instances.push(a);
        }
        let mut to_mean = 0.0;
        let mut pair = 0.0;
        let mut pairs = 0;
        for (i, a) in instances.iter().enumerate() {
            to_mean += geometry::nsd(a, &mu, NormMode::AveragedByK).unwrap();
            for b in &instances[i + 1..] {
                pair += geometry::nsd(a, b, NormMode::AveragedByK).unwrap();
                pairs += 1;
            }
        }
        to_mean /= instances.len() as f64;
        pair /= pairs as f64;
        assert!((to_mean - (s1 + s2)).abs() / (s1 + s2) < 0.02, "{to_mean}");
        assert!((pair - 2.0 * (s1 + s2)).abs() / (2.0 * (s1 + s2)) < 0.02, "{pair}");
    }

    #[test]
    fn parameter_level_mean_variance_is_exact() {
        let tree = build_hierarchy(spec(64, 3, 3, 0.5)).unwrap();
        for row in mean_variance_from_parameters(&tree) {
            assert!(row.error_ratio <= EXACT_REL_TOL, "{row:?}");
        }
    }

    #[test]
    fn sample_level_needs_two_samples() {
        let tree = build_hierarchy(spec(8, 1, 2, 0.5)).unwrap();
        assert!(verify_mean_variance(&tree, 1, 0).is_err());
        assert_eq!(verify_mean_variance(&tree, 2, 0).unwrap().len(), 1);
    }

    #[test]
    fn subtree_and_ancestor_queries() {
        let tree = build_hierarchy(spec(8, 2, 3, 0.5)).unwrap();
        assert_eq!(tree.leaves().len(), 9);
        assert_eq!(tree.subtree_leaves(1).unwrap(), alloc::vec![4, 5, 6]);
        assert_eq!(tree.ancestors(7).unwrap(), alloc::vec![7, 2, 0]);
        assert_eq!(tree.ancestor_at_depth(7, 1).unwrap(), 2);
        assert!(tree.is_ancestor_of(2, 8).unwrap());
        assert!(!tree.is_ancestor_of(1, 8).unwrap());
    }
}
