//! Measurements of the distance patterns predicted by the hierarchical model,
//! and a bundled pass/fail report over them.
//!
//! Each `measure_*` function runs one simulation experiment and returns raw
//! measurements; [`verify_report`] turns them into named checks with bounds.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::eval::{self, auroc, HistogramConfig, HistogramReport, ScoredLabels};
use crate::geometry::{self, DatasetMatrix, NormMode, Vector};
use crate::hierarchy::{self, build_hierarchy, HierarchySpec, HierarchyTree, NodeId};
use crate::learner::{self, AncestorMeans, StackedShellModel, Stage};
use crate::rng;
use crate::shell::{fit_shell, shell_distances, FitOptions};

/// Raw instances of `node`, unit-vector-normalized.
pub fn unit_samples(tree: &HierarchyTree, node: NodeId, n: usize, seed: u64) -> Result<DatasetMatrix> {
    hierarchy::sample_instances(tree, node, n, seed)?.unit_normalized()
}

/// Cross-leaf pairs whose NSD lies within `rel_tol` of `2 v_lca`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    pub pairs: u64,
    pub within: u64,
    pub worst_rel_err: f64,
}

impl Concentration {
    pub fn fraction_within(&self) -> f64 {
        self.within as f64 / self.pairs as f64
    }
}

pub fn measure_concentration(tree: &HierarchyTree, per_leaf: usize, seed: u64, rel_tol: f64) -> Result<Concentration> {
    let leaves = tree.leaves();
    if leaves.len() < 2 {
        return Err(Error::invalid("tree", "concentration needs at least two leaves"));
    }
    let (data, labels) = hierarchy::sample_nodes(tree, &leaves, per_leaf, seed)?;
    let mut out = Concentration { pairs: 0, within: 0, worst_rel_err: 0.0 };
    for i in 0..data.n_rows() {
        for j in i + 1..data.n_rows() {
            if labels[i] == labels[j] {
                continue;
            }
            let want = tree.predicted_nsd(labels[i], labels[j])?;
            let got = geometry::nsd(data.row(i), data.row(j), NormMode::AveragedByK)?;
            let rel = (got - want).abs() / want;
            out.pairs += 1;
            if rel < rel_tol {
                out.within += 1;
            }
            out.worst_rel_err = out.worst_rel_err.max(rel);
        }
    }
    Ok(out)
}

/// Triples `(a, p, q)` whose Euclidean ordering agrees with LCA recency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranking {
    pub triples: u64,
    pub consistent: u64,
}

impl Ranking {
    pub fn fraction(&self) -> f64 {
        self.consistent as f64 / self.triples as f64
    }
}

/// One anchor instance per leaf is compared with `per_leaf` other instances
/// from every leaf. Returns `None` for trees without intermediate levels.
pub fn measure_ranking(tree: &HierarchyTree, per_leaf: usize, seed: u64) -> Result<Option<Ranking>> {
    if tree.spec().depth < 2 {
        return Ok(None);
    }
    let leaves = tree.leaves();
    let (anchors, anchor_labels) = hierarchy::sample_nodes(tree, &leaves, 1, seed ^ 0xA5A5)?;
    let (cands, cand_labels) = hierarchy::sample_nodes(tree, &leaves, per_leaf, seed)?;
    let mut out = Ranking { triples: 0, consistent: 0 };
    for (a, &la) in anchors.rows().zip(&anchor_labels) {
        let info: Vec<(f64, usize)> = cands
            .rows()
            .zip(&cand_labels)
            .map(|(p, &lp)| Ok((geometry::sq_dist(a, p), tree.node(tree.lca(la, lp)?)?.depth)))
            .collect::<Result<_>>()?;
        for i in 0..info.len() {
            for j in i + 1..info.len() {
                let (di, li) = info[i];
                let (dj, lj) = info[j];
                if li == lj {
                    continue;
                }
                out.triples += 1;
                // A deeper common ancestor is a more recent one.
                if (li > lj) == (di < dj) {
                    out.consistent += 1;
                }
            }
        }
    }
    Ok(Some(out))
}

/// Worst relative deviation from `d^2(mu_c_hat - c) = d^2(mu_p - c) + d^2(mu_c_hat - mu_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RightTriangle {
    pub checks: usize,
    pub worst_rel_err: f64,
}

/// For every non-root node, the sample mean of its subtree (`per_leaf`
/// instances per leaf) is tested against a random reference point and against
/// the means of the parent's other children.
pub fn measure_right_triangle(tree: &HierarchyTree, per_leaf: usize, seed: u64) -> Result<RightTriangle> {
    let k = tree.dim();
    let leaves = tree.leaves();
    let mut leaf_sets: Vec<Option<DatasetMatrix>> = alloc::vec![None; tree.len()];
    for &l in &leaves {
        leaf_sets[l] = Some(hierarchy::sample_instances(tree, l, per_leaf, seed)?);
    }
    let root = tree.root();
    let mut prng = rng::stream_rng(seed, u64::MAX - 1);
    let sd = libm::sqrt(root.avg_variance);
    let reference: Vec<f64> = rng::gaussian_vec(&mut prng, k).iter().zip(root.mean.iter()).map(|(z, m)| m + sd * z).collect();
    let mut out = RightTriangle { checks: 0, worst_rel_err: 0.0 };
    for node in &tree.nodes()[1..] {
        let parent = tree.node(node.parent.expect("non-root"))?;
        let parts: Vec<&DatasetMatrix> =
            tree.subtree_leaves(node.id)?.into_iter().map(|l| leaf_sets[l].as_ref().expect("sampled")).collect();
        let mu_hat = DatasetMatrix::concat(&parts)?.mean();
        let mut refs: Vec<&[f64]> = alloc::vec![reference.as_slice()];
        for &s in &parent.children {
            if s != node.id {
                refs.push(&tree.node(s)?.mean);
            }
        }
        for c in refs {
            let lhs = geometry::nsd(&mu_hat, c, NormMode::AveragedByK)?;
            let rhs = geometry::nsd(&parent.mean, c, NormMode::AveragedByK)?
                + geometry::nsd(&mu_hat, &parent.mean, NormMode::AveragedByK)?;
            out.checks += 1;
            out.worst_rel_err = out.worst_rel_err.max((lhs - rhs).abs() / lhs);
        }
    }
    Ok(out)
}

/// Histograms of unit-normalized, scale-perturbed leaf samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DistancePatterns {
    pub pairwise: HistogramReport,
    pub normalized_probe: HistogramReport,
    pub raw_probe: HistogramReport,
}

/// Per-row scales are drawn log-uniformly from `scale_range`; the probe is a
/// random unit vector.
pub fn measure_distance_patterns(tree: &HierarchyTree, per_leaf: usize, scale_range: (f64, f64), seed: u64) -> Result<DistancePatterns> {
    let (raw, _) = hierarchy::sample_nodes(tree, &tree.leaves(), per_leaf, seed)?;
    let perturbed = hierarchy::perturb_scales(&raw, scale_range.0, scale_range.1, seed)?;
    let probe = rng::unit_direction(&mut rng::stream_rng(seed, u64::MAX - 2), tree.dim());
    let unit = perturbed.unit_normalized()?;
    Ok(DistancePatterns {
        pairwise: eval::pairwise_histogram(&unit, &HistogramConfig::default())?,
        normalized_probe: eval::probe_histogram(&perturbed, &probe, true, &HistogramConfig::default())?,
        raw_probe: eval::probe_histogram(&perturbed, &probe, false, &HistogramConfig::auto(200))?,
    })
}

/// A class re-normalized with `m`, its fitted stage and the class's own
/// training distances.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedStage {
    pub stage: Stage,
    pub class: Vec<f64>,
}

impl FittedStage {
    /// Fits a single stage re-normalized with `m` to `class` (unit rows).
    pub fn fit(class: &DatasetMatrix, m: &Vector, lambda: f64, opts: &FitOptions) -> Result<Self> {
        let renorm = class.renormalized(m)?;
        let shell = fit_shell(&renorm, lambda, opts)?;
        let x = shell_distances(&renorm, &shell)?;
        let density = crate::density::estimate_density(&x)?;
        Ok(FittedStage { stage: Stage { m: m.clone(), center: shell.center, density }, class: x })
    }

    /// Shell distances of `rows` (unit rows) under this stage.
    pub fn distances(&self, rows: &DatasetMatrix) -> Result<Vec<f64>> {
        let renorm = rows.renormalized(&self.stage.m)?;
        rows_to_center(&renorm, &self.stage.center)
    }

    /// Mean outsider distance minus mean class distance.
    pub fn gap(&self, outsiders: &DatasetMatrix) -> Result<f64> {
        Ok(mean(&self.distances(outsiders)?) - mean(&self.class))
    }
}

fn rows_to_center(data: &DatasetMatrix, center: &[f64]) -> Result<Vec<f64>> {
    if data.dim() != center.len() {
        return Err(Error::DimensionMismatch { expected: center.len(), found: data.dim() });
    }
    Ok(data.rows().map(|r| geometry::sq_dist(r, center)).collect())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Leaves whose lowest common ancestor with `alpha` sits at depth `m`.
pub fn outsider_leaves(tree: &HierarchyTree, alpha: NodeId, m: usize) -> Result<Vec<NodeId>> {
    let mut out = Vec::new();
    for l in tree.leaves() {
        if tree.node(tree.lca(alpha, l)?)?.depth == m && l != alpha {
            out.push(l);
        }
    }
    Ok(out)
}

/// Predicted gap after re-normalizing with the depth-`l` ancestor mean, for
/// outsiders branching off at depth `m` from a class at depth `n`.
pub fn predicted_gap(v_l: f64, v_m: f64, v_n: f64, l: usize, m: usize) -> f64 {
    if l <= m {
        2.0 * (v_m - v_n) / v_l
    } else {
        2.0 * (v_l - v_n) / v_l
    }
}

/// Measured against predicted gap for one `(l, m)` combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapMeasurement {
    pub l: usize,
    pub m: usize,
    pub measured: f64,
    pub predicted: f64,
}

impl GapMeasurement {
    pub fn rel_err(&self) -> f64 {
        (self.measured - self.predicted).abs() / self.predicted.abs()
    }
}

/// Sizes and seeds shared by the learner experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPlan {
    pub train: usize,
    pub test: usize,
    pub outsiders_per_leaf: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for ClassPlan {
    fn default() -> Self {
        ClassPlan { train: 1000, test: 200, outsiders_per_leaf: 60, lambda: crate::shell::DEFAULT_LAMBDA, seed: 1 }
    }
}

fn outsider_samples(tree: &HierarchyTree, leaves: &[NodeId], per_leaf: usize, seed: u64) -> Result<DatasetMatrix> {
    let (raw, _) = hierarchy::sample_nodes(tree, leaves, per_leaf, seed)?;
    raw.unit_normalized()
}

/// Gaps for every ancestor depth `l < n` and outsider depth `m < n`, with
/// `alpha` a leaf at depth `n`.
pub fn measure_gaps(tree: &HierarchyTree, alpha: NodeId, plan: &ClassPlan) -> Result<Vec<GapMeasurement>> {
    let n = tree.node(alpha)?.depth;
    let class = unit_samples(tree, alpha, plan.train, plan.seed)?;
    let opts = FitOptions::default();
    let v = |d: usize| -> Result<f64> { Ok(tree.node(tree.ancestor_at_depth(alpha, d)?)?.avg_variance) };
    let mut outsiders = Vec::with_capacity(n);
    for m in 0..n {
        let leaves = outsider_leaves(tree, alpha, m)?;
        outsiders.push(outsider_samples(tree, &leaves, plan.outsiders_per_leaf, plan.seed.wrapping_add(1))?);
    }
    let mut out = Vec::new();
    for l in 0..n {
        let mu_l = tree.normalized_mean(tree.ancestor_at_depth(alpha, l)?)?;
        let fitted = FittedStage::fit(&class, &mu_l, plan.lambda, &opts)?;
        for (m, outs) in outsiders.iter().enumerate() {
            out.push(GapMeasurement { l, m, measured: fitted.gap(outs)?, predicted: predicted_gap(v(l)?, v(m)?, v(n)?, l, m) });
        }
    }
    Ok(out)
}

/// Gap without re-normalization against the gap after re-normalizing with
/// the root mean, per outsider depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootRenormGap {
    pub m: usize,
    pub plain: f64,
    pub root: f64,
}

pub fn measure_root_renormalization(tree: &HierarchyTree, alpha: NodeId, plan: &ClassPlan) -> Result<Vec<RootRenormGap>> {
    let n = tree.node(alpha)?.depth;
    let class = unit_samples(tree, alpha, plan.train, plan.seed)?;
    let opts = FitOptions::default();
    let plain = FittedStage::fit(&class, &Vector::zeros(tree.dim()), plan.lambda, &opts)?;
    let root = FittedStage::fit(&class, &tree.normalized_mean(0)?, plan.lambda, &opts)?;
    let mut out = Vec::new();
    for m in 0..n {
        let leaves = outsider_leaves(tree, alpha, m)?;
        let outs = outsider_samples(tree, &leaves, plan.outsiders_per_leaf, plan.seed.wrapping_add(1))?;
        out.push(RootRenormGap { m, plain: plain.gap(&outs)?, root: root.gap(&outs)? });
    }
    Ok(out)
}

fn single_stage_auroc(stage: Stage, lambda: f64, positives: &DatasetMatrix, negatives: &DatasetMatrix) -> Result<f64> {
    let model = StackedShellModel::new(String::from("alpha"), lambda, alloc::vec![stage])?;
    model_auroc(&model, positives, negatives)
}

/// AUROC of `model` scoring `positives` above `negatives`.
pub fn model_auroc(model: &StackedShellModel, positives: &DatasetMatrix, negatives: &DatasetMatrix) -> Result<f64> {
    let pos = model.score_rows(positives)?;
    let neg = model.score_rows(negatives)?;
    auroc(&ScoredLabels::from_groups(&pos, &neg)?)
}

fn split(data: DatasetMatrix, train: usize) -> Result<(DatasetMatrix, DatasetMatrix)> {
    let n = data.n_rows();
    let a: Vec<usize> = (0..train).collect();
    let b: Vec<usize> = (train..n).collect();
    Ok((data.select(&a)?, data.select(&b)?))
}

/// Held-out AUROC of the class `alpha` against all other leaves, with the
/// single stage re-normalized by the root mean and by the class's own mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwnMeanEffect {
    pub root_auroc: f64,
    pub own_auroc: f64,
}

pub fn measure_own_mean_effect(tree: &HierarchyTree, alpha: NodeId, plan: &ClassPlan) -> Result<OwnMeanEffect> {
    let (train, test) = split(unit_samples(tree, alpha, plan.train + plan.test, plan.seed)?, plan.train)?;
    let others: Vec<NodeId> = tree.leaves().into_iter().filter(|&l| l != alpha).collect();
    let outs = outsider_samples(tree, &others, plan.outsiders_per_leaf, plan.seed.wrapping_add(1))?;
    let opts = FitOptions::default();
    let mut result = [0.0; 2];
    for (slot, node) in [0, alpha].into_iter().enumerate() {
        let fitted = FittedStage::fit(&train, &tree.normalized_mean(node)?, plan.lambda, &opts)?;
        result[slot] = single_stage_auroc(fitted.stage, plan.lambda, &test, &outs)?;
    }
    Ok(OwnMeanEffect { root_auroc: result[0], own_auroc: result[1] })
}

/// Separation of a leaf class from its sibling leaves with Shell-One.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separability {
    pub auroc: f64,
    /// Fraction of outsider distances above the class's 99th percentile.
    pub outsiders_beyond_p99: f64,
}

/// Returns `None` when `alpha` has no sibling.
pub fn measure_separability(tree: &HierarchyTree, alpha: NodeId, plan: &ClassPlan) -> Result<Option<Separability>> {
    let parent = match tree.node(alpha)?.parent {
        Some(p) => tree.node(p)?,
        None => return Ok(None),
    };
    let siblings: Vec<NodeId> = parent.children.iter().copied().filter(|&c| c != alpha).collect();
    if siblings.is_empty() {
        return Ok(None);
    }
    let sib_leaves: Vec<NodeId> =
        siblings.iter().map(|&s| tree.subtree_leaves(s)).collect::<Result<Vec<_>>>()?.concat();
    let (train, test) = split(unit_samples(tree, alpha, plan.train + plan.test, plan.seed)?, plan.train)?;
    let outs = outsider_samples(tree, &sib_leaves, plan.outsiders_per_leaf, plan.seed.wrapping_add(1))?;
    let model = learner::train(&train, &AncestorMeans::shell_one(tree.dim()), "alpha", plan.lambda, &FitOptions::default())?;
    let auroc = model_auroc(&model, &test, &outs)?;
    let class_x: Vec<f64> = test.rows().map(|r| Ok(model.stage_distances(r)?[0])).collect::<Result<_>>()?;
    let mut sorted = class_x.clone();
    sorted.sort_by(f64::total_cmp);
    let p99 = eval::quantile_sorted(&sorted, 0.99);
    let beyond = outs.rows().map(|r| Ok(model.stage_distances(r)?[0])).collect::<Result<Vec<f64>>>()?.iter().filter(|&&x| x > p99).count();
    Ok(Some(Separability { auroc, outsiders_beyond_p99: beyond as f64 / outs.n_rows() as f64 }))
}

/// Shell-One against Shell-Stacked AUROC for one leaf class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackComparison {
    pub leaf: NodeId,
    pub shell_one: f64,
    pub shell_stacked: f64,
}

/// Every leaf is trained on `plan.train` instances and tested on `plan.test`
/// held-out instances against held-out instances of all other leaves.
/// Shell-Stacked receives the leaf's true ancestor means (normalized frame,
/// parent first, root excluded) as auxiliary means.
pub fn measure_stacking(tree: &HierarchyTree, plan: &ClassPlan) -> Result<Vec<StackComparison>> {
    let leaves = tree.leaves();
    let k = tree.dim();
    let mut trains = Vec::new();
    let mut tests = Vec::new();
    for &l in &leaves {
        let (tr, te) = split(unit_samples(tree, l, plan.train + plan.test, plan.seed)?, plan.train)?;
        trains.push(tr);
        tests.push(te);
    }
    let opts = FitOptions::default();
    let mut out = Vec::new();
    for (i, &l) in leaves.iter().enumerate() {
        let others: Vec<&DatasetMatrix> = tests.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t).collect();
        let negatives = DatasetMatrix::concat(&others)?;
        let so = learner::train(&trains[i], &AncestorMeans::shell_one(k), "so", plan.lambda, &opts)?;
        let path = tree.ancestors(l)?;
        let aux: Vec<Vector> = path[1..path.len() - 1].iter().map(|&a| tree.normalized_mean(a)).collect::<Result<_>>()?;
        let means = learner::build_ancestor_means(&trains[i].mean(), &aux)?;
        let ss = learner::train(&trains[i], &means, "ss", plan.lambda, &opts)?;
        out.push(StackComparison {
            leaf: l,
            shell_one: model_auroc(&so, &tests[i], &negatives)?,
            shell_stacked: model_auroc(&ss, &tests[i], &negatives)?,
        });
    }
    Ok(out)
}

/// Multiclass accuracy of max-score fusion over Shell-One models trained
/// independently on each of `classes`.
pub fn measure_fusion(tree: &HierarchyTree, classes: &[NodeId], plan: &ClassPlan) -> Result<f64> {
    let mut models = Vec::new();
    let mut tests = Vec::new();
    for &c in classes {
        let (tr, te) = split(unit_samples(tree, c, plan.train + plan.test, plan.seed)?, plan.train)?;
        models.push(learner::train(&tr, &AncestorMeans::shell_one(tree.dim()), alloc::format!("{c}"), plan.lambda, &FitOptions::default())?);
        tests.push(te);
    }
    let (mut correct, mut total) = (0usize, 0usize);
    for (i, te) in tests.iter().enumerate() {
        for r in te.rows() {
            if learner::classify_index(&models, r)? == i {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok(correct as f64 / total as f64)
}

/// Random root mean with `||mu||^2 / k == shift * v_root`.
pub fn shifted_root_mean(k: usize, v_root: f64, shift: f64, seed: u64) -> Result<Vector> {
    let dir = rng::unit_direction(&mut rng::stream_rng(seed, u64::MAX - 3), k);
    let r = libm::sqrt(k as f64 * v_root * shift);
    Vector::new(dir.into_iter().map(|u| u * r).collect())
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub comparison: Comparison,
    pub status: CheckStatus,
}

impl CheckResult {
    fn bounded(name: &str, measured: f64, comparison: Comparison, bound: f64) -> Self {
        let ok = match comparison {
            Comparison::AtMost => measured <= bound,
            Comparison::AtLeast => measured >= bound,
        };
        CheckResult {
            name: String::from(name),
            measured,
            bound,
            comparison,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    fn skipped(name: &str, reason: &str) -> Self {
        CheckResult {
            name: String::from(name),
            measured: f64::NAN,
            bound: f64::NAN,
            comparison: Comparison::AtLeast,
            status: CheckStatus::Skipped(String::from(reason)),
        }
    }

    fn errored(name: &str, err: &Error) -> Self {
        CheckResult { status: CheckStatus::Fail, ..Self::skipped(name, "") }.with_reason(err)
    }

    fn with_reason(mut self, err: &Error) -> Self {
        self.name = alloc::format!("{} ({err})", self.name);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

/// Sample sizes for [`verify_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationPlan {
    pub instances_per_leaf: usize,
    pub mean_variance_samples_per_leaf: usize,
    pub class: ClassPlan,
    /// `||mu_root||^2 / (k v_root)` of the shifted tree used for the root
    /// re-normalization check.
    pub root_shift: f64,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for VerificationPlan {
    fn default() -> Self {
        VerificationPlan {
            instances_per_leaf: 50,
            mean_variance_samples_per_leaf: 500,
            class: ClassPlan::default(),
            root_shift: 3.0,
            seed: 7,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.iter().any(CheckResult::failed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Default spec: `k = 4096`, depth 3, branching 3, decay 0.5, zero root mean,
/// unit root variance.
pub fn default_spec() -> HierarchySpec {
    HierarchySpec::new(4096, 3, 3, 0.5, 2024)
}

/// Bounds applied by [`verify_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub concentration_rel: f64,
    pub concentration_fraction: f64,
    pub mean_variance_sample: f64,
    pub ranking_fraction: f64,
    pub right_triangle: f64,
    pub sqrt2_fraction_beyond: f64,
    pub probe_mode: f64,
    pub raw_spread_ratio: f64,
    pub separability_auroc: f64,
    pub separability_fraction: f64,
    pub gap_rel: f64,
    pub own_mean_auroc_drop: f64,
    /// Slack for the identity case of root re-normalization (zero root mean).
    pub root_renorm_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            concentration_rel: 0.05,
            concentration_fraction: 0.99,
            mean_variance_sample: 0.05,
            ranking_fraction: 0.99,
            right_triangle: 0.05,
            sqrt2_fraction_beyond: 0.001,
            probe_mode: 0.05,
            raw_spread_ratio: 1.5,
            separability_auroc: 0.99,
            separability_fraction: 0.99,
            gap_rel: 0.10,
            own_mean_auroc_drop: 0.2,
            root_renorm_slack: 1e-9,
        }
    }
}

/// Runs every check on the tree described by `spec`.
///
/// Failures inside an experiment are reported as failed checks, never as an
/// error; only an invalid `spec` returns `Err`.
pub fn verify_report(spec: &HierarchySpec, plan: &VerificationPlan) -> Result<VerificationReport> {
    use Comparison::*;
    let tree = build_hierarchy(spec.clone())?;
    let tol = &plan.tolerances;
    let mut checks = Vec::new();
    let mut push = |name: &str, r: Result<CheckResult>| {
        checks.push(r.unwrap_or_else(|e| CheckResult::errored(name, &e)));
    };

    push("variance chain and mean-variance identity", {
        Ok(match tree.check_invariants() {
            Ok(()) => CheckResult::bounded("variance chain and mean-variance identity", 0.0, AtMost, 0.0),
            Err(e) => CheckResult::bounded("variance chain and mean-variance identity", 1.0, AtMost, 0.0).with_reason(&e),
        })
    });

    push("mean-variance error ratio (parameters)", {
        let worst = hierarchy::mean_variance_from_parameters(&tree).iter().map(|r| r.error_ratio).fold(0.0, f64::max);
        Ok(CheckResult::bounded("mean-variance error ratio (parameters)", worst, AtMost, hierarchy::EXACT_REL_TOL))
    });

    push(
        "mean-variance error ratio (samples)",
        hierarchy::verify_mean_variance(&tree, plan.mean_variance_samples_per_leaf, plan.seed).map(|rows| {
            let worst = rows.iter().map(|r| r.error_ratio).fold(0.0, f64::max);
            CheckResult::bounded("mean-variance error ratio (samples)", worst, AtMost, tol.mean_variance_sample)
        }),
    );

    if tree.leaves().len() < 2 {
        push("pairwise concentration at 2 v_lca", Ok(CheckResult::skipped("pairwise concentration at 2 v_lca", "fewer than two leaves")));
    } else {
        push(
            "pairwise concentration at 2 v_lca",
            measure_concentration(&tree, plan.instances_per_leaf, plan.seed, tol.concentration_rel).map(|c| {
                CheckResult::bounded("pairwise concentration at 2 v_lca", c.fraction_within(), AtLeast, tol.concentration_fraction)
            }),
        );
    }

    push(
        "distance ranking follows ancestry",
        measure_ranking(&tree, plan.instances_per_leaf.min(10), plan.seed).map(|r| match r {
            Some(r) => CheckResult::bounded("distance ranking follows ancestry", r.fraction(), AtLeast, tol.ranking_fraction),
            None => CheckResult::skipped("distance ranking follows ancestry", "depth-1 tree has no multi-level structure"),
        }),
    );

    push(
        "right triangle of means",
        measure_right_triangle(&tree, plan.instances_per_leaf, plan.seed)
            .map(|r| CheckResult::bounded("right triangle of means", r.worst_rel_err, AtMost, tol.right_triangle)),
    );

    let root_zero = tree.root().mean.is_zero();
    if root_zero {
        match measure_distance_patterns(&tree, plan.instances_per_leaf, (0.1, 10.0), plan.seed) {
            Ok(p) => {
                push(
                    "pairwise distances beyond sqrt(2)+0.05",
                    Ok(CheckResult::bounded("pairwise distances beyond sqrt(2)+0.05", p.pairwise.fraction_beyond_sqrt2_band(), AtMost, tol.sqrt2_fraction_beyond)),
                );
                push(
                    "pairwise mass below 1.3",
                    Ok(CheckResult::bounded("pairwise mass below 1.3", p.pairwise.count_below(1.3) as f64, AtLeast, 1.0)),
                );
                push(
                    "normalized-probe mode offset from sqrt(2)",
                    Ok(CheckResult::bounded(
                        "normalized-probe mode offset from sqrt(2)",
                        (p.normalized_probe.mode - core::f64::consts::SQRT_2).abs(),
                        AtMost,
                        tol.probe_mode,
                    )),
                );
                let ratio = p.raw_probe.spread.map(|s| s.ratio()).unwrap_or(f64::NAN);
                push("raw-probe spread p90/p10", Ok(CheckResult::bounded("raw-probe spread p90/p10", ratio, AtLeast, tol.raw_spread_ratio)));
            }
            Err(e) => push("distance histograms", Err(e)),
        }
    } else {
        for name in ["pairwise distances beyond sqrt(2)+0.05", "pairwise mass below 1.3", "normalized-probe mode offset from sqrt(2)", "raw-probe spread p90/p10"] {
            push(name, Ok(CheckResult::skipped(name, "root mean is not zero")));
        }
    }

    let alpha = tree.leaves()[0];
    let class = ClassPlan { seed: plan.seed, ..plan.class.clone() };
    match measure_separability(&tree, alpha, &class) {
        Ok(Some(s)) => {
            push("sibling separability auroc", Ok(CheckResult::bounded("sibling separability auroc", s.auroc, AtLeast, tol.separability_auroc)));
            push(
                "outsiders beyond class p99 distance",
                Ok(CheckResult::bounded("outsiders beyond class p99 distance", s.outsiders_beyond_p99, AtLeast, tol.separability_fraction)),
            );
        }
        Ok(None) => {
            for name in ["sibling separability auroc", "outsiders beyond class p99 distance"] {
                push(name, Ok(CheckResult::skipped(name, "class has no sibling")));
            }
        }
        Err(e) => push("sibling separability", Err(e)),
    }

    push(
        "re-normalization gap relative error",
        measure_gaps(&tree, alpha, &class).map(|g| {
            let worst = g.iter().map(GapMeasurement::rel_err).fold(0.0, f64::max);
            CheckResult::bounded("re-normalization gap relative error", worst, AtMost, tol.gap_rel)
        }),
    );

    push("root re-normalization keeps the gap", {
        let shifted_spec = shifted_root_mean(spec.k, spec.root_avg_variance, plan.root_shift, plan.seed)
            .map(|mu| spec.clone().with_root_mean(mu));
        let mut worst = f64::INFINITY;
        let mut res = Ok(());
        for s in [Ok(spec.clone()), shifted_spec] {
            match s.and_then(build_hierarchy).and_then(|t| {
                let a = t.leaves()[0];
                measure_root_renormalization(&t, a, &class)
            }) {
                Ok(rows) => {
                    for r in rows {
                        worst = worst.min(r.root / r.plain);
                    }
                }
                Err(e) => res = Err(e),
            }
        }
        res.map(|_| CheckResult::bounded("root re-normalization keeps the gap", worst, AtLeast, 1.0 - tol.root_renorm_slack))
    });

    push(
        "own-mean re-normalization auroc drop",
        measure_own_mean_effect(&tree, alpha, &class).map(|e| {
            CheckResult::bounded("own-mean re-normalization auroc drop", e.root_auroc - e.own_auroc, AtLeast, tol.own_mean_auroc_drop)
        }),
    );

    Ok(VerificationReport { checks })
}
