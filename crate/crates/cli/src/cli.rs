//! Subcommands of the `shellkit` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use shellkit_core::eval::{probe_histogram, HistogramConfig};
use shellkit_core::hierarchy::{perturb_scales, sample_instances};
use shellkit_core::verify::{verify_report, Tolerances, VerificationPlan};
use shellkit_core::{
    auroc, build_ancestor_means, build_hierarchy, fit_shell, precision_recall, rng, train, AncestorMeans, DatasetMatrix,
    FitOptions, NodeId, ScoredLabels, Vector,
};

use crate::dataset::{load_dataset, save_dataset, Dataset};
use crate::model::{load_model, save_model, write_json, ShellFile};
use crate::parallel;
use crate::report::{self, EvalJson, HistJson, VerifyJson};
use crate::spec::{load_spec, Truth};

pub const EXIT_DATA: u8 = 1;
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "shellkit", version, about = "Hierarchical-model geometry, shell learners and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from a hierarchy spec.
    Simulate(SimulateArgs),
    /// Fit a distinctive shell to a unit-normalized dataset.
    FitShell(FitShellArgs),
    /// Train a one-class model (Shell-One without --aux-means).
    Train(TrainArgs),
    /// Score every row of a dataset with a model.
    Score(ScoreArgs),
    /// Assign each row to the highest-scoring model.
    Classify(ClassifyArgs),
    /// AUROC and precision-recall of a scores file.
    Eval(EvalArgs),
    /// Pairwise or probe distance histogram.
    Hist(HistArgs),
    /// Run every model check on a spec; exits 3 on failure.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NodeSet {
    Leaves,
    All,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Hierarchy spec JSON; the built-in default when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub per_node: usize,
    #[arg(long, value_enum, default_value_t = NodeSet::Leaves)]
    pub nodes: NodeSet,
    /// Sampling seed; the tree itself uses the spec seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dataset (.csv, or .shlk/.bin for binary).
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar; defaults to `<out>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Unit-normalize rows and set the normalized flag.
    #[arg(long)]
    pub normalize: bool,
    /// Multiply each row by a log-uniform scale in LO,HI before normalizing.
    #[arg(long, value_parser = parse_pair)]
    pub scale_range: Option<(f64, f64)>,
    /// Write every node's mean in the unit-normalized frame, labeled by node id.
    #[arg(long)]
    pub means_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = shellkit_core::shell::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = FitOptions::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = FitOptions::default().rel_tol)]
    pub rel_tol: f64,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        FitOptions { max_iters: self.max_iters, rel_tol: self.rel_tol, ..FitOptions::default() }
    }
}

#[derive(Debug, Args)]
pub struct FitShellArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Use only rows with this label.
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Train on rows with this label only.
    #[arg(long)]
    pub label: Option<String>,
    /// Stored class label; defaults to --label, then the data file stem.
    #[arg(long)]
    pub class_label: Option<String>,
    /// Files of candidate ancestor means, one mean per row.
    #[arg(long, num_args = 1..)]
    pub aux_means: Vec<PathBuf>,
    /// Keep only aux-mean rows with these labels.
    #[arg(long, value_delimiter = ',', requires = "aux_means")]
    pub aux_select: Vec<String>,
    /// Number of stages K, counting the final zero mean.
    #[arg(long)]
    pub stages: Option<usize>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Scores CSV (`row,score[,label]`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    /// Predictions CSV (`row,predicted[,label]`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// CSV with `score` and `label` columns.
    #[arg(long)]
    pub scores: PathBuf,
    /// Label value of the positive class.
    #[arg(long, default_value = "1")]
    pub positive: String,
    /// Summary JSON; stdout when omitted.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub pr_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HistKind {
    Pairwise,
    Probe,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = HistKind::Pairwise)]
    pub kind: HistKind,
    /// One-row vector file used as the probe.
    #[arg(long, conflicts_with = "probe_seed")]
    pub probe: Option<PathBuf>,
    /// Seed of a random unit probe.
    #[arg(long)]
    pub probe_seed: Option<u64>,
    /// Probe distances on raw rows, `sqrt(||row - probe||^2 / k)`.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, default_value_t = 200)]
    pub bins: usize,
    #[arg(long, value_parser = parse_pair, default_value = "0,2.1", conflicts_with = "auto_range")]
    pub range: (f64, f64),
    /// Span `[0, max distance]` instead of a fixed range.
    #[arg(long)]
    pub auto_range: bool,
    /// Histogram CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub per_leaf: Option<usize>,
    #[arg(long)]
    pub mean_variance_samples: Option<usize>,
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub outsiders_per_leaf: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub root_shift: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a tolerance, e.g. `--tol gap_rel=0.2`.
    #[arg(long = "tol", value_parser = parse_tolerance)]
    pub tolerances: Vec<(String, f64)>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

const TOLERANCE_NAMES: &[&str] = &[
    "concentration_rel",
    "concentration_fraction",
    "mean_variance_sample",
    "ranking_fraction",
    "right_triangle",
    "sqrt2_fraction_beyond",
    "probe_mode",
    "raw_spread_ratio",
    "separability_auroc",
    "separability_fraction",
    "gap_rel",
    "own_mean_auroc_drop",
    "root_renorm_slack",
];

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let name = name.trim();
    if !TOLERANCE_NAMES.contains(&name) {
        return Err(format!("unknown tolerance {name:?}; known: {}", TOLERANCE_NAMES.join(", ")));
    }
    let v: f64 = v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?;
    if !v.is_finite() {
        return Err("tolerance must be finite".into());
    }
    Ok((name.to_string(), v))
}

fn set_tolerance(t: &mut Tolerances, name: &str, v: f64) {
    let slot = match name {
        "concentration_rel" => &mut t.concentration_rel,
        "concentration_fraction" => &mut t.concentration_fraction,
        "mean_variance_sample" => &mut t.mean_variance_sample,
        "ranking_fraction" => &mut t.ranking_fraction,
        "right_triangle" => &mut t.right_triangle,
        "sqrt2_fraction_beyond" => &mut t.sqrt2_fraction_beyond,
        "probe_mode" => &mut t.probe_mode,
        "raw_spread_ratio" => &mut t.raw_spread_ratio,
        "separability_auroc" => &mut t.separability_auroc,
        "separability_fraction" => &mut t.separability_fraction,
        "gap_rel" => &mut t.gap_rel,
        "own_mean_auroc_drop" => &mut t.own_mean_auroc_drop,
        "root_renorm_slack" => &mut t.root_renorm_slack,
        _ => unreachable!("validated by parse_tolerance"),
    };
    *slot = v;
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    parallel::init_thread_pool()?;
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::FitShell(a) => fit_shell_cmd(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Score(a) => score_cmd(&a),
        Command::Classify(a) => classify_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Hist(a) => hist_cmd(&a),
        Command::Verify(a) => return verify_cmd(&a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref())?;
    let tree = build_hierarchy(spec)?;
    let ids: Vec<NodeId> = match a.nodes {
        NodeSet::Leaves => tree.leaves(),
        NodeSet::All => (0..tree.len()).collect(),
    };
    let parts = ids
        .par_iter()
        .map(|&id| sample_instances(&tree, id, a.per_node, a.seed))
        .collect::<shellkit_core::Result<Vec<_>>>()?;
    let refs: Vec<&DatasetMatrix> = parts.iter().collect();
    let mut matrix = DatasetMatrix::concat(&refs)?;
    if let Some((lo, hi)) = a.scale_range {
        matrix = perturb_scales(&matrix, lo, hi, a.seed)?;
    }
    let row_nodes: Vec<NodeId> = ids.iter().flat_map(|&id| std::iter::repeat_n(id, a.per_node)).collect();
    let labels = row_nodes.iter().map(|id| id.to_string()).collect();
    let mut ds = Dataset::new(matrix).with_labels(labels);
    if a.normalize {
        ds = ds.unit_normalized()?;
    }
    save_dataset(&a.out, &ds)?;

    let mut truth = Truth::new(&tree, a.seed, row_nodes);
    truth.unit_normalized = a.normalize;
    truth.scale_range = a.scale_range;
    let truth_path = a.truth.clone().unwrap_or_else(|| a.out.with_extension("truth.json"));
    write_json(&truth_path, &truth)?;

    if let Some(p) = &a.means_out {
        let means = (0..tree.len()).map(|id| tree.normalized_mean(id).map(Vector::into_inner)).collect::<shellkit_core::Result<Vec<_>>>()?;
        let m = DatasetMatrix::from_rows(&means)?;
        save_dataset(p, &Dataset::new(m).with_labels((0..tree.len()).map(|id| id.to_string()).collect()))?;
    }
    log::info!("wrote {} rows of dimension {} to {}", ds.matrix.n_rows(), ds.matrix.dim(), a.out.display());
    Ok(())
}

fn load_class(data: &Path, label: Option<&str>) -> Result<Dataset> {
    let ds = load_dataset(data, true)?;
    Ok(match label {
        Some(l) => ds.filter_label(l).with_context(|| format!("selecting rows of {}", data.display()))?,
        None => ds,
    })
}

fn fit_shell_cmd(a: &FitShellArgs) -> Result<()> {
    let ds = load_class(&a.data, a.label.as_deref())?;
    let shell = fit_shell(&ds.matrix, a.fit.lambda, &a.fit.options())?;
    write_json(&a.out, &ShellFile::from(&shell))
}

fn load_aux_means(paths: &[PathBuf], select: &[String], k: usize) -> Result<Vec<Vector>> {
    let mut out = Vec::new();
    let mut found = vec![false; select.len()];
    for p in paths {
        let ds = load_dataset(p, false)?;
        if ds.matrix.dim() != k {
            bail!("{}: aux means have dimension {}, training data {}", p.display(), ds.matrix.dim(), k);
        }
        for i in 0..ds.matrix.n_rows() {
            if !select.is_empty() {
                let labels = ds.labels.as_ref().with_context(|| format!("{}: --aux-select needs a label column", p.display()))?;
                match select.iter().position(|s| *s == labels[i]) {
                    Some(j) => found[j] = true,
                    None => continue,
                }
            }
            out.push(Vector::new(ds.matrix.row(i).to_vec())?);
        }
    }
    if let Some(j) = found.iter().position(|f| !f) {
        bail!("no aux mean labeled {:?}", select[j]);
    }
    Ok(out)
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let ds = load_class(&a.data, a.label.as_deref())?;
    let k = ds.matrix.dim();
    let aux = load_aux_means(&a.aux_means, &a.aux_select, k)?;
    let mut means = if aux.is_empty() { AncestorMeans::shell_one(k) } else { build_ancestor_means(&ds.matrix.mean(), &aux)? };
    if let Some(stages) = a.stages {
        if stages == 0 || stages > means.len() {
            bail!("--stages must lie in 1..={} with {} aux means", means.len(), aux.len());
        }
        let mut kept = means.means()[..stages - 1].to_vec();
        kept.push(Vector::zeros(k));
        means = AncestorMeans::new(kept)?;
    }
    let class_label = a
        .class_label
        .clone()
        .or_else(|| a.label.clone())
        .unwrap_or_else(|| a.data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let model = train(&ds.matrix, &means, class_label, a.fit.lambda, &a.fit.options())?;
    save_model(&a.out, &model)
}

fn score_cmd(a: &ScoreArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_dataset(&a.data, true)?;
    let scores = parallel::score_rows(&model, &ds.matrix)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    match &ds.labels {
        Some(labels) => {
            w.write_record(["row", "score", "label"])?;
            for (i, (s, l)) in scores.iter().zip(labels).enumerate() {
                w.write_record([i.to_string(), s.to_string(), l.clone()])?;
            }
        }
        None => {
            w.write_record(["row", "score"])?;
            for (i, s) in scores.iter().enumerate() {
                w.write_record([i.to_string(), s.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn classify_cmd(a: &ClassifyArgs) -> Result<()> {
    let models = a.models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>>>()?;
    let ds = load_dataset(&a.data, true)?;
    let picks = parallel::classify_rows(&models, &ds.matrix)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    match &ds.labels {
        Some(labels) => {
            w.write_record(["row", "predicted", "label"])?;
            let mut correct = 0;
            for (i, (&p, l)) in picks.iter().zip(labels).enumerate() {
                let pred = &models[p].class_label;
                correct += usize::from(pred == l);
                w.write_record([i.to_string(), pred.clone(), l.clone()])?;
            }
            eprintln!("accuracy {:.6} over {} rows", correct as f64 / picks.len() as f64, picks.len());
        }
        None => {
            w.write_record(["row", "predicted"])?;
            for (i, &p) in picks.iter().enumerate() {
                w.write_record([i.to_string(), models[p].class_label.clone()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_scores(path: &Path, positive: &str) -> Result<ScoredLabels> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).with_context(|| format!("{}: missing {name:?} column", path.display()))
    };
    let (sc, lc) = (col("score")?, col("label")?);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {i}", path.display()))?;
        let s: f64 = rec[sc].trim().parse().with_context(|| format!("{}: row {i}: bad score {:?}", path.display(), &rec[sc]))?;
        scores.push(s);
        labels.push(rec[lc].trim() == positive);
    }
    Ok(ScoredLabels::new(scores, labels)?)
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let sl = read_scores(&a.scores, &a.positive)?;
    let value = auroc(&sl).with_context(|| format!("positive label {:?}", a.positive))?;
    let pr = precision_recall(&sl)?;
    if let Some(p) = &a.pr_out {
        report::write_pr_csv(output(Some(p))?, &pr)?;
    }
    let positives = sl.labels().iter().filter(|&&l| l).count();
    let summary = EvalJson {
        format: report::EVAL_FORMAT,
        auroc: value,
        positives,
        negatives: sl.len() - positives,
        pr_points: pr.len(),
    };
    write_summary(a.json.as_deref(), &summary)
}

fn write_summary<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
            Ok(())
        }
    }
}

fn load_probe(a: &HistArgs, k: usize) -> Result<Vec<f64>> {
    if let Some(p) = &a.probe {
        let ds = load_dataset(p, false)?;
        if ds.matrix.n_rows() != 1 || ds.matrix.dim() != k {
            bail!("{}: probe must be one row of dimension {k}", p.display());
        }
        return Ok(ds.matrix.row(0).to_vec());
    }
    let seed = a.probe_seed.context("--kind probe needs --probe or --probe-seed")?;
    let mut r = rng::stream_rng(seed, 0);
    Ok(rng::unit_direction(&mut r, k))
}

fn hist_cmd(a: &HistArgs) -> Result<()> {
    let ds = load_dataset(&a.data, false)?;
    let cfg = HistogramConfig { bins: a.bins, range: if a.auto_range { None } else { Some(a.range) } };
    let (kind, h) = match a.kind {
        HistKind::Pairwise => {
            if a.raw {
                bail!("pairwise histograms are over unit-normalized rows; --raw applies to probes");
            }
            let unit = if ds.normalized { ds.matrix } else { ds.matrix.unit_normalized()? };
            ("pairwise", parallel::pairwise_histogram(&unit, &cfg)?)
        }
        HistKind::Probe => {
            let probe = load_probe(a, ds.matrix.dim())?;
            let kind = if a.raw { "raw-probe" } else { "normalized-probe" };
            (kind, probe_histogram(&ds.matrix, &probe, !a.raw, &cfg)?)
        }
    };
    report::write_hist_csv(output(a.out.as_deref())?, &h)?;
    if let Some(p) = &a.json {
        write_json(p, &HistJson::new(kind, &h))?;
    }
    Ok(())
}

fn verify_cmd(a: &VerifyArgs) -> Result<ExitCode> {
    let spec = load_spec(a.spec.as_deref())?;
    let mut plan = VerificationPlan::default();
    if let Some(v) = a.per_leaf {
        plan.instances_per_leaf = v;
    }
    if let Some(v) = a.mean_variance_samples {
        plan.mean_variance_samples_per_leaf = v;
    }
    if let Some(v) = a.train {
        plan.class.train = v;
    }
    if let Some(v) = a.test {
        plan.class.test = v;
    }
    if let Some(v) = a.outsiders_per_leaf {
        plan.class.outsiders_per_leaf = v;
    }
    if let Some(v) = a.lambda {
        plan.class.lambda = v;
    }
    if let Some(v) = a.root_shift {
        plan.root_shift = v;
    }
    if let Some(v) = a.seed {
        plan.seed = v;
    }
    for (name, v) in &a.tolerances {
        set_tolerance(&mut plan.tolerances, name, *v);
    }
    let r = verify_report(&spec, &plan)?;
    report::write_verify_table(io::stdout().lock(), &r)?;
    if let Some(p) = &a.json {
        write_json(p, &VerifyJson::new(&r))?;
    }
    Ok(if r.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
}
