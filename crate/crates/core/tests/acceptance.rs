//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p shellkit-core --test acceptance`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shellkit_core::density::estimate_density;
use shellkit_core::eval::{auroc, precision_recall, ScoredLabels};
use shellkit_core::geometry::DatasetMatrix;
use shellkit_core::hierarchy::{self, build_hierarchy, HierarchySpec};
use shellkit_core::learner::{self, AncestorMeans};
use shellkit_core::shell::{fit_shell, fit_shell_traced, FitOptions, DEFAULT_LAMBDA};
use shellkit_core::verify::{self, ClassPlan};

struct Outcome {
    lines: Vec<(String, bool)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { lines: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.lines.push((what.into(), ok));
    }

    fn passed(&self) -> bool {
        self.lines.iter().all(|(_, ok)| *ok)
    }
}

fn concentration() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let tree = build_hierarchy(verify::default_spec()).unwrap();
    let c = verify::measure_concentration(&tree, 50, 7, 0.05).unwrap();
    let elapsed = start.elapsed();
    o.check(format!("k=4096: {:.4} of {} cross-leaf pairs within 5% (need >= 0.99)", c.fraction_within(), c.pairs), c.fraction_within() >= 0.99);
    o.check(format!("k=4096 runtime {:.1}s (need < 60s)", elapsed.as_secs_f64()), elapsed < Duration::from_secs(60));
    let small = build_hierarchy(HierarchySpec::new(16, 3, 3, 0.5, 2024)).unwrap();
    let c16 = verify::measure_concentration(&small, 50, 7, 0.05).unwrap();
    o.check(format!("k=16: {:.4} within 5%, bound reported as failing", c16.fraction_within()), c16.fraction_within() < 0.99);
    let report = verify::verify_report(small.spec(), &verify::VerificationPlan::default()).unwrap();
    let check = report.get("pairwise concentration at 2 v_lca").unwrap();
    o.check("k=16 report marks the concentration check failed", check.failed());
    o
}

fn mean_variance() -> Outcome {
    let mut o = Outcome::new();
    let tree = build_hierarchy(HierarchySpec::new(2048, 3, 3, 0.5, 2024)).unwrap();
    let exact = hierarchy::mean_variance_from_parameters(&tree).iter().map(|r| r.error_ratio).fold(0.0, f64::max);
    o.check(format!("parameter level: worst error ratio {exact:.2e} (rounding only, <= 1e-12)"), exact <= hierarchy::EXACT_REL_TOL);
    let rows = hierarchy::verify_mean_variance(&tree, 500, 3).unwrap();
    let worst = rows.iter().map(|r| r.error_ratio).fold(0.0, f64::max);
    o.check(format!("sample level: worst error ratio {:.3}% over {} internal nodes (need < 5%)", 100.0 * worst, rows.len()), worst < 0.05);
    o
}

fn statistical_maximum() -> Outcome {
    let mut o = Outcome::new();
    let tree = build_hierarchy(verify::default_spec()).unwrap();
    let p = verify::measure_distance_patterns(&tree, 50, (0.1, 10.0), 5).unwrap();
    let within = 1.0 - p.pairwise.fraction_beyond_sqrt2_band();
    o.check(format!("{within:.6} of pairwise distances <= sqrt(2)+0.05 (need >= 0.999)"), within >= 0.999);
    let mode = p.normalized_probe.mode;
    o.check(format!("normalized-probe mode {mode:.4} (need within sqrt(2) +- 0.05)"), (mode - std::f64::consts::SQRT_2).abs() <= 0.05);
    let ratio = p.raw_probe.spread.unwrap().ratio();
    o.check(format!("raw-probe p90/p10 {ratio:.2} (need > 1.5)"), ratio > 1.5);
    o
}

fn on_shell(rng: &mut ChaCha8Rng, k: usize, n: usize, center: &[f64], r: f64) -> DatasetMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..k).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.iter().zip(center).map(|(x, c)| c + r * x / norm).collect()
        })
        .collect();
    DatasetMatrix::from_rows(&rows).unwrap()
}

fn shell_fit() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let opts = FitOptions::default();

    let mut worst_center: f64 = 0.0;
    let mut worst_radius: f64 = 0.0;
    for trial in 0..20 {
        let k = 2 + trial % 4;
        let n = 4 * k + 4;
        let center: Vec<f64> = (0..k).map(|_| rng.random_range(-0.2..0.2)).collect();
        let r = rng.random_range(0.5..2.0);
        let data = on_shell(&mut rng, k, n, &center, r);
        let s = fit_shell(&data, 0.0, &opts).unwrap();
        let ce = s.center.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst_center = worst_center.max(ce);
        worst_radius = worst_radius.max((s.radius_sq - r * r).abs());
    }
    o.check(format!("lambda=0 on-shell recovery: center error {worst_center:.1e}, radius^2 error {worst_radius:.1e} (need < 1e-6)"), worst_center < 1e-6 && worst_radius < 1e-6);

    // Grid-search oracle over (mu_x, mu_y, v) for the square at lambda = 0.25.
    let square = DatasetMatrix::from_rows(&[[2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]]).unwrap();
    let j = |mx: f64, my: f64, v: f64| {
        square.rows().map(|f| ((f[0] - mx).powi(2) + (f[1] - my).powi(2) - v).powi(2)).sum::<f64>() / 4.0 + 0.25 * v * v
    };
    let (mu_step, v_step) = (0.05, 0.01);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for a in -20..=20 {
        for b in -20..=20 {
            for c in 200..=500 {
                let (mx, my, v) = (a as f64 * mu_step, b as f64 * mu_step, c as f64 * v_step);
                let val = j(mx, my, v);
                if val < best.0 {
                    best = (val, mx, my, v);
                }
            }
        }
    }
    let s = fit_shell(&square, 0.25, &opts).unwrap();
    let agree = (s.radius_sq - best.3).abs() <= v_step
        && (s.center[0] - best.1).abs() <= mu_step
        && (s.center[1] - best.2).abs() <= mu_step;
    o.check(format!("lambda=0.25 square: solver v={:.6}, grid oracle v={:.2} at ({:.2}, {:.2})", s.radius_sq, best.3, best.1, best.2), agree && (s.radius_sq - 3.2).abs() < 1e-12);

    let mut monotone = 0;
    for _ in 0..100 {
        let k = rng.random_range(2..12);
        let n = rng.random_range(2..40);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let data = DatasetMatrix::from_rows(&rows).unwrap();
        let lambda = rng.random_range(0.0..0.5);
        let fit = fit_shell_traced(&data, lambda, &opts).unwrap();
        if fit.objective_trace.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
    }
    o.check(format!("{monotone}/100 randomized fits have non-increasing objective"), monotone == 100);
    o
}

fn separability() -> Outcome {
    let mut o = Outcome::new();
    let tree = build_hierarchy(HierarchySpec::new(4096, 1, 2, 0.5, 2024)).unwrap();
    let plan = ClassPlan { train: 1000, test: 200, outsiders_per_leaf: 200, ..ClassPlan::default() };
    let s = verify::measure_separability(&tree, tree.leaves()[0], &plan).unwrap().unwrap();
    o.check(format!("Shell-One AUROC vs sibling {:.4} (need >= 0.99)", s.auroc), s.auroc >= 0.99);
    o.check(format!("{:.4} of outsiders beyond class p99 distance (need >= 0.99)", s.outsiders_beyond_p99), s.outsiders_beyond_p99 >= 0.99);
    o
}

fn gaps() -> Outcome {
    let mut o = Outcome::new();
    let spec = verify::default_spec();
    let tree = build_hierarchy(spec.clone()).unwrap();
    let alpha = tree.leaves()[0];
    let plan = ClassPlan::default();

    let g = verify::measure_gaps(&tree, alpha, &plan).unwrap();
    let worst_lm = g.iter().filter(|x| x.l <= x.m).map(|x| x.rel_err()).fold(0.0, f64::max);
    let worst_ml = g.iter().filter(|x| x.m <= x.l).map(|x| x.rel_err()).fold(0.0, f64::max);
    o.check(format!("l <= m <= n: worst relative gap error {:.2}% (need < 10%)", 100.0 * worst_lm), worst_lm < 0.10);
    o.check(format!("m <= l <= n: worst relative gap error {:.2}% (need < 10%)", 100.0 * worst_ml), worst_ml < 0.10);

    let shifted = verify::shifted_root_mean(spec.k, spec.root_avg_variance, 3.0, 9).unwrap();
    for (name, s) in [("zero root mean", spec.clone()), ("shifted root mean", spec.clone().with_root_mean(shifted))] {
        let t = build_hierarchy(s).unwrap();
        let rows = verify::measure_root_renormalization(&t, t.leaves()[0], &plan).unwrap();
        let worst = rows.iter().map(|r| r.root / r.plain).fold(f64::INFINITY, f64::min);
        o.check(
            format!("{name}: root re-normalized gap / plain gap >= {worst:.4} over {} outsider levels", rows.len()),
            worst >= 1.0 - verify::Tolerances::default().root_renorm_slack,
        );
    }

    let e = verify::measure_own_mean_effect(&tree, alpha, &plan).unwrap();
    o.check(
        format!("own-mean AUROC {:.4} vs root-mean AUROC {:.4}: drop {:.4} (need >= 0.2)", e.own_auroc, e.root_auroc, e.root_auroc - e.own_auroc),
        e.root_auroc - e.own_auroc >= 0.2,
    );
    o
}

fn stacking() -> Outcome {
    let mut o = Outcome::new();
    let tree = build_hierarchy(HierarchySpec::new(1024, 3, 3, 0.7, 11)).unwrap();
    let plan = ClassPlan { train: 200, test: 100, ..ClassPlan::default() };
    let rows = verify::measure_stacking(&tree, &plan).unwrap();
    let ge = rows.iter().filter(|r| r.shell_stacked >= r.shell_one).count();
    let gt = rows.iter().filter(|r| r.shell_stacked > r.shell_one).count();
    let mean = |f: fn(&verify::StackComparison) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    o.check(format!("SS >= SO on {ge}/{} classes (mean SO {:.4}, SS {:.4})", rows.len(), mean(|r| r.shell_one), mean(|r| r.shell_stacked)), ge == rows.len());
    o.check(format!("strict improvement on {gt} classes (need >= 1)"), gt >= 1);
    o
}

fn oracle_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice = 0u64;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            p += 1;
        } else {
            n += 1;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    twice as f64 / (2 * p * n) as f64
}

fn oracle_pr(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64, f64)> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    thresholds
        .into_iter()
        .map(|t| {
            let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l).count() as f64;
            let all = scores.iter().filter(|s| **s >= t).count() as f64;
            (t, tp / all, tp / pos)
        })
        .collect()
}

fn auroc_pr() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut auc_ok, mut pr_ok, mut total) = (0, 0, 0);
    while total < 1000 {
        let n = rng.random_range(2..=50);
        let levels = rng.random_range(1..=20);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.25).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let Ok(sl) = ScoredLabels::new(scores.clone(), labels.clone()) else { continue };
        if sl.labels().iter().all(|&l| l) || sl.labels().iter().all(|&l| !l) {
            continue;
        }
        total += 1;
        if auroc(&sl).unwrap() == oracle_auroc(&scores, &labels) {
            auc_ok += 1;
        }
        let got: Vec<(f64, f64, f64)> = precision_recall(&sl).unwrap().iter().map(|p| (p.threshold, p.precision, p.recall)).collect();
        if got == oracle_pr(&scores, &labels) {
            pr_ok += 1;
        }
    }
    o.check(format!("rank AUROC equals pair-counting oracle exactly on {auc_ok}/{total} instances"), auc_ok == total);
    o.check(format!("PR curve equals exhaustive-threshold oracle on {pr_ok}/{total} instances"), pr_ok == total);
    o
}

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * f(a) + inner + 0.5 * f(b))
}

fn kde() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sets: Vec<Vec<f64>> = vec![vec![0.0], vec![1.5], vec![0.0, 2.0], vec![3.0; 7]];
    for _ in 0..60 {
        let n = rng.random_range(1..300);
        let spread = 10f64.powf(rng.random_range(-4.0..1.0));
        let base = rng.random_range(0.0..4.0);
        sets.push((0..n).map(|_| base + spread * rng.random::<f64>().powi(2)).collect());
    }
    let mut worst: f64 = 0.0;
    for x in &sets {
        let m = estimate_density(x).unwrap();
        let h = m.bandwidth();
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min) - 6.0 * h;
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 6.0 * h;
        let steps = (((hi - lo) / (h / 20.0)).ceil() as usize).clamp(1000, 2_000_000);
        let mass = trapezoid(|t| m.eval(t), lo, hi, steps);
        worst = worst.max((mass - 1.0).abs());
    }
    o.check(format!("{} fitted densities integrate to 1 within {:.2e} (need 1%)", sets.len(), worst), worst <= 0.01);
    let single = estimate_density(&[0.7]).unwrap();
    let peak = 1.0 / (single.bandwidth() * (2.0 * std::f64::consts::PI).sqrt());
    let rel = (single.eval(0.7) - peak).abs() / peak;
    o.check(format!("single-point peak relative error {rel:.1e} (need < 1e-9)"), rel < 1e-9);
    o
}

fn fusion() -> Outcome {
    let mut o = Outcome::new();
    let tree = build_hierarchy(HierarchySpec::new(2048, 3, 3, 0.5, 2024)).unwrap();
    // One leaf below each root child.
    let classes: Vec<usize> = tree.root().children.iter().map(|&c| tree.subtree_leaves(c).unwrap()[0]).collect();
    let mut trains = Vec::new();
    let mut tests = Vec::new();
    for (i, &c) in classes.iter().enumerate() {
        let all = verify::unit_samples(&tree, c, 400, 100 + i as u64).unwrap();
        trains.push(all.select(&(0..300).collect::<Vec<_>>()).unwrap());
        tests.push(all.select(&(300..400).collect::<Vec<_>>()).unwrap());
    }
    let k = tree.dim();
    let opts = FitOptions::default();
    let train_one = |i: usize| learner::train(&trains[i], &AncestorMeans::shell_one(k), format!("class-{i}"), DEFAULT_LAMBDA, &opts).unwrap();

    let together: Vec<_> = (0..classes.len()).map(train_one).collect();
    let isolated: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..classes.len()).map(|i| s.spawn(move || train_one(i))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let all_test = DatasetMatrix::concat(&tests.iter().collect::<Vec<_>>()).unwrap();
    let bitwise = together.iter().zip(&isolated).all(|(a, b)| {
        let sa = a.score_rows(&all_test).unwrap();
        let sb = b.score_rows(&all_test).unwrap();
        sa.iter().zip(&sb).all(|(x, y)| x.to_bits() == y.to_bits())
    });
    o.check("per-model scores bitwise identical trained together vs in isolation", bitwise);

    let mut correct = 0;
    for (i, t) in tests.iter().enumerate() {
        for r in t.rows() {
            if learner::classify(&together, r).unwrap() == format!("class-{i}") {
                correct += 1;
            }
        }
    }
    let acc = correct as f64 / all_test.n_rows() as f64;
    o.check(format!("3-class fused accuracy {acc:.4} (need >= 0.99)"), acc >= 0.99);

    // A fourth model leaves the first three untouched.
    let extra = tree.subtree_leaves(tree.root().children[0]).unwrap()[4];
    let extra_train = verify::unit_samples(&tree, extra, 300, 999).unwrap();
    let mut extended = together.clone();
    extended.push(learner::train(&extra_train, &AncestorMeans::shell_one(k), "extra", DEFAULT_LAMBDA, &opts).unwrap());
    o.check("adding a model does not alter existing models", extended[..3] == together[..]);
    o
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 pairwise NSD concentration", concentration),
        ("2 mean-variance constraint", mean_variance),
        ("3 statistical maximum sqrt(2)", statistical_maximum),
        ("4 shell-fit exactness", shell_fit),
        ("5 sibling separability", separability),
        ("6 re-normalization gaps", gaps),
        ("7 stacked vs single shell", stacking),
        ("8 AUROC / PR oracles", auroc_pr),
        ("9 KDE soundness", kde),
        ("10 no-retraining fusion", fusion),
    ];
    let start = Instant::now();
    let outcomes: Vec<(Outcome, Duration)> = criteria
        .iter()
        .map(|(_, f)| {
            let t = Instant::now();
            let o = std::panic::catch_unwind(f).unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                let mut o = Outcome::new();
                o.check(format!("panicked: {}", msg.unwrap_or_default()), false);
                o
            });
            (o, t.elapsed())
        })
        .collect();

    let mut failures = 0;
    for ((name, _), (o, took)) in criteria.iter().zip(&outcomes) {
        let verdict = if o.passed() { "PASS" } else { "FAIL" };
        println!("criterion {name}: {verdict} ({:.1}s)", took.as_secs_f64());
        for (line, ok) in &o.lines {
            println!("    [{}] {line}", if *ok { "ok" } else { "FAILED" });
        }
        if !o.passed() {
            failures += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed in {:.1}s", criteria.len() - failures, criteria.len(), start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
