//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use croc::{
    all_variant_loci, auc, auc_oracle, classify_variants, estimate_lr_table, fit_croc, fit_froc, forward_select,
    multistage_collapse, run_experiment, run_sweep, score_individuals, split_by_label, FitConfig, Method, PanelLayout,
    Result, DEFAULT_MIN_GAIN,
};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use common::{binomial_column, cohort_from, random_labels, rare_column};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn config(seed: u64) -> FitConfig<f64> {
    FitConfig { seed, ..FitConfig::default() }
}

fn auc_oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let levels = rng.random_range(1..=20);
        let draw = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(0..levels) as f64 / levels as f64
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect()
        };
        let (nd, nc) = (rng.random_range(1..=200), rng.random_range(1..=200));
        let cases = draw(nd, &mut rng);
        let controls = draw(nc, &mut rng);
        let fast: f64 = auc(&cases, &controls)?;
        let slow: f64 = auc_oracle(&cases, &controls)?;
        worst = worst.max((fast - slow).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-12 && secs < 10.0, format!("max |delta| {worst:.3e}, {secs:.2}s"))
}

fn lr_ordering_optimality() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..200 {
        let groups = rng.random_range(1..=6usize);
        let mut counts: Vec<(usize, usize)> = (0..groups)
            .map(|_| loop {
                let c = (rng.random_range(0..=8), rng.random_range(0..=8));
                if c != (0, 0) {
                    break c;
                }
            })
            .collect();
        counts[0].0 += 1;
        counts[groups - 1].1 += 1;
        // group g is genotype (g / 2, g % 2) over two loci
        let mut labels = Vec::new();
        let mut group_of = Vec::new();
        for (g, &(cd, cc)) in counts.iter().enumerate() {
            labels.extend(std::iter::repeat_n(true, cd).chain(std::iter::repeat_n(false, cc)));
            group_of.extend(std::iter::repeat_n(g, cd + cc));
        }
        let columns =
            vec![group_of.iter().map(|&g| (g / 2) as u8).collect(), group_of.iter().map(|&g| (g % 2) as u8).collect()];
        let cohort = cohort_from(&labels, columns);
        let table = estimate_lr_table(&cohort, &all_variant_loci(&cohort), 0.0)?;
        let (cases, controls) = split_by_label(&score_individuals(&table, &cohort)?, &labels);
        let lr_auc: f64 = auc(&cases, &controls)?;
        for perm in (0..groups).permutations(groups) {
            let scores: Vec<f64> = group_of.iter().map(|&g| perm[g] as f64).collect();
            let (cases, controls) = split_by_label(&scores, &labels);
            if auc_oracle(&cases, &controls)? > lr_auc + 1e-12 {
                violations += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(violations == 0 && secs < 30.0, format!("{violations} better permutations, {secs:.2}s"))
}

fn degenerate_equivalence() -> Result<Outcome> {
    let layout = PanelLayout {
        n_cases: 120,
        n_controls: 180,
        n_common: 25,
        n_rare: 0,
        causal_common: 3,
        ..PanelLayout::gaw17_like()
    };
    let mut identical = 0;
    for i in 0..20 {
        let cohort = croc::simulate_cohort(&layout.build(100 + i))?;
        if !classify_variants(&cohort, 0.01)?.rare.is_empty() {
            continue;
        }
        let cfg = config(i);
        if fit_croc(&cohort, &cfg)?.to_json()? == fit_froc(&cohort, &all_variant_loci(&cohort), &cfg)?.to_json()? {
            identical += 1;
        }
    }
    outcome(identical == 20, format!("{identical}/20 byte-identical"))
}

fn collapsing_partition() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for _ in 0..100 {
        let n = rng.random_range(60..=300);
        let n_rare = rng.random_range(1..=500);
        let labels = random_labels(&mut rng, n);
        let columns = (0..n_rare).map(|_| rare_column(&mut rng, n)).collect();
        let cohort = cohort_from(&labels, columns);
        let rare = classify_variants(&cohort, 0.01)?.rare;
        let stages = multistage_collapse::<f64>(&cohort, &rare, DEFAULT_MIN_GAIN)?;
        let mut seen: Vec<usize> =
            stages.iter().flat_map(|pv| pv.members.iter().map(|id| cohort.variant_index(id).unwrap())).collect();
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        let disjoint_and_exhaustive = seen.len() == total && seen == rare && rare.len() == n_rare;
        let monotone =
            stages.iter().all(|pv| !pv.members.is_empty() && pv.stage_auc_path.windows(2).all(|w| w[1] >= w[0]));
        if !(disjoint_and_exhaustive && monotone) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad}/100 cohorts violate"))
}

fn greedy_step_one() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(40..=200);
        let m = rng.random_range(2..=30);
        let labels = random_labels(&mut rng, n);
        let columns: Vec<Vec<u8>> = (0..m)
            .map(|_| {
                let maf = rng.random_range(0.005..0.5);
                binomial_column(&mut rng, n, maf)
            })
            .collect();
        let cohort = cohort_from(&labels, columns);
        let loci = all_variant_loci(&cohort);
        let scan: Vec<f64> = loci
            .iter()
            .map(|l| {
                let table = estimate_lr_table(&cohort, std::slice::from_ref(l), 0.5)?;
                let (cases, controls) = split_by_label(&score_individuals(&table, &cohort)?, &labels);
                auc_oracle(&cases, &controls)
            })
            .collect::<Result<_>>()?;
        let best = scan.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected = scan.iter().position(|&a| a >= best - 1e-12).unwrap();
        let path = forward_select(&cohort, &loci, 1, DEFAULT_MIN_GAIN, 0.5)?;
        let step = &path.steps[0];
        if step.locus != loci[expected] || (step.train_auc - scan[expected]).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches}/100 mismatches"))
}

fn method_aucs(output: &croc::ExperimentOutput, method: Method) -> Vec<f64> {
    output
        .reports
        .iter()
        .find(|r| r.method == method)
        .map(|r| r.rows.iter().map(|row| row.test_auc).collect())
        .unwrap_or_default()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn null_calibration() -> Result<Outcome> {
    let spec = PanelLayout::null(210, 490).build(6);
    let out = run_experiment(&spec, &[Method::Froc, Method::Croc], 50, 50, &config(6), false)?;
    let froc = mean(&method_aucs(&out, Method::Froc));
    let croc = mean(&method_aucs(&out, Method::Croc));
    let ok = [froc, croc].iter().all(|a| (0.45..=0.55).contains(a)) && !out.failed();
    outcome(ok, format!("mean test AUC froc {froc:.4}, croc {croc:.4}"))
}

fn table_direction() -> Result<Outcome> {
    let start = Instant::now();
    let spec = PanelLayout::gaw17_like().build(0);
    let out = run_experiment(&spec, &[Method::Froc, Method::Croc], 50, 50, &config(0), false)?;
    let froc = method_aucs(&out, Method::Froc);
    let croc = method_aucs(&out, Method::Croc);
    let diffs: Vec<f64> = croc.iter().zip(&froc).map(|(c, f)| c - f).collect();
    let n = diffs.len() as f64;
    let d = mean(&diffs);
    let sd = (diffs.iter().map(|x| (x - d).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = d / (sd / n.sqrt());
    let critical = StudentsT::new(0.0, 1.0, n - 1.0).unwrap().inverse_cdf(0.95);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        d > 0.0 && t > critical && !out.failed(),
        format!("froc {:.4}, croc {:.4}, paired t {t:.2} (crit {critical:.3}), {secs:.0}s", mean(&froc), mean(&croc)),
    )
}

fn dropout_trend() -> Result<Outcome> {
    let spec = PanelLayout::gaw17_like().build(0);
    let fractions = [1.0, 0.5, 0.25, 0.0];
    let out = run_sweep(&spec, &fractions, &[Method::Froc, Method::Croc], 20, &config(0))?;
    let gap = |f: f64| out.row(f, Method::Croc).unwrap().mean_auc - out.row(f, Method::Froc).unwrap().mean_auc;
    let gaps: Vec<String> = fractions.iter().map(|&f| format!("{f}:{:+.4}", gap(f))).collect();
    outcome(gap(0.0) > gap(1.0) && gap(0.0) >= 0.03, format!("gaps {}", gaps.join(" ")))
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_croc"))
        .current_dir(dir)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn cli_determinism() -> Result<Outcome> {
    let commands: [&[&str]; 7] = [
        &["simulate", "--preset", "gaw17", "--seed", "7", "--replicates", "2", "--out-dir", "."],
        &["fit", "--seed", "7", "--method", "froc", "--in", "replicate_000.tsv", "--out", "froc.json"],
        &["fit", "--seed", "7", "--method", "croc", "--in", "replicate_000.tsv", "--out", "croc.json"],
        &["evaluate", "--model", "croc.json", "--in", "replicate_001.tsv", "--roc", "eval_roc.tsv"],
        &["roc", "--model", "froc.json", "--in", "replicate_001.tsv", "--out", "roc.tsv"],
        &["experiment", "--preset", "gaw17", "--seed", "7", "--train-reps", "2", "--folds", "3", "--out", "exp"],
        &[
            "sweep",
            "--preset",
            "gaw17",
            "--seed",
            "7",
            "--reps",
            "2",
            "--folds",
            "3",
            "--fractions",
            "1,0",
            "--out",
            "sweep",
        ],
    ];
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &runs {
        for args in commands {
            if !run_cli(dir.path(), args) {
                return outcome(false, format!("croc {} failed", args.join(" ")));
            }
        }
    }
    let (a, b) = (snapshot(runs[0].path()), snapshot(runs[1].path()));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    outcome(
        a.len() == b.len() && a.len() == 12 && differing.is_empty(),
        format!("{} files compared, differing: {:?}", a.len(), differing),
    )
}

type Check = fn() -> Result<Outcome>;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("auc oracle equivalence", auc_oracle_equivalence),
        ("lr ordering optimality", lr_ordering_optimality),
        ("croc equals froc without rare variants", degenerate_equivalence),
        ("collapsing partition and termination", collapsing_partition),
        ("greedy first step optimality", greedy_step_one),
        ("null calibration", null_calibration),
        ("croc beats froc on all variants", table_direction),
        ("gap grows as common variants drop out", dropout_trend),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({detail})", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
