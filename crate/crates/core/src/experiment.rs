//! Replicate experiments (train on one replicate, test on another) and the
//! common-variant dropout sweep, with TSV/JSON reports.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{drop_common_variants, Cohort};
use crate::collapse::fit_croc;
use crate::error::{Error, Result};
use crate::locus::all_variant_loci;
use crate::selection::{evaluate_model, fit_froc, FitConfig, PredictionModel};
use crate::simulate::{derive_seed, simulate_replicate, SimSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Froc,
    Croc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Froc => "froc",
            Method::Croc => "croc",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "froc" => Ok(Method::Froc),
            "croc" => Ok(Method::Croc),
            other => Err(Error::usage(format!("unknown method {other:?} (froc|croc)"))),
        }
    }
}

/// FROC searches every variant; CROC collapses the rare ones first.
pub fn fit_method(cohort: &Cohort, method: Method, config: &FitConfig<f64>) -> Result<PredictionModel<f64>> {
    match method {
        Method::Froc => fit_froc(cohort, &all_variant_loci(cohort), config),
        Method::Croc => fit_croc(cohort, config),
    }
}

/// Rounds to the six decimals used in every report.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for n < 2).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub train_replicate: usize,
    pub test_replicate: usize,
    pub train_auc: f64,
    pub test_auc: f64,
    pub chosen_k: usize,
    pub loci: Vec<String>,
    /// Set when the replicate failed; numeric fields are then NaN/0.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub n_replicates: usize,
    pub mean_auc: f64,
    pub sd_auc: f64,
    /// Summed fit time; only recorded when timing is requested so that
    /// reports stay byte-reproducible by default.
    pub wall_time_seconds: Option<f64>,
    pub rows: Vec<ReplicateRow>,
}

impl ExperimentReport {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub seed: u64,
    pub config: FitConfig<f64>,
    pub spec: SimSpec,
    pub reports: Vec<ExperimentReport>,
}

struct FitOutcome {
    row: ReplicateRow,
    seconds: f64,
}

fn fit_and_test(
    method: Method,
    train: &Cohort,
    test: &Cohort,
    config: &FitConfig<f64>,
    replicate: usize,
    test_replicate: usize,
) -> FitOutcome {
    let start = Instant::now();
    let fitted = fit_method(train, method, config);
    let seconds = start.elapsed().as_secs_f64();
    let result = fitted.and_then(|m| evaluate_model(&m, test).map(|(auc, _)| (m, auc)));
    let row = match result {
        Ok((model, test_auc)) => ReplicateRow {
            replicate,
            train_replicate: replicate,
            test_replicate,
            train_auc: round6(model.train_auc),
            test_auc: round6(test_auc),
            chosen_k: model.chosen_k,
            loci: model.loci.iter().map(|l| l.id().to_string()).collect(),
            error: None,
        },
        Err(e) => ReplicateRow {
            replicate,
            train_replicate: replicate,
            test_replicate,
            train_auc: f64::NAN,
            test_auc: f64::NAN,
            chosen_k: 0,
            loci: Vec::new(),
            error: Some(e.to_string()),
        },
    };
    FitOutcome { row, seconds }
}

fn summarize(method: Method, outcomes: Vec<FitOutcome>, timing: bool) -> ExperimentReport {
    let ok: Vec<f64> = outcomes.iter().filter(|o| o.row.error.is_none()).map(|o| o.row.test_auc).collect();
    let (mean, sd) = mean_sd(&ok);
    let seconds: f64 = outcomes.iter().map(|o| o.seconds).sum();
    ExperimentReport {
        method,
        n_replicates: outcomes.len(),
        mean_auc: round6(mean),
        sd_auc: round6(sd),
        wall_time_seconds: timing.then(|| round6(seconds)),
        rows: outcomes.into_iter().map(|o| o.row).collect(),
    }
}

/// Fits every method on training replicates `0..n_train` and evaluates on
/// replicates `n_train + (i mod n_test)`.
pub fn run_experiment(
    spec: &SimSpec,
    methods: &[Method],
    n_train: usize,
    n_test: usize,
    config: &FitConfig<f64>,
    timing: bool,
) -> Result<ExperimentOutput> {
    if n_train == 0 || n_test == 0 || methods.is_empty() {
        return Err(Error::usage("experiment needs replicates and at least one method"));
    }
    spec.validate()?;
    let per_pair: Vec<Vec<FitOutcome>> = (0..n_train)
        .into_par_iter()
        .map(|i| {
            let test_rep = n_train + i % n_test;
            let train = simulate_replicate(spec, i)?;
            let test = simulate_replicate(spec, test_rep)?;
            Ok(methods.iter().map(|&m| fit_and_test(m, &train, &test, config, i, test_rep)).collect())
        })
        .collect::<Result<_>>()?;
    let mut by_method: Vec<Vec<FitOutcome>> = methods.iter().map(|_| Vec::new()).collect();
    for outcomes in per_pair {
        for (slot, o) in by_method.iter_mut().zip(outcomes) {
            slot.push(o);
        }
    }
    let reports = methods.iter().zip(by_method).map(|(&m, o)| summarize(m, o, timing)).collect();
    Ok(ExperimentOutput { seed: spec.seed, config: config.clone(), spec: spec.clone(), reports })
}

pub const SUMMARY_HEADER: &str = "method\tn_replicates\tmean_auc\tsd_auc\twall_time_seconds";
pub const REPLICATE_HEADER: &str =
    "method\treplicate\ttrain_replicate\ttest_replicate\ttrain_auc\ttest_auc\tchosen_k\tloci\tstatus";

fn fmt6(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x:.6}")
    }
}

impl ExperimentOutput {
    pub fn summary_tsv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.method.name(),
                r.n_replicates,
                fmt6(r.mean_auc),
                fmt6(r.sd_auc),
                r.wall_time_seconds.map_or("NA".to_string(), fmt6)
            );
        }
        out
    }

    pub fn replicates_tsv(&self) -> String {
        let mut out = format!("{REPLICATE_HEADER}\n");
        for r in &self.reports {
            for row in &r.rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.method.name(),
                    row.replicate,
                    row.train_replicate,
                    row.test_replicate,
                    fmt6(row.train_auc),
                    fmt6(row.test_auc),
                    row.chosen_k,
                    if row.loci.is_empty() { ".".to_string() } else { row.loci.join(",") },
                    match &row.error {
                        None => "ok".to_string(),
                        Some(e) => format!("FAILED: {}", e.replace(['\t', '\n'], " ")),
                    }
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn failed(&self) -> bool {
        self.reports.iter().any(ExperimentReport::failed)
    }
}

/// Summary row parsed back from a report TSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub n_replicates: usize,
    pub mean_auc: f64,
    pub sd_auc: f64,
    pub wall_time_seconds: Option<f64>,
}

fn parse_num(field: &str) -> Result<f64> {
    if field == "NA" {
        return Ok(f64::NAN);
    }
    field.parse().map_err(|_| Error::data(format!("bad number {field:?} in report")))
}

pub fn parse_summary_tsv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::data("missing experiment summary header"));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                return Err(Error::data(format!("bad summary line {line:?}")));
            }
            Ok(SummaryRow {
                method: f[0].parse()?,
                n_replicates: f[1].parse().map_err(|_| Error::data("bad replicate count"))?,
                mean_auc: parse_num(f[2])?,
                sd_auc: parse_num(f[3])?,
                wall_time_seconds: if f[4] == "NA" { None } else { Some(parse_num(f[4])?) },
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub keep_fraction: f64,
    pub method: Method,
    pub n_replicates: usize,
    pub mean_auc: f64,
    pub sd_auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Test AUC per replicate, in replicate order.
    pub test_aucs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub seed: u64,
    pub config: FitConfig<f64>,
    pub spec: SimSpec,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_HEADER: &str = "keep_fraction\tmethod\tn_replicates\tmean_auc\tsd_auc\tci_low\tci_high";

impl SweepOutput {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("{SWEEP_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                fmt6(r.keep_fraction),
                r.method.name(),
                r.n_replicates,
                fmt6(r.mean_auc),
                fmt6(r.sd_auc),
                fmt6(r.ci_low),
                fmt6(r.ci_high)
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn row(&self, keep_fraction: f64, method: Method) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.keep_fraction == keep_fraction && r.method == method)
    }
}

/// One parsed sweep line: keep fraction, method, replicates and
/// `[mean, sd, ci_low, ci_high]`.
pub type SweepLine = (f64, Method, usize, [f64; 4]);

pub fn parse_sweep_tsv(text: &str) -> Result<Vec<SweepLine>> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(Error::data("missing sweep header"));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(Error::data(format!("bad sweep line {line:?}")));
            }
            Ok((
                parse_num(f[0])?,
                f[1].parse()?,
                f[2].parse().map_err(|_| Error::data("bad replicate count"))?,
                [parse_num(f[3])?, parse_num(f[4])?, parse_num(f[5])?, parse_num(f[6])?],
            ))
        })
        .collect()
}

/// Dropout sweep: for each keep fraction, every training replicate keeps all
/// rare variants and a seeded subset of common variants; the paired test
/// replicate is restricted to the same variants. CI is mean +/- 1.96 sd/sqrt(n).
pub fn run_sweep(
    spec: &SimSpec,
    keep_fractions: &[f64],
    methods: &[Method],
    reps: usize,
    config: &FitConfig<f64>,
) -> Result<SweepOutput> {
    if reps == 0 || methods.is_empty() || keep_fractions.is_empty() {
        return Err(Error::usage("sweep needs fractions, methods and replicates"));
    }
    if let Some(f) = keep_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::usage(format!("keep fraction {f} outside [0, 1]")));
    }
    spec.validate()?;
    let pairs: Vec<(Cohort, Cohort)> = (0..reps)
        .into_par_iter()
        .map(|i| Ok((simulate_replicate(spec, i)?, simulate_replicate(spec, reps + i)?)))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &fraction in keep_fractions {
        let aucs: Vec<Vec<f64>> = pairs
            .par_iter()
            .enumerate()
            .map(|(i, (train, test))| {
                let reduced = drop_common_variants(train, fraction, derive_seed(config.seed, i as u64))?;
                let ids: Vec<&str> = reduced.variants().iter().map(|v| v.id.as_str()).collect();
                let test = test.select_variant_ids(&ids)?;
                methods
                    .iter()
                    .map(|&m| {
                        let model = fit_method(&reduced, m, config)?;
                        Ok(evaluate_model(&model, &test)?.0)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        for (k, &method) in methods.iter().enumerate() {
            let test_aucs: Vec<f64> = aucs.iter().map(|a| round6(a[k])).collect();
            let (mean, sd) = mean_sd(&test_aucs);
            let half = 1.96 * sd / (reps as f64).sqrt();
            rows.push(SweepRow {
                keep_fraction: fraction,
                method,
                n_replicates: reps,
                mean_auc: round6(mean),
                sd_auc: round6(sd),
                ci_low: round6(mean - half),
                ci_high: round6(mean + half),
                test_aucs,
            });
        }
    }
    Ok(SweepOutput { seed: config.seed, config: config.clone(), spec: spec.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_uses_sample_denominator() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("croc".parse::<Method>().unwrap(), Method::Croc);
        assert!("roc".parse::<Method>().is_err());
    }

    #[test]
    fn round6_survives_text() {
        for x in [0.5851234567, 0.1, 0.0234449999, 1.0 / 3.0] {
            let r = round6(x);
            assert_eq!(format!("{r:.6}").parse::<f64>().unwrap(), r);
        }
    }
}
