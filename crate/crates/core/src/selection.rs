//! Greedy forward selection of loci by training AUC, cross-validated choice
//! of model size, and model evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, DEFAULT_RARE_THRESHOLD};
use crate::collapse::PseudoVariant;
use crate::error::{Error, Result};
use crate::locus::{resolve_columns, Locus};
use crate::lr::{check_alpha, estimate_lr_table, likelihood_ratio, score_individuals, tally, LrTable, DEFAULT_ALPHA};
use crate::roc::{auc, auc_from_twice_u, roc_points, split_by_label, twice_u_from_groups, RocCurve};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_GAIN: f64 = 1e-9;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_MAX_K_CAP: usize = 20;

/// Settings shared by FROC and CROC fitting. Serialized into every model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig<S> {
    pub alpha: S,
    pub min_gain: S,
    /// `None` means `min(#candidates, 20)`.
    pub max_k: Option<usize>,
    pub folds: usize,
    pub seed: u64,
    pub rare_threshold: f64,
}

impl<S: Scalar> Default for FitConfig<S> {
    fn default() -> Self {
        FitConfig {
            alpha: S::from_real(DEFAULT_ALPHA),
            min_gain: S::from_real(DEFAULT_MIN_GAIN),
            max_k: None,
            folds: DEFAULT_FOLDS,
            seed: 0,
            rare_threshold: DEFAULT_RARE_THRESHOLD,
        }
    }
}

impl<S> FitConfig<S> {
    fn resolved_max_k(&self, n_candidates: usize) -> usize {
        self.max_k.unwrap_or(DEFAULT_MAX_K_CAP).min(n_candidates)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStep<S> {
    pub locus: Locus,
    pub train_auc: S,
}

/// Nested sequence of models produced by forward selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPath<S> {
    pub base_auc: S,
    pub steps: Vec<PathStep<S>>,
}

impl<S: Scalar> ModelPath<S> {
    pub fn loci(&self) -> Vec<Locus> {
        self.steps.iter().map(|s| s.locus.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvPoint<S> {
    pub k: usize,
    pub auc: S,
}

/// Fitted risk model: selected loci and their likelihood-ratio table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PredictionModel<S> {
    pub loci: Vec<Locus>,
    pub pseudo_variants: Vec<PseudoVariant<S>>,
    pub alpha: S,
    pub chosen_k: usize,
    pub train_auc: S,
    pub lr_table: LrTable<S>,
    pub cv_auc_by_size: Vec<CvPoint<S>>,
    pub seed: u64,
    pub config: FitConfig<S>,
}

impl<S: Scalar> PredictionModel<S> {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Training AUC of the likelihood-ratio model obtained by refining the
/// current genotype partition `groups` with `column`.
fn refined_auc<S: Scalar>(groups: &[u32], n_groups: usize, column: &[u8], is_case: &[bool], alpha: S) -> S {
    let mut remap = vec![u32::MAX; 3 * n_groups];
    let mut counts: Vec<(u64, u64)> = Vec::new();
    for ((&g, &code), &case) in groups.iter().zip(column).zip(is_case) {
        let key = g as usize * 3 + code as usize;
        if remap[key] == u32::MAX {
            remap[key] = counts.len() as u32;
            counts.push((0, 0));
        }
        let cell = &mut counts[remap[key] as usize];
        if case {
            cell.0 += 1
        } else {
            cell.1 += 1
        }
    }
    lr_groups_auc(&counts, alpha)
}

/// AUC of scoring each individual by the likelihood ratio of its group.
pub(crate) fn lr_groups_auc<S: Scalar>(counts: &[(u64, u64)], alpha: S) -> S {
    let (n_cases, n_controls) = counts.iter().fold((0, 0), |(a, b), &(c, d)| (a + c, b + d));
    let m = counts.len() as u64;
    let mut scored: Vec<(S, u64, u64)> =
        counts.iter().map(|&(c, d)| (likelihood_ratio(c, d, n_cases, n_controls, alpha, m), c, d)).collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("likelihood ratios are never NaN"));
    let mut merged: Vec<(S, u64, u64)> = Vec::with_capacity(scored.len());
    for (lr, c, d) in scored {
        match merged.last_mut() {
            Some(last) if last.0 == lr => {
                last.1 += c;
                last.2 += d;
            }
            _ => merged.push((lr, c, d)),
        }
    }
    let twice_u = twice_u_from_groups(merged.iter().map(|g| (g.1, g.2)));
    auc_from_twice_u(twice_u, n_cases, n_controls)
}

fn regroup(groups: &mut [u32], n_groups: usize, column: &[u8]) -> usize {
    let mut remap = vec![u32::MAX; 3 * n_groups];
    let mut next = 0u32;
    for (g, &code) in groups.iter_mut().zip(column) {
        let key = *g as usize * 3 + code as usize;
        if remap[key] == u32::MAX {
            remap[key] = next;
            next += 1;
        }
        *g = remap[key];
    }
    next as usize
}

/// Greedy path over candidate columns: `(candidate index, training AUC)`.
///
/// The first step is always taken; later steps require a gain of at least
/// `min_gain`. Ties go to the lowest candidate index.
pub(crate) fn greedy_path<S: Scalar, C: AsRef<[u8]> + Sync>(
    columns: &[C],
    is_case: &[bool],
    max_k: usize,
    min_gain: S,
    alpha: S,
) -> Vec<(usize, S)> {
    let n = is_case.len();
    let mut groups = vec![0u32; n];
    let mut n_groups = 1usize;
    let mut used = vec![false; columns.len()];
    let mut current = S::half();
    let mut path = Vec::new();
    while path.len() < max_k {
        let remaining: Vec<usize> = (0..columns.len()).filter(|&j| !used[j]).collect();
        if remaining.is_empty() {
            break;
        }
        let scores: Vec<S> = remaining
            .par_iter()
            .map(|&j| refined_auc(&groups, n_groups, columns[j].as_ref(), is_case, alpha))
            .collect();
        let mut best = 0usize;
        for (k, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = k;
            }
        }
        let (j, best_auc) = (remaining[best], scores[best]);
        if !path.is_empty() && best_auc - current < min_gain {
            break;
        }
        n_groups = regroup(&mut groups, n_groups, columns[j].as_ref());
        used[j] = true;
        current = best_auc;
        path.push((j, best_auc));
    }
    path
}

fn check_selection_inputs<S: Scalar>(
    cohort: &Cohort,
    candidates: &[Locus],
    max_k: usize,
    min_gain: S,
    alpha: S,
) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::usage("forward selection needs at least one candidate locus"));
    }
    if max_k == 0 {
        return Err(Error::usage("max_k must be at least 1"));
    }
    if min_gain.is_nan() || min_gain < S::zero() {
        return Err(Error::usage(format!("min_gain {min_gain} must be >= 0")));
    }
    check_alpha(alpha)?;
    cohort.require_both_classes()
}

/// Forward selection maximizing training AUC of the likelihood-ratio model.
pub fn forward_select<S: Scalar>(
    cohort: &Cohort,
    candidates: &[Locus],
    max_k: usize,
    min_gain: S,
    alpha: S,
) -> Result<ModelPath<S>> {
    check_selection_inputs(cohort, candidates, max_k, min_gain, alpha)?;
    let columns = resolve_columns(cohort, candidates)?;
    let path = greedy_path(&columns, &cohort.labels(), max_k, min_gain, alpha);
    Ok(ModelPath {
        base_auc: S::half(),
        steps: path.into_iter().map(|(j, train_auc)| PathStep { locus: candidates[j].clone(), train_auc }).collect(),
    })
}

/// Fold index per individual, stratified by phenotype with a seeded shuffle.
pub fn stratified_folds(is_case: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = is_case.len();
    if folds < 2 {
        return Err(Error::usage(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::Stratification(format!("{folds} folds requested for {n} individuals")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<usize> = (0..n).filter(|&i| is_case[i]).collect();
    let mut controls: Vec<usize> = (0..n).filter(|&i| !is_case[i]).collect();
    cases.shuffle(&mut rng);
    controls.shuffle(&mut rng);
    let mut assign = vec![0usize; n];
    for (slot, &i) in cases.iter().chain(&controls).enumerate() {
        assign[i] = slot % folds;
    }
    for f in 0..folds {
        let train_cases = (0..n).filter(|&i| assign[i] != f && is_case[i]).count();
        let train_controls = (0..n).filter(|&i| assign[i] != f && !is_case[i]).count();
        if train_cases == 0 || train_controls == 0 {
            return Err(Error::Stratification(format!(
                "training part of fold {f} lacks {}",
                if train_cases == 0 { "cases" } else { "controls" }
            )));
        }
    }
    Ok(assign)
}

struct FoldResult<S> {
    /// Held-out scores for models of size 1..=path length.
    held_out: Vec<Vec<S>>,
    held_out_labels: Vec<bool>,
}

impl<S: Scalar> FoldResult<S> {
    fn scores_at(&self, k: usize) -> &[S] {
        let k = k.min(self.held_out.len());
        &self.held_out[k - 1]
    }

    fn has_both_classes(&self) -> bool {
        self.held_out_labels.iter().any(|&c| c) && self.held_out_labels.iter().any(|&c| !c)
    }
}

fn run_fold<S: Scalar, C: AsRef<[u8]> + Sync>(
    columns: &[C],
    is_case: &[bool],
    assign: &[usize],
    fold: usize,
    max_k: usize,
    min_gain: S,
    alpha: S,
) -> FoldResult<S> {
    let n = is_case.len();
    let train: Vec<usize> = (0..n).filter(|&i| assign[i] != fold).collect();
    let test: Vec<usize> = (0..n).filter(|&i| assign[i] == fold).collect();
    let train_cols: Vec<Vec<u8>> = columns.iter().map(|c| train.iter().map(|&i| c.as_ref()[i]).collect()).collect();
    let train_labels: Vec<bool> = train.iter().map(|&i| is_case[i]).collect();
    let path = greedy_path(&train_cols, &train_labels, max_k, min_gain, alpha);

    let held_out = (1..=path.len())
        .map(|k| {
            let cols: Vec<&[u8]> = path[..k].iter().map(|&(j, _)| columns[j].as_ref()).collect();
            let table = LrTable::from_counts(Vec::new(), alpha, tally(&cols, is_case, train.iter().copied()));
            table.score_columns(&cols, test.iter().copied())
        })
        .collect();
    FoldResult { held_out, held_out_labels: test.iter().map(|&i| is_case[i]).collect() }
}

/// Candidate loci for a model fitted on a subset of individuals.
pub(crate) trait CandidateSource<S>: Sync {
    /// Candidates built from the rows in `train` only, plus any
    /// pseudo-variants they reference.
    fn candidates(&self, cohort: &Cohort, train: &[usize]) -> Result<(Vec<Locus>, Vec<PseudoVariant<S>>)>;
}

struct FixedCandidates<'a>(&'a [Locus]);

impl<S> CandidateSource<S> for FixedCandidates<'_> {
    fn candidates(&self, _: &Cohort, _: &[usize]) -> Result<(Vec<Locus>, Vec<PseudoVariant<S>>)> {
        Ok((self.0.to_vec(), Vec::new()))
    }
}

fn cv_over_source<S: Scalar>(
    cohort: &Cohort,
    source: &dyn CandidateSource<S>,
    folds: usize,
    max_k: usize,
    min_gain: S,
    alpha: S,
    seed: u64,
) -> Result<Vec<CvPoint<S>>> {
    let is_case = cohort.labels();
    let assign = stratified_folds(&is_case, folds, seed)?;
    let results: Vec<FoldResult<S>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..is_case.len()).filter(|&i| assign[i] != f).collect();
            let (candidates, _) = source.candidates(cohort, &train)?;
            if candidates.is_empty() {
                return Err(Error::usage("forward selection needs at least one candidate locus"));
            }
            let columns = resolve_columns(cohort, &candidates)?;
            Ok(run_fold(&columns, &is_case, &assign, f, max_k, min_gain, alpha))
        })
        .collect::<Result<_>>()?;
    let longest = results.iter().map(|r| r.held_out.len()).max().unwrap_or(0);
    let scorable: Vec<&FoldResult<S>> = results.iter().filter(|r| r.has_both_classes()).collect();

    (1..=longest)
        .map(|k| {
            let mean = if scorable.is_empty() {
                // Held-out sets too small to hold both classes: pool them.
                let mut scores = Vec::new();
                let mut labels = Vec::new();
                for r in &results {
                    scores.extend_from_slice(r.scores_at(k));
                    labels.extend_from_slice(&r.held_out_labels);
                }
                let (c, d) = split_by_label(&scores, &labels);
                auc(&c, &d)?
            } else {
                let mut total = S::zero();
                for r in &scorable {
                    let (c, d) = split_by_label(r.scores_at(k), &r.held_out_labels);
                    total = total + auc(&c, &d)?;
                }
                total / S::from_count(scorable.len() as u64)
            };
            Ok(CvPoint { k, auc: mean })
        })
        .collect()
}

/// Mean held-out AUC by model size, re-running forward selection inside
/// each stratified fold.
///
/// A fold whose path is shorter than `k` contributes its largest model.
pub fn cross_validate_path<S: Scalar>(
    cohort: &Cohort,
    candidates: &[Locus],
    folds: usize,
    max_k: usize,
    min_gain: S,
    alpha: S,
    seed: u64,
) -> Result<Vec<CvPoint<S>>> {
    check_selection_inputs(cohort, candidates, max_k, min_gain, alpha)?;
    resolve_columns(cohort, candidates)?;
    cv_over_source(cohort, &FixedCandidates(candidates), folds, max_k, min_gain, alpha, seed)
}

/// Smallest `k` with maximal mean CV AUC.
pub fn choose_k<S: Scalar>(cv: &[CvPoint<S>]) -> Option<usize> {
    let mut best: Option<CvPoint<S>> = None;
    for p in cv {
        if best.is_none_or(|b| p.auc > b.auc) {
            best = Some(*p);
        }
    }
    best.map(|b| b.k)
}

/// Full fit: candidates from all individuals, forward selection path,
/// per-fold rebuilt candidates for cross-validation, final table.
pub(crate) fn fit_with_source<S: Scalar>(
    cohort: &Cohort,
    source: &dyn CandidateSource<S>,
    config: &FitConfig<S>,
) -> Result<PredictionModel<S>> {
    cohort.require_both_classes()?;
    let all: Vec<usize> = (0..cohort.n_individuals()).collect();
    let (candidates, pseudo_variants) = source.candidates(cohort, &all)?;
    let max_k = config.resolved_max_k(candidates.len());
    check_selection_inputs(cohort, &candidates, max_k.max(1), config.min_gain, config.alpha)?;
    let columns = resolve_columns(cohort, &candidates)?;
    let is_case = cohort.labels();

    let path = greedy_path(&columns, &is_case, max_k, config.min_gain, config.alpha);
    let mut cv = cv_over_source(cohort, source, config.folds, max_k, config.min_gain, config.alpha, config.seed)?;
    cv.truncate(path.len());
    let chosen_k = choose_k(&cv).unwrap_or(1);

    let loci: Vec<Locus> = path[..chosen_k].iter().map(|&(j, _)| candidates[j].clone()).collect();
    let lr_table = estimate_lr_table(cohort, &loci, config.alpha)?;
    let scores = score_individuals(&lr_table, cohort)?;
    let (c, d) = split_by_label(&scores, &is_case);
    let train_auc = auc(&c, &d)?;

    Ok(PredictionModel {
        loci,
        pseudo_variants,
        alpha: config.alpha,
        chosen_k,
        train_auc,
        lr_table,
        cv_auc_by_size: cv,
        seed: config.seed,
        config: config.clone(),
    })
}

/// FROC: forward selection with cross-validated model size.
pub fn fit_froc<S: Scalar>(cohort: &Cohort, candidates: &[Locus], config: &FitConfig<S>) -> Result<PredictionModel<S>> {
    fit_with_source(cohort, &FixedCandidates(candidates), config)
}

/// Scores `test` with the model's table and returns its AUC and ROC curve.
pub fn evaluate_model<S: Scalar>(model: &PredictionModel<S>, test: &Cohort) -> Result<(S, RocCurve<S>)> {
    test.require_both_classes()?;
    let scores = score_individuals(&model.lr_table, test)?;
    let (c, d) = split_by_label(&scores, &test.labels());
    let curve = roc_points(&c, &d)?;
    Ok((curve.auc, curve))
}
