//! Multistage collapsing of rare variants into pseudo-common carrier
//! indicators, and the CROC fit built on top of forward selection.
//!
//! A stage starts from the rare variant whose carrier indicator has the
//! highest AUC, then keeps merging the pool variant that raises the
//! indicator AUC the most until no merge gains at least `min_gain`. Stages
//! repeat on the leftover pool until it is empty, so every rare variant ends
//! up in exactly one pseudo-variant. Protective variants are not flipped;
//! they tend to form their own stages, and the likelihood-ratio table later
//! assigns their carriers a ratio below one.

use serde::{Deserialize, Serialize};

use crate::cohort::{classify_variants, Cohort};
use crate::error::{Error, Result};
use crate::locus::{variant_loci, Locus};
use crate::roc::{auc_from_twice_u, twice_u_from_groups};
use crate::scalar::Scalar;
use crate::selection::{fit_with_source, CandidateSource, FitConfig, PredictionModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoVariant<S> {
    pub id: String,
    /// Member variant ids in the order they were merged.
    pub members: Vec<String>,
    /// Indicator AUC after each merge, starting with the seed variant.
    pub stage_auc_path: Vec<S>,
}

impl<S> PseudoVariant<S> {
    pub fn locus(&self) -> Locus {
        Locus::Pseudo { id: self.id.clone(), members: self.members.clone() }
    }
}

/// 1 if any member position of `row` carries a minor allele, else 0.
pub fn indicator(row: &[u8], members: &[usize]) -> Result<u8> {
    if members.is_empty() {
        return Err(Error::usage("indicator needs at least one member variant"));
    }
    let mut carrier = false;
    for &m in members {
        let code = row
            .get(m)
            .ok_or_else(|| Error::usage(format!("member {m} outside genotype row of length {}", row.len())))?;
        carrier |= *code > 0;
    }
    Ok(carrier as u8)
}

/// Carrier indicator column over all individuals for the given member ids.
pub fn indicator_column<S: AsRef<str>>(cohort: &Cohort, members: &[S]) -> Result<Vec<u8>> {
    if members.is_empty() {
        return Err(Error::usage("pseudo-variant has no members"));
    }
    let mut out = vec![0u8; cohort.n_individuals()];
    for m in members {
        let j = cohort.variant_index(m.as_ref()).ok_or_else(|| Error::MissingVariant(m.as_ref().to_string()))?;
        for (o, &g) in out.iter_mut().zip(cohort.column(j)) {
            *o |= (g > 0) as u8;
        }
    }
    Ok(out)
}

/// Indicator AUC with `case_carriers` / `control_carriers` carrying.
fn indicator_auc<S: Scalar>(case_carriers: u64, control_carriers: u64, n_cases: u64, n_controls: u64) -> S {
    let twice_u = twice_u_from_groups([
        (n_cases - case_carriers, n_controls - control_carriers),
        (case_carriers, control_carriers),
    ]);
    auc_from_twice_u(twice_u, n_cases, n_controls)
}

struct StageInput<'a> {
    pool: &'a [usize],
    carriers: Vec<Vec<u32>>,
    is_case: Vec<bool>,
    n_cases: u64,
    n_controls: u64,
}

impl<'a> StageInput<'a> {
    fn new(cohort: &Cohort, pool: &'a [usize]) -> Self {
        let carriers = pool
            .iter()
            .map(|&j| cohort.column(j).iter().enumerate().filter(|(_, &g)| g > 0).map(|(i, _)| i as u32).collect())
            .collect();
        StageInput {
            pool,
            carriers,
            is_case: cohort.labels(),
            n_cases: cohort.n_cases() as u64,
            n_controls: cohort.n_controls() as u64,
        }
    }

    /// New (case, control) carriers added by pool position `p`.
    fn added(&self, p: usize, carrying: &[bool]) -> (u64, u64) {
        let mut add = (0, 0);
        for &i in &self.carriers[p] {
            if !carrying[i as usize] {
                if self.is_case[i as usize] {
                    add.0 += 1
                } else {
                    add.1 += 1
                }
            }
        }
        add
    }

    /// Greedy stage over the pool positions in `available`; returns merged
    /// positions and the AUC path.
    fn run<S: Scalar>(&self, available: &[usize], min_gain: S) -> (Vec<usize>, Vec<S>) {
        let mut carrying = vec![false; self.is_case.len()];
        let mut counts = (0u64, 0u64);
        let mut left: Vec<usize> = available.to_vec();
        let mut members = Vec::new();
        let mut path: Vec<S> = Vec::new();
        while !left.is_empty() {
            let mut best: Option<(usize, S, (u64, u64))> = None;
            for (slot, &p) in left.iter().enumerate() {
                let (c, d) = self.added(p, &carrying);
                let next = (counts.0 + c, counts.1 + d);
                let value = indicator_auc::<S>(next.0, next.1, self.n_cases, self.n_controls);
                if best.is_none_or(|b| value > b.1) {
                    best = Some((slot, value, next));
                }
            }
            let (slot, value, next) = best.expect("left is nonempty");
            if let Some(&last) = path.last() {
                if value - last < min_gain {
                    break;
                }
            }
            let p = left.remove(slot);
            for &i in &self.carriers[p] {
                carrying[i as usize] = true;
            }
            counts = next;
            members.push(p);
            path.push(value);
        }
        (members, path)
    }
}

fn check_min_gain<S: Scalar>(min_gain: S) -> Result<()> {
    if min_gain.is_nan() || min_gain < S::zero() {
        return Err(Error::usage(format!("min_gain {min_gain} must be >= 0")));
    }
    Ok(())
}

/// One collapsing stage over `rare_pool` (variant column indices).
pub fn collapse_stage<S: Scalar>(cohort: &Cohort, rare_pool: &[usize], min_gain: S) -> Result<PseudoVariant<S>> {
    if rare_pool.is_empty() {
        return Err(Error::usage("collapsing stage needs a nonempty rare pool"));
    }
    check_min_gain(min_gain)?;
    cohort.require_both_classes()?;
    let input = StageInput::new(cohort, rare_pool);
    let available: Vec<usize> = (0..rare_pool.len()).collect();
    let (members, stage_auc_path) = input.run(&available, min_gain);
    Ok(PseudoVariant {
        id: "PV1".to_string(),
        members: members.iter().map(|&p| cohort.variants()[rare_pool[p]].id.clone()).collect(),
        stage_auc_path,
    })
}

/// Repeats collapsing stages until every variant in `rare_variants` belongs
/// to a pseudo-variant. Pseudo-variants are named `PV1`, `PV2`, ...
pub fn multistage_collapse<S: Scalar>(
    cohort: &Cohort,
    rare_variants: &[usize],
    min_gain: S,
) -> Result<Vec<PseudoVariant<S>>> {
    check_min_gain(min_gain)?;
    if rare_variants.is_empty() {
        return Ok(Vec::new());
    }
    cohort.require_both_classes()?;
    let input = StageInput::new(cohort, rare_variants);
    let mut available: Vec<usize> = (0..rare_variants.len()).collect();
    let mut stages = Vec::new();
    while !available.is_empty() {
        let (members, stage_auc_path) = input.run::<S>(&available, min_gain);
        available.retain(|p| !members.contains(p));
        stages.push(PseudoVariant {
            id: format!("PV{}", stages.len() + 1),
            members: members.iter().map(|&p| cohort.variants()[input.pool[p]].id.clone()).collect(),
            stage_auc_path,
        });
    }
    Ok(stages)
}

/// Common variants as-is plus pseudo-variants collapsed from the rare pool
/// on the training rows only.
struct CollapsedCandidates<S> {
    common: Vec<Locus>,
    rare: Vec<usize>,
    min_gain: S,
}

impl<S: Scalar> CandidateSource<S> for CollapsedCandidates<S> {
    fn candidates(&self, cohort: &Cohort, train: &[usize]) -> Result<(Vec<Locus>, Vec<PseudoVariant<S>>)> {
        let pseudo = if train.len() == cohort.n_individuals() {
            multistage_collapse(cohort, &self.rare, self.min_gain)?
        } else {
            multistage_collapse(&cohort.select_individuals(train), &self.rare, self.min_gain)?
        };
        let mut loci = self.common.clone();
        loci.extend(pseudo.iter().map(PseudoVariant::locus));
        Ok((loci, pseudo))
    }
}

/// CROC: collapse the rare variants of `cohort`, then run forward selection
/// with cross-validation over common variants plus pseudo-variants.
///
/// Rare/common classes use `config.rare_threshold` on the full cohort.
/// Inside cross-validation the collapsing is redone on each fold's training
/// part, so held-out AUCs never see the rows the pseudo-variants were built
/// from.
pub fn fit_croc<S: Scalar>(cohort: &Cohort, config: &FitConfig<S>) -> Result<PredictionModel<S>> {
    let partition = classify_variants(cohort, config.rare_threshold)?;
    let source = CollapsedCandidates {
        common: variant_loci(cohort, &partition.common),
        rare: partition.rare,
        min_gain: config.min_gain,
    };
    fit_with_source(cohort, &source, config)
}
