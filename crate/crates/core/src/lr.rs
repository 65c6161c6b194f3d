//! Empirical likelihood-ratio tables over multilocus genotypes.
//!
//! For a set of K loci every individual falls into the group of its observed
//! multilocus genotype. The likelihood ratio of a group is its frequency among
//! cases divided by its frequency among controls. With additive smoothing
//! `alpha > 0` each cell count gets `alpha` added and each class total gets
//! `alpha * M` added, where `M` is the number of observed genotypes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cohort::Cohort;
use crate::error::{Error, Result};
use crate::locus::{resolve_columns, Locus};
use crate::scalar::{extended, Scalar};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Likelihood ratio of one genotype group.
///
/// With `alpha == 0` a group unseen in controls gets `+inf` and one unseen in
/// cases gets `0`.
pub fn likelihood_ratio<S: Scalar>(
    case_count: u64,
    control_count: u64,
    n_cases: u64,
    n_controls: u64,
    alpha: S,
    n_genotypes: u64,
) -> S {
    let m = S::from_count(n_genotypes);
    let p_case = (S::from_count(case_count) + alpha) / (S::from_count(n_cases) + alpha * m);
    let p_control = (S::from_count(control_count) + alpha) / (S::from_count(n_controls) + alpha * m);
    if p_control.is_zero() {
        if p_case.is_zero() {
            S::one()
        } else {
            S::infinity()
        }
    } else {
        p_case / p_control
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LrEntry<S> {
    pub genotype: Vec<u8>,
    pub case_count: u64,
    pub control_count: u64,
    #[serde(with = "extended")]
    pub lr: S,
}

/// Likelihood ratio per observed multilocus genotype, sorted by genotype.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LrTable<S> {
    pub loci: Vec<Locus>,
    pub alpha: S,
    pub entries: Vec<LrEntry<S>>,
}

pub(crate) type GenotypeCounts = BTreeMap<Vec<u8>, (u64, u64)>;

/// Per-genotype `(cases, controls)` over the given rows.
pub(crate) fn tally<C: AsRef<[u8]>>(
    columns: &[C],
    is_case: &[bool],
    rows: impl IntoIterator<Item = usize>,
) -> GenotypeCounts {
    let mut counts = GenotypeCounts::new();
    for i in rows {
        let key: Vec<u8> = columns.iter().map(|c| c.as_ref()[i]).collect();
        let cell = counts.entry(key).or_insert((0, 0));
        if is_case[i] {
            cell.0 += 1
        } else {
            cell.1 += 1
        }
    }
    counts
}

pub(crate) fn check_alpha<S: Scalar>(alpha: S) -> Result<()> {
    if !(alpha >= S::zero() && alpha.is_finite()) {
        return Err(Error::usage(format!("smoothing alpha {alpha} must be finite and >= 0")));
    }
    Ok(())
}

impl<S: Scalar> LrTable<S> {
    pub(crate) fn from_counts(loci: Vec<Locus>, alpha: S, counts: GenotypeCounts) -> Self {
        let (n_cases, n_controls) = counts.values().fold((0, 0), |(a, b), &(c, d)| (a + c, b + d));
        let m = counts.len() as u64;
        let entries = counts
            .into_iter()
            .map(|(genotype, (case_count, control_count))| LrEntry {
                genotype,
                case_count,
                control_count,
                lr: likelihood_ratio(case_count, control_count, n_cases, n_controls, alpha, m),
            })
            .collect();
        LrTable { loci, alpha, entries }
    }

    /// Number of distinct observed multilocus genotypes.
    pub fn m_k(&self) -> usize {
        self.entries.len()
    }

    pub fn n_cases(&self) -> u64 {
        self.entries.iter().map(|e| e.case_count).sum()
    }

    pub fn n_controls(&self) -> u64 {
        self.entries.iter().map(|e| e.control_count).sum()
    }

    /// Likelihood ratio of `genotype`, or the neutral 1 when unobserved.
    pub fn lookup(&self, genotype: &[u8]) -> S {
        self.entries
            .binary_search_by(|e| e.genotype.as_slice().cmp(genotype))
            .map(|k| self.entries[k].lr)
            .unwrap_or_else(|_| S::one())
    }

    pub(crate) fn score_columns<C: AsRef<[u8]>>(&self, columns: &[C], rows: impl IntoIterator<Item = usize>) -> Vec<S> {
        let mut key = vec![0u8; columns.len()];
        rows.into_iter()
            .map(|i| {
                for (k, c) in key.iter_mut().zip(columns) {
                    *k = c.as_ref()[i];
                }
                self.lookup(&key)
            })
            .collect()
    }
}

/// Fits the likelihood-ratio table of `loci` on `cohort`.
pub fn estimate_lr_table<S: Scalar>(cohort: &Cohort, loci: &[Locus], alpha: S) -> Result<LrTable<S>> {
    if loci.is_empty() {
        return Err(Error::usage("likelihood-ratio table needs at least one locus"));
    }
    check_alpha(alpha)?;
    cohort.require_both_classes()?;
    let columns = resolve_columns(cohort, loci)?;
    let counts = tally(&columns, &cohort.labels(), 0..cohort.n_individuals());
    Ok(LrTable::from_counts(loci.to_vec(), alpha, counts))
}

/// Likelihood-ratio score of every individual, in cohort order.
pub fn score_individuals<S: Scalar>(table: &LrTable<S>, cohort: &Cohort) -> Result<Vec<S>> {
    let columns = resolve_columns(cohort, &table.loci)?;
    Ok(table.score_columns(&columns, 0..cohort.n_individuals()))
}
