//! Case-control genotype cohorts: representation, genotype-TSV I/O, minor
//! allele frequencies and the rare/common variant partition.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RARE_THRESHOLD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phenotype {
    Control,
    Case,
}

impl Phenotype {
    pub fn is_case(self) -> bool {
        matches!(self, Phenotype::Case)
    }

    pub fn code(self) -> u8 {
        match self {
            Phenotype::Control => 0,
            Phenotype::Case => 1,
        }
    }

    /// Swaps case and control.
    pub fn flipped(self) -> Self {
        match self {
            Phenotype::Control => Phenotype::Case,
            Phenotype::Case => Phenotype::Control,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndividualRecord {
    pub id: String,
    pub phenotype: Phenotype,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantClass {
    Rare,
    Common,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantMeta {
    pub id: String,
    pub maf: f64,
    pub class: VariantClass,
}

/// Disjoint rare/common split of a cohort's variants, as column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VariantPartition {
    pub rare: Vec<usize>,
    pub common: Vec<usize>,
}

/// Individuals x variants matrix of minor-allele counts with binary labels.
///
/// Genotypes are stored column-major: `column(j)[i]` is the code of
/// individual `i` at variant `j`. Every column is oriented so that it counts
/// the minor allele (maf <= 0.5). Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    individuals: Vec<IndividualRecord>,
    variants: Vec<VariantMeta>,
    columns: Vec<Vec<u8>>,
    rare_threshold: f64,
}

impl Cohort {
    /// Builds a cohort, flipping any column whose allele sum exceeds half the
    /// alleles and computing per-variant MAF and class.
    pub fn new(
        individuals: Vec<IndividualRecord>,
        variant_ids: Vec<String>,
        mut columns: Vec<Vec<u8>>,
        rare_threshold: f64,
    ) -> Result<Self> {
        check_threshold(rare_threshold)?;
        if variant_ids.len() != columns.len() {
            return Err(Error::data(format!(
                "{} variant ids but {} genotype columns",
                variant_ids.len(),
                columns.len()
            )));
        }
        let n = individuals.len();
        let mut seen = HashSet::with_capacity(variant_ids.len());
        for (id, col) in variant_ids.iter().zip(&columns) {
            if !seen.insert(id.as_str()) {
                return Err(Error::data(format!("duplicate variant id {id:?}")));
            }
            if col.len() != n {
                return Err(Error::data(format!("variant {id:?} has {} codes for {n} individuals", col.len())));
            }
            if let Some(bad) = col.iter().find(|&&g| g > 2) {
                return Err(Error::data(format!("variant {id:?} has genotype code {bad}")));
            }
        }
        let mut seen_ind = HashSet::with_capacity(n);
        for ind in &individuals {
            if !seen_ind.insert(ind.id.as_str()) {
                return Err(Error::data(format!("duplicate individual id {:?}", ind.id)));
            }
        }

        let variants = variant_ids
            .into_iter()
            .zip(columns.iter_mut())
            .map(|(id, col)| {
                let maf = orient_minor(col);
                VariantMeta { id, maf, class: class_of(maf, rare_threshold) }
            })
            .collect();

        Ok(Cohort { individuals, variants, columns, rare_threshold })
    }

    pub fn individuals(&self) -> &[IndividualRecord] {
        &self.individuals
    }

    pub fn variants(&self) -> &[VariantMeta] {
        &self.variants
    }

    pub fn n_individuals(&self) -> usize {
        self.individuals.len()
    }

    pub fn n_variants(&self) -> usize {
        self.variants.len()
    }

    pub fn rare_threshold(&self) -> f64 {
        self.rare_threshold
    }

    pub fn column(&self, variant: usize) -> &[u8] {
        &self.columns[variant]
    }

    pub fn columns(&self) -> &[Vec<u8>] {
        &self.columns
    }

    pub fn variant_index(&self, id: &str) -> Option<usize> {
        self.variants.iter().position(|v| v.id == id)
    }

    /// Genotype codes of one individual across all variants.
    pub fn row(&self, individual: usize) -> Vec<u8> {
        self.columns.iter().map(|c| c[individual]).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.individuals.iter().map(|i| i.phenotype.is_case()).collect()
    }

    pub fn n_cases(&self) -> usize {
        self.individuals.iter().filter(|i| i.phenotype.is_case()).count()
    }

    pub fn n_controls(&self) -> usize {
        self.n_individuals() - self.n_cases()
    }

    /// Fails unless both phenotype classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        if self.n_cases() == 0 || self.n_controls() == 0 {
            return Err(Error::data(format!(
                "cohort needs at least one case and one control (cases = {}, controls = {})",
                self.n_cases(),
                self.n_controls()
            )));
        }
        Ok(())
    }

    /// Same genotypes with new phenotype labels.
    pub fn with_phenotypes(&self, phenotypes: &[Phenotype]) -> Result<Cohort> {
        if phenotypes.len() != self.n_individuals() {
            return Err(Error::usage("phenotype count does not match individuals"));
        }
        let mut out = self.clone();
        for (ind, &p) in out.individuals.iter_mut().zip(phenotypes) {
            ind.phenotype = p;
        }
        Ok(out)
    }

    /// Subset of individuals (in the given order). Variant metadata and column
    /// orientation are carried over from `self` unchanged.
    pub fn select_individuals(&self, rows: &[usize]) -> Cohort {
        Cohort {
            individuals: rows.iter().map(|&i| self.individuals[i].clone()).collect(),
            variants: self.variants.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
            rare_threshold: self.rare_threshold,
        }
    }

    /// Restricts the cohort to the given variant columns, preserving their
    /// order in `variants`.
    pub fn select_variants(&self, variants: &[usize]) -> Cohort {
        Cohort {
            individuals: self.individuals.clone(),
            variants: variants.iter().map(|&j| self.variants[j].clone()).collect(),
            columns: variants.iter().map(|&j| self.columns[j].clone()).collect(),
            rare_threshold: self.rare_threshold,
        }
    }

    /// Restricts the cohort to variants with the given ids, in the given order.
    pub fn select_variant_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Cohort> {
        let idx = ids
            .iter()
            .map(|id| self.variant_index(id.as_ref()).ok_or_else(|| Error::MissingVariant(id.as_ref().to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_variants(&idx))
    }

    /// Writes the genotype-TSV representation.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("#id\tphenotype");
        for v in &self.variants {
            out.push('\t');
            out.push_str(&v.id);
        }
        out.push('\n');
        for (i, ind) in self.individuals.iter().enumerate() {
            let _ = write!(out, "{}\t{}", ind.id, ind.phenotype.code());
            for col in &self.columns {
                out.push('\t');
                out.push(char::from(b'0' + col[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 0.5) {
        return Err(Error::usage(format!("rare threshold {t} outside (0, 0.5]")));
    }
    Ok(())
}

fn class_of(maf: f64, rare_threshold: f64) -> VariantClass {
    if maf < rare_threshold {
        VariantClass::Rare
    } else {
        VariantClass::Common
    }
}

/// Recodes `g -> 2 - g` when the column carries more than half the alleles;
/// returns the resulting minor allele frequency.
fn orient_minor(col: &mut [u8]) -> f64 {
    if col.is_empty() {
        return 0.0;
    }
    let alleles = 2 * col.len() as u64;
    let mut sum: u64 = col.iter().map(|&g| g as u64).sum();
    if 2 * sum > alleles {
        for g in col.iter_mut() {
            *g = 2 - *g;
        }
        sum = alleles - sum;
    }
    sum as f64 / alleles as f64
}

/// Parses genotype-TSV text. `source` is used only in error messages.
pub fn parse_cohort(text: &str, source: &Path, rare_threshold: f64) -> Result<Cohort> {
    let perr = |line: usize, message: String| Error::Parse { path: source.to_path_buf(), line, message };
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));

    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let head: Vec<&str> = header.split('\t').collect();
    if head.len() < 2 || head[0] != "#id" || head[1] != "phenotype" {
        return Err(perr(1, "header must start with `#id<TAB>phenotype`".into()));
    }
    let variant_ids: Vec<String> = head[2..].iter().map(|s| s.to_string()).collect();
    let n_fields = head.len();

    let mut individuals = Vec::new();
    let mut columns: Vec<Vec<u8>> = vec![Vec::new(); variant_ids.len()];
    let mut missing = 0usize;
    let mut rest = lines.peekable();
    while let Some((lineno, line)) = rest.next() {
        if line.is_empty() && rest.peek().is_none() {
            break;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != n_fields {
            return Err(perr(lineno, format!("expected {n_fields} fields, found {}", fields.len())));
        }
        let id = fields[0].to_string();
        let phenotype = match fields[1] {
            "0" => Phenotype::Control,
            "1" => Phenotype::Case,
            other => {
                return Err(Error::data(format!(
                    "line {lineno}: individual {id:?} has phenotype {other:?} (expected 0 or 1)"
                )))
            }
        };
        for (j, f) in fields[2..].iter().enumerate() {
            let g = match *f {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                "." => {
                    missing += 1;
                    0
                }
                other => {
                    return Err(Error::data(format!(
                        "line {lineno}: individual {id:?}, variant {:?}: genotype code {other:?} not in {{0,1,2,.}}",
                        variant_ids[j]
                    )))
                }
            };
            columns[j].push(g);
        }
        individuals.push(IndividualRecord { id, phenotype });
    }
    if missing > 0 {
        warn!("{}: {missing} missing genotype(s) imputed to 0", source.display());
    }
    let cohort = Cohort::new(individuals, variant_ids, columns, rare_threshold)?;
    cohort.require_both_classes()?;
    Ok(cohort)
}

/// Loads a genotype-TSV cohort file.
pub fn load_cohort(path: &Path, rare_threshold: f64) -> Result<Cohort> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cohort(&text, path, rare_threshold)
}

/// Splits variants into rare (`maf < rare_threshold`) and common.
pub fn classify_variants(cohort: &Cohort, rare_threshold: f64) -> Result<VariantPartition> {
    check_threshold(rare_threshold)?;
    let mut part = VariantPartition::default();
    for (j, v) in cohort.variants().iter().enumerate() {
        match class_of(v.maf, rare_threshold) {
            VariantClass::Rare => part.rare.push(j),
            VariantClass::Common => part.common.push(j),
        }
    }
    Ok(part)
}

/// Keeps every rare variant and a seeded uniform subset of
/// `ceil(keep_fraction * #common)` common variants, in original column order.
pub fn drop_common_variants(cohort: &Cohort, keep_fraction: f64, seed: u64) -> Result<Cohort> {
    if !(0.0..=1.0).contains(&keep_fraction) {
        return Err(Error::usage(format!("keep fraction {keep_fraction} outside [0, 1]")));
    }
    let part = classify_variants(cohort, cohort.rare_threshold())?;
    let n_common = part.common.len();
    let n_keep = ((keep_fraction * n_common as f64).ceil() as usize).min(n_common);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; cohort.n_variants()];
    for j in &part.rare {
        keep[*j] = true;
    }
    for k in index::sample(&mut rng, n_common, n_keep) {
        keep[part.common[k]] = true;
    }
    let cols: Vec<usize> = (0..cohort.n_variants()).filter(|&j| keep[j]).collect();
    Ok(cohort.select_variants(&cols))
}
