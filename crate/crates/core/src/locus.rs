//! References to predictor columns: observed variants or pseudo-variants
//! re-derived from their rare member variants.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::cohort::Cohort;
use crate::collapse::indicator_column;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Locus {
    Variant { id: String },
    Pseudo { id: String, members: Vec<String> },
}

impl Locus {
    pub fn variant(id: impl Into<String>) -> Self {
        Locus::Variant { id: id.into() }
    }

    pub fn id(&self) -> &str {
        match self {
            Locus::Variant { id } | Locus::Pseudo { id, .. } => id,
        }
    }

    /// Genotype column of this locus in `cohort`. Pseudo-variants yield their
    /// 0/1 carrier indicator.
    pub fn column<'a>(&self, cohort: &'a Cohort) -> Result<Cow<'a, [u8]>> {
        match self {
            Locus::Variant { id } => cohort
                .variant_index(id)
                .map(|j| Cow::Borrowed(cohort.column(j)))
                .ok_or_else(|| Error::MissingVariant(id.clone())),
            Locus::Pseudo { members, .. } => indicator_column(cohort, members).map(Cow::Owned),
        }
    }
}

/// Loci for every variant column of `cohort`, in column order.
pub fn variant_loci(cohort: &Cohort, columns: &[usize]) -> Vec<Locus> {
    columns.iter().map(|&j| Locus::variant(cohort.variants()[j].id.clone())).collect()
}

pub fn all_variant_loci(cohort: &Cohort) -> Vec<Locus> {
    cohort.variants().iter().map(|v| Locus::variant(v.id.clone())).collect()
}

pub(crate) fn resolve_columns<'a>(cohort: &'a Cohort, loci: &[Locus]) -> Result<Vec<Cow<'a, [u8]>>> {
    loci.iter().map(|l| l.column(cohort)).collect()
}
