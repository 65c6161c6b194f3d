#![allow(dead_code)]

use croc::{Cohort, IndividualRecord, Phenotype, DEFAULT_RARE_THRESHOLD};
use rand::Rng;

pub fn cohort_from(labels: &[bool], columns: Vec<Vec<u8>>) -> Cohort {
    let individuals = labels
        .iter()
        .enumerate()
        .map(|(i, &case)| IndividualRecord {
            id: format!("s{i}"),
            phenotype: if case { Phenotype::Case } else { Phenotype::Control },
        })
        .collect();
    let ids = (0..columns.len()).map(|j| format!("v{j}")).collect();
    Cohort::new(individuals, ids, columns, DEFAULT_RARE_THRESHOLD).expect("valid cohort")
}

/// Labels with at least one case and one control.
pub fn random_labels<R: Rng>(rng: &mut R, n: usize) -> Vec<bool> {
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    labels[0] = true;
    labels[n - 1] = false;
    labels
}

pub fn binomial_column<R: Rng>(rng: &mut R, n: usize, maf: f64) -> Vec<u8> {
    (0..n).map(|_| rng.random_bool(maf) as u8 + rng.random_bool(maf) as u8).collect()
}

/// Sparse column with fewer than `0.02 n` minor alleles, so it is rare.
pub fn rare_column<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    let max_alleles = ((0.02 * n as f64).ceil() as usize).saturating_sub(1);
    let mut col = vec![0u8; n];
    let alleles = rng.random_range(0..=max_alleles);
    for _ in 0..alleles {
        col[rng.random_range(0..n)] = 1;
    }
    col
}
