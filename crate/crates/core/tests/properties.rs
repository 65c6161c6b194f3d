mod common;

use std::path::Path;

use croc::{
    all_variant_loci, classify_variants, drop_common_variants, estimate_lr_table, forward_select, indicator_column,
    multistage_collapse, parse_cohort, stratified_folds, Cohort, DEFAULT_RARE_THRESHOLD,
};
use proptest::prelude::*;

use common::cohort_from;

/// Labels with both classes plus genotype columns over them.
fn cohort_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Cohort> {
    (4..=max_n, 1..=max_m)
        .prop_flat_map(|(n, m)| {
            (prop::collection::vec(any::<bool>(), n), prop::collection::vec(prop::collection::vec(0u8..=2, n), m))
        })
        .prop_map(|(mut labels, columns)| {
            labels[0] = true;
            let last = labels.len() - 1;
            labels[last] = false;
            cohort_from(&labels, columns)
        })
}

/// Mostly-zero columns so a good share of variants are rare.
fn sparse_cohort_strategy() -> impl Strategy<Value = Cohort> {
    (60usize..=150, 1usize..=40)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(
                    prop::collection::vec(prop::sample::select(vec![0u8, 0, 0, 0, 0, 0, 0, 0, 0, 1]), n),
                    m,
                ),
            )
        })
        .prop_map(|(mut labels, columns)| {
            labels[0] = true;
            let last = labels.len() - 1;
            labels[last] = false;
            cohort_from(&labels, columns)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tsv_round_trip(cohort in cohort_strategy(40, 8)) {
        let back = parse_cohort(&cohort.to_tsv(), Path::new("mem"), DEFAULT_RARE_THRESHOLD).unwrap();
        prop_assert_eq!(back, cohort);
    }

    #[test]
    fn codes_count_the_minor_allele(cohort in cohort_strategy(40, 8)) {
        for (j, v) in cohort.variants().iter().enumerate() {
            prop_assert!(v.maf <= 0.5);
            let sum: u64 = cohort.column(j).iter().map(|&g| g as u64).sum();
            prop_assert!(sum <= cohort.n_individuals() as u64);
        }
    }

    #[test]
    fn classes_partition_the_variants(cohort in sparse_cohort_strategy(), thr in 0.001f64..0.5) {
        let part = classify_variants(&cohort, thr).unwrap();
        let mut all: Vec<usize> = part.rare.iter().chain(&part.common).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..cohort.n_variants()).collect::<Vec<_>>());
        for &j in &part.rare {
            prop_assert!(cohort.variants()[j].maf < thr);
        }
        for &j in &part.common {
            prop_assert!(cohort.variants()[j].maf >= thr);
        }
    }

    #[test]
    fn dropout_keeps_rare_variants_and_is_seeded(
        cohort in sparse_cohort_strategy(),
        fraction in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let part = classify_variants(&cohort, cohort.rare_threshold()).unwrap();
        let a = drop_common_variants(&cohort, fraction, seed).unwrap();
        prop_assert_eq!(&a, &drop_common_variants(&cohort, fraction, seed).unwrap());
        let kept: Vec<usize> = a.variants().iter().map(|v| cohort.variant_index(&v.id).unwrap()).collect();
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
        for j in &part.rare {
            prop_assert!(kept.contains(j));
        }
        let commons = kept.len() - part.rare.len();
        prop_assert_eq!(commons, (fraction * part.common.len() as f64).ceil() as usize);
    }

    #[test]
    fn indicator_marks_carriers_of_any_member(cohort in cohort_strategy(30, 6), pick in prop::collection::vec(any::<bool>(), 6)) {
        let members: Vec<String> = cohort
            .variants()
            .iter()
            .zip(&pick)
            .filter(|(_, &p)| p)
            .map(|(v, _)| v.id.clone())
            .collect();
        prop_assume!(!members.is_empty());
        let col = indicator_column(&cohort, &members).unwrap();
        for (i, &x) in col.iter().enumerate() {
            let carrier = members.iter().any(|id| cohort.column(cohort.variant_index(id).unwrap())[i] > 0);
            prop_assert_eq!(x, carrier as u8);
        }
    }

    #[test]
    fn lr_table_counts_everyone_once(cohort in cohort_strategy(60, 4), alpha in 0.0f64..2.0) {
        let table = estimate_lr_table(&cohort, &all_variant_loci(&cohort), alpha).unwrap();
        let cases: u64 = table.entries.iter().map(|e| e.case_count).sum();
        let controls: u64 = table.entries.iter().map(|e| e.control_count).sum();
        prop_assert_eq!(cases as usize, cohort.n_cases());
        prop_assert_eq!(controls as usize, cohort.n_controls());
        prop_assert!(table.entries.windows(2).all(|w| w[0].genotype < w[1].genotype));
        prop_assert_eq!(table.lookup(&vec![9u8; cohort.n_variants()]), 1.0);
    }

    #[test]
    fn forward_path_strictly_improves(cohort in cohort_strategy(80, 10), max_k in 1usize..6) {
        let min_gain = 1e-9;
        let loci = all_variant_loci(&cohort);
        let path = forward_select(&cohort, &loci, max_k, min_gain, 0.5).unwrap();
        prop_assert!(!path.steps.is_empty() && path.steps.len() <= max_k);
        for w in path.steps.windows(2) {
            prop_assert!(w[1].train_auc - w[0].train_auc >= min_gain);
            prop_assert!(w[0].locus != w[1].locus);
        }
        let mut ids: Vec<&str> = path.steps.iter().map(|s| s.locus.id()).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), path.steps.len());
    }

    #[test]
    fn folds_are_balanced(labels in prop::collection::vec(any::<bool>(), 20..200), folds in 2usize..10, seed in any::<u64>()) {
        let cases = labels.iter().filter(|&&c| c).count();
        prop_assume!(cases >= folds && labels.len() - cases >= folds);
        let assign = stratified_folds(&labels, folds, seed).unwrap();
        prop_assert_eq!(&assign, &stratified_folds(&labels, folds, seed).unwrap());
        let per_fold: Vec<usize> = (0..folds)
            .map(|f| assign.iter().zip(&labels).filter(|(&a, &c)| a == f && c).count())
            .collect();
        prop_assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1);
    }

    #[test]
    fn stages_partition_the_rare_pool(cohort in sparse_cohort_strategy()) {
        let rare = classify_variants(&cohort, 0.05).unwrap().rare;
        let stages = multistage_collapse::<f64>(&cohort, &rare, 1e-9).unwrap();
        let mut members: Vec<usize> = stages
            .iter()
            .flat_map(|pv| pv.members.iter().map(|id| cohort.variant_index(id).unwrap()))
            .collect();
        members.sort_unstable();
        prop_assert_eq!(members, rare);
        for (s, pv) in stages.iter().enumerate() {
            prop_assert_eq!(&pv.id, &format!("PV{}", s + 1));
            prop_assert_eq!(pv.stage_auc_path.len(), pv.members.len());
        }
    }
}
