//! Genetic risk prediction from case-control genotypes with empirical
//! likelihood-ratio ROC models.
//!
//! * [`selection`]: forward selection of loci by training AUC with
//!   cross-validated model size (FROC).
//! * [`collapse`]: multistage collapsing of rare variants into carrier
//!   indicators before selection (CROC).
//! * [`roc`], [`lr`]: AUC, ROC curves and likelihood-ratio tables.
//! * [`cohort`], [`simulate`], [`experiment`]: data, synthetic cohorts and
//!   replicate experiments.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod cohort;
pub mod collapse;
pub mod error;
pub mod experiment;
pub mod locus;
pub mod lr;
pub mod roc;
pub mod scalar;
pub mod selection;
pub mod simulate;

pub use cohort::{
    classify_variants, drop_common_variants, load_cohort, parse_cohort, Cohort, IndividualRecord, Phenotype,
    VariantClass, VariantMeta, VariantPartition, DEFAULT_RARE_THRESHOLD,
};
pub use collapse::{collapse_stage, fit_croc, indicator, indicator_column, multistage_collapse, PseudoVariant};
pub use error::{Error, Result};
pub use experiment::{fit_method, run_experiment, run_sweep, ExperimentOutput, ExperimentReport, Method, SweepOutput};
pub use locus::{all_variant_loci, variant_loci, Locus};
pub use lr::{estimate_lr_table, likelihood_ratio, score_individuals, LrEntry, LrTable, DEFAULT_ALPHA};
pub use roc::{auc, auc_oracle, roc_points, split_by_label, RocCurve};
pub use scalar::Scalar;
pub use selection::{
    choose_k, cross_validate_path, evaluate_model, fit_froc, forward_select, stratified_folds, CvPoint, FitConfig,
    ModelPath, PathStep, PredictionModel, DEFAULT_FOLDS, DEFAULT_MIN_GAIN,
};
pub use simulate::{
    derive_seed, simulate_cohort, simulate_replicate, simulate_replicates, PanelLayout, SimSpec, VariantEffect,
};

pub type LrTableF64 = LrTable<f64>;
pub type LrTableF32 = LrTable<f32>;
pub type RocCurveF64 = RocCurve<f64>;
pub type RocCurveF32 = RocCurve<f32>;
pub type ModelPathF64 = ModelPath<f64>;
pub type ModelPathF32 = ModelPath<f32>;
pub type PredictionModelF64 = PredictionModel<f64>;
pub type PredictionModelF32 = PredictionModel<f32>;
pub type PseudoVariantF64 = PseudoVariant<f64>;
pub type PseudoVariantF32 = PseudoVariant<f32>;
pub type FitConfigF64 = FitConfig<f64>;
pub type FitConfigF32 = FitConfig<f32>;
