//! Synthetic case-control cohorts under an additive logistic disease model.
//!
//! Genotypes are independent Binomial(2, maf) draws per variant. Disease
//! status is Bernoulli(logistic(beta0 + sum beta_j g_j)). Individuals are
//! drawn until the requested numbers of cases and controls are filled.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, IndividualRecord, Phenotype, DEFAULT_RARE_THRESHOLD};
use crate::error::{Error, Result};

pub const MAX_DRAWS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantEffect {
    pub maf: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_cases: usize,
    pub n_controls: usize,
    pub common_variants: Vec<VariantEffect>,
    pub rare_variants: Vec<VariantEffect>,
    pub beta0: f64,
    pub seed: u64,
}

/// Shape parameters for generated variant panels.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelLayout {
    pub n_cases: usize,
    pub n_controls: usize,
    pub n_common: usize,
    pub n_rare: usize,
    pub common_maf: (f64, f64),
    pub rare_maf: (f64, f64),
    /// MAF range of the causal rare variants.
    pub causal_rare_maf: (f64, f64),
    pub causal_common: usize,
    pub common_beta: f64,
    pub causal_rare: usize,
    pub rare_beta: f64,
    /// Approximate population prevalence used to set the intercept.
    pub prevalence: f64,
    /// Seed for the variant layout (MAFs); genotype draws use the spec seed.
    pub layout_seed: u64,
}

impl PanelLayout {
    /// 209 cases and 488 controls over 133 common and 400 rare variants, with
    /// four weak common effects and 100 very rare risk variants.
    pub fn gaw17_like() -> Self {
        PanelLayout {
            n_cases: 209,
            n_controls: 488,
            n_common: 133,
            n_rare: 400,
            common_maf: (0.05, 0.45),
            rare_maf: (0.00072, 0.009),
            causal_rare_maf: (0.00072, 0.004),
            causal_common: 4,
            common_beta: 0.4,
            causal_rare: 100,
            rare_beta: 1.2,
            prevalence: 0.3,
            layout_seed: 17,
        }
    }

    /// Same panel shape with every effect removed.
    pub fn null(n_cases: usize, n_controls: usize) -> Self {
        PanelLayout { n_cases, n_controls, causal_common: 0, causal_rare: 0, ..Self::gaw17_like() }
    }

    pub fn build(&self, seed: u64) -> SimSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.layout_seed);
        let mut draw = |n: usize, causal: usize, beta: f64, maf: (f64, f64), causal_maf: (f64, f64)| {
            (0..n)
                .map(|j| {
                    let (lo, hi) = if j < causal { causal_maf } else { maf };
                    VariantEffect { maf: rng.random_range(lo..hi), beta: if j < causal { beta } else { 0.0 } }
                })
                .collect::<Vec<_>>()
        };
        let common_variants =
            draw(self.n_common, self.causal_common, self.common_beta, self.common_maf, self.common_maf);
        let rare_variants = draw(self.n_rare, self.causal_rare, self.rare_beta, self.rare_maf, self.causal_rare_maf);
        let mean_liability: f64 = common_variants.iter().chain(&rare_variants).map(|v| 2.0 * v.maf * v.beta).sum();
        let logit = (self.prevalence / (1.0 - self.prevalence)).ln();
        SimSpec {
            n_cases: self.n_cases,
            n_controls: self.n_controls,
            common_variants,
            rare_variants,
            beta0: logit - mean_liability,
            seed,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_cases == 0 || self.n_controls == 0 {
            return Err(Error::usage("simulation needs at least one case and one control"));
        }
        for (j, v) in self.common_variants.iter().chain(&self.rare_variants).enumerate() {
            if !(v.maf > 0.0 && v.maf <= 0.5) || !v.beta.is_finite() {
                return Err(Error::usage(format!("variant {j}: maf {} / beta {} invalid", v.maf, v.beta)));
            }
        }
        if let Some(v) = self.rare_variants.iter().find(|v| v.maf >= DEFAULT_RARE_THRESHOLD) {
            return Err(Error::usage(format!("rare variant maf {} not below {DEFAULT_RARE_THRESHOLD}", v.maf)));
        }
        if let Some(v) = self.common_variants.iter().find(|v| v.maf < DEFAULT_RARE_THRESHOLD) {
            return Err(Error::usage(format!("common variant maf {} below {DEFAULT_RARE_THRESHOLD}", v.maf)));
        }
        if !self.beta0.is_finite() {
            return Err(Error::usage("beta0 must be finite"));
        }
        Ok(())
    }

    pub fn variant_ids(&self) -> Vec<String> {
        (1..=self.common_variants.len())
            .map(|j| format!("c{j}"))
            .chain((1..=self.rare_variants.len()).map(|j| format!("r{j}")))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SimSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Copy of the spec with the seed of replicate `index`.
    pub fn for_replicate(&self, index: usize) -> SimSpec {
        SimSpec { seed: derive_seed(self.seed, index as u64), ..self.clone() }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` derived from a base seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Draws one cohort by rejection sampling on disease status.
pub fn simulate_cohort(spec: &SimSpec) -> Result<Cohort> {
    spec.validate()?;
    let effects: Vec<VariantEffect> = spec.common_variants.iter().chain(&spec.rare_variants).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_cases + spec.n_controls;
    let mut columns: Vec<Vec<u8>> = vec![Vec::with_capacity(n); effects.len()];
    let mut individuals = Vec::with_capacity(n);
    let (mut cases, mut controls) = (0usize, 0usize);
    let mut genotype = vec![0u8; effects.len()];
    let mut draws = 0u64;
    while cases < spec.n_cases || controls < spec.n_controls {
        if draws >= MAX_DRAWS {
            return Err(Error::Simulation(format!(
                "quota not reached after {MAX_DRAWS} draws ({cases}/{} cases, {controls}/{} controls)",
                spec.n_cases, spec.n_controls
            )));
        }
        draws += 1;
        let mut liability = spec.beta0;
        for (g, v) in genotype.iter_mut().zip(&effects) {
            *g = (rng.random::<f64>() < v.maf) as u8 + (rng.random::<f64>() < v.maf) as u8;
            liability += v.beta * *g as f64;
        }
        let is_case = rng.random::<f64>() < logistic(liability);
        let keep = if is_case { cases < spec.n_cases } else { controls < spec.n_controls };
        if !keep {
            continue;
        }
        if is_case {
            cases += 1
        } else {
            controls += 1
        }
        individuals.push(IndividualRecord {
            id: format!("ind{}", individuals.len() + 1),
            phenotype: if is_case { Phenotype::Case } else { Phenotype::Control },
        });
        for (col, &g) in columns.iter_mut().zip(&genotype) {
            col.push(g);
        }
    }
    Cohort::new(individuals, spec.variant_ids(), columns, DEFAULT_RARE_THRESHOLD)
}

/// Cohort of replicate `index`.
pub fn simulate_replicate(spec: &SimSpec, index: usize) -> Result<Cohort> {
    simulate_cohort(&spec.for_replicate(index))
}

/// Independent replicates `0..n_replicates`, generated in parallel.
pub fn simulate_replicates(spec: &SimSpec, n_replicates: usize) -> Result<Vec<Cohort>> {
    if n_replicates == 0 {
        return Err(Error::usage("need at least one replicate"));
    }
    (0..n_replicates).into_par_iter().map(|i| simulate_replicate(spec, i)).collect()
}
