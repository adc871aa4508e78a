//! Synthetic compositional reasoning examples.
//!
//! Round 1 samples disjoint base facts and gives each a probability level
//! taken from the scale's medians; the premise verbalizes them. Round 2
//! (two-hop only) pairs base facts into composites. The hypothesis joins two
//! composites, or two base facts for one hop, and its exact probability is
//! verbalized once correctly and once with a distant distractor.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{
    build_choice, DatasetBundle, GeneratedExample, Provenance, Split, Variant, SPLIT_ORDER,
};
use crate::error::{Error, Result};
use crate::factoids::{sample_factoids, Vocab};
use crate::prob_logic::{infer_enumeration, render_formula_nl, Formula, Op, ProbMap};
use crate::seed::{mix_seed, STREAM_PERTURBATION};
use crate::wep_scale::{verbalize, WepScale, DISTRACTOR_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "u32")]
pub enum Hops {
    One,
    Two,
}

impl From<Hops> for u32 {
    fn from(h: Hops) -> u32 {
        match h {
            Hops::One => 1,
            Hops::Two => 2,
        }
    }
}

impl Hops {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Hops::One),
            2 => Ok(Hops::Two),
            other => Err(Error::Validation(format!(
                "hops must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Hops::One => Variant::Reasoning1Hop,
            Hops::Two => Variant::Reasoning2Hop,
        }
    }

    pub fn default_base_facts(self) -> usize {
        match self {
            Hops::One => 3,
            Hops::Two => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PremiseStyle {
    /// Only the base facts are stated.
    BaseOnly,
    /// Round-2 composites are also stated, with the WEP nearest their probability.
    WithIntermediate,
}

impl std::str::FromStr for PremiseStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base-only" => Ok(PremiseStyle::BaseOnly),
            "with-intermediate" => Ok(PremiseStyle::WithIntermediate),
            other => Err(Error::Validation(format!(
                "premise style must be base-only or with-intermediate, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    /// Floor the validation and test shares; train takes the remainder.
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let floor = |f: f64| (n as f64 * f + 1e-9).floor() as usize;
        let validation = floor(self.validation);
        let test = floor(self.test);
        [n - validation - test, validation, test]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenConfig {
    pub hops: Hops,
    pub n_examples: usize,
    pub base_fact_count: usize,
    pub splits: SplitFractions,
    pub seed: u64,
    pub premise_style: PremiseStyle,
    pub allow_shared_round2_atoms: bool,
    /// Require the two hypothesis operands to be different composites. By
    /// default each operand is drawn independently, so a composite may be
    /// combined with itself (for example `X ^ X`, which is always false).
    pub distinct_composites: bool,
}

pub const MIN_EXAMPLES: usize = 10;

impl GenConfig {
    pub fn new(hops: Hops, n_examples: usize, seed: u64) -> Self {
        GenConfig {
            hops,
            n_examples,
            base_fact_count: hops.default_base_facts(),
            splits: SplitFractions::default(),
            seed,
            premise_style: PremiseStyle::BaseOnly,
            allow_shared_round2_atoms: false,
            distinct_composites: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_examples < MIN_EXAMPLES {
            return Err(Error::Validation(format!(
                "n must be at least {MIN_EXAMPLES}, got {}",
                self.n_examples
            )));
        }
        let SplitFractions {
            train,
            validation,
            test,
        } = self.splits;
        if [train, validation, test]
            .iter()
            .any(|f| !(0.0..=1.0).contains(f))
            || (train + validation + test - 1.0).abs() > 1e-6
        {
            return Err(Error::Validation(format!(
                "split fractions {train}/{validation}/{test} must be in [0, 1] and sum to 1"
            )));
        }
        let min_facts = match self.hops {
            Hops::One => 2,
            Hops::Two => 4,
        };
        if self.base_fact_count < min_facts {
            return Err(Error::Validation(format!(
                "{:?}-hop generation needs at least {min_facts} base facts, got {}",
                self.hops, self.base_fact_count
            )));
        }
        Ok(())
    }
}

/// Generates examples for one configuration, scale and vocabulary.
#[derive(Debug, Clone)]
pub struct Generator {
    cfg: GenConfig,
    scale: WepScale,
    vocab: Vocab,
    levels: Vec<f64>,
}

impl Generator {
    pub fn new(cfg: GenConfig, scale: WepScale, vocab: Vocab) -> Result<Self> {
        cfg.validate()?;
        if cfg.base_fact_count > vocab.capacity() {
            return Err(Error::Capacity(format!(
                "{} base facts exceed the vocabulary capacity of {}",
                cfg.base_fact_count,
                vocab.capacity()
            )));
        }
        let levels = scale.distinct_medians();
        Ok(Generator {
            cfg,
            scale,
            vocab,
            levels,
        })
    }

    pub fn with_defaults(cfg: GenConfig) -> Result<Self> {
        Generator::new(cfg, WepScale::default(), Vocab::default())
    }

    pub fn config(&self) -> &GenConfig {
        &self.cfg
    }

    pub fn scale(&self) -> &WepScale {
        &self.scale
    }

    pub fn example_seed(&self, index: usize) -> u64 {
        mix_seed(self.cfg.seed, index as u64)
    }

    pub fn example_id(&self, index: usize) -> String {
        format!("{}-{index:06}", self.cfg.hops.variant())
    }

    /// The `index`-th example; independent of every other index.
    pub fn example(&self, index: usize) -> Result<GeneratedExample> {
        let seed = self.example_seed(index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.generate_example(self.example_id(index), seed, &mut rng)
    }

    pub fn generate_example<R: Rng + ?Sized>(
        &self,
        id: String,
        seed: u64,
        rng: &mut R,
    ) -> Result<GeneratedExample> {
        let n = self.cfg.base_fact_count;
        let facts = sample_factoids(n, &self.vocab, rng)?;
        let texts: Vec<&str> = facts.iter().map(|f| f.text.as_str()).collect();
        let probs: Vec<f64> = (0..n)
            .map(|_| *self.levels.choose(rng).expect("scale has levels"))
            .collect();
        let prob_map = ProbMap::from_slice(&probs)?;

        let mut premise = Vec::with_capacity(n + n / 2);
        for (text, &p) in texts.iter().zip(&probs) {
            premise.push(verbalize(self.scale.nearest_wep(p, rng)?, text)?);
        }

        let formula = match self.cfg.hops {
            Hops::One => {
                let mut atoms: Vec<u32> = (0..n as u32).collect();
                atoms.shuffle(rng);
                Formula::node(
                    random_op(rng),
                    Formula::atom(atoms[0]),
                    Formula::atom(atoms[1]),
                )
            }
            Hops::Two => {
                let composites = self.round_two(n, rng);
                if self.cfg.premise_style == PremiseStyle::WithIntermediate {
                    for c in &composites {
                        let p = infer_enumeration(c, &prob_map)?;
                        let text = render_formula_nl(c, &texts)?;
                        premise.push(verbalize(self.scale.nearest_wep(p, rng)?, &text)?);
                    }
                }
                let (a, b) = if self.cfg.distinct_composites {
                    let mut order: Vec<usize> = (0..composites.len()).collect();
                    order.shuffle(rng);
                    (order[0], order[1])
                } else {
                    (
                        rng.gen_range(0..composites.len()),
                        rng.gen_range(0..composites.len()),
                    )
                };
                Formula::node(random_op(rng), composites[a].clone(), composites[b].clone())
            }
        };

        let p_true = infer_enumeration(&formula, &prob_map)?;
        let event_text = render_formula_nl(&formula, &texts)?;
        let premise = premise.join(" ");
        let choice = build_choice(&self.scale, &premise, &event_text, p_true, rng)?;

        Ok(GeneratedExample {
            id,
            variant: self.cfg.hops.variant(),
            premise,
            event_text,
            p_true,
            valid_wep: choice.valid_wep,
            invalid_wep: choice.invalid_wep,
            candidates: choice.candidates,
            label: choice.label,
            provenance: Provenance {
                formula: formula.to_string(),
                probabilities: probs,
                seed,
                raw_p: None,
            },
        })
    }

    // Composites over base atoms. Disjoint pairing covers each atom at most
    // once; the shared variant draws distinct unordered pairs independently.
    fn round_two<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Formula> {
        let mut atoms: Vec<u32> = (0..n as u32).collect();
        let pairs: Vec<(u32, u32)> = if self.cfg.allow_shared_round2_atoms {
            let mut pairs: Vec<(u32, u32)> = Vec::new();
            while pairs.len() < n / 2 {
                atoms.shuffle(rng);
                let (a, b) = (atoms[0].min(atoms[1]), atoms[0].max(atoms[1]));
                if !pairs.contains(&(a, b)) {
                    pairs.push((a, b));
                }
            }
            pairs
        } else {
            atoms.shuffle(rng);
            atoms.chunks_exact(2).map(|c| (c[0], c[1])).collect()
        };
        pairs
            .into_iter()
            .map(|(a, b)| Formula::node(random_op(rng), Formula::atom(a), Formula::atom(b)))
            .collect()
    }

    /// All examples, split by index into train/validation/test.
    pub fn generate_dataset(&self) -> Result<DatasetBundle> {
        let records: Vec<GeneratedExample> = (0..self.cfg.n_examples)
            .into_par_iter()
            .map(|i| self.example(i))
            .collect::<Result<_>>()?;
        let counts = self.cfg.splits.counts(records.len());
        let mut it = records.into_iter();
        let splits = SPLIT_ORDER
            .iter()
            .zip(counts)
            .map(|(name, c)| Split {
                name: (*name).to_owned(),
                records: it.by_ref().take(c).collect(),
            })
            .collect();
        Ok(DatasetBundle { splits })
    }

    /// Re-run each example under random perturbations of its base probabilities.
    pub fn perturbation_analysis(&self, delta: f64, trials: usize) -> Result<StabilityReport> {
        check_perturbation(delta, trials)?;
        let stable: Vec<bool> = (0..self.cfg.n_examples)
            .into_par_iter()
            .map(|i| {
                let ex = self.example(i)?;
                let f = crate::prob_logic::parse_formula(&ex.provenance.formula)?;
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix_seed(ex.provenance.seed, STREAM_PERTURBATION));
                is_stable(&f, &ex.provenance.probabilities, delta, trials, &mut rng)
            })
            .collect::<Result<_>>()?;
        let n_stable = stable.iter().filter(|&&s| s).count();
        Ok(StabilityReport {
            n_examples: stable.len(),
            delta,
            threshold: DISTRACTOR_THRESHOLD,
            fraction_stable: n_stable as f64 / stable.len() as f64,
            trials_per_example: trials,
        })
    }
}

fn random_op<R: Rng + ?Sized>(rng: &mut R) -> Op {
    *Op::ALL.choose(rng).expect("non-empty")
}

fn check_perturbation(delta: f64, trials: usize) -> Result<()> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::Validation(format!("delta {delta} outside [0, 0.5]")));
    }
    if trials == 0 {
        return Err(Error::Validation("at least one trial is required".into()));
    }
    Ok(())
}

/// Whether every trial's perturbed probability stays within the distractor
/// threshold of the unperturbed one. Each trial shifts every base probability
/// by an independent uniform offset in `[-delta, delta]`, clamped to [0, 1].
pub fn is_stable<R: Rng + ?Sized>(
    formula: &Formula,
    probs: &[f64],
    delta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    check_perturbation(delta, trials)?;
    let base = infer_enumeration(formula, &ProbMap::from_slice(probs)?)?;
    let mut stable = true;
    for _ in 0..trials {
        let shifted: Vec<f64> = probs
            .iter()
            .map(|&p| {
                let off = if delta > 0.0 {
                    rng.gen_range(-delta..=delta)
                } else {
                    0.0
                };
                (p + off).clamp(0.0, 1.0)
            })
            .collect();
        let moved = infer_enumeration(formula, &ProbMap::from_slice(&shifted)?)?;
        stable &= (moved - base).abs() < DISTRACTOR_THRESHOLD;
    }
    Ok(stable)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n_examples: usize,
    pub delta: f64,
    pub threshold: f64,
    pub fraction_stable: f64,
    pub trials_per_example: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WepFrequency {
    pub wep: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitFrequency {
    pub split: String,
    pub total: usize,
    /// Descending by count, then name.
    pub entries: Vec<WepFrequency>,
}

impl SplitFrequency {
    pub fn percent(&self, wep: &str) -> f64 {
        self.entries
            .iter()
            .find(|e| e.wep == wep)
            .map_or(0.0, |e| e.percent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub splits: Vec<SplitFrequency>,
}

impl FrequencyReport {
    pub fn split(&self, name: &str) -> Option<&SplitFrequency> {
        self.splits.iter().find(|s| s.split == name)
    }
}

/// Frequency of each valid (correct-answer) WEP, per split.
pub fn dataset_stats(bundle: &DatasetBundle) -> FrequencyReport {
    let splits = bundle
        .splits
        .iter()
        .map(|s| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in &s.records {
                *counts.entry(r.valid_wep.as_str()).or_default() += 1;
            }
            let total = s.records.len();
            let mut entries: Vec<WepFrequency> = counts
                .into_iter()
                .map(|(wep, count)| WepFrequency {
                    wep: wep.to_owned(),
                    count,
                    percent: 100.0 * count as f64 / total as f64,
                })
                .collect();
            entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.wep.cmp(&b.wep)));
            SplitFrequency {
                split: s.name.clone(),
                total,
                entries,
            }
        })
        .collect();
    FrequencyReport { splits }
}
