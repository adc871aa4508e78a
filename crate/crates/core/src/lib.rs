//! Toolkit for words-of-estimative-probability (WEP) benchmarks.
//!
//! - [`wep_scale`]: the probability scale, nearest-word lookup, distractors and templates.
//! - [`prob_logic`]: AND/OR/XOR formulas over independent atoms with exact inference.
//! - [`factoids`]: disjoint subject/verb/object facts.
//! - [`generator`]: one- and two-hop reasoning datasets, stability analysis, frequency stats.
//! - [`unli_convert`]: conversion of annotated premise/hypothesis/probability rows.
//! - [`eval_harness`]: accuracy of external likelihood scores under three scoring methods.
//! - [`cli`]: the `wepkit` command.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval_harness;
pub mod factoids;
pub mod generator;
pub mod prob_logic;
pub mod seed;
pub mod unli_convert;
pub mod wep_scale;

pub use dataset::{DatasetBundle, GeneratedExample, Provenance, Split, Variant};
pub use error::{Error, Result};
pub use eval_harness::{Accuracy, Method, ScoreRecord};
pub use factoids::{Factoid, Vocab};
pub use generator::{GenConfig, Generator, Hops, PremiseStyle};
pub use prob_logic::{Formula, Op, ProbMap};
pub use wep_scale::{WepEntry, WepScale};
