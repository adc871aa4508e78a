//! The estimative-probability scale and its verbalization templates.
//!
//! Each [`WepEntry`] pairs a word or phrase ("highly likely") with the median
//! probability people assign to it and a sentence template that embeds a fact
//! after the phrase ("it is highly likely that [FACT]").

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder marking where the fact text goes in a template.
pub const PLACEHOLDER: &str = "[FACT]";

/// Minimum distance between a distractor's median and the true probability.
pub const DISTRACTOR_THRESHOLD: f64 = 0.40;

/// Absolute slack used when comparing probability distances, so that values
/// produced by floating-point inference (0.1 + 0.2 style noise) still tie or
/// meet the threshold the way their exact counterparts would.
pub const DISTANCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WepEntry {
    pub name: String,
    pub median: f64,
    /// Reported spread around the median. Kept for downstream analysis only.
    pub dispersion: f64,
    pub template: String,
}

impl WepEntry {
    fn new(name: &str, median_pct: f64, dispersion_pct: f64, template: &str) -> Self {
        WepEntry {
            name: name.to_owned(),
            median: median_pct / 100.0,
            dispersion: dispersion_pct / 100.0,
            template: template.to_owned(),
        }
    }

    /// Template text before the placeholder, without the trailing space.
    pub fn prefix(&self) -> &str {
        self.template
            .strip_suffix(PLACEHOLDER)
            .unwrap_or(&self.template)
            .trim_end()
    }

    pub fn distance(&self, p: f64) -> f64 {
        (self.median - p).abs()
    }
}

// (name, median %, dispersion %, template). The endpoints carry no survey spread.
const BUILTIN: [(&str, f64, f64, &str); 19] = [
    ("certain", 100.0, 0.0, "it is certain that [FACT]"),
    (
        "almost certain",
        95.0,
        10.9,
        "it is almost certain that [FACT]",
    ),
    (
        "highly likely",
        90.0,
        8.4,
        "it is highly likely that [FACT]",
    ),
    (
        "very good chance",
        80.0,
        10.8,
        "there is a very good chance that [FACT]",
    ),
    ("we believe", 75.0, 15.0, "we believe that [FACT]"),
    ("likely", 70.0, 11.3, "it is likely that [FACT]"),
    (
        "probably",
        70.0,
        12.9,
        "it is probably the case that [FACT]",
    ),
    ("probable", 70.0, 14.7, "it is probable that [FACT]"),
    (
        "better than even",
        60.0,
        9.1,
        "there is a better than even chance that [FACT]",
    ),
    (
        "about even",
        50.0,
        4.9,
        "chances are about even that [FACT]",
    ),
    (
        "probably not",
        25.0,
        14.4,
        "it is probably not the case that [FACT]",
    ),
    ("we doubt", 20.0, 16.9, "we doubt that [FACT]"),
    ("unlikely", 20.0, 15.0, "it is unlikely that [FACT]"),
    (
        "little chance",
        10.0,
        12.2,
        "there is little chance that [FACT]",
    ),
    (
        "chances are slight",
        10.0,
        10.9,
        "chances are slight that [FACT]",
    ),
    ("improbable", 10.0, 17.5, "it is improbable that [FACT]"),
    (
        "highly unlikely",
        5.0,
        17.3,
        "it is highly unlikely that [FACT]",
    ),
    (
        "almost no chance",
        2.0,
        17.0,
        "there is almost no chance that [FACT]",
    ),
    ("impossible", 0.0, 0.0, "it is impossible that [FACT]"),
];

/// The built-in 19-entry table, ordered by descending median then name.
pub fn wep_table() -> Vec<WepEntry> {
    let mut entries: Vec<WepEntry> = BUILTIN
        .iter()
        .map(|&(n, m, d, t)| WepEntry::new(n, m, d, t))
        .collect();
    sort_entries(&mut entries);
    entries
}

fn sort_entries(entries: &mut [WepEntry]) {
    entries.sort_by(|a, b| {
        b.median
            .total_cmp(&a.median)
            .then_with(|| a.name.cmp(&b.name))
    });
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("probability {p} outside [0, 1]")))
    }
}

/// An ordered, validated set of entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WepScale {
    entries: Vec<WepEntry>,
}

impl Default for WepScale {
    fn default() -> Self {
        WepScale {
            entries: wep_table(),
        }
    }
}

impl WepScale {
    pub fn new(mut entries: Vec<WepEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("scale has no entries".into()));
        }
        let mut names = HashSet::new();
        for e in &entries {
            if e.name.is_empty() || e.name != e.name.to_lowercase() {
                return Err(Error::Validation(format!(
                    "entry name {:?} must be non-empty lowercase",
                    e.name
                )));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::Validation(format!("duplicate entry {:?}", e.name)));
            }
            if !(0.0..=1.0).contains(&e.median) || !(0.0..=1.0).contains(&e.dispersion) {
                return Err(Error::Validation(format!(
                    "entry {:?} has median or dispersion outside [0, 1]",
                    e.name
                )));
            }
            validate_template(&e.template)
                .map_err(|m| Error::Validation(format!("entry {:?}: {m}", e.name)))?;
        }
        sort_entries(&mut entries);
        Ok(WepScale { entries })
    }

    /// Parse the tab-separated override format:
    /// `name<TAB>median_percent<TAB>dispersion_percent<TAB>template`, `#` comments.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let row = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse(
                    format!("row {row}"),
                    format!("expected 4 tab-separated columns, found {}", cols.len()),
                ));
            }
            let pct = |s: &str, what: &str| -> Result<f64> {
                let v: f64 = s.trim().parse().map_err(|_| {
                    Error::parse(
                        format!("row {row}"),
                        format!("{what} {s:?} is not a number"),
                    )
                })?;
                if !(0.0..=100.0).contains(&v) {
                    return Err(Error::parse(
                        format!("row {row}"),
                        format!("{what} {v} outside [0, 100]"),
                    ));
                }
                Ok(v)
            };
            let median = pct(cols[1], "median")?;
            let dispersion = pct(cols[2], "dispersion")?;
            let template = cols[3].trim();
            validate_template(template).map_err(|m| Error::parse(format!("row {row}"), m))?;
            entries.push(WepEntry::new(cols[0].trim(), median, dispersion, template));
        }
        WepScale::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WepScale::from_tsv(&text)
    }

    pub fn entries(&self) -> &[WepEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&WepEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Distinct median values, ascending.
    pub fn distinct_medians(&self) -> Vec<f64> {
        let mut medians: Vec<f64> = self.entries.iter().map(|e| e.median).collect();
        medians.sort_by(f64::total_cmp);
        medians.dedup();
        medians
    }

    /// Every entry whose median is closest to `p`, in table order.
    pub fn nearest_wep_set(&self, p: f64) -> Result<Vec<&WepEntry>> {
        check_probability(p)?;
        let best = self
            .entries
            .iter()
            .map(|e| e.distance(p))
            .fold(f64::INFINITY, f64::min);
        Ok(self
            .entries
            .iter()
            .filter(|e| e.distance(p) <= best + DISTANCE_EPS)
            .collect())
    }

    /// A closest entry to `p`; ties are broken uniformly with `rng`.
    pub fn nearest_wep<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Result<&WepEntry> {
        let set = self.nearest_wep_set(p)?;
        Ok(if set.len() == 1 {
            set[0]
        } else {
            set.choose(rng)
                .copied()
                .expect("nearest set is never empty")
        })
    }

    /// Every entry at least [`DISTRACTOR_THRESHOLD`] away from `p` (inclusive).
    pub fn distractor_weps(&self, p: f64) -> Result<Vec<&WepEntry>> {
        check_probability(p)?;
        Ok(self
            .entries
            .iter()
            .filter(|e| e.distance(p) >= DISTRACTOR_THRESHOLD - DISTANCE_EPS)
            .collect())
    }

    /// Recover the entry and fact text from a sentence built by [`verbalize`].
    ///
    /// The longest matching template prefix wins, so "it is probably not the
    /// case that" is preferred over shorter templates sharing its start.
    pub fn extract_wep<'a>(&'a self, sentence: &str) -> Result<(&'a WepEntry, String)> {
        let body = sentence.trim().strip_suffix('.').unwrap_or(sentence.trim());
        self.entries
            .iter()
            .filter_map(|e| {
                let rest = body
                    .strip_prefix(uppercase_first(e.prefix()).as_str())?
                    .strip_prefix(' ')?;
                (!rest.is_empty()).then_some((e, rest))
            })
            .max_by_key(|(e, _)| e.prefix().len())
            .map(|(e, fact)| (e, fact.to_owned()))
            .ok_or_else(|| {
                Error::parse(
                    "sentence",
                    format!("no verbalization template matches {sentence:?}"),
                )
            })
    }
}

fn validate_template(template: &str) -> std::result::Result<(), String> {
    match template.matches(PLACEHOLDER).count() {
        1 => {}
        n => {
            return Err(format!(
                "template must contain {PLACEHOLDER} exactly once, found {n}"
            ))
        }
    }
    if !template.ends_with(PLACEHOLDER) {
        return Err(format!("template must end with {PLACEHOLDER}"));
    }
    let prefix = template
        .strip_suffix(PLACEHOLDER)
        .unwrap_or_default()
        .trim();
    if prefix.is_empty() {
        return Err("template has no text before the placeholder".into());
    }
    Ok(())
}

pub(crate) fn uppercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub(crate) fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Insert `fact_text` into the entry's template as a full sentence:
/// capitalized, with a terminal period.
pub fn verbalize(wep: &WepEntry, fact_text: &str) -> Result<String> {
    if fact_text.trim().is_empty() {
        return Err(Error::domain("fact text is empty"));
    }
    if fact_text.ends_with('.') {
        return Err(Error::domain(format!(
            "fact text {fact_text:?} must not end with a period"
        )));
    }
    Ok(format!("{} {}.", uppercase_first(wep.prefix()), fact_text))
}
