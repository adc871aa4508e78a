//! Verbalization-validity records and their on-disk layout.
//!
//! A dataset directory holds one JSON Lines file per split (`train.jsonl`,
//! `validation.jsonl`, `test.jsonl`, or any other `<name>.jsonl`), one
//! [`GeneratedExample`] per line.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob_logic::{infer_enumeration, parse_formula, ProbMap};
use crate::wep_scale::{verbalize, WepScale};

/// Version of the record layout written by this crate.
pub const FORMAT_VERSION: &str = "1";

pub const SPLIT_ORDER: [&str; 3] = ["train", "validation", "test"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "reasoning-1hop")]
    Reasoning1Hop,
    #[serde(rename = "reasoning-2hop")]
    Reasoning2Hop,
    #[serde(rename = "unli")]
    Unli,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Reasoning1Hop => "reasoning-1hop",
            Variant::Reasoning2Hop => "reasoning-2hop",
            Variant::Unli => "unli",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Hypothesis formula in the `fN` / `(F op F)` notation.
    pub formula: String,
    /// Probability of atom `fi` at index `i`.
    pub probabilities: Vec<f64>,
    pub seed: u64,
    /// Probability exactly as it appeared in a converted source row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_p: Option<f64>,
}

impl Provenance {
    /// Re-run exact inference on the recorded formula and probabilities.
    pub fn rederive(&self) -> Result<f64> {
        let f = parse_formula(&self.formula)?;
        infer_enumeration(&f, &ProbMap::from_slice(&self.probabilities)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedExample {
    pub id: String,
    pub variant: Variant,
    pub premise: String,
    pub event_text: String,
    pub p_true: f64,
    pub valid_wep: String,
    pub invalid_wep: String,
    pub candidates: [String; 2],
    pub label: u8,
    pub provenance: Provenance,
}

impl GeneratedExample {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn valid_candidate(&self) -> &str {
        &self.candidates[self.label as usize]
    }

    pub fn invalid_candidate(&self) -> &str {
        &self.candidates[1 - self.label as usize]
    }
}

/// Result of verbalizing a hypothesis both correctly and incorrectly.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Choice {
    pub valid_wep: String,
    pub invalid_wep: String,
    pub candidates: [String; 2],
    pub label: u8,
}

/// Pick a valid and a distractor WEP for `p_true` and build the two shuffled
/// "premise + verbalized hypothesis" candidates.
pub(crate) fn build_choice<R: Rng + ?Sized>(
    scale: &WepScale,
    premise: &str,
    event_text: &str,
    p_true: f64,
    rng: &mut R,
) -> Result<Choice> {
    let valid = scale.nearest_wep(p_true, rng)?;
    let invalid = *scale
        .distractor_weps(p_true)?
        .choose(rng)
        .ok_or_else(|| Error::domain(format!("no distractor exists for p = {p_true}")))?;
    let valid_text = join_candidate(premise, &verbalize(valid, event_text)?);
    let invalid_text = join_candidate(premise, &verbalize(invalid, event_text)?);
    let label: u8 = rng.gen_range(0..2);
    let candidates = if label == 0 {
        [valid_text, invalid_text]
    } else {
        [invalid_text, valid_text]
    };
    Ok(Choice {
        valid_wep: valid.name.clone(),
        invalid_wep: invalid.name.clone(),
        candidates,
        label,
    })
}

fn join_candidate(premise: &str, hypothesis: &str) -> String {
    if premise.is_empty() {
        hypothesis.to_owned()
    } else {
        format!("{premise} {hypothesis}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub name: String,
    pub records: Vec<GeneratedExample>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetBundle {
    pub splits: Vec<Split>,
}

impl DatasetBundle {
    pub fn split(&self, name: &str) -> Option<&Split> {
        self.splits.iter().find(|s| s.name == name)
    }

    pub fn records(&self) -> impl Iterator<Item = (&str, &GeneratedExample)> {
        self.splits
            .iter()
            .flat_map(|s| s.records.iter().map(move |r| (s.name.as_str(), r)))
    }

    pub fn len(&self) -> usize {
        self.splits.iter().map(|s| s.records.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write one `<split>.jsonl` per split into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for split in &self.splits {
            let path = dir.join(format!("{}.jsonl", split.name));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            for r in &split.records {
                writeln!(w, "{}", r.to_json_line()).map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Read every `*.jsonl` file in `dir`; the standard splits come first.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut names = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.extension().is_some_and(|x| x == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    names.push(stem.to_owned());
                }
            }
        }
        if names.is_empty() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no .jsonl split files"),
            ));
        }
        names.sort_by_key(|n| {
            (
                SPLIT_ORDER
                    .iter()
                    .position(|s| s == n)
                    .unwrap_or(SPLIT_ORDER.len()),
                n.clone(),
            )
        });
        let splits = names
            .into_iter()
            .map(|name| {
                let records = read_records(&dir.join(format!("{name}.jsonl")))?;
                Ok(Split { name, records })
            })
            .collect::<Result<_>>()?;
        Ok(DatasetBundle { splits })
    }
}

pub fn read_records(path: &Path) -> Result<Vec<GeneratedExample>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GeneratedExample = serde_json::from_str(&line)
            .map_err(|e| Error::parse(format!("{}:{}", path.display(), idx + 1), e.to_string()))?;
        if rec.label > 1 {
            return Err(Error::parse(
                format!("{}:{}", path.display(), idx + 1),
                format!("label {} is not 0 or 1", rec.label),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn choice_respects_labels_and_distance() {
        let scale = WepScale::default();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = seed as f64 / 199.0;
            let c = build_choice(&scale, "Premise.", "x happens", p, &mut rng).unwrap();
            let valid = scale.get(&c.valid_wep).unwrap();
            let invalid = scale.get(&c.invalid_wep).unwrap();
            assert!(invalid.distance(p) >= 0.40 - 1e-9);
            assert!(scale
                .nearest_wep_set(p)
                .unwrap()
                .iter()
                .any(|e| e.name == valid.name));
            let expected = format!("Premise. {}", verbalize(valid, "x happens").unwrap());
            assert_eq!(c.candidates[c.label as usize], expected);
        }
    }

    #[test]
    fn record_json_field_order_is_fixed() {
        let rec = GeneratedExample {
            id: "x-1".into(),
            variant: Variant::Unli,
            premise: "P.".into(),
            event_text: "e".into(),
            p_true: 1.0,
            valid_wep: "certain".into(),
            invalid_wep: "impossible".into(),
            candidates: ["a".into(), "b".into()],
            label: 0,
            provenance: Provenance {
                formula: "f0".into(),
                probabilities: vec![1.0],
                seed: 3,
                raw_p: None,
            },
        };
        let line = rec.to_json_line();
        let keys = [
            "\"id\"",
            "\"variant\"",
            "\"premise\"",
            "\"event_text\"",
            "\"p_true\"",
            "\"valid_wep\"",
            "\"invalid_wep\"",
            "\"candidates\"",
            "\"label\"",
            "\"provenance\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| line.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{line}");
        assert!(line.contains("\"variant\":\"unli\""));
        let back: GeneratedExample = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.provenance.rederive().unwrap(), 1.0);
    }

    #[test]
    fn malformed_record_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("test.jsonl"), "\n{not json}\n").unwrap();
        match DatasetBundle::read_dir(dir.path()) {
            Err(Error::Parse { location, .. }) => {
                assert!(location.ends_with("test.jsonl:2"), "{location}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_dir_is_io_error() {
        let err = DatasetBundle::read_dir(Path::new("/nonexistent/wepkit")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
