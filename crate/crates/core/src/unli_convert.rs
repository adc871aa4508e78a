//! Conversion of (premise, hypothesis, probability) rows into
//! verbalization-validity records.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{
    build_choice, DatasetBundle, GeneratedExample, Provenance, Split, Variant, SPLIT_ORDER,
};
use crate::error::{Error, Result};
use crate::seed::mix_seed;
use crate::wep_scale::{lowercase_first, WepScale};

/// Split name used when the source carries no split column.
pub const UNSPLIT_NAME: &str = "all";

#[derive(Debug, Clone, PartialEq)]
pub struct UnliRow {
    pub premise: String,
    pub hypothesis: String,
    pub p: f64,
}

impl UnliRow {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>, p: f64) -> Result<Self> {
        let row = UnliRow {
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            p,
        };
        row.validate()?;
        Ok(row)
    }

    fn validate(&self) -> Result<()> {
        if self.premise.trim().is_empty() || self.hypothesis.trim().is_empty() {
            return Err(Error::domain("premise and hypothesis must be non-empty"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::domain(format!(
                "probability {} outside [0, 1]",
                self.p
            )));
        }
        Ok(())
    }
}

/// Hypothesis text as a mid-sentence fact: first letter lowercased, trailing
/// periods and whitespace removed.
pub fn normalize_hypothesis(h: &str) -> String {
    lowercase_first(h.trim().trim_end_matches('.').trim_end())
}

fn normalize_premise(p: &str) -> String {
    let p = p.trim();
    if p.ends_with(['.', '!', '?']) {
        p.to_owned()
    } else {
        format!("{p}.")
    }
}

/// Convert one row; `raw_p` is the probability as written in the source.
pub fn convert_row(
    scale: &WepScale,
    row: &UnliRow,
    id: String,
    seed: u64,
    raw_p: Option<f64>,
) -> Result<GeneratedExample> {
    row.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let premise = normalize_premise(&row.premise);
    let event_text = normalize_hypothesis(&row.hypothesis);
    if event_text.is_empty() {
        return Err(Error::domain(format!(
            "hypothesis {:?} is empty after normalization",
            row.hypothesis
        )));
    }
    let choice = build_choice(scale, &premise, &event_text, row.p, &mut rng)?;
    Ok(GeneratedExample {
        id,
        variant: Variant::Unli,
        premise,
        event_text,
        p_true: row.p,
        valid_wep: choice.valid_wep,
        invalid_wep: choice.invalid_wep,
        candidates: choice.candidates,
        label: choice.label,
        provenance: Provenance {
            formula: "f0".to_owned(),
            probabilities: vec![row.p],
            seed,
            raw_p: Some(raw_p.unwrap_or(row.p)),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub premise: String,
    pub hypothesis: String,
    pub probability: String,
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvertOptions {
    pub columns: ColumnMap,
    pub delimiter: u8,
    /// Probabilities are percentages in [0, 100] rather than fractions.
    pub percent: bool,
    pub seed: u64,
}

impl ConvertOptions {
    pub fn new(columns: ColumnMap, seed: u64) -> Self {
        ConvertOptions {
            columns,
            delimiter: b',',
            percent: false,
            seed,
        }
    }
}

/// Canonical split name for common source spellings.
fn canonical_split(s: &str) -> String {
    match s.trim().to_lowercase().as_str() {
        "dev" | "valid" | "val" | "validation" => "validation".to_owned(),
        other => other.to_owned(),
    }
}

/// Convert a delimited file; record order follows the source rows.
pub fn convert_file(scale: &WepScale, path: &Path, opts: &ConvertOptions) -> Result<DatasetBundle> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    convert_reader(scale, file, opts)
}

pub fn convert_reader(
    scale: &WepScale,
    reader: impl std::io::Read,
    opts: &ConvertOptions,
) -> Result<DatasetBundle> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header row: {e}")))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in header")))
    };
    let c = &opts.columns;
    let (pi, hi, qi) = (col(&c.premise)?, col(&c.hypothesis)?, col(&c.probability)?);
    let si = c.split.as_deref().map(col).transpose()?;

    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        // Header is line 1; data rows are numbered from 1.
        let rownum = idx + 1;
        let rec = rec.map_err(|e| Error::parse(format!("row {rownum}"), e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or_default().to_owned();
        let raw = field(qi);
        let value: f64 = raw
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                Error::parse(
                    format!("row {rownum}"),
                    format!("probability {raw:?} is not numeric"),
                )
            })?;
        let p = if opts.percent { value / 100.0 } else { value };
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::parse(
                format!("row {rownum}"),
                format!(
                    "probability {value} outside {}",
                    if opts.percent { "[0, 100]" } else { "[0, 1]" }
                ),
            ));
        }
        let split = si
            .map(|i| canonical_split(&field(i)))
            .unwrap_or_else(|| UNSPLIT_NAME.to_owned());
        rows.push((rownum, split, field(pi), field(hi), p, value));
    }

    let converted: Vec<(String, GeneratedExample)> = rows
        .into_par_iter()
        .map(|(rownum, split, premise, hypothesis, p, raw)| {
            let row = UnliRow::new(premise, hypothesis, p)
                .map_err(|e| Error::parse(format!("row {rownum}"), e.to_string()))?;
            let index = rownum as u64 - 1;
            let id = format!("unli-{index:06}");
            let ex = convert_row(scale, &row, id, mix_seed(opts.seed, index), Some(raw))?;
            Ok((split, ex))
        })
        .collect::<Result<_>>()?;

    let mut grouped: BTreeMap<String, Vec<GeneratedExample>> = BTreeMap::new();
    for (split, ex) in converted {
        grouped.entry(split).or_default().push(ex);
    }
    let mut splits: Vec<Split> = grouped
        .into_iter()
        .map(|(name, records)| Split { name, records })
        .collect();
    splits.sort_by_key(|s| {
        (
            SPLIT_ORDER
                .iter()
                .position(|n| *n == s.name)
                .unwrap_or(SPLIT_ORDER.len()),
            s.name.clone(),
        )
    });
    Ok(DatasetBundle { splits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(split: Option<&str>) -> ColumnMap {
        ColumnMap {
            premise: "premise".into(),
            hypothesis: "hypothesis".into(),
            probability: "p".into(),
            split: split.map(str::to_owned),
        }
    }

    #[test]
    fn picture_example() {
        let s = WepScale::default();
        let row = UnliRow::new(
            "A man in a white shirt taking a picture",
            "A man takes a picture",
            1.0,
        )
        .unwrap();
        let ex = convert_row(&s, &row, "u0".into(), 5, None).unwrap();
        assert_eq!(ex.variant, Variant::Unli);
        assert_eq!(ex.valid_wep, "certain");
        assert_eq!(ex.event_text, "a man takes a picture");
        assert_eq!(
            ex.valid_candidate(),
            "A man in a white shirt taking a picture. It is certain that a man takes a picture."
        );
        assert_eq!(ex.provenance.raw_p, Some(1.0));
        assert!((ex.provenance.rederive().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_and_tied_probabilities() {
        let s = WepScale::default();
        let zero = convert_row(
            &s,
            &UnliRow::new("P", "H.", 0.0).unwrap(),
            "a".into(),
            1,
            None,
        )
        .unwrap();
        assert_eq!(zero.valid_wep, "impossible");
        assert_eq!(zero.event_text, "h");
        for seed in 0..30 {
            let ex = convert_row(
                &s,
                &UnliRow::new("P", "H", 0.7).unwrap(),
                "b".into(),
                seed,
                None,
            )
            .unwrap();
            assert!(["likely", "probably", "probable"].contains(&ex.valid_wep.as_str()));
        }
    }

    #[test]
    fn row_validation() {
        assert!(matches!(UnliRow::new("P", "H", 1.5), Err(Error::Domain(_))));
        assert!(UnliRow::new("", "H", 0.5).is_err());
    }

    #[test]
    fn file_conversion_preserves_order_and_splits() {
        let s = WepScale::default();
        let csv = "premise,hypothesis,p,split\nA dog runs,A dog moves,0.9,train\nA cat sleeps,A cat runs,0.1,dev\nKids play,Kids are outside,0.5,train\n";
        let b = convert_reader(
            &s,
            csv.as_bytes(),
            &ConvertOptions::new(cols(Some("split")), 3),
        )
        .unwrap();
        let names: Vec<&str> = b.splits.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["train", "validation"]);
        let train: Vec<&str> = b
            .split("train")
            .unwrap()
            .records
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        assert_eq!(train, ["unli-000000", "unli-000002"]);

        let flat = convert_reader(&s, csv.as_bytes(), &ConvertOptions::new(cols(None), 3)).unwrap();
        assert_eq!(flat.splits.len(), 1);
        assert_eq!(flat.splits[0].name, UNSPLIT_NAME);
        let events: Vec<&str> = flat.splits[0]
            .records
            .iter()
            .map(|r| r.event_text.as_str())
            .collect();
        assert_eq!(events, ["a dog moves", "a cat runs", "kids are outside"]);
        // Record content does not depend on whether a split column was used.
        assert_eq!(
            flat.splits[0].records[1],
            b.split("validation").unwrap().records[0]
        );
    }

    #[test]
    fn schema_and_parse_errors() {
        let s = WepScale::default();
        let missing = "premise,p\nA,0.5\n";
        assert!(matches!(
            convert_reader(&s, missing.as_bytes(), &ConvertOptions::new(cols(None), 0)),
            Err(Error::Schema(_))
        ));
        let bad = "premise,hypothesis,p\nA,B,0.5\nC,D,high\n";
        match convert_reader(&s, bad.as_bytes(), &ConvertOptions::new(cols(None), 0)) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "row 2"),
            other => panic!("unexpected {other:?}"),
        }
        let pct = "premise,hypothesis,p\nA,B,70\n";
        assert!(convert_reader(&s, pct.as_bytes(), &ConvertOptions::new(cols(None), 0)).is_err());
        let mut opts = ConvertOptions::new(cols(None), 0);
        opts.percent = true;
        let b = convert_reader(&s, pct.as_bytes(), &opts).unwrap();
        assert!((b.splits[0].records[0].p_true - 0.7).abs() < 1e-12);
        assert_eq!(b.splits[0].records[0].provenance.raw_p, Some(70.0));
    }

    #[test]
    fn tab_delimited_input() {
        let s = WepScale::default();
        let tsv = "premise\thypothesis\tp\nA, with comma\tB\t0.25\n";
        let mut opts = ConvertOptions::new(cols(None), 0);
        opts.delimiter = b'\t';
        let b = convert_reader(&s, tsv.as_bytes(), &opts).unwrap();
        assert_eq!(b.splits[0].records[0].premise, "A, with comma.");
        assert_eq!(b.splits[0].records[0].valid_wep, "probably not");
    }
}
