//! Pairwise verbalization-validity accuracy from externally produced
//! log-likelihoods.
//!
//! A scorer writes one [`ScoreRecord`] per candidate. An example counts as
//! correct when its valid candidate scores strictly higher than the invalid
//! one under the chosen [`Method`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetBundle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub example_id: String,
    pub candidate_index: u8,
    pub full_logprob: f64,
    pub full_token_count: u32,
    pub hyp_logprob: f64,
    pub hyp_token_count: u32,
    pub model_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Raw,
    PerToken,
    Calibrated,
}

impl Method {
    /// Also the tie-breaking order for [`select_method`].
    pub const ALL: [Method; 3] = [Method::Raw, Method::PerToken, Method::Calibrated];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Raw => "raw",
            Method::PerToken => "per-token",
            Method::Calibrated => "calibrated",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::Validation(format!("unknown scoring method {s:?}")))
    }
}

pub fn candidate_score(r: &ScoreRecord, m: Method) -> Result<f64> {
    if r.full_token_count == 0 || r.hyp_token_count == 0 {
        return Err(Error::domain(format!(
            "example {} candidate {} has a zero token count",
            r.example_id, r.candidate_index
        )));
    }
    Ok(match m {
        Method::Raw => r.full_logprob,
        Method::PerToken => r.full_logprob / r.full_token_count as f64,
        // Division of likelihoods, in the log domain.
        Method::Calibrated => r.full_logprob - r.hyp_logprob,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    /// Percentage correct.
    pub mean: f64,
    /// Binomial standard error, in percentage points.
    pub stderr: f64,
}

impl Accuracy {
    pub fn from_counts(correct: usize, total: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::domain("accuracy over zero examples"));
        }
        let a = correct as f64 / total as f64;
        Ok(Accuracy {
            correct,
            total,
            mean: 100.0 * a,
            stderr: 100.0 * (a * (1.0 - a) / total as f64).sqrt(),
        })
    }
}

/// Pair up the two candidates of every example, keyed by example id.
fn pair_candidates(scores: &[ScoreRecord]) -> Result<BTreeMap<&str, [&ScoreRecord; 2]>> {
    let mut slots: BTreeMap<&str, [Option<&ScoreRecord>; 2]> = BTreeMap::new();
    for r in scores {
        let idx = r.candidate_index as usize;
        if idx > 1 {
            return Err(Error::Schema(format!(
                "example {} has candidate index {}",
                r.example_id, r.candidate_index
            )));
        }
        let slot = &mut slots.entry(r.example_id.as_str()).or_default()[idx];
        if slot.is_some() {
            return Err(Error::Schema(format!(
                "example {} has candidate {idx} twice",
                r.example_id
            )));
        }
        *slot = Some(r);
    }
    slots
        .into_iter()
        .map(|(id, pair)| match pair {
            [Some(a), Some(b)] => Ok((id, [a, b])),
            _ => Err(Error::Schema(format!(
                "example {id} is missing a candidate"
            ))),
        })
        .collect()
}

pub fn pairwise_accuracy(
    scores: &[ScoreRecord],
    labels: &HashMap<String, u8>,
    m: Method,
) -> Result<Accuracy> {
    let pairs = pair_candidates(scores)?;
    let mut correct = 0;
    for (id, pair) in &pairs {
        let label = *labels
            .get(*id)
            .ok_or_else(|| Error::Schema(format!("example {id} has no label")))?;
        let valid = candidate_score(pair[label as usize], m)?;
        let invalid = candidate_score(pair[1 - label as usize], m)?;
        if valid > invalid {
            correct += 1;
        }
    }
    Accuracy::from_counts(correct, pairs.len())
}

/// The method with the best validation accuracy; ties go to the earliest in
/// [`Method::ALL`].
pub fn select_method(validation: &[ScoreRecord], labels: &HashMap<String, u8>) -> Result<Method> {
    if validation.is_empty() {
        return Err(Error::domain("validation score set is empty"));
    }
    let mut best: Option<(Method, usize)> = None;
    for m in Method::ALL {
        let acc = pairwise_accuracy(validation, labels, m)?;
        if best.is_none_or(|(_, c)| acc.correct > c) {
            best = Some((m, acc.correct));
        }
    }
    Ok(best.expect("three methods evaluated").0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupAccuracy {
    pub group: String,
    pub accuracy: Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spread {
    /// Sample standard deviation of group means.
    StdAcrossGroups,
    /// Binomial standard error of the single group.
    BinomialStderr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: Method,
    pub groups: Vec<GroupAccuracy>,
    pub mean: f64,
    pub spread: f64,
    pub spread_kind: Spread,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method)?;
        for g in &self.groups {
            writeln!(
                f,
                "  {}: {:.1} ({}/{})",
                g.group, g.accuracy.mean, g.accuracy.correct, g.accuracy.total
            )?;
        }
        let kind = match self.spread_kind {
            Spread::StdAcrossGroups => "std across groups",
            Spread::BinomialStderr => "binomial stderr",
        };
        write!(f, "accuracy: {:.1}±{:.2} ({kind})", self.mean, self.spread)
    }
}

/// Accuracy per group of score records (for example one group per seed),
/// with mean and spread across groups.
pub fn evaluate(
    groups: &[(String, Vec<ScoreRecord>)],
    labels: &HashMap<String, u8>,
    method: Method,
) -> Result<EvalReport> {
    if groups.is_empty() {
        return Err(Error::domain("no score groups to evaluate"));
    }
    let groups: Vec<GroupAccuracy> = groups
        .iter()
        .map(|(name, scores)| {
            Ok(GroupAccuracy {
                group: name.clone(),
                accuracy: pairwise_accuracy(scores, labels, method)?,
            })
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = groups.iter().map(|g| g.accuracy.mean).collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let (spread, spread_kind) = if groups.len() == 1 {
        (groups[0].accuracy.stderr, Spread::BinomialStderr)
    } else {
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        (var.sqrt(), Spread::StdAcrossGroups)
    };
    Ok(EvalReport {
        method,
        groups,
        mean,
        spread,
        spread_kind,
    })
}

/// Evaluate score runs (one group each) against a dataset's labels on
/// `eval_split`. With `method` unset, the method is chosen on the validation
/// records pooled across runs.
pub fn score_runs(
    bundle: &DatasetBundle,
    runs: &[(String, Vec<ScoreRecord>)],
    method: Option<Method>,
    eval_split: &str,
) -> Result<EvalReport> {
    if runs.is_empty() {
        return Err(Error::Validation(
            "at least one score run is required".into(),
        ));
    }
    let labels = labels_from_bundle(bundle);
    let split_of: HashMap<&str, &str> = bundle.records().map(|(s, r)| (r.id.as_str(), s)).collect();
    let mut groups: Vec<(String, Vec<ScoreRecord>)> = Vec::with_capacity(runs.len());
    let mut validation: Vec<ScoreRecord> = Vec::new();
    for (name, records) in runs {
        let mut eval = Vec::new();
        for r in records {
            match split_of.get(r.example_id.as_str()) {
                None => {
                    return Err(Error::Schema(format!(
                        "{name}: example {} is not in the dataset",
                        r.example_id
                    )))
                }
                Some(&s) if s == eval_split => eval.push(r.clone()),
                Some(&"validation") => validation.push(r.clone()),
                Some(_) => {}
            }
        }
        if eval.is_empty() {
            return Err(Error::Schema(format!(
                "{name} has no records for the {eval_split} split"
            )));
        }
        groups.push((name.clone(), eval));
    }
    let method = match method {
        Some(m) => m,
        None => select_method(&validation, &labels).map_err(|_| {
            Error::Validation(
                "automatic method selection needs score records for the validation split".into(),
            )
        })?,
    };
    evaluate(&groups, &labels, method)
}

pub fn labels_from_bundle(bundle: &DatasetBundle) -> HashMap<String, u8> {
    bundle
        .records()
        .map(|(_, r)| (r.id.clone(), r.label))
        .collect()
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Schema(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_scores(path: &Path, scores: &[ScoreRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in scores {
        let line = serde_json::to_string(s).expect("score records always serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A chance-level scorer: independent uniform log-likelihoods for every
/// candidate of every record in the bundle.
pub fn random_scores(bundle: &DatasetBundle, seed: u64) -> Vec<ScoreRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bundle
        .records()
        .flat_map(|(_, r)| [(r.id.clone(), 0u8), (r.id.clone(), 1u8)])
        .map(|(example_id, candidate_index)| ScoreRecord {
            example_id,
            candidate_index,
            full_logprob: -rng.gen_range(1.0..100.0),
            full_token_count: rng.gen_range(5..60),
            hyp_logprob: -rng.gen_range(1.0..50.0),
            hyp_token_count: rng.gen_range(3..30),
            model_id: "uniform-random".to_owned(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, idx: u8, full: f64, ft: u32, hyp: f64, ht: u32) -> ScoreRecord {
        ScoreRecord {
            example_id: id.into(),
            candidate_index: idx,
            full_logprob: full,
            full_token_count: ft,
            hyp_logprob: hyp,
            hyp_token_count: ht,
            model_id: "m".into(),
        }
    }

    fn labels(pairs: &[(&str, u8)]) -> HashMap<String, u8> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn candidate_score_examples() {
        let r = rec("e", 0, -10.0, 5, -6.0, 3);
        assert_eq!(candidate_score(&r, Method::Raw).unwrap(), -10.0);
        assert_eq!(candidate_score(&r, Method::PerToken).unwrap(), -2.0);
        assert_eq!(candidate_score(&r, Method::Calibrated).unwrap(), -4.0);
        assert!(matches!(
            candidate_score(&rec("e", 0, -1.0, 0, -1.0, 1), Method::Raw),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn strict_comparison() {
        let l = labels(&[("a", 0)]);
        let win = [
            rec("a", 0, -10.0, 1, -1.0, 1),
            rec("a", 1, -12.0, 1, -1.0, 1),
        ];
        assert_eq!(pairwise_accuracy(&win, &l, Method::Raw).unwrap().correct, 1);
        let tie = [
            rec("a", 0, -10.0, 1, -1.0, 1),
            rec("a", 1, -10.0, 1, -1.0, 1),
        ];
        assert_eq!(pairwise_accuracy(&tie, &l, Method::Raw).unwrap().correct, 0);
    }

    #[test]
    fn missing_candidate_names_example() {
        let l = labels(&[("a", 0), ("b", 1)]);
        let s = [
            rec("a", 0, -1.0, 1, -1.0, 1),
            rec("a", 1, -2.0, 1, -1.0, 1),
            rec("b", 1, -1.0, 1, -1.0, 1),
        ];
        match pairwise_accuracy(&s, &l, Method::Raw) {
            Err(Error::Schema(m)) => assert!(m.contains("example b"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
        let dup = [rec("a", 0, -1.0, 1, -1.0, 1), rec("a", 0, -2.0, 1, -1.0, 1)];
        assert!(matches!(
            pairwise_accuracy(&dup, &l, Method::Raw),
            Err(Error::Schema(_))
        ));
        let unlabeled = [rec("z", 0, -1.0, 1, -1.0, 1), rec("z", 1, -2.0, 1, -1.0, 1)];
        assert!(matches!(
            pairwise_accuracy(&unlabeled, &l, Method::Raw),
            Err(Error::Schema(_))
        ));
    }

    // Build a validation table where the per-method correctness of each
    // example is controlled directly.
    fn table(outcomes: &[(bool, bool, bool)]) -> (Vec<ScoreRecord>, HashMap<String, u8>) {
        let mut scores = Vec::new();
        let mut l = HashMap::new();
        for (i, &(raw, per_token, calibrated)) in outcomes.iter().enumerate() {
            let id = format!("e{i}");
            l.insert(id.clone(), 0u8);
            // Valid candidate: raw -10, per-token -1, calibrated -5.
            scores.push(rec(&id, 0, -10.0, 10, -5.0, 1));
            let full = if raw { -11.0 } else { -9.0 };
            // Per-token wins iff tokens < |full|.
            let tokens = match (raw, per_token) {
                (true, true) => 10,
                (true, false) => 12,
                (false, true) => 8,
                (false, false) => 10,
            };
            // Calibrated wins iff full - hyp < -5.
            let hyp = if calibrated { full + 6.0 } else { full + 4.0 };
            scores.push(rec(&id, 1, full, tokens, hyp, 1));
        }
        (scores, l)
    }

    #[test]
    fn table_builder_controls_each_method() {
        let outcomes = [
            (true, true, true),
            (true, false, false),
            (false, true, false),
            (false, false, true),
            (false, false, false),
        ];
        for o in outcomes {
            let (s, l) = table(&[o]);
            let got = (
                pairwise_accuracy(&s, &l, Method::Raw).unwrap().correct == 1,
                pairwise_accuracy(&s, &l, Method::PerToken).unwrap().correct == 1,
                pairwise_accuracy(&s, &l, Method::Calibrated)
                    .unwrap()
                    .correct
                    == 1,
            );
            assert_eq!(got, o);
        }
    }

    #[test]
    fn select_method_examples() {
        // calibrated 3/5, raw 2/5, per-token 1/5
        let (s, l) = table(&[
            (true, true, true),
            (true, false, true),
            (false, false, true),
            (false, false, false),
            (false, false, false),
        ]);
        assert_eq!(select_method(&s, &l).unwrap(), Method::Calibrated);
        let (s, l) = table(&[(true, true, true), (false, false, false)]);
        assert_eq!(select_method(&s, &l).unwrap(), Method::Raw);
        let (s, l) = table(&[
            (true, true, false),
            (false, true, true),
            (false, false, false),
        ]);
        assert_eq!(select_method(&s, &l).unwrap(), Method::PerToken);
        assert!(matches!(select_method(&[], &l), Err(Error::Domain(_))));
    }

    fn synthetic_group(n: usize, correct: usize) -> (Vec<ScoreRecord>, HashMap<String, u8>) {
        let mut s = Vec::new();
        let mut l = HashMap::new();
        for i in 0..n {
            let id = format!("x{i}");
            l.insert(id.clone(), 1u8);
            let (v, inv) = if i < correct {
                (-1.0, -2.0)
            } else {
                (-2.0, -1.0)
            };
            s.push(rec(&id, 1, v, 1, -1.0, 1));
            s.push(rec(&id, 0, inv, 1, -1.0, 1));
        }
        (s, l)
    }

    #[test]
    fn evaluate_examples() {
        let (s, l) = synthetic_group(500, 250);
        let r = evaluate(&[("g".into(), s.clone())], &l, Method::Raw).unwrap();
        assert_eq!(r.mean, 50.0);
        assert!((r.spread - 2.236).abs() < 0.001);
        assert_eq!(r.spread_kind, Spread::BinomialStderr);
        assert_eq!(format!("{:.2}", r.spread), "2.24");

        let three: Vec<(String, Vec<ScoreRecord>)> =
            (0..3).map(|i| (format!("seed{i}"), s.clone())).collect();
        let r = evaluate(&three, &l, Method::Raw).unwrap();
        assert_eq!(r.spread, 0.0);
        assert_eq!(r.spread_kind, Spread::StdAcrossGroups);

        let (s2, _) = synthetic_group(500, 300);
        let r = evaluate(&[("a".into(), s), ("b".into(), s2)], &l, Method::Raw).unwrap();
        assert!((r.mean - 55.0).abs() < 1e-12);
        assert!((r.spread - 50f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("auto".parse::<Method>().is_err());
    }
}
