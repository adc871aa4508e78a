//! Subject/verb/object facts in the style of bAbI stories.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Each vocabulary list must have at least this many distinct entries.
pub const MIN_LIST_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factoid {
    pub subject: String,
    /// Verb phrase, including any particle the object needs ("went to").
    pub verb: String,
    pub object: String,
    pub text: String,
}

impl Factoid {
    pub fn new(subject: &str, verb: &str, object: &str) -> Self {
        Factoid {
            subject: subject.to_owned(),
            verb: verb.to_owned(),
            object: object.to_owned(),
            text: format!("{subject} {verb} {object}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    subjects: Vec<String>,
    verbs: Vec<String>,
    objects: Vec<String>,
    /// For each verb, indices into `objects` it can take.
    verb_objects: Vec<Vec<usize>>,
}

const DEFAULT_VOCAB: &str = include_str!("default_vocab.txt");

impl Default for Vocab {
    fn default() -> Self {
        Vocab::parse(DEFAULT_VOCAB).expect("built-in vocabulary is valid")
    }
}

impl Vocab {
    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn verbs(&self) -> &[String] {
        &self.verbs
    }

    /// All objects across verbs, in first-appearance order.
    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn objects_for(&self, verb: &str) -> Vec<&str> {
        self.verbs
            .iter()
            .position(|v| v == verb)
            .map(|i| {
                self.verb_objects[i]
                    .iter()
                    .map(|&o| self.objects[o].as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Parse the sectioned vocabulary format (`[subjects]`, `[verbs]`,
    /// `[objects:<verb>]`, one token per line, `#` comments).
    pub fn parse(text: &str) -> Result<Self> {
        enum Section {
            None,
            Subjects,
            Verbs,
            Objects,
        }
        let mut section = Section::None;
        let mut subjects = Vec::new();
        let mut verbs = Vec::new();
        let mut object_lists: Vec<(String, Vec<String>)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('[') {
                let header = header.strip_suffix(']').ok_or_else(|| {
                    Error::parse(
                        format!("line {lineno}"),
                        format!("unterminated section header {line:?}"),
                    )
                })?;
                section = match header.trim() {
                    "subjects" => Section::Subjects,
                    "verbs" => Section::Verbs,
                    h => match h.strip_prefix("objects:") {
                        Some(v) if !v.trim().is_empty() => {
                            let v = v.trim().to_owned();
                            if object_lists.iter().any(|(verb, _)| *verb == v) {
                                return Err(Error::Validation(format!(
                                    "objects section for {v:?} appears twice"
                                )));
                            }
                            object_lists.push((v.clone(), Vec::new()));
                            Section::Objects
                        }
                        _ => {
                            return Err(Error::parse(
                                format!("line {lineno}"),
                                format!("unknown section {line:?}"),
                            ))
                        }
                    },
                };
                continue;
            }
            match &section {
                Section::None => {
                    return Err(Error::parse(
                        format!("line {lineno}"),
                        "token outside of any section",
                    ))
                }
                Section::Subjects => subjects.push(line.to_owned()),
                Section::Verbs => verbs.push(line.to_owned()),
                Section::Objects => {
                    if let Some((_, list)) = object_lists.last_mut() {
                        list.push(line.to_owned());
                    }
                }
            }
        }
        Vocab::build(subjects, verbs, object_lists)
    }

    pub fn build(
        subjects: Vec<String>,
        verbs: Vec<String>,
        object_lists: Vec<(String, Vec<String>)>,
    ) -> Result<Self> {
        check_list("subjects", &subjects)?;
        check_list("verbs", &verbs)?;
        for (verb, list) in &object_lists {
            if !verbs.contains(verb) {
                return Err(Error::Validation(format!(
                    "objects listed for unknown verb {verb:?}"
                )));
            }
            if let Some(dup) = first_duplicate(list) {
                return Err(Error::Validation(format!(
                    "duplicate object {dup:?} for verb {verb:?}"
                )));
            }
        }
        let mut objects: Vec<String> = Vec::new();
        let mut verb_objects = Vec::with_capacity(verbs.len());
        for verb in &verbs {
            let list = object_lists
                .iter()
                .find(|(v, _)| v == verb)
                .map(|(_, l)| l)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| Error::Validation(format!("verb {verb:?} has no objects")))?;
            let idx = list
                .iter()
                .map(|o| match objects.iter().position(|x| x == o) {
                    Some(i) => i,
                    None => {
                        objects.push(o.clone());
                        objects.len() - 1
                    }
                })
                .collect();
            verb_objects.push(idx);
        }
        if objects.len() < MIN_LIST_LEN {
            return Err(Error::Validation(format!(
                "objects has {} distinct entries, at least {MIN_LIST_LEN} required",
                objects.len()
            )));
        }
        Ok(Vocab {
            subjects,
            verbs,
            objects,
            verb_objects,
        })
    }

    /// Largest `k` accepted by [`sample_factoids`] before matching is attempted.
    pub fn capacity(&self) -> usize {
        self.subjects
            .len()
            .min(self.verbs.len())
            .min(self.objects.len())
    }
}

fn first_duplicate(list: &[String]) -> Option<&String> {
    let mut seen = HashSet::new();
    list.iter().find(|x| !seen.insert(x.as_str()))
}

fn check_list(name: &str, list: &[String]) -> Result<()> {
    if let Some(dup) = first_duplicate(list) {
        return Err(Error::Validation(format!(
            "duplicate entry {dup:?} in {name}"
        )));
    }
    if list.len() < MIN_LIST_LEN {
        return Err(Error::Validation(format!(
            "{name} has {} entries, at least {MIN_LIST_LEN} required",
            list.len()
        )));
    }
    Ok(())
}

/// Load a vocabulary file, or the built-in one when `path` is `None`.
pub fn load_vocab(path: Option<&Path>) -> Result<Vocab> {
    match path {
        None => Ok(Vocab::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Vocab::parse(&text)
        }
    }
}

/// Sample `k` facts that pairwise share no subject, verb or object.
pub fn sample_factoids<R: Rng + ?Sized>(
    k: usize,
    vocab: &Vocab,
    rng: &mut R,
) -> Result<Vec<Factoid>> {
    if k == 0 {
        return Err(Error::domain("at least one fact must be sampled"));
    }
    if k > vocab.capacity() {
        return Err(Error::Capacity(format!(
            "cannot sample {k} disjoint facts from a vocabulary of capacity {}",
            vocab.capacity()
        )));
    }
    let mut subjects = vocab.subjects.clone();
    subjects.partial_shuffle(rng, k);
    subjects.truncate(k);

    let mut verb_order: Vec<usize> = (0..vocab.verbs.len()).collect();
    verb_order.shuffle(rng);
    let object_orders: Vec<Vec<usize>> = vocab
        .verb_objects
        .iter()
        .map(|objs| {
            let mut o = objs.clone();
            o.shuffle(rng);
            o
        })
        .collect();

    let mut chosen = Vec::with_capacity(k);
    let mut used = vec![false; vocab.objects.len()];
    if !assign(&verb_order, &object_orders, k, &mut used, &mut chosen) {
        return Err(Error::Capacity(format!(
            "no assignment of {k} distinct objects to distinct verbs exists"
        )));
    }
    Ok(subjects
        .into_iter()
        .zip(chosen)
        .map(|(s, (v, o))| Factoid::new(&s, &vocab.verbs[v], &vocab.objects[o]))
        .collect())
}

// Depth-first search for `k` verbs (taken in `verbs` order) each paired with an unused object.
fn assign(
    verbs: &[usize],
    object_orders: &[Vec<usize>],
    k: usize,
    used: &mut [bool],
    chosen: &mut Vec<(usize, usize)>,
) -> bool {
    if chosen.len() == k {
        return true;
    }
    if verbs.len() < k - chosen.len() {
        return false;
    }
    let (&verb, rest) = verbs.split_first().expect("checked non-empty");
    for &obj in &object_orders[verb] {
        if used[obj] {
            continue;
        }
        used[obj] = true;
        chosen.push((verb, obj));
        if assign(rest, object_orders, k, used, chosen) {
            return true;
        }
        chosen.pop();
        used[obj] = false;
    }
    assign(rest, object_orders, k, used, chosen)
}
