//! Triple ingestion and tail-entity class grouping.
//!
//! Every unique tail entity of a triple file becomes one class; the class
//! holds the `(head, relation)` pairs of all triples pointing at it. Class
//! order is the order in which tails first appear, which fixes the row order
//! of every matrix built downstream.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk layout of a triple file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TripleFormat {
    /// `head<TAB>relation<TAB>tail`, one triple per line.
    #[default]
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleSet {
    triples: Vec<Triple>,
    entities: BTreeSet<String>,
    relations: BTreeSet<String>,
}

impl TripleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, triple: Triple) {
        if !self.entities.contains(&triple.head) {
            self.entities.insert(triple.head.clone());
        }
        if !self.entities.contains(&triple.tail) {
            self.entities.insert(triple.tail.clone());
        }
        if !self.relations.contains(&triple.relation) {
            self.relations.insert(triple.relation.clone());
        }
        self.triples.push(triple);
    }

    /// Appends `other` after the triples already held (split concatenation).
    pub fn extend(&mut self, other: TripleSet) {
        for t in other.triples {
            self.push(t);
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entities(&self) -> &BTreeSet<String> {
        &self.entities
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Encodes `%` and any whitespace inside a token as `%XX` UTF-8 escapes so
/// that tokens stay whitespace-free in the embedding file format.
pub fn encode_token(raw: &str) -> String {
    if !raw.chars().any(|c| c == '%' || c.is_whitespace()) {
        return raw.to_string();
    }
    let mut out = String::with_capacity(raw.len() + 8);
    let mut buf = [0u8; 4];
    for c in raw.chars() {
        if c == '%' || c.is_whitespace() {
            for b in c.encode_utf8(&mut buf).bytes() {
                out.push_str(&format!("%{b:02X}"));
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Parses a triple stream. Fields are trimmed; blank lines are skipped;
/// duplicates are kept as separate records.
pub fn parse_triples<R: BufRead>(source: R, format: TripleFormat) -> Result<TripleSet> {
    let TripleFormat::Tsv = format;
    let mut set = TripleSet::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let mut tokens = fields.iter().map(|f| f.trim());
        let (head, relation, tail) = (
            tokens.next().unwrap(),
            tokens.next().unwrap(),
            tokens.next().unwrap(),
        );
        for (name, value) in [("head", head), ("relation", relation), ("tail", tail)] {
            if value.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("empty {name} field"),
                });
            }
        }
        set.push(Triple {
            head: encode_token(head),
            relation: encode_token(relation),
            tail: encode_token(tail),
        });
    }
    if set.is_empty() {
        return Err(Error::NoTriples);
    }
    Ok(set)
}

/// Reads and concatenates several split files in the order given.
pub fn read_triple_files<P: AsRef<Path>>(paths: &[P]) -> Result<TripleSet> {
    if paths.is_empty() {
        return Err(Error::Config("at least one triple file is required".into()));
    }
    let mut all = TripleSet::new();
    for path in paths {
        let path = path.as_ref();
        let wrap = |e: Error| Error::File {
            path: path.to_path_buf(),
            source: Box::new(e),
        };
        let file = File::open(path).map_err(|e| wrap(e.into()))?;
        let set = parse_triples(BufReader::new(file), TripleFormat::Tsv).map_err(wrap)?;
        all.extend(set);
    }
    Ok(all)
}

/// One tail-entity class and the `(head, relation)` pairs that point at it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailClass {
    pub tail: String,
    pub pairs: Vec<(String, String)>,
}

impl TailClass {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassIndex {
    classes: Vec<TailClass>,
}

impl ClassIndex {
    pub fn classes(&self) -> &[TailClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.classes.iter().map(TailClass::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(TailClass::len).collect()
    }

    pub fn tails(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.tail.as_str()).collect()
    }
}

impl FromIterator<TailClass> for ClassIndex {
    fn from_iter<I: IntoIterator<Item = TailClass>>(iter: I) -> Self {
        ClassIndex {
            classes: iter.into_iter().filter(|c| !c.is_empty()).collect(),
        }
    }
}

pub fn group_by_tail(ts: &TripleSet) -> ClassIndex {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut classes: Vec<TailClass> = Vec::new();
    for t in ts.triples() {
        let i = *slot.entry(t.tail.as_str()).or_insert_with(|| {
            classes.push(TailClass {
                tail: t.tail.clone(),
                pairs: Vec::new(),
            });
            classes.len() - 1
        });
        classes[i].pairs.push((t.head.clone(), t.relation.clone()));
    }
    ClassIndex { classes }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub entity_count: usize,
    pub relation_count: usize,
    pub triple_count: usize,
    pub class_count: usize,
}

pub fn dataset_stats(ts: &TripleSet) -> DatasetStats {
    let tails: BTreeSet<&str> = ts.triples().iter().map(|t| t.tail.as_str()).collect();
    DatasetStats {
        entity_count: ts.entities().len(),
        relation_count: ts.relations().len(),
        triple_count: ts.len(),
        class_count: tails.len(),
    }
}

/// Keeps classes with at least `min_pairs` pairs, then (optionally) only the
/// `max_classes` largest of those. Ties on size go to the earlier class; the
/// surviving classes keep their original relative order.
pub fn filter_classes(
    ci: &ClassIndex,
    min_pairs: usize,
    max_classes: Option<usize>,
) -> Result<ClassIndex> {
    if min_pairs == 0 {
        return Err(Error::Config("min_pairs must be at least 1".into()));
    }
    if max_classes == Some(0) {
        return Err(Error::Config("max_classes must be at least 1".into()));
    }
    let mut keep: Vec<usize> = (0..ci.len())
        .filter(|&i| ci.classes[i].len() >= min_pairs)
        .collect();
    if let Some(cap) = max_classes {
        if keep.len() > cap {
            // stable sort: equal sizes stay in class order
            keep.sort_by_key(|&i| std::cmp::Reverse(ci.classes[i].len()));
            keep.truncate(cap);
            keep.sort_unstable();
        }
    }
    if keep.is_empty() {
        return Err(Error::NoClassesSurvive);
    }
    Ok(ClassIndex {
        classes: keep.into_iter().map(|i| ci.classes[i].clone()).collect(),
    })
}
