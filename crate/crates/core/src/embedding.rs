//! Token embedding tables and head–relation composite vectors.
//!
//! File format (text):
//!
//! ```text
//! <token_count> <dim>
//! <token> <v_1> ... <v_dim>
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! store written and read back is bit-identical.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, TokenRole};
use crate::kg::{ClassIndex, TripleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    tokens: Vec<String>,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        EmbeddingStore {
            dim,
            tokens: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in insertion order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                token: token.to_string(),
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                token: token.to_string(),
                value: bad.to_string(),
            });
        }
        if self.index.contains_key(token) {
            return Err(Error::DuplicateToken(token.to_string()));
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.values.extend_from_slice(vector);
        Ok(())
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "{} {}", self.len(), self.dim)?;
        for (i, token) in self.tokens.iter().enumerate() {
            sink.write_all(token.as_bytes())?;
            for v in &self.values[i * self.dim..(i + 1) * self.dim] {
                write!(sink, " {v}")?;
            }
            sink.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn load_embeddings<R: BufRead>(source: R) -> Result<EmbeddingStore> {
    let mut lines = source.lines();
    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::EmbeddingFormat("missing header".into())),
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parsed: Option<(usize, usize)> = match fields.as_slice() {
        [count, dim] => count.parse().ok().zip(dim.parse().ok()),
        _ => None,
    };
    let (count, dim) = parsed.ok_or_else(|| {
        Error::EmbeddingFormat(format!("header must be `<token_count> <dim>`, got `{header}`"))
    })?;
    if dim == 0 {
        return Err(Error::EmbeddingFormat("dimension must be positive".into()));
    }

    let mut store = EmbeddingStore::new(dim);
    let mut row = Vec::with_capacity(dim);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        row.clear();
        for raw in fields {
            let v: f64 = raw.parse().map_err(|_| {
                Error::EmbeddingFormat(format!("line {}: bad number `{raw}`", idx + 2))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    token: token.to_string(),
                    value: raw.to_string(),
                });
            }
            row.push(v);
        }
        store.insert(token, &row)?;
    }
    if store.len() != count {
        return Err(Error::EmbeddingFormat(format!(
            "header declares {count} tokens, file has {}",
            store.len()
        )));
    }
    Ok(store)
}

fn token_key(seed: u64, token: &str) -> u64 {
    // FNV-1a over (seed, token), then a splitmix finalizer
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    crate::sampling::mix64(h)
}

/// Deterministic stand-in embedder: each token's vector is uniform noise on
/// `[-1, 1]^dim` drawn from a generator keyed by `(seed, token)`.
pub fn hash_embed<I, S>(tokens: I, dim: usize, seed: u64) -> EmbeddingStore
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut store = EmbeddingStore::new(dim);
    let mut row = vec![0.0; dim];
    for token in tokens {
        let token = token.as_ref();
        if store.contains(token) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(token_key(seed, token));
        for v in row.iter_mut() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        store.insert(token, &row).expect("hash rows are well-formed");
    }
    store
}

/// Every entity and relation token of a triple set, sorted.
pub fn vocabulary(ts: &TripleSet) -> Vec<&str> {
    let mut all: Vec<&str> = ts
        .entities()
        .iter()
        .chain(ts.relations())
        .map(String::as_str)
        .collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// `φ(h, r) = e_h ⊕ e_r`, tagged with the class it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeVector {
    pub components: Vec<f64>,
    pub class_id: usize,
}

impl CompositeVector {
    pub fn new(components: Vec<f64>, class_id: usize) -> Self {
        CompositeVector {
            components,
            class_id,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Scales to unit L2 norm; zero vectors are left alone.
    pub fn normalize(&mut self) {
        let norm = self.components.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.components.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// Concatenates head and relation vectors. The result carries class id 0
/// until it is assigned to a class.
pub fn compose(store: &EmbeddingStore, head: &str, relation: &str) -> Result<CompositeVector> {
    let missing = |token: &str, role| Error::MissingToken {
        token: token.to_string(),
        role,
        class: None,
    };
    let h = store.get(head).ok_or_else(|| missing(head, TokenRole::Head))?;
    let r = store
        .get(relation)
        .ok_or_else(|| missing(relation, TokenRole::Relation))?;
    let mut components = Vec::with_capacity(2 * store.dim());
    components.extend_from_slice(h);
    components.extend_from_slice(r);
    Ok(CompositeVector::new(components, 0))
}

/// One list of composite vectors per class, in class order and pair order.
pub fn materialize_class_vectors(
    store: &EmbeddingStore,
    ci: &ClassIndex,
) -> Result<Vec<Vec<CompositeVector>>> {
    ci.classes()
        .iter()
        .enumerate()
        .map(|(class_id, class)| {
            class
                .pairs
                .iter()
                .map(|(h, r)| {
                    let mut v = compose(store, h, r).map_err(|e| match e {
                        Error::MissingToken { token, role, .. } => Error::MissingToken {
                            token,
                            role,
                            class: Some(class.tail.clone()),
                        },
                        other => other,
                    })?;
                    v.class_id = class_id;
                    Ok(v)
                })
                .collect()
        })
        .collect()
}
