//! Per-class Monte-Carlo sampling, exact k-NN over the pooled sample, and the
//! class similarity matrix built from neighbor hits.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::CompositeVector;
use crate::error::{Error, Result};

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds several integers into one stream seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6a09_e667_f3bc_c908, |acc, &p| mix64(acc ^ mix64(p)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPool {
    vectors: Vec<CompositeVector>,
    per_class_counts: Vec<usize>,
    /// Source positions within each class, in draw order.
    drawn: Vec<Vec<usize>>,
    rng_seed: u64,
    cap: usize,
}

impl SampledPool {
    pub fn vectors(&self) -> &[CompositeVector] {
        &self.vectors
    }

    pub fn per_class_counts(&self) -> &[usize] {
        &self.per_class_counts
    }

    pub fn drawn(&self) -> &[Vec<usize>] {
        &self.drawn
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Configured per-class cap `M`.
    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.per_class_counts.len()
    }
}

/// Pool size `sample_pool` would produce, without drawing anything.
pub fn realized_pool_size(class_sizes: &[usize], m: usize) -> usize {
    class_sizes.iter().map(|&n| n.min(m)).sum()
}

/// Draws `min(M, |class|)` vectors per class without replacement. Class `i`
/// uses its own generator seeded from `(seed, i)`.
pub fn sample_pool(class_vectors: &[Vec<CompositeVector>], m: usize, seed: u64) -> Result<SampledPool> {
    if class_vectors.len() < 2 {
        return Err(Error::TooFewClasses(class_vectors.len()));
    }
    if m == 0 {
        return Err(Error::Config("M must be at least 1".into()));
    }
    if let Some(i) = class_vectors.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!("class {i} is empty")));
    }

    let drawn: Vec<Vec<usize>> = class_vectors
        .par_iter()
        .enumerate()
        .map(|(i, vs)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, i as u64]));
            index::sample(&mut rng, vs.len(), m.min(vs.len())).into_vec()
        })
        .collect();

    let per_class_counts = drawn.iter().map(Vec::len).collect();
    let vectors = drawn
        .iter()
        .zip(class_vectors)
        .enumerate()
        .flat_map(|(i, (picks, vs))| {
            picks.iter().map(move |&p| CompositeVector::new(vs[p].components.clone(), i))
        })
        .collect();
    Ok(SampledPool {
        vectors,
        per_class_counts,
        drawn,
        rng_seed: seed,
        cap: m,
    })
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

pub fn l2_distance_sq(a: &CompositeVector, b: &CompositeVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(dist_sq(&a.components, &b.components))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborList {
    pub query: usize,
    /// Pool positions, nearest first; equal distances ordered by position.
    pub neighbors: Vec<usize>,
}

/// Queries per tile; each candidate row is loaded once per tile.
const QUERY_BLOCK: usize = 16;

/// Exact k-NN over the pool, excluding each query itself.
pub fn knn_exact(pool: &SampledPool, k: usize) -> Result<Vec<NeighborList>> {
    knn_search(pool, k, false)
}

/// Exact k-NN over the pool. With `include_self` the query is a candidate
/// like any other (at distance 0), so `k` may equal the pool size.
pub fn knn_search(pool: &SampledPool, k: usize, include_self: bool) -> Result<Vec<NeighborList>> {
    let n = pool.len();
    let limit = if include_self { n } else { n.saturating_sub(1) };
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > limit {
        return Err(Error::KExceedsPool { k, pool_size: n });
    }
    let dim = pool.vectors[0].len();
    if let Some(bad) = pool.vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::LengthMismatch(dim, bad.len()));
    }
    let flat: Vec<f64> = pool
        .vectors
        .iter()
        .flat_map(|v| v.components.iter().copied())
        .collect();
    let row = |i: usize| &flat[i * dim..(i + 1) * dim];

    let blocks: Vec<Vec<NeighborList>> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(QUERY_BLOCK)
        .map(|queries| {
            let mut dists = vec![0.0; queries.len() * n];
            for j in 0..n {
                let cand = row(j);
                for (qi, &q) in queries.iter().enumerate() {
                    dists[qi * n + j] = dist_sq(row(q), cand);
                }
            }
            let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
            queries
                .iter()
                .enumerate()
                .map(|(qi, &q)| {
                    scratch.clear();
                    scratch.extend(
                        dists[qi * n..(qi + 1) * n]
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| include_self || j != q)
                            .map(|(j, &d)| (d, j)),
                    );
                    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
                        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                    };
                    if k < scratch.len() {
                        scratch.select_nth_unstable_by(k - 1, cmp);
                        scratch.truncate(k);
                    }
                    scratch.sort_unstable_by(cmp);
                    NeighborList {
                        query: q,
                        neighbors: scratch.iter().map(|&(_, j)| j).collect(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityMeta {
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub symmetrized: bool,
}

/// Dense C×C class-overlap matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    order: usize,
    entries: Vec<f64>,
    pub meta: SimilarityMeta,
}

impl SimilarityMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::NotSquare);
        }
        Ok(SimilarityMatrix {
            order,
            entries: rows.concat(),
            meta: SimilarityMeta::default(),
        })
    }

    pub(crate) fn from_parts(order: usize, entries: Vec<f64>, meta: SimilarityMeta) -> Self {
        debug_assert_eq!(entries.len(), order * order);
        SimilarityMatrix {
            order,
            entries,
            meta,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.order..(i + 1) * self.order]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.order).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// CSV dump: header `class,<tail_1>,...`, then one row per class.
    pub fn write_csv<W: std::io::Write>(&self, labels: &[&str], sink: W) -> Result<()> {
        if labels.len() != self.order {
            return Err(Error::Config(format!(
                "{} labels for a matrix of order {}",
                labels.len(),
                self.order
            )));
        }
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(std::iter::once("class").chain(labels.iter().copied()))?;
        for (i, label) in labels.iter().enumerate() {
            let mut rec = vec![label.to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `S_ij` = share of class-i queries' neighbors that fall in class j,
/// normalized by the realized sample count `M_i` times `k`.
pub fn build_similarity(
    pool: &SampledPool,
    neighbor_lists: &[NeighborList],
    k: usize,
) -> Result<SimilarityMatrix> {
    let c = pool.class_count();
    if neighbor_lists.len() != pool.len() {
        return Err(Error::Config(format!(
            "{} neighbor lists for a pool of {}",
            neighbor_lists.len(),
            pool.len()
        )));
    }
    let mut hits = vec![0u64; c * c];
    for list in neighbor_lists {
        if list.neighbors.len() != k {
            return Err(Error::Config(format!(
                "neighbor list for {} has {} entries, expected k = {k}",
                list.query,
                list.neighbors.len()
            )));
        }
        let ci = pool.vectors[list.query].class_id;
        for &n in &list.neighbors {
            hits[ci * c + pool.vectors[n].class_id] += 1;
        }
    }
    let mut entries = vec![0.0; c * c];
    for i in 0..c {
        let denom = (pool.per_class_counts[i] * k) as f64;
        for j in 0..c {
            entries[i * c + j] = hits[i * c + j] as f64 / denom;
        }
    }
    Ok(SimilarityMatrix::from_parts(
        c,
        entries,
        SimilarityMeta {
            m: pool.cap,
            k,
            seed: pool.rng_seed,
            symmetrized: false,
        },
    ))
}
