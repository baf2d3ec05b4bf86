//! Independent oracles and random instance generators shared by the
//! integration suites. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use csg_core::embedding::CompositeVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full-sort k-NN: every pair's distance, sorted by (distance, index).
pub fn brute_knn(points: &[Vec<f64>], k: usize, include_self: bool) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| include_self || j != i)
                .map(|j| {
                    let mut d = 0.0;
                    for l in 0..points[i].len() {
                        d += (points[i][l] - points[j][l]) * (points[i][l] - points[j][l]);
                    }
                    (d, j)
                })
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Neighbor-hit fractions from brute-force k-NN; `class_of[i]` labels point i.
pub fn brute_similarity(points: &[Vec<f64>], class_of: &[usize], k: usize) -> Vec<Vec<f64>> {
    let c = class_of.iter().max().unwrap() + 1;
    let mut hits = vec![vec![0usize; c]; c];
    let mut sizes = vec![0usize; c];
    for (i, nbrs) in brute_knn(points, k, false).iter().enumerate() {
        sizes[class_of[i]] += 1;
        for &j in nbrs {
            hits[class_of[i]][class_of[j]] += 1;
        }
    }
    hits.iter()
        .zip(&sizes)
        .map(|(row, &n)| row.iter().map(|&h| h as f64 / (n * k) as f64).collect())
        .collect()
}

#[derive(Clone, Copy, Debug)]
struct Cx(f64, f64);

impl Cx {
    fn add(self, o: Cx) -> Cx {
        Cx(self.0 + o.0, self.1 + o.1)
    }
    fn sub(self, o: Cx) -> Cx {
        Cx(self.0 - o.0, self.1 - o.1)
    }
    fn mul(self, o: Cx) -> Cx {
        Cx(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn div(self, o: Cx) -> Cx {
        let d = o.0 * o.0 + o.1 * o.1;
        Cx((self.0 * o.0 + self.1 * o.1) / d, (self.1 * o.0 - self.0 * o.1) / d)
    }
}

/// Characteristic polynomial coefficients (monic, highest degree first) by
/// the Faddeev–LeVerrier recurrence.
pub fn characteristic_polynomial(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += a[i][l] * m[l][j];
                }
                next[i][j] = s + if i == j { coeffs[k - 1] } else { 0.0 };
            }
        }
        m = next;
        let mut tr = 0.0;
        for i in 0..n {
            for l in 0..n {
                tr += a[i][l] * m[l][i];
            }
        }
        coeffs[k] = -tr / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[f64], z: Cx) -> Cx {
    coeffs.iter().fold(Cx(0.0, 0.0), |acc, &c| acc.mul(z).add(Cx(c, 0.0)))
}

/// Real parts of all polynomial roots (Durand–Kerner), ascending.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    let seed = Cx(0.4, 0.9);
    let mut roots: Vec<Cx> = (0..n)
        .map(|i| (0..i).fold(Cx(1.0, 0.0), |acc, _| acc.mul(seed)))
        .collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = Cx(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom = denom.mul(roots[i].sub(roots[j]));
                }
            }
            let step = horner(coeffs, roots[i]).div(denom);
            roots[i] = roots[i].sub(step);
            delta = delta.max(step.0.abs() + step.1.abs());
        }
        if delta < 1e-15 {
            break;
        }
    }
    let mut re: Vec<f64> = roots.iter().map(|z| z.0).collect();
    re.sort_by(f64::total_cmp);
    re
}

/// Random row-stochastic matrix with entries bounded away from zero, so the
/// class graph is connected.
pub fn random_stochastic(c: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..c)
        .map(|_| {
            let row: Vec<f64> = (0..c).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            row.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Gaussian-ish blobs, one per class, with random sizes.
pub struct BlobSpec {
    pub classes: usize,
    pub dim: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub spread: f64,
    pub separation: f64,
}

pub fn blobs(spec: &BlobSpec, rng: &mut impl Rng) -> Vec<Vec<CompositeVector>> {
    (0..spec.classes)
        .map(|c| {
            let center: Vec<f64> = (0..spec.dim)
                .map(|_| rng.gen_range(-1.0..1.0) * spec.separation)
                .collect();
            let n = rng.gen_range(spec.min_size..=spec.max_size);
            (0..n)
                .map(|_| {
                    let v = center
                        .iter()
                        .map(|x| x + spec.spread * (rng.gen::<f64>() + rng.gen::<f64>() - 1.0))
                        .collect();
                    CompositeVector::new(v, c)
                })
                .collect()
        })
        .collect()
}

/// Classes drawn from one shared distribution (no class structure at all).
pub fn overlapping(classes: usize, per_class: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<CompositeVector>> {
    (0..classes)
        .map(|c| {
            (0..per_class)
                .map(|_| CompositeVector::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(), c))
                .collect()
        })
        .collect()
}

/// Classes around far-apart centers on the coordinate axes.
pub fn separated(classes: usize, per_class: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<CompositeVector>> {
    (0..classes)
        .map(|c| {
            (0..per_class)
                .map(|_| {
                    let v = (0..dim)
                        .map(|d| if d == c % dim { 1000.0 * (1 + c / dim) as f64 } else { 0.0 } + rng.gen_range(-1.0..1.0))
                        .collect();
                    CompositeVector::new(v, c)
                })
                .collect()
        })
        .collect()
}

/// Connectivity of the graph with an edge wherever `w[i][j] > 0`.
pub fn connected(w: &[f64], n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && w[i * n + j] > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn splits(name: &str) -> Vec<std::path::PathBuf> {
    ["train.txt", "valid.txt", "test.txt"]
        .iter()
        .map(|f| data_dir().join(name).join(f))
        .collect()
}
