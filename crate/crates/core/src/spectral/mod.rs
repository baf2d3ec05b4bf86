//! Normalized class-graph Laplacian, its eigenvalues, and the cumulative
//! spectral gradient derived from consecutive eigenvalue gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SimilarityMatrix;

mod general;

/// Largest admissible disagreement between the gap sum and `λ_kc − λ_0`.
pub const TELESCOPING_TOLERANCE: f64 = 1e-12;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_ITERATIONS: usize = 60;

/// `W = (S + Sᵀ) / 2`.
pub fn symmetrize(s: &SimilarityMatrix) -> SimilarityMatrix {
    let n = s.order();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = s.get(i, i);
        for j in 0..i {
            let v = (s.get(i, j) + s.get(j, i)) / 2.0;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    let mut meta = s.meta;
    meta.symmetrized = true;
    SimilarityMatrix::from_parts(n, entries, meta)
}

/// Row sums of `W`. A zero (or negative) degree is an isolated class.
pub fn degree_matrix(w: &SimilarityMatrix) -> Result<Vec<f64>> {
    let degrees = w.row_sums();
    if let Some(index) = degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::IsolatedClass { index, class: None });
    }
    Ok(degrees)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    order: usize,
    entries: Vec<f64>,
    symmetric: bool,
}

impl Laplacian {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::NotSquare);
        }
        let entries = rows.concat();
        let symmetric =
            (0..order).all(|i| (0..i).all(|j| entries[i * order + j] == entries[j * order + i]));
        Ok(Laplacian {
            order,
            entries,
            symmetric,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }
}

/// `L = I − D^{-1/2} W D^{-1/2}` for symmetric `W`. Only the lower triangle is
/// computed; the upper one is its mirror image.
pub fn normalized_laplacian(w: &SimilarityMatrix) -> Result<Laplacian> {
    if !w.is_symmetric() {
        return Err(Error::Config(
            "normalized_laplacian needs a symmetric matrix; symmetrize first".into(),
        ));
    }
    let n = w.order();
    let inv_sqrt: Vec<f64> = degree_matrix(w)?.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let delta = if i == j { 1.0 } else { 0.0 };
            let v = delta - w.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(Laplacian {
        order: n,
        entries,
        symmetric: true,
    })
}

/// The same formula applied to a possibly non-symmetric `S`, as written.
/// With row-stochastic `S` this is `I − S`.
pub fn laplacian_as_written(s: &SimilarityMatrix) -> Result<Laplacian> {
    let n = s.order();
    let inv_sqrt: Vec<f64> = degree_matrix(s)?.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            entries[i * n + j] = delta - s.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let symmetric = (0..n).all(|i| (0..i).all(|j| entries[i * n + j] == entries[j * n + i]));
    Ok(Laplacian {
        order: n,
        entries,
        symmetric,
    })
}

/// Eigenvalues sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn from_unsorted(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Spectrum { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// One eigenvalue per line, full precision.
    pub fn write_lines<W: std::io::Write>(&self, mut sink: W) -> Result<()> {
        for v in &self.eigenvalues {
            writeln!(sink, "{v}")?;
        }
        Ok(())
    }
}

/// Reduces a symmetric matrix (row-major, destroyed) to tridiagonal form by
/// Householder reflections. Returns `(diagonal, subdiagonal)`, where
/// `subdiagonal[i]` couples rows `i - 1` and `i` and `subdiagonal[0] = 0`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        if l == 0 {
            e[i] = a[i * n + l];
            continue;
        }
        let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
        if scale == 0.0 {
            e[i] = a[i * n + l];
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            a[i * n + k] /= scale;
            h += a[i * n + k] * a[i * n + k];
        }
        let f = a[i * n + l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        a[i * n + l] = f - g;

        // p = A u / h, stored in e[0..=l]
        let mut f = 0.0;
        for j in 0..=l {
            let mut g = 0.0;
            for k in 0..=j {
                g += a[j * n + k] * a[i * n + k];
            }
            for k in (j + 1)..=l {
                g += a[k * n + j] * a[i * n + k];
            }
            e[j] = g / h;
            f += e[j] * a[i * n + j];
        }
        let hh = f / (h + h);
        // A ← A − q uᵀ − u qᵀ on the lower triangle
        for j in 0..=l {
            let f = a[i * n + j];
            let g = e[j] - hh * f;
            e[j] = g;
            for k in 0..=j {
                a[j * n + k] -= f * e[k] + g * a[i * n + k];
            }
        }
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[i * n + i];
    }
    e[0] = 0.0;
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. Eigenvalues are
/// returned in `d` (unsorted).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence { index: l });
            }

            // Wilkinson-style shift from the leading 2×2 block
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All eigenvalues of a symmetric Laplacian: Householder tridiagonalization
/// followed by implicit-shift QL.
pub fn eigenvalues_symmetric(l: &Laplacian) -> Result<Spectrum> {
    if !l.symmetric {
        return Err(Error::Config(
            "eigenvalues_symmetric needs a symmetric Laplacian".into(),
        ));
    }
    let n = l.order;
    let mut a = l.entries.clone();
    let (mut d, mut e) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(Spectrum::from_unsorted(d))
}

/// Spectrum of a general real matrix, reduced to real parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralSpectrum {
    /// Real parts, ascending.
    pub real: Spectrum,
    /// Largest |imaginary part| over all eigenvalues.
    pub max_imag: f64,
}

/// Eigenvalues of a non-symmetric Laplacian: balancing, Hessenberg reduction
/// and Francis double-shift QR.
pub fn eigenvalues_general(l: &Laplacian) -> Result<GeneralSpectrum> {
    let n = l.order;
    if n == 0 {
        return Ok(GeneralSpectrum {
            real: Spectrum::from_unsorted(Vec::new()),
            max_imag: 0.0,
        });
    }
    let eig = general::eigenvalues(n, l.entries.clone())?;
    let max_imag = eig.iter().map(|&(_, im)| im.abs()).fold(0.0, f64::max);
    Ok(GeneralSpectrum {
        real: Spectrum::from_unsorted(eig.iter().map(|&(re, _)| re).collect()),
        max_imag,
    })
}

/// Result of the gap-sum computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Csg {
    /// `λ_{C−1} − λ_0`.
    pub full: f64,
    /// `(k_c, λ_kc − λ_0)` when a cutoff was requested.
    pub at: Vec<(usize, f64)>,
}

fn csg_to(eigs: &[f64], k_c: usize) -> Result<f64> {
    let gap_sum: f64 = eigs[..=k_c].windows(2).map(|w| w[1] - w[0]).sum();
    let closed_form = eigs[k_c] - eigs[0];
    if (gap_sum - closed_form).abs() > TELESCOPING_TOLERANCE {
        return Err(Error::Telescoping {
            gap_sum,
            closed_form,
        });
    }
    Ok(closed_form)
}

/// Cumulative spectral gradient. Sums the consecutive gaps up to `k_c` and
/// checks the sum against the telescoped form `λ_kc − λ_0`.
pub fn csg(spec: &Spectrum, k_c: Option<usize>) -> Result<Csg> {
    let eigs = spec.eigenvalues();
    if eigs.is_empty() {
        return Err(Error::Config("empty spectrum".into()));
    }
    let last = eigs.len() - 1;
    let full = csg_to(eigs, last)?;
    let at = match k_c {
        None => Vec::new(),
        Some(kc) if kc >= 1 && kc <= last => vec![(kc, csg_to(eigs, kc)?)],
        Some(kc) => return Err(Error::CutoffOutOfRange { k_c: kc, max: last }),
    };
    Ok(Csg { full, at })
}
