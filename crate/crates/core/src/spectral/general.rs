//! Eigenvalues of a general real matrix: diagonal balancing, reduction to
//! upper Hessenberg form by stabilized elimination, then Francis double-shift
//! QR with exceptional shifts.

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;
const MAX_ITERATIONS: usize = 60;

struct Dense {
    n: usize,
    a: Vec<f64>,
}

impl Dense {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }
}

fn balance(m: &mut Dense) {
    let n = m.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += m.at(j, i).abs();
                    r += m.at(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    *m.at_mut(i, j) *= g;
                }
                for j in 0..n {
                    *m.at_mut(j, i) *= f;
                }
            }
        }
    }
}

fn to_hessenberg(m: &mut Dense) {
    let n = m.n;
    for col in 1..n.saturating_sub(1) {
        let mut pivot = 0.0;
        let mut row = col;
        for j in col..n {
            if m.at(j, col - 1).abs() > f64::abs(pivot) {
                pivot = m.at(j, col - 1);
                row = j;
            }
        }
        if row != col {
            for j in (col - 1)..n {
                m.a.swap(row * n + j, col * n + j);
            }
            for i in 0..n {
                m.a.swap(i * n + row, i * n + col);
            }
        }
        if pivot != 0.0 {
            for i in (col + 1)..n {
                let mut y = m.at(i, col - 1);
                if y != 0.0 {
                    y /= pivot;
                    *m.at_mut(i, col - 1) = y;
                    for j in col..n {
                        let v = m.at(col, j);
                        *m.at_mut(i, j) -= y * v;
                    }
                    for j in 0..n {
                        let v = m.at(j, i);
                        *m.at_mut(j, col) += y * v;
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            *m.at_mut(i, j) = 0.0;
        }
    }
}

/// Returns `(re, im)` pairs of all eigenvalues of the upper Hessenberg `m`.
fn hessenberg_qr(m: &mut Dense) -> Result<Vec<(f64, f64)>> {
    let n = m.n;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += m.at(i, j).abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // look for a single small subdiagonal element
            let mut l = nu;
            while l > 0 {
                let mut s = m.at(l - 1, l - 1).abs() + m.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if m.at(l, l - 1).abs() <= f64::EPSILON * s {
                    *m.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = m.at(nu, nu);
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = m.at(nu - 1, nu - 1);
            let mut w = m.at(nu, nu - 1) * m.at(nu - 1, nu);
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }

            if its == MAX_ITERATIONS {
                return Err(Error::NoConvergence { index: nu });
            }
            if its > 0 && its % 10 == 0 {
                t += x;
                for i in 0..=nu {
                    *m.at_mut(i, i) -= x;
                }
                let s = m.at(nu, nu - 1).abs() + m.at(nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // find two consecutive small subdiagonal elements
            let mut mm = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = m.at(mm, mm);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / m.at(mm + 1, mm) + m.at(mm, mm + 1);
                q = m.at(mm + 1, mm + 1) - z - rr - ss;
                r = m.at(mm + 2, mm + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mm == l {
                    break;
                }
                let u = m.at(mm, mm - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (m.at(mm - 1, mm - 1).abs() + z.abs() + m.at(mm + 1, mm + 1).abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                mm -= 1;
            }
            for i in (mm + 2)..=nu {
                *m.at_mut(i, i - 2) = 0.0;
                if i != mm + 2 {
                    *m.at_mut(i, i - 3) = 0.0;
                }
            }

            // double QR step on rows l..=nn, columns mm..=nn
            let mut k = mm;
            while k < nu {
                let mut xx = 0.0;
                if k != mm {
                    p = m.at(k, k - 1);
                    q = m.at(k + 1, k - 1);
                    r = if k + 1 != nu { m.at(k + 2, k - 1) } else { 0.0 };
                    xx = p.abs() + q.abs() + r.abs();
                    if xx != 0.0 {
                        p /= xx;
                        q /= xx;
                        r /= xx;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == mm {
                        if l != mm {
                            *m.at_mut(k, k - 1) = -m.at(k, k - 1);
                        }
                    } else {
                        *m.at_mut(k, k - 1) = -s * xx;
                    }
                    p += s;
                    let xk = p / s;
                    let yk = q / s;
                    let zk = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pj = m.at(k, j) + q * m.at(k + 1, j);
                        if k + 1 != nu {
                            pj += r * m.at(k + 2, j);
                            *m.at_mut(k + 2, j) -= pj * zk;
                        }
                        *m.at_mut(k + 1, j) -= pj * yk;
                        *m.at_mut(k, j) -= pj * xk;
                    }
                    let mmin = nu.min(k + 3);
                    for i in l..=mmin {
                        let mut pi = xk * m.at(i, k) + yk * m.at(i, k + 1);
                        if k + 1 != nu {
                            pi += zk * m.at(i, k + 2);
                            *m.at_mut(i, k + 2) -= pi * r;
                        }
                        *m.at_mut(i, k + 1) -= pi * q;
                        *m.at_mut(i, k) -= pi;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

/// All eigenvalues of the `n × n` row-major matrix `a`, as `(re, im)` pairs.
pub(super) fn eigenvalues(n: usize, a: Vec<f64>) -> Result<Vec<(f64, f64)>> {
    assert_eq!(a.len(), n * n);
    let mut m = Dense { n, a };
    balance(&mut m);
    to_hessenberg(&mut m);
    let eig = hessenberg_qr(&mut m)?;
    if let Some(index) = eig.iter().position(|(re, im)| !re.is_finite() || !im.is_finite()) {
        return Err(Error::NoConvergence { index });
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    fn close(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn triangular_and_diagonal() {
        let e = sorted(eigenvalues(3, vec![3.0, 1.0, 7.0, 0.0, -2.0, 4.0, 0.0, 0.0, 0.5]).unwrap());
        close(&e, &[(-2.0, 0.0), (0.5, 0.0), (3.0, 0.0)], 1e-12);
        assert_eq!(eigenvalues(1, vec![4.5]).unwrap(), vec![(4.5, 0.0)]);
    }

    #[test]
    fn complex_pair() {
        // 90° rotation scaled by 2: ±2i
        let e = sorted(eigenvalues(2, vec![0.0, -2.0, 2.0, 0.0]).unwrap());
        close(&e, &[(0.0, -2.0), (0.0, 2.0)], 1e-12);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let a = vec![
            10.0, -35.0, 50.0, -24.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        ];
        let e = sorted(eigenvalues(4, a).unwrap());
        close(&e, &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)], 1e-9);
    }

    #[test]
    fn permutation_cycle_roots_of_unity() {
        // cyclic shift of order 3: eigenvalues 1, e^{±2πi/3}
        let e = sorted(eigenvalues(3, vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap());
        let h = 3f64.sqrt() / 2.0;
        close(&e, &[(-0.5, -h), (-0.5, h), (1.0, 0.0)], 1e-12);
    }
}
