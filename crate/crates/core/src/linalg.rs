//! Dense and banded kernels shared by the solvers.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Sub};

/// Field over which the banded factorization runs.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Symmetric banded matrix in lower band storage; row i holds columns i-p..=i.
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    pub n: usize,
    pub p: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, data: vec![T::zero(); n * (p + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.p + 1) + (j + self.p - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.p {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` at (i, j) with i >= j.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] = self.data[k] + v;
    }
}

/// Breakdown during a factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub row: usize,
}

/// Banded LDL^T factorization without pivoting (SPD or complex symmetric).
#[derive(Debug, Clone)]
pub struct BandLdl<T> {
    n: usize,
    p: usize,
    l: Vec<T>,
    d: Vec<T>,
}

impl<T: Scalar> BandLdl<T> {
    pub fn factor(a: &BandMatrix<T>) -> Result<Self, Breakdown> {
        let n = a.n;
        let p = a.p;
        let w = p + 1;
        let mut l = a.data.clone();
        let mut d = vec![T::zero(); n];
        let mut scaled = vec![T::zero(); w];
        let scale: f64 = (0..n).map(|i| a.data[i * w + p].modulus()).fold(0.0, f64::max);
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..i {
                let k0 = j.saturating_sub(p).max(j0);
                let mut s = l[i * w + (j + p - i)];
                let rj = j * w + p - j;
                for k in k0..j {
                    s = s - scaled[k - j0] * l[rj + k];
                }
                scaled[j - j0] = s;
                l[i * w + (j + p - i)] = s / d[j];
            }
            let mut di = l[i * w + p];
            for j in j0..i {
                di = di - scaled[j - j0] * l[i * w + (j + p - i)];
            }
            if !(di.modulus() > 1e-300 && di.modulus() > 1e-15 * scale) {
                return Err(Breakdown { row: i });
            }
            d[i] = di;
            l[i * w + p] = T::from_f64(1.0);
        }
        Ok(Self { n, p, l, d })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            let row = &self.l[i * w + (j0 + p - i)..i * w + p];
            let mut s = x[i];
            for (lij, xj) in row.iter().zip(&x[j0..i]) {
                s = s - *lij * *xj;
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] = x[i] / self.d[i];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            let j0 = i.saturating_sub(p);
            let row = &self.l[i * w + (j0 + p - i)..i * w + p];
            for (lij, xj) in row.iter().zip(x[j0..i].iter_mut()) {
                *xj = *xj - *lij * xi;
            }
        }
    }
}

/// Symmetric tridiagonal LDL^T.
#[derive(Debug, Clone)]
pub struct TridiagLdl {
    l: Vec<f64>,
    d: Vec<f64>,
}

impl TridiagLdl {
    /// `diag` has length n, `off` length n-1.
    pub fn factor(diag: &[f64], off: &[f64]) -> Result<Self, Breakdown> {
        let n = diag.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut di = diag[i];
            if i > 0 {
                di -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if !(di.abs() > 1e-300) {
                return Err(Breakdown { row: i });
            }
            d[i] = di;
            if i + 1 < n {
                l[i] = off[i] / di;
            }
        }
        Ok(Self { l, d })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
    }
}

/// Dense symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// `a` is row-major n x n; returns ascending eigenvalues and column eigenvectors (row-major).
pub fn jacobi_eigen(a: &[f64], n: usize, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= tol * fro.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a * n + a].partial_cmp(&m[b * n + b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (c, &o) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + c] = v[r * n + o];
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Vec<f64> {
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| a[i * n + c].abs().partial_cmp(&a[j * n + c].abs()).unwrap()).unwrap();
            for k in 0..n {
                a.swap(c * n + k, piv * n + k);
            }
            b.swap(c, piv);
            for r in (c + 1)..n {
                let f = a[r * n + c] / a[c * n + c];
                for k in c..n {
                    a[r * n + k] -= f * a[c * n + k];
                }
                b[r] -= f * b[c];
            }
        }
        for r in (0..n).rev() {
            let mut s = b[r];
            for k in (r + 1)..n {
                s -= a[r * n + k] * b[k];
            }
            b[r] = s / a[r * n + r];
        }
        b
    }

    #[test]
    fn band_ldl_matches_dense_elimination() {
        let (n, p) = (50, 7);
        let mut seed = 7u64;
        let mut band = BandMatrix::<f64>::zeros(n, p);
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in i.saturating_sub(p)..i {
                let v = lcg(&mut seed) - 0.5;
                band.add(i, j, v);
                dense[i * n + j] = v;
                dense[j * n + i] = v;
            }
            let v = 2.0 * p as f64 + lcg(&mut seed);
            band.add(i, i, v);
            dense[i * n + i] = v;
        }
        let b: Vec<f64> = (0..n).map(|_| lcg(&mut seed)).collect();
        let want = dense_solve(dense, b.clone(), n);
        let f = BandLdl::factor(&band).unwrap();
        let mut x = b;
        f.solve_in_place(&mut x);
        let num: f64 = x.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = want.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den < 1e-10);
    }

    #[test]
    fn complex_band_ldl_solves() {
        let n = 30;
        let z = Complex64::new(0.3, 2.0);
        let mut band = BandMatrix::<Complex64>::zeros(n, 1);
        for i in 0..n {
            band.add(i, i, z + Complex64::from_f64(2.0));
            if i > 0 {
                band.add(i, i - 1, Complex64::from_f64(-1.0));
            }
        }
        let f = BandLdl::factor(&band).unwrap();
        let mut x = vec![Complex64::from_f64(1.0); n];
        f.solve_in_place(&mut x);
        for i in 0..n {
            let mut r = (z + Complex64::from_f64(2.0)) * x[i];
            if i > 0 {
                r -= x[i - 1];
            }
            if i + 1 < n {
                r -= x[i + 1];
            }
            assert!((r - Complex64::from_f64(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_identity_and_scalar() {
        let f = TridiagLdl::factor(&[1.0, 1.0, 1.0], &[0.0, 0.0]).unwrap();
        let mut x = vec![3.0, -1.0, 2.0];
        f.solve_in_place(&mut x);
        assert_eq!(x, vec![3.0, -1.0, 2.0]);
        let f = TridiagLdl::factor(&[4.0], &[]).unwrap();
        let mut x = vec![1.0];
        f.solve_in_place(&mut x);
        assert_eq!(x, vec![0.25]);
    }

    #[test]
    fn jacobi_recovers_second_difference_spectrum() {
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let (vals, vecs) = jacobi_eigen(&a, n, 1e-14);
        for (k, v) in vals.iter().enumerate() {
            let th = (k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            assert!((v - (2.0 - 2.0 * th.cos())).abs() < 1e-12);
        }
        for c in 0..n {
            for d in 0..n {
                let dot: f64 = (0..n).map(|r| vecs[r * n + c] * vecs[r * n + d]).sum();
                let want = if c == d { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }
}
