//! Small dense complex matrices and an LU factorization with partial pivoting.
//!
//! The loops handled by this crate are `N x N` with `N <= 4`; the only large
//! system is the Galerkin matrix of the Birkhoff solver (`N M x N M`), which
//! goes through [`Lu`] as well.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cr, Linear, Real};

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar_multiple(n, Complex::one())
    }

    /// `c * I`
    pub fn scalar_multiple(n: usize, c: Complex<T>) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = c;
        }
        m
    }

    /// 1 x 1 matrix.
    pub fn scalar(c: Complex<T>) -> Self {
        Self { n: 1, data: vec![c] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    /// Real matrix from nested `f64` rows; panics on ragged input.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| cr(T::of(rows[i][j])))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * c).collect() }
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(cr(c))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).map(|i| self[(i, i)]).fold(Complex::zero(), |a, b| a + b)
    }

    /// `[self, other] = self other - other self`
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    pub fn norm_max(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Spectral (operator 2-) norm, by power iteration on `self^H self`.
    pub fn norm_op(&self) -> T {
        let n = self.n;
        if n == 0 {
            return T::zero();
        }
        if n == 1 {
            return self.data[0].norm();
        }
        let gram = &self.adjoint() * self;
        let scale = gram.norm_max();
        if scale == T::zero() || !scale.is_finite() {
            return scale.sqrt();
        }
        let gram = gram.scale_real(scale.recip());
        // Deterministic start with components in every direction.
        let mut v: Vec<Complex<T>> =
            (0..n).map(|i| Complex::new(T::one(), T::of(0.1 * (i as f64 + 1.0)))).collect();
        let mut lambda = T::zero();
        for _ in 0..500 {
            let w = gram.mul_vec(&v);
            let wn = w.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            if wn == T::zero() {
                return T::zero();
            }
            let next = wn / v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            v = w.into_iter().map(|z| z / cr(wn)).collect();
            if (next - lambda).abs() <= T::epsilon() * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        (lambda * scale).sqrt()
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|i| (0..self.n).fold(Complex::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    pub fn det(&self) -> Complex<T> {
        match Lu::new(self.n, self.data.clone()) {
            Ok(lu) => lu.det(),
            Err(_) => Complex::zero(),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let lu = Lu::new(self.n, self.data.clone())?;
        Ok(Self { n: self.n, data: lu.inverse() })
    }

    /// Matrix exponential by scaling and squaring of a Taylor polynomial.
    pub fn exp(&self) -> Self {
        let norm = self.norm_one();
        let mut squarings = 0u32;
        if norm > T::of(0.5) {
            squarings = (norm / T::of(0.5)).log2().ceil().to_u32_lossy();
        }
        let scaled = self.scale_real(T::of(2f64.powi(-(squarings as i32))));
        let mut term = Self::identity(self.n);
        let mut sum = Self::identity(self.n);
        for k in 1..=30 {
            term = (&term * &scaled).scale_real(T::of(1.0 / k as f64));
            sum = &sum + &term;
            if term.norm_max() <= T::epsilon() * sum.norm_max() {
                break;
            }
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }
}

trait ToU32Lossy {
    fn to_u32_lossy(self) -> u32;
}

impl<T: Real> ToU32Lossy for T {
    fn to_u32_lossy(self) -> u32 {
        num_traits::ToPrimitive::to_u32(&self).unwrap_or(0)
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Add for &CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<T: Real> Neg for &CMat<T> {
    type Output = CMat<T>;
    fn neg(self) -> CMat<T> {
        CMat { n: self.n, data: self.data.iter().map(|z| -z).collect() }
    }
}

impl<T: Real> Add for CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: CMat<T>) -> CMat<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: CMat<T>) -> CMat<T> {
        &self - &rhs
    }
}

impl<T: Real> Mul for CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: CMat<T>) -> CMat<T> {
        &self * &rhs
    }
}

impl<T: Real> Linear<T> for CMat<T> {
    fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Self {
        assert_eq!(self.n, other.n, "matrix dimension mismatch");
        CMat {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}

/// LU factorization `P A = L U` of a dense complex matrix with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
    parity: bool,
}

impl<T: Real> Lu<T> {
    /// Factorizes the row-major `n x n` matrix `a`.
    pub fn new(n: usize, mut a: Vec<Complex<T>>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() || !pmax.is_finite() {
                return Err(Error::Singular(None));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                parity = !parity;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - l * u;
                }
            }
        }
        Ok(Self { n, lu: a, perm, parity })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn det(&self) -> Complex<T> {
        let d = (0..self.n).fold(Complex::one(), |acc, i| acc * self.lu[i * self.n + i]);
        if self.parity {
            -d
        } else {
            d
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex<T>]) {
        let n = self.n;
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Row-major inverse.
    pub fn inverse(&self) -> Vec<Complex<T>> {
        let n = self.n;
        let mut inv = vec![Complex::zero(); n * n];
        let mut col = vec![Complex::zero(); n];
        for j in 0..n {
            col.iter_mut().for_each(|z| *z = Complex::zero());
            col[j] = Complex::one();
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }
}

/// 1-norm of a row-major `n x n` matrix.
pub fn norm_one_dense<T: Real>(n: usize, a: &[Complex<T>]) -> T {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<T>())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    type M = CMat<f64>;

    #[test]
    fn lu_solves_and_inverts() {
        let a = M::from_fn(3, |i, j| c(1.0 + (i * 3 + j) as f64 * 0.3, (i as f64) - (j as f64)));
        let a = &a + &M::scalar_multiple(3, c(4.0, 0.0));
        let inv = a.inverse().unwrap();
        let prod = &a * &inv;
        assert!((&prod - &M::identity(3)).norm_max() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = M::from_real(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(a.inverse(), Err(Error::Singular(None)));
        assert_eq!(a.det(), Complex::zero());
    }

    #[test]
    fn determinant_tracks_pivot_parity() {
        let a = M::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!((a.det() - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn operator_norm_of_known_matrices() {
        assert!((M::scalar_multiple(2, c(1e-3, 0.0)).norm_op() - 1e-3).abs() < 1e-18);
        // singular values of [[1,2],[0,1]] are sqrt(3 ± 2 sqrt 2) = 1 ± sqrt 2
        let a = M::from_real(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!((a.norm_op() - (1.0 + 2f64.sqrt())).abs() < 1e-13);
        let nil = M::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((nil.norm_op() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_of_nilpotent_and_diagonal() {
        let n = M::from_real(&[&[0.0, 0.7], &[0.0, 0.0]]);
        let e = n.exp();
        assert!((&e - &M::from_real(&[&[1.0, 0.7], &[0.0, 1.0]])).norm_max() < 1e-15);
        let d = M::from_real(&[&[3.0, 0.0], &[0.0, -2.0]]);
        let e = d.exp();
        assert!((e[(0, 0)].re - 3f64.exp()).abs() < 1e-12 * 3f64.exp());
        assert!((e[(1, 1)].re - (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn commutator_is_antisymmetric() {
        let a = M::from_fn(2, |i, j| c(i as f64 + 0.5, j as f64));
        let b = M::from_fn(2, |i, j| c(j as f64 - 1.0, 0.25 * i as f64));
        let s = &a.commutator(&b) + &b.commutator(&a);
        assert!(s.norm_max() < 1e-15);
    }
}
