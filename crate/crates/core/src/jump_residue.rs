//! Jump density `A = Y- G' G^{-1} (Y-)^{-1}`, its coefficients
//! `B_m = -(1/2πi) ∮ ξ^m A(ξ) dξ = -Â_{-m-1}`, and the fields
//!
//! ```text
//! 𝒜(x)   =  (1/2πi) ∮ A(ξ) / (ξ - x) dξ
//! Ω_m(x) = -(1/2πi) ∮ ξ^{m+1} A(ξ) / (ξ - x) dξ
//! ```
//!
//! Each field is available through its Laurent series in the `B_n` (reference
//! near `0` and `∞`) and through trapezoid quadrature of the density.

use num_complex::Complex;
use num_traits::One;

use crate::error::{Error, Result};
use crate::fourier_circle::{cauchy_quadrature, check_off_contour, grid_size, Loop};
use crate::linalg::CMat;
use crate::scalar::{Linear, Real};

/// Two-sided table `{B_n : |n| <= N_B}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable<T> {
    dim: usize,
    bound: usize,
    entries: Vec<CMat<T>>,
    /// Largest norm of a density coefficient that did not make it into the table.
    pub tail_estimate: T,
}

impl<T: Real> CoefficientTable<T> {
    pub fn zeros(dim: usize, bound: usize) -> Self {
        Self { dim, bound, entries: vec![CMat::zeros(dim); 2 * bound + 1], tail_estimate: T::zero() }
    }

    /// Table from `B_{-N_B} .. B_{N_B}` in order.
    pub fn from_entries(bound: usize, entries: Vec<CMat<T>>) -> Result<Self> {
        if entries.len() != 2 * bound + 1 {
            return Err(Error::DimensionMismatch { expected: 2 * bound + 1, found: entries.len() });
        }
        let dim = entries[0].dim();
        if let Some(bad) = entries.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        Ok(Self { dim, bound, entries, tail_estimate: T::zero() })
    }

    /// Table from a sparse list; unspecified entries are zero.
    pub fn from_sparse(dim: usize, bound: usize, items: &[(i64, CMat<T>)]) -> Result<Self> {
        let mut t = Self::zeros(dim, bound);
        for (n, b) in items {
            *t.slot_mut(*n)? = b.clone();
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn contains(&self, n: i64) -> bool {
        n.unsigned_abs() as usize <= self.bound
    }

    pub fn get(&self, n: i64) -> Result<&CMat<T>> {
        if !self.contains(n) {
            return Err(Error::IndexOutOfRange { index: n, bound: self.bound as i64 });
        }
        Ok(&self.entries[(n + self.bound as i64) as usize])
    }

    fn slot_mut(&mut self, n: i64) -> Result<&mut CMat<T>> {
        if !self.contains(n) {
            return Err(Error::IndexOutOfRange { index: n, bound: self.bound as i64 });
        }
        Ok(&mut self.entries[(n + self.bound as i64) as usize])
    }

    /// `B_n`, or zero beyond the table (truncated series convention).
    pub fn at(&self, n: i64) -> CMat<T> {
        self.get(n).cloned().unwrap_or_else(|_| CMat::zeros(self.dim))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &CMat<T>)> {
        let b = self.bound as i64;
        self.entries.iter().enumerate().map(move |(i, m)| (i as i64 - b, m))
    }

    /// Largest entrywise operator-norm difference over the common range.
    pub fn distance(&self, other: &Self) -> T {
        let b = self.bound.min(other.bound) as i64;
        (-b..=b).map(|n| (&self.at(n) - &other.at(n)).norm_op()).fold(T::zero(), T::max)
    }

    /// `𝒜(x)` by its Laurent series: `Σ_{m>=0} B_m x^{-m-1}` outside,
    /// `-Σ_{m>=1} B_{-m} x^{m-1}` inside.
    pub fn field_series(&self, x: Complex<T>) -> Result<Evaluation<T>> {
        check_off_contour(x)?;
        let b = self.bound as i64;
        if is_infinite(x) {
            return Ok(Evaluation { value: CMat::zeros(self.dim), tail_bound: T::zero() });
        }
        if x.norm() > T::one() {
            let y = x.inv();
            let value = series(self.dim, y, (0..=b).map(|m| (m + 1, self.at(m))));
            Ok(Evaluation { value, tail_bound: self.tail_bound(y.norm(), b + 1) })
        } else {
            let value = series(self.dim, x, (1..=b).map(|m| (m - 1, -&self.at(-m))));
            Ok(Evaluation { value, tail_bound: self.tail_bound(x.norm(), b) })
        }
    }

    /// `Ω_m(x)`: `-Σ_{n>=1} B_{m+n} x^{-n}` outside, `Σ_{n>=0} B_{m-n} x^n` inside.
    pub fn omega_series(&self, m: i64, x: Complex<T>) -> Result<Evaluation<T>> {
        check_off_contour(x)?;
        self.get(m)?;
        let b = self.bound as i64;
        if is_infinite(x) {
            return Ok(Evaluation { value: CMat::zeros(self.dim), tail_bound: T::zero() });
        }
        if x.norm() > T::one() {
            let y = x.inv();
            let value = series(self.dim, y, (1..=b - m).map(|n| (n, -&self.at(m + n))));
            Ok(Evaluation { value, tail_bound: self.tail_bound(y.norm(), b - m + 1) })
        } else {
            let value = series(self.dim, x, (0..=m + b).map(|n| (n, self.at(m - n))));
            Ok(Evaluation { value, tail_bound: self.tail_bound(x.norm(), m + b + 1) })
        }
    }

    /// `dΩ_m/dx`, differentiating the series of [`Self::omega_series`] termwise.
    pub fn omega_derivative_series(&self, m: i64, x: Complex<T>) -> Result<CMat<T>> {
        check_off_contour(x)?;
        self.get(m)?;
        let b = self.bound as i64;
        if is_infinite(x) {
            return Ok(CMat::zeros(self.dim));
        }
        Ok(if x.norm() > T::one() {
            // d/dx (-B x^{-n}) = n B x^{-n-1}
            let y = x.inv();
            series(self.dim, y, (1..=b - m).map(|n| (n + 1, self.at(m + n).scale_real(T::of_i64(n)))))
        } else {
            series(self.dim, x, (1..=m + b).map(|n| (n - 1, self.at(m - n).scale_real(T::of_i64(n)))))
        })
    }

    /// Geometric bound on the truncated tail `Σ_{k>=first} ‖B‖ r^k`, with
    /// `‖B‖` the largest of the edge entries and the tail estimate.
    fn tail_bound(&self, r: T, first: i64) -> T {
        let b = self.bound as i64;
        let edge = self.at(b).norm_op().max(self.at(-b).norm_op()).max(self.tail_estimate);
        if first < 0 || r >= T::one() {
            return T::infinity();
        }
        edge * r.powi(first as i32) / (T::one() - r)
    }
}

impl<T: Real> Linear<T> for CoefficientTable<T> {
    fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Self {
        assert_eq!(self.bound, other.bound, "combining tables of different range");
        Self {
            dim: self.dim,
            bound: self.bound,
            entries: self.entries.iter().zip(&other.entries).map(|(x, y)| x.combine(a, y, b)).collect(),
            tail_estimate: (a.norm() * self.tail_estimate).max(b.norm() * other.tail_estimate),
        }
    }
}

/// A field value with a bound on the part lost to truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<T> {
    pub value: CMat<T>,
    pub tail_bound: T,
}

impl<T: Real> Evaluation<T> {
    /// `false` when the truncated tail may exceed `tol`: the series was
    /// evaluated too close to the circle for the stored range.
    pub fn converged(&self, tol: T) -> bool {
        self.tail_bound <= tol
    }
}

fn is_infinite<T: Real>(x: Complex<T>) -> bool {
    x.re.is_infinite() || x.im.is_infinite()
}

/// `Σ c_k z^{p_k}` over `(p_k, c_k)` with nonnegative, increasing powers.
fn series<T: Real>(dim: usize, z: Complex<T>, terms: impl Iterator<Item = (i64, CMat<T>)>) -> CMat<T> {
    let mut acc = CMat::zeros(dim);
    let mut power = 0i64;
    let mut zp = Complex::<T>::one();
    for (p, coeff) in terms {
        while power < p {
            zp = zp * z;
            power += 1;
        }
        acc = acc.combine(Complex::one(), &coeff, zp);
    }
    acc
}

/// Jump density together with its circulation `∮ A dξ`.
#[derive(Clone, Debug)]
pub struct JumpDensity<T> {
    pub density: Loop<T>,
    pub circulation: CMat<T>,
}

/// `A(ξ) = Y-(ξ) G'(ξ) G(ξ)^{-1} Y-(ξ)^{-1}` on the grid of the larger cutoff.
pub fn compute_jump_density<T: Real>(yminus: &Loop<T>, g: &Loop<T>) -> Result<JumpDensity<T>> {
    if yminus.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: yminus.dim() });
    }
    let cutoff = yminus.cutoff().max(g.cutoff());
    let k = grid_size(cutoff);
    let ym = yminus.values_on_grid(k)?;
    let gv = g.values_on_grid(k)?;
    let dg = g.derivative().values_on_grid(k)?;
    let samples = ym
        .iter()
        .zip(&gv)
        .zip(&dg)
        .enumerate()
        .map(|(j, ((y, g), d))| {
            let g_inv = g.inverse().map_err(|_| Error::Singular(Some(j)))?;
            let y_inv = y.inverse().map_err(|_| Error::Singular(Some(j)))?;
            Ok(&(&(y * d) * &g_inv) * &y_inv)
        })
        .collect::<Result<Vec<_>>>()?;
    let density = Loop::from_samples(&samples, cutoff)?;
    let circulation = density.contour_integral();
    Ok(JumpDensity { density, circulation })
}

/// `B_m = -Â_{-m-1}` for `|m| <= bound`; needs `bound + 1 <= M`.
pub fn fourier_coefficients_b<T: Real>(density: &Loop<T>, bound: usize) -> Result<CoefficientTable<T>> {
    if bound + 1 > density.cutoff() {
        return Err(Error::IndexOutOfRange { index: bound as i64 + 1, bound: density.cutoff() as i64 });
    }
    let b = bound as i64;
    let entries = (-b..=b).map(|m| -&density.coeff(-m - 1)).collect();
    let mut table = CoefficientTable::from_entries(bound, entries)?;
    let m = density.cutoff() as i64;
    table.tail_estimate = (-m..=m)
        .filter(|k| *k < -b - 1 || *k > b - 1)
        .map(|k| density.coeff(k).norm_op())
        .fold(density.tail(), T::max);
    Ok(table)
}

/// Where a field is evaluated from.
#[derive(Clone, Copy, Debug)]
pub enum FieldSource<'a, T> {
    /// Laurent series in the coefficient table.
    Series(&'a CoefficientTable<T>),
    /// Trapezoid quadrature of the density on its grid.
    Integral(&'a Loop<T>),
}

/// `𝒜(x)` by the chosen route.
pub fn eval_field<T: Real>(source: FieldSource<'_, T>, x: Complex<T>) -> Result<Evaluation<T>> {
    match source {
        FieldSource::Series(table) => table.field_series(x),
        FieldSource::Integral(a) => {
            check_off_contour(x)?;
            if is_infinite(x) {
                return Ok(Evaluation { value: CMat::zeros(a.dim()), tail_bound: T::zero() });
            }
            let value = cauchy_quadrature(a.samples(), x, |_| Complex::one());
            Ok(Evaluation { value, tail_bound: quadrature_bound(a, x) })
        }
    }
}

/// `Ω_m(x)` by the chosen route.
pub fn eval_omega<T: Real>(source: FieldSource<'_, T>, m: i64, x: Complex<T>) -> Result<Evaluation<T>> {
    match source {
        FieldSource::Series(table) => table.omega_series(m, x),
        FieldSource::Integral(a) => {
            check_off_contour(x)?;
            if is_infinite(x) {
                return Ok(Evaluation { value: CMat::zeros(a.dim()), tail_bound: T::zero() });
            }
            let value = cauchy_quadrature(a.samples(), x, |xi| -xi.powi((m + 1) as i32));
            Ok(Evaluation { value, tail_bound: quadrature_bound(a, x) })
        }
    }
}

/// Aliasing bound of the trapezoid rule: the geometric factor `r^K` times the
/// density size, plus whatever the density itself lost to truncation.
fn quadrature_bound<T: Real>(a: &Loop<T>, x: Complex<T>) -> T {
    let r = if x.norm() < T::one() { x.norm() } else { x.norm().recip() };
    let size = a.samples().iter().map(CMat::norm_op).fold(T::zero(), T::max);
    size * r.powi(a.grid_len() as i32) / (T::one() - r) + a.tail()
}

/// `‖series - integral‖` for `𝒜` at `x`.
pub fn field_route_discrepancy<T: Real>(table: &CoefficientTable<T>, a: &Loop<T>, x: Complex<T>) -> Result<T> {
    let s = eval_field(FieldSource::Series(table), x)?.value;
    let q = eval_field(FieldSource::Integral(a), x)?.value;
    Ok((&s - &q).norm_op())
}

/// `‖series - integral‖` for `Ω_m` at `x`.
pub fn omega_route_discrepancy<T: Real>(
    table: &CoefficientTable<T>,
    a: &Loop<T>,
    m: i64,
    x: Complex<T>,
) -> Result<T> {
    let s = eval_omega(FieldSource::Series(table), m, x)?.value;
    let q = eval_omega(FieldSource::Integral(a), m, x)?.value;
    Ok((&s - &q).norm_op())
}

/// `max_ξ ‖Y+' Y+^{-1} - Y-' Y-^{-1} - A‖` over the density grid: the
/// boundary values of `𝒜` from either side, built from the factors alone,
/// against the jump density.
pub fn boundary_jump_defect<T: Real>(plus: &Loop<T>, minus: &Loop<T>, density: &Loop<T>) -> Result<T> {
    let (dp, dm) = (plus.derivative(), minus.derivative());
    let mut worst = T::zero();
    for (j, (x, a)) in density.nodes().into_iter().zip(density.samples()).enumerate() {
        let yp = plus.eval(x).inverse().map_err(|_| Error::Singular(Some(j)))?;
        let ym = minus.eval(x).inverse().map_err(|_| Error::Singular(Some(j)))?;
        let jump = &(&dp.eval(x) * &yp) - &(&dm.eval(x) * &ym);
        worst = worst.max((&jump - a).norm_op());
    }
    Ok(worst)
}
