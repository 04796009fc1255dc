//! Orientation-preserving circle diffeomorphisms and the Virasoro directions.
//!
//! A [`Diffeo`] is a lift `g(θ) = θ + d(θ)` with `d` a real trigonometric
//! polynomial. The complex directions `L_m` have no real flows, so they are
//! realized as complex combinations of the real fields `2cos(mθ)∂θ`,
//! `2sin(mθ)∂θ` and `∂θ`, and a Lie derivative is assembled from central
//! differences along those real flows.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fourier_circle::{grid_size, Loop};
use crate::scalar::{cpowi, cr, imag_unit, Linear, Real};

pub const DEFAULT_CUTOFF: usize = 32;
/// Largest RK4 step used by [`virasoro_flow`].
pub const FLOW_STEP: f64 = 2.5e-4;
pub const INVERSION_TOLERANCE: f64 = 1e-12;

/// Lift `g(θ) = θ + a_0 + Σ_{k=1}^{M} (a_k cos kθ + b_k sin kθ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Diffeo<T> {
    cos: Vec<T>,
    sin: Vec<T>,
    tail: T,
}

impl<T: Real> Diffeo<T> {
    /// Checked constructor from displacement coefficients, `cos[k] = a_k`
    /// and `sin[k] = b_k` (`sin[0]` must be zero).
    pub fn new(cos: Vec<T>, sin: Vec<T>) -> Result<Self> {
        if cos.is_empty() || cos.len() != sin.len() {
            return Err(Error::DimensionMismatch { expected: cos.len(), found: sin.len() });
        }
        if sin[0] != T::zero() {
            return Err(Error::InvalidArgument("sine coefficient of mode 0 must vanish".into()));
        }
        let d = Self { cos, sin, tail: T::zero() };
        d.check_monotone()?;
        Ok(d)
    }

    pub fn identity(cutoff: usize) -> Self {
        Self { cos: vec![T::zero(); cutoff + 1], sin: vec![T::zero(); cutoff + 1], tail: T::zero() }
    }

    pub fn rotation(alpha: T, cutoff: usize) -> Self {
        let mut d = Self::identity(cutoff);
        d.cos[0] = alpha;
        d
    }

    /// `θ + amplitude·sin(kθ)`.
    pub fn sine(amplitude: T, k: usize, cutoff: usize) -> Result<Self> {
        if k == 0 || k > cutoff {
            return Err(Error::IndexOutOfRange { index: k as i64, bound: cutoff as i64 });
        }
        let mut sin = vec![T::zero(); cutoff + 1];
        sin[k] = amplitude;
        Self::new(vec![T::zero(); cutoff + 1], sin)
    }

    /// Fit a lift given by its values on the fit grid of `cutoff`.
    pub fn from_lift_fn(cutoff: usize, lift: impl Fn(T) -> T) -> Result<Self> {
        let thetas = fit_nodes::<T>(cutoff);
        let values: Vec<T> = thetas.iter().map(|&t| lift(t) - t).collect();
        let d = fit(cutoff, &values);
        d.check_monotone()?;
        Ok(d)
    }

    pub fn cutoff(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn cos_coeffs(&self) -> &[T] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[T] {
        &self.sin
    }

    /// Largest displacement coefficient the last re-fit discarded.
    pub fn tail(&self) -> T {
        self.tail
    }

    pub fn displacement(&self, theta: T) -> T {
        (1..self.cos.len()).fold(self.cos[0], |acc, k| {
            let (s, c) = (T::of_usize(k) * theta).sin_cos();
            acc + self.cos[k] * c + self.sin[k] * s
        })
    }

    pub fn lift(&self, theta: T) -> T {
        theta + self.displacement(theta)
    }

    pub fn lift_derivative(&self, theta: T) -> T {
        (1..self.cos.len()).fold(T::one(), |acc, k| {
            let kk = T::of_usize(k);
            let (s, c) = (kk * theta).sin_cos();
            acc + kk * (self.sin[k] * c - self.cos[k] * s)
        })
    }

    /// `γ(ξ) = exp(i g(arg ξ))` for `|ξ| = 1`.
    pub fn eval(&self, xi: Complex<T>) -> Complex<T> {
        Complex::from_polar(T::one(), self.lift(xi.arg()))
    }

    /// Solve `g(u) = y` by Newton's method inside the bracket
    /// `[y - max d, y - min d]`, bisecting whenever a step leaves it.
    pub fn inverse_lift(&self, y: T) -> Result<T> {
        let bound: T = self.cos[0].abs() + self.cos[1..].iter().chain(&self.sin[1..]).map(|c| c.abs()).sum::<T>();
        let slack = T::of(1e-12);
        let (mut lo, mut hi) = (y - self.cos[0] - bound - slack, y - self.cos[0] + bound + slack);
        let mut u = y - self.displacement(y);
        let eps = T::epsilon() * T::of(4.0);
        for _ in 0..100 {
            let r = self.lift(u) - y;
            if r == T::zero() {
                break;
            }
            if r > T::zero() {
                hi = hi.min(u);
            } else {
                lo = lo.max(u);
            }
            let step = r / self.lift_derivative(u);
            let mut next = u - step;
            if !(next >= lo && next <= hi) {
                next = (lo + hi) / T::of(2.0);
            }
            let moved = (next - u).abs();
            u = next;
            if moved <= eps * (T::one() + u.abs()) {
                break;
            }
        }
        if (self.lift(u) - y).abs() > T::of(INVERSION_TOLERANCE) {
            return Err(Error::InversionFailed { theta: y.to_f64_lossy() });
        }
        Ok(u)
    }

    /// `γ^{-1}`, re-fit on the fit grid.
    pub fn invert(&self) -> Result<Self> {
        let thetas = fit_nodes::<T>(self.cutoff());
        let values = thetas.iter().map(|&t| Ok(self.inverse_lift(t)? - t)).collect::<Result<Vec<_>>>()?;
        Ok(fit(self.cutoff(), &values))
    }

    /// `self ∘ other`, with the cutoff of the larger operand.
    pub fn compose(&self, other: &Self) -> Self {
        let cutoff = self.cutoff().max(other.cutoff());
        let values: Vec<T> = fit_nodes::<T>(cutoff).iter().map(|&t| other.displacement(t) + self.displacement(other.lift(t))).collect();
        fit(cutoff, &values)
    }

    /// Sup norm of the lift difference on the fit grid.
    pub fn distance(&self, other: &Self) -> T {
        fit_nodes::<T>(self.cutoff().max(other.cutoff()))
            .into_iter()
            .map(|t| (self.displacement(t) - other.displacement(t)).abs())
            .fold(T::zero(), T::max)
    }

    /// Minimum of `g'` on a grid four times finer than the fit grid.
    pub fn min_derivative(&self) -> T {
        let k = 4 * fit_len(self.cutoff());
        (0..k)
            .map(|j| self.lift_derivative(T::TAU() * T::of_usize(j) / T::of_usize(k)))
            .fold(T::infinity(), T::min)
    }

    fn check_monotone(&self) -> Result<()> {
        let md = self.min_derivative();
        if !(md > T::zero()) {
            return Err(Error::NotMonotone { min_derivative: md.to_f64_lossy() });
        }
        Ok(())
    }
}

fn fit_len(cutoff: usize) -> usize {
    (4 * cutoff).max(4).next_power_of_two()
}

fn fit_nodes<T: Real>(cutoff: usize) -> Vec<T> {
    let k = fit_len(cutoff);
    (0..k).map(|j| T::TAU() * T::of_usize(j) / T::of_usize(k)).collect()
}

/// Real trigonometric interpolation of displacement samples on the fit grid.
fn fit<T: Real>(cutoff: usize, values: &[T]) -> Diffeo<T> {
    let k = values.len();
    let mut buf: Vec<Complex<T>> = values.iter().map(|&v| cr(v)).collect();
    FftPlanner::new().plan_fft_forward(k).process(&mut buf);
    let scale = T::of_usize(k).recip();
    let two = T::of(2.0);
    let mut cos = vec![T::zero(); cutoff + 1];
    let mut sin = vec![T::zero(); cutoff + 1];
    cos[0] = buf[0].re * scale;
    for j in 1..=cutoff {
        cos[j] = two * buf[j].re * scale;
        sin[j] = -two * buf[j].im * scale;
    }
    let tail = buf[cutoff + 1..=k / 2].iter().map(|z| two * z.norm() * scale).fold(T::zero(), T::max);
    Diffeo { cos, sin, tail }
}

/// `G0 ∘ γ^{-1}` sampled at the nodes of `G0`'s grid and re-analyzed.
pub fn pushforward_loop<T: Real>(g0: &Loop<T>, gamma: &Diffeo<T>) -> Result<Loop<T>> {
    let k = grid_size(g0.cutoff());
    let samples = (0..k)
        .map(|j| {
            let theta = T::TAU() * T::of_usize(j) / T::of_usize(k);
            let u = gamma.inverse_lift(theta)?;
            Ok(g0.eval(Complex::from_polar(T::one(), u)))
        })
        .collect::<Result<Vec<_>>>()?;
    Loop::from_samples(&samples, g0.cutoff())
}

/// Real tangent fields on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TangentField {
    /// `∂θ`
    Rotation,
    /// `2cos(mθ)∂θ`
    Cos(u32),
    /// `2sin(mθ)∂θ`
    Sin(u32),
}

impl TangentField {
    pub fn velocity<T: Real>(self, theta: T) -> T {
        match self {
            Self::Rotation => T::one(),
            Self::Cos(m) => T::of(2.0) * (T::of_usize(m as usize) * theta).cos(),
            Self::Sin(m) => T::of(2.0) * (T::of_usize(m as usize) * theta).sin(),
        }
    }
}

/// The complex direction `L_m`, `(L_m)_γ(ξ) = γ(ξ)^{m+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VirasoroDirection {
    pub index: i64,
}

impl VirasoroDirection {
    pub fn new(index: i64) -> Self {
        Self { index }
    }

    /// Velocity `ξ^{m+1}` of the point `ξ` of the circle.
    pub fn velocity<T: Real>(&self, xi: Complex<T>) -> Complex<T> {
        cpowi(xi, self.index + 1)
    }

    /// `L_m = Σ c_i V_i` over real fields `V_i`.
    pub fn components<T: Real>(&self) -> Vec<(TangentField, Complex<T>)> {
        let half = T::of(0.5);
        let m = self.index.unsigned_abs() as u32;
        let i = imag_unit::<T>();
        match self.index {
            0 => vec![(TangentField::Rotation, -i)],
            k if k > 0 => vec![(TangentField::Sin(m), cr(half)), (TangentField::Cos(m), -i * half)],
            _ => vec![(TangentField::Sin(m), cr(-half)), (TangentField::Cos(m), -i * half)],
        }
    }
}

/// `φ^t_V ∘ γ0`, with `φ^t_V` integrated by RK4 in steps of at most [`FLOW_STEP`].
pub fn virasoro_flow<T: Real>(field: TangentField, t: T, gamma0: &Diffeo<T>) -> Result<Diffeo<T>> {
    let cutoff = gamma0.cutoff();
    if t == T::zero() {
        return Ok(gamma0.clone());
    }
    let steps = (t.abs() / T::of(FLOW_STEP)).ceil().to_f64_lossy().max(1.0) as usize;
    let dt = t / T::of_usize(steps);
    let half = dt / T::of(2.0);
    // integrate the displacement from the start point to keep rounding relative to t
    let flow = |x0: T| {
        let mut s = T::zero();
        for _ in 0..steps {
            let k1 = field.velocity(x0 + s);
            let k2 = field.velocity(x0 + s + half * k1);
            let k3 = field.velocity(x0 + s + half * k2);
            let k4 = field.velocity(x0 + s + dt * k3);
            s = s + dt / T::of(6.0) * (k1 + T::of(2.0) * (k2 + k3) + k4);
        }
        s
    };
    let values: Vec<T> = fit_nodes::<T>(cutoff).into_iter().map(|th| gamma0.displacement(th) + flow(gamma0.lift(th))).collect();
    let d = fit(cutoff, &values);
    d.check_monotone()?;
    Ok(d)
}

/// `(F(φ^h_V∘γ) - F(φ^{-h}_V∘γ)) / 2h` for every field `V`, with all flowed
/// evaluations run in parallel.
pub fn directional_derivatives<T, V, F>(f: &F, fields: &[TangentField], gamma: &Diffeo<T>, h: T) -> Result<Vec<V>>
where
    T: Real,
    V: Linear<T> + Send,
    F: Fn(&Diffeo<T>) -> Result<V> + Sync,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let points: Vec<(TangentField, T)> = fields.iter().flat_map(|&v| [(v, h), (v, -h)]).collect();
    let values = points
        .par_iter()
        .map(|&(v, t)| f(&virasoro_flow(v, t, gamma)?))
        .collect::<Result<Vec<V>>>()?;
    let inv = cr((T::of(2.0) * h).recip());
    Ok(values.chunks(2).map(|pair| pair[0].combine(inv, &pair[1], -inv)).collect())
}

/// `(L_m·F)_γ` by central differences along the real fields realizing `L_m`.
pub fn lie_derivative<T, V, F>(f: &F, m: i64, gamma: &Diffeo<T>, h: T) -> Result<V>
where
    T: Real,
    V: Linear<T> + Send,
    F: Fn(&Diffeo<T>) -> Result<V> + Sync,
{
    let comps = VirasoroDirection::new(m).components::<T>();
    let fields: Vec<TangentField> = comps.iter().map(|c| c.0).collect();
    let ds = directional_derivatives(f, &fields, gamma, h)?;
    Ok(recombine(&comps, &ds))
}

/// `Σ c_i D_i` for the components of a direction and matching derivatives.
pub fn recombine<T: Real, V: Linear<T>>(comps: &[(TangentField, Complex<T>)], ds: &[V]) -> V {
    let mut acc = ds[0].combine(comps[0].1, &ds[0], Complex::zero());
    for (c, d) in comps.iter().zip(ds).skip(1) {
        acc = acc.combine(Complex::new(T::one(), T::zero()), d, c.1);
    }
    acc
}

/// `F(γ) = γ(τ)^k`, the monomial functional.
pub fn monomial_functional<T: Real>(tau: Complex<T>, k: i64) -> impl Fn(&Diffeo<T>) -> Result<Complex<T>> + Sync {
    move |g: &Diffeo<T>| Ok(cpowi(g.eval(tau), k))
}

/// `‖[L_m, L_n]F - (n-m) L_{m+n}F‖` at `γ` for a scalar functional, with the
/// bracket taken by nested central differences.
pub fn bracket_residual<T, F>(f: &F, m: i64, n: i64, gamma: &Diffeo<T>, h: T) -> Result<T>
where
    T: Real,
    F: Fn(&Diffeo<T>) -> Result<Complex<T>> + Sync,
{
    let ln_f = |g: &Diffeo<T>| lie_derivative(f, n, g, h);
    let lm_f = |g: &Diffeo<T>| lie_derivative(f, m, g, h);
    let lm_ln: Complex<T> = lie_derivative(&ln_f, m, gamma, h)?;
    let ln_lm: Complex<T> = lie_derivative(&lm_f, n, gamma, h)?;
    let lmn: Complex<T> = lie_derivative(f, m + n, gamma, h)?;
    Ok((lm_ln - ln_lm - lmn * T::of_i64(n - m)).norm())
}
