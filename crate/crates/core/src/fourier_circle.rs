//! Matrix-valued loops on the unit circle in a dual grid/coefficient form.
//!
//! A [`Loop`] stores the Laurent coefficients `f̂_k`, `-M <= k <= M`, of a
//! trigonometric polynomial `f(ξ) = Σ f̂_k ξ^k` together with its samples on
//! the equispaced grid `ξ_j = exp(2πi j / K)`. The grid size is the smallest
//! power of two with `K >= 2(2M + 1)`, which leaves room for one dealiased
//! pointwise product.
//!
//! Derivatives are taken with respect to the complex variable `ξ`, so that
//! `(df/dξ)^_{k-1} = k f̂_k`. The Cauchy projectors act modewise:
//! `C+` keeps `k >= 0` and `C-` returns minus the `k < 0` part, which is the
//! pair of boundary values of `F(x) = (1/2πi) ∮ f(ξ) / (ξ - x) dξ`.

use num_complex::Complex;
use num_traits::{One, Zero};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{cr, imag_unit, Linear, Real};

/// Largest grid the product routine will allocate.
pub const MAX_GRID: usize = 1 << 22;

/// Points closer than this to the circle are rejected by [`Loop::cauchy_eval`].
pub const CONTOUR_EXCLUSION: f64 = 1e-8;

/// Samples with modulus below this are treated as zeros by the winding number.
pub const VANISHING_THRESHOLD: f64 = 1e-10;

/// Side of the circle a boundary value is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CauchySide {
    /// The unit disk `𝔻+`.
    Plus,
    /// The exterior `𝔻-`, containing `∞`.
    Minus,
}

/// How an off-circle Cauchy-type integral is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Route {
    /// Laurent series in the stored coefficients.
    Series,
    /// Trapezoid quadrature of the contour integral on the sample grid.
    Integral,
}

/// Default grid size for a loop with cutoff `m`.
pub fn grid_size(cutoff: usize) -> usize {
    (2 * (2 * cutoff + 1)).next_power_of_two()
}

/// `exp(2πi j / k)` for `j = 0..k`.
pub fn grid_nodes<T: Real>(k: usize) -> Vec<Complex<T>> {
    (0..k).map(|j| Complex::from_polar(T::one(), T::TAU() * T::of_usize(j) / T::of_usize(k))).collect()
}

fn check_dims<T: Real>(mats: &[CMat<T>]) -> Result<usize> {
    let n = mats.first().map(CMat::dim).ok_or_else(|| Error::InvalidArgument("empty grid".into()))?;
    if let Some(bad) = mats.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
    }
    Ok(n)
}

/// Discrete Fourier analysis of equispaced samples.
///
/// Returns the interpolant coefficients `f̂_{-M..=M}` (index `k + M`) and the
/// largest norm among the resolved modes that were discarded.
fn analyze_with_tail<T: Real>(samples: &[CMat<T>], cutoff: usize) -> Result<(Vec<CMat<T>>, T)> {
    let n = check_dims(samples)?;
    let k = samples.len();
    let required = 2 * cutoff + 1;
    if k < required {
        return Err(Error::InsufficientSamples { samples: k, cutoff, required });
    }
    let fft = FftPlanner::<T>::new().plan_fft_forward(k);
    let inv_k = cr(T::of_usize(k).recip());
    let mut coeffs = vec![CMat::zeros(n); required];
    let mut discarded = vec![T::zero(); k];
    let mut buf = vec![Complex::zero(); k];
    for a in 0..n {
        for b in 0..n {
            for (slot, s) in buf.iter_mut().zip(samples) {
                *slot = s[(a, b)];
            }
            fft.process(&mut buf);
            for (idx, z) in buf.iter().enumerate() {
                let mode = if idx <= k / 2 { idx as i64 } else { idx as i64 - k as i64 };
                let z = *z * inv_k;
                if mode.unsigned_abs() as usize <= cutoff {
                    coeffs[(mode + cutoff as i64) as usize][(a, b)] = z;
                } else {
                    discarded[idx] = discarded[idx] + z.norm_sqr();
                }
            }
        }
    }
    let tail = discarded.into_iter().fold(T::zero(), T::max).sqrt();
    Ok((coeffs, tail))
}

/// Trigonometric interpolation coefficients of `K >= 2M + 1` equispaced
/// samples; entry `k + M` holds `f̂_k`.
pub fn analyze<T: Real>(samples: &[CMat<T>], cutoff: usize) -> Result<Vec<CMat<T>>> {
    analyze_with_tail(samples, cutoff).map(|(c, _)| c)
}

/// Evaluates `Σ f̂_k ξ^k` at arbitrary nonzero points.
pub fn synthesize<T: Real>(coeffs: &[CMat<T>], cutoff: usize, nodes: &[Complex<T>]) -> Result<Vec<CMat<T>>> {
    if coeffs.len() != 2 * cutoff + 1 {
        return Err(Error::DimensionMismatch { expected: 2 * cutoff + 1, found: coeffs.len() });
    }
    check_dims(coeffs)?;
    Ok(nodes.iter().map(|&x| laurent_sum(coeffs, cutoff, x, -(cutoff as i64), cutoff as i64)).collect())
}

/// `Σ_{k=lo..=hi} f̂_k x^k` by Horner's rule on each half.
fn laurent_sum<T: Real>(coeffs: &[CMat<T>], cutoff: usize, x: Complex<T>, lo: i64, hi: i64) -> CMat<T> {
    let n = coeffs[0].dim();
    let m = cutoff as i64;
    let at = |k: i64| &coeffs[(k + m) as usize];
    let mut acc = CMat::zeros(n);
    if hi >= 0 {
        let start = lo.max(0);
        for k in (start..=hi).rev() {
            acc = at(k).combine(Complex::one(), &acc, x);
        }
        if start > 0 {
            acc = acc.scale(x.powu(start as u32));
        }
    }
    if lo < 0 {
        let y = x.inv();
        let top = hi.min(-1);
        let mut neg = CMat::zeros(n);
        for k in lo..=top {
            neg = at(k).combine(Complex::one(), &neg, y);
        }
        neg = neg.scale(y.powu((-top) as u32));
        acc = &acc + &neg;
    }
    acc
}

/// Samples on a grid of `k >= 2M + 1` nodes by an inverse FFT.
fn synthesize_grid<T: Real>(coeffs: &[CMat<T>], cutoff: usize, k: usize) -> Result<Vec<CMat<T>>> {
    let n = check_dims(coeffs)?;
    let required = 2 * cutoff + 1;
    if k < required {
        return Err(Error::InsufficientSamples { samples: k, cutoff, required });
    }
    let fft = FftPlanner::<T>::new().plan_fft_inverse(k);
    let mut out = vec![CMat::zeros(n); k];
    let mut buf = vec![Complex::zero(); k];
    for a in 0..n {
        for b in 0..n {
            buf.iter_mut().for_each(|z| *z = Complex::zero());
            for (i, c) in coeffs.iter().enumerate() {
                let mode = i as i64 - cutoff as i64;
                buf[mode.rem_euclid(k as i64) as usize] = c[(a, b)];
            }
            fft.process(&mut buf);
            for (o, z) in out.iter_mut().zip(&buf) {
                o[(a, b)] = *z;
            }
        }
    }
    Ok(out)
}

/// Continuous phase of nonvanishing samples taken in order around the circle.
///
/// Returns the unwrapped phases and the total winding. Consecutive phase
/// increments must stay below `π/2` in magnitude, otherwise the samples are
/// considered too coarse to follow the phase.
pub fn unwrap_phase<T: Real>(samples: &[Complex<T>]) -> Result<(Vec<T>, i64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let threshold = T::of(VANISHING_THRESHOLD);
    if let Some((node, z)) = samples.iter().enumerate().find(|(_, z)| z.norm() < threshold) {
        return Err(Error::Vanishing { node, modulus: z.norm().to_f64_lossy() });
    }
    let limit = T::FRAC_PI_2();
    let mut phases = Vec::with_capacity(samples.len());
    let mut phase = samples[0].arg();
    phases.push(phase);
    let mut total = T::zero();
    for j in 0..samples.len() {
        let next = samples[(j + 1) % samples.len()];
        let step = (next / samples[j]).arg();
        if step.abs() > limit {
            return Err(Error::UnderResolved(format!(
                "phase step {:.3} between nodes {} and {}",
                step.to_f64_lossy(),
                j,
                (j + 1) % samples.len()
            )));
        }
        total = total + step;
        if j + 1 < samples.len() {
            phase = phase + step;
            phases.push(phase);
        }
    }
    let winding = (total / T::TAU()).round();
    Ok((phases, num_traits::ToPrimitive::to_i64(&winding).unwrap_or(0)))
}

/// Winding number of nonvanishing scalar samples.
pub fn winding_of_samples<T: Real>(samples: &[Complex<T>]) -> Result<i64> {
    unwrap_phase(samples).map(|(_, w)| w)
}

/// Single-valued logarithm of zero-winding samples, principal at `anchor` and
/// continued along the grid.
pub fn unwrap_log<T: Real>(samples: &[Complex<T>], anchor: usize) -> Result<Vec<Complex<T>>> {
    let (phases, winding) = unwrap_phase(samples)?;
    if winding != 0 {
        return Err(Error::Branch { winding });
    }
    let shift = samples[anchor].arg() - phases[anchor];
    Ok(samples.iter().zip(&phases).map(|(z, &p)| Complex::new(z.norm().ln(), p + shift)).collect())
}

/// Band-limited `N x N` matrix loop.
#[derive(Clone, Debug, PartialEq)]
pub struct Loop<T> {
    dim: usize,
    cutoff: usize,
    coeffs: Vec<CMat<T>>,
    samples: Vec<CMat<T>>,
    tail: T,
}

/// Result of [`Loop::multiply`].
#[derive(Clone, Debug)]
pub struct Product<T> {
    pub value: Loop<T>,
    /// Largest coefficient norm dropped when truncating back to the larger
    /// of the two input cutoffs.
    pub truncation: T,
}

impl<T: Real> Loop<T> {
    /// Builds a loop from its coefficient table (`2M + 1` entries, index `k + M`).
    pub fn from_coefficients(cutoff: usize, coeffs: Vec<CMat<T>>) -> Result<Self> {
        if coeffs.len() != 2 * cutoff + 1 {
            return Err(Error::DimensionMismatch { expected: 2 * cutoff + 1, found: coeffs.len() });
        }
        let dim = check_dims(&coeffs)?;
        let samples = synthesize_grid(&coeffs, cutoff, grid_size(cutoff))?;
        Ok(Self { dim, cutoff, coeffs, samples, tail: T::zero() })
    }

    /// Builds a loop from a sparse list of `(mode, coefficient)` pairs.
    pub fn from_modes(dim: usize, cutoff: usize, modes: &[(i64, CMat<T>)]) -> Result<Self> {
        let mut coeffs = vec![CMat::zeros(dim); 2 * cutoff + 1];
        for (k, c) in modes {
            if k.unsigned_abs() as usize > cutoff {
                return Err(Error::IndexOutOfRange { index: *k, bound: cutoff as i64 });
            }
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
            }
            let slot = &mut coeffs[(k + cutoff as i64) as usize];
            *slot = &*slot + c;
        }
        Self::from_coefficients(cutoff, coeffs)
    }

    /// Interpolates `f` on the default grid of the cutoff.
    pub fn from_fn(dim: usize, cutoff: usize, f: impl Fn(Complex<T>) -> CMat<T>) -> Result<Self> {
        Self::from_fn_on_grid(dim, cutoff, grid_size(cutoff), f)
    }

    /// Interpolates `f` on a grid of `k` nodes and keeps modes up to `cutoff`.
    pub fn from_fn_on_grid(dim: usize, cutoff: usize, k: usize, f: impl Fn(Complex<T>) -> CMat<T>) -> Result<Self> {
        let samples: Vec<CMat<T>> = grid_nodes(k).into_iter().map(f).collect();
        let loop_ = Self::from_samples(&samples, cutoff)?;
        if loop_.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: loop_.dim });
        }
        Ok(loop_)
    }

    /// Analyzes equispaced samples (`samples[j]` at `exp(2πi j/K)`).
    pub fn from_samples(samples: &[CMat<T>], cutoff: usize) -> Result<Self> {
        let (coeffs, tail) = analyze_with_tail(samples, cutoff)?;
        let mut loop_ = Self::from_coefficients(cutoff, coeffs)?;
        loop_.tail = tail;
        Ok(loop_)
    }

    pub fn constant(value: CMat<T>, cutoff: usize) -> Self {
        let dim = value.dim();
        Self::from_modes(dim, cutoff, &[(0, value)]).expect("mode 0 is always in range")
    }

    pub fn identity(dim: usize, cutoff: usize) -> Self {
        Self::constant(CMat::identity(dim), cutoff)
    }

    /// `ξ^power · I`
    pub fn monomial(dim: usize, power: i64, cutoff: usize) -> Result<Self> {
        Self::from_modes(dim, cutoff, &[(power, CMat::identity(dim))])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn grid_len(&self) -> usize {
        self.samples.len()
    }

    pub fn nodes(&self) -> Vec<Complex<T>> {
        grid_nodes(self.samples.len())
    }

    pub fn coeffs(&self) -> &[CMat<T>] {
        &self.coeffs
    }

    pub fn samples(&self) -> &[CMat<T>] {
        &self.samples
    }

    /// Largest coefficient norm discarded when this loop was analyzed from
    /// samples or truncated; zero for loops built from coefficients.
    pub fn tail(&self) -> T {
        self.tail
    }

    pub fn mode(&self, k: i64) -> Option<&CMat<T>> {
        if k.unsigned_abs() as usize > self.cutoff {
            None
        } else {
            Some(&self.coeffs[(k + self.cutoff as i64) as usize])
        }
    }

    /// `f̂_k`, zero outside the stored range.
    pub fn coeff(&self, k: i64) -> CMat<T> {
        self.mode(k).cloned().unwrap_or_else(|| CMat::zeros(self.dim))
    }

    /// Value at any nonzero point (Laurent evaluation off the circle).
    pub fn eval(&self, x: Complex<T>) -> CMat<T> {
        let m = self.cutoff as i64;
        laurent_sum(&self.coeffs, self.cutoff, x, -m, m)
    }

    /// Samples on an equispaced grid of `k >= 2M + 1` nodes.
    pub fn values_on_grid(&self, k: usize) -> Result<Vec<CMat<T>>> {
        if k == self.samples.len() {
            return Ok(self.samples.clone());
        }
        synthesize_grid(&self.coeffs, self.cutoff, k)
    }

    /// Same loop with a different cutoff; truncation updates [`Loop::tail`].
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let dropped = (cutoff + 1..=self.cutoff)
            .flat_map(|k| [k as i64, -(k as i64)])
            .map(|k| self.coeff(k).norm_fro())
            .fold(T::zero(), T::max);
        let coeffs = (-(cutoff as i64)..=cutoff as i64).map(|k| self.coeff(k)).collect();
        let mut out = Self::from_coefficients(cutoff, coeffs).expect("consistent table");
        out.tail = self.tail.max(dropped);
        out
    }

    /// Coefficientwise `a f + b g`, on the larger cutoff.
    pub fn lin_comb(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let cutoff = self.cutoff.max(other.cutoff);
        let coeffs = (-(cutoff as i64)..=cutoff as i64)
            .map(|k| self.coeff(k).combine(a, &other.coeff(k), b))
            .collect();
        Self::from_coefficients(cutoff, coeffs)
    }

    /// Largest coefficient-norm difference over the union of stored modes.
    pub fn coeff_distance(&self, other: &Self) -> T {
        let cutoff = self.cutoff.max(other.cutoff) as i64;
        (-cutoff..=cutoff)
            .map(|k| (&self.coeff(k) - &other.coeff(k)).norm_op())
            .fold(T::zero(), T::max)
    }

    /// Pointwise map `f(ξ) ↦ g(ξ, f(ξ))` on the loop grid, re-analyzed at the
    /// same cutoff.
    pub fn map_samples(&self, g: impl Fn(Complex<T>, &CMat<T>) -> Result<CMat<T>>) -> Result<Self> {
        let mapped: Vec<CMat<T>> =
            self.nodes().into_iter().zip(&self.samples).map(|(x, f)| g(x, f)).collect::<Result<_>>()?;
        Self::from_samples(&mapped, self.cutoff)
    }

    /// Complex derivative `df/dξ`; the cutoff grows by one so that the mode
    /// `-M-1` is kept exactly.
    pub fn derivative(&self) -> Self {
        let cutoff = self.cutoff + 1;
        let coeffs = (-(cutoff as i64)..=cutoff as i64)
            .map(|j| self.coeff(j + 1).scale_real(T::of_i64(j + 1)))
            .collect();
        let mut out = Self::from_coefficients(cutoff, coeffs).expect("consistent table");
        out.tail = self.tail;
        out
    }

    /// Pointwise matrix product, computed exactly on a grid large enough for
    /// the combined bandwidth and truncated back to the larger input cutoff.
    pub fn multiply(&self, other: &Self) -> Result<Product<T>> {
        let full = self.multiply_exact(other)?;
        let cutoff = self.cutoff.max(other.cutoff);
        let value = full.with_cutoff(cutoff);
        let truncation = (cutoff + 1..=full.cutoff)
            .flat_map(|k| [k as i64, -(k as i64)])
            .map(|k| full.coeff(k).norm_fro())
            .fold(T::zero(), T::max);
        Ok(Product { value, truncation })
    }

    /// Pointwise product with the full cutoff `M_f + M_g`, no truncation.
    pub fn multiply_exact(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let cutoff = self.cutoff + other.cutoff;
        let k = (2 * cutoff + 1).next_power_of_two();
        if k > MAX_GRID {
            return Err(Error::CapacityExceeded { required: k, limit: MAX_GRID });
        }
        let a = self.values_on_grid(k)?;
        let b = other.values_on_grid(k)?;
        let prod: Vec<CMat<T>> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let (coeffs, _) = analyze_with_tail(&prod, cutoff)?;
        Self::from_coefficients(cutoff, coeffs)
    }

    /// Boundary values `C±(f)` of the Cauchy integral.
    pub fn cauchy_project(&self, side: CauchySide) -> Self {
        let m = self.cutoff as i64;
        let coeffs = (-m..=m)
            .map(|k| match side {
                CauchySide::Plus if k >= 0 => self.coeff(k),
                CauchySide::Minus if k < 0 => -&self.coeff(k),
                _ => CMat::zeros(self.dim),
            })
            .collect();
        Self::from_coefficients(self.cutoff, coeffs).expect("consistent table")
    }

    /// Modewise transform `H = -(C+ + C-)`, i.e. `H(ξ^k) = -ξ^k` for `k >= 0`
    /// and `+ξ^k` for `k < 0`, so that `C± = ±½ - ½H`.
    pub fn hilbert(&self) -> Self {
        let m = self.cutoff as i64;
        let coeffs = (-m..=m)
            .map(|k| if k >= 0 { -&self.coeff(k) } else { self.coeff(k) })
            .collect();
        Self::from_coefficients(self.cutoff, coeffs).expect("consistent table")
    }

    /// `F(x) = (1/2πi) ∮ f(ξ)/(ξ - x) dξ` off the circle.
    pub fn cauchy_eval(&self, x: Complex<T>, route: Route) -> Result<CMat<T>> {
        check_off_contour(x)?;
        if !x.norm().is_finite() {
            return Ok(CMat::zeros(self.dim));
        }
        Ok(match route {
            Route::Series => {
                let m = self.cutoff as i64;
                if x.norm() < T::one() {
                    if x.is_zero() {
                        self.coeff(0)
                    } else {
                        laurent_sum(&self.coeffs, self.cutoff, x, 0, m)
                    }
                } else {
                    -&laurent_sum(&self.coeffs, self.cutoff, x, -m, -1)
                }
            }
            Route::Integral => cauchy_quadrature(&self.samples, x, |_| Complex::one()),
        })
    }

    /// `∮ f(ξ) dξ = 2πi f̂_{-1}`.
    pub fn contour_integral(&self) -> CMat<T> {
        self.coeff(-1).scale(imag_unit::<T>() * cr(T::TAU()))
    }

    /// Winding number of a scalar loop along the circle.
    pub fn winding_number(&self) -> Result<i64> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: self.dim });
        }
        self.refined_winding(|m| m[(0, 0)])
    }

    /// Winding number of `det f`.
    pub fn det_winding(&self) -> Result<i64> {
        self.refined_winding(CMat::det)
    }

    fn refined_winding(&self, scalar: impl Fn(&CMat<T>) -> Complex<T>) -> Result<i64> {
        let coarse: Vec<Complex<T>> = self.samples.iter().map(&scalar).collect();
        match winding_of_samples(&coarse) {
            Err(Error::UnderResolved(_)) => {
                let fine: Vec<Complex<T>> =
                    self.values_on_grid(4 * self.samples.len())?.iter().map(&scalar).collect();
                winding_of_samples(&fine)
            }
            other => other,
        }
    }

    /// `det f(ξ_j)` on the loop grid.
    pub fn det_samples(&self) -> Vec<Complex<T>> {
        self.samples.iter().map(CMat::det).collect()
    }
}

impl<T: Real> Linear<T> for Loop<T> {
    fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Self {
        self.lin_comb(a, other, b).expect("combining loops of equal dimension")
    }
}

pub(crate) fn check_off_contour<T: Real>(x: Complex<T>) -> Result<()> {
    let distance = (x.norm() - T::one()).abs();
    if distance < T::of(CONTOUR_EXCLUSION) || x.re.is_nan() || x.im.is_nan() {
        return Err(Error::OnContour { distance: distance.to_f64_lossy() });
    }
    Ok(())
}

/// Trapezoid rule for `(1/2πi) ∮ w(ξ) f(ξ) / (ξ - x) dξ` on equispaced samples.
pub(crate) fn cauchy_quadrature<T: Real>(
    samples: &[CMat<T>],
    x: Complex<T>,
    weight: impl Fn(Complex<T>) -> Complex<T>,
) -> CMat<T> {
    let k = samples.len();
    let n = samples[0].dim();
    let inv_k = cr(T::of_usize(k).recip());
    grid_nodes::<T>(k)
        .into_iter()
        .zip(samples)
        .fold(CMat::zeros(n), |acc, (xi, f)| acc.combine(Complex::one(), f, weight(xi) * xi / (xi - x) * inv_k))
}
