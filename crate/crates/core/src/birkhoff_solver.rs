//! Normalized Birkhoff factorization `Y+(ξ) = Y-(ξ) G(ξ)` with `Y-(∞) = I`.
//!
//! The outer factor is sought as `Y-(ξ) = I + Σ_{k=1..M} c_k ξ^{-k}`. Requiring
//! the modes `-M..-1` of `Y- G` to vanish gives the block-Toeplitz system
//!
//! ```text
//! Σ_{k=1..M} c_k Ĝ_{j+k} = -Ĝ_j,     j = -M..-1,
//! ```
//!
//! solved by dense LU. The inner factor is the nonnegative-mode part of `Y- G`.
//! For a band-limited `G` with bandwidth at most `M` and an analytic outer
//! factor of degree at most `M` the solve is exact.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fourier_circle::{unwrap_log, Loop, Route};
use crate::linalg::{norm_one_dense, CMat, Lu};
use crate::scalar::{cr, Real};

/// Default threshold on the condition estimate of the Galerkin matrix.
pub const MAX_CONDITION: f64 = 1e10;

/// Default threshold on the sup-norm jump defect.
pub const MAX_JUMP_RESIDUAL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizeOptions<T> {
    /// Number of unknown coefficients `c_1..c_M` of the outer factor.
    pub cutoff: usize,
    pub max_condition: T,
    pub max_jump_residual: T,
}

impl<T: Real> FactorizeOptions<T> {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff, max_condition: T::of(MAX_CONDITION), max_jump_residual: T::of(MAX_JUMP_RESIDUAL) }
    }
}

/// The normalized factorization together with solver diagnostics.
#[derive(Clone, Debug)]
pub struct BirkhoffPair<T> {
    /// Boundary values of the factor analytic in the disk.
    pub plus: Loop<T>,
    /// Boundary values of the factor analytic outside, equal to `I` at `∞`.
    pub minus: Loop<T>,
    /// `max_j ‖Y+(ξ_j) - Y-(ξ_j) G(ξ_j)‖`.
    pub jump_residual: T,
    /// 1-norm condition number of the Galerkin matrix.
    pub condition_estimate: T,
    /// Winding of `det G`; zero for every pair that was produced.
    pub winding_of_det: i64,
}

impl<T: Real> BirkhoffPair<T> {
    /// `Y(x)` off the circle: `Y+` inside the disk, `Y-` outside.
    pub fn eval(&self, x: Complex<T>) -> Result<CMat<T>> {
        crate::fourier_circle::check_off_contour(x)?;
        if !x.norm().is_finite() {
            return Ok(CMat::identity(self.minus.dim()));
        }
        Ok(if x.norm() < T::one() { self.plus.eval(x) } else { self.minus.eval(x) })
    }
}

/// Factorizes `g` with the default thresholds.
pub fn factorize<T: Real>(g: &Loop<T>, cutoff: usize) -> Result<BirkhoffPair<T>> {
    factorize_with(g, &FactorizeOptions::new(cutoff))
}

pub fn factorize_with<T: Real>(g: &Loop<T>, opts: &FactorizeOptions<T>) -> Result<BirkhoffPair<T>> {
    let n = g.dim();
    let m = opts.cutoff;
    if m == 0 {
        return Err(Error::InvalidArgument("factorization cutoff must be positive".into()));
    }
    let winding = g.det_winding()?;
    if winding != 0 {
        return Err(Error::NonzeroIndex { winding });
    }

    // Unknowns X = [c_1 .. c_M] (n x nM) satisfy X S = -R; solve S^T X^T = -R^T.
    let size = n * m;
    let mi = m as i64;
    let mut st = vec![Complex::zero(); size * size];
    for jj in 0..m {
        let j = jj as i64 - mi;
        for kk in 0..m {
            let gk = g.coeff(j + kk as i64 + 1);
            for a in 0..n {
                for b in 0..n {
                    // S[(kk n + a), (jj n + b)] = Ĝ_{j+k}[a, b], stored transposed
                    st[(jj * n + b) * size + kk * n + a] = gk[(a, b)];
                }
            }
        }
    }
    let lu = Lu::new(size, st.clone())?;
    let condition = norm_one_dense(size, &st) * norm_one_dense(size, &lu.inverse());

    let mut c = vec![CMat::zeros(n); m + 1];
    c[0] = CMat::identity(n);
    let mut rhs = vec![Complex::zero(); size];
    for r in 0..n {
        for jj in 0..m {
            let gj = g.coeff(jj as i64 - mi);
            for b in 0..n {
                rhs[jj * n + b] = -gj[(r, b)];
            }
        }
        lu.solve_in_place(&mut rhs);
        for kk in 0..m {
            for a in 0..n {
                c[kk + 1][(r, a)] = rhs[kk * n + a];
            }
        }
    }

    let mut minus_coeffs = vec![CMat::zeros(n); 2 * m + 1];
    for (k, ck) in c.iter().enumerate() {
        minus_coeffs[m - k] = ck.clone();
    }
    let minus = Loop::from_coefficients(m, minus_coeffs)?;

    let mut plus_coeffs = vec![CMat::zeros(n); 2 * m + 1];
    for j in 0..=m {
        plus_coeffs[m + j] = c
            .iter()
            .enumerate()
            .fold(CMat::zeros(n), |acc, (k, ck)| &acc + &(ck * &g.coeff((j + k) as i64)));
    }
    let plus = Loop::from_coefficients(m, plus_coeffs)?;

    let jump = jump_defect(&plus, &minus, g)?;
    let cond_ok = condition.is_finite() && condition <= opts.max_condition;
    let jump_ok = jump.is_finite() && jump <= opts.max_jump_residual;
    if !cond_ok || !jump_ok {
        return Err(Error::OutsideSolvableNeighborhood {
            condition: condition.to_f64_lossy(),
            residual: jump.to_f64_lossy(),
        });
    }
    for factor in [&plus, &minus] {
        let w = factor.det_winding()?;
        if w != 0 {
            return Err(Error::OutsideSolvableNeighborhood {
                condition: condition.to_f64_lossy(),
                residual: jump.to_f64_lossy(),
            });
        }
    }

    Ok(BirkhoffPair { plus, minus, jump_residual: jump, condition_estimate: condition, winding_of_det: winding })
}

fn jump_defect<T: Real>(plus: &Loop<T>, minus: &Loop<T>, g: &Loop<T>) -> Result<T> {
    let cutoff = plus.cutoff().max(minus.cutoff()).max(g.cutoff());
    let k = crate::fourier_circle::grid_size(cutoff);
    let p = plus.values_on_grid(k)?;
    let q = minus.values_on_grid(k)?;
    let gv = g.values_on_grid(k)?;
    Ok(p.iter().zip(&q).zip(&gv).map(|((p, q), g)| (p - &(q * g)).norm_op()).fold(T::zero(), T::max))
}

/// Sup-norm over grid nodes of `‖Y+ - Y- G‖` in the operator norm.
pub fn jump_residual<T: Real>(pair: &BirkhoffPair<T>, g: &Loop<T>) -> Result<T> {
    if pair.plus.dim() != g.dim() || pair.minus.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: pair.plus.dim() });
    }
    jump_defect(&pair.plus, &pair.minus, g)
}

/// `det Y(x) = exp((1/2πi) ∮ log det G(ξ) / (ξ - x) dξ)`, represented by the
/// unwrapped `log det G` loop.
#[derive(Clone, Debug)]
pub struct DetFormula<T> {
    log_det: Loop<T>,
}

impl<T: Real> DetFormula<T> {
    /// `det Y(x)` for `|x| ≠ 1`; `1` at infinity.
    pub fn eval(&self, x: Complex<T>) -> Result<Complex<T>> {
        Ok(self.log_det.cauchy_eval(x, Route::Series)?[(0, 0)].exp())
    }

    /// The unwrapped `log det G` as a scalar loop.
    pub fn log_det(&self) -> &Loop<T> {
        &self.log_det
    }
}

/// Determinant of the factorization from `G` alone.
pub fn det_via_formula<T: Real>(g: &Loop<T>) -> Result<DetFormula<T>> {
    let cutoff = (g.cutoff() * g.dim()).max(8);
    let k = 4 * crate::fourier_circle::grid_size(cutoff);
    let dets: Vec<Complex<T>> = g.values_on_grid(k)?.iter().map(CMat::det).collect();
    let logs = unwrap_log(&dets, 0)?;
    let samples: Vec<CMat<T>> = logs.into_iter().map(CMat::scalar).collect();
    Ok(DetFormula { log_det: Loop::from_samples(&samples, cutoff)? })
}

/// Reduction to a trace-free jump density by the scalar factor
/// `Φ = (det Y)^{-1/N}`, `Φ(∞) = 1`.
#[derive(Clone, Debug)]
pub struct ScalarReduction<T> {
    /// Boundary values of `Φ` from the disk.
    pub phi_inner: Loop<T>,
    /// Boundary values of `Φ` from outside.
    pub phi_outer: Loop<T>,
    /// `B(ξ) = A(ξ) - tr A(ξ) / N`.
    pub trace_free: Loop<T>,
}

pub fn sl_reduce<T: Real>(pair: &BirkhoffPair<T>, density: &Loop<T>) -> Result<ScalarReduction<T>> {
    let n = pair.minus.dim();
    if density.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: density.dim() });
    }
    let inv_n = cr(T::of_usize(n).recip());
    let det_minus = pair.minus.det_samples();
    let det_plus = pair.plus.det_samples();
    let anchor = det_minus
        .iter()
        .enumerate()
        .fold((0, T::zero()), |best, (j, z)| if z.norm() > best.1 { (j, z.norm()) } else { best })
        .0;
    let mut log_minus = unwrap_log(&det_minus, anchor)?;
    let log_plus = unwrap_log(&det_plus, anchor)?;
    // log det Y- extends analytically to ∞ with value 0, so its mean must vanish.
    let mean = log_minus.iter().fold(Complex::<T>::zero(), |a, b| a + b) / cr(T::of_usize(log_minus.len()));
    let turns = (mean.im / T::TAU()).round();
    log_minus.iter_mut().for_each(|z| z.im = z.im - turns * T::TAU());

    let phi = |logs: &[Complex<T>]| -> Result<Loop<T>> {
        let samples: Vec<CMat<T>> = logs.iter().map(|l| CMat::scalar((-l * inv_n).exp())).collect();
        Loop::from_samples(&samples, pair.minus.cutoff())
    };
    let trace_free =
        density.map_samples(|_, a| Ok(a - &CMat::scalar_multiple(n, a.trace() * inv_n)))?;
    Ok(ScalarReduction { phi_inner: phi(&log_plus)?, phi_outer: phi(&log_minus)?, trace_free })
}

impl<T: Real> ScalarReduction<T> {
    /// `Φ(∞)`, read off the outer boundary loop as its mode-0 coefficient.
    pub fn phi_at_infinity(&self) -> Complex<T> {
        self.phi_outer.coeff(0)[(0, 0)]
    }

    /// Largest `|tr B(ξ_j)|` on the grid.
    pub fn max_trace(&self) -> T {
        self.trace_free.samples().iter().map(|b| b.trace().norm()).fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    type L = Loop<f64>;
    type M = CMat<f64>;

    fn e12() -> M {
        M::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
    }

    /// `[[1, ξ - 1/ξ], [0, 1]]`
    fn unipotent(cutoff: usize) -> L {
        L::from_modes(2, cutoff, &[(0, M::identity(2)), (1, e12()), (-1, -&e12())]).unwrap()
    }

    fn two_sided_exp(alpha: f64, beta: f64, cutoff: usize) -> L {
        L::from_fn(1, cutoff, |x| M::scalar((x * beta + x.inv() * alpha).exp())).unwrap()
    }

    #[test]
    fn identity_factorizes_trivially() {
        let p = factorize(&L::identity(2, 8), 8).unwrap();
        assert!(p.plus.coeff_distance(&L::identity(2, 8)) < 1e-15);
        assert!(p.minus.coeff_distance(&L::identity(2, 8)) < 1e-15);
        assert_eq!(p.jump_residual, 0.0);
        assert_eq!(p.winding_of_det, 0);
    }

    #[test]
    fn manufactured_unipotent_factorization() {
        let g = unipotent(16);
        let p = factorize(&g, 16).unwrap();
        let plus = L::from_modes(2, 16, &[(0, M::identity(2)), (1, e12())]).unwrap();
        let minus = L::from_modes(2, 16, &[(0, M::identity(2)), (-1, e12())]).unwrap();
        assert!(p.plus.coeff_distance(&plus) < 1e-13);
        assert!(p.minus.coeff_distance(&minus) < 1e-13);
        assert!(p.jump_residual < 1e-13);
    }

    #[test]
    fn scalar_exponential_splits() {
        let (alpha, beta) = (0.2, 0.3);
        let g = two_sided_exp(alpha, beta, 32);
        let p = factorize(&g, 32).unwrap();
        for (x, (yp, ym)) in p.plus.nodes().iter().zip(p.plus.samples().iter().zip(p.minus.samples())) {
            assert!((yp[(0, 0)] - (x * beta).exp()).norm() < 1e-10);
            assert!((ym[(0, 0)] - (-x.inv() * alpha).exp()).norm() < 1e-10);
        }
        // Yminus has no positive modes and value I at infinity
        assert!((p.minus.coeff(0)[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((1..=32).all(|k| p.minus.coeff(k).norm_max() == 0.0));
        assert!((1..=32).all(|k| p.plus.coeff(-k).norm_max() == 0.0));
    }

    #[test]
    fn nonzero_index_is_rejected() {
        let g = L::monomial(1, 1, 4).unwrap();
        assert_eq!(factorize(&g, 4).unwrap_err(), Error::NonzeroIndex { winding: 1 });
    }

    #[test]
    fn loop_outside_neighborhood_is_reported() {
        // [[ξ, 0],[0, 1/ξ]] has zero global index but partial indices ±1.
        let g = L::from_modes(
            2,
            4,
            &[(1, M::from_real(&[&[1.0, 0.0], &[0.0, 0.0]])), (-1, M::from_real(&[&[0.0, 0.0], &[0.0, 1.0]]))],
        )
        .unwrap();
        let err = factorize(&g, 4).unwrap_err();
        assert!(
            matches!(err, Error::OutsideSolvableNeighborhood { .. } | Error::Singular(_)),
            "{err:?}"
        );
    }

    #[test]
    fn jump_residual_examples() {
        let g = unipotent(8);
        let p = factorize(&g, 8).unwrap();
        assert!(jump_residual(&p, &g).unwrap() < 1e-14);
        let id = factorize(&L::identity(2, 4), 4).unwrap();
        assert_eq!(jump_residual(&id, &L::identity(2, 4)).unwrap(), 0.0);
        let eps = 1e-3;
        let mut bumped = p.clone();
        bumped.plus = p.plus.lin_comb(c(1.0, 0.0), &L::identity(2, 8), c(eps, 0.0)).unwrap();
        assert!((jump_residual(&bumped, &g).unwrap() - eps).abs() < 1e-13);
    }

    #[test]
    fn uniqueness_across_grid_sizes() {
        let f = |x: Complex<f64>| {
            let q = &e12().scale(x * 0.3) + &e12().transpose().scale(x.inv() * 0.2);
            q.exp()
        };
        let a = L::from_fn_on_grid(2, 32, 256, f).unwrap();
        let b = L::from_fn_on_grid(2, 32, 512, f).unwrap();
        let pa = factorize(&a, 32).unwrap();
        let pb = factorize(&b, 32).unwrap();
        assert!(pa.minus.coeff_distance(&pb.minus) < 1e-11);
        assert!(pa.plus.coeff_distance(&pb.plus) < 1e-11);
    }

    #[test]
    fn det_formula_examples() {
        let one = det_via_formula(&L::identity(2, 4)).unwrap();
        let uni = det_via_formula(&unipotent(4)).unwrap();
        for x in [c(0.0, 0.0), c(0.3, -0.4), c(2.0, 1.0), c(-5.0, 0.0)] {
            assert!((one.eval(x).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
            assert!((uni.eval(x).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        }
        let (alpha, beta) = (0.2, 0.3);
        let d = det_via_formula(&two_sided_exp(alpha, beta, 32)).unwrap();
        for x in [c(0.0, 0.0), c(0.5, 0.1), c(-0.2, 0.7)] {
            assert!((d.eval(x).unwrap() - (x * beta).exp()).norm() < 1e-10);
        }
        for x in [c(1.5, 0.0), c(0.2, -3.0), c(10.0, 10.0)] {
            assert!((d.eval(x).unwrap() - (-x.inv() * alpha).exp()).norm() < 1e-10);
        }
    }

    #[test]
    fn det_formula_rejects_winding() {
        assert!(matches!(det_via_formula(&L::monomial(1, 2, 3).unwrap()), Err(Error::Branch { winding: 2 })));
    }

    #[test]
    fn sl_reduce_examples() {
        // nilpotent density, unimodular jump: Φ ≡ 1 and B = A
        let g = unipotent(8);
        let p = factorize(&g, 8).unwrap();
        let a = L::from_modes(2, 8, &[(0, e12()), (-2, e12())]).unwrap();
        let r = sl_reduce(&p, &a).unwrap();
        assert!(r.trace_free.coeff_distance(&a) < 1e-15);
        assert!(r.phi_outer.coeff_distance(&L::identity(1, 8)) < 1e-14);
        assert!(r.phi_inner.coeff_distance(&L::identity(1, 8)) < 1e-14);
        // scalar: the whole density is trace
        let g = two_sided_exp(0.2, 0.3, 16);
        let p = factorize(&g, 16).unwrap();
        let a = g.derivative().with_cutoff(16).map_samples(|x, d| Ok(d.scale(g.eval(x)[(0, 0)].inv()))).unwrap();
        let r = sl_reduce(&p, &a).unwrap();
        assert!(r.max_trace() < 1e-14);
        assert!(r.trace_free.samples().iter().all(|b| b.norm_max() < 1e-14));
        assert!((r.phi_at_infinity() - c(1.0, 0.0)).norm() < 1e-12);
        // Φ = 1 / Y- in the scalar case
        for (phi, ym) in r.phi_outer.samples().iter().zip(p.minus.samples()) {
            assert!((phi[(0, 0)] * ym[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
