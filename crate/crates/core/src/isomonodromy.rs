//! The deformation `γ ↦ B(γ)` of a base loop by reparametrization, and
//! residuals of the universal Schlesinger system, the isomonodromy
//! characterization and the integrability conditions of the Pfaffian system.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::One;

use crate::birkhoff_solver::{factorize, BirkhoffPair};
use crate::circle_diffeo::{directional_derivatives, lie_derivative, pushforward_loop, recombine, Diffeo, TangentField, VirasoroDirection};
use crate::error::{Error, Result};
use crate::fourier_circle::Loop;
use crate::jump_residue::{compute_jump_density, fourier_coefficients_b, CoefficientTable};
use crate::linalg::CMat;
use crate::scalar::{cpowi, Linear, Real};

/// Probes must keep at least this distance from `|x| = 1`.
pub const PROBE_EXCLUSION: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct DeformationContext<T> {
    pub g0: Loop<T>,
    pub bound: usize,
    pub h: T,
    pub probes: Vec<Complex<T>>,
}

/// Everything computed along the pipeline at one `γ`.
#[derive(Clone, Debug)]
pub struct Deformed<T> {
    pub jump: Loop<T>,
    pub pair: BirkhoffPair<T>,
    pub density: Loop<T>,
    pub table: CoefficientTable<T>,
}

impl<T: Real> DeformationContext<T> {
    pub fn new(g0: Loop<T>, bound: usize, h: T, probes: Vec<Complex<T>>) -> Result<Self> {
        if bound + 1 > g0.cutoff() {
            return Err(Error::IndexOutOfRange { index: bound as i64 + 1, bound: g0.cutoff() as i64 });
        }
        if !(h > T::zero()) {
            return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
        }
        let lo = T::one() - T::of(PROBE_EXCLUSION);
        let hi = T::one() + T::of(PROBE_EXCLUSION);
        if let Some(x) = probes.iter().find(|x| x.norm() >= lo && x.norm() <= hi) {
            return Err(Error::InvalidArgument(format!("probe {x} too close to the unit circle")));
        }
        factorize(&g0, g0.cutoff())?;
        Ok(Self { g0, bound, h, probes })
    }

    pub fn cutoff(&self) -> usize {
        self.g0.cutoff()
    }

    pub fn deform(&self, gamma: &Diffeo<T>) -> Result<Deformed<T>> {
        let jump = pushforward_loop(&self.g0, gamma)?;
        let pair = factorize(&jump, self.cutoff())?;
        let density = compute_jump_density(&pair.minus, &jump)?.density;
        let table = fourier_coefficients_b(&density, self.bound)?;
        Ok(Deformed { jump, pair, density, table })
    }

    /// `B(γ)` for `G0 ∘ γ^{-1}`.
    pub fn deform_coefficients(&self, gamma: &Diffeo<T>) -> Result<CoefficientTable<T>> {
        Ok(self.deform(gamma)?.table)
    }

    /// Base table and Lie-derivative tables at `γ` for `|m| <= m_max`.
    pub fn lie_cache(&self, gamma: &Diffeo<T>, m_max: usize) -> Result<LieCache<T>> {
        LieCache::build(self, gamma, m_max)
    }

    /// `‖L_m B_n - RHS(m, n)‖` at `γ`, computed from scratch.
    pub fn schlesinger_residual(&self, gamma: &Diffeo<T>, m: i64, n: i64) -> Result<T> {
        let base = self.deform_coefficients(gamma)?;
        let f = |g: &Diffeo<T>| Ok(self.deform_coefficients(g)?.get(n)?.clone());
        let lhs: CMat<T> = lie_derivative(&f, m, gamma, self.h)?;
        let rhs = schlesinger_rhs(&base, m, n, RhsForm::Primary)?;
        Ok((&lhs - &rhs).norm_op())
    }

    /// `sup_j ‖L_m G(ξ_j) + ξ_j^{m+1} G'(ξ_j)‖` over the given points of the circle.
    pub fn isomonodromy_check(&self, gamma: &Diffeo<T>, m: i64, nodes: &[Complex<T>]) -> Result<T> {
        let f = |g: &Diffeo<T>| {
            let jump = pushforward_loop(&self.g0, g)?;
            Ok(nodes.iter().map(|&x| jump.eval(x)).collect::<Vec<_>>())
        };
        let lhs: Vec<CMat<T>> = lie_derivative(&f, m, gamma, self.h)?;
        let dg = pushforward_loop(&self.g0, gamma)?.derivative();
        Ok(nodes
            .iter()
            .zip(&lhs)
            .map(|(&x, l)| l.combine(Complex::one(), &dg.eval(x), cpowi(x, m + 1)).norm_op())
            .fold(T::zero(), T::max))
    }
}

/// Which of the two equivalent right-hand sides to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsForm {
    /// Split by the sign of `n`.
    Primary,
    /// Split by the sign of `m`.
    Equivalent,
}

/// Right-hand side of the universal Schlesinger system for `L_m B_n`.
pub fn schlesinger_rhs<T: Real>(b: &CoefficientTable<T>, m: i64, n: i64, form: RhsForm) -> Result<CMat<T>> {
    let bracket = |k: i64, l: i64| -> Result<CMat<T>> { Ok(b.get(k)?.commutator(b.get(l)?)) };
    let mut acc = CMat::zeros(b.dim());
    let tail;
    match form {
        RhsForm::Primary if n >= 1 => {
            for k in 0..n {
                acc = &acc + &bracket(k, m + n - k)?;
            }
            tail = b.get(m + n)?.scale_real(T::of_i64(n));
        }
        RhsForm::Primary if n <= -1 => {
            let p = -n;
            for k in -p..=-1 {
                acc = &acc - &bracket(k, m - p - k)?;
            }
            tail = b.get(m - p)?.scale_real(-T::of_i64(p));
        }
        RhsForm::Primary => {
            return Err(Error::InvalidArgument("the system is stated for n != 0".into()));
        }
        RhsForm::Equivalent if m >= 0 => {
            for k in 0..=m {
                acc = &acc + &bracket(k, m + n - k)?;
            }
            tail = b.get(m + n)?.scale_real(T::of_i64(n));
        }
        RhsForm::Equivalent => {
            for k in m + 1..=-1 {
                acc = &acc - &bracket(k, m + n - k)?;
            }
            tail = b.get(m + n)?.scale_real(T::of_i64(n));
        }
    }
    Ok(&acc + &tail)
}

/// Lie-derivative tables `L_m B(γ)` shared by all `(m, n)` checks at one
/// `(γ, h)`. Each real field is flowed once; `L_m` and `L_{-m}` reuse the
/// same pair of flows.
#[derive(Clone, Debug)]
pub struct LieCache<T> {
    pub base: CoefficientTable<T>,
    pub h: T,
    fields: BTreeMap<TangentField, CoefficientTable<T>>,
}

impl<T: Real> LieCache<T> {
    fn build(ctx: &DeformationContext<T>, gamma: &Diffeo<T>, m_max: usize) -> Result<Self> {
        let base = ctx.deform_coefficients(gamma)?;
        let mut list = vec![TangentField::Rotation];
        for m in 1..=m_max as u32 {
            list.push(TangentField::Cos(m));
            list.push(TangentField::Sin(m));
        }
        let f = |g: &Diffeo<T>| ctx.deform_coefficients(g);
        let ds = directional_derivatives(&f, &list, gamma, ctx.h)?;
        Ok(Self { base, h: ctx.h, fields: list.into_iter().zip(ds).collect() })
    }

    pub fn m_max(&self) -> i64 {
        (self.fields.len() as i64 - 1) / 2
    }

    /// `L_m B`.
    pub fn lie_table(&self, m: i64) -> Result<CoefficientTable<T>> {
        let comps = VirasoroDirection::new(m).components::<T>();
        let ds = comps
            .iter()
            .map(|(v, _)| self.fields.get(v).cloned().ok_or(Error::IndexOutOfRange { index: m, bound: self.m_max() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(recombine(&comps, &ds))
    }

    pub fn schlesinger_residual(&self, m: i64, n: i64) -> Result<T> {
        let lhs = self.lie_table(m)?.get(n)?.clone();
        let rhs = schlesinger_rhs(&self.base, m, n, RhsForm::Primary)?;
        Ok((&lhs - &rhs).norm_op())
    }

    /// `‖L_m B_0‖`.
    pub fn b0_derivative(&self, m: i64) -> Result<T> {
        Ok(self.lie_table(m)?.get(0)?.norm_op())
    }

    /// Residuals for `|m| <= m_max`, `1 <= |n| <= n_max`.
    pub fn sweep(&self, m_max: i64, n_max: i64) -> Result<Vec<(i64, i64, T)>> {
        let mut out = Vec::new();
        for m in -m_max..=m_max {
            let lm = self.lie_table(m)?;
            for n in (-n_max..=n_max).filter(|n| *n != 0) {
                let rhs = schlesinger_rhs(&self.base, m, n, RhsForm::Primary)?;
                out.push((m, n, (lm.get(n)? - &rhs).norm_op()));
            }
        }
        Ok(out)
    }

    /// Maxima over the probes of the residuals of the two integrability
    /// conditions `L_m 𝒜 - dΩ_m/dx = [Ω_m, 𝒜]` and
    /// `L_m Ω_n - L_n Ω_m = [Ω_m, Ω_n] + (n - m) Ω_{m+n}`.
    pub fn integrability_residuals(&self, m: i64, n: i64, probes: &[Complex<T>]) -> Result<(T, T)> {
        let lm = self.lie_table(m)?;
        let ln = self.lie_table(n)?;
        let b = &self.base;
        let (mut r1, mut r2) = (T::zero(), T::zero());
        for &x in probes {
            let field = b.field_series(x)?.value;
            let om = b.omega_series(m, x)?.value;
            let on = b.omega_series(n, x)?.value;
            let lhs1 = &lm.field_series(x)?.value - &b.omega_derivative_series(m, x)?;
            r1 = r1.max((&lhs1 - &om.commutator(&field)).norm_op());
            let lhs2 = &lm.omega_series(n, x)?.value - &ln.omega_series(m, x)?.value;
            let rhs2 = &om.commutator(&on) + &b.omega_series(m + n, x)?.value.scale_real(T::of_i64(n - m));
            r2 = r2.max((&lhs2 - &rhs2).norm_op());
        }
        Ok((r1, r2))
    }
}

/// Least-squares slope of `log r` against `log h`; `None` with fewer than two
/// usable points.
pub fn fitted_order(hs: &[f64], residuals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(residuals)
        .filter(|(h, r)| **h > 0.0 && **r > 0.0)
        .map(|(h, r)| (h.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_diffeo::DEFAULT_CUTOFF;
    use crate::scalar::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = CMat<f64>;

    fn e12() -> M {
        M::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
    }

    fn probes() -> Vec<Complex<f64>> {
        vec![c(0.0, 0.0), c(0.5, 0.0), c(2.0, 0.0), c(10.0, 0.0)]
    }

    fn matrix_family(cutoff: usize) -> Loop<f64> {
        let s = e12();
        let st = s.transpose();
        Loop::from_fn(2, cutoff, |x| (&s.scale(x * 0.3) + &st.scale(x.inv() * 0.2)).exp()).unwrap()
    }

    fn scalar_family(cutoff: usize) -> Loop<f64> {
        Loop::from_fn(1, cutoff, |x| M::scalar((x * 0.3 + x.inv() * 0.2).exp())).unwrap()
    }

    fn random_table(rng: &mut ChaCha8Rng, bound: usize) -> CoefficientTable<f64> {
        let entries = (0..2 * bound + 1)
            .map(|i| {
                if i == bound {
                    M::zeros(2)
                } else {
                    M::from_fn(2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                }
            })
            .collect();
        CoefficientTable::from_entries(bound, entries).unwrap()
    }

    #[test]
    fn deform_examples() {
        let e = Diffeo::identity(DEFAULT_CUTOFF);
        let ctx = DeformationContext::new(Loop::identity(2, 16), 8, 1e-4, probes()).unwrap();
        assert!(ctx.deform_coefficients(&e).unwrap().iter().all(|(_, b)| b.norm_max() == 0.0));

        let g = Loop::from_modes(2, 16, &[(0, M::identity(2)), (1, e12()), (-1, -&e12())]).unwrap();
        let t = DeformationContext::new(g, 8, 1e-4, probes()).unwrap().deform_coefficients(&e).unwrap();
        for (n, b) in t.iter() {
            let expect = if n.abs() == 1 { -&e12() } else { M::zeros(2) };
            assert!((b - &expect).norm_max() < 1e-12, "n={n}");
        }

        let t = DeformationContext::new(scalar_family(32), 16, 1e-4, probes()).unwrap().deform_coefficients(&e).unwrap();
        for (n, b) in t.iter() {
            let expect = match n {
                1 => 0.2,
                -1 => -0.3,
                _ => 0.0,
            };
            assert!((b[(0, 0)] - c(expect, 0.0)).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn probes_near_circle_are_rejected() {
        let r = DeformationContext::new(Loop::identity(1, 8), 4, 1e-4, vec![c(1.05, 0.0)]);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rhs_examples() {
        let zero = CoefficientTable::<f64>::zeros(2, 8);
        for m in -3..=3 {
            for n in [-3, -1, 1, 3] {
                assert!(schlesinger_rhs(&zero, m, n, RhsForm::Primary).unwrap().norm_max() == 0.0);
            }
        }
        let x = M::from_real(&[&[0.0, -1.0], &[0.0, 0.0]]);
        let t = CoefficientTable::from_sparse(2, 8, &[(1, x.clone()), (-1, x.clone())]).unwrap();
        assert!(schlesinger_rhs(&t, 1, 1, RhsForm::Primary).unwrap().norm_max() == 0.0);
        assert_eq!(schlesinger_rhs(&t, -2, 1, RhsForm::Primary).unwrap(), x);
        assert!(matches!(schlesinger_rhs(&t, 6, 3, RhsForm::Primary), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn rhs_forms_agree_when_b0_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let t = random_table(&mut rng, 10);
            for m in -4..=4 {
                for n in (-4..=4).filter(|n| *n != 0) {
                    let a = schlesinger_rhs(&t, m, n, RhsForm::Primary).unwrap();
                    let b = schlesinger_rhs(&t, m, n, RhsForm::Equivalent).unwrap();
                    assert!((&a - &b).norm_max() < 1e-13, "m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn identity_loop_has_zero_residuals() {
        let ctx = DeformationContext::new(Loop::identity(2, 16), 8, 1e-4, probes()).unwrap();
        let cache = ctx.lie_cache(&Diffeo::identity(DEFAULT_CUTOFF), 2).unwrap();
        assert!(cache.sweep(2, 2).unwrap().iter().all(|r| r.2 == 0.0));
        assert_eq!(cache.integrability_residuals(1, -1, &probes()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn scalar_family_satisfies_the_linear_system() {
        let ctx = DeformationContext::new(scalar_family(32), 16, 1e-4, probes()).unwrap();
        let cache = ctx.lie_cache(&Diffeo::identity(DEFAULT_CUTOFF), 3).unwrap();
        let worst = cache.sweep(3, 3).unwrap().iter().map(|r| r.2).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        let (r1, r2) = cache.integrability_residuals(1, -1, &probes()).unwrap();
        assert!(r1 < 1e-6 && r2 < 1e-6, "{r1} {r2}");
    }

    #[test]
    fn matrix_family_residuals() {
        let ctx = DeformationContext::new(matrix_family(32), 16, 1e-4, probes()).unwrap();
        let e = Diffeo::identity(DEFAULT_CUTOFF);
        let cache = ctx.lie_cache(&e, 3).unwrap();
        let worst = cache.sweep(3, 3).unwrap().iter().map(|r| r.2).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        for m in -3..=3 {
            assert!(cache.b0_derivative(m).unwrap() < 1e-6);
        }
        let direct = ctx.schlesinger_residual(&e, 2, -1).unwrap();
        assert!((direct - cache.schlesinger_residual(2, -1).unwrap()).abs() < 1e-12);
        let (r1, r2) = cache.integrability_residuals(1, -1, &probes()).unwrap();
        assert!(r1 < 1e-6 && r2 < 1e-6, "{r1} {r2}");
    }

    #[test]
    fn isomonodromy_examples() {
        let nodes: Vec<Complex<f64>> = (0..8).map(|j| Complex::from_polar(1.0, 0.7 * j as f64 + 0.1)).collect();
        let e = Diffeo::identity(DEFAULT_CUTOFF);
        let ctx = DeformationContext::new(Loop::identity(1, 8), 4, 1e-4, vec![]).unwrap();
        assert_eq!(ctx.isomonodromy_check(&e, 1, &nodes).unwrap(), 0.0);
        let xi = Loop::monomial(1, 1, 8).unwrap();
        let ctx = DeformationContext { g0: xi, bound: 4, h: 1e-4, probes: vec![] };
        assert!(ctx.isomonodromy_check(&e, 0, &nodes).unwrap() < 1e-8);
        let ctx = DeformationContext::new(matrix_family(32), 16, 1e-4, vec![]).unwrap();
        for m in -2..=2 {
            let r = ctx.isomonodromy_check(&e, m, &nodes).unwrap();
            assert!(r < 1e-7, "m={m} r={r}");
        }
    }

    #[test]
    fn order_fit() {
        let hs = [1e-2, 1e-3, 1e-4];
        let rs: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        assert!((fitted_order(&hs, &rs).unwrap() - 2.0).abs() < 1e-12);
        assert!(fitted_order(&[1e-2], &[1.0]).is_none());
    }
}
