//! The four residual suites. Each appends records; nothing here decides the
//! exit status.

use std::collections::BTreeMap;

use birkhoff::circle_diffeo::{bracket_residual, lie_derivative, monomial_functional, DEFAULT_CUTOFF};
use birkhoff::fuchsian_bridge::{ks_coefficients, ks_identity_residual, t_map_residual, Polynomial};
use birkhoff::isomonodromy::fitted_order;
use birkhoff::jump_residue::{boundary_jump_defect, eval_field, eval_omega, FieldSource};
use birkhoff::{
    CMat64, Complex64, DeformationContext64, Diffeo64, ExponentConvention, FuchsianData64, LieCache, Loop64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Family, Suite, Tolerances};
use crate::families::base_loop;
use crate::report::{Record, Status};

/// Probes used by the decay check of `𝒜`.
pub const DECAY_PROBES: [f64; 3] = [10.0, 100.0, 1000.0];
/// Window of the Virasoro and T-map checks.
pub const ALGEBRA_WINDOW: i64 = 2;

/// Shared state of one run: configuration, effective tolerances, the
/// deformation points and the Lie caches keyed by `(γ, M, h)` indices.
pub struct Runner<'a> {
    pub cfg: &'a ExperimentConfig,
    pub tol: Tolerances,
    pub seed: u64,
    pub gammas: Vec<(String, Diffeo64)>,
    caches: BTreeMap<(usize, usize, usize), Result<LieCache<f64>, String>>,
    pub records: Vec<Record>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a ExperimentConfig, tol: Tolerances, seed: u64, gammas: Vec<(String, Diffeo64)>) -> Self {
        Self { cfg, tol, seed, gammas, caches: BTreeMap::new(), records: Vec::new() }
    }

    fn probes(&self) -> Vec<Complex64> {
        self.cfg.probes.iter().map(|p| c(p[0], p[1])).collect()
    }

    fn largest_m(&self) -> usize {
        self.cfg.cutoffs().into_iter().max().unwrap_or(0)
    }

    fn finest_h(&self) -> f64 {
        self.cfg.steps().into_iter().fold(f64::INFINITY, f64::min)
    }

    fn context(&self, m: usize, h: f64) -> Result<DeformationContext64, String> {
        let g0 = base_loop(self.cfg, m).map_err(|e| e.to_string())?;
        DeformationContext64::new(g0, self.cfg.n_b, h, self.probes()).map_err(|e| e.to_string())
    }

    pub fn run(&mut self, suite: Suite) {
        match suite {
            Suite::Factorization => self.factorization(),
            Suite::Schlesinger => self.schlesinger(),
            Suite::Integrability => self.integrability(),
            Suite::Bridge => self.bridge(),
        }
    }

    // ---- factorization -------------------------------------------------

    fn factorization(&mut self) {
        let largest = self.largest_m();
        for m in self.cfg.cutoffs() {
            let decisive = m == largest;
            let rec = |check: &str| Record::new(Suite::Factorization, check).cutoff(m).gamma("e");
            let g0 = match base_loop(self.cfg, m) {
                Ok(g) => g,
                Err(e) => {
                    self.records.push(rec("factorize").failed(&e));
                    continue;
                }
            };
            let ctx = match DeformationContext64::new(g0.clone(), self.cfg.n_b, self.finest_h(), self.probes()) {
                Ok(c) => c,
                Err(e) => {
                    self.records.push(rec("factorize").failed(&e));
                    continue;
                }
            };
            let d = match ctx.deform(&Diffeo64::identity(DEFAULT_CUTOFF)) {
                Ok(d) => d,
                Err(e) => {
                    self.records.push(rec("factorize").failed(&e));
                    continue;
                }
            };
            let tol = self.tol.clone();
            self.records.push(
                rec("factorize")
                    .judge(d.pair.jump_residual, tol.factorization, decisive)
                    .detail(format!("condition {:.3e}", d.pair.condition_estimate)),
            );
            if let Some((plus, minus, table)) = oracle(self.cfg, m) {
                self.records.push(rec("oracle_yplus").judge(d.pair.plus.coeff_distance(&plus), tol.factorization, decisive));
                self.records.push(rec("oracle_yminus").judge(d.pair.minus.coeff_distance(&minus), tol.factorization, decisive));
                let b_err = d
                    .table
                    .iter()
                    .map(|(n, b)| (b - &table.get(&n).cloned().unwrap_or_else(|| CMat64::zeros(self.cfg.n))).norm_op())
                    .fold(0.0, f64::max);
                self.records.push(rec("oracle_b").judge(b_err, tol.factorization, decisive));
            }

            // jump and residue identities
            match boundary_jump_defect(&d.pair.plus, &d.pair.minus, &d.density) {
                Ok(r) => self.records.push(rec("jump_boundary").judge(r, tol.jump, decisive)),
                Err(e) => self.records.push(rec("jump_boundary").failed(&e)),
            }
            let b0 = d.table.get(0).map(CMat64::norm_op).unwrap_or(f64::NAN);
            self.records.push(rec("b0").judge(b0, tol.jump, decisive));
            self.records.push(rec("det_identity").judge(det_identity(&g0, &d.density), tol.jump, decisive));

            let bsum: f64 = d.table.iter().map(|(_, b)| b.norm_op()).sum();
            let decay = DECAY_PROBES
                .iter()
                .map(|&r| eval_field(FieldSource::Integral(&d.density), c(r, 0.0)).map(|e| r * r * e.value.norm_op()))
                .collect::<Result<Vec<_>, _>>();
            match decay {
                Ok(v) => self.records.push(
                    rec("field_decay")
                        .judge(v.iter().cloned().fold(0.0, f64::max), bsum + tol.jump, decisive)
                        .detail("max |x|^2 |A(x)| over x = 10, 100, 1000 against the coefficient sum"),
                ),
                Err(e) => self.records.push(rec("field_decay").failed(&e)),
            }
            let mut om = 0.0f64;
            let mut routes = 0.0f64;
            let mut err = None;
            for x in self.probes() {
                let r = (|| -> birkhoff::Result<(f64, f64)> {
                    let a_series = eval_field(FieldSource::Series(&d.table), x)?.value;
                    let a_quad = eval_field(FieldSource::Integral(&d.density), x)?.value;
                    let om_quad = eval_omega(FieldSource::Integral(&d.density), -1, x)?.value;
                    let mut worst = (&a_series - &a_quad).norm_op();
                    for k in -(self.cfg.m_max as i64)..=self.cfg.m_max as i64 {
                        let s = eval_omega(FieldSource::Series(&d.table), k, x)?;
                        let q = eval_omega(FieldSource::Integral(&d.density), k, x)?.value;
                        worst = worst.max((&s.value - &q).norm_op());
                    }
                    Ok(((&om_quad + &a_series).norm_op(), worst))
                })();
                match r {
                    Ok((a, b)) => {
                        om = om.max(a);
                        routes = routes.max(b);
                    }
                    Err(e) => err = Some(e),
                }
            }
            if self.cfg.probes.is_empty() {
                continue;
            }
            match err {
                None => {
                    self.records.push(rec("omega_minus_one").judge(om, tol.jump, decisive));
                    self.records.push(rec("route_agreement").judge(routes, tol.jump, decisive));
                }
                Some(e) => self.records.push(rec("omega_minus_one").failed(&e)),
            }
        }
    }

    // ---- schlesinger ---------------------------------------------------

    fn cache(&mut self, gi: usize, mi: usize, hi: usize) -> Result<&LieCache<f64>, String> {
        if !self.caches.contains_key(&(gi, mi, hi)) {
            let m = self.cfg.cutoffs()[mi];
            let h = self.cfg.steps()[hi];
            let window = self.cfg.m_max.max(self.cfg.n_max);
            let built = self
                .context(m, h)
                .and_then(|ctx| ctx.lie_cache(&self.gammas[gi].1, window).map_err(|e| e.to_string()));
            self.caches.insert((gi, mi, hi), built);
        }
        self.caches[&(gi, mi, hi)].as_ref().map_err(Clone::clone)
    }

    fn schlesinger(&mut self) {
        let (mm, nm) = (self.cfg.m_max as i64, self.cfg.n_max as i64);
        let (ms, hs) = (self.cfg.cutoffs(), self.cfg.steps());
        let (largest, finest) = (self.largest_m(), self.finest_h());
        let tol = self.tol.clone();
        let nodes: Vec<Complex64> = (0..16).map(|j| Complex64::from_polar(1.0, 0.39 * j as f64 + 0.05)).collect();
        for gi in 0..self.gammas.len() {
            let label = self.gammas[gi].0.clone();
            for (mi, &m) in ms.iter().enumerate() {
                let mut series: BTreeMap<(String, i64, i64), Vec<(f64, f64)>> = BTreeMap::new();
                for (hi, &h) in hs.iter().enumerate() {
                    let decisive = m == largest && h == finest;
                    let rec = |check: &str, a: Option<i64>, b: Option<i64>| {
                        Record::new(Suite::Schlesinger, check).gamma(&label).cutoff(m).h(h).indices(a, b)
                    };
                    let cache = match self.cache(gi, mi, hi) {
                        Ok(c) => c.clone(),
                        Err(e) => {
                            self.records.push(rec("schlesinger", None, None).failed(&e));
                            continue;
                        }
                    };
                    match cache.sweep(mm, nm) {
                        Ok(rows) => {
                            for (a, b, r) in rows {
                                series.entry(("schlesinger".into(), a, b)).or_default().push((h, r));
                                self.records.push(rec("schlesinger", Some(a), Some(b)).judge(r, tol.schlesinger, decisive));
                            }
                        }
                        Err(e) => self.records.push(rec("schlesinger", None, None).failed(&e)),
                    }
                    for a in -mm..=mm {
                        match cache.b0_derivative(a) {
                            Ok(r) => self.records.push(rec("b0_derivative", Some(a), None).judge(r, tol.schlesinger, decisive)),
                            Err(e) => self.records.push(rec("b0_derivative", Some(a), None).failed(&e)),
                        }
                    }
                    let ctx = match self.context(m, h) {
                        Ok(c) => c,
                        Err(e) => {
                            self.records.push(rec("isomonodromy", None, None).failed(&e));
                            continue;
                        }
                    };
                    for a in -mm..=mm {
                        match ctx.isomonodromy_check(&self.gammas[gi].1, a, &nodes) {
                            Ok(r) => {
                                series.entry(("isomonodromy".into(), a, 0)).or_default().push((h, r));
                                self.records.push(rec("isomonodromy", Some(a), None).judge(r, tol.isomonodromy, decisive));
                            }
                            Err(e) => self.records.push(rec("isomonodromy", Some(a), None).failed(&e)),
                        }
                    }
                }
                for ((check, a, b), pts) in series {
                    let n = if check == "schlesinger" { Some(b) } else { None };
                    let r = Record::new(Suite::Schlesinger, format!("order:{check}")).gamma(&label).cutoff(m).indices(Some(a), n);
                    self.records.push(order_record(r, &pts, tol.order, check == "schlesinger" && m == largest));
                }
            }
        }
    }

    // ---- integrability -------------------------------------------------

    fn integrability(&mut self) {
        let (mm, nm) = (self.cfg.m_max as i64, self.cfg.n_max as i64);
        let (ms, hs) = (self.cfg.cutoffs(), self.cfg.steps());
        let (largest, finest) = (self.largest_m(), self.finest_h());
        let tol = self.tol.integrability;
        let probes = self.probes();
        for gi in 0..self.gammas.len() {
            let label = self.gammas[gi].0.clone();
            for (mi, &m) in ms.iter().enumerate() {
                for (hi, &h) in hs.iter().enumerate() {
                    let decisive = m == largest && h == finest;
                    let rec = |check: &str, a: Option<i64>, b: Option<i64>| {
                        Record::new(Suite::Integrability, check).gamma(&label).cutoff(m).h(h).indices(a, b)
                    };
                    let cache = match self.cache(gi, mi, hi) {
                        Ok(c) => c.clone(),
                        Err(e) => {
                            self.records.push(rec("inte1", None, None).failed(&e));
                            continue;
                        }
                    };
                    for a in -mm..=mm {
                        match cache.integrability_residuals(a, a, &probes) {
                            Ok((r1, _)) => self.records.push(rec("inte1", Some(a), None).judge(r1, tol, decisive)),
                            Err(e) => self.records.push(rec("inte1", Some(a), None).failed(&e)),
                        }
                        for b in (-nm..=nm).filter(|&b| b > a) {
                            match cache.integrability_residuals(a, b, &probes) {
                                Ok((_, r2)) => self.records.push(rec("inte2", Some(a), Some(b)).judge(r2, tol, decisive)),
                                Err(e) => self.records.push(rec("inte2", Some(a), Some(b)).failed(&e)),
                            }
                        }
                    }
                }
            }
        }
    }

    // ---- bridge --------------------------------------------------------

    fn bridge(&mut self) {
        let tol = self.tol.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let data = random_fuchsian(&mut rng, self.cfg.n.max(2));
        let mut closes = [true, true];
        for m in -1..=4 {
            for n in 0..=4 {
                for (ci, conv) in [ExponentConvention::N, ExponentConvention::NPlusOne].into_iter().enumerate() {
                    let r = ks_identity_residual(&data, m, n, conv);
                    closes[ci] &= r < tol.bridge;
                    let label = if ci == 0 { "ks_identity:e=n" } else { "ks_identity:e=n+1" };
                    let rec = Record::new(Suite::Bridge, label).indices(Some(m), Some(n));
                    self.records.push(if ci == 0 { rec.judge(r, tol.bridge, true) } else { rec.judge(r, tol.bridge, false) });
                }
            }
        }
        let winner = match closes {
            [true, false] => Some("e=n"),
            [false, true] => Some("e=n+1"),
            _ => None,
        };
        let mut conv = Record::new(Suite::Bridge, "ks_convention");
        conv.status = if winner == Some("e=n") { Status::Pass } else { Status::Fail };
        self.records.push(conv.detail(format!("closing convention: {}", winner.unwrap_or("none or both"))));

        let x = CMat64::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let pair = FuchsianData64::new(vec![c(1.0, 0.0), c(2.0, 0.0)], vec![x.clone(), -&x]).expect("balanced pair");
        let mut worst = 0.0f64;
        for m in -1..=4 {
            for n in 0..=4 {
                let rn = ks_identity_residual(&pair, m, n, ExponentConvention::N);
                let b = ks_coefficients(&pair, m + n, ExponentConvention::NPlusOne).norm_op();
                let rn1 = ks_identity_residual(&pair, m, n, ExponentConvention::NPlusOne);
                worst = worst.max(rn).max((rn1 - b).abs() / (1.0 + b));
            }
        }
        self.records.push(
            Record::new(Suite::Bridge, "commuting_pair")
                .judge(worst, tol.bridge, true)
                .detail("e=n closes; e=n+1 leaves exactly |B_{m+n}|"),
        );

        // T-map compatibility and the Virasoro algebra on monomial functionals
        let taus: Vec<Complex64> = (0..3).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))).collect();
        let poly = Polynomial {
            terms: (0..3)
                .map(|_| (c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), (0..3).map(|_| rng.gen_range(0..3u32)).collect()))
                .collect(),
        };
        let tau = taus[0];
        let hs = self.cfg.steps();
        let finest = self.finest_h();
        for (label, gamma) in self.gammas.clone() {
            let mut tmap: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
            let mut mono: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
            for &h in &hs {
                let decisive = h == finest;
                let rec = |check: &str, a: i64, b: Option<i64>| Record::new(Suite::Bridge, check).gamma(&label).h(h).indices(Some(a), b);
                for m in -ALGEBRA_WINDOW..=ALGEBRA_WINDOW {
                    match t_map_residual(&poly, &taus, m, &gamma, h) {
                        Ok(r) => {
                            tmap.entry(m).or_default().push((h, r));
                            self.records.push(rec("t_map", m, None).judge(r, tol.virasoro, decisive));
                        }
                        Err(e) => self.records.push(rec("t_map", m, None).failed(&e)),
                    }
                    let k = 2;
                    let f = monomial_functional(tau, k);
                    let exact = gamma.eval(tau).powi((k + m) as i32) * k as f64;
                    match lie_derivative(&f, m, &gamma, h) {
                        Ok(v) => {
                            let r = (v - exact).norm();
                            mono.entry(m).or_default().push((h, r));
                            self.records.push(rec("lie_monomial", m, None).judge(r, tol.virasoro, decisive));
                        }
                        Err(e) => self.records.push(rec("lie_monomial", m, None).failed(&e)),
                    }
                    for n in -ALGEBRA_WINDOW..=ALGEBRA_WINDOW {
                        if n <= m {
                            continue;
                        }
                        let f1 = monomial_functional(tau, 1);
                        match bracket_residual(&f1, m, n, &gamma, h) {
                            Ok(r) => self.records.push(rec("virasoro_bracket", m, Some(n)).judge(r, tol.virasoro, decisive)),
                            Err(e) => self.records.push(rec("virasoro_bracket", m, Some(n)).failed(&e)),
                        }
                    }
                }
            }
            for (m, pts) in tmap {
                let r = Record::new(Suite::Bridge, "order:t_map").gamma(&label).indices(Some(m), None);
                self.records.push(order_record(r, &pts, tol.order, true));
            }
            for (m, pts) in mono {
                let r = Record::new(Suite::Bridge, "order:lie_monomial").gamma(&label).indices(Some(m), None);
                self.records.push(order_record(r, &pts, tol.order, true));
            }
        }
    }
}

/// Rounding level of a central difference with step `h`; residuals below it
/// carry no truncation signal and are left out of order fits.
pub fn rounding_floor(h: f64) -> f64 {
    10.0 * f64::EPSILON / h
}

/// Fitted order over `(h, residual)` points. Decisive when requested and
/// at least two points sit above the rounding floor.
pub fn order_record(rec: Record, pts: &[(f64, f64)], tol: f64, decisive: bool) -> Record {
    let usable: Vec<(f64, f64)> = pts.iter().cloned().filter(|p| p.1 > rounding_floor(p.0)).collect();
    let hs: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let rs: Vec<f64> = usable.iter().map(|p| p.1).collect();
    match fitted_order(&hs, &rs) {
        Some(o) => {
            let mut r = rec.judge((o - 2.0).abs(), tol, decisive).detail(format!("fitted order {o:.3}"));
            r.residual = Some(o);
            r
        }
        None if pts.len() >= 2 => rec.detail("residual at rounding floor for all but one step"),
        None => rec.detail("single step, no order"),
    }
}

/// `max_ξ |(det G)' - tr(A) det G|` on the density grid.
fn det_identity(g: &Loop64, density: &Loop64) -> f64 {
    let n = g.dim();
    let det = match Loop64::from_fn(1, (n * g.cutoff()).max(1), |x| CMat64::scalar(g.eval(x).det())) {
        Ok(d) => d,
        Err(_) => return f64::NAN,
    };
    let ddet = det.derivative();
    density
        .nodes()
        .into_iter()
        .zip(density.samples())
        .map(|(x, a)| (ddet.eval(x)[(0, 0)] - a.trace() * det.eval(x)[(0, 0)]).norm())
        .fold(0.0, f64::max)
}

type Oracle = (Loop64, Loop64, BTreeMap<i64, CMat64>);

/// Closed-form factors and coefficients, where the family has them.
fn oracle(cfg: &ExperimentConfig, m: usize) -> Option<Oracle> {
    let n = cfg.n;
    match cfg.family {
        Family::Identity => Some((Loop64::identity(n, m), Loop64::identity(n, m), BTreeMap::new())),
        Family::ManufacturedUnipotent => {
            let e = CMat64::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
            let plus = Loop64::from_modes(2, m, &[(0, CMat64::identity(2)), (1, e.clone())]).ok()?;
            let minus = Loop64::from_modes(2, m, &[(0, CMat64::identity(2)), (-1, e.clone())]).ok()?;
            Some((plus, minus, [(-1, -&e), (1, -&e)].into_iter().collect()))
        }
        Family::ScalarExponential => {
            let (a, b) = (cfg.family_params.alpha?, cfg.family_params.beta?);
            let plus = Loop64::from_fn(1, m, |x| CMat64::scalar((x * b).exp())).ok()?;
            let minus = Loop64::from_fn(1, m, |x| CMat64::scalar((-x.inv() * a).exp())).ok()?;
            let table = [(1, CMat64::scalar(c(a, 0.0))), (-1, CMat64::scalar(c(-b, 0.0)))].into_iter().collect();
            Some((plus, minus, table))
        }
        Family::MatrixExponential => None,
    }
}

/// Three poles of modulus in `[0.3, 1.3]`, pairwise at least 0.3 apart, and
/// balanced random residues.
fn random_fuchsian(rng: &mut ChaCha8Rng, n: usize) -> FuchsianData64 {
    let mut poles: Vec<Complex64> = Vec::new();
    while poles.len() < 3 {
        let z = Complex64::from_polar(rng.gen_range(0.3..1.3), rng.gen_range(0.0..std::f64::consts::TAU));
        if poles.iter().all(|p| (p - z).norm() > 0.3) {
            poles.push(z);
        }
    }
    let mut r = || CMat64::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let (a1, a2) = (r(), r());
    let a3 = -&(&a1 + &a2);
    FuchsianData64::new(poles, vec![a1, a2, a3]).expect("balanced residues at distinct poles")
}
