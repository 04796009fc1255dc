//! One line per acceptance criterion; exits nonzero if any is red.

use std::process::Command;
use std::time::{Duration, Instant};

use birkhoff::jump_residue::{compute_jump_density, fourier_coefficients_b};
use birkhoff::{factorize, CMat64, CauchySide, Complex64, Loop64, Route};
use birkhoff_cli::{run, ExperimentConfig, Mode, Overrides, Record, Report, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MATRIX: &str = r#"
family = "matrix-exponential"
N = 2
M = 64
N_B = 16
h = [1e-2, 1e-3, 1e-4]
m_max = 2
n_max = 2
probes = [[0.0, 0.0], [0.5, 0.0], [2.0, 0.0], [10.0, 0.0]]
suites = ["factorization", "schlesinger", "integrability", "bridge"]
seed = 7

[diffeo]
sin = [0.0, 0.05]

[[family_params.modes]]
k = 1
re = [[0.1, 0.2], [0.0, -0.1]]

[[family_params.modes]]
k = -1
re = [[0.0, 0.0], [0.15, 0.05]]
im = [[0.05, 0.0], [0.0, 0.0]]
"#;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn e12() -> CMat64 {
    CMat64::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
}

fn manufactured_factorization() -> Outcome {
    let start = Instant::now();
    let m = 16;
    let e = e12();
    let g = Loop64::from_modes(2, m, &[(0, CMat64::identity(2)), (1, e.clone()), (-1, -&e)]).unwrap();
    let pair = factorize(&g, m).unwrap();
    let plus = Loop64::from_modes(2, m, &[(0, CMat64::identity(2)), (1, e.clone())]).unwrap();
    let minus = Loop64::from_modes(2, m, &[(0, CMat64::identity(2)), (-1, e)]).unwrap();
    let err = pair.plus.coeff_distance(&plus).max(pair.minus.coeff_distance(&minus));
    let t = start.elapsed();
    outcome(err < 1e-11 && t < Duration::from_secs(1), format!("coefficient error {err:.2e} (< 1e-11), {:.3} s (< 1 s)", t.as_secs_f64()))
}

fn scalar_factorization() -> Outcome {
    let m = 32;
    let g = Loop64::from_fn(1, m, |x| CMat64::scalar((x * 0.3 + x.inv() * 0.2).exp())).unwrap();
    let pair = factorize(&g, m).unwrap();
    let a = compute_jump_density(&pair.minus, &g).unwrap();
    let b = fourier_coefficients_b(&a.density, 16).unwrap();
    let mut worst = 0.0f64;
    for (n, bn) in b.iter() {
        let expect = match n {
            1 => c(0.2),
            -1 => c(-0.3),
            _ => c(0.0),
        };
        worst = worst.max((bn[(0, 0)] - expect).norm());
    }
    let plus = Loop64::from_fn(1, m, |x| CMat64::scalar((x * 0.3).exp())).unwrap();
    let fac = pair.plus.coeff_distance(&plus).max(pair.jump_residual);
    outcome(worst < 1e-10 && fac < 1e-10, format!("B error {worst:.2e}, factor error {fac:.2e} (< 1e-10)"))
}

fn plemelj() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = 8;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let coeffs: Vec<CMat64> = (0..2 * m + 1)
            .map(|k| {
                let decay = 0.7f64.powi((k as i32 - m as i32).abs());
                CMat64::from_fn(2, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay)
            })
            .collect();
        let f = Loop64::from_coefficients(m, coeffs).unwrap();
        let plus = f.cauchy_project(CauchySide::Plus);
        let minus = f.cauchy_project(CauchySide::Minus);
        let jump = plus.lin_comb(c(1.0), &minus, c(-1.0)).unwrap();
        worst = worst.max(jump.coeff_distance(&f));
        // the Cauchy integral continues each projection off the circle
        for (side, r) in [(CauchySide::Plus, 0.5), (CauchySide::Minus, 2.0)] {
            let x = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
            let v = f.cauchy_eval(x, Route::Integral).unwrap();
            worst = worst.max((&v - &f.cauchy_project(side).eval(x)).norm_max());
        }
    }
    let mut table = 0.0f64;
    for k in -6..=6i64 {
        let f = Loop64::monomial(1, k, 6).unwrap();
        for x in [Complex64::new(0.3, 0.2), Complex64::new(2.0, -1.0)] {
            let got = f.cauchy_eval(x, Route::Series).unwrap()[(0, 0)];
            let expect = match (x.norm() < 1.0, k >= 0) {
                (true, true) => x.powi(k as i32),
                (false, false) => -x.powi(k as i32),
                _ => c(0.0),
            };
            table = table.max((got - expect).norm());
        }
    }
    outcome(worst < 1e-12 && table < 1e-14, format!("100 loops, jump defect {worst:.2e}; monomial table {table:.2e}"))
}

fn records<'a>(rep: &'a Report, check: &str) -> Vec<&'a Record> {
    rep.records.iter().filter(|r| r.check == check).collect()
}

fn worst(recs: &[&Record]) -> f64 {
    recs.iter().filter_map(|r| r.residual).fold(0.0, f64::max)
}

fn none_failed(recs: &[&Record]) -> bool {
    !recs.is_empty() && recs.iter().all(|r| !matches!(r.status, Status::Fail | Status::Error))
}

/// Decisive records: largest cutoff and finest step.
fn decisive<'a>(rep: &'a Report, check: &str) -> Vec<&'a Record> {
    records(rep, check).into_iter().filter(|r| r.status != Status::Info).collect()
}

fn jump_identities(rep: &Report) -> Outcome {
    let at64 = |check: &str| records(rep, check).into_iter().filter(|r| r.cutoff == Some(64)).collect::<Vec<_>>();
    let jump = worst(&at64("jump_boundary"));
    let b0 = worst(&at64("b0"));
    let det = worst(&at64("det_identity"));
    let om = worst(&at64("omega_minus_one"));
    let decay = at64("field_decay");
    let decays = none_failed(&decay);
    let pass = jump < 1e-8 && b0 < 1e-9 && det < 1e-8 && om < 1e-9 && decays;
    outcome(
        pass,
        format!("jump {jump:.2e} (< 1e-8), B0 {b0:.2e} (< 1e-9), det {det:.2e} (< 1e-8), |x|^2|A| bounded {decays}, Omega_-1 {om:.2e} (< 1e-9)"),
    )
}

fn schlesinger(rep: &Report) -> Outcome {
    let recs = decisive(rep, "schlesinger");
    let gammas_ok = ["e", "gamma"].iter().all(|g| recs.iter().any(|r| r.gamma.as_deref() == Some(*g)));
    let res = worst(&recs);
    let orders: Vec<&Record> = records(rep, "order:schlesinger");
    let fitted: Vec<f64> = orders.iter().filter(|r| r.tolerance.is_some()).filter_map(|r| r.residual).collect();
    let floor = orders.len() - fitted.len();
    let spread = fitted.iter().map(|o| (o - 2.0).abs()).fold(0.0, f64::max);
    let t = rep.timing.suites.get("schlesinger").copied().unwrap_or(f64::INFINITY);
    let pass = gammas_ok && res < 1e-6 && none_failed(&recs) && spread <= 0.3 && !fitted.is_empty() && t < 300.0;
    outcome(
        pass,
        format!(
            "max residual {res:.2e} at h = 1e-4, M = 64 (< 1e-6); {} orders within {spread:.3} of 2 (<= 0.3), {floor} at rounding floor; {t:.2} s (< 300 s)",
            fitted.len()
        ),
    )
}

fn isomonodromy(rep: &Report) -> Outcome {
    let recs = decisive(rep, "isomonodromy");
    let r = worst(&recs);
    let ms: Vec<i64> = recs.iter().filter_map(|r| r.m).collect();
    let covered = (-2..=2).all(|m| ms.contains(&m));
    outcome(r < 1e-7 && covered, format!("max residual {r:.2e} over m = -2..2 (< 1e-7)"))
}

fn integrability(rep: &Report) -> Outcome {
    let r1 = decisive(rep, "inte1");
    let r2 = decisive(rep, "inte2");
    let (a, b) = (worst(&r1), worst(&r2));
    outcome(a < 1e-6 && b < 1e-6 && !r1.is_empty() && !r2.is_empty(), format!("first {a:.2e}, second {b:.2e} at probes 0, 0.5, 2, 10 (< 1e-6)"))
}

fn virasoro(rep: &Report) -> Outcome {
    let br = decisive(rep, "virasoro_bracket");
    let r = worst(&br);
    let orders = records(rep, "order:lie_monomial");
    let spread = orders.iter().filter_map(|o| o.residual).map(|o| (o - 2.0).abs()).fold(0.0, f64::max);
    let pass = r < 1e-5 && br.len() >= 10 && none_failed(&orders) && spread <= 0.3;
    outcome(pass, format!("bracket {r:.2e} over m, n in -2..2 (< 1e-5); monomial order within {spread:.3} of 2"))
}

fn bridge(rep: &Report) -> Outcome {
    let ks_n = worst(&records(rep, "ks_identity:e=n"));
    let ks_n1 = worst(&records(rep, "ks_identity:e=n+1"));
    let conv = records(rep, "ks_convention");
    let pair = records(rep, "commuting_pair");
    let orders = records(rep, "order:t_map");
    let spread = orders.iter().filter_map(|o| o.residual).map(|o| (o - 2.0).abs()).fold(0.0, f64::max);
    let pass = ks_n < 1e-12 && ks_n1 >= 1e-12 && none_failed(&conv) && none_failed(&pair) && none_failed(&orders) && spread <= 0.3;
    outcome(
        pass,
        format!("e=n residual {ks_n:.2e} (< 1e-12), e=n+1 residual {ks_n1:.2e}; commuting pair ok; T-map order within {spread:.3} of 2"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, MATRIX).unwrap();
    let once = |tag: &str| -> Option<serde_json::Value> {
        let out = dir.path().join(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_birkhoff"))
            .args(["run", cfg.to_str()?, "--out", out.to_str()?, "--jobs", if tag == "a" { "1" } else { "4" }])
            .output()
            .ok()?;
        if status.status.code() != Some(0) {
            return None;
        }
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).ok()?).ok()?;
        v.as_object_mut()?.remove("timing");
        Some(v)
    };
    match (once("a"), once("b")) {
        (Some(a), Some(b)) => {
            let same = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
            outcome(same, format!("two runs (1 and 4 threads) identical outside timing: {same}"))
        }
        _ => outcome(false, "CLI run failed"),
    }
}

fn main() {
    let cfg = ExperimentConfig::parse(MATRIX).expect("valid config");
    let report = run(&cfg, Mode::Sweep, Overrides::default()).expect("run");
    let results = [
        manufactured_factorization(),
        scalar_factorization(),
        plemelj(),
        jump_identities(&report),
        schlesinger(&report),
        isomonodromy(&report),
        integrability(&report),
        virasoro(&report),
        bridge(&report),
        determinism(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("criterion {}: {} {}", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
