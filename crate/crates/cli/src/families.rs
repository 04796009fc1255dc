//! Base loops `G0` and diffeomorphisms built from a configuration.

use birkhoff::circle_diffeo::DEFAULT_CUTOFF;
use birkhoff::{CMat64, Complex64, Diffeo64, Loop64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{DiffeoSpec, ExperimentConfig, Family};
use crate::CliError;

fn matrix(rows: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> CMat64 {
    CMat64::from_fn(rows.len(), |i, j| Complex64::new(rows[i][j], im.map_or(0.0, |m| m[i][j])))
}

/// `G0` at cutoff `m`.
pub fn base_loop(cfg: &ExperimentConfig, m: usize) -> Result<Loop64, CliError> {
    let p = &cfg.family_params;
    let n = cfg.n;
    let l = match cfg.family {
        Family::Identity => Ok(Loop64::identity(n, m)),
        Family::ManufacturedUnipotent => {
            let e = CMat64::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
            Loop64::from_modes(2, m, &[(0, CMat64::identity(2)), (1, e.clone()), (-1, -&e)])
        }
        Family::ScalarExponential => {
            let (a, b) = (p.alpha.unwrap_or(0.0), p.beta.unwrap_or(0.0));
            Loop64::from_fn(1, m, |x| CMat64::scalar((x * b + x.inv() * a).exp()))
        }
        Family::MatrixExponential => {
            let modes: Vec<(i64, CMat64)> = p.modes.iter().map(|q| (q.k, matrix(&q.re, q.im.as_ref()))).collect();
            Loop64::from_fn(n, m, |x| {
                let q = modes.iter().fold(CMat64::zeros(n), |acc, (k, c)| &acc + &c.scale(x.powi(*k as i32)));
                q.exp()
            })
        }
    };
    l.map_err(CliError::from)
}

/// The configured diffeomorphism; random displacements draw from `seed`.
pub fn diffeo(spec: &DiffeoSpec, seed: u64) -> Result<Diffeo64, CliError> {
    let cutoff = DEFAULT_CUTOFF;
    let mut cos = vec![0.0; cutoff + 1];
    let mut sin = vec![0.0; cutoff + 1];
    for (k, v) in spec.cos.iter().enumerate().take(cutoff + 1) {
        cos[k] = *v;
    }
    for (k, v) in spec.sin.iter().enumerate().take(cutoff + 1) {
        sin[k] = *v;
    }
    if let Some(r) = &spec.random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = r.modes.min(cutoff);
        // amplitude per mode shrinks with k so that sup |d'| <= amplitude
        for k in 1..=modes {
            let a = r.amplitude / (modes * k) as f64;
            cos[k] += a * rng.gen_range(-1.0..1.0);
            sin[k] += a * rng.gen_range(-1.0..1.0);
        }
    }
    Ok(Diffeo64::new(cos, sin)?)
}

/// Whether a diffeomorphism other than the identity was configured.
pub fn has_diffeo(spec: &DiffeoSpec) -> bool {
    spec.random.is_some() || spec.cos.iter().chain(&spec.sin).any(|v| *v != 0.0)
}
