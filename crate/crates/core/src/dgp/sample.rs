use rand::Rng;
use rand_distr::StandardNormal;

use super::spec::ScenarioSpec;
use crate::estimators::{EstimatorError, TrialDataset};
use crate::numkernel::SeedStream;

/// Draws one trial.
///
/// Each participant consumes the stream in a fixed order: allocation, x, u,
/// compliance, noise. The latent u is kept on the dataset but estimators
/// never read it.
pub fn sample_dataset(spec: &ScenarioSpec, stream: SeedStream) -> Result<TrialDataset, EstimatorError> {
    let mut rng = stream.rng();
    let n = spec.n;
    let o = &spec.outcome;
    let (mut y, mut zs, mut cs, mut xs, mut us) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let z = rng.random::<bool>() as u8;
        let x = (rng.random::<f64>() < spec.p_x) as u8;
        let u = (rng.random::<f64>() < spec.p_u) as u8;
        let c = (rng.random::<f64>() < spec.compliance.probability(z, x, u)) as u8;
        let e: f64 = rng.sample(StandardNormal);
        let (xf, uf) = (x as f64, u as f64);
        let mut mean = o.beta0 + o.beta_x * xf + o.beta_u * uf;
        if c == 1 {
            mean += if z == 1 { o.delta1 + o.tau_x * xf + o.tau_u * uf } else { o.delta0 };
        }
        y.push(mean + o.sigma * e);
        zs.push(z);
        cs.push(c);
        xs.push(x);
        us.push(u);
    }
    TrialDataset::with_binary_covariate(y, zs, cs, xs, Some(us))
}

/// Monte-Carlo estimate of the forced-compliance contrast from `draws`
/// independent pairs of potential outcomes. Returns `(mean, mc_se)`.
pub fn brute_force_estimand(spec: &ScenarioSpec, draws: usize, stream: SeedStream) -> (f64, f64) {
    let mut rng = stream.rng();
    let o = &spec.outcome;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let x = (rng.random::<f64>() < spec.p_x) as u8 as f64;
        let u = (rng.random::<f64>() < spec.p_u) as u8 as f64;
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let base = o.beta0 + o.beta_x * x + o.beta_u * u;
        let y_new = base + o.delta1 + o.tau_x * x + o.tau_u * u + o.sigma * e1;
        let y_std = base + o.delta0 + o.sigma * e0;
        let d = y_new - y_std;
        sum += d;
        sum_sq += d * d;
    }
    let m = draws as f64;
    let mean = sum / m;
    let var = (sum_sq - m * mean * mean) / (m - 1.0);
    (mean, (var.max(0.0) / m).sqrt())
}
