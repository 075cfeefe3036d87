//! Empirical Lipschitz estimates, the random-weight ratio study, and the
//! two-layer tanh example where ϑ is strictly between the linear and θ bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::activations::{builtin, VectorActivation};
use crate::certificates::{
    theta_recursive_from, vartheta_exhaustive, NormTable, DEFAULT_VARTHETA_BUDGET,
};
use crate::error::{LipError, Result};
use crate::linalg::{matmul, Matrix, NormSpec};
use crate::network::{format_f64, Layer, Network};
use crate::rng;

/// Default radius of the probing sphere.
pub const DEFAULT_RADIUS: f64 = 1e-4;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `‖T(x + z) − T x‖ / ‖z‖` for one perturbation.
pub fn difference_ratio(net: &Network, x: &[f64], z: &[f64]) -> Result<f64> {
    if z.len() != x.len() {
        return Err(LipError::Shape(
            "perturbation and point differ in length".into(),
        ));
    }
    let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nz == 0.0 {
        return Err(LipError::InvalidInput(
            "perturbation must be nonzero".into(),
        ));
    }
    let xz: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
    Ok(dist(&net.forward(&xz)?, &net.forward(x)?) / nz)
}

/// Largest difference ratio over `trials` perturbations drawn uniformly from
/// the sphere of radius `radius` around `x`. A lower bound on every valid
/// Euclidean Lipschitz certificate.
pub fn empirical_lipschitz(
    net: &Network,
    x: &[f64],
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(LipError::InvalidInput("radius must be positive".into()));
    }
    if x.len() != net.input_dim() {
        return Err(LipError::Shape(format!(
            "point has length {} but the network expects {}",
            x.len(),
            net.input_dim()
        )));
    }
    let fx = net.forward(x)?;
    let mut r = rng::substream(seed, 0);
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let z = rng::on_sphere(&mut r, x.len(), radius);
        let xz: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        best = best.max(dist(&net.forward(&xz)?, &fx) / nz);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    /// `(N_0, …, N_m)`.
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Hidden-layer constants `α_1, …, α_{m−1}`.
    pub alpha: Vec<f64>,
    pub vartheta: bool,
    pub budget: u64,
}

impl MonteCarloConfig {
    /// All hidden α equal to 1/2.
    pub fn new(dims: Vec<usize>, trials: usize, seed: u64) -> Self {
        let hidden = dims.len().saturating_sub(2);
        MonteCarloConfig {
            dims,
            trials,
            seed,
            alpha: vec![0.5; hidden],
            vartheta: false,
            budget: DEFAULT_VARTHETA_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 3 {
            return Err(LipError::InvalidInput(
                "the ratio study needs at least two layers (three dims)".into(),
            ));
        }
        if self.dims.contains(&0) {
            return Err(LipError::InvalidInput("dims must be positive".into()));
        }
        if self.trials == 0 {
            return Err(LipError::InvalidInput("need at least one trial".into()));
        }
        if self.alpha.len() != self.dims.len() - 2 {
            return Err(LipError::InvalidInput(format!(
                "expected {} hidden alphas, got {}",
                self.dims.len() - 2,
                self.alpha.len()
            )));
        }
        if self.alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(LipError::InvalidInput("alphas must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Ratios of one realization to its product bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRatios {
    pub theta: f64,
    pub linear: f64,
    pub vartheta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut sum, mut n) = (0.0, 0usize);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            sum += v;
            n += 1;
            min = min.min(v);
            max = max.max(v);
        }
        Summary {
            mean: sum / n as f64,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioStats {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub alpha: Vec<f64>,
    pub theta_ratio: Summary,
    pub linear_ratio: Summary,
    pub vartheta_ratio: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub stats: RatioStats,
    pub per_trial: Vec<TrialRatios>,
}

/// Standard-normal weights for trial `trial`, drawn row-major layer by layer.
pub fn random_weights(dims: &[usize], seed: u64, trial: u64) -> Vec<Matrix> {
    let mut r = rng::substream(seed, trial);
    dims.windows(2)
        .map(|w| {
            let data = rng::normal_vec(&mut r, w[0] * w[1]);
            Matrix::new(w[1], w[0], data).expect("positive dims, finite normals")
        })
        .collect()
}

fn run_trial(cfg: &MonteCarloConfig, trial: u64) -> Result<TrialRatios> {
    let weights = random_weights(&cfg.dims, cfg.seed, trial);
    let refs: Vec<&Matrix> = weights.iter().collect();
    let table = NormTable::from_weights(&refs);
    let product = table.product();
    let theta = theta_recursive_from(&table, &cfg.alpha) / product;
    let linear = table.linear() / product;
    let vartheta = if cfg.vartheta {
        let mut net =
            Network::from_weights(weights, builtin("relu", &[])?, builtin("identity", &[])?)?;
        for (i, &a) in cfg.alpha.iter().enumerate() {
            net = net.with_layer_alpha(i, a)?;
        }
        let l2 = NormSpec::euclidean();
        Some(vartheta_exhaustive(&net, (&l2, &l2), cfg.budget)?.value / product)
    } else {
        None
    };
    let tol = 1e-9;
    let ordered = linear <= theta * (1.0 + tol)
        && theta <= 1.0 + tol
        && vartheta.is_none_or(|v| linear <= v * (1.0 + tol) && v <= theta * (1.0 + tol));
    if !ordered {
        return Err(LipError::Internal(format!(
            "trial {trial}: ratios out of order (linear {linear}, vartheta {vartheta:?}, theta {theta})"
        )));
    }
    Ok(TrialRatios {
        theta,
        linear,
        vartheta,
    })
}

/// Draws `cfg.trials` random networks and summarizes the bound-to-product
/// ratios. Trials run in parallel on independent substreams; aggregation is
/// in trial order, so results do not depend on scheduling.
pub fn run_monte_carlo(cfg: &MonteCarloConfig) -> Result<MonteCarloResult> {
    cfg.validate()?;
    let per_trial = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    let stats = RatioStats {
        dims: cfg.dims.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        alpha: cfg.alpha.clone(),
        theta_ratio: Summary::of(per_trial.iter().map(|t| t.theta)),
        linear_ratio: Summary::of(per_trial.iter().map(|t| t.linear)),
        vartheta_ratio: cfg
            .vartheta
            .then(|| Summary::of(per_trial.iter().filter_map(|t| t.vartheta))),
    };
    Ok(MonteCarloResult { stats, per_trial })
}

/// Per-trial ratios as CSV.
pub fn trials_csv(per_trial: &[TrialRatios]) -> String {
    let mut out = String::from("trial,theta_ratio,linear_ratio,vartheta_ratio\n");
    for (i, t) in per_trial.iter().enumerate() {
        let v = t.vartheta.map(format_f64).unwrap_or_default();
        out.push_str(&format!(
            "{i},{},{},{v}\n",
            format_f64(t.theta),
            format_f64(t.linear)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TanhToyReport {
    pub linear: f64,
    pub theta: f64,
    pub vartheta: f64,
    pub naive: f64,
    pub empirical_ratio: f64,
}

pub const TANH_TOY_POINT: [f64; 2] = [-3.4, 2.0];

pub fn tanh_toy_direction() -> [f64; 2] {
    [1e-4, 1e-4 * 3f64.sqrt()]
}

/// `(W_1, W_2, U)` of the two-layer tanh example.
pub fn tanh_toy_matrices() -> (Matrix, Matrix, Matrix) {
    let w1 = Matrix::from_rows(&[[1.0, 3.0], [3.0, 3.0]]).expect("static");
    let w2 = Matrix::from_rows(&[[10.0, 2.0], [7.0, 4.0]]).expect("static");
    let h = 3f64.sqrt() / 2.0;
    let u = Matrix::from_rows(&[[h, 0.5], [0.5, -h]]).expect("static");
    (w1, w2, u)
}

/// The example in both forms: `W_2 ∘ (U tanh U) ∘ W_1`, and the equivalent
/// separable network with weights `U W_1` and `W_2 U`.
pub fn tanh_toy_networks() -> Result<(Network, Network)> {
    let (w1, w2, u) = tanh_toy_matrices();
    let tanh = VectorActivation::separable(builtin("tanh", &[])?, 2)?;
    let original = Network::new(
        2,
        vec![
            Layer::unbiased(
                w1.clone(),
                VectorActivation::conjugated(u.clone(), tanh.clone())?,
            )?,
            Layer::unbiased(w2.clone(), VectorActivation::identity(2))?,
        ],
    )?;
    let transformed = Network::new(
        2,
        vec![
            Layer::unbiased(matmul(&u, &w1)?, tanh)?,
            Layer::unbiased(matmul(&w2, &u)?, VectorActivation::identity(2))?,
        ],
    )?;
    Ok((original, transformed))
}

pub fn run_tanh_toy() -> Result<TanhToyReport> {
    let (original, transformed) = tanh_toy_networks()?;
    let table = NormTable::new(&transformed);
    let l2 = NormSpec::euclidean();
    Ok(TanhToyReport {
        linear: table.linear(),
        theta: theta_recursive_from(&table, &transformed.hidden_alphas()),
        vartheta: vartheta_exhaustive(&transformed, (&l2, &l2), 4)?.value,
        naive: table.product(),
        empirical_ratio: difference_ratio(&original, &TANH_TOY_POINT, &tanh_toy_direction())?,
    })
}
