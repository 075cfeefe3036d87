#![allow(dead_code)]

use lipcert::activations::{builtin, ProjectionSet, ScalarActivation, VectorActivation};
use lipcert::rng::{self, SampleRng};
use lipcert::{Layer, Matrix, Network};

pub fn gen(seed: u64, stream: u64) -> SampleRng {
    rng::substream(seed, stream)
}

pub fn int(r: &mut SampleRng, lo: usize, hi: usize) -> usize {
    let v = rng::uniform(r, lo as f64, (hi + 1) as f64).floor() as usize;
    v.min(hi)
}

pub fn normal_matrix(r: &mut SampleRng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, rng::normal_vec(r, rows * cols)).unwrap()
}

pub fn dims(r: &mut SampleRng, m_max: usize, n_max: usize) -> Vec<usize> {
    let m = int(r, 1, m_max);
    (0..=m).map(|_| int(r, 1, n_max)).collect()
}

/// Random weights, ReLU hidden layers carrying the given alphas, identity output.
pub fn net_with_alphas(weights: Vec<Matrix>, alphas: &[f64]) -> Network {
    let relu = builtin("relu", &[]).unwrap();
    let id = builtin("identity", &[]).unwrap();
    let mut net = Network::from_weights(weights, relu, id).unwrap();
    for (i, &a) in alphas.iter().enumerate() {
        net = net.with_layer_alpha(i, a).unwrap();
    }
    net
}

/// Gaussian weights with uniformly random hidden alphas.
pub fn random_alpha_net(r: &mut SampleRng, m_max: usize, n_max: usize) -> Network {
    let d = dims(r, m_max, n_max);
    let weights = d.windows(2).map(|w| normal_matrix(r, w[1], w[0])).collect();
    let alphas: Vec<f64> = (0..d.len() - 2)
        .map(|_| rng::uniform(r, 0.0, 1.0))
        .collect();
    net_with_alphas(weights, &alphas)
}

pub fn hidden_bits(net: &Network) -> usize {
    let d = net.dims();
    d[1..d.len() - 1].iter().sum()
}

const SCALARS: [&str; 14] = [
    "relu",
    "capped_relu",
    "leaky_relu",
    "abs",
    "elu",
    "softplus",
    "tanh",
    "sine",
    "mirrored_relu",
    "swish",
    "elish",
    "gaussian",
    "geman_mcclure",
    "identity",
];

pub fn random_scalar(r: &mut SampleRng) -> ScalarActivation {
    builtin(SCALARS[int(r, 0, SCALARS.len() - 1)], &[]).unwrap()
}

/// Any catalog activation (separable or not) of width `n`, with its own α.
pub fn random_activation(r: &mut SampleRng, n: usize, separable_only: bool) -> VectorActivation {
    let choice = if separable_only { 0 } else { int(r, 0, 5) };
    match choice {
        1 => VectorActivation::sort_mix(rng::uniform(r, 0.0, 1.0), ProjectionSet::Mean, n).unwrap(),
        2 => VectorActivation::sort_mix(rng::uniform(r, 0.0, 1.0), ProjectionSet::Box, n).unwrap(),
        3 => {
            let tau = (0..n).map(|_| rng::uniform(r, -0.95, 0.95)).collect();
            VectorActivation::median(tau, rng::normal(r)).unwrap()
        }
        4 => VectorActivation::squashing(lipcert::activations::geman_mcclure_mu(), n).unwrap(),
        _ => {
            if int(r, 0, 1) == 0 {
                VectorActivation::separable(random_scalar(r), n).unwrap()
            } else {
                VectorActivation::separable_list((0..n).map(|_| random_scalar(r)).collect())
                    .unwrap()
            }
        }
    }
}

/// A network whose activations genuinely have the declared constants, with
/// random biases.
pub fn random_real_net(
    r: &mut SampleRng,
    m_max: usize,
    n_max: usize,
    separable_only: bool,
) -> Network {
    let d = dims(r, m_max, n_max);
    let layers = d
        .windows(2)
        .map(|w| {
            let weight = normal_matrix(r, w[1], w[0]);
            let bias = rng::normal_vec(r, w[1]);
            Layer::new(weight, bias, random_activation(r, w[1], separable_only)).unwrap()
        })
        .collect();
    Network::new(d[0], layers).unwrap()
}

/// Weights `w_{i,k,l} = χ_{i,k} χ_{i−1,l} |w|` with nonzero magnitudes.
pub fn sign_factorized_weights(r: &mut SampleRng, d: &[usize]) -> Vec<Matrix> {
    let chi0 = if rng::uniform(r, 0.0, 1.0) < 0.5 {
        1.0
    } else {
        -1.0
    };
    let mut prev: Vec<f64> = vec![chi0; d[0]];
    d.windows(2)
        .map(|w| {
            let chi: Vec<f64> = (0..w[1])
                .map(|_| {
                    if rng::uniform(r, 0.0, 1.0) < 0.5 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let data = (0..w[1] * w[0])
                .map(|idx| {
                    let (k, l) = (idx / w[0], idx % w[0]);
                    chi[k] * prev[l] * rng::uniform(r, 0.1, 2.0)
                })
                .collect();
            prev = chi;
            Matrix::new(w[1], w[0], data).unwrap()
        })
        .collect()
}

/// Nonzero entries with independent random signs.
pub fn random_sign_weights(r: &mut SampleRng, d: &[usize]) -> Vec<Matrix> {
    d.windows(2)
        .map(|w| {
            let data = (0..w[1] * w[0])
                .map(|_| {
                    let s = if rng::uniform(r, 0.0, 1.0) < 0.5 {
                        1.0
                    } else {
                        -1.0
                    };
                    s * rng::uniform(r, 0.1, 2.0)
                })
                .collect();
            Matrix::new(w[1], w[0], data).unwrap()
        })
        .collect()
}

/// The full positivity assumption: for every output index and every pair of
/// index paths ending there, the products of weights along the paths have
/// the same sign (or one vanishes). Exponential; tiny nets only.
pub fn condpos_oracle(weights: &[Matrix]) -> bool {
    let m = weights.len();
    let n_out = weights[m - 1].rows();
    for km in 0..n_out {
        let mut products = Vec::new();
        let mut stack = vec![(m, km, 1.0f64)];
        while let Some((layer, k, acc)) = stack.pop() {
            if layer == 0 {
                products.push(acc);
                continue;
            }
            let w = &weights[layer - 1];
            for l in 0..w.cols() {
                stack.push((layer - 1, l, acc * w.get(k, l)));
            }
        }
        for a in &products {
            for b in &products {
                if a * b < 0.0 {
                    return false;
                }
            }
        }
    }
    true
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
