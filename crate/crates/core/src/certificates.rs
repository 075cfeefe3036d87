//! Lipschitz bounds for [`Network`]s and the orchestrating [`certify`].
//!
//! With `m` layers and hidden averagedness constants `α_1, …, α_{m−1}`:
//!
//! * `product_bound` is `‖W_m‖⋯‖W_1‖`;
//! * `linear_lower` is `‖W_m⋯W_1‖`, a lower bound on every certificate;
//! * `θ_m = Σ_J β_J σ_J`, where `β_J` is the probability of the cut set `J`
//!   under independent Bernoulli(α_j) cuts and `σ_J` multiplies the norms of
//!   the segments between cuts;
//! * `ϑ_m = max ‖W_m Λ_{m−1} ⋯ Λ_1 W_1‖` over diagonal `Λ_i` with entries in
//!   `{1 − 2α_i, 1}`, valid when the hidden activations are separable.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LipError, Result};
use crate::linalg::{
    absolute_matrix, induced_norm, induced_norm_unchecked, is_supported_pair, matmul_scaled,
    matmul_unchecked, spectral_norm_unchecked, Matrix, NormSpec,
};
use crate::network::Network;
use crate::rng;

/// Default cap on the number of terms of the combinatorial θ sum.
pub const DEFAULT_THETA_BUDGET: u64 = 1 << 20;
/// Default cap on the number of diagonal patterns enumerated for ϑ.
pub const DEFAULT_VARTHETA_BUDGET: u64 = 1 << 24;
/// θ is cross-checked against the combinatorial sum up to this many terms.
const THETA_CROSS_CHECK_TERMS: u64 = 1 << 16;
/// Relative slack of the ordering assertions in [`certify`].
pub const ORDER_TOL: f64 = 1e-8;
const MAX_ASCENT_SWEEPS: usize = 64;

/// A strictly increasing tuple of cut positions in `{1, …, m − 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetIndex(Vec<usize>);

impl SubsetIndex {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LipError::InvalidInput(
                "subset indices must be strictly increasing".into(),
            ));
        }
        if indices.iter().any(|&j| j == 0 || j >= m) {
            return Err(LipError::InvalidInput(format!(
                "subset indices must lie in 1..={}",
                m.saturating_sub(1)
            )));
        }
        Ok(SubsetIndex(indices))
    }

    pub fn empty() -> Self {
        SubsetIndex(Vec::new())
    }

    /// `{1, …, m − 1}`.
    pub fn full(m: usize) -> Self {
        SubsetIndex((1..m).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Subset of `{1, …, m − 1}` whose bit `j − 1` is set in `mask`.
    fn from_mask(mask: u64, m: usize) -> Self {
        SubsetIndex((1..m).filter(|j| mask >> (j - 1) & 1 == 1).collect())
    }
}

/// Norms of every contiguous product `W_b ⋯ W_a`.
#[derive(Debug, Clone)]
pub struct NormTable {
    m: usize,
    /// `seg[a][b - a]` is `‖W_b ⋯ W_a‖` (0-based layers).
    seg: Vec<Vec<f64>>,
}

impl NormTable {
    pub fn new(net: &Network) -> Self {
        Self::from_weights(&net.weights())
    }

    pub fn from_weights(weights: &[&Matrix]) -> Self {
        let m = weights.len();
        let seg = (0..m)
            .map(|a| {
                let mut prod = weights[a].clone();
                let mut row = vec![spectral_norm_unchecked(&prod)];
                for w in &weights[a + 1..] {
                    prod = matmul_unchecked(w, &prod);
                    row.push(spectral_norm_unchecked(&prod));
                }
                row
            })
            .collect();
        NormTable { m, seg }
    }

    pub fn depth(&self) -> usize {
        self.m
    }

    /// `‖W_b ⋯ W_a‖` for 0-based `a ≤ b`.
    pub fn segment(&self, a: usize, b: usize) -> f64 {
        self.seg[a][b - a]
    }

    pub fn linear(&self) -> f64 {
        self.segment(0, self.m - 1)
    }

    pub fn product(&self) -> f64 {
        (0..self.m).map(|i| self.segment(i, i)).product()
    }
}

/// `β_J = ∏_{j∈J} α_j ∏_{j∉J} (1 − α_j)`; `alphas` holds `α_1, …, α_{m−1}`.
pub fn beta(alphas: &[f64], subset: &SubsetIndex) -> Result<f64> {
    let m = alphas.len() + 1;
    if subset.0.iter().any(|&j| j == 0 || j >= m) {
        return Err(LipError::InvalidInput(format!(
            "subset index out of range 1..={}",
            m - 1
        )));
    }
    let mut it = subset.0.iter().peekable();
    let mut b = 1.0;
    for (j, a) in (1..m).zip(alphas) {
        if it.peek() == Some(&&j) {
            it.next();
            b *= a;
        } else {
            b *= 1.0 - a;
        }
    }
    Ok(b)
}

/// `σ_J`: product of the norms of the segments between consecutive cuts.
pub fn sigma(table: &NormTable, subset: &SubsetIndex) -> f64 {
    let mut start = 0;
    let mut s = 1.0;
    for &j in &subset.0 {
        s *= table.segment(start, j - 1);
        start = j;
    }
    s * table.segment(start, table.m - 1)
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(LipError::InvalidInput(
            "averagedness constants must lie in [0, 1]".into(),
        ));
    }
    Ok(())
}

/// The full sum `Σ_J β_J σ_J`, skipping branches annihilated by `α ∈ {0, 1}`.
pub fn theta_combinatorial(net: &Network) -> Result<f64> {
    theta_combinatorial_with_budget(net, DEFAULT_THETA_BUDGET)
}

pub fn theta_combinatorial_with_budget(net: &Network, budget: u64) -> Result<f64> {
    theta_combinatorial_from(&NormTable::new(net), &net.hidden_alphas(), budget)
}

pub fn theta_combinatorial_from(table: &NormTable, alphas: &[f64], budget: u64) -> Result<f64> {
    check_alphas(alphas)?;
    let forced: Vec<usize> = (1..table.m).filter(|&j| alphas[j - 1] == 1.0).collect();
    let free: Vec<usize> = (1..table.m)
        .filter(|&j| alphas[j - 1] > 0.0 && alphas[j - 1] < 1.0)
        .collect();
    let terms = 1u128 << free.len().min(127);
    if terms > budget as u128 {
        return Err(LipError::Budget {
            required: terms,
            budget: budget as u128,
            hint: "use the recursive form of theta instead",
        });
    }
    let mut sum = 0.0;
    for mask in 0..(terms as u64) {
        let mut cuts: Vec<usize> = forced.clone();
        let mut b = 1.0;
        for (bit, &j) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                cuts.push(j);
                b *= alphas[j - 1];
            } else {
                b *= 1.0 - alphas[j - 1];
            }
        }
        cuts.sort_unstable();
        sum += b * sigma(table, &SubsetIndex(cuts));
    }
    Ok(sum)
}

/// `θ_0 = α_0 = 1`, `θ_n = Σ_{i<n} α_i θ_i ∏_{i<q<n} (1 − α_q) ‖W_n ⋯ W_{i+1}‖`.
pub fn theta_recursive(net: &Network) -> f64 {
    theta_recursive_from(&NormTable::new(net), &net.hidden_alphas())
}

pub fn theta_recursive_from(table: &NormTable, alphas: &[f64]) -> f64 {
    let m = table.m;
    let alpha = |i: usize| if i == 0 { 1.0 } else { alphas[i - 1] };
    let mut theta = vec![1.0; m + 1];
    for n in 1..=m {
        let mut acc = 0.0;
        let mut keep = 1.0;
        for i in (0..n).rev() {
            acc += alpha(i) * theta[i] * keep * table.segment(i, n - 1);
            keep *= 1.0 - alpha(i);
        }
        theta[n] = acc;
    }
    theta[m]
}

/// `2^{1−m} Σ_J σ_J`, valid only when every hidden α equals 1/2.
pub fn theta_firm(net: &Network) -> Result<f64> {
    let alphas = net.hidden_alphas();
    if alphas.iter().any(|&a| a != 0.5) {
        return Err(LipError::NotApplicable(
            "the firmly nonexpansive form needs every hidden alpha equal to 1/2".into(),
        ));
    }
    let m = net.depth();
    let terms = 1u64 << (m - 1).min(63);
    if m > 63 || terms > DEFAULT_THETA_BUDGET {
        return Err(LipError::Budget {
            required: 1u128 << (m - 1).min(127),
            budget: DEFAULT_THETA_BUDGET as u128,
            hint: "use the recursive form of theta instead",
        });
    }
    let table = NormTable::new(net);
    let sum: f64 = (0..terms)
        .map(|mask| sigma(&table, &SubsetIndex::from_mask(mask, m)))
        .sum();
    Ok(sum / terms as f64)
}

/// One Λ_i per hidden layer; `true` selects scale 1, `false` scale `1 − 2α_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalPattern {
    pub layers: Vec<Vec<bool>>,
}

impl DiagonalPattern {
    /// All scales 1, i.e. `Λ_i = I`.
    pub fn ones(net: &Network) -> Self {
        let dims = net.dims();
        DiagonalPattern {
            layers: dims[1..dims.len() - 1]
                .iter()
                .map(|&n| vec![true; n])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarthetaResult {
    pub value: f64,
    pub exact: bool,
    pub patterns: u64,
    pub argmax: DiagonalPattern,
}

fn both_euclidean(norms: (&NormSpec, &NormSpec)) -> bool {
    norms.0.is_euclidean() && norms.1.is_euclidean()
}

fn check_norms(net: &Network, norms: (&NormSpec, &NormSpec)) -> Result<()> {
    norms.0.check_dim(net.input_dim())?;
    norms.1.check_dim(net.output_dim())?;
    if !is_supported_pair(norms.0, norms.1) {
        return Err(LipError::UnsupportedNorm(format!(
            "no exact induced norm from {} to {}",
            norms.0, norms.1
        )));
    }
    Ok(())
}

/// Preconditions shared by ϑ and the bounds derived from it.
fn check_pattern_bounds(net: &Network, norms: (&NormSpec, &NormSpec)) -> Result<()> {
    check_norms(net, norms)?;
    let layers = net.layers();
    for (i, l) in layers[..layers.len() - 1].iter().enumerate() {
        if !l.activation().is_separable() {
            return Err(LipError::NotApplicable(format!(
                "non-separable activation in hidden layer {}",
                i + 1
            )));
        }
    }
    if !both_euclidean(norms) && !layers[layers.len() - 1].activation().is_separable() {
        return Err(LipError::NotApplicable(
            "non-separable activation in the final layer; weighted norms need it separable".into(),
        ));
    }
    Ok(())
}

fn operator_norm(a: &Matrix, norms: (&NormSpec, &NormSpec)) -> f64 {
    if both_euclidean(norms) {
        spectral_norm_unchecked(a)
    } else {
        induced_norm_unchecked(a, norms.0, norms.1)
    }
}

/// Enumeration state shared by all workers.
struct PatternSpace<'a> {
    weights: Vec<&'a Matrix>,
    norms: (&'a NormSpec, &'a NormSpec),
    /// Per hidden layer: `(low scale, bits, shift)`; `bits = 0` when α = 0.
    layers: Vec<(f64, u32, u32)>,
    total: u64,
}

impl<'a> PatternSpace<'a> {
    fn new(net: &'a Network, norms: (&'a NormSpec, &'a NormSpec), budget: u64) -> Result<Self> {
        let weights = net.weights();
        let hidden = net.hidden_alphas();
        let dims = net.dims();
        let mut bits_total: u32 = 0;
        let mut layers: Vec<(f64, u32, u32)> = hidden
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let bits = if a > 0.0 { dims[i + 1] as u32 } else { 0 };
                bits_total = bits_total.saturating_add(bits);
                (1.0 - 2.0 * a, bits, 0)
            })
            .collect();
        let required = if bits_total >= 127 {
            u128::MAX
        } else {
            1u128 << bits_total
        };
        if required > budget as u128 {
            return Err(LipError::Budget {
                required,
                budget: budget as u128,
                hint: "fall back to theta or raise the budget",
            });
        }
        // Layer 1 is the most significant digit.
        let mut shift = 0;
        for l in layers.iter_mut().rev() {
            l.2 = shift;
            shift += l.1;
        }
        Ok(PatternSpace {
            weights,
            norms,
            layers,
            total: required as u64,
        })
    }

    fn digit(&self, layer: usize, p: u64) -> u64 {
        let (_, bits, shift) = self.layers[layer];
        if bits == 0 {
            u64::MAX
        } else {
            (p >> shift) & ((1u64 << bits) - 1)
        }
    }

    fn scales(&self, layer: usize, digit: u64, out: &mut Vec<f64>) {
        let (lo, bits, _) = self.layers[layer];
        out.clear();
        if bits == 0 {
            out.resize(self.weights[layer].rows(), 1.0);
        } else {
            out.extend((0..bits).map(|k| {
                if digit >> (bits - 1 - k) & 1 == 1 {
                    1.0
                } else {
                    lo
                }
            }));
        }
    }

    fn pattern(&self, p: u64) -> DiagonalPattern {
        let mut s = Vec::new();
        DiagonalPattern {
            layers: (0..self.layers.len())
                .map(|i| {
                    self.scales(i, self.digit(i, p), &mut s);
                    let (_, bits, _) = self.layers[i];
                    if bits == 0 {
                        vec![true; s.len()]
                    } else {
                        s.iter().map(|&v| v == 1.0).collect()
                    }
                })
                .collect(),
        }
    }

    /// Best `(value, index)` over patterns `start..end`, ties to the lower index.
    fn scan(&self, start: u64, end: u64) -> (f64, u64) {
        let h = self.layers.len();
        if h == 0 {
            return (operator_norm(self.weights[0], self.norms), 0);
        }
        // prefix[i] = W_i Λ_{i−1} ⋯ Λ_1 W_1 (0-based: prefix[0] = W_0).
        let mut prefix: Vec<Matrix> = Vec::with_capacity(h);
        prefix.push(self.weights[0].clone());
        let mut digits = vec![u64::MAX; h];
        let mut scales = Vec::new();
        let mut best = (f64::NEG_INFINITY, start);
        for p in start..end {
            let first_changed = if p == start {
                0
            } else {
                (0..h)
                    .find(|&i| self.digit(i, p) != digits[i])
                    .unwrap_or(h - 1)
            };
            for (i, d) in digits.iter_mut().enumerate().skip(first_changed) {
                *d = self.digit(i, p);
            }
            prefix.truncate(first_changed + 1);
            for i in first_changed..h - 1 {
                self.scales(i, digits[i], &mut scales);
                let next = matmul_scaled(self.weights[i + 1], &scales, &prefix[i]);
                prefix.push(next);
            }
            self.scales(h - 1, digits[h - 1], &mut scales);
            let full = matmul_scaled(self.weights[h], &scales, &prefix[h - 1]);
            let v = operator_norm(&full, self.norms);
            if v > best.0 {
                best = (v, p);
            }
        }
        best
    }
}

fn merge(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Exact ϑ_m by enumerating every endpoint pattern, split across rayon
/// workers.
pub fn vartheta_exhaustive(
    net: &Network,
    norms: (&NormSpec, &NormSpec),
    budget: u64,
) -> Result<VarthetaResult> {
    let parts = rayon::current_num_threads().saturating_mul(4).max(1);
    vartheta_exhaustive_partitioned(net, norms, budget, parts)
}

/// As [`vartheta_exhaustive`] with the pattern range cut into `parts`
/// contiguous pieces. The value does not depend on `parts`.
pub fn vartheta_exhaustive_partitioned(
    net: &Network,
    norms: (&NormSpec, &NormSpec),
    budget: u64,
    parts: usize,
) -> Result<VarthetaResult> {
    check_pattern_bounds(net, norms)?;
    let space = PatternSpace::new(net, norms, budget)?;
    let total = space.total;
    let parts = (parts.max(1) as u64).min(total);
    let ranges: Vec<(u64, u64)> = (0..parts)
        .map(|k| (total * k / parts, total * (k + 1) / parts))
        .collect();
    let (value, idx) = ranges
        .par_iter()
        .map(|&(s, e)| space.scan(s, e))
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), merge);
    Ok(VarthetaResult {
        value,
        exact: true,
        patterns: total,
        argmax: space.pattern(idx),
    })
}

/// Value of a single pattern, `‖W_m Λ_{m−1} ⋯ Λ_1 W_1‖`.
pub fn pattern_value(
    net: &Network,
    norms: (&NormSpec, &NormSpec),
    pattern: &DiagonalPattern,
) -> Result<f64> {
    check_pattern_bounds(net, norms)?;
    let dims = net.dims();
    if pattern.layers.len() != dims.len() - 2
        || pattern
            .layers
            .iter()
            .zip(&dims[1..])
            .any(|(l, &n)| l.len() != n)
    {
        return Err(LipError::Shape(
            "pattern does not match the hidden dimensions".into(),
        ));
    }
    let alphas = net.hidden_alphas();
    Ok(eval_pattern(
        &net.weights(),
        &alphas,
        norms,
        &pattern.layers,
    ))
}

fn eval_pattern(
    weights: &[&Matrix],
    alphas: &[f64],
    norms: (&NormSpec, &NormSpec),
    bits: &[Vec<bool>],
) -> f64 {
    let mut prod = weights[0].clone();
    for (i, layer_bits) in bits.iter().enumerate() {
        let lo = 1.0 - 2.0 * alphas[i];
        let s: Vec<f64> = layer_bits
            .iter()
            .map(|&b| if b { 1.0 } else { lo })
            .collect();
        prod = matmul_scaled(weights[i + 1], &s, &prod);
    }
    operator_norm(&prod, norms)
}

/// A lower bound on ϑ_m from random patterns refined by single-bit ascent.
/// The all-ones pattern is always the first start, so the value is at least
/// `linear_lower`.
pub fn vartheta_sample_lower(
    net: &Network,
    norms: (&NormSpec, &NormSpec),
    trials: usize,
    seed: u64,
) -> Result<VarthetaResult> {
    check_pattern_bounds(net, norms)?;
    let weights = net.weights();
    let alphas = net.hidden_alphas();
    let free: Vec<(usize, usize)> = DiagonalPattern::ones(net)
        .layers
        .iter()
        .enumerate()
        .filter(|(i, _)| alphas[*i] > 0.0)
        .flat_map(|(i, l)| (0..l.len()).map(move |k| (i, k)))
        .collect();
    let run = |t: usize| -> (f64, DiagonalPattern) {
        let mut pat = DiagonalPattern::ones(net);
        if t > 0 {
            let mut r = rng::substream(seed, t as u64);
            for &(i, k) in &free {
                pat.layers[i][k] = rng::uniform(&mut r, 0.0, 1.0) < 0.5;
            }
        }
        let mut v = eval_pattern(&weights, &alphas, norms, &pat.layers);
        for _ in 0..MAX_ASCENT_SWEEPS {
            let mut improved = false;
            for &(i, k) in &free {
                pat.layers[i][k] = !pat.layers[i][k];
                let w = eval_pattern(&weights, &alphas, norms, &pat.layers);
                if w > v {
                    v = w;
                    improved = true;
                } else {
                    pat.layers[i][k] = !pat.layers[i][k];
                }
            }
            if !improved {
                break;
            }
        }
        (v, pat)
    };
    let results: Vec<(f64, DiagonalPattern)> =
        (0..trials.max(1)).into_par_iter().map(run).collect();
    let (value, argmax) = results
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one trial");
    Ok(VarthetaResult {
        value,
        exact: false,
        patterns: trials.max(1) as u64,
        argmax,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityResult {
    pub holds: bool,
    /// `χ_0, …, χ_m` with `χ_0` constant, when the condition holds.
    pub sign_vectors: Option<Vec<Vec<i8>>>,
}

/// Union-find over sign variables with the parity to the parent.
struct ParityUnionFind {
    parent: Vec<usize>,
    parity: Vec<u8>,
}

impl ParityUnionFind {
    fn new(n: usize) -> Self {
        ParityUnionFind {
            parent: (0..n).collect(),
            parity: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, u8) {
        let p = self.parent[x];
        if p == x {
            return (x, 0);
        }
        let (root, par) = self.find(p);
        self.parent[x] = root;
        self.parity[x] ^= par;
        (root, self.parity[x])
    }

    /// Imposes `value(a) · value(b) = (−1)^odd`; false on contradiction.
    fn union(&mut self, a: usize, b: usize, odd: u8) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return pa ^ pb == odd;
        }
        self.parent[ra] = rb;
        self.parity[ra] = pa ^ pb ^ odd;
        true
    }
}

/// Looks for sign vectors `χ_i` (χ_0 constant) with
/// `sign(w_{i,k,l}) = χ_{i,k} χ_{i−1,l}` for every nonzero weight.
pub fn positivity_check(net: &Network) -> PositivityResult {
    let dims = net.dims();
    // Node 0 stands for the whole (constant) χ_0.
    let mut offsets = vec![0usize; dims.len()];
    let mut next = 1;
    for (i, &n) in dims.iter().enumerate().skip(1) {
        offsets[i] = next;
        next += n;
    }
    let node = |level: usize, k: usize| if level == 0 { 0 } else { offsets[level] + k };
    let mut uf = ParityUnionFind::new(next);
    for (li, w) in net.weights().iter().enumerate() {
        let level = li + 1;
        for k in 0..w.rows() {
            for (l, &v) in w.row(k).iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                if !uf.union(node(level, k), node(level - 1, l), (v < 0.0) as u8) {
                    return PositivityResult {
                        holds: false,
                        sign_vectors: None,
                    };
                }
            }
        }
    }
    let sign = |uf: &mut ParityUnionFind, x: usize| if uf.find(x).1 == 0 { 1i8 } else { -1 };
    let chi = (0..dims.len())
        .map(|level| {
            let n = if level == 0 { dims[0] } else { dims[level] };
            (0..n).map(|k| sign(&mut uf, node(level, k))).collect()
        })
        .collect();
    PositivityResult {
        holds: true,
        sign_vectors: Some(chi),
    }
}

/// `‖W_m ⋯ W_1‖`, which equals ϑ_m when [`positivity_check`] holds.
pub fn positive_collapse_bound(net: &Network, norms: (&NormSpec, &NormSpec)) -> Result<f64> {
    check_pattern_bounds(net, norms)?;
    if !positivity_check(net).holds {
        return Err(LipError::NotApplicable(
            "weights admit no consistent sign factorization".into(),
        ));
    }
    linear_bound(net, norms)
}

/// `‖|W_m| ⋯ |W_1|‖`, an upper bound on ϑ_m.
pub fn absolute_bound(net: &Network, norms: (&NormSpec, &NormSpec)) -> Result<f64> {
    check_pattern_bounds(net, norms)?;
    let mut prod = absolute_matrix(net.weights()[0]);
    for w in &net.weights()[1..] {
        prod = matmul_unchecked(&absolute_matrix(w), &prod);
    }
    induced_norm(&prod, norms.0, norms.1)
}

/// `‖W_m ⋯ W_1‖` in the requested norms.
pub fn linear_bound(net: &Network, norms: (&NormSpec, &NormSpec)) -> Result<f64> {
    check_norms(net, norms)?;
    let weights = net.weights();
    let mut prod = weights[0].clone();
    for w in &weights[1..] {
        prod = matmul_unchecked(w, &prod);
    }
    Ok(operator_norm(&prod, norms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBound {
    pub value: f64,
    /// Set when the weighted chain was unavailable and the spectral product
    /// was returned instead; such a value certifies nothing in the requested
    /// norms.
    pub spectral_fallback: bool,
}

/// `∏ ‖W_i‖`. With weighted norms the chain
/// `‖W_1‖_{G_0→ℓ2} ∏ ‖W_i‖ ‖W_m‖_{ℓ2→G_m}` is used when every factor has an
/// exact form and the final activation is separable.
pub fn product_bound(net: &Network, norms: (&NormSpec, &NormSpec)) -> Result<ProductBound> {
    check_norms(net, norms)?;
    let weights = net.weights();
    let spectral: f64 = weights.iter().map(|w| spectral_norm_unchecked(w)).product();
    if both_euclidean(norms) {
        return Ok(ProductBound {
            value: spectral,
            spectral_fallback: false,
        });
    }
    let l2 = NormSpec::euclidean();
    let m = weights.len();
    let last_separable = net.layers()[m - 1].activation().is_separable();
    let chain_ok = last_separable
        && if m == 1 {
            true
        } else {
            is_supported_pair(norms.0, &l2) && is_supported_pair(&l2, norms.1)
        };
    if !chain_ok {
        return Ok(ProductBound {
            value: spectral,
            spectral_fallback: true,
        });
    }
    let value = if m == 1 {
        induced_norm_unchecked(weights[0], norms.0, norms.1)
    } else {
        let first = induced_norm_unchecked(weights[0], norms.0, &l2);
        let last = induced_norm_unchecked(weights[m - 1], &l2, norms.1);
        let middle: f64 = weights[1..m - 1]
            .iter()
            .map(|w| spectral_norm_unchecked(w))
            .product();
        first * middle * last
    };
    Ok(ProductBound {
        value,
        spectral_fallback: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub norm_in: NormSpec,
    pub norm_out: NormSpec,
    pub vartheta_budget: u64,
    pub sample_trials: usize,
    pub seed: u64,
    /// Record `elapsed_ms`; off by default so reports are reproducible.
    pub timings: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            norm_in: NormSpec::euclidean(),
            norm_out: NormSpec::euclidean(),
            vartheta_budget: DEFAULT_VARTHETA_BUDGET,
            sample_trials: 64,
            seed: 0,
            timings: false,
        }
    }
}

/// Why an optional bound is absent; not part of the serialized report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub theta: Option<LipError>,
    pub vartheta: Option<LipError>,
    pub positive_collapse: Option<LipError>,
    pub absolute_bound: Option<LipError>,
    pub product_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub product_bound: f64,
    pub linear_lower: f64,
    pub theta: Option<f64>,
    pub vartheta: Option<f64>,
    pub vartheta_exact: bool,
    pub vartheta_sample_lower: Option<f64>,
    pub positive_collapse: Option<f64>,
    pub absolute_bound: Option<f64>,
    pub certified: f64,
    pub norm_in: String,
    pub norm_out: String,
    pub budget: u64,
    pub seed: u64,
    pub elapsed_ms: Option<f64>,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
}

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn le(a: f64, b: f64) -> bool {
    a <= b + ORDER_TOL * a.abs().max(b.abs())
}

fn ordering_error(what: &str, a: f64, b: f64) -> LipError {
    LipError::Internal(format!("{what}: {a} vs {b}"))
}

/// Soft errors become diagnostics; anything else aborts.
fn optional<T>(r: Result<T>) -> Result<(Option<T>, Option<LipError>)> {
    match r {
        Ok(v) => Ok((Some(v), None)),
        Err(e @ (LipError::NotApplicable(_) | LipError::Budget { .. })) => Ok((None, Some(e))),
        Err(e) => Err(e),
    }
}

/// Every applicable bound, the tightest valid certificate, and a consistency
/// check of their ordering.
pub fn certify(net: &Network, opts: &CertifyOptions) -> Result<CertificateReport> {
    let started = Instant::now();
    let norms = (&opts.norm_in, &opts.norm_out);
    check_norms(net, norms)?;
    let euclid = both_euclidean(norms);
    let mut diag = Diagnostics::default();

    let product = product_bound(net, norms)?;
    diag.product_fallback = product.spectral_fallback;
    let linear = linear_bound(net, norms)?;

    let theta = if euclid {
        let table = NormTable::new(net);
        let alphas = net.hidden_alphas();
        let t = theta_recursive_from(&table, &alphas);
        if let Ok(c) = theta_combinatorial_from(&table, &alphas, THETA_CROSS_CHECK_TERMS) {
            if (c - t).abs() > 1e-9 * c.abs().max(t.abs()) {
                return Err(ordering_error(
                    "recursive and combinatorial theta disagree",
                    t,
                    c,
                ));
            }
        }
        Some(t)
    } else {
        diag.theta = Some(LipError::NotApplicable(
            "theta is defined for Euclidean norms only".into(),
        ));
        None
    };

    let (exhaustive, why) = optional(vartheta_exhaustive(net, norms, opts.vartheta_budget))?;
    let mut sample = None;
    if exhaustive.is_none() {
        if let Some(LipError::Budget { .. }) = why {
            sample = Some(vartheta_sample_lower(net, norms, opts.sample_trials, opts.seed)?.value);
        }
        diag.vartheta = why;
    }
    let vartheta = exhaustive.map(|r| r.value);
    let (positive, why) = optional(positive_collapse_bound(net, norms))?;
    diag.positive_collapse = why;
    let (absolute, why) = optional(absolute_bound(net, norms))?;
    diag.absolute_bound = why;

    let mut certified = f64::INFINITY;
    let valid_product = (!product.spectral_fallback).then_some(product.value);
    for c in [valid_product, theta, vartheta, positive, absolute]
        .into_iter()
        .flatten()
    {
        certified = certified.min(c);
    }
    if !certified.is_finite() {
        return Err(LipError::NotApplicable(
            "no certificate is available for this network in the requested norms".into(),
        ));
    }

    // Ordering sanity: linear ≤ ϑ ≤ θ ≤ product, sample ≤ ϑ ≤ absolute.
    let upper_of_linear = [valid_product, theta, vartheta, positive, absolute, sample];
    for u in upper_of_linear.into_iter().flatten() {
        if !le(linear, u) {
            return Err(ordering_error(
                "linear bound exceeds a certificate",
                linear,
                u,
            ));
        }
    }
    if let (Some(t), Some(p)) = (theta, valid_product) {
        if !le(t, p) {
            return Err(ordering_error("theta exceeds the product bound", t, p));
        }
    }
    if let Some(v) = vartheta {
        for u in [theta, valid_product, absolute].into_iter().flatten() {
            if !le(v, u) {
                return Err(ordering_error("vartheta exceeds a coarser bound", v, u));
            }
        }
        if let Some(p) = positive {
            if !(le(v, p) && le(p, v)) {
                return Err(ordering_error(
                    "positive collapse differs from vartheta",
                    p,
                    v,
                ));
            }
        }
    }

    Ok(CertificateReport {
        product_bound: product.value,
        linear_lower: linear,
        theta,
        vartheta,
        vartheta_exact: vartheta.is_some(),
        vartheta_sample_lower: sample,
        positive_collapse: positive,
        absolute_bound: absolute,
        certified,
        norm_in: opts.norm_in.to_string(),
        norm_out: opts.norm_out.to_string(),
        budget: opts.vartheta_budget,
        seed: opts.seed,
        elapsed_ms: opts.timings.then(|| started.elapsed().as_secs_f64() * 1e3),
        diagnostics: diag,
    })
}

/// Which bound a caller insists on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Every applicable bound, certified = the tightest.
    Auto,
    Product,
    Theta,
    Vartheta,
    Positive,
    Absolute,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Product => "product",
            Method::Theta => "theta",
            Method::Vartheta => "vartheta",
            Method::Positive => "positive",
            Method::Absolute => "absolute",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = LipError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Method::Auto,
            "product" => Method::Product,
            "theta" => Method::Theta,
            "vartheta" => Method::Vartheta,
            "positive" => Method::Positive,
            "absolute" => Method::Absolute,
            other => return Err(LipError::InvalidInput(format!("unknown method `{other}`"))),
        })
    }
}

/// Computes only the requested bound (plus the cheap product and linear
/// values). Fails with `NotApplicable`/`Budget` when that bound is
/// unavailable instead of falling back.
pub fn certify_method(
    net: &Network,
    opts: &CertifyOptions,
    method: Method,
) -> Result<CertificateReport> {
    if method == Method::Auto {
        return certify(net, opts);
    }
    let started = Instant::now();
    let norms = (&opts.norm_in, &opts.norm_out);
    check_norms(net, norms)?;
    let product = product_bound(net, norms)?;
    let linear = linear_bound(net, norms)?;
    let mut report = CertificateReport {
        product_bound: product.value,
        linear_lower: linear,
        theta: None,
        vartheta: None,
        vartheta_exact: false,
        vartheta_sample_lower: None,
        positive_collapse: None,
        absolute_bound: None,
        certified: f64::NAN,
        norm_in: opts.norm_in.to_string(),
        norm_out: opts.norm_out.to_string(),
        budget: opts.vartheta_budget,
        seed: opts.seed,
        elapsed_ms: None,
        diagnostics: Diagnostics {
            product_fallback: product.spectral_fallback,
            ..Default::default()
        },
    };
    let value = match method {
        Method::Product => {
            if product.spectral_fallback {
                return Err(LipError::NotApplicable(
                    "the weighted product chain needs supported factor norms and a separable final activation".into(),
                ));
            }
            product.value
        }
        Method::Theta => {
            if !both_euclidean(norms) {
                return Err(LipError::NotApplicable(
                    "theta is defined for Euclidean norms only".into(),
                ));
            }
            let t = theta_recursive(net);
            report.theta = Some(t);
            t
        }
        Method::Vartheta => {
            let v = vartheta_exhaustive(net, norms, opts.vartheta_budget)?.value;
            report.vartheta = Some(v);
            report.vartheta_exact = true;
            v
        }
        Method::Positive => {
            let v = positive_collapse_bound(net, norms)?;
            report.positive_collapse = Some(v);
            v
        }
        Method::Absolute => {
            let v = absolute_bound(net, norms)?;
            report.absolute_bound = Some(v);
            v
        }
        Method::Auto => unreachable!(),
    };
    if !le(linear, value) {
        return Err(ordering_error(
            "linear bound exceeds the certificate",
            linear,
            value,
        ));
    }
    report.certified = value;
    report.elapsed_ms = opts.timings.then(|| started.elapsed().as_secs_f64() * 1e3);
    Ok(report)
}
