//! Activation operators, their averagedness constants, and numerical checks.
//!
//! An operator `R` is α-averaged when `R = (1 − α) Id + α Q` for some
//! nonexpansive `Q`. On the real line this is equivalent to every difference
//! quotient of `R` lying in `[1 − 2α, 1]`, which is what the sampling checks
//! below test. Scalar activations that are (relaxed) proximity operators also
//! carry their potential `φ`, so that `R = Id + λ (prox_φ − Id)` can be
//! verified pointwise.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use crate::error::{LipError, Result};
use crate::linalg::{Matrix, NormSpec};
use crate::rng;

/// Slack applied to every difference-quotient comparison.
pub const QUOTIENT_TOL: f64 = 1e-9;

/// Maximum gap accepted by [`verify_prox_representation`].
pub const PROX_GAP_TOL: f64 = 1e-6;

/// Perturbation scales (relative to `max(1, |x|)`) used when sampling pairs.
const PAIR_SCALES: [f64; 4] = [1e-6, 1e-3, 1.0, 10.0];

/// `8 / (3√3)`, the largest Geman–McClure gain for which the operator is
/// nonexpansive.
pub fn geman_mcclure_mu() -> f64 {
    8.0 / (3.0 * 3.0f64.sqrt())
}

/// `(1 + √(2/e)) / 2`.
pub fn gaussian_alpha() -> f64 {
    (1.0 + (2.0 / std::f64::consts::E).sqrt()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarKind {
    Relu,
    CappedRelu {
        beta: f64,
    },
    /// `Id + λ (relu − Id)`; λ = 1 is ReLU and λ = 2 is the absolute value.
    LeakyRelu {
        lambda: f64,
    },
    Abs,
    Elu {
        beta: f64,
    },
    /// `ln((1 + eˣ) / 2)`.
    Softplus,
    Tanh,
    Sine,
    MirroredRelu,
    Swish,
    Elish,
    Gaussian,
    GemanMcClure {
        mu: f64,
    },
    Identity,
}

/// Names accepted by [`builtin`].
pub const CATALOG: [&str; 14] = [
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

/// A scalar activation with its declared averagedness constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarActivation {
    kind: ScalarKind,
    alpha: f64,
}

impl ScalarActivation {
    pub fn new(kind: ScalarKind) -> Result<Self> {
        validate_kind(&kind)?;
        Ok(ScalarActivation {
            alpha: kind.catalog_alpha(),
            kind,
        })
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Replaces the declared constant (e.g. a user override).
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            ScalarKind::CappedRelu { beta } | ScalarKind::Elu { beta } => vec![("beta", beta)],
            ScalarKind::LeakyRelu { lambda } => vec![("lambda", lambda)],
            ScalarKind::GemanMcClure { mu } => vec![("mu", mu)],
            _ => Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }

    /// Whether the activation is itself a proximity operator, i.e. it is
    /// nonexpansive and increasing.
    pub fn prox_representable(&self) -> bool {
        match self.kind {
            ScalarKind::Relu
            | ScalarKind::CappedRelu { .. }
            | ScalarKind::Elu { .. }
            | ScalarKind::Softplus
            | ScalarKind::Tanh
            | ScalarKind::GemanMcClure { .. }
            | ScalarKind::Identity => true,
            ScalarKind::LeakyRelu { lambda } => lambda <= 1.0,
            ScalarKind::Abs
            | ScalarKind::Sine
            | ScalarKind::MirroredRelu
            | ScalarKind::Swish
            | ScalarKind::Elish
            | ScalarKind::Gaussian => false,
        }
    }

    /// The potential `φ` and relaxation `λ` with `R = Id + λ (prox_φ − Id)`,
    /// when known in closed form.
    pub fn potential(&self) -> Option<Potential> {
        let (kind, relaxation) = match self.kind {
            ScalarKind::Relu => (
                PotentialKind::Indicator {
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
                1.0,
            ),
            ScalarKind::CappedRelu { beta } => {
                (PotentialKind::Indicator { lo: 0.0, hi: beta }, 1.0)
            }
            ScalarKind::LeakyRelu { lambda } => (
                PotentialKind::Indicator {
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
                lambda,
            ),
            ScalarKind::Abs => (
                PotentialKind::Indicator {
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
                2.0,
            ),
            ScalarKind::Elu { beta } => (PotentialKind::Elu { beta }, 1.0),
            ScalarKind::Tanh => (PotentialKind::Tanh, 1.0),
            ScalarKind::GemanMcClure { mu } => (PotentialKind::GemanMcClure { mu }, 1.0),
            ScalarKind::Identity => (PotentialKind::Zero, 1.0),
            _ => return None,
        };
        Some(Potential { kind, relaxation })
    }

    /// `name` or `name(key=value,...)`, the lipnet spelling.
    pub fn spec_string(&self) -> String {
        let params = self.params();
        if params.is_empty() {
            self.name().to_string()
        } else {
            let ps: Vec<String> = params
                .iter()
                .map(|(k, v)| format!("{k}={}", crate::network::format_f64(*v)))
                .collect();
            format!("{}({})", self.name(), ps.join(","))
        }
    }
}

impl fmt::Display for ScalarActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

impl ScalarKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScalarKind::Relu => "relu",
            ScalarKind::CappedRelu { .. } => "capped_relu",
            ScalarKind::LeakyRelu { .. } => "leaky_relu",
            ScalarKind::Abs => "abs",
            ScalarKind::Elu { .. } => "elu",
            ScalarKind::Softplus => "softplus",
            ScalarKind::Tanh => "tanh",
            ScalarKind::Sine => "sine",
            ScalarKind::MirroredRelu => "mirrored_relu",
            ScalarKind::Swish => "swish",
            ScalarKind::Elish => "elish",
            ScalarKind::Gaussian => "gaussian",
            ScalarKind::GemanMcClure { .. } => "geman_mcclure",
            ScalarKind::Identity => "identity",
        }
    }

    pub fn catalog_alpha(&self) -> f64 {
        match self {
            ScalarKind::Relu
            | ScalarKind::CappedRelu { .. }
            | ScalarKind::Elu { .. }
            | ScalarKind::Softplus
            | ScalarKind::Tanh
            | ScalarKind::GemanMcClure { .. } => 0.5,
            ScalarKind::LeakyRelu { lambda } => lambda / 2.0,
            ScalarKind::Abs | ScalarKind::Sine | ScalarKind::MirroredRelu => 1.0,
            ScalarKind::Swish => 0.546,
            ScalarKind::Elish => 0.536,
            ScalarKind::Gaussian => gaussian_alpha(),
            ScalarKind::Identity => 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarKind::Relu => x.max(0.0),
            ScalarKind::CappedRelu { beta } => x.max(0.0).min(beta),
            ScalarKind::LeakyRelu { lambda } => {
                if x >= 0.0 {
                    x
                } else {
                    (1.0 - lambda) * x
                }
            }
            ScalarKind::Abs => x.abs(),
            ScalarKind::Elu { beta } => {
                if x >= 0.0 {
                    x
                } else {
                    beta * x.exp_m1()
                }
            }
            ScalarKind::Softplus => {
                if x > 0.0 {
                    x + ((-x).exp_m1() / 2.0).ln_1p()
                } else {
                    (x.exp_m1() / 2.0).ln_1p()
                }
            }
            ScalarKind::Tanh => x.tanh(),
            ScalarKind::Sine => x.sin(),
            ScalarKind::MirroredRelu => x.abs().min(1.0),
            ScalarKind::Swish => 10.0 * x / (11.0 * (1.0 + (-x).exp())),
            ScalarKind::Elish => {
                let s = 1.0 + (-x).exp();
                if x >= 0.0 {
                    10.0 / 11.0 * x / s
                } else {
                    10.0 / 11.0 * x.exp_m1() / s
                }
            }
            ScalarKind::Gaussian => (-x * x).exp(),
            ScalarKind::GemanMcClure { mu } => mu * x.signum() * x * x / (1.0 + x * x),
            ScalarKind::Identity => x,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LipError::InvalidInput(format!(
            "averagedness constant must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn validate_kind(kind: &ScalarKind) -> Result<()> {
    let bad = |what: &str| Err(LipError::InvalidInput(what.to_string()));
    match *kind {
        ScalarKind::CappedRelu { beta } if !(beta.is_finite() && beta > 0.0) => {
            bad("capped_relu needs beta > 0")
        }
        ScalarKind::Elu { beta } if !(beta > 0.0 && beta <= 1.0) => {
            bad("elu is averaged only for beta in (0, 1]")
        }
        ScalarKind::LeakyRelu { lambda } if !(0.0..=2.0).contains(&lambda) => {
            bad("leaky_relu needs lambda in [0, 2]")
        }
        ScalarKind::GemanMcClure { mu }
            if !(mu > 0.0 && mu <= geman_mcclure_mu() * (1.0 + 1e-15)) =>
        {
            bad("geman_mcclure needs mu in (0, 8/(3*sqrt(3))]")
        }
        _ => Ok(()),
    }
}

/// Builds a catalog activation. Unknown parameters are rejected; missing
/// ones take their defaults (`beta = 1`, `lambda = 0.99`, `mu = 8/(3√3)`).
pub fn builtin(name: &str, params: &[(String, f64)]) -> Result<ScalarActivation> {
    let allowed: &[&str] = match name {
        "capped_relu" | "elu" => &["beta"],
        "leaky_relu" => &["lambda"],
        "geman_mcclure" => &["mu"],
        n if CATALOG.contains(&n) => &[],
        other => return Err(LipError::UnknownActivation(other.to_string())),
    };
    for (k, _) in params {
        if !allowed.contains(&k.as_str()) {
            return Err(LipError::InvalidInput(format!(
                "activation `{name}` has no parameter `{k}`"
            )));
        }
    }
    let get = |key: &str, default: f64| {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .unwrap_or(default)
    };
    let kind = match name {
        "relu" => ScalarKind::Relu,
        "capped_relu" => ScalarKind::CappedRelu {
            beta: get("beta", 1.0),
        },
        "leaky_relu" => ScalarKind::LeakyRelu {
            lambda: get("lambda", 0.99),
        },
        "abs" => ScalarKind::Abs,
        "elu" => ScalarKind::Elu {
            beta: get("beta", 1.0),
        },
        "softplus" => ScalarKind::Softplus,
        "tanh" => ScalarKind::Tanh,
        "sine" => ScalarKind::Sine,
        "mirrored_relu" => ScalarKind::MirroredRelu,
        "swish" => ScalarKind::Swish,
        "elish" => ScalarKind::Elish,
        "gaussian" => ScalarKind::Gaussian,
        "geman_mcclure" => ScalarKind::GemanMcClure {
            mu: get("mu", geman_mcclure_mu()),
        },
        "identity" => ScalarKind::Identity,
        _ => unreachable!("checked above"),
    };
    ScalarActivation::new(kind)
}

/// Every catalog entry with default parameters.
pub fn catalog() -> Vec<ScalarActivation> {
    CATALOG
        .iter()
        .map(|n| builtin(n, &[]).expect("catalog defaults are valid"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Zero,
    /// Indicator of `[lo, hi]`.
    Indicator {
        lo: f64,
        hi: f64,
    },
    Elu {
        beta: f64,
    },
    GemanMcClure {
        mu: f64,
    },
    Tanh,
}

/// A convex potential `φ` together with the relaxation `λ` of
/// `R = Id + λ (prox_φ − Id)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub relaxation: f64,
}

impl Potential {
    /// Closed effective domain `[lo, hi]`.
    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            PotentialKind::Zero => (f64::NEG_INFINITY, f64::INFINITY),
            PotentialKind::Indicator { lo, hi } => (lo, hi),
            PotentialKind::Elu { beta } => (-beta, f64::INFINITY),
            PotentialKind::GemanMcClure { mu } => (-mu, mu),
            PotentialKind::Tanh => (-1.0, 1.0),
        }
    }

    /// `φ(u)`, possibly `+∞`.
    pub fn value(&self, u: f64) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Indicator { lo, hi } => {
                if (lo..=hi).contains(&u) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            PotentialKind::Elu { beta } => {
                if u >= 0.0 {
                    0.0
                } else if u > -beta {
                    (u + beta) * (u / beta).ln_1p() - u - u * u / 2.0
                } else if u == -beta {
                    beta - beta * beta / 2.0
                } else {
                    f64::INFINITY
                }
            }
            PotentialKind::GemanMcClure { mu } => {
                let a = u.abs();
                if a < mu {
                    mu * (a / (mu - a)).sqrt().atan() - (a * (mu - a)).sqrt() - u * u / 2.0
                } else if a == mu {
                    mu * (PI - mu) / 2.0
                } else {
                    f64::INFINITY
                }
            }
            PotentialKind::Tanh => {
                let a = u.abs();
                if a < 1.0 {
                    ((1.0 + u) * u.ln_1p() + (1.0 - u) * (-u).ln_1p() - u * u) / 2.0
                } else if a == 1.0 {
                    LN_2 - 0.5
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn prox(&self, x: f64) -> Result<f64> {
        prox_of_potential(|u| self.value(u), self.domain(), x)
    }

    /// `x + λ (prox_φ(x) − x)`.
    pub fn relaxed_prox(&self, x: f64) -> Result<f64> {
        Ok(x + self.relaxation * (self.prox(x)? - x))
    }
}

const PROX_TOL: f64 = 1e-10;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// `argmin_u φ(u) + (x − u)² / 2` by golden-section search on a bracket
/// inside the closed domain `[lo, hi]` of `φ`.
///
/// `φ` must be proper, lower semicontinuous and convex on its domain; this is
/// trusted, not checked.
pub fn prox_of_potential<F>(phi: F, domain: (f64, f64), x: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = domain;
    if lo.is_nan() || hi.is_nan() || lo > hi || x.is_nan() {
        return Err(LipError::InvalidInput("bad prox domain or argument".into()));
    }
    let center = x.clamp(lo, hi);
    let mut width = x.abs().max(1.0);
    for _ in 0..64 {
        let a = (center - width).max(lo);
        let b = (center + width).min(hi);
        let u = golden_section(&phi, x, a, b)?;
        let stuck_left = a > lo && u - a <= 1e-6 * width;
        let stuck_right = b < hi && b - u <= 1e-6 * width;
        if !(stuck_left || stuck_right) {
            return Ok(u);
        }
        width *= 4.0;
    }
    Err(LipError::Internal(format!(
        "prox bracket did not close around x = {x}"
    )))
}

/// Sign of `f(a) − f(b)` for `f(u) = φ(u) + (x − u)²/2`, with the quadratic
/// part differenced analytically.
fn objective_less(phi_a: f64, phi_b: f64, a: f64, b: f64, x: f64) -> bool {
    match (phi_a.is_infinite(), phi_b.is_infinite()) {
        (true, true) => a.abs() < b.abs(),
        (true, false) => false,
        (false, true) => true,
        (false, false) => phi_a - phi_b + (b - a) * (2.0 * x - a - b) / 2.0 < 0.0,
    }
}

fn golden_section<F: Fn(f64) -> f64>(phi: &F, x: f64, mut a: f64, mut b: f64) -> Result<f64> {
    let eval = |u: f64| -> Result<f64> {
        let v = phi(u);
        if v.is_nan() {
            Err(LipError::InvalidInput(format!("potential is NaN at {u}")))
        } else {
            Ok(v)
        }
    };
    if a == b {
        return Ok(a);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let tol = PROX_TOL * x.abs().max(1.0);
    for _ in 0..400 {
        if b - a <= tol {
            break;
        }
        if objective_less(fc, fd, c, d, x) {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let mut best = 0.5 * (a + b);
    let mut f_best = eval(best)?;
    // Boundary minimizers (indicator potentials) are returned exactly.
    for end in [a, b] {
        let fe = eval(end)?;
        if objective_less(fe, f_best, end, best, x) {
            best = end;
            f_best = fe;
        }
    }
    Ok(best)
}

/// Where and how densely to sample difference quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub lo: f64,
    pub hi: f64,
    pub pairs: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(lo: f64, hi: f64, pairs: usize, seed: u64) -> Self {
        SamplingPlan {
            lo,
            hi,
            pairs,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.pairs < 2 {
            return Err(LipError::InvalidInput(
                "degenerate sampling grid: need a nonempty interval and at least 2 points".into(),
            ));
        }
        Ok(())
    }

    /// `pairs` evenly spaced points covering `[lo, hi]`.
    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.pairs;
        (0..n).map(move |i| self.lo + (self.hi - self.lo) * (i as f64) / ((n - 1) as f64))
    }
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan::new(-20.0, 20.0, 10_000, 0)
    }
}

/// Extremal difference quotients of `f` over the sampled pairs.
fn quotient_range<F: Fn(f64) -> f64>(f: F, plan: &SamplingPlan) -> Result<(f64, f64)> {
    plan.check()?;
    let mut rng = rng::substream(plan.seed, 0);
    let mut q_min = f64::INFINITY;
    let mut q_max = f64::NEG_INFINITY;
    let mut push = |x: f64, y: f64| {
        let h = y - x;
        if h != 0.0 {
            let q = (f(y) - f(x)) / h;
            q_min = q_min.min(q);
            q_max = q_max.max(q);
        }
    };
    for i in 0..plan.pairs {
        let x = rng::uniform(&mut rng, plan.lo, plan.hi);
        let scale = PAIR_SCALES[i % PAIR_SCALES.len()] * x.abs().max(1.0);
        let y = x + scale * rng::uniform(&mut rng, -1.0, 1.0);
        push(x, y);
    }
    // Neighbouring grid points catch features narrower than the random spread.
    let pts: Vec<f64> = plan.points().collect();
    for w in pts.windows(2) {
        push(w[0], w[1]);
    }
    Ok((q_min, q_max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragednessReport {
    pub pass: bool,
    pub alpha: f64,
    pub worst_quotient_low: f64,
    pub worst_quotient_high: f64,
    pub seed: u64,
}

/// Checks that every sampled difference quotient lies in
/// `[1 − 2α − tol, 1 + tol]`.
pub fn certify_averagedness(
    act: &ScalarActivation,
    alpha: f64,
    plan: &SamplingPlan,
) -> Result<AveragednessReport> {
    check_alpha(alpha)?;
    let (lo, hi) = quotient_range(|x| act.eval(x), plan)?;
    Ok(AveragednessReport {
        pass: lo >= 1.0 - 2.0 * alpha - QUOTIENT_TOL && hi <= 1.0 + QUOTIENT_TOL,
        alpha,
        worst_quotient_low: lo,
        worst_quotient_high: hi,
        seed: plan.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaEstimate {
    Averaged(f64),
    NotNonexpansive { max_quotient: f64 },
}

/// Smallest α consistent with the sampled quotients, `max(0, (1 − q_min)/2)`.
pub fn estimate_averagedness(act: &ScalarActivation, plan: &SamplingPlan) -> Result<AlphaEstimate> {
    let (lo, hi) = quotient_range(|x| act.eval(x), plan)?;
    if hi > 1.0 + QUOTIENT_TOL {
        return Ok(AlphaEstimate::NotNonexpansive { max_quotient: hi });
    }
    Ok(AlphaEstimate::Averaged(((1.0 - lo) / 2.0).max(0.0)))
}

/// Nonexpansive and increasing on the sample, i.e. representable as a prox.
pub fn check_prox_representable(act: &ScalarActivation, plan: &SamplingPlan) -> Result<bool> {
    let (lo, hi) = quotient_range(|x| act.eval(x), plan)?;
    Ok(lo >= -QUOTIENT_TOL && hi <= 1.0 + QUOTIENT_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxReport {
    pub pass: bool,
    pub max_abs_gap: f64,
    pub worst_x: f64,
}

/// Compares the activation with `x + λ (prox_φ(x) − x)` on an even grid.
pub fn verify_prox_representation(
    act: &ScalarActivation,
    plan: &SamplingPlan,
) -> Result<ProxReport> {
    let pot = act.potential().ok_or_else(|| {
        LipError::NotApplicable(format!(
            "activation `{}` has no known potential",
            act.name()
        ))
    })?;
    plan.check()?;
    let mut gap = 0.0;
    let mut worst_x = plan.lo;
    for x in plan.points() {
        let g = (act.eval(x) - pot.relaxed_prox(x)?).abs();
        if g > gap {
            gap = g;
            worst_x = x;
        }
    }
    Ok(ProxReport {
        pass: gap <= PROX_GAP_TOL,
        max_abs_gap: gap,
        worst_x,
    })
}

/// Convex set used by the sort/projection mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionSet {
    /// `{x : x_1 = ⋯ = x_N}`; the projection is the coordinate mean.
    Mean,
    /// `[0, 1]^N`.
    Box,
}

impl ProjectionSet {
    pub fn name(&self) -> &'static str {
        match self {
            ProjectionSet::Mean => "mean",
            ProjectionSet::Box => "box",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorKind {
    /// One scalar activation per coordinate.
    Separable(Vec<ScalarActivation>),
    /// `ω sort↑(x) + (1 − ω) proj_C(x)`.
    SortMix { omega: f64, set: ProjectionSet },
    /// First `N − 1` entries of `sort↑(τ₁x₁, …, τ_{N−1}x_{N−1}, θ)`.
    Median { tau: Vec<f64>, offset: f64 },
    /// `μ ‖x‖ x / (1 + ‖x‖²)`.
    Squashing { mu: f64 },
    /// `B ∘ R ∘ Bᵀ` for an orthogonal change of basis `B`.
    Conjugated {
        basis: Matrix,
        inner: Box<VectorActivation>,
    },
}

/// A layer activation operator on ℝᴺ.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorActivation {
    dimension: usize,
    alpha: f64,
    kind: VectorKind,
}

impl VectorActivation {
    /// `act` applied to each of `dimension` coordinates.
    pub fn separable(act: ScalarActivation, dimension: usize) -> Result<Self> {
        Self::separable_list(vec![act; dimension])
    }

    pub fn separable_list(components: Vec<ScalarActivation>) -> Result<Self> {
        if components.is_empty() {
            return Err(LipError::InvalidInput(
                "activation needs a positive dimension".into(),
            ));
        }
        let alpha = components.iter().map(|c| c.alpha()).fold(0.0, f64::max);
        Ok(VectorActivation {
            dimension: components.len(),
            alpha,
            kind: VectorKind::Separable(components),
        })
    }

    pub fn identity(dimension: usize) -> Self {
        Self::separable(
            ScalarActivation::new(ScalarKind::Identity).unwrap(),
            dimension,
        )
        .expect("positive dimension")
    }

    pub fn sort_mix(omega: f64, set: ProjectionSet, dimension: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(LipError::InvalidInput(format!(
                "omega must lie in [0, 1], got {omega}"
            )));
        }
        if dimension == 0 {
            return Err(LipError::InvalidInput(
                "activation needs a positive dimension".into(),
            ));
        }
        Ok(VectorActivation {
            dimension,
            alpha: (1.0 + omega) / 2.0,
            kind: VectorKind::SortMix { omega, set },
        })
    }

    pub fn median(tau: Vec<f64>, offset: f64) -> Result<Self> {
        if tau.is_empty() {
            return Err(LipError::InvalidInput(
                "median needs at least one tau".into(),
            ));
        }
        if tau.iter().any(|t| t.is_nan() || t.abs() >= 1.0) || !offset.is_finite() {
            return Err(LipError::InvalidInput(
                "median needs every tau in (-1, 1) and a finite offset".into(),
            ));
        }
        let max_tau = tau.iter().map(|t| t.abs()).fold(0.0, f64::max);
        Ok(VectorActivation {
            dimension: tau.len(),
            alpha: (1.0 + max_tau) / 2.0,
            kind: VectorKind::Median { tau, offset },
        })
    }

    pub fn squashing(mu: f64, dimension: usize) -> Result<Self> {
        if !(mu > 0.0 && mu <= geman_mcclure_mu() * (1.0 + 1e-15)) {
            return Err(LipError::InvalidInput(
                "squashing needs mu in (0, 8/(3*sqrt(3))]".into(),
            ));
        }
        if dimension == 0 {
            return Err(LipError::InvalidInput(
                "activation needs a positive dimension".into(),
            ));
        }
        Ok(VectorActivation {
            dimension,
            alpha: 0.5,
            kind: VectorKind::Squashing { mu },
        })
    }

    /// `basis ∘ inner ∘ basisᵀ`; `basis` must be orthogonal.
    pub fn conjugated(basis: Matrix, inner: VectorActivation) -> Result<Self> {
        let n = inner.dimension;
        if basis.rows() != n || basis.cols() != n {
            return Err(LipError::Shape(format!(
                "basis must be {n}x{n}, got {}x{}",
                basis.rows(),
                basis.cols()
            )));
        }
        let gram = crate::linalg::matmul(&basis.transpose(), &basis)?;
        let off = gram
            .as_slice()
            .iter()
            .zip(Matrix::identity(n).as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if off > 1e-12 {
            return Err(LipError::InvalidInput(format!(
                "basis is not orthogonal (max |BᵀB − I| = {off:e})"
            )));
        }
        Ok(VectorActivation {
            dimension: n,
            alpha: inner.alpha,
            kind: VectorKind::Conjugated {
                basis,
                inner: Box::new(inner),
            },
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> &VectorKind {
        &self.kind
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.kind, VectorKind::Separable(_))
    }

    /// Scalar components when separable.
    pub fn components(&self) -> Option<&[ScalarActivation]> {
        match &self.kind {
            VectorKind::Separable(c) => Some(c),
            _ => None,
        }
    }

    /// Overrides the declared averagedness constant.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    /// The constant implied by the kind and its parameters.
    pub fn catalog_alpha(&self) -> f64 {
        match &self.kind {
            VectorKind::Separable(c) => c.iter().map(|a| a.alpha()).fold(0.0, f64::max),
            VectorKind::SortMix { omega, .. } => (1.0 + omega) / 2.0,
            VectorKind::Median { tau, .. } => {
                (1.0 + tau.iter().map(|t| t.abs()).fold(0.0, f64::max)) / 2.0
            }
            VectorKind::Squashing { .. } => 0.5,
            VectorKind::Conjugated { inner, .. } => inner.alpha,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(LipError::Shape(format!(
                "activation of dimension {} applied to a vector of length {}",
                self.dimension,
                x.len()
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            VectorKind::Separable(c) => x.iter().zip(c).map(|(v, a)| a.eval(*v)).collect(),
            VectorKind::SortMix { omega, set } => {
                let mut sorted = x.to_vec();
                sorted.sort_by(f64::total_cmp);
                match set {
                    ProjectionSet::Mean => {
                        let mean = x.iter().sum::<f64>() / x.len() as f64;
                        sorted
                            .iter()
                            .map(|s| omega * s + (1.0 - omega) * mean)
                            .collect()
                    }
                    ProjectionSet::Box => sorted
                        .iter()
                        .zip(x)
                        .map(|(s, v)| omega * s + (1.0 - omega) * v.clamp(0.0, 1.0))
                        .collect(),
                }
            }
            VectorKind::Median { tau, offset } => {
                let mut v: Vec<f64> = x.iter().zip(tau).map(|(a, t)| a * t).collect();
                v.push(*offset);
                v.sort_by(f64::total_cmp);
                v.truncate(x.len());
                v
            }
            VectorKind::Squashing { mu } => {
                let n2: f64 = x.iter().map(|v| v * v).sum();
                let s = mu * n2.sqrt() / (1.0 + n2);
                x.iter().map(|v| s * v).collect()
            }
            VectorKind::Conjugated { basis, inner } => {
                let y = basis.transpose().matvec(x).expect("square basis");
                let r = inner.eval_unchecked(&y);
                basis.matvec(&r).expect("square basis")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorAveragednessReport {
    pub pass: bool,
    pub alpha: f64,
    /// Largest `‖Q x − Q y‖ / ‖x − y‖` seen, where `Q = Id + (R − Id)/α`.
    pub worst_ratio: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Samples pairs and checks that `Q = Id + (R − Id)/α` is nonexpansive.
pub fn certify_vector_averagedness(
    act: &VectorActivation,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<VectorAveragednessReport> {
    check_alpha(alpha)?;
    if trials == 0 {
        return Err(LipError::InvalidInput("need at least one trial".into()));
    }
    let n = act.dimension();
    let l2 = NormSpec::euclidean();
    let mut rng = rng::substream(seed, 1);
    let scales = [1e-3, 1.0, 10.0];
    let offsets = [1e-4, 1e-2, 1.0];
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let s = scales[t % scales.len()];
        let x: Vec<f64> = rng::normal_vec(&mut rng, n).iter().map(|v| s * v).collect();
        let d_scale = offsets[(t / scales.len()) % offsets.len()] * s.max(1.0);
        let y: Vec<f64> = x
            .iter()
            .map(|v| v + d_scale * rng::normal(&mut rng))
            .collect();
        let rx = act.eval_unchecked(&x);
        let ry = act.eval_unchecked(&y);
        let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let denom = l2.norm(&dxy);
        if denom == 0.0 {
            continue;
        }
        let ratio = if alpha == 0.0 {
            let moved = rx
                .iter()
                .zip(&x)
                .chain(ry.iter().zip(&y))
                .any(|(r, v)| r != v);
            if moved {
                return Err(LipError::InvalidInput(
                    "alpha = 0 only describes the identity operator".into(),
                ));
            }
            1.0
        } else {
            let dq: Vec<f64> = (0..n)
                .map(|k| (x[k] + (rx[k] - x[k]) / alpha) - (y[k] + (ry[k] - y[k]) / alpha))
                .collect();
            l2.norm(&dq) / denom
        };
        worst = worst.max(ratio);
    }
    Ok(VectorAveragednessReport {
        pass: worst <= 1.0 + QUOTIENT_TOL,
        alpha,
        worst_ratio: worst,
        trials,
        seed,
    })
}
