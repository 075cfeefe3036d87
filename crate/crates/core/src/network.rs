//! Layered networks `T = T_m ∘ ⋯ ∘ T_1` with `T_i(x) = R_i(W_i x + b_i)`, and
//! the line-oriented `lipnet` text format.

use std::fmt::Write as _;

use crate::activations::{self, ProjectionSet, ScalarActivation, VectorActivation, VectorKind};
use crate::error::{LipError, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weight: Matrix,
    bias: Vec<f64>,
    activation: VectorActivation,
}

impl Layer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: VectorActivation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(LipError::Shape(format!(
                "bias has length {} but the weight has {} rows",
                bias.len(),
                weight.rows()
            )));
        }
        if activation.dimension() != weight.rows() {
            return Err(LipError::Shape(format!(
                "activation has dimension {} but the weight has {} rows",
                activation.dimension(),
                weight.rows()
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(LipError::InvalidInput("bias entries must be finite".into()));
        }
        Ok(Layer {
            weight,
            bias,
            activation,
        })
    }

    /// Zero bias.
    pub fn unbiased(weight: Matrix, activation: VectorActivation) -> Result<Self> {
        let n = weight.rows();
        Self::new(weight, vec![0.0; n], activation)
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> &VectorActivation {
        &self.activation
    }

    pub fn alpha(&self) -> f64 {
        self.activation.alpha()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(LipError::InvalidInput(
                "a network needs at least one layer".into(),
            ));
        }
        let mut prev = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.input_dim() != prev {
                return Err(LipError::Shape(format!(
                    "layer {} expects input of dimension {} but receives {}",
                    i + 1,
                    layer.input_dim(),
                    prev
                )));
            }
            prev = layer.output_dim();
        }
        Ok(Network { input_dim, layers })
    }

    /// Builds a network from weights alone: zero biases, `hidden` on every
    /// layer but the last, and `last` on the final layer.
    pub fn from_weights(
        weights: Vec<Matrix>,
        hidden: ScalarActivation,
        last: ScalarActivation,
    ) -> Result<Self> {
        let m = weights.len();
        let input_dim = weights.first().map(|w| w.cols()).unwrap_or(0);
        let layers = weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 1 == m { last } else { hidden };
                let n = w.rows();
                Layer::unbiased(w, VectorActivation::separable(act, n)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(input_dim, layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").output_dim()
    }

    /// Number of layers `m`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn weights(&self) -> Vec<&Matrix> {
        self.layers.iter().map(|l| &l.weight).collect()
    }

    /// `(N_0, N_1, …, N_m)`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(|l| l.output_dim()))
            .collect()
    }

    /// Averagedness constants of layers `1, …, m − 1`; the last layer's never
    /// enters a bound.
    pub fn hidden_alphas(&self) -> Vec<f64> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.alpha())
            .collect()
    }

    pub fn hidden_layers_separable(&self) -> bool {
        self.layers[..self.layers.len() - 1]
            .iter()
            .all(|l| l.activation.is_separable())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(LipError::Shape(format!(
                "input has length {} but the network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let mut y = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weight.matvec(&y)?;
            for (v, b) in z.iter_mut().zip(&layer.bias) {
                *v += b;
            }
            y = layer.activation.eval(&z)?;
        }
        Ok(y)
    }

    /// Copy with layer `i`'s averagedness constant replaced.
    pub fn with_layer_alpha(&self, i: usize, alpha: f64) -> Result<Self> {
        let mut out = self.clone();
        let layer = out
            .layers
            .get_mut(i)
            .ok_or_else(|| LipError::InvalidInput(format!("no layer {i}")))?;
        layer.activation = layer.activation.clone().with_alpha(alpha)?;
        Ok(out)
    }

    pub fn parse(document: &str) -> Result<Self> {
        parse(document)
    }

    pub fn serialize(&self) -> String {
        serialize(self)
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn format_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_f64(*v))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn serialize(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "lipnet 1");
    let _ = writeln!(out, "input_dim {}", net.input_dim);
    for layer in &net.layers {
        let w = &layer.weight;
        let _ = writeln!(out, "layer");
        let _ = writeln!(out, "  dims {} {}", w.rows(), w.cols());
        let _ = writeln!(out, "  weights");
        for r in 0..w.rows() {
            let _ = writeln!(out, "  {}", format_row(w.row(r)));
        }
        let _ = writeln!(out, "  bias {}", format_row(&layer.bias));
        let (act, basis) = match layer.activation.kind() {
            VectorKind::Conjugated { basis, inner } => (inner.as_ref(), Some(basis)),
            _ => (&layer.activation, None),
        };
        let _ = writeln!(out, "  activation {}", activation_spec(act));
        if let Some(b) = basis {
            let _ = writeln!(out, "  basis");
            for r in 0..b.rows() {
                let _ = writeln!(out, "  {}", format_row(b.row(r)));
            }
        }
        if layer.activation.alpha().to_bits() != layer.activation.catalog_alpha().to_bits() {
            let _ = writeln!(out, "  alpha {}", format_f64(layer.activation.alpha()));
        }
    }
    out
}

/// The `activation` line spelling of a (non-conjugated) layer activation.
pub fn activation_spec(act: &VectorActivation) -> String {
    match act.kind() {
        VectorKind::Separable(c) => {
            if c.iter().all(|a| a == &c[0]) {
                c[0].spec_string()
            } else {
                let parts: Vec<String> = c.iter().map(|a| a.spec_string()).collect();
                format!("separable:{}", parts.join(";"))
            }
        }
        VectorKind::SortMix { omega, set } => {
            format!("sort_mix(omega={},set={})", format_f64(*omega), set.name())
        }
        VectorKind::Median { tau, offset } => {
            format!(
                "median(tau=[{}],theta={})",
                format_row(tau),
                format_f64(*offset)
            )
        }
        VectorKind::Squashing { mu } => format!("squashing(mu={})", format_f64(*mu)),
        VectorKind::Conjugated { inner, .. } => activation_spec(inner),
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite decimal")),
    }
}

fn parse_csv(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

/// Splits on commas that are not inside brackets.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

type RawParams = Vec<(String, String)>;

/// `name` or `name(k=v, ...)` into the name and raw parameter strings.
fn split_call(spec: &str) -> std::result::Result<(&str, RawParams), String> {
    let spec = spec.trim();
    let Some(open) = spec.find('(') else {
        return Ok((spec, Vec::new()));
    };
    if !spec.ends_with(')') {
        return Err(format!("unbalanced parentheses in `{spec}`"));
    }
    let name = spec[..open].trim();
    let inner = spec[open + 1..spec.len() - 1].trim();
    let mut params = Vec::new();
    if !inner.is_empty() {
        for part in split_top_level(inner) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                format!("parameter `{}` is not of the form key=value", part.trim())
            })?;
            params.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok((name, params))
}

pub fn parse_scalar_spec(spec: &str) -> Result<ScalarActivation, String> {
    let (name, raw) = split_call(spec)?;
    let params = raw
        .into_iter()
        .map(|(k, v)| parse_f64(&v).map(|x| (k, x)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    activations::builtin(name, &params).map_err(|e| match e {
        LipError::UnknownActivation(n) => format!("unknown activation `{n}`"),
        other => other.to_string(),
    })
}

fn take_param<'a>(params: &'a [(String, String)], key: &str) -> Option<&'a str> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

fn reject_unknown(
    params: &[(String, String)],
    allowed: &[&str],
    name: &str,
) -> std::result::Result<(), String> {
    for (k, _) in params {
        if !allowed.contains(&k.as_str()) {
            return Err(format!("activation `{name}` has no parameter `{k}`"));
        }
    }
    Ok(())
}

/// Parses an `activation` spec for a layer of width `dim`.
pub fn parse_activation_spec(
    spec: &str,
    dim: usize,
) -> std::result::Result<VectorActivation, String> {
    let spec = spec.trim();
    if let Some(list) = spec.strip_prefix("separable:") {
        let comps = list
            .split(';')
            .map(parse_scalar_spec)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        return match comps.len() {
            1 => VectorActivation::separable(comps[0], dim),
            n if n == dim => VectorActivation::separable_list(comps),
            n => {
                return Err(format!(
                    "separable activation lists {n} components for a layer of width {dim}"
                ))
            }
        }
        .map_err(|e| e.to_string());
    }
    let (name, params) = split_call(spec)?;
    let act = match name {
        "sort_mix" => {
            reject_unknown(&params, &["omega", "set"], name)?;
            let omega = parse_f64(take_param(&params, "omega").unwrap_or("1"))?;
            let set = match take_param(&params, "set").unwrap_or("mean") {
                "mean" => ProjectionSet::Mean,
                "box" => ProjectionSet::Box,
                other => {
                    return Err(format!(
                        "unknown projection set `{other}` (expected mean or box)"
                    ))
                }
            };
            VectorActivation::sort_mix(omega, set, dim)
        }
        "median" => {
            reject_unknown(&params, &["tau", "theta"], name)?;
            let tau_raw = take_param(&params, "tau").ok_or("median needs tau=[...]")?;
            let tau_inner = tau_raw
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or("tau must be a bracketed list")?;
            let tau = parse_csv(tau_inner)?;
            if tau.len() != dim {
                return Err(format!(
                    "median lists {} taus for a layer of width {dim}",
                    tau.len()
                ));
            }
            let offset = parse_f64(take_param(&params, "theta").unwrap_or("0"))?;
            VectorActivation::median(tau, offset)
        }
        "squashing" => {
            reject_unknown(&params, &["mu"], name)?;
            let mu = match take_param(&params, "mu") {
                Some(v) => parse_f64(v)?,
                None => activations::geman_mcclure_mu(),
            };
            VectorActivation::squashing(mu, dim)
        }
        _ => {
            return VectorActivation::separable(parse_scalar_spec(spec)?, dim)
                .map_err(|e| e.to_string())
        }
    };
    act.map_err(|e| e.to_string())
}

#[derive(Default)]
struct LayerDraft {
    line: usize,
    dims: Option<(usize, usize)>,
    weights: Vec<Vec<f64>>,
    bias: Option<Vec<f64>>,
    activation: Option<(usize, String)>,
    basis: Vec<Vec<f64>>,
    alpha: Option<(usize, f64)>,
}

enum Pending {
    None,
    Weights(usize),
    Basis(usize),
}

pub fn parse(document: &str) -> Result<Network> {
    let mut header = false;
    let mut input_dim: Option<usize> = None;
    let mut drafts: Vec<LayerDraft> = Vec::new();
    let mut pending = Pending::None;
    let mut last_line = 0;

    for (idx, raw) in document.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| LipError::parse(line_no, msg);

        match pending {
            Pending::Weights(left) | Pending::Basis(left) if left > 0 => {
                let draft = drafts.last_mut().expect("rows follow a layer");
                let (expected, target) = match pending {
                    Pending::Weights(_) => (draft.dims.unwrap().1, &mut draft.weights),
                    _ => (draft.dims.unwrap().0, &mut draft.basis),
                };
                let row = parse_csv(line).map_err(err)?;
                if row.len() != expected {
                    return Err(LipError::parse(
                        line_no,
                        format!("row has {} entries, expected {expected}", row.len()),
                    ));
                }
                target.push(row);
                pending = match pending {
                    Pending::Weights(l) => Pending::Weights(l - 1),
                    Pending::Basis(l) => Pending::Basis(l - 1),
                    Pending::None => Pending::None,
                };
                continue;
            }
            _ => pending = Pending::None,
        }

        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };

        if !header {
            if keyword == "lipnet" && rest == "1" {
                header = true;
                continue;
            }
            return Err(err("document must start with `lipnet 1`".into()));
        }

        match keyword {
            "input_dim" => {
                if input_dim.is_some() || !drafts.is_empty() {
                    return Err(err(
                        "`input_dim` must appear once, before the first layer".into()
                    ));
                }
                let n: usize = rest
                    .parse()
                    .map_err(|_| err(format!("`{rest}` is not a dimension")))?;
                if n == 0 {
                    return Err(err("input_dim must be positive".into()));
                }
                input_dim = Some(n);
            }
            "layer" => {
                if !rest.is_empty() {
                    return Err(err("`layer` takes no arguments".into()));
                }
                drafts.push(LayerDraft {
                    line: line_no,
                    ..Default::default()
                });
            }
            "dims" | "weights" | "bias" | "activation" | "alpha" | "basis" => {
                let draft = drafts
                    .last_mut()
                    .ok_or_else(|| err(format!("`{keyword}` outside of a layer block")))?;
                match keyword {
                    "dims" => {
                        if draft.dims.is_some() {
                            return Err(err("duplicate `dims`".into()));
                        }
                        let nums: Vec<&str> = rest.split_whitespace().collect();
                        let parsed: Option<Vec<usize>> =
                            nums.iter().map(|s| s.parse().ok()).collect();
                        match parsed.as_deref() {
                            Some([r, c]) if *r > 0 && *c > 0 => draft.dims = Some((*r, *c)),
                            _ => return Err(err("`dims` needs two positive integers".into())),
                        }
                    }
                    "weights" | "basis" => {
                        let Some((rows, _)) = draft.dims else {
                            return Err(err(format!("`{keyword}` before `dims`")));
                        };
                        let already = if keyword == "weights" {
                            !draft.weights.is_empty()
                        } else {
                            !draft.basis.is_empty()
                        };
                        if already || !rest.is_empty() {
                            return Err(err(format!(
                                "`{keyword}` must appear once, with its rows on the following lines"
                            )));
                        }
                        pending = if keyword == "weights" {
                            Pending::Weights(rows)
                        } else {
                            Pending::Basis(rows)
                        };
                    }
                    "bias" => {
                        if draft.bias.is_some() {
                            return Err(err("duplicate `bias`".into()));
                        }
                        draft.bias = Some(parse_csv(rest).map_err(err)?);
                    }
                    "activation" => {
                        if draft.activation.is_some() {
                            return Err(err("duplicate `activation`".into()));
                        }
                        if rest.is_empty() {
                            return Err(err("`activation` needs a specification".into()));
                        }
                        draft.activation = Some((line_no, rest.to_string()));
                    }
                    _ => {
                        if draft.alpha.is_some() {
                            return Err(err("duplicate `alpha`".into()));
                        }
                        let a = parse_f64(rest).map_err(err)?;
                        if !(0.0..=1.0).contains(&a) {
                            return Err(err(format!("alpha must lie in [0, 1], got {a}")));
                        }
                        draft.alpha = Some((line_no, a));
                    }
                }
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }

    if let Pending::Weights(left) | Pending::Basis(left) = pending {
        if left > 0 {
            return Err(LipError::parse(
                last_line,
                "document ends inside a matrix block",
            ));
        }
    }
    if !header {
        return Err(LipError::parse(
            last_line.max(1),
            "document must start with `lipnet 1`",
        ));
    }
    let input_dim = input_dim.ok_or_else(|| LipError::parse(last_line, "missing `input_dim`"))?;
    if drafts.is_empty() {
        return Err(LipError::parse(
            last_line,
            "a network needs at least one layer",
        ));
    }

    let mut layers = Vec::with_capacity(drafts.len());
    let mut prev = input_dim;
    for (i, d) in drafts.into_iter().enumerate() {
        let here = |msg: String| LipError::parse(d.line, format!("layer {}: {msg}", i + 1));
        let (rows, cols) = d.dims.ok_or_else(|| here("missing `dims`".into()))?;
        if cols != prev {
            return Err(here(format!(
                "dimension chain mismatch: layer takes {cols} inputs but the previous output has {prev}"
            )));
        }
        if d.weights.len() != rows {
            return Err(here("missing `weights`".into()));
        }
        let weight = Matrix::from_rows(&d.weights).map_err(|e| here(e.to_string()))?;
        let bias = d.bias.unwrap_or_else(|| vec![0.0; rows]);
        if bias.len() != rows {
            return Err(here(format!(
                "bias has {} entries, expected {rows}",
                bias.len()
            )));
        }
        let (act_line, spec) = d
            .activation
            .ok_or_else(|| here("missing `activation`".into()))?;
        let mut act =
            parse_activation_spec(&spec, rows).map_err(|m| LipError::parse(act_line, m))?;
        if !d.basis.is_empty() {
            let basis = Matrix::from_rows(&d.basis).map_err(|e| here(e.to_string()))?;
            act = VectorActivation::conjugated(basis, act).map_err(|e| here(e.to_string()))?;
        }
        if let Some((line, a)) = d.alpha {
            act = act
                .with_alpha(a)
                .map_err(|e| LipError::parse(line, e.to_string()))?;
        }
        layers.push(Layer::new(weight, bias, act).map_err(|e| here(e.to_string()))?);
        prev = rows;
    }
    Network::new(input_dim, layers)
}
