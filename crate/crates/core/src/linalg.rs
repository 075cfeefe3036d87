//! Dense real matrices and the operator norms used by the certificates.
//!
//! Only what the bounds need lives here: products, entrywise absolute values,
//! the spectral norm, and the induced norms between weighted ℓp spaces that
//! admit an exact closed form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LipError, Result};

/// Dense row-major matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LipError::Shape(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(LipError::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LipError::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row slices. All rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LipError::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Matrix::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.get(r, c);
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|v| *v >= 0.0)
    }

    /// `self · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(LipError::Shape(format!(
                "cannot apply a {}x{} matrix to a vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Multiplies row `r` by `scales[r]`.
    pub fn scale_rows(&self, scales: &[f64]) -> Matrix {
        debug_assert_eq!(scales.len(), self.rows);
        let mut out = self.clone();
        for (r, s) in scales.iter().enumerate() {
            for v in &mut out.data[r * self.cols..(r + 1) * self.cols] {
                *v *= s;
            }
        }
        out
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Dense product `a · b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(LipError::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(matmul_unchecked(a, b))
}

pub(crate) fn matmul_unchecked(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = vec![0.0; a.rows * b.cols];
    for i in 0..a.rows {
        let dst = &mut out[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (d, bkj) in dst.iter_mut().zip(b.row(k)) {
                *d += aik * bkj;
            }
        }
    }
    Matrix {
        rows: a.rows,
        cols: b.cols,
        data: out,
    }
}

/// `a · diag(scales) · b`, the building block of the pattern search.
pub(crate) fn matmul_scaled(a: &Matrix, scales: &[f64], b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols, scales.len());
    debug_assert_eq!(a.cols, b.rows);
    let mut out = vec![0.0; a.rows * b.cols];
    for i in 0..a.rows {
        let dst = &mut out[i * b.cols..(i + 1) * b.cols];
        for (k, (&aik, &s)) in a.row(i).iter().zip(scales).enumerate() {
            let f = aik * s;
            if f == 0.0 {
                continue;
            }
            for (d, bkj) in dst.iter_mut().zip(b.row(k)) {
                *d += f * bkj;
            }
        }
    }
    Matrix {
        rows: a.rows,
        cols: b.cols,
        data: out,
    }
}

/// Entrywise absolute value.
pub fn absolute_matrix(a: &Matrix) -> Matrix {
    Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().map(|v| v.abs()).collect(),
    }
}

/// Below this Gram size the full Jacobi eigensolver is used instead of power
/// iteration.
const DENSE_EIGEN_LIMIT: usize = 32;
const POWER_REL_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 10_000;

/// Largest singular value of `a`.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    if !a.all_finite() {
        return Err(LipError::InvalidInput(
            "spectral norm of a matrix with non-finite entries".into(),
        ));
    }
    Ok(spectral_norm_unchecked(a))
}

pub(crate) fn spectral_norm_unchecked(a: &Matrix) -> f64 {
    if a.rows == 1 || a.cols == 1 {
        return a.data.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let gram = smaller_gram(a);
    let lambda = if gram.rows < DENSE_EIGEN_LIMIT {
        jacobi_max_eigenvalue(gram)
    } else {
        power_max_eigenvalue(&gram)
    };
    lambda.max(0.0).sqrt()
}

/// `A Aᵀ` or `Aᵀ A`, whichever is smaller.
fn smaller_gram(a: &Matrix) -> Matrix {
    if a.rows <= a.cols {
        let n = a.rows;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = a.row(i).iter().zip(a.row(j)).map(|(x, y)| x * y).sum();
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data: g,
        }
    } else {
        let n = a.cols;
        let mut g = vec![0.0; n * n];
        for r in 0..a.rows {
            let row = a.row(r);
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..n {
                    g[i * n + j] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data: g,
        }
    }
}

/// Cyclic Jacobi sweeps on a symmetric matrix; returns the largest eigenvalue.
fn jacobi_max_eigenvalue(mut s: Matrix) -> f64 {
    let n = s.rows;
    if n == 1 {
        return s.data[0];
    }
    let total: f64 = s.data.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += s.data[i * n + j] * s.data[i * n + j];
            }
        }
        if off <= total * 1e-32 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s.data[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = s.data[p * n + p];
                let aqq = s.data[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s.data[k * n + p];
                    let skq = s.data[k * n + q];
                    s.data[k * n + p] = c * skp - sn * skq;
                    s.data[k * n + q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s.data[p * n + k];
                    let sqk = s.data[q * n + k];
                    s.data[p * n + k] = c * spk - sn * sqk;
                    s.data[q * n + k] = sn * spk + c * sqk;
                }
            }
        }
    }
    (0..n)
        .map(|i| s.data[i * n + i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Power iteration with Rayleigh quotient for a positive semidefinite matrix.
fn power_max_eigenvalue(g: &Matrix) -> f64 {
    let n = g.rows;
    // Deterministic start that is not orthogonal to a generic top eigenvector.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + (i as f64) / (n as f64 + 1.0))
        .collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = g.matvec(&v).expect("square gram");
        let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (rq - lambda).abs() <= POWER_REL_TOL * rq.abs();
        lambda = rq;
        v = w.into_iter().map(|x| x / norm).collect();
        if converged {
            break;
        }
    }
    lambda
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// A weighted ℓp norm on ℝⁿ.
///
/// For `p < ∞` the norm is `(Σ ω_k |x_k|^p)^{1/p}`; for `p = ∞` it is
/// `max ω_k |x_k|`. An empty weight vector means all weights are one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec {
    p: f64,
    weights: Vec<f64>,
}

impl NormSpec {
    pub fn new(p: f64, weights: Vec<f64>) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(LipError::InvalidInput(format!(
                "norm exponent must be in [1, inf], got {p}"
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(LipError::InvalidInput(format!(
                "norm weights must be finite and strictly positive, got {w}"
            )));
        }
        Ok(NormSpec { p, weights })
    }

    pub fn euclidean() -> Self {
        NormSpec {
            p: 2.0,
            weights: Vec::new(),
        }
    }

    pub fn l1() -> Self {
        NormSpec {
            p: 1.0,
            weights: Vec::new(),
        }
    }

    pub fn linf() -> Self {
        NormSpec {
            p: f64::INFINITY,
            weights: Vec::new(),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|w| *w == 1.0)
    }

    pub fn is_euclidean(&self) -> bool {
        self.p == 2.0 && self.is_unweighted()
    }

    pub fn weight(&self, k: usize) -> f64 {
        if self.weights.is_empty() {
            1.0
        } else {
            self.weights[k]
        }
    }

    /// Checks the weight vector against the dimension of the space.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        if !self.weights.is_empty() && self.weights.len() != n {
            return Err(LipError::Shape(format!(
                "norm has {} weights but the space has dimension {n}",
                self.weights.len()
            )));
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        if self.p.is_infinite() {
            x.iter()
                .enumerate()
                .map(|(k, v)| self.weight(k) * v.abs())
                .fold(0.0, f64::max)
        } else if self.p == 1.0 {
            x.iter()
                .enumerate()
                .map(|(k, v)| self.weight(k) * v.abs())
                .sum()
        } else if self.p == 2.0 {
            x.iter()
                .enumerate()
                .map(|(k, v)| self.weight(k) * v * v)
                .sum::<f64>()
                .sqrt()
        } else {
            x.iter()
                .enumerate()
                .map(|(k, v)| self.weight(k) * v.abs().powf(self.p))
                .sum::<f64>()
                .powf(1.0 / self.p)
        }
    }

    /// Dual norm of `a`, i.e. `sup { |⟨a, x⟩| : ‖x‖ ≤ 1 }`.
    pub fn dual_norm(&self, a: &[f64]) -> f64 {
        // ‖x‖ = ‖D x‖_p with D = diag(ω^{1/p}) (D = diag(ω) for p = ∞), so the
        // dual is ‖D⁻¹ a‖_{p*}.
        let scale = |k: usize| -> f64 {
            let w = self.weight(k);
            if self.p.is_infinite() {
                w
            } else {
                w.powf(1.0 / self.p)
            }
        };
        let q = dual_exponent(self.p);
        let scaled = a.iter().enumerate().map(|(k, v)| (v / scale(k)).abs());
        if q.is_infinite() {
            scaled.fold(0.0, f64::max)
        } else if q == 1.0 {
            scaled.sum()
        } else {
            scaled.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }
}

impl Default for NormSpec {
    fn default() -> Self {
        NormSpec::euclidean()
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.is_infinite() {
            write!(f, "inf")?;
        } else {
            write!(f, "{}", self.p)?;
        }
        if !self.weights.is_empty() {
            let ws: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
            write!(f, ":{}", ws.join(","))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for NormSpec {
    type Err = LipError;

    /// Parses `p[:w1,w2,...]`, where `p` is a number or `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let (p_str, w_str) = match s.split_once(':') {
            Some((p, w)) => (p.trim(), Some(w)),
            None => (s.trim(), None),
        };
        let p = match p_str {
            "inf" | "infinity" | "Inf" => f64::INFINITY,
            other => other
                .parse::<f64>()
                .map_err(|_| LipError::InvalidInput(format!("bad norm exponent `{other}`")))?,
        };
        let weights = match w_str {
            Some(w) => w
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| LipError::InvalidInput(format!("bad norm weight `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        NormSpec::new(p, weights)
    }
}

/// Hölder conjugate with the conventions 1 ↔ ∞.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Whether [`induced_norm`] has an exact closed form for this pair.
pub fn is_supported_pair(input: &NormSpec, output: &NormSpec) -> bool {
    input.p == 1.0 || output.p.is_infinite() || (input.is_euclidean() && output.is_euclidean())
}

/// Induced operator norm `sup ‖A x‖_out / ‖x‖_in`.
///
/// Exact for `in = ℓ1` (any output), `out = ℓ∞` (any input) and unweighted
/// `ℓ2 → ℓ2`; every other pair is rejected rather than approximated.
pub fn induced_norm(a: &Matrix, input: &NormSpec, output: &NormSpec) -> Result<f64> {
    input.check_dim(a.cols)?;
    output.check_dim(a.rows)?;
    if !is_supported_pair(input, output) {
        return Err(LipError::UnsupportedNorm(format!(
            "no exact induced norm from {input} to {output}"
        )));
    }
    if !a.all_finite() {
        return Err(LipError::InvalidInput(
            "induced norm of a matrix with non-finite entries".into(),
        ));
    }
    Ok(induced_norm_unchecked(a, input, output))
}

pub(crate) fn induced_norm_unchecked(a: &Matrix, input: &NormSpec, output: &NormSpec) -> f64 {
    if input.p == 1.0 {
        // Extreme points of the weighted ℓ1 ball are ±e_j / ω_j.
        let mut col = vec![0.0; a.rows];
        (0..a.cols)
            .map(|j| {
                for (r, c) in col.iter_mut().enumerate() {
                    *c = a.get(r, j);
                }
                output.norm(&col) / input.weight(j)
            })
            .fold(0.0, f64::max)
    } else if output.p.is_infinite() {
        (0..a.rows)
            .map(|k| output.weight(k) * input.dual_norm(a.row(k)))
            .fold(0.0, f64::max)
    } else {
        spectral_norm_unchecked(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&Matrix::identity(4)).unwrap(), 1.0);
        let d = m(&[&[3.0, 0.0], &[0.0, -4.0]]);
        assert!((spectral_norm(&d).unwrap() - 4.0).abs() < 1e-12);
        let r1 = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!((spectral_norm(&r1).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        assert_eq!(spectral_norm(&Matrix::zeros(3, 2)).unwrap(), 0.0);
    }

    #[test]
    fn matrix_rejects_non_finite() {
        let err = Matrix::new(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, LipError::InvalidInput(_)));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0]),
            Err(LipError::Shape(_))
        ));
    }

    #[test]
    fn matmul_examples() {
        let b = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &b).unwrap(), b);
        let p = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let q = m(&[&[0.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(matmul(&p, &q).unwrap(), Matrix::zeros(2, 2));
        let w1 = m(&[&[1.0, 3.0], &[3.0, 3.0]]);
        let w2 = m(&[&[10.0, 2.0], &[7.0, 4.0]]);
        assert_eq!(
            matmul(&w2, &w1).unwrap(),
            m(&[&[16.0, 36.0], &[19.0, 33.0]])
        );
        assert!(matches!(
            matmul(&w1, &Matrix::identity(3)),
            Err(LipError::Shape(_))
        ));
    }

    #[test]
    fn absolute_matrix_examples() {
        let a = m(&[&[-1.0, 2.0], &[0.0, -3.0]]);
        assert_eq!(absolute_matrix(&a), m(&[&[1.0, 2.0], &[0.0, 3.0]]));
        let pos = m(&[&[1.0, 0.5]]);
        assert_eq!(absolute_matrix(&pos), pos);
        let neg_i = Matrix::diagonal(&[-1.0, -1.0]).unwrap();
        assert_eq!(absolute_matrix(&neg_i), Matrix::identity(2));
    }

    #[test]
    fn induced_norm_examples() {
        let a = m(&[&[1.0, -2.0], &[3.0, 4.0]]);
        let l1 = NormSpec::l1();
        let linf = NormSpec::linf();
        assert_eq!(induced_norm(&Matrix::identity(3), &l1, &l1).unwrap(), 1.0);
        assert_eq!(induced_norm(&a, &l1, &linf).unwrap(), 4.0);
        assert_eq!(induced_norm(&a, &l1, &l1).unwrap(), 6.0);
        // ∞ → ∞ is the max absolute row sum.
        assert_eq!(induced_norm(&a, &linf, &linf).unwrap(), 7.0);
    }

    #[test]
    fn induced_norm_rejects_unsupported_pairs() {
        let a = Matrix::identity(2);
        let l2 = NormSpec::euclidean();
        let err = induced_norm(&a, &l2, &NormSpec::l1()).unwrap_err();
        assert!(matches!(err, LipError::UnsupportedNorm(_)));
        let weighted = NormSpec::new(2.0, vec![1.0, 2.0]).unwrap();
        assert!(induced_norm(&a, &weighted, &l2).is_err());
    }

    #[test]
    fn induced_norm_checks_weight_length() {
        let w = NormSpec::new(1.0, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            induced_norm(&Matrix::identity(2), &w, &NormSpec::linf()),
            Err(LipError::Shape(_))
        ));
    }

    #[test]
    fn weighted_norms() {
        let w = NormSpec::new(3.0, vec![2.0, 0.5]).unwrap();
        let x = [1.0, -2.0];
        let expected = (2.0 * 1.0 + 0.5 * 8.0f64).powf(1.0 / 3.0);
        assert!((w.norm(&x) - expected).abs() < 1e-15);
        let winf = NormSpec::new(f64::INFINITY, vec![2.0, 0.5]).unwrap();
        assert_eq!(winf.norm(&x), 2.0);
    }

    #[test]
    fn norm_spec_parsing() {
        let n: NormSpec = "inf".parse().unwrap();
        assert!(n.p().is_infinite());
        let n: NormSpec = "1:1,2.5".parse().unwrap();
        assert_eq!(n.weights(), &[1.0, 2.5]);
        assert_eq!(n.to_string(), "1:1,2.5");
        assert!("0.5".parse::<NormSpec>().is_err());
        assert!("2:1,-1".parse::<NormSpec>().is_err());
    }

    #[test]
    fn dual_exponents() {
        assert!(dual_exponent(1.0).is_infinite());
        assert_eq!(dual_exponent(f64::INFINITY), 1.0);
        assert_eq!(dual_exponent(2.0), 2.0);
        assert_eq!(dual_exponent(3.0), 1.5);
    }

    #[test]
    fn power_iteration_path_agrees_with_jacobi() {
        // 40x40 forces the power-iteration branch on the Gram matrix.
        let n = 40;
        let data: Vec<f64> = (0..n * n)
            .map(|k| (((k * 7919) % 97) as f64 / 97.0) - 0.5)
            .collect();
        let a = Matrix::new(n, n, data).unwrap();
        let power = spectral_norm(&a).unwrap();
        let jac = jacobi_max_eigenvalue(smaller_gram(&a)).sqrt();
        assert!((power - jac).abs() <= 1e-10 * jac, "{power} vs {jac}");
    }
}
