//! Special functions and harmonic analysis on S^{n−1} ⊂ ℝⁿ.
//!
//! All spheres carry the rotation-invariant probability measure.
//! Harmonic bases are built recursively in the first coordinate:
//! Y(x) = N·C^{(l+(d−2)/2)}_{m−l}(x_0)·r^l·Y′(x′/r), r = |x′|, with Y′ a
//! harmonic of degree l on S^{d−2}; on S¹ the basis is 1, √2 cos lθ, √2 sin lθ.
//! Restricting to the equator x_0 = 0 is therefore block diagonal in l.

use crate::linalg::compensated_sum;
use crate::{LabError, Result};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(LabError::Pole(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(libm::lgamma_r(x).0)
}

/// Signed Gamma in log form: (ln|Γ(x)|, sign). Errors at poles.
pub fn log_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if x <= 0.0 && x.fract() == 0.0 {
        return Err(LabError::Pole(format!("Gamma pole at {x}")));
    }
    let (v, s) = libm::lgamma_r(x);
    Ok((v, s as f64))
}

/// Pochhammer symbol (a)_m = a(a+1)…(a+m−1).
pub fn pochhammer(a: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if a <= 0.0 && a.fract() == 0.0 && ((-a) as usize) < m {
        return 0.0;
    }
    if m <= 32 {
        return (0..m).fold(1.0, |p, j| p * (a + j as f64));
    }
    let (la, sa) = log_gamma_signed(a).expect("a is not a pole here");
    let (lb, sb) = log_gamma_signed(a + m as f64).expect("a+m is not a pole here");
    sa * sb * (lb - la).exp()
}

/// ln((a)_m / (b)_m) for a, b > 0.
pub fn log_pochhammer_ratio(a: f64, b: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    if m <= 64 {
        let mut s = 0.0;
        for j in 0..m {
            s += ((a + j as f64) / (b + j as f64)).ln();
        }
        return Ok(s);
    }
    Ok(log_gamma(a + m as f64)? - log_gamma(a)? - log_gamma(b + m as f64)? + log_gamma(b)?)
}

/// Terminating Gauss series ₂F₁(a,b;c;x).
pub fn gauss_2f1_terminating(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let term_at = |p: f64| if p <= 0.0 && p.fract() == 0.0 { Some((-p) as usize) } else { None };
    let nterm = match (term_at(a), term_at(b)) {
        (Some(i), Some(j)) => i.min(j),
        (Some(i), None) | (None, Some(i)) => i,
        (None, None) => return Err(LabError::Domain("series does not terminate".into())),
    };
    let mut terms = Vec::with_capacity(nterm + 1);
    let mut t = 1.0;
    terms.push(t);
    for k in 0..nterm {
        let kf = k as f64;
        if c + kf == 0.0 {
            return Err(LabError::Pole(format!("c + {k} = 0 before termination")));
        }
        t *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        terms.push(t);
    }
    Ok(compensated_sum(terms))
}

/// φ^n_m(x) = cos^m ξ · ₂F₁(−m/2, −(m−1)/2; (n−1)/2; −tan²ξ), x = cos ξ,
/// expanded as Σ_k c_k x^{m−2k}(1−x²)^k so x = 0 needs no special case.
pub fn phi_poly(n: usize, m: usize, x: f64) -> Result<f64> {
    if n < 2 {
        return Err(LabError::InvalidDimension { got: n, min: 2 });
    }
    if !(x.abs() <= 1.0) {
        return Err(LabError::Domain(format!("|x| > 1: {x}")));
    }
    let a = -(m as f64) / 2.0;
    let b = -(m as f64 - 1.0) / 2.0;
    let c = (n as f64 - 1.0) / 2.0;
    let s = 1.0 - x * x;
    let mut coef = 1.0;
    let mut terms = Vec::new();
    let mut k = 0usize;
    while 2 * k <= m {
        terms.push(coef * x.powi((m - 2 * k) as i32) * s.powi(k as i32));
        let kf = k as f64;
        coef *= -(a + kf) * (b + kf) / ((c + kf) * (kf + 1.0));
        if coef == 0.0 {
            break;
        }
        k += 1;
    }
    Ok(compensated_sum(terms))
}

/// Gegenbauer C^λ_k(t) by the three-term recurrence.
pub fn gegenbauer(k: usize, lambda: f64, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut c0 = 1.0;
    let mut c1 = 2.0 * lambda * t;
    for j in 1..k {
        let jf = j as f64;
        let c2 = (2.0 * t * (jf + lambda) * c1 - (jf + 2.0 * lambda - 1.0) * c0) / (jf + 1.0);
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// dim W_m on S^{d−1}.
pub fn harmonic_dim(d: usize, m: usize) -> usize {
    use crate::linalg::binomial;
    if d == 1 {
        return if m <= 1 { 1 } else { 0 };
    }
    let a = binomial(m + d - 1, d - 1);
    let b = if m >= 2 { binomial(m + d - 3, d - 1) } else { 0.0 };
    (a - b).round() as usize
}

/// Label of a basis harmonic on S^{d−1}: [m, l_1, …, l_{d−2}], the last entry
/// signed (S¹ level: positive = cos, negative = sin). For d = 2 it is [±m].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub Vec<i64>);

impl Label {
    pub fn degree(&self) -> usize {
        self.0[0].unsigned_abs() as usize
    }

    /// Degree of the S^{d−2} factor (signed when that factor is S¹).
    pub fn sub_degree(&self) -> Option<i64> {
        self.0.get(1).copied()
    }

    pub fn sub_label(&self) -> Label {
        Label(self.0[1..].to_vec())
    }
}

pub fn harmonic_labels(d: usize, m: usize) -> Vec<Label> {
    assert!(d >= 2);
    if d == 2 {
        return if m == 0 { vec![Label(vec![0])] } else { vec![Label(vec![m as i64]), Label(vec![-(m as i64)])] };
    }
    let mut out = Vec::new();
    for l in 0..=m {
        for sub in harmonic_labels(d - 1, l) {
            let mut v = vec![m as i64];
            v.extend(sub.0);
            out.push(Label(v));
        }
    }
    out
}

/// ln of the normalization N(d,m,l) making the recursive harmonic unit-norm.
fn log_norm(d: usize, m: usize, l: usize) -> f64 {
    let lam = l as f64 + (d as f64 - 2.0) / 2.0;
    let k = (m - l) as f64;
    let lg = |x: f64| libm::lgamma_r(x).0;
    let log_hk = PI.ln() + (1.0 - 2.0 * lam) * 2f64.ln() + lg(k + 2.0 * lam)
        - lg(k + 1.0)
        - (k + lam).ln()
        - 2.0 * lg(lam);
    let log_cd = lg(d as f64 / 2.0) - 0.5 * PI.ln() - lg((d as f64 - 1.0) / 2.0);
    -0.5 * (log_cd + log_hk)
}

/// Evaluate the basis harmonic `label` at a point x of S^{d−1} (d = x.len()).
pub fn eval_harmonic(label: &Label, x: &[f64]) -> f64 {
    let d = x.len();
    if d == 2 {
        let l = label.0[0];
        if l == 0 {
            return 1.0;
        }
        let th = x[1].atan2(x[0]);
        let lf = l.unsigned_abs() as f64;
        return if l > 0 { 2f64.sqrt() * (lf * th).cos() } else { 2f64.sqrt() * (lf * th).sin() };
    }
    let m = label.degree();
    let l = label.0[1].unsigned_abs() as usize;
    let t = x[0];
    let rest = &x[1..];
    let r = rest.iter().map(|v| v * v).sum::<f64>().sqrt();
    let lam = l as f64 + (d as f64 - 2.0) / 2.0;
    let g = gegenbauer(m - l, lam, t) * log_norm(d, m, l).exp();
    let sub = label.sub_label();
    if r == 0.0 {
        if l > 0 {
            return 0.0;
        }
        let mut y = vec![0.0; d - 1];
        y[0] = 1.0;
        return g * eval_harmonic(&sub, &y);
    }
    let y: Vec<f64> = rest.iter().map(|v| v / r).collect();
    g * r.powi(l as i32) * eval_harmonic(&sub, &y)
}

/// Evaluates every basis harmonic of degree ≤ m_max at once, in the order
/// of concatenated [`harmonic_labels`] (degree-major).
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    pub d: usize,
    pub m_max: usize,
    norm: Vec<Vec<f64>>,
    sub: Option<Box<BasisEvaluator>>,
    sub_start: Vec<usize>,
}

impl BasisEvaluator {
    pub fn new(d: usize, m_max: usize) -> Self {
        assert!(d >= 2);
        if d == 2 {
            return Self { d, m_max, norm: Vec::new(), sub: None, sub_start: Vec::new() };
        }
        let norm = (0..=m_max).map(|m| (0..=m).map(|l| log_norm(d, m, l).exp()).collect()).collect();
        let sub = BasisEvaluator::new(d - 1, m_max);
        let mut sub_start = vec![0];
        for l in 0..=m_max {
            sub_start.push(sub_start[l] + harmonic_dim(d - 1, l));
        }
        Self { d, m_max, norm, sub: Some(Box::new(sub)), sub_start }
    }

    pub fn len(&self) -> usize {
        (0..=self.m_max).map(|m| harmonic_dim(self.d, m)).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval_all(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.d);
        if self.d == 2 {
            let th = x[1].atan2(x[0]);
            out.push(1.0);
            let s2 = 2f64.sqrt();
            for m in 1..=self.m_max {
                let mf = m as f64;
                out.push(s2 * (mf * th).cos());
                out.push(s2 * (mf * th).sin());
            }
            return;
        }
        let sub = self.sub.as_ref().expect("d >= 3 has a sub-evaluator");
        let t = x[0];
        let rest = &x[1..];
        let r = rest.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y: Vec<f64> = if r > 0.0 {
            rest.iter().map(|v| v / r).collect()
        } else {
            let mut y = vec![0.0; self.d - 1];
            y[0] = 1.0;
            y
        };
        let sv = sub.eval_all(&y);
        // gegen[l][k] = C^{l+(d−2)/2}_k(t), k ≤ m_max − l
        let half = (self.d as f64 - 2.0) / 2.0;
        let gegen: Vec<Vec<f64>> = (0..=self.m_max)
            .map(|l| {
                let lam = l as f64 + half;
                let kmax = self.m_max - l;
                let mut v = Vec::with_capacity(kmax + 1);
                v.push(1.0);
                if kmax >= 1 {
                    v.push(2.0 * lam * t);
                }
                for j in 1..kmax {
                    let jf = j as f64;
                    let c = (2.0 * t * (jf + lam) * v[j] - (jf + 2.0 * lam - 1.0) * v[j - 1]) / (jf + 1.0);
                    v.push(c);
                }
                v
            })
            .collect();
        let mut rpow = vec![1.0; self.m_max + 1];
        for l in 1..=self.m_max {
            rpow[l] = rpow[l - 1] * r;
        }
        for m in 0..=self.m_max {
            for l in 0..=m {
                let c = self.norm[m][l] * gegen[l][m - l] * rpow[l];
                for j in self.sub_start[l]..self.sub_start[l + 1] {
                    out.push(c * sv[j]);
                }
            }
        }
    }
}

/// Explicit basis of W_m on S^{n−1}.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub n: usize,
    pub m: usize,
    pub labels: Vec<Label>,
}

impl HarmonicBasis {
    pub fn eval(&self, i: usize, x: &[f64]) -> f64 {
        eval_harmonic(&self.labels[i], x)
    }
    pub fn len(&self) -> usize {
        self.labels.len()
    }
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn harmonic_basis(n: usize, m: usize) -> Result<HarmonicBasis> {
    if n < 2 {
        return Err(LabError::InvalidDimension { got: n, min: 2 });
    }
    Ok(HarmonicBasis { n, m, labels: harmonic_labels(n, m) })
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub n: usize,
    pub degree: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)))
    }
}

/// Gauss rule for the normalized weight ∝ (1−t²)^α on [−1,1] (Golub–Welsch).
pub fn gauss_gegenbauer(k: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let lam = alpha + 0.5;
    let mut jm = DMatrix::<f64>::zeros(k, k);
    for j in 1..k {
        let jf = j as f64;
        let beta = jf * (jf + 2.0 * lam - 1.0) / (4.0 * (jf + lam) * (jf + lam - 1.0));
        jm[(j, j - 1)] = beta.sqrt();
        jm[(j - 1, j)] = beta.sqrt();
    }
    let eig = jm.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize to remove rounding asymmetry
    for i in 0..k / 2 {
        let j = k - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if k % 2 == 1 {
        pairs[k / 2].0 = 0.0;
    }
    let s: f64 = pairs.iter().map(|p| p.1).sum();
    (pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1 / s).collect())
}

/// Normalized moment E[t^{2j}] for the weight ∝ (1−t²)^α.
fn even_moment(j: usize, alpha: f64) -> f64 {
    (0..j).fold(1.0, |p, i| p * (0.5 + i as f64) / (alpha + 1.5 + i as f64))
}

/// Product rule on S^{n−1}, exact for polynomials of total degree ≤ `degree`.
pub fn sphere_quadrature(n: usize, degree: usize) -> Result<QuadratureRule> {
    if n < 2 {
        return Err(LabError::InvalidDimension { got: n, min: 2 });
    }
    let degree = degree.max(1);
    if n == 2 {
        let k = degree + 1;
        let nodes = (0..k)
            .map(|i| {
                let th = 2.0 * PI * (i as f64 + 0.5) / k as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        return Ok(QuadratureRule { n, degree, nodes, weights: vec![1.0 / k as f64; k] });
    }
    let alpha = (n as f64 - 3.0) / 2.0;
    let k = degree / 2 + 1;
    let (ts, ws) = gauss_gegenbauer(k, alpha);
    for j in 0..=degree / 2 {
        let q: f64 = ts.iter().zip(&ws).map(|(t, w)| w * t.powi(2 * j as i32)).sum();
        let exact = even_moment(j, alpha);
        if (q - exact).abs() > 1e-13 * exact.max(1.0) {
            return Err(LabError::Numeric(format!("Gauss rule failed moment {j}: {q} vs {exact}")));
        }
    }
    let sub = sphere_quadrature(n - 1, degree)?;
    let mut nodes = Vec::with_capacity(k * sub.len());
    let mut weights = Vec::with_capacity(k * sub.len());
    for (t, w) in ts.iter().zip(&ws) {
        let r = (1.0 - t * t).max(0.0).sqrt();
        for (y, v) in sub.nodes.iter().zip(&sub.weights) {
            let mut x = Vec::with_capacity(n);
            x.push(*t);
            x.extend(y.iter().map(|c| c * r));
            nodes.push(x);
            weights.push(w * v);
        }
    }
    Ok(QuadratureRule { n, degree, nodes, weights })
}

/// A function on S^{n−1}, held both as samples at the analyzer's quadrature
/// nodes and as coefficients per degree in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalFunction {
    pub n: usize,
    pub samples: Vec<f64>,
    /// coeffs[m] in the order of `harmonic_labels(n, m)`.
    pub coeffs: Vec<DVector<f64>>,
}

impl SphericalFunction {
    pub fn m_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn flat_coeffs(&self) -> DVector<f64> {
        let v: Vec<f64> = self.coeffs.iter().flat_map(|c| c.iter().copied()).collect();
        DVector::from_vec(v)
    }

    /// L²(probability) norm from the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    /// Degrees carrying a coefficient block with norm above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&m| self.coeffs[m].norm() > tol).collect()
    }
}

/// Quadrature rule plus the synthesis matrix for all harmonics of degree ≤ m_max.
#[derive(Debug, Clone)]
pub struct HarmonicAnalyzer {
    pub n: usize,
    pub m_max: usize,
    pub quad: QuadratureRule,
    pub labels: Vec<Label>,
    /// labels[degree_start[m]..degree_start[m+1]] have degree m.
    pub degree_start: Vec<usize>,
    pub evaluator: BasisEvaluator,
    synth: DMatrix<f64>,
}

impl HarmonicAnalyzer {
    /// `quad_degree` defaults to 2·m_max + 4.
    pub fn new(n: usize, m_max: usize, quad_degree: Option<usize>) -> Result<Self> {
        let quad = sphere_quadrature(n, quad_degree.unwrap_or(2 * m_max + 4))?;
        Self::with_rule(n, m_max, quad)
    }

    pub fn with_rule(n: usize, m_max: usize, quad: QuadratureRule) -> Result<Self> {
        if quad.n != n {
            return Err(LabError::DimensionMismatch(quad.n, n));
        }
        let mut labels = Vec::new();
        let mut degree_start = vec![0];
        for m in 0..=m_max {
            labels.extend(harmonic_labels(n, m));
            degree_start.push(labels.len());
        }
        let evaluator = BasisEvaluator::new(n, m_max);
        let mut synth = DMatrix::zeros(quad.len(), labels.len());
        for (i, x) in quad.nodes.iter().enumerate() {
            let v = evaluator.eval_all(x);
            for (j, val) in v.into_iter().enumerate() {
                synth[(i, j)] = val;
            }
        }
        Ok(Self { n, m_max, quad, labels, degree_start, evaluator, synth })
    }

    pub fn nbasis(&self) -> usize {
        self.labels.len()
    }

    pub fn synthesis_matrix(&self) -> &DMatrix<f64> {
        &self.synth
    }

    pub fn degree_range(&self, m: usize) -> std::ops::Range<usize> {
        self.degree_start[m]..self.degree_start[m + 1]
    }

    fn split(&self, flat: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..=self.m_max).map(|m| flat.rows_range(self.degree_range(m)).into_owned()).collect()
    }

    pub fn analyze_flat(&self, samples: &[f64]) -> DVector<f64> {
        let mut c = DVector::zeros(self.nbasis());
        for j in 0..self.nbasis() {
            c[j] = compensated_sum(
                (0..samples.len()).map(|i| self.quad.weights[i] * samples[i] * self.synth[(i, j)]),
            );
        }
        c
    }

    pub fn from_samples(&self, samples: Vec<f64>) -> SphericalFunction {
        let c = self.analyze_flat(&samples);
        SphericalFunction { n: self.n, samples, coeffs: self.split(&c) }
    }

    pub fn from_flat_coeffs(&self, flat: &DVector<f64>) -> SphericalFunction {
        let samples = (&self.synth * flat).iter().copied().collect();
        SphericalFunction { n: self.n, samples, coeffs: self.split(flat) }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(&self, f: F) -> SphericalFunction {
        self.from_samples(self.quad.nodes.iter().map(|x| f(x)).collect())
    }

    /// Single basis element `idx` (flat index) as a function.
    pub fn basis_function(&self, idx: usize) -> SphericalFunction {
        let mut c = DVector::zeros(self.nbasis());
        c[idx] = 1.0;
        self.from_flat_coeffs(&c)
    }

    /// Evaluate the band-limited expansion at an arbitrary point.
    pub fn eval(&self, f: &SphericalFunction, x: &[f64]) -> f64 {
        let flat = f.flat_coeffs();
        let v = self.evaluator.eval_all(x);
        compensated_sum(flat.iter().zip(&v).map(|(a, b)| a * b))
    }

    /// Weighted residual ‖samples − synthesis(coeffs)‖ (L², probability measure):
    /// the part of f not captured by degrees ≤ m_max.
    pub fn leakage(&self, f: &SphericalFunction) -> f64 {
        let rec = &self.synth * f.flat_coeffs();
        compensated_sum(
            f.samples.iter().zip(rec.iter()).zip(&self.quad.weights).map(|((a, b), w)| w * (a - b) * (a - b)),
        )
        .max(0.0)
        .sqrt()
    }
}

/// Restriction to the equator x_0 = 0, re-expanded on S^{n−2}.
pub fn restrict(f: &SphericalFunction, src: &HarmonicAnalyzer, dst: &HarmonicAnalyzer) -> Result<SphericalFunction> {
    if src.n < 3 {
        return Err(LabError::InvalidDimension { got: src.n, min: 3 });
    }
    if dst.n + 1 != src.n {
        return Err(LabError::DimensionMismatch(dst.n + 1, src.n));
    }
    let samples: Vec<f64> = dst
        .quad
        .nodes
        .iter()
        .map(|y| {
            let mut x = Vec::with_capacity(src.n);
            x.push(0.0);
            x.extend_from_slice(y);
            src.eval(f, &x)
        })
        .collect();
    Ok(dst.from_samples(samples))
}

/// h(x′)·φ^{n+2l}_{m−l}(x_0) for h a degree-l harmonic on S^{n−2}.
pub fn embed_vtilde(
    h: &SphericalFunction,
    m: usize,
    src: &HarmonicAnalyzer,
    dst: &HarmonicAnalyzer,
) -> Result<SphericalFunction> {
    if src.n + 1 != dst.n {
        return Err(LabError::DimensionMismatch(src.n + 1, dst.n));
    }
    let support = h.support(1e-12);
    let l = match support.as_slice() {
        [] => 0,
        [l] => *l,
        _ => return Err(LabError::Invalid("h must be homogeneous of a single degree".into())),
    };
    if l > m || (m - l) % 2 != 0 {
        return Err(LabError::Parity { m, l: l as i64 });
    }
    let n = dst.n;
    let samples: Result<Vec<f64>> = dst
        .quad
        .nodes
        .iter()
        .map(|x| {
            let rest = &x[1..];
            let r = rest.iter().map(|v| v * v).sum::<f64>().sqrt();
            let hv = if r == 0.0 {
                if l == 0 {
                    h.coeffs[0][0]
                } else {
                    0.0
                }
            } else {
                let y: Vec<f64> = rest.iter().map(|v| v / r).collect();
                src.eval(h, &y) * r.powi(l as i32)
            };
            Ok(hv * phi_poly(n + 2 * l, m - l, x[0].clamp(-1.0, 1.0))?)
        })
        .collect();
    Ok(dst.from_samples(samples?))
}
