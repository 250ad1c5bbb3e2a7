//! Spherical complementary series of SO(n,1) realized on L²(S^{n−1}).
//!
//! K/M ≅ S^{n−1} through k ↦ k·e_{n−1}. The model used throughout is π_{−ν}:
//! (π(g)f)(x) = e^{−(ρ−ν)H} f(κ e_{n−1}) where g⁻¹k = κ·exp(H·Y_n)·n is the
//! Iwasawa decomposition and k·e_{n−1} = x. Its unitarizing norm is
//! ‖f‖² = Σ_m d_m ‖f_m‖² with d_m = (ρ+ν)_m / (ρ−ν)_m.
//!
//! Restriction to H = SO(n−1,1) (acting on coordinates 1..n) lands in the
//! analogous model for (n−1, ν−1/2).

use crate::harmonics::{log_pochhammer_ratio, HarmonicAnalyzer, SphericalFunction};
use crate::liealg::{self, AlgebraElement, GroupElement};
use crate::linalg::{compensated_sum, spectral_norm};
use crate::{LabError, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Default step for the Richardson-extrapolated differences.
pub const DEFAULT_STEP: f64 = 0.02;

pub fn rho(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}

pub fn rho_flat(n: usize) -> f64 {
    (n as f64 - 2.0) / 2.0
}

#[derive(Debug, Clone)]
pub struct RepContext {
    pub n: usize,
    pub nu: f64,
    pub m_max: usize,
    pub s: f64,
    pub analyzer: HarmonicAnalyzer,
}

impl RepContext {
    /// Quadrature exactness 2·m_max + 4.
    pub fn new(n: usize, nu: f64, m_max: usize, s: f64) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidDimension { got: n, min: 2 });
        }
        if !(nu.abs() < rho(n)) {
            return Err(LabError::Range(format!("need |nu| < rho = {}, got nu = {nu}", rho(n))));
        }
        if m_max < 4 {
            return Err(LabError::Range(format!("m_max must be >= 4, got {m_max}")));
        }
        if !(s >= 0.0) {
            return Err(LabError::Range(format!("Sobolev order must be >= 0, got {s}")));
        }
        let analyzer = HarmonicAnalyzer::new(n, m_max, Some(2 * m_max + 4))?;
        Ok(Self { n, nu, m_max, s, analyzer })
    }

    pub fn rho(&self) -> f64 {
        rho(self.n)
    }

    pub fn rho_flat(&self) -> f64 {
        rho_flat(self.n)
    }

    pub fn check_branching_range(&self) -> Result<()> {
        check_branching_range(self.n, self.nu)
    }

    /// d_m per flat basis index.
    pub fn d_weights(&self) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(self.analyzer.nbasis());
        for m in 0..=self.m_max {
            let d = d_coefficient(self.n, self.nu, m)?;
            v.extend(std::iter::repeat_n(d, self.analyzer.degree_range(m).len()));
        }
        Ok(v)
    }

    pub fn hilbert_norm(&self, f: &SphericalFunction) -> Result<f64> {
        let mut acc = 0.0;
        for (m, c) in f.coeffs.iter().enumerate() {
            acc += d_coefficient(self.n, self.nu, m)? * c.norm_squared();
        }
        Ok(acc.sqrt())
    }

    pub fn sobolev_norm(&self, f: &SphericalFunction) -> Result<f64> {
        let mut acc = 0.0;
        for (m, c) in f.coeffs.iter().enumerate() {
            acc += d_coefficient(self.n, self.nu, m)? * sobolev_weight(self, m)? * c.norm_squared();
        }
        Ok(acc.sqrt())
    }
}

fn check_increasing(v: &[i64], signed_first: bool) -> bool {
    for (i, w) in v.iter().enumerate() {
        if i == 0 {
            if !signed_first && *w < 0 {
                return false;
            }
        } else if *w < v[i - 1].abs() || *w < 0 {
            return false;
        }
    }
    true
}

/// Σ w_i(w_i + 2ρ_i) for a highest weight of SO(dim), weights listed in
/// increasing order (w_1 signed when dim is even).
fn so_casimir_pairing(dim: usize, w: &[i64]) -> Result<f64> {
    let rank = dim / 2;
    if w.len() != rank {
        return Err(LabError::Invalid(format!("SO({dim}) highest weight needs {rank} entries, got {}", w.len())));
    }
    let even = dim % 2 == 0;
    if !check_increasing(w, even) {
        return Err(LabError::Invalid(format!("not a dominant SO({dim}) weight: {w:?}")));
    }
    Ok(w
        .iter()
        .enumerate()
        .map(|(k, &wi)| {
            let i = (k + 1) as f64;
            let two_rho = if even { 2.0 * i - 2.0 } else { 2.0 * i - 1.0 };
            wi as f64 * (wi as f64 + two_rho)
        })
        .sum())
}

/// ρ♭ < ν < ρ, the range where the branching statements apply.
pub fn check_branching_range(n: usize, nu: f64) -> Result<()> {
    if n < 3 {
        return Err(LabError::InvalidDimension { got: n, min: 3 });
    }
    if !(nu > rho_flat(n) && nu < rho(n)) {
        return Err(LabError::Range(format!(
            "branching requires rho_flat = {} < nu < rho = {}, got nu = {}",
            rho_flat(n),
            rho(n),
            nu
        )));
    }
    Ok(())
}

/// c_n(𝐧, ν) = ρ² − ν² − ⟨𝐧, 𝐧 + 2ρ_M⟩, M = SO(n−1).
pub fn casimir_scalar(n: usize, highest_weight: &[i64], nu: f64) -> Result<f64> {
    if n < 2 {
        return Err(LabError::InvalidDimension { got: n, min: 2 });
    }
    Ok(rho(n).powi(2) - nu * nu - so_casimir_pairing(n - 1, highest_weight)?)
}

/// Scalar of the K = SO(n) Casimir on the type 𝐦 (increasing order):
/// −Σ m_i(m_i+2i−2) for n even, −Σ m_i(m_i+2i−1) for n odd.
pub fn casimir_k_scalar(n: usize, m: &[i64]) -> Result<f64> {
    if n < 2 {
        return Err(LabError::InvalidDimension { got: n, min: 2 });
    }
    Ok(-so_casimir_pairing(n, m)?)
}

/// The spherical K-type (0, …, 0, m).
pub fn spherical_k_weight(n: usize, m: usize) -> Vec<i64> {
    let mut v = vec![0; n / 2];
    if let Some(last) = v.last_mut() {
        *last = m as i64;
    }
    v
}

/// d_m = (ρ+ν)_m / (ρ−ν)_m.
pub fn d_coefficient(n: usize, nu: f64, m: usize) -> Result<f64> {
    let r = rho(n);
    if !(nu.abs() < r) {
        return Err(LabError::Range(format!("d_m needs |nu| < rho = {r}, got {nu}")));
    }
    Ok(log_pochhammer_ratio(r + nu, r - nu, m)?.exp())
}

/// d♭_l for the restricted model (n−1, ν−1/2).
pub fn d_flat(n: usize, nu: f64, l: usize) -> Result<f64> {
    d_coefficient(n - 1, nu - 0.5, l)
}

/// (1 + c_n(0,ν) − 2 c_K(m))^s with c_K(m) = −m(m+n−2).
pub fn sobolev_weight_raw(n: usize, nu: f64, s: f64, m: usize) -> Result<f64> {
    let ck = casimir_k_scalar(n, &spherical_k_weight(n, m))?;
    let base = 1.0 + casimir_scalar(n, &vec![0; (n - 1) / 2], nu)? - 2.0 * ck;
    if base <= 0.0 {
        return Err(LabError::Range(format!("nonpositive Sobolev base {base} at m = {m}")));
    }
    Ok(if s == 0.0 { 1.0 } else { base.powf(s) })
}

pub fn sobolev_weight(ctx: &RepContext, m: usize) -> Result<f64> {
    sobolev_weight_raw(ctx.n, ctx.nu, ctx.s, m)
}

pub fn sobolev_weight_flat(n: usize, nu: f64, s: f64, l: usize) -> Result<f64> {
    sobolev_weight_raw(n - 1, nu - 0.5, s, l)
}

/// A K-element (in the (n+1)×(n+1) embedding) with k·e_{n−1} = x.
pub fn k_of_point(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let q = n - 1;
    let mut m = DMatrix::identity(n + 1, n + 1);
    let mut v = DVector::from_column_slice(x) * -1.0;
    v[q] += 1.0;
    let vn2 = v.norm_squared();
    if vn2 < 1e-30 {
        return m;
    }
    // Householder reflection e_q ↦ x, then flip e_0 to land in SO(n).
    let mut h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vn2);
    for i in 0..n {
        h[(i, 0)] = -h[(i, 0)];
    }
    m.view_mut((0, 0), (n, n)).copy_from(&h);
    m
}

/// (x′, H) with g⁻¹·k(x) = κ·a^H·n and x′ = κ·e_{n−1}, through Iwasawa.
pub fn transform_point(ginv: &GroupElement, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = ginv.n;
    let k = k_of_point(x);
    let h = GroupElement::from_matrix_unchecked(n, &ginv.mat * k);
    let iw = liealg::iwasawa(&h)?;
    let xp: Vec<f64> = (0..n).map(|i| iw.k.mat[(i, n - 1)]).collect();
    Ok((xp, iw.t))
}

/// (π(g)f)(x) for a band-limited f, evaluated pointwise.
pub fn pi_eval(ctx: &RepContext, ginv: &GroupElement, f: &SphericalFunction, x: &[f64]) -> Result<f64> {
    let (xp, t) = transform_point(ginv, x)?;
    Ok((-(ctx.rho() - ctx.nu) * t).exp() * ctx.analyzer.eval(f, &xp))
}

/// π(g)f sampled exactly at the quadrature nodes and projected to degrees ≤ m_max.
/// The returned function's `leakage` (via the analyzer) measures truncation loss.
pub fn pi_action(ctx: &RepContext, g: &GroupElement, f: &SphericalFunction) -> Result<SphericalFunction> {
    if g.n != ctx.n || f.n != ctx.n {
        return Err(LabError::DimensionMismatch(g.n, ctx.n));
    }
    let ginv = g.inverse();
    let samples: Result<Vec<f64>> = ctx.analyzer.quad.nodes.iter().map(|x| pi_eval(ctx, &ginv, f, x)).collect();
    Ok(ctx.analyzer.from_samples(samples?))
}

/// Matrix of π(g) from degrees ≤ m_in to degrees ≤ m_out in the orthonormal basis.
pub fn pi_matrix(ctx: &RepContext, g: &GroupElement, m_in: usize, m_out: usize) -> Result<DMatrix<f64>> {
    if m_in > ctx.m_max || m_out > ctx.m_max {
        return Err(LabError::Range(format!("degrees {m_in}, {m_out} exceed m_max = {}", ctx.m_max)));
    }
    let a = &ctx.analyzer;
    let nin = a.degree_start[m_in + 1];
    let nout = a.degree_start[m_out + 1];
    let ginv = g.inverse();
    let nodes = &a.quad.nodes;
    let mut e = DMatrix::zeros(nodes.len(), nin);
    for (i, x) in nodes.iter().enumerate() {
        let (xp, t) = transform_point(&ginv, x)?;
        let mult = (-(ctx.rho() - ctx.nu) * t).exp() * a.quad.weights[i];
        let vals = a.evaluator.eval_all(&xp);
        for j in 0..nin {
            e[(i, j)] = mult * vals[j];
        }
    }
    let s = a.synthesis_matrix().columns(0, nout);
    Ok(s.transpose() * e)
}

fn exp_step(x: &AlgebraElement, h: f64) -> GroupElement {
    liealg::exp_matrix(&x.scale(h))
}

/// dπ(X) as a matrix (degrees ≤ m_in → ≤ m_out), central differences with one
/// Richardson step.
pub fn dpi_matrix(ctx: &RepContext, x: &AlgebraElement, m_in: usize, m_out: usize, h: f64) -> Result<DMatrix<f64>> {
    let d = |hh: f64| -> Result<DMatrix<f64>> {
        let p = pi_matrix(ctx, &exp_step(x, hh), m_in, m_out)?;
        let q = pi_matrix(ctx, &exp_step(x, -hh), m_in, m_out)?;
        Ok((p - q) / (2.0 * hh))
    };
    let dh = d(h)?;
    let dh2 = d(h / 2.0)?;
    Ok((dh2 * 4.0 - dh) / 3.0)
}

/// Derivative at ε = 0 of f(cos ε·x + sin ε·t̂) for a basis of degree ≤ m
/// harmonics: the restriction is a trigonometric polynomial of degree ≤ m,
/// differentiated exactly on an odd equispaced grid.
fn tangent_derivatives(ctx: &RepContext, x: &[f64], t: &[f64], ncols: usize, m: usize) -> Vec<f64> {
    let tn = t.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = vec![0.0; ncols];
    if tn < 1e-300 {
        return out;
    }
    let k = 2 * m + 1;
    let kf = k as f64;
    for j in 1..k {
        let e = 2.0 * std::f64::consts::PI * j as f64 / kf;
        let (se, ce) = e.sin_cos();
        let p: Vec<f64> = x.iter().zip(t).map(|(a, b)| ce * a + se * b / tn).collect();
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let c = 0.5 * sign / (std::f64::consts::PI * j as f64 / kf).sin() * tn;
        let vals = ctx.analyzer.evaluator.eval_all(&p);
        for (o, v) in out.iter_mut().zip(vals.iter()) {
            *o += c * v;
        }
    }
    out
}

/// dπ(X) as a matrix (degrees ≤ m_in → ≤ m_out) from the infinitesimal action:
/// with X·(x,1) = (v, w), (dπ(X)f)(x) = (ρ−ν)·w·f(x) − ∂_{v − w x} f(x).
/// Exact up to quadrature rounding when m_in + m_out + 1 ≤ quad exactness.
pub fn dpi_matrix_exact(ctx: &RepContext, x: &AlgebraElement, m_in: usize, m_out: usize) -> Result<DMatrix<f64>> {
    if x.n != ctx.n {
        return Err(LabError::DimensionMismatch(x.n, ctx.n));
    }
    if m_in > ctx.m_max || m_out > ctx.m_max {
        return Err(LabError::Range(format!("degrees {m_in}, {m_out} exceed m_max = {}", ctx.m_max)));
    }
    let n = ctx.n;
    let a = &ctx.analyzer;
    let nin = a.degree_start[m_in + 1];
    let nout = a.degree_start[m_out + 1];
    let nodes = &a.quad.nodes;
    let mut e = DMatrix::zeros(nodes.len(), nin);
    for (i, p) in nodes.iter().enumerate() {
        let mut cone = DVector::from_column_slice(p).push(1.0);
        cone = &x.mat * cone;
        let w = cone[n];
        let tan: Vec<f64> = (0..n).map(|k| cone[k] - w * p[k]).collect();
        let vals = a.evaluator.eval_all(p);
        let der = tangent_derivatives(ctx, p, &tan, nin, m_in);
        let qw = a.quad.weights[i];
        for j in 0..nin {
            e[(i, j)] = qw * ((ctx.rho() - ctx.nu) * w * vals[j] - der[j]);
        }
    }
    let s = a.synthesis_matrix().columns(0, nout);
    Ok(s.transpose() * e)
}

pub fn lie_derivative(ctx: &RepContext, x: &AlgebraElement, f: &SphericalFunction) -> Result<SphericalFunction> {
    lie_derivative_with_step(ctx, x, f, DEFAULT_STEP)
}

pub fn lie_derivative_with_step(
    ctx: &RepContext,
    x: &AlgebraElement,
    f: &SphericalFunction,
    h: f64,
) -> Result<SphericalFunction> {
    if !(h > 1e-8) {
        return Err(LabError::Numeric(format!("difference step underflow: {h}")));
    }
    if x.norm() == 0.0 {
        return Ok(ctx.analyzer.from_flat_coeffs(&DVector::zeros(ctx.analyzer.nbasis())));
    }
    let d = |hh: f64| -> Result<DVector<f64>> {
        let p = pi_action(ctx, &exp_step(x, hh), f)?.flat_coeffs();
        let q = pi_action(ctx, &exp_step(x, -hh), f)?.flat_coeffs();
        Ok((p - q) / (2.0 * hh))
    };
    let c = (d(h / 2.0)? * 4.0 - d(h)?) / 3.0;
    Ok(ctx.analyzer.from_flat_coeffs(&c))
}

/// dπ(X)²f by second central differences with one Richardson step.
pub fn second_derivative(ctx: &RepContext, x: &AlgebraElement, f: &SphericalFunction, h: f64) -> Result<DVector<f64>> {
    let f0 = f.flat_coeffs();
    let s = |hh: f64| -> Result<DVector<f64>> {
        let p = pi_action(ctx, &exp_step(x, hh), f)?.flat_coeffs();
        let q = pi_action(ctx, &exp_step(x, -hh), f)?.flat_coeffs();
        Ok((p + q - &f0 * 2.0) / (hh * hh))
    };
    Ok((s(h / 2.0)? * 4.0 - s(h)?) / 3.0)
}

/// □ = −Σ_k Y_k² + Σ_{i<j} Θ_ij², applied numerically.
pub fn apply_casimir_numeric(ctx: &RepContext, f: &SphericalFunction) -> Result<SphericalFunction> {
    apply_casimir_numeric_with_step(ctx, f, DEFAULT_STEP)
}

pub fn apply_casimir_numeric_with_step(ctx: &RepContext, f: &SphericalFunction, h: f64) -> Result<SphericalFunction> {
    let top = f.support(1e-12).last().copied().unwrap_or(0);
    if top + 2 > ctx.m_max {
        return Err(LabError::Range(format!("input degree {top} too close to truncation {}", ctx.m_max)));
    }
    let gens = liealg::generators(ctx.n)?;
    let mut acc = DVector::zeros(ctx.analyzer.nbasis());
    for y in &gens.y {
        acc -= second_derivative(ctx, y, f, h)?;
    }
    for (_, _, t) in &gens.theta {
        acc += second_derivative(ctx, t, f, h)?;
    }
    Ok(ctx.analyzer.from_flat_coeffs(&acc))
}

/// |‖π(g)f‖_ℋ / ‖f‖_ℋ − 1|.
pub fn norm_distortion(ctx: &RepContext, g: &GroupElement, f: &SphericalFunction) -> Result<f64> {
    let pf = pi_action(ctx, g, f)?;
    Ok((ctx.hilbert_norm(&pf)? / ctx.hilbert_norm(f)? - 1.0).abs())
}

/// Closed-form Gamma-ratio value of ‖Res_{m,l}‖²_{L²} (raw, uncalibrated).
/// Evaluated at |l|. Returns 0 for m − l odd (the block is forbidden).
pub fn res_block_norm_formula(n: usize, m: usize, l: i64) -> Result<f64> {
    if n < 3 {
        return Err(LabError::InvalidDimension { got: n, min: 3 });
    }
    let la = l.unsigned_abs() as usize;
    if la > m {
        return Err(LabError::Parity { m, l });
    }
    if (m - la) % 2 == 1 {
        return Ok(0.0);
    }
    let lg = |x: f64| libm::lgamma_r(x).0;
    let (nf, mf, lf) = (n as f64, m as f64, la as f64);
    let v = (2.0 * mf + nf - 2.0).ln() + lg(nf / 2.0) + lg((nf + mf + lf - 2.0) / 2.0) + lg((mf - lf + 1.0) / 2.0)
        - lg((nf - 1.0) / 2.0)
        - lg(0.5)
        - lg((mf - lf + 2.0) / 2.0)
        - lg((nf + mf + lf - 1.0) / 2.0);
    Ok(v.exp())
}

pub fn res_block_formula_parity_forbidden(m: usize, l: i64) -> bool {
    (m as i64 - l.abs()) % 2 != 0
}

/// Multiplier converting the closed-form value to the probability-measure
/// convention: the numeric m = l = 0 block has norm 1 (constants restrict to
/// constants), so the calibration is 1 / formula(n, 0, 0).
pub fn res_calibration(n: usize) -> Result<f64> {
    Ok(1.0 / res_block_norm_formula(n, 0, 0)?)
}

/// Matrix of Res (L² orthonormal bases): degrees ≤ src.m_max on S^{n−1} to
/// degrees ≤ dst.m_max on S^{n−2}.
pub fn res_matrix(src: &HarmonicAnalyzer, dst: &HarmonicAnalyzer) -> Result<DMatrix<f64>> {
    if src.n != dst.n + 1 {
        return Err(LabError::DimensionMismatch(src.n, dst.n + 1));
    }
    let nodes = &dst.quad.nodes;
    let mut e = DMatrix::zeros(nodes.len(), src.nbasis());
    for (i, y) in nodes.iter().enumerate() {
        let mut x = Vec::with_capacity(src.n);
        x.push(0.0);
        x.extend_from_slice(y);
        let w = dst.quad.weights[i];
        for (j, v) in src.evaluator.eval_all(&x).into_iter().enumerate() {
            e[(i, j)] = w * v;
        }
    }
    Ok(dst.synthesis_matrix().transpose() * e)
}

/// Rows of V_l inside the S^{n−2} analyzer: the full degree-|l| block, or
/// for S¹ the single signed label.
fn vl_rows(dst: &HarmonicAnalyzer, l: i64) -> Vec<usize> {
    let la = l.unsigned_abs() as usize;
    let r = dst.degree_range(la);
    if dst.n == 2 && la > 0 {
        r.filter(|&i| dst.labels[i].0[0] == l).collect()
    } else {
        r.collect()
    }
}

/// ‖Res_{m,l}‖ in L² (largest singular value of the projected block), by quadrature.
pub fn res_block_norm_numeric(n: usize, m: usize, l: i64) -> Result<f64> {
    let la = l.unsigned_abs() as usize;
    if la > m {
        return Err(LabError::Parity { m, l });
    }
    let src = HarmonicAnalyzer::new(n, m, Some(2 * m + 4))?;
    let dst = HarmonicAnalyzer::new(n - 1, m, Some(2 * m + 4))?;
    Ok(res_block_from_matrix(&res_matrix(&src, &dst)?, &src, &dst, m, l))
}

pub fn res_block_from_matrix(r: &DMatrix<f64>, src: &HarmonicAnalyzer, dst: &HarmonicAnalyzer, m: usize, l: i64) -> f64 {
    let rows = vl_rows(dst, l);
    let cols: Vec<usize> = src.degree_range(m).collect();
    let blk = DMatrix::from_fn(rows.len(), cols.len(), |i, j| r[(rows[i], cols[j])]);
    spectral_norm(&blk)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockNorms {
    pub m: usize,
    pub l: i64,
    pub l2_norm: f64,
    pub hilbert_norm: f64,
    pub sobolev_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockNormTable {
    pub n: usize,
    pub nu: f64,
    pub s: f64,
    pub entries: Vec<BlockNorms>,
}

/// Exact weight factor w♭_s(l)·d♭_l / (w_s(m)·d_m) relating the L² and Sobolev scales.
pub fn sobolev_block_factor(n: usize, nu: f64, s: f64, m: usize, l: i64) -> Result<f64> {
    let la = l.unsigned_abs() as usize;
    Ok(sobolev_weight_flat(n, nu, s, la)? * d_flat(n, nu, la)? / (sobolev_weight_raw(n, nu, s, m)? * d_coefficient(n, nu, m)?))
}

pub fn hilbert_block_factor(n: usize, nu: f64, m: usize, l: i64) -> Result<f64> {
    let la = l.unsigned_abs() as usize;
    Ok(d_flat(n, nu, la)? / d_coefficient(n, nu, m)?)
}

/// All three scales for m ≤ m_max, |l| ≤ m (l ≥ 0 only when n ≥ 4), from the
/// calibrated closed form.
pub fn block_norm_table(n: usize, nu: f64, s: f64, m_max: usize) -> Result<BlockNormTable> {
    let cal = res_calibration(n)?;
    let mut entries = Vec::new();
    for m in 0..=m_max {
        let lo = if n == 3 { -(m as i64) } else { 0 };
        for l in lo..=(m as i64) {
            let l2 = (res_block_norm_formula(n, m, l)? * cal).sqrt();
            entries.push(BlockNorms {
                m,
                l,
                l2_norm: l2,
                hilbert_norm: l2 * hilbert_block_factor(n, nu, m, l)?.sqrt(),
                sobolev_norm: l2 * sobolev_block_factor(n, nu, s, m, l)?.sqrt(),
            });
        }
    }
    Ok(BlockNormTable { n, nu, s, entries })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchingSum {
    pub l: i64,
    pub m_cutoff: usize,
    pub partial_sum: f64,
    /// Integral-test tail estimate; +∞ when the terms do not decay fast enough.
    pub tail_bound: f64,
    pub first_term: f64,
    pub divergent: bool,
}

/// Σ_{m ≥ |l|, m−l even, m ≤ cutoff} ‖Res_{m,l}‖²_op (Sobolev scale) plus a
/// tail estimate. Terms behave like m^{−(2ν+2s)}, so the tail is summable iff
/// 2ν + 2s > 1; beyond the cutoff the last term's power-law envelope is
/// integrated.
pub fn branching_sum(ctx: &RepContext, l: i64, m_cutoff: usize) -> Result<BranchingSum> {
    branching_sum_raw(ctx.n, ctx.nu, ctx.s, l, m_cutoff)
}

pub fn branching_sum_raw(n: usize, nu: f64, s: f64, l: i64, m_cutoff: usize) -> Result<BranchingSum> {
    let cal = res_calibration(n)?;
    let la = l.unsigned_abs() as usize;
    if m_cutoff < la {
        return Err(LabError::Range(format!("cutoff {m_cutoff} below |l| = {la}")));
    }
    let mut terms = Vec::new();
    let mut last = (la, 0.0);
    let mut m = la;
    while m <= m_cutoff {
        let t = res_block_norm_formula(n, m, l)? * cal * sobolev_block_factor(n, nu, s, m, l)?;
        terms.push(t);
        last = (m, t);
        m += 2;
    }
    let first_term = terms[0];
    let partial_sum = compensated_sum(terms);
    let p = 2.0 * nu + 2.0 * s;
    let (tail_bound, divergent) = if p <= 1.0 {
        (f64::INFINITY, true)
    } else {
        let (mm, t) = (last.0 as f64, last.1);
        (t * mm.powf(p) * (mm + 1.0).powf(1.0 - p) / (2.0 * (p - 1.0)), false)
    };
    Ok(BranchingSum { l, m_cutoff, partial_sum, tail_bound, first_term, divergent })
}

#[derive(Debug, Clone, Serialize)]
pub struct LSweep {
    pub sums: Vec<BranchingSum>,
    pub sup: f64,
    pub inf: f64,
    pub ratio: f64,
    pub divergent: bool,
}

/// Branching sums for l = 0..=l_max; sup/inf are over the estimated totals
/// (partial sum + tail).
pub fn branching_sweep(n: usize, nu: f64, s: f64, l_max: usize, m_cutoff: usize) -> Result<LSweep> {
    let sums: Result<Vec<BranchingSum>> =
        (0..=l_max as i64).map(|l| branching_sum_raw(n, nu, s, l, m_cutoff)).collect();
    let sums = sums?;
    let totals: Vec<f64> = sums.iter().map(|b| b.partial_sum + b.tail_bound).collect();
    let sup = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let inf = totals.iter().cloned().fold(f64::INFINITY, f64::min);
    let divergent = sums.iter().any(|b| b.divergent);
    Ok(LSweep { ratio: sup / inf, sup, inf, divergent, sums })
}

#[derive(Debug, Clone, Serialize)]
pub struct OpNormReport {
    pub m_cutoff: usize,
    pub l_max: usize,
    /// sup_l Σ_m ‖Res_{m,l}‖²_op from the calibrated formula.
    pub identity_sup: f64,
    /// ‖Res‖² of the assembled weighted matrix (SVD).
    pub matrix_norm_sq: f64,
    /// Power-iteration estimate of ‖Res‖².
    pub power_norm_sq: f64,
    /// max over random f of ‖Res f‖² / ‖f‖² (must not exceed the norm).
    pub random_max_ratio_sq: f64,
    pub relative_gap: f64,
}

/// Compare sup_l Σ_m ‖Res_{m,l}‖² with the norm of the truncated operator
/// W^s_G(ℋ_{−ν}) → W^s_H(ℋ♭) assembled by quadrature.
pub fn operator_norm_identity_check(ctx: &RepContext, l_max: usize, m_cutoff: usize, seed: u64) -> Result<OpNormReport> {
    ctx.check_branching_range()?;
    let (n, nu, s) = (ctx.n, ctx.nu, ctx.s);
    let src = HarmonicAnalyzer::new(n, m_cutoff, Some(2 * m_cutoff + 4))?;
    let dst = HarmonicAnalyzer::new(n - 1, l_max, Some(2 * m_cutoff + 4))?;
    let r = res_matrix(&src, &dst)?;
    let mut wr = r.clone();
    for j in 0..src.nbasis() {
        let m = src.labels[j].degree();
        let wj = (sobolev_weight_raw(n, nu, s, m)? * d_coefficient(n, nu, m)?).sqrt();
        for i in 0..dst.nbasis() {
            let l = dst.labels[i].degree();
            let wi = (sobolev_weight_flat(n, nu, s, l)? * d_flat(n, nu, l)?).sqrt();
            wr[(i, j)] *= wi / wj;
        }
    }
    let matrix_norm_sq = spectral_norm(&wr).powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gram = wr.transpose() * &wr;
    let mut v = DVector::from_fn(src.nbasis(), |_, _| rng.random::<f64>() - 0.5);
    v /= v.norm();
    let mut power = 0.0;
    for _ in 0..2000 {
        let w = &gram * &v;
        power = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        v = w / nw;
    }
    let mut random_max: f64 = 0.0;
    for _ in 0..100 {
        let f = DVector::from_fn(src.nbasis(), |_, _| rng.random::<f64>() - 0.5);
        random_max = random_max.max((&wr * &f).norm_squared() / f.norm_squared());
    }
    let cal = res_calibration(n)?;
    let mut identity_sup: f64 = 0.0;
    let lo = if n == 3 { -(l_max as i64) } else { 0 };
    for l in lo..=(l_max as i64) {
        let mut acc = 0.0;
        let mut m = l.unsigned_abs() as usize;
        while m <= m_cutoff {
            acc += res_block_norm_formula(n, m, l)? * cal * sobolev_block_factor(n, nu, s, m, l)?;
            m += 2;
        }
        identity_sup = identity_sup.max(acc);
    }
    Ok(OpNormReport {
        m_cutoff,
        l_max,
        identity_sup,
        matrix_norm_sq,
        power_norm_sq: power,
        random_max_ratio_sq: random_max,
        relative_gap: (identity_sup - matrix_norm_sq).abs() / identity_sup,
    })
}

/// max over the S^{n−2} quadrature nodes of |Res(π(h)f) − π♭(h)(Res f)|,
/// with h ∈ SO(n−1,1) given in the (n+1)×(n+1) embedding (fixing e_0).
pub fn res_equivariance_defect(ctx: &RepContext, h: &GroupElement, f: &SphericalFunction) -> Result<f64> {
    let n = ctx.n;
    if (h.mat.column(0) - DVector::from_fn(n + 1, |i, _| if i == 0 { 1.0 } else { 0.0 })).amax() > 1e-12 {
        return Err(LabError::Invalid("h must fix e_0".into()));
    }
    let hflat = GroupElement::from_matrix_unchecked(n - 1, h.mat.view((1, 1), (n, n)).into_owned());
    let ctx_flat = RepContext::new(n - 1, ctx.nu - 0.5, ctx.m_max, ctx.s)?;
    let rf = crate::harmonics::restrict(f, &ctx.analyzer, &ctx_flat.analyzer)?;
    let hinv = h.inverse();
    let hflat_inv = hflat.inverse();
    let mut worst: f64 = 0.0;
    for y in &ctx_flat.analyzer.quad.nodes {
        let mut x = vec![0.0];
        x.extend_from_slice(y);
        let lhs = pi_eval(ctx, &hinv, f, &x)?;
        let rhs = pi_eval(&ctx_flat, &hflat_inv, &rf, y)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantDistribution {
    pub order_s: f64,
    /// Dual coefficients on the basis of degrees ≤ truncation.
    pub coeffs: Vec<f64>,
    pub yn_eigenvalue: f64,
    /// sup_f |𝒟(dπ(U)f)| / (‖f‖_s ‖𝒟‖_{−s}) over the truncated test space.
    pub residual: f64,
}

/// U-invariant distributions of the n = 2 model truncated to degrees ≤ m_max.
///
/// A = dπ(U) maps degrees ≤ M−1 into degrees ≤ M, so its left null space
/// contains the restriction of every invariant distribution. Candidates are
/// the right singular vectors of the Sobolev-weighted Aᵀ with singular value
/// ≤ `tolerance`; within their span the Y_n action is diagonalized through
/// 𝒟(dπ(Y_n)f) = μ 𝒟(f).
pub fn invariant_distributions(ctx: &RepContext, tolerance: f64) -> Result<Vec<InvariantDistribution>> {
    if ctx.n != 2 {
        return Err(LabError::InvalidDimension { got: ctx.n, min: 2 });
    }
    if !(ctx.nu > 0.0 && ctx.nu < 0.5) {
        return Err(LabError::Range(format!("need 0 < nu < 1/2, got {}", ctx.nu)));
    }
    let mo = ctx.m_max;
    let mi = mo - 1;
    let a = &ctx.analyzer;
    let nin = a.degree_start[mi + 1];
    let nout = a.degree_start[mo + 1];
    let amat = dpi_matrix_exact(ctx, &liealg::u(2), mi, mo)?;
    let bmat = dpi_matrix_exact(ctx, &liealg::y_n(2), mi, mo)?;
    let omega = |j: usize| -> Result<f64> {
        let m = a.labels[j].degree();
        Ok(d_coefficient(2, ctx.nu, m)? * sobolev_weight(ctx, m)?)
    };
    let win: Vec<f64> = (0..nin).map(omega).collect::<Result<_>>()?;
    let wout: Vec<f64> = (0..nout).map(omega).collect::<Result<_>>()?;
    let aw = DMatrix::from_fn(nout, nin, |i, j| amat[(i, j)] * (wout[i] / win[j]).sqrt());
    // right singular vectors of awᵀ, padded square so V is complete
    let mut sq = DMatrix::zeros(nout, nout);
    sq.view_mut((0, 0), (nin, nout)).copy_from(&aw.transpose());
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max();
    let cand: Vec<DVector<f64>> = (0..nout)
        .filter(|&i| svd.singular_values[i] <= tolerance * smax.max(1.0))
        .map(|i| {
            let ct = vt.row(i).transpose();
            DVector::from_fn(nout, |k, _| ct[k] * wout[k].sqrt())
        })
        .collect();
    if cand.is_empty() {
        return Ok(Vec::new());
    }
    let z = DMatrix::from_columns(&cand);
    let ez = z.rows(0, nin).into_owned();
    let bz = bmat.transpose() * &z;
    let m1 = ez.transpose() * &bz;
    let m2 = ez.transpose() * &ez;
    let m2i = m2.clone().try_inverse().ok_or_else(|| LabError::Numeric("degenerate candidate span".into()))?;
    let k = m1.nrows();
    let evs = (&m2i * &m1).complex_eigenvalues();
    let mut out = Vec::new();
    for ev in evs.iter() {
        let mu = ev.re;
        let pencil = &m1 - &m2 * mu;
        let ns = crate::linalg::nullspace(&pencil, 1e-6);
        let cvec = if ns.ncols() > 0 {
            ns.column(0).into_owned()
        } else {
            let svdp = pencil.svd(false, true);
            let vtp = svdp.v_t.expect("v_t requested");
            let imin = (0..k).min_by(|&i, &j| svdp.singular_values[i].total_cmp(&svdp.singular_values[j])).unwrap();
            vtp.row(imin).transpose()
        };
        let c = &z * cvec;
        let ct = DVector::from_fn(nout, |i, _| c[i] / wout[i].sqrt());
        let residual = (aw.transpose() * &ct).norm() / ct.norm();
        out.push(InvariantDistribution { order_s: ctx.s, coeffs: c.iter().copied().collect(), yn_eigenvalue: mu, residual });
    }
    out.sort_by(|a, b| a.yn_eigenvalue.total_cmp(&b.yn_eigenvalue));
    Ok(out)
}
