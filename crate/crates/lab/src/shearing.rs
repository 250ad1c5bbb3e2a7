//! Interval bookkeeping for nearby unipotent orbits.
//!
//! Closeness is measured with the right-invariant Frobenius distance
//! d(g, h) = ‖g h⁻¹ − I‖_F, so the displacement of the pair (u^s g_x, u^{t(s)} g_y)
//! is D(s) = u^{t(s)} (g_y g_x⁻¹) u^{−s}.

use crate::liealg::{self, AlgebraElement, GroupElement, WeightDecomposition};
use crate::stats::{loglog_fit, LinearFit};
use crate::{LabError, Result};
use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalFamily {
    /// Ordered, disjoint closed intervals; the last may end at +∞.
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalFamily {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in intervals.windows(2) {
            if w[0].1 >= w[1].0 {
                return Err(LabError::Invalid(format!("overlapping intervals {:?} and {:?}", w[0], w[1])));
            }
        }
        if intervals.iter().any(|(a, b)| !(a <= b) || a.is_nan()) {
            return Err(LabError::Invalid("malformed interval".into()));
        }
        Ok(Self { intervals })
    }

    pub fn half_line() -> Self {
        Self { intervals: vec![(0.0, f64::INFINITY)] }
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn unbounded(&self) -> bool {
        self.intervals.last().is_some_and(|iv| iv.1.is_infinite())
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.intervals.windows(2).map(|w| w[1].0 - w[0].1).collect()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= t && t <= b)
    }

    /// l̄₁: the end of the interval containing 0 (0 if 0 is not covered).
    pub fn first_end(&self) -> f64 {
        match self.intervals.first() {
            Some(&(a, b)) if a <= 0.0 => b,
            _ => 0.0,
        }
    }

    /// Pointwise intersection of two families.
    pub fn intersect(&self, other: &IntervalFamily) -> IntervalFamily {
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let (lo, hi) = (a.max(c), b.min(d));
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        // touching pieces of the same set are merged
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for iv in out {
            match merged.last_mut() {
                Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
                _ => merged.push(iv),
            }
        }
        IntervalFamily { intervals: merged }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShearingParams {
    /// Hölder exponent η ∈ (0,1).
    pub eta: f64,
    /// ρ of the effective gap.
    pub gap_exponent: f64,
    /// Solovay constant θ ∈ (0,1).
    pub theta: f64,
    /// Closeness scale ε.
    pub eps: f64,
    /// Explicit constant standing in for ≪.
    pub slack_c: f64,
    /// Hölder condition applies for separations ≥ m.
    pub min_separation: f64,
}

impl ShearingParams {
    pub fn new(eta: f64, gap_exponent: f64, eps: f64, slack_c: f64) -> Result<Self> {
        let theta = solovay_theta(gap_exponent, default_proof_c(gap_exponent), 0)?.theta_lower;
        let p = Self { eta, gap_exponent, theta, eps, slack_c, min_separation: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(LabError::Range(format!("eta must lie in (0,1), got {}", self.eta)));
        }
        if !(self.gap_exponent > 0.0 && self.gap_exponent < 1.0) {
            return Err(LabError::Range(format!("gap exponent must lie in (0,1), got {}", self.gap_exponent)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(LabError::Range(format!("theta must lie in (0,1), got {}", self.theta)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(LabError::Range(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        if !(self.slack_c > 0.0) {
            return Err(LabError::Range(format!("slack constant must be positive, got {}", self.slack_c)));
        }
        Ok(())
    }
}

fn trim(p: &[f64]) -> &[f64] {
    let mut k = p.len();
    while k > 0 && p[k - 1] == 0.0 {
        k -= 1;
    }
    &p[..k]
}

pub fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Real roots of Σ p_i tⁱ through the companion matrix.
pub fn real_roots(p: &[f64]) -> Vec<f64> {
    let p = trim(p);
    let k = p.len().saturating_sub(1);
    if k == 0 {
        return Vec::new();
    }
    let lead = p[k];
    let mut c = DMatrix::zeros(k, k);
    for i in 1..k {
        c[(i, i - 1)] = 1.0;
    }
    for i in 0..k {
        c[(i, k - 1)] = -p[i] / lead;
    }
    let scale = p.iter().map(|v| v.abs()).fold(0.0, f64::max) / lead.abs();
    c.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()).max(scale.sqrt()))
        .map(|z| z.re)
        .collect()
}

fn bisect<F: Fn(f64) -> bool>(inside: F, mut lo: f64, mut hi: f64) -> f64 {
    // inside(lo) != inside(hi); returns the crossing point
    let a = inside(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi.abs().max(1e-300) {
            break;
        }
        if inside(mid) == a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// {t ≥ 0 : pred(t)} from a sorted breakpoint grid, refining every sign change
/// by bisection. `t_max` must be such that the set beyond it is decided by
/// `tail_inside`.
fn sublevel_from_grid<F: Fn(f64) -> bool + Copy>(pred: F, grid: &[f64], tail_inside: bool) -> IntervalFamily {
    let mut intervals = Vec::new();
    let mut start: Option<f64> = if pred(grid[0]) { Some(grid[0]) } else { None };
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ia, ib) = (pred(a), pred(b));
        if ia != ib {
            let x = bisect(pred, a, b);
            if ib {
                start = Some(x);
            } else if let Some(s) = start.take() {
                intervals.push((s, x));
            }
        }
    }
    if let Some(s) = start {
        let end = if tail_inside { f64::INFINITY } else { *grid.last().unwrap() };
        intervals.push((s, end));
    }
    IntervalFamily { intervals }
}

fn breakpoint_grid(t_max: f64, extra: &[f64]) -> Vec<f64> {
    breakpoint_grid_with_density(t_max, extra, DEFAULT_GRID_DENSITY)
}

/// Log-spaced sample points per decade used to locate sign changes.
pub const DEFAULT_GRID_DENSITY: usize = 400;

fn breakpoint_grid_with_density(t_max: f64, extra: &[f64], per_decade: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    let lo = 1e-12f64.min(t_max * 1e-12).max(1e-300);
    let decades = (t_max / lo).log10().max(1.0);
    let npts = (decades * per_decade as f64).ceil() as usize;
    for i in 0..=npts {
        g.push(lo * (t_max / lo).powf(i as f64 / npts as f64));
    }
    g.extend(extra.iter().filter(|x| **x > 0.0 && **x < t_max && x.is_finite()));
    g.sort_by(|a, b| a.total_cmp(b));
    g.dedup();
    g
}

/// {t ≥ 0 : |p(t)| ≤ C·max(ε, t^{1−η})} with p given by ascending coefficients.
pub fn power_sublevel_intervals(p: &[f64], eps: f64, eta: f64, slack_c: f64) -> Result<IntervalFamily> {
    power_sublevel_intervals_with_density(p, eps, eta, slack_c, DEFAULT_GRID_DENSITY)
}

pub fn power_sublevel_intervals_with_density(
    p: &[f64],
    eps: f64,
    eta: f64,
    slack_c: f64,
    per_decade: usize,
) -> Result<IntervalFamily> {
    if per_decade == 0 {
        return Err(LabError::Range("grid density must be positive".into()));
    }
    if !(eta > 0.0 && eta < 1.0) || !(eps > 0.0) || !(slack_c > 0.0) {
        return Err(LabError::Range("need eta in (0,1), eps > 0, slack_C > 0".into()));
    }
    let p = trim(p);
    if p.is_empty() {
        return Ok(IntervalFamily::half_line());
    }
    let k = p.len() - 1;
    let inside = move |t: f64| poly_eval(p, t).abs() <= slack_c * eps.max(t.powf(1.0 - eta));
    let t_star = eps.powf(1.0 / (1.0 - eta));
    if k == 0 {
        let v = p[0].abs();
        if v <= slack_c * eps {
            return Ok(IntervalFamily::half_line());
        }
        return Ok(IntervalFamily { intervals: vec![((v / slack_c).powf(1.0 / (1.0 - eta)), f64::INFINITY)] });
    }
    let s: f64 = p[..k].iter().map(|v| v.abs()).sum();
    let t_max = 2.0 * [1.0, t_star, ((s + slack_c * (1.0 + eps)) / p[k].abs()).powf(1.0 / eta)]
        .into_iter()
        .fold(0.0, f64::max);
    let mut extra = vec![t_star];
    let mut shifted = p.to_vec();
    for sign in [1.0, -1.0] {
        shifted[0] = p[0] + sign * slack_c * eps;
        extra.extend(real_roots(&shifted));
    }
    extra.extend(real_roots(p));
    let dp: Vec<f64> = (1..=k).map(|i| i as f64 * p[i]).collect();
    extra.extend(real_roots(&dp));
    Ok(sublevel_from_grid(inside, &breakpoint_grid_with_density(t_max, &extra, per_decade), false))
}

/// The proof's matrix M_{ji} = (j/k)^{i−1+η}, i, j = 1..k.
pub fn vandermonde_matrix(k: usize, eta: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |j, i| ((j + 1) as f64 / k as f64).powf(i as f64 + eta))
}

/// Certified constants C_i(k,η) with |v_i|·l̄₁^{i−1+η} ≤ C_i for i = 1..k, valid
/// whenever |v_0| ≤ slack_C·ε and l̄₁/k ≥ ε^{1/(1−η)}: on the sample points
/// |F| ≤ 2·slack_C, so C_i = 2·slack_C·Σ_j |(M⁻¹)_{ij}|.
pub fn vandermonde_constants(k: usize, eta: f64, slack_c: f64) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let inv = vandermonde_matrix(k, eta)
        .try_inverse()
        .ok_or_else(|| LabError::Numeric("singular Vandermonde matrix".into()))?;
    Ok((0..k).map(|i| 2.0 * slack_c * inv.row(i).iter().map(|v| v.abs()).sum::<f64>()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VandermondeReport {
    pub trials: usize,
    /// Trials inside the certified range (bounded first interval, l̄₁/k ≥ ε^{1/(1−η)}).
    pub checked: usize,
    pub violations: usize,
    /// max over checked trials and i of |v_i|·l̄₁^{i−1+η} / C_i.
    pub worst_ratio: f64,
    pub constants: Vec<f64>,
}

/// Random degree-≤k polynomials with |v_0| ≤ slack_C·ε and log-uniform higher
/// coefficients of random sign, checked against the certified constants.
pub fn vandermonde_certificate(trials: usize, k: usize, eta: f64, eps: f64, slack_c: f64, seed: u64) -> Result<VandermondeReport> {
    use rand::{Rng, SeedableRng};
    let cs = vandermonde_constants(k, eta, slack_c)?;
    let floor = eps.powf(1.0 / (1.0 - eta));
    let ratios: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut p = vec![slack_c * eps * (2.0 * rng.random::<f64>() - 1.0)];
            for _ in 0..k {
                let mag = 10f64.powf(-8.0 + 12.0 * rng.random::<f64>());
                p.push(if rng.random::<bool>() { mag } else { -mag });
            }
            let lbar = power_sublevel_intervals(&p, eps, eta, slack_c)?.first_end();
            if !lbar.is_finite() || lbar / (k as f64) < floor {
                return Ok(None);
            }
            let r = (1..=k)
                .map(|j| p[j].abs() * lbar.powf(j as f64 - 1.0 + eta) / cs[j - 1])
                .fold(0.0, f64::max);
            Ok(Some(r))
        })
        .collect::<Result<_>>()?;
    let checked: Vec<f64> = ratios.into_iter().flatten().collect();
    Ok(VandermondeReport {
        trials,
        checked: checked.len(),
        violations: checked.iter().filter(|r| **r > 1.0).count(),
        worst_ratio: checked.iter().cloned().fold(0.0, f64::max),
        constants: cs,
    })
}

/// ξ(ρ,k) from the recursion l̄_{j+1} ≤ 3 l̄_j^{1+ρ}: each non-gapped step
/// divides the exponent by 1+ρ, so ξ = (1+ρ)^{−(k−1)}.
pub fn xi_recursion(rho: f64, k: usize) -> f64 {
    (1.0 + rho).powi(-(k.saturating_sub(1) as i32))
}

#[derive(Debug, Clone, Serialize)]
pub struct So21Closeness {
    pub family: IntervalFamily,
    /// |b| ≤ C·l̄₁^{−1−η} and |a−d| ≤ C·l̄₁^{−η} with the Vandermonde constants.
    pub bounds_ok: bool,
}

/// Sublevel set of |−b s² + (a−d) s| ≤ C·max(ε, s^{1−η}).
pub fn so21_closeness_intervals(h: &Matrix2<f64>, params: &ShearingParams) -> Result<So21Closeness> {
    let (a, b, c, d) = (h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
    let eps = params.eps;
    if !(b.abs() < eps && c.abs() < eps && (a - 1.0).abs() < eps && (d - 1.0).abs() < eps) {
        return Err(LabError::Domain(format!("h = [[{a}, {b}], [{c}, {d}]] is not ε-close to the identity")));
    }
    let family = power_sublevel_intervals(&[0.0, a - d, -b], eps, params.eta, params.slack_c)?;
    let l1 = family.first_end();
    let bounds_ok = if family.unbounded() && family.len() == 1 {
        true
    } else {
        let cs = vandermonde_constants(2, params.eta, params.slack_c)?;
        let ok_range = l1 / 2.0 >= eps.powf(1.0 / (1.0 - params.eta));
        !ok_range || ((a - d).abs() <= cs[0] * l1.powf(-params.eta) && b.abs() <= cs[1] * l1.powf(-1.0 - params.eta))
    };
    Ok(So21Closeness { family, bounds_ok })
}

/// {s ≥ 0 : ‖Ad(u^s)·v‖ ≤ C·ε} for v = Σ b_i v_i in one weight string, with the
/// norm taken on the weight coordinates.
pub fn vperp_closeness_intervals(b: &[f64], eps: f64, slack_c: f64) -> Result<IntervalFamily> {
    if b.is_empty() || b.len() > 3 {
        return Err(LabError::Invalid(format!("weight strings have length 1..=3, got {}", b.len())));
    }
    if b.iter().all(|v| *v == 0.0) {
        return Ok(IntervalFamily::half_line());
    }
    // q(s) = Σ_k c_k(s)², c_k(s) = Σ_{i≤k} b_i C(k,i) s^{k−i}
    let deg = b.len() - 1;
    let mut q = vec![0.0; 2 * deg + 1];
    for k in 0..=deg {
        let mut ck = vec![0.0; k + 1];
        for i in 0..=k {
            ck[k - i] += b[i] * crate::linalg::binomial(k, i);
        }
        for (i, x) in ck.iter().enumerate() {
            for (j, y) in ck.iter().enumerate() {
                q[i + j] += x * y;
            }
        }
    }
    let thr = (slack_c * eps).powi(2);
    let qt = trim(&q).to_vec();
    if qt.len() == 1 {
        return Ok(if qt[0] <= thr { IntervalFamily::half_line() } else { IntervalFamily::empty() });
    }
    let inside = |s: f64| poly_eval(&qt, s) <= thr;
    let mut shifted = qt.clone();
    shifted[0] -= thr;
    let roots: Vec<f64> = real_roots(&shifted);
    let k = qt.len() - 1;
    let s_sum: f64 = qt[..k].iter().map(|v| v.abs()).sum::<f64>() + thr;
    let t_max = 2.0 * (1.0f64).max(s_sum / qt[k].abs());
    Ok(sublevel_from_grid(inside, &breakpoint_grid(t_max, &roots), false))
}

/// g = exp(α)·exp(v) with α ∈ 𝔰𝔩₂ and v ∈ V⊥, by fixed-point iteration on
/// α ← α + P_𝔰𝔩₂(log(exp(−α) g)).
pub fn factor_sl2_vperp(g: &GroupElement, wd: &WeightDecomposition) -> Result<(AlgebraElement, AlgebraElement)> {
    let n = g.n;
    let proj = |x: &AlgebraElement| {
        let c = wd.coordinates(x);
        let s = wd.sl2_part[0].scale(c.sl2[0]).add(&wd.sl2_part[1].scale(c.sl2[1])).add(&wd.sl2_part[2].scale(c.sl2[2]));
        (s.clone(), x.sub(&s))
    };
    let mut alpha = proj(&liealg::log_principal(g)?).0;
    for _ in 0..200 {
        let rest = liealg::exp_matrix(&alpha.scale(-1.0)).mul(g);
        let (ds, v) = proj(&liealg::log_principal(&rest)?);
        alpha = alpha.add(&ds);
        if ds.norm() <= 1e-15 * (1.0 + alpha.norm()) {
            return Ok((alpha, v));
        }
    }
    let rest = liealg::exp_matrix(&alpha.scale(-1.0)).mul(g);
    let (ds, v) = proj(&liealg::log_principal(&rest)?);
    if ds.norm() > 1e-10 {
        return Err(LabError::Numeric(format!("sl2 ⊕ V⊥ factorization did not converge (n = {n})")));
    }
    Ok((alpha, v))
}

/// 2×2 image of h = exp(α), α ∈ 𝔰𝔩₂.
pub fn sl2_part_2x2(alpha: &AlgebraElement, wd: &WeightDecomposition) -> Matrix2<f64> {
    let c = wd.coordinates(alpha);
    liealg::sl2_to_2x2(c.sl2[0], c.sl2[1], c.sl2[2]).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct GCloseness {
    pub family: IntervalFamily,
    pub h_family: IntervalFamily,
    pub v_families: Vec<IntervalFamily>,
}

/// Intersection of the 𝔰𝔩₂ family of h with the V⊥ families of every weight
/// string of v, for g = h·exp(v).
pub fn g_closeness_intervals(g: &GroupElement, wd: &WeightDecomposition, params: &ShearingParams) -> Result<GCloseness> {
    if (&g.mat - DMatrix::identity(g.n + 1, g.n + 1)).norm() < 1e-300 {
        return Ok(GCloseness { family: IntervalFamily::half_line(), h_family: IntervalFamily::half_line(), v_families: vec![] });
    }
    let (alpha, v) = factor_sl2_vperp(g, wd)?;
    let h = sl2_part_2x2(&alpha, wd);
    let hf = so21_closeness_intervals(&h, params)?.family;
    let coords = wd.coordinates(&v);
    let mut family = hf.clone();
    let mut vfs = Vec::new();
    for b in &coords.b {
        let f = vperp_closeness_intervals(b, params.eps, params.slack_c)?;
        family = family.intersect(&f);
        vfs.push(f);
    }
    Ok(GCloseness { family, h_family: hf, v_families: vfs })
}

/// d(I,J) ≥ min(|I|,|J|)^{1+ρ}; the boundary case counts as gapped.
pub fn effective_gap(i: (f64, f64), j: (f64, f64), rho: f64) -> Result<bool> {
    let (first, second) = if i.0 <= j.0 { (i, j) } else { (j, i) };
    let d = second.0 - first.1;
    if d < 0.0 {
        return Err(LabError::Invalid(format!("intervals {i:?} and {j:?} overlap")));
    }
    let m = (i.1 - i.0).min(j.1 - j.0);
    Ok(d >= m.powf(1.0 + rho))
}

/// Solovay constant from the proof: per generation the bad fraction shrinks by
/// at most (1 + C(3/4)^{mρ})⁻¹, with C = 2·(4/3)^{1+3ρ} collecting l/(l−1) ≤ 2
/// and the (3/4)-scale bookkeeping.
pub fn default_proof_c(rho: f64) -> f64 {
    2.0 * (4.0f64 / 3.0).powf(1.0 + 3.0 * rho)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolovayTheta {
    /// Truncated product Π_{m<M}.
    pub theta_truncated: f64,
    /// Rigorous lower bound θ_M·exp(−tail).
    pub theta_lower: f64,
    /// Bound on −log(θ/θ_M): C q^M/(1−q), q = (3/4)^ρ.
    pub log_tail_bound: f64,
    pub terms: usize,
}

/// θ = Π_{m≥0}(1 + C q^m)⁻¹. With `tail_terms == 0` enough terms are taken to
/// push the log-tail bound below 1e−13.
pub fn solovay_theta(rho: f64, proof_c: f64, tail_terms: usize) -> Result<SolovayTheta> {
    if !(rho > 0.0) || !(proof_c > 0.0) {
        return Err(LabError::Range(format!("need rho > 0 and C > 0, got {rho}, {proof_c}")));
    }
    let q = 0.75f64.powf(rho);
    let terms = if tail_terms == 0 {
        let need = ((1e-13 * (1.0 - q) / proof_c).ln() / q.ln()).ceil();
        need.max(1.0) as usize
    } else {
        tail_terms
    };
    let mut log_theta = 0.0;
    for m in 0..terms {
        log_theta -= (proof_c * q.powi(m as i32)).ln_1p();
    }
    let tail = proof_c * q.powi(terms as i32) / (1.0 - q);
    Ok(SolovayTheta {
        theta_truncated: log_theta.exp(),
        theta_lower: (log_theta - tail).exp(),
        log_tail_bound: tail,
        terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SearchOutcome {
    /// A good interval longer than (3/4)λ.
    Found((f64, f64)),
    /// Bad measure ≥ θλ: no claim is made and nothing large exists.
    BadMeasureLarge { bad_measure: f64, threshold: f64 },
    /// Bad measure < θλ but a hypothesis fails; the failure is named.
    HypothesisViolated(String),
    /// All hypotheses hold, bad < θλ, and no large interval: a counterexample.
    Counterexample { bad_measure: f64, threshold: f64 },
}

/// Look for a good interval of length > (3/4)λ in a good/bad partition of an
/// interval of length λ.
pub fn large_interval_search(good: &IntervalFamily, bad: &IntervalFamily, lambda: f64, rho: f64) -> Result<SearchOutcome> {
    let theta = solovay_theta(rho, default_proof_c(rho), 0)?.theta_lower;
    large_interval_search_with_theta(good, bad, lambda, rho, theta)
}

pub fn large_interval_search_with_theta(
    good: &IntervalFamily,
    bad: &IntervalFamily,
    lambda: f64,
    rho: f64,
    theta: f64,
) -> Result<SearchOutcome> {
    let mut all: Vec<(f64, f64, bool)> = good.intervals.iter().map(|&(a, b)| (a, b, true)).collect();
    all.extend(bad.intervals.iter().map(|&(a, b)| (a, b, false)));
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    if all.is_empty() {
        return Err(LabError::Invalid("empty partition".into()));
    }
    let tol = 1e-9 * lambda.max(1.0);
    for w in all.windows(2) {
        if (w[1].0 - w[0].1).abs() > tol {
            return Err(LabError::Invalid(format!("partition pieces {:?} and {:?} do not abut", w[0], w[1])));
        }
    }
    let span = all.last().unwrap().1 - all[0].0;
    if (span - lambda).abs() > tol {
        return Err(LabError::Invalid(format!("partition covers length {span}, expected {lambda}")));
    }
    if let Some(&(a, b)) = good.intervals.iter().find(|(a, b)| b - a > 0.75 * lambda) {
        return Ok(SearchOutcome::Found((a, b)));
    }
    let bad_measure = bad.measure();
    let threshold = theta * lambda;
    if bad_measure >= threshold {
        return Ok(SearchOutcome::BadMeasureLarge { bad_measure, threshold });
    }
    if let Some(iv) = bad.intervals.iter().find(|(a, b)| b - a < 1.0) {
        return Ok(SearchOutcome::HypothesisViolated(format!("bad interval {iv:?} shorter than 1")));
    }
    for (i, gi) in good.intervals.iter().enumerate() {
        for gj in &good.intervals[i + 1..] {
            if !effective_gap(*gi, *gj, rho)? {
                return Ok(SearchOutcome::HypothesisViolated(format!("good intervals {gi:?} and {gj:?} lack an effective gap")));
            }
        }
    }
    if lambda <= 1.0 {
        return Ok(SearchOutcome::HypothesisViolated(format!("lambda = {lambda} ≤ 1")));
    }
    Ok(SearchOutcome::Counterexample { bad_measure, threshold })
}

/// Cantor-like extremal partition of [0, λ]: each bad gap of length L receives a
/// centred good interval of the largest length ℓ ≤ (3/4)λ with side gaps
/// (L−ℓ)/2 ≥ ℓ^{1+ρ}, as long as the side gaps stay ≥ 1.
pub fn cantor_adversarial(lambda: f64, rho: f64) -> (IntervalFamily, IntervalFamily) {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    let mut stack = vec![(0.0, lambda)];
    while let Some((a, b)) = stack.pop() {
        let l = b - a;
        // solve (L − ℓ)/2 = ℓ^{1+ρ}
        let f = |x: f64| (l - x) / 2.0 - x.powf(1.0 + rho);
        let mut ell = if f(0.75 * lambda) >= 0.0 { 0.75 * lambda } else { bisect(|x| f(x) >= 0.0, 0.0, l.min(0.75 * lambda)) };
        while f(ell) < 0.0 {
            ell *= 1.0 - 1e-12;
        }
        let side = (l - ell) / 2.0;
        if side < 1.0 || ell <= 0.0 {
            bad.push((a, b));
            continue;
        }
        good.push((a + side, b - side));
        stack.push((a, a + side));
        stack.push((b - side, b));
    }
    good.sort_by(|x, y| x.0.total_cmp(&y.0));
    bad.sort_by(|x, y| x.0.total_cmp(&y.0));
    (IntervalFamily { intervals: good }, IntervalFamily { intervals: bad })
}

/// Random good/bad partition of [0, λ] satisfying the large-interval
/// hypotheses: pairwise effective gaps between good intervals, good lengths
/// ≤ (3/4)λ, bad lengths ≥ 1. Good intervals are placed left to right, each
/// pushed far enough from all earlier ones; the rest is bad.
pub fn random_partition<R: rand::Rng>(lambda: f64, rho: f64, rng: &mut R) -> (IntervalFamily, IntervalFamily) {
    let log_uniform = |rng: &mut R, lo: f64, hi: f64| (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();
    let max_good = 0.75 * lambda;
    let mut good: Vec<(f64, f64)> = Vec::new();
    let mut bad = Vec::new();
    let mut cursor = 0.0;
    // half the time the partition opens with a good interval
    let mut first = rng.random::<bool>();
    loop {
        let len = log_uniform(rng, 1e-2f64.min(max_good), max_good);
        let mut start = if first { cursor } else { cursor + log_uniform(rng, 1.0, (lambda / 4.0).max(2.0)) };
        for &(a, b) in &good {
            // relative margin so the gap survives rounding of b + gap − b
            start = start.max(b + (b - a).min(len).powf(1.0 + rho) * (1.0 + 1e-9) + 1e-12 * b.abs());
        }
        if start > cursor && start - cursor < 1.0 {
            start = cursor + 1.0;
        }
        if start + len > lambda - 1.0 {
            break;
        }
        if start > cursor {
            bad.push((cursor, start));
        }
        good.push((start, start + len));
        cursor = start + len;
        first = false;
    }
    // every placed good interval ends by λ − 1, so the tail is a valid bad piece
    bad.push((cursor, lambda));
    (IntervalFamily { intervals: good }, IntervalFamily { intervals: bad })
}

#[derive(Debug, Clone, Serialize)]
pub enum TimeMap {
    Identity,
    /// t(s) = s + α((1+s)^{1−η} − 1), Hölder with constant α ≤ 1.
    Holder { alpha: f64, eta: f64 },
}

impl TimeMap {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            TimeMap::Identity => s,
            TimeMap::Holder { alpha, eta } => s + alpha * ((1.0 + s).powf(1.0 - eta) - 1.0),
        }
    }
}

/// Index pair violating |(t′−t)−(s′−s)| ≤ |s′−s|^{1−η} among pairs separated by ≥ m.
pub fn holder_violation(s: &[f64], t: &[f64], eta: f64, m: f64) -> Option<(usize, usize)> {
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let (ds, dt) = (s[j] - s[i], t[j] - t[i]);
            if ds.max(dt) < m {
                continue;
            }
            if (dt - ds).abs() > ds.abs().powf(1.0 - eta) * (1.0 + 1e-12) + 1e-12 {
                return Some((i, j));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonBlock {
    pub s_start: f64,
    pub s_end: f64,
    #[serde(skip)]
    pub gx: GroupElement,
    #[serde(skip)]
    pub gy: GroupElement,
    pub time_map: Vec<(f64, f64)>,
}

impl EpsilonBlock {
    pub fn interval(&self) -> (f64, f64) {
        (self.s_start, self.s_end)
    }
}

pub fn frobenius_distance(a: &GroupElement, b: &GroupElement) -> f64 {
    (a.mul(&b.inverse()).mat - DMatrix::identity(a.n + 1, a.n + 1)).norm()
}

/// β₀: greedy ε-blocks along sampled orbits, each capped at l̄₁ of the current
/// displacement's closeness family.
pub fn build_blocks(
    gx: &GroupElement,
    gy: &GroupElement,
    samples: &[(f64, f64)],
    params: &ShearingParams,
) -> Result<Vec<EpsilonBlock>> {
    params.validate()?;
    if samples.is_empty() {
        return Err(LabError::Invalid("no samples".into()));
    }
    let n = gx.n;
    if frobenius_distance(gy, gx) >= params.eps {
        return Err(LabError::Domain("starting points are not ε-close".into()));
    }
    let ss: Vec<f64> = samples.iter().map(|p| p.0).collect();
    let ts: Vec<f64> = samples.iter().map(|p| p.1).collect();
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
            return Err(LabError::Invalid("sample times must increase".into()));
        }
    }
    if let Some((i, j)) = holder_violation(&ss, &ts, params.eta, params.min_separation) {
        return Err(LabError::Invalid(format!("Hölder condition fails between samples {i} and {j}")));
    }
    let wd = liealg::sl2_weight_decompose(n)?;
    let xs: Vec<GroupElement> = ss.iter().map(|&s| liealg::u_t(n, s).mul(gx)).collect();
    let ys: Vec<GroupElement> = ts.iter().map(|&t| liealg::u_t(n, t).mul(gy)).collect();
    let close: Vec<bool> = xs.iter().zip(&ys).map(|(x, y)| frobenius_distance(y, x) < params.eps).collect();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        if !close[i] {
            i += 1;
            continue;
        }
        let disp = ys[i].mul(&xs[i].inverse());
        let lbar = g_closeness_intervals(&disp, &wd, params)?.family.first_end();
        let mut end = i;
        for j in i..samples.len() {
            if ss[j] - ss[i] > lbar {
                break;
            }
            if close[j] {
                end = j;
            }
        }
        blocks.push(EpsilonBlock {
            s_start: ss[i],
            s_end: ss[end],
            gx: xs[i].clone(),
            gy: ys[i].clone(),
            time_map: samples[i..=end].to_vec(),
        });
        i = end + 1;
    }
    Ok(blocks)
}

/// β_ρ: concatenate neighbouring blocks that lack an effective gap, repeating
/// until every consecutive pair is gapped.
pub fn merge_blocks(blocks: &[EpsilonBlock], params: &ShearingParams) -> Result<Vec<EpsilonBlock>> {
    let mut cur: Vec<EpsilonBlock> = blocks.to_vec();
    loop {
        let mut out: Vec<EpsilonBlock> = Vec::new();
        let mut changed = false;
        for b in cur {
            if let Some(last) = out.last_mut() {
                if !effective_gap(last.interval(), b.interval(), params.gap_exponent)? {
                    last.s_end = b.s_end;
                    last.time_map.extend(b.time_map);
                    changed = true;
                    continue;
                }
            }
            out.push(b);
        }
        cur = out;
        if !changed {
            return Ok(cur);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// Ũ: the upper-right entry b of the 2×2 picture.
    B,
    /// Y_n: the diagonal difference a − d.
    AMinusD,
    /// Lowest weight vector of the first ς = 2 string in V⊥.
    V0,
    /// U itself (same orbit).
    Flow,
}

impl std::str::FromStr for Direction {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" => Ok(Direction::B),
            "a-d" | "amd" => Ok(Direction::AMinusD),
            "v0" => Ok(Direction::V0),
            "flow" | "u" => Ok(Direction::Flow),
            _ => Err(LabError::Invalid(format!("unknown direction {s:?} (expected b, a-d, v0, flow)"))),
        }
    }
}

pub fn direction_element(n: usize, dir: Direction, wd: &WeightDecomposition) -> Result<AlgebraElement> {
    Ok(match dir {
        Direction::B => liealg::u_tilde(n),
        Direction::AMinusD => liealg::y_n(n),
        Direction::Flow => liealg::u(n),
        Direction::V0 => {
            let s = wd
                .vperp_components
                .iter()
                .find(|c| c.varsigma == 2)
                .ok_or(LabError::InvalidDimension { got: n, min: 3 })?;
            s.basis[0].scale(1.0 / s.basis[0].norm())
        }
    })
}

/// D(s) = u^{t(s)−s}·exp(Ad(u^s)Z) for the displacement exp(Z); Ad(u^s) is the
/// terminating series (ad U)³ = 0, which keeps tiny displacements accurate at
/// large s.
pub fn displacement_at(z: &AlgebraElement, s: f64, t: f64) -> GroupElement {
    let n = z.n;
    let uu = liealg::u(n);
    let z1 = liealg::bracket(&uu, z).expect("same dimension");
    let z2 = liealg::bracket(&uu, &z1).expect("same dimension");
    let adz = z.add(&z1.scale(s)).add(&z2.scale(0.5 * s * s));
    liealg::u_t(n, t - s).mul(&liealg::exp_matrix(&adz))
}

fn dist_to_identity(g: &GroupElement) -> f64 {
    (&g.mat - DMatrix::identity(g.n + 1, g.n + 1)).norm()
}

/// First s ∈ (0, λ] with d(D(s), e) ≥ ε (λ if none), on a geometric grid refined by bisection.
fn first_exit(z: &AlgebraElement, tm: &TimeMap, lambda: f64, eps: f64) -> f64 {
    let d = |s: f64| dist_to_identity(&displacement_at(z, s, tm.eval(s)));
    if d(0.0) >= eps {
        return 0.0;
    }
    let npts = 3000;
    let lo = lambda * 1e-9;
    let mut prev = 0.0;
    for i in 0..=npts {
        let s = lo * (lambda / lo).powf(i as f64 / npts as f64);
        if d(s) >= eps {
            return bisect(|x| d(x) < eps, prev, s);
        }
        prev = s;
    }
    lambda
}

#[derive(Debug, Clone, Serialize)]
pub struct ShearingRow {
    pub lambda: f64,
    pub s_lambda: f64,
    /// Extremal admissible displacement magnitude.
    pub delta: f64,
    pub abs_b: f64,
    pub abs_a_minus_d: f64,
    pub abs_c: f64,
    /// |b_i| of the first ς = 2 string (empty for n = 2).
    pub abs_v: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub entry: String,
    pub fit: Option<LinearFit>,
    pub predicted: f64,
    /// fitted slope ≤ predicted + 0.1
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShearingReport {
    pub n: usize,
    pub direction: Direction,
    pub rows: Vec<ShearingRow>,
    pub fits: Vec<ExponentFit>,
}

/// For each λ, push the displacement magnitude along `dir` to the largest value
/// for which an ε-block of length > (3/4)λ survives, then read off h_λ and v_λ
/// at the block end and regress their entries against λ.
pub fn shearing_experiment(
    n: usize,
    dir: Direction,
    seed_magnitude: f64,
    lambdas: &[f64],
    time_map: &TimeMap,
    params: &ShearingParams,
) -> Result<ShearingReport> {
    params.validate()?;
    if lambdas.len() < 2 {
        return Err(LabError::Invalid("need at least two lambda values".into()));
    }
    let wd = liealg::sl2_weight_decompose(n)?;
    let x = direction_element(n, dir, &wd)?;
    let x = x.scale(1.0 / x.norm());
    let eps = params.eps;
    let rows: Result<Vec<ShearingRow>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let ok = |delta: f64| first_exit(&x.scale(delta), time_map, lambda, eps) > 0.75 * lambda;
            let cap = eps / 4.0;
            let mut lo;
            let mut hi;
            let mut d = seed_magnitude.min(cap);
            if ok(d) {
                lo = d;
                loop {
                    let next = (lo * 10.0).min(cap);
                    if next <= lo {
                        hi = f64::NAN;
                        break;
                    }
                    if ok(next) {
                        lo = next;
                    } else {
                        hi = next;
                        break;
                    }
                }
            } else {
                hi = d;
                loop {
                    d /= 10.0;
                    if d < 1e-40 {
                        return Err(LabError::Domain(format!("no block longer than (3/4)λ at λ = {lambda}")));
                    }
                    if ok(d) {
                        lo = d;
                        break;
                    }
                    hi = d;
                }
            }
            if hi.is_finite() {
                for _ in 0..60 {
                    let mid = (lo * hi).sqrt();
                    if ok(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            let z = x.scale(lo);
            let s_l = first_exit(&z, time_map, lambda, eps).min(lambda);
            let disp = displacement_at(&z, s_l, time_map.eval(s_l));
            let (alpha, v) = factor_sl2_vperp(&disp, &wd)?;
            let h = sl2_part_2x2(&alpha, &wd);
            let vc = wd.coordinates(&v);
            let abs_v = vc
                .b
                .iter()
                .zip(&wd.vperp_components)
                .find(|(_, c)| c.varsigma == 2)
                .map(|(b, _)| b.iter().map(|x| x.abs()).collect())
                .unwrap_or_default();
            Ok(ShearingRow {
                lambda,
                s_lambda: s_l,
                delta: lo,
                abs_b: h[(0, 1)].abs(),
                abs_a_minus_d: (h[(0, 0)] - h[(1, 1)]).abs(),
                abs_c: h[(1, 0)].abs(),
                abs_v,
            })
        })
        .collect();
    let rows = rows?;
    let rho = params.gap_exponent;
    let lam: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let mut fits = Vec::new();
    let mut push = |entry: &str, ys: Vec<f64>, predicted: f64| {
        let fit = loglog_fit(&lam, &ys);
        let pass = fit.is_some_and(|f| f.slope <= predicted + 0.1);
        fits.push(ExponentFit { entry: entry.to_string(), fit, predicted, pass });
    };
    match dir {
        Direction::B => push("b", rows.iter().map(|r| r.abs_b).collect(), -1.0 - 2.0 * rho),
        Direction::AMinusD => push("a-d", rows.iter().map(|r| r.abs_a_minus_d).collect(), -2.0 * rho),
        Direction::V0 => push("v0", rows.iter().map(|r| r.abs_v.first().copied().unwrap_or(0.0)).collect(), -(1.0 + 2.0 * rho)),
        Direction::Flow => {}
    }
    Ok(ShearingReport { n, direction: dir, rows, fits })
}
