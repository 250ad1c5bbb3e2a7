//! Time changes of measured flows: the cocycle ξ(x,t) = ∫₀ᵗ τ(φ_s x) ds, its
//! inverse z, the reparametrized flow φ^τ_{ξ(x,t)}(x) = φ_t(x), transfer-function
//! conjugacies, and empirical mixing / cohomology diagnostics.
//!
//! Everything is ODE-free: the time-changed flow is evaluated through (ξ, z).

use crate::liealg;
use crate::stats::{loglog_fit, LinearFit};
use crate::{LabError, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub trait FlowSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn evolve(&self, x: &[f64], t: f64) -> Vec<f64>;
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
    /// A sample from the invariant probability measure, if there is one.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>>;
}

fn torus_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// x ↦ x + tα on ℝᵈ/ℤᵈ.
#[derive(Debug, Clone)]
pub struct TorusFlow {
    pub alpha: Vec<f64>,
}

impl FlowSystem for TorusFlow {
    fn dim(&self) -> usize {
        self.alpha.len()
    }
    fn evolve(&self, x: &[f64], t: f64) -> Vec<f64> {
        x.iter().zip(&self.alpha).map(|(xi, a)| (xi + t * a).rem_euclid(1.0)).collect()
    }
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| torus_gap(*x, *y).powi(2)).sum::<f64>().sqrt()
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        Some((0..self.dim()).map(|_| rng.random::<f64>()).collect())
    }
}

/// d independent circle rotations θ_i ↦ θ_i + ω_i t with speeds ω_i ~ Gamma(κ, 1)
/// frozen into the state [θ_1..θ_d, ω_1..ω_d]. For α = Π cos 2πθ_i the
/// correlation is Π ½Re(1 − 2πit)^{−κ}, decaying like t^{−dκ}.
#[derive(Debug, Clone)]
pub struct RandomSpeedRotation {
    pub kappa: f64,
    pub d: usize,
}

impl RandomSpeedRotation {
    pub fn known_rate(&self) -> f64 {
        self.kappa * self.d as f64
    }

    /// Exact correlation of Π cos 2πθ_i.
    pub fn exact_correlation(&self, t: f64) -> f64 {
        // Re (1 − iu)^{−κ} = (1+u²)^{−κ/2} cos(κ·atan u)
        let u = 2.0 * PI * t;
        let one = 0.5 * (1.0 + u * u).powf(-self.kappa / 2.0) * (self.kappa * u.atan()).cos();
        one.powi(self.d as i32)
    }
}

impl FlowSystem for RandomSpeedRotation {
    fn dim(&self) -> usize {
        2 * self.d
    }
    fn evolve(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        for i in 0..self.d {
            y[i] = (x[i] + x[self.d + i] * t).rem_euclid(1.0);
        }
        y
    }
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            s += torus_gap(a[i], b[i]).powi(2) + (a[self.d + i] - b[self.d + i]).powi(2);
        }
        s.sqrt()
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let g = Gamma::new(self.kappa, 1.0).ok()?;
        let mut v: Vec<f64> = (0..self.d).map(|_| rng.random::<f64>()).collect();
        v.extend((0..self.d).map(|_| g.sample(rng)));
        Some(v)
    }
}

/// g ↦ u^t g on SO(n,1); states are row-major (n+1)² matrices. No finite
/// invariant measure at group level.
#[derive(Debug, Clone)]
pub struct GroupFlow {
    pub n: usize,
}

impl FlowSystem for GroupFlow {
    fn dim(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }
    fn evolve(&self, x: &[f64], t: f64) -> Vec<f64> {
        let k = self.n + 1;
        let g = DMatrix::from_row_slice(k, k, x);
        let h = liealg::u_t(self.n, t).mat * g;
        h.transpose().as_slice().to_vec()
    }
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }
    fn sample(&self, _rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub k: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

/// c + Σ amp·cos(2π k·x + phase) on the first coordinates of the state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPoly {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| {
                    let kx: f64 = t.k.iter().zip(x).map(|(k, xi)| *k as f64 * xi).sum();
                    t.amp * (2.0 * PI * kx + t.phase).cos()
                })
                .sum::<f64>()
    }

    fn is_zero_mode(t: &TrigTerm) -> bool {
        t.k.iter().all(|k| *k == 0)
    }

    /// Mean under the Haar measure of the torus.
    pub fn mean(&self) -> f64 {
        self.constant + self.terms.iter().filter(|t| Self::is_zero_mode(t)).map(|t| t.amp * t.phase.cos()).sum::<f64>()
    }

    pub fn sup_bound(&self) -> f64 {
        self.constant + self.terms.iter().map(|t| t.amp.abs()).sum::<f64>()
    }

    pub fn inf_bound(&self) -> f64 {
        self.constant - self.terms.iter().map(|t| t.amp.abs()).sum::<f64>()
    }

    /// L² norm, assuming the wave vectors are pairwise distinct and nonzero.
    pub fn l2_norm(&self) -> f64 {
        (self.constant.powi(2) + self.terms.iter().map(|t| t.amp * t.amp / 2.0).sum::<f64>()).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            constant: self.constant * s,
            terms: self.terms.iter().map(|t| TrigTerm { amp: t.amp * s, ..t.clone() }).collect(),
        }
    }

    pub fn add(&self, o: &TrigPoly) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Self { constant: self.constant + o.constant, terms }
    }

    /// Derivative along x ↦ x + tα.
    pub fn derivative_along(&self, alpha: &[f64]) -> Self {
        Self {
            constant: 0.0,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let ka: f64 = t.k.iter().zip(alpha).map(|(k, a)| *k as f64 * a).sum();
                    TrigTerm { amp: 2.0 * PI * ka * t.amp, k: t.k.clone(), phase: t.phase + PI / 2.0 }
                })
                .collect(),
        }
    }

    /// h with U h = self − mean, by Fourier division (the toy cohomological equation).
    pub fn coboundary_solution(&self, alpha: &[f64]) -> Result<Self> {
        let mut terms = Vec::new();
        for t in self.terms.iter().filter(|t| !Self::is_zero_mode(t)) {
            let ka: f64 = t.k.iter().zip(alpha).map(|(k, a)| *k as f64 * a).sum();
            if ka.abs() < 1e-300 {
                return Err(LabError::Domain(format!("resonant mode {:?}", t.k)));
            }
            terms.push(TrigTerm { amp: t.amp / (2.0 * PI * ka), k: t.k.clone(), phase: t.phase - PI / 2.0 });
        }
        Ok(Self { constant: 0.0, terms })
    }
}

pub type ObsFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Observable {
    Trig(TrigPoly),
    Custom(ObsFn),
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observable::Trig(t) => write!(f, "Trig({t:?})"),
            Observable::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Observable {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Observable::Trig(t) => t.eval(x),
            Observable::Custom(f) => f(x),
        }
    }

    pub fn custom<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Observable::Custom(Arc::new(f))
    }
}

#[derive(Debug, Clone)]
pub struct TimeChange {
    pub tau: Observable,
    /// Multiplier making the mean 1 (1 for unnormalized time changes).
    pub scale: f64,
    pub inf: f64,
    pub sup: f64,
}

impl TimeChange {
    fn checked(tau: Observable, scale: f64, inf: f64, sup: f64) -> Result<Self> {
        if !(inf > 0.0) || !(sup >= inf) || !sup.is_finite() {
            return Err(LabError::Domain(format!("time change needs 0 < inf τ ≤ sup τ < ∞, got [{inf}, {sup}]")));
        }
        Ok(Self { tau, scale, inf, sup })
    }

    /// Rescaled to mean 1 using the exact torus mean.
    pub fn normalized_trig(tp: TrigPoly) -> Result<Self> {
        let m = tp.mean();
        if !(m > 0.0) {
            return Err(LabError::Domain(format!("τ must have positive mean, got {m}")));
        }
        let (lo, hi) = (tp.inf_bound() / m, tp.sup_bound() / m);
        Self::checked(Observable::Trig(tp), 1.0 / m, lo, hi)
    }

    /// Rescaled to mean 1 using an empirical mean over the flow's invariant
    /// measure; inf/sup are the sampled extremes.
    pub fn normalized_sampled(tau: Observable, flow: &dyn FlowSystem, n: usize, seed: u64) -> Result<Self> {
        let vals: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let x = flow.sample(&mut rng).ok_or_else(|| LabError::Domain("flow has no invariant sampler".into()))?;
                Ok(tau.eval(&x))
            })
            .collect::<Result<_>>()?;
        let m = crate::linalg::compensated_sum(vals.iter().copied()) / n as f64;
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(m > 0.0) {
            return Err(LabError::Domain(format!("τ must have positive mean, got {m}")));
        }
        Self::checked(tau, 1.0 / m, lo / m, hi / m)
    }

    /// No rescaling; inf/sup must be supplied.
    pub fn unnormalized(tau: Observable, inf: f64, sup: f64) -> Result<Self> {
        Self::checked(tau, 1.0, inf, sup)
    }

    pub fn unnormalized_trig(tp: TrigPoly) -> Result<Self> {
        let (lo, hi) = (tp.inf_bound(), tp.sup_bound());
        Self::checked(Observable::Trig(tp), 1.0, lo, hi)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::unnormalized_trig(TrigPoly::constant(c))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.scale * self.tau.eval(x)
    }
}

/// Per-index random stream: results do not depend on the parallel schedule.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let (v, err) = gk15(f, a, b);
    if err <= tol || (b - a).abs() < 1e-12 {
        return Ok(v);
    }
    if depth > 60 {
        return Err(LabError::Numeric(format!("adaptive quadrature failed on [{a}, {b}]")));
    }
    let m = 0.5 * (a + b);
    Ok(adaptive(f, a, m, tol / 2.0, depth + 1)? + adaptive(f, m, b, tol / 2.0, depth + 1)?)
}

/// ∫ₐᵇ f with absolute error ≲ rel_tol·|b−a|, split into unit panels first.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let panels = ((hi - lo).ceil() as usize).clamp(1, 10_000_000);
    let w = (hi - lo) / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    for i in 0..panels {
        let p0 = lo + i as f64 * w;
        let p1 = if i + 1 == panels { hi } else { p0 + w };
        parts.push(adaptive(&f, p0, p1, rel_tol * (p1 - p0) * 0.1, 0)?);
    }
    Ok(sign * crate::linalg::compensated_sum(parts))
}

/// ξ(x,t) = ∫₀ᵗ τ(φ_s x) ds.
pub fn cocycle_xi(tc: &TimeChange, flow: &dyn FlowSystem, x: &[f64], t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(LabError::Invalid("non-finite time".into()));
    }
    integrate(|s| tc.eval(&flow.evolve(x, s)), 0.0, t, 1e-11)
}

/// z(x,t): the unique z with ξ(x,z) = t.
pub fn inverse_z(tc: &TimeChange, flow: &dyn FlowSystem, x: &[f64], t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = if t > 0.0 { (t / tc.sup, t / tc.inf) } else { (t / tc.inf, t / tc.sup) };
    let f = |z: f64| -> Result<f64> { Ok(cocycle_xi(tc, flow, x, z)? - t) };
    let (flo, fhi) = (f(lo)?, f(hi)?);
    let tol = 1e-11 * t.abs().max(1.0);
    if flo.abs() <= tol {
        return Ok(lo);
    }
    if fhi.abs() <= tol {
        return Ok(hi);
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(LabError::Numeric(format!("inverse_z bracket failure: f({lo}) = {flo}, f({hi}) = {fhi}")));
    }
    let mut z = t / (0.5 * (tc.inf + tc.sup));
    z = z.clamp(lo, hi);
    for _ in 0..100 {
        let fz = f(z)?;
        if fz.abs() <= tol {
            return Ok(z);
        }
        if fz < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - fz / tc.eval(&flow.evolve(x, z));
        z = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            return Ok(z);
        }
    }
    Err(LabError::Numeric(format!("inverse_z did not converge for t = {t}")))
}

/// φ^τ_t(x) = φ_{z(x,t)}(x).
pub fn time_changed_evolve(tc: &TimeChange, flow: &dyn FlowSystem, x: &[f64], t: f64) -> Result<Vec<f64>> {
    Ok(flow.evolve(x, inverse_z(tc, flow, x, t)?))
}

/// Synthetic cohomologous partner τ₂ = τ₁ − U f (torus flow, trigonometric data).
pub fn cohomologous_partner(tau1: &TrigPoly, f: &TrigPoly, flow: &TorusFlow) -> Result<TrigPoly> {
    let uf = f.derivative_along(&flow.alpha);
    let tau2 = tau1.add(&uf.scale(-1.0));
    if !(tau2.inf_bound() > 0.0) {
        return Err(LabError::Domain("τ₂ = τ₁ − Uf is not bounded below by a positive constant".into()));
    }
    Ok(tau2)
}

/// ψ_f(x) = φ_{z₂(x, f(x))}(x), the conjugacy from φ^{τ₁} to φ^{τ₂} when τ₁ − τ₂ = U f.
pub fn transfer_conjugacy(
    tc2: &TimeChange,
    f: &Observable,
    flow: &dyn FlowSystem,
    x: &[f64],
) -> Result<Vec<f64>> {
    Ok(flow.evolve(x, inverse_z(tc2, flow, x, f.eval(x))?))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConjugacyDefect {
    pub t: f64,
    /// ‖ψ(φ^{τ₁}_t x) − φ^{τ₂}_t(ψ x)‖ in the flow's metric.
    pub state_distance: f64,
    /// Signed offset of the two points along the orbit, measured on the τ₂ clock.
    pub clock_defect: f64,
}

/// Compare ψ_f ∘ φ^{τ₁}_t with φ^{τ₂}_t ∘ ψ_f along the orbit of x.
pub fn conjugacy_defect(
    tc1: &TimeChange,
    tc2: &TimeChange,
    f: &Observable,
    flow: &dyn FlowSystem,
    x: &[f64],
    t_grid: &[f64],
) -> Result<Vec<ConjugacyDefect>> {
    let a0 = inverse_z(tc2, flow, x, f.eval(x))?;
    let psi_x = flow.evolve(x, a0);
    t_grid
        .par_iter()
        .map(|&t| {
            let z1 = inverse_z(tc1, flow, x, t)?;
            let p = flow.evolve(x, z1);
            let a1 = inverse_z(tc2, flow, &p, f.eval(&p))?;
            let lhs_time = z1 + a1;
            let z2 = inverse_z(tc2, flow, &psi_x, t)?;
            let rhs_time = a0 + z2;
            let lhs = flow.evolve(x, lhs_time);
            let rhs = flow.evolve(x, rhs_time);
            let clock = cocycle_xi(tc2, flow, x, lhs_time)? - cocycle_xi(tc2, flow, x, rhs_time)?;
            Ok(ConjugacyDefect { t, state_distance: flow.distance(&lhs, &rhs), clock_defect: clock })
        })
        .collect()
}

/// Slope of |clock defect| against t.
pub fn drift_slope(defects: &[ConjugacyDefect]) -> Option<LinearFit> {
    let t: Vec<f64> = defects.iter().map(|d| d.t).collect();
    let c: Vec<f64> = defects.iter().map(|d| d.clock_defect.abs()).collect();
    crate::stats::linear_fit(&t, &c)
}

/// S_{x,T}(f) = (1/T)∫₀ᵀ f(φ_t x) dt.
pub fn ergodic_average(f: &Observable, flow: &dyn FlowSystem, x: &[f64], t_end: f64) -> Result<f64> {
    if !(t_end > 0.0) {
        return Err(LabError::Invalid(format!("T must be positive, got {t_end}")));
    }
    Ok(integrate(|s| f.eval(&flow.evolve(x, s)), 0.0, t_end, 1e-11)? / t_end)
}

/// Time average of f along φ^τ up to τ-time ξ(x,T), via the substitution s = ξ(x,t):
/// (1/ξ(x,T)) ∫₀ᵀ f(φ_t x) τ(φ_t x) dt. Converges to ∫ f τ dμ.
pub fn time_changed_average(tc: &TimeChange, f: &Observable, flow: &dyn FlowSystem, x: &[f64], t_end: f64) -> Result<f64> {
    let num = integrate(|s| { let y = flow.evolve(x, s); f.eval(&y) * tc.eval(&y) }, 0.0, t_end, 1e-11)?;
    Ok(num / cocycle_xi(tc, flow, x, t_end)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayVerdict {
    Decaying,
    NoDecay,
    /// Variance vanishes; no rate is defined.
    Constant,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationFit {
    pub points: Vec<(f64, f64)>,
    pub fit: Option<LinearFit>,
    /// Fitted amplitude D and rate σ in |corr| ≈ D t^{−σ}.
    pub d_fit: Option<f64>,
    pub sigma_fit: Option<f64>,
    pub verdict: DecayVerdict,
}

/// Empirical |⟨α, α∘φ_t⟩ − (∫α)²| over the invariant measure, fitted in log-log.
pub fn correlation_decay_fit(
    alpha: &Observable,
    flow: &dyn FlowSystem,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<CorrelationFit> {
    if t_grid.len() < 3 {
        return Err(LabError::Invalid("need at least three times".into()));
    }
    let xs: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| flow.sample(&mut stream_rng(seed, i as u64)).ok_or_else(|| LabError::Domain("flow has no invariant sampler".into())))
        .collect::<Result<_>>()?;
    let a0: Vec<f64> = xs.iter().map(|x| alpha.eval(x)).collect();
    let nf = n_samples as f64;
    let mean = crate::linalg::compensated_sum(a0.iter().copied()) / nf;
    let var = crate::linalg::compensated_sum(a0.iter().map(|a| (a - mean).powi(2))) / nf;
    if var < 1e-24 {
        return Ok(CorrelationFit {
            points: t_grid.iter().map(|t| (*t, 0.0)).collect(),
            fit: None,
            d_fit: None,
            sigma_fit: None,
            verdict: DecayVerdict::Constant,
        });
    }
    let points: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let prods = xs.iter().zip(&a0).map(|(x, a)| a * alpha.eval(&flow.evolve(x, t)));
            (t, (crate::linalg::compensated_sum(prods) / nf - mean * mean).abs())
        })
        .collect();
    let ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let cs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = loglog_fit(&ts, &cs);
    let third = (points.len() / 3).max(1);
    let head = cs[..third].iter().cloned().fold(0.0, f64::max);
    let tail = cs[cs.len() - third..].iter().cloned().fold(0.0, f64::max);
    let decaying = fit.is_some_and(|f| f.slope < -0.05 && f.r2 >= 0.9) && tail < 0.5 * head;
    Ok(CorrelationFit {
        d_fit: fit.map(|f| f.intercept.exp()),
        sigma_fit: fit.map(|f| -f.slope),
        fit,
        points,
        verdict: if decaying { DecayVerdict::Decaying } else { DecayVerdict::NoDecay },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GhVerdict {
    CoboundaryConsistent,
    LinearGrowth,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct GhReport {
    /// (T, ‖∫₀ᵀ g∘φ_t dt‖_{L²}) estimated over the samples.
    pub norms: Vec<(f64, f64)>,
    pub growth_exponent: Option<f64>,
    pub sup_norm: f64,
    pub bound: Option<f64>,
    pub verdict: GhVerdict,
}

/// Equiboundedness of ergodic integrals: bounded (≤ bound, when a transfer
/// function norm is known) → coboundary-consistent; growth exponent ≥ 0.8 →
/// linear growth; anything else is inconclusive at the tested horizon.
pub fn gh_equibounded_test(
    g: &Observable,
    flow: &dyn FlowSystem,
    n_samples: usize,
    t_grid: &[f64],
    bound: Option<f64>,
    seed: u64,
) -> Result<GhReport> {
    let xs: Vec<Vec<f64>> = (0..n_samples)
        .map(|i| flow.sample(&mut stream_rng(seed, i as u64)).ok_or_else(|| LabError::Domain("flow has no invariant sampler".into())))
        .collect::<Result<_>>()?;
    let norms: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| {
            let sq: Vec<f64> = xs
                .par_iter()
                .map(|x| Ok(integrate(|s| g.eval(&flow.evolve(x, s)), 0.0, t, 1e-10)?.powi(2)))
                .collect::<Result<_>>()?;
            Ok((t, (crate::linalg::compensated_sum(sq) / n_samples as f64).sqrt()))
        })
        .collect::<Result<_>>()?;
    let ts: Vec<f64> = norms.iter().map(|p| p.0).collect();
    let ns: Vec<f64> = norms.iter().map(|p| p.1).collect();
    let growth = loglog_fit(&ts, &ns).map(|f| f.slope);
    let sup_norm = ns.iter().cloned().fold(0.0, f64::max);
    let stat = 3.0 / (n_samples as f64).sqrt();
    let bounded = growth.is_some_and(|p| p < 0.2) && bound.is_none_or(|b| sup_norm <= b * (1.0 + stat));
    let verdict = if growth.is_some_and(|p| p >= 0.8) {
        GhVerdict::LinearGrowth
    } else if bounded {
        GhVerdict::CoboundaryConsistent
    } else {
        GhVerdict::Inconclusive
    };
    Ok(GhReport { norms, growth_exponent: growth, sup_norm, bound, verdict })
}

/// Small-divisor observable on the 2-torus flow with α = (1, √2): modes
/// (−p_j, q_j) from the continued-fraction convergents p/q of √2, with divisors
/// δ_j = |q_j√2 − p_j| and amplitudes δ_j^{1/2}. Its ergodic integrals grow
/// like T^{1/2} across [1/δ_1, 1/δ_J], so no finite horizon decides.
pub fn small_divisor_observable(modes: usize) -> (TorusFlow, TrigPoly) {
    let mut p = 1i64;
    let mut q = 1i64;
    let mut terms = Vec::new();
    let s2 = 2f64.sqrt();
    for _ in 0..modes {
        let delta = (q as f64 * s2 - p as f64).abs();
        terms.push(TrigTerm { amp: delta.sqrt(), k: vec![-p, q], phase: 0.0 });
        let (np, nq) = (p + 2 * q, p + q);
        p = np;
        q = nq;
    }
    (TorusFlow { alpha: vec![1.0, s2] }, TrigPoly { constant: 0.0, terms })
}
