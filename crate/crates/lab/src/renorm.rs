//! Geodesic renormalization of ergodic-average coefficients.
//!
//! One geodesic step of length σ maps the 𝒟^± coefficients by
//! c_±(l+1) = A_± c_±(l) + r_±(l), with |r_±(l)| ≤ C (e^{lσ} T)^{−1}.
//! The cascade is simulated on the coefficients alone: the remainder lives in
//! a negative Sobolev space with no finite realization, so remainders are
//! driven adversarially up to their bound.

use crate::stats::{loglog_fit, LinearFit};
use crate::{LabError, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// Decay exponent (1 ± 2ν)/2.
    pub fn exponent(self, nu: f64) -> f64 {
        (1.0 + self.sign() * 2.0 * nu) / 2.0
    }
}

/// Direction of the per-step multiplier. `Contraction` (A = e^{−(1±2ν)σ/2})
/// follows the eigenvalue law of the geodesic flow on invariant distributions
/// and is the default; `Expansion` (A = e^{+(1±2ν)σ/2}) is the literal
/// one-step recurrence, kept as a variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Convention {
    #[default]
    Contraction,
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strategy {
    /// r ≡ 0.
    Zero,
    /// Full bound, sign of the current coefficient (pushes |c| up).
    Saturating,
    /// Full bound, sign (−1)^l.
    Alternating,
    /// Full bound, random sign.
    RandomSign,
    /// Uniform in [−bound, bound].
    Uniform,
    /// Full bound against the current coefficient (pushes |c| down).
    Opposing,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Zero,
        Strategy::Saturating,
        Strategy::Alternating,
        Strategy::RandomSign,
        Strategy::Uniform,
        Strategy::Opposing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Zero => "zero",
            Strategy::Saturating => "saturating",
            Strategy::Alternating => "alternating",
            Strategy::RandomSign => "random-sign",
            Strategy::Uniform => "uniform",
            Strategy::Opposing => "opposing",
        }
    }

    fn remainder<R: Rng>(self, bound: f64, c: f64, l: usize, rng: &mut R) -> f64 {
        let sgn = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
        match self {
            Strategy::Zero => 0.0,
            Strategy::Saturating => sgn(c) * bound,
            Strategy::Alternating => if l % 2 == 0 { bound } else { -bound },
            Strategy::RandomSign => if rng.random::<bool>() { bound } else { -bound },
            Strategy::Uniform => bound * (2.0 * rng.random::<f64>() - 1.0),
            Strategy::Opposing => -sgn(c) * bound,
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| LabError::Invalid(format!("unknown strategy '{s}' (zero, saturating, alternating, random-sign, uniform, opposing)")))
    }
}

/// Parameters shared by every cascade at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeParams {
    pub nu: f64,
    pub sigma: f64,
    /// Initial time T.
    pub t: f64,
    /// Remainder constant C in |r(l)| ≤ C (e^{lσ}T)^{−1}.
    pub remainder_c: f64,
    pub convention: Convention,
}

impl CascadeParams {
    pub fn new(nu: f64, sigma: f64, t: f64, remainder_c: f64) -> Result<Self> {
        let p = Self { nu, sigma, t, remainder_c, convention: Convention::Contraction };
        p.validate()?;
        Ok(p)
    }

    pub fn with_convention(mut self, c: Convention) -> Self {
        self.convention = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(LabError::Range(format!("nu must lie in (0, 1/2), got {}", self.nu)));
        }
        if !(1.0..=2.0).contains(&self.sigma) {
            return Err(LabError::Range(format!("sigma must lie in [1, 2], got {}", self.sigma)));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(LabError::Range(format!("T must be positive, got {}", self.t)));
        }
        if !(self.remainder_c >= 0.0) {
            return Err(LabError::Range(format!("remainder constant must be ≥ 0, got {}", self.remainder_c)));
        }
        Ok(())
    }

    /// Per-step multiplier A_±.
    pub fn multiplier(&self, b: Branch) -> f64 {
        let e = b.exponent(self.nu) * self.sigma;
        match self.convention {
            Convention::Contraction => (-e).exp(),
            Convention::Expansion => e.exp(),
        }
    }

    /// Remainder bound at step l.
    pub fn remainder_bound(&self, l: usize) -> f64 {
        self.remainder_c * (-(l as f64) * self.sigma).exp() / self.t
    }

    /// Ratio e^{−σ}/A of the geometric sum in the majorant.
    pub fn geometric_ratio(&self, b: Branch) -> f64 {
        (-self.sigma).exp() / self.multiplier(b)
    }

    /// K = 1/(A(1 − r)): the remainder contribution is at most (C/T)·K·A^l.
    pub fn absorbed_constant(&self, b: Branch) -> Result<f64> {
        let r = self.geometric_ratio(b);
        if r >= 1.0 {
            return Err(LabError::Domain(format!("geometric sum diverges (ratio {r} ≥ 1); needs nu < 1/2")));
        }
        Ok(1.0 / (self.multiplier(b) * (1.0 - r)))
    }

    /// Initial time above which T·c0 > 2 C K, so that |c(l)| ≥ ½ c0 A^l.
    pub fn lower_bound_threshold(&self, b: Branch, c0: f64) -> Result<f64> {
        Ok(2.0 * self.remainder_c * self.absorbed_constant(b)? / c0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceState {
    pub l: usize,
    pub c_plus: f64,
    pub c_minus: f64,
    /// Bound on |r_±| applied between step l and l+1.
    pub remainder_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub exponent_plus: f64,
    pub exponent_minus: f64,
    pub fitted_plus: f64,
    pub fitted_minus: f64,
    pub constant_plus: f64,
    pub constant_minus: f64,
    pub fit_plus: LinearFit,
    pub fit_minus: LinearFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceSolution {
    pub iterative: Vec<DVector<f64>>,
    pub closed_form: Vec<DVector<f64>>,
    pub max_discrepancy: f64,
}

/// x_{l+1} = A x_l + R_l, both by iteration and by x_l = A^l x_0 + Σ_{j<l} A^{l−j−1} R_j.
pub fn solve_linear_recurrence(a: &DMatrix<f64>, x0: &DVector<f64>, r: &[DVector<f64>]) -> Result<RecurrenceSolution> {
    let d = x0.len();
    if a.nrows() != d || a.ncols() != d {
        return Err(LabError::DimensionMismatch(a.nrows(), d));
    }
    if let Some(bad) = r.iter().find(|v| v.len() != d) {
        return Err(LabError::DimensionMismatch(bad.len(), d));
    }
    let steps = r.len();
    let mut iterative = Vec::with_capacity(steps + 1);
    iterative.push(x0.clone());
    for rj in r {
        let next = a * iterative.last().expect("nonempty") + rj;
        iterative.push(next);
    }
    let mut powers = vec![DMatrix::<f64>::identity(d, d)];
    for _ in 0..steps {
        powers.push(a * powers.last().expect("nonempty"));
    }
    let closed_form: Vec<DVector<f64>> = (0..=steps)
        .map(|l| {
            let mut x = &powers[l] * x0;
            for (j, rj) in r.iter().enumerate().take(l) {
                x += &powers[l - j - 1] * rj;
            }
            x
        })
        .collect();
    let max_discrepancy = iterative
        .iter()
        .zip(&closed_form)
        .map(|(a, b)| (a - b).amax() / a.amax().max(1.0))
        .fold(0.0, f64::max);
    Ok(RecurrenceSolution { iterative, closed_form, max_discrepancy })
}

/// Majorant |c0| A^l + (C/T) A^{l−1} (1 − r^l)/(1 − r) for |c_±(l)|, with the
/// geometric sum in closed form.
pub fn coefficient_upper_bound(p: &CascadeParams, b: Branch, c0_bound: f64, l: usize) -> Result<f64> {
    p.validate()?;
    let a = p.multiplier(b);
    let r = p.geometric_ratio(b);
    if r >= 1.0 {
        return Err(LabError::Domain(format!("geometric sum diverges (ratio {r} ≥ 1); needs nu < 1/2")));
    }
    let lf = l as f64;
    let pure = c0_bound.abs() * a.powf(lf);
    if l == 0 {
        return Ok(pure);
    }
    let geo = (1.0 - r.powf(lf)) / (1.0 - r);
    Ok(pure + p.remainder_c / p.t * a.powf(lf - 1.0) * geo)
}

/// (|c0| − C K/T) A^l, the guaranteed floor for |c_±(l)|.
pub fn coefficient_lower_bound(p: &CascadeParams, b: Branch, c0: f64, l: usize) -> Result<f64> {
    let k = p.absorbed_constant(b)?;
    Ok((c0.abs() - p.remainder_c * k / p.t) * p.multiplier(b).powf(l as f64))
}

/// Run one cascade from (c0_plus, c0_minus) for `steps` steps.
pub fn simulate_cascade<R: Rng>(
    p: &CascadeParams,
    c0_plus: f64,
    c0_minus: f64,
    strategy: Strategy,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<RecurrenceState>> {
    p.validate()?;
    let (ap, am) = (p.multiplier(Branch::Plus), p.multiplier(Branch::Minus));
    let mut out = Vec::with_capacity(steps + 1);
    let (mut cp, mut cm) = (c0_plus, c0_minus);
    for l in 0..=steps {
        let bound = p.remainder_bound(l);
        out.push(RecurrenceState { l, c_plus: cp, c_minus: cm, remainder_bound: bound });
        if l == steps {
            break;
        }
        let rp = strategy.remainder(bound, cp, l, rng);
        let rm = strategy.remainder(bound, cm, l, rng);
        cp = ap * cp + rp;
        cm = am * cm + rm;
    }
    Ok(out)
}

/// Fit log|c_±| against log(e^{lσ}T) over the last three quarters of a cascade.
pub fn continuous_time_exponents(
    p: &CascadeParams,
    c0: f64,
    strategy: Strategy,
    steps: usize,
    seed: u64,
) -> Result<DecayProfile> {
    let first = steps / 4;
    let decades = (steps - first) as f64 * p.sigma / std::f64::consts::LN_10;
    if decades < 3.0 {
        return Err(LabError::Range(format!("fit grid spans {decades:.2} decades; need ≥ 3")));
    }
    let mut rng = crate::timechange::stream_rng(seed, 0);
    let traj = simulate_cascade(p, c0, c0, strategy, steps, &mut rng)?;
    let lam: Vec<f64> = traj[first..].iter().map(|s| (s.l as f64 * p.sigma).exp() * p.t).collect();
    let cp: Vec<f64> = traj[first..].iter().map(|s| s.c_plus).collect();
    let cm: Vec<f64> = traj[first..].iter().map(|s| s.c_minus).collect();
    let fp = loglog_fit(&lam, &cp).ok_or_else(|| LabError::Numeric("plus branch fit failed".into()))?;
    let fm = loglog_fit(&lam, &cm).ok_or_else(|| LabError::Numeric("minus branch fit failed".into()))?;
    Ok(DecayProfile {
        exponent_plus: Branch::Plus.exponent(p.nu),
        exponent_minus: Branch::Minus.exponent(p.nu),
        fitted_plus: -fp.slope,
        fitted_minus: -fm.slope,
        constant_plus: fp.intercept.exp(),
        constant_minus: fm.intercept.exp(),
        fit_plus: fp,
        fit_minus: fm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorantReport {
    pub cascades: usize,
    pub violations: usize,
    /// max over cascades, branches and steps of |c(l)| / majorant(l).
    pub worst_ratio: f64,
}

/// Random initial coefficients |c0| ≤ c0_bound, strategies cycled by index.
pub fn majorant_domination(p: &CascadeParams, c0_bound: f64, steps: usize, cascades: usize, seed: u64) -> Result<MajorantReport> {
    p.validate()?;
    let maj: Vec<[f64; 2]> = (0..=steps)
        .map(|l| {
            Ok([
                coefficient_upper_bound(p, Branch::Plus, c0_bound, l)?,
                coefficient_upper_bound(p, Branch::Minus, c0_bound, l)?,
            ])
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = (0..cascades)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::timechange::stream_rng(seed, i as u64);
            let strategy = Strategy::ALL[i % Strategy::ALL.len()];
            let cp = c0_bound * (2.0 * rng.random::<f64>() - 1.0);
            let cm = c0_bound * (2.0 * rng.random::<f64>() - 1.0);
            let traj = simulate_cascade(p, cp, cm, strategy, steps, &mut rng)?;
            Ok(traj
                .iter()
                .map(|s| {
                    let [mp, mm] = maj[s.l];
                    (s.c_plus.abs() / mp).max(s.c_minus.abs() / mm)
                })
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    // 1 ulp-scale slack for the summation-order difference between majorant and cascade
    let violations = ratios.iter().filter(|r| **r > 1.0 + 1e-12).count();
    Ok(MajorantReport { cascades, violations, worst_ratio: ratios.iter().cloned().fold(0.0, f64::max) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub threshold_t0: f64,
    pub cascades: usize,
    pub violations: usize,
    /// min over cascades, branches and steps of |c(l)| / (½ c0 A^l).
    pub min_ratio: f64,
}

/// Above T₀ = 2CK/c0, no admissible cascade from c0 drops below ½ c0 A^l.
/// Runs at T = t_factor · T₀ (t_factor > 1) with adversarial remainders.
pub fn lower_bound_persistence(p: &CascadeParams, c0: f64, t_factor: f64, steps: usize, cascades: usize, seed: u64) -> Result<LowerBoundReport> {
    if !(c0 > 0.0) {
        return Err(LabError::Range(format!("c0 must be positive, got {c0}")));
    }
    let t0 = p.lower_bound_threshold(Branch::Plus, c0)?.max(p.lower_bound_threshold(Branch::Minus, c0)?);
    let q = CascadeParams { t: t0 * t_factor, ..*p };
    q.validate()?;
    let (ap, am) = (q.multiplier(Branch::Plus), q.multiplier(Branch::Minus));
    let ratios: Vec<f64> = (0..cascades)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::timechange::stream_rng(seed, i as u64);
            let strategy = Strategy::ALL[i % Strategy::ALL.len()];
            let sp = if rng.random::<bool>() { c0 } else { -c0 };
            let sm = if rng.random::<bool>() { c0 } else { -c0 };
            let traj = simulate_cascade(&q, sp, sm, strategy, steps, &mut rng)?;
            Ok(traj
                .iter()
                .map(|s| {
                    let lf = s.l as f64;
                    (s.c_plus.abs() / (0.5 * c0 * ap.powf(lf))).min(s.c_minus.abs() / (0.5 * c0 * am.powf(lf)))
                })
                .fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<_>>()?;
    let violations = ratios.iter().filter(|r| **r < 1.0).count();
    Ok(LowerBoundReport { threshold_t0: t0, cascades, violations, min_ratio: ratios.iter().cloned().fold(f64::INFINITY, f64::min) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub samples: usize,
    pub l2_norm: f64,
    /// max |c|/‖c‖.
    pub sup_ratio: f64,
    /// Fraction of samples with |c|/‖c‖ ≥ threshold.
    pub mass_above: f64,
    pub bounded: bool,
    pub floor_ok: bool,
}

/// Shape of the normalized ensemble c/‖c‖_{L²}: bounded by `c_bound`, and with
/// at least mass `gamma` at or above `threshold` (so the limit law has nonzero
/// compact support).
pub fn averaged_distribution_shape(samples: &[f64], c_bound: f64, gamma: f64, threshold: f64) -> Result<ShapeReport> {
    if samples.is_empty() {
        return Err(LabError::Invalid("empty ensemble".into()));
    }
    let n = samples.len() as f64;
    let l2 = (crate::linalg::compensated_sum(samples.iter().map(|c| c * c)) / n).sqrt();
    if !(l2 > 0.0) || !l2.is_finite() {
        return Err(LabError::Domain("degenerate ensemble (zero or non-finite L² norm)".into()));
    }
    let normalized: Vec<f64> = samples.iter().map(|c| c.abs() / l2).collect();
    let sup_ratio = normalized.iter().cloned().fold(0.0, f64::max);
    let mass_above = normalized.iter().filter(|v| **v >= threshold).count() as f64 / n;
    Ok(ShapeReport {
        samples: samples.len(),
        l2_norm: l2,
        sup_ratio,
        mass_above,
        bounded: sup_ratio <= c_bound,
        floor_ok: mass_above >= gamma,
    })
}

/// Final c_+ values of an ensemble started from `c0s`, one cascade each.
pub fn ensemble_final(p: &CascadeParams, c0s: &[f64], strategy: Strategy, steps: usize, seed: u64) -> Result<Vec<f64>> {
    c0s.par_iter()
        .enumerate()
        .map(|(i, &c0)| {
            let mut rng = crate::timechange::stream_rng(seed, i as u64);
            let traj = simulate_cascade(p, c0, c0, strategy, steps, &mut rng)?;
            Ok(traj.last().expect("nonempty").c_plus)
        })
        .collect()
}
