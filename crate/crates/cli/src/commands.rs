use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use lorentz_lab::renorm::{self, Branch, CascadeParams, Convention, Strategy};
use lorentz_lab::reps::{self, RepContext};
use lorentz_lab::shearing::{self, Direction, ShearingParams, TimeMap};
use lorentz_lab::timechange::{
    self, FlowSystem, Observable, RandomSpeedRotation, TimeChange, TorusFlow, TrigPoly,
};
use lorentz_lab::liealg;

use crate::report::{num, opt, Check, Report};

pub fn lie_check(n: usize, tolerance: f64) -> Result<Report> {
    if !(2..=8).contains(&n) {
        bail!("--n must lie in [2, 8], got {n}");
    }
    let checks = liealg::structure_suite(n, tolerance)?;
    let mut r = Report::new("lie-check");
    r.param("n", n);
    r.param("tolerance", tolerance);
    r.columns(&["identity", "residual", "tolerance", "pass"]);
    for c in &checks {
        r.row(vec![c.name.clone(), num(c.residual), num(c.tolerance), c.pass.to_string()]);
        r.checks.push(Check::at_most(c.name.clone(), c.residual, c.tolerance));
    }
    r.summary = json!({
        "dim": liealg::dim(n),
        "centralizer_dim": liealg::centralizer_dim_predicted(n),
        "identities": checks.len(),
        "failed": checks.iter().filter(|c| !c.pass).count(),
    });
    Ok(r)
}

pub fn branching(n: usize, nu: f64, s: f64, l_max: usize, m_cutoff: usize) -> Result<Report> {
    reps::check_branching_range(n, nu)?;
    if m_cutoff < l_max {
        bail!("--m-cutoff ({m_cutoff}) must be at least --l-max ({l_max})");
    }
    let base = reps::branching_sweep(n, nu, s, l_max, m_cutoff)?;
    let doubled = reps::branching_sweep(n, nu, s, l_max, 2 * m_cutoff)?;
    let mut r = Report::new("branching");
    r.param("n", n);
    r.param("nu", nu);
    r.param("s", s);
    r.param("l-max", l_max);
    r.param("m-cutoff", m_cutoff);
    r.columns(&["l", "partial_sum", "tail_bound", "total", "total_doubled_cutoff", "relative_change"]);
    for (a, b) in base.sums.iter().zip(&doubled.sums) {
        let (ta, tb) = (a.partial_sum + a.tail_bound, b.partial_sum + b.tail_bound);
        r.row(vec![a.l.to_string(), num(a.partial_sum), num(a.tail_bound), num(ta), num(tb), num((tb / ta - 1.0).abs())]);
    }
    let drift = (doubled.ratio / base.ratio - 1.0).abs();
    let bounded = !base.divergent && base.ratio.is_finite();
    r.summary = json!({
        "sup": base.sup,
        "inf": base.inf,
        "ratio": base.ratio,
        "ratio_doubled_cutoff": doubled.ratio,
        "ratio_drift": drift,
        "tail_divergent": base.divergent,
        "verdict": if bounded && drift <= 0.05 { "bounded" } else { "unbounded" },
    });
    r.checks.push(Check::flag("tail summable (2ν + 2s > 1)", !base.divergent));
    r.checks.push(Check::flag("sup/inf ratio finite", base.ratio.is_finite()));
    r.checks.push(Check::at_most("ratio drift under cutoff doubling", drift, 0.05));
    Ok(r)
}

pub fn invdist(nu: f64, modes: usize, tolerance: f64, s: f64) -> Result<Report> {
    if modes < 2 {
        bail!("--modes must be at least 2, got {modes}");
    }
    let ctx = RepContext::new(2, nu, modes, s)?;
    let found = reps::invariant_distributions(&ctx, tolerance)?;
    let mut predicted = [Branch::Plus, Branch::Minus].map(|b| -b.exponent(nu));
    predicted.sort_by(f64::total_cmp);
    let mut r = Report::new("invdist");
    r.param("nu", nu);
    r.param("modes", modes);
    r.param("tolerance", tolerance);
    r.param("s", s);
    r.columns(&["index", "yn_eigenvalue", "predicted", "abs_error", "residual"]);
    let mut worst: f64 = 0.0;
    for (i, d) in found.iter().enumerate() {
        let p = predicted.get(i).copied();
        let err = p.map(|p| (d.yn_eigenvalue - p).abs());
        worst = worst.max(err.unwrap_or(f64::INFINITY));
        r.row(vec![i.to_string(), num(d.yn_eigenvalue), opt(p), opt(err), num(d.residual)]);
    }
    r.summary = json!({ "count": found.len(), "predicted": predicted, "max_eigenvalue_error": worst });
    r.checks.push(Check::at_most("|count − 2|", (found.len() as f64 - 2.0).abs(), 0.0));
    r.checks.push(Check::at_most("eigenvalue error", worst, 1e-3));
    Ok(r)
}

pub struct ShearingArgs {
    pub n: usize,
    pub dir: Direction,
    pub mag: f64,
    pub lambda: (f64, f64),
    pub points: usize,
    pub eta: f64,
    pub rho: f64,
    pub eps: f64,
    pub slack: f64,
}

pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').with_context(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = a.trim().parse().with_context(|| format!("bad lower end {a:?}"))?;
    let hi: f64 = b.trim().parse().with_context(|| format!("bad upper end {b:?}"))?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        bail!("need 0 < LO < HI, got {lo}:{hi}");
    }
    Ok((lo, hi))
}

pub fn shearing(a: &ShearingArgs) -> Result<Report> {
    if !(2..=8).contains(&a.n) {
        bail!("--n must lie in [2, 8], got {}", a.n);
    }
    if a.points < 2 {
        bail!("--points must be at least 2");
    }
    if !(a.mag > 0.0) {
        bail!("--mag must be positive, got {}", a.mag);
    }
    let (lo, hi) = a.lambda;
    let grid: Vec<f64> = (0..a.points).map(|i| lo * (hi / lo).powf(i as f64 / (a.points - 1) as f64)).collect();
    let params = ShearingParams::new(a.eta, a.rho, a.eps, a.slack)?;
    let rep = shearing::shearing_experiment(a.n, a.dir, a.mag, &grid, &TimeMap::Identity, &params)?;
    let dir_name = match a.dir {
        Direction::B => "b",
        Direction::AMinusD => "a-d",
        Direction::V0 => "v0",
        Direction::Flow => "flow",
    };
    let mut r = Report::new("shearing");
    r.param("n", a.n);
    r.param("dir", dir_name);
    r.param("mag", a.mag);
    r.param("lambda", format!("{lo}:{hi}"));
    r.param("points", a.points);
    r.param("eta", a.eta);
    r.param("rho", a.rho);
    r.param("eps", a.eps);
    r.param("slack", a.slack);
    r.columns(&[
        "lambda", "s_lambda", "delta", "abs_b", "abs_a_minus_d", "abs_c", "abs_v0", "abs_v1", "abs_v2",
        "fitted_exponent", "predicted_exponent",
    ]);
    let fit = rep.fits.first();
    let slope = fit.and_then(|f| f.fit.map(|l| l.slope));
    let pred = fit.map(|f| f.predicted);
    for row in &rep.rows {
        let v = |i: usize| row.abs_v.get(i).copied();
        r.row(vec![
            num(row.lambda),
            num(row.s_lambda),
            num(row.delta),
            num(row.abs_b),
            num(row.abs_a_minus_d),
            num(row.abs_c),
            opt(v(0)),
            opt(v(1)),
            opt(v(2)),
            opt(slope),
            opt(pred),
        ]);
    }
    for f in &rep.fits {
        let s = f.fit.map(|l| l.slope).unwrap_or(f64::INFINITY);
        r.checks.push(Check::at_most(format!("{} exponent ≤ predicted + 0.1", f.entry), s, f.predicted + 0.1));
    }
    r.summary = json!({ "fits": rep.fits });
    Ok(r)
}

pub struct RenormArgs {
    pub nu: f64,
    pub sigma: f64,
    pub t: f64,
    pub steps: usize,
    pub strategy: Strategy,
    pub remainder_c: f64,
    pub c0: f64,
    pub convention: Convention,
    pub cascades: usize,
    pub seed: u64,
}

pub fn renorm(a: &RenormArgs) -> Result<Report> {
    if a.steps == 0 {
        bail!("--steps must be positive");
    }
    let p = CascadeParams::new(a.nu, a.sigma, a.t, a.remainder_c)?.with_convention(a.convention);
    let mut rng = timechange::stream_rng(a.seed, u64::MAX);
    let traj = renorm::simulate_cascade(&p, a.c0, a.c0, a.strategy, a.steps, &mut rng)?;
    let mut r = Report::new("renorm");
    r.param("nu", a.nu);
    r.param("sigma", a.sigma);
    r.param("t", a.t);
    r.param("steps", a.steps);
    r.param("strategy", a.strategy.name());
    r.param("remainder-c", a.remainder_c);
    r.param("c0", a.c0);
    r.param("convention", match a.convention {
        Convention::Contraction => "contraction",
        Convention::Expansion => "expansion",
    });
    r.param("cascades", a.cascades);
    r.seed = Some(a.seed);
    r.columns(&["l", "c_plus", "c_minus", "remainder_bound", "pure_plus", "pure_minus", "upper_plus", "upper_minus"]);
    let (ap, am) = (p.multiplier(Branch::Plus), p.multiplier(Branch::Minus));
    let mut over: f64 = 0.0;
    for s in &traj {
        let lf = s.l as f64;
        let up = renorm::coefficient_upper_bound(&p, Branch::Plus, a.c0, s.l)?;
        let um = renorm::coefficient_upper_bound(&p, Branch::Minus, a.c0, s.l)?;
        over = over.max(s.c_plus.abs() / up).max(s.c_minus.abs() / um);
        r.row(vec![
            s.l.to_string(),
            num(s.c_plus),
            num(s.c_minus),
            num(s.remainder_bound),
            num(a.c0 * ap.powf(lf)),
            num(a.c0 * am.powf(lf)),
            num(up),
            num(um),
        ]);
    }
    r.checks.push(Check::at_most("trajectory / majorant", over, 1.0 + 1e-12));
    let mut summary = json!({
        "multiplier_plus": ap,
        "multiplier_minus": am,
        "exponent_plus": Branch::Plus.exponent(a.nu),
        "exponent_minus": Branch::Minus.exponent(a.nu),
    });
    if a.cascades > 0 {
        let m = renorm::majorant_domination(&p, a.c0.abs(), a.steps, a.cascades, a.seed)?;
        r.checks.push(Check::at_most("majorant violations", m.violations as f64, 0.0));
        summary["majorant"] = serde_json::to_value(m)?;
        if a.remainder_c > 0.0 && a.c0 > 0.0 {
            let lb = renorm::lower_bound_persistence(&p, a.c0, 1.5, a.steps, a.cascades, a.seed)?;
            r.checks.push(Check::at_most("lower-bound violations at T = 1.5·T₀", lb.violations as f64, 0.0));
            summary["lower_bound"] = serde_json::to_value(lb)?;
        }
    }
    // the fit is only meaningful over ≥ 3 decades of e^{lσ}T
    summary["decay_profile"] = match renorm::continuous_time_exponents(&p, a.c0, a.strategy, a.steps, a.seed) {
        Ok(d) => serde_json::to_value(d)?,
        Err(_) => serde_json::Value::Null,
    };
    r.summary = summary;
    Ok(r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimechangeConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Horizon T of the run.
    pub t_end: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Base point; sampled from the invariant measure (with --seed) when absent.
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    pub flow: FlowSpec,
    pub tau: TrigPoly,
    /// Transfer function f; the partner is τ₂ = τ₁ − U f + mismatch.
    #[serde(default)]
    pub transfer: Option<TrigPoly>,
    #[serde(default)]
    pub mismatch: f64,
    #[serde(default)]
    pub normalize: bool,
}

fn default_points() -> usize {
    21
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlowSpec {
    Torus { alpha: Vec<f64> },
    RandomSpeed { kappa: f64, d: usize },
}

pub fn parse_timechange_config(text: &str) -> Result<TimechangeConfig> {
    let c: TimechangeConfig = toml::from_str(text)?;
    if !(c.t_end > 0.0 && c.t_end.is_finite()) {
        bail!("t_end must be positive, got {}", c.t_end);
    }
    if c.points < 2 {
        bail!("points must be at least 2");
    }
    match &c.flow {
        FlowSpec::Torus { alpha } if alpha.is_empty() => bail!("torus flow needs a nonempty alpha"),
        FlowSpec::RandomSpeed { kappa, d } if !(*kappa > 0.0) || *d == 0 => bail!("random-speed flow needs kappa > 0 and d ≥ 1"),
        FlowSpec::RandomSpeed { .. } if c.transfer.is_some() => bail!("[transfer] requires a torus flow"),
        _ => {}
    }
    Ok(c)
}

fn trig_dims(tp: &TrigPoly) -> usize {
    tp.terms.iter().map(|t| t.k.len()).max().unwrap_or(0)
}

pub fn timechange_cmd(config_path: &str, c: &TimechangeConfig, seed: u64) -> Result<Report> {
    let flow: Box<dyn FlowSystem> = match &c.flow {
        FlowSpec::Torus { alpha } => Box::new(TorusFlow { alpha: alpha.clone() }),
        FlowSpec::RandomSpeed { kappa, d } => Box::new(RandomSpeedRotation { kappa: *kappa, d: *d }),
    };
    let angle_dims = match &c.flow {
        FlowSpec::Torus { alpha } => alpha.len(),
        FlowSpec::RandomSpeed { d, .. } => *d,
    };
    for tp in [Some(&c.tau), c.transfer.as_ref()].into_iter().flatten() {
        if trig_dims(tp) > angle_dims {
            bail!("trigonometric term uses {} coordinates; flow has {angle_dims} angles", trig_dims(tp));
        }
    }
    let x = match &c.start {
        Some(x) if x.len() == flow.dim() => x.clone(),
        Some(x) => bail!("start has {} coordinates; flow state has {}", x.len(), flow.dim()),
        None => flow
            .sample(&mut timechange::stream_rng(seed, 0))
            .context("flow has no invariant sampler")?,
    };
    let tau = if c.normalize {
        let m = c.tau.mean();
        if !(m > 0.0) {
            bail!("cannot normalize τ with mean {m}");
        }
        c.tau.scale(1.0 / m)
    } else {
        c.tau.clone()
    };
    let tc1 = TimeChange::unnormalized_trig(tau.clone())?;
    let grid: Vec<f64> = (0..c.points).map(|i| c.t_end * i as f64 / (c.points - 1) as f64).collect();

    let mut r = Report::new("timechange");
    r.param("config", config_path);
    r.seed = Some(seed);
    r.config = Some(serde_json::to_value(c)?);
    let mut cols = vec!["t", "xi", "z", "inverse_residual"];
    let defects = match (&c.transfer, &c.flow) {
        (Some(f), FlowSpec::Torus { alpha }) => {
            let tflow = TorusFlow { alpha: alpha.clone() };
            let tau2 = timechange::cohomologous_partner(&tau, f, &tflow)?.add(&TrigPoly::constant(c.mismatch));
            let tc2 = TimeChange::unnormalized_trig(tau2)?;
            cols.extend(["state_distance", "clock_defect"]);
            Some(timechange::conjugacy_defect(&tc1, &tc2, &Observable::Trig(f.clone()), &tflow, &x, &grid)?)
        }
        _ => None,
    };
    r.columns(&cols);
    let mut worst_inv: f64 = 0.0;
    for (i, &t) in grid.iter().enumerate() {
        let xi = timechange::cocycle_xi(&tc1, flow.as_ref(), &x, t)?;
        let z = timechange::inverse_z(&tc1, flow.as_ref(), &x, t)?;
        let back = timechange::cocycle_xi(&tc1, flow.as_ref(), &x, z)?;
        let res = (back - t).abs() / t.abs().max(1.0);
        worst_inv = worst_inv.max(res);
        let mut row = vec![num(t), num(xi), num(z), num(res)];
        if let Some(d) = &defects {
            row.push(num(d[i].state_distance));
            row.push(num(d[i].clock_defect));
        }
        r.row(row);
    }
    r.checks.push(Check::at_most("ξ(x, z(x,t)) = t (relative)", worst_inv, 1e-8));
    let mut summary = json!({
        "start": x,
        "tau_inf": tc1.inf,
        "tau_sup": tc1.sup,
        "tau_mean": tau.mean(),
        "xi_over_t_end": timechange::cocycle_xi(&tc1, flow.as_ref(), &x, c.t_end)? / c.t_end,
    });
    if let Some(d) = &defects {
        if c.mismatch == 0.0 {
            let worst = d.iter().map(|e| e.state_distance.max(e.clock_defect.abs())).fold(0.0, f64::max);
            r.checks.push(Check::at_most("conjugacy defect", worst, 1e-6));
            summary["conjugacy_defect"] = json!(worst);
        } else {
            let fit = timechange::drift_slope(d).context("drift fit needs at least two times")?;
            let rel = (fit.slope - c.mismatch.abs()).abs() / c.mismatch.abs();
            r.checks.push(Check::at_most("drift slope vs mean gap (relative)", rel, 0.1));
            summary["drift"] = json!({ "slope": fit.slope, "r2": fit.r2, "mean_gap": c.mismatch });
        }
    }
    r.summary = summary;
    Ok(r)
}
