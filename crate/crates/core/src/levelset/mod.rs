//! The level set `{s : Phi(s) = 1}`: roots on the line, ray solving, the
//! counterexample curve `y_x`, curve tracing in the plane and closure probes.

mod closure;
mod trace;

pub use closure::{
    closure_schedule, counterexample_report, probe_closure, trace_csv, trace_svg, BoundaryProbe, ClosureReport,
    CounterexampleReport, Verdict,
};
pub use trace::{trace_level_curve, trace_level_curve_with, LevelTrace, Termination, TraceOptions};

use crate::error::{Error, Result};
use crate::laplace::{evaluate, Extras, LaplaceOptions, Status};
use crate::measures::{build_counterexample, counterexample_log_m, Body, Exponent, LatticeMeasure, Variant};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum Roots1d<F> {
    /// At most two roots, ascending; `0` is always one of them.
    Roots(Vec<F>),
    /// `Phi` is identically one (support `{0}`).
    AllOfLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayOutcome<F> {
    Root(F),
    NoRootInRange,
}

/// Evaluation tolerance used by the solvers for a target residual `tol`.
pub fn eval_tol<F: Real>(tol: F) -> F {
    (tol * F::lit(1e-2)).max(F::lit(1e-14))
}

/// `log Phi` along a direction, or the knowledge that it exceeds `stop_above`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum RayValue<F> {
    Value {
        log_phi: F,
        slope: F,
    },
    /// `Phi` diverges or is certainly larger than `exp(stop_above)`.
    Above,
    Failed,
}

impl<F: Real> RayValue<F> {
    /// Ordering key: `+inf` for `Above`.
    fn key(self) -> Option<F> {
        match self {
            RayValue::Value { log_phi, .. } => Some(log_phi),
            RayValue::Above => Some(F::infinity()),
            RayValue::Failed => None,
        }
    }
}

pub(crate) fn ray_value<F: Real>(
    mu: &LatticeMeasure<F>,
    s: &Exponent<F>,
    dir: &[F],
    opts: &LaplaceOptions<F>,
    stop_above: Option<F>,
) -> Result<RayValue<F>> {
    let ev = evaluate(
        mu,
        s,
        opts,
        Extras {
            direction: Some(dir),
            gradient: false,
            stop_above,
        },
    )?;
    Ok(match ev.result.status {
        Status::Diverged => RayValue::Above,
        _ if ev.exceeded => RayValue::Above,
        Status::Inconclusive => RayValue::Failed,
        Status::Converged => {
            let phi = ev.result.log_value.expect("converged value");
            let d = ev.directional.expect("directional sum requested");
            RayValue::Value {
                log_phi: phi.ln(),
                slope: d.sl_div(phi).to_real(),
            }
        }
    })
}

fn bisect_sign<F: Real>(mut lo: F, mut hi: F, mut positive_at: impl FnMut(F) -> Result<bool>) -> Result<(F, F)> {
    // invariant: predicate false at lo, true at hi
    for _ in 0..4000 {
        let mid = lo + (hi - lo) / F::lit(2.0);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            break;
        }
        if positive_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Roots of `Phi(s) = 1` for a measure on `Z`.
pub fn roots_1d<F: Real>(mu: &LatticeMeasure<F>, bracket_halfwidth: F, tol: F) -> Result<Roots1d<F>> {
    if mu.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: mu.dim(),
        });
    }
    if !(bracket_halfwidth > F::zero()) || !(tol > F::zero()) {
        return Err(Error::InvalidArgument(
            "bracket half-width and tolerance must be positive".into(),
        ));
    }
    if let Body::Atoms(atoms) = mu.body() {
        let lo = atoms.iter().map(|a| a.point[0]).min().unwrap_or(0);
        let hi = atoms.iter().map(|a| a.point[0]).max().unwrap_or(0);
        if lo == 0 && hi == 0 {
            return Ok(Roots1d::AllOfLine);
        }
        if lo >= 0 || hi <= 0 {
            // Phi is monotone on the line
            return Ok(Roots1d::Roots(vec![F::zero()]));
        }
    }
    let opts = LaplaceOptions::with_tol(eval_tol(tol));
    let one = [F::one()];
    let eval = |s: F| -> Result<(F, F)> {
        match ray_value(mu, &Exponent::new(vec![s]), &one, &opts, None)? {
            RayValue::Value { log_phi, slope } => Ok((log_phi, slope)),
            RayValue::Above => Err(Error::Diverged),
            RayValue::Failed => Err(Error::NoConvergence(format!("Phi inconclusive at s = {s}"))),
        }
    };

    let (_, d0) = eval(F::zero())?;
    if d0 == F::zero() {
        return Ok(Roots1d::Roots(vec![F::zero()]));
    }
    // the minimizer lies on the side where Phi decreases from 0
    let side = if d0 < F::zero() { F::one() } else { -F::one() };
    let mut h = bracket_halfwidth;
    let mut expansions = 0;
    while eval(side * h)?.1 * side <= F::zero() {
        h = h * F::lit(2.0);
        expansions += 1;
        if expansions > 60 || !h.is_finite() {
            return Err(Error::NoConvergence(
                "minimizer bracket expansion exceeded its cap".into(),
            ));
        }
    }
    let (m_lo, m_hi) = bisect_sign(F::zero(), h, |t| Ok(eval(side * t)?.1 * side > F::zero()))?;
    let m = (m_lo + m_hi) / F::lit(2.0);
    let (min_log, _) = eval(side * m)?;
    if min_log >= -tol {
        return Ok(Roots1d::Roots(vec![F::zero()]));
    }
    let mut b = (m * F::lit(2.0)).max(bracket_halfwidth);
    expansions = 0;
    while eval(side * b)?.0 <= F::zero() {
        b = b * F::lit(2.0);
        expansions += 1;
        if expansions > 60 || !b.is_finite() {
            return Err(Error::NoConvergence("root bracket expansion exceeded its cap".into()));
        }
    }
    let (r_lo, r_hi) = bisect_sign(m, b, |t| Ok(eval(side * t)?.0 > F::zero()))?;
    let r_lo_v = eval(side * r_lo)?.0.abs();
    let r_hi_v = eval(side * r_hi)?.0.abs();
    let r = side * if r_lo_v <= r_hi_v { r_lo } else { r_hi };
    let mut roots = vec![F::zero(), r];
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    Ok(Roots1d::Roots(roots))
}

struct RaySamples<F> {
    samples: Vec<(F, F)>,
    slack: F,
}

impl<F: Real> RaySamples<F> {
    fn insert(&mut self, t: F, v: F) -> Result<()> {
        let i = self.samples.partition_point(|&(u, _)| u < t);
        self.samples.insert(i, (t, v));
        self.check()
    }

    fn check(&self) -> Result<()> {
        let mut up = false;
        let mut down = false;
        for w in self.samples.windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            if a == b {
                continue;
            }
            let gap = if a.is_infinite() || b.is_infinite() {
                F::infinity()
            } else {
                (b - a).abs()
            };
            if gap <= self.slack * (F::one() + a.abs().min(b.abs())) {
                continue;
            }
            if b > a {
                up = true;
            } else {
                down = true;
            }
        }
        if up && down {
            Err(Error::NotMonotone)
        } else {
            Ok(())
        }
    }
}

/// Solves `Phi(base + t dir) = 1` for `t` in `[t_lo, t_hi]`, assuming `Phi` is
/// monotone along the ray there.
pub fn solve_on_ray<F: Real>(
    mu: &LatticeMeasure<F>,
    base: impl Into<Exponent<F>>,
    dir: &[F],
    t_range: (F, F),
    tol: F,
) -> Result<RayOutcome<F>> {
    let base = base.into();
    let (t_lo, t_hi) = t_range;
    if !(t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(Error::InvalidArgument(
            "ray range must be finite with t_lo < t_hi".into(),
        ));
    }
    if !(tol > F::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if dir.len() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            found: dir.len(),
        });
    }
    let opts = LaplaceOptions::with_tol(eval_tol(tol));
    let target = tol / F::lit(4.0);
    let at = |t: F| base.shifted(&dir.iter().map(|&d| d * t).collect::<Vec<_>>());
    let value = |t: F| -> Result<RayValue<F>> {
        match ray_value(mu, &at(t), dir, &opts, Some(F::lit(30.0)))? {
            RayValue::Failed => Err(Error::NoConvergence(format!("Phi inconclusive at t = {t}"))),
            v => Ok(v),
        }
    };
    let mut samples = RaySamples {
        samples: Vec::new(),
        slack: opts.tol * F::lit(10.0),
    };

    let v_lo = value(t_lo)?;
    let v_hi = value(t_hi)?;
    for (t, v) in [(t_lo, v_lo), (t_hi, v_hi)] {
        if let RayValue::Value { log_phi, .. } = v {
            if log_phi.abs() <= target {
                return Ok(RayOutcome::Root(t));
            }
        }
        samples.insert(t, v.key().expect("failed values return early"))?;
    }
    let k_lo = v_lo.key().expect("checked");
    let k_hi = v_hi.key().expect("checked");
    let geometric = t_lo > F::zero() && t_hi / t_lo > F::lit(8.0);
    let midpoint = |a: F, b: F| {
        if geometric && a > F::zero() && b / a > F::lit(4.0) {
            (a * b).sqrt()
        } else {
            a + (b - a) / F::lit(2.0)
        }
    };

    if (k_lo > F::zero()) == (k_hi > F::zero()) {
        // no sign change at the ends: probe the interior for a hidden crossing
        let k = 7;
        for i in 1..k {
            let t = if geometric {
                t_lo * (t_hi / t_lo).powf(F::from_index(i) / F::from_index(k))
            } else {
                t_lo + (t_hi - t_lo) * F::from_index(i) / F::from_index(k)
            };
            let v = value(t)?;
            samples.insert(t, v.key().expect("checked"))?;
            if (v.key().expect("checked") > F::zero()) != (k_lo > F::zero()) {
                return Err(Error::NotMonotone);
            }
        }
        return Ok(RayOutcome::NoRootInRange);
    }

    // bracket: `pos` where log Phi > 0, `neg` where log Phi < 0
    let (mut pos, mut neg) = if k_lo > F::zero() { (t_lo, t_hi) } else { (t_hi, t_lo) };
    let mut best: Option<(F, F, F)> = None; // (t, log_phi, slope)
    for (t, v) in [(t_lo, v_lo), (t_hi, v_hi)] {
        if let RayValue::Value { log_phi, slope } = v {
            if best.is_none_or(|b| log_phi.abs() < b.1.abs()) {
                best = Some((t, log_phi, slope));
            }
        }
    }
    // log Phi is convex along the ray, so Newton from the positive side never
    // overshoots; prefer it over the best point when available
    let mut last_pos = best.filter(|b| b.1 > F::zero());
    let mut stalls = 0;
    for _ in 0..400 {
        let (a, b) = if pos < neg { (pos, neg) } else { (neg, pos) };
        let prev_best = best.map_or(F::infinity(), |bb| bb.1.abs());
        let mut t = midpoint(a, b);
        let mut bisected = true;
        if let Some((tb, lb, sb)) = last_pos.or(best) {
            if stalls < 2 && sb != F::zero() && sb.is_finite() {
                let tn = tb - lb / sb;
                if tn > a && tn < b {
                    t = tn;
                    bisected = false;
                }
            }
        }
        if !(t > a && t < b) {
            break;
        }
        let v = value(t)?;
        samples.insert(t, v.key().expect("checked"))?;
        match v {
            RayValue::Value { log_phi, slope } => {
                if log_phi.abs() <= target {
                    return Ok(RayOutcome::Root(t));
                }
                if best.is_none_or(|bb| log_phi.abs() < bb.1.abs()) {
                    best = Some((t, log_phi, slope));
                }
                if log_phi > F::zero() {
                    pos = t;
                    last_pos = Some((t, log_phi, slope));
                } else {
                    neg = t;
                }
            }
            _ => pos = t,
        }
        let improved = best.map_or(F::infinity(), |bb| bb.1.abs()) <= prev_best / F::lit(2.0);
        if improved || bisected {
            stalls = 0;
        } else {
            stalls += 1;
        }
    }
    match best {
        Some((t, l, _)) if l.abs() <= tol => Ok(RayOutcome::Root(t)),
        _ => Err(Error::NoConvergence("ray bisection exhausted its bracket".into())),
    }
}

/// Exponent of the counterexample curve point for `(x, y)`, anchored at the witness.
pub fn curve_point<F: Real>(variant: Variant, x: F, y: F) -> Exponent<F> {
    Exponent::anchored(variant.witness(), vec![x, y])
}

/// Leading-order estimate of `y_x`.
fn y_estimate<F: Real>(variant: Variant, x: F, log_m: F) -> F {
    let xa = x * F::from_int(variant.slope()) / F::lit(100.0);
    xa * xa * F::lit(2500.0) / log_m
}

/// Solves `y_x` for one `x` on an already built two-dimensional counterexample measure.
pub fn solve_y<F: Real>(mu: &LatticeMeasure<F>, variant: Variant, x: F, tol: F) -> Result<F> {
    let est = y_estimate(variant, x, counterexample_log_m::<F>(variant));
    let base = curve_point(variant, x, F::zero());
    let dir = [F::zero(), F::one()];
    let narrow = solve_on_ray(mu, &base, &dir, (est / F::lit(4.0), est * F::lit(4.0)), tol)?;
    let outcome = match narrow {
        RayOutcome::Root(y) => RayOutcome::Root(y),
        RayOutcome::NoRootInRange => solve_on_ray(mu, &base, &dir, (F::zero(), est.max(F::one()) * F::lit(4.0)), tol)?,
    };
    match outcome {
        RayOutcome::Root(y) => Ok(y),
        RayOutcome::NoRootInRange => Err(Error::NoConvergence(format!("no y on the ray at x = {x}"))),
    }
}

/// The table `(x, y_x)` with `Phi` at the curve point equal to one.
pub fn y_curve<F: Real>(variant: Variant, x_grid: &[F], tol: F) -> Result<Vec<(F, F)>> {
    if x_grid.iter().any(|&x| !(x > F::zero()) || !x.is_finite()) {
        return Err(Error::InvalidArgument("x values must be positive".into()));
    }
    if x_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("x values must be sorted decreasing".into()));
    }
    let mu = build_counterexample::<F>(variant, 2)?;
    x_grid
        .iter()
        .map(|&x| Ok((x, solve_y(&mu, variant, x, tol)?)))
        .collect()
}
