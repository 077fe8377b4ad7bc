//! Predictor-corrector tracing of `log Phi = 0` in the plane.

use crate::error::{Error, Result};
use crate::laplace::{log_laplace_and_gradient, LaplaceOptions};
use crate::measures::{Exponent, LatticeMeasure};
use crate::real::{dot, norm2, Real};

use super::eval_tol;

/// Corrected point, its residual and its gradient.
type Corrected<F> = (Exponent<F>, F, Vec<F>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ClosedLoop,
    HitDomainBoundary,
    StepLimit,
    DegenerateStart,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::ClosedLoop => "ClosedLoop",
            Termination::HitDomainBoundary => "HitDomainBoundary",
            Termination::StepLimit => "StepLimit",
            Termination::DegenerateStart => "DegenerateStart",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions<F> {
    pub step: F,
    pub max_steps: usize,
    /// Corrector tolerance on `|log Phi|`.
    pub tol: F,
    /// Initial orientation: the first tangent has a non-negative dot product with it.
    pub direction: Option<Vec<F>>,
    /// Points are stored as offsets from this anchor (defaults to the start).
    pub anchor: Option<Vec<F>>,
    /// Shell budget per evaluation; exhausting it counts as leaving the domain.
    pub max_terms: u64,
}

impl<F: Real> TraceOptions<F> {
    pub fn new(step: F, max_steps: usize, tol: F) -> Self {
        TraceOptions {
            step,
            max_steps,
            tol,
            direction: None,
            anchor: None,
            max_terms: 1 << 18,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace<F> {
    pub points: Vec<Exponent<F>>,
    /// `|log Phi|` at each point.
    pub residuals: Vec<F>,
    pub termination: Termination,
    /// Upper bound on the distance between consecutive points.
    pub max_step: F,
}

impl<F: Real> LevelTrace<F> {
    /// Points as plain vectors.
    pub fn resolved(&self) -> Vec<Vec<F>> {
        self.points.iter().map(|p| p.resolve()).collect()
    }
}

const MIN_STEP: f64 = 1e-9;
const NEWTON_CAP: usize = 20;

struct Corrector<'a, F: Real> {
    mu: &'a LatticeMeasure<F>,
    opts: LaplaceOptions<F>,
    target: F,
}

impl<F: Real> Corrector<'_, F> {
    /// `log Phi` and its gradient, `None` outside the usable domain.
    fn eval(&self, s: &Exponent<F>) -> Result<Option<(F, Vec<F>)>> {
        match log_laplace_and_gradient(self.mu, s, &self.opts) {
            Ok((r, g)) => {
                let phi = r.log_value.expect("converged value");
                Ok(Some((phi.ln(), g.iter().map(|gj| gj.sl_div(phi).to_real()).collect())))
            }
            Err(Error::Diverged) | Err(Error::Inconclusive { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Newton along the gradient from `p`; stays within `radius` of `p`.
    fn correct(&self, p: Exponent<F>, radius: F) -> Result<Option<Corrected<F>>> {
        let Some((mut f, mut g)) = self.eval(&p)? else {
            return Ok(None);
        };
        let mut q = p.clone();
        for _ in 0..NEWTON_CAP {
            if f.abs() <= self.target {
                return Ok(Some((q, f.abs(), g)));
            }
            let gg = dot(&g, &g);
            if !(gg > F::zero()) {
                return Ok(None);
            }
            let mut lambda = F::one();
            let mut accepted = None;
            for _ in 0..12 {
                let delta: Vec<F> = g.iter().map(|&gj| -lambda * f * gj / gg).collect();
                let cand = q.shifted(&delta);
                if cand.distance(&p) <= radius {
                    if let Some((fc, gc)) = self.eval(&cand)? {
                        if fc.abs() < f.abs() {
                            accepted = Some((cand, fc, gc));
                            break;
                        }
                    }
                }
                lambda = lambda / F::lit(2.0);
            }
            match accepted {
                Some((c, fc, gc)) => {
                    q = c;
                    f = fc;
                    g = gc;
                }
                None => return Ok(None),
            }
        }
        if f.abs() <= self.target {
            Ok(Some((q, f.abs(), g)))
        } else {
            Ok(None)
        }
    }
}

fn unit_tangent<F: Real>(g: &[F], prev: &[F]) -> Vec<F> {
    let n = norm2(g);
    let t = vec![-g[1] / n, g[0] / n];
    if dot(&t, prev) < F::zero() {
        vec![-t[0], -t[1]]
    } else {
        t
    }
}

/// Distance from `c` to the segment `[a, b]`.
fn segment_distance<F: Real>(c: &[F], a: &[F], b: &[F]) -> F {
    let ab: Vec<F> = a.iter().zip(b).map(|(&x, &y)| y - x).collect();
    let ac: Vec<F> = a.iter().zip(c).map(|(&x, &y)| y - x).collect();
    let len2 = dot(&ab, &ab);
    let t = if len2 > F::zero() {
        (dot(&ac, &ab) / len2).max(F::zero()).min(F::one())
    } else {
        F::zero()
    };
    let d: Vec<F> = ac.iter().zip(&ab).map(|(&u, &v)| u - t * v).collect();
    norm2(&d)
}

pub fn trace_level_curve<F: Real>(
    mu: &LatticeMeasure<F>,
    start: &[F],
    step: F,
    max_steps: usize,
    tol: F,
) -> Result<LevelTrace<F>> {
    trace_level_curve_with(mu, start, &TraceOptions::new(step, max_steps, tol))
}

/// Traces the level curve through `start` in one direction until it closes,
/// leaves the domain or runs out of steps.
pub fn trace_level_curve_with<F: Real>(
    mu: &LatticeMeasure<F>,
    start: &[F],
    o: &TraceOptions<F>,
) -> Result<LevelTrace<F>> {
    if mu.dim() != 2 || start.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: if mu.dim() != 2 { mu.dim() } else { start.len() },
        });
    }
    if !(o.step > F::zero()) || !(o.tol > F::zero()) {
        return Err(Error::InvalidArgument("step and tolerance must be positive".into()));
    }
    let anchor = o.anchor.clone().unwrap_or_else(|| start.to_vec());
    if anchor.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: anchor.len(),
        });
    }
    let offset = start.iter().zip(&anchor).map(|(&s, &a)| s - a).collect();
    let s0 = Exponent::anchored(anchor, offset);
    let corrector = Corrector {
        mu,
        opts: LaplaceOptions {
            max_terms: o.max_terms,
            ..LaplaceOptions::with_tol(eval_tol(o.tol))
        },
        target: o.tol / F::lit(4.0),
    };
    let (f0, g0) = match corrector.eval(&s0)? {
        Some(v) => v,
        None => {
            return Err(Error::StartNotOnSet {
                residual: f64::INFINITY,
            })
        }
    };
    if !(f0.abs() <= o.tol) {
        return Err(Error::StartNotOnSet {
            residual: f0.abs().to_f64_lossy(),
        });
    }
    let max_step = o.step * F::lit(2.0);
    let mut trace = LevelTrace {
        points: vec![s0.clone()],
        residuals: vec![f0.abs()],
        termination: Termination::StepLimit,
        max_step,
    };
    // |grad Phi| = Phi |grad log Phi| and Phi = 1 here
    if norm2(&g0) < F::lit(1e-12) {
        trace.termination = Termination::DegenerateStart;
        return Ok(trace);
    }
    let hint = o.direction.clone().unwrap_or_else(|| vec![-g0[1], g0[0]]);
    let mut tangent = unit_tangent(&g0, &hint);
    let mut cur = s0.clone();
    let mut h = o.step;
    let min_step = F::lit(MIN_STEP);
    let start_pt = s0.offset().to_vec();

    while trace.points.len() <= o.max_steps {
        let p = cur.shifted(&[h * tangent[0], h * tangent[1]]);
        let accepted = match corrector.correct(p, h)? {
            Some((q, res, g)) if norm2(&g) > F::zero() => {
                let t_new = unit_tangent(&g, &tangent);
                let moved = q.distance(&cur);
                // reject corner cutting and steps that jumped to another branch
                if dot(&t_new, &tangent) > F::lit(0.5) && moved <= max_step && moved > F::zero() {
                    Some((q, res, t_new))
                } else {
                    None
                }
            }
            _ => None,
        };
        let Some((q, res, t_new)) = accepted else {
            h = h / F::lit(2.0);
            if h < min_step {
                trace.termination = Termination::HitDomainBoundary;
                return Ok(trace);
            }
            continue;
        };
        // all points share the start's anchor, so offsets compare exactly
        let closes =
            trace.points.len() >= 10 && segment_distance(&start_pt, cur.offset(), q.offset()) <= h / F::lit(2.0);
        trace.points.push(q.clone());
        trace.residuals.push(res);
        if closes {
            trace.termination = Termination::ClosedLoop;
            return Ok(trace);
        }
        cur = q;
        tangent = t_new;
        h = (h * F::lit(1.5)).min(o.step);
    }
    trace.termination = Termination::StepLimit;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{gauss2d, simple_walk};

    #[test]
    fn mean_zero_walk_is_degenerate() {
        let w = simple_walk::<f64>(2).unwrap();
        let t = trace_level_curve(&w, &[0.0, 0.0], 0.05, 100, 1e-10).unwrap();
        assert_eq!(t.termination, Termination::DegenerateStart);
        assert_eq!(t.points.len(), 1);
    }

    #[test]
    fn gauss_curve_closes() {
        let g = gauss2d([0.5f64, 0.3]);
        let t = trace_level_curve(&g, &[0.0, 0.0], 0.05, 2000, 1e-10).unwrap();
        assert_eq!(t.termination, Termination::ClosedLoop);
        assert!(t.residuals.iter().all(|&r| r <= 1e-10));
        for w in t.points.windows(2) {
            assert!(w[0].distance(&w[1]) <= t.max_step);
        }
    }

    #[test]
    fn start_off_the_set() {
        let g = gauss2d([0.5f64, 0.3]);
        assert!(matches!(
            trace_level_curve(&g, &[1.0, 1.0], 0.05, 10, 1e-10),
            Err(Error::StartNotOnSet { .. })
        ));
    }
}
