//! Closure probes and the counterexample report.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::laplace::{domain_membership, log_laplace_with, LaplaceOptions, Status};
use crate::lognum::SignedLog;
use crate::measures::{build_counterexample, counterexample_log_m, Convergence, Exponent, LatticeMeasure, Variant};
use crate::real::Real;

use super::{curve_point, eval_tol, solve_y, y_curve, LevelTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NonClosednessWitness,
    InSet,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::NonClosednessWitness => "NonClosednessWitness",
            Verdict::InSet => "InSet",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// Domain membership at `candidate + delta e_j` (`delta` signed).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProbe<F> {
    pub axis: usize,
    pub delta: F,
    pub membership: Convergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport<F> {
    pub candidate: Exponent<F>,
    pub sequence_points: Vec<Exponent<F>>,
    /// `|log Phi|` at each sequence point.
    pub sequence_residuals: Vec<F>,
    /// Distance of each sequence point to the candidate.
    pub distances: Vec<F>,
    /// `Phi(candidate)` in log form; `+inf` when it diverges.
    pub candidate_log_phi: SignedLog<F>,
    pub candidate_tail_bound: SignedLog<F>,
    pub boundary_probes: Vec<BoundaryProbe<F>>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport<F> {
    pub variant: Variant,
    /// The normalizer `M` in log form.
    pub log_m: SignedLog<F>,
    pub witness: Vec<F>,
    /// `Phi(witness)` in log form.
    pub witness_log_phi: SignedLog<F>,
    pub witness_tail_bound: SignedLog<F>,
    pub witness_terms_used: u64,
    pub y_table: Vec<(F, F)>,
    pub closure: ClosureReport<F>,
}

const PROBE_DELTA: f64 = 1e-3;

/// The sequence must approach the candidate: distances never grow and the
/// last one is at most half the first (or everything sits on the candidate).
fn check_convergent<F: Real>(distances: &[F]) -> Result<()> {
    let Some(&first) = distances.first() else {
        return Err(Error::SequenceNotConvergent);
    };
    let slack = F::lit(1e-12);
    let monotone = distances
        .windows(2)
        .all(|w| w[1] <= w[0] * (F::one() + slack) + slack * slack);
    let last = *distances.last().expect("non-empty");
    let shrinks = first == F::zero() || last <= first / F::lit(2.0);
    if monotone && shrinks {
        Ok(())
    } else {
        Err(Error::SequenceNotConvergent)
    }
}

/// Decides whether `candidate` is a limit of level-set points that is itself
/// off the level set.
pub fn probe_closure<F: Real>(
    mu: &LatticeMeasure<F>,
    candidate: impl Into<Exponent<F>>,
    sequence: &[Exponent<F>],
    tol: F,
) -> Result<ClosureReport<F>> {
    let candidate = candidate.into();
    if let Some(p) = sequence.iter().find(|p| p.dim() != candidate.dim()) {
        return Err(Error::DimensionMismatch {
            expected: candidate.dim(),
            found: p.dim(),
        });
    }
    let distances: Vec<F> = sequence.iter().map(|p| p.distance(&candidate)).collect();
    check_convergent(&distances)?;

    let opts = LaplaceOptions::with_tol(eval_tol(tol));
    let mut residuals = Vec::with_capacity(sequence.len());
    for p in sequence {
        let r = log_laplace_with(mu, p, &opts)?;
        residuals.push(r.log_phi().map_or(F::infinity(), |l| l.abs()));
    }
    let c = log_laplace_with(mu, &candidate, &opts)?;
    let (candidate_log_phi, candidate_tail_bound) = match c.status {
        Status::Diverged => (SignedLog::from_log(F::infinity()), c.tail_bound),
        _ => (c.log_value.expect("value present"), c.tail_bound),
    };

    let delta = F::lit(PROBE_DELTA);
    let mut boundary_probes = Vec::new();
    for axis in 0..candidate.dim() {
        for d in [-delta, delta] {
            let mut shift = vec![F::zero(); candidate.dim()];
            shift[axis] = d;
            boundary_probes.push(BoundaryProbe {
                axis,
                delta: d,
                membership: domain_membership(mu, candidate.shifted(&shift)),
            });
        }
    }

    let on_set = residuals.iter().all(|&r| r <= tol);
    let verdict = match (on_set, c.status, c.log_phi()) {
        (true, Status::Converged, Some(l)) if l.abs() <= tol => Verdict::InSet,
        (true, Status::Converged, Some(l)) if l.abs() > F::lit(10.0) * tol => Verdict::NonClosednessWitness,
        _ => Verdict::Inconclusive,
    };
    Ok(ClosureReport {
        candidate,
        sequence_points: sequence.to_vec(),
        sequence_residuals: residuals,
        distances,
        candidate_log_phi,
        candidate_tail_bound,
        boundary_probes,
        verdict,
    })
}

/// The geometric schedule `x_k = 2^-k`, `k = 1..=count`.
pub fn closure_schedule<F: Real>(count: u32) -> Vec<F> {
    (1..=count).map(|k| F::lit(0.5).powi(k as i32)).collect()
}

/// Everything the counterexample argument names, for one variant.
pub fn counterexample_report<F: Real>(variant: Variant, x_grid: &[F], tol: F) -> Result<CounterexampleReport<F>> {
    let mu = build_counterexample::<F>(variant, 2)?;
    let witness: Vec<F> = variant.witness();
    let opts = LaplaceOptions::with_tol(eval_tol(tol));
    let w = log_laplace_with(&mu, curve_point(variant, F::zero(), F::zero()), &opts)?;
    let witness_log_phi = match w.status {
        Status::Converged => w.log_value.expect("converged value"),
        Status::Diverged => return Err(Error::Diverged),
        Status::Inconclusive => {
            return Err(Error::Inconclusive {
                terms_used: w.terms_used,
            })
        }
    };
    let y_table = y_curve(variant, x_grid, tol)?;
    let mut sequence = Vec::new();
    for x in closure_schedule::<F>(12) {
        let y = solve_y(&mu, variant, x, tol)?;
        sequence.push(curve_point(variant, x, y));
    }
    let closure = probe_closure(&mu, curve_point(variant, F::zero(), F::zero()), &sequence, tol)?;
    Ok(CounterexampleReport {
        variant,
        log_m: SignedLog::from_log(counterexample_log_m(variant)),
        witness,
        witness_log_phi,
        witness_tail_bound: w.tail_bound,
        witness_terms_used: w.terms_used,
        y_table,
        closure,
    })
}

/// `x,y,log_phi_residual` lines with a header.
pub fn trace_csv<F: Real>(trace: &LevelTrace<F>) -> String {
    let mut out = String::from("x,y,log_phi_residual\n");
    for (p, r) in trace.points.iter().zip(&trace.residuals) {
        let v = p.resolve();
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", v[0], v[1], r);
    }
    out
}

/// The traced polyline scaled into the unit square, with an optional marker.
pub fn trace_svg<F: Real>(trace: &LevelTrace<F>, marker: Option<&[F]>) -> String {
    let pts: Vec<(f64, f64)> = trace
        .points
        .iter()
        .map(|p| {
            let v = p.resolve();
            (v[0].to_f64_lossy(), v[1].to_f64_lossy())
        })
        .collect();
    let mut all = pts.clone();
    if let Some(m) = marker {
        all.push((m[0].to_f64_lossy(), m[1].to_f64_lossy()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-300) * 1.1;
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let map = |(x, y): (f64, f64)| ((x - cx) / span + 0.5, 0.5 - (y - cy) / span);
    let mut out = String::from("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1 1\">\n");
    out.push_str("  <polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.004\" points=\"");
    for (i, &p) in pts.iter().enumerate() {
        let (u, v) = map(p);
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{u:.6},{v:.6}");
    }
    out.push_str("\"/>\n");
    if let Some(m) = marker {
        let (u, v) = map((m[0].to_f64_lossy(), m[1].to_f64_lossy()));
        let _ = writeln!(out, "  <circle cx=\"{u:.6}\" cy=\"{v:.6}\" r=\"0.01\" fill=\"red\"/>");
    }
    out.push_str("</svg>\n");
    out
}
