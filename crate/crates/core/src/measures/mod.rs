//! Discrete probability measures on Z^d.
//!
//! A [`LatticeMeasure`] is either a finite list of atoms or a certified
//! [`TermStream`] for infinite support. The counterexample measure places
//! atom `n >= 1` with weight `exp(100 n - n^2) / (n^2 M)` either at
//! `(100 n, -n^2)` ([`Variant::A`]) or at `(n, -n^2)` ([`Variant::B`]).

pub mod certificate;
pub mod stream;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use certificate::{Convergence, ShellEnvelope, TailCertificate};
pub use stream::{CoordinateBound, GaussStream, LiftedStream, QuadraticStream, ShellBuffer, TermStream};

use crate::error::{Error, Result};
use crate::lognum::{lse_accumulate, SignedLog};
use crate::real::{dot_int, Real};

/// An exponent vector `s = anchor + offset`.
///
/// Points close to a distinguished anchor (a witness, a ray base) keep full
/// relative precision in the offset; streams fold the anchor into their
/// coefficients before the offset is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponent<F> {
    anchor: Vec<F>,
    offset: Vec<F>,
}

impl<F: Real> Exponent<F> {
    pub fn new(s: Vec<F>) -> Self {
        let offset = vec![F::zero(); s.len()];
        Exponent { anchor: s, offset }
    }

    pub fn zeros(dim: usize) -> Self {
        Exponent::new(vec![F::zero(); dim])
    }

    pub fn anchored(anchor: Vec<F>, offset: Vec<F>) -> Self {
        assert_eq!(anchor.len(), offset.len(), "anchor and offset dimensions differ");
        Exponent { anchor, offset }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn anchor(&self) -> &[F] {
        &self.anchor
    }

    pub fn offset(&self) -> &[F] {
        &self.offset
    }

    /// The plain vector `anchor + offset` (rounded).
    pub fn resolve(&self) -> Vec<F> {
        self.anchor.iter().zip(&self.offset).map(|(&a, &o)| a + o).collect()
    }

    /// `x . s` for a lattice point, anchor and offset summed separately.
    pub fn dot_lattice(&self, x: &[i64]) -> F {
        dot_int(x, &self.anchor) + dot_int(x, &self.offset)
    }

    /// Same anchor, offset moved by `delta`.
    pub fn shifted(&self, delta: &[F]) -> Self {
        Exponent {
            anchor: self.anchor.clone(),
            offset: self.offset.iter().zip(delta).map(|(&o, &d)| o + d).collect(),
        }
    }

    /// Keeps the first `k` coordinates.
    pub fn truncate(&self, k: usize) -> Self {
        Exponent {
            anchor: self.anchor[..k].to_vec(),
            offset: self.offset[..k].to_vec(),
        }
    }

    /// Coordinate-wise difference `self - other`, exact in the offsets when
    /// both share the same anchor.
    pub fn diff(&self, other: &Exponent<F>) -> Vec<F> {
        if self.anchor == other.anchor {
            self.offset.iter().zip(&other.offset).map(|(&a, &b)| a - b).collect()
        } else {
            let (a, b) = (self.resolve(), other.resolve());
            a.iter().zip(&b).map(|(&x, &y)| x - y).collect()
        }
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Exponent<F>) -> F {
        crate::real::norm2(&self.diff(other))
    }

    pub fn is_finite(&self) -> bool {
        self.anchor.iter().chain(&self.offset).all(|v| v.is_finite())
    }
}

impl<F: Real> From<Vec<F>> for Exponent<F> {
    fn from(s: Vec<F>) -> Self {
        Exponent::new(s)
    }
}

impl<F: Real> From<&[F]> for Exponent<F> {
    fn from(s: &[F]) -> Self {
        Exponent::new(s.to_vec())
    }
}

impl<F: Real, const N: usize> From<[F; N]> for Exponent<F> {
    fn from(s: [F; N]) -> Self {
        Exponent::new(s.to_vec())
    }
}

impl<F: Real> From<&Exponent<F>> for Exponent<F> {
    fn from(s: &Exponent<F>) -> Self {
        s.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom<F> {
    pub point: Vec<i64>,
    pub logweight: SignedLog<F>,
}

impl<F: Real> Atom<F> {
    pub fn new(point: Vec<i64>, logweight: F) -> Self {
        Atom {
            point,
            logweight: SignedLog::from_log(logweight),
        }
    }
}

#[derive(Clone)]
pub enum Body<F> {
    /// Sorted lexicographically by point.
    Atoms(Vec<Atom<F>>),
    Stream(Arc<dyn TermStream<F>>),
}

impl<F: Real> fmt::Debug for Body<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Atoms(a) => f.debug_tuple("Atoms").field(a).finish(),
            Body::Stream(s) => f.debug_tuple("Stream").field(s).finish(),
        }
    }
}

/// Declared asymptotic profile `log mu(x) <= -alpha |x|^q + beta |x| + O(log |x|)`
/// in the sup norm `|x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEnvelope<F> {
    pub q: u8,
    pub alpha: F,
    pub beta: F,
}

impl<F: Real> MomentEnvelope<F> {
    pub fn new(q: u8, alpha: F, beta: F) -> Self {
        MomentEnvelope { q, alpha, beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentClass<F> {
    FiniteSupport,
    /// `sum exp(|x|^(1+epsilon)) mu(x)` converges.
    SuperExponential {
        epsilon: F,
    },
    /// `sum exp(a |x|) mu(x)` converges for this `a`, but no super-exponential moment does.
    ExponentialOnly {
        a: F,
    },
    Heavy,
    Undeclared,
}

impl<F> MomentClass<F> {
    pub fn tag(&self) -> &'static str {
        match self {
            MomentClass::FiniteSupport => "FiniteSupport",
            MomentClass::SuperExponential { .. } => "SuperExponential",
            MomentClass::ExponentialOnly { .. } => "ExponentialOnly",
            MomentClass::Heavy => "Heavy",
            MomentClass::Undeclared => "Undeclared",
        }
    }
}

/// Which support the counterexample measure uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Atom `n` at `(100 n, -n^2)`; witness `(-1, -1)`.
    A,
    /// Atom `n` at `(n, -n^2)`; witness `(-100, -1)`.
    B,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::A => "A",
            Variant::B => "B",
        }
    }

    /// The point of the closure of the level set where `Phi = zeta(2) / M`.
    pub fn witness<F: Real>(self) -> Vec<F> {
        match self {
            Variant::A => vec![-F::one(), -F::one()],
            Variant::B => vec![F::lit(-100.0), -F::one()],
        }
    }

    /// First-coordinate slope of the atoms (`100` for A, `1` for B).
    pub fn slope(self) -> i64 {
        match self {
            Variant::A => 100,
            Variant::B => 1,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone)]
pub struct LatticeMeasure<F> {
    dim: usize,
    body: Body<F>,
    label: String,
    envelope: Option<MomentEnvelope<F>>,
}

impl<F: Real> fmt::Debug for LatticeMeasure<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeMeasure")
            .field("dim", &self.dim)
            .field("body", &self.body)
            .field("label", &self.label)
            .field("envelope", &self.envelope)
            .finish()
    }
}

impl<F: Real> LatticeMeasure<F> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &Body<F> {
        &self.body
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Replaces the declared moment envelope.
    pub fn with_envelope(mut self, envelope: MomentEnvelope<F>) -> Self {
        self.envelope = Some(envelope);
        self
    }

    pub fn envelope(&self) -> Option<MomentEnvelope<F>> {
        self.envelope
    }

    pub fn atoms(&self) -> Option<&[Atom<F>]> {
        match &self.body {
            Body::Atoms(a) => Some(a),
            Body::Stream(_) => None,
        }
    }

    pub fn stream(&self) -> Option<&Arc<dyn TermStream<F>>> {
        match &self.body {
            Body::Stream(s) => Some(s),
            Body::Atoms(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.body, Body::Atoms(_))
    }

    /// Wraps a stream as a measure; its natural moment envelope is kept.
    pub fn from_stream(stream: Arc<dyn TermStream<F>>, label: impl Into<String>) -> Self {
        LatticeMeasure {
            dim: stream.dim(),
            envelope: stream.moment_envelope(),
            body: Body::Stream(stream),
            label: label.into(),
        }
    }

    /// Stream measure without a declared envelope.
    pub fn from_stream_undeclared(stream: Arc<dyn TermStream<F>>, label: impl Into<String>) -> Self {
        LatticeMeasure {
            envelope: None,
            ..Self::from_stream(stream, label)
        }
    }

    /// Atoms of shell `n` of a stream measure (`(point, logweight)` pairs).
    pub fn shell(&self, n: u64) -> Option<Vec<Atom<F>>> {
        let s = self.stream()?;
        let mut buf = ShellBuffer::new(self.dim);
        s.shell_atoms(n, &mut buf);
        Some(buf.iter().map(|(x, l)| Atom::new(x.to_vec(), l)).collect())
    }

    /// Mean vector of a finitely supported measure.
    pub fn mean(&self) -> Option<Vec<F>> {
        let atoms = self.atoms()?;
        let mut m = vec![F::zero(); self.dim];
        for a in atoms {
            let w = a.logweight.to_real();
            for (mj, &xj) in m.iter_mut().zip(&a.point) {
                *mj = *mj + w * F::from_int(xj);
            }
        }
        Some(m)
    }
}

fn lex(a: &[i64], b: &[i64]) -> Ordering {
    a.cmp(b)
}

/// Validated finitely supported measure; normalization is checked separately.
pub fn build_atoms<F: Real>(dim: usize, atoms: Vec<Atom<F>>) -> Result<LatticeMeasure<F>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("a measure needs at least one atom".into()));
    }
    for a in &atoms {
        if a.point.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.point.len(),
            });
        }
        if !a.logweight.is_positive() || !a.logweight.logmag().is_finite() {
            return Err(Error::NonPositiveWeight(a.point.clone()));
        }
    }
    let mut atoms = atoms;
    atoms.sort_by(|a, b| lex(&a.point, &b.point));
    if let Some(w) = atoms.windows(2).find(|w| w[0].point == w[1].point) {
        return Err(Error::DuplicatePoint(w[0].point.clone()));
    }
    Ok(LatticeMeasure {
        dim,
        body: Body::Atoms(atoms),
        label: String::from("atoms"),
        envelope: None,
    })
}

/// `+1` with probability `p`, `-1` with probability `1 - p`.
pub fn biased_walk<F: Real>(p: F) -> Result<LatticeMeasure<F>> {
    if !(p > F::zero() && p < F::one()) {
        return Err(Error::InvalidArgument("p must lie in (0, 1)".into()));
    }
    let m = build_atoms(1, vec![Atom::new(vec![1], p.ln()), Atom::new(vec![-1], (-p).ln_1p())])?;
    Ok(m.with_label(format!("biased-walk p={p}")))
}

/// Uniform measure on `{±e_1, ..., ±e_d}`.
pub fn simple_walk<F: Real>(dim: usize) -> Result<LatticeMeasure<F>> {
    let lw = -F::from_index(2 * dim as u64).ln();
    let mut atoms = Vec::with_capacity(2 * dim);
    for j in 0..dim {
        for sgn in [-1i64, 1] {
            let mut p = vec![0; dim];
            p[j] = sgn;
            atoms.push(Atom::new(p, lw));
        }
    }
    Ok(build_atoms(dim, atoms)?.with_label(format!("simple-walk d={dim}")))
}

/// Discrete Gaussian on Z^2 with the given drift.
pub fn gauss2d<F: Real>(drift: [F; 2]) -> LatticeMeasure<F> {
    LatticeMeasure::from_stream(
        Arc::new(GaussStream::new(drift)),
        format!("gauss2d drift={},{}", drift[0], drift[1]),
    )
}

/// The two-dimensional counterexample measure, lifted to `dim >= 2`.
pub fn build_counterexample<F: Real>(variant: Variant, dim: usize) -> Result<LatticeMeasure<F>> {
    if dim < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: dim,
        });
    }
    let base: Arc<dyn TermStream<F>> = Arc::new(QuadraticStream::new(
        vec![variant.slope(), 0],
        vec![0, -1],
        F::one(),
        F::lit(100.0),
        F::lit(2.0),
    ));
    let m = LatticeMeasure::from_stream(base, format!("counterexample-{}", variant.name()));
    if dim == 2 {
        Ok(m)
    } else {
        let label = format!("{} d={dim}", m.label());
        Ok(lift_dimension(&m, dim)?.with_label(label))
    }
}

/// `log M = log sum_n exp(100 n - n^2) / n^2`, read back from the stream's normalizer.
pub fn counterexample_log_m<F: Real>(variant: Variant) -> F {
    QuadraticStream::new(
        vec![variant.slope(), 0],
        vec![0, -1],
        F::one(),
        F::lit(100.0),
        F::lit(2.0),
    )
    .log_norm()
}

/// Returns `log Phi(0)`; fails unless `|log Phi(0)| <= tol`.
pub fn validate_normalization<F: Real>(mu: &LatticeMeasure<F>, tol: F) -> Result<SignedLog<F>> {
    let total = match &mu.body {
        Body::Atoms(atoms) => lse_accumulate(atoms.iter().map(|a| a.logweight)),
        Body::Stream(_) => {
            let opts = crate::laplace::LaplaceOptions {
                tol: tol.min(F::lit(1e-13)),
                ..Default::default()
            };
            let r = crate::laplace::log_laplace_with(mu, Exponent::zeros(mu.dim), &opts)?;
            r.log_value.ok_or(Error::Diverged)?
        }
    };
    let excess = total.ln();
    if excess.abs() <= tol {
        Ok(SignedLog::from_log(excess))
    } else {
        Err(Error::NotNormalized {
            excess: excess.to_f64_lossy(),
        })
    }
}

/// Moment regime from the declared envelope (finite support is always `FiniteSupport`).
pub fn classify_moment<F: Real>(mu: &LatticeMeasure<F>) -> MomentClass<F> {
    if mu.is_finite() {
        return MomentClass::FiniteSupport;
    }
    let Some(env) = mu.envelope else {
        return MomentClass::Undeclared;
    };
    let zero = F::zero();
    match env.q {
        // any q > 1 leaves room for every epsilon < q - 1; report the midpoint
        2 if env.alpha > zero => MomentClass::SuperExponential { epsilon: F::lit(0.5) },
        1 if env.alpha - env.beta > zero => MomentClass::ExponentialOnly {
            a: F::lit(0.5) * (env.alpha - env.beta),
        },
        _ => MomentClass::Heavy,
    }
}

/// Embeds a measure on Z^2 into Z^d by padding atoms with zeros.
pub fn lift_dimension<F: Real>(mu: &LatticeMeasure<F>, d: usize) -> Result<LatticeMeasure<F>> {
    if mu.dim != 2 || d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: if mu.dim != 2 { mu.dim } else { d },
        });
    }
    if d == 2 {
        return Ok(mu.clone());
    }
    let body = match &mu.body {
        Body::Atoms(atoms) => {
            let mut lifted: Vec<Atom<F>> = atoms
                .iter()
                .map(|a| {
                    let mut p = a.point.clone();
                    p.resize(d, 0);
                    Atom {
                        point: p,
                        logweight: a.logweight,
                    }
                })
                .collect();
            lifted.sort_by(|a, b| lex(&a.point, &b.point));
            Body::Atoms(lifted)
        }
        Body::Stream(s) => Body::Stream(Arc::new(LiftedStream::new(s.clone(), d))),
    };
    Ok(LatticeMeasure {
        dim: d,
        body,
        label: format!("{} lifted to d={d}", mu.label),
        envelope: mu.envelope,
    })
}

/// Inverse-CDF sampler over the atoms of a finitely supported measure.
#[derive(Debug, Clone)]
pub struct AtomSampler<'a, F> {
    atoms: &'a [Atom<F>],
    cumulative: Vec<f64>,
}

impl<'a, F: Real> AtomSampler<'a, F> {
    pub fn new(mu: &'a LatticeMeasure<F>) -> Result<Self> {
        let atoms = mu.atoms().ok_or(Error::UnsupportedStream)?;
        let log_total = lse_accumulate(atoms.iter().map(|a| a.logweight)).ln();
        let mut acc = 0.0f64;
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += (a.logweight.ln() - log_total).to_f64_lossy().exp();
                acc
            })
            .collect();
        Ok(AtomSampler { atoms, cumulative })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a [i64] {
        let total = *self.cumulative.last().expect("non-empty");
        let u: f64 = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        &self.atoms[i].point
    }
}

/// Seeds the generator used by every sampling routine.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` i.i.d. draws from a finitely supported measure; deterministic in `seed`.
pub fn sample_atom<F: Real>(mu: &LatticeMeasure<F>, rng_seed: u64, count: usize) -> Result<Vec<Vec<i64>>> {
    let sampler = AtomSampler::new(mu)?;
    let mut rng = rng_from_seed(rng_seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng).to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_half() -> f64 {
        0.5f64.ln()
    }

    #[test]
    fn build_atoms_validates() {
        let m = build_atoms(1, vec![Atom::new(vec![1], ln_half()), Atom::new(vec![-1], ln_half())]).unwrap();
        assert_eq!(m.atoms().unwrap()[0].point, vec![-1]);

        let dup = build_atoms(1, vec![Atom::new(vec![1], ln_half()), Atom::new(vec![1], ln_half())]);
        assert_eq!(dup.unwrap_err(), Error::DuplicatePoint(vec![1]));

        let bad = build_atoms(2, vec![Atom::new(vec![1], ln_half())]);
        assert!(matches!(bad, Err(Error::DimensionMismatch { expected: 2, found: 1 })));

        let neg = build_atoms(
            1,
            vec![Atom {
                point: vec![0],
                logweight: -SignedLog::<f64>::one(),
            }],
        );
        assert!(matches!(neg, Err(Error::NonPositiveWeight(_))));
    }

    #[test]
    fn biased_walk_weights() {
        let m = biased_walk(0.25f64).unwrap();
        let atoms = m.atoms().unwrap();
        assert!((atoms[1].logweight.ln() - 0.25f64.ln()).abs() < 1e-15);
        assert!((atoms[0].logweight.ln() - 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn normalization_of_atoms() {
        let sym = biased_walk(0.5f64).unwrap();
        let l = validate_normalization(&sym, 1e-15).unwrap();
        assert!(l.ln().abs() <= 1e-15);

        let half = build_atoms(
            1,
            vec![Atom::new(vec![1], 0.25f64.ln()), Atom::new(vec![-1], 0.25f64.ln())],
        )
        .unwrap();
        assert!(matches!(
            validate_normalization(&half, 1e-12),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn counterexample_atoms() {
        let b = build_counterexample::<f64>(Variant::B, 2).unwrap();
        let log_m = counterexample_log_m::<f64>(Variant::B);
        assert!(log_m >= 99.0);
        let a1 = &b.shell(1).unwrap()[0];
        assert_eq!(a1.point, vec![1, -1]);
        assert!((a1.logweight.ln() - (99.0 - log_m)).abs() < 1e-12);

        let a = build_counterexample::<f64>(Variant::A, 2).unwrap();
        let a2 = &a.shell(2).unwrap()[0];
        assert_eq!(a2.point, vec![200, -4]);
        assert!((a2.logweight.ln() - (196.0 - 4f64.ln() - log_m)).abs() < 1e-12);

        let b3 = build_counterexample::<f64>(Variant::B, 3).unwrap();
        let a1 = &b3.shell(1).unwrap()[0];
        assert_eq!(a1.point, vec![1, -1, 0]);
        assert!((a1.logweight.ln() - (99.0 - log_m)).abs() < 1e-12);
        assert!(build_counterexample::<f64>(Variant::A, 1).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(
            classify_moment(&biased_walk(0.3f64).unwrap()),
            MomentClass::FiniteSupport
        );
        let ce = build_counterexample::<f64>(Variant::A, 2).unwrap();
        assert!(matches!(classify_moment(&ce), MomentClass::ExponentialOnly { .. }));
        let d1: LatticeMeasure<f64> = LatticeMeasure::from_stream(
            Arc::new(QuadraticStream::new(vec![1], vec![0], 1.0, 0.0, 0.0)),
            "gauss tail",
        );
        assert_eq!(classify_moment(&d1), MomentClass::SuperExponential { epsilon: 0.5 });
        let g = gauss2d([0.5f64, 0.3]);
        assert!(matches!(classify_moment(&g), MomentClass::SuperExponential { .. }));
        let undeclared = LatticeMeasure::from_stream_undeclared(
            Arc::new(QuadraticStream::new(vec![1], vec![0], 1.0f64, 0.0, 0.0)),
            "x",
        );
        assert_eq!(classify_moment(&undeclared), MomentClass::Undeclared);
        let heavy = ce.clone().with_envelope(MomentEnvelope::new(0, 0.0, 0.0));
        assert_eq!(classify_moment(&heavy), MomentClass::Heavy);
    }

    #[test]
    fn lifting() {
        let w = simple_walk::<f64>(2).unwrap();
        let same = lift_dimension(&w, 2).unwrap();
        assert_eq!(same.atoms().unwrap(), w.atoms().unwrap());
        let w4 = lift_dimension(&w, 4).unwrap();
        assert_eq!(w4.dim(), 4);
        assert!(w4.atoms().unwrap().iter().all(|a| a.point[2] == 0 && a.point[3] == 0));
        assert!(lift_dimension(&biased_walk(0.5f64).unwrap(), 3).is_err());
        assert!(lift_dimension(&w, 1).is_err());
        let ce = build_counterexample::<f64>(Variant::A, 2).unwrap();
        assert_eq!(classify_moment(&lift_dimension(&ce, 5).unwrap()), classify_moment(&ce));
    }

    #[test]
    fn sampling_is_reproducible_and_rejects_streams() {
        let m = biased_walk(0.25f64).unwrap();
        let a = sample_atom(&m, 7, 1000).unwrap();
        let b = sample_atom(&m, 7, 1000).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_atom(&m, 8, 1000).unwrap());
        let ce = build_counterexample::<f64>(Variant::A, 2).unwrap();
        assert_eq!(sample_atom(&ce, 0, 1).unwrap_err(), Error::UnsupportedStream);
    }

    #[test]
    fn exponent_anchor_arithmetic() {
        let e = Exponent::anchored(vec![-1.0f64, -1.0], vec![1e-3, 1e-9]);
        let f = e.shifted(&[0.0, 1e-9]);
        let d = f.diff(&e);
        assert_eq!(d, vec![0.0, 1e-9]);
        assert!((e.dot_lattice(&[100, -4]) - (-96.0 + 0.1 - 4e-9)).abs() < 1e-12);
    }
}
