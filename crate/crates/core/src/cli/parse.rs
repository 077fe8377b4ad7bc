//! Line-oriented measure and mixture files.
//!
//! Measure files hold either `dim <d>` followed by `atom <x1> ... <xd> <logweight>`
//! lines, or a single `builtin ...` line. An optional
//! `envelope q=<0|1|2> alpha=<a> beta=<b>` line declares the tail profile.
//! Mixture files hold `dim <d>` and `term <logweight> <s1> ... <sd>` lines.
//! `#` starts a comment.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harmonic::CharacterMixture;
use crate::lognum::lse_accumulate;
use crate::measures::{
    biased_walk, build_atoms, build_counterexample, gauss2d, simple_walk, Atom, Exponent, LatticeMeasure,
    MomentEnvelope, Variant,
};

/// Atom files are renormalized when their log total mass is within this of zero.
pub const FILE_NORMALIZATION_TOL: f64 = 1e-6;

/// Drift of the `gauss2d` builtin when none is given.
pub const GAUSS_DEFAULT_DRIFT: [f64; 2] = [0.5, 0.3];

#[derive(Debug, Clone)]
pub struct ParsedMeasure {
    pub measure: LatticeMeasure<f64>,
    /// Log total mass as written, before renormalization (zero for builtins).
    pub raw_log_total: f64,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn strip_comment(l: &str) -> &str {
    l.split('#').next().unwrap_or("").trim()
}

fn parse_f64(line: usize, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| perr(line, format!("not a number: {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(perr(line, format!("not a finite number: {s:?}")))
    }
}

fn parse_i64(line: usize, s: &str) -> Result<i64> {
    s.parse().map_err(|_| perr(line, format!("not an integer: {s:?}")))
}

fn parse_dim(line: usize, s: &str) -> Result<usize> {
    let d: usize = s.parse().map_err(|_| perr(line, format!("bad dimension {s:?}")))?;
    if d == 0 {
        return Err(perr(line, "dimension must be at least 1"));
    }
    Ok(d)
}

/// `key=value` pairs after a directive.
fn key_values<'a>(line: usize, words: &[&'a str], allowed: &[&str]) -> Result<Vec<(&'a str, &'a str)>> {
    let kv = words
        .iter()
        .map(|w| {
            w.split_once('=')
                .ok_or_else(|| perr(line, format!("expected key=value, got {w:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    match kv.iter().find(|(k, _)| !allowed.contains(k)) {
        Some((k, _)) => Err(perr(line, format!("unknown parameter {k:?}"))),
        None => Ok(kv),
    }
}

fn lookup<'a>(kv: &[(&str, &'a str)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn builtin(line: usize, words: &[&str]) -> Result<LatticeMeasure<f64>> {
    let (name, rest) = words.split_first().ok_or_else(|| perr(line, "builtin needs a name"))?;
    let wrap = |e: Error| match e {
        Error::Parse { .. } => e,
        other => perr(line, other.to_string()),
    };
    match *name {
        "counterexample-A" | "counterexample-B" => {
            let kv = key_values(line, rest, &["d"])?;
            let variant = if *name == "counterexample-A" {
                Variant::A
            } else {
                Variant::B
            };
            let d = lookup(&kv, "d").map_or(Ok(2), |v| parse_dim(line, v))?;
            build_counterexample(variant, d).map_err(wrap)
        }
        "biased-walk" => {
            let kv = key_values(line, rest, &["p"])?;
            let p = parse_f64(
                line,
                lookup(&kv, "p").ok_or_else(|| perr(line, "biased-walk needs p=<p>"))?,
            )?;
            biased_walk(p).map_err(wrap)
        }
        "simple-walk" => {
            let kv = key_values(line, rest, &["d"])?;
            let d = lookup(&kv, "d").map_or(Ok(1), |v| parse_dim(line, v))?;
            simple_walk(d).map_err(wrap)
        }
        "gauss2d" => {
            let kv = key_values(line, rest, &["drift"])?;
            let drift = match lookup(&kv, "drift") {
                Some(v) => {
                    let g = parse_list(line, v)?;
                    if g.len() != 2 {
                        return Err(perr(line, "drift needs two components"));
                    }
                    [g[0], g[1]]
                }
                None => GAUSS_DEFAULT_DRIFT,
            };
            Ok(gauss2d(drift))
        }
        other => Err(perr(line, format!("unknown builtin {other:?}"))),
    }
}

fn envelope(line: usize, words: &[&str]) -> Result<MomentEnvelope<f64>> {
    let kv = key_values(line, words, &["q", "alpha", "beta"])?;
    let get = |k: &str| lookup(&kv, k).ok_or_else(|| perr(line, format!("envelope needs {k}=")));
    let q: u8 = get("q")?.parse().map_err(|_| perr(line, "q must be 0, 1 or 2"))?;
    if q > 2 {
        return Err(perr(line, "q must be 0, 1 or 2"));
    }
    Ok(MomentEnvelope::new(
        q,
        parse_f64(line, get("alpha")?)?,
        parse_f64(line, get("beta")?)?,
    ))
}

/// Comma-separated reals.
pub fn parse_list(line: usize, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|w| parse_f64(line, w.trim())).collect()
}

pub fn parse_measure_str(text: &str) -> Result<ParsedMeasure> {
    let mut dim: Option<usize> = None;
    let mut atoms: Vec<Atom<f64>> = Vec::new();
    let mut built: Option<LatticeMeasure<f64>> = None;
    let mut env: Option<MomentEnvelope<f64>> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let l = strip_comment(raw);
        if l.is_empty() {
            continue;
        }
        let words: Vec<&str> = l.split_whitespace().collect();
        match words[0] {
            "dim" => {
                if dim.is_some() || built.is_some() {
                    return Err(perr(line, "dimension declared twice"));
                }
                if words.len() != 2 {
                    return Err(perr(line, "expected `dim <d>`"));
                }
                dim = Some(parse_dim(line, words[1])?);
            }
            "atom" => {
                let d = dim.ok_or_else(|| perr(line, "atom before dim"))?;
                if words.len() != d + 2 {
                    return Err(perr(line, format!("atom needs {d} coordinates and a log weight")));
                }
                let point = words[1..=d]
                    .iter()
                    .map(|w| parse_i64(line, w))
                    .collect::<Result<Vec<_>>>()?;
                let lw = parse_f64(line, words[d + 1])?;
                atoms.push(Atom::new(point, lw));
            }
            "builtin" => {
                if built.is_some() || dim.is_some() {
                    return Err(perr(line, "builtin must be the only measure declaration"));
                }
                built = Some(builtin(line, &words[1..])?);
            }
            "envelope" => {
                if env.is_some() {
                    return Err(perr(line, "envelope declared twice"));
                }
                env = Some(envelope(line, &words[1..])?);
            }
            other => return Err(perr(line, format!("unknown directive {other:?}"))),
        }
    }
    let (measure, raw_log_total) = match (built, dim) {
        (Some(m), _) => (m, 0.0),
        (None, Some(d)) => {
            if atoms.is_empty() {
                return Err(perr(last_line, "no atoms"));
            }
            let total = lse_accumulate(atoms.iter().map(|a| a.logweight)).ln();
            if !(total.abs() <= FILE_NORMALIZATION_TOL) {
                return Err(Error::NotNormalized { excess: total });
            }
            let atoms = atoms
                .into_iter()
                .map(|a| Atom::new(a.point, a.logweight.ln() - total))
                .collect();
            (build_atoms(d, atoms)?, total)
        }
        (None, None) => return Err(perr(last_line.max(1), "no measure declared")),
    };
    let measure = match env {
        Some(e) => measure.with_envelope(e),
        None => measure,
    };
    crate::measures::validate_normalization(&measure, 1e-12)?;
    Ok(ParsedMeasure { measure, raw_log_total })
}

pub fn parse_measure_file(path: &Path) -> Result<ParsedMeasure> {
    parse_measure_str(&std::fs::read_to_string(path)?)
}

pub fn parse_mixture_str(text: &str) -> Result<CharacterMixture<f64>> {
    let mut dim: Option<usize> = None;
    let mut pairs = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let l = strip_comment(raw);
        if l.is_empty() {
            continue;
        }
        let words: Vec<&str> = l.split_whitespace().collect();
        match words[0] {
            "dim" => {
                if dim.is_some() || words.len() != 2 {
                    return Err(perr(line, "expected a single `dim <d>`"));
                }
                dim = Some(parse_dim(line, words[1])?);
            }
            "term" => {
                let d = dim.ok_or_else(|| perr(line, "term before dim"))?;
                if words.len() != d + 2 {
                    return Err(perr(line, format!("term needs a log weight and {d} exponents")));
                }
                let lw = parse_f64(line, words[1])?;
                let s = words[2..]
                    .iter()
                    .map(|w| parse_f64(line, w))
                    .collect::<Result<Vec<_>>>()?;
                pairs.push((Exponent::new(s), lw));
            }
            other => return Err(perr(line, format!("unknown directive {other:?}"))),
        }
    }
    if pairs.is_empty() {
        return Err(perr(last_line.max(1), "no terms"));
    }
    CharacterMixture::from_log_pairs(pairs)
}

pub fn parse_mixture_file(path: &Path) -> Result<CharacterMixture<f64>> {
    parse_mixture_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{classify_moment, counterexample_log_m, MomentClass};

    #[test]
    fn symmetric_walk_file() {
        let p = parse_measure_str("dim 1\natom 1 -0.693147\natom -1 -0.693147\n").unwrap();
        let atoms = p.measure.atoms().unwrap();
        assert_eq!(atoms.len(), 2);
        assert!((atoms[0].logweight.ln() - 0.5f64.ln()).abs() < 1e-15);
        assert!(p.raw_log_total.abs() < 1e-6);
    }

    #[test]
    fn builtins_and_comments() {
        let p = parse_measure_str("# the counterexample\nbuiltin counterexample-A   # variant A\n").unwrap();
        assert_eq!(p.measure.dim(), 2);
        assert!(counterexample_log_m::<f64>(Variant::A) >= 99.0);
        let p = parse_measure_str("builtin counterexample-B d=4").unwrap();
        assert_eq!(p.measure.dim(), 4);
        let p = parse_measure_str("builtin gauss2d drift=0.25,-0.5\nenvelope q=2 alpha=0.5 beta=0.75").unwrap();
        assert!(matches!(
            classify_moment(&p.measure),
            MomentClass::SuperExponential { .. }
        ));
        assert_eq!(
            parse_measure_str("builtin biased-walk p=0.25").unwrap().measure.dim(),
            1
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_measure_str("dim 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_measure_str("atom 1 0.0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_measure_str("dim 1\natom 1 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_measure_str("builtin nope"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_measure_str("builtin biased-walk p=2"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_measure_str("dim 1\natom 1 -0.693147\n"),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            parse_measure_str("dim 1\natom 1 -0.6931471805599453\natom 1 -0.6931471805599453\n"),
            Err(Error::DuplicatePoint(_))
        ));
    }

    #[test]
    fn mixtures() {
        let m = parse_mixture_str("dim 1\nterm -0.6931471805599453 0\nterm -0.6931471805599453 1.0986122886681098\n")
            .unwrap();
        assert_eq!(m.len(), 2);
        assert!(matches!(
            parse_mixture_str("dim 2\nterm 0 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
