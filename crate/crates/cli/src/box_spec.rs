//! Box specifications accepted by `--box`.
//!
//! ```text
//! pr
//! local:f0,f1,g0,g1          four bits
//! hv:p0=<real>               PR hidden-variable model with P(λ=0) = p0
//! singlet:θa0,θa1,θb0,θb1    radians; `pi`, `3pi/4`, `-pi/2` also accepted
//! file:<path>                BoxTable JSON
//! mix:<spec>@<w>+<spec>@<w>…
//! ```

use std::fs;
use std::path::PathBuf;

use thiserror::Error;

use nlbox::hidden_variable::{hv_to_box, pr_hv_model};
use nlbox::table::{convex_mix, deterministic_local_box, pr_box, LocalStrategy};
use nlbox::{BoxTable, HvModel, LambdaDist, MeasurementAngles, Outcome, Tolerance};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("box spec error at position {position}: {message}")]
    Grammar { position: usize, message: String },

    #[error("invalid box spec value {value}: {message}")]
    Semantic { value: String, message: String },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid box table in {}: {message}", path.display())]
    InvalidFile { path: PathBuf, message: String },
}

fn grammar(position: usize, message: impl Into<String>) -> SpecError {
    SpecError::Grammar {
        position,
        message: message.into(),
    }
}

/// A parsed `--box` value.
#[derive(Clone, Debug, PartialEq)]
pub enum BoxSpec {
    Table(BoxTable),
    Hv(HvModel),
}

impl BoxSpec {
    /// The observable table (λ-averaged for hidden-variable models).
    pub fn table(&self) -> BoxTable {
        match self {
            BoxSpec::Table(t) => t.clone(),
            BoxSpec::Hv(m) => hv_to_box(m),
        }
    }
}

pub fn parse_box_spec(spec: &str, tol: Tolerance) -> Result<BoxSpec, SpecError> {
    match spec.strip_prefix("mix:") {
        Some(body) => parse_mix(body, 4, tol).map(BoxSpec::Table),
        None => parse_atom(spec, 0, tol),
    }
}

fn parse_atom(s: &str, offset: usize, tol: Tolerance) -> Result<BoxSpec, SpecError> {
    if s == "pr" {
        return Ok(BoxSpec::Table(pr_box()));
    }
    if let Some(rest) = s.strip_prefix("local:") {
        let base = offset + "local:".len();
        let bits = split_fields(rest, base, 4)?
            .into_iter()
            .map(|(pos, field)| match field {
                "0" => Ok(Outcome::ZERO),
                "1" => Ok(Outcome::ONE),
                other => Err(grammar(
                    pos,
                    format!("expected a bit 0 or 1, found {other:?}"),
                )),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let strategy = LocalStrategy::new([bits[0], bits[1]], [bits[2], bits[3]]);
        return Ok(BoxSpec::Table(deterministic_local_box(strategy)));
    }
    if let Some(rest) = s.strip_prefix("hv:") {
        let base = offset + "hv:".len();
        let value = rest
            .strip_prefix("p0=")
            .ok_or_else(|| grammar(base, "expected p0=<real>"))?;
        let p0 = parse_real(value, base + 3)?;
        let dist = LambdaDist::new(p0, 1.0 - p0, tol).map_err(|e| SpecError::Semantic {
            value: value.to_string(),
            message: e.to_string(),
        })?;
        return Ok(BoxSpec::Hv(pr_hv_model(dist)));
    }
    if let Some(rest) = s.strip_prefix("singlet:") {
        let base = offset + "singlet:".len();
        let angles = split_fields(rest, base, 4)?
            .into_iter()
            .map(|(pos, field)| {
                parse_angle(field).ok_or_else(|| grammar(pos, format!("invalid angle {field:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let m =
            MeasurementAngles::new(angles[0], angles[1], angles[2], angles[3]).map_err(|e| {
                SpecError::Semantic {
                    value: rest.to_string(),
                    message: e.to_string(),
                }
            })?;
        return Ok(BoxSpec::Table(nlbox::quantum::singlet_box(&m)));
    }
    if let Some(path) = s.strip_prefix("file:") {
        if path.is_empty() {
            return Err(grammar(offset + 5, "expected a path"));
        }
        return read_table(PathBuf::from(path)).map(BoxSpec::Table);
    }
    if s.starts_with("mix:") {
        return Err(grammar(offset, "mix cannot be nested"));
    }
    Err(grammar(
        offset,
        format!("unknown box kind {s:?} (expected pr, local:, hv:, singlet:, file: or mix:)"),
    ))
}

fn read_table(path: PathBuf) -> Result<BoxTable, SpecError> {
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(source) => return Err(SpecError::Io { path, source }),
    };
    BoxTable::from_json(&text).map_err(|e| SpecError::InvalidFile {
        path,
        message: e.to_string(),
    })
}

fn parse_mix(body: &str, offset: usize, tol: Tolerance) -> Result<BoxTable, SpecError> {
    if body.is_empty() {
        return Err(grammar(
            offset,
            "expected at least one <spec>@<weight> term",
        ));
    }
    let mut boxes = Vec::new();
    let mut weights = Vec::new();
    for (start, term) in mix_terms(body) {
        let pos = offset + start;
        let at = term
            .rfind('@')
            .ok_or_else(|| grammar(pos + term.len(), "expected @<weight> after mix term"))?;
        let weight = parse_real(&term[at + 1..], pos + at + 1)?;
        boxes.push(parse_atom(&term[..at], pos, tol)?.table());
        weights.push(weight);
    }
    convex_mix(&boxes, &weights, tol).map_err(|e| SpecError::Semantic {
        value: weights
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("+"),
        message: e.to_string(),
    })
}

/// Splits on `+`, except the sign of an exponent such as `1e+0`.
fn mix_terms(body: &str) -> Vec<(usize, &str)> {
    let bytes = body.as_bytes();
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, _) in body.match_indices('+') {
        let exponent = i >= 2
            && matches!(bytes[i - 1], b'e' | b'E')
            && (bytes[i - 2].is_ascii_digit() || bytes[i - 2] == b'.');
        if !exponent {
            terms.push((start, &body[start..i]));
            start = i + 1;
        }
    }
    terms.push((start, &body[start..]));
    terms
}

fn split_fields(s: &str, offset: usize, n: usize) -> Result<Vec<(usize, &str)>, SpecError> {
    let mut fields = Vec::with_capacity(n);
    let mut pos = offset;
    for field in s.split(',') {
        fields.push((pos, field.trim()));
        pos += field.len() + 1;
    }
    if fields.len() != n {
        return Err(grammar(
            offset,
            format!(
                "expected {n} comma-separated values, found {}",
                fields.len()
            ),
        ));
    }
    Ok(fields)
}

fn parse_real(s: &str, position: usize) -> Result<f64, SpecError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| grammar(position, format!("expected a real number, found {s:?}")))
}

/// A real, or `[k][*]pi[/n]`.
pub fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    let Some(idx) = s.find("pi") else {
        return s.parse().ok();
    };
    let coef = s[..idx].trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let denom = match &s[idx + 2..] {
        "" => 1.0,
        rest => rest.strip_prefix('/')?.parse::<f64>().ok()?,
    };
    Some(coef * std::f64::consts::PI / denom)
}
