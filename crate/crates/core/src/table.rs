//! Conditional probability tables `P(a,b|x,y)` for two parties with binary
//! settings and binary outcomes.
//!
//! A [`BoxTable`] is immutable once built. It may hold an invalid
//! distribution (see [`BoxTable::from_array`]) so that [`BoxTable::validate`]
//! can report what is wrong with it; every named constructor in this crate
//! returns a valid table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense probability array indexed `[x][y][a][b]`.
pub type Probabilities = [[[[f64; 2]; 2]; 2]; 2];

macro_rules! binary_newtype {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(u8);

        impl $name {
            pub const ZERO: Self = Self(0);
            pub const ONE: Self = Self(1);
            pub const ALL: [Self; 2] = [Self::ZERO, Self::ONE];

            pub fn new(value: u8) -> Result<Self> {
                match value {
                    0 | 1 => Ok(Self(value)),
                    v => Err(Error::NotBinary { what: $what, value: v.into() }),
                }
            }

            pub fn from_bool(bit: bool) -> Self {
                Self(bit as u8)
            }

            pub fn bit(self) -> u8 {
                self.0
            }

            pub fn index(self) -> usize {
                self.0 as usize
            }

            pub fn flip(self) -> Self {
                Self(self.0 ^ 1)
            }
        }

        impl TryFrom<u8> for $name {
            type Error = Error;

            fn try_from(value: u8) -> Result<Self> {
                Self::new(value)
            }
        }

        impl TryFrom<i64> for $name {
            type Error = Error;

            fn try_from(value: i64) -> Result<Self> {
                match value {
                    0 | 1 => Ok(Self(value as u8)),
                    v => Err(Error::NotBinary { what: $what, value: v }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

binary_newtype!(
    /// A measurement setting (input) `x` or `y`.
    Setting,
    "setting"
);
binary_newtype!(
    /// A measurement outcome (output) `a` or `b`.
    Outcome,
    "outcome"
);

/// Absolute tolerance used by every floating-point comparison.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT_EPS: f64 = 1e-9;

    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Self(eps))
        } else {
            Err(Error::InvalidTolerance(eps))
        }
    }

    pub fn eps(self) -> f64 {
        self.0
    }

    /// `|lhs - rhs| <= eps`.
    pub fn close(self, lhs: f64, rhs: f64) -> bool {
        (lhs - rhs).abs() <= self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self(Self::DEFAULT_EPS)
    }
}

/// A broken [`BoxTable`] invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum CellViolation {
    /// The row for setting pair `(x, y)` does not sum to one.
    Normalization { x: usize, y: usize, sum: f64 },
    /// An entry lies outside `[0, 1]` (or is NaN).
    OutOfRange {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
        value: f64,
    },
}

impl fmt::Display for CellViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellViolation::Normalization { x, y, sum } => {
                write!(f, "row (x={x}, y={y}) sums to {sum}")
            }
            CellViolation::OutOfRange { x, y, a, b, value } => {
                write!(
                    f,
                    "entry (x={x}, y={y}, a={a}, b={b}) = {value} is outside [0, 1]"
                )
            }
        }
    }
}

/// The conditional distribution `P(a,b|x,y)` of a bipartite box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBoxTable")]
pub struct BoxTable {
    label: String,
    p: Probabilities,
}

#[derive(Deserialize)]
struct RawBoxTable {
    label: String,
    p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<RawBoxTable> for BoxTable {
    type Error = Error;

    fn try_from(raw: RawBoxTable) -> Result<Self> {
        let table = BoxTable::from_nested(raw.label, &raw.p)?;
        table
            .validate(Tolerance::default())
            .map_err(Error::InvalidTable)?;
        Ok(table)
    }
}

impl BoxTable {
    /// Wraps `p` without checking it. Use [`BoxTable::new`] for a checked
    /// construction.
    pub fn from_array(label: impl Into<String>, p: Probabilities) -> Self {
        Self {
            label: label.into(),
            p,
        }
    }

    /// Builds a table and rejects it unless it passes [`BoxTable::validate`].
    pub fn new(label: impl Into<String>, p: Probabilities, tol: Tolerance) -> Result<Self> {
        let table = Self::from_array(label, p);
        table.validate(tol).map_err(Error::InvalidTable)?;
        Ok(table)
    }

    pub fn from_fn(
        label: impl Into<String>,
        mut f: impl FnMut(Setting, Setting, Outcome, Outcome) -> f64,
    ) -> Self {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for x in Setting::ALL {
            for y in Setting::ALL {
                for a in Outcome::ALL {
                    for b in Outcome::ALL {
                        p[x.index()][y.index()][a.index()][b.index()] = f(x, y, a, b);
                    }
                }
            }
        }
        Self::from_array(label, p)
    }

    /// Reads a `[x][y][a][b]` nested array, reporting the first absent cell.
    /// Does not validate the probabilities.
    pub fn from_nested(label: impl Into<String>, p: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        let mut out = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        out[x][y][a][b] = p
                            .get(x)
                            .and_then(|r| r.get(y))
                            .and_then(|r| r.get(a))
                            .and_then(|r| r.get(b))
                            .copied()
                            .ok_or(Error::MissingEntry { x, y, a, b })?;
                    }
                }
            }
        }
        if p.len() > 2
            || p.iter().any(|r| r.len() > 2)
            || p.iter().flatten().any(|r| r.len() > 2)
            || p.iter().flatten().flatten().any(|r| r.len() > 2)
        {
            return Err(Error::ExtraEntry);
        }
        Ok(Self::from_array(label, out))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn probabilities(&self) -> &Probabilities {
        &self.p
    }

    /// `P(a,b|x,y)`.
    pub fn prob(&self, x: Setting, y: Setting, a: Outcome, b: Outcome) -> f64 {
        self.p[x.index()][y.index()][a.index()][b.index()]
    }

    /// All 16 cells in lexicographic `(x, y, a, b)` order.
    pub fn cells(&self) -> impl Iterator<Item = (Setting, Setting, Outcome, Outcome, f64)> + '_ {
        cell_indices().map(move |(x, y, a, b)| (x, y, a, b, self.prob(x, y, a, b)))
    }

    /// Checks normalization of each setting row and the `[0, 1]` range of
    /// each entry. Row sums are compared against one within `tol`.
    pub fn validate(&self, tol: Tolerance) -> std::result::Result<(), Vec<CellViolation>> {
        let mut violations = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                let row = &self.p[x][y];
                for a in 0..2 {
                    for b in 0..2 {
                        let value = row[a][b];
                        if !(0.0..=1.0).contains(&value) {
                            violations.push(CellViolation::OutOfRange { x, y, a, b, value });
                        }
                    }
                }
                let sum: f64 = row.iter().flatten().sum();
                if !tol.close(sum, 1.0) {
                    violations.push(CellViolation::Normalization { x, y, sum });
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    pub fn is_valid(&self, tol: Tolerance) -> bool {
        self.validate(tol).is_ok()
    }

    /// `P(A=a|x,y) = Σ_b P(a,b|x,y)`.
    pub fn marginal_a(&self, x: Setting, y: Setting, a: Outcome) -> f64 {
        let row = &self.p[x.index()][y.index()][a.index()];
        row[0] + row[1]
    }

    /// `P(B=b|x,y) = Σ_a P(a,b|x,y)`.
    pub fn marginal_b(&self, x: Setting, y: Setting, b: Outcome) -> f64 {
        let row = &self.p[x.index()][y.index()];
        row[0][b.index()] + row[1][b.index()]
    }

    /// `P(A=a|x,y;B=b)`, or `None` when `P(B=b|x,y) <= eps`.
    pub fn conditional(
        &self,
        x: Setting,
        y: Setting,
        a: Outcome,
        b: Outcome,
        tol: Tolerance,
    ) -> Option<f64> {
        let denom = self.marginal_b(x, y, b);
        (denom > tol.eps()).then(|| self.prob(x, y, a, b) / denom)
    }

    /// `P(B=b|x,y;A=a)`, or `None` when `P(A=a|x,y) <= eps`.
    pub fn conditional_b(
        &self,
        x: Setting,
        y: Setting,
        a: Outcome,
        b: Outcome,
        tol: Tolerance,
    ) -> Option<f64> {
        let denom = self.marginal_a(x, y, a);
        (denom > tol.eps()).then(|| self.prob(x, y, a, b) / denom)
    }

    /// Cells carrying probability above `eps` whose outcomes break
    /// `a + b = xy (mod 2)`.
    pub fn pr_constraint_violations(
        &self,
        tol: Tolerance,
    ) -> Vec<(Setting, Setting, Outcome, Outcome, f64)> {
        self.cells()
            .filter(|&(x, y, a, b, p)| p > tol.eps() && !pr_relation(x, y, a, b))
            .collect()
    }

    pub fn satisfies_pr_constraint(&self, tol: Tolerance) -> bool {
        self.pr_constraint_violations(tol).is_empty()
    }

    /// Largest absolute entrywise difference.
    pub fn linf_distance(&self, other: &BoxTable) -> f64 {
        self.p
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .zip(other.p.iter().flatten().flatten().flatten())
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &BoxTable, tol: Tolerance) -> bool {
        self.linf_distance(other) <= tol.eps()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("box tables always serialize")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// All `(x, y, a, b)` index tuples in lexicographic order.
pub fn cell_indices() -> impl Iterator<Item = (Setting, Setting, Outcome, Outcome)> {
    (0..16u8).map(|i| {
        (
            Setting((i >> 3) & 1),
            Setting((i >> 2) & 1),
            Outcome((i >> 1) & 1),
            Outcome(i & 1),
        )
    })
}

/// The PR relation `a + b = x·y (mod 2)`.
pub fn pr_relation(x: Setting, y: Setting, a: Outcome, b: Outcome) -> bool {
    (a.bit() ^ b.bit()) == (x.bit() & y.bit())
}

/// The canonical PR-box: weight 1/2 on each outcome pair satisfying
/// `a + b = xy (mod 2)`, zero elsewhere.
pub fn pr_box() -> BoxTable {
    BoxTable::from_fn("pr (uniform 1/2 on a+b=xy mod 2)", |x, y, a, b| {
        if pr_relation(x, y, a, b) {
            0.5
        } else {
            0.0
        }
    })
}

/// `p ≡ 1/4`: independent fair coins on both sides.
pub fn uniform_box() -> BoxTable {
    BoxTable::from_array("uniform", [[[[0.25; 2]; 2]; 2]; 2])
}

/// A deterministic local strategy: `a = f(x)`, `b = g(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalStrategy {
    pub f: [Outcome; 2],
    pub g: [Outcome; 2],
}

impl LocalStrategy {
    pub fn new(f: [Outcome; 2], g: [Outcome; 2]) -> Self {
        Self { f, g }
    }

    /// Strategy whose bits `(f(0), f(1), g(0), g(1))` are read from the four
    /// low bits of `code`, most significant first.
    pub fn from_code(code: u8) -> Self {
        let bit = |i: u8| Outcome::from_bool(code >> i & 1 == 1);
        Self {
            f: [bit(3), bit(2)],
            g: [bit(1), bit(0)],
        }
    }

    /// All 16 strategies, ordered by [`LocalStrategy::from_code`].
    pub fn all() -> impl Iterator<Item = LocalStrategy> {
        (0..16).map(Self::from_code)
    }

    pub fn label(&self) -> String {
        format!(
            "local:{},{},{},{}",
            self.f[0], self.f[1], self.g[0], self.g[1]
        )
    }
}

/// `p(x,y,a,b) = 1` iff `a = f(x)` and `b = g(y)`.
pub fn deterministic_local_box(strategy: LocalStrategy) -> BoxTable {
    BoxTable::from_fn(strategy.label(), |x, y, a, b| {
        if a == strategy.f[x.index()] && b == strategy.g[y.index()] {
            1.0
        } else {
            0.0
        }
    })
}

/// Entrywise convex combination of valid boxes.
pub fn convex_mix(boxes: &[BoxTable], weights: &[f64], tol: Tolerance) -> Result<BoxTable> {
    if boxes.is_empty() {
        return Err(Error::EmptyMix);
    }
    if boxes.len() != weights.len() {
        return Err(Error::MixLengthMismatch {
            boxes: boxes.len(),
            weights: weights.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::NegativeWeight(w));
    }
    let total: f64 = weights.iter().sum();
    if !tol.close(total, 1.0) {
        return Err(Error::WeightSum(total));
    }
    for b in boxes {
        b.validate(tol).map_err(Error::InvalidTable)?;
    }

    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for (table, &w) in boxes.iter().zip(weights) {
        let flat = p.iter_mut().flatten().flatten().flatten();
        for (acc, v) in flat.zip(table.p.iter().flatten().flatten().flatten()) {
            *acc += w * v;
        }
    }
    let label = boxes
        .iter()
        .zip(weights)
        .map(|(b, w)| format!("{}@{}", b.label, w))
        .collect::<Vec<_>>()
        .join("+");
    Ok(BoxTable::from_array(format!("mix({label})"), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: u8) -> Setting {
        Setting::new(v).unwrap()
    }

    fn o(v: u8) -> Outcome {
        Outcome::new(v).unwrap()
    }

    #[test]
    fn binary_newtypes_reject_other_values() {
        assert!(Setting::new(2).is_err());
        assert!(Outcome::try_from(-1i64).is_err());
        assert_eq!(Outcome::ONE.flip(), Outcome::ZERO);
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(-1e-3).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
        assert_eq!(Tolerance::default().eps(), 1e-9);
    }

    #[test]
    fn pr_box_entries() {
        let pr = pr_box();
        assert!(pr.is_valid(Tolerance::default()));
        assert_eq!(pr.prob(s(0), s(0), o(0), o(0)), 0.5);
        assert_eq!(pr.prob(s(1), s(1), o(0), o(1)), 0.5);
        assert_eq!(pr.prob(s(0), s(0), o(0), o(1)), 0.0);
        assert!(pr.satisfies_pr_constraint(Tolerance::default()));
    }

    #[test]
    fn validate_reports_overfull_row() {
        let mut p = pr_box().p;
        p[0][0] = [[0.6, 0.0], [0.0, 0.6]];
        let t = BoxTable::from_array("bad", p);
        let err = t.validate(Tolerance::default()).unwrap_err();
        assert_eq!(err.len(), 1);
        match err[0] {
            CellViolation::Normalization { x: 0, y: 0, sum } => assert!((sum - 1.2).abs() < 1e-12),
            ref other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn validate_reports_negative_cell() {
        let mut p = uniform_box().p;
        p[1][0][1][1] = -0.1;
        p[1][0][0][0] = 0.6;
        let t = BoxTable::from_array("neg", p);
        let err = t.validate(Tolerance::default()).unwrap_err();
        assert_eq!(
            err,
            vec![CellViolation::OutOfRange {
                x: 1,
                y: 0,
                a: 1,
                b: 1,
                value: -0.1
            }]
        );
    }

    #[test]
    fn validate_rejects_nan() {
        let mut p = uniform_box().p;
        p[0][1][0][0] = f64::NAN;
        assert!(!BoxTable::from_array("nan", p).is_valid(Tolerance::default()));
    }

    #[test]
    fn deterministic_boxes() {
        let zero = deterministic_local_box(LocalStrategy::from_code(0));
        for x in Setting::ALL {
            for y in Setting::ALL {
                assert_eq!(zero.prob(x, y, o(0), o(0)), 1.0);
            }
        }
        // f = identity, g ≡ 1
        let t = deterministic_local_box(LocalStrategy::new([o(0), o(1)], [o(1), o(1)]));
        assert_eq!(t.label(), "local:0,1,1,1");
        for y in Setting::ALL {
            assert_eq!(t.prob(s(1), y, o(1), o(1)), 1.0);
        }
        for strat in LocalStrategy::all() {
            assert!(deterministic_local_box(strat).is_valid(Tolerance::default()));
        }
    }

    #[test]
    fn from_code_covers_all_strategies_once() {
        let set: std::collections::HashSet<_> = LocalStrategy::all().collect();
        assert_eq!(set.len(), 16);
        assert_eq!(LocalStrategy::from_code(0b1001).label(), "local:1,0,0,1");
    }

    #[test]
    fn marginals() {
        let pr = pr_box();
        for x in Setting::ALL {
            for y in Setting::ALL {
                for v in Outcome::ALL {
                    assert_eq!(pr.marginal_a(x, y, v), 0.5);
                    assert_eq!(pr.marginal_b(x, y, v), 0.5);
                    assert_eq!(uniform_box().marginal_a(x, y, v), 0.5);
                }
            }
        }
        for strat in LocalStrategy::all() {
            let t = deterministic_local_box(strat);
            for x in Setting::ALL {
                for y in Setting::ALL {
                    assert_eq!(t.marginal_a(x, y, strat.f[x.index()]), 1.0);
                    assert_eq!(t.marginal_b(x, y, strat.g[y.index()]), 1.0);
                }
            }
        }
    }

    #[test]
    fn conditionals() {
        let tol = Tolerance::default();
        let pr = pr_box();
        assert_eq!(pr.conditional(s(0), s(0), o(0), o(0), tol), Some(1.0));
        assert_eq!(pr.conditional(s(1), s(1), o(0), o(1), tol), Some(1.0));
        assert_eq!(pr.conditional(s(1), s(1), o(0), o(0), tol), Some(0.0));

        let strat = LocalStrategy::from_code(0b0110);
        let t = deterministic_local_box(strat);
        for x in Setting::ALL {
            for y in Setting::ALL {
                let off = strat.g[y.index()].flip();
                for a in Outcome::ALL {
                    assert_eq!(t.conditional(x, y, a, off, tol), None);
                }
            }
        }
    }

    #[test]
    fn mix_identity_and_average() {
        let tol = Tolerance::default();
        let pr = pr_box();
        let single = convex_mix(std::slice::from_ref(&pr), &[1.0], tol).unwrap();
        assert_eq!(single.probabilities(), pr.probabilities());

        let d = deterministic_local_box(LocalStrategy::from_code(5));
        let half = convex_mix(&[pr.clone(), d.clone()], &[0.5, 0.5], tol).unwrap();
        for (x, y, a, b, p) in half.cells() {
            assert_eq!(p, (pr.prob(x, y, a, b) + d.prob(x, y, a, b)) / 2.0);
        }
    }

    #[test]
    fn mix_errors() {
        let tol = Tolerance::default();
        let pr = pr_box();
        assert_eq!(convex_mix(&[], &[], tol), Err(Error::EmptyMix));
        assert!(matches!(
            convex_mix(&[pr.clone(), pr.clone()], &[0.5, 0.6], tol),
            Err(Error::WeightSum(_))
        ));
        assert!(matches!(
            convex_mix(&[pr.clone(), pr.clone()], &[1.5, -0.5], tol),
            Err(Error::NegativeWeight(_))
        ));
        assert!(matches!(
            convex_mix(&[pr], &[0.5, 0.5], tol),
            Err(Error::MixLengthMismatch { .. })
        ));
    }

    #[test]
    fn json_layout_and_revalidation() {
        let json = pr_box().to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["p"][1][1][0][1], 0.5);
        assert_eq!(v["p"][0][0][0][1], 0.0);
        assert_eq!(BoxTable::from_json(&json).unwrap(), pr_box());

        let bad = r#"{"label":"x","p":[[[[0.6,0],[0,0.6]],[[0.5,0],[0,0.5]]],[[[0.5,0],[0,0.5]],[[0.5,0],[0,0.5]]]]}"#;
        assert!(BoxTable::from_json(bad)
            .unwrap_err()
            .to_string()
            .contains("sums to"));

        let short = r#"{"label":"x","p":[[[[1,0],[0]]]]}"#;
        assert!(BoxTable::from_json(short)
            .unwrap_err()
            .to_string()
            .contains("missing table entry"));
    }

    #[test]
    fn from_nested_names_missing_cell() {
        let p = vec![
            vec![vec![vec![0.25, 0.25], vec![0.25, 0.25]]; 2],
            vec![vec![vec![0.25, 0.25], vec![0.25]]; 2],
        ];
        assert_eq!(
            BoxTable::from_nested("x", &p),
            Err(Error::MissingEntry {
                x: 1,
                y: 0,
                a: 1,
                b: 1
            })
        );
    }
}
