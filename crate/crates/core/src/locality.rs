//! No-signaling, parameter independence (PI), outcome independence (OI),
//! Bell factorizability and conditioned parameter dependence.
//!
//! Each analysis returns a [`Verdict`]: it holds when no witness was found,
//! and is violated otherwise. Witness lists are exhaustive and sorted by
//! `(x, y, a, b)`; at equal keys A-side witnesses precede B-side ones.
//!
//! Conditionals on events of probability `<= eps` are undefined and are
//! skipped rather than counted as violations.

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::table::{BoxTable, Outcome, Setting, Tolerance};

/// What a [`Witness`] compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WitnessKind {
    /// `P(A=a|x,y=0)` vs `P(A=a|x,y=1)`; the `b` slot is 0.
    MarginalA,
    /// `P(B=b|x=0,y)` vs `P(B=b|x=1,y)`; the `a` slot is 0.
    MarginalB,
    /// `P(A=a|x,y;B=b)` vs `P(A=a|x,y)`.
    OutcomeA,
    /// `P(B=b|x,y;A=a)` vs `P(B=b|x,y)`.
    OutcomeB,
    /// `P(a,b|x,y)` vs `P(A=a|x)·P(B=b|y)`.
    Product,
    /// `P(A=a|x,y=0;B=b)` vs `P(A=a|x,y=1;B=b)`; the `y` slot is 0.
    ConditionedA,
    /// `P(B=b|x=0,y;A=a)` vs `P(B=b|x=1,y;A=a)`; the `x` slot is 0.
    ConditionedB,
}

/// One cell where the two sides of a condition differ by more than `eps`.
///
/// Serializes as `[x, y, a, b, lhs, rhs]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub x: Setting,
    pub y: Setting,
    pub a: Outcome,
    pub b: Outcome,
    pub lhs: f64,
    pub rhs: f64,
}

impl Witness {
    fn key(&self) -> (Setting, Setting, Outcome, Outcome, WitnessKind) {
        (self.x, self.y, self.a, self.b, self.kind)
    }

    /// Re-evaluates both sides of the compared quantity on `t`.
    pub fn recompute(&self, t: &BoxTable, tol: Tolerance) -> Option<(f64, f64)> {
        let (x, y, a, b) = (self.x, self.y, self.a, self.b);
        let (s0, s1) = (Setting::ZERO, Setting::ONE);
        match self.kind {
            WitnessKind::MarginalA => Some((t.marginal_a(x, s0, a), t.marginal_a(x, s1, a))),
            WitnessKind::MarginalB => Some((t.marginal_b(s0, y, b), t.marginal_b(s1, y, b))),
            WitnessKind::OutcomeA => Some((t.conditional(x, y, a, b, tol)?, t.marginal_a(x, y, a))),
            WitnessKind::OutcomeB => {
                Some((t.conditional_b(x, y, a, b, tol)?, t.marginal_b(x, y, b)))
            }
            WitnessKind::Product => Some((
                t.prob(x, y, a, b),
                t.marginal_a(x, s0, a) * t.marginal_b(s0, y, b),
            )),
            WitnessKind::ConditionedA => Some((
                t.conditional(x, s0, a, b, tol)?,
                t.conditional(x, s1, a, b, tol)?,
            )),
            WitnessKind::ConditionedB => Some((
                t.conditional_b(s0, y, a, b, tol)?,
                t.conditional_b(s1, y, a, b, tol)?,
            )),
        }
    }
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(6))?;
        seq.serialize_element(&self.x.bit())?;
        seq.serialize_element(&self.y.bit())?;
        seq.serialize_element(&self.a.bit())?;
        seq.serialize_element(&self.b.bit())?;
        seq.serialize_element(&self.lhs)?;
        seq.serialize_element(&self.rhs)?;
        seq.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Violated,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Violated => "violated",
        }
    }
}

/// Outcome of one analysis. Violated exactly when `witnesses` is nonempty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Verdict {
    witnesses: Vec<Witness>,
}

impl Verdict {
    fn from_witnesses(mut witnesses: Vec<Witness>) -> Self {
        witnesses.sort_by_key(Witness::key);
        Self { witnesses }
    }

    pub fn status(&self) -> Status {
        if self.witnesses.is_empty() {
            Status::Holds
        } else {
            Status::Violated
        }
    }

    pub fn holds(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn is_violated(&self) -> bool {
        !self.holds()
    }

    pub fn witnesses(&self) -> &[Witness] {
        &self.witnesses
    }

    /// First witness at the given cell, if any.
    pub fn witness_at(&self, x: Setting, y: Setting, a: Outcome, b: Outcome) -> Option<&Witness> {
        self.witnesses
            .iter()
            .find(|w| (w.x, w.y, w.a, w.b) == (x, y, a, b))
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Verdict", 2)?;
        st.serialize_field("status", &self.status())?;
        st.serialize_field("witnesses", &self.witnesses)?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalityReport {
    pub no_signaling: Verdict,
    pub outcome_independence: Verdict,
    pub parameter_independence: Verdict,
    pub bell_factorizable: Verdict,
    pub conditioned_parameter_dependence: Verdict,
}

pub fn analyze(t: &BoxTable, tol: Tolerance) -> LocalityReport {
    LocalityReport {
        no_signaling: no_signaling(t, tol),
        outcome_independence: outcome_independence(t, tol),
        parameter_independence: parameter_independence(t, tol),
        bell_factorizable: bell_factorizable(t, tol),
        conditioned_parameter_dependence: conditioned_dependence(t, tol),
    }
}

fn push_if_apart(
    out: &mut Vec<Witness>,
    tol: Tolerance,
    kind: WitnessKind,
    (x, y, a, b): (Setting, Setting, Outcome, Outcome),
    lhs: f64,
    rhs: f64,
) {
    if !tol.close(lhs, rhs) {
        out.push(Witness {
            kind,
            x,
            y,
            a,
            b,
            lhs,
            rhs,
        });
    }
}

/// A's marginal must not depend on `y`, B's marginal must not depend on `x`.
pub fn no_signaling(t: &BoxTable, tol: Tolerance) -> Verdict {
    let (s0, s1, o0) = (Setting::ZERO, Setting::ONE, Outcome::ZERO);
    let mut out = Vec::new();
    for x in Setting::ALL {
        for a in Outcome::ALL {
            let (l, r) = (t.marginal_a(x, s0, a), t.marginal_a(x, s1, a));
            push_if_apart(&mut out, tol, WitnessKind::MarginalA, (x, s0, a, o0), l, r);
        }
    }
    for y in Setting::ALL {
        for b in Outcome::ALL {
            let (l, r) = (t.marginal_b(s0, y, b), t.marginal_b(s1, y, b));
            push_if_apart(&mut out, tol, WitnessKind::MarginalB, (s0, y, o0, b), l, r);
        }
    }
    Verdict::from_witnesses(out)
}

/// `P(A=a|x,y) = P(A=a|x)` and `P(B=b|x,y) = P(B=b|y)`: the same marginal
/// condition as [`no_signaling`], reported under its own name.
pub fn parameter_independence(t: &BoxTable, tol: Tolerance) -> Verdict {
    no_signaling(t, tol)
}

/// Conditioning on the remote outcome must not change the local marginal.
pub fn outcome_independence(t: &BoxTable, tol: Tolerance) -> Verdict {
    let mut out = Vec::new();
    for (x, y, a, b, _) in t.cells() {
        let cell = (x, y, a, b);
        if let Some(c) = t.conditional(x, y, a, b, tol) {
            push_if_apart(
                &mut out,
                tol,
                WitnessKind::OutcomeA,
                cell,
                c,
                t.marginal_a(x, y, a),
            );
        }
        if let Some(c) = t.conditional_b(x, y, a, b, tol) {
            push_if_apart(
                &mut out,
                tol,
                WitnessKind::OutcomeB,
                cell,
                c,
                t.marginal_b(x, y, b),
            );
        }
    }
    Verdict::from_witnesses(out)
}

/// `P(a,b|x,y) = P(A=a|x)·P(B=b|y)`. Setting-dependent marginals make the
/// right-hand side ill-defined; the no-signaling witnesses are returned
/// in that case.
pub fn bell_factorizable(t: &BoxTable, tol: Tolerance) -> Verdict {
    let ns = no_signaling(t, tol);
    if ns.is_violated() {
        return ns;
    }
    let s0 = Setting::ZERO;
    let mut out = Vec::new();
    for (x, y, a, b, p) in t.cells() {
        let product = t.marginal_a(x, s0, a) * t.marginal_b(s0, y, b);
        push_if_apart(
            &mut out,
            tol,
            WitnessKind::Product,
            (x, y, a, b),
            p,
            product,
        );
    }
    Verdict::from_witnesses(out)
}

/// Dependence of `P(A=a|x,y;B=b)` on `y` (and of `P(B=b|x,y;A=a)` on `x`)
/// once the remote outcome is known. Violated means dependence is present.
pub fn conditioned_dependence(t: &BoxTable, tol: Tolerance) -> Verdict {
    let (s0, s1) = (Setting::ZERO, Setting::ONE);
    let mut out = Vec::new();
    for x in Setting::ALL {
        for a in Outcome::ALL {
            for b in Outcome::ALL {
                if let (Some(l), Some(r)) = (
                    t.conditional(x, s0, a, b, tol),
                    t.conditional(x, s1, a, b, tol),
                ) {
                    push_if_apart(
                        &mut out,
                        tol,
                        WitnessKind::ConditionedA,
                        (x, s0, a, b),
                        l,
                        r,
                    );
                }
            }
        }
    }
    for y in Setting::ALL {
        for a in Outcome::ALL {
            for b in Outcome::ALL {
                if let (Some(l), Some(r)) = (
                    t.conditional_b(s0, y, a, b, tol),
                    t.conditional_b(s1, y, a, b, tol),
                ) {
                    push_if_apart(
                        &mut out,
                        tol,
                        WitnessKind::ConditionedB,
                        (s0, y, a, b),
                        l,
                        r,
                    );
                }
            }
        }
    }
    Verdict::from_witnesses(out)
}
